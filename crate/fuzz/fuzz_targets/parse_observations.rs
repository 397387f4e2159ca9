#![no_main]

use levy_whittle::config::parse_observations;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(path) = parse_observations(data) {
        assert!(path.len() >= 2);
        assert!(path.step > 0.0 && path.step.is_finite());
        assert!(path.values.iter().all(|v| v.is_finite()));
    }
});
