#![no_main]

use levy_whittle::config::ExperimentConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = ExperimentConfig::from_json_str(text) {
        let again = ExperimentConfig::from_json_str(&cfg.to_json_string()).expect("accepted config re-parses");
        assert_eq!(cfg, again);
    }
});
