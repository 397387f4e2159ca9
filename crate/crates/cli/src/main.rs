use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use levy_whittle::config::{parse_observations, ExperimentConfig};
use levy_whittle::levy_noise::{self, NoisePath};
use levy_whittle::report::{self, McSummary, WhittleSummary};
use levy_whittle::validation::{self, LevitanPolynomial};
use levy_whittle::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "levy-whittle", version, about = "Simulate, fit and verify Whittle estimation under Lévy-driven noise")]
struct Cli {
    /// Worker threads for Monte Carlo replicates (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate observation paths for every horizon in the config.
    Simulate(Common),
    /// Least-squares fit of the regression parameter.
    FitLse(FitArgs),
    /// Least squares, residual periodogram and Whittle fit.
    FitWhittle(FitArgs),
    /// Monte Carlo study of the full pipeline over the horizon ladder.
    McStudy(Common),
    /// Numerical checks of the limit theorems.
    Verify(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the config's output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    common: Common,
    /// Observations CSV (`t,x`); simulated from the config when absent.
    #[arg(long)]
    data: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::Simulate(c) => load(c).and_then(|(cfg, out)| simulate(&cfg, &out)),
        Command::FitLse(a) => load(&a.common).and_then(|(cfg, out)| fit_lse(&cfg, &out, a.data.as_deref())),
        Command::FitWhittle(a) => load(&a.common).and_then(|(cfg, out)| fit_whittle(&cfg, &out, a.data.as_deref())),
        Command::McStudy(c) => load(c).and_then(|(cfg, out)| mc_study(&cfg, &out)),
        Command::Verify(c) => load(c).and_then(|(cfg, out)| verify(&cfg, &out)),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_input_error() { 2 } else { 3 })
        }
    }
}

fn load(c: &Common) -> Result<(ExperimentConfig, PathBuf)> {
    let text = fs::read_to_string(&c.config).map_err(|e| Error::ConfigParse {
        path: c.config.display().to_string(),
        message: e.to_string(),
    })?;
    let mut cfg = ExperimentConfig::from_json_str(&text)?;
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    let out = c.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    fs::create_dir_all(&out)?;
    Ok((cfg, out))
}

fn tag(horizon: f64) -> String {
    format!("T{horizon}")
}

fn write(path: impl AsRef<Path>, text: &str) -> Result<()> {
    fs::write(path, text)?;
    Ok(())
}

fn write_with(path: impl AsRef<Path>, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

fn simulate(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let mut meta = Vec::new();
    for (rung, &horizon) in cfg.horizons.iter().enumerate() {
        let seed = validation::study_seed(cfg.seed, rung, 0);
        let noise = levy_noise::simulate_linear_noise(&cfg.driver, &cfg.kernel, horizon, cfg.step, seed)?;
        let data = validation::simulate_observations(cfg, horizon, seed)?;
        write_with(out.join(format!("noise_{}.csv", tag(horizon))), |w| report::write_path_csv(&noise, w))?;
        write_with(out.join(format!("observations_{}.csv", tag(horizon))), |w| report::write_path_csv(&data, w))?;
        if noise.coarse_step {
            eprintln!("warning: step {} is coarse for the kernel's time scale", cfg.step);
        }
        meta.push(json!({
            "horizon": horizon,
            "step": cfg.step,
            "samples": noise.len(),
            "seed": seed,
            "coarse_step": noise.coarse_step,
            "noise_mean_square": noise.mean_square(),
        }));
    }
    write(out.join("simulate.json"), &report::to_json(&meta))?;
    Ok(true)
}

fn observations(cfg: &ExperimentConfig, data: Option<&Path>) -> Result<NoisePath> {
    match data {
        Some(p) => parse_observations(fs::File::open(p)?),
        None => validation::simulate_observations(cfg, cfg.horizons[0], validation::study_seed(cfg.seed, 0, 0)),
    }
}

fn fit_lse(cfg: &ExperimentConfig, out: &Path, data: Option<&Path>) -> Result<bool> {
    let data = observations(cfg, data)?;
    let fit = cfg.regression.lse_fit(&data, &cfg.alpha0, Default::default())?;
    let residuals = cfg.regression.residuals(&data, &fit.alpha_hat)?;
    write(out.join("lse_fit.json"), &report::lse_json(&fit))?;
    write_with(out.join("residuals.csv"), |w| report::write_path_csv(&residuals, w))?;
    Ok(true)
}

fn fit_whittle(cfg: &ExperimentConfig, out: &Path, data: Option<&Path>) -> Result<bool> {
    let data = observations(cfg, data)?;
    let fit = validation::fit_pipeline(cfg, &data)?;
    write(out.join("lse_fit.json"), &report::lse_json(&fit.lse))?;
    write_with(out.join("periodogram.csv"), |w| report::write_periodogram_csv(&fit.periodogram, w))?;
    write(out.join("whittle_fit.json"), &report::to_json(&WhittleSummary::new(&fit.whittle, fit.gamma2)))?;
    Ok(true)
}

fn mc_study(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let reports = validation::mce_normality_study(cfg, &cfg.horizons, cfg.replicates, cfg.seed)?;
    let mut summaries = Vec::new();
    for r in &reports {
        write_with(out.join(format!("mc_{}_replicates.csv", tag(r.horizon))), |w| report::write_replicates_csv(r, w))?;
        summaries.push(McSummary::from(r));
    }
    write(out.join("mc_summary.json"), &report::to_json(&summaries))?;
    Ok(true)
}

struct Check {
    name: &'static str,
    value: f64,
    target: f64,
    pass: bool,
}

fn verify(cfg: &ExperimentConfig, out: &Path) -> Result<bool> {
    let mut checks = Vec::new();
    let longest = cfg.horizons.iter().copied().fold(0.0, f64::max);
    let shortest = cfg.horizons.iter().copied().fold(f64::INFINITY, f64::min);

    let b0 = levy_noise::covariance(&cfg.kernel, &cfg.driver, 0.0)?;
    let path = levy_noise::simulate_linear_noise(&cfg.driver, &cfg.kernel, longest, cfg.step, cfg.seed)?;
    let (nu, rel) = validation::mean_square_check(&path, b0);
    checks.push(Check {
        name: "mean_square",
        value: nu,
        target: b0,
        pass: rel < 0.1,
    });

    let g = |u: f64| (-u * u).exp();
    let errs = [10.0, 100.0, 1000.0]
        .iter()
        .map(|&t| validation::fejer_limit_check(g, t).map(|v| (v - 1.0).abs()))
        .collect::<Result<Vec<f64>>>()?;
    checks.push(Check {
        name: "fejer_limit",
        value: errs[1],
        target: 0.0,
        pass: errs[1] <= 0.05 && errs[0] > errs[1] && errs[1] > errs[2],
    });

    let b = |l: f64| (1.0 + l * l).powi(-3);
    let clt = validation::clt_functional_check(&cfg.driver, &cfg.kernel, b, shortest, cfg.step, cfg.replicates, cfg.seed)?;
    checks.push(Check {
        name: "clt_functional",
        value: clt.sample_var,
        target: clt.sigma2_target,
        pass: (clt.sample_var / clt.sigma2_target - 1.0).abs() <= 0.2,
    });

    let f = |u: f64| if u == 0.0 { 1.0 } else { u.sin() / u };
    let sup_errors = [8, 16, 32, 64]
        .iter()
        .map(|&n| {
            let p = LevitanPolynomial::new(f, 1.0, n)?;
            Ok((0..=2000).map(|i| -10.0 + 0.01 * i as f64).map(|l| (f(l) - p.eval(l)).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?;
    checks.push(Check {
        name: "levitan",
        value: sup_errors[3],
        target: 0.0,
        pass: sup_errors.windows(2).all(|w| w[1] < w[0]),
    });

    // Σ_TRIG against the inverse normalised information at the regression truth
    if let levy_whittle::regression::RegressionFamily::TrigonometricSum { harmonics } = cfg.regression.family {
        let d2 = cfg.driver.cumulant(2)?;
        let fv: Vec<f64> = (0..harmonics)
            .map(|k| d2 * cfg.kernel.transform(cfg.alpha0[3 * k + 2]).norm_sqr() / (2.0 * PI))
            .collect();
        let sigma = validation::sigma_trig(&cfg.alpha0, &fv)?;
        let mut worst: f64 = 0.0;
        for k in 0..harmonics {
            let (a, bb) = (cfg.alpha0[3 * k], cfg.alpha0[3 * k + 1]);
            let info = nalgebra::Matrix3::new(0.5, 0.0, bb / 4.0, 0.0, 0.5, -a / 4.0, bb / 4.0, -a / 4.0, (a * a + bb * bb) / 6.0);
            let inv = info.try_inverse().ok_or(Error::DegenerateHarmonic { harmonic: k })? * (2.0 * PI * fv[k]);
            for i in 0..3 {
                for j in 0..3 {
                    let s = sigma[(3 * k + i, 3 * k + j)];
                    worst = worst.max((s - inv[(i, j)]).abs() / sigma[(3 * k + i, 3 * k + i)].abs());
                }
            }
        }
        checks.push(Check {
            name: "sigma_trig",
            value: worst,
            target: 0.0,
            pass: worst < 1e-12,
        });
    }

    let all = checks.iter().all(|c| c.pass);
    let mut csv = String::from("check,value,target,pass\n");
    for c in &checks {
        csv.push_str(&format!("{},{},{},{}\n", c.name, report::fmt_f64(c.value), report::fmt_f64(c.target), c.pass));
        println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    write(out.join("verify.csv"), &csv)?;
    let doc: Vec<_> = checks
        .iter()
        .map(|c| json!({"check": c.name, "value": c.value, "target": c.target, "pass": c.pass}))
        .collect();
    write(out.join("verify.json"), &report::to_json(&doc))?;
    Ok(all)
}
