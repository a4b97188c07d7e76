//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so every line is printed; exits nonzero if any criterion fails.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use cojump::baselines::{
    fit_tegarch, fit_tgarch, ljung_box, simulate_tegarch, simulate_tgarch, Estimate, TEgarchParams, TGarchParams,
};
use cojump::highfreq::{cross_moments, spot_variance_tbv, IntradayPanel, MomentOrder, DEFAULT_THRESHOLD_MULT, MINUTES_PER_DAY};
use cojump::mcmc::{detect_jumps, fit_svcj};
use cojump::pricing::{
    iv_surface, mc_price, price_grid, simulate_terminal, grid_strikes, IvSurface, OptionKind, OptionSpec, PricingConfig,
    PricingModel, V0Policy, DEFAULT_PATHS, GRID_TAUS,
};
use cojump::simulate::{simulate_br, simulate_svcj};
use cojump::{stats, BrParams, McmcConfig, ModelFlavor, PosteriorSummary, PriorSpec, ReturnSeries, RngStream, SvcjParams};
use statrs::distribution::{ContinuousCDF, Normal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

// ---------------------------------------------------------------------------
// 1. Black-Scholes oracle

/// Closed-form call with daily volatility `sigma_day` (decimal) and `tau` in days.
fn black_scholes_call(s: f64, k: f64, sigma_day: f64, tau: f64) -> f64 {
    let n = Normal::standard();
    let sd = sigma_day * tau.sqrt();
    let d1 = ((s / k).ln() + 0.5 * sd * sd) / sd;
    s * n.cdf(d1) - k * n.cdf(d1 - sd)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    // 4% daily vol; drift -v/2 in log terms keeps S a martingale
    let v0 = 16.0;
    let base = SvcjParams::btc_sv();
    let params = SvcjParams {
        mu: -v0 / 200.0,
        lambda: 0.0,
        sigma_v: 1e-8,
        alpha: v0 * (1.0 - base.beta),
        ..base
    };
    let model = PricingModel::svcj(params, ModelFlavor::Sv);
    let cfg = PricingConfig {
        paths: DEFAULT_PATHS,
        seed: RngStream::from_seed(1),
        v0: V0Policy::Fixed { value: v0 },
        br_dt: 1.0,
    };
    let mut pass = true;
    let mut parts = vec![];
    for tau in [7, 30, 90] {
        let mc = mc_price(&model, &OptionSpec::call(100.0, 100.0, tau), &cfg).unwrap();
        let bs = black_scholes_call(100.0, 100.0, v0.sqrt() / 100.0, f64::from(tau));
        let z = (mc.price - bs) / mc.std_error;
        pass &= z.abs() < 3.0;
        parts.push(format!("tau {tau}: mc {:.4} bs {bs:.4} z {z:+.2}", mc.price));
    }
    let t = start.elapsed();
    pass &= within(t, Duration::from_secs(10));
    outcome(pass, format!("{}; {:.1}s", parts.join(", "), t.as_secs_f64()))
}

// ---------------------------------------------------------------------------
// 2-4. Simulation recovery, flavor ordering, jump detection

const RECOVERY_SEED: u64 = 20_140_801;

fn recovery_data() -> ReturnSeries {
    let p = SvcjParams::btc_svcj();
    simulate_svcj(&p, ModelFlavor::Svcj, p.long_run_variance(), 2000, RngStream::from_seed(RECOVERY_SEED))
        .unwrap()
        .0
}

fn fit(data: &ReturnSeries, flavor: ModelFlavor) -> PosteriorSummary {
    let cfg = McmcConfig {
        iterations: 5000,
        burn_in: 1000,
        seed: RngStream::new(RECOVERY_SEED, 1),
        ..McmcConfig::default()
    };
    fit_svcj(data, flavor, &PriorSpec::default(), &cfg).unwrap().summary()
}

fn criterion_2(data: &ReturnSeries, svcj: &PosteriorSummary, elapsed: Duration) -> Outcome {
    let truth = SvcjParams::btc_svcj().to_array();
    let mut inside = 0;
    let mut missed = vec![];
    for (name, t) in SvcjParams::NAMES.iter().zip(truth) {
        let p = svcj.param(name).unwrap();
        if p.q025 <= t && t <= p.q975 {
            inside += 1;
        } else {
            missed.push(format!("{name} {t} not in [{:.4}, {:.4}]", p.q025, p.q975));
        }
    }
    let lambda = svcj.posterior_mean.lambda;
    let pass = inside >= 8 && (lambda - 0.041).abs() <= 0.02 && within(elapsed, Duration::from_secs(15 * 60));
    outcome(
        pass,
        format!(
            "T={} {inside}/10 inside 95% intervals, lambda {lambda:.4}; {:.1}s; missed: {}",
            data.len(),
            elapsed.as_secs_f64(),
            missed.join("; ")
        ),
    )
}

fn criterion_3(svcj: &PosteriorSummary, svj: &PosteriorSummary, sv: &PosteriorSummary, elapsed: Duration) -> Outcome {
    let pass = svcj.mse <= svj.mse && svj.mse <= sv.mse && within(elapsed, Duration::from_secs(45 * 60));
    outcome(
        pass,
        format!(
            "MSE svcj {:.4} svj {:.4} sv {:.4}; {:.1}s",
            svcj.mse,
            svj.mse,
            sv.mse,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_4(svcj: &PosteriorSummary) -> Outcome {
    let lambda = svcj.posterior_mean.lambda;
    let flags = detect_jumps(&svcj.jump_probs, lambda);
    let frac = flags.iter().map(|&f| f64::from(f)).sum::<f64>() / flags.len() as f64;
    outcome((frac - lambda).abs() <= 0.01, format!("flagged fraction {frac:.4} vs lambda {lambda:.4}"))
}

// ---------------------------------------------------------------------------
// 5-6. High-frequency estimators

fn criterion_5() -> Outcome {
    let start = Instant::now();
    const WINDOWS: usize = 10_000;
    const M: usize = 60;
    const KNOTS: usize = 100;
    let sd = 1e-3;
    let mut rng = RngStream::from_seed(5).rng();
    let clean: Vec<f64> = (0..WINDOWS * M).map(|_| sd * stats::standard_normal(&mut rng)).collect();
    let mut jumpy = clean.clone();
    let jump_windows: Vec<usize> = (0..WINDOWS).step_by(10).collect();
    for &w in &jump_windows {
        jumpy[w * M + M / 2] += 10.0 * sd;
    }
    let panel = |r: Vec<f64>| {
        let dates = (0..(WINDOWS / KNOTS) as u64)
            .map(|d| cojump::simulate::SIMULATION_START + chrono::Days::new(d))
            .collect();
        IntradayPanel::new(r, KNOTS, M, 0.0, dates).unwrap()
    };
    let want = M as f64 * sd * sd;
    let at = |s: &cojump::highfreq::SpotVariancePanel, w: usize| s.sigma2_hat[w / KNOTS][w % KNOTS];

    let s_clean = spot_variance_tbv(&panel(clean), DEFAULT_THRESHOLD_MULT).unwrap();
    let bias_clean = (0..WINDOWS).map(|w| at(&s_clean, w)).sum::<f64>() / WINDOWS as f64 / want - 1.0;

    let s_jumpy = spot_variance_tbv(&panel(jumpy.clone()), DEFAULT_THRESHOLD_MULT).unwrap();
    let n = jump_windows.len() as f64;
    let bias_tbv = jump_windows.iter().map(|&w| at(&s_jumpy, w)).sum::<f64>() / n / want - 1.0;
    let bias_rv = jump_windows
        .iter()
        .map(|&w| jumpy[w * M..(w + 1) * M].iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        / n
        / want
        - 1.0;
    let t = start.elapsed();
    let pass = bias_clean.abs() < 0.05 && bias_tbv.abs() < 0.10 && bias_rv > 0.5 && within(t, Duration::from_secs(60));
    outcome(
        pass,
        format!(
            "clean bias {:+.2}%, jump windows: thresholded {:+.2}%, plain RV {:+.1}%; {:.1}s",
            100.0 * bias_clean,
            100.0 * bias_tbv,
            100.0 * bias_rv,
            t.as_secs_f64()
        ),
    )
}

fn criterion_6() -> Outcome {
    // one-day increments measure next-day integrated variance, which stays close
    // to sigma^2 only when the log-variance noise is mild
    let p = BrParams::diffusion(0.0, -0.1, -0.02, -0.02, 0.2);
    let days = 10_000;
    let path = simulate_br(&p, (-0.5f64).exp(), days * MINUTES_PER_DAY, 1.0 / MINUTES_PER_DAY as f64, RngStream::from_seed(6))
        .unwrap();
    let panel = IntradayPanel::from_br_path(&path, 60).unwrap();
    let spot = spot_variance_tbv(&panel, DEFAULT_THRESHOLD_MULT).unwrap();
    let est = cross_moments(&panel.log_closes(), &spot, &[MomentOrder::new(2, 0)], None, 9, None).unwrap();
    let e = &est[0];
    let mut worst: f64 = 0.0;
    let mut parts = vec![];
    for (s, th) in e.sigma_grid.iter().zip(&e.theta_hat) {
        let rel = th.map_or(f64::INFINITY, |th| th / (s * s) - 1.0);
        worst = worst.max(rel.abs());
        parts.push(format!("{:+.1}%", 100.0 * rel));
    }
    outcome(worst < 0.10, format!("relative error by grid point: {}", parts.join(" ")))
}

// ---------------------------------------------------------------------------
// 7-8. Pricing structure

fn pricing_cfg(seed: u64) -> PricingConfig {
    PricingConfig {
        paths: DEFAULT_PATHS,
        seed: RngStream::from_seed(seed),
        v0: V0Policy::LongRunMean,
        br_dt: 1.0,
    }
}

fn moneyness() -> Vec<f64> {
    (0..9).map(|i| (80.0 + 5.0 * f64::from(i)) / 100.0).collect()
}

/// IV range at one maturity and its propagated standard error.
fn iv_range(s: &IvSurface) -> Option<(f64, f64)> {
    let pts: Vec<_> = s.points.iter().filter(|p| p.implied_vol.is_some()).collect();
    let hi = pts.iter().max_by(|a, b| a.implied_vol.unwrap().total_cmp(&b.implied_vol.unwrap()))?;
    let lo = pts.iter().min_by(|a, b| a.implied_vol.unwrap().total_cmp(&b.implied_vol.unwrap()))?;
    let se = |p: &cojump::pricing::IvPoint| p.iv_std_error.unwrap_or(f64::INFINITY);
    Some((hi.implied_vol.unwrap() - lo.implied_vol.unwrap(), se(hi).hypot(se(lo))))
}

/// Absolute least-squares slope of IV on moneyness over the nodes that invert.
fn iv_slope(s: &IvSurface) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = s.points.iter().filter_map(|p| p.implied_vol.map(|v| (p.moneyness, v))).unzip();
    if x.len() < 2 {
        return None;
    }
    let (mx, my) = (stats::mean(&x), stats::mean(&y));
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    Some((sxy / sxx).abs())
}

fn criterion_7() -> Outcome {
    let spot = 2250.0;
    let m = moneyness();
    let surface = |model: PricingModel| iv_surface(&model, &m, &[7], spot, 0.0, &pricing_cfg(7)).unwrap();
    let ranges: Vec<(ModelFlavor, Option<(f64, f64)>)> = [ModelFlavor::Svcj, ModelFlavor::Svj, ModelFlavor::Sv]
        .into_iter()
        .map(|f| (f, iv_range(&surface(PricingModel::svcj(SvcjParams::btc(f), f)))))
        .collect();
    let mut pass = true;
    let mut parts = vec![];
    for (f, r) in &ranges {
        match r {
            Some((r, se)) => parts.push(format!("{f} range {r:.4} (se {se:.4})")),
            None => parts.push(format!("{f} range missing")),
        }
    }
    for pair in ranges.windows(2) {
        match (pair[0].1, pair[1].1) {
            (Some((a, ea)), Some((b, eb))) => pass &= a - b > 2.0 * ea.hypot(eb),
            _ => pass = false,
        }
    }
    let full = BrParams::btc_full();
    let no_rho = BrParams { rho_j: 0.0, ..full };
    let s_full = surface(PricingModel::Br { params: full });
    let s_rho = surface(PricingModel::Br { params: no_rho });
    match (iv_slope(&s_full), iv_slope(&s_rho)) {
        (Some(a), Some(b)) => {
            pass &= a > b;
            parts.push(format!("BR slope full {a:.4} vs rho_J=0 {b:.4}"));
        }
        _ => {
            pass = false;
            parts.push(format!(
                "BR slopes undefined: {} of {} full-model and {} of {} rho_J=0 nodes have no implied vol",
                s_full.missing(),
                s_full.points.len(),
                s_rho.missing(),
                s_rho.points.len()
            ));
        }
    }
    outcome(pass, parts.join("; "))
}

fn criterion_8() -> Outcome {
    let model = PricingModel::svcj(SvcjParams::btc_svcj(), ModelFlavor::Svcj);
    let cfg = pricing_cfg(2017);
    let (spot, strikes, taus) = (2250.0, grid_strikes(), GRID_TAUS.to_vec());
    let calls = price_grid(&model, &strikes, &taus, spot, 0.0, OptionKind::Call, &cfg).unwrap();
    let k = strikes.iter().position(|&k| k == 1250.0).unwrap();
    let t = taus.iter().position(|&t| t == 90).unwrap();
    let anchor = calls.prices[k][t].price;
    let rel = anchor / 1157.95 - 1.0;

    let monotone = (0..taus.len()).all(|j| calls.prices.windows(2).all(|w| w[1][j].price <= w[0][j].price));
    let paths = simulate_terminal(&model, &taus, &cfg).unwrap();
    let mut parity_err: f64 = 0.0;
    for &tau in &taus {
        let fwd = paths.forward(spot, tau, 0.0).unwrap().price;
        for &strike in &strikes {
            let opt = |kind| OptionSpec { spot, strike, tau_days: tau, rate: 0.0, kind };
            let c = paths.price(&opt(OptionKind::Call)).unwrap().price;
            let p = paths.price(&opt(OptionKind::Put)).unwrap().price;
            parity_err = parity_err.max((c - p - (fwd - strike)).abs());
        }
    }
    let pass = rel.abs() < 0.15 && monotone && parity_err < 1e-9 * spot;
    outcome(
        pass,
        format!(
            "C(1250, 90) = {anchor:.2} vs 1157.95 ({:+.1}%), monotone in K: {monotone}, max parity error {parity_err:.2e}",
            100.0 * rel
        ),
    )
}

// ---------------------------------------------------------------------------
// 9. GARCH baselines

fn check_estimates(estimates: &[Estimate], truth: &[(&str, f64)], parts: &mut Vec<String>) -> bool {
    let mut ok = true;
    for (name, t) in truth {
        let e = estimates.iter().find(|e| e.name == *name).unwrap();
        let z = e.std_error.map(|se| (e.value - t) / se);
        ok &= z.is_some_and(|z| z.abs() <= 2.0);
        if !z.is_some_and(|z| z.abs() <= 2.0) {
            parts.push(format!("{name} {:.5} vs {t} (z {})", e.value, z.map_or("n/a".into(), |z| format!("{z:+.2}"))));
        }
    }
    ok
}

fn criterion_9() -> Outcome {
    const SEED: u64 = 20_170_929;
    let mut parts = vec![];
    let tg = TGarchParams { omega: 3.92e-5, alpha1: 0.228, beta1: 0.770, nu: 3.64 };
    let r = simulate_tgarch(&tg, 0.0, 3000, RngStream::from_seed(SEED)).unwrap();
    let f = fit_tgarch(&r).unwrap();
    let ok_t = check_estimates(
        &f.estimates,
        &[("omega", tg.omega), ("alpha1", tg.alpha1), ("beta1", tg.beta1), ("nu", tg.nu)],
        &mut parts,
    );
    let te = TEgarchParams { omega: 3.84e-5, alpha1: 1.05e-3, beta1: 0.952, phi1: 0.416, nu: 3.26 };
    let r = simulate_tegarch(&te, 0.0, 3000, RngStream::from_seed(SEED)).unwrap();
    let f = fit_tegarch(&r).unwrap();
    let ok_e = check_estimates(
        &f.estimates,
        &[("omega", te.omega), ("alpha1", te.alpha1), ("beta1", te.beta1), ("phi1", te.phi1), ("nu", te.nu)],
        &mut parts,
    );
    let p: Vec<f64> = (0..10_000u64)
        .map(|i| {
            let mut rng = RngStream::new(9, i).rng();
            let x: Vec<f64> = (0..500).map(|_| stats::standard_normal(&mut rng)).collect();
            ljung_box(&x, 10).unwrap().1
        })
        .collect();
    let ks = stats::ks_distance(&p, |u| u.clamp(0.0, 1.0));
    let pass = ok_t && ok_e && ks < 0.02;
    outcome(
        pass,
        format!(
            "t-GARCH within 2 SE: {ok_t}, t-EGARCH within 2 SE: {ok_e}, Ljung-Box KS {ks:.4}{}",
            if parts.is_empty() { String::new() } else { format!("; misses: {}", parts.join("; ")) }
        ),
    )
}

// ---------------------------------------------------------------------------
// 10. Byte-identical outputs across runs and thread counts

fn run_cli(threads: usize, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_cojump"))
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .env("COJUMP_MCMC__ITERATIONS", "300")
        .env("COJUMP_MCMC__BURN_IN", "100")
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr)))
    }
}

/// Files under `dir`, relative to it, sorted.
fn all_files(dir: &Path) -> Vec<PathBuf> {
    fn walk(base: &Path, dir: &Path, out: &mut Vec<PathBuf>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(base, &p, out);
            } else {
                out.push(p.strip_prefix(base).unwrap().to_path_buf());
            }
        }
    }
    let mut v = vec![];
    walk(dir, dir, &mut v);
    v.sort();
    v
}

/// Every subcommand once, into `dir`.
fn run_all_subcommands(threads: usize, dir: &Path) -> Result<(), String> {
    let d = |sub: &str| dir.join(sub).to_string_lossy().into_owned();
    let fixture = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/pipeline.toml");
    let config = dir.join("pipeline.toml");
    let text = fs::read_to_string(&fixture).map_err(|e| e.to_string())?;
    let fixtures = fixture.parent().unwrap().to_string_lossy().into_owned();
    let text = text
        .replace("\"daily_prices.csv\"", &format!("\"{fixtures}/daily_prices.csv\""))
        .replace("\"minute_prices.csv\"", &format!("\"{fixtures}/minute_prices.csv\""))
        .replace("\"../target/fixture-run\"", "\"run\"");
    fs::create_dir_all(dir).map_err(|e| e.to_string())?;
    fs::write(&config, text).map_err(|e| e.to_string())?;

    let daily = format!("{}/simulated.csv", d("sim"));
    let minute = format!("{}/simulated.csv", d("sim_br"));
    let fit = format!("{}/fit.json", d("fit"));
    let moments = format!("{}/crossmom.json", d("crossmom"));
    let steps: Vec<Vec<String>> = vec![
        vec!["simulate", "--days", "600", "--seed", "3", "--out", &d("sim")],
        vec!["simulate", "--model", "br_full", "--days", "3", "--seed", "3", "--out", &d("sim_br")],
        vec!["fit", "--input", &daily, "--iterations", "400", "--burn-in", "100", "--seed", "3", "--out", &d("fit")],
        vec!["detect-jumps", "--fit", &fit, "--out", &d("jumps")],
        vec!["residuals", "--fit", &fit, "--out", &d("residuals")],
        vec!["spotvar", "--input", &minute, "--out", &d("spotvar")],
        vec!["crossmom", "--input", &minute, "--out", &d("crossmom")],
        vec!["nimm", "--moments", &moments, "--replications", "100", "--max-evals", "200", "--restarts", "0", "--out", &d("nimm")],
        vec!["price", "--fit", &fit, "--v0", "posterior_last_day", "--paths", "5000", "--out", &d("price")],
        vec!["price-grid", "--model", "svcj", "--taus", "7,30,90", "--paths", "5000", "--out", &d("price_grid")],
        vec!["iv-surface", "--model", "br_full", "--taus", "7,30", "--paths", "5000", "--out", &d("iv_br")],
        vec!["iv-surface", "--model", "svj", "--paths", "5000", "--out", &d("iv_svj")],
        vec!["fit-garch", "--input", &daily, "--model", "tgarch", "--out", &d("garch")],
        vec!["fit-garch", "--input", &daily, "--model", "tegarch", "--out", &d("garch")],
        vec!["fit-arima", "--input", &daily, "--out", &d("arima")],
        vec!["run", "--config", &config.to_string_lossy()],
    ]
    .into_iter()
    .map(|v| v.into_iter().map(String::from).collect())
    .collect();
    for s in &steps {
        let args: Vec<&str> = s.iter().map(String::as_str).collect();
        run_cli(threads, &args)?;
    }
    Ok(())
}

fn criterion_10() -> Outcome {
    let root = std::env::temp_dir().join(format!("cojump-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&root);
    let runs = [(1, "a"), (1, "b"), (4, "c")];
    for (threads, name) in runs {
        if let Err(e) = run_all_subcommands(threads, &root.join(name)) {
            return outcome(false, format!("subcommand failed: {e}"));
        }
    }
    let reference = all_files(&root.join("a"));
    let mut differing = vec![];
    for (_, name) in &runs[1..] {
        let files = all_files(&root.join(name));
        if files != reference {
            differing.push(format!("run {name} wrote a different file set"));
            continue;
        }
        for f in &files {
            if fs::read(root.join("a").join(f)).unwrap() != fs::read(root.join(name).join(f)).unwrap() {
                differing.push(format!("{name}/{}", f.display()));
            }
        }
    }
    let _ = fs::remove_dir_all(&root);
    let n = reference.len();
    outcome(
        differing.is_empty(),
        if differing.is_empty() {
            format!("16 invocations covering all 13 subcommands, {n} files identical across 2 runs at 1 thread and 1 at 4 threads")
        } else {
            format!("differing outputs: {}", differing.join(", "))
        },
    )
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = vec![];
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!("{} criterion {n:>2} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        results.push((n, name, o));
    };

    report(1, "Black-Scholes oracle", criterion_1());

    let data = recovery_data();
    let start = Instant::now();
    let svcj = fit(&data, ModelFlavor::Svcj);
    let svcj_time = start.elapsed();
    let svj = fit(&data, ModelFlavor::Svj);
    let sv = fit(&data, ModelFlavor::Sv);
    let all_time = start.elapsed();
    report(2, "SVCJ simulation recovery", criterion_2(&data, &svcj, svcj_time));
    report(3, "flavor MSE ordering", criterion_3(&svcj, &svj, &sv, all_time));
    report(4, "jump detection calibration", criterion_4(&svcj));
    report(5, "threshold bipower variation", criterion_5());
    report(6, "cross-moment consistency", criterion_6());
    report(7, "IV structure", criterion_7());
    report(8, "price anchor, monotonicity, parity", criterion_8());
    report(9, "GARCH recovery and Ljung-Box", criterion_9());
    report(10, "determinism", criterion_10());

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!("{} of {} criteria passed", results.len() - failed.len(), results.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {failed:?}");
        ExitCode::FAILURE
    }
}
