use cojump::highfreq::*;
use cojump::simulate::simulate_br;
use cojump::{stats, BrParams, RngStream};

/// Daily spot vol (percent) of the constant-vol panels below.
const SIGMA_DAY: f64 = 2.0;

fn minute_var() -> f64 {
    (SIGMA_DAY / 100.0).powi(2) / MINUTES_PER_DAY as f64
}

fn constant_vol_panel(days: usize, seed: u64) -> IntradayPanel {
    let p = BrParams::diffusion(0.0, 0.0, 0.0, 0.0, 0.0);
    let path = simulate_br(&p, SIGMA_DAY, days * MINUTES_PER_DAY, 1.0 / MINUTES_PER_DAY as f64, RngStream::from_seed(seed)).unwrap();
    IntradayPanel::from_br_path(&path, 60).unwrap()
}

fn nested(p: &IntradayPanel) -> Vec<Vec<Vec<f64>>> {
    (0..p.days())
        .map(|t| (0..p.knots_per_day()).map(|i| p.window(t, i).to_vec()).collect())
        .collect()
}

fn mean_of(s: &SpotVariancePanel) -> f64 {
    stats::mean(&s.sigma2_hat.iter().flatten().copied().collect::<Vec<_>>())
}

#[test]
fn bipower_is_unbiased_under_constant_vol() {
    let panel = constant_vol_panel(100, 1);
    let s = spot_variance_tbv(&panel, DEFAULT_THRESHOLD_MULT).unwrap();
    let want = 60.0 * minute_var();
    assert!((mean_of(&s) / want - 1.0).abs() < 0.05, "{} vs {want}", mean_of(&s));
    // the threshold sits near 4 minute sds, loosened where the local BV is low
    let flagged: usize = s.n_j.iter().flatten().sum();
    assert!((flagged as f64) < 1e-3 * (100 * MINUTES_PER_DAY) as f64, "{flagged} diffusive returns flagged");
}

#[test]
fn thresholding_removes_injected_jumps() {
    let panel = constant_vol_panel(100, 2);
    let jump = 10.0 * minute_var().sqrt();
    let mut r = nested(&panel);
    for day in &mut r {
        for w in day.iter_mut() {
            w[30] += jump;
        }
    }
    let jumpy = IntradayPanel::from_nested(&r, 60).unwrap();
    let want = 60.0 * minute_var();
    let s = spot_variance_tbv(&jumpy, DEFAULT_THRESHOLD_MULT).unwrap();
    assert!((mean_of(&s) / want - 1.0).abs() < 0.10);
    let rv: Vec<f64> = r.iter().flatten().map(|w| w.iter().map(|x| x * x).sum()).collect();
    let rv_bias = stats::mean(&rv) / want - 1.0;
    // the jump alone adds 100 minute variances to 60
    assert!((rv_bias - 100.0 / 60.0).abs() < 0.15, "{rv_bias}");
}

#[test]
fn first_moment_of_a_driftless_diffusion_is_zero() {
    let p = BrParams::diffusion(0.0, -0.3, -0.05, -0.05, 0.3);
    let path = simulate_br(&p, 1.0, 400 * MINUTES_PER_DAY, 1.0 / MINUTES_PER_DAY as f64, RngStream::from_seed(3)).unwrap();
    let panel = IntradayPanel::from_br_path(&path, 60).unwrap();
    let spot = spot_variance_tbv(&panel, DEFAULT_THRESHOLD_MULT).unwrap();
    let est = cross_moments(&panel.log_closes(), &spot, &[MomentOrder::new(1, 0)], None, 7, None).unwrap();
    let e = &est[0];
    // knots of a day share most of their one-day increment, so the kernel
    // variance understates the sampling error by about the knot count
    let inflate = panel.knots_per_day() as f64;
    for (t, v) in e.theta_hat.iter().zip(&e.variance) {
        let (t, v) = (t.unwrap(), v.unwrap());
        assert!(t.abs() < 3.0 * (v * inflate).sqrt(), "{t} vs se {}", (v * inflate).sqrt());
    }
}

#[test]
fn second_moment_of_a_constant_vol_diffusion_is_its_variance() {
    let panel = constant_vol_panel(400, 4);
    let spot = spot_variance_tbv(&panel, DEFAULT_THRESHOLD_MULT).unwrap();
    let sigma = SIGMA_DAY / 100.0;
    let est = cross_moments(&panel.log_closes(), &spot, &[MomentOrder::new(2, 0)], Some(&[sigma]), 1, None).unwrap();
    let theta = est[0].theta_hat[0].unwrap();
    // 400 roughly independent daily squares: relative sd about sqrt(2/400)
    assert!((theta / (sigma * sigma) - 1.0).abs() < 0.25, "{theta}");
}

fn nimm_config() -> NimmConfig {
    NimmConfig {
        replications: 500,
        substeps: 20,
        seed: RngStream::from_seed(21),
        restarts: 1,
        max_evals: 1500,
        ..NimmConfig::default()
    }
}

fn nimm_grid() -> Vec<f64> {
    (0..7).map(|k| 0.3 + 0.3 * k as f64).collect()
}

#[test]
fn nimm_recovers_a_diffusion_from_its_own_moments() {
    let cfg = nimm_config();
    let mut truth = BrParams::diffusion(0.02, -0.2, -0.1, -0.1, 0.4);
    truth.rho1 = 0.1;
    let shocks = MomentShocks::draw(cfg.seed, cfg.replications, cfg.substeps);
    let moments = model_moments(&truth, &nimm_grid(), &NIMM_ORDERS, &shocks);
    let init = BrParams::from_array(truth.to_array().map(|x| 1.3 * x));
    let fit = nimm_calibrate(&moments, &init, JumpRestriction::NoJumps, &cfg).unwrap();
    assert!(fit.objective <= fit.init_objective);
    let (a, b) = (fit.params.to_array(), truth.to_array());
    for i in 0..6 {
        assert!((a[i] / b[i] - 1.0).abs() < 0.15, "{}: {} vs {}", BrParams::NAMES[i], a[i], b[i]);
    }
    for i in JumpRestriction::NoJumps.pinned() {
        assert_eq!(a[i], 0.0);
    }
}

#[test]
fn nimm_works_from_kernel_moments() {
    // end to end on a short simulated panel: decimal kernel moments bridged to percent
    let p = JumpRestriction::NoCojumps.apply(&BrParams::btc_no_cojumps());
    let path = simulate_br(&p, 0.5, 120 * MINUTES_PER_DAY, 1.0 / MINUTES_PER_DAY as f64, RngStream::from_seed(8)).unwrap();
    let panel = IntradayPanel::from_br_path(&path, 60).unwrap();
    let spot = spot_variance_tbv(&panel, DEFAULT_THRESHOLD_MULT).unwrap();
    let moments: Vec<CrossMomentEstimate> = cross_moments(&panel.log_closes(), &spot, &NIMM_ORDERS, None, 5, None)
        .unwrap()
        .iter()
        .map(|m| m.rescaled(100.0))
        .collect();
    let cfg = NimmConfig {
        max_evals: 200,
        restarts: 0,
        replications: 200,
        ..nimm_config()
    };
    let fit = nimm_calibrate(&moments, &p, JumpRestriction::NoCojumps, &cfg).unwrap();
    assert!(fit.objective <= fit.init_objective);
    assert!(fit.objective.is_finite());
    assert_eq!(fit.params.lambda_rsigma, 0.0);
}
