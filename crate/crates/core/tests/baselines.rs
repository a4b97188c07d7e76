use cojump::baselines::{
    fit_tegarch, fit_tgarch, ljung_box, simulate_tegarch, simulate_tgarch, tegarch_log_likelihood,
    tgarch_log_likelihood, GarchFit, TEgarchParams, TGarchParams,
};
use cojump::{stats, RngStream};

const T: usize = 3000;
const SEED: u64 = 20_170_929;

const REPS: u64 = 20;
/// With correct 2-SE intervals each parameter is covered with probability
/// ≈ 0.95; 16 or more of 20 covers fails with probability ≈ 1.6% per parameter.
const MIN_COVERED: usize = 16;

fn covered<P>(fit: &GarchFit<P>, name: &str, truth: f64) -> bool {
    let e = fit.estimate(name).unwrap();
    e.std_error.is_some_and(|se| (e.value - truth).abs() <= 2.0 * se)
}

#[test]
fn tgarch_recovery_is_calibrated() {
    let truth = TGarchParams { omega: 3.92e-5, alpha1: 0.228, beta1: 0.770, nu: 3.64 };
    let names = [("omega", truth.omega), ("alpha1", truth.alpha1), ("beta1", truth.beta1), ("nu", truth.nu)];
    let mut hits = [0usize; 4];
    for rep in 0..REPS {
        let r = simulate_tgarch(&truth, 0.0, T, RngStream::new(SEED, rep)).unwrap();
        let fit = fit_tgarch(&r).unwrap();
        assert!(fit.log_likelihood >= tgarch_log_likelihood(&truth, 0.0, &r), "rep {rep}");
        for (h, (n, v)) in hits.iter_mut().zip(names) {
            *h += usize::from(covered(&fit, n, v));
        }
    }
    assert!(hits.iter().all(|&h| h >= MIN_COVERED), "{hits:?}");
}

#[test]
fn tegarch_recovery_is_calibrated() {
    let truth = TEgarchParams { omega: 3.84e-5, alpha1: 1.05e-3, beta1: 0.952, phi1: 0.416, nu: 3.26 };
    let names = [
        ("omega", truth.omega),
        ("alpha1", truth.alpha1),
        ("beta1", truth.beta1),
        ("phi1", truth.phi1),
        ("nu", truth.nu),
    ];
    let mut hits = [0usize; 5];
    for rep in 0..REPS {
        let r = simulate_tegarch(&truth, 0.0, T, RngStream::new(SEED, rep)).unwrap();
        let fit = fit_tegarch(&r).unwrap();
        assert!(fit.log_likelihood >= tegarch_log_likelihood(&truth, 0.0, &r), "rep {rep}");
        for (h, (n, v)) in hits.iter_mut().zip(names) {
            *h += usize::from(covered(&fit, n, v));
        }
    }
    assert!(hits.iter().all(|&h| h >= MIN_COVERED), "{hits:?}");
}

#[test]
fn tegarch_log_garch_truth_gives_phi_near_zero() {
    let truth = TEgarchParams { omega: -0.3, alpha1: 0.05, beta1: 0.95, phi1: 0.0, nu: 5.0 };
    let r = simulate_tegarch(&truth, 0.0, T, RngStream::from_seed(SEED + 1)).unwrap();
    let fit = fit_tegarch(&r).unwrap();
    let phi = fit.estimate("phi1").unwrap();
    assert!(phi.value.abs() <= 2.0 * phi.std_error.unwrap(), "{phi:?}");
}

#[test]
fn ljung_box_p_values_uniform_under_iid() {
    let p: Vec<f64> = (0..10_000u64)
        .map(|i| {
            let mut rng = RngStream::new(77, i).rng();
            let x: Vec<f64> = (0..500).map(|_| stats::standard_normal(&mut rng)).collect();
            ljung_box(&x, 10).unwrap().1
        })
        .collect();
    let d = stats::ks_distance(&p, |u| u.clamp(0.0, 1.0));
    assert!(d < 0.02, "KS distance {d}");
}
