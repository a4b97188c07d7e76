use crate::error::{Error, PriceBound, Result};
use crate::stats::{norm_cdf, norm_pdf};

pub const DAYS_PER_YEAR: f64 = 365.0;

const VOL_LO: f64 = 1e-6;
const VOL_HI: f64 = 10.0;
const VOL_TOL: f64 = 1e-8;

/// Black-Scholes call with annualized vol and maturity in calendar days;
/// `r` is continuously compounded per day.
pub fn bs_price(s: f64, k: f64, r: f64, sigma_annual: f64, tau_days: f64) -> f64 {
    let disc_k = k * (-r * tau_days).exp();
    let sd = sigma_annual * (tau_days / DAYS_PER_YEAR).sqrt();
    if sd <= 0.0 {
        return (s - disc_k).max(0.0);
    }
    if k <= 0.0 {
        return s - disc_k;
    }
    let d1 = ((s / disc_k).ln() + 0.5 * sd * sd) / sd;
    s * norm_cdf(d1) - disc_k * norm_cdf(d1 - sd)
}

/// `d price / d sigma_annual`.
pub fn bs_vega(s: f64, k: f64, r: f64, sigma_annual: f64, tau_days: f64) -> f64 {
    let t = tau_days / DAYS_PER_YEAR;
    let sd = sigma_annual * t.sqrt();
    if sd <= 0.0 || k <= 0.0 {
        return 0.0;
    }
    let d1 = ((s / (k * (-r * tau_days).exp())).ln() + 0.5 * sd * sd) / sd;
    s * norm_pdf(d1) * t.sqrt()
}

/// Bounds a call price must fall strictly inside to have an implied vol in
/// `[1e-6, 10]`.
pub fn iv_price_band(s: f64, k: f64, r: f64, tau_days: f64) -> (f64, f64) {
    let lower = bs_price(s, k, r, VOL_LO, tau_days).max((s - k * (-r * tau_days).exp()).max(0.0));
    (lower, s)
}

/// Implied vol by bisection on `[1e-6, 10]` to an absolute tolerance of 1e-8.
pub fn bs_implied_vol(price: f64, s: f64, k: f64, r: f64, tau_days: f64) -> Result<f64> {
    if !(s > 0.0 && k > 0.0 && tau_days > 0.0) || !price.is_finite() {
        return Err(Error::invalid(format!(
            "implied vol needs positive spot, strike and maturity and a finite price (S={s}, K={k}, tau={tau_days}, price={price})"
        )));
    }
    let (lower, upper) = iv_price_band(s, k, r, tau_days);
    if price <= lower {
        return Err(Error::NoSolution(PriceBound::Lower(lower)));
    }
    if price >= upper {
        return Err(Error::NoSolution(PriceBound::Upper(upper)));
    }
    if price >= bs_price(s, k, r, VOL_HI, tau_days) {
        return Err(Error::NoSolution(PriceBound::Upper(bs_price(s, k, r, VOL_HI, tau_days))));
    }
    let (mut lo, mut hi) = (VOL_LO, VOL_HI);
    while hi - lo > VOL_TOL {
        let mid = 0.5 * (lo + hi);
        if bs_price(s, k, r, mid, tau_days) < price {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use proptest::prelude::*;

    /// Discounted lognormal payoff by quadrature over the standard normal.
    fn quad_price(s: f64, k: f64, r: f64, sigma: f64, tau: f64) -> f64 {
        let sd = sigma * (tau / DAYS_PER_YEAR).sqrt();
        let f = |z: f64| {
            let st = s * (r * tau - 0.5 * sd * sd + sd * z).exp();
            (st - k).max(0.0) * stats::norm_pdf(z)
        };
        (-r * tau).exp() * stats::integrate_panels(&f, -12.0, 12.0, 400, 1e-12)
    }

    #[test]
    fn atm_one_year() {
        let p = bs_price(100.0, 100.0, 0.0, 0.2, 365.0);
        assert!((p - 7.9656).abs() < 5e-5, "{p}");
        let closed = 100.0 * (2.0 * stats::norm_cdf(0.1) - 1.0);
        assert!((p - closed).abs() < 1e-10);
        assert!((p - quad_price(100.0, 100.0, 0.0, 0.2, 365.0)).abs() < 1e-8);
    }

    #[test]
    fn matches_quadrature_with_rates() {
        for (k, r, sig, tau) in [(80.0, 0.0001, 0.5, 30.0), (130.0, 0.0002, 1.2, 90.0), (100.0, 0.0, 0.05, 7.0)] {
            let a = bs_price(100.0, k, r, sig, tau);
            let b = quad_price(100.0, k, r, sig, tau);
            assert!((a - b).abs() < 1e-7, "{k} {r} {sig} {tau}: {a} vs {b}");
        }
    }

    #[test]
    fn zero_vol_limit_is_discounted_intrinsic() {
        assert_eq!(bs_price(100.0, 90.0, 0.0, 0.0, 30.0), 10.0);
        assert_eq!(bs_price(100.0, 110.0, 0.0, 0.0, 30.0), 0.0);
        let tiny = bs_price(100.0, 90.0, 0.001, 1e-9, 30.0);
        assert!((tiny - (100.0 - 90.0 * (-0.03f64).exp())).abs() < 1e-9);
    }

    #[test]
    fn implied_vol_examples() {
        let v = bs_implied_vol(7.9656, 100.0, 100.0, 0.0, 365.0).unwrap();
        assert!((v - 0.2).abs() < 1e-5, "{v}");
        let p = bs_price(100.0, 120.0, 0.0, 0.2, 30.0);
        assert!((bs_implied_vol(p, 100.0, 120.0, 0.0, 30.0).unwrap() - 0.2).abs() < 1e-7);
        assert!(matches!(
            bs_implied_vol(100.0, 100.0, 100.0, 0.0, 30.0),
            Err(Error::NoSolution(PriceBound::Upper(_)))
        ));
        assert!(matches!(
            bs_implied_vol(9.99, 100.0, 90.0, 0.0, 30.0),
            Err(Error::NoSolution(PriceBound::Lower(_)))
        ));
    }

    proptest! {
        #[test]
        fn vega_is_positive(k in 50.0f64..200.0, s1 in 0.01f64..3.0, ds in 0.001f64..1.0, tau in 1.0f64..720.0) {
            let a = bs_price(100.0, k, 0.0, s1, tau);
            let b = bs_price(100.0, k, 0.0, s1 + ds, tau);
            prop_assert!(b >= a);
            prop_assert!(bs_vega(100.0, k, 0.0, s1, tau) >= 0.0);
        }

        #[test]
        fn implied_vol_round_trips(k in 60.0f64..160.0, sigma in 0.05f64..3.0, tau in 1.0f64..720.0) {
            let p = bs_price(100.0, k, 0.0, sigma, tau);
            let (lo, hi) = iv_price_band(100.0, k, 0.0, tau);
            // skip nodes where the price is numerically indistinguishable from a bound
            prop_assume!(p - lo > 1e-9 && hi - p > 1e-9);
            let v = bs_implied_vol(p, 100.0, k, 0.0, tau).unwrap();
            let vega = bs_vega(100.0, k, 0.0, sigma, tau);
            prop_assume!(vega > 1e-4);
            prop_assert!((v - sigma).abs() < 1e-7, "{} vs {}", v, sigma);
        }
    }
}
