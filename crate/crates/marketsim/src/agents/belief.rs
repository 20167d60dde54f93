//! Bayesian tracking of the mean-reverting fundamental from noisy
//! observations, and projection of the final fundamental value.

use serde::{Deserialize, Serialize};

use crate::oracle::FundamentalParams;

/// An agent's posterior over the current fundamental value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FundamentalBelief {
    pub mean: f64,
    pub variance: f64,
    /// Time unit of the last update.
    pub last_update: u64,
}

impl FundamentalBelief {
    /// Prior at time 0: the process starts exactly at `r_bar`.
    pub fn prior(fparams: &FundamentalParams) -> Self {
        FundamentalBelief {
            mean: fparams.r_bar as f64,
            variance: 0.0,
            last_update: 0,
        }
    }
}

/// Accumulated shock variance over `elapsed` units of mean-reverting decay:
/// `sum_{i=0}^{elapsed-1} (1-kappa)^(2i) * sigma_shock_sq`.
fn accumulated_shock_variance(elapsed: u64, kappa: f64, sigma_shock_sq: f64) -> f64 {
    let phi_sq = (1.0 - kappa) * (1.0 - kappa);
    if elapsed == 0 {
        0.0
    } else if (phi_sq - 1.0).abs() < f64::EPSILON {
        elapsed as f64 * sigma_shock_sq
    } else {
        sigma_shock_sq * (1.0 - phi_sq.powi(elapsed as i32)) / (1.0 - phi_sq)
    }
}

/// Two-step belief update: propagate the posterior through `elapsed` units
/// of the mean-reverting dynamics, then merge the new observation with
/// precision weighting.
pub fn belief_update(
    belief: &FundamentalBelief,
    observation: f64,
    elapsed_units: u64,
    obs_noise_sq: f64,
    fparams: &FundamentalParams,
) -> FundamentalBelief {
    let phi = 1.0 - fparams.kappa;
    let decay = phi.powi(elapsed_units as i32);
    let mut mean = (1.0 - decay) * fparams.r_bar as f64 + decay * belief.mean;
    let mut variance = decay * decay * belief.variance
        + accumulated_shock_variance(elapsed_units, fparams.kappa, fparams.sigma_shock_sq);

    // Precision-weighted merge. A zero-variance prior ignores the
    // observation; infinite observation noise leaves the belief untouched.
    if variance > 0.0 && obs_noise_sq.is_finite() {
        if obs_noise_sq <= 0.0 {
            mean = observation;
            variance = 0.0;
        } else {
            let w = variance / (variance + obs_noise_sq);
            mean += w * (observation - mean);
            variance = variance * obs_noise_sq / (variance + obs_noise_sq);
        }
    }
    FundamentalBelief {
        mean,
        variance,
        last_update: belief.last_update + elapsed_units,
    }
}

/// Estimate of the fundamental at the horizon, the anchor for surplus
/// reasoning: `(1 - (1-kappa)^(T-now)) * r_bar + (1-kappa)^(T-now) * mean`,
/// rounded to integer price units.
pub fn project_final(belief: &FundamentalBelief, now: u64, fparams: &FundamentalParams) -> i64 {
    assert!(
        now <= fparams.horizon_units,
        "projection from {now} beyond horizon {}",
        fparams.horizon_units
    );
    let remaining = fparams.horizon_units - now;
    let decay = (1.0 - fparams.kappa).powi(remaining as i32);
    ((1.0 - decay) * fparams.r_bar as f64 + decay * belief.mean).round() as i64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fparams(kappa: f64) -> FundamentalParams {
        FundamentalParams {
            kappa,
            ..FundamentalParams::default()
        }
    }

    fn belief(mean: f64, variance: f64) -> FundamentalBelief {
        FundamentalBelief {
            mean,
            variance,
            last_update: 0,
        }
    }

    #[test]
    fn infinite_observation_noise_leaves_merge_inert() {
        let p = fparams(0.05);
        let before = belief(101_000.0, 500.0);
        let after = belief_update(&before, 90_000.0, 3, f64::INFINITY, &p);
        // The propagation step still applies; recompute it directly.
        let phi: f64 = 0.95;
        let want_mean = (1.0 - phi.powi(3)) * 100_000.0 + phi.powi(3) * 101_000.0;
        assert!((after.mean - want_mean).abs() < 1e-9);
        let want_var = phi.powi(6) * 500.0
            + 1e4 * (1.0 + phi.powi(2) + phi.powi(4));
        assert!((after.variance - want_var).abs() < 1e-6);
    }

    #[test]
    fn zero_variance_prior_ignores_observation() {
        let p = fparams(0.05);
        let before = belief(100_000.0, 0.0);
        let after = belief_update(&before, 123_456.0, 0, 1e6, &p);
        assert_eq!(after.mean, 100_000.0);
        assert_eq!(after.variance, 0.0);
    }

    #[test]
    fn zero_observation_noise_pins_belief_to_observation() {
        let p = fparams(0.05);
        let before = belief(100_000.0, 250.0);
        let after = belief_update(&before, 100_777.0, 1, 0.0, &p);
        assert_eq!(after.mean, 100_777.0);
        assert_eq!(after.variance, 0.0);
    }

    #[test]
    fn matches_straight_line_recomputation() {
        // Independent evaluation of the two formulas, term by term.
        let p = fparams(0.05);
        let before = belief(100_450.0, 321.5);
        let (obs, elapsed, obs_noise) = (99_800.0, 3u64, 2e5);
        let after = belief_update(&before, obs, elapsed, obs_noise, &p);

        let phi = 0.95_f64;
        let decay = phi * phi * phi;
        let mean1 = (1.0 - decay) * 100_000.0 + decay * 100_450.0;
        let mut var1 = decay * decay * 321.5;
        for i in 0..elapsed {
            var1 += phi.powi(2 * i as i32) * 1e4;
        }
        let w = var1 / (var1 + obs_noise);
        let mean2 = mean1 + w * (obs - mean1);
        let var2 = var1 * obs_noise / (var1 + obs_noise);

        assert!((after.mean - mean2).abs() / mean2.abs() < 1e-12);
        assert!((after.variance - var2).abs() / var2.abs() < 1e-12);
        assert_eq!(after.last_update, 3);
    }

    #[test]
    fn projection_at_horizon_is_belief_mean() {
        let p = fparams(0.05);
        let b = belief(100_321.4, 10.0);
        assert_eq!(project_final(&b, 1000, &p), 100_321);
    }

    #[test]
    fn projection_with_full_reversion_is_r_bar() {
        let p = fparams(1.0);
        let b = belief(155_000.0, 10.0);
        assert_eq!(project_final(&b, 0, &p), 100_000);
    }

    #[test]
    fn projection_decays_excess_mean() {
        // 200 units out, an excess of 1000 decays to ~0.035 and rounds away.
        let p = fparams(0.05);
        let b = belief(101_000.0, 0.0);
        assert_eq!(project_final(&b, 800, &p), 100_000);
    }
}
