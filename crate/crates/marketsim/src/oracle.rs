//! The fundamental-value oracle: the unobservable consensus value of the
//! traded equity, modeled as a discrete-time mean-reverting process
//!
//! ```text
//! r_0 = r_bar
//! r_t = max(0, round(kappa * r_bar + (1 - kappa) * r_{t-1} + u_t)),
//! u_t ~ N(0, sigma_shock_sq)
//! ```
//!
//! The path draws from its own dedicated random stream and is memoized, so
//! it is identical across paired experimental/control runs no matter who
//! observes it or when. Agents receive noisy observations whose noise comes
//! from the *requesting agent's* stream, leaving the oracle stream untouched.

use std::cell::RefCell;
use std::io::Write;
use std::rc::Rc;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::kernel::oracle_stream;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("time unit {t} outside horizon 0..={horizon}")]
    OutOfRange { t: u64, horizon: u64 },
    #[error("invalid fundamental parameters: {0}")]
    BadParams(String),
}

/// Parameters of the mean-reverting fundamental. The numeric defaults are
/// implementation choices, not published values; every one is configurable.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FundamentalParams {
    /// Long-run mean in 1e-4 currency units.
    pub r_bar: i64,
    /// Mean-reversion weight in [0, 1]; 1 pins the process at `r_bar`.
    pub kappa: f64,
    /// Variance of the per-unit shock.
    pub sigma_shock_sq: f64,
    /// Final time unit of the simulation.
    pub horizon_units: u64,
    /// Observation variance agents fall back to.
    pub obs_noise_sq_default: f64,
}

impl Default for FundamentalParams {
    fn default() -> Self {
        FundamentalParams {
            r_bar: 100_000,
            kappa: 0.05,
            sigma_shock_sq: 1e4,
            horizon_units: 1000,
            obs_noise_sq_default: 1e6,
        }
    }
}

impl FundamentalParams {
    pub fn validate(&self) -> Result<(), OracleError> {
        if !(0.0..=1.0).contains(&self.kappa) {
            return Err(OracleError::BadParams(format!(
                "kappa {} outside [0, 1]",
                self.kappa
            )));
        }
        if self.sigma_shock_sq < 0.0 || self.obs_noise_sq_default < 0.0 {
            return Err(OracleError::BadParams("negative variance".into()));
        }
        if self.r_bar <= 0 {
            return Err(OracleError::BadParams(format!(
                "r_bar {} must be positive",
                self.r_bar
            )));
        }
        Ok(())
    }
}

/// Lazily generated, memoized fundamental path.
#[derive(Debug)]
pub struct FundamentalOracle {
    params: FundamentalParams,
    values: Vec<i64>,
    rng: ChaCha12Rng,
}

/// Shared handle for the single-threaded simulation.
pub type SharedOracle = Rc<RefCell<FundamentalOracle>>;

impl FundamentalOracle {
    pub fn new(global_seed: u64, params: FundamentalParams) -> Result<Self, OracleError> {
        params.validate()?;
        Ok(FundamentalOracle {
            values: vec![params.r_bar],
            rng: oracle_stream(global_seed),
            params,
        })
    }

    pub fn shared(global_seed: u64, params: FundamentalParams) -> Result<SharedOracle, OracleError> {
        Ok(Rc::new(RefCell::new(Self::new(global_seed, params)?)))
    }

    pub fn params(&self) -> &FundamentalParams {
        &self.params
    }

    /// The fundamental value at time unit `t`. Extends the memoized path as
    /// needed; repeated queries return identical values.
    pub fn value_at(&mut self, t: u64) -> Result<i64, OracleError> {
        if t > self.params.horizon_units {
            return Err(OracleError::OutOfRange {
                t,
                horizon: self.params.horizon_units,
            });
        }
        if self.values.len() <= t as usize {
            let shock = Normal::new(0.0, self.params.sigma_shock_sq.sqrt())
                .expect("validated variance");
            let kappa = self.params.kappa;
            let r_bar = self.params.r_bar as f64;
            while self.values.len() <= t as usize {
                let prev = *self.values.last().expect("seeded with r_0") as f64;
                let u: f64 = shock.sample(&mut self.rng);
                let next = kappa * r_bar + (1.0 - kappa) * prev + u;
                self.values.push((next.round() as i64).max(0));
            }
        }
        Ok(self.values[t as usize])
    }

    /// A noisy observation of the fundamental at `t`: `value_at(t) + n` with
    /// `n ~ N(0, obs_noise_sq)` drawn from the requesting agent's stream.
    /// Exactly one draw is consumed from `agent_rng` per call regardless of
    /// the noise level, so observation patterns never desynchronize streams.
    pub fn observe<R: Rng>(
        &mut self,
        t: u64,
        obs_noise_sq: f64,
        agent_rng: &mut R,
    ) -> Result<i64, OracleError> {
        let value = self.value_at(t)?;
        let std_normal: f64 = Normal::new(0.0, 1.0).unwrap().sample(agent_rng);
        let noise = std_normal * obs_noise_sq.sqrt();
        Ok(value + noise.round() as i64)
    }

    /// Materialize and return the full path through the horizon.
    pub fn full_path(&mut self) -> Result<&[i64], OracleError> {
        self.value_at(self.params.horizon_units)?;
        Ok(&self.values)
    }

    /// Debug export: `unit,value` CSV of the path generated so far.
    pub fn write_path_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "unit,value")?;
        for (t, v) in self.values.iter().enumerate() {
            writeln!(w, "{t},{v}")?;
        }
        Ok(())
    }
}
