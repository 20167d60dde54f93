//! Experiment orchestration: configuration, trial grids, paired runs, and
//! CSV/SVG emission.
//!
//! Reproducibility contract: a config plus its `base_seed` determines every
//! output byte. Trial `k` always uses `base_seed + k`, so any individual
//! trial can be re-run standalone. Independent simulations are dispatched
//! across a worker pool whose size is capped by `MARKETSIM_THREADS`;
//! results are assembled in trial order, so parallelism never changes
//! output.

mod iabs_impact;
mod output;
mod replay_impact;

pub use iabs_impact::{run_iabs_impact, run_iabs_single, IabsImpactConfig, IabsRun};
pub use output::{emit_csv, emit_price_level_volume, emit_svg, Figure};
pub use replay_impact::{run_replay_impact, ReplayImpactConfig, SizedOrderAgent};

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::eventstudy::EventStudyResult;
use crate::kernel::SimTime;
use crate::orderbook::Side;

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Kernel(#[from] crate::kernel::KernelError),
    #[error(transparent)]
    Lobster(#[from] crate::lobster::LobsterError),
    #[error(transparent)]
    EventStudy(#[from] crate::eventstudy::EventStudyError),
    #[error(transparent)]
    Oracle(#[from] crate::oracle::OracleError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("bad config: {0}")]
    BadConfig(String),
}

/// Which sides of the experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SideChoice {
    Buy,
    Sell,
    Both,
}

impl SideChoice {
    pub fn expand(&self) -> Vec<Side> {
        match self {
            SideChoice::Buy => vec![Side::Buy],
            SideChoice::Sell => vec![Side::Sell],
            SideChoice::Both => vec![Side::Buy, Side::Sell],
        }
    }
}

/// Serde bridge rendering `SimTime` as clock text ("09:30:00.000000000").
pub mod clock_time {
    use super::SimTime;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(t: &SimTime, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&t.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<SimTime, D::Error> {
        let text = String::deserialize(d)?;
        SimTime::parse_clock(&text).map_err(serde::de::Error::custom)
    }
}

/// One experiment configuration, tagged by mode. The JSON layout mirrors
/// these fields directly.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ExperimentConfig {
    ReplayImpact(ReplayImpactConfig),
    IabsImpact(IabsImpactConfig),
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ExperimentError> {
        serde_json::from_str(text).map_err(|e| ExperimentError::BadConfig(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Evenly spaced trial times: `start, start + interval, ...` up to and
/// including `end`.
pub fn trial_times(start: SimTime, end: SimTime, interval_ns: u64) -> Vec<SimTime> {
    assert!(interval_ns > 0, "trial interval must be positive");
    assert!(start <= end, "trial schedule must not be reversed");
    let mut out = Vec::new();
    let mut t = start;
    while t <= end {
        out.push(t);
        t = t + interval_ns;
    }
    out
}

/// One aggregated impact curve and the parameters that produced it.
#[derive(Debug, Clone)]
pub struct ImpactCurve {
    pub side: Side,
    /// Replay mode: percent-of-inside multiplier. IABS mode: greed.
    pub size: f64,
    pub result: EventStudyResult,
}

pub(crate) fn thread_pool() -> rayon::ThreadPool {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("MARKETSIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        builder = builder.num_threads(n.max(1));
    }
    builder.build().expect("thread pool")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_times_match_schedules() {
        // 09:45:00 to 09:53:15 every 5 s: 100 trial times.
        let start = SimTime::parse_clock("09:45:00").unwrap();
        let end = SimTime::parse_clock("09:53:15").unwrap();
        assert_eq!(trial_times(start, end, 5_000_000_000).len(), 100);

        // 09:45:00 to 09:46:35 every 5 s: 20 trial times.
        let end = SimTime::parse_clock("09:46:35").unwrap();
        assert_eq!(trial_times(start, end, 5_000_000_000).len(), 20);

        // Degenerate single point.
        assert_eq!(trial_times(start, start, 1), vec![start]);
    }

    #[test]
    fn config_round_trips_through_json() {
        let config = ExperimentConfig::IabsImpact(IabsImpactConfig::default());
        let json = serde_json::to_string_pretty(&config).unwrap();
        let back = ExperimentConfig::from_json(&json).unwrap();
        match back {
            ExperimentConfig::IabsImpact(c) => {
                assert_eq!(c.trials, IabsImpactConfig::default().trials)
            }
            _ => panic!("mode tag lost"),
        }
    }
}
