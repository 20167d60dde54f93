//! Backtest market-impact study over a replayed order stream.
//!
//! One baseline simulation replays the stream untouched and is sampled at
//! the configured interval. Then, for every (side, size multiplier, trial
//! time), a fresh simulation adds an experimental agent that places a single
//! market order sized as a multiple of the inside-quote size observed
//! immediately before submission. Each trial window is normalized by the
//! baseline and the trials aggregate into one curve per (side, size).

use std::any::Any;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eventstudy::{
    aggregate, extract_window, normalize_baseline, SampledSeries, WindowedSeries,
};
use crate::exchange::ExchangeAgent;
use crate::kernel::{
    Agent, AgentError, AgentId, Context, KernelConfig, Message, Payload, SimTime, Simulation,
};
use crate::orderbook::Side;
use crate::replay::{MarketReplayAgent, ReplayConfig, ReplayData};

use super::{clock_time, thread_pool, trial_times, ExperimentError, ImpactCurve, SideChoice};

pub const EXCHANGE_ID: AgentId = AgentId(0);
pub const REPLAY_ID: AgentId = AgentId(1);
pub const EXPERIMENTAL_ID: AgentId = AgentId(2);

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialSchedule {
    #[serde(with = "clock_time")]
    pub start: SimTime,
    #[serde(with = "clock_time")]
    pub end: SimTime,
    pub interval_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleWindow {
    pub pre_s: f64,
    pub post_s: f64,
    pub sample_interval_ms: u64,
}

impl Default for SampleWindow {
    fn default() -> Self {
        SampleWindow {
            pre_s: 10.0,
            post_s: 10.0,
            sample_interval_ms: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayImpactConfig {
    pub message_file: PathBuf,
    pub orderbook_file: PathBuf,
    #[serde(with = "clock_time")]
    pub market_open: SimTime,
    #[serde(with = "clock_time")]
    pub market_close: SimTime,
    pub schedule: TrialSchedule,
    /// Percent-of-inside multipliers, e.g. 2.0 for 200% of the inside size.
    pub sizes: Vec<f64>,
    pub sides: SideChoice,
    pub base_seed: u64,
    #[serde(default)]
    pub window: SampleWindow,
    pub output_dir: PathBuf,
}

/// The experimental agent of the replay study: at its trial time it reads
/// the inside quote and submits one market order for
/// `ceil(multiplier * inside size)`.
pub struct SizedOrderAgent {
    id: AgentId,
    exchange: AgentId,
    trial_time: SimTime,
    side: Side,
    multiplier: f64,
    triggered: bool,
    pub placed_quantity: Option<u64>,
    pub filled_quantity: u64,
}

impl SizedOrderAgent {
    pub fn new(
        id: AgentId,
        exchange: AgentId,
        trial_time: SimTime,
        side: Side,
        multiplier: f64,
    ) -> Self {
        SizedOrderAgent {
            id,
            exchange,
            trial_time,
            side,
            multiplier,
            triggered: false,
            placed_quantity: None,
            filled_quantity: 0,
        }
    }
}

impl Agent for SizedOrderAgent {
    fn id(&self) -> AgentId {
        self.id
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, msg: &Message) -> Result<(), AgentError> {
        match &msg.payload {
            Payload::Wakeup => {
                if !self.triggered && ctx.now() < self.trial_time {
                    ctx.wakeup_at(self.trial_time);
                } else if !self.triggered {
                    self.triggered = true;
                    ctx.send(self.exchange, Payload::QuerySpread);
                }
                Ok(())
            }
            Payload::SpreadReply { bid, ask } => {
                let inside = match self.side {
                    Side::Buy => ask,
                    Side::Sell => bid,
                };
                let Some((_, size)) = inside else {
                    log::info!("experimental agent: opposite side empty, no order");
                    return Ok(());
                };
                let quantity = (self.multiplier * *size as f64).ceil() as u64;
                if quantity == 0 {
                    return Ok(());
                }
                self.placed_quantity = Some(quantity);
                ctx.send(
                    self.exchange,
                    Payload::MarketOrderSubmit {
                        order_id: self.id.0 << 24,
                        side: self.side,
                        quantity,
                    },
                );
                Ok(())
            }
            Payload::OrderAccepted { .. } | Payload::OrderCancelled { .. } => Ok(()),
            Payload::OrderExecuted { quantity, .. } => {
                self.filled_quantity += quantity;
                Ok(())
            }
            other => Err(AgentError::new(format!(
                "experimental agent cannot handle {}",
                other.kind()
            ))),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}

pub struct ReplayImpactOutcome {
    pub curves: Vec<ImpactCurve>,
    pub baseline: SampledSeries,
    /// (time, price, volume) rows for the price-level volume chart,
    /// captured from the baseline run each second.
    pub price_level_volume: Vec<(SimTime, i64, u64)>,
}

fn run_one(
    data: &ReplayData,
    config: &ReplayImpactConfig,
    kernel_seed: u64,
    experimental: Option<SizedOrderAgent>,
    with_depth_sampler: bool,
) -> Result<(Vec<(SimTime, f64)>, Option<Vec<(SimTime, i64, u64)>>), ExperimentError> {
    let kcfg = KernelConfig::new(config.market_open, config.market_close, kernel_seed);
    let mut sim = Simulation::new(kcfg);
    let mut exchange = ExchangeAgent::new(EXCHANGE_ID);
    if with_depth_sampler {
        exchange = exchange.with_depth_sampler(config.market_open, 1_000_000_000, 10);
    }
    sim.register(Box::new(exchange))?;
    sim.register(Box::new(MarketReplayAgent::new(
        REPLAY_ID,
        EXCHANGE_ID,
        data.clone(),
        config.market_open,
    )?))?;
    if let Some(agent) = experimental {
        sim.register(Box::new(agent))?;
    }
    sim.run()?;
    let exchange = sim
        .agent_mut::<ExchangeAgent>(EXCHANGE_ID)
        .expect("exchange registered");
    exchange.finish_depth_sampling(config.market_close);
    let mids: Vec<(SimTime, f64)> = exchange
        .mid_changes()
        .iter()
        .map(|(t, half)| (*t, *half as f64 / 2.0))
        .collect();
    let depth_rows = exchange.depth_sampler().map(|s| {
        s.rows
            .iter()
            .flat_map(|(t, snap)| {
                let t = *t;
                snap.asks
                    .iter()
                    .chain(snap.bids.iter())
                    .filter(|(_, v)| *v > 0)
                    .map(move |(p, v)| (t, *p, *v))
                    .collect::<Vec<_>>()
            })
            .collect()
    });
    Ok((mids, depth_rows))
}

pub fn run_replay_impact(
    config: &ReplayImpactConfig,
) -> Result<ReplayImpactOutcome, ExperimentError> {
    if config.sizes.is_empty() {
        return Err(ExperimentError::BadConfig("sizes must be non-empty".into()));
    }
    let replay_config = ReplayConfig {
        message_file: config.message_file.clone(),
        orderbook_file: config.orderbook_file.clone(),
        market_open: config.market_open,
        market_close: config.market_close,
    };
    let data = ReplayData::load(&replay_config)?;
    run_replay_impact_with_data(config, &data)
}

/// Same study against an already-loaded stream (used by tests and examples
/// that generate data in memory).
pub fn run_replay_impact_with_data(
    config: &ReplayImpactConfig,
    data: &ReplayData,
) -> Result<ReplayImpactOutcome, ExperimentError> {
    let interval_ns = config.window.sample_interval_ms * 1_000_000;
    if interval_ns == 0 {
        return Err(ExperimentError::BadConfig(
            "sample interval must be positive".into(),
        ));
    }
    let pre_ns = (config.window.pre_s * 1e9).round() as u64;
    let post_ns = (config.window.post_s * 1e9).round() as u64;
    let trials = trial_times(
        config.schedule.start,
        config.schedule.end,
        (config.schedule.interval_s * 1e9).round() as u64,
    );
    // Every trial window must fit inside the data coverage; fail before any
    // simulation starts.
    for &t in &trials {
        let lo_ok = t.checked_sub(SimTime::from_nanos(pre_ns))
            .is_some_and(|lo| lo >= config.market_open);
        let hi_ok = t + post_ns <= config.market_close;
        if !lo_ok || !hi_ok {
            return Err(ExperimentError::BadConfig(format!(
                "trial at {t} with window -{}s/+{}s falls outside coverage [{} .. {}]",
                config.window.pre_s, config.window.post_s, config.market_open, config.market_close
            )));
        }
    }

    // Baseline: replay only, sampled once and reused by every trial.
    let (baseline_mids, depth_rows) = run_one(data, config, config.base_seed, None, true)?;
    let n_samples = ((config.market_close - config.market_open) / interval_ns) as usize + 1;
    let baseline = SampledSeries::from_changes(
        &baseline_mids,
        config.market_open,
        interval_ns,
        n_samples,
    );

    let sides = config.sides.expand();
    let mut jobs: Vec<(Side, f64, usize, SimTime)> = Vec::new();
    for &side in &sides {
        for &mult in &config.sizes {
            for (k, &t) in trials.iter().enumerate() {
                jobs.push((side, mult, k, t));
            }
        }
    }

    let pool = thread_pool();
    let windows: Result<Vec<(Side, f64, WindowedSeries)>, ExperimentError> = pool.install(|| {
        jobs.par_iter()
            .map(|&(side, mult, k, t)| {
                let agent =
                    SizedOrderAgent::new(EXPERIMENTAL_ID, EXCHANGE_ID, t, side, mult);
                let (mids, _) =
                    run_one(data, config, config.base_seed + k as u64, Some(agent), false)?;
                let series = SampledSeries::from_changes(
                    &mids,
                    config.market_open,
                    interval_ns,
                    n_samples,
                );
                let exp_window = extract_window(&series, t, pre_ns, post_ns)?;
                let base_window = extract_window(&baseline, t, pre_ns, post_ns)?;
                Ok((side, mult, normalize_baseline(&exp_window, &base_window)?))
            })
            .collect()
    });
    let windows = windows?;

    let mut curves = Vec::new();
    for &side in &sides {
        for &mult in &config.sizes {
            let group: Vec<WindowedSeries> = windows
                .iter()
                .filter(|(s, m, _)| *s == side && *m == mult)
                .map(|(_, _, w)| w.clone())
                .collect();
            curves.push(ImpactCurve {
                side,
                size: mult,
                result: aggregate(&group)?,
            });
        }
    }
    Ok(ReplayImpactOutcome {
        curves,
        baseline,
        price_level_volume: depth_rows.unwrap_or_default(),
    })
}
