//! Synthetic LOBSTER stream generator.
//!
//! Produces a statistically plausible order stream (Poisson arrivals of
//! limit submissions, cancellations and executions around a wandering mid)
//! for testing and experiments, standing in for proprietary historical data.
//!
//! The generator drives a real [`OrderBook`] through the same
//! [`apply_event`](super::apply_event) path replay uses, and its opening
//! book carries the ids that [`reconstruct_opening_book`] re-derives, so a
//! generated stream replays back into bit-identical book states.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp};

use crate::kernel::{AgentId, SimTime};
use crate::orderbook::{L2Snapshot, OrderBook, Side};

use super::{
    apply_event, reconstruct_opening_book, IdAllocator, LobsterEvent, LobsterEventType,
};

/// Arrival rates for each event class, in events per second of stream time.
///
/// Defaults reproduce the per-hour event counts of a liquid-stock opening
/// hour: about 41.5k new limits, 38.8k cancellations and 6.3k executions.
#[derive(Debug, Clone)]
pub struct StreamRates {
    pub new_limits_per_sec: f64,
    pub cancels_per_sec: f64,
    pub executions_per_sec: f64,
    pub hidden_per_sec: f64,
}

impl Default for StreamRates {
    fn default() -> Self {
        StreamRates {
            new_limits_per_sec: 41_555.0 / 3600.0,
            cancels_per_sec: 38_791.0 / 3600.0,
            executions_per_sec: 1.6,
            hidden_per_sec: 0.14,
        }
    }
}

impl StreamRates {
    fn total(&self) -> f64 {
        self.new_limits_per_sec + self.cancels_per_sec + self.executions_per_sec
            + self.hidden_per_sec
    }
}

#[derive(Debug, Clone)]
pub struct GeneratorConfig {
    /// Stream start (market open). Defaults to 09:30:00.
    pub start: SimTime,
    pub duration_s: f64,
    pub rates: StreamRates,
    pub initial_mid: i64,
    pub tick: i64,
    pub opening_levels_per_side: usize,
    /// First id used for in-stream orders; opening-book ids count up from 1,
    /// so this must exceed twice the opening level count.
    pub first_stream_id: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            start: SimTime::from_secs(9 * 3600 + 30 * 60),
            duration_s: 600.0,
            rates: StreamRates::default(),
            initial_mid: 100_000,
            tick: 100,
            opening_levels_per_side: 15,
            first_stream_id: 1_000_000,
        }
    }
}

/// A generated stream: the book state before the first event, plus the
/// events themselves.
#[derive(Debug, Clone)]
pub struct SyntheticStream {
    pub opening: L2Snapshot,
    pub events: Vec<LobsterEvent>,
}

/// Deterministic set of live order ids with O(1) insert/remove/sample.
#[derive(Default)]
struct LiveSet {
    ids: Vec<u64>,
    pos: HashMap<u64, usize>,
}

impl LiveSet {
    fn insert(&mut self, id: u64) {
        self.pos.insert(id, self.ids.len());
        self.ids.push(id);
    }

    fn remove(&mut self, id: u64) {
        if let Some(i) = self.pos.remove(&id) {
            let last = self.ids.pop().expect("non-empty");
            if i < self.ids.len() {
                self.ids[i] = last;
                self.pos.insert(last, i);
            }
        }
    }

    fn sample(&self, rng: &mut ChaCha12Rng) -> Option<u64> {
        if self.ids.is_empty() {
            None
        } else {
            Some(self.ids[rng.gen_range(0..self.ids.len())])
        }
    }

    fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Generate a synthetic stream with default book geometry.
pub fn generate_synthetic_stream(
    seed: u64,
    duration_s: f64,
    rates: StreamRates,
) -> SyntheticStream {
    generate(
        seed,
        &GeneratorConfig {
            duration_s,
            rates,
            ..GeneratorConfig::default()
        },
    )
}

pub fn generate(seed: u64, config: &GeneratorConfig) -> SyntheticStream {
    assert!(config.rates.total() > 0.0, "rates must be positive");
    assert!(
        config.first_stream_id > 2 * config.opening_levels_per_side as u64,
        "stream ids must not collide with opening-book ids"
    );
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut book = OrderBook::new();
    let mut live = LiveSet::default();
    let owner = AgentId(u64::MAX);

    // Opening book: a ladder of one order per level either side of the mid.
    // Building it through reconstruct_opening_book pins the id assignment
    // to the one replay will re-derive.
    let n = config.opening_levels_per_side;
    let mut asks = Vec::with_capacity(n);
    let mut bids = Vec::with_capacity(n);
    for k in 0..n {
        let depth_bonus = 10 * k as u64;
        asks.push((
            config.initial_mid + config.tick * (1 + k as i64),
            50 + rng.gen_range(0..=100) + depth_bonus,
        ));
        bids.push((
            config.initial_mid - config.tick * (1 + k as i64),
            50 + rng.gen_range(0..=100) + depth_bonus,
        ));
    }
    let opening = L2Snapshot { asks, bids };
    let mut ids = IdAllocator::starting_at(1);
    let opening_orders = reconstruct_opening_book(&opening, &mut ids, config.start, owner)
        .expect("generated opening book is uncrossed");
    for order in opening_orders {
        live.insert(order.id);
        book.submit_limit(order).expect("fresh ids");
    }

    let mut events = Vec::new();
    let mut next_id = config.first_stream_id;
    let gap = Exp::new(config.rates.total()).expect("positive rate");
    let end = config.start + (config.duration_s * 1e9) as u64;
    let mut t_ns = config.start.nanos() as f64;

    loop {
        t_ns += gap.sample(&mut rng) * 1e9;
        // Strictly after the opening snapshot's instant.
        let time = SimTime::from_nanos((t_ns.round() as u64).max(config.start.nanos() + 1));
        if time > end {
            break;
        }

        // Keep both sides quoted: replenish a thin side before anything else.
        let thin_side = [Side::Sell, Side::Buy]
            .into_iter()
            .find(|s| book.level_count(*s) < 4);
        let event = if let Some(side) = thin_side {
            new_limit(&mut rng, &book, config, &mut next_id, time, side)
        } else {
            let r = &config.rates;
            let pick = rng.gen_range(0.0..config.rates.total());
            if pick < r.new_limits_per_sec {
                let side = if rng.gen_bool(0.5) { Side::Buy } else { Side::Sell };
                new_limit(&mut rng, &book, config, &mut next_id, time, side)
            } else if pick < r.new_limits_per_sec + r.cancels_per_sec {
                match cancellation(&mut rng, &book, &live, time) {
                    Some(ev) => ev,
                    None => {
                        let side = if rng.gen_bool(0.5) { Side::Buy } else { Side::Sell };
                        new_limit(&mut rng, &book, config, &mut next_id, time, side)
                    }
                }
            } else if pick < r.new_limits_per_sec + r.cancels_per_sec + r.executions_per_sec {
                match execution(&mut rng, &book, time) {
                    Some(ev) => ev,
                    None => {
                        let side = if rng.gen_bool(0.5) { Side::Buy } else { Side::Sell };
                        new_limit(&mut rng, &book, config, &mut next_id, time, side)
                    }
                }
            } else {
                hidden(&mut rng, &book, config, time)
            }
        };

        match event.event_type {
            LobsterEventType::Submission => live.insert(event.order_id),
            LobsterEventType::Deletion => live.remove(event.order_id),
            LobsterEventType::PartialCancellation | LobsterEventType::VisibleExecution => {
                if book.open_quantity(event.order_id) == Some(event.size) {
                    live.remove(event.order_id);
                }
            }
            _ => {}
        }
        let affected = apply_event(&mut book, &event, owner);
        debug_assert!(
            matches!(
                event.event_type,
                LobsterEventType::HiddenExecution
                    | LobsterEventType::Cross
                    | LobsterEventType::TradingHalt
            ) || affected > 0,
            "generated event must affect the book"
        );
        events.push(event);
    }

    SyntheticStream { opening, events }
}

fn new_limit(
    rng: &mut ChaCha12Rng,
    book: &OrderBook,
    config: &GeneratorConfig,
    next_id: &mut u64,
    time: SimTime,
    side: Side,
) -> LobsterEvent {
    let tick = config.tick;
    let price = match (side, book.inside(side)) {
        (Side::Sell, Some((best_ask, _))) => {
            let improving = rng.gen_bool(0.2);
            let improved = best_ask - tick;
            if improving && book.best_bid().map_or(true, |b| improved > b) {
                improved
            } else {
                best_ask + offset_ticks(rng) * tick
            }
        }
        (Side::Buy, Some((best_bid, _))) => {
            let improving = rng.gen_bool(0.2);
            let improved = best_bid + tick;
            if improving && book.best_ask().map_or(true, |a| improved < a) {
                improved
            } else {
                best_bid - offset_ticks(rng) * tick
            }
        }
        // Side is empty: seed it next to the opposite quote, or around the
        // configured mid if the whole book is gone.
        (Side::Sell, None) => book
            .best_bid()
            .map_or(config.initial_mid + tick, |b| b + 2 * tick),
        (Side::Buy, None) => book
            .best_ask()
            .map_or(config.initial_mid - tick, |a| a - 2 * tick),
    };
    let id = *next_id;
    *next_id += 1;
    LobsterEvent {
        time,
        event_type: LobsterEventType::Submission,
        order_id: id,
        size: 10 * rng.gen_range(1..=20),
        price: price.max(tick),
        direction: if side == Side::Buy { 1 } else { -1 },
    }
}

fn offset_ticks(rng: &mut ChaCha12Rng) -> i64 {
    // Concentrated at the inside, tailing off over ~8 ticks.
    let sample: f64 = Exp::new(0.45).expect("rate").sample(rng);
    (sample.floor() as i64).min(8)
}

fn cancellation(
    rng: &mut ChaCha12Rng,
    book: &OrderBook,
    live: &LiveSet,
    time: SimTime,
) -> Option<LobsterEvent> {
    let id = live.sample(rng)?;
    let order = book.resting_order(id)?;
    let open = order.quantity;
    let partial = open > 1 && rng.gen_bool(0.35);
    let (event_type, size) = if partial {
        (
            LobsterEventType::PartialCancellation,
            rng.gen_range(1..open),
        )
    } else {
        (LobsterEventType::Deletion, open)
    };
    Some(LobsterEvent {
        time,
        event_type,
        order_id: id,
        size,
        price: order.price,
        direction: if order.side == Side::Buy { 1 } else { -1 },
    })
}

fn execution(rng: &mut ChaCha12Rng, book: &OrderBook, time: SimTime) -> Option<LobsterEvent> {
    let side = if rng.gen_bool(0.5) { Side::Buy } else { Side::Sell };
    let maker = book
        .head_of_best(side)
        .or_else(|| book.head_of_best(side.opposite()))?;
    let size = rng.gen_range(10..=150).min(maker.quantity);
    Some(LobsterEvent {
        time,
        event_type: LobsterEventType::VisibleExecution,
        order_id: maker.id,
        size,
        price: maker.price,
        direction: if maker.side == Side::Buy { 1 } else { -1 },
    })
}

fn hidden(
    rng: &mut ChaCha12Rng,
    book: &OrderBook,
    config: &GeneratorConfig,
    time: SimTime,
) -> LobsterEvent {
    let price = book
        .mid_price()
        .and_then(|m| m.whole_units())
        .unwrap_or(config.initial_mid);
    LobsterEvent {
        time,
        event_type: LobsterEventType::HiddenExecution,
        order_id: 0,
        size: rng.gen_range(1..=100),
        price,
        direction: if rng.gen_bool(0.5) { 1 } else { -1 },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_identical_stream() {
        let a = generate_synthetic_stream(42, 30.0, StreamRates::default());
        let b = generate_synthetic_stream(42, 30.0, StreamRates::default());
        assert_eq!(a.opening, b.opening);
        assert_eq!(a.events, b.events);
        let c = generate_synthetic_stream(43, 30.0, StreamRates::default());
        assert_ne!(a.events, c.events);
    }

    #[test]
    fn submission_count_near_poisson_expectation() {
        // One simulated hour at the default (per-hour historical) rates.
        let rates = StreamRates::default();
        let expected = rates.new_limits_per_sec * 3600.0;
        let stream = generate_synthetic_stream(7, 3600.0, rates);
        let submissions = stream
            .events
            .iter()
            .filter(|e| e.event_type == LobsterEventType::Submission)
            .count() as f64;
        let rel = (submissions - expected).abs() / expected;
        assert!(
            rel < 0.10,
            "submissions {submissions} not within 10% of {expected}"
        );
    }

    #[test]
    fn stream_replays_cleanly() {
        let stream = generate_synthetic_stream(5, 60.0, StreamRates::default());
        let mut ids = IdAllocator::starting_at(1);
        let orders = reconstruct_opening_book(
            &stream.opening,
            &mut ids,
            SimTime::ZERO,
            AgentId(0),
        )
        .unwrap();
        let mut book = OrderBook::new();
        for o in orders {
            book.submit_limit(o).unwrap();
        }
        for ev in &stream.events {
            apply_event(&mut book, ev, AgentId(0));
            book.assert_invariants();
        }
        // Ends with a live two-sided market.
        assert!(book.mid_price().is_some());
    }

    #[test]
    fn events_are_time_ordered() {
        let stream = generate_synthetic_stream(11, 45.0, StreamRates::default());
        assert!(stream.events.windows(2).all(|w| w[0].time <= w[1].time));
        assert!(!stream.events.is_empty());
    }
}
