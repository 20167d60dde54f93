//! Zero-intelligence background traders.
//!
//! A ZI agent arrives at the market as a Poisson process. On each arrival it
//! cancels all outstanding orders, takes a noisy observation of the
//! fundamental, updates its belief, flips a coin for side, and prices a
//! unit-quantity limit order to earn a requested surplus against its
//! valuation (the projected final fundamental plus a private value for the
//! marginal unit). The strategic threshold `eta` trades surplus away for
//! immediate execution at the inside quote.
//!
//! Randomness discipline: every arrival consumes exactly four draws from
//! the agent's own stream (observation noise, side, surplus, next gap), in
//! that order, whether or not an order is ultimately placed. Holdings and
//! quotes can change behavior, but never the stream, so paired runs keep
//! every agent's draw sequence identical.

use std::any::Any;
use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

use crate::kernel::{Agent, AgentError, AgentId, Context, Message, Payload, SimTime};
use crate::oracle::{FundamentalParams, SharedOracle};
use crate::orderbook::Side;

use super::belief::{belief_update, project_final, FundamentalBelief};

/// Strategy parameters of one ZI agent.
#[derive(Debug, Clone)]
pub struct ZiParams {
    /// Requested-surplus extents in price units; R is drawn uniformly from
    /// `[surplus_min, surplus_max]` per arrival.
    pub surplus_min: i64,
    pub surplus_max: i64,
    /// Willingness to trade at the inside quote for at least `eta * R`.
    pub eta: f64,
    pub obs_noise_sq: f64,
    /// Mean arrivals per time unit (Poisson).
    pub arrival_rate: f64,
    /// Maximum absolute holdings.
    pub q_max: i64,
    /// `2 * q_max` non-increasing marginal values, centered on zero
    /// holdings: entry `q_max + h` values acquiring the unit that moves
    /// holdings from `h` to `h + 1`.
    pub private_values: Vec<i64>,
}

impl ZiParams {
    pub fn validate(&self) -> Result<(), String> {
        if !(0 <= self.surplus_min && self.surplus_min <= self.surplus_max) {
            return Err(format!(
                "surplus extents ({}, {}) must satisfy 0 <= min <= max",
                self.surplus_min, self.surplus_max
            ));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(format!("eta {} outside [0, 1]", self.eta));
        }
        if self.arrival_rate <= 0.0 {
            return Err("arrival rate must be positive".into());
        }
        if self.q_max < 1 {
            return Err("q_max must be at least 1".into());
        }
        if self.private_values.len() != 2 * self.q_max as usize {
            return Err(format!(
                "need {} private values, got {}",
                2 * self.q_max,
                self.private_values.len()
            ));
        }
        if self.private_values.windows(2).any(|w| w[0] < w[1]) {
            return Err("private values must be non-increasing".into());
        }
        Ok(())
    }

    /// Marginal private value of buying one unit at current holdings, or
    /// None at the position cap.
    fn buy_increment(&self, holdings: i64) -> Option<i64> {
        if holdings >= self.q_max {
            return None;
        }
        Some(self.private_values[(self.q_max + holdings) as usize])
    }

    /// Marginal private value of the unit sold at current holdings, or None
    /// at the cap.
    fn sell_increment(&self, holdings: i64) -> Option<i64> {
        if holdings <= -self.q_max {
            return None;
        }
        Some(self.private_values[(self.q_max + holdings - 1) as usize])
    }
}

/// Population-level configuration the per-agent parameters are drawn from.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct ZiPopulationConfig {
    pub arrival_rate: f64,
    pub q_max: i64,
    /// Variance of the normal draws behind each private-value vector.
    pub pv_variance: f64,
    /// Per-agent `surplus_min` is uniform over this inclusive range.
    pub surplus_min_range: (i64, i64),
    /// Per-agent `surplus_max` exceeds its `surplus_min` by a uniform draw
    /// from this inclusive range.
    pub surplus_spread_range: (i64, i64),
    /// Eta is picked uniformly from this menu.
    pub etas: Vec<f64>,
    pub obs_noise_sq: f64,
}

impl Default for ZiPopulationConfig {
    fn default() -> Self {
        ZiPopulationConfig {
            arrival_rate: 0.05,
            q_max: 10,
            pv_variance: 5e4,
            surplus_min_range: (0, 50),
            surplus_spread_range: (50, 250),
            etas: vec![0.2, 0.5, 0.8, 1.0],
            obs_noise_sq: 1e6,
        }
    }
}

impl ZiParams {
    /// Draw one agent's parameters from the population config, consuming a
    /// fixed number of draws from the agent's own stream: eta pick, surplus
    /// extents, then the private-value vector.
    pub fn draw(rng: &mut ChaCha12Rng, pop: &ZiPopulationConfig) -> ZiParams {
        let eta = pop.etas[rng.gen_range(0..pop.etas.len())];
        let surplus_min = rng.gen_range(pop.surplus_min_range.0..=pop.surplus_min_range.1);
        let spread = rng.gen_range(pop.surplus_spread_range.0..=pop.surplus_spread_range.1);
        let mut pv: Vec<i64> = (0..2 * pop.q_max as usize)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                (z * pop.pv_variance.sqrt()).round() as i64
            })
            .collect();
        pv.sort_unstable_by(|a, b| b.cmp(a));
        ZiParams {
            surplus_min,
            surplus_max: surplus_min + spread,
            eta,
            obs_noise_sq: pop.obs_noise_sq,
            arrival_rate: pop.arrival_rate,
            q_max: pop.q_max,
            private_values: pv,
        }
    }
}

/// First market arrival offset in time units, uniform on [0, 100).
pub fn first_arrival_offset<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0.0..100.0)
}

/// What an arrival decided before the spread reply comes back.
#[derive(Debug, Clone, Copy)]
struct PlannedAction {
    side: Side,
    requested_surplus: i64,
}

#[derive(Debug, Clone, Copy)]
struct OpenOrder {
    side: Side,
    resting: u64,
}

pub struct ZiAgent {
    id: AgentId,
    exchange: AgentId,
    params: ZiParams,
    fparams: FundamentalParams,
    oracle: SharedOracle,
    rng: ChaCha12Rng,
    belief: FundamentalBelief,
    holdings: i64,
    /// Orders submitted and not yet fully gone, keyed by order id.
    orders: BTreeMap<u64, OpenOrder>,
    next_order_seq: u64,
    planned: Option<PlannedAction>,
    arrival_clock_units: f64,
    started: bool,
    pub arrivals: u64,
    pub orders_placed: u64,
    pub quote_takes: u64,
}

impl ZiAgent {
    pub fn new(
        id: AgentId,
        exchange: AgentId,
        params: ZiParams,
        fparams: FundamentalParams,
        oracle: SharedOracle,
        rng: ChaCha12Rng,
    ) -> Result<Self, AgentError> {
        params.validate().map_err(AgentError::new)?;
        let belief = FundamentalBelief::prior(&fparams);
        Ok(ZiAgent {
            id,
            exchange,
            params,
            fparams,
            oracle,
            rng,
            belief,
            holdings: 0,
            orders: BTreeMap::new(),
            next_order_seq: 0,
            planned: None,
            arrival_clock_units: 0.0,
            started: false,
            arrivals: 0,
            orders_placed: 0,
            quote_takes: 0,
        })
    }

    pub fn holdings(&self) -> i64 {
        self.holdings
    }

    pub fn belief(&self) -> &FundamentalBelief {
        &self.belief
    }

    pub fn params(&self) -> &ZiParams {
        &self.params
    }

    fn fresh_order_id(&mut self) -> u64 {
        // Distinct per agent: high bits carry the agent id.
        let id = (self.id.0 << 24) | self.next_order_seq;
        self.next_order_seq += 1;
        id
    }

    fn on_arrival(&mut self, ctx: &mut Context<'_>) -> Result<(), AgentError> {
        self.arrivals += 1;
        let now_units = ctx.now().units();

        // Fixed draw schedule; see module docs.
        let observation = self
            .oracle
            .borrow_mut()
            .observe(
                now_units.min(self.fparams.horizon_units),
                self.params.obs_noise_sq,
                &mut self.rng,
            )
            .map_err(|e| AgentError::new(format!("oracle observation failed: {e}")))?;
        let side = if self.rng.gen_bool(0.5) {
            Side::Buy
        } else {
            Side::Sell
        };
        let requested_surplus = self
            .rng
            .gen_range(self.params.surplus_min..=self.params.surplus_max);
        let gap: f64 = Exp::new(self.params.arrival_rate)
            .expect("positive rate")
            .sample(&mut self.rng);

        let elapsed = now_units.saturating_sub(self.belief.last_update);
        self.belief = belief_update(
            &self.belief,
            observation as f64,
            elapsed,
            self.params.obs_noise_sq,
            &self.fparams,
        );

        // Cancel everything outstanding, then look at the market.
        let open: Vec<u64> = self.orders.keys().copied().collect();
        for order_id in open {
            ctx.send(self.exchange, Payload::CancelOrder { order_id });
        }
        ctx.send(self.exchange, Payload::QuerySpread);
        self.planned = Some(PlannedAction {
            side,
            requested_surplus,
        });

        // Next arrival, quantized to the discrete unit grid.
        self.arrival_clock_units = now_units as f64 + gap;
        let next_unit = (self.arrival_clock_units.round() as u64).max(now_units + 1);
        if next_unit <= self.fparams.horizon_units {
            ctx.wakeup_at(SimTime::from_units(next_unit));
        }
        Ok(())
    }

    fn act_on_quotes(
        &mut self,
        ctx: &mut Context<'_>,
        bid: Option<(i64, u64)>,
        ask: Option<(i64, u64)>,
    ) -> Result<(), AgentError> {
        let Some(plan) = self.planned.take() else {
            return Err(AgentError::new("spread reply without a pending arrival"));
        };
        let now_units = ctx.now().units().min(self.fparams.horizon_units);
        let increment = match plan.side {
            Side::Buy => self.params.buy_increment(self.holdings),
            Side::Sell => self.params.sell_increment(self.holdings),
        };
        // At the position cap in the chosen direction: stand down.
        let Some(increment) = increment else {
            return Ok(());
        };
        let valuation = project_final(&self.belief, now_units, &self.fparams) + increment;
        let eta_threshold = self.params.eta * plan.requested_surplus as f64;

        let price = match plan.side {
            Side::Buy => {
                match ask {
                    // The inside offer already clears the discounted surplus
                    // bar: take it with a marketable limit at the quote.
                    Some((ask_px, _)) if (valuation - ask_px) as f64 >= eta_threshold => {
                        self.quote_takes += 1;
                        ask_px
                    }
                    _ => valuation - plan.requested_surplus,
                }
            }
            Side::Sell => match bid {
                Some((bid_px, _)) if (bid_px - valuation) as f64 >= eta_threshold => {
                    self.quote_takes += 1;
                    bid_px
                }
                _ => valuation + plan.requested_surplus,
            },
        };
        if price <= 0 {
            return Ok(());
        }
        let order_id = self.fresh_order_id();
        self.orders.insert(
            order_id,
            OpenOrder {
                side: plan.side,
                resting: 0,
            },
        );
        self.orders_placed += 1;
        ctx.send(
            self.exchange,
            Payload::LimitOrderSubmit {
                order_id,
                side: plan.side,
                price,
                quantity: 1,
            },
        );
        Ok(())
    }
}

impl Agent for ZiAgent {
    fn id(&self) -> AgentId {
        self.id
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, msg: &Message) -> Result<(), AgentError> {
        match &msg.payload {
            Payload::Wakeup => {
                if !self.started {
                    self.started = true;
                    let offset = first_arrival_offset(&mut self.rng);
                    let unit = offset.round() as u64;
                    self.arrival_clock_units = offset;
                    ctx.wakeup_at(SimTime::from_units(unit).max(ctx.now()));
                    Ok(())
                } else {
                    self.on_arrival(ctx)
                }
            }
            Payload::SpreadReply { bid, ask } => self.act_on_quotes(ctx, *bid, *ask),
            Payload::OrderAccepted {
                order_id,
                rested_quantity,
            } => {
                if *rested_quantity == 0 {
                    self.orders.remove(order_id);
                } else if let Some(o) = self.orders.get_mut(order_id) {
                    o.resting = *rested_quantity;
                }
                Ok(())
            }
            Payload::OrderExecuted {
                order_id, quantity, ..
            } => {
                let Some(order) = self.orders.get_mut(order_id) else {
                    return Err(AgentError::new(format!(
                        "execution for unknown order {order_id}"
                    )));
                };
                match order.side {
                    Side::Buy => self.holdings += *quantity as i64,
                    Side::Sell => self.holdings -= *quantity as i64,
                }
                if order.resting > 0 {
                    order.resting = order.resting.saturating_sub(*quantity);
                    if order.resting == 0 {
                        self.orders.remove(order_id);
                    }
                }
                Ok(())
            }
            Payload::OrderCancelled { order_id, .. } => {
                self.orders.remove(order_id);
                Ok(())
            }
            other => Err(AgentError::new(format!(
                "zi agent cannot handle {}",
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

#[cfg(test)]
mod tests {
    use super::*;

    fn params(eta: f64) -> ZiParams {
        ZiParams {
            surplus_min: 100,
            surplus_max: 100,
            eta,
            obs_noise_sq: 0.0,
            arrival_rate: 0.05,
            q_max: 2,
            private_values: vec![20, 10, -10, -20],
        }
    }

    #[test]
    fn validation_rejects_bad_params() {
        let mut p = params(0.5);
        p.surplus_min = 200;
        assert!(p.validate().is_err());
        let mut p = params(0.5);
        p.private_values = vec![10, 20, -10, -20];
        assert!(p.validate().is_err());
        let mut p = params(0.5);
        p.eta = 1.5;
        assert!(p.validate().is_err());
        assert!(params(1.0).validate().is_ok());
    }

    #[test]
    fn private_value_indexing() {
        let p = params(0.5);
        // Holdings 0: next buy is the +1 unit, next sell is the 0th unit.
        assert_eq!(p.buy_increment(0), Some(-10));
        assert_eq!(p.sell_increment(0), Some(10));
        // Diminishing returns as holdings grow.
        assert_eq!(p.buy_increment(1), Some(-20));
        assert_eq!(p.buy_increment(2), None);
        assert_eq!(p.sell_increment(-1), Some(20));
        assert_eq!(p.sell_increment(-2), None);
    }

    #[test]
    fn population_draws_are_deterministic_and_valid() {
        let pop = ZiPopulationConfig::default();
        let mut a = crate::kernel::agent_stream(5, AgentId(3));
        let mut b = crate::kernel::agent_stream(5, AgentId(3));
        let pa = ZiParams::draw(&mut a, &pop);
        let pb = ZiParams::draw(&mut b, &pop);
        assert_eq!(pa.private_values, pb.private_values);
        assert_eq!(pa.eta, pb.eta);
        assert_eq!(pa.surplus_min, pb.surplus_min);
        assert!(pa.validate().is_ok());
    }

    #[test]
    fn first_arrivals_cover_the_range() {
        let mut rng = crate::kernel::agent_stream(1, AgentId(1));
        let draws: Vec<f64> = (0..1000).map(|_| first_arrival_offset(&mut rng)).collect();
        assert!(draws.iter().all(|d| (0.0..100.0).contains(d)));
        assert!(draws.iter().any(|d| *d < 10.0));
        assert!(draws.iter().any(|d| *d > 90.0));
    }
}
