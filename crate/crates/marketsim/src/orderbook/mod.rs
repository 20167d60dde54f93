//! Limit order book and matching engine for a single instrument.
//!
//! Matching follows price/time priority: an incoming order executes against
//! the opposite side best price first, and within a price level against the
//! earliest-entered resting order. Fills print at the maker's limit price.
//! Cancellations of unknown ids return 0 instead of erroring, which market
//! replay relies on when the experimental strategy has already consumed
//! historical liquidity.

mod types;

pub use types::{
    DepthBand, Fill, L2Snapshot, MidPrice, Order, Side, EMPTY_ASK_PRICE, EMPTY_BID_PRICE,
};

use std::collections::{BTreeMap, HashMap, VecDeque};

use crate::kernel::SimTime;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum BookError {
    #[error("duplicate order id {0}")]
    DuplicateOrderId(u64),
    #[error("limit order must have positive price, got {0}")]
    NonPositivePrice(i64),
    #[error("order must have positive quantity")]
    ZeroQuantity,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum DepthError {
    #[error("depth query against empty {0:?} side")]
    EmptySide(Side),
    #[error("band fraction must be non-negative and finite, got {0}")]
    BadFraction(f64),
}

const BAND_DENOM: i128 = 1_000_000_000;

/// Parts-per-billion numerator for a band fraction; exact integer band
/// arithmetic below this resolution.
fn band_numerator(fraction: f64) -> Result<i128, DepthError> {
    if !fraction.is_finite() || fraction < 0.0 {
        return Err(DepthError::BadFraction(fraction));
    }
    Ok((fraction * BAND_DENOM as f64).round() as i128)
}

/// The outermost price still inside `fraction` of the inside quote:
/// `floor(inside * (1 + f))` when buying through asks,
/// `ceil(inside * (1 - f))` when selling through bids.
pub fn band_edge(inside: i64, side: Side, fraction: f64) -> Result<i64, DepthError> {
    let num = band_numerator(fraction)?;
    let inside = inside as i128;
    let edge = match side {
        Side::Sell => (inside * (BAND_DENOM + num)).div_euclid(BAND_DENOM),
        Side::Buy => {
            let scaled = inside * (BAND_DENOM - num);
            // ceiling division
            (scaled + BAND_DENOM - 1).div_euclid(BAND_DENOM)
        }
    };
    Ok(edge as i64)
}

#[derive(Debug, Default, Clone)]
struct PriceLevel {
    resting: VecDeque<Order>,
}

impl PriceLevel {
    fn volume(&self) -> u64 {
        self.resting.iter().map(|o| o.quantity).sum()
    }
}

/// Price-time priority book: bids matched from the highest price down,
/// asks from the lowest price up, FIFO within a level.
#[derive(Debug, Default, Clone)]
pub struct OrderBook {
    bids: BTreeMap<i64, PriceLevel>,
    asks: BTreeMap<i64, PriceLevel>,
    /// order id -> (side, price) of the resting order.
    index: HashMap<u64, (Side, i64)>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn best_bid(&self) -> Option<i64> {
        self.bids.keys().next_back().copied()
    }

    pub fn best_ask(&self) -> Option<i64> {
        self.asks.keys().next().copied()
    }

    /// Inside quote of one side as `(price, aggregate volume at that price)`.
    pub fn inside(&self, side: Side) -> Option<(i64, u64)> {
        match side {
            Side::Buy => self
                .bids
                .iter()
                .next_back()
                .map(|(p, l)| (*p, l.volume())),
            Side::Sell => self.asks.iter().next().map(|(p, l)| (*p, l.volume())),
        }
    }

    /// Average of best bid and best ask; absent when either side is empty.
    pub fn mid_price(&self) -> Option<MidPrice> {
        Some(MidPrice::from_quotes(self.best_bid()?, self.best_ask()?))
    }

    /// Best ask minus best bid; absent when either side is empty.
    pub fn spread(&self) -> Option<i64> {
        Some(self.best_ask()? - self.best_bid()?)
    }

    pub fn resting_order_count(&self) -> usize {
        self.index.len()
    }

    pub fn resting_volume(&self) -> u64 {
        let vol = |side: &BTreeMap<i64, PriceLevel>| -> u64 {
            side.values().map(PriceLevel::volume).sum()
        };
        vol(&self.bids) + vol(&self.asks)
    }

    /// The order at the front of the best level's queue: the next maker a
    /// marketable order on the opposite side would hit.
    pub fn head_of_best(&self, side: Side) -> Option<&Order> {
        match side {
            Side::Buy => self.bids.values().next_back()?.resting.front(),
            Side::Sell => self.asks.values().next()?.resting.front(),
        }
    }

    /// Number of occupied price levels on one side.
    pub fn level_count(&self, side: Side) -> usize {
        match side {
            Side::Buy => self.bids.len(),
            Side::Sell => self.asks.len(),
        }
    }

    /// Open quantity of a resting order, if present.
    pub fn open_quantity(&self, order_id: u64) -> Option<u64> {
        self.resting_order(order_id).map(|o| o.quantity)
    }

    /// A resting order by id, with its current open quantity.
    pub fn resting_order(&self, order_id: u64) -> Option<&Order> {
        let (side, price) = *self.index.get(&order_id)?;
        self.level(side, price)?
            .resting
            .iter()
            .find(|o| o.id == order_id)
    }

    fn level(&self, side: Side, price: i64) -> Option<&PriceLevel> {
        match side {
            Side::Buy => self.bids.get(&price),
            Side::Sell => self.asks.get(&price),
        }
    }

    /// Submit a limit order: matches while marketable under price/time
    /// priority, then rests any remainder. Returns the fills and the
    /// quantity that entered the book.
    pub fn submit_limit(&mut self, order: Order) -> Result<(Vec<Fill>, u64), BookError> {
        if order.price <= 0 {
            return Err(BookError::NonPositivePrice(order.price));
        }
        if order.quantity == 0 {
            return Err(BookError::ZeroQuantity);
        }
        if self.index.contains_key(&order.id) {
            return Err(BookError::DuplicateOrderId(order.id));
        }
        let mut remaining = order.quantity;
        let fills = self.match_against(
            order.side,
            Some(order.price),
            &mut remaining,
            order.id,
            order.entered_at,
        );
        let rested = remaining;
        if remaining > 0 {
            let book_side = match order.side {
                Side::Buy => &mut self.bids,
                Side::Sell => &mut self.asks,
            };
            self.index.insert(order.id, (order.side, order.price));
            book_side
                .entry(order.price)
                .or_default()
                .resting
                .push_back(Order {
                    quantity: remaining,
                    ..order
                });
        }
        Ok((fills, rested))
    }

    /// Submit a market order: consumes opposite-side levels best-first until
    /// filled or the side is exhausted. Market orders never rest; the
    /// unfilled remainder is reported back and discarded.
    pub fn submit_market(
        &mut self,
        side: Side,
        quantity: u64,
        taker_order_id: u64,
        at: SimTime,
    ) -> (Vec<Fill>, u64) {
        let mut remaining = quantity;
        let fills = self.match_against(side, None, &mut remaining, taker_order_id, at);
        (fills, remaining)
    }

    fn match_against(
        &mut self,
        taker_side: Side,
        limit: Option<i64>,
        remaining: &mut u64,
        taker_order_id: u64,
        at: SimTime,
    ) -> Vec<Fill> {
        let mut fills = Vec::new();
        while *remaining > 0 {
            let opposite = match taker_side {
                Side::Buy => &mut self.asks,
                Side::Sell => &mut self.bids,
            };
            let best_price = match taker_side {
                Side::Buy => opposite.keys().next().copied(),
                Side::Sell => opposite.keys().next_back().copied(),
            };
            let Some(price) = best_price else { break };
            let crosses = match (taker_side, limit) {
                (_, None) => true,
                (Side::Buy, Some(l)) => price <= l,
                (Side::Sell, Some(l)) => price >= l,
            };
            if !crosses {
                break;
            }
            let level = opposite.get_mut(&price).expect("best level exists");
            while *remaining > 0 {
                let Some(maker) = level.resting.front_mut() else {
                    break;
                };
                let qty = (*remaining).min(maker.quantity);
                maker.quantity -= qty;
                *remaining -= qty;
                fills.push(Fill {
                    taker_order_id,
                    maker_order_id: maker.id,
                    maker_owner: maker.owner,
                    price,
                    quantity: qty,
                    at,
                });
                if maker.quantity == 0 {
                    let gone = level.resting.pop_front().expect("front exists");
                    self.index.remove(&gone.id);
                }
            }
            if level.resting.is_empty() {
                opposite.remove(&price);
            }
        }
        fills
    }

    /// Remove a resting order entirely, returning its open quantity.
    /// Unknown or already-gone ids return 0.
    pub fn cancel(&mut self, order_id: u64) -> u64 {
        let Some((side, price)) = self.index.remove(&order_id) else {
            return 0;
        };
        let book_side = match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        };
        let level = book_side.get_mut(&price).expect("indexed level exists");
        let pos = level
            .resting
            .iter()
            .position(|o| o.id == order_id)
            .expect("indexed order exists");
        let removed = level.resting.remove(pos).expect("position valid");
        if level.resting.is_empty() {
            book_side.remove(&price);
        }
        removed.quantity
    }

    /// Reduce a resting order by up to `quantity` without losing its queue
    /// position; returns the amount actually cancelled (0 for unknown ids).
    pub fn partial_cancel(&mut self, order_id: u64, quantity: u64) -> u64 {
        let Some(&(side, price)) = self.index.get(&order_id) else {
            return 0;
        };
        let book_side = match side {
            Side::Buy => &mut self.bids,
            Side::Sell => &mut self.asks,
        };
        let level = book_side.get_mut(&price).expect("indexed level exists");
        let pos = level
            .resting
            .iter()
            .position(|o| o.id == order_id)
            .expect("indexed order exists");
        let open = level.resting[pos].quantity;
        let cancelled = open.min(quantity);
        if cancelled == open {
            level.resting.remove(pos);
            self.index.remove(&order_id);
            if level.resting.is_empty() {
                book_side.remove(&price);
            }
        } else {
            level.resting[pos].quantity -= cancelled;
        }
        cancelled
    }

    /// Aggregate volume at every level priced within `fraction` of the
    /// inside quote (band boundary inclusive). The queried side must be
    /// non-empty; that is a distinct condition from zero volume.
    pub fn depth_within(&self, side: Side, fraction: f64) -> Result<DepthBand, DepthError> {
        let num = band_numerator(fraction)?;
        let (inside, levels): (i64, Vec<(i64, u64)>) = match side {
            Side::Sell => {
                let inside = self.best_ask().ok_or(DepthError::EmptySide(Side::Sell))?;
                let bound = inside as i128 * (BAND_DENOM + num);
                (
                    inside,
                    self.asks
                        .iter()
                        .take_while(|(p, _)| (**p as i128) * BAND_DENOM <= bound)
                        .map(|(p, l)| (*p, l.volume()))
                        .collect(),
                )
            }
            Side::Buy => {
                let inside = self.best_bid().ok_or(DepthError::EmptySide(Side::Buy))?;
                let bound = inside as i128 * (BAND_DENOM - num);
                (
                    inside,
                    self.bids
                        .iter()
                        .rev()
                        .take_while(|(p, _)| (**p as i128) * BAND_DENOM >= bound)
                        .map(|(p, l)| (*p, l.volume()))
                        .collect(),
                )
            }
        };
        let total_volume = levels.iter().map(|(_, v)| v).sum();
        Ok(DepthBand {
            inside,
            levels,
            total_volume,
        })
    }

    /// Top `n_levels` aggregate view per side, padded with the LOBSTER
    /// sentinels where the book is shallower.
    pub fn snapshot(&self, n_levels: usize) -> L2Snapshot {
        assert!(n_levels >= 1, "snapshot needs at least one level");
        let mut asks: Vec<(i64, u64)> = self
            .asks
            .iter()
            .take(n_levels)
            .map(|(p, l)| (*p, l.volume()))
            .collect();
        let mut bids: Vec<(i64, u64)> = self
            .bids
            .iter()
            .rev()
            .take(n_levels)
            .map(|(p, l)| (*p, l.volume()))
            .collect();
        asks.resize(n_levels, (EMPTY_ASK_PRICE, 0));
        bids.resize(n_levels, (EMPTY_BID_PRICE, 0));
        L2Snapshot { asks, bids }
    }

    /// Walk all resting orders, bids from best to worst then asks likewise.
    /// Test support; iteration order is deterministic.
    pub fn iter_resting(&self) -> impl Iterator<Item = &Order> {
        self.bids
            .values()
            .rev()
            .chain(self.asks.values())
            .flat_map(|l| l.resting.iter())
    }

    #[cfg(debug_assertions)]
    pub fn assert_invariants(&self) {
        if let (Some(b), Some(a)) = (self.best_bid(), self.best_ask()) {
            assert!(b < a, "crossed book at rest: bid {b} >= ask {a}");
        }
        let resting: usize = self
            .bids
            .values()
            .chain(self.asks.values())
            .map(|l| l.resting.len())
            .sum();
        assert_eq!(resting, self.index.len(), "index out of sync");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::AgentId;

    fn order(id: u64, side: Side, price: i64, qty: u64, t: u64) -> Order {
        Order {
            id,
            side,
            price,
            quantity: qty,
            entered_at: SimTime::from_nanos(t),
            owner: AgentId(0),
        }
    }

    #[test]
    fn limit_rests_on_empty_book() {
        let mut book = OrderBook::new();
        let (fills, rested) = book
            .submit_limit(order(1, Side::Buy, 100_000, 100, 0))
            .unwrap();
        assert!(fills.is_empty());
        assert_eq!(rested, 100);
        assert_eq!(book.best_bid(), Some(100_000));
        book.assert_invariants();
    }

    #[test]
    fn fifo_within_level() {
        // asks: 100@10.01 (t1), 50@10.01 (t2); buy 120@10.01 fills 100 then 20.
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Sell, 100_100, 100, 1)).unwrap();
        book.submit_limit(order(2, Side::Sell, 100_100, 50, 2)).unwrap();
        let (fills, rested) = book
            .submit_limit(order(3, Side::Buy, 100_100, 120, 3))
            .unwrap();
        assert_eq!(rested, 0);
        assert_eq!(fills.len(), 2);
        assert_eq!((fills[0].maker_order_id, fills[0].quantity), (1, 100));
        assert_eq!((fills[1].maker_order_id, fills[1].quantity), (2, 20));
        assert!(fills.iter().all(|f| f.price == 100_100));
        assert_eq!(book.open_quantity(2), Some(30));
    }

    #[test]
    fn partial_fill_rests_remainder_at_limit() {
        // asks: 50@10.01, 50@10.02; buy 80@10.01 fills 50, rests 30@10.01.
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Sell, 100_100, 50, 1)).unwrap();
        book.submit_limit(order(2, Side::Sell, 100_200, 50, 2)).unwrap();
        let (fills, rested) = book
            .submit_limit(order(3, Side::Buy, 100_100, 80, 3))
            .unwrap();
        assert_eq!(fills.len(), 1);
        assert_eq!(fills[0].quantity, 50);
        assert_eq!(fills[0].price, 100_100);
        assert_eq!(rested, 30);
        assert_eq!(book.best_bid(), Some(100_100));
        assert_eq!(book.best_ask(), Some(100_200));
        book.assert_invariants();
    }

    #[test]
    fn duplicate_id_rejected() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Buy, 100_000, 10, 0)).unwrap();
        let err = book
            .submit_limit(order(1, Side::Buy, 99_000, 10, 1))
            .unwrap_err();
        assert_eq!(err, BookError::DuplicateOrderId(1));
    }

    #[test]
    fn market_order_walks_levels_and_discards_rest() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Sell, 100_100, 100, 1)).unwrap();
        book.submit_limit(order(2, Side::Sell, 100_200, 200, 2)).unwrap();
        let (fills, unfilled) =
            book.submit_market(Side::Buy, 150, 99, SimTime::from_nanos(3));
        assert_eq!(unfilled, 0);
        assert_eq!(
            fills
                .iter()
                .map(|f| (f.price, f.quantity))
                .collect::<Vec<_>>(),
            vec![(100_100, 100), (100_200, 50)]
        );
        // Market buy for everything left drains the side.
        let (_, unfilled) = book.submit_market(Side::Buy, 150, 98, SimTime::from_nanos(4));
        assert_eq!(unfilled, 0);
        assert_eq!(book.best_ask(), None);
        // Market buy on an empty side: zero fills, all unfilled.
        let (fills, unfilled) = book.submit_market(Side::Buy, 10, 97, SimTime::from_nanos(5));
        assert!(fills.is_empty());
        assert_eq!(unfilled, 10);
    }

    #[test]
    fn cancel_semantics() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Buy, 100_000, 70, 0)).unwrap();
        assert_eq!(book.cancel(1), 70);
        assert_eq!(book.cancel(1), 0);
        assert_eq!(book.cancel(424242), 0);
        assert_eq!(book.best_bid(), None);
    }

    #[test]
    fn cancel_after_consumed_by_market_returns_zero() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Sell, 100_100, 50, 0)).unwrap();
        book.submit_market(Side::Buy, 50, 99, SimTime::from_nanos(1));
        assert_eq!(book.cancel(1), 0);
    }

    #[test]
    fn partial_cancel_keeps_queue_position() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Sell, 100_100, 100, 0)).unwrap();
        book.submit_limit(order(2, Side::Sell, 100_100, 40, 1)).unwrap();
        assert_eq!(book.partial_cancel(1, 30), 30);
        assert_eq!(book.open_quantity(1), Some(70));
        // Order 1 still fills first at its level.
        let (fills, _) = book.submit_market(Side::Buy, 80, 99, SimTime::from_nanos(2));
        assert_eq!(fills[0].maker_order_id, 1);
        assert_eq!(fills[0].quantity, 70);
        assert_eq!(fills[1].maker_order_id, 2);
    }

    #[test]
    fn partial_cancel_clamps_and_tolerates_unknown() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Buy, 100_000, 100, 0)).unwrap();
        assert_eq!(book.partial_cancel(1, 150), 100);
        assert_eq!(book.open_quantity(1), None);
        assert_eq!(book.partial_cancel(7, 10), 0);
    }

    #[test]
    fn quote_arithmetic() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Buy, 100_000, 10, 0)).unwrap();
        book.submit_limit(order(2, Side::Sell, 100_200, 10, 1)).unwrap();
        let mid = book.mid_price().unwrap();
        assert_eq!(mid.whole_units(), Some(100_100));
        assert_eq!(book.spread(), Some(200));
        // Half-unit mid.
        book.cancel(2);
        book.submit_limit(order(3, Side::Sell, 100_100, 10, 2)).unwrap();
        let mid = book.mid_price().unwrap();
        assert_eq!(mid.half_units(), 200_100);
        assert_eq!(mid.whole_units(), Some(100_050));
        assert!((mid.as_f64() - 100_050.0).abs() < f64::EPSILON);
    }

    #[test]
    fn one_sided_book_has_no_mid() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Buy, 100_000, 10, 0)).unwrap();
        assert!(book.mid_price().is_none());
        assert!(book.spread().is_none());
    }

    #[test]
    fn odd_sum_mid_is_half_unit() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Buy, 100_000, 10, 0)).unwrap();
        book.submit_limit(order(2, Side::Sell, 100_101, 10, 1)).unwrap();
        let mid = book.mid_price().unwrap();
        assert_eq!(mid.whole_units(), None);
        assert!((mid.as_f64() - 100_050.5).abs() < f64::EPSILON);
    }

    #[test]
    fn depth_band_boundary_inclusive() {
        // asks 100@10.00, 50@10.05, 75@10.20; 1% band reaches 10.10 inclusive.
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Sell, 100_000, 100, 0)).unwrap();
        book.submit_limit(order(2, Side::Sell, 100_500, 50, 1)).unwrap();
        book.submit_limit(order(3, Side::Sell, 102_000, 75, 2)).unwrap();
        let band = book.depth_within(Side::Sell, 0.01).unwrap();
        assert_eq!(band.levels, vec![(100_000, 100), (100_500, 50)]);
        assert_eq!(band.total_volume, 150);
        // A level exactly on the boundary is included.
        book.submit_limit(order(4, Side::Sell, 101_000, 25, 3)).unwrap();
        let band = book.depth_within(Side::Sell, 0.01).unwrap();
        assert_eq!(band.total_volume, 175);
    }

    #[test]
    fn depth_band_fraction_zero_is_inside_level() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Sell, 100_000, 100, 0)).unwrap();
        book.submit_limit(order(2, Side::Sell, 100_100, 50, 1)).unwrap();
        let band = book.depth_within(Side::Sell, 0.0).unwrap();
        assert_eq!(band.levels, vec![(100_000, 100)]);
    }

    #[test]
    fn depth_band_single_level_any_fraction() {
        let mut book = OrderBook::new();
        book.submit_limit(order(1, Side::Buy, 50_000, 10, 0)).unwrap();
        let band = book.depth_within(Side::Buy, 5.0).unwrap();
        assert_eq!(band.levels, vec![(50_000, 10)]);
    }

    #[test]
    fn depth_band_empty_side_is_error() {
        let book = OrderBook::new();
        assert_eq!(
            book.depth_within(Side::Buy, 0.01).unwrap_err(),
            DepthError::EmptySide(Side::Buy)
        );
    }

    #[test]
    fn band_edges() {
        assert_eq!(band_edge(100_000, Side::Sell, 0.01).unwrap(), 101_000);
        assert_eq!(band_edge(100_000, Side::Buy, 0.01).unwrap(), 99_000);
        assert_eq!(band_edge(99_999, Side::Sell, 0.01).unwrap(), 100_998);
        assert_eq!(band_edge(99_999, Side::Buy, 0.01).unwrap(), 99_000);
    }

    #[test]
    fn snapshot_sentinels_and_consistency() {
        let mut book = OrderBook::new();
        let snap = book.snapshot(1);
        assert_eq!(snap.asks, vec![(EMPTY_ASK_PRICE, 0)]);
        assert_eq!(snap.bids, vec![(EMPTY_BID_PRICE, 0)]);

        book.submit_limit(order(1, Side::Buy, 100_000, 80, 0)).unwrap();
        book.submit_limit(order(2, Side::Sell, 100_100, 100, 1)).unwrap();
        book.submit_limit(order(3, Side::Sell, 100_100, 20, 2)).unwrap();
        let snap = book.snapshot(2);
        assert_eq!(snap.asks[0], (100_100, 120));
        assert_eq!(snap.asks[1], (EMPTY_ASK_PRICE, 0));
        assert_eq!(snap.bids[0], (100_000, 80));
        let top = book.snapshot(1);
        assert_eq!(Some(top.bids[0].0), book.best_bid());
        assert_eq!(Some(top.asks[0].0), book.best_ask());
    }
}
