//! Order book domain types. Prices are integers in 1e-4 currency units
//! throughout (the LOBSTER convention); no floating point enters the matcher.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::kernel::{AgentId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    pub fn opposite(&self) -> Side {
        match self {
            Side::Buy => Side::Sell,
            Side::Sell => Side::Buy,
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Buy => "B",
            Side::Sell => "S",
        })
    }
}

/// A limit order as submitted to the book.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Order {
    pub id: u64,
    pub side: Side,
    /// Limit price in 1e-4 currency units; must be positive.
    pub price: i64,
    pub quantity: u64,
    pub entered_at: SimTime,
    pub owner: AgentId,
}

/// One match between an incoming (taker) order and a resting (maker) order.
/// The trade prints at the maker's limit price.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fill {
    pub taker_order_id: u64,
    pub maker_order_id: u64,
    pub maker_owner: AgentId,
    pub price: i64,
    pub quantity: u64,
    pub at: SimTime,
}

/// The mid price carries half-tick precision exactly: it is stored as
/// `best_bid + best_ask`, i.e. twice the mid in 1e-4 units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MidPrice {
    half_units: i64,
}

impl MidPrice {
    pub fn from_quotes(bid: i64, ask: i64) -> Self {
        MidPrice {
            half_units: bid + ask,
        }
    }

    /// The mid in units of half a tick (`2 * mid`), always exact.
    pub fn half_units(&self) -> i64 {
        self.half_units
    }

    /// The mid in ticks when it falls on a whole tick.
    pub fn whole_units(&self) -> Option<i64> {
        (self.half_units % 2 == 0).then_some(self.half_units / 2)
    }

    pub fn as_f64(&self) -> f64 {
        self.half_units as f64 / 2.0
    }
}

/// Aggregate liquidity within a price band of the inside quote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthBand {
    /// Best price on the queried side.
    pub inside: i64,
    /// `(price, aggregate volume)` for each level inside the band, from the
    /// inside outward.
    pub levels: Vec<(i64, u64)>,
    pub total_volume: u64,
}

/// Sentinel price for an absent ask level in L2 rows (LOBSTER convention).
pub const EMPTY_ASK_PRICE: i64 = 9_999_999_999;
/// Sentinel price for an absent bid level in L2 rows (LOBSTER convention).
pub const EMPTY_BID_PRICE: i64 = -9_999_999_999;

/// A top-N aggregate view of the book: `levels[i]` holds the i-th best
/// `(price, volume)` per side, padded with sentinels when the book is
/// shallower than `n_levels`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct L2Snapshot {
    pub asks: Vec<(i64, u64)>,
    pub bids: Vec<(i64, u64)>,
}

impl L2Snapshot {
    pub fn n_levels(&self) -> usize {
        self.asks.len()
    }

    pub fn ask_is_present(level: (i64, u64)) -> bool {
        level.1 > 0 && level.0 != EMPTY_ASK_PRICE && level.0 != EMPTY_BID_PRICE
    }

    pub fn bid_is_present(level: (i64, u64)) -> bool {
        level.1 > 0 && level.0 != EMPTY_ASK_PRICE && level.0 != EMPTY_BID_PRICE
    }

    /// Flat LOBSTER row ordering: ask1, asksz1, bid1, bidsz1, ask2, ...
    pub fn row(&self) -> Vec<i64> {
        let mut out = Vec::with_capacity(self.asks.len() * 4);
        for i in 0..self.asks.len() {
            out.push(self.asks[i].0);
            out.push(self.asks[i].1 as i64);
            out.push(self.bids[i].0);
            out.push(self.bids[i].1 as i64);
        }
        out
    }
}
