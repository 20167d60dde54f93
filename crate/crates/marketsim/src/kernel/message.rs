//! The message protocol agents use to communicate.
//!
//! Agents never touch each other's state directly; everything an agent does,
//! it does by sending a timestamped message through the kernel. The payload
//! set mirrors the order-entry protocol of an electronic exchange plus the
//! self-addressed `Wakeup` timer.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::orderbook::Side;

use super::time::SimTime;

/// Identifies one agent within a simulation. Must be unique per run.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct AgentId(pub u64);

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A timestamped communication between two agents (or an agent and itself).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub sender: AgentId,
    pub recipient: AgentId,
    pub sent_at: SimTime,
    pub deliver_at: SimTime,
    pub payload: Payload,
}

/// One aggregated price level in a depth reply: `(price, total volume)`.
pub type DepthLevel = (i64, u64);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Payload {
    /// Submit a limit order. Prices are integers in 1e-4 currency units.
    LimitOrderSubmit {
        order_id: u64,
        side: Side,
        price: i64,
        quantity: u64,
    },
    /// Submit a market order; executes against the best available prices.
    MarketOrderSubmit {
        order_id: u64,
        side: Side,
        quantity: u64,
    },
    /// Cancel a resting order entirely.
    CancelOrder { order_id: u64 },
    /// Reduce a resting order's open quantity without losing queue position.
    PartialCancelOrder { order_id: u64, quantity: u64 },
    /// Ask for aggregate liquidity within `fraction` of the inside quote.
    QueryDepth { side: Side, fraction: f64 },
    DepthReply {
        side: Side,
        fraction: f64,
        /// Best price on the queried side, if any.
        inside: Option<i64>,
        levels: Vec<DepthLevel>,
        total_volume: u64,
    },
    /// Ask for the inside quotes.
    QuerySpread,
    SpreadReply {
        /// Best bid as `(price, volume at that level)`.
        bid: Option<DepthLevel>,
        ask: Option<DepthLevel>,
    },
    /// The exchange accepted a submission; `rested_quantity` is what entered
    /// the book (0 for fully-filled or market orders).
    OrderAccepted { order_id: u64, rested_quantity: u64 },
    /// One fill. Sent to both the taker and the maker, each with their own
    /// order id.
    OrderExecuted {
        order_id: u64,
        price: i64,
        quantity: u64,
    },
    /// Confirms a cancellation; quantity 0 means the order was unknown or
    /// already gone (tolerated by design).
    OrderCancelled { order_id: u64, quantity: u64 },
    /// Self-addressed timer.
    Wakeup,
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::LimitOrderSubmit { .. } => "LimitOrderSubmit",
            Payload::MarketOrderSubmit { .. } => "MarketOrderSubmit",
            Payload::CancelOrder { .. } => "CancelOrder",
            Payload::PartialCancelOrder { .. } => "PartialCancelOrder",
            Payload::QueryDepth { .. } => "QueryDepth",
            Payload::DepthReply { .. } => "DepthReply",
            Payload::QuerySpread => "QuerySpread",
            Payload::SpreadReply { .. } => "SpreadReply",
            Payload::OrderAccepted { .. } => "OrderAccepted",
            Payload::OrderExecuted { .. } => "OrderExecuted",
            Payload::OrderCancelled { .. } => "OrderCancelled",
            Payload::Wakeup => "Wakeup",
        }
    }

    /// Flat `key=value` rendering of the payload fields for the log CSV.
    pub fn fields(&self) -> String {
        fn level_str(l: &Option<DepthLevel>) -> String {
            match l {
                Some((p, v)) => format!("{p}x{v}"),
                None => "-".to_string(),
            }
        }
        match self {
            Payload::LimitOrderSubmit {
                order_id,
                side,
                price,
                quantity,
            } => format!("id={order_id} side={side} px={price} qty={quantity}"),
            Payload::MarketOrderSubmit {
                order_id,
                side,
                quantity,
            } => format!("id={order_id} side={side} qty={quantity}"),
            Payload::CancelOrder { order_id } => format!("id={order_id}"),
            Payload::PartialCancelOrder { order_id, quantity } => {
                format!("id={order_id} qty={quantity}")
            }
            Payload::QueryDepth { side, fraction } => format!("side={side} frac={fraction}"),
            Payload::DepthReply {
                side,
                fraction,
                inside,
                levels,
                total_volume,
            } => format!(
                "side={side} frac={fraction} inside={} levels={} vol={total_volume}",
                inside.map_or("-".to_string(), |p| p.to_string()),
                levels.len()
            ),
            Payload::QuerySpread => String::new(),
            Payload::SpreadReply { bid, ask } => {
                format!("bid={} ask={}", level_str(bid), level_str(ask))
            }
            Payload::OrderAccepted {
                order_id,
                rested_quantity,
            } => format!("id={order_id} rested={rested_quantity}"),
            Payload::OrderExecuted {
                order_id,
                price,
                quantity,
            } => format!("id={order_id} px={price} qty={quantity}"),
            Payload::OrderCancelled { order_id, quantity } => {
                format!("id={order_id} qty={quantity}")
            }
            Payload::Wakeup => String::new(),
        }
    }
}
