//! The market replay agent: pure playback of a historical order stream.
//!
//! At market open it submits the synthetic limit orders that rebuild the
//! opening book, then feeds each historical event to the exchange when
//! simulated time reaches the event's timestamp. It never reacts to market
//! state; that non-responsiveness is the defining property of replay
//! backtesting and is preserved deliberately.

use std::any::Any;
use std::path::PathBuf;

use crate::kernel::{Agent, AgentError, AgentId, Context, Message, Payload, SimTime};
use crate::lobster::{
    self, event_to_action, reconstruct_opening_book, synthetic::SyntheticStream, BookAction,
    LobsterEvent, LobsterError,
};
use crate::orderbook::L2Snapshot;

/// File-based replay configuration.
#[derive(Debug, Clone)]
pub struct ReplayConfig {
    pub message_file: PathBuf,
    pub orderbook_file: PathBuf,
    pub market_open: SimTime,
    pub market_close: SimTime,
}

/// A loaded, replay-ready stream: the opening book state and the events to
/// play on top of it.
#[derive(Debug, Clone)]
pub struct ReplayData {
    pub opening: L2Snapshot,
    pub events: Vec<LobsterEvent>,
}

impl ReplayData {
    /// Load LOBSTER files. Order book row `i` is the state *after* message
    /// `i`, so the opening book is taken from the first row and replay
    /// starts at the second message; that makes the replayed book match the
    /// recorded rows exactly at every subsequent event.
    pub fn load(config: &ReplayConfig) -> Result<Self, LobsterError> {
        let messages = lobster::parse_messages_file(&config.message_file)?;
        for w in &messages.warnings {
            log::warn!("{}: {w}", config.message_file.display());
        }
        if messages.events.is_empty() {
            return Err(LobsterError::EmptyFile);
        }
        let rows = lobster::parse_orderbook(std::fs::File::open(&config.orderbook_file)?)?;
        let opening = rows.into_iter().next().ok_or(LobsterError::EmptyFile)?;
        let events = messages.events[1..]
            .iter()
            .filter(|e| e.time <= config.market_close)
            .cloned()
            .collect();
        Ok(ReplayData { opening, events })
    }

    /// Wrap a generated stream (the opening snapshot there precedes the
    /// first event, so nothing is skipped).
    pub fn from_stream(stream: &SyntheticStream) -> Self {
        ReplayData {
            opening: stream.opening.clone(),
            events: stream.events.clone(),
        }
    }

    pub fn first_event_time(&self) -> Option<SimTime> {
        self.events.first().map(|e| e.time)
    }

    pub fn last_event_time(&self) -> Option<SimTime> {
        self.events.last().map(|e| e.time)
    }
}

/// Counts of historical events that replay as no-ops.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ReplayTallies {
    pub hidden_executions: u64,
    pub crosses: u64,
    pub halts: u64,
    pub events_sent: u64,
}

pub struct MarketReplayAgent {
    id: AgentId,
    exchange: AgentId,
    market_open: SimTime,
    opening_submissions: Vec<Payload>,
    events: Vec<LobsterEvent>,
    cursor: usize,
    opened: bool,
    pub tallies: ReplayTallies,
}

impl MarketReplayAgent {
    pub fn new(
        id: AgentId,
        exchange: AgentId,
        data: ReplayData,
        market_open: SimTime,
    ) -> Result<Self, LobsterError> {
        let mut ids = lobster::opening_id_allocator(&data.opening, &data.events);
        let opening_orders =
            reconstruct_opening_book(&data.opening, &mut ids, market_open, id)?;
        let opening_submissions = opening_orders
            .into_iter()
            .map(|o| Payload::LimitOrderSubmit {
                order_id: o.id,
                side: o.side,
                price: o.price,
                quantity: o.quantity,
            })
            .collect();
        Ok(MarketReplayAgent {
            id,
            exchange,
            market_open,
            opening_submissions,
            events: data.events,
            cursor: 0,
            opened: false,
            tallies: ReplayTallies::default(),
        })
    }

    pub fn opening_order_count(&self) -> usize {
        self.opening_submissions.len()
    }

    fn open_market(&mut self, ctx: &mut Context<'_>) {
        for payload in self.opening_submissions.drain(..) {
            ctx.send(self.exchange, payload);
        }
        self.opened = true;
    }

    /// Emit every not-yet-sent event with timestamp <= now, in file order,
    /// then sleep until the next event.
    fn drain_due(&mut self, ctx: &mut Context<'_>) {
        let now = ctx.now();
        while self.cursor < self.events.len() && self.events[self.cursor].time <= now {
            let ev = &self.events[self.cursor];
            self.cursor += 1;
            match event_to_action(ev) {
                BookAction::SubmitLimit {
                    order_id,
                    side,
                    price,
                    quantity,
                } => {
                    ctx.send(
                        self.exchange,
                        Payload::LimitOrderSubmit {
                            order_id,
                            side,
                            price,
                            quantity,
                        },
                    );
                    self.tallies.events_sent += 1;
                }
                BookAction::PartialCancel { order_id, quantity } => {
                    ctx.send(
                        self.exchange,
                        Payload::PartialCancelOrder { order_id, quantity },
                    );
                    self.tallies.events_sent += 1;
                }
                BookAction::Cancel { order_id } => {
                    ctx.send(self.exchange, Payload::CancelOrder { order_id });
                    self.tallies.events_sent += 1;
                }
                BookAction::NoOp { .. } => match ev.event_type {
                    lobster::LobsterEventType::HiddenExecution => {
                        self.tallies.hidden_executions += 1
                    }
                    lobster::LobsterEventType::Cross => self.tallies.crosses += 1,
                    _ => self.tallies.halts += 1,
                },
            }
        }
        if self.cursor < self.events.len() {
            ctx.wakeup_at(self.events[self.cursor].time);
        }
    }
}

impl Agent for MarketReplayAgent {
    fn id(&self) -> AgentId {
        self.id
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, msg: &Message) -> Result<(), AgentError> {
        match &msg.payload {
            Payload::Wakeup => {
                if !self.opened {
                    if ctx.now() < self.market_open {
                        ctx.wakeup_at(self.market_open);
                        return Ok(());
                    }
                    self.open_market(ctx);
                }
                self.drain_due(ctx);
                Ok(())
            }
            // Pure playback: exchange acknowledgements are ignored.
            Payload::OrderAccepted { .. }
            | Payload::OrderExecuted { .. }
            | Payload::OrderCancelled { .. } => Ok(()),
            other => Err(AgentError::new(format!(
                "replay agent cannot handle {}",
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
