//! The exchange agent: owns the order book, speaks the message protocol,
//! and records the quote series analyses run on.
//!
//! Order submissions arriving within one delivery timestamp are collected
//! and processed together when that timestamp closes, largest quantity
//! first (ties by arrival order). Cancellations and queries are handled
//! immediately on delivery, so an agent that cancels and then looks at the
//! book within the same instant sees its cancels take effect first.

use std::any::Any;

use crate::kernel::{Agent, AgentError, AgentId, Context, Message, Payload, SimTime};
use crate::lobster::{apply_event, LobsterEvent, LobsterEventType};
use crate::orderbook::{BookError, L2Snapshot, Order, OrderBook, Side};

#[derive(Debug, Clone)]
struct PendingSubmission {
    from: AgentId,
    order_id: u64,
    side: Side,
    /// None marks a market order.
    limit_price: Option<i64>,
    quantity: u64,
    received_at: SimTime,
}

/// Re-expresses everything that actually mutated the book as a LOBSTER
/// event stream, maintaining a shadow book fed only by those events.
/// If the emission is faithful, the shadow tracks the real book exactly;
/// the recorded stream then replays to bit-identical snapshots.
#[derive(Debug)]
pub struct StreamRecorder {
    n_levels: usize,
    shadow: OrderBook,
    pub events: Vec<LobsterEvent>,
    /// Post-event book state, parallel to `events`.
    pub snapshots: Vec<L2Snapshot>,
}

impl StreamRecorder {
    pub fn new(n_levels: usize) -> Self {
        StreamRecorder {
            n_levels,
            shadow: OrderBook::new(),
            events: Vec::new(),
            snapshots: Vec::new(),
        }
    }

    fn record(&mut self, ev: LobsterEvent) {
        apply_event(&mut self.shadow, &ev, AgentId(u64::MAX));
        self.snapshots.push(self.shadow.snapshot(self.n_levels));
        self.events.push(ev);
    }

    /// True when the shadow book agrees with `book` on the recorded depth.
    pub fn matches_book(&self, book: &OrderBook) -> bool {
        self.shadow.snapshot(self.n_levels) == book.snapshot(self.n_levels)
    }
}

/// Periodic L2 capture for price-level volume charts.
#[derive(Debug)]
pub struct DepthSampler {
    interval_ns: u64,
    n_levels: usize,
    next_at: Option<SimTime>,
    pub rows: Vec<(SimTime, L2Snapshot)>,
}

impl DepthSampler {
    pub fn new(start: SimTime, interval_ns: u64, n_levels: usize) -> Self {
        DepthSampler {
            interval_ns,
            n_levels,
            next_at: Some(start),
            rows: Vec::new(),
        }
    }

    /// Record every due sample point strictly before `now` with the book
    /// state carried from the previous activity.
    fn catch_up(&mut self, now: SimTime, book: &OrderBook) {
        while let Some(at) = self.next_at {
            if at >= now {
                break;
            }
            self.rows.push((at, book.snapshot(self.n_levels)));
            self.next_at = Some(at + self.interval_ns);
        }
    }

    /// Fill remaining sample points up to and including `until` from the
    /// final book state. Call after the run.
    pub fn finish(&mut self, until: SimTime, book: &OrderBook) {
        while let Some(at) = self.next_at {
            if at > until {
                break;
            }
            self.rows.push((at, book.snapshot(self.n_levels)));
            self.next_at = Some(at + self.interval_ns);
        }
    }
}

/// Exchange agent for a single instrument.
pub struct ExchangeAgent {
    id: AgentId,
    book: OrderBook,
    batch: Vec<PendingSubmission>,
    /// Mid-price changes as (time, mid in half-ticks); recorded only while
    /// the book is two-sided, so the series carries through one-sided spells.
    mid_changes: Vec<(SimTime, i64)>,
    recorder: Option<StreamRecorder>,
    depth_sampler: Option<DepthSampler>,
    pub unknown_cancels: u64,
}

impl ExchangeAgent {
    pub fn new(id: AgentId) -> Self {
        ExchangeAgent {
            id,
            book: OrderBook::new(),
            batch: Vec::new(),
            mid_changes: Vec::new(),
            recorder: None,
            depth_sampler: None,
            unknown_cancels: 0,
        }
    }

    /// Capture the stream of effective book mutations in LOBSTER form.
    pub fn with_recorder(mut self, n_levels: usize) -> Self {
        self.recorder = Some(StreamRecorder::new(n_levels));
        self
    }

    /// Capture periodic L2 snapshots for price-level volume output.
    pub fn with_depth_sampler(mut self, start: SimTime, interval_ns: u64, n_levels: usize) -> Self {
        self.depth_sampler = Some(DepthSampler::new(start, interval_ns, n_levels));
        self
    }

    pub fn book(&self) -> &OrderBook {
        &self.book
    }

    pub fn mid_changes(&self) -> &[(SimTime, i64)] {
        &self.mid_changes
    }

    pub fn recorder(&self) -> Option<&StreamRecorder> {
        self.recorder.as_ref()
    }

    pub fn depth_sampler(&self) -> Option<&DepthSampler> {
        self.depth_sampler.as_ref()
    }

    pub fn depth_sampler_mut(&mut self) -> Option<&mut DepthSampler> {
        self.depth_sampler.as_mut()
    }

    /// Pad the depth sampler's remaining sample points (through `until`)
    /// from the final book state. Call once after the run.
    pub fn finish_depth_sampling(&mut self, until: SimTime) {
        let book = &self.book;
        if let Some(sampler) = self.depth_sampler.as_mut() {
            sampler.finish(until, book);
        }
    }

    fn note_mid(&mut self, at: SimTime) {
        if let Some(mid) = self.book.mid_price() {
            let half = mid.half_units();
            if self.mid_changes.last().map(|(_, m)| *m) != Some(half) {
                self.mid_changes.push((at, half));
            }
        }
    }

    fn handle_cancel(&mut self, ctx: &mut Context<'_>, from: AgentId, order_id: u64) {
        let resting = self.book.resting_order(order_id).cloned();
        let quantity = self.book.cancel(order_id);
        if quantity == 0 {
            self.unknown_cancels += 1;
        } else if let (Some(rec), Some(order)) = (self.recorder.as_mut(), resting) {
            rec.record(LobsterEvent {
                time: ctx.now(),
                event_type: LobsterEventType::Deletion,
                order_id,
                size: quantity,
                price: order.price,
                direction: if order.side == Side::Buy { 1 } else { -1 },
            });
        }
        self.note_mid(ctx.now());
        ctx.send(from, Payload::OrderCancelled { order_id, quantity });
    }

    fn handle_partial_cancel(
        &mut self,
        ctx: &mut Context<'_>,
        from: AgentId,
        order_id: u64,
        quantity: u64,
    ) {
        let resting = self.book.resting_order(order_id).cloned();
        let cancelled = self.book.partial_cancel(order_id, quantity);
        if cancelled == 0 {
            self.unknown_cancels += 1;
        } else if let (Some(rec), Some(order)) = (self.recorder.as_mut(), resting) {
            rec.record(LobsterEvent {
                time: ctx.now(),
                event_type: LobsterEventType::PartialCancellation,
                order_id,
                size: cancelled,
                price: order.price,
                direction: if order.side == Side::Buy { 1 } else { -1 },
            });
        }
        self.note_mid(ctx.now());
        ctx.send(
            from,
            Payload::OrderCancelled {
                order_id,
                quantity: cancelled,
            },
        );
    }

    fn flush_batch(&mut self, ctx: &mut Context<'_>) -> Result<(), AgentError> {
        if self.batch.is_empty() {
            return Ok(());
        }
        let mut batch = std::mem::take(&mut self.batch);
        // Same-timestamp submissions: largest quantity first, then arrival
        // order (the sort is stable).
        batch.sort_by(|a, b| b.quantity.cmp(&a.quantity));
        for sub in batch {
            let now = ctx.now();
            let (fills, rested) = match sub.limit_price {
                Some(price) => {
                    let order = Order {
                        id: sub.order_id,
                        side: sub.side,
                        price,
                        quantity: sub.quantity,
                        entered_at: sub.received_at,
                        owner: sub.from,
                    };
                    self.book.submit_limit(order).map_err(|e| match e {
                        BookError::DuplicateOrderId(id) => {
                            AgentError::new(format!("duplicate order id {id} from {}", sub.from))
                        }
                        other => AgentError::new(format!(
                            "invalid submission from {}: {other}",
                            sub.from
                        )),
                    })?
                }
                None => {
                    let (fills, _unfilled) =
                        self.book
                            .submit_market(sub.side, sub.quantity, sub.order_id, now);
                    (fills, 0)
                }
            };
            for fill in &fills {
                ctx.send(
                    sub.from,
                    Payload::OrderExecuted {
                        order_id: sub.order_id,
                        price: fill.price,
                        quantity: fill.quantity,
                    },
                );
                ctx.send(
                    fill.maker_owner,
                    Payload::OrderExecuted {
                        order_id: fill.maker_order_id,
                        price: fill.price,
                        quantity: fill.quantity,
                    },
                );
            }
            if let Some(rec) = self.recorder.as_mut() {
                // LOBSTER semantics: the aggressor appears as executions of
                // the resting orders it consumed, then as a submission of
                // whatever posted to the book.
                for fill in &fills {
                    rec.record(LobsterEvent {
                        time: now,
                        event_type: LobsterEventType::VisibleExecution,
                        order_id: fill.maker_order_id,
                        size: fill.quantity,
                        price: fill.price,
                        direction: if sub.side == Side::Buy { -1 } else { 1 },
                    });
                }
                if rested > 0 {
                    rec.record(LobsterEvent {
                        time: now,
                        event_type: LobsterEventType::Submission,
                        order_id: sub.order_id,
                        size: rested,
                        price: sub.limit_price.expect("market orders never rest"),
                        direction: if sub.side == Side::Buy { 1 } else { -1 },
                    });
                }
                debug_assert!(
                    self.recorder.as_ref().unwrap().matches_book(&self.book),
                    "recorded stream diverged from the live book"
                );
            }
            ctx.send(
                sub.from,
                Payload::OrderAccepted {
                    order_id: sub.order_id,
                    rested_quantity: rested,
                },
            );
            self.note_mid(now);
        }
        Ok(())
    }
}

impl Agent for ExchangeAgent {
    fn id(&self) -> AgentId {
        self.id
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, msg: &Message) -> Result<(), AgentError> {
        if let Some(sampler) = self.depth_sampler.as_mut() {
            sampler.catch_up(ctx.now(), &self.book);
        }
        match &msg.payload {
            Payload::LimitOrderSubmit {
                order_id,
                side,
                price,
                quantity,
            } => {
                self.batch.push(PendingSubmission {
                    from: msg.sender,
                    order_id: *order_id,
                    side: *side,
                    limit_price: Some(*price),
                    quantity: *quantity,
                    received_at: ctx.now(),
                });
                Ok(())
            }
            Payload::MarketOrderSubmit {
                order_id,
                side,
                quantity,
            } => {
                self.batch.push(PendingSubmission {
                    from: msg.sender,
                    order_id: *order_id,
                    side: *side,
                    limit_price: None,
                    quantity: *quantity,
                    received_at: ctx.now(),
                });
                Ok(())
            }
            Payload::CancelOrder { order_id } => {
                self.handle_cancel(ctx, msg.sender, *order_id);
                Ok(())
            }
            Payload::PartialCancelOrder { order_id, quantity } => {
                self.handle_partial_cancel(ctx, msg.sender, *order_id, *quantity);
                Ok(())
            }
            Payload::QueryDepth { side, fraction } => {
                let (inside, levels, total_volume) = match self.book.depth_within(*side, *fraction)
                {
                    Ok(band) => (Some(band.inside), band.levels, band.total_volume),
                    Err(crate::orderbook::DepthError::EmptySide(_)) => (None, Vec::new(), 0),
                    Err(e) => return Err(AgentError::new(format!("bad depth query: {e}"))),
                };
                ctx.send(
                    msg.sender,
                    Payload::DepthReply {
                        side: *side,
                        fraction: *fraction,
                        inside,
                        levels,
                        total_volume,
                    },
                );
                Ok(())
            }
            Payload::QuerySpread => {
                ctx.send(
                    msg.sender,
                    Payload::SpreadReply {
                        bid: self.book.inside(Side::Buy),
                        ask: self.book.inside(Side::Sell),
                    },
                );
                Ok(())
            }
            Payload::Wakeup => Ok(()),
            other => Err(AgentError::new(format!(
                "exchange cannot handle {} message",
                other.kind()
            ))),
        }
    }

    fn on_clock_advance(&mut self, ctx: &mut Context<'_>) -> Result<(), AgentError> {
        if let Some(sampler) = self.depth_sampler.as_mut() {
            sampler.catch_up(ctx.now(), &self.book);
        }
        self.flush_batch(ctx)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }

    fn as_any_mut(&mut self) -> &mut dyn Any {
        self
    }
}
