//! LOBSTER-format historical data: parsing, writing, opening-book
//! reconstruction, translation of historical events into exchange actions,
//! and descriptive stream statistics.
//!
//! Message files are headerless 6-column CSV:
//! `time,event_type,order_id,size,price,direction` with time in decimal
//! seconds after midnight, prices in 1e-4 currency units and direction 1
//! (buy) or -1 (sell). Order book files carry one row per message with
//! `ask_price_1,ask_size_1,bid_price_1,bid_size_1,...` and sentinel prices
//! for unoccupied levels. Both match the public LOBSTER sample-file layout.

pub mod synthetic;

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kernel::{AgentId, SimTime};
use crate::orderbook::{L2Snapshot, Order, OrderBook, Side, EMPTY_ASK_PRICE, EMPTY_BID_PRICE};

#[derive(Debug, thiserror::Error)]
pub enum LobsterError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("opening snapshot is crossed: bid {bid} >= ask {ask}")]
    CrossedSnapshot { bid: i64, ask: i64 },
    #[error("order book row has {0} columns; expected a multiple of 4")]
    BadRowWidth(usize),
    #[error("message file is empty")]
    EmptyFile,
}

/// LOBSTER event type codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LobsterEventType {
    /// 1: new limit order submission.
    Submission,
    /// 2: partial cancellation.
    PartialCancellation,
    /// 3: full deletion.
    Deletion,
    /// 4: execution of a visible limit order.
    VisibleExecution,
    /// 5: execution of a hidden order.
    HiddenExecution,
    /// 6: auction cross.
    Cross,
    /// 7: trading halt indicator.
    TradingHalt,
}

impl LobsterEventType {
    pub fn code(&self) -> u8 {
        match self {
            LobsterEventType::Submission => 1,
            LobsterEventType::PartialCancellation => 2,
            LobsterEventType::Deletion => 3,
            LobsterEventType::VisibleExecution => 4,
            LobsterEventType::HiddenExecution => 5,
            LobsterEventType::Cross => 6,
            LobsterEventType::TradingHalt => 7,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Some(match code {
            1 => LobsterEventType::Submission,
            2 => LobsterEventType::PartialCancellation,
            3 => LobsterEventType::Deletion,
            4 => LobsterEventType::VisibleExecution,
            5 => LobsterEventType::HiddenExecution,
            6 => LobsterEventType::Cross,
            7 => LobsterEventType::TradingHalt,
            _ => return None,
        })
    }
}

impl fmt::Display for LobsterEventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

/// One historical order-flow record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LobsterEvent {
    pub time: SimTime,
    pub event_type: LobsterEventType,
    pub order_id: u64,
    pub size: u64,
    /// Price in 1e-4 currency units. For executions this is the resting
    /// order's limit price.
    pub price: i64,
    /// 1 for a buy limit order, -1 for a sell. For executions, the side of
    /// the resting order that was hit.
    pub direction: i8,
}

impl LobsterEvent {
    pub fn side(&self) -> Side {
        if self.direction >= 0 {
            Side::Buy
        } else {
            Side::Sell
        }
    }
}

/// Parsed message file plus non-fatal diagnostics.
#[derive(Debug, Default)]
pub struct MessageFile {
    pub events: Vec<LobsterEvent>,
    /// Non-monotonic timestamps and similar oddities; real files contain
    /// equal timestamps, so these never abort a parse.
    pub warnings: Vec<String>,
}

/// Parse a decimal-seconds timestamp into nanoseconds, rounding half to even
/// at sub-nanosecond precision.
fn parse_time(field: &str, line: usize) -> Result<SimTime, LobsterError> {
    let bad = |reason: &str| LobsterError::MalformedRow {
        line,
        reason: format!("bad time {field:?}: {reason}"),
    };
    let (whole, frac) = match field.split_once('.') {
        Some((w, f)) => (w, f),
        None => (field, ""),
    };
    if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad("whole seconds must be digits"));
    }
    if !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad("fraction must be digits"));
    }
    let secs: u64 = whole.parse().map_err(|_| bad("seconds overflow"))?;
    let ns_digits = &frac[..frac.len().min(9)];
    let mut nanos: u64 = 0;
    for b in ns_digits.bytes() {
        nanos = nanos * 10 + (b - b'0') as u64;
    }
    nanos *= 10u64.pow(9 - ns_digits.len() as u32);
    if frac.len() > 9 {
        let rest = &frac[9..];
        let first = rest.as_bytes()[0] - b'0';
        let tail_nonzero = rest[1..].bytes().any(|b| b != b'0');
        let round_up = match first.cmp(&5) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            // Exactly half: round to even.
            std::cmp::Ordering::Equal => tail_nonzero || nanos % 2 == 1,
        };
        if round_up {
            nanos += 1;
        }
    }
    Ok(SimTime::from_nanos(secs * 1_000_000_000 + nanos))
}

/// Parse a LOBSTER message stream. Malformed rows abort with their line
/// number; out-of-order timestamps only produce warnings.
pub fn parse_messages<R: Read>(reader: R) -> Result<MessageFile, LobsterError> {
    let mut out = MessageFile::default();
    let mut last_time: Option<SimTime> = None;
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let cols: Vec<&str> = trimmed.split(',').collect();
        if cols.len() != 6 {
            return Err(LobsterError::MalformedRow {
                line: line_no,
                reason: format!("expected 6 columns, got {}", cols.len()),
            });
        }
        let bad = |what: &str| LobsterError::MalformedRow {
            line: line_no,
            reason: format!("unparseable {what}"),
        };
        let time = parse_time(cols[0].trim(), line_no)?;
        let code: u8 = cols[1].trim().parse().map_err(|_| bad("event type"))?;
        let event_type = LobsterEventType::from_code(code).ok_or_else(|| {
            LobsterError::MalformedRow {
                line: line_no,
                reason: format!("event type {code} outside 1..7"),
            }
        })?;
        let order_id: u64 = cols[2].trim().parse().map_err(|_| bad("order id"))?;
        let size: u64 = cols[3].trim().parse().map_err(|_| bad("size"))?;
        let price: i64 = cols[4].trim().parse().map_err(|_| bad("price"))?;
        let direction: i8 = cols[5].trim().parse().map_err(|_| bad("direction"))?;
        if direction != 1 && direction != -1 {
            return Err(LobsterError::MalformedRow {
                line: line_no,
                reason: format!("direction {direction} must be 1 or -1"),
            });
        }
        let strict = matches!(
            event_type,
            LobsterEventType::Submission
                | LobsterEventType::PartialCancellation
                | LobsterEventType::Deletion
                | LobsterEventType::VisibleExecution
        );
        if strict && size == 0 {
            return Err(LobsterError::MalformedRow {
                line: line_no,
                reason: "size must be positive".into(),
            });
        }
        if event_type == LobsterEventType::Submission && price <= 0 {
            return Err(LobsterError::MalformedRow {
                line: line_no,
                reason: format!("submission price {price} must be positive"),
            });
        }
        if let Some(prev) = last_time {
            if time < prev {
                out.warnings.push(format!(
                    "line {line_no}: time {time} precedes previous event at {prev}"
                ));
            }
        }
        last_time = Some(time);
        out.events.push(LobsterEvent {
            time,
            event_type,
            order_id,
            size,
            price,
            direction,
        });
    }
    Ok(out)
}

pub fn parse_messages_file(path: impl AsRef<Path>) -> Result<MessageFile, LobsterError> {
    parse_messages(std::fs::File::open(path)?)
}

/// Serialize events in LOBSTER message layout (time printed with nine
/// fractional digits).
pub fn write_messages<W: Write>(mut w: W, events: &[LobsterEvent]) -> std::io::Result<()> {
    for ev in events {
        let ns = ev.time.nanos();
        writeln!(
            w,
            "{}.{:09},{},{},{},{},{}",
            ns / 1_000_000_000,
            ns % 1_000_000_000,
            ev.event_type,
            ev.order_id,
            ev.size,
            ev.price,
            ev.direction
        )?;
    }
    Ok(())
}

/// Parse one order book row (`4 * n_levels` integers).
pub fn parse_orderbook_row(line: &str, line_no: usize) -> Result<L2Snapshot, LobsterError> {
    let cols: Vec<&str> = line.trim().split(',').collect();
    if cols.is_empty() || cols.len() % 4 != 0 {
        return Err(LobsterError::BadRowWidth(cols.len()));
    }
    let mut values = Vec::with_capacity(cols.len());
    for c in cols {
        values.push(c.trim().parse::<i64>().map_err(|_| {
            LobsterError::MalformedRow {
                line: line_no,
                reason: format!("unparseable order book field {c:?}"),
            }
        })?);
    }
    let n = values.len() / 4;
    let mut asks = Vec::with_capacity(n);
    let mut bids = Vec::with_capacity(n);
    for i in 0..n {
        asks.push((values[4 * i], values[4 * i + 1].max(0) as u64));
        bids.push((values[4 * i + 2], values[4 * i + 3].max(0) as u64));
    }
    Ok(L2Snapshot { asks, bids })
}

/// Read every row of an order book file.
pub fn parse_orderbook<R: Read>(reader: R) -> Result<Vec<L2Snapshot>, LobsterError> {
    let mut rows = Vec::new();
    for (idx, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_orderbook_row(&line, idx + 1)?);
    }
    Ok(rows)
}

pub fn write_orderbook<W: Write>(mut w: W, rows: &[L2Snapshot]) -> std::io::Result<()> {
    for snap in rows {
        let row = snap.row();
        let text: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", text.join(","))?;
    }
    Ok(())
}

/// Hands out fresh order ids for synthetic orders.
#[derive(Debug, Clone)]
pub struct IdAllocator {
    next: u64,
}

impl IdAllocator {
    pub fn starting_at(first: u64) -> Self {
        IdAllocator { next: first }
    }

    /// An allocator guaranteed disjoint from every id in `events`.
    pub fn above_events(events: &[LobsterEvent]) -> Self {
        let max = events.iter().map(|e| e.order_id).max().unwrap_or(0);
        IdAllocator { next: max + 1 }
    }

    pub fn next_id(&mut self) -> u64 {
        let id = self.next;
        self.next += 1;
        id
    }
}

/// Synthesize the limit orders that rebuild an opening snapshot: one order
/// per occupied level, sized to the level's aggregate volume, asks from the
/// inside out then bids from the inside out. Submitting them to an empty
/// book reproduces the snapshot exactly.
pub fn reconstruct_opening_book(
    snapshot: &L2Snapshot,
    ids: &mut IdAllocator,
    entered_at: SimTime,
    owner: AgentId,
) -> Result<Vec<Order>, LobsterError> {
    let best_ask = snapshot
        .asks
        .iter()
        .copied()
        .filter(|l| L2Snapshot::ask_is_present(*l))
        .map(|(p, _)| p)
        .min();
    let best_bid = snapshot
        .bids
        .iter()
        .copied()
        .filter(|l| L2Snapshot::bid_is_present(*l))
        .map(|(p, _)| p)
        .max();
    if let (Some(bid), Some(ask)) = (best_bid, best_ask) {
        if bid >= ask {
            return Err(LobsterError::CrossedSnapshot { bid, ask });
        }
    }
    let mut orders = Vec::new();
    for &(price, volume) in &snapshot.asks {
        if L2Snapshot::ask_is_present((price, volume)) {
            orders.push(Order {
                id: ids.next_id(),
                side: Side::Sell,
                price,
                quantity: volume,
                entered_at,
                owner,
            });
        }
    }
    for &(price, volume) in &snapshot.bids {
        if L2Snapshot::bid_is_present((price, volume)) {
            orders.push(Order {
                id: ids.next_id(),
                side: Side::Buy,
                price,
                quantity: volume,
                entered_at,
                owner,
            });
        }
    }
    Ok(orders)
}

/// The book mutation a historical event maps to.
///
/// Visible executions are replayed as partial cancellations: they remove the
/// executed liquidity from the book without printing a synthetic trade.
/// Hidden executions never resided in the visible book, so they are no-ops,
/// as are crosses and halts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BookAction {
    SubmitLimit {
        order_id: u64,
        side: Side,
        price: i64,
        quantity: u64,
    },
    PartialCancel {
        order_id: u64,
        quantity: u64,
    },
    Cancel {
        order_id: u64,
    },
    NoOp {
        reason: &'static str,
    },
}

pub fn event_to_action(ev: &LobsterEvent) -> BookAction {
    match ev.event_type {
        LobsterEventType::Submission => BookAction::SubmitLimit {
            order_id: ev.order_id,
            side: ev.side(),
            price: ev.price,
            quantity: ev.size,
        },
        LobsterEventType::PartialCancellation => BookAction::PartialCancel {
            order_id: ev.order_id,
            quantity: ev.size,
        },
        LobsterEventType::Deletion => BookAction::Cancel {
            order_id: ev.order_id,
        },
        LobsterEventType::VisibleExecution => BookAction::PartialCancel {
            order_id: ev.order_id,
            quantity: ev.size,
        },
        LobsterEventType::HiddenExecution => BookAction::NoOp {
            reason: "hidden execution",
        },
        LobsterEventType::Cross => BookAction::NoOp {
            reason: "auction cross",
        },
        LobsterEventType::TradingHalt => BookAction::NoOp {
            reason: "trading halt",
        },
    }
}

/// Apply one historical event directly to a book. Returns the quantity the
/// action actually affected (0 for no-ops and unknown ids).
pub fn apply_event(book: &mut OrderBook, ev: &LobsterEvent, owner: AgentId) -> u64 {
    match event_to_action(ev) {
        BookAction::SubmitLimit {
            order_id,
            side,
            price,
            quantity,
        } => {
            let order = Order {
                id: order_id,
                side,
                price,
                quantity,
                entered_at: ev.time,
                owner,
            };
            match book.submit_limit(order) {
                Ok((fills, rested)) => {
                    rested + fills.iter().map(|f| f.quantity).sum::<u64>()
                }
                Err(e) => {
                    log::warn!("historical submission rejected: {e}");
                    0
                }
            }
        }
        BookAction::PartialCancel { order_id, quantity } => book.partial_cancel(order_id, quantity),
        BookAction::Cancel { order_id } => book.cancel(order_id),
        BookAction::NoOp { .. } => 0,
    }
}

/// Descriptive statistics over a message stream. Mean interarrival times are
/// the elapsed span divided by the number of gaps (arrivals minus one).
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct StreamStats {
    pub total_events: u64,
    pub unique_order_ids: u64,
    pub new_buy_limits: u64,
    pub new_sell_limits: u64,
    pub mean_interarrival_new_ms: f64,
    pub cancel_count: u64,
    pub mean_interarrival_cancel_ms: f64,
}

pub fn stream_stats(events: &[LobsterEvent]) -> StreamStats {
    let mut stats = StreamStats {
        total_events: events.len() as u64,
        ..Default::default()
    };
    let mut ids: Vec<u64> = events.iter().map(|e| e.order_id).collect();
    ids.sort_unstable();
    ids.dedup();
    stats.unique_order_ids = ids.len() as u64;

    let mut first_new: Option<SimTime> = None;
    let mut last_new: Option<SimTime> = None;
    let mut first_cancel: Option<SimTime> = None;
    let mut last_cancel: Option<SimTime> = None;
    for ev in events {
        match ev.event_type {
            LobsterEventType::Submission => {
                if ev.direction == 1 {
                    stats.new_buy_limits += 1;
                } else {
                    stats.new_sell_limits += 1;
                }
                first_new.get_or_insert(ev.time);
                last_new = Some(ev.time);
            }
            LobsterEventType::PartialCancellation | LobsterEventType::Deletion => {
                stats.cancel_count += 1;
                first_cancel.get_or_insert(ev.time);
                last_cancel = Some(ev.time);
            }
            _ => {}
        }
    }
    let mean_ms = |first: Option<SimTime>, last: Option<SimTime>, count: u64| -> f64 {
        match (first, last) {
            (Some(f), Some(l)) if count > 1 => (l - f) as f64 / 1e6 / (count - 1) as f64,
            _ => 0.0,
        }
    };
    stats.mean_interarrival_new_ms = mean_ms(
        first_new,
        last_new,
        stats.new_buy_limits + stats.new_sell_limits,
    );
    stats.mean_interarrival_cancel_ms = mean_ms(first_cancel, last_cancel, stats.cancel_count);
    stats
}

impl fmt::Display for StreamStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "total events:            {}", self.total_events)?;
        writeln!(f, "unique order ids:        {}", self.unique_order_ids)?;
        writeln!(f, "new buy limits:          {}", self.new_buy_limits)?;
        writeln!(f, "new sell limits:         {}", self.new_sell_limits)?;
        writeln!(
            f,
            "mean new-limit gap (ms): {:.3}",
            self.mean_interarrival_new_ms
        )?;
        writeln!(f, "cancellations:           {}", self.cancel_count)?;
        write!(
            f,
            "mean cancel gap (ms):    {:.3}",
            self.mean_interarrival_cancel_ms
        )
    }
}

/// Sentinel-padded empty snapshot with `n` levels.
pub fn empty_snapshot(n: usize) -> L2Snapshot {
    L2Snapshot {
        asks: vec![(EMPTY_ASK_PRICE, 0); n],
        bids: vec![(EMPTY_BID_PRICE, 0); n],
    }
}

/// Allocator for synthetic opening-book ids. Ids count up from 1 so
/// streams generated by this crate (whose historical ids start high) keep
/// cancellations of opening liquidity addressable on replay; if the stream
/// does use the low range, fall back to allocating above every historical id.
pub fn opening_id_allocator(opening: &L2Snapshot, events: &[LobsterEvent]) -> IdAllocator {
    let slots = (opening.asks.len() + opening.bids.len()) as u64;
    if events.iter().any(|e| e.order_id <= slots) {
        IdAllocator::above_events(events)
    } else {
        IdAllocator::starting_at(1)
    }
}

/// Rebuild the per-event book states of a stream: reconstruct the opening
/// book, apply each event, and snapshot the top `n_levels` after each one.
pub fn replay_to_rows(
    opening: &L2Snapshot,
    events: &[LobsterEvent],
    n_levels: usize,
    start: SimTime,
) -> Result<Vec<L2Snapshot>, LobsterError> {
    let mut ids = opening_id_allocator(opening, events);
    let owner = AgentId(u64::MAX);
    let mut book = OrderBook::new();
    for order in reconstruct_opening_book(opening, &mut ids, start, owner)? {
        book.submit_limit(order).map_err(|e| LobsterError::MalformedRow {
            line: 0,
            reason: format!("opening order rejected: {e}"),
        })?;
    }
    let mut rows = Vec::with_capacity(events.len());
    for ev in events {
        apply_event(&mut book, ev, owner);
        rows.push(book.snapshot(n_levels));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(t_ns: u64, ty: u8, id: u64, size: u64, price: i64, dir: i8) -> LobsterEvent {
        LobsterEvent {
            time: SimTime::from_nanos(t_ns),
            event_type: LobsterEventType::from_code(ty).unwrap(),
            order_id: id,
            size,
            price,
            direction: dir,
        }
    }

    #[test]
    fn parses_documented_example_row() {
        let input = "34200.000000001,1,42,100,1000100,1\n";
        let parsed = parse_messages(input.as_bytes()).unwrap();
        assert_eq!(parsed.events.len(), 1);
        let e = &parsed.events[0];
        assert_eq!(e.time.nanos(), 34_200_000_000_001);
        assert_eq!(e.event_type, LobsterEventType::Submission);
        assert_eq!(e.order_id, 42);
        assert_eq!(e.size, 100);
        assert_eq!(e.price, 1_000_100);
        assert_eq!(e.direction, 1);
    }

    #[test]
    fn empty_input_is_empty_sequence() {
        let parsed = parse_messages("".as_bytes()).unwrap();
        assert!(parsed.events.is_empty());
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn five_column_row_errors_with_line_number() {
        let input = "34200.0,1,42,100,1000100,1\n34201.0,1,43,100,1000100\n";
        let err = parse_messages(input.as_bytes()).unwrap_err();
        match err {
            LobsterError::MalformedRow { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn non_monotonic_time_warns_but_parses() {
        let input = "100.0,1,1,10,1000,1\n99.0,1,2,10,1000,1\n";
        let parsed = parse_messages(input.as_bytes()).unwrap();
        assert_eq!(parsed.events.len(), 2);
        assert_eq!(parsed.warnings.len(), 1);
    }

    #[test]
    fn sub_nanosecond_rounds_half_to_even() {
        // 1.5 ns -> 2 ns (1 is odd), 2.5 ns -> 2 ns (2 is even),
        // 2.5000...1 ns -> 3 ns.
        let cases = [
            ("0.0000000015", 2),
            ("0.0000000025", 2),
            ("0.00000000250001", 3),
            ("0.0000000024", 2),
            ("0.0000000026", 3),
        ];
        for (text, want_ns) in cases {
            let t = parse_time(text, 1).unwrap();
            assert_eq!(t.nanos(), want_ns, "case {text}");
        }
    }

    #[test]
    fn message_roundtrip_is_exact() {
        let events = vec![
            ev(34_200_000_000_001, 1, 42, 100, 1_000_100, 1),
            ev(34_200_500_000_000, 3, 42, 100, 1_000_100, 1),
            ev(34_201_000_000_000, 5, 0, 25, 999_900, -1),
        ];
        let mut buf = Vec::new();
        write_messages(&mut buf, &events).unwrap();
        let parsed = parse_messages(buf.as_slice()).unwrap();
        assert_eq!(parsed.events, events);
    }

    #[test]
    fn reconstruct_round_trips_snapshot() {
        let snap = L2Snapshot {
            asks: vec![(100_100, 100), (EMPTY_ASK_PRICE, 0)],
            bids: vec![(100_000, 80), (EMPTY_BID_PRICE, 0)],
        };
        let mut ids = IdAllocator::starting_at(1);
        let orders =
            reconstruct_opening_book(&snap, &mut ids, SimTime::ZERO, AgentId(9)).unwrap();
        assert_eq!(orders.len(), 2);
        let mut book = OrderBook::new();
        for o in &orders {
            let (fills, _) = book.submit_limit(o.clone()).unwrap();
            assert!(fills.is_empty(), "opening orders must not cross");
        }
        assert_eq!(book.snapshot(2), snap);
    }

    #[test]
    fn reconstruct_empty_snapshot_is_empty() {
        let mut ids = IdAllocator::starting_at(1);
        let orders =
            reconstruct_opening_book(&empty_snapshot(5), &mut ids, SimTime::ZERO, AgentId(0))
                .unwrap();
        assert!(orders.is_empty());
    }

    #[test]
    fn reconstruct_rejects_crossed_snapshot() {
        let snap = L2Snapshot {
            asks: vec![(100_000, 10)],
            bids: vec![(100_100, 10)],
        };
        let mut ids = IdAllocator::starting_at(1);
        let err = reconstruct_opening_book(&snap, &mut ids, SimTime::ZERO, AgentId(0)).unwrap_err();
        assert!(matches!(err, LobsterError::CrossedSnapshot { .. }));
    }

    #[test]
    fn event_translation() {
        let am = |a: BookAction, b: BookAction| assert_eq!(a, b);
        am(
            event_to_action(&ev(0, 1, 7, 50, 100_000, -1)),
            BookAction::SubmitLimit {
                order_id: 7,
                side: Side::Sell,
                price: 100_000,
                quantity: 50,
            },
        );
        am(
            event_to_action(&ev(0, 2, 7, 20, 100_000, -1)),
            BookAction::PartialCancel {
                order_id: 7,
                quantity: 20,
            },
        );
        am(
            event_to_action(&ev(0, 3, 7, 30, 100_000, -1)),
            BookAction::Cancel { order_id: 7 },
        );
        // Visible executions replay as partial cancellations.
        am(
            event_to_action(&ev(0, 4, 42, 30, 100_000, -1)),
            BookAction::PartialCancel {
                order_id: 42,
                quantity: 30,
            },
        );
        assert!(matches!(
            event_to_action(&ev(0, 5, 0, 30, 100_000, 1)),
            BookAction::NoOp { .. }
        ));
        assert!(matches!(
            event_to_action(&ev(0, 6, 0, 1, 100_000, 1)),
            BookAction::NoOp { .. }
        ));
    }

    #[test]
    fn stats_on_synthetic_three_event_stream() {
        let events = vec![
            ev(0, 1, 1, 10, 1000, 1),
            ev(1_000_000_000, 1, 2, 10, 1000, -1),
            ev(2_000_000_000, 1, 3, 10, 1000, 1),
        ];
        let stats = stream_stats(&events);
        assert_eq!(stats.total_events, 3);
        assert_eq!(stats.unique_order_ids, 3);
        assert_eq!(stats.new_buy_limits, 2);
        assert_eq!(stats.new_sell_limits, 1);
        assert!((stats.mean_interarrival_new_ms - 1000.0).abs() < 1e-12);
        assert_eq!(stats.cancel_count, 0);
        assert_eq!(stats.mean_interarrival_cancel_ms, 0.0);
    }

    #[test]
    fn stats_empty_input_all_zero() {
        assert_eq!(stream_stats(&[]), StreamStats::default());
    }

    #[test]
    fn stats_concat_counts_are_additive() {
        let a = vec![ev(0, 1, 1, 10, 1000, 1), ev(1_000, 3, 1, 10, 1000, 1)];
        let b = vec![ev(2_000, 1, 2, 10, 1000, -1), ev(3_000, 2, 2, 5, 1000, -1)];
        let mut ab = a.clone();
        ab.extend(b.clone());
        let (sa, sb, sab) = (stream_stats(&a), stream_stats(&b), stream_stats(&ab));
        assert_eq!(sab.total_events, sa.total_events + sb.total_events);
        assert_eq!(sab.cancel_count, sa.cancel_count + sb.cancel_count);
        assert_eq!(
            sab.new_buy_limits + sab.new_sell_limits,
            sa.new_buy_limits + sa.new_sell_limits + sb.new_buy_limits + sb.new_sell_limits
        );
    }

    #[test]
    fn orderbook_row_roundtrip() {
        let snap = L2Snapshot {
            asks: vec![(100_100, 120), (EMPTY_ASK_PRICE, 0)],
            bids: vec![(100_000, 80), (EMPTY_BID_PRICE, 0)],
        };
        let mut buf = Vec::new();
        write_orderbook(&mut buf, std::slice::from_ref(&snap)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.trim(),
            "100100,120,100000,80,9999999999,0,-9999999999,0"
        );
        let parsed = parse_orderbook_row(text.trim(), 1).unwrap();
        assert_eq!(parsed, snap);
    }
}
