//! Deterministic discrete-event simulation kernel.
//!
//! A run owns an ordered set of agents and a global queue of timestamped
//! messages. Messages are delivered in `(deliver_at, insertion sequence)`
//! order: ties on delivery time are broken by insertion order, which is what
//! makes repeated runs of the same configuration bitwise reproducible.
//!
//! Network latency and per-agent computation delay are configurable and
//! default to zero (the discrete-unit interactive mode). A single run is
//! strictly single-threaded; independent runs may execute concurrently.

mod agent;
mod message;
mod rng;
mod time;

pub use agent::{Agent, AgentError, Context, Outbox};
pub use message::{AgentId, DepthLevel, Message, Payload};
pub use rng::{agent_stream, oracle_stream};
pub use time::{SimTime, TimeParseError, NANOS_PER_UNIT};

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};
use std::io::Write;

#[derive(Debug, thiserror::Error)]
pub enum KernelError {
    #[error("duplicate agent id {0}")]
    DuplicateAgentId(AgentId),
    #[error("message to unknown agent {0}")]
    UnknownRecipient(AgentId),
    #[error("cannot schedule into the past: deliver_at {deliver_at} < now {now}")]
    ScheduleIntoPast { deliver_at: SimTime, now: SimTime },
    #[error(
        "agent {recipient} failed at {at} handling {payload_kind} from {sender}: {source}"
    )]
    AgentFailure {
        at: SimTime,
        sender: AgentId,
        recipient: AgentId,
        payload_kind: &'static str,
        source: AgentError,
    },
    #[error("kernel config invalid: {0}")]
    InvalidConfig(String),
}

/// Network latency between agent pairs, in nanoseconds.
#[derive(Debug, Clone)]
pub enum LatencyModel {
    Scalar(u64),
    PerPair {
        default: u64,
        pairs: HashMap<(AgentId, AgentId), u64>,
    },
}

impl Default for LatencyModel {
    fn default() -> Self {
        LatencyModel::Scalar(0)
    }
}

impl LatencyModel {
    fn between(&self, from: AgentId, to: AgentId) -> u64 {
        match self {
            LatencyModel::Scalar(ns) => *ns,
            LatencyModel::PerPair { default, pairs } => {
                pairs.get(&(from, to)).copied().unwrap_or(*default)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct KernelConfig {
    pub start: SimTime,
    pub stop: SimTime,
    pub global_seed: u64,
    pub latency: LatencyModel,
    /// Per-agent computation delay added to every send; missing entries are 0.
    pub computation_delay_ns: HashMap<AgentId, u64>,
}

impl KernelConfig {
    pub fn new(start: SimTime, stop: SimTime, global_seed: u64) -> Self {
        KernelConfig {
            start,
            stop,
            global_seed,
            latency: LatencyModel::default(),
            computation_delay_ns: HashMap::new(),
        }
    }

    fn validate(&self) -> Result<(), KernelError> {
        if self.start >= self.stop {
            return Err(KernelError::InvalidConfig(format!(
                "start {} must precede stop {}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    fn computation_delay(&self, agent: AgentId) -> u64 {
        self.computation_delay_ns.get(&agent).copied().unwrap_or(0)
    }
}

#[derive(Debug)]
struct Queued {
    deliver_at: SimTime,
    seq: u64,
    msg: Message,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.deliver_at == other.deliver_at && self.seq == other.seq
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.deliver_at, self.seq).cmp(&(other.deliver_at, other.seq))
    }
}

/// The global event queue: a priority queue keyed by
/// `(deliver_at, insertion sequence)`.
#[derive(Debug, Default)]
pub struct MessageQueue {
    heap: BinaryHeap<Reverse<Queued>>,
    next_seq: u64,
}

impl MessageQueue {
    pub fn new() -> Self {
        Self::default()
    }

    /// Enqueue a message. Scheduling before `now` is a hard error; equal
    /// delivery times are handled FIFO by insertion order.
    pub fn schedule(&mut self, msg: Message, now: SimTime) -> Result<(), KernelError> {
        if msg.deliver_at < now {
            return Err(KernelError::ScheduleIntoPast {
                deliver_at: msg.deliver_at,
                now,
            });
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Reverse(Queued {
            deliver_at: msg.deliver_at,
            seq,
            msg,
        }));
        Ok(())
    }

    pub fn next_deliver_at(&self) -> Option<SimTime> {
        self.heap.peek().map(|Reverse(q)| q.deliver_at)
    }

    fn pop(&mut self) -> Option<Message> {
        self.heap.pop().map(|Reverse(q)| q.msg)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

/// The complete ordered record of every message a run delivered.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SimulationLog {
    pub messages: Vec<Message>,
}

impl SimulationLog {
    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// CSV rows: `deliver_at_ns,sender,recipient,payload_kind,payload_fields`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "deliver_at_ns,sender,recipient,payload_kind,payload_fields")?;
        for m in &self.messages {
            writeln!(
                w,
                "{},{},{},{},{}",
                m.deliver_at.nanos(),
                m.sender,
                m.recipient,
                m.payload.kind(),
                m.payload.fields()
            )?;
        }
        Ok(())
    }
}

/// One simulation: configuration plus a roster of agents.
pub struct Simulation {
    config: KernelConfig,
    agents: Vec<Box<dyn Agent>>,
    index: HashMap<AgentId, usize>,
}

impl Simulation {
    pub fn new(config: KernelConfig) -> Self {
        Simulation {
            config,
            agents: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn config(&self) -> &KernelConfig {
        &self.config
    }

    pub fn register(&mut self, agent: Box<dyn Agent>) -> Result<(), KernelError> {
        let id = agent.id();
        if self.index.contains_key(&id) {
            return Err(KernelError::DuplicateAgentId(id));
        }
        self.index.insert(id, self.agents.len());
        self.agents.push(agent);
        Ok(())
    }

    /// Borrow an agent back after (or before) a run, by id and concrete type.
    pub fn agent<T: Agent + 'static>(&self, id: AgentId) -> Option<&T> {
        let idx = *self.index.get(&id)?;
        self.agents[idx].as_any().downcast_ref::<T>()
    }

    pub fn agent_mut<T: Agent + 'static>(&mut self, id: AgentId) -> Option<&mut T> {
        let idx = *self.index.get(&id)?;
        self.agents[idx].as_any_mut().downcast_mut::<T>()
    }

    /// Run to completion: the queue is seeded with one initial `Wakeup` per
    /// agent at the start time, then messages are delivered in
    /// `(deliver_at, insertion)` order until the queue drains or the next
    /// message lies beyond `stop` (the stop time itself is inclusive).
    pub fn run(&mut self) -> Result<SimulationLog, KernelError> {
        self.config.validate()?;
        let mut queue = MessageQueue::new();
        let mut log = SimulationLog::default();
        let start = self.config.start;
        for agent in &self.agents {
            let id = agent.id();
            queue.schedule(
                Message {
                    sender: id,
                    recipient: id,
                    sent_at: start,
                    deliver_at: start,
                    payload: Payload::Wakeup,
                },
                start,
            )?;
        }

        let mut now = start;
        loop {
            while queue.next_deliver_at() == Some(now) {
                let msg = queue.pop().expect("peeked");
                log.messages.push(msg.clone());
                self.dispatch(&mut queue, now, &msg)?;
            }
            // Everything at `now` is delivered: this timestamp is closing.
            self.clock_advance(&mut queue, now)?;
            match queue.next_deliver_at() {
                Some(t) if t == now => continue,
                Some(t) if t <= self.config.stop => now = t,
                _ => break,
            }
        }
        Ok(log)
    }

    fn dispatch(
        &mut self,
        queue: &mut MessageQueue,
        now: SimTime,
        msg: &Message,
    ) -> Result<(), KernelError> {
        let idx = *self
            .index
            .get(&msg.recipient)
            .ok_or(KernelError::UnknownRecipient(msg.recipient))?;
        let mut outbox = Outbox::default();
        let mut ctx = Context {
            now,
            self_id: msg.recipient,
            outbox: &mut outbox,
        };
        self.agents[idx]
            .on_message(&mut ctx, msg)
            .map_err(|source| KernelError::AgentFailure {
                at: now,
                sender: msg.sender,
                recipient: msg.recipient,
                payload_kind: msg.payload.kind(),
                source,
            })?;
        self.flush_outbox(queue, now, msg.recipient, outbox)
    }

    fn clock_advance(&mut self, queue: &mut MessageQueue, now: SimTime) -> Result<(), KernelError> {
        for idx in 0..self.agents.len() {
            let id = self.agents[idx].id();
            let mut outbox = Outbox::default();
            let mut ctx = Context {
                now,
                self_id: id,
                outbox: &mut outbox,
            };
            self.agents[idx]
                .on_clock_advance(&mut ctx)
                .map_err(|source| KernelError::AgentFailure {
                    at: now,
                    sender: id,
                    recipient: id,
                    payload_kind: "ClockAdvance",
                    source,
                })?;
            self.flush_outbox(queue, now, id, outbox)?;
        }
        Ok(())
    }

    fn flush_outbox(
        &self,
        queue: &mut MessageQueue,
        now: SimTime,
        sender: AgentId,
        outbox: Outbox,
    ) -> Result<(), KernelError> {
        let comp = self.config.computation_delay(sender);
        for (recipient, payload) in outbox.sends {
            let deliver_at = now + comp + self.config.latency.between(sender, recipient);
            queue.schedule(
                Message {
                    sender,
                    recipient,
                    sent_at: now,
                    deliver_at,
                    payload,
                },
                now,
            )?;
        }
        for at in outbox.wakeups {
            queue.schedule(
                Message {
                    sender,
                    recipient: sender,
                    sent_at: now,
                    deliver_at: at,
                    payload: Payload::Wakeup,
                },
                now,
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Idle {
        id: AgentId,
    }

    impl Agent for Idle {
        fn id(&self) -> AgentId {
            self.id
        }
        fn on_message(&mut self, _ctx: &mut Context<'_>, _msg: &Message) -> Result<(), AgentError> {
            Ok(())
        }
        fn as_any(&self) -> &dyn std::any::Any {
            self
        }
        fn as_any_mut(&mut self) -> &mut dyn std::any::Any {
            self
        }
    }

    fn config() -> KernelConfig {
        KernelConfig::new(SimTime::ZERO, SimTime::from_secs(10), 1)
    }

    #[test]
    fn zero_agents_empty_log() {
        let mut sim = Simulation::new(config());
        let log = sim.run().unwrap();
        assert!(log.is_empty());
    }

    #[test]
    fn idle_agent_logs_exactly_its_initial_wakeup() {
        let mut sim = Simulation::new(config());
        sim.register(Box::new(Idle { id: AgentId(1) })).unwrap();
        let log = sim.run().unwrap();
        assert_eq!(log.len(), 1);
        assert_eq!(log.messages[0].payload, Payload::Wakeup);
        assert_eq!(log.messages[0].recipient, AgentId(1));
    }

    #[test]
    fn duplicate_agent_id_rejected() {
        let mut sim = Simulation::new(config());
        sim.register(Box::new(Idle { id: AgentId(1) })).unwrap();
        let err = sim.register(Box::new(Idle { id: AgentId(1) })).unwrap_err();
        assert!(matches!(err, KernelError::DuplicateAgentId(AgentId(1))));
    }

    #[test]
    fn queue_fifo_on_equal_deliver_at() {
        let mut q = MessageQueue::new();
        let mk = |tag: u64| Message {
            sender: AgentId(tag),
            recipient: AgentId(0),
            sent_at: SimTime::ZERO,
            deliver_at: SimTime::from_nanos(5),
            payload: Payload::Wakeup,
        };
        q.schedule(mk(1), SimTime::ZERO).unwrap();
        q.schedule(mk(2), SimTime::ZERO).unwrap();
        assert_eq!(q.pop().unwrap().sender, AgentId(1));
        assert_eq!(q.pop().unwrap().sender, AgentId(2));
    }

    #[test]
    fn scheduling_into_past_is_error() {
        let mut q = MessageQueue::new();
        let msg = Message {
            sender: AgentId(0),
            recipient: AgentId(0),
            sent_at: SimTime::from_nanos(10),
            deliver_at: SimTime::from_nanos(9),
            payload: Payload::Wakeup,
        };
        let err = q.schedule(msg, SimTime::from_nanos(10)).unwrap_err();
        assert!(matches!(err, KernelError::ScheduleIntoPast { .. }));
    }
}
