//! The agent trait and the context handed to agents by the kernel.

use std::any::Any;

use super::message::{AgentId, Message, Payload};
use super::time::SimTime;

/// Raised by an agent to abort the run; the kernel attaches the offending
/// message before surfacing it.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct AgentError(pub String);

impl AgentError {
    pub fn new(msg: impl Into<String>) -> Self {
        AgentError(msg.into())
    }
}

/// Outgoing actions an agent queues during a callback. The kernel applies
/// latency and computation delay when it turns these into scheduled messages.
#[derive(Debug, Default)]
pub struct Outbox {
    pub(crate) sends: Vec<(AgentId, Payload)>,
    pub(crate) wakeups: Vec<SimTime>,
}

/// View of the simulation the kernel exposes to an agent during a callback.
pub struct Context<'a> {
    pub(crate) now: SimTime,
    pub(crate) self_id: AgentId,
    pub(crate) outbox: &'a mut Outbox,
}

impl Context<'_> {
    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn self_id(&self) -> AgentId {
        self.self_id
    }

    /// Queue a message to `recipient`. Delivery is at
    /// `now + computation_delay(self) + latency(self, recipient)`.
    pub fn send(&mut self, recipient: AgentId, payload: Payload) {
        self.outbox.sends.push((recipient, payload));
    }

    /// Schedule a `Wakeup` to self at the given absolute time. Timers are
    /// not subject to latency or computation delay.
    pub fn wakeup_at(&mut self, at: SimTime) {
        self.outbox.wakeups.push(at);
    }
}

/// A simulation participant.
///
/// All state a simulation needs from an agent after the run (books, recorded
/// series, tallies) is retrieved by downcasting through [`Agent::as_any`].
pub trait Agent {
    fn id(&self) -> AgentId;

    /// Handle one delivered message.
    fn on_message(&mut self, ctx: &mut Context<'_>, msg: &Message) -> Result<(), AgentError>;

    /// Called once per distinct simulation timestamp, after every message at
    /// that timestamp has been delivered and before the clock advances.
    /// Exchanges use this to process the timestamp's order batch.
    fn on_clock_advance(&mut self, _ctx: &mut Context<'_>) -> Result<(), AgentError> {
        Ok(())
    }

    fn as_any(&self) -> &dyn Any;
    fn as_any_mut(&mut self) -> &mut dyn Any;
}
