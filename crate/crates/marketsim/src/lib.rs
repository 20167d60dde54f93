//! Deterministic agent-based market simulator.
//!
//! Two regimes for evaluating a trading strategy against a simulated
//! exchange:
//!
//! - **Market replay**: historical (or synthetic) LOBSTER-format order flow
//!   is replayed through a matching engine, with the experimental strategy
//!   injected on top. The played-back market does not react to the strategy.
//! - **Interactive simulation**: a population of zero-intelligence background
//!   traders with Bayesian beliefs over a mean-reverting fundamental provides
//!   liquidity that *does* react to the strategy.
//!
//! Market impact is quantified with event studies over many trials, in the
//! interactive case as paired same-seed experimental/control runs.
//!
//! Everything is reproducible from a single global seed: per-agent random
//! streams depend only on `(seed, agent id)`, message ties are broken by
//! insertion order, and repeated runs emit byte-identical output.
//!
//! See the `examples/` directory for a runnable tour of each capability and
//! the `marketsim` binary for the command-line entry points.

pub mod agents;
pub mod eventstudy;
pub mod exchange;
pub mod experiments;
pub mod kernel;
pub mod lobster;
pub mod oracle;
pub mod orderbook;
pub mod replay;

pub use kernel::{Agent, AgentId, KernelConfig, Message, Payload, SimTime, Simulation};
pub use orderbook::{Order, OrderBook, Side};
