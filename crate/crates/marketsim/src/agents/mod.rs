//! Trading agents: zero-intelligence background traders and the
//! experimental impact agent, plus the Bayesian fundamental tracking they
//! share.

mod belief;
mod impact;
mod zi;

pub use belief::{belief_update, project_final, FundamentalBelief};
pub use impact::{ImpactAgent, ImpactParams};
pub use zi::{first_arrival_offset, ZiAgent, ZiParams, ZiPopulationConfig};
