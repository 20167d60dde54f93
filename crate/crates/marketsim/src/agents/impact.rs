//! The experimental impact agent: one large order at a scheduled time,
//! sized against the liquidity available near the spread.
//!
//! At the trigger it queries depth within `band_fraction` of the opposite
//! inside quote, then places `floor(greed * band volume)` as a marketable
//! limit at the far edge of the band, so execution cannot walk past the
//! liquidity it was sized on. Any remainder that would rest is cancelled
//! immediately. With `active = false` the agent still performs the depth
//! query — keeping paired control runs message-identical — but places
//! nothing.

use std::any::Any;

use serde::{Deserialize, Serialize};

use crate::kernel::{Agent, AgentError, AgentId, Context, Message, Payload, SimTime};
use crate::orderbook::{band_edge, Side};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImpactParams {
    pub trigger: SimTime,
    pub side: Side,
    /// Order size as a fraction of the liquidity in the band; 1.0 captures
    /// all of it.
    pub greed: f64,
    /// Width of the liquidity band around the inside quote.
    pub band_fraction: f64,
    /// False puts the agent in control mode: present, querying, not trading.
    pub active: bool,
    /// Submit a plain market order instead of the band-edge limit.
    pub pure_market: bool,
}

impl ImpactParams {
    pub fn new(trigger: SimTime, side: Side, greed: f64) -> Self {
        ImpactParams {
            trigger,
            side,
            greed,
            band_fraction: 0.01,
            active: true,
            pure_market: false,
        }
    }

    pub fn control(mut self) -> Self {
        self.active = false;
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.greed <= 0.0 || !self.greed.is_finite() {
            return Err(format!("greed {} must be positive", self.greed));
        }
        if self.band_fraction < 0.0 || !self.band_fraction.is_finite() {
            return Err(format!(
                "band fraction {} must be non-negative",
                self.band_fraction
            ));
        }
        Ok(())
    }
}

pub struct ImpactAgent {
    id: AgentId,
    exchange: AgentId,
    params: ImpactParams,
    triggered: bool,
    /// Size of the order actually placed, if any.
    pub placed_quantity: Option<u64>,
    pub filled_quantity: u64,
    pub band_volume_seen: Option<u64>,
}

impl ImpactAgent {
    pub fn new(id: AgentId, exchange: AgentId, params: ImpactParams) -> Result<Self, AgentError> {
        params.validate().map_err(AgentError::new)?;
        Ok(ImpactAgent {
            id,
            exchange,
            params,
            triggered: false,
            placed_quantity: None,
            filled_quantity: 0,
            band_volume_seen: None,
        })
    }

    pub fn params(&self) -> &ImpactParams {
        &self.params
    }

    /// The book side the order consumes: asks when buying, bids when selling.
    fn liquidity_side(&self) -> Side {
        self.params.side.opposite()
    }
}

impl Agent for ImpactAgent {
    fn id(&self) -> AgentId {
        self.id
    }

    fn on_message(&mut self, ctx: &mut Context<'_>, msg: &Message) -> Result<(), AgentError> {
        match &msg.payload {
            Payload::Wakeup => {
                if !self.triggered && ctx.now() < self.params.trigger {
                    ctx.wakeup_at(self.params.trigger);
                } else if !self.triggered {
                    self.triggered = true;
                    ctx.send(
                        self.exchange,
                        Payload::QueryDepth {
                            side: self.liquidity_side(),
                            fraction: self.params.band_fraction,
                        },
                    );
                }
                Ok(())
            }
            Payload::DepthReply {
                inside,
                total_volume,
                ..
            } => {
                self.band_volume_seen = Some(*total_volume);
                if !self.params.active {
                    return Ok(());
                }
                let quantity = (self.params.greed * *total_volume as f64).floor() as u64;
                if quantity == 0 || inside.is_none() {
                    log::info!(
                        "impact agent {}: no liquidity in band, standing down",
                        self.id
                    );
                    return Ok(());
                }
                let order_id = self.id.0 << 24;
                self.placed_quantity = Some(quantity);
                if self.params.pure_market {
                    ctx.send(
                        self.exchange,
                        Payload::MarketOrderSubmit {
                            order_id,
                            side: self.params.side,
                            quantity,
                        },
                    );
                } else {
                    let price = band_edge(
                        inside.expect("checked above"),
                        self.liquidity_side(),
                        self.params.band_fraction,
                    )
                    .map_err(|e| AgentError::new(format!("band edge: {e}")))?;
                    ctx.send(
                        self.exchange,
                        Payload::LimitOrderSubmit {
                            order_id,
                            side: self.params.side,
                            price,
                            quantity,
                        },
                    );
                }
                Ok(())
            }
            Payload::OrderAccepted {
                order_id,
                rested_quantity,
            } => {
                // Discard the unfilled remainder rather than letting it rest.
                if *rested_quantity > 0 {
                    ctx.send(
                        self.exchange,
                        Payload::CancelOrder {
                            order_id: *order_id,
                        },
                    );
                }
                Ok(())
            }
            Payload::OrderExecuted { quantity, .. } => {
                self.filled_quantity += quantity;
                Ok(())
            }
            Payload::OrderCancelled { .. } => Ok(()),
            other => Err(AgentError::new(format!(
                "impact agent cannot handle {}",
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizing_is_floor_of_greed_times_band() {
        // greed 0.5 on 501 shares floors to 250.
        assert_eq!((0.5_f64 * 501.0).floor() as u64, 250);
        assert_eq!((1.0_f64 * 500.0).floor() as u64, 500);
    }

    #[test]
    fn params_validation() {
        let p = ImpactParams::new(SimTime::from_units(200), Side::Buy, 0.0);
        assert!(p.validate().is_err());
        let p = ImpactParams::new(SimTime::from_units(200), Side::Buy, 2.5);
        assert!(p.validate().is_ok());
    }
}
