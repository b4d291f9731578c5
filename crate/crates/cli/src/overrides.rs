//! Command-line overrides of scenario fields. Precedence: flag, then scenario file, then default.

use std::str::FromStr;

use gridsched_core::model::{
    CapPolicy, DirectionMode, PriceProfile, ScenarioConfig, ZoneSelection,
};
use gridsched_core::profiles::bundled_prices;

use crate::error::Failure;

/// Cap headroom: a fraction over peak demand, or no cap at all.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eta {
    Unbounded,
    Fraction(f64),
}

impl FromStr for Eta {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "none" | "unbounded" => Ok(Eta::Unbounded),
            other => other
                .parse::<f64>()
                .map(Eta::Fraction)
                .map_err(|_| format!("`{s}` is neither a number nor `inf`")),
        }
    }
}

impl std::fmt::Display for Eta {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Eta::Unbounded => f.write_str("inf"),
            Eta::Fraction(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<DirectionMode>,
    pub price: Option<PriceProfile>,
    pub eta: Option<Eta>,
    pub constrain: Option<ZoneSelection>,
    pub currency: Option<String>,
    pub tol_feas: Option<f64>,
    pub tol_opt: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, c: &mut ScenarioConfig) -> Result<(), Failure> {
        if let Some(mode) = self.mode {
            c.direction_mode = mode;
        }
        if let Some(profile) = self.price {
            c.prices = bundled_prices(profile, &c.grid, &c.zones)
                .map_err(|e| Failure::Validation(format!("--price: {e}")))?;
        }
        if let Some(currency) = &self.currency {
            c.currency = currency.clone();
        }
        if let Some(t) = self.tol_feas {
            c.solver.tol_feas = t;
        }
        if let Some(t) = self.tol_opt {
            c.solver.tol_opt = t;
        }
        if self.eta.is_none() && self.constrain.is_none() {
            return Ok(());
        }
        let eta = match self.eta {
            Some(Eta::Unbounded) => None,
            Some(Eta::Fraction(v)) => Some(v),
            None => match &c.cap_policy {
                Some(p) => Some(p.eta),
                None => {
                    return Err(Failure::Validation(
                        "--constrain needs --eta when the scenario has no cap policy".into(),
                    ))
                }
            },
        };
        let zones = self
            .constrain
            .clone()
            .or_else(|| c.cap_policy.as_ref().map(|p| p.constrained_zones.clone()))
            .unwrap_or(ZoneSelection::All);
        for zone in &mut c.zones {
            zone.power_cap = None;
        }
        c.cap_policy = eta.map(|eta| CapPolicy {
            eta,
            constrained_zones: zones,
        });
        c.apply_cap_policy()?;
        Ok(())
    }
}
