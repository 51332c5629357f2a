//! Carbon sequestered by applied biochar, its cost per tonne of CO2, offset
//! revenue and the passenger-car equivalent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Molar mass of CO2 over that of carbon.
pub const CO2_PER_C: f64 = 44.0 / 12.0;

/// Annual CO2 from a typical passenger vehicle, t/vehicle-year.
pub const DEFAULT_CO2_PER_CAR: f64 = 4.6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CarbonError {
    #[error("no CO2 sequestered; cost per tonne is undefined")]
    ZeroSequestration,
    #[error("invalid sequestration-cost inputs: {0}")]
    InvalidInputs(String),
}

/// Tonnes of CO2 locked up by `biochar_t` tonnes of char.
pub fn co2_sequestered(biochar_t: f64, carbon_content: f64) -> f64 {
    biochar_t * carbon_content * CO2_PER_C
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SequestrationCostInputs {
    /// `K`, capital cost of the biochar system ($).
    pub capital: f64,
    /// `α`, capital recovery factor (1/yr).
    pub recovery_factor: f64,
    /// `C`, annual operating cost ($/yr).
    pub operating_cost: f64,
    /// `ΔCO2`, tonnes sequestered per year.
    pub co2_sequestered: f64,
    /// `B_a`, agricultural-use benefit ($/t CO2).
    pub agricultural_benefit: f64,
    /// `B_c`, coproduct benefit ($/t CO2).
    pub coproduct_benefit: f64,
}

impl SequestrationCostInputs {
    /// `(Kα + C) / ΔCO2`, the cost before benefits are credited.
    pub fn gross_cost_per_t(&self) -> Result<f64, CarbonError> {
        if self.co2_sequestered == 0.0 {
            return Err(CarbonError::ZeroSequestration);
        }
        Ok((self.capital * self.recovery_factor + self.operating_cost) / self.co2_sequestered)
    }

    fn validate(&self) -> Result<(), CarbonError> {
        let fields = [
            ("capital", self.capital),
            ("recovery_factor", self.recovery_factor),
            ("operating_cost", self.operating_cost),
            ("co2_sequestered", self.co2_sequestered),
            ("agricultural_benefit", self.agricultural_benefit),
            ("coproduct_benefit", self.coproduct_benefit),
        ];
        match fields.iter().find(|(_, v)| !(v.is_finite() && *v >= 0.0)) {
            Some((name, v)) => Err(CarbonError::InvalidInputs(format!(
                "{name} must be finite and non-negative, got {v}"
            ))),
            None => Ok(()),
        }
    }
}

/// `(Kα + C) / ΔCO2 − B_a − B_c` in $/t CO2. Negative values are kept.
pub fn sequestration_cost(inputs: &SequestrationCostInputs) -> Result<f64, CarbonError> {
    inputs.validate()?;
    Ok(inputs.gross_cost_per_t()? - inputs.agricultural_benefit - inputs.coproduct_benefit)
}

/// The `B_a` that makes a gross cost of `gross_cost_per_t` net out to
/// `target_cost`.
pub fn implied_agricultural_benefit(
    gross_cost_per_t: f64,
    coproduct_benefit: f64,
    target_cost: f64,
) -> f64 {
    gross_cost_per_t - coproduct_benefit - target_cost
}

pub fn offset_benefit(co2_t: f64, offset_price: f64) -> f64 {
    co2_t * offset_price
}

/// Whole vehicles taken off the road for a year.
pub fn cars_equivalent(co2_t: f64, co2_per_car: f64) -> u64 {
    (co2_t / co2_per_car).floor() as u64
}
