//! Discounting, NPV, benefit-cost ratios, capital recovery and break-even
//! root finding.

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_BREAKEVEN_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 400;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FinanceError {
    #[error("present value of costs plus capital is zero")]
    ZeroCostBase,
    #[error("objective does not change sign on [{lo}, {hi}] (f(lo)={f_lo}, f(hi)={f_hi})")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error("bisection stalled at {best} with residual {residual}")]
    NoConvergence { best: f64, residual: f64 },
    #[error("invalid finance parameters: {0}")]
    InvalidParams(String),
    #[error("invalid cash-flow schedule: {0}")]
    InvalidSchedule(String),
}

/// Discount rate, simulation horizon, and equipment life.
///
/// The horizon drives NPV and B/C; the equipment life only feeds the capital
/// recovery factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinanceParams {
    pub discount_rate: f64,
    pub horizon_years: u32,
    pub equipment_life_years: u32,
}

impl Default for FinanceParams {
    fn default() -> Self {
        Self {
            discount_rate: 0.10,
            horizon_years: 10,
            equipment_life_years: 20,
        }
    }
}

impl FinanceParams {
    pub fn validate(&self) -> Result<(), FinanceError> {
        if !(self.discount_rate > 0.0 && self.discount_rate < 1.0) {
            return Err(FinanceError::InvalidParams(format!(
                "discount_rate must lie in (0, 1), got {}",
                self.discount_rate
            )));
        }
        if self.horizon_years == 0 {
            return Err(FinanceError::InvalidParams(
                "horizon_years must be >= 1".into(),
            ));
        }
        if self.equipment_life_years == 0 {
            return Err(FinanceError::InvalidParams(
                "equipment_life_years must be >= 1".into(),
            ));
        }
        Ok(())
    }

    pub fn annuity_factor(&self) -> f64 {
        annuity_factor(self.discount_rate, self.horizon_years)
    }

    pub fn capital_recovery_factor(&self) -> f64 {
        crf(self.discount_rate, self.equipment_life_years)
    }
}

/// Year-0 capital plus per-year benefits and costs for years `1..=T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CashFlowSchedule {
    pub capital_at_t0: f64,
    pub benefits: Vec<f64>,
    pub costs: Vec<f64>,
}

impl CashFlowSchedule {
    /// Same benefit and cost in every year of the horizon.
    pub fn level(capital_at_t0: f64, benefit: f64, cost: f64, years: u32) -> Self {
        let n = years as usize;
        Self {
            capital_at_t0,
            benefits: vec![benefit; n],
            costs: vec![cost; n],
        }
    }

    pub fn zero(years: u32) -> Self {
        Self::level(0.0, 0.0, 0.0, years)
    }

    pub fn validate(&self, params: &FinanceParams) -> Result<(), FinanceError> {
        let n = params.horizon_years as usize;
        if self.benefits.len() != n || self.costs.len() != n {
            return Err(FinanceError::InvalidSchedule(format!(
                "expected {n} yearly entries, got {} benefits and {} costs",
                self.benefits.len(),
                self.costs.len()
            )));
        }
        let bad = |v: f64| !(v.is_finite() && v >= 0.0);
        if bad(self.capital_at_t0) || self.benefits.iter().chain(&self.costs).any(|&v| bad(v)) {
            return Err(FinanceError::InvalidSchedule(
                "entries must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Annual benefit minus annual cost in year 1.
    pub fn first_year_net(&self) -> f64 {
        match (self.benefits.first(), self.costs.first()) {
            (Some(b), Some(c)) => b - c,
            _ => 0.0,
        }
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self {
            capital_at_t0: self.capital_at_t0 * k,
            benefits: self.benefits.iter().map(|v| v * k).collect(),
            costs: self.costs.iter().map(|v| v * k).collect(),
        }
    }
}

/// `Σ_{t=1..T} flows[t-1] / (1+r)^t`
pub fn present_value(rate: f64, flows: &[f64]) -> f64 {
    let growth = 1.0 + rate;
    let mut discount = 1.0;
    flows
        .iter()
        .map(|v| {
            discount /= growth;
            v * discount
        })
        .sum()
}

pub fn npv(params: &FinanceParams, schedule: &CashFlowSchedule) -> f64 {
    let r = params.discount_rate;
    -schedule.capital_at_t0 + present_value(r, &schedule.benefits)
        - present_value(r, &schedule.costs)
}

/// PV(benefits) / (capital + PV(costs)).
///
/// Capital is spent at t = 0 and enters the denominator undiscounted.
pub fn bc_ratio(params: &FinanceParams, schedule: &CashFlowSchedule) -> Result<f64, FinanceError> {
    let r = params.discount_rate;
    let denom = schedule.capital_at_t0 + present_value(r, &schedule.costs);
    if denom == 0.0 {
        return Err(FinanceError::ZeroCostBase);
    }
    Ok(present_value(r, &schedule.benefits) / denom)
}

/// Present value of 1 per year for `years` years: `(1 - (1+r)^-T) / r`.
pub fn annuity_factor(rate: f64, years: u32) -> f64 {
    let g = (1.0 + rate).powi(years as i32);
    (g - 1.0) / (g * rate)
}

/// Capital recovery factor `r(1+r)^T / ((1+r)^T - 1)`.
pub fn crf(rate: f64, years: u32) -> f64 {
    let g = (1.0 + rate).powi(years as i32);
    rate * g / (g - 1.0)
}

pub fn amortize_straight_line(total: f64, years: f64) -> f64 {
    total / years
}

/// Bisection for a root of `objective` on `[lo, hi]`.
///
/// Returns as soon as `|objective(x)| <= tol`. The endpoints must bracket a
/// sign change.
pub fn breakeven<F>(mut objective: F, lo: f64, hi: f64, tol: f64) -> Result<f64, FinanceError>
where
    F: FnMut(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = objective(a);
    let fb = objective(b);
    if fa.abs() <= tol {
        return Ok(a);
    }
    if fb.abs() <= tol {
        return Ok(b);
    }
    if fa.signum() == fb.signum() || fa.is_nan() || fb.is_nan() {
        return Err(FinanceError::NoBracket {
            lo: a,
            hi: b,
            f_lo: fa,
            f_hi: fb,
        });
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = a + (b - a) / 2.0;
        let fm = objective(mid);
        if fm.abs() <= tol {
            return Ok(mid);
        }
        if mid <= a || mid >= b {
            return Err(FinanceError::NoConvergence {
                best: mid,
                residual: fm.abs(),
            });
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    let mid = a + (b - a) / 2.0;
    Err(FinanceError::NoConvergence {
        best: mid,
        residual: objective(mid).abs(),
    })
}
