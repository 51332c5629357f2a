//! Univariate R² of each input against a sector outcome, ranked for tornado
//! charts.

use serde::Serialize;
use thiserror::Error;

use crate::chain::{Sector, UnknownSector};
use crate::mc::{outcome_column, SampleMatrix};

pub const DEFAULT_OUTCOME: &str = "bc_ratio";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SenseError {
    #[error("xs has {xs} values but ys has {ys}")]
    LengthMismatch { xs: usize, ys: usize },
    #[error("need at least 2 observations, got {0}")]
    TooFew(usize),
    #[error(transparent)]
    UnknownSector(#[from] UnknownSector),
    #[error("unknown variable `{0}` in sample matrix")]
    UnknownVariable(String),
}

/// Squared Pearson correlation. Zero when either side has no variance.
pub fn r_squared(xs: &[f64], ys: &[f64]) -> Result<f64, SenseError> {
    if xs.len() != ys.len() {
        return Err(SenseError::LengthMismatch {
            xs: xs.len(),
            ys: ys.len(),
        });
    }
    let n = xs.len();
    if n < 2 {
        return Err(SenseError::TooFew(n));
    }
    // compared exactly: a rounded mean of equal values leaves tiny residuals
    let constant = |v: &[f64]| v.iter().all(|&x| x == v[0]);
    if constant(xs) || constant(ys) {
        return Ok(0.0);
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy * sxy / (sxx * syy)).clamp(0.0, 1.0))
}

/// Variables charted for each sector by default.
pub fn default_variables(sector: Sector) -> &'static [&'static str] {
    match sector {
        Sector::Biochar => &[
            "biochar_price",
            "variable_cost_per_t",
            "capital_equipment",
            "biochar_tonnes",
        ],
        Sector::Vineyard => &[
            "treated_hectares",
            "grape_price",
            "revenue_increase_per_ha",
            "variable_cost_increase_per_ha",
            "planting_capital",
        ],
        Sector::Winery => &["wine_price", "extra_wine_litres", "wine_cost"],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityEntry {
    pub variable_id: String,
    pub r_squared: f64,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityReport {
    pub sector: Sector,
    pub outcome: String,
    pub entries: Vec<SensitivityEntry>,
}

impl SensitivityReport {
    pub fn get(&self, variable_id: &str) -> Option<&SensitivityEntry> {
        self.entries.iter().find(|e| e.variable_id == variable_id)
    }

    pub fn top(&self) -> Option<&SensitivityEntry> {
        self.entries.first()
    }
}

/// Ranks `variables` (or the sector defaults) by R² against the sector's
/// `outcome` column.
pub fn sensitivity_report(
    samples: &SampleMatrix,
    sector: &str,
    outcome: &str,
    variables: Option<&[String]>,
) -> Result<SensitivityReport, SenseError> {
    let sector: Sector = sector.parse()?;
    let out_id = outcome_column(sector, outcome);
    let ys = samples
        .column(&out_id)
        .ok_or_else(|| SenseError::UnknownVariable(out_id.clone()))?;
    let ids: Vec<String> = match variables {
        Some(v) => v.to_vec(),
        None => default_variables(sector)
            .iter()
            .map(|s| (*s).to_owned())
            .collect(),
    };
    let mut entries = ids
        .into_iter()
        .map(|id| {
            let xs = samples
                .column(&id)
                .ok_or_else(|| SenseError::UnknownVariable(id.clone()))?;
            Ok(SensitivityEntry {
                r_squared: r_squared(xs, ys)?,
                variable_id: id,
                rank: 0,
            })
        })
        .collect::<Result<Vec<_>, SenseError>>()?;
    entries.sort_by(|a, b| {
        b.r_squared
            .total_cmp(&a.r_squared)
            .then_with(|| a.variable_id.cmp(&b.variable_id))
    });
    for (i, e) in entries.iter_mut().enumerate() {
        e.rank = i + 1;
    }
    Ok(SensitivityReport {
        sector,
        outcome: outcome.to_owned(),
        entries,
    })
}
