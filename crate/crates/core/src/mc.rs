//! Monte Carlo driver and summary statistics.
//!
//! Iterations are independent: iteration `i` draws every variable from the
//! substream keyed by `(seed, i, variable_id)`. Workers produce per-iteration
//! records which are then folded strictly in iteration order, so the summary
//! is bit-identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    evaluate_chain, ChainError, ChainResult, Draw, ScenarioKind, ScenarioSpec, Sector, Variable,
};
use crate::dist::SampleStream;

pub const DEFAULT_ITERATIONS: u64 = 1_000;
pub const DEFAULT_HISTOGRAM_BINS: usize = 30;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("cannot summarize an empty sample")]
    EmptyInput,
    #[error("histogram needs at least one bin")]
    NoBins,
    #[error("sample contains a non-finite value")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum McError {
    #[error("invalid Monte Carlo configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(#[source] ChainError),
    #[error("iteration {iteration}: {source}")]
    Draw {
        iteration: u64,
        #[source]
        source: ChainError,
    },
    #[error("could not build worker pool: {0}")]
    ThreadPool(String),
    #[error("summarizing `{column}`: {source}")]
    Stats {
        column: String,
        #[source]
        source: StatsError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub iterations: u64,
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub histogram_bins: usize,
    /// Worker threads; `None` uses the global pool. Never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

fn default_bins() -> usize {
    DEFAULT_HISTOGRAM_BINS
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            iterations: DEFAULT_ITERATIONS,
            seed: 0,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
            workers: None,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.iterations == 0 {
            return Err(McError::InvalidConfig("iterations must be >= 1".into()));
        }
        if self.histogram_bins == 0 {
            return Err(McError::InvalidConfig("histogram_bins must be >= 1".into()));
        }
        if self.workers == Some(0) {
            return Err(McError::InvalidConfig("workers must be >= 1".into()));
        }
        Ok(())
    }
}

/// Equal-width bins over `[min, max]`; `edges.len() == counts.len() + 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub std: f64,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    pub histogram: Histogram,
}

/// Mean, extremes, unbiased standard deviation, nearest-rank percentiles and
/// an equal-width histogram.
pub fn summarize(values: &[f64], bins: usize) -> Result<Stats, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    if bins == 0 {
        return Err(StatsError::NoBins);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    if min == max {
        return Ok(Stats {
            mean: min,
            min,
            max,
            std: 0.0,
            p5: min,
            p50: min,
            p95: min,
            histogram: histogram(values, min, max, bins),
        });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(Stats {
        mean,
        min,
        max,
        std,
        p5: nearest_rank(&sorted, 5),
        p50: nearest_rank(&sorted, 50),
        p95: nearest_rank(&sorted, 95),
        histogram: histogram(values, min, max, bins),
    })
}

/// Nearest-rank percentile of an ascending slice, `pct` in whole percent.
fn nearest_rank(sorted: &[f64], pct: usize) -> f64 {
    let n = sorted.len();
    let rank = (pct * n).div_ceil(100).clamp(1, n);
    sorted[rank - 1]
}

fn histogram(values: &[f64], min: f64, max: f64, bins: usize) -> Histogram {
    let width = (max - min) / bins as f64;
    let mut edges: Vec<f64> = (0..bins).map(|i| min + i as f64 * width).collect();
    edges.push(max);
    let mut counts = vec![0u64; bins];
    for v in values {
        let idx = if width > 0.0 {
            (((v - min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[idx] += 1;
    }
    Histogram { edges, counts }
}

/// Share of values strictly above `threshold`.
pub fn exceedance(values: &[f64], threshold: f64) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyInput);
    }
    Ok(values.iter().filter(|&&v| v > threshold).count() as f64 / values.len() as f64)
}

/// Column-major table of every sampled input, derived quantity and outcome,
/// one row per iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    ids: Vec<String>,
    columns: Vec<Vec<f64>>,
    iterations: Vec<u64>,
}

impl SampleMatrix {
    pub fn new(ids: Vec<String>, iterations: Vec<u64>) -> Self {
        let columns = vec![Vec::with_capacity(iterations.len()); ids.len()];
        Self {
            ids,
            columns,
            iterations,
        }
    }

    /// Builds a matrix from named columns of equal length.
    pub fn from_columns(columns: Vec<(String, Vec<f64>)>) -> Self {
        let rows = columns.first().map_or(0, |(_, c)| c.len());
        assert!(
            columns.iter().all(|(_, c)| c.len() == rows),
            "ragged columns"
        );
        let (ids, columns) = columns.into_iter().unzip();
        Self {
            ids,
            columns,
            iterations: (0..rows as u64).collect(),
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn iterations(&self) -> &[u64] {
        &self.iterations
    }

    pub fn rows(&self) -> usize {
        self.iterations.len()
    }

    pub fn column(&self, id: &str) -> Option<&[f64]> {
        self.ids
            .iter()
            .position(|c| c == id)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = f64> + '_ {
        self.columns.iter().map(move |c| c[r])
    }
}

/// Derived (non-sampled) per-iteration quantities exposed to sensitivity runs.
pub const DERIVED_COLUMNS: [&str; 13] = [
    "biochar_tonnes",
    "treated_hectares",
    "extra_grapes",
    "extra_wine_litres",
    "operating_cost_per_t",
    "revenue_increase_per_ha",
    "variable_cost_increase_per_ha",
    "planting_capital",
    "application_cost_per_ha",
    "wine_price",
    "wine_cost",
    "co2_tonnes",
    "sequestration_cost",
];

fn derived_values(r: &ChainResult) -> [f64; 13] {
    [
        r.biochar_tonnes,
        r.treated_hectares,
        r.extra_grapes,
        r.extra_wine_litres,
        r.operating_cost_per_t,
        r.revenue_increase_per_ha,
        r.variable_cost_increase_per_ha,
        r.planting_capital,
        r.application_cost_per_ha,
        r.wine_price,
        r.wine_cost,
        r.co2_tonnes,
        r.sequestration_cost,
    ]
}

pub fn outcome_column(sector: Sector, outcome: &str) -> String {
    format!("{}.{outcome}", sector.id())
}

const SECTOR_OUTCOMES: [&str; 3] = ["bc_ratio", "npv", "annual_net_income"];

fn sector_outcomes(r: &ChainResult) -> impl Iterator<Item = f64> + '_ {
    Sector::ALL.into_iter().flat_map(move |s| {
        let x = r.sector(s);
        [x.bc_ratio, x.npv, x.annual_net_income]
    })
}

fn matrix_ids() -> Vec<String> {
    let mut ids: Vec<String> = Variable::ALL.iter().map(|v| v.id().to_owned()).collect();
    ids.extend(DERIVED_COLUMNS.iter().map(|s| (*s).to_owned()));
    for s in Sector::ALL {
        ids.extend(SECTOR_OUTCOMES.iter().map(|o| outcome_column(s, o)));
    }
    ids.push("chain.npv".into());
    ids.push("chain.annual_net_income".into());
    ids
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SectorSummary {
    pub bc_ratio: Stats,
    pub npv: Stats,
    pub annual_net_income: Stats,
    pub annual_net_income_per_ha: Stats,
    pub npv_per_ha: Stats,
    pub prob_bc_above_one: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainSummary {
    pub npv: Stats,
    pub annual_net_income: Stats,
    pub annual_net_income_per_ha: Stats,
    pub npv_per_ha: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Quantities {
    pub biochar_tonnes: f64,
    pub treated_hectares: f64,
    pub extra_grapes: f64,
    pub extra_wine_litres: f64,
    pub co2_tonnes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CarbonSummary {
    pub co2_tonnes: Stats,
    pub co2_per_ha: Stats,
    pub sequestration_cost: Stats,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McSummary {
    pub scenario: String,
    pub kind: ScenarioKind,
    pub iterations: u64,
    pub seed: u64,
    pub biochar: SectorSummary,
    pub vineyard: SectorSummary,
    pub winery: SectorSummary,
    pub chain: ChainSummary,
    pub quantities: Quantities,
    pub carbon: CarbonSummary,
}

impl McSummary {
    pub fn sector(&self, s: Sector) -> &SectorSummary {
        match s {
            Sector::Biochar => &self.biochar,
            Sector::Vineyard => &self.vineyard,
            Sector::Winery => &self.winery,
        }
    }
}

/// Output of [`run`]: the summary plus every per-iteration record.
#[derive(Debug, Clone)]
pub struct McRun {
    pub summary: McSummary,
    pub samples: SampleMatrix,
    pub results: Vec<ChainResult>,
}

/// Runs `cfg.iterations` draws of the value chain.
pub fn run(spec: &ScenarioSpec, cfg: &McConfig) -> Result<McRun, McError> {
    cfg.validate()?;
    spec.validate().map_err(McError::InvalidScenario)?;
    let stream = SampleStream::new(cfg.seed);

    let eval = |i: u64| -> Result<(Draw, ChainResult), McError> {
        let wrap = |source| McError::Draw {
            iteration: i,
            source,
        };
        let d = Draw::sample(spec, &stream, i).map_err(wrap)?;
        let r = evaluate_chain(spec, &d).map_err(wrap)?;
        Ok((d, r))
    };
    let collect = || {
        (0..cfg.iterations)
            .into_par_iter()
            .map(eval)
            .collect::<Vec<_>>()
    };
    let outcomes = match cfg.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| McError::ThreadPool(e.to_string()))?
            .install(collect),
        None => collect(),
    };
    // first failure in iteration order, whatever the scheduling was
    let records = outcomes.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut samples = SampleMatrix::new(matrix_ids(), (0..cfg.iterations).collect());
    for (d, r) in &records {
        let row = Variable::ALL
            .iter()
            .map(|&v| d.get(v))
            .chain(derived_values(r))
            .chain(sector_outcomes(r))
            .chain([r.total.npv, r.total.annual_net_income]);
        for (col, v) in samples.columns.iter_mut().zip(row) {
            col.push(v);
        }
    }
    let results: Vec<ChainResult> = records.into_iter().map(|(_, r)| r).collect();
    let summary = build_summary(spec, cfg, &results)?;
    Ok(McRun {
        summary,
        samples,
        results,
    })
}

fn build_summary(
    spec: &ScenarioSpec,
    cfg: &McConfig,
    results: &[ChainResult],
) -> Result<McSummary, McError> {
    let bins = cfg.histogram_bins;
    let stats = |column: &str, f: &dyn Fn(&ChainResult) -> f64| {
        let values: Vec<f64> = results.iter().map(f).collect();
        summarize(&values, bins).map_err(|source| McError::Stats {
            column: column.to_owned(),
            source,
        })
    };
    let mean =
        |f: &dyn Fn(&ChainResult) -> f64| results.iter().map(f).sum::<f64>() / results.len() as f64;

    let sector = |s: Sector| -> Result<SectorSummary, McError> {
        let bc: Vec<f64> = results.iter().map(|r| r.sector(s).bc_ratio).collect();
        let prob = exceedance(&bc, 1.0).map_err(|source| McError::Stats {
            column: outcome_column(s, "bc_ratio"),
            source,
        })?;
        Ok(SectorSummary {
            bc_ratio: stats(&outcome_column(s, "bc_ratio"), &|r| r.sector(s).bc_ratio)?,
            npv: stats(&outcome_column(s, "npv"), &|r| r.sector(s).npv)?,
            annual_net_income: stats(&outcome_column(s, "annual_net_income"), &|r| {
                r.sector(s).annual_net_income
            })?,
            annual_net_income_per_ha: stats(
                &outcome_column(s, "annual_net_income_per_ha"),
                &|r| r.sector(s).annual_net_income_per_ha,
            )?,
            npv_per_ha: stats(&outcome_column(s, "npv_per_ha"), &|r| {
                r.sector(s).npv_per_ha
            })?,
            prob_bc_above_one: prob,
        })
    };

    Ok(McSummary {
        scenario: spec.name.clone(),
        kind: spec.kind,
        iterations: cfg.iterations,
        seed: cfg.seed,
        biochar: sector(Sector::Biochar)?,
        vineyard: sector(Sector::Vineyard)?,
        winery: sector(Sector::Winery)?,
        chain: ChainSummary {
            npv: stats("chain.npv", &|r| r.total.npv)?,
            annual_net_income: stats("chain.annual_net_income", &|r| r.total.annual_net_income)?,
            annual_net_income_per_ha: stats("chain.annual_net_income_per_ha", &|r| {
                r.total.annual_net_income_per_ha
            })?,
            npv_per_ha: stats("chain.npv_per_ha", &|r| r.total.npv_per_ha)?,
        },
        quantities: Quantities {
            biochar_tonnes: mean(&|r| r.biochar_tonnes),
            treated_hectares: mean(&|r| r.treated_hectares),
            extra_grapes: mean(&|r| r.extra_grapes),
            extra_wine_litres: mean(&|r| r.extra_wine_litres),
            co2_tonnes: mean(&|r| r.co2_tonnes),
        },
        carbon: CarbonSummary {
            co2_tonnes: stats("co2_tonnes", &|r| r.co2_tonnes)?,
            co2_per_ha: stats("co2_per_ha", &|r| r.co2_per_ha)?,
            sequestration_cost: stats("sequestration_cost", &|r| r.sequestration_cost)?,
        },
    })
}
