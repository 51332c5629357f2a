//! Commands behind the `vinechar` binary.
//!
//! Every command loads a scenario file, runs the engine and writes its
//! result files into `--out`. Failures map onto fixed exit codes through
//! [`CliError::exit_code`].

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use vinechar::carbon::{self, SequestrationCostInputs};
use vinechar::chain::{
    biochar_breakeven, evaluate_chain, Breakeven, ChainError, Draw, Sector, UnknownSector, Variable,
};
use vinechar::finance::{FinanceError, DEFAULT_BREAKEVEN_TOL};
use vinechar::mc::{self, McConfig, McError, McRun, McSummary, Stats};
use vinechar::scenario::{ScenarioError, ScenarioFile};
use vinechar::sense::{self, SenseError, SensitivityReport, DEFAULT_OUTCOME};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(anyhow::Error),
    #[error(transparent)]
    UnknownSector(#[from] UnknownSector),
    #[error("no break-even price in [{lo}, {hi}]: B/C - 1 is {f_lo:.6} and {f_hi:.6} at the ends")]
    NoBracket {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },
    #[error(transparent)]
    Output(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Scenario(_) | CliError::Output(_) => 1,
            CliError::Model(_) => 2,
            CliError::UnknownSector(_) => 3,
            CliError::NoBracket { .. } => 4,
        }
    }
}

impl From<McError> for CliError {
    fn from(e: McError) -> Self {
        CliError::Model(e.into())
    }
}

impl From<ChainError> for CliError {
    fn from(e: ChainError) -> Self {
        match e {
            ChainError::Finance {
                source: FinanceError::NoBracket { lo, hi, f_lo, f_hi },
                ..
            } => CliError::NoBracket { lo, hi, f_lo, f_hi },
            other => CliError::Model(other.into()),
        }
    }
}

impl From<SenseError> for CliError {
    fn from(e: SenseError) -> Self {
        match e {
            SenseError::UnknownSector(s) => CliError::UnknownSector(s),
            other => CliError::Model(other.into()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "vinechar",
    version,
    about = "Monte Carlo benefit-cost model of a wine and biochar value chain"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate the value chain and write summary tables.
    Run(Common),
    /// Rank inputs by R² against a sector's B/C.
    Sensitivity(SensitivityArgs),
    /// Solve for the biochar price at which base-value B/C is one.
    Breakeven(BreakevenArgs),
    /// Carbon sequestered, its cost and the offset benefit.
    Carbon(CarbonArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file (JSON).
    pub scenario: PathBuf,
    /// Number of Monte Carlo iterations.
    #[arg(long, default_value_t = mc::DEFAULT_ITERATIONS)]
    pub iterations: u64,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SensitivityArgs {
    #[command(flatten)]
    pub common: Common,
    /// biochar, vineyard or winery; all three when omitted.
    #[arg(long)]
    pub sector: Option<String>,
    /// Sector outcome to regress on: bc_ratio, npv or annual_net_income.
    #[arg(long, default_value = DEFAULT_OUTCOME)]
    pub outcome: String,
}

#[derive(Debug, Args)]
pub struct BreakevenArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, default_value = "biochar")]
    pub sector: String,
    /// Absolute tolerance on B/C - 1.
    #[arg(long, default_value_t = DEFAULT_BREAKEVEN_TOL)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct CarbonArgs {
    #[command(flatten)]
    pub common: Common,
    /// Offset price in $/t CO2; defaults to the scenario's modal offset price.
    #[arg(long)]
    pub offset_price: Option<f64>,
    /// Also report the agricultural benefit that makes the base-value
    /// sequestration cost equal this figure ($/t CO2).
    #[arg(long)]
    pub target_cost: Option<f64>,
}

pub fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(c) => cmd_run(&c),
        Command::Sensitivity(a) => cmd_sensitivity(&a),
        Command::Breakeven(a) => cmd_breakeven(&a),
        Command::Carbon(a) => cmd_carbon(&a),
    }
}

struct Loaded {
    file: ScenarioFile,
    cfg: McConfig,
}

fn load(c: &Common) -> Result<Loaded, CliError> {
    let file = ScenarioFile::load(&c.scenario)?;
    let cfg = McConfig {
        iterations: c.iterations,
        seed: c.seed,
        histogram_bins: file.monte_carlo.histogram_bins,
        workers: c.workers,
    };
    Ok(Loaded { file, cfg })
}

fn simulate(l: &Loaded) -> Result<McRun, CliError> {
    Ok(mc::run(&l.file.spec(), &l.cfg)?)
}

fn out_dir(c: &Common) -> Result<&Path, CliError> {
    fs::create_dir_all(&c.out)
        .with_context(|| format!("creating {}", c.out.display()))
        .map_err(CliError::Output)?;
    Ok(&c.out)
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, contents)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(CliError::Output)
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .context("serializing JSON")
        .map_err(CliError::Output)?;
    text.push('\n');
    write_file(dir, name, &text)
}

fn csv_text(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let emit = |w: &mut csv::Writer<Vec<u8>>| -> csv::Result<()> {
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    };
    emit(&mut w)
        .context("formatting CSV")
        .map_err(CliError::Output)?;
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Output(anyhow::anyhow!("{e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.into()))
}

pub fn currency(v: f64) -> String {
    format!("{v:.2}")
}

pub fn ratio(v: f64) -> String {
    format!("{v:.4}")
}

type SectorMetric = fn(&mc::SectorSummary) -> f64;

pub const SECTORS_HEADER: [&str; 5] = ["metric", "biochar", "vineyard", "winery", "chain_total"];

/// Mean of each table metric per sector, as in `summary.json`.
pub fn sectors_rows(s: &McSummary) -> Vec<Vec<String>> {
    let money: [(&str, SectorMetric, f64); 4] = [
        (
            "annual_net_income",
            |x| x.annual_net_income.mean,
            s.chain.annual_net_income.mean,
        ),
        ("npv", |x| x.npv.mean, s.chain.npv.mean),
        (
            "annual_net_income_per_ha",
            |x| x.annual_net_income_per_ha.mean,
            s.chain.annual_net_income_per_ha.mean,
        ),
        ("npv_per_ha", |x| x.npv_per_ha.mean, s.chain.npv_per_ha.mean),
    ];
    let mut rows: Vec<Vec<String>> = money
        .iter()
        .map(|(name, get, total)| {
            let mut r = vec![(*name).to_owned()];
            r.extend(Sector::ALL.iter().map(|&sec| currency(get(s.sector(sec)))));
            r.push(currency(*total));
            r
        })
        .collect();
    let ratios: [(&str, SectorMetric); 2] = [
        ("bc_ratio", |x| x.bc_ratio.mean),
        ("prob_bc_above_one", |x| x.prob_bc_above_one),
    ];
    for (name, get) in ratios {
        let mut r = vec![name.to_owned()];
        r.extend(Sector::ALL.iter().map(|&sec| ratio(get(s.sector(sec)))));
        r.push(String::new());
        rows.push(r);
    }
    rows
}

fn npv_range_rows(s: &McSummary) -> Vec<Vec<String>> {
    let row = |name: &str, st: &Stats| {
        vec![
            name.to_owned(),
            currency(st.min),
            currency(st.mean),
            currency(st.max),
        ]
    };
    let mut rows: Vec<Vec<String>> = Sector::ALL
        .iter()
        .map(|&sec| row(sec.id(), &s.sector(sec).npv))
        .collect();
    rows.push(row("chain_total", &s.chain.npv));
    rows
}

fn histogram_rows(st: &Stats) -> Vec<Vec<String>> {
    let h = &st.histogram;
    h.counts
        .iter()
        .enumerate()
        .map(|(i, n)| {
            vec![
                i.to_string(),
                ratio(h.edges[i]),
                ratio(h.edges[i + 1]),
                n.to_string(),
            ]
        })
        .collect()
}

fn samples_csv(run: &McRun) -> Result<String, CliError> {
    let m = &run.samples;
    let mut header = vec!["iteration"];
    header.extend(m.ids().iter().map(String::as_str));
    let rows: Vec<Vec<String>> = (0..m.rows())
        .map(|r| {
            let mut row = vec![m.iterations()[r].to_string()];
            row.extend(m.row(r).map(|v| v.to_string()));
            row
        })
        .collect();
    csv_text(&header, &rows)
}

pub fn cmd_run(c: &Common) -> Result<(), CliError> {
    let l = load(c)?;
    let run = simulate(&l)?;
    let dir = out_dir(c)?;
    let s = &run.summary;
    write_json(dir, "summary.json", s)?;
    write_file(
        dir,
        "sectors.csv",
        &csv_text(&SECTORS_HEADER, &sectors_rows(s))?,
    )?;
    write_file(
        dir,
        "npv_range.csv",
        &csv_text(&["sector", "min", "mean", "max"], &npv_range_rows(s))?,
    )?;
    for sec in Sector::ALL {
        let text = csv_text(
            &["bin", "lower", "upper", "count"],
            &histogram_rows(&s.sector(sec).bc_ratio),
        )?;
        write_file(dir, &format!("histogram_{}.csv", sec.id()), &text)?;
    }
    write_file(dir, "samples.csv", &samples_csv(&run)?)?;
    for sec in Sector::ALL {
        let x = s.sector(sec);
        println!(
            "{:<9} B/C {}  P(B/C>1) {}  NPV {}",
            sec.id(),
            ratio(x.bc_ratio.mean),
            ratio(x.prob_bc_above_one),
            currency(x.npv.mean)
        );
    }
    Ok(())
}

pub fn tornado_csv(report: &SensitivityReport) -> Result<String, CliError> {
    let rows: Vec<Vec<String>> = report
        .entries
        .iter()
        .map(|e| {
            vec![
                e.variable_id.clone(),
                ratio(e.r_squared),
                e.rank.to_string(),
            ]
        })
        .collect();
    csv_text(&["variable_id", "r_squared", "rank"], &rows)
}

pub fn cmd_sensitivity(a: &SensitivityArgs) -> Result<(), CliError> {
    let sectors = match &a.sector {
        Some(name) => vec![name.parse::<Sector>()?],
        None => Sector::ALL.to_vec(),
    };
    let l = load(&a.common)?;
    let run = simulate(&l)?;
    let dir = out_dir(&a.common)?;
    for sec in sectors {
        let report = sense::sensitivity_report(
            &run.samples,
            sec.id(),
            &a.outcome,
            l.file.sensitivity_variables(sec),
        )?;
        write_file(
            dir,
            &format!("tornado_{}.csv", sec.id()),
            &tornado_csv(&report)?,
        )?;
        for e in &report.entries {
            println!(
                "{:<9} {:>2} {:<30} {}",
                sec.id(),
                e.rank,
                e.variable_id,
                ratio(e.r_squared)
            );
        }
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct BreakevenReport<'a> {
    scenario: &'a str,
    sector: &'static str,
    tolerance: f64,
    #[serde(flatten)]
    result: Breakeven,
}

pub fn cmd_breakeven(a: &BreakevenArgs) -> Result<(), CliError> {
    let sector: Sector = a.sector.parse()?;
    if sector != Sector::Biochar {
        return Err(CliError::Usage(format!(
            "break-even is solved for the biochar price only, not `{sector}`"
        )));
    }
    let l = load(&a.common)?;
    let spec = l.file.spec();
    spec.validate()?;
    let result = biochar_breakeven(&spec, a.tol)?;
    let dir = out_dir(&a.common)?;
    write_json(
        dir,
        "breakeven.json",
        &BreakevenReport {
            scenario: &spec.name,
            sector: sector.id(),
            tolerance: a.tol,
            result,
        },
    )?;
    if result.degenerate {
        println!(
            "break-even biochar price {} (degenerate: no costs)",
            currency(result.price)
        );
    } else {
        println!("break-even biochar price {}", currency(result.price));
    }
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct CarbonReport {
    pub scenario: String,
    pub iterations: u64,
    pub seed: u64,
    pub co2_tonnes_per_year: f64,
    pub co2_tonnes_per_ha: f64,
    pub sequestration_cost_mean: f64,
    pub sequestration_cost_max: f64,
    /// Lowest simulated cost, floored at zero.
    pub sequestration_cost_min: f64,
    pub offset_price: f64,
    pub offset_benefit: f64,
    pub offset_benefit_per_ha: f64,
    pub co2_per_car: f64,
    pub cars_equivalent: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub calibration: Option<Calibration>,
}

#[derive(Debug, Serialize)]
pub struct Calibration {
    pub target_cost: f64,
    pub gross_cost_per_t: f64,
    pub coproduct_benefit: f64,
    pub implied_agricultural_benefit: f64,
}

pub fn cmd_carbon(a: &CarbonArgs) -> Result<(), CliError> {
    let l = load(&a.common)?;
    let spec = l.file.spec();
    let offset_price = a.offset_price.unwrap_or(spec.carbon.offset_price.mode);
    if !(offset_price.is_finite() && offset_price >= 0.0) {
        return Err(CliError::Usage(format!(
            "offset price must be >= 0, got {offset_price}"
        )));
    }
    let run = simulate(&l)?;
    let s = &run.summary;
    let co2 = s.carbon.co2_tonnes.mean;
    let per_ha = s.carbon.co2_per_ha.mean;
    let co2_per_car = spec.carbon.co2_per_car.mode;

    let calibration = match a.target_cost {
        Some(target) => {
            let base = Draw::base(&spec);
            let r = evaluate_chain(&spec, &base)?;
            let capital = base.get(Variable::CapitalEquipment);
            let inputs = SequestrationCostInputs {
                capital,
                recovery_factor: spec.finance.capital_recovery_factor(),
                operating_cost: r.operating_cost_per_t * r.biochar_tonnes,
                co2_sequestered: r.co2_tonnes,
                agricultural_benefit: 0.0,
                coproduct_benefit: spec.carbon.coproduct_benefit,
            };
            let gross = inputs
                .gross_cost_per_t()
                .map_err(|e| CliError::Model(ChainError::from(e).into()))?;
            Some(Calibration {
                target_cost: target,
                gross_cost_per_t: gross,
                coproduct_benefit: inputs.coproduct_benefit,
                implied_agricultural_benefit: carbon::implied_agricultural_benefit(
                    gross,
                    inputs.coproduct_benefit,
                    target,
                ),
            })
        }
        None => None,
    };

    let report = CarbonReport {
        scenario: spec.name.clone(),
        iterations: s.iterations,
        seed: s.seed,
        co2_tonnes_per_year: co2,
        co2_tonnes_per_ha: per_ha,
        sequestration_cost_mean: s.carbon.sequestration_cost.mean,
        sequestration_cost_max: s.carbon.sequestration_cost.max,
        sequestration_cost_min: s.carbon.sequestration_cost.min.max(0.0),
        offset_price,
        offset_benefit: carbon::offset_benefit(co2, offset_price),
        offset_benefit_per_ha: carbon::offset_benefit(per_ha, offset_price),
        co2_per_car,
        cars_equivalent: carbon::cars_equivalent(co2, co2_per_car),
        calibration,
    };
    let dir = out_dir(&a.common)?;
    write_json(dir, "carbon.json", &report)?;
    println!(
        "CO2 {} t/yr ({} t/ha), cost {} $/t, offset benefit {} at {} $/t, {} cars",
        currency(report.co2_tonnes_per_year),
        currency(report.co2_tonnes_per_ha),
        currency(report.sequestration_cost_mean),
        currency(report.offset_benefit),
        currency(offset_price),
        report.cars_equivalent
    );
    if let Some(c) = &report.calibration {
        println!(
            "agricultural benefit for a cost of {}: {} $/t CO2",
            currency(c.target_cost),
            currency(c.implied_agricultural_benefit)
        );
    }
    Ok(())
}
