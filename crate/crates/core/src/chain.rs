//! The wine and biochar value chain.
//!
//! One [`Draw`] fixes every uncertain input. From it the biochar division's
//! output is derived, all of it is spread over the vineyard area it can cover
//! (closed system: no imported feedstock, no exported char), the extra grapes
//! flow to the winery, and each sector gets a level ten-year cash-flow
//! schedule that is scored with NPV and B/C.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::carbon::{self, CarbonError, SequestrationCostInputs};
use crate::dist::{DistError, SampleStream, TriangularDist};
use crate::finance::{self, CashFlowSchedule, FinanceError, FinanceParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChainError {
    #[error("{sector} sector: {source}")]
    Finance {
        sector: Sector,
        #[source]
        source: FinanceError,
    },
    #[error(transparent)]
    Carbon(#[from] CarbonError),
    #[error("invalid distribution for `{variable}`: {source}")]
    Distribution {
        variable: &'static str,
        #[source]
        source: DistError,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// A stand-alone, profit-seeking biochar producer.
    Independent,
    /// Biochar made by a division of the winery, with a lower cost base.
    Integrated,
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Independent => "independent",
            Self::Integrated => "integrated",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Biochar,
    Vineyard,
    Winery,
}

impl Sector {
    pub const ALL: [Sector; 3] = [Sector::Biochar, Sector::Vineyard, Sector::Winery];

    pub fn id(self) -> &'static str {
        match self {
            Self::Biochar => "biochar",
            Self::Vineyard => "vineyard",
            Self::Winery => "winery",
        }
    }
}

impl fmt::Display for Sector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown sector `{0}` (expected biochar, vineyard or winery)")]
pub struct UnknownSector(pub String);

impl FromStr for Sector {
    type Err = UnknownSector;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Sector::ALL
            .into_iter()
            .find(|sec| sec.id() == s)
            .ok_or_else(|| UnknownSector(s.to_owned()))
    }
}

/// How the vineyard books the biochar it buys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplicationCost {
    /// The purchase is left out of the vineyard's annual flows.
    #[default]
    Excluded,
    /// The purchase is spread straight-line over the amortization years and
    /// charged as an annual cost.
    Amortized,
}

/// Every uncertain input of the model, with the stable id used for sampling
/// streams, sample matrices and sensitivity reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variable {
    PomaceSupply,
    PruningsSupply,
    PomaceCost,
    PruningsCost,
    ConversionRate,
    BiocharPrice,
    FixedCostPerT,
    VariableCostPerT,
    CapitalEquipment,
    TotalGrapeProduction,
    YieldPerHa,
    YieldIncrease,
    GrapePrice,
    DirectCostPerHa,
    CapitalCostPerT,
    ApplicationRate,
    ApplicationAmortizationYears,
    MaxFractionTreated,
    TotalHectares,
    WhitePrice,
    RedPrice,
    WhiteCost,
    RedCost,
    WhiteShare,
    RedShare,
    ExtractionRate,
    CarbonContent,
    OffsetPrice,
    Co2PerCar,
}

impl Variable {
    pub const ALL: [Variable; 29] = [
        Variable::PomaceSupply,
        Variable::PruningsSupply,
        Variable::PomaceCost,
        Variable::PruningsCost,
        Variable::ConversionRate,
        Variable::BiocharPrice,
        Variable::FixedCostPerT,
        Variable::VariableCostPerT,
        Variable::CapitalEquipment,
        Variable::TotalGrapeProduction,
        Variable::YieldPerHa,
        Variable::YieldIncrease,
        Variable::GrapePrice,
        Variable::DirectCostPerHa,
        Variable::CapitalCostPerT,
        Variable::ApplicationRate,
        Variable::ApplicationAmortizationYears,
        Variable::MaxFractionTreated,
        Variable::TotalHectares,
        Variable::WhitePrice,
        Variable::RedPrice,
        Variable::WhiteCost,
        Variable::RedCost,
        Variable::WhiteShare,
        Variable::RedShare,
        Variable::ExtractionRate,
        Variable::CarbonContent,
        Variable::OffsetPrice,
        Variable::Co2PerCar,
    ];

    pub fn id(self) -> &'static str {
        use Variable::*;
        match self {
            PomaceSupply => "pomace_supply",
            PruningsSupply => "prunings_supply",
            PomaceCost => "pomace_cost",
            PruningsCost => "prunings_cost",
            ConversionRate => "conversion_rate",
            BiocharPrice => "biochar_price",
            FixedCostPerT => "fixed_cost_per_t",
            VariableCostPerT => "variable_cost_per_t",
            CapitalEquipment => "capital_equipment",
            TotalGrapeProduction => "total_grape_production",
            YieldPerHa => "yield_t_per_ha",
            YieldIncrease => "yield_increase",
            GrapePrice => "grape_price",
            DirectCostPerHa => "direct_cost_per_ha",
            CapitalCostPerT => "capital_cost_per_t",
            ApplicationRate => "application_rate",
            ApplicationAmortizationYears => "application_amortization_years",
            MaxFractionTreated => "max_fraction_treated",
            TotalHectares => "total_hectares",
            WhitePrice => "white_price",
            RedPrice => "red_price",
            WhiteCost => "white_cost",
            RedCost => "red_cost",
            WhiteShare => "white_share",
            RedShare => "red_share",
            ExtractionRate => "extraction_rate",
            CarbonContent => "carbon_content",
            OffsetPrice => "offset_price",
            Co2PerCar => "co2_per_car",
        }
    }

    pub fn from_id(id: &str) -> Option<Variable> {
        Variable::ALL.into_iter().find(|v| v.id() == id)
    }

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BiocharInputs {
    pub pomace_supply: TriangularDist,
    pub prunings_supply: TriangularDist,
    pub pomace_cost: TriangularDist,
    pub prunings_cost: TriangularDist,
    pub conversion_rate: TriangularDist,
    pub biochar_price: TriangularDist,
    pub fixed_cost_per_t: TriangularDist,
    pub variable_cost_per_t: TriangularDist,
    pub capital_equipment: TriangularDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VineyardInputs {
    pub total_grape_production: TriangularDist,
    pub yield_t_per_ha: TriangularDist,
    pub yield_increase: TriangularDist,
    pub grape_price: TriangularDist,
    pub direct_cost_per_ha: TriangularDist,
    pub capital_cost_per_t: TriangularDist,
    pub application_rate: TriangularDist,
    pub application_amortization_years: TriangularDist,
    pub max_fraction_treated: TriangularDist,
    pub total_hectares: TriangularDist,
    /// Multiplier on `direct_cost_per_ha × yield_increase`.
    pub variable_cost_uplift: f64,
    pub application_cost: ApplicationCost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WineryInputs {
    pub white_price: TriangularDist,
    pub red_price: TriangularDist,
    pub white_cost: TriangularDist,
    pub red_cost: TriangularDist,
    /// Sampled white share; red takes the complement.
    pub white_share: TriangularDist,
    /// Validated only; must complement `white_share` at the mode.
    pub red_share: TriangularDist,
    pub extraction_rate: TriangularDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarbonInputs {
    pub carbon_content: TriangularDist,
    pub offset_price: TriangularDist,
    pub co2_per_car: TriangularDist,
    /// `B_a` in $/t CO2.
    pub agricultural_benefit: f64,
    /// `B_c` in $/t CO2.
    pub coproduct_benefit: f64,
}

/// Complete declarative parameter set for one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    pub kind: ScenarioKind,
    pub finance: FinanceParams,
    pub biochar: BiocharInputs,
    pub vineyard: VineyardInputs,
    pub winery: WineryInputs,
    pub carbon: CarbonInputs,
}

impl ScenarioSpec {
    pub fn dist(&self, v: Variable) -> &TriangularDist {
        use Variable::*;
        let (b, y, w, c) = (&self.biochar, &self.vineyard, &self.winery, &self.carbon);
        match v {
            PomaceSupply => &b.pomace_supply,
            PruningsSupply => &b.prunings_supply,
            PomaceCost => &b.pomace_cost,
            PruningsCost => &b.prunings_cost,
            ConversionRate => &b.conversion_rate,
            BiocharPrice => &b.biochar_price,
            FixedCostPerT => &b.fixed_cost_per_t,
            VariableCostPerT => &b.variable_cost_per_t,
            CapitalEquipment => &b.capital_equipment,
            TotalGrapeProduction => &y.total_grape_production,
            YieldPerHa => &y.yield_t_per_ha,
            YieldIncrease => &y.yield_increase,
            GrapePrice => &y.grape_price,
            DirectCostPerHa => &y.direct_cost_per_ha,
            CapitalCostPerT => &y.capital_cost_per_t,
            ApplicationRate => &y.application_rate,
            ApplicationAmortizationYears => &y.application_amortization_years,
            MaxFractionTreated => &y.max_fraction_treated,
            TotalHectares => &y.total_hectares,
            WhitePrice => &w.white_price,
            RedPrice => &w.red_price,
            WhiteCost => &w.white_cost,
            RedCost => &w.red_cost,
            WhiteShare => &w.white_share,
            RedShare => &w.red_share,
            ExtractionRate => &w.extraction_rate,
            CarbonContent => &c.carbon_content,
            OffsetPrice => &c.offset_price,
            Co2PerCar => &c.co2_per_car,
        }
    }

    pub fn dist_mut(&mut self, v: Variable) -> &mut TriangularDist {
        use Variable::*;
        let (b, y, w, c) = (
            &mut self.biochar,
            &mut self.vineyard,
            &mut self.winery,
            &mut self.carbon,
        );
        match v {
            PomaceSupply => &mut b.pomace_supply,
            PruningsSupply => &mut b.prunings_supply,
            PomaceCost => &mut b.pomace_cost,
            PruningsCost => &mut b.prunings_cost,
            ConversionRate => &mut b.conversion_rate,
            BiocharPrice => &mut b.biochar_price,
            FixedCostPerT => &mut b.fixed_cost_per_t,
            VariableCostPerT => &mut b.variable_cost_per_t,
            CapitalEquipment => &mut b.capital_equipment,
            TotalGrapeProduction => &mut y.total_grape_production,
            YieldPerHa => &mut y.yield_t_per_ha,
            YieldIncrease => &mut y.yield_increase,
            GrapePrice => &mut y.grape_price,
            DirectCostPerHa => &mut y.direct_cost_per_ha,
            CapitalCostPerT => &mut y.capital_cost_per_t,
            ApplicationRate => &mut y.application_rate,
            ApplicationAmortizationYears => &mut y.application_amortization_years,
            MaxFractionTreated => &mut y.max_fraction_treated,
            TotalHectares => &mut y.total_hectares,
            WhitePrice => &mut w.white_price,
            RedPrice => &mut w.red_price,
            WhiteCost => &mut w.white_cost,
            RedCost => &mut w.red_cost,
            WhiteShare => &mut w.white_share,
            RedShare => &mut w.red_share,
            ExtractionRate => &mut w.extraction_rate,
            CarbonContent => &mut c.carbon_content,
            OffsetPrice => &mut c.offset_price,
            Co2PerCar => &mut c.co2_per_car,
        }
    }

    /// Checks every invariant and returns non-fatal warnings.
    pub fn validate(&self) -> Result<Vec<String>, ChainError> {
        self.finance
            .validate()
            .map_err(|e| ChainError::Invalid(e.to_string()))?;
        for v in Variable::ALL {
            self.dist(v)
                .validate()
                .map_err(|source| ChainError::Distribution {
                    variable: v.id(),
                    source,
                })?;
        }
        let require = |ok: bool, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(ChainError::Invalid(msg.to_owned()))
            }
        };
        let in_unit = |v: Variable| {
            let d = self.dist(v);
            d.low >= 0.0 && d.high <= 1.0
        };
        for v in [
            Variable::ConversionRate,
            Variable::YieldIncrease,
            Variable::MaxFractionTreated,
            Variable::WhiteShare,
            Variable::RedShare,
            Variable::CarbonContent,
        ] {
            if !in_unit(v) {
                return Err(ChainError::Invalid(format!(
                    "`{}` must lie in [0, 1]",
                    v.id()
                )));
            }
        }
        for v in Variable::ALL {
            if self.dist(v).low < 0.0 {
                return Err(ChainError::Invalid(format!(
                    "`{}` must be non-negative",
                    v.id()
                )));
            }
        }
        require(
            self.dist(Variable::ApplicationRate).low > 0.0,
            "`application_rate` must be positive",
        )?;
        require(
            self.dist(Variable::ApplicationAmortizationYears).low > 0.0,
            "`application_amortization_years` must be positive",
        )?;
        require(
            self.dist(Variable::Co2PerCar).low > 0.0,
            "`co2_per_car` must be positive",
        )?;
        let share_sum = self.winery.white_share.mode + self.winery.red_share.mode;
        require(
            (share_sum - 1.0).abs() <= 1e-9,
            "white_share and red_share must sum to 1 at their modes",
        )?;
        let uplift = self.vineyard.variable_cost_uplift;
        require(
            uplift.is_finite() && uplift > 0.0,
            "`variable_cost_uplift` must be positive",
        )?;
        let (ba, bc) = (
            self.carbon.agricultural_benefit,
            self.carbon.coproduct_benefit,
        );
        require(
            ba.is_finite() && ba >= 0.0 && bc.is_finite() && bc >= 0.0,
            "carbon benefits must be finite and non-negative",
        )?;

        let mut warnings = Vec::new();
        let implied = self.vineyard.total_hectares.mode * self.vineyard.yield_t_per_ha.mode;
        let stated = self.vineyard.total_grape_production.mode;
        if stated > 0.0 && ((implied - stated) / stated).abs() > 0.05 {
            warnings.push(format!(
                "total_grape_production ({stated}) disagrees with total_hectares x yield_t_per_ha ({implied:.0}); \
                 the hectare/yield pair is used"
            ));
        }
        Ok(warnings)
    }
}

/// One concrete realization of every uncertain input.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub iteration: u64,
    values: Vec<f64>,
}

impl Draw {
    /// Every variable at its mode.
    pub fn base(spec: &ScenarioSpec) -> Self {
        Self {
            iteration: 0,
            values: Variable::ALL.iter().map(|&v| spec.dist(v).mode).collect(),
        }
    }

    /// Samples every variable for `iteration` from its own keyed substream.
    pub fn sample(
        spec: &ScenarioSpec,
        stream: &SampleStream,
        iteration: u64,
    ) -> Result<Self, ChainError> {
        let values = Variable::ALL
            .iter()
            .map(|&v| {
                let u = stream.uniform(iteration, v.id());
                spec.dist(v)
                    .sample(u)
                    .map_err(|source| ChainError::Distribution {
                        variable: v.id(),
                        source,
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { iteration, values })
    }

    pub fn get(&self, v: Variable) -> f64 {
        self.values[v.index()]
    }

    pub fn set(&mut self, v: Variable, value: f64) {
        self.values[v.index()] = value;
    }

    pub fn with(mut self, v: Variable, value: f64) -> Self {
        self.set(v, value);
        self
    }

    pub fn within_support(&self, spec: &ScenarioSpec) -> bool {
        Variable::ALL
            .iter()
            .all(|&v| spec.dist(v).contains(self.get(v)))
    }
}

/// Tonnes of biochar made from all available pomace and prunings.
pub fn biochar_production(d: &Draw) -> f64 {
    (d.get(Variable::PomaceSupply) + d.get(Variable::PruningsSupply))
        * d.get(Variable::ConversionRate)
}

/// Hectares the biochar can cover, capped at the treatable share of the
/// vineyard area.
pub fn treated_area(d: &Draw, biochar_t: f64) -> f64 {
    let cap = d.get(Variable::MaxFractionTreated) * d.get(Variable::TotalHectares);
    (biochar_t / d.get(Variable::ApplicationRate)).min(cap)
}

pub fn feedstock_cost(d: &Draw) -> f64 {
    d.get(Variable::PomaceSupply) * d.get(Variable::PomaceCost)
        + d.get(Variable::PruningsSupply) * d.get(Variable::PruningsCost)
}

/// Annual operating cost of the biochar division: feedstock plus per-tonne
/// variable and fixed costs.
pub fn biochar_operating_cost(d: &Draw) -> f64 {
    let tonnes = biochar_production(d);
    feedstock_cost(d)
        + tonnes * (d.get(Variable::VariableCostPerT) + d.get(Variable::FixedCostPerT))
}

pub fn biochar_sector_schedule(finance: &FinanceParams, d: &Draw) -> CashFlowSchedule {
    let tonnes = biochar_production(d);
    CashFlowSchedule::level(
        d.get(Variable::CapitalEquipment),
        tonnes * d.get(Variable::BiocharPrice),
        biochar_operating_cost(d),
        finance.horizon_years,
    )
}

/// Extra grape tonnes harvested from the treated area.
pub fn extra_grapes(d: &Draw, area: f64) -> f64 {
    area * d.get(Variable::YieldPerHa) * d.get(Variable::YieldIncrease)
}

pub fn revenue_increase_per_ha(d: &Draw) -> f64 {
    d.get(Variable::YieldPerHa) * d.get(Variable::YieldIncrease) * d.get(Variable::GrapePrice)
}

pub fn variable_cost_increase_per_ha(spec: &ScenarioSpec, d: &Draw) -> f64 {
    d.get(Variable::DirectCostPerHa)
        * d.get(Variable::YieldIncrease)
        * spec.vineyard.variable_cost_uplift
}

/// Undiscounted purchase cost of biochar per treated hectare.
pub fn application_cost_per_ha(application_t_per_ha: f64, price_paid: f64) -> f64 {
    application_t_per_ha * price_paid
}

/// Vineyard flows for `area` hectares.
///
/// `biochar_applied_t` is the tonnage spread over that area; it only matters
/// when the application cost is amortized into the annual flows.
pub fn vineyard_sector_schedule(
    spec: &ScenarioSpec,
    d: &Draw,
    area: f64,
    biochar_applied_t: f64,
    price_paid: f64,
) -> CashFlowSchedule {
    let planting_capital = d.get(Variable::CapitalCostPerT) * extra_grapes(d, area);
    let revenue = area * revenue_increase_per_ha(d);
    let mut cost = area * variable_cost_increase_per_ha(spec, d);
    if spec.vineyard.application_cost == ApplicationCost::Amortized && area > 0.0 {
        let per_ha = application_cost_per_ha(biochar_applied_t / area, price_paid);
        cost += area
            * finance::amortize_straight_line(
                per_ha,
                d.get(Variable::ApplicationAmortizationYears),
            );
    }
    CashFlowSchedule::level(planting_capital, revenue, cost, spec.finance.horizon_years)
}

/// Litre-weighted wine price and cost; red takes `1 - white_share`.
pub fn blended_wine_price(d: &Draw) -> f64 {
    let w = d.get(Variable::WhiteShare);
    w * d.get(Variable::WhitePrice) + (1.0 - w) * d.get(Variable::RedPrice)
}

pub fn blended_wine_cost(d: &Draw) -> f64 {
    let w = d.get(Variable::WhiteShare);
    w * d.get(Variable::WhiteCost) + (1.0 - w) * d.get(Variable::RedCost)
}

pub fn winery_sector_schedule(
    finance: &FinanceParams,
    d: &Draw,
    extra_grapes: f64,
) -> CashFlowSchedule {
    let litres = extra_grapes * d.get(Variable::ExtractionRate);
    CashFlowSchedule::level(
        0.0,
        litres * blended_wine_price(d),
        litres * blended_wine_cost(d),
        finance.horizon_years,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SectorResult {
    pub bc_ratio: f64,
    pub npv: f64,
    pub annual_net_income: f64,
    pub annual_net_income_per_ha: f64,
    pub npv_per_ha: f64,
}

impl SectorResult {
    fn score(
        sector: Sector,
        finance: &FinanceParams,
        schedule: &CashFlowSchedule,
        area: f64,
    ) -> Result<Self, ChainError> {
        let bc_ratio = finance::bc_ratio(finance, schedule)
            .map_err(|source| ChainError::Finance { sector, source })?;
        let npv = finance::npv(finance, schedule);
        let annual_net_income = schedule.first_year_net();
        Ok(Self {
            bc_ratio,
            npv,
            annual_net_income,
            annual_net_income_per_ha: per_ha(annual_net_income, area),
            npv_per_ha: per_ha(npv, area),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainTotals {
    pub annual_net_income: f64,
    pub npv: f64,
    pub annual_net_income_per_ha: f64,
    pub npv_per_ha: f64,
}

/// Per-hectare figure over the treated area; zero when nothing is treated.
fn per_ha(value: f64, area: f64) -> f64 {
    if area > 0.0 {
        value / area
    } else {
        0.0
    }
}

/// Everything one draw produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChainResult {
    pub iteration: u64,
    pub biochar: SectorResult,
    pub vineyard: SectorResult,
    pub winery: SectorResult,
    pub total: ChainTotals,

    pub biochar_tonnes: f64,
    pub biochar_consumed_tonnes: f64,
    pub treated_hectares: f64,
    pub extra_grapes: f64,
    pub extra_wine_litres: f64,

    pub operating_cost_per_t: f64,
    pub revenue_increase_per_ha: f64,
    pub variable_cost_increase_per_ha: f64,
    pub planting_capital: f64,
    pub application_cost_per_ha: f64,
    pub wine_price: f64,
    pub wine_cost: f64,

    pub co2_tonnes: f64,
    pub co2_per_ha: f64,
    pub sequestration_cost: f64,
}

impl ChainResult {
    pub fn sector(&self, s: Sector) -> &SectorResult {
        match s {
            Sector::Biochar => &self.biochar,
            Sector::Vineyard => &self.vineyard,
            Sector::Winery => &self.winery,
        }
    }
}

/// Evaluates the whole value chain for one draw.
pub fn evaluate_chain(spec: &ScenarioSpec, d: &Draw) -> Result<ChainResult, ChainError> {
    let fin = &spec.finance;
    let biochar_tonnes = biochar_production(d);
    let area = treated_area(d, biochar_tonnes);
    // closed system: every tonne produced is applied on the treated area
    let consumed = biochar_tonnes;
    let price = d.get(Variable::BiocharPrice);

    let biochar_schedule = biochar_sector_schedule(fin, d);
    let vineyard_schedule = vineyard_sector_schedule(spec, d, area, consumed, price);
    let grapes = extra_grapes(d, area);
    let winery_schedule = winery_sector_schedule(fin, d, grapes);

    let biochar = SectorResult::score(Sector::Biochar, fin, &biochar_schedule, area)?;
    let vineyard = SectorResult::score(Sector::Vineyard, fin, &vineyard_schedule, area)?;
    let winery = SectorResult::score(Sector::Winery, fin, &winery_schedule, area)?;

    let total_income =
        biochar.annual_net_income + vineyard.annual_net_income + winery.annual_net_income;
    let total_npv = biochar.npv + vineyard.npv + winery.npv;

    let co2 = carbon::co2_sequestered(biochar_tonnes, d.get(Variable::CarbonContent));
    let sequestration_cost = carbon::sequestration_cost(&SequestrationCostInputs {
        capital: d.get(Variable::CapitalEquipment),
        recovery_factor: fin.capital_recovery_factor(),
        operating_cost: biochar_schedule.costs.first().copied().unwrap_or(0.0),
        co2_sequestered: co2,
        agricultural_benefit: spec.carbon.agricultural_benefit,
        coproduct_benefit: spec.carbon.coproduct_benefit,
    })?;

    Ok(ChainResult {
        iteration: d.iteration,
        biochar,
        vineyard,
        winery,
        total: ChainTotals {
            annual_net_income: total_income,
            npv: total_npv,
            annual_net_income_per_ha: per_ha(total_income, area),
            npv_per_ha: per_ha(total_npv, area),
        },
        biochar_tonnes,
        biochar_consumed_tonnes: consumed,
        treated_hectares: area,
        extra_grapes: grapes,
        extra_wine_litres: grapes * d.get(Variable::ExtractionRate),
        operating_cost_per_t: if biochar_tonnes > 0.0 {
            biochar_operating_cost(d) / biochar_tonnes
        } else {
            0.0
        },
        revenue_increase_per_ha: revenue_increase_per_ha(d),
        variable_cost_increase_per_ha: variable_cost_increase_per_ha(spec, d),
        planting_capital: vineyard_schedule.capital_at_t0,
        application_cost_per_ha: application_cost_per_ha(d.get(Variable::ApplicationRate), price),
        wine_price: blended_wine_price(d),
        wine_cost: blended_wine_cost(d),
        co2_tonnes: co2,
        co2_per_ha: per_ha(co2, area),
        sequestration_cost,
    })
}

/// Biochar-sector B/C with every input at its mode except the price.
pub fn biochar_bc_at_price(spec: &ScenarioSpec, price: f64) -> Result<f64, ChainError> {
    let d = Draw::base(spec).with(Variable::BiocharPrice, price);
    finance::bc_ratio(&spec.finance, &biochar_sector_schedule(&spec.finance, &d)).map_err(
        |source| ChainError::Finance {
            sector: Sector::Biochar,
            source,
        },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakeven {
    pub price: f64,
    pub bracket_low: f64,
    pub bracket_high: f64,
    /// B/C at `price`; `None` when the cost base is zero.
    pub bc_at_price: Option<f64>,
    /// No costs at all: any positive price is viable.
    pub degenerate: bool,
}

/// Biochar price at which the biochar sector's base-value B/C equals one,
/// searched over the support of the price distribution.
pub fn biochar_breakeven(spec: &ScenarioSpec, tol: f64) -> Result<Breakeven, ChainError> {
    let dist = spec.biochar.biochar_price;
    let (lo, hi) = (dist.low, dist.high);
    match biochar_bc_at_price(spec, hi) {
        Err(ChainError::Finance {
            source: FinanceError::ZeroCostBase,
            ..
        }) => {
            let price = if lo > 0.0 { lo } else { hi };
            return Ok(Breakeven {
                price,
                bracket_low: lo,
                bracket_high: hi,
                bc_at_price: None,
                degenerate: true,
            });
        }
        Err(e) => return Err(e),
        Ok(_) => {}
    }
    // the cost base does not depend on price, so this closure cannot fail
    let objective = |p: f64| {
        biochar_bc_at_price(spec, p)
            .map(|bc| bc - 1.0)
            .unwrap_or(f64::NAN)
    };
    let price =
        finance::breakeven(objective, lo, hi, tol).map_err(|source| ChainError::Finance {
            sector: Sector::Biochar,
            source,
        })?;
    Ok(Breakeven {
        price,
        bracket_low: lo,
        bracket_high: hi,
        bc_at_price: Some(biochar_bc_at_price(spec, price)?),
        degenerate: false,
    })
}
