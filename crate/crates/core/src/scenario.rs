//! On-disk scenario files: a JSON object holding every field of
//! [`ScenarioSpec`] plus Monte Carlo settings and optional sensitivity
//! variable overrides. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    BiocharInputs, CarbonInputs, ScenarioKind, ScenarioSpec, Sector, VineyardInputs, WineryInputs,
};
use crate::finance::FinanceParams;
use crate::mc::McConfig;

const INDEPENDENT_JSON: &str = include_str!("../scenarios/independent.json");
const INTEGRATED_JSON: &str = include_str!("../scenarios/integrated.json");

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: at `{json_path}`: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        json_path: String,
        message: String,
    },
}

/// Per-sector replacements for the default sensitivity variable sets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitivityOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub biochar: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vineyard: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub winery: Option<Vec<String>>,
}

impl SensitivityOverrides {
    pub fn for_sector(&self, s: Sector) -> Option<&[String]> {
        match s {
            Sector::Biochar => self.biochar.as_deref(),
            Sector::Vineyard => self.vineyard.as_deref(),
            Sector::Winery => self.winery.as_deref(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub kind: ScenarioKind,
    pub finance: FinanceParams,
    pub biochar: BiocharInputs,
    pub vineyard: VineyardInputs,
    pub winery: WineryInputs,
    pub carbon: CarbonInputs,
    #[serde(default)]
    pub monte_carlo: McConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sensitivity: Option<SensitivityOverrides>,
}

impl ScenarioFile {
    pub fn new(spec: ScenarioSpec, monte_carlo: McConfig) -> Self {
        Self {
            name: spec.name,
            kind: spec.kind,
            finance: spec.finance,
            biochar: spec.biochar,
            vineyard: spec.vineyard,
            winery: spec.winery,
            carbon: spec.carbon,
            monte_carlo,
            sensitivity: None,
        }
    }

    pub fn spec(&self) -> ScenarioSpec {
        ScenarioSpec {
            name: self.name.clone(),
            kind: self.kind,
            finance: self.finance,
            biochar: self.biochar.clone(),
            vineyard: self.vineyard.clone(),
            winery: self.winery.clone(),
            carbon: self.carbon.clone(),
        }
    }

    pub fn sensitivity_variables(&self, s: Sector) -> Option<&[String]> {
        self.sensitivity.as_ref().and_then(|o| o.for_sector(s))
    }

    /// Parses JSON text; `origin` only labels error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let json_path = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError::Parse {
                path: origin.to_owned(),
                line: inner.line(),
                column: inner.column(),
                json_path,
                message: inner.to_string(),
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::parse(&text, path)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }

    /// One of the two bundled scenario files.
    pub fn bundled(kind: ScenarioKind) -> Self {
        let (text, name) = match kind {
            ScenarioKind::Independent => (INDEPENDENT_JSON, "independent.json"),
            ScenarioKind::Integrated => (INTEGRATED_JSON, "integrated.json"),
        };
        Self::parse(text, Path::new(name)).expect("bundled scenario parses")
    }
}

pub fn bundled_json(kind: ScenarioKind) -> &'static str {
    match kind {
        ScenarioKind::Independent => INDEPENDENT_JSON,
        ScenarioKind::Integrated => INTEGRATED_JSON,
    }
}
