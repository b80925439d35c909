//! Scenario files: TOML with one table per ingredient. Errors carry the
//! line of the offending table or key.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use cosdyn::criteria::Budget;
use cosdyn::dynamics::{MapSpec, WeightSpec};
use cosdyn::{CompactSet, DynMap, GridFunction, NumericMode, OperatorHandle, Scalar, Site, SpaceNorm};
use serde::{Deserialize, Serialize};
use toml::Spanned;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Check,
    WitnessDemo,
    PeriodicDemo,
    NormDecay,
    Sweep,
}

#[derive(Debug)]
pub struct ConfigError {
    pub path: PathBuf,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: {}", self.path.display(), self.line, self.column, self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    command: Option<Spanned<Command>>,
    mode: Option<Spanned<NumericMode>>,
    output_dir: Option<String>,
    space: Spanned<toml::Value>,
    map: Spanned<toml::Value>,
    weight: Spanned<toml::Value>,
    k: Spanned<toml::Value>,
    budget: Option<Spanned<toml::Value>>,
    scan: Option<Spanned<toml::Value>>,
    witness: Option<Spanned<toml::Value>>,
    periodic: Option<Spanned<toml::Value>>,
    sweep: Option<Spanned<toml::Value>>,
}

/// `K` as an integer range (d = 1), a rectangle (d = 2) or explicit sites.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetSpec {
    pub range: Option<[i64; 2]>,
    pub rect: Option<[[i64; 2]; 2]>,
    pub sites: Option<Vec<Vec<i64>>>,
}

impl SetSpec {
    pub fn build(&self) -> Result<CompactSet, String> {
        match (&self.range, &self.rect, &self.sites) {
            (Some([lo, hi]), None, None) => {
                if lo > hi {
                    return Err(format!("empty range [{lo}, {hi}]"));
                }
                Ok(CompactSet::interval(*lo, *hi))
            }
            (None, Some([x, y]), None) => Ok(CompactSet::rect((x[0], x[1]), (y[0], y[1]))),
            (None, None, Some(sites)) => {
                let sites = sites.iter().map(|c| Site::new(c)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
                let dim = sites.first().map(Site::dim).ok_or("no sites given")?;
                CompactSet::from_sites(dim, sites).map_err(|e| e.to_string())
            }
            _ => Err("give exactly one of `range`, `rect`, `sites`".into()),
        }
    }
}

/// A finitely supported function: explicit entries, or `value · χ_set`
/// (`value` defaults to 1; an absent set means `χ_K`).
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionSpec {
    pub entries: Option<Vec<(Vec<i64>, Scalar)>>,
    pub range: Option<[i64; 2]>,
    pub rect: Option<[[i64; 2]; 2]>,
    pub sites: Option<Vec<Vec<i64>>>,
    pub value: Option<Scalar>,
}

impl FunctionSpec {
    pub fn build(&self, k: &CompactSet, mode: NumericMode) -> Result<GridFunction, String> {
        if let Some(entries) = &self.entries {
            let entries = entries
                .iter()
                .map(|(c, v)| Ok((Site::new(c).map_err(|e| e.to_string())?, v.clone())))
                .collect::<Result<Vec<_>, String>>()?;
            return GridFunction::from_entries(k.dim(), mode, entries).map_err(|e| e.to_string());
        }
        let set = if self.range.is_some() || self.rect.is_some() || self.sites.is_some() {
            SetSpec { range: self.range, rect: self.rect, sites: self.sites.clone() }.build()?
        } else {
            k.clone()
        };
        let value = self.value.clone().unwrap_or_else(Scalar::one);
        Ok(set.indicator(mode).scale(&value).in_mode(mode))
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSpec {
    #[serde(default = "default_scan_n")]
    pub n_max: u64,
    #[serde(default = "default_series_terms")]
    pub series_terms: u64,
}

fn default_scan_n() -> u64 {
    60
}

fn default_series_terms() -> u64 {
    16
}

impl Default for ScanSpec {
    fn default() -> Self {
        ScanSpec { n_max: default_scan_n(), series_terms: default_series_terms() }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSpec {
    pub n: u64,
    #[serde(default)]
    pub f: FunctionSpec,
    #[serde(default)]
    pub g: FunctionSpec,
    /// Iterates at which the orbit of `v` is traced; defaults to `0..=2n`.
    pub trace_n: Option<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeriodicSpec {
    pub n: u64,
    /// Chosen automatically when absent.
    pub truncation: Option<u64>,
    #[serde(default)]
    pub f: FunctionSpec,
    #[serde(default = "default_lags")]
    pub lags: u64,
}

fn default_lags() -> u64 {
    5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Weight keys and the values each takes; cells are the cartesian product.
    pub grid: BTreeMap<String, Vec<toml::Value>>,
    #[serde(default)]
    pub parallel: bool,
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub source_path: PathBuf,
    pub command: Command,
    pub mode: NumericMode,
    pub output_dir: PathBuf,
    pub space: SpaceNorm,
    pub map_spec: MapSpec,
    pub weight_value: toml::Value,
    pub weight_spec: WeightSpec,
    pub k: CompactSet,
    pub budget: Budget,
    pub scan: ScanSpec,
    pub witness: Option<WitnessSpec>,
    pub periodic: Option<PeriodicSpec>,
    pub sweep: Option<SweepSpec>,
}

fn location(source: &str, offset: usize) -> (usize, usize) {
    let before = &source[..offset.min(source.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

struct Loader<'a> {
    path: &'a Path,
    source: &'a str,
}

impl Loader<'_> {
    fn error_at(&self, offset: usize, message: impl Into<String>) -> ConfigError {
        let (line, column) = location(self.source, offset);
        ConfigError { path: self.path.to_path_buf(), line, column, message: message.into() }
    }

    fn typed<T: serde::de::DeserializeOwned>(&self, name: &str, value: &Spanned<toml::Value>) -> Result<T, ConfigError> {
        value
            .get_ref()
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| self.error_at(value.span().start, format!("[{name}]: {}", e.message())))
    }

    fn optional<T: serde::de::DeserializeOwned>(&self, name: &str, value: &Option<Spanned<toml::Value>>) -> Result<Option<T>, ConfigError> {
        value.as_ref().map(|v| self.typed(name, v)).transpose()
    }
}

impl Scenario {
    pub fn parse(path: &Path, source: &str) -> Result<Scenario, ConfigError> {
        let loader = Loader { path, source };
        let raw: RawScenario = toml::from_str(source).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            loader.error_at(offset, e.message().to_string())
        })?;
        let space: SpaceNorm = loader.typed("space", &raw.space)?;
        space.validate().map_err(|e| loader.error_at(raw.space.span().start, format!("[space]: {e}")))?;
        let map_spec: MapSpec = loader.typed("map", &raw.map)?;
        let map = map_spec.build().map_err(|e| loader.error_at(raw.map.span().start, format!("[map]: {e}")))?;
        let weight_spec: WeightSpec = loader.typed("weight", &raw.weight)?;
        let weight = weight_spec.build().map_err(|e| loader.error_at(raw.weight.span().start, format!("[weight]: {e}")))?;
        let set: SetSpec = loader.typed("k", &raw.k)?;
        let k = set.build().map_err(|e| loader.error_at(raw.k.span().start, format!("[k]: {e}")))?;
        if k.dim() != map.dim() {
            return Err(loader.error_at(
                raw.k.span().start,
                format!("[k]: K has dimension {} but the map has dimension {}", k.dim(), map.dim()),
            ));
        }
        let _ = OperatorHandle::new(map, weight);
        let budget: Budget = loader.optional("budget", &raw.budget)?.unwrap_or_default();
        if let Some(b) = &raw.budget {
            budget.validate().map_err(|e| loader.error_at(b.span().start, format!("[budget]: {e}")))?;
        }
        let scan: ScanSpec = loader.optional("scan", &raw.scan)?.unwrap_or_default();
        if scan.n_max == 0 || scan.series_terms == 0 {
            let at = raw.scan.as_ref().map_or(0, |s| s.span().start);
            return Err(loader.error_at(at, "[scan]: n_max and series_terms must be positive"));
        }
        let witness: Option<WitnessSpec> = loader.optional("witness", &raw.witness)?;
        let periodic: Option<PeriodicSpec> = loader.optional("periodic", &raw.periodic)?;
        let sweep: Option<SweepSpec> = loader.optional("sweep", &raw.sweep)?;
        let command = raw.command.as_ref().map_or(Command::Check, |c| *c.get_ref());
        let output_dir = raw.output_dir.clone().map_or_else(|| PathBuf::from("out"), PathBuf::from);
        let output_dir = if output_dir.is_relative() {
            path.parent().unwrap_or(Path::new(".")).join(output_dir)
        } else {
            output_dir
        };
        Ok(Scenario {
            source_path: path.to_path_buf(),
            command,
            mode: raw.mode.as_ref().map_or(NumericMode::Exact, |m| *m.get_ref()),
            output_dir,
            space,
            map_spec,
            weight_value: raw.weight.get_ref().clone(),
            weight_spec,
            k,
            budget,
            scan,
            witness,
            periodic,
            sweep,
        })
    }

    pub fn map(&self) -> DynMap {
        self.map_spec.build().expect("validated on load")
    }

    pub fn operator(&self) -> OperatorHandle {
        let op = OperatorHandle::new(self.map(), self.weight_spec.build().expect("validated on load"));
        match self.mode {
            NumericMode::Exact => op,
            NumericMode::Float => op.to_float(),
        }
    }

    /// The same scenario with some weight keys replaced.
    pub fn with_weight_overrides(&self, overrides: &[(String, toml::Value)]) -> Result<Scenario, String> {
        let mut table = self.weight_value.as_table().cloned().ok_or("[weight] must be a table")?;
        for (key, value) in overrides {
            table.insert(key.clone(), value.clone());
        }
        let value = toml::Value::Table(table);
        let spec: WeightSpec = value.clone().try_into().map_err(|e: toml::de::Error| e.message().to_string())?;
        spec.build().map_err(|e| e.to_string())?;
        Ok(Scenario { weight_value: value, weight_spec: spec, sweep: None, ..self.clone() })
    }
}
