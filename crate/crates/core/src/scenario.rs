//! Named scenarios: a coefficient set plus the data needed to assemble and
//! check one exact solution. The built-in catalog is compiled in; setting
//! `VCNLS_CATALOG_DIR` replaces it with the `*.json` files of a directory.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coeffs::{parse_time_expression, CoefficientSet, TimeFunction};
use crate::error::{Error, Result};
use crate::seeds::SeedKind;
use crate::validate::GridSpec;

pub const CATALOG_ENV: &str = "VCNLS_CATALOG_DIR";

const BUILTIN: &[(&str, &str)] = &[
    ("bending_bright", include_str!("../catalog/bending_bright.json")),
    ("bending_dark", include_str!("../catalog/bending_dark.json")),
    ("ermakov_forced", include_str!("../catalog/ermakov_forced.json")),
    ("example1", include_str!("../catalog/example1.json")),
    ("example2_gp", include_str!("../catalog/example2_gp.json")),
    ("example2_gp_blowup", include_str!("../catalog/example2_gp_blowup.json")),
    ("example3_toy", include_str!("../catalog/example3_toy.json")),
    ("example4_bright", include_str!("../catalog/example4_bright.json")),
    ("example5_dark", include_str!("../catalog/example5_dark.json")),
    ("family_bright", include_str!("../catalog/family_bright.json")),
    ("family_dark", include_str!("../catalog/family_dark.json")),
    ("sch1", include_str!("../catalog/sch1.json")),
    ("sch1_fast_decay", include_str!("../catalog/sch1_fast_decay.json")),
    ("sch2", include_str!("../catalog/sch2.json")),
    ("sch2_perturbed", include_str!("../catalog/sch2_perturbed.json")),
];

/// How a scenario's exact solution is put together.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assembly {
    /// Riccati solution with the spatially constant seed.
    PlaneWave,
    /// Riccati solution and a 1D seed.
    Lens,
    /// Gauge case `a = -l₀`, `β = 1`, `γ = t`, `ε = 0`.
    Gauge,
    /// Closed-form soliton family (`a = b = 1/2`, `c₀ = 1`).
    Family,
    /// Ermakov solution with an elliptic profile; the coefficients are balanced.
    Soliton,
    /// Two Riccati solutions and a 2D seed.
    Lens2d,
    /// 2D cubic ground state after the pseudoconformal transform.
    Pseudoconformal,
}

impl Assembly {
    pub const ALL: [Assembly; 7] = [
        Assembly::PlaneWave,
        Assembly::Lens,
        Assembly::Gauge,
        Assembly::Family,
        Assembly::Soliton,
        Assembly::Lens2d,
        Assembly::Pseudoconformal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Assembly::PlaneWave => "plane_wave",
            Assembly::Lens => "lens",
            Assembly::Gauge => "gauge",
            Assembly::Family => "family",
            Assembly::Soliton => "soliton",
            Assembly::Lens2d => "lens_2d",
            Assembly::Pseudoconformal => "pseudoconformal",
        }
    }

    fn needs_seed(self) -> bool {
        matches!(self, Assembly::Lens | Assembly::Gauge | Assembly::Lens2d)
    }
}

impl fmt::Display for Assembly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Assembly {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Assembly::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::MalformedScenario(format!("unknown assembly '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedSpec {
    pub kind: SeedKind,
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub coefficients: CoefficientSet,
    /// Closed forms in `t`. `mu0`/`mu1` replace the numeric basis; the others
    /// (`mu`, `alpha`, …, or coefficient names for generated equations) are
    /// regression targets at the default parameters.
    pub closed_forms: BTreeMap<String, TimeFunction>,
    pub seed: Option<SeedSpec>,
    pub assembly: Assembly,
    /// Default initial data (`mu0`, `alpha0`, …, `c0`, `xi0`, `h0`, `y`).
    pub parameters: BTreeMap<String, f64>,
    pub time_domain: (f64, f64),
    /// Default verification grid.
    pub grid: Option<GridSpec>,
    pub notes: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SeedFile {
    kind: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: String,
    dimension: u8,
    l0: f64,
    s: f64,
    coefficients: BTreeMap<String, String>,
    #[serde(default)]
    closed_forms: BTreeMap<String, String>,
    seed: Option<SeedFile>,
    #[serde(default)]
    assembly: Option<String>,
    #[serde(default)]
    parameters: BTreeMap<String, f64>,
    time_domain: [f64; 2],
    #[serde(default)]
    grid: Option<String>,
    #[serde(default)]
    notes: String,
}

fn malformed(name: &str, what: impl fmt::Display) -> Error {
    Error::MalformedScenario(format!("{name}: {what}"))
}

/// Parses a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| Error::MalformedScenario(e.to_string()))?;
    let name = file.name.clone();
    if name.is_empty() {
        return Err(Error::MalformedScenario("empty name".into()));
    }
    if file.dimension != 1 && file.dimension != 2 {
        return Err(malformed(&name, format!("dimension {} must be 1 or 2", file.dimension)));
    }
    if file.l0 != 1.0 && file.l0 != -1.0 {
        return Err(malformed(&name, format!("l0 = {} must be +1 or -1", file.l0)));
    }
    if !(file.s >= 0.0) {
        return Err(malformed(&name, format!("s = {} must be >= 0", file.s)));
    }
    let [t0, t1] = file.time_domain;
    if !(t0 <= 0.0 && t1 > 0.0 && t0.is_finite() && t1.is_finite()) {
        return Err(malformed(&name, format!("time_domain [{t0}, {t1}] must contain [0, t1) with t1 > 0")));
    }
    if !file.coefficients.contains_key("a") {
        return Err(Error::MissingCoefficient("a".into()));
    }
    let mut coefficients = CoefficientSet::free(1.0);
    for (key, src) in &file.coefficients {
        let tf = parse_time_expression(src).map_err(|e| malformed(&name, format!("coefficient {key}: {e}")))?;
        coefficients.set(key, tf)?;
    }
    coefficients.s = file.s;
    coefficients.l0 = file.l0;
    coefficients.dimension = file.dimension;
    coefficients.validate()?;
    coefficients.check_dispersion(t0, t1)?;

    let mut closed_forms = BTreeMap::new();
    for (key, src) in &file.closed_forms {
        let tf = parse_time_expression(src).map_err(|e| malformed(&name, format!("closed form {key}: {e}")))?;
        closed_forms.insert(key.clone(), tf);
    }
    if closed_forms.contains_key("mu0") != closed_forms.contains_key("mu1") {
        return Err(malformed(&name, "closed forms mu0 and mu1 come in pairs"));
    }

    let assembly = match &file.assembly {
        Some(a) => a.parse()?,
        None if file.dimension == 2 => Assembly::Lens2d,
        None => Assembly::Lens,
    };
    let seed = match file.seed {
        Some(s) => Some(SeedSpec {
            kind: s.kind.parse().map_err(|e| malformed(&name, e))?,
            params: s.params,
        }),
        None => None,
    };
    if assembly.needs_seed() && seed.is_none() {
        return Err(malformed(&name, format!("assembly '{assembly}' needs a seed")));
    }
    let two_d = matches!(assembly, Assembly::Lens2d | Assembly::Pseudoconformal);
    if two_d != (file.dimension == 2) {
        return Err(malformed(&name, format!("assembly '{assembly}' does not fit dimension {}", file.dimension)));
    }
    if let Some((k, v)) = file.parameters.iter().find(|(_, v)| !v.is_finite()) {
        return Err(malformed(&name, format!("parameter {k} = {v}")));
    }
    let grid = match &file.grid {
        Some(g) => Some(g.parse::<GridSpec>().map_err(|e| malformed(&name, e))?),
        None => None,
    };
    if let Some(g) = &grid {
        if g.y.is_some() != (file.dimension == 2) {
            return Err(malformed(&name, "grid dimension does not match"));
        }
    }
    Ok(Scenario {
        name,
        coefficients,
        closed_forms,
        seed,
        assembly,
        parameters: file.parameters,
        time_domain: (t0, t1),
        grid,
        notes: file.notes,
    })
}

fn catalog_dir() -> Option<std::path::PathBuf> {
    std::env::var_os(CATALOG_ENV).filter(|v| !v.is_empty()).map(Into::into)
}

fn dir_entries(dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let mut out: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    out.sort();
    Ok(out)
}

/// Names of the catalog scenarios, sorted.
pub fn list_scenarios() -> Result<Vec<String>> {
    match catalog_dir() {
        Some(dir) => {
            let mut names = Vec::new();
            for p in dir_entries(&dir)? {
                names.push(parse_scenario(&std::fs::read_to_string(&p)?)?.name);
            }
            names.sort();
            let n = names.len();
            names.dedup();
            if names.len() != n {
                return Err(Error::MalformedScenario(format!("duplicate scenario names in {}", dir.display())));
            }
            Ok(names)
        }
        None => Ok(BUILTIN.iter().map(|(n, _)| n.to_string()).collect()),
    }
}

/// Loads a catalog scenario by name, or a scenario file by path.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario> {
    let path = Path::new(name_or_path);
    if name_or_path.ends_with(".json") || name_or_path.contains(std::path::MAIN_SEPARATOR) {
        if !path.is_file() {
            return Err(Error::UnknownScenario(name_or_path.to_string()));
        }
        return parse_scenario(&std::fs::read_to_string(path)?);
    }
    match catalog_dir() {
        Some(dir) => {
            for p in dir_entries(&dir)? {
                let sc = parse_scenario(&std::fs::read_to_string(&p)?)?;
                if sc.name == name_or_path {
                    return Ok(sc);
                }
            }
            Err(Error::UnknownScenario(name_or_path.to_string()))
        }
        None => BUILTIN
            .iter()
            .find(|(n, _)| *n == name_or_path)
            .map(|(_, text)| parse_scenario(text))
            .unwrap_or_else(|| Err(Error::UnknownScenario(name_or_path.to_string()))),
    }
}

/// Raw JSON of a built-in scenario.
pub fn builtin_source(name: &str) -> Option<&'static str> {
    BUILTIN.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
