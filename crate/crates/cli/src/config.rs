//! JSON run configuration. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use tjent::basis::{Boundary, MAX_SITES};
use tjent::eigensolver::SolverConfig;
use tjent::entanglement::SplitPolicy;

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelBlock,
    #[serde(default)]
    pub solver: SolverBlock,
    #[serde(default)]
    pub analysis: AnalysisBlock,
    #[serde(default)]
    pub io: IoBlock,
    /// Worker threads; defaults to the available parallelism.
    #[serde(default)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryName {
    Periodic,
    Open,
}

impl From<BoundaryName> for Boundary {
    fn from(b: BoundaryName) -> Self {
        match b {
            BoundaryName::Periodic => Boundary::Periodic,
            BoundaryName::Open => Boundary::Open,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBlock {
    pub n_sites: usize,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryName,
    /// Electron numbers; give this or `densities`.
    #[serde(default)]
    pub n_electrons: Option<Vec<usize>>,
    /// Filling fractions `N_el / N`.
    #[serde(default)]
    pub densities: Option<Vec<f64>>,
    pub j_over_t: Vec<f64>,
    #[serde(default)]
    pub density_term: bool,
}

fn default_boundary() -> BoundaryName {
    BoundaryName::Periodic
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverBlock {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub restart_after: usize,
}

impl Default for SolverBlock {
    fn default() -> Self {
        let d = SolverConfig::default();
        Self {
            tol: d.tol,
            max_iter: d.max_iter,
            seed: d.seed,
            restart_after: d.restart_after,
        }
    }
}

impl SolverBlock {
    pub fn to_config(&self) -> SolverConfig {
        SolverConfig {
            tol: self.tol,
            max_iter: self.max_iter,
            seed: self.seed,
            restart_after: self.restart_after,
            ..SolverConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    Default,
    Exhaustive,
    Bounded(usize),
}

impl PolicySpec {
    pub fn resolve(self, n_sites: usize) -> SplitPolicy {
        match self {
            PolicySpec::Default => SplitPolicy::default_for(n_sites),
            PolicySpec::Exhaustive => SplitPolicy::Exhaustive,
            PolicySpec::Bounded(max_size) => SplitPolicy::Bounded { max_size },
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AnalysisBlock {
    /// `[r_min, r_max]`; defaults to the whole curve.
    pub fit_range: Option<[usize; 2]>,
    pub be_freeze_threshold: f64,
    pub ggm_freeze_threshold: f64,
    pub ggm_policy: PolicySpec,
    /// Densities up to this value enter the GGM freezing summary.
    pub ggm_freeze_max_density: f64,
    /// Groups of `J/t` values compared by `freeze`; defaults to the whole grid.
    pub freeze_families: Option<Vec<Vec<f64>>>,
}

impl Default for AnalysisBlock {
    fn default() -> Self {
        Self {
            fit_range: None,
            be_freeze_threshold: tjent::analysis::DEFAULT_BE_FREEZE_THRESHOLD,
            ggm_freeze_threshold: tjent::analysis::DEFAULT_GGM_FREEZE_THRESHOLD,
            ggm_policy: PolicySpec::Default,
            ggm_freeze_max_density: 0.5,
            freeze_families: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoBlock {
    pub output_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub format: Format,
}

impl Default for IoBlock {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("tjent-out"),
            cache_dir: PathBuf::from(".tjent-cache"),
            format: Format::Csv,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            if path.is_empty() || path == "." {
                CliError::ConfigParse(inner.to_string())
            } else {
                CliError::field(path, inner.to_string())
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn boundary(&self) -> Boundary {
        self.model.boundary.into()
    }

    /// Electron numbers in ascending order, whichever way they were given.
    pub fn electrons(&self) -> Vec<usize> {
        match (&self.model.n_electrons, &self.model.densities) {
            (Some(e), _) => e.clone(),
            (None, Some(d)) => d.iter().map(|x| (x * self.model.n_sites as f64).round() as usize).collect(),
            (None, None) => Vec::new(),
        }
    }

    pub fn policy(&self) -> SplitPolicy {
        self.analysis.ggm_policy.resolve(self.model.n_sites)
    }

    pub fn validate(&self) -> CliResult<()> {
        let m = &self.model;
        let n = m.n_sites;
        if !(2..=MAX_SITES).contains(&n) {
            return Err(CliError::field("model.n_sites", format!("must lie in 2..={MAX_SITES}, got {n}")));
        }
        match (&m.n_electrons, &m.densities) {
            (Some(_), Some(_)) => return Err(CliError::field("model", "give either `n_electrons` or `densities`, not both")),
            (None, None) => return Err(CliError::field("model", "one of `n_electrons` or `densities` is required")),
            (Some(list), None) => {
                if list.is_empty() {
                    return Err(CliError::field("model.n_electrons", "grid is empty"));
                }
                for (k, &e) in list.iter().enumerate() {
                    if e % 2 != 0 || e > n {
                        return Err(CliError::field(
                            format!("model.n_electrons[{k}]"),
                            format!("{e} is not an even electron number between 0 and {n}"),
                        ));
                    }
                    if k > 0 && e <= list[k - 1] {
                        return Err(CliError::field(format!("model.n_electrons[{k}]"), "grid must be strictly increasing"));
                    }
                }
            }
            (None, Some(list)) => {
                if list.is_empty() {
                    return Err(CliError::field("model.densities", "grid is empty"));
                }
                for (k, &d) in list.iter().enumerate() {
                    let e = d * n as f64;
                    let nearest = e.round();
                    if !d.is_finite() || (e - nearest).abs() > 1e-9 || nearest < 0.0 || nearest > n as f64 || nearest as usize % 2 != 0 {
                        return Err(CliError::field(
                            format!("model.densities[{k}]"),
                            format!("{d} × {n} sites is not an even electron number"),
                        ));
                    }
                    if k > 0 && d <= list[k - 1] {
                        return Err(CliError::field(format!("model.densities[{k}]"), "grid must be strictly increasing"));
                    }
                }
            }
        }
        check_grid("model.j_over_t", &m.j_over_t)?;
        for (k, &j) in m.j_over_t.iter().enumerate() {
            if j < 0.0 {
                return Err(CliError::field(format!("model.j_over_t[{k}]"), format!("{j} is negative")));
            }
        }

        let s = &self.solver;
        if !(s.tol.is_finite() && s.tol > 0.0) {
            return Err(CliError::field("solver.tol", format!("must be positive, got {}", s.tol)));
        }
        if s.max_iter == 0 {
            return Err(CliError::field("solver.max_iter", "must be at least 1"));
        }
        if s.restart_after < 2 {
            return Err(CliError::field("solver.restart_after", "must be at least 2"));
        }

        let a = &self.analysis;
        if let Some([lo, hi]) = a.fit_range {
            if lo == 0 || hi < lo + 2 {
                return Err(CliError::field("analysis.fit_range", format!("[{lo}, {hi}] must satisfy 1 ≤ r_min and r_max ≥ r_min + 2")));
            }
        }
        for (name, v) in [
            ("analysis.be_freeze_threshold", a.be_freeze_threshold),
            ("analysis.ggm_freeze_threshold", a.ggm_freeze_threshold),
            ("analysis.ggm_freeze_max_density", a.ggm_freeze_max_density),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(CliError::field(name, format!("must be a non-negative number, got {v}")));
            }
        }
        if let PolicySpec::Bounded(0) = a.ggm_policy {
            return Err(CliError::field("analysis.ggm_policy.bounded", "block size must be at least 1"));
        }
        if let Some(families) = &a.freeze_families {
            for (f, fam) in families.iter().enumerate() {
                let field = format!("analysis.freeze_families[{f}]");
                if fam.len() < 2 {
                    return Err(CliError::field(field, "a family needs at least two J/t values"));
                }
                for (k, j) in fam.iter().enumerate() {
                    if !m.j_over_t.contains(j) {
                        return Err(CliError::field(format!("{field}[{k}]"), format!("{j} is not on model.j_over_t")));
                    }
                }
            }
        }
        if self.threads == Some(0) {
            return Err(CliError::field("threads", "must be at least 1"));
        }
        Ok(())
    }
}

fn check_grid(field: &str, grid: &[f64]) -> CliResult<()> {
    if grid.is_empty() {
        return Err(CliError::field(field, "grid is empty"));
    }
    for (k, &x) in grid.iter().enumerate() {
        if !x.is_finite() {
            return Err(CliError::field(format!("{field}[{k}]"), "must be finite"));
        }
        if k > 0 && x <= grid[k - 1] {
            return Err(CliError::field(format!("{field}[{k}]"), "grid must be strictly increasing"));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<RunConfig> {
        RunConfig::from_json(text)
    }

    fn field_of(r: CliResult<RunConfig>) -> String {
        match r {
            Err(CliError::Config { field, .. }) => field,
            other => panic!("expected a field error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse(r#"{"model": {"n_sites": 4, "n_electrons": [2], "j_over_t": [1.0]}}"#).unwrap();
        assert_eq!(cfg.boundary(), Boundary::Periodic);
        assert_eq!(cfg.solver.tol, 1e-10);
        assert_eq!(cfg.io.format, Format::Csv);
        assert_eq!(cfg.policy(), SplitPolicy::Exhaustive);
    }

    #[test]
    fn densities_map_to_electrons() {
        let cfg = parse(r#"{"model": {"n_sites": 12, "densities": [0.5, 0.6666666666666666], "j_over_t": [1.0]}}"#).unwrap();
        assert_eq!(cfg.electrons(), vec![6, 8]);
    }

    #[test]
    fn offending_fields_are_named() {
        assert_eq!(
            field_of(parse(r#"{"model": {"n_sites": 4, "n_electrons": [2, 3], "j_over_t": [1.0]}}"#)),
            "model.n_electrons[1]"
        );
        assert_eq!(
            field_of(parse(r#"{"model": {"n_sites": 12, "densities": [0.25], "j_over_t": [1.0]}}"#)),
            "model.densities[0]"
        );
        assert_eq!(
            field_of(parse(r#"{"model": {"n_sites": 4, "n_electrons": [2], "j_over_t": [1.0, 0.5]}}"#)),
            "model.j_over_t[1]"
        );
        assert_eq!(
            field_of(parse(r#"{"model": {"n_sites": 4, "n_electrons": [2], "j_over_t": [1.0], "colour": 1}}"#)),
            "model.colour"
        );
        assert_eq!(
            field_of(parse(r#"{"model": {"n_sites": 4, "n_electrons": [2], "j_over_t": []}}"#)),
            "model.j_over_t"
        );
        assert_eq!(
            field_of(parse(r#"{"model": {"n_sites": 4, "n_electrons": [2], "j_over_t": [1]}, "solver": {"tol": "x"}}"#)),
            "solver.tol"
        );
        assert_eq!(
            field_of(parse(
                r#"{"model": {"n_sites": 4, "n_electrons": [2], "j_over_t": [1, 2]}, "analysis": {"freeze_families": [[1, 3]]}}"#
            )),
            "analysis.freeze_families[0][1]"
        );
    }

    #[test]
    fn unknown_top_level_key_is_an_error() {
        let err = parse(r#"{"model": {"n_sites": 4, "n_electrons": [2], "j_over_t": [1]}, "sovler": {}}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("sovler"), "{err}");
    }

    #[test]
    fn policy_spellings() {
        let cfg = parse(r#"{"model": {"n_sites": 16, "n_electrons": [2], "j_over_t": [1]}, "analysis": {"ggm_policy": {"bounded": 2}}}"#).unwrap();
        assert_eq!(cfg.policy(), SplitPolicy::Bounded { max_size: 2 });
        let cfg = parse(r#"{"model": {"n_sites": 16, "n_electrons": [2], "j_over_t": [1]}}"#).unwrap();
        assert_eq!(cfg.policy(), SplitPolicy::Bounded { max_size: 3 });
    }
}
