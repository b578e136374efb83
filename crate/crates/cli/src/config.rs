//! Run configuration: shapes, grids, tolerances and the seed.
//!
//! A config is read from TOML or JSON (by extension), then CLI flags are
//! layered on top. [`RunConfig::resolve`] fills in derived defaults so that
//! the config echoed into reports is complete.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fibspace::Interp;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Default thresholds, keyed by check name. Every check in the suites reads
/// its threshold from here, possibly overridden by `--tol KEY=VAL`.
pub const DEFAULT_TOLERANCES: &[(&str, f64)] = &[
    ("geom.associativity", 1e-9),
    ("geom.inversion", 1e-9),
    ("geom.chain_rule", 1e-6),
    ("geom.jacobian_fd", 1e-6),
    ("geom.spectral_rate", 0.25),
    ("geom.format", 0.0),
    ("tubular.fiber_membership", 0.0),
    ("tubular.tube_invariance", 0.0),
    ("tubular.idempotence_flat", 0.0),
    ("tubular.idempotence_conformal", 1e-8),
    ("tubular.g_invariance", 1e-10),
    ("tubular.riemann_flat_limit", 1e-8),
    ("tubular.riemann_scan", 1e-4),
    ("chart.domain", 0.0),
    ("chart.verticality", 1e-9),
    ("chart.slice", 1e-9),
    ("chart.roundtrip", 1e-8),
    ("chart.equivariance", 1e-8),
    ("chart.invariance", 0.0),
    ("orbit.factorize", 1e-8),
    ("orbit.coset_roundtrip", 1e-8),
    ("orbit.map_roundtrip", 1e-8),
    ("orbit.section_form", 1e-8),
    ("orbit.shear", 1e-9),
    ("orbit.chain", 1e-8),
    ("orbit.section_exchange", 1e-9),
    ("orbit.fixed_point", 1e-10),
    ("base.roundtrip", 1e-8),
    ("base.equivariance", 1e-8),
    ("base.openness", 0.0),
    ("base.reconstruction", 1.0),
    ("base.vanishing", 1e-9),
    ("base.spectral_energy", 1e-12),
    ("transport.margin", 0.0),
    ("transport.drift", 1e-6),
    ("transport.order", 0.3),
    ("transport.coset", 1e-6),
    ("transport.linearity", 1e-12),
    ("transport.fibers", 1e-6),
    ("convergence.monotone", 0.0),
    ("convergence.floor", 1e-11),
    ("convergence.cubic_slope", 0.7),
    ("determinism", 0.0),
    ("margin_min", 1e-6),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterpName {
    Trig,
    Cubic,
}

impl From<InterpName> for Interp {
    fn from(i: InterpName) -> Self {
        match i {
            InterpName::Trig => Interp::Trig,
            InterpName::Cubic => Interp::Cubic,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Flat,
    Conformal,
}

/// Fiber metric used by the tube projections of the chart and orbit suites.
/// The conformal factor is `e^{2λ}` with `λ = amplitude·sin(θ₀ + θ_f)`, `θ`
/// the angle coordinates of the first base and the fiber axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub kind: MetricKind,
    pub amplitude: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self { kind: MetricKind::Flat, amplitude: 0.3 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Dimension of `M = T^m`.
    pub m: usize,
    /// Dimension of `B = T^k`.
    pub k: usize,
    /// Periods of `M`; empty means `2π` on every axis.
    pub periods: Vec<f64>,
    /// Nodes per axis.
    pub grid: usize,
    pub convergence_grids: Vec<usize>,
    pub interp: InterpName,
    /// Tube radius; `None` means an eighth of the smallest base period.
    pub delta: Option<f64>,
    pub metric: MetricConfig,
    /// Fiber coordinates of the global section `b ↦ (b, c)`.
    pub section_fiber: Vec<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 2,
            k: 1,
            periods: Vec::new(),
            grid: 64,
            convergence_grids: vec![16, 32, 64],
            interp: InterpName::Trig,
            delta: None,
            metric: MetricConfig::default(),
            section_fiber: Vec::new(),
            seed: 42,
            out: None,
            tolerances: BTreeMap::new(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML (`.toml`) or JSON (anything else) config file.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let parsed = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| e.to_string())
        } else {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies a `KEY=VAL` tolerance override.
    pub fn set_tolerance(&mut self, spec: &str) -> Result<(), CliError> {
        let (key, val) = spec
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("tolerance override `{spec}` is not KEY=VAL")))?;
        let key = key.trim();
        if !DEFAULT_TOLERANCES.iter().any(|(k, _)| *k == key) {
            return Err(CliError::Config(format!("unknown tolerance key `{key}`")));
        }
        let val: f64 = val
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("tolerance `{key}` needs a number, got `{val}`")))?;
        self.tolerances.insert(key.to_string(), val);
        Ok(())
    }

    /// Validates the config and fills in every default, so the result
    /// serializes to a complete description of the run.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if self.m == 0 || self.k == 0 || self.k >= self.m {
            return Err(CliError::Config(format!("need 0 < k < m, got m = {}, k = {}", self.m, self.k)));
        }
        if self.periods.is_empty() {
            self.periods = vec![std::f64::consts::TAU; self.m];
        }
        if self.periods.len() != self.m || self.periods.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(CliError::Config(format!("need {} positive periods, got {:?}", self.m, self.periods)));
        }
        if self.grid < fibspace::geom::MIN_GRID {
            return Err(CliError::Config(format!(
                "grid must have at least {} nodes per axis",
                fibspace::geom::MIN_GRID
            )));
        }
        if self.convergence_grids.len() < 3 || self.convergence_grids.iter().any(|&g| g < fibspace::geom::MIN_GRID) {
            return Err(CliError::Config(format!(
                "convergence needs at least three grids of size ≥ {}, got {:?}",
                fibspace::geom::MIN_GRID,
                self.convergence_grids
            )));
        }
        if self.section_fiber.is_empty() {
            self.section_fiber = vec![0.0; self.m - self.k];
        }
        if self.section_fiber.len() != self.m - self.k {
            return Err(CliError::Config(format!("section_fiber needs {} entries", self.m - self.k)));
        }
        if self.metric.kind == MetricKind::Conformal && self.m - self.k != 1 {
            return Err(CliError::Config("the conformal metric needs one-dimensional fibers".into()));
        }
        for key in self.tolerances.keys() {
            if !DEFAULT_TOLERANCES.iter().any(|(k, _)| k == key) {
                return Err(CliError::Config(format!("unknown tolerance key `{key}`")));
            }
        }
        for (key, val) in DEFAULT_TOLERANCES {
            self.tolerances.entry(key.to_string()).or_insert(*val);
        }
        Ok(self)
    }

    /// Threshold for `key`; falls back to the built-in default.
    pub fn tol(&self, key: &str) -> f64 {
        self.tolerances.get(key).copied().unwrap_or_else(|| {
            DEFAULT_TOLERANCES.iter().find(|(k, _)| *k == key).map(|(_, v)| *v).expect("known tolerance key")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_fills_defaults() {
        let c = RunConfig::default().resolve().unwrap();
        assert_eq!(c.periods, vec![std::f64::consts::TAU; 2]);
        assert_eq!(c.section_fiber, vec![0.0]);
        assert_eq!(c.tolerances.len(), DEFAULT_TOLERANCES.len());
        assert_eq!(c.tol("chart.slice"), 1e-9);
    }

    #[test]
    fn rejects_bad_input() {
        let mut c = RunConfig::default();
        assert!(c.set_tolerance("chart.slice").is_err());
        assert!(c.set_tolerance("nope=1").is_err());
        c.set_tolerance("chart.slice=1e-15").unwrap();
        assert_eq!(c.clone().resolve().unwrap().tol("chart.slice"), 1e-15);
        assert!(RunConfig { k: 2, ..RunConfig::default() }.resolve().is_err());
        assert!(RunConfig { convergence_grids: vec![16, 32], ..RunConfig::default() }.resolve().is_err());
    }

    #[test]
    fn parses_toml_and_json() {
        let t: RunConfig = toml::from_str("seed = 7\ngrid = 32\n[metric]\nkind = \"conformal\"\n").unwrap();
        assert_eq!((t.seed, t.grid, t.metric.kind), (7, 32, MetricKind::Conformal));
        let j: RunConfig = serde_json::from_str(r#"{"interp": "cubic", "tolerances": {"chart.slice": 1e-7}}"#).unwrap();
        assert_eq!(j.interp, InterpName::Cubic);
        assert!(serde_json::from_str::<RunConfig>(r#"{"bogus": 1}"#).is_err());
    }
}
