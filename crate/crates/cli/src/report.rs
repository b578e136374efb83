//! Machine-readable reports. Field order is fixed by the struct layout, so
//! identical runs serialize to identical bytes.

use serde::Serialize;

use crate::config::RunConfig;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">")]
    Above,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::Above => ">",
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    /// `None` when the check could not be evaluated (see `error`).
    pub residual: Option<f64>,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Check {
    pub fn at_most(name: impl Into<String>, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            residual: Some(residual),
            threshold,
            relation: Relation::AtMost,
            pass: residual <= threshold,
            error: None,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { pass: value > threshold, relation: Relation::Above, ..Self::at_most(name, value, threshold) }
    }

    pub fn failed(name: impl Into<String>, threshold: f64, relation: Relation, error: impl ToString) -> Self {
        Self { name: name.into(), residual: None, threshold, relation, pass: false, error: Some(error.to_string()) }
    }
}

/// Worst case of a residual over many instances; the first error wins.
#[derive(Clone, Debug)]
pub struct Sup {
    name: String,
    relation: Relation,
    value: f64,
    error: Option<String>,
}

impl Sup {
    pub fn max(name: impl Into<String>) -> Self {
        Self { name: name.into(), relation: Relation::AtMost, value: 0.0, error: None }
    }

    /// Tracks a minimum instead, for margins.
    pub fn min(name: impl Into<String>) -> Self {
        Self { name: name.into(), relation: Relation::Above, value: f64::INFINITY, error: None }
    }

    pub fn push(&mut self, v: f64) {
        self.value = match self.relation {
            Relation::AtMost if v.is_nan() || v > self.value => v,
            Relation::Above if v.is_nan() || v < self.value => v,
            _ => self.value,
        };
    }

    pub fn record<E: ToString>(&mut self, r: Result<f64, E>) {
        match r {
            Ok(v) => self.push(v),
            Err(e) => self.fail(e),
        }
    }

    pub fn fail(&mut self, e: impl ToString) {
        if self.error.is_none() {
            self.error = Some(e.to_string());
        }
    }

    pub fn check(self, threshold: f64) -> Check {
        if let Some(e) = self.error {
            return Check::failed(self.name, threshold, self.relation, e);
        }
        match self.relation {
            Relation::AtMost => Check::at_most(self.name, self.value, threshold),
            Relation::Above => Check::above(self.name, self.value, threshold),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceRow {
    pub grid: usize,
    pub chart_roundtrip: f64,
    pub factorization: f64,
    pub transport: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceTable {
    pub scenario: String,
    pub interp: String,
    pub rows: Vec<ConvergenceRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub config: RunConfig,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tables: Vec<ConvergenceTable>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub artifacts: Vec<String>,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<f64>,
}

impl Report {
    pub fn new(command: Vec<String>, config: RunConfig, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.pass);
        Self { command, config, checks, tables: Vec::new(), artifacts: Vec::new(), passed, wall_time_s: None }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sup_tracks_worst_case_and_errors() {
        let mut s = Sup::max("a");
        s.push(1e-12);
        s.push(3e-12);
        s.push(2e-12);
        let c = s.check(1e-11);
        assert_eq!((c.residual, c.pass), (Some(3e-12), true));

        let mut s = Sup::max("b");
        s.push(f64::NAN);
        s.push(0.0);
        assert!(!s.check(1.0).pass);

        let mut s = Sup::min("m");
        s.record::<String>(Ok(0.5));
        s.record(Err("boom"));
        let c = s.check(0.0);
        assert!(!c.pass && c.error.as_deref() == Some("boom"));
    }

    #[test]
    fn report_key_order_is_stable() {
        let r = Report::new(vec!["verify".into()], RunConfig::default(), vec![Check::above("x", 1.0, 0.0)]);
        let json = r.to_json();
        let order: Vec<usize> =
            ["\"command\"", "\"config\"", "\"checks\"", "\"passed\""].iter().map(|k| json.find(k).unwrap()).collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert!(!json.contains("wall_time_s"));
    }
}
