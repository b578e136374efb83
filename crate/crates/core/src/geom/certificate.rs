use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Submersion,
    Diffeo,
    Verticality,
    Section,
}

/// Quantitative evidence attached to a map, computed on `grid_used`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub residual: f64,
    pub margin: f64,
    pub grid_used: Vec<usize>,
}

impl Certificate {
    pub fn new(kind: CertificateKind, residual: f64, margin: f64, grid_used: Vec<usize>) -> Self {
        Self { kind, residual, margin, grid_used }
    }

    /// Margin strictly above `min`.
    pub fn margin_exceeds(&self, min: f64) -> bool {
        self.margin > min
    }

    pub fn residual_within(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}
