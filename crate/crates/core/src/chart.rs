//! Principal-bundle chart `φ ↦ (φ_S, ψ)` around the identity, with
//! `ψ = P₂∘φ̂` vertical and `φ_S = φ∘ψ⁻¹` in the slice.

use serde::Serialize;

use crate::error::{ChartCause, Error, Result};
use crate::geom::{sup_distance, Certificate, CertificateKind, GridMap, InvertOptions};
use crate::scalar::Real;
use crate::tubular::TubularProjection;

/// Default bound on slice and verticality residuals of chart factors.
pub const FACTOR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerticalityCertificate {
    /// `sup d_B(π₀(φ(x)), π₀(x))` over the verification grid.
    pub residual: f64,
    /// Smallest singular value of `Dπ₀` (off its kernel).
    pub kernel_margin: f64,
    pub grid_used: Vec<usize>,
}

impl VerticalityCertificate {
    pub fn to_certificate(&self) -> Certificate {
        Certificate::new(CertificateKind::Verticality, self.residual, self.kernel_margin, self.grid_used.clone())
    }
}

#[derive(Clone, Debug)]
pub struct ChartedDiffeo<T: Real> {
    pub phi_s: GridMap<T>,
    pub psi: GridMap<T>,
    pub slice: Certificate,
    pub verticality: Certificate,
}

pub fn verticality_residual<T: Real>(pi0: &GridMap<T>, phi: &GridMap<T>) -> Result<VerticalityCertificate> {
    let moved = pi0.compose(phi)?;
    let residual = sup_distance(&moved, pi0)?;
    let grid_used = moved.grid().iter().zip(pi0.grid()).map(|(&a, &b)| 2 * a.max(b)).collect();
    Ok(VerticalityCertificate {
        residual: residual.as_f64(),
        kernel_margin: pi0.submersion_certificate().margin,
        grid_used,
    })
}

/// `sup d_M(P₂(x, φ(x)), x)` over the verification grid.
pub fn slice_residual<T: Real>(p: &TubularProjection<T>, phi: &GridMap<T>) -> Result<Certificate> {
    let psi = p.project_graph(phi)?;
    let id = GridMap::identity(p.shape(), phi.grid().to_vec(), phi.interp())?;
    let r = sup_distance(&psi, &id)?;
    Ok(Certificate::new(CertificateKind::Section, r.as_f64(), 0.0, crate::geom::verification_grid(phi.grid())))
}

fn domain_error(cause: ChartCause, e: Error) -> Error {
    Error::NotInChartDomain { cause, source: Box::new(e) }
}

/// True when `φ` passes the tube test and its vertical factor inverts.
pub fn in_chart_domain<T: Real>(p: &TubularProjection<T>, phi: &GridMap<T>) -> bool {
    chart_decompose(p, phi).is_ok()
}

pub fn chart_decompose<T: Real>(p: &TubularProjection<T>, phi: &GridMap<T>) -> Result<ChartedDiffeo<T>> {
    let psi = p.project_graph(phi).map_err(|e| match e {
        e @ Error::OutsideTube { .. } => domain_error(ChartCause::OutsideTube, e),
        e => e,
    })?;
    let opts = InvertOptions::default();
    let cert = psi.diffeo_certificate()?;
    if !cert.margin_exceeds(opts.margin_min) {
        return Err(domain_error(ChartCause::Inversion, Error::NotADiffeomorphism { node: 0, det: cert.margin }));
    }
    let psi_inv = psi.invert_with(opts).map_err(|e| domain_error(ChartCause::Inversion, e))?;
    let phi_s = phi.compose(&psi_inv)?;
    let slice = slice_residual(p, &phi_s)?;
    let verticality = verticality_residual(p.pi0(), &psi)?.to_certificate();
    Ok(ChartedDiffeo { phi_s, psi, slice, verticality })
}

/// `φ_S∘ψ`, after checking both factors against `tol`.
pub fn chart_assemble_with<T: Real>(
    p: &TubularProjection<T>,
    phi_s: &GridMap<T>,
    psi: &GridMap<T>,
    tol: f64,
) -> Result<GridMap<T>> {
    let v = verticality_residual(p.pi0(), psi)?;
    if !(v.residual <= tol) {
        return Err(Error::InvalidFactor(format!("verticality residual {:e} of ψ exceeds {tol:e}", v.residual)));
    }
    let s = slice_residual(p, phi_s).map_err(|e| Error::InvalidFactor(format!("slice factor: {e}")))?;
    if !(s.residual <= tol) {
        return Err(Error::InvalidFactor(format!("slice residual {:e} of φ_S exceeds {tol:e}", s.residual)));
    }
    phi_s.compose(psi)
}

pub fn chart_assemble<T: Real>(p: &TubularProjection<T>, phi_s: &GridMap<T>, psi: &GridMap<T>) -> Result<GridMap<T>> {
    chart_assemble_with(p, phi_s, psi, FACTOR_TOL)
}

/// The chart translated to `φ₀`: `(φ₀∘(φ₀⁻¹∘φ)_S, (φ₀⁻¹∘φ)_G)`.
pub fn chart_at<T: Real>(phi0: &GridMap<T>, p: &TubularProjection<T>, phi: &GridMap<T>) -> Result<ChartedDiffeo<T>> {
    let rel = phi0.invert()?.compose(phi)?;
    let local = chart_decompose(p, &rel)?;
    Ok(ChartedDiffeo { phi_s: phi0.compose(&local.phi_s)?, ..local })
}
