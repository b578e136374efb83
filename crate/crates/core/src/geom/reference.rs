//! Homotopy references for grid maps.
//!
//! A torus-valued grid map is `x ↦ A·x + d(x)` where `A` is an integer matrix
//! that descends to the tori (identity, coordinate projection, coordinate
//! inclusion, graph maps, coordinate permutations) and `d` is periodic.
//! Vector-valued maps use the zero reference.

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::Real;

use super::torus::TorusShape;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reference {
    /// Integer matrix, row-major `rows × cols` (`rows` = target dim).
    Linear { rows: usize, cols: usize, entries: Vec<i32> },
    /// Vector-valued maps: the reference is identically zero.
    Zero,
}

impl Reference {
    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1;
        }
        Reference::Linear { rows: n, cols: n, entries }
    }

    /// Keeps the first `min(src, dst)` coordinates and pads with zeros:
    /// the coordinate projection when `dst < src`, the inclusion
    /// `b ↦ (b, 0)` when `dst > src`.
    pub fn coordinate(src: usize, dst: usize) -> Self {
        let mut entries = vec![0; src * dst];
        for i in 0..src.min(dst) {
            entries[i * src + i] = 1;
        }
        Reference::Linear { rows: dst, cols: src, entries }
    }

    pub fn linear(rows: usize, cols: usize, entries: Vec<i32>) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::InvalidMap(format!("reference matrix {rows}x{cols} with {} entries", entries.len())));
        }
        Ok(Reference::Linear { rows, cols, entries })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Reference::Zero)
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Reference::Linear { rows, cols, .. } if rows == cols => *self == Reference::identity(*rows),
            _ => false,
        }
    }

    /// True for identity, coordinate projections and coordinate inclusions.
    pub fn is_coordinate(&self) -> bool {
        match self {
            Reference::Linear { rows, cols, .. } => *self == Reference::coordinate(*cols, *rows),
            Reference::Zero => false,
        }
    }

    pub fn entry(&self, i: usize, j: usize) -> i32 {
        match self {
            Reference::Linear { cols, entries, .. } => entries[i * cols + j],
            Reference::Zero => 0,
        }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Reference) -> Result<Reference> {
        match (self, inner) {
            (Reference::Zero, _) => Ok(Reference::Zero),
            (_, Reference::Zero) => Err(Error::ShapeMismatch("cannot precompose with a vector-valued map".into())),
            (Reference::Linear { rows, cols, entries }, Reference::Linear { rows: r2, cols: c2, entries: e2 }) => {
                if cols != r2 {
                    return Err(Error::ShapeMismatch(format!("reference composition {rows}x{cols} ∘ {r2}x{c2}")));
                }
                let mut out = vec![0i32; rows * c2];
                for i in 0..*rows {
                    for k in 0..*cols {
                        let a = entries[i * cols + k];
                        if a == 0 {
                            continue;
                        }
                        for j in 0..*c2 {
                            out[i * c2 + j] += a * e2[k * c2 + j];
                        }
                    }
                }
                Ok(Reference::Linear { rows: *rows, cols: *c2, entries: out })
            }
        }
    }

    /// Applies the linear part to `x`, adding into `out`.
    #[inline]
    pub fn apply_add<T: Real>(&self, x: &[T], out: &mut [T]) {
        if let Reference::Linear { cols, entries, .. } = self {
            for (i, o) in out.iter_mut().enumerate() {
                let row = &entries[i * cols..(i + 1) * cols];
                for (&a, &xj) in row.iter().zip(x) {
                    match a {
                        0 => {}
                        1 => *o = *o + xj,
                        -1 => *o = *o - xj,
                        _ => *o = *o + T::of_i64(a as i64) * xj,
                    }
                }
            }
        }
    }

    /// The derivative of the reference, `dst × src`.
    pub fn jacobian<T: Real>(&self, dst: usize, src: usize) -> Mat<T> {
        let mut m = Mat::zeros(dst, src);
        if let Reference::Linear { .. } = self {
            for i in 0..dst {
                for j in 0..src {
                    m[(i, j)] = T::of_i64(self.entry(i, j) as i64);
                }
            }
        }
        m
    }

    /// Checks the reference is compatible with the source and target
    /// (dimensions; integer matrix maps the period lattice into the target
    /// lattice).
    pub fn validate<T: Real>(&self, src: &TorusShape<T>, dst_torus: Option<&TorusShape<T>>) -> Result<()> {
        match (self, dst_torus) {
            (Reference::Zero, None) => Ok(()),
            (Reference::Zero, Some(_)) => {
                Err(Error::InvalidMap("zero reference requires a vector-valued target".into()))
            }
            (Reference::Linear { .. }, None) => {
                Err(Error::InvalidMap("linear reference requires a torus target".into()))
            }
            (Reference::Linear { rows, cols, .. }, Some(dst)) => {
                if *cols != src.dim() || *rows != dst.dim() {
                    return Err(Error::ShapeMismatch(format!(
                        "reference {rows}x{cols} between a {}-torus and a {}-torus",
                        src.dim(),
                        dst.dim()
                    )));
                }
                let tol = T::lit(1e-9);
                for i in 0..*rows {
                    for j in 0..*cols {
                        let a = self.entry(i, j);
                        if a == 0 {
                            continue;
                        }
                        let ratio = T::of_i64(a as i64) * src.period(j) / dst.period(i);
                        if (ratio - ratio.round()).abs() > tol * ratio.abs().max(T::one()) {
                            return Err(Error::ShapeMismatch(format!(
                                "reference entry ({i},{j}) does not map period {} onto the lattice of period {}",
                                src.period(j),
                                dst.period(i)
                            )));
                        }
                    }
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_after_inclusion_is_identity() {
        let proj = Reference::coordinate(3, 2);
        let incl = Reference::coordinate(2, 3);
        assert!(proj.compose(&incl).unwrap().is_identity());
        assert!(!incl.compose(&proj).unwrap().is_identity());
        assert!(proj.is_coordinate() && incl.is_coordinate());
        assert!(Reference::coordinate(2, 2).is_identity());
    }

    #[test]
    fn zero_reference_rules() {
        let z = Reference::Zero;
        assert!(z.compose(&Reference::identity(2)).unwrap().is_zero());
        assert!(Reference::identity(2).compose(&z).is_err());
    }

    #[test]
    fn lattice_check() {
        let m = TorusShape::new(vec![1.0, 2.0]).unwrap();
        let b = TorusShape::new(vec![1.0]).unwrap();
        assert!(Reference::coordinate(2, 1).validate(&m, Some(&b)).is_ok());
        let bad = TorusShape::new(vec![0.7]).unwrap();
        assert!(Reference::coordinate(2, 1).validate(&m, Some(&bad)).is_err());
    }

    #[test]
    fn apply_projection() {
        let r = Reference::coordinate(2, 1);
        let mut out = [0.5];
        r.apply_add(&[1.0, 2.0], &mut out);
        assert_eq!(out, [1.5]);
    }
}
