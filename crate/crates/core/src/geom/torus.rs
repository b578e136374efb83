//! Flat tori `ℝⁿ / (L₁ℤ × … × Lₙℤ)` and points on them.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{min_rep, norm, reduce, Real};

/// Dimension and periods of a flat torus.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusShape<T> {
    periods: Arc<[T]>,
}

impl<T: Real> TorusShape<T> {
    pub fn new(periods: Vec<T>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::InvalidShape("torus dimension must be at least 1".into()));
        }
        if let Some(p) = periods.iter().find(|p| !(p.is_finite() && **p > T::zero())) {
            return Err(Error::InvalidShape(format!("non-positive period {p}")));
        }
        Ok(Self { periods: periods.into() })
    }

    /// `dim`-torus with every period equal to 2π.
    pub fn standard(dim: usize) -> Self {
        Self::new(vec![T::TAU(); dim]).expect("standard torus")
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn periods(&self) -> &[T] {
        &self.periods
    }

    pub fn period(&self, axis: usize) -> T {
        self.periods[axis]
    }

    pub fn min_period(&self) -> T {
        self.periods.iter().fold(T::infinity(), |m, &p| m.min(p))
    }

    /// The torus spanned by the first `k` axes.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.dim() {
            return Err(Error::ShapeMismatch(format!("cannot take {k} leading axes of a {}-torus", self.dim())));
        }
        Self::new(self.periods[..k].to_vec())
    }

    /// Product torus `self × other`.
    pub fn product(&self, other: &Self) -> Self {
        let mut p = self.periods.to_vec();
        p.extend_from_slice(&other.periods);
        Self { periods: p.into() }
    }

    /// Reduces raw coordinates in place.
    pub fn reduce_in_place(&self, coords: &mut [T]) {
        for (c, &p) in coords.iter_mut().zip(self.periods.iter()) {
            *c = reduce(*c, p);
        }
    }

    /// Distance between two raw coordinate vectors (no reduction needed).
    pub fn raw_distance(&self, a: &[T], b: &[T]) -> T {
        let diff: Vec<T> = a.iter().zip(b).zip(self.periods.iter()).map(|((&x, &y), &p)| min_rep(x - y, p)).collect();
        norm(&diff)
    }

    pub(crate) fn check_same(&self, other: &Self, what: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::ShapeMismatch(format!("{what}: periods {:?} vs {:?}", self.periods, other.periods)))
        }
    }
}

/// A point on a torus, stored in canonical reduced coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<T> {
    shape: TorusShape<T>,
    coords: Vec<T>,
}

impl<T: Real> Point<T> {
    pub fn shape(&self) -> &TorusShape<T> {
        &self.shape
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<T> {
        self.coords
    }
}

/// Reduces raw coordinates modulo the periods of `shape` into `[0, period)`.
pub fn wrap<T: Real>(coords: &[T], shape: &TorusShape<T>) -> Result<Point<T>> {
    if coords.len() != shape.dim() {
        return Err(Error::ShapeMismatch(format!("{} coordinates for a {}-torus", coords.len(), shape.dim())));
    }
    if let Some((axis, &v)) = coords.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidCoordinate { axis, value: v.as_f64() });
    }
    let mut c = coords.to_vec();
    shape.reduce_in_place(&mut c);
    Ok(Point { shape: shape.clone(), coords: c })
}

/// Euclidean norm of the per-axis minimal representatives of `a - b`.
pub fn torus_distance<T: Real>(a: &Point<T>, b: &Point<T>) -> Result<T> {
    a.shape.check_same(&b.shape, "torus_distance")?;
    Ok(a.shape.raw_distance(&a.coords, &b.coords))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn wrap_examples() {
        let t2 = TorusShape::<f64>::standard(2);
        assert_eq!(wrap(&[0.0, 0.0], &t2).unwrap().coords(), &[0.0, 0.0]);
        let p = wrap(&[TAU + 1.0, -1.0], &t2).unwrap();
        assert!((p.coords()[0] - 1.0).abs() < 1e-15);
        assert!((p.coords()[1] - (TAU - 1.0)).abs() < 1e-15);

        let s1 = TorusShape::<f64>::standard(1);
        let mut oracle = 7.0;
        while oracle >= TAU {
            oracle -= TAU;
        }
        let w = wrap(&[7.0], &s1).unwrap();
        assert_eq!(w.coords()[0], oracle);
        assert!((w.coords()[0] - 0.716_814_692_820_413_5).abs() < 1e-15);
    }

    #[test]
    fn wrap_rejects_bad_input() {
        let t2 = TorusShape::<f64>::standard(2);
        assert!(matches!(wrap(&[f64::NAN, 0.0], &t2), Err(Error::InvalidCoordinate { axis: 0, .. })));
        assert!(matches!(wrap(&[0.0], &t2), Err(Error::ShapeMismatch(_))));
        assert!(TorusShape::new(vec![1.0, -2.0]).is_err());
        assert!(TorusShape::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn distance_examples() {
        let t2 = TorusShape::<f64>::standard(2);
        let o = wrap(&[0.0, 0.0], &t2).unwrap();
        assert_eq!(torus_distance(&o, &o).unwrap(), 0.0);

        let s1 = TorusShape::<f64>::standard(1);
        let a = wrap(&[0.0], &s1).unwrap();
        let b = wrap(&[PI], &s1).unwrap();
        assert!((torus_distance(&a, &b).unwrap() - PI).abs() < 1e-15);

        // brute force over lattice shifts in {-1,0,1}²
        let (p, q) = ([0.1, 6.2], [6.2, 0.1]);
        let mut best = f64::INFINITY;
        for i in -1..=1 {
            for j in -1..=1 {
                let dx = p[0] - q[0] + i as f64 * TAU;
                let dy = p[1] - q[1] + j as f64 * TAU;
                best = best.min((dx * dx + dy * dy).sqrt());
            }
        }
        let d = torus_distance(&wrap(&p, &t2).unwrap(), &wrap(&q, &t2).unwrap()).unwrap();
        assert!((d - best).abs() < 1e-14);
        assert!((d - (2.0f64).sqrt() * 0.183_185_307_179_586_2).abs() < 1e-12);

        let s3 = TorusShape::<f64>::standard(3);
        assert!(torus_distance(&o, &wrap(&[0.0, 0.0, 0.0], &s3).unwrap()).is_err());
    }
}
