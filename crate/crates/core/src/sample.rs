//! Random band-limited maps for property suites.

use rand::Rng;

use crate::error::Result;
use crate::geom::{GridMap, Interp, Reference, Target, TorusShape};
use crate::scalar::Real;

/// `Σ a_j cos(2π κ_j·x/L) + b_j sin(2π κ_j·x/L)`.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    pub modes: Vec<Vec<i64>>,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

impl TrigPoly {
    /// Up to `terms` random modes with `|κ|∞ ≤ max_mode` and `Σ|a|+|b| = amp`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_mode: i64, terms: usize, amp: f64) -> Self {
        let mut modes = Vec::with_capacity(terms);
        let mut cos = Vec::with_capacity(terms);
        let mut sin = Vec::with_capacity(terms);
        for _ in 0..terms {
            let mut kappa: Vec<i64> = (0..dim).map(|_| rng.gen_range(-max_mode..=max_mode)).collect();
            if kappa.iter().all(|&k| k == 0) {
                kappa[rng.gen_range(0..dim)] = 1;
            }
            modes.push(kappa);
            cos.push(rng.gen_range(-1.0..1.0));
            sin.push(rng.gen_range(-1.0..1.0));
        }
        let total: f64 = cos.iter().chain(&sin).map(|v: &f64| v.abs()).sum();
        let scale = if total > 0.0 { amp / total } else { 0.0 };
        cos.iter_mut().chain(sin.iter_mut()).for_each(|v| *v *= scale);
        Self { modes, cos, sin }
    }

    pub fn eval(&self, x: &[f64], periods: &[f64]) -> f64 {
        self.modes
            .iter()
            .zip(self.cos.iter().zip(&self.sin))
            .map(|(k, (&a, &b))| {
                let phase: f64 =
                    k.iter().zip(x).zip(periods).map(|((&k, &x), &p)| std::f64::consts::TAU * k as f64 * x / p).sum();
                a * phase.cos() + b * phase.sin()
            })
            .sum()
    }

    /// Sup bound `Σ|a|+|b|`.
    pub fn bound(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|v| v.abs()).sum()
    }
}

/// Sampled map whose components in `active` are random trigonometric
/// polynomials with sup bound `amp`; the others are zero.
#[allow(clippy::too_many_arguments)]
pub fn random_map<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    src: &TorusShape<T>,
    target: Target<T>,
    reference: Reference,
    active: std::ops::Range<usize>,
    grid: Vec<usize>,
    interp: Interp,
    amp: f64,
) -> Result<GridMap<T>> {
    let dim = target.dim();
    let mut polys: Vec<Option<TrigPoly>> = vec![None; dim];
    for c in active.filter(|&c| c < dim) {
        let a = amp * rng.gen_range(0.5..1.0);
        polys[c] = Some(TrigPoly::random(rng, src.dim(), 2, 3, a));
    }
    let periods: Vec<f64> = src.periods().iter().map(|p| p.as_f64()).collect();
    let mut xf = vec![0.0; src.dim()];
    GridMap::from_fn(src.clone(), target, reference, grid, interp, |x, d| {
        for (a, v) in x.iter().enumerate() {
            xf[a] = v.as_f64();
        }
        for (c, p) in polys.iter().enumerate() {
            if let Some(p) = p {
                d[c] = T::lit(p.eval(&xf, &periods));
            }
        }
    })
}

/// Diffeomorphism `x + d(x)` with every component displaced.
pub fn random_diffeo<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    shape: &TorusShape<T>,
    grid: Vec<usize>,
    interp: Interp,
    amp: f64,
) -> Result<GridMap<T>> {
    let n = shape.dim();
    random_map(rng, shape, Target::Torus(shape.clone()), Reference::identity(n), 0..n, grid, interp, amp)
}

/// Vertical diffeomorphism for the projection onto the first `k` axes.
pub fn random_vertical<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    shape: &TorusShape<T>,
    k: usize,
    grid: Vec<usize>,
    interp: Interp,
    amp: f64,
) -> Result<GridMap<T>> {
    let n = shape.dim();
    random_map(rng, shape, Target::Torus(shape.clone()), Reference::identity(n), k..n, grid, interp, amp)
}

/// Fibration `x ↦ x_base + d(x)`.
pub fn random_fibration<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    shape: &TorusShape<T>,
    k: usize,
    grid: Vec<usize>,
    interp: Interp,
    amp: f64,
) -> Result<GridMap<T>> {
    let base = shape.prefix(k)?;
    random_map(rng, shape, Target::Torus(base), Reference::coordinate(shape.dim(), k), 0..k, grid, interp, amp)
}

/// ℝⁿ-valued field.
pub fn random_field<T: Real, R: Rng + ?Sized>(
    rng: &mut R,
    shape: &TorusShape<T>,
    dim: usize,
    grid: Vec<usize>,
    interp: Interp,
    amp: f64,
) -> Result<GridMap<T>> {
    random_map(rng, shape, Target::Vector(dim), Reference::Zero, 0..dim, grid, interp, amp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn amplitude_and_determinism() {
        let shape = TorusShape::<f64>::standard(2);
        let mut a = rand::rngs::StdRng::seed_from_u64(7);
        let mut b = rand::rngs::StdRng::seed_from_u64(7);
        let f = random_diffeo(&mut a, &shape, vec![16, 16], Interp::Trig, 0.2).unwrap();
        let g = random_diffeo(&mut b, &shape, vec![16, 16], Interp::Trig, 0.2).unwrap();
        assert_eq!(f.displacement(), g.displacement());
        assert!(f.displacement().iter().all(|v| v.abs() <= 0.2));
        let v = random_vertical(&mut a, &shape, 1, vec![16, 16], Interp::Trig, 0.2).unwrap();
        assert!(v.component(0).iter().all(|&x| x == 0.0));
    }
}
