//! Smooth maps between tori stored as periodic displacement fields over a
//! homotopy reference.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::Mat;
use crate::scalar::{min_rep, norm, Real};

use super::certificate::{Certificate, CertificateKind};
use super::interp::{grid_total, node_coords, Interp, Interpolant};
use super::reference::Reference;
use super::torus::{wrap, Point, TorusShape};

/// Minimum number of samples per axis.
pub const MIN_GRID: usize = 8;

/// Codomain of a grid map.
#[derive(Clone, Debug, PartialEq)]
pub enum Target<T> {
    Torus(TorusShape<T>),
    /// `ℝⁿ`, for vector fields and scalar fields; values are not reduced.
    Vector(usize),
}

impl<T: Real> Target<T> {
    pub fn dim(&self) -> usize {
        match self {
            Target::Torus(s) => s.dim(),
            Target::Vector(n) => *n,
        }
    }

    pub fn torus(&self) -> Option<&TorusShape<T>> {
        match self {
            Target::Torus(s) => Some(s),
            Target::Vector(_) => None,
        }
    }
}

/// Role of a map, derived from its reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MapKind {
    Diffeo,
    Fibration,
    Section,
    VectorField,
}

impl MapKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MapKind::Diffeo => "diffeo",
            MapKind::Fibration => "fibration",
            MapKind::Section => "section",
            MapKind::VectorField => "vectorfield",
        }
    }
}

/// Newton inversion settings.
#[derive(Clone, Copy, Debug)]
pub struct InvertOptions {
    /// Nodes with `det(Df)` at or below this value reject the map.
    pub margin_min: f64,
    pub max_iter: usize,
}

impl Default for InvertOptions {
    fn default() -> Self {
        Self { margin_min: 1e-6, max_iter: 50 }
    }
}

/// `x ↦ reference(x) + interpolate(displacement, x)`, reduced modulo the
/// target periods for torus-valued maps.
#[derive(Clone, Debug)]
pub struct GridMap<T: Real> {
    src: TorusShape<T>,
    target: Target<T>,
    reference: Reference,
    grid: Vec<usize>,
    interp: Interp,
    displacement: Vec<T>,
    interpolant: Arc<Interpolant<T>>,
}

/// Storage grid doubled on every axis.
pub fn verification_grid(grid: &[usize]) -> Vec<usize> {
    grid.iter().map(|&n| 2 * n).collect()
}

impl<T: Real> GridMap<T> {
    /// Builds a map from component-major displacement samples.
    pub fn new(
        src: TorusShape<T>,
        target: Target<T>,
        reference: Reference,
        grid: Vec<usize>,
        interp: Interp,
        displacement: Vec<T>,
    ) -> Result<Self> {
        if grid.len() != src.dim() {
            return Err(Error::ShapeMismatch(format!("grid has {} axes for a {}-torus", grid.len(), src.dim())));
        }
        if let Some(&n) = grid.iter().find(|&&n| n < MIN_GRID) {
            return Err(Error::InvalidMap(format!("grid count {n} below {MIN_GRID}")));
        }
        reference.validate(&src, target.torus())?;
        let expected = grid_total(&grid) * target.dim();
        if displacement.len() != expected {
            return Err(Error::InvalidMap(format!("{} displacement samples, expected {expected}", displacement.len())));
        }
        if let Some(i) = displacement.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMap(format!("non-finite displacement sample {i}")));
        }
        let interpolant = Arc::new(Interpolant::new(interp, &grid, src.periods(), target.dim(), &displacement));
        Ok(Self { src, target, reference, grid, interp, displacement, interpolant })
    }

    /// Samples a displacement function at the grid nodes.
    pub fn from_fn(
        src: TorusShape<T>,
        target: Target<T>,
        reference: Reference,
        grid: Vec<usize>,
        interp: Interp,
        mut f: impl FnMut(&[T], &mut [T]),
    ) -> Result<Self> {
        let total = grid_total(&grid);
        let dim = target.dim();
        if grid.len() != src.dim() {
            return Err(Error::ShapeMismatch("grid axes vs source dimension".into()));
        }
        let mut disp = vec![T::zero(); total * dim];
        let mut x = vec![T::zero(); src.dim()];
        let mut v = vec![T::zero(); dim];
        for node in 0..total {
            node_coords(node, &grid, src.periods(), &mut x);
            v.iter_mut().for_each(|e| *e = T::zero());
            f(&x, &mut v);
            for c in 0..dim {
                disp[c * total + node] = v[c];
            }
        }
        Self::new(src, target, reference, grid, interp, disp)
    }

    pub fn identity(shape: &TorusShape<T>, grid: Vec<usize>, interp: Interp) -> Result<Self> {
        let n = shape.dim();
        let total = grid_total(&grid);
        Self::new(
            shape.clone(),
            Target::Torus(shape.clone()),
            Reference::identity(n),
            grid,
            interp,
            vec![T::zero(); total * n],
        )
    }

    /// A diffeomorphism `x ↦ x + d(x)`.
    pub fn diffeo_from_fn(
        shape: &TorusShape<T>,
        grid: Vec<usize>,
        interp: Interp,
        f: impl FnMut(&[T], &mut [T]),
    ) -> Result<Self> {
        Self::from_fn(shape.clone(), Target::Torus(shape.clone()), Reference::identity(shape.dim()), grid, interp, f)
    }

    /// A map `T^m → T^k` of the form `x ↦ (x₁,…,x_k) + d(x)`.
    pub fn fibration_from_fn(
        shape: &TorusShape<T>,
        k: usize,
        grid: Vec<usize>,
        interp: Interp,
        f: impl FnMut(&[T], &mut [T]),
    ) -> Result<Self> {
        let base = shape.prefix(k)?;
        Self::from_fn(shape.clone(), Target::Torus(base), Reference::coordinate(shape.dim(), k), grid, interp, f)
    }

    /// A vector-valued field `src → ℝⁿ`.
    pub fn field_from_fn(
        src: &TorusShape<T>,
        dim: usize,
        grid: Vec<usize>,
        interp: Interp,
        f: impl FnMut(&[T], &mut [T]),
    ) -> Result<Self> {
        Self::from_fn(src.clone(), Target::Vector(dim), Reference::Zero, grid, interp, f)
    }

    /// Same metadata, new samples.
    pub fn with_displacement(&self, displacement: Vec<T>) -> Result<Self> {
        Self::new(
            self.src.clone(),
            self.target.clone(),
            self.reference.clone(),
            self.grid.clone(),
            self.interp,
            displacement,
        )
    }

    pub fn src(&self) -> &TorusShape<T> {
        &self.src
    }

    pub fn target(&self) -> &Target<T> {
        &self.target
    }

    pub fn dst_dim(&self) -> usize {
        self.target.dim()
    }

    pub fn reference(&self) -> &Reference {
        &self.reference
    }

    pub fn grid(&self) -> &[usize] {
        &self.grid
    }

    pub fn interp(&self) -> Interp {
        self.interp
    }

    pub fn node_count(&self) -> usize {
        grid_total(&self.grid)
    }

    /// Component-major displacement samples.
    pub fn displacement(&self) -> &[T] {
        &self.displacement
    }

    pub fn component(&self, c: usize) -> &[T] {
        let n = self.node_count();
        &self.displacement[c * n..(c + 1) * n]
    }

    /// Displacement vector stored at `node`.
    pub fn node_displacement(&self, node: usize) -> Vec<T> {
        let n = self.node_count();
        (0..self.dst_dim()).map(|c| self.displacement[c * n + node]).collect()
    }

    /// Coordinates of storage node `node`.
    pub fn node(&self, node: usize) -> Vec<T> {
        let mut x = vec![T::zero(); self.src.dim()];
        node_coords(node, &self.grid, self.src.periods(), &mut x);
        x
    }

    pub fn kind(&self) -> MapKind {
        match &self.reference {
            Reference::Zero => MapKind::VectorField,
            Reference::Linear { rows, cols, .. } if rows < cols => MapKind::Fibration,
            Reference::Linear { rows, cols, .. } if rows > cols => MapKind::Section,
            Reference::Linear { .. } => MapKind::Diffeo,
        }
    }

    /// Interpolated displacement at raw (unreduced) coordinates.
    #[inline]
    pub fn displacement_at(&self, x: &[T], out: &mut [T]) {
        let xr = self.reduced(x);
        self.interpolant.eval(&xr, out, None);
    }

    /// Interpolated displacement and its `dst × src` Jacobian (row-major).
    #[inline]
    pub fn displacement_with_jacobian(&self, x: &[T], out: &mut [T], jac: &mut [T]) {
        let xr = self.reduced(x);
        self.interpolant.eval(&xr, out, Some(jac));
    }

    fn reduced(&self, x: &[T]) -> Vec<T> {
        let mut xr = x.to_vec();
        self.src.reduce_in_place(&mut xr);
        xr
    }

    /// `reference(x) + d(x)` without reduction.
    pub fn eval_raw(&self, x: &[T], out: &mut [T]) {
        self.displacement_at(x, out);
        self.reference.apply_add(x, out);
    }

    /// Evaluates at a point; torus-valued results are reduced.
    pub fn eval(&self, x: &Point<T>) -> Result<Vec<T>> {
        self.src.check_same(x.shape(), "eval")?;
        let mut out = vec![T::zero(); self.dst_dim()];
        self.eval_raw(x.coords(), &mut out);
        if let Target::Torus(t) = &self.target {
            t.reduce_in_place(&mut out);
        }
        Ok(out)
    }

    /// Evaluates a torus-valued map as a point.
    pub fn eval_point(&self, x: &Point<T>) -> Result<Point<T>> {
        let v = self.eval(x)?;
        match &self.target {
            Target::Torus(t) => wrap(&v, t),
            Target::Vector(_) => Err(Error::ShapeMismatch("vector-valued map has no point values".into())),
        }
    }

    /// Jacobian at raw coordinates.
    pub fn jacobian_raw(&self, x: &[T]) -> Mat<T> {
        let (r, c) = (self.dst_dim(), self.src.dim());
        let mut vals = vec![T::zero(); r];
        let mut jac = vec![T::zero(); r * c];
        self.displacement_with_jacobian(x, &mut vals, &mut jac);
        let mut m = self.reference.jacobian(r, c);
        for i in 0..r {
            for j in 0..c {
                m[(i, j)] = m[(i, j)] + jac[i * c + j];
            }
        }
        m
    }

    pub fn jacobian(&self, x: &Point<T>) -> Result<Mat<T>> {
        self.src.check_same(x.shape(), "jacobian")?;
        Ok(self.jacobian_raw(x.coords()))
    }

    /// Displacement samples on a finer regular grid (component-major).
    pub fn resampled(&self, fine: &[usize]) -> Vec<T> {
        self.interpolant.resample(fine, None)
    }

    /// Full Jacobians at the nodes of `fine`: node-major, each `dst × src`
    /// row-major.
    pub fn jacobians_on_grid(&self, fine: &[usize]) -> Vec<T> {
        let (r, c) = (self.dst_dim(), self.src.dim());
        let total = grid_total(fine);
        let mut out = vec![T::zero(); total * r * c];
        let refj: Mat<T> = self.reference.jacobian(r, c);
        for j in 0..c {
            let d = self.interpolant.resample(fine, Some(j));
            for i in 0..r {
                for node in 0..total {
                    out[node * r * c + i * c + j] = refj[(i, j)] + d[i * total + node];
                }
            }
        }
        out
    }

    /// `self ∘ inner`, sampled on the grid of `inner`.
    pub fn compose(&self, inner: &GridMap<T>) -> Result<GridMap<T>> {
        match inner.target.torus() {
            Some(t) => self.src.check_same(t, "compose")?,
            None => return Err(Error::ShapeMismatch("inner map of a composition is vector-valued".into())),
        }
        let reference = self.reference.compose(&inner.reference)?;
        let total = inner.node_count();
        let (dim, mid) = (self.dst_dim(), inner.dst_dim());
        let mut disp = vec![T::zero(); total * dim];
        let mut x = vec![T::zero(); inner.src.dim()];
        let mut y = vec![T::zero(); mid];
        let mut gd = vec![T::zero(); mid];
        let mut fd = vec![T::zero(); dim];
        for node in 0..total {
            node_coords(node, &inner.grid, inner.src.periods(), &mut x);
            for c in 0..mid {
                gd[c] = inner.displacement[c * total + node];
                y[c] = gd[c];
            }
            inner.reference.apply_add(&x, &mut y);
            self.displacement_at(&y, &mut fd);
            // A_f·d_g(x) + d_f(g(x))
            self.reference.apply_add(&gd, &mut fd);
            for c in 0..dim {
                disp[c * total + node] = fd[c];
            }
        }
        GridMap::new(inner.src.clone(), self.target.clone(), reference, inner.grid.clone(), inner.interp, disp)
    }

    /// Minimal `det(Df)` at the storage nodes, with its node.
    fn min_det_on(&self, grid: &[usize]) -> (usize, T) {
        let n = self.src.dim();
        let jacs = self.jacobians_on_grid(grid);
        let mut worst = (0, T::infinity());
        for (node, j) in jacs.chunks(n * n).enumerate() {
            let d = Mat::from_row_major(n, n, j.to_vec()).det();
            if d < worst.1 {
                worst = (node, d);
            }
        }
        worst
    }

    /// Newton inversion of a diffeomorphism with identity reference.
    pub fn invert(&self) -> Result<GridMap<T>> {
        self.invert_with(InvertOptions::default())
    }

    pub fn invert_with(&self, opts: InvertOptions) -> Result<GridMap<T>> {
        if !self.reference.is_identity() {
            return Err(Error::InvalidMap("inversion requires an identity reference".into()));
        }
        let n = self.src.dim();
        let (node, det) = self.min_det_on(&self.grid);
        if det <= T::lit(opts.margin_min) {
            return Err(Error::NotADiffeomorphism { node, det: det.as_f64() });
        }
        let total = self.node_count();
        let scale = self.src.periods().iter().fold(T::one(), |m, &p| m.max(p));
        let tol = T::epsilon() * T::lit(4.0) * scale;
        let stall_tol = T::epsilon() * T::lit(512.0) * scale;
        let mut out = vec![T::zero(); total * n];
        let mut y = vec![T::zero(); n];
        let mut d = vec![T::zero(); n];
        let mut jac = vec![T::zero(); n * n];
        let max_abs = |v: &[T]| v.iter().fold(T::zero(), |m, &e| m.max(e.abs()));
        for node in 0..total {
            node_coords(node, &self.grid, self.src.periods(), &mut y);
            // initial guess x = y - d(y)
            let mut e: Vec<T> = (0..n).map(|c| -self.displacement[c * total + node]).collect();
            let residual = |e: &[T], d: &mut [T], jac: Option<&mut [T]>| -> Vec<T> {
                let x: Vec<T> = y.iter().zip(e).map(|(&a, &b)| a + b).collect();
                match jac {
                    Some(j) => self.displacement_with_jacobian(&x, d, j),
                    None => self.displacement_at(&x, d),
                }
                e.iter().zip(d.iter()).map(|(&a, &b)| a + b).collect()
            };
            let mut f = residual(&e, &mut d, Some(&mut jac));
            let mut fnorm = max_abs(&f);
            let mut iter = 0;
            while fnorm > tol {
                if iter == opts.max_iter {
                    if fnorm <= stall_tol {
                        break;
                    }
                    return Err(Error::InversionFailed { node, iterations: iter, residual: fnorm.as_f64() });
                }
                iter += 1;
                let mut jm = Mat::identity(n);
                for i in 0..n {
                    for j in 0..n {
                        jm[(i, j)] = jm[(i, j)] + jac[i * n + j];
                    }
                }
                let neg: Vec<T> = f.iter().map(|&v| -v).collect();
                let step = jm.solve(&neg).ok_or(Error::InversionFailed {
                    node,
                    iterations: iter,
                    residual: fnorm.as_f64(),
                })?;
                let mut lambda = T::one();
                let mut accepted = false;
                for _ in 0..30 {
                    let trial: Vec<T> = e.iter().zip(&step).map(|(&a, &s)| a + lambda * s).collect();
                    let ft = residual(&trial, &mut d, None);
                    let tn = max_abs(&ft);
                    if tn < fnorm {
                        e = trial;
                        accepted = true;
                        break;
                    }
                    lambda = lambda * T::lit(0.5);
                }
                if !accepted {
                    if fnorm <= stall_tol {
                        break;
                    }
                    return Err(Error::InversionFailed { node, iterations: iter, residual: fnorm.as_f64() });
                }
                f = residual(&e, &mut d, Some(&mut jac));
                fnorm = max_abs(&f);
            }
            for c in 0..n {
                out[c * total + node] = e[c];
            }
        }
        self.with_displacement(out)
    }

    /// Smallest singular value of `Df` over the verification grid.
    pub fn submersion_certificate(&self) -> Certificate {
        let fine = verification_grid(&self.grid);
        let (r, c) = (self.dst_dim(), self.src.dim());
        let jacs = self.jacobians_on_grid(&fine);
        let margin = jacs
            .chunks(r * c)
            .map(|j| Mat::from_row_major(r, c, j.to_vec()).min_singular_value())
            .fold(T::infinity(), |m, v| m.min(v));
        Certificate::new(CertificateKind::Submersion, 0.0, margin.as_f64(), fine)
    }

    /// Minimal `det(Df)` over the verification grid.
    pub fn diffeo_certificate(&self) -> Result<Certificate> {
        if self.dst_dim() != self.src.dim() || self.target.torus().is_none() {
            return Err(Error::ShapeMismatch("diffeomorphism certificate of a non-square map".into()));
        }
        let fine = verification_grid(&self.grid);
        let (_, det) = self.min_det_on(&fine);
        Ok(Certificate::new(CertificateKind::Diffeo, 0.0, det.as_f64(), fine))
    }

    /// Sup over the nodes of `fine` of the (torus-reduced) norm of the
    /// displacement components `comps`.
    pub fn sup_norm_components(&self, comps: std::ops::Range<usize>, fine: &[usize]) -> T {
        let total = grid_total(fine);
        let vals = self.resampled(fine);
        let periods = self.target.torus().map(|t| t.periods().to_vec());
        let mut best = T::zero();
        let mut v = Vec::with_capacity(comps.len());
        for node in 0..total {
            v.clear();
            for c in comps.clone() {
                let raw = vals[c * total + node];
                v.push(match &periods {
                    Some(p) => min_rep(raw, p[c]),
                    None => raw,
                });
            }
            best = best.max(norm(&v));
        }
        best
    }
}

/// `f ∘ g`.
pub fn compose<T: Real>(f: &GridMap<T>, g: &GridMap<T>) -> Result<GridMap<T>> {
    f.compose(g)
}

pub fn invert<T: Real>(f: &GridMap<T>) -> Result<GridMap<T>> {
    f.invert()
}

pub fn jacobian<T: Real>(f: &GridMap<T>, x: &Point<T>) -> Result<Mat<T>> {
    f.jacobian(x)
}

pub fn submersion_certificate<T: Real>(f: &GridMap<T>) -> Certificate {
    f.submersion_certificate()
}

/// The exact coordinate projection `T^m → T^k`, `x ↦ (x₁,…,x_k)`.
pub fn coordinate_projection<T: Real>(
    shape: &TorusShape<T>,
    k: usize,
    grid: Vec<usize>,
    interp: Interp,
) -> Result<GridMap<T>> {
    GridMap::fibration_from_fn(shape, k, grid, interp, |_, _| {})
}

/// Max over the verification grid of the distance between `f(x)` and `g(x)`.
pub fn sup_distance<T: Real>(f: &GridMap<T>, g: &GridMap<T>) -> Result<T> {
    f.src.check_same(&g.src, "sup_distance")?;
    if f.target != g.target || f.reference != g.reference {
        return Err(Error::ShapeMismatch("sup_distance between maps of different type".into()));
    }
    let fine: Vec<usize> = f.grid.iter().zip(&g.grid).map(|(&a, &b)| 2 * a.max(b)).collect();
    let total = grid_total(&fine);
    let a = f.resampled(&fine);
    let b = g.resampled(&fine);
    let dim = f.dst_dim();
    let periods = f.target.torus().map(|t| t.periods().to_vec());
    let mut best = T::zero();
    let mut v = vec![T::zero(); dim];
    for node in 0..total {
        for c in 0..dim {
            let d = a[c * total + node] - b[c * total + node];
            v[c] = match &periods {
                Some(p) => min_rep(d, p[c]),
                None => d,
            };
        }
        best = best.max(norm(&v));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn s1() -> TorusShape<f64> {
        TorusShape::standard(1)
    }

    fn sine_map(amp: f64, n: usize) -> GridMap<f64> {
        GridMap::diffeo_from_fn(&s1(), vec![n], Interp::Trig, |x, d| d[0] = amp * x[0].sin()).unwrap()
    }

    #[test]
    fn eval_examples() {
        let id = GridMap::identity(&TorusShape::standard(2), vec![16, 16], Interp::Trig).unwrap();
        let p = wrap(&[1.0, 2.0], &TorusShape::standard(2)).unwrap();
        assert_eq!(id.eval(&p).unwrap(), vec![1.0, 2.0]);

        let f = sine_map(0.3, 64);
        let v = f.eval(&wrap(&[FRAC_PI_2], &s1()).unwrap()).unwrap();
        assert!((v[0] - (FRAC_PI_2 + 0.3)).abs() < 1e-14);
        let v = f.eval(&wrap(&[1.234], &s1()).unwrap()).unwrap();
        assert!((v[0] - (1.234 + 0.3 * 1.234f64.sin())).abs() < 1e-12);
    }

    #[test]
    fn compose_examples() {
        let f = sine_map(0.2, 64);
        let g = GridMap::diffeo_from_fn(&s1(), vec![64], Interp::Trig, |x, d| d[0] = 0.1 * x[0].cos()).unwrap();
        let fg = f.compose(&g).unwrap();
        let v = fg.eval(&wrap(&[0.0], &s1()).unwrap()).unwrap();
        assert!((v[0] - (0.1 + 0.2 * 0.1f64.sin())).abs() < 1e-12);
        // nodewise agreement with eval(f, eval(g, x))
        for node in 0..64 {
            let x = wrap(&fg.node(node), &s1()).unwrap();
            let direct = f.eval_point(&g.eval_point(&x).unwrap()).unwrap();
            let composed = fg.eval_point(&x).unwrap();
            assert!(crate::geom::torus_distance(&direct, &composed).unwrap() < 1e-12);
        }
        let id = GridMap::identity(&s1(), vec![64], Interp::Trig).unwrap();
        let ig = id.compose(&g).unwrap();
        assert_eq!(ig.displacement(), g.displacement());
    }

    #[test]
    fn compose_projection_with_vertical_is_projection() {
        let m = TorusShape::<f64>::standard(2);
        let pi0 = coordinate_projection(&m, 1, vec![32, 32], Interp::Trig).unwrap();
        let psi = GridMap::diffeo_from_fn(&m, vec![32, 32], Interp::Trig, |x, d| d[1] = 0.3 * x[0].sin()).unwrap();
        let c = pi0.compose(&psi).unwrap();
        assert!(c.displacement().iter().all(|&v| v == 0.0));
        assert_eq!(c.reference(), pi0.reference());
    }

    #[test]
    fn jacobian_examples() {
        let f = sine_map(0.3, 64);
        let j = f.jacobian(&wrap(&[0.0], &s1()).unwrap()).unwrap();
        assert!((j[(0, 0)] - 1.3).abs() < 1e-12);

        let m = TorusShape::<f64>::standard(2);
        let pi = GridMap::fibration_from_fn(&m, 1, vec![32, 32], Interp::Trig, |x, d| d[0] = 0.2 * x[1].sin()).unwrap();
        let x = wrap(&[0.0, FRAC_PI_2], &m).unwrap();
        let j = pi.jacobian(&x).unwrap();
        let h = 1e-5;
        let ev = |a: f64, b: f64| {
            let mut o = [0.0];
            pi.eval_raw(&[a, b], &mut o);
            o[0]
        };
        let fd0 = (ev(h, FRAC_PI_2) - ev(-h, FRAC_PI_2)) / (2.0 * h);
        let fd1 = (ev(0.0, FRAC_PI_2 + h) - ev(0.0, FRAC_PI_2 - h)) / (2.0 * h);
        assert!((j[(0, 0)] - fd0).abs() < 1e-6);
        assert!((j[(0, 1)] - fd1).abs() < 1e-6);
        assert!((j[(0, 0)] - 1.0).abs() < 1e-12 && j[(0, 1)].abs() < 1e-12);
    }

    #[test]
    fn invert_examples() {
        let id = GridMap::identity(&s1(), vec![64], Interp::Trig).unwrap();
        assert!(id.invert().unwrap().displacement().iter().all(|&v| v == 0.0));

        let f = sine_map(0.3, 64);
        let g = f.invert().unwrap();
        let y = f.eval_point(&wrap(&[1.0], &s1()).unwrap()).unwrap();
        let back = g.eval(&y).unwrap()[0];
        // bisection oracle for f(x) = f(1.0)
        let target = 1.0 + 0.3 * 1.0f64.sin();
        let (mut lo, mut hi) = (0.0f64, 2.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid + 0.3 * mid.sin() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((back - 1.0).abs() < 1e-9);
        assert!((back - 0.5 * (lo + hi)).abs() < 1e-9);

        let bad = sine_map(1.1, 64);
        assert!(matches!(bad.invert(), Err(Error::NotADiffeomorphism { .. })));
    }

    #[test]
    fn inversion_round_trip() {
        let f = sine_map(0.3, 64);
        let g = f.invert().unwrap();
        let id = GridMap::identity(&s1(), vec![64], Interp::Trig).unwrap();
        assert!(sup_distance(&f.compose(&g).unwrap(), &id).unwrap() < 1e-9);
        assert!(sup_distance(&g.compose(&f).unwrap(), &id).unwrap() < 1e-9);
    }

    #[test]
    fn submersion_margins() {
        let m = TorusShape::<f64>::standard(2);
        let pi0 = coordinate_projection(&m, 1, vec![16, 16], Interp::Trig).unwrap();
        assert_eq!(pi0.submersion_certificate().margin, 1.0);
        let pi = GridMap::fibration_from_fn(&m, 1, vec![32, 32], Interp::Trig, |x, d| d[0] = 0.2 * x[1].sin()).unwrap();
        assert!((pi.submersion_certificate().margin - 1.0).abs() < 1e-12);
        // constant map: Df ≡ 0
        let c = GridMap::from_fn(
            m.clone(),
            Target::Torus(m.prefix(1).unwrap()),
            Reference::coordinate(2, 1),
            vec![16, 16],
            Interp::Trig,
            |x, d| d[0] = -x[0] + PI,
        );
        // -x₁ is not periodic; a constant map is not in the reference class
        assert!(c.is_ok());
        let zero = GridMap::field_from_fn(&m, 1, vec![16, 16], Interp::Trig, |_, d| d[0] = 0.5).unwrap();
        let cert = zero.submersion_certificate();
        assert_eq!(cert.margin, 0.0);
    }

    #[test]
    fn sup_distance_examples() {
        let f = sine_map(0.3, 64);
        assert_eq!(sup_distance(&f, &f).unwrap(), 0.0);
        let id = GridMap::identity(&s1(), vec![64], Interp::Trig).unwrap();
        let eps = 0.01;
        let g = sine_map(eps, 64);
        assert!((sup_distance(&id, &g).unwrap() - eps).abs() < 1e-15);
        let h = GridMap::identity(&TorusShape::standard(2), vec![8, 8], Interp::Trig).unwrap();
        assert!(sup_distance(&id, &h).is_err());
    }

    #[test]
    fn rejects_small_grids_and_nan() {
        assert!(GridMap::identity(&s1(), vec![4], Interp::Trig).is_err());
        let r = GridMap::diffeo_from_fn(&s1(), vec![8], Interp::Trig, |_, d| d[0] = f64::NAN);
        assert!(r.is_err());
    }

    #[test]
    fn f32_inversion_works() {
        let s = TorusShape::<f32>::standard(1);
        let f = GridMap::diffeo_from_fn(&s, vec![32], Interp::Trig, |x, d| d[0] = 0.3 * x[0].sin()).unwrap();
        let g = f.invert().unwrap();
        let id = GridMap::identity(&s, vec![32], Interp::Trig).unwrap();
        let err = sup_distance(&f.compose(&g).unwrap(), &id).unwrap();
        assert!(err < 1e-5, "{err}");
    }
}
