//! Vertical tubular projections for the coordinate fibration `π₀ : T^m → T^k`.
//!
//! The basic operation is [`TubularProjection::project_to_fiber`]: given a
//! base point `b` and a point `y` whose base coordinates are within `δ` of
//! `b`, return the point of the fiber over `b` nearest to `y`. It preserves
//! the base coordinate exactly, and `P₂(x, y) = project_to_fiber(π₀(x), y)`.

use crate::error::{Error, Result};
use crate::geom::{coordinate_projection, grid_total, GridMap, Interp, Point, Target, TorusShape};
use crate::scalar::{min_rep, norm, Real};

const SIMPSON_PANELS: usize = 256;
const COARSE_SCAN: usize = 33;
const MAX_REFINE: usize = 100;

/// Metric used on each fiber.
#[derive(Clone, Debug)]
pub enum FiberMetric<T: Real> {
    Flat,
    /// `e^{2λ}·g_flat`, with `λ` a scalar field on `M`. Fibers must be
    /// one-dimensional.
    Conformal(GridMap<T>),
}

#[derive(Clone, Debug)]
pub struct TubularProjection<T: Real> {
    pi0: GridMap<T>,
    metric: FiberMetric<T>,
    delta: T,
}

impl<T: Real> TubularProjection<T> {
    /// Tube around the coordinate fibration of `shape` onto its first `k`
    /// axes. `delta` defaults to an eighth of the smallest base period.
    pub fn new(shape: &TorusShape<T>, k: usize, delta: Option<T>, metric: FiberMetric<T>) -> Result<Self> {
        if k >= shape.dim() {
            return Err(Error::ShapeMismatch(format!("base dimension {k} leaves no fiber in a {}-torus", shape.dim())));
        }
        let grid = vec![8; shape.dim()];
        let pi0 = coordinate_projection(shape, k, grid, Interp::Trig)?;
        let base_min = shape.prefix(k)?.min_period();
        let delta = delta.unwrap_or(base_min / T::lit(8.0));
        if !(delta > T::zero() && delta < base_min / T::lit(4.0)) {
            return Err(Error::InvalidShape(format!(
                "tube radius {delta} must lie in (0, {})",
                base_min / T::lit(4.0)
            )));
        }
        if let FiberMetric::Conformal(lambda) = &metric {
            if shape.dim() - k != 1 {
                return Err(Error::ShapeMismatch("conformal fiber metric needs one-dimensional fibers".into()));
            }
            if lambda.src() != shape || lambda.target() != &Target::Vector(1) {
                return Err(Error::ShapeMismatch("λ must be a scalar field on M".into()));
            }
        }
        Ok(Self { pi0, metric, delta })
    }

    pub fn flat(shape: &TorusShape<T>, k: usize) -> Result<Self> {
        Self::new(shape, k, None, FiberMetric::Flat)
    }

    pub fn pi0(&self) -> &GridMap<T> {
        &self.pi0
    }

    pub fn shape(&self) -> &TorusShape<T> {
        self.pi0.src()
    }

    pub fn base_dim(&self) -> usize {
        self.pi0.dst_dim()
    }

    pub fn metric(&self) -> &FiberMetric<T> {
        &self.metric
    }

    pub fn delta(&self) -> T {
        self.delta
    }

    /// Checks `|min_rep(b - y_base)| < δ` on every base axis.
    pub fn check_tube(&self, b: &[T], y: &[T], node: Option<usize>) -> Result<()> {
        let shape = self.shape();
        for a in 0..self.base_dim() {
            let off = min_rep(y[a] - b[a], shape.period(a));
            if !(off.abs() < self.delta) {
                return Err(Error::OutsideTube { axis: a, offset: off.as_f64(), delta: self.delta.as_f64(), node });
            }
        }
        Ok(())
    }

    /// Tube membership of `(x, y)`.
    pub fn in_tube(&self, x: &Point<T>, y: &Point<T>) -> bool {
        self.check_tube(x.coords(), y.coords(), None).is_ok()
    }

    /// Nearest point to `y` on the fiber over `b`, in raw coordinates: the
    /// base part is `b` itself, the fiber part stays within a quarter period
    /// of `y`'s raw fiber coordinates.
    pub fn project_to_fiber(&self, b: &[T], y: &[T]) -> Result<Vec<T>> {
        self.check_tube(b, y, None)?;
        let k = self.base_dim();
        let mut out = y.to_vec();
        out[..k].copy_from_slice(&b[..k]);
        if let FiberMetric::Conformal(lambda) = &self.metric {
            if (0..k).any(|a| min_rep(y[a] - b[a], self.shape().period(a)) != T::zero()) {
                out[k] = ChordSearch { lambda, shape: self.shape(), b, y }.minimize()?;
            }
        }
        Ok(out)
    }

    /// `P₂(x, y)`.
    pub fn project_point(&self, x: &Point<T>, y: &Point<T>) -> Result<Point<T>> {
        let shape = self.shape();
        if x.shape() != shape || y.shape() != shape {
            return Err(Error::ShapeMismatch("project_point outside M".into()));
        }
        let out = self.project_to_fiber(&x.coords()[..self.base_dim()], y.coords())?;
        crate::geom::wrap(&out, shape)
    }

    /// Same as [`project_point`](Self::project_point) but requires the
    /// conformal metric.
    pub fn riemann_project(&self, x: &Point<T>, y: &Point<T>) -> Result<Point<T>> {
        match self.metric {
            FiberMetric::Conformal(_) => self.project_point(x, y),
            FiberMetric::Flat => Err(Error::InvalidShape("riemann_project needs a conformal metric".into())),
        }
    }

    /// The vertical map `ψ(x) = P₂(x, φ(x))`, sampled on `φ`'s grid.
    pub fn project_graph(&self, phi: &GridMap<T>) -> Result<GridMap<T>> {
        let shape = self.shape();
        if phi.src() != shape || phi.target().torus() != Some(shape) || !phi.reference().is_identity() {
            return Err(Error::ShapeMismatch("project_graph expects a diffeomorphism of M".into()));
        }
        let k = self.base_dim();
        let m = shape.dim();
        // the base offset π₀(φ(x)) − π₀(x) is the base displacement
        let fine = crate::geom::verification_grid(phi.grid());
        let fine_disp = phi.resampled(&fine);
        let fine_total = grid_total(&fine);
        let zero = vec![T::zero(); k];
        for node in 0..fine_total {
            let off: Vec<T> = (0..k).map(|a| fine_disp[a * fine_total + node]).collect();
            self.check_tube(&zero, &off, Some(node))?;
        }
        let total = phi.node_count();
        let mut disp = vec![T::zero(); total * m];
        if let FiberMetric::Flat = self.metric {
            // fiber displacement is kept verbatim
            disp[k * total..].copy_from_slice(&phi.displacement()[k * total..]);
            return GridMap::new(
                shape.clone(),
                Target::Torus(shape.clone()),
                phi.reference().clone(),
                phi.grid().to_vec(),
                phi.interp(),
                disp,
            );
        }
        for node in 0..total {
            let x = phi.node(node);
            let mut y = x.clone();
            for c in 0..m {
                y[c] = y[c] + phi.displacement()[c * total + node];
            }
            let z = self.project_to_fiber(&x[..k], &y).map_err(|e| match e {
                Error::OutsideTube { axis, offset, delta, .. } => {
                    Error::OutsideTube { axis, offset, delta, node: Some(node) }
                }
                e => e,
            })?;
            for c in k..m {
                disp[c * total + node] = z[c] - x[c];
            }
        }
        GridMap::new(
            shape.clone(),
            Target::Torus(shape.clone()),
            phi.reference().clone(),
            phi.grid().to_vec(),
            phi.interp(),
            disp,
        )
    }
}

/// Minimizes the conformal length of the straight chord from `(b, ζ)` to `y`
/// over the fiber coordinate `ζ`.
struct ChordSearch<'a, T: Real> {
    lambda: &'a GridMap<T>,
    shape: &'a TorusShape<T>,
    b: &'a [T],
    y: &'a [T],
}

impl<T: Real> ChordSearch<'_, T> {
    fn chord(&self, zeta: T) -> (Vec<T>, Vec<T>) {
        let k = self.b.len();
        let mut z = self.b.to_vec();
        z.push(zeta);
        let mut d: Vec<T> = (0..k).map(|a| min_rep(self.y[a] - self.b[a], self.shape.period(a))).collect();
        d.push(self.y[k] - zeta);
        (z, d)
    }

    fn simpson_weight(i: usize) -> T {
        let w = if i == 0 || i == SIMPSON_PANELS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        T::lit(w / (3.0 * SIMPSON_PANELS as f64))
    }

    /// Chord length under `e^{2λ}g_flat`.
    fn length(&self, zeta: T) -> T {
        let (z, d) = self.chord(zeta);
        let len = norm(&d);
        let mut p = z.clone();
        let mut v = [T::zero()];
        let mut acc = T::zero();
        for i in 0..=SIMPSON_PANELS {
            let s = T::of_usize(i) / T::of_usize(SIMPSON_PANELS);
            for (a, pa) in p.iter_mut().enumerate() {
                *pa = z[a] + s * d[a];
            }
            self.lambda.displacement_at(&p, &mut v);
            acc = acc + Self::simpson_weight(i) * v[0].exp();
        }
        len * acc
    }

    /// Derivative of [`length`](Self::length) in `ζ`.
    fn slope(&self, zeta: T) -> T {
        let (z, d) = self.chord(zeta);
        let f = d.len() - 1;
        let len = norm(&d);
        let mut p = z.clone();
        let mut v = [T::zero()];
        let mut g = vec![T::zero(); d.len()];
        let mut acc = T::zero();
        for i in 0..=SIMPSON_PANELS {
            let s = T::of_usize(i) / T::of_usize(SIMPSON_PANELS);
            for (a, pa) in p.iter_mut().enumerate() {
                *pa = z[a] + s * d[a];
            }
            self.lambda.displacement_with_jacobian(&p, &mut v, &mut g);
            let e = v[0].exp();
            acc = acc + Self::simpson_weight(i) * e * (-d[f] / len + len * g[f] * (T::one() - s));
        }
        acc
    }

    fn minimize(&self) -> Result<T> {
        let k = self.b.len();
        let half = self.shape.period(k) / T::lit(4.0);
        let (lo0, hi0) = (self.y[k] - half, self.y[k] + half);
        let step = (hi0 - lo0) / T::of_usize(COARSE_SCAN - 1);
        let at = |i: usize| lo0 + step * T::of_usize(i);
        let best = (0..COARSE_SCAN).map(|i| (i, self.length(at(i)))).fold((0, T::infinity()), |acc, (i, l)| {
            if l < acc.1 {
                (i, l)
            } else {
                acc
            }
        });
        let mut lo = at(best.0.saturating_sub(1));
        let mut hi = at((best.0 + 1).min(COARSE_SCAN - 1));

        // golden section down to a small bracket
        let g = T::lit(0.618_033_988_749_894_9);
        let mut c = hi - g * (hi - lo);
        let mut e = lo + g * (hi - lo);
        let (mut fc, mut fe) = (self.length(c), self.length(e));
        while hi - lo > half * T::lit(1e-6) {
            if fc < fe {
                hi = e;
                e = c;
                fe = fc;
                c = hi - g * (hi - lo);
                fc = self.length(c);
            } else {
                lo = c;
                c = e;
                fc = fe;
                e = lo + g * (hi - lo);
                fe = self.length(e);
            }
        }

        // safeguarded Newton on the slope
        let (slo, shi) = (self.slope(lo), self.slope(hi));
        if !(slo < T::zero() && shi > T::zero()) {
            return Ok((lo + hi) / T::lit(2.0));
        }
        let tol = T::epsilon() * T::lit(8.0) * self.shape.period(k);
        let h = half * T::lit(1e-7);
        let mut zeta = (lo + hi) / T::lit(2.0);
        for _ in 0..MAX_REFINE {
            let s = self.slope(zeta);
            if s == T::zero() {
                return Ok(zeta);
            }
            if s < T::zero() {
                lo = zeta;
            } else {
                hi = zeta;
            }
            let curv = (self.slope(zeta + h) - self.slope(zeta - h)) / (h + h);
            let newton = zeta - s / curv;
            let next = if curv > T::zero() && newton > lo && newton < hi { newton } else { (lo + hi) / T::lit(2.0) };
            let moved = (next - zeta).abs();
            zeta = next;
            if moved <= tol || hi - lo <= tol {
                return Ok(zeta);
            }
        }
        Err(Error::NonConvergence { iterations: MAX_REFINE })
    }
}
