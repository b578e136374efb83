//! The orbit map `φ ↦ π₀∘φ⁻¹`, its local inverse built on `X = M × B`, and
//! coset comparison in `Diff₀(M)/G_{π₀}`.
//!
//! On `X`, `p₁(x, b) = x` and `p₂(x, b) = q(b, x)`, the point of the fiber
//! over `b` nearest to `x`. For a fibration `π` near `π₀`, `s(x) = (x, π(x))`
//! is a section of `p₁`; exchanging it into a section of `p₂` gives
//! `s∘f` with `f = (p₂∘s)⁻¹`, and `π∘f = π₀`.

use crate::chart::verticality_residual;
use crate::error::{Error, Result};
use crate::geom::{
    coordinate_projection, grid_total, sup_distance, verification_grid, Certificate, GridMap, InvertOptions, Reference,
    Target, TorusShape,
};
use crate::scalar::Real;
use crate::transport::FibrationPath;
use crate::tubular::TubularProjection;

/// Threshold on the verticality residual of `f⁻¹∘g` for coset equality.
pub const COSET_TOL: f64 = 1e-7;
/// Maximum bisection depth of [`connect_chain`].
pub const MAX_DEPTH: usize = 12;

#[derive(Clone, Debug)]
pub struct FactorizationResult<T: Real> {
    pub f: GridMap<T>,
    /// `sup d_B(π(f(x)), π₀(x))`.
    pub residual: f64,
    /// Diffeomorphism certificate of `f`.
    pub witness: Certificate,
    /// `s∘f`, a section of `p₂` whose `B` component is `π₀`.
    pub section: GridMap<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CosetCheck {
    pub equal: bool,
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct ChainResult<T: Real> {
    pub phi: GridMap<T>,
    /// Accepted parameter values `0 = t₀ < … < t_k = 1`.
    pub breakpoints: Vec<f64>,
    /// `sup d_B(π₁(φ(x)), π₀(x))`.
    pub residual: f64,
}

/// `π₀∘φ⁻¹`.
pub fn push_fibration<T: Real>(pi0: &GridMap<T>, phi: &GridMap<T>) -> Result<GridMap<T>> {
    pi0.compose(&phi.invert()?)
}

/// `M × B` with `M` first.
pub fn total_space<T: Real>(shape: &TorusShape<T>, k: usize) -> Result<TorusShape<T>> {
    Ok(shape.product(&shape.prefix(k)?))
}

/// The graph section `x ↦ (x, π(x))` of `p₁`.
pub fn graph_section<T: Real>(pi: &GridMap<T>) -> Result<GridMap<T>> {
    let shape = pi.src();
    let (m, k) = (shape.dim(), pi.dst_dim());
    let Reference::Linear { entries, .. } = pi.reference() else {
        return Err(Error::ShapeMismatch("graph of a vector-valued map".into()));
    };
    let mut graph = vec![0; m * m];
    for a in 0..m {
        graph[a * m + a] = 1;
    }
    graph.extend_from_slice(entries);
    let r = Reference::linear(m + k, m, graph)?;
    let total = pi.node_count();
    let mut disp = vec![T::zero(); total * m];
    disp.extend_from_slice(pi.displacement());
    GridMap::new(shape.clone(), Target::Torus(total_space(shape, k)?), r, pi.grid().to_vec(), pi.interp(), disp)
}

/// The flat `p₂(x, b) = (b, x_fiber)` on `M × B`, sampled on an `8`-grid.
pub fn flat_p2<T: Real>(shape: &TorusShape<T>, k: usize) -> Result<GridMap<T>> {
    let m = shape.dim();
    let x = total_space(shape, k)?;
    let mut entries = vec![0; m * (m + k)];
    for a in 0..k {
        entries[a * (m + k) + m + a] = 1;
    }
    for a in k..m {
        entries[a * (m + k) + a] = 1;
    }
    let total = grid_total(&vec![8; m + k]);
    GridMap::new(
        x,
        Target::Torus(shape.clone()),
        Reference::linear(m, m + k, entries)?,
        vec![8; m + k],
        crate::geom::Interp::Trig,
        vec![T::zero(); total * m],
    )
}

/// `α∘(p₂∘α)⁻¹`, a section of `p₂`.
pub fn section_exchange<T: Real>(alpha: &GridMap<T>, p2: &GridMap<T>) -> Result<GridMap<T>> {
    let c = p2.compose(alpha)?;
    let opts = InvertOptions::default();
    let cert = c.diffeo_certificate().map_err(|e| Error::NotInV1(Box::new(e)))?;
    if !cert.margin_exceeds(opts.margin_min) {
        return Err(Error::NotInV1(Box::new(Error::NotADiffeomorphism { node: 0, det: cert.margin })));
    }
    let inv = c.invert_with(opts).map_err(|e| Error::NotInV1(Box::new(e)))?;
    alpha.compose(&inv)
}

/// The local inverse `χ` of the orbit map: `f` with `π∘f = π₀`.
pub fn factorize<T: Real>(p: &TubularProjection<T>, pi: &GridMap<T>) -> Result<FactorizationResult<T>> {
    let shape = p.shape();
    let k = p.base_dim();
    if pi.src() != shape || pi.reference() != p.pi0().reference() || pi.target() != p.pi0().target() {
        return Err(Error::ShapeMismatch("factorize expects a fibration in the class of π₀".into()));
    }
    let sub = pi.submersion_certificate();
    if !sub.margin_exceeds(InvertOptions::default().margin_min) {
        return Err(Error::RankDeficient { t: 0.0, margin: sub.margin });
    }
    // tube on M × B: base offset π(x) − π₀(x) is the displacement of π
    let fine = verification_grid(pi.grid());
    let fine_disp = pi.resampled(&fine);
    let fine_total = grid_total(&fine);
    let zero = vec![T::zero(); k];
    for node in 0..fine_total {
        let off: Vec<T> = (0..k).map(|a| fine_disp[a * fine_total + node]).collect();
        p.check_tube(&zero, &off, Some(node))?;
    }
    // h = p₂∘s, h(x) = q(π(x), x)
    let m = shape.dim();
    let total = pi.node_count();
    let mut disp = vec![T::zero(); total * m];
    let mut b = vec![T::zero(); k];
    for node in 0..total {
        let x = pi.node(node);
        for a in 0..k {
            b[a] = x[a] + pi.displacement()[a * total + node];
        }
        let z = p.project_to_fiber(&b, &x)?;
        for a in 0..k {
            disp[a * total + node] = pi.displacement()[a * total + node];
        }
        for a in k..m {
            disp[a * total + node] = z[a] - x[a];
        }
    }
    let h = GridMap::new(
        shape.clone(),
        Target::Torus(shape.clone()),
        Reference::identity(m),
        pi.grid().to_vec(),
        pi.interp(),
        disp,
    )?;
    let f = h.invert()?;
    let witness = f.diffeo_certificate()?;
    let section = graph_section(pi)?.compose(&f)?;
    let pi0 = coordinate_projection(shape, k, pi.grid().to_vec(), pi.interp())?;
    let residual = sup_distance(&pi.compose(&f)?, &pi0)?.as_f64();
    Ok(FactorizationResult { f, residual, witness, section })
}

/// `[f] = [g]` in `Diff₀(M)/G_{π₀}`.
pub fn coset_equal<T: Real>(f: &GridMap<T>, g: &GridMap<T>, pi0: &GridMap<T>) -> Result<CosetCheck> {
    let rel = f.invert()?.compose(g)?;
    let residual = verticality_residual(pi0, &rel)?.residual;
    Ok(CosetCheck { equal: residual <= COSET_TOL, residual })
}

/// Chains local factorizations along `path` (starting at `π₀`), bisecting
/// parameter steps that leave the factorization domain.
pub fn connect_chain<T: Real>(p: &TubularProjection<T>, path: &FibrationPath<T>) -> Result<ChainResult<T>> {
    let start = path.at(T::zero())?;
    let mut phi = GridMap::identity(p.shape(), start.grid().to_vec(), start.interp())?;
    let mut t = T::zero();
    let mut breakpoints = vec![0.0];
    let mut pending = vec![(T::one(), 0usize)];
    while let Some(&(te, depth)) = pending.last() {
        let attempt = path.at(te).and_then(|pi| pi.compose(&phi)).and_then(|q| factorize(p, &q));
        match attempt {
            Ok(step) => {
                phi = phi.compose(&step.f)?;
                t = te;
                breakpoints.push(te.as_f64());
                pending.pop();
            }
            Err(e) if e.is_numerical() => {
                if depth == MAX_DEPTH {
                    return Err(Error::MaxDepthExceeded { depth, t: t.as_f64() });
                }
                pending.pop();
                pending.push((te, depth + 1));
                pending.push(((t + te) / T::lit(2.0), depth + 1));
            }
            Err(e) => return Err(e),
        }
    }
    let pi1 = path.at(T::one())?;
    let pi0 = coordinate_projection(p.shape(), p.base_dim(), start.grid().to_vec(), start.interp())?;
    let residual = sup_distance(&pi1.compose(&phi)?, &pi0)?.as_f64();
    Ok(ChainResult { phi, breakpoints, residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{wrap, Interp};
    use crate::transport::TimeBasis;

    fn t2() -> TorusShape<f64> {
        TorusShape::standard(2)
    }

    fn diffeo(f: impl Fn(f64, f64) -> (f64, f64)) -> GridMap<f64> {
        GridMap::diffeo_from_fn(&t2(), vec![64, 64], Interp::Trig, |x, d| {
            let (a, b) = f(x[0], x[1]);
            d[0] = a;
            d[1] = b;
        })
        .unwrap()
    }

    fn fibration(f: impl Fn(f64, f64) -> f64) -> GridMap<f64> {
        GridMap::fibration_from_fn(&t2(), 1, vec![64, 64], Interp::Trig, |x, d| d[0] = f(x[0], x[1])).unwrap()
    }

    fn pi0() -> GridMap<f64> {
        coordinate_projection(&t2(), 1, vec![64, 64], Interp::Trig).unwrap()
    }

    #[test]
    fn push_examples() {
        let id = GridMap::identity(&t2(), vec![64, 64], Interp::Trig).unwrap();
        assert_eq!(sup_distance(&push_fibration(&pi0(), &id).unwrap(), &pi0()).unwrap(), 0.0);
        let vert = diffeo(|x1, _| (0.0, 0.3 * x1.sin()));
        assert!(sup_distance(&push_fibration(&pi0(), &vert).unwrap(), &pi0()).unwrap() <= 1e-10);
        let shear = diffeo(|_, x2| (0.2 * x2.sin(), 0.0));
        let pushed = push_fibration(&pi0(), &shear).unwrap();
        assert!(sup_distance(&pushed, &fibration(|_, x2| -0.2 * x2.sin())).unwrap() < 1e-9);
        assert!(pushed.submersion_certificate().margin > 0.0);
    }

    #[test]
    fn factorize_examples() {
        let p = TubularProjection::flat(&t2(), 1).unwrap();
        let r = factorize(&p, &pi0()).unwrap();
        assert!(r.f.displacement().iter().all(|&v| v == 0.0));

        let r = factorize(&p, &fibration(|_, x2| 0.2 * x2.sin())).unwrap();
        let expect = diffeo(|_, y2| (-0.2 * y2.sin(), 0.0));
        assert!(sup_distance(&r.f, &expect).unwrap() <= 1e-9);
        assert!(r.residual <= 1e-9);

        let pi = fibration(|x1, x2| 0.1 * (x1 + x2).sin());
        let r = factorize(&p, &pi).unwrap();
        assert!(r.residual <= 1e-8);
        let back = push_fibration(&pi0(), &r.f).unwrap();
        assert!(sup_distance(&back, &pi).unwrap() <= 1e-8);
        // the section of p₂ has B component π₀
        for node in (0..4096).step_by(41) {
            let x = wrap(&r.section.node(node), &t2()).unwrap();
            let s = r.section.eval(&x).unwrap();
            let d = crate::scalar::min_rep(s[2] - x.coords()[0], std::f64::consts::TAU);
            assert!(d.abs() < 1e-8);
        }

        let far = fibration(|_, x2| 0.9 * x2.sin());
        assert!(matches!(factorize(&p, &far), Err(Error::OutsideTube { .. })));
    }

    #[test]
    fn section_exchange_matches_factorize() {
        let p = TubularProjection::flat(&t2(), 1).unwrap();
        let pi = fibration(|x1, x2| 0.1 * (x1 + x2).sin());
        let p2 = flat_p2(&t2(), 1).unwrap();
        let s = graph_section(&pi).unwrap();
        let beta = section_exchange(&s, &p2).unwrap();
        let r = factorize(&p, &pi).unwrap();
        assert!(sup_distance(&beta, &r.section).unwrap() < 1e-12);
        let id = GridMap::identity(&t2(), vec![64, 64], Interp::Trig).unwrap();
        assert!(sup_distance(&p2.compose(&beta).unwrap(), &id).unwrap() <= 1e-9);
        // already a section of p₂: unchanged
        let again = section_exchange(&beta, &p2).unwrap();
        assert!(sup_distance(&again, &beta).unwrap() <= 1e-10);
        // the zero-displacement common section s₀ = graph(π₀)
        let s0 = graph_section(&pi0()).unwrap();
        assert_eq!(sup_distance(&section_exchange(&s0, &p2).unwrap(), &s0).unwrap(), 0.0);
        // p₂∘α folds: rejected
        let bad = graph_section(&fibration(|x1, _| -1.5 * x1.sin())).unwrap();
        assert!(matches!(section_exchange(&bad, &p2), Err(Error::NotInV1(_))));
    }

    #[test]
    fn coset_examples() {
        let id = GridMap::identity(&t2(), vec![64, 64], Interp::Trig).unwrap();
        let f = diffeo(|x1, x2| (0.1 * x2.cos(), 0.2 * x1.sin()));
        let c = coset_equal(&f, &f, &pi0()).unwrap();
        assert!(c.equal && c.residual <= 1e-10);
        let vert = diffeo(|x1, x2| (0.0, 0.3 * (x1 - x2).sin()));
        assert!(coset_equal(&id, &vert, &pi0()).unwrap().equal);
        let shear = diffeo(|_, x2| (0.1 * x2.sin(), 0.0));
        let c = coset_equal(&id, &shear, &pi0()).unwrap();
        assert!(!c.equal && (c.residual - 0.1).abs() < 1e-12);
    }

    #[test]
    fn chains() {
        let p = TubularProjection::flat(&t2(), 1).unwrap();
        let d = GridMap::field_from_fn(&t2(), 1, vec![64, 64], Interp::Trig, |x, v| v[0] = 0.2 * x[1].sin()).unwrap();
        let still = FibrationPath::constant(pi0()).unwrap();
        let r = connect_chain(&p, &still).unwrap();
        assert!(r.phi.displacement().iter().all(|&v| v == 0.0));

        let linear = FibrationPath::analytic(pi0(), vec![(TimeBasis::Monomial(1), d.clone())]).unwrap();
        let r = connect_chain(&p, &linear).unwrap();
        let single = factorize(&p, &linear.at(1.0).unwrap()).unwrap();
        assert!(coset_equal(&r.phi, &single.f, &pi0()).unwrap().equal);

        let narrow = TubularProjection::new(&t2(), 1, Some(0.06), crate::tubular::FiberMetric::Flat).unwrap();
        let r = connect_chain(&narrow, &linear).unwrap();
        let k = r.breakpoints.len() - 1;
        assert!(k >= 4, "{:?}", r.breakpoints);
        assert!(r.residual <= k as f64 * 1e-8);

        let tiny = TubularProjection::new(&t2(), 1, Some(1e-5), crate::tubular::FiberMetric::Flat).unwrap();
        assert!(matches!(connect_chain(&tiny, &linear), Err(Error::MaxDepthExceeded { .. })));
    }
}
