//! The `Diff₀(B)` trivialization `π ↦ (π∘σ, (π∘σ)⁻¹∘π)` over the slice
//! `{π : π∘σ = Id_B}`, and the splitting of sections of `π₀*TB` into a part
//! vanishing on `Σ = im σ` and a lift from `B`.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geom::interp::fftn;
use crate::geom::{coordinate_projection, sup_distance, GridMap, Interp, InvertOptions, Reference, Target, TorusShape};
use crate::scalar::Real;

/// Default tolerance on `π_S∘σ = Id_B` in [`assemble_base`].
pub const SLICE_TOL: f64 = 1e-9;

/// `σ(b) = (b, c)`, a global section of the coordinate fibration.
#[derive(Clone, Debug)]
pub struct GlobalSection<T: Real> {
    pub sigma: GridMap<T>,
    /// `sup_b d_B(π₀(σ(b)), b)`.
    pub residual: f64,
}

impl<T: Real> GlobalSection<T> {
    /// Section with constant fiber coordinates `fiber`, sampled on `base_grid`.
    pub fn new(shape: &TorusShape<T>, k: usize, fiber: &[T], base_grid: Vec<usize>, interp: Interp) -> Result<Self> {
        let m = shape.dim();
        if fiber.len() != m - k {
            return Err(Error::ShapeMismatch(format!("{} fiber constants for fiber dimension {}", fiber.len(), m - k)));
        }
        let base = shape.prefix(k)?;
        let sigma = GridMap::from_fn(
            base.clone(),
            Target::Torus(shape.clone()),
            Reference::coordinate(k, m),
            base_grid.clone(),
            interp,
            |_, d| d[k..].copy_from_slice(fiber),
        )?;
        let pi0 = coordinate_projection(shape, k, vec![8; m], Interp::Trig)?;
        let id = GridMap::identity(&base, base_grid, interp)?;
        let residual = sup_distance(&pi0.compose(&sigma)?, &id)?.as_f64();
        Ok(Self { sigma, residual })
    }

    /// The zero section `b ↦ (b, 0)`.
    pub fn zero(shape: &TorusShape<T>, k: usize, base_grid: Vec<usize>, interp: Interp) -> Result<Self> {
        Self::new(shape, k, &vec![T::zero(); shape.dim() - k], base_grid, interp)
    }
}

#[derive(Clone, Debug)]
pub struct Trivialization<T: Real> {
    pub phi_b: GridMap<T>,
    pub pi_s: GridMap<T>,
    /// Minimal `det(Dφ_B)` on the verification grid.
    pub margin: f64,
}

pub fn trivialize<T: Real>(pi: &GridMap<T>, sigma: &GlobalSection<T>) -> Result<Trivialization<T>> {
    let phi_b = pi.compose(&sigma.sigma)?;
    let opts = InvertOptions::default();
    let cert = phi_b.diffeo_certificate().map_err(|e| Error::NotInW(Box::new(e)))?;
    if !cert.margin_exceeds(opts.margin_min) {
        return Err(Error::NotInW(Box::new(Error::NotADiffeomorphism { node: 0, det: cert.margin })));
    }
    let inv = phi_b.invert_with(opts).map_err(|e| Error::NotInW(Box::new(e)))?;
    let pi_s = inv.compose(pi)?;
    Ok(Trivialization { phi_b, pi_s, margin: cert.margin })
}

/// `sup_b d_B(π(σ(b)), b)`.
pub fn slice_defect<T: Real>(pi: &GridMap<T>, sigma: &GlobalSection<T>) -> Result<f64> {
    let c = pi.compose(&sigma.sigma)?;
    let id = GridMap::identity(c.src(), c.grid().to_vec(), c.interp())?;
    Ok(sup_distance(&c, &id)?.as_f64())
}

/// `φ_B∘π_S` after checking `π_S∘σ = Id_B` within `tol`.
pub fn assemble_base_with<T: Real>(
    phi_b: &GridMap<T>,
    pi_s: &GridMap<T>,
    sigma: &GlobalSection<T>,
    tol: f64,
) -> Result<GridMap<T>> {
    let defect = slice_defect(pi_s, sigma)?;
    if !(defect <= tol) {
        return Err(Error::InvalidFactor(format!("π_S∘σ deviates from the identity by {defect:e}")));
    }
    phi_b.compose(pi_s)
}

pub fn assemble_base<T: Real>(phi_b: &GridMap<T>, pi_s: &GridMap<T>, sigma: &GlobalSection<T>) -> Result<GridMap<T>> {
    assemble_base_with(phi_b, pi_s, sigma, SLICE_TOL)
}

/// `χ∘π₀` for a vector field `χ` on `B`.
pub fn lift_vector_field<T: Real>(chi: &GridMap<T>, pi0: &GridMap<T>) -> Result<GridMap<T>> {
    if chi.target().torus().is_some() {
        return Err(Error::ShapeMismatch("lift expects a vector-valued field".into()));
    }
    chi.compose(pi0)
}

#[derive(Clone, Debug)]
pub struct SplitSection<T: Real> {
    /// Vanishes on `Σ`.
    pub vanishing: GridMap<T>,
    /// Constant along fibers.
    pub lifted: GridMap<T>,
}

/// `s = (s − s∘σ̃) + s∘σ̃` with `σ̃ = σ∘π₀`. The stored samples satisfy
/// `vanishing + lifted == s` exactly in floating point wherever such a pair
/// exists within a few ulps of the computed parts; see [`reconstruction_ulps`].
pub fn split_section<T: Real>(s: &GridMap<T>, sigma: &GlobalSection<T>) -> Result<SplitSection<T>> {
    if s.target().torus().is_some() {
        return Err(Error::ShapeMismatch("split expects a vector-valued section".into()));
    }
    let k = sigma.sigma.src().dim();
    let pi0 = coordinate_projection(s.src(), k, s.grid().to_vec(), s.interp())?;
    let lifted = lift_vector_field(&s.compose(&sigma.sigma)?, &pi0)?;
    let mut lifted_samples = lifted.displacement().to_vec();
    let mut vanishing = Vec::with_capacity(lifted_samples.len());
    for (&sv, lv) in s.displacement().iter().zip(lifted_samples.iter_mut()) {
        let (v, l) = exact_split(sv, *lv);
        vanishing.push(v);
        *lv = l;
    }
    let lifted = lifted.with_displacement(lifted_samples)?;
    Ok(SplitSection { vanishing: s.with_displacement(vanishing)?, lifted })
}

/// `(v, l')` with `v + l' == s` in floating point. `l'` differs from `l`
/// by a few ulps when `s − l` sits exactly halfway between two doubles, and
/// is replaced by zero when `l` is at roundoff level and nothing else works.
fn exact_split<T: Real>(s: T, l: T) -> (T, T) {
    let nudge = l.abs() * T::epsilon();
    for j in [0.0, 1.0, -1.0, 2.0, -2.0] {
        let l = l + nudge * T::lit(j);
        if let Some(v) = complement(s, l) {
            return (v, l);
        }
    }
    if l.abs() <= T::epsilon() * T::lit(1024.0) * s.abs().max(T::one()) {
        return (s, T::zero());
    }
    (s - l, l)
}

fn complement<T: Real>(s: T, l: T) -> Option<T> {
    let mut v = s - l;
    for _ in 0..4 {
        let r = s - (v + l);
        if r == T::zero() {
            return Some(v);
        }
        v = v + r;
    }
    None
}

/// Worst reconstruction error `|fl(v + l) − s|` over the nodes, in units of
/// the spacing of doubles at `max(|v|, |l|)`. Zero when the stored parts add
/// back to `s` bit-exactly; an exact split is not always representable (when
/// both parts are larger than `s`, their sum lives on a coarser grid).
pub fn reconstruction_ulps<T: Real>(s: &GridMap<T>, split: &SplitSection<T>) -> f64 {
    let (v, l) = (split.vanishing.displacement(), split.lifted.displacement());
    s.displacement().iter().zip(v.iter().zip(l)).fold(0.0, |worst, (&s, (&v, &l))| {
        let miss = (v + l - s).abs();
        if miss == T::zero() {
            return worst;
        }
        let spacing = v.abs().max(l.abs()).max(s.abs()) * T::epsilon();
        worst.max((miss / spacing).as_f64())
    })
}

/// `sup_b |v(σ(b))|` over the nodes of `σ`'s verification grid.
pub fn vanishing_on_section<T: Real>(v: &GridMap<T>, sigma: &GlobalSection<T>) -> Result<f64> {
    let on = v.compose(&sigma.sigma)?;
    let fine = crate::geom::verification_grid(on.grid());
    Ok(on.sup_norm_components(0..on.dst_dim(), &fine).as_f64())
}

/// Energy `Σ|ĉ|²` of the normalized spectrum in modes with a nonzero
/// wavenumber along some fiber axis (axes `k..`).
pub fn fiber_spectral_energy<T: Real>(map: &GridMap<T>, k: usize) -> f64 {
    let grid = map.grid();
    let total = map.node_count();
    let scale = T::one() / T::of_usize(total);
    let mut multi = vec![0usize; grid.len()];
    let mut energy = T::zero();
    for c in 0..map.dst_dim() {
        let mut spec: Vec<Complex<T>> = map.component(c).iter().map(|&v| Complex::new(v, T::zero())).collect();
        fftn(&mut spec, grid, false);
        for (f, z) in spec.iter().enumerate() {
            crate::geom::interp::unravel(f, grid, &mut multi);
            if multi[k..].iter().any(|&j| j != 0) {
                energy = energy + (*z * scale).norm_sqr();
            }
        }
    }
    energy.as_f64()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::TorusShape;

    fn t2() -> TorusShape<f64> {
        TorusShape::standard(2)
    }

    fn s1() -> TorusShape<f64> {
        TorusShape::standard(1)
    }

    fn sigma() -> GlobalSection<f64> {
        GlobalSection::zero(&t2(), 1, vec![64], Interp::Trig).unwrap()
    }

    fn pi0() -> GridMap<f64> {
        coordinate_projection(&t2(), 1, vec![64, 64], Interp::Trig).unwrap()
    }

    fn field2(f: impl Fn(f64, f64) -> f64) -> GridMap<f64> {
        GridMap::field_from_fn(&t2(), 1, vec![64, 64], Interp::Trig, |x, v| v[0] = f(x[0], x[1])).unwrap()
    }

    #[test]
    fn section_residual() {
        assert_eq!(sigma().residual, 0.0);
        let c = GlobalSection::new(&t2(), 1, &[1.3], vec![32], Interp::Trig).unwrap();
        assert_eq!(c.residual, 0.0);
        assert!(GlobalSection::new(&t2(), 1, &[1.0, 2.0], vec![32], Interp::Trig).is_err());
    }

    #[test]
    fn trivialize_examples() {
        let t = trivialize(&pi0(), &sigma()).unwrap();
        assert!(t.phi_b.displacement().iter().all(|&v| v == 0.0));
        assert_eq!(sup_distance(&t.pi_s, &pi0()).unwrap(), 0.0);

        let phi = GridMap::diffeo_from_fn(&s1(), vec![64], Interp::Trig, |b, d| d[0] = 0.2 * b[0].sin()).unwrap();
        let t = trivialize(&phi.compose(&pi0()).unwrap(), &sigma()).unwrap();
        assert!(sup_distance(&t.phi_b, &phi).unwrap() <= 1e-9);
        assert!(sup_distance(&t.pi_s, &pi0()).unwrap() <= 1e-9);

        let pi =
            GridMap::fibration_from_fn(&t2(), 1, vec![64, 64], Interp::Trig, |x, d| d[0] = 0.1 * x[1].sin()).unwrap();
        let t = trivialize(&pi, &sigma()).unwrap();
        assert!(t.phi_b.displacement().iter().all(|&v| v.abs() < 1e-15));
        assert!(sup_distance(&t.pi_s, &pi).unwrap() < 1e-15);
        assert!(slice_defect(&t.pi_s, &sigma()).unwrap() <= 1e-9);
        assert!(sup_distance(&assemble_base(&t.phi_b, &t.pi_s, &sigma()).unwrap(), &pi).unwrap() <= 1e-9);

        // π∘σ folds the base circle
        let bad =
            GridMap::fibration_from_fn(&t2(), 1, vec![64, 64], Interp::Trig, |x, d| d[0] = 1.5 * x[0].sin()).unwrap();
        assert!(matches!(trivialize(&bad, &sigma()), Err(Error::NotInW(_))));
    }

    #[test]
    fn assemble_examples() {
        let id = GridMap::identity(&s1(), vec![64], Interp::Trig).unwrap();
        assert_eq!(sup_distance(&assemble_base(&id, &pi0(), &sigma()).unwrap(), &pi0()).unwrap(), 0.0);
        let phi = GridMap::diffeo_from_fn(&s1(), vec![64], Interp::Trig, |b, d| d[0] = 0.2 * b[0].sin()).unwrap();
        let a = assemble_base(&phi, &pi0(), &sigma()).unwrap();
        assert_eq!(sup_distance(&a, &phi.compose(&pi0()).unwrap()).unwrap(), 0.0);
        let off =
            GridMap::fibration_from_fn(&t2(), 1, vec![64, 64], Interp::Trig, |x, d| d[0] = 0.1 * x[0].cos()).unwrap();
        assert!(matches!(assemble_base(&id, &off, &sigma()), Err(Error::InvalidFactor(_))));
    }

    #[test]
    fn lift_examples() {
        let zero = GridMap::field_from_fn(&s1(), 1, vec![64], Interp::Trig, |_, _| {}).unwrap();
        assert!(lift_vector_field(&zero, &pi0()).unwrap().displacement().iter().all(|&v| v == 0.0));
        let chi = GridMap::field_from_fn(&s1(), 1, vec![64], Interp::Trig, |b, v| v[0] = b[0].sin()).unwrap();
        let l = lift_vector_field(&chi, &pi0()).unwrap();
        assert!(sup_distance(&l, &field2(|x1, _| x1.sin())).unwrap() < 1e-14);
        assert!(fiber_spectral_energy(&l, 1) <= 1e-12);
    }

    #[test]
    fn split_examples() {
        let c = field2(|_, _| 0.7);
        let sp = split_section(&c, &sigma()).unwrap();
        assert!(sp.vanishing.displacement().iter().all(|&v| v.abs() < 1e-15));
        assert!(sup_distance(&sp.lifted, &c).unwrap() < 1e-15);

        let s = field2(|_, x2| x2.sin());
        let sp = split_section(&s, &sigma()).unwrap();
        assert!(sup_distance(&sp.vanishing, &s).unwrap() < 1e-14);
        assert!(sp.lifted.displacement().iter().all(|&v| v.abs() < 1e-14));

        let s = field2(|x1, x2| x1.sin() + 0.3 * (x1 - 2.0 * x2).cos() * x2.sin());
        let sp = split_section(&s, &sigma()).unwrap();
        for ((&v, &l), &o) in sp.vanishing.displacement().iter().zip(sp.lifted.displacement()).zip(s.displacement()) {
            assert_eq!(v + l, o);
        }
        assert!(vanishing_on_section(&sp.vanishing, &sigma()).unwrap() <= 1e-9);
        assert!(fiber_spectral_energy(&sp.lifted, 1) <= 1e-12);

        let lift = field2(|x1, _| x1.sin());
        let sp = split_section(&lift, &sigma()).unwrap();
        assert!(sp.vanishing.displacement().iter().all(|&v| v.abs() <= 1e-10));
    }
}
