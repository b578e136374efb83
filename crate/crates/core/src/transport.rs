//! Paths of fibrations and horizontal transport of fibers.
//!
//! The connection is the flat-orthogonal complement of `ker Dπ_t`: a point
//! moves with `w = −Dπ_tᵀ(Dπ_t Dπ_tᵀ)⁻¹ ∂_tπ_t`, the least-norm solution of
//! `Dπ_t·w = −∂_tπ_t`, so that `π_t(x(t))` stays constant.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{sup_distance, Certificate, CertificateKind, GridMap, Point, Target};
use crate::linalg::Mat;
use crate::scalar::{min_rep, norm, Real};

/// Scalar time dependence of an analytic path term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeBasis {
    /// `t^j`
    Monomial(u32),
    /// `cos(2πjt)`
    Cos(u32),
    /// `sin(2πjt)`
    Sin(u32),
}

impl TimeBasis {
    pub fn value<T: Real>(&self, t: T) -> T {
        match *self {
            TimeBasis::Monomial(j) => t.powi(j as i32),
            TimeBasis::Cos(j) => (T::TAU() * T::of_usize(j as usize) * t).cos(),
            TimeBasis::Sin(j) => (T::TAU() * T::of_usize(j as usize) * t).sin(),
        }
    }

    pub fn derivative<T: Real>(&self, t: T) -> T {
        match *self {
            TimeBasis::Monomial(0) => T::zero(),
            TimeBasis::Monomial(j) => T::of_usize(j as usize) * t.powi(j as i32 - 1),
            TimeBasis::Cos(j) => {
                let w = T::TAU() * T::of_usize(j as usize);
                -w * (w * t).sin()
            }
            TimeBasis::Sin(j) => {
                let w = T::TAU() * T::of_usize(j as usize);
                w * (w * t).cos()
            }
        }
    }
}

/// A one-parameter family `π_t`, `t ∈ [0, 1]`.
#[derive(Clone, Debug)]
pub enum FibrationPath<T: Real> {
    /// Members at increasing times from 0 to 1, joined by cubic Hermite
    /// interpolation of the displacement samples.
    Sampled { times: Vec<T>, maps: Vec<GridMap<T>> },
    /// `π_t = base + Σ b_j(t)·D_j` with vector fields `D_j` on the base's grid.
    Analytic { base: GridMap<T>, terms: Vec<(TimeBasis, GridMap<T>)> },
}

fn same_layout<T: Real>(a: &GridMap<T>, b: &GridMap<T>) -> bool {
    a.src() == b.src() && a.grid() == b.grid() && a.interp() == b.interp()
}

impl<T: Real> FibrationPath<T> {
    pub fn sampled(times: Vec<T>, maps: Vec<GridMap<T>>) -> Result<Self> {
        if maps.len() < 2 || times.len() != maps.len() {
            return Err(Error::InvalidPath("need at least two members with one time each".into()));
        }
        if times[0] != T::zero() || *times.last().unwrap() != T::one() || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidPath("times must increase from 0 to 1".into()));
        }
        let first = &maps[0];
        if first.target().torus().is_none() {
            return Err(Error::InvalidPath("members must be torus-valued".into()));
        }
        if maps
            .iter()
            .any(|m| !same_layout(m, first) || m.target() != first.target() || m.reference() != first.reference())
        {
            return Err(Error::InvalidPath("members differ in shape, reference or grid".into()));
        }
        Ok(FibrationPath::Sampled { times, maps })
    }

    pub fn analytic(base: GridMap<T>, terms: Vec<(TimeBasis, GridMap<T>)>) -> Result<Self> {
        if base.target().torus().is_none() {
            return Err(Error::InvalidPath("base must be torus-valued".into()));
        }
        let k = base.dst_dim();
        if terms.iter().any(|(_, d)| !same_layout(d, &base) || d.target() != &Target::Vector(k)) {
            return Err(Error::InvalidPath("terms must be ℝᵏ fields on the base grid".into()));
        }
        Ok(FibrationPath::Analytic { base, terms })
    }

    pub fn constant(pi: GridMap<T>) -> Result<Self> {
        Self::analytic(pi, Vec::new())
    }

    fn first(&self) -> &GridMap<T> {
        match self {
            FibrationPath::Sampled { maps, .. } => &maps[0],
            FibrationPath::Analytic { base, .. } => base,
        }
    }

    pub fn base_dim(&self) -> usize {
        self.first().dst_dim()
    }

    /// Displacement samples of `π_t` and of `∂_tπ_t`.
    fn samples(&self, t: T) -> (Vec<T>, Vec<T>) {
        match self {
            FibrationPath::Analytic { base, terms } => {
                let mut d = base.displacement().to_vec();
                let mut v = vec![T::zero(); d.len()];
                for (b, field) in terms {
                    let (bv, bd) = (b.value(t), b.derivative(t));
                    for ((di, vi), &fi) in d.iter_mut().zip(v.iter_mut()).zip(field.displacement()) {
                        *di = *di + bv * fi;
                        *vi = *vi + bd * fi;
                    }
                }
                (d, v)
            }
            FibrationPath::Sampled { times, maps } => {
                let t = t.max(T::zero()).min(T::one());
                let n = times.len();
                let i = times.windows(2).position(|w| t <= w[1]).unwrap_or(n - 2);
                let (t0, t1) = (times[i], times[i + 1]);
                let h = t1 - t0;
                let s = (t - t0) / h;
                let tangent = |j: usize| -> Vec<T> {
                    let (a, b) = if j == 0 {
                        (0, 1)
                    } else if j == n - 1 {
                        (n - 2, n - 1)
                    } else {
                        (j - 1, j + 1)
                    };
                    let dt = times[b] - times[a];
                    maps[b].displacement().iter().zip(maps[a].displacement()).map(|(&p, &q)| (p - q) / dt).collect()
                };
                let (m0, m1) = (tangent(i), tangent(i + 1));
                let (p0, p1) = (maps[i].displacement(), maps[i + 1].displacement());
                let (s2, s3) = (s * s, s * s * s);
                let two = T::lit(2.0);
                let three = T::lit(3.0);
                let h00 = two * s3 - three * s2 + T::one();
                let h10 = s3 - two * s2 + s;
                let h01 = three * s2 - two * s3;
                let h11 = s3 - s2;
                let six = T::lit(6.0);
                let four = T::lit(4.0);
                let d00 = (six * s2 - six * s) / h;
                let d10 = three * s2 - four * s + T::one();
                let d01 = (six * s - six * s2) / h;
                let d11 = three * s2 - two * s;
                let mut d = Vec::with_capacity(p0.len());
                let mut v = Vec::with_capacity(p0.len());
                for j in 0..p0.len() {
                    d.push(h00 * p0[j] + h10 * h * m0[j] + h01 * p1[j] + h11 * h * m1[j]);
                    v.push(d00 * p0[j] + d10 * m0[j] + d01 * p1[j] + d11 * m1[j]);
                }
                (d, v)
            }
        }
    }

    /// `π_t`.
    pub fn at(&self, t: T) -> Result<GridMap<T>> {
        self.first().with_displacement(self.samples(t).0)
    }

    /// `π_t` and `∂_tπ_t` (as an ℝᵏ field).
    pub fn at_with_velocity(&self, t: T) -> Result<(GridMap<T>, GridMap<T>)> {
        let first = self.first();
        let (d, v) = self.samples(t);
        let pi = first.with_displacement(d)?;
        let vel = GridMap::new(
            first.src().clone(),
            Target::Vector(first.dst_dim()),
            crate::geom::Reference::Zero,
            first.grid().to_vec(),
            first.interp(),
            v,
        )?;
        Ok((pi, vel))
    }

    /// Whether `π_0` and `π_1` agree within `tol`.
    pub fn is_closed(&self, tol: f64) -> Result<bool> {
        Ok(sup_distance(&self.at(T::zero())?, &self.at(T::one())?)?.as_f64() <= tol)
    }
}

/// Least-norm `w` with `J·w = −v`; `None` when `σ_min(J) < margin_min`.
fn least_norm_velocity<T: Real>(jac: &Mat<T>, v: &[T], margin_min: T) -> Option<Vec<T>> {
    if jac.min_singular_value() < margin_min {
        return None;
    }
    let neg: Vec<T> = v.iter().map(|&e| -e).collect();
    jac.least_norm_solve(&neg)
}

/// Horizontal lift of `∂_t` at `(t, x)`.
pub fn horizontal_velocity<T: Real>(path: &FibrationPath<T>, t: T, x: &Point<T>, margin_min: f64) -> Result<Vec<T>> {
    let (pi, vel) = path.at_with_velocity(t)?;
    let jac = pi.jacobian(x)?;
    let v = vel.eval(x)?;
    least_norm_velocity(&jac, &v, T::lit(margin_min))
        .ok_or(Error::RankDeficient { t: t.as_f64(), margin: jac.min_singular_value().as_f64() })
}

/// Smallest singular value of `[[1, 0], [∂_tπ_t, Dπ_t]]` over `samples`
/// parameter values and the storage nodes.
pub fn loop_submersion_check<T: Real>(path: &FibrationPath<T>, samples: usize) -> Result<Certificate> {
    if !path.is_closed(1e-10)? {
        return Err(Error::InvalidPath("loop does not close".into()));
    }
    let first = path.first();
    let (k, m) = (first.dst_dim(), first.src().dim());
    let mut margin = T::infinity();
    for j in 0..samples {
        let t = T::of_usize(j) / T::of_usize(samples);
        let (pi, vel) = path.at_with_velocity(t)?;
        let jacs = pi.jacobians_on_grid(pi.grid());
        let total = pi.node_count();
        for node in 0..total {
            let mut big = Mat::zeros(k + 1, m + 1);
            big[(0, 0)] = T::one();
            for r in 0..k {
                big[(r + 1, 0)] = vel.displacement()[r * total + node];
                for c in 0..m {
                    big[(r + 1, c + 1)] = jacs[node * k * m + r * m + c];
                }
            }
            margin = margin.min(big.min_singular_value());
        }
    }
    let mut grid = vec![samples];
    grid.extend_from_slice(first.grid());
    Ok(Certificate::new(CertificateKind::Submersion, 0.0, margin.as_f64(), grid))
}

#[derive(Clone, Debug)]
pub struct TransportOptions {
    pub steps: usize,
    /// Number of equally spaced checkpoints after `t = 0` (the last is `t = 1`).
    pub checkpoints: usize,
    pub margin_min: f64,
    pub drift_tol: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { steps: 256, checkpoints: 4, margin_min: 1e-6, drift_tol: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct Checkpoint<T: Real> {
    pub t: f64,
    pub phi: GridMap<T>,
    /// `sup d_B(π_t(φ_t(x)), π_0(x))` over the transported nodes.
    pub drift: f64,
}

#[derive(Clone, Debug)]
pub struct TransportResult<T: Real> {
    pub checkpoints: Vec<Checkpoint<T>>,
    /// Diffeomorphism certificate of the final map.
    pub certificate: Certificate,
}

impl<T: Real> TransportResult<T> {
    pub fn final_map(&self) -> &GridMap<T> {
        &self.checkpoints.last().expect("at least one checkpoint").phi
    }

    pub fn max_drift(&self) -> f64 {
        self.checkpoints.iter().map(|c| c.drift).fold(0.0, f64::max)
    }
}

/// Velocities of every ensemble point at time `t`.
fn ensemble_velocity<T: Real>(
    path: &FibrationPath<T>,
    t: T,
    pos: &[T],
    m: usize,
    margin_min: T,
    out: &mut [T],
) -> Result<()> {
    let (pi, vel) = path.at_with_velocity(t)?;
    let k = pi.dst_dim();
    let mut vals = vec![T::zero(); k];
    let mut dj = vec![T::zero(); k * m];
    let mut v = vec![T::zero(); k];
    for (x, o) in pos.chunks(m).zip(out.chunks_mut(m)) {
        pi.displacement_with_jacobian(x, &mut vals, &mut dj);
        let mut jac = pi.reference().jacobian(k, m);
        for r in 0..k {
            for c in 0..m {
                jac[(r, c)] = jac[(r, c)] + dj[r * m + c];
            }
        }
        vel.displacement_at(x, &mut v);
        let w = least_norm_velocity(&jac, &v, margin_min)
            .ok_or(Error::RankDeficient { t: t.as_f64(), margin: jac.min_singular_value().as_f64() })?;
        o.copy_from_slice(&w);
    }
    Ok(())
}

/// Integrates the horizontal flow from `t = 0` with classical RK4 on the
/// storage nodes.
pub fn transport_path<T: Real>(path: &FibrationPath<T>, opts: &TransportOptions) -> Result<TransportResult<T>> {
    if opts.steps == 0 || opts.checkpoints == 0 || !opts.steps.is_multiple_of(opts.checkpoints) {
        return Err(Error::InvalidPath("steps must be a positive multiple of checkpoints".into()));
    }
    let pi_start = path.at(T::zero())?;
    let shape = pi_start.src().clone();
    let base = pi_start.target().torus().expect("torus-valued path").clone();
    let m = shape.dim();
    let k = base.dim();
    let total = pi_start.node_count();
    let grid = pi_start.grid().to_vec();
    let nodes: Vec<T> = (0..total).flat_map(|n| pi_start.node(n)).collect();
    let start_base: Vec<T> = nodes
        .chunks(m)
        .flat_map(|x| {
            let mut b = vec![T::zero(); k];
            pi_start.eval_raw(x, &mut b);
            b
        })
        .collect();
    let margin_min = T::lit(opts.margin_min);
    let h = T::one() / T::of_usize(opts.steps);
    let every = opts.steps / opts.checkpoints;
    let mut pos = nodes.clone();
    let n = pos.len();
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n], vec![T::zero(); n]);
    let mut tmp = vec![T::zero(); n];
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    let mut checkpoints = Vec::with_capacity(opts.checkpoints);
    for step in 0..opts.steps {
        let t = T::of_usize(step) * h;
        ensemble_velocity(path, t, &pos, m, margin_min, &mut k1)?;
        for i in 0..n {
            tmp[i] = pos[i] + half * h * k1[i];
        }
        ensemble_velocity(path, t + half * h, &tmp, m, margin_min, &mut k2)?;
        for i in 0..n {
            tmp[i] = pos[i] + half * h * k2[i];
        }
        ensemble_velocity(path, t + half * h, &tmp, m, margin_min, &mut k3)?;
        for i in 0..n {
            tmp[i] = pos[i] + h * k3[i];
        }
        let t_next = T::of_usize(step + 1) * h;
        ensemble_velocity(path, t_next, &tmp, m, margin_min, &mut k4)?;
        for i in 0..n {
            pos[i] = pos[i] + h * sixth * (k1[i] + T::lit(2.0) * (k2[i] + k3[i]) + k4[i]);
        }
        if (step + 1) % every == 0 {
            let pi_t = path.at(t_next)?;
            let mut b = vec![T::zero(); k];
            let mut drift = T::zero();
            for (node, x) in pos.chunks(m).enumerate() {
                pi_t.eval_raw(x, &mut b);
                let d: Vec<T> = (0..k).map(|a| min_rep(b[a] - start_base[node * k + a], base.period(a))).collect();
                drift = drift.max(norm(&d));
            }
            if !(drift.as_f64() <= opts.drift_tol) {
                return Err(Error::DriftExceeded { t: t_next.as_f64(), drift: drift.as_f64() });
            }
            let mut disp = vec![T::zero(); total * m];
            for node in 0..total {
                for c in 0..m {
                    disp[c * total + node] = pos[node * m + c] - nodes[node * m + c];
                }
            }
            let phi = GridMap::new(
                shape.clone(),
                Target::Torus(shape.clone()),
                crate::geom::Reference::identity(m),
                grid.clone(),
                pi_start.interp(),
                disp,
            )?;
            checkpoints.push(Checkpoint { t: t_next.as_f64(), phi, drift: drift.as_f64() });
        }
    }
    let certificate = checkpoints.last().expect("checkpoint").phi.diffeo_certificate()?;
    if !certificate.margin_exceeds(opts.margin_min) {
        return Err(Error::NotADiffeomorphism { node: 0, det: certificate.margin });
    }
    Ok(TransportResult { checkpoints, certificate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{coordinate_projection, wrap, Interp, TorusShape};
    use std::f64::consts::FRAC_PI_2;

    fn t2() -> TorusShape<f64> {
        TorusShape::standard(2)
    }

    fn field(n: usize, f: impl Fn(&[f64]) -> f64) -> GridMap<f64> {
        GridMap::field_from_fn(&t2(), 1, vec![n, n], Interp::Trig, |x, v| v[0] = f(x)).unwrap()
    }

    fn shear_path(n: usize) -> FibrationPath<f64> {
        let pi0 = coordinate_projection(&t2(), 1, vec![n, n], Interp::Trig).unwrap();
        FibrationPath::analytic(pi0, vec![(TimeBasis::Monomial(1), field(n, |x| 0.2 * x[1].sin()))]).unwrap()
    }

    #[test]
    fn basis_derivatives_match_differences() {
        let h = 1e-6;
        for b in [TimeBasis::Monomial(0), TimeBasis::Monomial(3), TimeBasis::Cos(2), TimeBasis::Sin(1)] {
            let fd: f64 = (b.value(0.3 + h) - b.value(0.3 - h)) / (2.0 * h);
            assert!((b.derivative(0.3f64) - fd).abs() < 1e-7, "{b:?}");
        }
    }

    #[test]
    fn horizontal_velocity_closed_form() {
        let path = shear_path(32);
        let (t, x1, x2) = (0.7, 0.4, 1.1);
        let x = wrap(&[x1, x2], &t2()).unwrap();
        let w = horizontal_velocity(&path, t, &x, 1e-6).unwrap();
        let c = 0.2 * t * x2.cos();
        let s = -0.2 * x2.sin() / (1.0 + c * c);
        assert!((w[0] - s).abs() < 1e-12 && (w[1] - s * c).abs() < 1e-12);
        // Dπ·w + ∂tπ = 0 and w ⟂ ker Dπ = span(−c, 1)
        assert!((w[0] + c * w[1] + 0.2 * x2.sin()).abs() < 1e-12);
        assert!((-c * w[0] + w[1]).abs() < 1e-12);

        let pi0 = coordinate_projection(&t2(), 1, vec![16, 16], Interp::Trig).unwrap();
        let still = FibrationPath::constant(pi0).unwrap();
        assert_eq!(horizontal_velocity(&still, 0.5, &x, 1e-6).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn velocity_is_linear_in_speed() {
        let pi0 = coordinate_projection(&t2(), 1, vec![16, 16], Interp::Trig).unwrap();
        let d = field(16, |x| 0.2 * x[1].sin());
        let slow = FibrationPath::analytic(pi0.clone(), vec![(TimeBasis::Monomial(1), d.clone())]).unwrap();
        let fast = FibrationPath::analytic(
            pi0,
            vec![(
                TimeBasis::Monomial(1),
                d.with_displacement(d.displacement().iter().map(|v| 3.0 * v).collect()).unwrap(),
            )],
        )
        .unwrap();
        let x = wrap(&[0.3, 2.0], &t2()).unwrap();
        let a = horizontal_velocity(&slow, 0.0, &x, 1e-6).unwrap();
        let b = horizontal_velocity(&fast, 0.0, &x, 1e-6).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((3.0 * u - v).abs() <= 1e-12 * v.abs().max(1e-300));
        }
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let pi0 = coordinate_projection(&t2(), 1, vec![16, 16], Interp::Trig).unwrap();
        // π_t(x) = x₁ − t·sin x₁ has Dπ = (1 − t cos x₁, 0), singular at t = 1, x₁ = 0
        let path = FibrationPath::analytic(pi0, vec![(TimeBasis::Monomial(1), field(16, |x| -x[0].sin()))]).unwrap();
        let x = wrap(&[0.0, 0.0], &t2()).unwrap();
        assert!(matches!(horizontal_velocity(&path, 1.0, &x, 1e-6), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn loop_margins() {
        let pi0 = coordinate_projection(&t2(), 1, vec![16, 16], Interp::Trig).unwrap();
        let still = FibrationPath::constant(pi0.clone()).unwrap();
        assert!((loop_submersion_check(&still, 8).unwrap().margin - 1.0).abs() < 1e-15);

        let wave =
            FibrationPath::analytic(pi0.clone(), vec![(TimeBasis::Sin(1), field(16, |x| 0.1 * x[1].sin()))]).unwrap();
        assert!(loop_submersion_check(&wave, 32).unwrap().margin > 0.0);
        assert!(matches!(loop_submersion_check(&shear_path(16), 8), Err(Error::InvalidPath(_))));
    }

    #[test]
    fn sampled_path_interpolates_members() {
        let pi0 = coordinate_projection(&t2(), 1, vec![16, 16], Interp::Trig).unwrap();
        let analytic = shear_path(16);
        let maps: Vec<_> = [0.0, 0.5, 1.0].iter().map(|&t| analytic.at(t).unwrap()).collect();
        let sampled = FibrationPath::sampled(vec![0.0, 0.5, 1.0], maps).unwrap();
        // the family is linear in t, so Hermite interpolation is exact
        for t in [0.1, 0.5, 0.77] {
            assert!(sup_distance(&sampled.at(t).unwrap(), &analytic.at(t).unwrap()).unwrap() < 1e-15);
        }
        assert!(FibrationPath::sampled(vec![0.0, 0.5], vec![pi0.clone(), pi0.clone()]).is_err());
    }

    #[test]
    fn transport_constant_and_shear() {
        let pi0 = coordinate_projection(&t2(), 1, vec![16, 16], Interp::Trig).unwrap();
        let still = FibrationPath::constant(pi0).unwrap();
        let r = transport_path(&still, &TransportOptions { steps: 8, checkpoints: 2, ..Default::default() }).unwrap();
        assert!(r.checkpoints.iter().all(|c| c.phi.displacement().iter().all(|&v| v == 0.0)));

        let r = transport_path(&shear_path(32), &TransportOptions::default()).unwrap();
        assert!(r.max_drift() <= 1e-6);
        assert!(r.certificate.margin > 0.0);
        let y = wrap(&[1.0, FRAC_PI_2], &t2()).unwrap();
        let pi1 = shear_path(32).at(1.0).unwrap();
        let b = pi1.eval(&r.final_map().eval_point(&y).unwrap()).unwrap()[0];
        assert!((b - 1.0).abs() < 1e-6);
    }
}
