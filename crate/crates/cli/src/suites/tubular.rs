use fibspace::sample::{random_vertical, TrigPoly};
use fibspace::scalar::{min_rep, norm};
use fibspace::tubular::{FiberMetric, TubularProjection};
use fibspace::{GridMap, Interp, Result as CoreResult};
use rand::Rng;

use crate::report::{Check, Sup};
use crate::scene::Scene;

const TRIPLES: usize = 1000;
const VERTICALS: usize = 20;
const SCAN_INSTANCES: usize = 10;
const SCAN_POINTS: usize = 100_000;

struct Triple {
    x: Vec<f64>,
    y: Vec<f64>,
    psi: usize,
}

pub fn run(scene: &Scene) -> Vec<Check> {
    let mut rng = scene.rng(2);
    let mut checks = Vec::new();
    let k = scene.k;
    let verticals: CoreResult<Vec<GridMap<f64>>> =
        (0..VERTICALS).map(|_| random_vertical(&mut rng, &scene.shape, k, scene.grid(), scene.interp, 0.3)).collect();
    let verticals = match verticals {
        Ok(v) => v,
        Err(e) => {
            for name in ["tubular.fiber_membership", "tubular.tube_invariance", "tubular.g_invariance"] {
                checks.push(Check::failed(name, scene.tol(name), crate::report::Relation::AtMost, &e));
            }
            return checks;
        }
    };
    let delta = scene.flat.delta();
    let triples: Vec<Triple> = (0..TRIPLES)
        .map(|i| {
            let x: Vec<f64> = scene.shape.periods().iter().map(|&p| rng.gen_range(0.0..p)).collect();
            let y = (0..scene.m())
                .map(|a| {
                    if a < k {
                        x[a] + rng.gen_range(-0.95..0.95) * delta
                    } else {
                        rng.gen_range(0.0..scene.shape.period(a))
                    }
                })
                .collect();
            Triple { x, y, psi: i % VERTICALS }
        })
        .collect();

    let mut membership = Sup::max("tubular.fiber_membership");
    let mut tube = Sup::max("tubular.tube_invariance");
    let mut idem = Sup::max("tubular.idempotence_flat");
    let mut ginv = Sup::max("tubular.g_invariance");
    for t in &triples {
        let psi = &verticals[t.psi];
        let mut psi_y = vec![0.0; scene.m()];
        psi.eval_raw(&t.y, &mut psi_y);
        let inside = scene.flat.check_tube(&t.x[..k], &t.y, None).is_ok();
        tube.push(f64::from(u8::from(inside && scene.flat.check_tube(&t.x[..k], &psi_y, None).is_err())));
        membership.record(fiber_membership(&scene.projection, t));
        idem.record(idempotence(&scene.flat, t));
        ginv.record(g_invariance(&scene.projection, psi, t));
    }
    checks.push(membership.check(scene.tol("tubular.fiber_membership")));
    checks.push(tube.check(scene.tol("tubular.tube_invariance")));
    checks.push(idem.check(scene.tol("tubular.idempotence_flat")));
    checks.push(ginv.check(scene.tol("tubular.g_invariance")));

    if scene.m() - k != 1 {
        return checks;
    }
    // conformal fiber metrics
    let poly = TrigPoly::random(&mut rng, scene.m(), 2, 3, 0.3);
    let conformal = closed_form_lambda(scene, &poly)
        .and_then(|l| TubularProjection::new(&scene.shape, k, scene.config.delta, FiberMetric::Conformal(l)));
    let zero = GridMap::field_from_fn(&scene.shape, 1, vec![8; scene.m()], Interp::Trig, |_, _| {})
        .and_then(|l| TubularProjection::new(&scene.shape, k, scene.config.delta, FiberMetric::Conformal(l)));
    let mut idem_c = Sup::max("tubular.idempotence_conformal");
    let mut limit = Sup::max("tubular.riemann_flat_limit");
    match (&conformal, &zero) {
        (Ok(c), Ok(z)) => {
            for t in &triples {
                idem_c.record(idempotence(c, t));
                limit.record(flat_limit(z, &scene.flat, t));
            }
        }
        (Err(e), _) | (_, Err(e)) => {
            idem_c.fail(e);
            limit.fail(e);
        }
    }
    checks.push(idem_c.check(scene.tol("tubular.idempotence_conformal")));
    checks.push(limit.check(scene.tol("tubular.riemann_flat_limit")));

    let mut scan = Sup::max("tubular.riemann_scan");
    for _ in 0..SCAN_INSTANCES {
        let poly = TrigPoly::random(&mut rng, scene.m(), 2, 3, 0.3);
        let x: Vec<f64> = scene.shape.periods().iter().map(|&p| rng.gen_range(0.0..p)).collect();
        let mut y = x.clone();
        for a in 0..k {
            let s = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            y[a] += s * rng.gen_range(0.3..0.9) * delta;
        }
        y[k] = rng.gen_range(0.0..scene.shape.period(k));
        scan.record(brute_force_gap(scene, &poly, &x, &y));
    }
    checks.push(scan.check(scene.tol("tubular.riemann_scan")));
    checks
}

fn fiber_membership(p: &TubularProjection<f64>, t: &Triple) -> CoreResult<f64> {
    let k = p.base_dim();
    let z = p.project_to_fiber(&t.x[..k], &t.y)?;
    Ok(z[..k].iter().zip(&t.x[..k]).filter(|(a, b)| a.to_bits() != b.to_bits()).count() as f64)
}

fn fiber_gap(p: &TubularProjection<f64>, a: &[f64], b: &[f64]) -> f64 {
    let shape = p.shape();
    let d: Vec<f64> = (0..shape.dim()).map(|i| min_rep(a[i] - b[i], shape.period(i))).collect();
    norm(&d)
}

fn idempotence(p: &TubularProjection<f64>, t: &Triple) -> CoreResult<f64> {
    let k = p.base_dim();
    let z = p.project_to_fiber(&t.x[..k], &t.y)?;
    let z2 = p.project_to_fiber(&t.x[..k], &z)?;
    Ok(fiber_gap(p, &z, &z2))
}

fn g_invariance(p: &TubularProjection<f64>, psi: &GridMap<f64>, t: &Triple) -> CoreResult<f64> {
    let k = p.base_dim();
    let mut px = vec![0.0; t.x.len()];
    psi.eval_raw(&t.x, &mut px);
    let moved = p.project_to_fiber(&px[..k], &t.y)?;
    let fixed = p.project_to_fiber(&t.x[..k], &t.y)?;
    Ok(fiber_gap(p, &moved, &fixed))
}

fn flat_limit(zero: &TubularProjection<f64>, flat: &TubularProjection<f64>, t: &Triple) -> CoreResult<f64> {
    let k = flat.base_dim();
    let a = zero.project_to_fiber(&t.x[..k], &t.y)?;
    let b = flat.project_to_fiber(&t.x[..k], &t.y)?;
    Ok(fiber_gap(flat, &a, &b))
}

fn closed_form_lambda(scene: &Scene, poly: &TrigPoly) -> CoreResult<GridMap<f64>> {
    let periods = scene.shape.periods().to_vec();
    GridMap::field_from_fn(&scene.shape, 1, vec![32; scene.m()], Interp::Trig, |x, v| v[0] = poly.eval(x, &periods))
}

/// Distance from the computed projection to the minimizer of a dense scan of
/// trapezoid-rule chord lengths with the closed-form `λ`.
fn brute_force_gap(scene: &Scene, poly: &TrigPoly, x: &[f64], y: &[f64]) -> CoreResult<f64> {
    const PANELS: usize = 200;
    let k = scene.k;
    let lambda = closed_form_lambda(scene, poly)?;
    let p = TubularProjection::new(&scene.shape, k, scene.config.delta, FiberMetric::Conformal(lambda))?;
    let got = p.project_to_fiber(&x[..k], y)?[k];
    let periods = scene.shape.periods();
    let mut d = vec![0.0; scene.m()];
    for a in 0..k {
        d[a] = min_rep(y[a] - x[a], periods[a]);
    }
    let mut pt = vec![0.0; scene.m()];
    let mut length = |zeta: f64| {
        d[k] = y[k] - zeta;
        let len = norm(&d);
        let mut acc = 0.0;
        for i in 0..=PANELS {
            let s = i as f64 / PANELS as f64;
            for a in 0..scene.m() {
                let start = if a < k { x[a] } else { zeta };
                pt[a] = start + s * d[a];
            }
            let w = if i == 0 || i == PANELS { 0.5 } else { 1.0 };
            acc += w * poly.eval(&pt, periods).exp();
        }
        len * acc / PANELS as f64
    };
    let q = periods[k] / 4.0;
    let (lo, hi) = (y[k] - q, y[k] + q);
    let mut best = (f64::INFINITY, 0.0);
    for i in 0..SCAN_POINTS {
        let zeta = lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64;
        let l = length(zeta);
        if l < best.0 {
            best = (l, zeta);
        }
    }
    Ok(min_rep(got - best.1, periods[k]).abs())
}
