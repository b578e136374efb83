use fibspace::geom::sup_distance;
use fibspace::orbit::{
    connect_chain, coset_equal, factorize, flat_p2, graph_section, push_fibration, section_exchange,
};
use fibspace::sample::{random_diffeo, random_fibration};
use fibspace::scalar::{min_rep, norm};
use fibspace::transport::{FibrationPath, TimeBasis};
use fibspace::{GridMap, Result as CoreResult};
use rand::Rng;

use crate::report::{Check, Sup};
use crate::scene::Scene;

const SAMPLES: usize = 20;
const POINTS: usize = 100;
const AMPLITUDE: f64 = 0.2;

/// `π₀ + c·sin(θ_k)` on every base axis, `θ_k` the angle of the first fiber
/// axis.
pub fn shear_field(scene: &Scene, c: f64) -> CoreResult<GridMap<f64>> {
    let (k, pk) = (scene.k, scene.shape.period(scene.k));
    GridMap::field_from_fn(&scene.shape, k, scene.grid(), scene.interp, |x, v| {
        v.fill(c * (std::f64::consts::TAU * x[k] / pk).sin());
    })
}

pub fn shear_fibration(scene: &Scene, c: f64) -> CoreResult<GridMap<f64>> {
    let field = shear_field(scene, c)?;
    scene_pi0(scene)?.with_displacement(field.displacement().to_vec())
}

fn scene_pi0(scene: &Scene) -> CoreResult<GridMap<f64>> {
    fibspace::geom::coordinate_projection(&scene.shape, scene.k, scene.grid(), scene.interp)
}

pub fn run(scene: &Scene) -> Vec<Check> {
    let mut rng = scene.rng(4);
    let p = &scene.projection;
    let pi0 = match scene_pi0(scene) {
        Ok(pi0) => pi0,
        Err(e) => {
            return vec![Check::failed(
                "orbit.factorize",
                scene.tol("orbit.factorize"),
                crate::report::Relation::AtMost,
                e,
            )]
        }
    };
    let mut fact = Sup::max("orbit.factorize");
    let mut map_rt = Sup::max("orbit.map_roundtrip");
    let mut form = Sup::max("orbit.section_form");
    for _ in 0..SAMPLES {
        let r = random_fibration(&mut rng, &scene.shape, scene.k, scene.grid(), scene.interp, AMPLITUDE)
            .and_then(|pi| Ok((factorize(p, &pi)?, pi)));
        match r {
            Ok((res, pi)) => {
                fact.push(res.residual);
                map_rt.record(push_fibration(&pi0, &res.f).and_then(|q| sup_distance(&q, &pi)));
                form.push(section_form(scene, &res.section, &mut rng));
            }
            Err(e) => fact.fail(e),
        }
    }

    let mut coset = Sup::max("orbit.coset_roundtrip");
    for _ in 0..SAMPLES {
        coset.record(random_diffeo(&mut rng, &scene.shape, scene.grid(), scene.interp, AMPLITUDE).and_then(|phi| {
            let pi = push_fibration(&pi0, &phi)?;
            let f = factorize(p, &pi)?.f;
            Ok(coset_equal(&f, &phi, &pi0)?.residual)
        }));
    }

    let mut shear = Sup::max("orbit.shear");
    shear.record(shear_case(scene));
    let mut chain = Sup::max("orbit.chain");
    chain.record(shear_field(scene, AMPLITUDE).and_then(|v| {
        let path = FibrationPath::analytic(pi0.clone(), vec![(TimeBasis::Monomial(1), v)])?;
        Ok(connect_chain(p, &path)?.residual)
    }));

    vec![
        fact.check(scene.tol("orbit.factorize")),
        map_rt.check(scene.tol("orbit.map_roundtrip")),
        coset.check(scene.tol("orbit.coset_roundtrip")),
        form.check(scene.tol("orbit.section_form")),
        shear.check(scene.tol("orbit.shear")),
        chain.check(scene.tol("orbit.chain")),
    ]
}

/// Largest `d_B(s(f(x))_B, π₀(x))` over random points.
fn section_form<R: Rng>(scene: &Scene, section: &GridMap<f64>, rng: &mut R) -> f64 {
    let (m, k) = (scene.m(), scene.k);
    let mut out = vec![0.0; m + k];
    (0..POINTS)
        .map(|_| {
            let x: Vec<f64> = scene.shape.periods().iter().map(|&p| rng.gen_range(0.0..p)).collect();
            section.eval_raw(&x, &mut out);
            let d: Vec<f64> = (0..k).map(|a| min_rep(out[m + a] - x[a], scene.shape.period(a))).collect();
            norm(&d)
        })
        .fold(0.0, f64::max)
}

/// `π = x_B + 0.2 sin θ_k` factors through `f(y) = y − 0.2 sin θ_k(y)` on the
/// base axes (flat fiber metric).
fn shear_case(scene: &Scene) -> CoreResult<f64> {
    let pi = shear_fibration(scene, AMPLITUDE)?;
    let f = factorize(&scene.flat, &pi)?.f;
    let (k, pk) = (scene.k, scene.shape.period(scene.k));
    let expect = GridMap::diffeo_from_fn(&scene.shape, scene.grid(), scene.interp, |x, d| {
        let s = AMPLITUDE * (std::f64::consts::TAU * x[k] / pk).sin();
        d[..k].fill(-s);
    })?;
    sup_distance(&f, &expect)
}

/// Exchange of graph sections into sections of the flat `p₂`.
pub fn run_exchange(scene: &Scene) -> Vec<Check> {
    let mut rng = scene.rng(5);
    let mut exch = Sup::max("orbit.section_exchange");
    let mut fixed = Sup::max("orbit.fixed_point");
    for _ in 0..SAMPLES {
        let r = exchange_case(scene, &mut rng);
        match r {
            Ok((e, f)) => {
                exch.push(e);
                fixed.push(f);
            }
            Err(e) => exch.fail(e),
        }
    }
    vec![exch.check(scene.tol("orbit.section_exchange")), fixed.check(scene.tol("orbit.fixed_point"))]
}

fn exchange_case<R: Rng>(scene: &Scene, rng: &mut R) -> CoreResult<(f64, f64)> {
    let p2 = flat_p2(&scene.shape, scene.k)?;
    let pi = random_fibration(rng, &scene.shape, scene.k, scene.grid(), scene.interp, AMPLITUDE)?;
    let beta = section_exchange(&graph_section(&pi)?, &p2)?;
    let e = sup_distance(&p2.compose(&beta)?, &GridMap::identity(&scene.shape, scene.grid(), scene.interp)?)?;
    let again = section_exchange(&beta, &p2)?;
    Ok((e, sup_distance(&again, &beta)?))
}
