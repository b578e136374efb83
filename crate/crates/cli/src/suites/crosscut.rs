use fibspace::chart::chart_decompose;
use fibspace::geom::write_gmap_string;
use fibspace::sample::random_diffeo;
use fibspace::{Interp, Result as CoreResult};

use super::geom::format_roundtrip;
use crate::convergence::{monotone_violations, table};
use crate::report::{Check, Sup};
use crate::scene::Scene;

pub fn run(scene: &Scene) -> Vec<Check> {
    let mut mono = Sup::max("convergence.chart_monotone");
    mono.record(table(scene, &scene.config.convergence_grids, Interp::Trig, false).map(|t| {
        let chart: Vec<f64> = t.rows.iter().map(|r| r.chart_roundtrip).collect();
        monotone_violations(&chart) as f64
    }));

    let mut det = Sup::max("determinism");
    det.record(determinism(scene));

    let mut fmt = Sup::max("geom.format");
    fmt.record(format_roundtrip(scene, &mut scene.rng(8)));
    vec![
        mono.check(scene.tol("convergence.monotone")),
        det.check(scene.tol("determinism")),
        fmt.check(scene.tol("geom.format")),
    ]
}

/// Serialized chart factors of a seeded random diffeomorphism.
fn artifact_bytes(scene: &Scene) -> CoreResult<String> {
    let phi = random_diffeo(&mut scene.rng(9), &scene.shape, scene.grid(), scene.interp, 0.2)?;
    let c = chart_decompose(&scene.projection, &phi)?;
    Ok(write_gmap_string(&phi) + &write_gmap_string(&c.phi_s) + &write_gmap_string(&c.psi))
}

/// 1 when two identical runs serialize differently.
fn determinism(scene: &Scene) -> CoreResult<f64> {
    Ok(if artifact_bytes(scene)? == artifact_bytes(scene)? { 0.0 } else { 1.0 })
}
