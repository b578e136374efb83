use fibspace::chart::{chart_assemble, chart_decompose, ChartedDiffeo};
use fibspace::geom::sup_distance;
use fibspace::sample::{random_diffeo, random_vertical};
use fibspace::{GridMap, Result as CoreResult};

use crate::report::{Check, Sup};
use crate::scene::Scene;

const SAMPLES: usize = 50;
const PAIRS: usize = 20;
const AMPLITUDE: f64 = 0.2;

pub fn run(scene: &Scene) -> Vec<Check> {
    let mut rng = scene.rng(3);
    let p = &scene.projection;
    let mut domain = Sup::max("chart.domain");
    let mut vert = Sup::max("chart.verticality");
    let mut slice = Sup::max("chart.slice");
    let mut round = Sup::max("chart.roundtrip");
    for _ in 0..SAMPLES {
        let phi = match random_diffeo(&mut rng, &scene.shape, scene.grid(), scene.interp, AMPLITUDE) {
            Ok(phi) => phi,
            Err(e) => {
                domain.fail(e);
                continue;
            }
        };
        match chart_decompose(p, &phi) {
            Ok(c) => {
                vert.push(c.verticality.residual);
                slice.push(c.slice.residual);
                round.record(roundtrip(scene, &phi, &c));
            }
            Err(_) => domain.push(1.0),
        }
    }

    let mut equiv = Sup::max("chart.equivariance");
    let mut invariance = Sup::max("chart.invariance");
    for _ in 0..PAIRS {
        let phi = random_diffeo(&mut rng, &scene.shape, scene.grid(), scene.interp, AMPLITUDE);
        let psi0 = random_vertical(&mut rng, &scene.shape, scene.k, scene.grid(), scene.interp, AMPLITUDE);
        match (phi, psi0) {
            (Ok(phi), Ok(psi0)) => {
                let r = equivariance(scene, &phi, &psi0);
                match r {
                    Ok((e, violations)) => {
                        equiv.push(e);
                        invariance.push(violations);
                    }
                    Err(e) => equiv.fail(e),
                }
            }
            (Err(e), _) | (_, Err(e)) => equiv.fail(e),
        }
    }
    vec![
        domain.check(scene.tol("chart.domain")),
        vert.check(scene.tol("chart.verticality")),
        slice.check(scene.tol("chart.slice")),
        round.check(scene.tol("chart.roundtrip")),
        equiv.check(scene.tol("chart.equivariance")),
        invariance.check(scene.tol("chart.invariance")),
    ]
}

/// Both composites of decompose and assemble against the identity.
fn roundtrip(scene: &Scene, phi: &GridMap<f64>, c: &ChartedDiffeo<f64>) -> CoreResult<f64> {
    let p = &scene.projection;
    let back = chart_assemble(p, &c.phi_s, &c.psi)?;
    let again = chart_decompose(p, &back)?;
    Ok(sup_distance(&back, phi)?.max(sup_distance(&again.phi_s, &c.phi_s)?).max(sup_distance(&again.psi, &c.psi)?))
}

/// Equivariance residual of `φ∘ψ₀`, and the number of invariance
/// violations (domain membership, diffeomorphy of the vertical factor).
fn equivariance(scene: &Scene, phi: &GridMap<f64>, psi0: &GridMap<f64>) -> CoreResult<(f64, f64)> {
    let p = &scene.projection;
    let c = chart_decompose(p, phi)?;
    let moved = phi.compose(psi0)?;
    let mut violations = 0.0;
    let vertical = p.project_graph(&moved)?;
    if !vertical.diffeo_certificate()?.margin_exceeds(scene.margin_min()) {
        violations += 1.0;
    }
    let c2 = match chart_decompose(p, &moved) {
        Ok(c2) => c2,
        Err(_) => return Ok((f64::INFINITY, violations + 1.0)),
    };
    let expect_psi = c.psi.compose(psi0)?;
    let r = sup_distance(&c2.phi_s, &c.phi_s)?.max(sup_distance(&c2.psi, &expect_psi)?);
    Ok((r, violations))
}
