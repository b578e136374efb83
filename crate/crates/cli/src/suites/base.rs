use fibspace::baseaction::{
    assemble_base, fiber_spectral_energy, reconstruction_ulps, split_section, trivialize, vanishing_on_section,
    GlobalSection,
};
use fibspace::geom::sup_distance;
use fibspace::sample::{random_diffeo, random_fibration, random_field};
use fibspace::Result as CoreResult;
use rand::Rng;

use crate::report::{Check, Sup};
use crate::scene::Scene;

const SAMPLES: usize = 20;
const OPENNESS: usize = 10;
const SECTIONS: usize = 50;
const AMPLITUDE: f64 = 0.2;

fn section(scene: &Scene) -> CoreResult<GlobalSection<f64>> {
    GlobalSection::new(&scene.shape, scene.k, &scene.config.section_fiber, scene.base_grid(), scene.interp)
}

pub fn run(scene: &Scene) -> Vec<Check> {
    let mut rng = scene.rng(6);
    let names = [
        "base.roundtrip",
        "base.equivariance",
        "base.openness",
        "base.reconstruction",
        "base.vanishing",
        "base.spectral_energy",
    ];
    let sigma = match section(scene) {
        Ok(s) => s,
        Err(e) => {
            return names.iter().map(|n| Check::failed(*n, scene.tol(n), crate::report::Relation::AtMost, &e)).collect()
        }
    };
    let mut round = Sup::max(names[0]);
    let mut equiv = Sup::max(names[1]);
    let mut open = Sup::max(names[2]);
    let mut recon = Sup::max(names[3]);
    let mut vanish = Sup::max(names[4]);
    let mut energy = Sup::max(names[5]);
    for _ in 0..SAMPLES {
        round.record(roundtrip(scene, &sigma, &mut rng));
        equiv.record(equivariance(scene, &sigma, &mut rng));
    }
    for _ in 0..OPENNESS {
        open.record(openness(scene, &sigma, &mut rng));
    }
    for _ in 0..SECTIONS {
        let r = random_field(&mut rng, &scene.shape, scene.k, scene.grid(), scene.interp, 1.0)
            .and_then(|s| Ok((split_section(&s, &sigma)?, s)));
        match r {
            Ok((split, s)) => {
                recon.push(reconstruction_ulps(&s, &split));
                vanish.record(vanishing_on_section(&split.vanishing, &sigma));
                energy.push(fiber_spectral_energy(&split.lifted, scene.k));
            }
            Err(e) => recon.fail(e),
        }
    }
    vec![
        round.check(scene.tol(names[0])),
        equiv.check(scene.tol(names[1])),
        open.check(scene.tol(names[2])),
        recon.check(scene.tol(names[3])),
        vanish.check(scene.tol(names[4])),
        energy.check(scene.tol(names[5])),
    ]
}

/// Both composites of trivialize and assemble.
fn roundtrip<R: Rng>(scene: &Scene, sigma: &GlobalSection<f64>, rng: &mut R) -> CoreResult<f64> {
    let pi = random_fibration(rng, &scene.shape, scene.k, scene.grid(), scene.interp, AMPLITUDE)?;
    let t = trivialize(&pi, sigma)?;
    let back = assemble_base(&t.phi_b, &t.pi_s, sigma)?;
    let again = trivialize(&back, sigma)?;
    Ok(sup_distance(&back, &pi)?.max(sup_distance(&again.phi_b, &t.phi_b)?).max(sup_distance(&again.pi_s, &t.pi_s)?))
}

/// `trivialize(φ∘π) = (φ∘φ_B, π_S)`.
fn equivariance<R: Rng>(scene: &Scene, sigma: &GlobalSection<f64>, rng: &mut R) -> CoreResult<f64> {
    let phi = random_diffeo(rng, &scene.base, scene.base_grid(), scene.interp, AMPLITUDE)?;
    let pi = random_fibration(rng, &scene.shape, scene.k, scene.grid(), scene.interp, AMPLITUDE)?;
    let t = trivialize(&pi, sigma)?;
    let moved = trivialize(&phi.compose(&pi)?, sigma)?;
    Ok(sup_distance(&moved.phi_b, &phi.compose(&t.phi_b)?)?.max(sup_distance(&moved.pi_s, &t.pi_s)?))
}

/// 1 when a perturbation whose value and first derivatives stay below half
/// the margin of `π∘σ` leaves the trivializable set.
fn openness<R: Rng>(scene: &Scene, sigma: &GlobalSection<f64>, rng: &mut R) -> CoreResult<f64> {
    let pi = random_fibration(rng, &scene.shape, scene.k, scene.grid(), scene.interp, AMPLITUDE)?;
    let margin = trivialize(&pi, sigma)?.margin;
    // modes up to 2 per axis: |∇| ≤ 2·2π/L·√m per unit of amplitude
    let grad = 2.0 * std::f64::consts::TAU / scene.shape.min_period() * (scene.m() as f64).sqrt();
    let amp = 0.45 * margin / grad.max(1.0);
    let eps = random_field(rng, &scene.shape, scene.k, scene.grid(), scene.interp, amp)?;
    let disp: Vec<f64> = pi.displacement().iter().zip(eps.displacement()).map(|(a, b)| a + b).collect();
    let moved = pi.with_displacement(disp)?;
    Ok(if trivialize(&moved, sigma).is_ok() { 0.0 } else { 1.0 })
}
