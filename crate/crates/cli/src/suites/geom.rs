use fibspace::geom::{read_gmap_str, sup_distance, verification_grid, write_gmap_string};
use fibspace::orbit::graph_section;
use fibspace::sample::{random_diffeo, random_fibration, random_field};
use fibspace::scalar::min_rep;
use fibspace::{GridMap, Result as CoreResult, TorusShape};
use rand::Rng;

use crate::report::{Check, Sup};
use crate::scene::Scene;

const CASES: usize = 5;
const POINTS: usize = 100;

pub fn run(scene: &Scene) -> Vec<Check> {
    let mut rng = scene.rng(1);
    let mut checks = Vec::new();

    let mut assoc = Sup::max("geom.associativity");
    for _ in 0..CASES {
        assoc.record(associativity(scene, &mut rng));
    }
    checks.push(assoc.check(scene.tol("geom.associativity")));

    let mut inv = Sup::max("geom.inversion");
    for _ in 0..CASES {
        inv.record(inversion(scene, &mut rng));
    }
    checks.push(inv.check(scene.tol("geom.inversion")));

    let mut chain = Sup::max("geom.chain_rule");
    chain.record(chain_rule(scene, &mut rng));
    checks.push(chain.check(scene.tol("geom.chain_rule")));

    let mut fd = Sup::max("geom.jacobian_fd");
    fd.record(finite_differences(scene, &mut rng));
    checks.push(fd.check(scene.tol("geom.jacobian_fd")));

    let mut rate = Sup::max("geom.spectral_rate");
    rate.record(spectral_rate(scene));
    checks.push(rate.check(scene.tol("geom.spectral_rate")));
    checks
}

fn random_point<R: Rng>(rng: &mut R, shape: &TorusShape<f64>) -> Vec<f64> {
    shape.periods().iter().map(|&p| rng.gen_range(0.0..p)).collect()
}

fn associativity<R: Rng>(scene: &Scene, rng: &mut R) -> CoreResult<f64> {
    let mut draw = || random_diffeo(rng, &scene.shape, scene.grid(), scene.interp, 0.3);
    let (f, g, h) = (draw()?, draw()?, draw()?);
    let left = f.compose(&g.compose(&h)?)?;
    let right = f.compose(&g)?.compose(&h)?;
    sup_distance(&left, &right)
}

fn inversion<R: Rng>(scene: &Scene, rng: &mut R) -> CoreResult<f64> {
    let f = random_diffeo(rng, &scene.shape, scene.grid(), scene.interp, 0.2)?;
    let cert = f.diffeo_certificate()?;
    if !cert.margin_exceeds(scene.margin_min()) {
        return Ok(0.0);
    }
    let g = f.invert()?;
    let id = scene.identity()?;
    Ok(sup_distance(&f.compose(&g)?, &id)?.max(sup_distance(&g.compose(&f)?, &id)?))
}

fn chain_rule<R: Rng>(scene: &Scene, rng: &mut R) -> CoreResult<f64> {
    let f = random_diffeo(rng, &scene.shape, scene.grid(), scene.interp, 0.3)?;
    let g = random_diffeo(rng, &scene.shape, scene.grid(), scene.interp, 0.3)?;
    let fg = f.compose(&g)?;
    let m = scene.m();
    let mut worst = 0.0f64;
    for _ in 0..POINTS {
        let x = random_point(rng, &scene.shape);
        let mut gx = vec![0.0; m];
        g.eval_raw(&x, &mut gx);
        let lhs = fg.jacobian_raw(&x);
        let rhs = f.jacobian_raw(&gx).matmul(&g.jacobian_raw(&x));
        for r in 0..m {
            for c in 0..m {
                worst = worst.max((lhs[(r, c)] - rhs[(r, c)]).abs());
            }
        }
    }
    Ok(worst)
}

fn finite_differences<R: Rng>(scene: &Scene, rng: &mut R) -> CoreResult<f64> {
    const H: f64 = 1e-5;
    let f = random_diffeo(rng, &scene.shape, scene.grid(), scene.interp, 0.3)?;
    let m = scene.m();
    let mut worst = 0.0f64;
    let (mut up, mut down) = (vec![0.0; m], vec![0.0; m]);
    for _ in 0..POINTS {
        let x = random_point(rng, &scene.shape);
        let jac = f.jacobian_raw(&x);
        for c in 0..m {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[c] += H;
            xm[c] -= H;
            f.eval_raw(&xp, &mut up);
            f.eval_raw(&xm, &mut down);
            for r in 0..m {
                let fd = min_rep(up[r] - down[r], scene.shape.period(r)) / (2.0 * H);
                worst = worst.max((fd - jac[(r, c)]).abs());
            }
        }
    }
    Ok(worst)
}

/// `sup |f(f⁻¹(x)) − x|` over the off-node points of the verification grid.
pub fn off_node_inversion_error(f: &GridMap<f64>) -> CoreResult<f64> {
    let g = f.invert()?;
    let shape = f.src();
    let fine = verification_grid(f.grid());
    let total: usize = fine.iter().product();
    let m = shape.dim();
    let (mut y, mut z) = (vec![0.0; m], vec![0.0; m]);
    let mut multi = vec![0usize; m];
    let mut worst = 0.0f64;
    for node in 0..total {
        let mut rest = node;
        for a in (0..m).rev() {
            multi[a] = rest % fine[a];
            rest /= fine[a];
        }
        if multi.iter().all(|&i| i % 2 == 0) {
            continue;
        }
        let x: Vec<f64> = (0..m).map(|a| shape.period(a) * multi[a] as f64 / fine[a] as f64).collect();
        g.eval_raw(&x, &mut y);
        f.eval_raw(&y, &mut z);
        let d: Vec<f64> = (0..m).map(|a| min_rep(z[a] - x[a], shape.period(a))).collect();
        worst = worst.max(fibspace::scalar::norm(&d));
    }
    Ok(worst)
}

/// Largest ratio `e(2N)/e(N)` of successive off-node inversion errors on
/// the convergence grids, ignoring steps that already reached roundoff.
fn spectral_rate(scene: &Scene) -> CoreResult<f64> {
    const FLOOR: f64 = 1e-13;
    let mut errors = Vec::new();
    for &n in &scene.config.convergence_grids {
        let f = crate::convergence::exp_sin_diffeo(&scene.shape, scene.k, n, fibspace::Interp::Trig)?;
        errors.push(off_node_inversion_error(&f)?);
    }
    Ok(errors.windows(2).map(|w| if w[1] <= FLOOR { 0.0 } else { w[1] / w[0] }).fold(0.0, f64::max))
}

/// Number of samples or metadata fields that change in a write/read cycle.
pub fn format_roundtrip<R: Rng>(scene: &Scene, rng: &mut R) -> CoreResult<f64> {
    let pi = random_fibration(rng, &scene.shape, scene.k, scene.grid(), scene.interp, 0.2)?;
    let maps = [
        random_diffeo(rng, &scene.shape, scene.grid(), scene.interp, 0.2)?,
        graph_section(&pi)?,
        random_field(rng, &scene.shape, scene.k, scene.grid(), scene.interp, 1.0)?,
        pi,
    ];
    let mut mismatches = 0usize;
    for map in &maps {
        let back = read_gmap_str(&write_gmap_string(map))?;
        mismatches +=
            map.displacement().iter().zip(back.displacement()).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
        mismatches += usize::from(back.displacement().len() != map.displacement().len());
        mismatches += usize::from(back.src() != map.src() || back.target() != map.target());
        mismatches += usize::from(back.reference() != map.reference() || back.grid() != map.grid());
        mismatches += usize::from(back.interp() != map.interp());
    }
    Ok(mismatches as f64)
}
