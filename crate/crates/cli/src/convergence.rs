//! Grid-convergence studies on smooth but not band-limited scenarios built
//! from `exp(sin)`.

use fibspace::chart::{chart_assemble_with, chart_decompose};
use fibspace::geom::{coordinate_projection, sup_distance, verification_grid};
use fibspace::orbit::{coset_equal, factorize};
use fibspace::scalar::{min_rep, norm};
use fibspace::transport::{FibrationPath, TimeBasis};
use fibspace::tubular::TubularProjection;
use fibspace::{GridMap, Interp, Result as CoreResult, TorusShape};

use crate::report::{Check, ConvergenceRow, ConvergenceTable, Sup};
use crate::scene::Scene;
use crate::suites::transport::transport;

/// Errors at or below this level count as converged when judging
/// monotonicity.
const ROUNDOFF: f64 = 1e-12;

fn angle(shape: &TorusShape<f64>, x: &[f64], a: usize) -> f64 {
    std::f64::consts::TAU * x[a] / shape.period(a)
}

fn bump(t: f64) -> f64 {
    t.sin().exp() - 1.0
}

/// Base axes move by `0.1·bump(θ_{a+1})`, fiber axes by
/// `0.15·bump(θ₀ + θ_a)`.
pub fn exp_sin_diffeo(shape: &TorusShape<f64>, k: usize, n: usize, interp: Interp) -> CoreResult<GridMap<f64>> {
    let m = shape.dim();
    GridMap::diffeo_from_fn(shape, vec![n; m], interp, |x, d| {
        for a in 0..m {
            d[a] = if a < k {
                0.1 * bump(angle(shape, x, (a + 1) % m))
            } else {
                0.15 * bump(angle(shape, x, 0) + angle(shape, x, a))
            };
        }
    })
}

/// A diffeomorphism whose chart factors are trigonometric polynomials
/// resolved on every grid, so chart round trips are exact up to roundoff.
pub fn band_limited_diffeo(shape: &TorusShape<f64>, k: usize, n: usize, interp: Interp) -> CoreResult<GridMap<f64>> {
    let m = shape.dim();
    GridMap::diffeo_from_fn(shape, vec![n; m], interp, |x, d| {
        for a in 0..m {
            d[a] = if a < k { 0.2 * angle(shape, x, a).sin() } else { 0.1 * angle(shape, x, 0).cos() };
        }
    })
}

/// Displacement `0.1·bump(θ₀ + θ_k)` on every base axis.
pub fn exp_sin_field(shape: &TorusShape<f64>, k: usize, n: usize, interp: Interp) -> CoreResult<GridMap<f64>> {
    GridMap::field_from_fn(shape, k, vec![n; shape.dim()], interp, |x, v| {
        v.fill(0.1 * bump(angle(shape, x, 0) + angle(shape, x, k)))
    })
}

pub fn chart_roundtrip(p: &TubularProjection<f64>, phi: &GridMap<f64>) -> CoreResult<f64> {
    let c = chart_decompose(p, phi)?;
    sup_distance(&chart_assemble_with(p, &c.phi_s, &c.psi, f64::INFINITY)?, phi)
}

/// `sup d_B(π(f(x)), π₀(x))` over the off-node points of the verification
/// grid.
fn off_node_factorization(pi: &GridMap<f64>, f: &GridMap<f64>) -> f64 {
    let shape = f.src();
    let (m, k) = (shape.dim(), pi.dst_dim());
    let fine = verification_grid(f.grid());
    let total: usize = fine.iter().product();
    let (mut y, mut b) = (vec![0.0; m], vec![0.0; k]);
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
        f.eval_raw(&x, &mut y);
        pi.eval_raw(&y, &mut b);
        let d: Vec<f64> = (0..k).map(|a| min_rep(b[a] - x[a], shape.period(a))).collect();
        worst = worst.max(norm(&d));
    }
    worst
}

/// One row of the table at `n` nodes per axis. The transport column is the
/// coset residual between the transported map and the factorization.
fn row(scene: &Scene, n: usize, interp: Interp, with_transport: bool) -> CoreResult<ConvergenceRow> {
    let (shape, k) = (&scene.shape, scene.k);
    let chart = chart_roundtrip(&scene.projection, &exp_sin_diffeo(shape, k, n, interp)?)?;
    let field = exp_sin_field(shape, k, n, interp)?;
    let pi0 = coordinate_projection(shape, k, vec![n; shape.dim()], interp)?;
    let pi = pi0.with_displacement(field.displacement().to_vec())?;
    let f = factorize(&scene.projection, &pi)?.f;
    let factorization = off_node_factorization(&pi, &f);
    let transport_residual = if with_transport {
        let path = FibrationPath::analytic(pi0.clone(), vec![(TimeBasis::Monomial(1), field)])?;
        let moved = transport(&path, 256, scene.margin_min())?;
        coset_equal(moved.final_map(), &f, &pi0)?.residual
    } else {
        0.0
    };
    Ok(ConvergenceRow { grid: n, chart_roundtrip: chart, factorization, transport: transport_residual })
}

pub fn table(scene: &Scene, grids: &[usize], interp: Interp, with_transport: bool) -> CoreResult<ConvergenceTable> {
    let rows = grids.iter().map(|&n| row(scene, n, interp, with_transport)).collect::<CoreResult<_>>()?;
    Ok(ConvergenceTable { scenario: "exp_sin".into(), interp: interp.as_str().into(), rows })
}

/// Number of refinements that increase the error above roundoff.
pub fn monotone_violations(errors: &[f64]) -> usize {
    errors.windows(2).filter(|w| w[1] > ROUNDOFF && !(w[1] < w[0])).count()
}

/// Least-squares slope of `log e` against `log n`.
pub fn log_slope(grids: &[usize], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = grids.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Largest chart round-trip error of the band-limited scenario over `grids`,
/// with the flat fiber metric.
pub fn band_limited_floor(scene: &Scene, grids: &[usize], interp: Interp) -> CoreResult<f64> {
    grids.iter().try_fold(0.0f64, |acc, &n| {
        Ok(acc.max(chart_roundtrip(&scene.flat, &band_limited_diffeo(&scene.shape, scene.k, n, interp)?)?))
    })
}

/// The full study for the `convergence` command.
pub fn study(scene: &Scene) -> (Option<ConvergenceTable>, Vec<Check>) {
    let grids = scene.config.convergence_grids.clone();
    let interp = scene.interp;
    let mono = scene.tol("convergence.monotone");
    let t = match table(scene, &grids, interp, true) {
        Ok(t) => t,
        Err(e) => {
            return (None, vec![Check::failed("convergence.table", mono, crate::report::Relation::AtMost, e)]);
        }
    };
    let column = |f: fn(&ConvergenceRow) -> f64| t.rows.iter().map(f).collect::<Vec<f64>>();
    let chart = column(|r| r.chart_roundtrip);
    let mut checks = vec![
        Check::at_most("convergence.chart_monotone", monotone_violations(&chart) as f64, mono),
        Check::at_most(
            "convergence.factorization_monotone",
            monotone_violations(&column(|r| r.factorization)) as f64,
            mono,
        ),
        Check::at_most("convergence.transport_monotone", monotone_violations(&column(|r| r.transport)) as f64, mono),
    ];
    if interp == Interp::Cubic {
        let slope = log_slope(&grids, &chart);
        checks.push(Check::at_most(
            "convergence.cubic_slope",
            (-slope - 4.0).abs(),
            scene.tol("convergence.cubic_slope"),
        ));
    }
    // trigonometric interpolation reproduces band-limited data exactly
    if interp == Interp::Trig {
        let mut floor = Sup::max("convergence.band_limited_floor");
        floor.record(band_limited_floor(scene, &grids, interp));
        checks.push(floor.check(scene.tol("convergence.floor")));
    }
    (Some(t), checks)
}
