use fibspace::geom::wrap;
use fibspace::orbit::{coset_equal, factorize};
use fibspace::scalar::{min_rep, norm};
use fibspace::transport::{
    horizontal_velocity, loop_submersion_check, transport_path, FibrationPath, TimeBasis, TransportOptions,
    TransportResult,
};
use fibspace::{GridMap, Result as CoreResult};
use rand::Rng;

use super::orbit::{shear_fibration, shear_field};
use crate::report::{Check, Sup};
use crate::scene::Scene;

/// Amplitude of the path used for the order measurement; large enough that
/// the drift at step 1/256 stays well above roundoff.
pub const ORDER_AMPLITUDE: f64 = 1.5;
const LOOP_SAMPLES: usize = 32;
const POINTS: usize = 100;

pub fn linear_path(scene: &Scene, c: f64) -> CoreResult<FibrationPath<f64>> {
    let pi0 = fibspace::geom::coordinate_projection(&scene.shape, scene.k, scene.grid(), scene.interp)?;
    FibrationPath::analytic(pi0, vec![(TimeBasis::Monomial(1), shear_field(scene, c)?)])
}

/// Drift-unchecked transport, so the measured drift is reported rather than
/// thrown.
pub fn transport(path: &FibrationPath<f64>, steps: usize, margin_min: f64) -> CoreResult<TransportResult<f64>> {
    let opts = TransportOptions { steps, margin_min, drift_tol: f64::INFINITY, ..TransportOptions::default() };
    transport_path(path, &opts)
}

pub fn run(scene: &Scene) -> Vec<Check> {
    let mut rng = scene.rng(7);
    let margin_min = scene.margin_min();

    let mut margin = Sup::min("transport.margin");
    margin.record(shear_field(scene, 0.1).and_then(|v| {
        let pi0 = fibspace::geom::coordinate_projection(&scene.shape, scene.k, scene.grid(), scene.interp)?;
        let lp = FibrationPath::analytic(pi0, vec![(TimeBasis::Sin(1), v)])?;
        Ok(loop_submersion_check(&lp, LOOP_SAMPLES)?.margin)
    }));

    let mut drift = Sup::max("transport.drift");
    let mut fibers = Sup::max("transport.fibers");
    let mut coset = Sup::max("transport.coset");
    match linear_path(scene, 0.2).and_then(|path| Ok((transport(&path, 256, margin_min)?, path))) {
        Ok((result, path)) => {
            drift.push(result.max_drift());
            fibers.record(fiber_landing(scene, &path, result.final_map()));
            coset.record(shear_fibration(scene, 0.2).and_then(|pi1| {
                let f = factorize(&scene.projection, &pi1)?.f;
                Ok(coset_equal(result.final_map(), &f, scene.projection.pi0())?.residual)
            }));
        }
        Err(e) => drift.fail(e),
    }

    let mut order = Sup::max("transport.order");
    order.record(order_ratio(scene).map(|r| (r / 16.0 - 1.0).abs()));

    let mut lin = Sup::max("transport.linearity");
    lin.record(linearity(scene, &mut rng));

    vec![
        margin.check(scene.tol("transport.margin")),
        drift.check(scene.tol("transport.drift")),
        fibers.check(scene.tol("transport.fibers")),
        coset.check(scene.tol("transport.coset")),
        order.check(scene.tol("transport.order")),
        lin.check(scene.tol("transport.linearity")),
    ]
}

/// Drift ratio between steps 1/128 and 1/256 on the large-amplitude path.
pub fn order_ratio(scene: &Scene) -> CoreResult<f64> {
    let path = linear_path(scene, ORDER_AMPLITUDE)?;
    let coarse = transport(&path, 128, scene.margin_min())?.max_drift();
    let fine = transport(&path, 256, scene.margin_min())?.max_drift();
    Ok(coarse / fine)
}

/// `sup d_B(π₁(φ₁(x)), π₀(x))` over the storage nodes, i.e. how far the
/// image of each sampled fiber of `π₀` lands from the fiber of `π₁` over the
/// same base point.
fn fiber_landing(scene: &Scene, path: &FibrationPath<f64>, phi1: &GridMap<f64>) -> CoreResult<f64> {
    let pi1 = path.at(1.0)?;
    let (m, k) = (scene.m(), scene.k);
    let mut b = vec![0.0; k];
    let mut worst = 0.0f64;
    for node in 0..phi1.node_count() {
        let x = phi1.node(node);
        let d = phi1.node_displacement(node);
        let y: Vec<f64> = (0..m).map(|a| x[a] + d[a]).collect();
        pi1.eval_raw(&y, &mut b);
        let off: Vec<f64> = (0..k).map(|a| min_rep(b[a] - x[a], scene.shape.period(a))).collect();
        worst = worst.max(norm(&off));
    }
    Ok(worst)
}

/// Relative gap between the lift for a path run at double speed and twice
/// the lift for the original path, at matching parameters.
fn linearity<R: Rng>(scene: &Scene, rng: &mut R) -> CoreResult<f64> {
    let slow = linear_path(scene, 0.2)?;
    let fast = linear_path(scene, 0.4)?;
    let mut worst = 0.0f64;
    for _ in 0..POINTS {
        let x: Vec<f64> = scene.shape.periods().iter().map(|&p| rng.gen_range(0.0..p)).collect();
        let x = wrap(&x, &scene.shape)?;
        let w = horizontal_velocity(&slow, 0.5, &x, scene.margin_min())?;
        let w2 = horizontal_velocity(&fast, 0.25, &x, scene.margin_min())?;
        let diff: Vec<f64> = w2.iter().zip(&w).map(|(a, b)| a - 2.0 * b).collect();
        let scale = 2.0 * norm(&w);
        if scale > 0.0 {
            worst = worst.max(norm(&diff) / scale);
        }
    }
    Ok(worst)
}
