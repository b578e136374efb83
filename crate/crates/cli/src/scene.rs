//! Geometric objects shared by the suites, built from a resolved config.

use fibspace::tubular::{FiberMetric, TubularProjection};
use fibspace::{GridMap, Interp, TorusShape};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::{MetricKind, RunConfig};
use crate::error::CliError;

pub struct Scene {
    pub config: RunConfig,
    pub shape: TorusShape<f64>,
    pub base: TorusShape<f64>,
    pub k: usize,
    pub interp: Interp,
    /// Tube projection with the configured metric.
    pub projection: TubularProjection<f64>,
    /// Same radius, flat metric.
    pub flat: TubularProjection<f64>,
}

impl Scene {
    pub fn new(config: RunConfig) -> Result<Self, CliError> {
        let shape = TorusShape::new(config.periods.clone())?;
        let k = config.k;
        let base = shape.prefix(k)?;
        let interp: Interp = config.interp.into();
        let flat = TubularProjection::new(&shape, k, config.delta, fibspace::tubular::FiberMetric::Flat)?;
        let projection = match config.metric.kind {
            MetricKind::Flat => flat.clone(),
            MetricKind::Conformal => {
                let lambda = conformal_factor(&shape, k, config.metric.amplitude, config.grid.min(32), interp)?;
                TubularProjection::new(&shape, k, config.delta, FiberMetric::Conformal(lambda))?
            }
        };
        Ok(Self { config, shape, base, k, interp, projection, flat })
    }

    pub fn m(&self) -> usize {
        self.shape.dim()
    }

    pub fn grid(&self) -> Vec<usize> {
        vec![self.config.grid; self.m()]
    }

    pub fn base_grid(&self) -> Vec<usize> {
        vec![self.config.grid; self.k]
    }

    /// Independent deterministic stream per suite.
    pub fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        rng.set_stream(stream);
        rng
    }

    pub fn tol(&self, key: &str) -> f64 {
        self.config.tol(key)
    }

    pub fn margin_min(&self) -> f64 {
        self.tol("margin_min")
    }

    pub fn identity(&self) -> fibspace::Result<GridMap<f64>> {
        GridMap::identity(&self.shape, self.grid(), self.interp)
    }

    pub fn pi0(&self) -> fibspace::Result<GridMap<f64>> {
        fibspace::geom::coordinate_projection(&self.shape, self.k, self.grid(), self.interp)
    }
}

/// `λ = a·sin(θ₀ + θ_f)` on `M`, with `θ` the angle coordinates.
pub fn conformal_factor(
    shape: &TorusShape<f64>,
    k: usize,
    amplitude: f64,
    n: usize,
    interp: Interp,
) -> Result<GridMap<f64>, CliError> {
    let m = shape.dim();
    let p = shape.periods().to_vec();
    Ok(GridMap::field_from_fn(shape, 1, vec![n; m], interp, |x, v| {
        let th = std::f64::consts::TAU * (x[0] / p[0] + x[k] / p[k]);
        v[0] = amplitude * th.sin();
    })?)
}
