//! Subcommands. Each returns a [`Report`]; file-producing commands write
//! `.gmap` artifacts into the output directory and list their file names.

use std::path::{Path, PathBuf};

use fibspace::baseaction::{
    assemble_base, fiber_spectral_energy, reconstruction_ulps, split_section, trivialize, vanishing_on_section,
    GlobalSection,
};
use fibspace::chart::{chart_assemble_with, chart_decompose};
use fibspace::geom::{read_gmap, sup_distance, write_gmap, Storage};
use fibspace::orbit::{connect_chain, factorize};
use fibspace::transport::{transport_path, FibrationPath, TimeBasis, TransportOptions};
use fibspace::tubular::{FiberMetric, TubularProjection};
use fibspace::{GridMap, TorusShape};
use serde::{Deserialize, Serialize};

use crate::config::{MetricKind, RunConfig};
use crate::convergence;
use crate::error::CliError;
use crate::report::{Check, Report};
use crate::scene::{conformal_factor, Scene};
use crate::suites::{run_all, Suite};

pub fn verify(command: Vec<String>, config: RunConfig, suites: &[Suite]) -> Result<Report, CliError> {
    let scene = Scene::new(config)?;
    let checks = run_all(&scene, suites);
    Ok(Report::new(command, scene.config, checks))
}

pub fn convergence(command: Vec<String>, config: RunConfig) -> Result<Report, CliError> {
    let scene = Scene::new(config)?;
    let (table, checks) = convergence::study(&scene);
    let mut report = Report::new(command, scene.config, checks);
    report.tables.extend(table);
    Ok(report)
}

fn load(path: &Path) -> Result<GridMap<f64>, CliError> {
    Ok(read_gmap(path)?)
}

/// Tube projection for maps on `shape`, with the configured radius and
/// fiber metric.
fn projection(config: &RunConfig, shape: &TorusShape<f64>) -> Result<TubularProjection<f64>, CliError> {
    let metric = match config.metric.kind {
        MetricKind::Flat => FiberMetric::Flat,
        MetricKind::Conformal => FiberMetric::Conformal(conformal_factor(
            shape,
            config.k,
            config.metric.amplitude,
            config.grid.min(32),
            config.interp.into(),
        )?),
    };
    Ok(TubularProjection::new(shape, config.k, config.delta, metric)?)
}

struct Artifacts {
    dir: PathBuf,
    names: Vec<String>,
}

impl Artifacts {
    fn new(config: &RunConfig) -> Result<Self, CliError> {
        let dir = config.out.clone().unwrap_or_else(|| PathBuf::from("."));
        std::fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        Ok(Self { dir, names: Vec::new() })
    }

    fn write(&mut self, name: &str, map: &GridMap<f64>) -> Result<(), CliError> {
        write_gmap(&self.dir.join(name), map, Storage::Inline)?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
        let path = self.dir.join(name);
        std::fs::write(&path, text).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
        self.names.push(name.to_string());
        Ok(())
    }

    fn finish(self, mut report: Report) -> Report {
        report.artifacts = self.names;
        report
    }
}

pub fn decompose(command: Vec<String>, config: RunConfig, input: &Path) -> Result<Report, CliError> {
    let phi = load(input)?;
    let p = projection(&config, phi.src())?;
    let c = chart_decompose(&p, &phi)?;
    let back = chart_assemble_with(&p, &c.phi_s, &c.psi, f64::INFINITY)?;
    let checks = vec![
        Check::at_most("chart.slice", c.slice.residual, config.tol("chart.slice")),
        Check::at_most("chart.verticality", c.verticality.residual, config.tol("chart.verticality")),
        Check::at_most("chart.roundtrip", sup_distance(&back, &phi)?, config.tol("chart.roundtrip")),
    ];
    let mut out = Artifacts::new(&config)?;
    out.write("phi_s.gmap", &c.phi_s)?;
    out.write("psi.gmap", &c.psi)?;
    Ok(out.finish(Report::new(command, config, checks)))
}

pub fn factorize_cmd(command: Vec<String>, config: RunConfig, input: &Path) -> Result<Report, CliError> {
    let pi = load(input)?;
    let p = projection(&config, pi.src())?;
    let r = factorize(&p, &pi)?;
    let checks = vec![
        Check::at_most("orbit.factorize", r.residual, config.tol("orbit.factorize")),
        Check::above("margin_min", r.witness.margin, config.tol("margin_min")),
    ];
    let mut out = Artifacts::new(&config)?;
    out.write("f.gmap", &r.f)?;
    out.write("section.gmap", &r.section)?;
    Ok(out.finish(Report::new(command, config, checks)))
}

/// A path of fibrations described by `.gmap` files, relative to the
/// manifest's directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PathManifest {
    Sampled { times: Vec<f64>, maps: Vec<PathBuf> },
    Analytic { base: PathBuf, terms: Vec<TermSpec> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub basis: TimeBasis,
    pub map: PathBuf,
}

pub fn load_path(manifest: &Path) -> Result<FibrationPath<f64>, CliError> {
    let text =
        std::fs::read_to_string(manifest).map_err(|e| CliError::io(format!("reading {}", manifest.display()), e))?;
    let spec: PathManifest = if manifest.extension().is_some_and(|e| e == "toml") {
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?
    } else {
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", manifest.display())))?
    };
    let dir = manifest.parent().unwrap_or(Path::new("."));
    Ok(match spec {
        PathManifest::Sampled { times, maps } => {
            let maps = maps.iter().map(|m| load(&dir.join(m))).collect::<Result<_, _>>()?;
            FibrationPath::sampled(times, maps)?
        }
        PathManifest::Analytic { base, terms } => {
            let base = load(&dir.join(base))?;
            let terms =
                terms.iter().map(|t| Ok((t.basis, load(&dir.join(&t.map))?))).collect::<Result<_, CliError>>()?;
            FibrationPath::analytic(base, terms)?
        }
    })
}

pub fn connect(command: Vec<String>, config: RunConfig, manifest: &Path) -> Result<Report, CliError> {
    let path = load_path(manifest)?;
    let p = projection(&config, path.at(0.0)?.src())?;
    let r = connect_chain(&p, &path)?;
    let checks = vec![Check::at_most("orbit.chain", r.residual, config.tol("orbit.chain"))];
    let mut out = Artifacts::new(&config)?;
    out.write("phi.gmap", &r.phi)?;
    out.write_json("breakpoints.json", &r.breakpoints)?;
    Ok(out.finish(Report::new(command, config, checks)))
}

fn global_section(config: &RunConfig, map: &GridMap<f64>) -> Result<GlobalSection<f64>, CliError> {
    let k = config.k;
    let fiber =
        if config.section_fiber.is_empty() { vec![0.0; map.src().dim() - k] } else { config.section_fiber.clone() };
    Ok(GlobalSection::new(map.src(), k, &fiber, map.grid()[..k].to_vec(), map.interp())?)
}

pub fn trivialize_cmd(command: Vec<String>, config: RunConfig, input: &Path) -> Result<Report, CliError> {
    let pi = load(input)?;
    let sigma = global_section(&config, &pi)?;
    let t = trivialize(&pi, &sigma)?;
    let back = assemble_base(&t.phi_b, &t.pi_s, &sigma)?;
    let checks = vec![
        Check::at_most("base.roundtrip", sup_distance(&back, &pi)?, config.tol("base.roundtrip")),
        Check::above("margin_min", t.margin, config.tol("margin_min")),
    ];
    let mut out = Artifacts::new(&config)?;
    out.write("phi_b.gmap", &t.phi_b)?;
    out.write("pi_s.gmap", &t.pi_s)?;
    Ok(out.finish(Report::new(command, config, checks)))
}

pub fn split(command: Vec<String>, config: RunConfig, input: &Path) -> Result<Report, CliError> {
    let s = load(input)?;
    let sigma = global_section(&config, &s)?;
    let parts = split_section(&s, &sigma)?;
    let checks = vec![
        Check::at_most("base.reconstruction", reconstruction_ulps(&s, &parts), config.tol("base.reconstruction")),
        Check::at_most("base.vanishing", vanishing_on_section(&parts.vanishing, &sigma)?, config.tol("base.vanishing")),
        Check::at_most(
            "base.spectral_energy",
            fiber_spectral_energy(&parts.lifted, config.k),
            config.tol("base.spectral_energy"),
        ),
    ];
    let mut out = Artifacts::new(&config)?;
    out.write("vanishing.gmap", &parts.vanishing)?;
    out.write("lifted.gmap", &parts.lifted)?;
    Ok(out.finish(Report::new(command, config, checks)))
}

#[derive(Serialize)]
struct DriftEntry {
    t: f64,
    drift: f64,
    file: String,
}

pub fn transport(command: Vec<String>, config: RunConfig, manifest: &Path) -> Result<Report, CliError> {
    let path = load_path(manifest)?;
    let opts = TransportOptions {
        margin_min: config.tol("margin_min"),
        drift_tol: f64::INFINITY,
        ..TransportOptions::default()
    };
    let r = transport_path(&path, &opts)?;
    let mut out = Artifacts::new(&config)?;
    let mut log = Vec::new();
    for (j, c) in r.checkpoints.iter().enumerate() {
        let file = format!("checkpoint_{j}.gmap");
        out.write(&file, &c.phi)?;
        log.push(DriftEntry { t: c.t, drift: c.drift, file });
    }
    out.write_json("drift.json", &log)?;
    let checks = vec![
        Check::at_most("transport.drift", r.max_drift(), config.tol("transport.drift")),
        Check::above("margin_min", r.certificate.margin, config.tol("margin_min")),
    ];
    Ok(out.finish(Report::new(command, config, checks)))
}
