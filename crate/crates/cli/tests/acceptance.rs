//! One line per acceptance criterion on the default scene. Runs without the
//! libtest harness so the lines are always printed.

use std::time::Instant;

use fibspace_cli::suites::Suite;
use fibspace_cli::{Check, RunConfig, Scene};

/// A criterion is a set of suites, each optionally restricted to some of
/// its checks (all when the list is empty).
struct Criterion {
    id: usize,
    title: &'static str,
    parts: &'static [(Suite, &'static [&'static str])],
}

const CRITERIA: [Criterion; 7] = [
    Criterion { id: 1, title: "principal-bundle chart", parts: &[(Suite::Chart, &[])] },
    Criterion { id: 2, title: "tubular projection", parts: &[(Suite::Tubular, &[])] },
    Criterion { id: 3, title: "orbit map and factorization", parts: &[(Suite::Orbit, &[])] },
    Criterion { id: 4, title: "section exchange", parts: &[(Suite::Exchange, &[])] },
    Criterion { id: 5, title: "base-action trivialization and splitting", parts: &[(Suite::Base, &[])] },
    Criterion { id: 6, title: "horizontal transport", parts: &[(Suite::Transport, &[])] },
    Criterion {
        id: 7,
        title: "convergence, determinism, format",
        parts: &[(Suite::Crosscut, &[]), (Suite::Geom, &["geom.spectral_rate"])],
    },
];

fn describe(c: &Check) -> String {
    let residual = c.residual.map_or("-".to_string(), |r| format!("{r:.3e}"));
    let error = c.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default();
    format!("{} {residual} {} {:e}{error}", c.name, c.relation.symbol(), c.threshold)
}

fn main() {
    let scene = Scene::new(RunConfig::default().resolve().unwrap()).unwrap();
    let mut failed = Vec::new();
    for criterion in &CRITERIA {
        let start = Instant::now();
        let checks: Vec<Check> = criterion
            .parts
            .iter()
            .flat_map(|(suite, only)| {
                suite.run(&scene).into_iter().filter(|c| only.is_empty() || only.contains(&c.name.as_str()))
            })
            .collect();
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        println!(
            "criterion {} [{}]: {} ({:.1} s)",
            criterion.id,
            criterion.title,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        for c in &checks {
            println!("    {} {}", if c.pass { "ok  " } else { "FAIL" }, describe(c));
        }
        if !pass {
            failed.push(criterion.id);
        }
    }
    if !failed.is_empty() {
        eprintln!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
