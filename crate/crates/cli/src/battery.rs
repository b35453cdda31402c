//! The built-in benchmark battery behind `verify-all`.

use gapcert::geometry::DomainSpec;
use gapcert::operator::Potential;
use gapcert::par::Execution;
use serde::{Deserialize, Serialize};

use crate::config::{CheckId, NeumannDrift, RunConfig};
use crate::run::{run, Outcome, RunReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatteryReport {
    pub seed: u64,
    pub scenarios: Vec<RunReport>,
    pub outcome: Outcome,
}

impl BatteryReport {
    pub fn scenario(&self, name: &str) -> Option<&RunReport> {
        self.scenarios.iter().find(|r| r.config.name == name)
    }
}

fn config(name: &str, domain: DomainSpec, h: &[f64], checks: &[CheckId], seed: u64) -> RunConfig {
    RunConfig {
        seed,
        ..RunConfig::new(name, domain, h, checks)
    }
}

/// The scenarios, in run order.
pub fn scenarios(seed: u64) -> Vec<RunConfig> {
    use CheckId::*;
    let interval = DomainSpec::interval(-0.5, 0.5);
    let square = DomainSpec::unit_square();
    let mut out = Vec::new();

    let mut c = config(
        "interval",
        interval.clone(),
        &[1.0 / 256.0, 1.0 / 512.0],
        &[
            Eigen,
            Gap,
            DirichletBounds,
            Isodiametric,
            Modulus,
            Logconcavity,
            HeatSlack,
            Decay,
            ModelResiduals,
            RatioDiagnostic,
        ],
        seed,
    );
    c.times = vec![0.05, 0.1, 0.5];
    out.push(c);

    out.push(config(
        "interval-neumann",
        interval.clone(),
        &[1.0 / 256.0, 1.0 / 512.0],
        &[Neumann],
        seed,
    ));
    let mut c = config(
        "interval-neumann-model-drift",
        interval,
        &[1.0 / 512.0],
        &[Neumann],
        seed,
    );
    c.neumann.drift = NeumannDrift::Model;
    out.push(c);

    out.push(config(
        "square-gap",
        square.clone(),
        &[1.0 / 64.0, 1.0 / 128.0],
        &[Eigen, Gap, DirichletBounds, Isodiametric],
        seed,
    ));
    out.push(config(
        "square-modulus",
        square.clone(),
        &[1.0 / 64.0],
        &[Modulus, Logconcavity],
        seed,
    ));
    let mut c = config(
        "square-convex-potential",
        square.clone(),
        &[1.0 / 64.0],
        &[Modulus, Logconcavity, DirichletBounds, Isodiametric],
        seed,
    );
    c.potential = Potential::radial(4.0, [0.5, 0.5]);
    out.push(c);
    out.push(config(
        "square-heat",
        square.clone(),
        &[1.0 / 32.0],
        &[HeatSlack, Decay],
        seed,
    ));
    out.push(config(
        "square-neumann",
        square,
        &[1.0 / 32.0],
        &[Neumann],
        seed,
    ));
    let mut c = config(
        "disk",
        DomainSpec::disk([0.0, 0.0], 1.0),
        &[1.0 / 64.0],
        &[Eigen, Gap, Isodiametric, Logconcavity],
        seed,
    );
    // The first-order curved-boundary closure pollutes a layer of width
    // O(h^(1/2)) near the rim; the Hessian there diverges under refinement.
    c.delta = 1e-1;
    out.push(c);
    out.push(config(
        "rectangle-ratio",
        DomainSpec::rectangle([0.0, 0.0], [2.0, 1.0]),
        &[1.0 / 16.0],
        &[Modulus, RatioDiagnostic],
        seed,
    ));
    out
}

pub fn verify_all(seed: u64, exec: Execution) -> BatteryReport {
    let scenarios: Vec<RunReport> = scenarios(seed)
        .iter()
        .map(|cfg| {
            log::info!("scenario {}", cfg.name);
            run(cfg, exec)
        })
        .collect();
    let outcome = scenarios
        .iter()
        .fold(Outcome::Pass, |acc, r| acc.worst(r.outcome));
    BatteryReport {
        seed,
        scenarios,
        outcome,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenarios_are_valid_and_uniquely_named() {
        let s = scenarios(7);
        for c in &s {
            c.validate().unwrap();
        }
        let mut names: Vec<&str> = s.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), s.len());
    }
}
