use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gapcert::eigen::{full_decomposition, smallest_eigenpairs};
use gapcert::geometry::{admissible_pairs, build_grid, DomainSpec};
use gapcert::heat::kernel_spectral;
use gapcert::model1d::Model1D;
use gapcert::modulus::{expansion_slack, ground_state_field, ExpansionBound, SlackOptions};
use gapcert::operator::{assemble_dirichlet, Potential};
use gapcert::par::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn pairwise_slack(c: &mut Criterion) {
    let g = build_grid(&DomainSpec::unit_square(), 1.0 / 64.0).unwrap();
    let s = smallest_eigenpairs(&assemble_dirichlet(&g, &Potential::zero()).unwrap(), 1).unwrap();
    let x = ground_state_field(&s, &g, 1e-2).unwrap();
    let pairs = admissible_pairs(&g, s.ground_state(), 1e-2, 100_000, 7).unwrap();
    let bound = ExpansionBound::Model(Model1D::new(g.diameter).unwrap());
    let mut group = c.benchmark_group("expansion-slack-100k-pairs");
    for (name, execution) in MODES {
        let opts = SlackOptions {
            tolerance: None,
            execution,
        };
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| expansion_slack(&x, &g, &pairs, bound, &opts).unwrap())
        });
    }
    group.finish();
}

fn heat_snapshots(c: &mut Criterion) {
    let g = build_grid(&DomainSpec::unit_square(), 1.0 / 32.0).unwrap();
    let s = full_decomposition(&assemble_dirichlet(&g, &Potential::zero()).unwrap()).unwrap();
    let z = g.nearest_node([0.3, 0.6]);
    let times: Vec<f64> = (1..=16).map(|k| 0.04 * k as f64).collect();
    let mut group = c.benchmark_group("heat-16-snapshots");
    for (name, execution) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| kernel_spectral(&s, z, &times, execution).unwrap())
        });
    }
    group.finish();
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = pairwise_slack, heat_snapshots
}
criterion_main!(benches);
