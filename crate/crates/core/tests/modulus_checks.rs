use std::f64::consts::PI;

use gapcert::eigen::{smallest_eigenpairs, SpectralResult};
use gapcert::geometry::{admissible_pairs, build_grid, sample_pairs, DomainSpec, GridDomain};
use gapcert::model1d::Model1D;
use gapcert::modulus::{
    default_tolerance, expansion_slack, expansion_slacks, ground_state_field, logconcavity_min_eig,
    ratio_continuity, ExpansionBound, SlackOptions,
};
use gapcert::operator::{assemble_dirichlet, Potential};
use gapcert::par::Execution;
use gapcert::report::Verdict;

fn solve(spec: &DomainSpec, h: f64, q: &Potential, k: usize) -> (GridDomain, SpectralResult) {
    let g = build_grid(spec, h).unwrap();
    let s = smallest_eigenpairs(&assemble_dirichlet(&g, q).unwrap(), k).unwrap();
    (g, s)
}

/// Pairs `(x, -x)` among the admissible nodes of a symmetric interval grid.
fn symmetric_pairs(g: &GridDomain, nodes: &[usize]) -> Vec<(usize, usize)> {
    let n = g.len();
    nodes
        .iter()
        .filter(|&&i| i < n - 1 - i)
        .map(|&i| (i, n - 1 - i))
        .filter(|p| nodes.contains(&p.1))
        .collect()
}

#[test]
fn interval_field_matches_tangent() {
    let (g, s) = solve(
        &DomainSpec::interval(-0.5, 0.5),
        1.0 / 512.0,
        &Potential::zero(),
        2,
    );
    let x = ground_state_field(&s, &g, 1e-2).unwrap();
    let mut worst: f64 = 0.0;
    for (&i, v) in x.nodes.iter().zip(&x.values) {
        let p = g.node(i)[0];
        let exact = PI * (PI * p).tan();
        if exact.abs() > 1e-9 {
            worst = worst.max((v[0] - exact).abs() / exact.abs());
        }
    }
    assert!(worst <= 5e-3, "{worst}");
}

#[test]
fn interval_equality_on_symmetric_pairs() {
    let m = Model1D::new(1.0).unwrap();
    let coarse_h = 1.0 / 256.0;
    let mut maxima = Vec::new();
    let mut shared: Option<Vec<f64>> = None;
    for h in [coarse_h, coarse_h / 2.0] {
        let (g, s) = solve(&DomainSpec::interval(-0.5, 0.5), h, &Potential::zero(), 2);
        let x = ground_state_field(&s, &g, 1e-2).unwrap();
        let pairs = symmetric_pairs(&g, &x.nodes);
        let r = expansion_slack(
            &x,
            &g,
            &pairs,
            ExpansionBound::Model(m),
            &SlackOptions::default(),
        )
        .unwrap();
        assert!(r.max_abs_slack() <= 5e-3 * PI * PI);
        // Convergence is measured on the pairs both grids share.
        let xs = shared
            .get_or_insert_with(|| pairs.iter().map(|p| g.node(p.1)[0]).collect())
            .clone();
        let common: Vec<(usize, usize)> = pairs
            .into_iter()
            .filter(|p| xs.iter().any(|c| (c - g.node(p.1)[0]).abs() < 1e-12))
            .collect();
        assert_eq!(common.len(), xs.len());
        let r = expansion_slack(
            &x,
            &g,
            &common,
            ExpansionBound::Model(m),
            &SlackOptions::default(),
        )
        .unwrap();
        maxima.push(r.max_abs_slack());
        // Every admissible pair respects the inequality.
        let all = sample_pairs(&x.nodes, 200_000, 1);
        let r = expansion_slack(
            &x,
            &g,
            &all,
            ExpansionBound::Model(m),
            &SlackOptions::default(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
    }
    let ratio = maxima[0] / maxima[1];
    assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn square_slack_against_separable_oracle() {
    let (g, s) = solve(
        &DomainSpec::unit_square(),
        1.0 / 64.0,
        &Potential::zero(),
        1,
    );
    let d = 2f64.sqrt();
    let m = Model1D::new(d).unwrap();
    let x = ground_state_field(&s, &g, 1e-2).unwrap();
    let pairs = admissible_pairs(&g, s.ground_state(), 1e-2, 100_000, 7).unwrap();
    let (r, grid_slacks) = expansion_slacks(
        &x,
        &g,
        &pairs,
        ExpansionBound::Model(m),
        &SlackOptions::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
    assert!(r.min_slack >= -default_tolerance(g.h, d));
    assert!(r.quantiles.q50 > 0.0);
    // Analytic field of sin(πx)sin(πy).
    let exact = |p: [f64; 2]| [-PI / (PI * p[0]).tan(), -PI / (PI * p[1]).tan()];
    let mut worst: f64 = 0.0;
    let mut k = 0;
    for &(i, j) in &pairs {
        let (a, b) = (g.node(i), g.node(j));
        let r = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if r >= 0.999 * d {
            continue;
        }
        let (xa, xb) = (exact(a), exact(b));
        let oracle = ((xb[0] - xa[0]) * (b[0] - a[0]) + (xb[1] - xa[1]) * (b[1] - a[1])) / r
            - m.expansion_bound(r);
        worst = worst.max((oracle - grid_slacks[k]).abs());
        k += 1;
    }
    assert!(worst < 0.5, "{worst}");
}

#[test]
fn coincidence_limit() {
    let (g, s) = solve(
        &DomainSpec::unit_square(),
        1.0 / 64.0,
        &Potential::zero(),
        1,
    );
    let m = Model1D::new(2f64.sqrt()).unwrap();
    let x = ground_state_field(&s, &g, 1e-1).unwrap();
    let i = g.nearest_node([0.4, 0.5]);
    let j = g.neighbor(i, 1, 1).unwrap();
    let r = expansion_slack(
        &x,
        &g,
        &[(i, j)],
        ExpansionBound::Model(m),
        &SlackOptions::default(),
    )
    .unwrap();
    assert!(r.min_slack.abs() < 10.0 * g.h);
}

#[test]
fn logconcavity_oracles() {
    let (g, s) = solve(
        &DomainSpec::interval(-0.5, 0.5),
        1.0 / 512.0,
        &Potential::zero(),
        1,
    );
    let lc = logconcavity_min_eig(&s, &g, 1e-2).unwrap();
    assert!(lc.min_eigenvalue >= PI * PI - 0.05);
    let (g, s) = solve(
        &DomainSpec::unit_square(),
        1.0 / 64.0,
        &Potential::zero(),
        1,
    );
    let lc = logconcavity_min_eig(&s, &g, 1e-2).unwrap();
    assert!(lc.min_eigenvalue >= PI * PI - default_tolerance(g.h, 2f64.sqrt()));
}

#[test]
fn hessian_check_implies_monotone_field() {
    let q = Potential::radial(4.0, [0.5, 0.5]);
    let (g, s) = solve(&DomainSpec::unit_square(), 1.0 / 32.0, &q, 1);
    let lc = logconcavity_min_eig(&s, &g, 1e-2).unwrap();
    let tol = default_tolerance(g.h, g.diameter);
    assert!(lc.min_eigenvalue >= -tol);
    let x = ground_state_field(&s, &g, 1e-2).unwrap();
    let pairs = sample_pairs(&x.nodes, 20_000, 3);
    let r = expansion_slack(
        &x,
        &g,
        &pairs,
        ExpansionBound::Zero,
        &SlackOptions::default(),
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::Pass);
}

#[test]
fn rectangle_ratio_argmax_is_horizontal() {
    let spec = DomainSpec::rectangle([0.0, 0.0], [2.0, 1.0]);
    let (g, s) = solve(&spec, 1.0 / 16.0, &Potential::zero(), 3);
    let m = Model1D::new(spec.diameter()).unwrap();
    let d = ratio_continuity(&s, &g, &m, 1e-2, usize::MAX, 0).unwrap();
    assert!(d.c_star.is_finite());
    let (a, b) = (d.argmax.x, d.argmax.y);
    let angle = (b[1] - a[1]).abs().atan2((b[0] - a[0]).abs()).to_degrees();
    assert!(angle <= 15.0, "{angle}");
}

#[test]
fn interval_ratio_diagnostic_is_finite() {
    let (g, s) = solve(
        &DomainSpec::interval(-0.5, 0.5),
        1.0 / 128.0,
        &Potential::zero(),
        3,
    );
    let d = ratio_continuity(&s, &g, &Model1D::new(1.0).unwrap(), 1e-2, usize::MAX, 0).unwrap();
    assert!(d.c_star.is_finite() && d.c_star > 0.0);
}

#[test]
fn thread_count_does_not_change_the_report() {
    let (g, s) = solve(
        &DomainSpec::unit_square(),
        1.0 / 32.0,
        &Potential::zero(),
        1,
    );
    let m = Model1D::new(2f64.sqrt()).unwrap();
    let x = ground_state_field(&s, &g, 1e-2).unwrap();
    let pairs = sample_pairs(&x.nodes, 50_000, 9);
    let run = |execution| {
        let opts = SlackOptions {
            tolerance: None,
            execution,
        };
        expansion_slack(&x, &g, &pairs, ExpansionBound::Model(m), &opts).unwrap()
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}
