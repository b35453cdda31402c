use std::f64::consts::PI;

use gapcert::bounds::{
    dirichlet_lower_bounds, gap_check, isodiametric_bounds, neumann_check, neumann_eigenvalue,
    BoundVerdict, Level, NeumannBound,
};
use gapcert::eigen::smallest_eigenpairs;
use gapcert::geometry::{build_cell_grid, build_grid, DomainSpec};
use gapcert::operator::{assemble_dirichlet, Drift, Potential};
use gapcert::report::Verdict;

const J01: f64 = 2.404825557695773;
const J11: f64 = 3.831705970207512;

/// `(λ₀, λ₁)` levels for each grid spacing.
fn levels(spec: &DomainSpec, hs: &[f64], q: &Potential) -> (Vec<Level>, Vec<Level>) {
    let mut l0 = Vec::new();
    let mut l1 = Vec::new();
    for &h in hs {
        let g = build_grid(spec, h).unwrap();
        let s = smallest_eigenpairs(&assemble_dirichlet(&g, q).unwrap(), 2).unwrap();
        l0.push(Level {
            h,
            value: s.eigenvalues[0],
        });
        l1.push(Level {
            h,
            value: s.eigenvalues[1],
        });
    }
    (l0, l1)
}

fn gaps(l0: &[Level], l1: &[Level]) -> Vec<Level> {
    l0.iter()
        .zip(l1)
        .map(|(a, b)| Level {
            h: a.h,
            value: b.value - a.value,
        })
        .collect()
}

#[test]
fn interval_gap_is_sharp() {
    let spec = DomainSpec::interval(-0.5, 0.5);
    let (l0, l1) = levels(
        &spec,
        &[1.0 / 128.0, 1.0 / 256.0, 1.0 / 512.0],
        &Potential::zero(),
    );
    let g = gaps(&l0, &l1);
    let exact = 3.0 * PI * PI;
    let v = gap_check(&g[1..], 1.0).unwrap();
    assert!((v.corrected / exact - 1.0).abs() <= 1e-6);
    assert_eq!(v.verdict, Verdict::Marginal);
    let order = ((exact - g[1].value) / (exact - g[2].value)).log2();
    assert!((1.9..=2.1).contains(&order), "{order}");
}

#[test]
fn square_and_disk_gaps() {
    let (l0, l1) = levels(
        &DomainSpec::unit_square(),
        &[1.0 / 64.0, 1.0 / 128.0],
        &Potential::zero(),
    );
    let v = gap_check(&gaps(&l0, &l1), 2f64.sqrt()).unwrap();
    assert!((v.corrected / (3.0 * PI * PI) - 1.0).abs() <= 2e-3);
    assert!((v.bound - 1.5 * PI * PI).abs() < 1e-12);
    assert_eq!(v.verdict, Verdict::Pass);
    assert!((v.corrected_slack - 1.5 * PI * PI).abs() < 0.1);

    let (l0, l1) = levels(
        &DomainSpec::disk([0.0, 0.0], 1.0),
        &[1.0 / 64.0],
        &Potential::zero(),
    );
    let v = gap_check(&gaps(&l0, &l1), 2.0).unwrap();
    let exact = J11 * J11 - J01 * J01;
    assert!((v.computed / exact - 1.0).abs() <= 1e-2, "{}", v.computed);
    assert!((v.bound - 0.75 * PI * PI).abs() < 1e-12);
    assert_eq!(v.verdict, Verdict::Pass);
}

#[test]
fn dirichlet_bounds_on_interval_and_square() {
    let spec = DomainSpec::interval(-0.5, 0.5);
    let (l0, l1) = levels(&spec, &[1.0 / 256.0, 1.0 / 512.0], &Potential::zero());
    let v = dirichlet_lower_bounds(&l0, &l1, &spec, &Potential::zero()).unwrap();
    assert_eq!(v[0].verdict, Verdict::Marginal);
    assert!((v[0].bound - PI * PI).abs() < 1e-12);
    assert!(v.iter().all(BoundVerdict::is_finite));

    let spec = DomainSpec::unit_square();
    let (l0, l1) = levels(&spec, &[1.0 / 32.0, 1.0 / 64.0], &Potential::zero());
    let v = dirichlet_lower_bounds(&l0, &l1, &spec, &Potential::zero()).unwrap();
    assert!((v[0].bound - PI * PI).abs() < 1e-12);
    assert!((v[1].bound - 2.5 * PI * PI).abs() < 1e-12);
    assert!((v[0].corrected - 2.0 * PI * PI).abs() < 1e-2);
    assert!((v[1].corrected - 5.0 * PI * PI).abs() < 5e-2);
    assert!(v.iter().all(|b| b.verdict == Verdict::Pass));
}

#[test]
fn constant_shift_leaves_slacks_unchanged() {
    let spec = DomainSpec::unit_square();
    let hs = [1.0 / 16.0, 1.0 / 32.0];
    let run = |c: f64| {
        let q = Potential::constant(c);
        let (l0, l1) = levels(&spec, &hs, &q);
        dirichlet_lower_bounds(&l0, &l1, &spec, &q).unwrap()
    };
    for (a, b) in run(0.0).iter().zip(&run(7.5)) {
        assert!((b.computed - a.computed - 7.5).abs() <= 1e-10 * b.computed);
        assert!((b.bound - a.bound - 7.5).abs() <= 1e-12);
        assert!((a.corrected_slack - b.corrected_slack).abs() <= 1e-10 * b.computed);
    }
}

#[test]
fn scaling_covariance() {
    let run = |sigma: f64| {
        let spec = DomainSpec::unit_square().scaled(sigma);
        let hs = [sigma / 16.0, sigma / 32.0];
        let (l0, l1) = levels(&spec, &hs, &Potential::zero());
        let mut v = dirichlet_lower_bounds(&l0, &l1, &spec, &Potential::zero()).unwrap();
        v.push(gap_check(&gaps(&l0, &l1), spec.diameter()).unwrap());
        v
    };
    for (a, b) in run(1.0).iter().zip(&run(2.0)) {
        assert!(
            (4.0 * b.corrected_slack / a.corrected_slack - 1.0).abs() <= 1e-10,
            "{}",
            a.id
        );
        assert!((4.0 * b.computed / a.computed - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn isodiametric_arithmetic() {
    let spec = DomainSpec::unit_square();
    let (l0, l1) = levels(&spec, &[1.0 / 32.0, 1.0 / 64.0], &Potential::zero());
    let v = isodiametric_bounds(&l0, &l1, &spec, &Potential::zero()).unwrap();
    assert!((v[0].bound - PI.powi(3) / 2.0).abs() < 1e-12);
    assert!(v.iter().all(|b| b.verdict == Verdict::Pass));

    let spec = DomainSpec::disk([0.0, 0.0], 1.0);
    let (l0, l1) = levels(&spec, &[1.0 / 32.0], &Potential::zero());
    let v = isodiametric_bounds(&l0, &l1, &spec, &Potential::zero()).unwrap();
    assert!((v[0].bound - PI * PI / 2.0).abs() < 1e-12);
    assert!((v[0].computed - J01 * J01).abs() < 0.05);
    assert!(v.iter().all(|b| b.verdict == Verdict::Pass));

    let spec = DomainSpec::interval(-0.5, 0.5);
    let (l0, l1) = levels(&spec, &[1.0 / 256.0, 1.0 / 512.0], &Potential::zero());
    let v = isodiametric_bounds(&l0, &l1, &spec, &Potential::zero()).unwrap();
    let d = dirichlet_lower_bounds(&l0, &l1, &spec, &Potential::zero()).unwrap();
    assert!((v[0].bound - d[0].bound).abs() < 1e-12);
    assert_eq!(v[0].verdict, Verdict::Marginal);
}

fn neumann_levels(spec: &DomainSpec, hs: &[f64], model_drift: bool) -> Vec<Level> {
    hs.iter()
        .map(|&h| {
            let g = build_cell_grid(spec, h).unwrap();
            let drift = if model_drift {
                Drift::interval_model(&g)
            } else {
                Drift::Zero
            };
            Level {
                h,
                value: neumann_eigenvalue(&g, &drift).unwrap(),
            }
        })
        .collect()
}

#[test]
fn neumann_interval_equalities() {
    let spec = DomainSpec::interval(-0.5, 0.5);
    let free = neumann_levels(&spec, &[1.0 / 256.0, 1.0 / 512.0], false);
    let v = neumann_check(&free, 1.0, NeumannBound::Convex { epsilon: 0.0 }).unwrap();
    assert!(
        (v.corrected - PI * PI).abs() <= 1e-6 * PI * PI,
        "{}",
        v.corrected
    );
    assert_eq!(v.verdict, Verdict::Marginal);

    let model = neumann_levels(&spec, &[1.0 / 512.0], true);
    let v = neumann_check(&model, 1.0, NeumannBound::ModelModulus).unwrap();
    assert!(
        (v.computed / (3.0 * PI * PI) - 1.0).abs() <= 1e-4,
        "{}",
        v.computed
    );
    assert_eq!(v.verdict, Verdict::Marginal);
}

#[test]
fn neumann_square_without_drift() {
    let levels = neumann_levels(&DomainSpec::unit_square(), &[1.0 / 32.0], false);
    let v = neumann_check(&levels, 2f64.sqrt(), NeumannBound::Convex { epsilon: 0.0 }).unwrap();
    assert!((v.computed - PI * PI).abs() < 1e-2);
    assert!((v.bound - PI * PI / 2.0).abs() < 1e-12);
    assert_eq!(v.verdict, Verdict::Pass);
}
