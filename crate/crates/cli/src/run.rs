//! Executes the checks of one config. Grids and eigenpairs are computed
//! once, then the checks run independently; a failing check records its
//! error and leaves the others untouched.

use gapcert::bounds::{
    dirichlet_lower_bounds, gap_check, isodiametric_bounds, neumann_check, neumann_eigenvalue,
    BoundVerdict, Level, NeumannBound,
};
use gapcert::eigen::{
    full_decomposition, smallest_eigenpairs, SolveMethod, SpectralResult, DENSE_LIMIT, MAX_PAIRS,
};
use gapcert::geometry::{admissible_pairs, build_cell_grid, build_grid, GridDomain};
use gapcert::heat::{
    decay_check, kernel_slack, kernel_slack_ratio_form, kernel_spectral, t_min, DecayReport,
};
use gapcert::model1d::{KernelMethod, Model1D};
use gapcert::modulus::{
    default_tolerance, expansion_slack, ground_state_field, logconcavity_min_eig, ratio_continuity,
    ExpansionBound, LogConcavity, RatioDiagnostic, SlackOptions,
};
use gapcert::operator::{assemble_dirichlet, Drift};
use gapcert::par::{self, Execution};
use gapcert::report::{SlackReport, Verdict};
use gapcert::Point;
use log::info;
use serde::{Deserialize, Serialize};

use crate::config::{CheckId, NeumannDrift, RunConfig};

/// Thresholds swept by the modulus check.
pub const DELTA_SWEEP: [f64; 3] = [1e-1, 1e-2, 1e-3];
/// Largest pairwise disagreement tolerated between the two heat-slack forms.
pub const FORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Marginal,
    Fail,
    Error,
}

impl Outcome {
    fn rank(self) -> u8 {
        match self {
            Outcome::Pass => 0,
            Outcome::Marginal => 1,
            Outcome::Fail => 2,
            Outcome::Error => 3,
        }
    }

    pub fn worst(self, other: Outcome) -> Outcome {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }

    /// 0 for pass or marginal, 1 for a failed check, 2 for an error.
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass | Outcome::Marginal => 0,
            Outcome::Fail => 1,
            Outcome::Error => 2,
        }
    }
}

impl From<Verdict> for Outcome {
    fn from(v: Verdict) -> Outcome {
        match v {
            Verdict::Pass => Outcome::Pass,
            Verdict::Marginal => Outcome::Marginal,
            Verdict::Fail => Outcome::Fail,
        }
    }
}

fn worst_verdict(a: Verdict, b: Verdict) -> Verdict {
    let rank = |v: Verdict| match v {
        Verdict::Pass => 0,
        Verdict::Marginal => 1,
        Verdict::Fail => 2,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

/// One row of the check table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub computed: Option<f64>,
    pub bound: Option<f64>,
    pub slack: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenLevel {
    pub h: f64,
    pub unknowns: usize,
    pub method: SolveMethod,
    pub eigenvalues: Vec<f64>,
    pub residuals: Vec<f64>,
    pub certified: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaPoint {
    pub delta: f64,
    pub pair_count: usize,
    pub min_slack: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatRun {
    pub source: Point,
    pub t: f64,
    pub report: SlackReport,
    /// Largest pairwise difference between the log-kernel and ratio forms.
    pub form_difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CheckResult {
    Eigen {
        levels: Vec<EigenLevel>,
    },
    Bounds {
        verdicts: Vec<BoundVerdict>,
    },
    Modulus {
        report: SlackReport,
        delta_sweep: Vec<DeltaPoint>,
    },
    Logconcavity {
        result: LogConcavity,
        tolerance: f64,
    },
    Heat {
        runs: Vec<HeatRun>,
    },
    Decay {
        source: Point,
        times: Vec<f64>,
        report: DecayReport,
    },
    Neumann {
        levels: Vec<Level>,
        verdict: BoundVerdict,
    },
    ModelResiduals {
        series_images: f64,
        ode: f64,
        pde_min: f64,
        pde_max: f64,
    },
    Ratio {
        diagnostic: RatioDiagnostic,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub id: CheckId,
    pub outcome: Outcome,
    pub summary: Summary,
    pub result: Option<CheckResult>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridInfo {
    pub h: f64,
    pub unknowns: usize,
    pub method: Option<SolveMethod>,
    pub max_residual: Option<f64>,
}

/// Per-node values on the finest grid for plotting.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldTable {
    pub heat_time: Option<f64>,
    /// `x, y, φ₀, |∇log φ₀|, H` per admissible node.
    pub rows: Vec<(Point, f64, f64, Option<f64>)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub config: RunConfig,
    pub grids: Vec<GridInfo>,
    pub checks: Vec<CheckEntry>,
    pub outcome: Outcome,
    #[serde(skip)]
    pub field: Option<FieldTable>,
}

impl RunReport {
    pub fn check(&self, id: CheckId) -> Option<&CheckEntry> {
        self.checks.iter().find(|c| c.id == id)
    }
}

struct LevelData {
    grid: Result<GridDomain, String>,
    spectral: Option<Result<SpectralResult, String>>,
}

struct Context<'a> {
    cfg: &'a RunConfig,
    d: f64,
    levels: Vec<LevelData>,
    exec: Execution,
}

impl Context<'_> {
    fn fine(&self) -> Result<(&GridDomain, &SpectralResult), String> {
        let level = self
            .levels
            .last()
            .expect("configs carry at least one level");
        let grid = level.grid.as_ref().map_err(Clone::clone)?;
        match &level.spectral {
            Some(Ok(s)) => Ok((grid, s)),
            Some(Err(e)) => Err(e.clone()),
            None => Err("no eigenpairs were computed on the finest grid".into()),
        }
    }

    fn spectra(&self) -> Result<Vec<(f64, &SpectralResult)>, String> {
        self.cfg
            .h
            .iter()
            .zip(&self.levels)
            .map(|(&h, l)| match &l.spectral {
                Some(Ok(s)) => Ok((h, s)),
                Some(Err(e)) => Err(e.clone()),
                None => Err(format!("no eigenpairs were computed at h = {h}")),
            })
            .collect()
    }

    fn eigen_levels(&self, k: usize) -> Result<Vec<Level>, String> {
        self.spectra()?
            .into_iter()
            .map(|(h, s)| {
                s.eigenvalues
                    .get(k)
                    .map(|&value| Level { h, value })
                    .ok_or_else(|| format!("λ{k} missing at h = {h}"))
            })
            .collect()
    }

    fn model(&self) -> Result<Model1D, String> {
        Model1D::new(self.d).map_err(|e| e.to_string())
    }

    fn slack_options(&self) -> SlackOptions {
        SlackOptions {
            tolerance: self.cfg.tolerances.slack,
            execution: self.exec,
        }
    }

    fn heat_times(&self) -> Vec<f64> {
        if self.cfg.times.is_empty() {
            [0.02, 0.05, 0.1, 0.2]
                .iter()
                .map(|f| f * self.d * self.d)
                .collect()
        } else {
            self.cfg.times.clone()
        }
    }

    /// Configured (or centroid) source, then an off-centre one.
    fn sources(&self, grid: &GridDomain) -> Vec<usize> {
        let spec = &self.cfg.domain;
        let primary = grid.nearest_node(self.cfg.source.unwrap_or_else(|| spec.centroid()));
        let (lo, hi) = spec.bounding_box();
        let c = spec.centroid();
        let mut off = [c[0] + 0.2 * (hi[0] - lo[0]), c[1] + 0.1 * (hi[1] - lo[1])];
        if !spec.contains_strict(off, 0.0) {
            off = c;
        }
        let secondary = grid.nearest_node(off);
        if secondary == primary {
            vec![primary]
        } else {
            vec![primary, secondary]
        }
    }
}

fn eigenpair_count(cfg: &RunConfig) -> usize {
    if cfg.checks.contains(&CheckId::RatioDiagnostic) {
        3
    } else {
        2
    }
}

fn prepare(cfg: &RunConfig, exec: Execution) -> Context<'_> {
    let all = cfg.checks.iter().any(|c| c.needs_all_levels());
    let fine = cfg.checks.iter().any(|c| c.needs_fine_spectrum());
    let heat = cfg
        .checks
        .iter()
        .any(|c| matches!(c, CheckId::HeatSlack | CheckId::Decay));
    let last = cfg.h.len() - 1;
    let levels = cfg
        .h
        .iter()
        .enumerate()
        .map(|(k, &h)| {
            let grid = build_grid(&cfg.domain, h).map_err(|e| e.to_string());
            let wanted = all || (fine && k == last);
            let spectral = match (&grid, wanted) {
                (Ok(g), true) => Some(solve(g, cfg, heat && k == last)),
                (Err(e), true) => Some(Err(e.clone())),
                _ => None,
            };
            LevelData { grid, spectral }
        })
        .collect();
    Context {
        cfg,
        d: cfg.domain.diameter(),
        levels,
        exec,
    }
}

fn solve(grid: &GridDomain, cfg: &RunConfig, full: bool) -> Result<SpectralResult, String> {
    info!("eigensolve on {} unknowns (h = {})", grid.len(), grid.h);
    let op = assemble_dirichlet(grid, &cfg.potential).map_err(|e| e.to_string())?;
    let result = if full && grid.len() <= DENSE_LIMIT {
        full_decomposition(&op)
    } else if full {
        smallest_eigenpairs(&op, MAX_PAIRS.min(grid.len()))
    } else {
        smallest_eigenpairs(&op, eigenpair_count(cfg).min(grid.len()))
    };
    result.map_err(|e| e.to_string())
}

type Checked = Result<(Verdict, Summary, CheckResult), String>;

fn bound_summary(verdicts: &[BoundVerdict]) -> (Verdict, Summary) {
    let verdict = verdicts
        .iter()
        .fold(Verdict::Pass, |acc, v| worst_verdict(acc, v.verdict));
    let pick = verdicts
        .iter()
        .filter(|v| v.verdict == verdict)
        .min_by(|a, b| a.corrected_slack.total_cmp(&b.corrected_slack))
        .expect("at least one verdict");
    (
        verdict,
        Summary {
            computed: Some(pick.corrected),
            bound: Some(pick.bound),
            slack: Some(pick.corrected_slack),
        },
    )
}

fn bounds_result(verdicts: Vec<BoundVerdict>) -> Checked {
    let (verdict, summary) = bound_summary(&verdicts);
    Ok((verdict, summary, CheckResult::Bounds { verdicts }))
}

fn slack_summary(r: &SlackReport) -> Summary {
    Summary {
        computed: Some(r.min_slack),
        bound: Some(0.0),
        slack: Some(r.min_slack),
    }
}

fn check_eigen(ctx: &Context) -> Checked {
    let levels: Vec<EigenLevel> = ctx
        .spectra()?
        .into_iter()
        .zip(&ctx.levels)
        .map(|((h, s), l)| EigenLevel {
            h,
            unknowns: l.grid.as_ref().map_or(0, GridDomain::len),
            method: s.method,
            eigenvalues: s.eigenvalues.iter().take(MAX_PAIRS).copied().collect(),
            residuals: s.residuals.iter().take(MAX_PAIRS).copied().collect(),
            certified: s.certified(),
        })
        .collect();
    let verdict = if levels.iter().all(|l| l.certified) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let summary = Summary {
        computed: levels.last().map(|l| l.eigenvalues[0]),
        bound: None,
        slack: None,
    };
    Ok((verdict, summary, CheckResult::Eigen { levels }))
}

fn check_gap(ctx: &Context) -> Checked {
    let l0 = ctx.eigen_levels(0)?;
    let l1 = ctx.eigen_levels(1)?;
    let gaps: Vec<Level> = l0
        .iter()
        .zip(&l1)
        .map(|(a, b)| Level {
            h: a.h,
            value: b.value - a.value,
        })
        .collect();
    bounds_result(vec![gap_check(&gaps, ctx.d).map_err(|e| e.to_string())?])
}

fn check_dirichlet(ctx: &Context, isodiametric: bool) -> Checked {
    let l0 = ctx.eigen_levels(0)?;
    let l1 = ctx.eigen_levels(1)?;
    let (spec, q) = (&ctx.cfg.domain, &ctx.cfg.potential);
    let verdicts = if isodiametric {
        isodiametric_bounds(&l0, &l1, spec, q)
    } else {
        dirichlet_lower_bounds(&l0, &l1, spec, q)
    };
    bounds_result(verdicts.map_err(|e| e.to_string())?)
}

fn modulus_at(ctx: &Context, delta: f64) -> Result<SlackReport, String> {
    let (g, s) = ctx.fine()?;
    let x = ground_state_field(s, g, delta).map_err(|e| e.to_string())?;
    let pairs = admissible_pairs(g, s.ground_state(), delta, ctx.cfg.max_pairs, ctx.cfg.seed)
        .map_err(|e| e.to_string())?;
    expansion_slack(
        &x,
        g,
        &pairs,
        ExpansionBound::Model(ctx.model()?),
        &ctx.slack_options(),
    )
    .map_err(|e| e.to_string())
}

fn check_modulus(ctx: &Context) -> Checked {
    let report = modulus_at(ctx, ctx.cfg.delta)?;
    let delta_sweep = DELTA_SWEEP
        .iter()
        .map(|&delta| {
            modulus_at(ctx, delta).map(|r| DeltaPoint {
                delta,
                pair_count: r.pair_count,
                min_slack: r.min_slack,
                verdict: r.verdict,
            })
        })
        .collect::<Result<Vec<_>, String>>()?;
    // The verdict must not depend on the boundary threshold.
    let verdict = delta_sweep
        .iter()
        .fold(report.verdict, |acc, p| worst_verdict(acc, p.verdict));
    Ok((
        verdict,
        slack_summary(&report),
        CheckResult::Modulus {
            report,
            delta_sweep,
        },
    ))
}

fn check_logconcavity(ctx: &Context) -> Checked {
    let (g, s) = ctx.fine()?;
    let result = logconcavity_min_eig(s, g, ctx.cfg.delta).map_err(|e| e.to_string())?;
    let tolerance = ctx
        .cfg
        .tolerances
        .slack
        .unwrap_or_else(|| default_tolerance(g.h, ctx.d));
    let m = result.min_eigenvalue;
    let verdict = if m.abs() <= tolerance {
        Verdict::Marginal
    } else if m > 0.0 {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let summary = Summary {
        computed: Some(m),
        bound: Some(0.0),
        slack: Some(m),
    };
    Ok((
        verdict,
        summary,
        CheckResult::Logconcavity { result, tolerance },
    ))
}

fn check_heat(ctx: &Context) -> Checked {
    let (g, s) = ctx.fine()?;
    let model = ctx.model()?;
    let times = ctx.heat_times();
    let opts = ctx.slack_options();
    let mut runs = Vec::new();
    for z in ctx.sources(g) {
        let states = kernel_spectral(s, z, &times, ctx.exec).map_err(|e| e.to_string())?;
        for st in &states {
            let pairs = admissible_pairs(
                g,
                &st.values,
                ctx.cfg.delta,
                ctx.cfg.max_pairs,
                ctx.cfg.seed,
            )
            .map_err(|e| e.to_string())?;
            let (report, a) =
                kernel_slack(st, g, &model, &pairs, &opts).map_err(|e| e.to_string())?;
            let (_, b) =
                kernel_slack_ratio_form(st, g, &model, &pairs, &opts).map_err(|e| e.to_string())?;
            let form_difference = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(0.0, f64::max);
            runs.push(HeatRun {
                source: g.node(z),
                t: st.t,
                report,
                form_difference,
            });
        }
    }
    let mut verdict = runs
        .iter()
        .fold(Verdict::Pass, |acc, r| worst_verdict(acc, r.report.verdict));
    if runs.iter().any(|r| r.form_difference > FORM_TOLERANCE) {
        verdict = Verdict::Fail;
    }
    let worst = runs
        .iter()
        .min_by(|a, b| a.report.min_slack.total_cmp(&b.report.min_slack))
        .expect("non-empty runs");
    Ok((
        verdict,
        slack_summary(&worst.report),
        CheckResult::Heat { runs },
    ))
}

fn check_decay(ctx: &Context) -> Checked {
    let (g, s) = ctx.fine()?;
    let source = ctx.sources(g)[0];
    let d2 = ctx.d * ctx.d;
    let t0 = t_min(g).max(0.05 * d2);
    let n = 12;
    let times: Vec<f64> = (0..n)
        .map(|k| t0 * (d2 / t0).powf(k as f64 / (n - 1) as f64))
        .collect();
    let states = kernel_spectral(s, source, &times, ctx.exec).map_err(|e| e.to_string())?;
    let inf_q = ctx
        .cfg
        .potential
        .infimum(&ctx.cfg.domain, g.h)
        .map_err(|e| e.to_string())?;
    let report = decay_check(&states, g, &ctx.model()?, inf_q, ctx.cfg.tolerances.decay)
        .map_err(|e| e.to_string())?;
    let summary = Summary {
        computed: Some(report.max_violation),
        bound: Some(0.0),
        slack: Some(-report.max_violation),
    };
    Ok((
        report.verdict,
        summary,
        CheckResult::Decay {
            source: g.node(source),
            times,
            report,
        },
    ))
}

fn check_neumann(ctx: &Context) -> Checked {
    let levels = ctx
        .cfg
        .h
        .iter()
        .map(|&h| {
            let g = build_cell_grid(&ctx.cfg.domain, h).map_err(|e| e.to_string())?;
            let drift = match ctx.cfg.neumann.drift {
                NeumannDrift::Zero => Drift::Zero,
                NeumannDrift::Model => Drift::interval_model(&g),
            };
            info!("Neumann eigensolve on {} cells (h = {h})", g.len());
            neumann_eigenvalue(&g, &drift)
                .map(|value| Level { h, value })
                .map_err(|e| e.to_string())
        })
        .collect::<Result<Vec<_>, String>>()?;
    let bound = match ctx.cfg.neumann.drift {
        NeumannDrift::Zero => NeumannBound::Convex {
            epsilon: ctx.cfg.neumann.epsilon,
        },
        NeumannDrift::Model => NeumannBound::ModelModulus,
    };
    let verdict = neumann_check(&levels, ctx.d, bound).map_err(|e| e.to_string())?;
    let (v, summary) = bound_summary(std::slice::from_ref(&verdict));
    Ok((v, summary, CheckResult::Neumann { levels, verdict }))
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| a + (b - a) * k as f64 / (n - 1) as f64)
        .collect()
}

/// Thresholds of the model self-consistency check.
pub const SERIES_IMAGES_TOL: f64 = 1e-10;
pub const ODE_TOL: f64 = 1e-9;
pub const PDE_TOL: f64 = 1e-6;

fn check_model(ctx: &Context) -> Checked {
    let m = ctx.model()?;
    let d = ctx.d;
    let err = |e: gapcert::model1d::ModelError| e.to_string();
    let mut series_images: f64 = 0.0;
    for t in linspace(-3.0, 0.0, 31)
        .into_iter()
        .map(|e| 10f64.powf(e) * d * d)
    {
        for s in linspace(-0.45 * d, 0.45 * d, 91) {
            let a = m.hbar(s, t, KernelMethod::Series).map_err(err)?;
            let b = m.hbar(s, t, KernelMethod::Images).map_err(err)?;
            series_images = series_images.max((a - b).abs() * d);
        }
    }
    let ode = m.check_psi_ode(&linspace(0.0, 0.49 * d, 1000), 1.0);
    let t_grid: Vec<f64> = linspace(-2.0, 0.0, 21)
        .into_iter()
        .map(|e| 10f64.powf(e) * d * d)
        .collect();
    let (pde_min, pde_max) = m
        .check_psi_pde(&linspace(0.01 * d, 0.45 * d, 45), &t_grid)
        .map_err(err)?;
    let ok = series_images <= SERIES_IMAGES_TOL && ode <= ODE_TOL && pde_min >= -PDE_TOL;
    let verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    let summary = Summary {
        computed: Some(pde_min),
        bound: Some(-PDE_TOL),
        slack: Some(pde_min + PDE_TOL),
    };
    Ok((
        verdict,
        summary,
        CheckResult::ModelResiduals {
            series_images,
            ode,
            pde_min,
            pde_max,
        },
    ))
}

fn check_ratio(ctx: &Context) -> Checked {
    let (g, s) = ctx.fine()?;
    let diagnostic = ratio_continuity(
        s,
        g,
        &ctx.model()?,
        ctx.cfg.delta,
        ctx.cfg.max_pairs,
        ctx.cfg.seed,
    )
    .map_err(|e| e.to_string())?;
    let verdict = if diagnostic.c_star.is_finite() {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    let summary = Summary {
        computed: Some(diagnostic.c_star),
        bound: None,
        slack: None,
    };
    Ok((verdict, summary, CheckResult::Ratio { diagnostic }))
}

fn run_check(ctx: &Context, id: CheckId) -> CheckEntry {
    info!("running {id}");
    let out = match id {
        CheckId::Eigen => check_eigen(ctx),
        CheckId::Gap => check_gap(ctx),
        CheckId::Modulus => check_modulus(ctx),
        CheckId::Logconcavity => check_logconcavity(ctx),
        CheckId::HeatSlack => check_heat(ctx),
        CheckId::Decay => check_decay(ctx),
        CheckId::Neumann => check_neumann(ctx),
        CheckId::DirichletBounds => check_dirichlet(ctx, false),
        CheckId::Isodiametric => check_dirichlet(ctx, true),
        CheckId::ModelResiduals => check_model(ctx),
        CheckId::RatioDiagnostic => check_ratio(ctx),
    };
    match out {
        Ok((verdict, summary, result)) => CheckEntry {
            id,
            outcome: verdict.into(),
            summary,
            result: Some(result),
            error: None,
        },
        Err(e) => CheckEntry {
            id,
            outcome: Outcome::Error,
            summary: Summary::default(),
            result: None,
            error: Some(e),
        },
    }
}

fn field_table(ctx: &Context) -> Option<FieldTable> {
    let (g, s) = ctx.fine().ok()?;
    let x = ground_state_field(s, g, ctx.cfg.delta).ok()?;
    let phi = s.ground_state();
    let heat = if ctx
        .cfg
        .checks
        .iter()
        .any(|c| matches!(c, CheckId::HeatSlack | CheckId::Decay))
    {
        let t = ctx.heat_times()[0];
        kernel_spectral(s, ctx.sources(g)[0], &[t], ctx.exec)
            .ok()
            .map(|mut v| (t, v.remove(0).values))
    } else {
        None
    };
    let rows = x
        .nodes
        .iter()
        .zip(&x.values)
        .map(|(&i, v)| {
            (
                g.node(i),
                phi[i],
                v[0].hypot(v[1]),
                heat.as_ref().map(|(_, h)| h[i]),
            )
        })
        .collect();
    Some(FieldTable {
        heat_time: heat.map(|(t, _)| t),
        rows,
    })
}

/// Runs every configured check. `exec` controls the data parallelism inside
/// and across checks; the report does not depend on it.
pub fn run(cfg: &RunConfig, exec: Execution) -> RunReport {
    let ctx = prepare(cfg, exec);
    let grids = cfg
        .h
        .iter()
        .zip(&ctx.levels)
        .filter_map(|(&h, l)| {
            let g = l.grid.as_ref().ok()?;
            let s = l.spectral.as_ref().and_then(|s| s.as_ref().ok());
            Some(GridInfo {
                h,
                unknowns: g.len(),
                method: s.map(|s| s.method),
                max_residual: s.map(SpectralResult::max_residual),
            })
        })
        .collect();
    let checks = par::map(exec, &cfg.checks, |&id| run_check(&ctx, id));
    let outcome = checks
        .iter()
        .fold(Outcome::Pass, |acc, c| acc.worst(c.outcome));
    RunReport {
        config: cfg.clone(),
        grids,
        checks,
        outcome,
        field: field_table(&ctx),
    }
}
