//! Outer CCCP loop and the transmission schemes built on it.
//!
//! Each iteration linearizes the convex part of every rate constraint at the
//! current iterate, solves the resulting convex max-min problem and moves
//! to its solution. The true worst-case rate never decreases along the
//! iterates. An optional extrapolation step then searches further along the
//! ray from the previous iterate through the new one and keeps the best
//! feasible point by the true objective; this shortcuts the slow creep of
//! plain CCCP toward optima on the boundary of the PSD cone.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{
    apply_phase_offset, assemble_joint_covariance, check_feasibility, ChannelSet, PrecoderSolution,
    RateReport, SystemConfig,
};
use crate::rates::{rate_f, worst_case_rates};
use crate::solver::{
    effective_mask, solve_with_model, SolveStatus, SolverTolerances, SurrogateModel,
};
use crate::surrogate::{Anchor, BlockMask, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    /// Correlate RRH 2 with every delayed version of RRH 1's signal.
    Robust,
    /// Only the better of the two RRHs transmits.
    TxSelection,
    /// Independent RRH signals (`Ω = 0`).
    NonCooperative,
    /// Cooperative design that assumes zero delay.
    NonRobustCoop,
    /// Cooperative design with the delay known.
    SyncGenie { known_delay: usize },
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Robust => "robust",
            Scheme::TxSelection => "tx_selection",
            Scheme::NonCooperative => "non_cooperative",
            Scheme::NonRobustCoop => "non_robust_coop",
            Scheme::SyncGenie { .. } => "sync_genie",
        }
    }

    /// Every scheme; the genie label carries delay 0.
    pub fn all() -> [Scheme; 5] {
        [
            Scheme::TxSelection,
            Scheme::NonCooperative,
            Scheme::Robust,
            Scheme::NonRobustCoop,
            Scheme::SyncGenie { known_delay: 0 },
        ]
    }

    /// Same scheme ignoring the genie delay.
    pub fn same_kind(&self, other: &Scheme) -> bool {
        self.name() == other.name()
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "robust" => Ok(Scheme::Robust),
            "tx_selection" | "txselection" => Ok(Scheme::TxSelection),
            "non_cooperative" | "noncooperative" => Ok(Scheme::NonCooperative),
            "non_robust_coop" | "nonrobustcoop" => Ok(Scheme::NonRobustCoop),
            "sync_genie" | "syncgenie" => Ok(Scheme::SyncGenie { known_delay: 0 }),
            other => Err(Error::InvalidConfig(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CccpOptions {
    pub max_outer: usize,
    /// Stop once the true objective improves by less than this (bits).
    pub tol_outer: f64,
    pub extrapolate: bool,
    /// Warm-start schemes from their baselines inside the suite.
    pub warm_start: bool,
    /// Grouping of the rate into kept and linearized log-dets.
    pub split: Split,
    pub solver: SolverTolerances,
}

impl Default for CccpOptions {
    fn default() -> Self {
        Self {
            max_outer: 50,
            tol_outer: 1e-5,
            extrapolate: true,
            warm_start: true,
            split: Split::default(),
            solver: SolverTolerances::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CccpTrace {
    /// True worst-case design rate at every accepted iterate, starting with the initial point.
    pub objective: Vec<f64>,
    /// Subproblems solved.
    pub iterations: usize,
    pub converged: bool,
    /// Subproblem statuses in iteration order.
    pub solver_status: Vec<SolveStatus>,
    /// Extrapolation steps that beat the plain CCCP point.
    pub extrapolations: usize,
    /// Error that ended the loop early, if any; the last good iterate is kept.
    pub failure: Option<String>,
    pub final_solution: PrecoderSolution,
    pub final_report: RateReport,
}

/// How a scheme is optimized and evaluated.
#[derive(Debug, Clone, Copy)]
struct Design {
    mask: BlockMask,
    /// Number of delay slots in the design problem.
    slots: usize,
}

fn design_of(scheme: &Scheme, config: &SystemConfig) -> Design {
    let (mask, slots) = match scheme {
        Scheme::Robust => (BlockMask::ALL, config.num_delays()),
        Scheme::NonCooperative => (
            BlockMask {
                v: true,
                sigma_x2: true,
                omega: false,
            },
            1,
        ),
        Scheme::TxSelection => (
            BlockMask {
                v: false,
                sigma_x2: true,
                omega: false,
            },
            1,
        ),
        Scheme::NonRobustCoop | Scheme::SyncGenie { .. } => (BlockMask::ALL, 1),
    };
    Design {
        mask: effective_mask(mask, config),
        slots,
    }
}

fn design_config(config: &SystemConfig, design: &Design) -> SystemConfig {
    config.with_delay(design.slots - 1)
}

fn default_point(config: &SystemConfig, slots: usize, mask: BlockMask) -> PrecoderSolution {
    let cfg = config.with_delay(slots - 1);
    let mut sol = PrecoderSolution::zeros(&cfg);
    let users = config.num_ues as f64;
    if mask.v {
        let p = config.power_rrh1 / (users * config.antennas_rrh1 as f64);
        sol.v
            .iter_mut()
            .for_each(|m| *m = linalg::identity(config.antennas_rrh1).scale(p));
    }
    if mask.sigma_x2 {
        let p = config.power_rrh2 / (users * config.antennas_rrh2 as f64);
        sol.sigma_x2
            .iter_mut()
            .for_each(|m| *m = linalg::identity(config.antennas_rrh2).scale(p));
    }
    sol
}

/// Feasible starting point: budgets spread evenly over UEs and antennas,
/// `Ω = 0`, frozen blocks at zero. For transmitter selection this is the
/// RRH 2-only branch.
pub fn initialize(config: &SystemConfig, scheme: &Scheme) -> PrecoderSolution {
    let mask = match scheme {
        Scheme::TxSelection => effective_mask(
            BlockMask {
                v: false,
                sigma_x2: true,
                omega: false,
            },
            config,
        ),
        _ => effective_mask(BlockMask::ALL, config),
    };
    default_point(config, config.num_delays(), mask)
}

fn min_rate(sol: &PrecoderSolution, channels: &ChannelSet) -> Result<f64> {
    let mut best = f64::INFINITY;
    for k in 0..sol.num_ues() {
        for d in 0..sol.num_delays() {
            best = best.min(rate_f(sol, channels, k, d)?);
        }
    }
    Ok(best)
}

/// Largest `α` keeping `x + α·dir` inside the power budgets and PSD cone.
fn max_feasible_step(
    sol: &PrecoderSolution,
    dir: &PrecoderSolution,
    config: &SystemConfig,
    mask: BlockMask,
) -> Option<f64> {
    let mut alpha = f64::INFINITY;
    let budgets = [
        (
            mask.v,
            config.power_rrh1,
            sol.power_rrh1(),
            dir.power_rrh1(),
        ),
        (
            mask.sigma_x2,
            config.power_rrh2,
            sol.power_rrh2(),
            dir.power_rrh2(),
        ),
    ];
    for (active, budget, used, slope) in budgets {
        if active && slope > 0.0 {
            alpha = alpha.min((budget - used).max(0.0) / slope);
        }
    }
    for k in 0..sol.num_ues() {
        let x = assemble_joint_covariance(sol, k).ok()?;
        let y = assemble_joint_covariance(dir, k).ok()?;
        let keep: Vec<usize> = active_joint_indices(sol, mask);
        let x = linalg::principal(&x, &keep);
        let y = linalg::principal(&y, &keep);
        if x.nrows() == 0 {
            continue;
        }
        let n = x.nrows();
        let chol = linalg::cholesky_pd(&x)?;
        let linv = chol.l().solve_lower_triangular(&linalg::identity(n))?;
        let w: CMat = -(&linv * y * linv.adjoint());
        let top = linalg::eigenvalues(&w).last().copied().unwrap_or(0.0);
        if top > 0.0 {
            alpha = alpha.min(1.0 / top);
        }
    }
    Some(alpha)
}

fn active_joint_indices(sol: &PrecoderSolution, mask: BlockMask) -> Vec<usize> {
    let n1 = sol.v[0].nrows();
    let n2 = sol.sigma_x2[0].nrows();
    let win = n1 * sol.num_delays();
    let mut idx = Vec::new();
    if mask.v {
        idx.extend(0..win);
    }
    if mask.sigma_x2 {
        idx.extend(win..win + n2);
    }
    idx
}

const EXTRAPOLATION_FRACTION: f64 = 0.99;
const EXTRAPOLATION_CAP: f64 = 1e6;

/// Best point on the ray `prev + α (next − prev)`, `α ∈ {2, 4, …}` and the
/// near-boundary step; `None` if nothing beats `next_value`.
fn extrapolate(
    prev: &PrecoderSolution,
    next: &PrecoderSolution,
    next_value: f64,
    config: &SystemConfig,
    channels: &ChannelSet,
    mask: BlockMask,
) -> Option<(PrecoderSolution, f64)> {
    let dir = difference(next, prev);
    let limit = max_feasible_step(prev, &dir, config, mask)?.min(EXTRAPOLATION_CAP)
        * EXTRAPOLATION_FRACTION;
    let mut candidates = Vec::new();
    let mut a = 2.0;
    while a < limit {
        candidates.push(prev.lerp(next, a));
        a *= 2.0;
    }
    if limit > 1.0 {
        candidates.push(prev.lerp(next, limit));
    }
    // Past the boundary, pull the point back into the feasible set.
    while a <= PROJECTED_STEP_MAX {
        if let Some(c) = pull_back(&prev.lerp(next, a), config, mask) {
            candidates.push(c);
        }
        a *= 2.0;
    }
    let mut best: Option<(PrecoderSolution, f64)> = None;
    let mut best_value = next_value;
    for cand in candidates {
        let Ok(value) = min_rate(&cand, channels) else {
            continue;
        };
        if value.is_finite() && value > best_value {
            best_value = value;
            best = Some((cand, value));
        }
    }
    best
}

const PROJECTED_STEP_MAX: f64 = 64.0;
/// Smallest eigenvalue a pull-back accepts, relative to an even power split.
const EIGEN_FLOOR: f64 = 1e-9;
/// Fraction of the largest feasible correlation kept when pulling back.
const PULL_BACK_MARGIN: f64 = 1.0 - 1e-7;

/// Feasible point near `sol`: over-budget RRHs are scaled down (their
/// correlations by the square root of the same factor) and each UE's `Ω`
/// is shrunk until its joint covariance is positive semidefinite.
/// Candidates with a (near-)singular `V_k` or `Σ_{x2,k}` are rejected.
fn pull_back(
    sol: &PrecoderSolution,
    config: &SystemConfig,
    mask: BlockMask,
) -> Option<PrecoderSolution> {
    let mut out = sol.clone();
    let users = sol.num_ues();
    let floors = [
        config.power_rrh1 / (users * config.antennas_rrh1) as f64 * EIGEN_FLOOR,
        config.power_rrh2 / (users * config.antennas_rrh2) as f64 * EIGEN_FLOOR,
    ];
    for ((active, blocks), floor) in [(mask.v, &mut out.v), (mask.sigma_x2, &mut out.sigma_x2)]
        .into_iter()
        .zip(floors)
    {
        if active
            && blocks
                .iter()
                .any(|b| linalg::min_eigenvalue(&linalg::hermitize(b)) < floor)
        {
            return None;
        }
    }
    let scale1 = if mask.v {
        (config.power_rrh1 / out.power_rrh1()).min(1.0)
    } else {
        1.0
    };
    let scale2 = if mask.sigma_x2 {
        (config.power_rrh2 / out.power_rrh2()).min(1.0)
    } else {
        1.0
    };
    let corr = (scale1 * scale2).sqrt();
    for k in 0..users {
        out.v[k] = out.v[k].scale(scale1);
        out.sigma_x2[k] = out.sigma_x2[k].scale(scale2);
        out.omega[k].iter_mut().for_each(|m| *m = m.scale(corr));
    }
    if !mask.omega {
        return Some(out);
    }
    for k in 0..users {
        let v_inv = linalg::inverse_pd(&out.v[k])?;
        let mut load = linalg::zeros(out.sigma_x2[k].nrows(), out.sigma_x2[k].nrows());
        for om in &out.omega[k] {
            load += om.adjoint() * &v_inv * om;
        }
        let ls = linalg::cholesky_pd(&out.sigma_x2[k])?;
        let ls_inv = ls
            .l()
            .solve_lower_triangular(&linalg::identity(load.nrows()))?;
        let top = linalg::eigenvalues(&linalg::hermitize(&(&ls_inv * load * ls_inv.adjoint())))
            .last()
            .copied()?;
        if top >= PULL_BACK_MARGIN {
            let c = (PULL_BACK_MARGIN / top).sqrt();
            out.omega[k].iter_mut().for_each(|m| *m = m.scale(c));
        }
    }
    Some(out)
}

/// `next − prev`.
fn difference(next: &PrecoderSolution, prev: &PrecoderSolution) -> PrecoderSolution {
    let sub = |a: &Vec<CMat>, b: &Vec<CMat>| -> Vec<CMat> {
        a.iter().zip(b).map(|(x, y)| x - y).collect()
    };
    PrecoderSolution {
        v: sub(&next.v, &prev.v),
        sigma_x2: sub(&next.sigma_x2, &prev.sigma_x2),
        omega: next
            .omega
            .iter()
            .zip(&prev.omega)
            .map(|(a, b)| sub(a, b))
            .collect(),
    }
}

/// Plain MM loop on one design problem.
struct MmRun {
    objective: Vec<f64>,
    iterations: usize,
    converged: bool,
    statuses: Vec<SolveStatus>,
    extrapolations: usize,
    failure: Option<String>,
    solution: PrecoderSolution,
}

fn run_mm(
    config: &SystemConfig,
    channels: &ChannelSet,
    model: &SurrogateModel,
    init: PrecoderSolution,
    opts: &CccpOptions,
) -> Result<MmRun> {
    let mask = model.mask();
    let mut x = init;
    let mut value = min_rate(&x, channels)?;
    if !value.is_finite() {
        return Err(Error::Solver("initial point has no finite rate".into()));
    }
    let mut run = MmRun {
        objective: vec![value],
        iterations: 0,
        converged: false,
        statuses: Vec::new(),
        extrapolations: 0,
        failure: None,
        solution: x.clone(),
    };
    while run.iterations < opts.max_outer {
        let step = Anchor::with_split(&x, channels, mask, opts.split)
            .and_then(|anchor| solve_with_model(model, &anchor, config, &opts.solver));
        run.iterations += 1;
        let res = match step {
            Ok(res) => res,
            Err(e) => {
                run.failure = Some(e.to_string());
                break;
            }
        };
        run.statuses.push(res.status);
        let mut next = res.solution;
        let mut next_value = min_rate(&next, channels)?;
        if opts.extrapolate && next_value.is_finite() && next_value >= value {
            if let Some((cand, cv)) = extrapolate(&x, &next, next_value, config, channels, mask) {
                next = cand;
                next_value = cv;
                run.extrapolations += 1;
            }
        }
        if !check_feasibility(&next, config, opts.solver.feasibility).feasible {
            run.failure = Some("subproblem returned an infeasible point".into());
            break;
        }
        if !(next_value >= value) {
            // No ascent from this anchor within numerical precision.
            run.converged = true;
            break;
        }
        let gain = next_value - value;
        x = next;
        value = next_value;
        run.objective.push(value);
        if gain < opts.tol_outer {
            run.converged = true;
            break;
        }
    }
    run.solution = x;
    Ok(run)
}

/// Lift a single-slot design into the `D + 1`-slot evaluation layout,
/// placing its `Ω` at `slot` and zeros elsewhere.
fn embed(sol: &PrecoderSolution, slots: usize, slot: usize) -> PrecoderSolution {
    let mut out = sol.clone();
    for (k, row) in out.omega.iter_mut().enumerate() {
        let zero = linalg::zeros(sol.v[k].nrows(), sol.sigma_x2[k].nrows());
        let mut full = vec![zero; slots];
        full[slot] = sol.omega[k][0].clone();
        *row = full;
    }
    out
}

/// Single-slot slice `(V, Σ_x2, Ω_{·,slot})` of a windowed solution.
fn slice(sol: &PrecoderSolution, slot: usize) -> PrecoderSolution {
    PrecoderSolution {
        v: sol.v.clone(),
        sigma_x2: sol.sigma_x2.clone(),
        omega: sol
            .omega
            .iter()
            .map(|row| vec![row[slot].clone()])
            .collect(),
    }
}

fn evaluation_channels(config: &SystemConfig, channels: &ChannelSet) -> ChannelSet {
    if config.phase_offset_eval == 0.0 {
        channels.clone()
    } else {
        apply_phase_offset(channels, config.phase_offset_eval)
    }
}

/// Design-layout solution → evaluation-layout solution for a scheme.
fn to_evaluation(
    scheme: &Scheme,
    design: &PrecoderSolution,
    config: &SystemConfig,
) -> PrecoderSolution {
    match scheme {
        Scheme::Robust | Scheme::SyncGenie { .. } => design.clone(),
        _ => embed(design, config.num_delays(), 0),
    }
}

fn evaluate(
    scheme: &Scheme,
    design: &PrecoderSolution,
    config: &SystemConfig,
    channels: &ChannelSet,
) -> Result<RateReport> {
    let eval = to_evaluation(scheme, design, config);
    let cfg = config.with_delay(eval.num_delays() - 1);
    worst_case_rates(&eval, &evaluation_channels(config, channels), &cfg)
}

fn run_design(
    config: &SystemConfig,
    channels: &ChannelSet,
    scheme: &Scheme,
    design: Design,
    starts: Vec<PrecoderSolution>,
    opts: &CccpOptions,
) -> Result<CccpTrace> {
    let dcfg = design_config(config, &design);
    let model = SurrogateModel::new(&dcfg, channels, design.slots, design.mask)?;
    let mut best: Option<MmRun> = None;
    let mut last_err = None;
    for start in starts {
        match run_mm(&dcfg, channels, &model, start, opts) {
            Ok(run) => {
                let better = best
                    .as_ref()
                    .is_none_or(|b| run.objective.last() > b.objective.last());
                if better {
                    best = Some(run);
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let run =
        best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Solver("no start point".into())))?;
    let final_report = evaluate(scheme, &run.solution, config, channels)?;
    Ok(CccpTrace {
        objective: run.objective,
        iterations: run.iterations,
        converged: run.converged,
        solver_status: run.statuses,
        extrapolations: run.extrapolations,
        failure: run.failure,
        final_solution: to_evaluation(scheme, &run.solution, config),
        final_report,
    })
}

/// CCCP for one scheme from the default starting point.
///
/// Transmitter selection runs both single-RRH branches and keeps the one with
/// the larger worst-case rate.
pub fn run_cccp(
    config: &SystemConfig,
    channels: &ChannelSet,
    scheme: &Scheme,
    opts: &CccpOptions,
) -> Result<CccpTrace> {
    run_cccp_with_starts(config, channels, scheme, &[], opts)
}

/// CCCP with extra candidate starting points (in the scheme's design
/// layout); the default start is always tried and the best run is kept.
pub fn run_cccp_with_starts(
    config: &SystemConfig,
    channels: &ChannelSet,
    scheme: &Scheme,
    extra_starts: &[PrecoderSolution],
    opts: &CccpOptions,
) -> Result<CccpTrace> {
    config.validate()?;
    channels.check_shapes(config)?;
    if let Scheme::SyncGenie { known_delay } = scheme {
        if *known_delay > config.worst_case_delay {
            return Err(Error::InvalidConfig(format!(
                "genie delay {known_delay} outside 0..={}",
                config.worst_case_delay
            )));
        }
    }
    if *scheme == Scheme::TxSelection {
        let mut best: Option<CccpTrace> = None;
        let mut last_err = None;
        for mask in [
            BlockMask {
                v: false,
                sigma_x2: true,
                omega: false,
            },
            BlockMask {
                v: true,
                sigma_x2: false,
                omega: false,
            },
        ] {
            let design = Design {
                mask: effective_mask(mask, config),
                slots: 1,
            };
            let start = default_point(config, 1, design.mask);
            match run_design(config, channels, scheme, design, vec![start], opts) {
                Ok(trace) => {
                    if best
                        .as_ref()
                        .is_none_or(|b| trace.final_report.min_rate > b.final_report.min_rate)
                    {
                        best = Some(trace);
                    }
                }
                Err(e) => last_err = Some(e),
            }
        }
        return best.ok_or_else(|| last_err.unwrap_or_else(|| Error::Solver("no branch".into())));
    }
    let design = design_of(scheme, config);
    let mut starts = vec![default_point(config, design.slots, design.mask)];
    starts.extend(extra_starts.iter().cloned());
    run_design(config, channels, scheme, design, starts, opts)
}

#[derive(Debug, Clone)]
pub struct SchemeOutcome {
    pub scheme: Scheme,
    pub trace: CccpTrace,
}

impl SchemeOutcome {
    pub fn report(&self) -> &RateReport {
        &self.trace.final_report
    }

    /// Re-evaluates the designed solution under phase offset `theta` (radians).
    pub fn evaluate_at(
        &self,
        config: &SystemConfig,
        channels: &ChannelSet,
        theta: f64,
    ) -> Result<RateReport> {
        let sol = &self.trace.final_solution;
        let cfg = config.with_delay(sol.num_delays() - 1);
        worst_case_rates(sol, &apply_phase_offset(channels, theta), &cfg)
    }
}

/// Outcomes of all five schemes on one channel realization.
#[derive(Debug, Clone)]
pub struct SuiteResult {
    pub entries: Vec<(Scheme, std::result::Result<SchemeOutcome, String>)>,
}

impl SuiteResult {
    pub fn get(&self, scheme: &Scheme) -> Option<&SchemeOutcome> {
        self.entries
            .iter()
            .find(|(s, _)| s.same_kind(scheme))
            .and_then(|(_, r)| r.as_ref().ok())
    }

    pub fn min_rate(&self, scheme: &Scheme) -> Option<f64> {
        self.get(scheme).map(|o| o.report().min_rate)
    }
}

fn design_value(outcome: &SchemeOutcome) -> f64 {
    outcome
        .trace
        .objective
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY)
}

/// Runs every scheme on the same channels.
///
/// Designs assume zero phase offset; reports are evaluated with
/// `config.phase_offset_eval` applied. With warm starts enabled the
/// baselines seed the richer schemes: non-cooperative keeps the selection
/// solution if that is better, robust and non-robust cooperation also start
/// from the non-cooperative solution, and the genie also starts from the
/// robust solution's slice at its delay. `genie_delay` defaults to the delay
/// that limits the robust design.
pub fn run_scheme_suite(
    config: &SystemConfig,
    channels: &ChannelSet,
    opts: &CccpOptions,
    genie_delay: Option<usize>,
) -> SuiteResult {
    let mut entries: Vec<(Scheme, std::result::Result<SchemeOutcome, String>)> = Vec::new();
    let wrap = |scheme: Scheme, r: Result<CccpTrace>| {
        r.map(|trace| SchemeOutcome { scheme, trace })
            .map_err(|e| e.to_string())
    };

    let tx = wrap(
        Scheme::TxSelection,
        run_cccp(config, channels, &Scheme::TxSelection, opts),
    );

    let mut nc = wrap(
        Scheme::NonCooperative,
        run_cccp(config, channels, &Scheme::NonCooperative, opts),
    );
    if opts.warm_start {
        if let Ok(txo) = &tx {
            let replace = match &nc {
                Ok(nco) => design_value(txo) > design_value(nco),
                Err(_) => true,
            };
            if replace {
                let mut trace = txo.trace.clone();
                trace.objective = vec![design_value(txo)];
                trace.iterations = 0;
                nc = Ok(SchemeOutcome {
                    scheme: Scheme::NonCooperative,
                    trace,
                });
            }
        }
    }

    let nc_design = nc.as_ref().ok().map(|o| slice(&o.trace.final_solution, 0));
    let warm = |target: &Scheme| -> Vec<PrecoderSolution> {
        match (&nc_design, opts.warm_start) {
            (Some(sol), true) => match target {
                Scheme::Robust => vec![embed(sol, config.num_delays(), 0)],
                _ => vec![sol.clone()],
            },
            _ => Vec::new(),
        }
    };

    let robust = wrap(
        Scheme::Robust,
        run_cccp_with_starts(
            config,
            channels,
            &Scheme::Robust,
            &warm(&Scheme::Robust),
            opts,
        ),
    );
    let non_robust = wrap(
        Scheme::NonRobustCoop,
        run_cccp_with_starts(
            config,
            channels,
            &Scheme::NonRobustCoop,
            &warm(&Scheme::NonRobustCoop),
            opts,
        ),
    );

    let d0 = genie_delay
        .or_else(|| robust.as_ref().ok().map(|o| o.report().argmin_delay()))
        .unwrap_or(0)
        .min(config.worst_case_delay);
    let genie_scheme = Scheme::SyncGenie { known_delay: d0 };
    let mut genie_starts = Vec::new();
    if opts.warm_start {
        if let Ok(ro) = &robust {
            genie_starts.push(slice(&ro.trace.final_solution, d0));
        }
    }
    let genie = wrap(
        genie_scheme,
        run_cccp_with_starts(config, channels, &genie_scheme, &genie_starts, opts),
    );

    entries.push((Scheme::TxSelection, tx));
    entries.push((Scheme::NonCooperative, nc));
    entries.push((Scheme::Robust, robust));
    entries.push((Scheme::NonRobustCoop, non_robust));
    entries.push((genie_scheme, genie));
    SuiteResult { entries }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{check_feasibility, sample_channels};

    #[test]
    fn default_init_examples() {
        let cfg = SystemConfig::scalar(2, 1, 2.0);
        let sol = initialize(&cfg, &Scheme::Robust);
        for k in 0..2 {
            assert_eq!(sol.v[k][(0, 0)].re, 1.0);
            assert_eq!(sol.sigma_x2[k][(0, 0)].re, 1.0);
            assert!(sol.omega[k].iter().all(|m| linalg::max_abs(m) == 0.0));
        }
        assert!(check_feasibility(&sol, &cfg, 0.0).feasible);
        let sel = initialize(&cfg, &Scheme::TxSelection);
        assert!(sel.v.iter().all(|m| linalg::max_abs(m) == 0.0));
        for scheme in Scheme::all() {
            assert!(check_feasibility(&initialize(&cfg, &scheme), &cfg, 0.0).feasible);
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::all() {
            assert!(s.same_kind(&s.name().parse::<Scheme>().unwrap()));
        }
        assert!("bogus".parse::<Scheme>().is_err());
    }

    #[test]
    fn non_cooperative_reports_are_delay_flat() {
        let cfg = SystemConfig::scalar(2, 2, 10.0);
        let ch = sample_channels(&cfg, 3);
        let opts = CccpOptions {
            max_outer: 10,
            ..Default::default()
        };
        let trace = run_cccp(&cfg, &ch, &Scheme::NonCooperative, &opts).unwrap();
        for row in &trace.final_report.per_pair {
            assert_eq!(row.len(), 3);
            let spread = row.iter().copied().fold(f64::MIN, f64::max)
                - row.iter().copied().fold(f64::MAX, f64::min);
            assert!(spread < 1e-9);
        }
    }

    #[test]
    fn traces_are_monotone() {
        let cfg = SystemConfig::scalar(2, 1, 10.0);
        let ch = sample_channels(&cfg, 12);
        for scheme in [
            Scheme::Robust,
            Scheme::NonCooperative,
            Scheme::NonRobustCoop,
        ] {
            let trace = run_cccp(&cfg, &ch, &scheme, &CccpOptions::default()).unwrap();
            for w in trace.objective.windows(2) {
                assert!(w[1] >= w[0] - 1e-9, "{scheme}: {w:?}");
            }
            assert!(trace.iterations <= 50);
        }
    }
}
