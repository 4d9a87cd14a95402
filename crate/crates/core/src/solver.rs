//! Convex subproblem of one CCCP iteration:
//!
//! ```text
//! maximize  R
//! s.t.      R ≤ f̃_{k,d}(x; anchor)          for every UE k and delay d
//!           Σ_k tr V_k ≤ P1,  Σ_k tr Σ_{x2,k} ≤ P2
//!           joint covariance of UE k ⪰ 0    for every k
//! ```
//!
//! Solved with a log-barrier interior-point method: damped Newton centering
//! steps on
//!
//! ```text
//! −t·R − Σ log(f̃_{k,d} − R) − log(P1 − Σ tr V) − log(P2 − Σ tr Σ_x2) − Σ_k log|Σ_{x,k}|
//! ```
//!
//! with `t` multiplied by 10 per stage until the barrier duality-gap bound
//! `m / t` drops below the requested tolerance. Variables are the real
//! coordinates of the Hermitian blocks `V_k`, `Σ_{x2,k}` and the complex
//! blocks `Ω_{k,d}`. Every matrix in `f̃` is affine in those coordinates, so
//! the coefficient matrices are built once per channel realization in
//! [`SurrogateModel`] and reused across CCCP iterations.

use std::f64::consts::LN_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{check_feasibility, ChannelSet, PrecoderSolution, SystemConfig};
use crate::surrogate::{Anchor, BlockMask, Piece, SplitBlocks, SplitTerms};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverTolerances {
    /// Relative duality-gap target.
    pub gap: f64,
    /// Feasibility tolerance of the returned solution.
    pub feasibility: f64,
    /// Cap on Newton steps summed over all barrier stages.
    pub max_inner_iterations: usize,
}

impl Default for SolverTolerances {
    fn default() -> Self {
        Self {
            gap: 1e-6,
            feasibility: 1e-7,
            max_inner_iterations: 600,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SubproblemSpec<'a> {
    pub anchor: &'a Anchor,
    pub channels: &'a ChannelSet,
    pub config: &'a SystemConfig,
    pub scheme_mask: BlockMask,
    pub tolerances: SolverTolerances,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    MaxIter,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub solution: PrecoderSolution,
    /// `min_{k,d} f̃_{k,d}` at the returned solution.
    pub r_min: f64,
    pub gap_certificate: f64,
    pub inner_iterations: usize,
    pub status: SolveStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Slot {
    V(usize),
    Sigma(usize),
    Omega(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Part {
    Diag,
    Re,
    Im,
}

#[derive(Debug, Clone, Copy)]
struct Coord {
    slot: Slot,
    i: usize,
    j: usize,
    part: Part,
}

/// Real coordinates of the free blocks.
#[derive(Debug, Clone)]
pub(crate) struct VariableLayout {
    users: usize,
    slots: usize,
    n1: usize,
    n2: usize,
    coords: Vec<Coord>,
}

fn hermitian_coords(slot: Slot, n: usize, out: &mut Vec<Coord>) {
    for i in 0..n {
        out.push(Coord {
            slot,
            i,
            j: i,
            part: Part::Diag,
        });
        for j in i + 1..n {
            out.push(Coord {
                slot,
                i,
                j,
                part: Part::Re,
            });
            out.push(Coord {
                slot,
                i,
                j,
                part: Part::Im,
            });
        }
    }
}

impl VariableLayout {
    pub fn new(config: &SystemConfig, slots: usize, mask: BlockMask) -> Self {
        let (n1, n2) = (config.antennas_rrh1, config.antennas_rrh2);
        let mut coords = Vec::new();
        for k in 0..config.num_ues {
            if mask.v {
                hermitian_coords(Slot::V(k), n1, &mut coords);
            }
            if mask.sigma_x2 {
                hermitian_coords(Slot::Sigma(k), n2, &mut coords);
            }
            if mask.omega_free() {
                for d in 0..slots {
                    for i in 0..n1 {
                        for j in 0..n2 {
                            coords.push(Coord {
                                slot: Slot::Omega(k, d),
                                i,
                                j,
                                part: Part::Re,
                            });
                            coords.push(Coord {
                                slot: Slot::Omega(k, d),
                                i,
                                j,
                                part: Part::Im,
                            });
                        }
                    }
                }
            }
        }
        Self {
            users: config.num_ues,
            slots,
            n1,
            n2,
            coords,
        }
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    fn zero_solution(&self) -> PrecoderSolution {
        PrecoderSolution {
            v: vec![linalg::zeros(self.n1, self.n1); self.users],
            sigma_x2: vec![linalg::zeros(self.n2, self.n2); self.users],
            omega: vec![vec![linalg::zeros(self.n1, self.n2); self.slots]; self.users],
        }
    }

    fn add(&self, sol: &mut PrecoderSolution, c: &Coord, value: f64) {
        let m = match c.slot {
            Slot::V(k) => &mut sol.v[k],
            Slot::Sigma(k) => &mut sol.sigma_x2[k],
            Slot::Omega(k, d) => &mut sol.omega[k][d],
        };
        match (c.slot, c.part) {
            (_, Part::Diag) => m[(c.i, c.i)] += Complex64::new(value, 0.0),
            (Slot::Omega(..), Part::Re) => m[(c.i, c.j)] += Complex64::new(value, 0.0),
            (Slot::Omega(..), Part::Im) => m[(c.i, c.j)] += Complex64::new(0.0, value),
            (_, Part::Re) => {
                m[(c.i, c.j)] += Complex64::new(value, 0.0);
                m[(c.j, c.i)] += Complex64::new(value, 0.0);
            }
            (_, Part::Im) => {
                m[(c.i, c.j)] += Complex64::new(0.0, value);
                m[(c.j, c.i)] += Complex64::new(0.0, -value);
            }
        }
    }

    pub fn to_solution(&self, x: &[f64]) -> PrecoderSolution {
        let mut sol = self.zero_solution();
        for (c, &val) in self.coords.iter().zip(x) {
            self.add(&mut sol, c, val);
        }
        sol
    }

    fn basis(&self, p: usize) -> PrecoderSolution {
        let mut sol = self.zero_solution();
        self.add(&mut sol, &self.coords[p], 1.0);
        sol
    }

    /// Coordinates of `sol` on the free blocks; frozen blocks are ignored.
    pub fn from_solution(&self, sol: &PrecoderSolution) -> Vec<f64> {
        self.coords
            .iter()
            .map(|c| {
                let m = match c.slot {
                    Slot::V(k) => &sol.v[k],
                    Slot::Sigma(k) => &sol.sigma_x2[k],
                    Slot::Omega(k, d) => &sol.omega[k][d],
                };
                match c.part {
                    Part::Diag => m[(c.i, c.i)].re,
                    Part::Re => m[(c.i, c.j)].re,
                    Part::Im => m[(c.i, c.j)].im,
                }
            })
            .collect()
    }

    fn power_weights(&self) -> (Vec<f64>, Vec<f64>) {
        let mut a1 = vec![0.0; self.len()];
        let mut a2 = vec![0.0; self.len()];
        for (p, c) in self.coords.iter().enumerate() {
            match (c.slot, c.part) {
                (Slot::V(_), Part::Diag) => a1[p] = 1.0,
                (Slot::Sigma(_), Part::Diag) => a2[p] = 1.0,
                _ => {}
            }
        }
        (a1, a2)
    }
}

/// `M(x) = M₀ + Σ_p x_p M_p` with only the non-zero `M_p` stored.
#[derive(Debug, Clone)]
struct AffineMat {
    constant: CMat,
    terms: Vec<(usize, CMat)>,
}

impl AffineMat {
    fn dim(&self) -> usize {
        self.constant.nrows()
    }

    fn eval(&self, x: &[f64]) -> CMat {
        let mut m = self.constant.clone();
        for (p, mp) in &self.terms {
            if x[*p] != 0.0 {
                m += mp.scale(x[*p]);
            }
        }
        m
    }

    /// Coefficients of `tr(W M(x))` for a fixed Hermitian `W`: constant and per-coordinate.
    fn trace_against(&self, w: &CMat, n: usize) -> (f64, Vec<f64>) {
        let c0 = linalg::real_trace(&(w * &self.constant));
        let mut coef = vec![0.0; n];
        for (p, mp) in &self.terms {
            coef[*p] = linalg::real_trace(&(w * mp));
        }
        (c0, coef)
    }
}

/// Natural log-det of an affine matrix with its gradient and Hessian in `x`.
struct LogDet {
    value: f64,
    grad: Vec<(usize, f64)>,
    /// Dense Hessian over the coordinates listed in `grad`.
    hess: DMatrix<f64>,
}

fn ln_det_value(m: &AffineMat, x: &[f64]) -> Option<f64> {
    if m.dim() == 0 {
        return Some(0.0);
    }
    linalg::ln_det_pd(&m.eval(x))
}

fn ln_det_derivatives(m: &AffineMat, x: &[f64]) -> Option<LogDet> {
    let dim = m.dim();
    if dim == 0 {
        return Some(LogDet {
            value: 0.0,
            grad: Vec::new(),
            hess: DMatrix::zeros(0, 0),
        });
    }
    let mat = linalg::hermitize(&m.eval(x));
    let chol = linalg::cholesky_pd(&mat)?;
    let l = chol.l();
    let mut value = 0.0;
    for i in 0..dim {
        let d = l[(i, i)].re;
        if !(d > 0.0) {
            return None;
        }
        value += 2.0 * d.ln();
    }
    let linv = l.solve_lower_triangular(&linalg::identity(dim))?;
    let nt = m.terms.len();
    // Rows hold [Re; Im] of L⁻¹ M_p L⁻†, so Re tr(W_p W_q) is a real dot product.
    let mut frob = DMatrix::<f64>::zeros(nt, 2 * dim * dim);
    let mut grad = Vec::with_capacity(nt);
    let linv_h = linv.adjoint();
    for (row, (p, mp)) in m.terms.iter().enumerate() {
        let w = &linv * mp * &linv_h;
        grad.push((*p, linalg::real_trace(&w)));
        for (idx, z) in w.iter().enumerate() {
            frob[(row, 2 * idx)] = z.re;
            frob[(row, 2 * idx + 1)] = z.im;
        }
    }
    let hess = -(&frob * frob.transpose());
    Some(LogDet { value, grad, hess })
}

#[derive(Debug, Clone)]
struct PairModel {
    cov_y: AffineMat,
    t1b: AffineMat,
    v: AffineMat,
    a: AffineMat,
    b: AffineMat,
    n: AffineMat,
}

impl PairModel {
    fn piece<'m>(&'m self, p: Piece, joint: &'m AffineMat) -> &'m AffineMat {
        match p {
            Piece::CovY => &self.cov_y,
            Piece::T1b => &self.t1b,
            Piece::T2b => joint,
            Piece::V => &self.v,
            Piece::A => &self.a,
            Piece::B => &self.b,
            Piece::N => &self.n,
        }
    }
}

/// Affine structure of every matrix in the surrogate, for one channel
/// realization, layout and mask.
#[derive(Debug, Clone)]
pub struct SurrogateModel {
    mask: BlockMask,
    layout: VariableLayout,
    pairs: Vec<Vec<PairModel>>,
    /// Joint covariance of each UE (the `T2 B T2†` block), shared by all delays.
    joint: Vec<AffineMat>,
    power_weights: (Vec<f64>, Vec<f64>),
}

impl SurrogateModel {
    pub fn new(
        config: &SystemConfig,
        channels: &ChannelSet,
        slots: usize,
        mask: BlockMask,
    ) -> Result<Self> {
        channels.check_shapes(config)?;
        let layout = VariableLayout::new(config, slots, mask);
        let zero = layout.zero_solution();
        let bases: Vec<PrecoderSolution> = (0..layout.len()).map(|p| layout.basis(p)).collect();
        let mut pairs = Vec::with_capacity(config.num_ues);
        let mut joint = Vec::with_capacity(config.num_ues);
        for k in 0..config.num_ues {
            let mut row = Vec::with_capacity(slots);
            for d in 0..slots {
                let base = SplitBlocks::build(&zero, channels, k, d, mask, 1.0)?;
                let mut parts: Vec<SplitBlocks> = Vec::with_capacity(bases.len());
                for basis in &bases {
                    parts.push(SplitBlocks::build(basis, channels, k, d, mask, 0.0)?);
                }
                let collect = |pick: &dyn Fn(&SplitBlocks) -> &CMat| AffineMat {
                    constant: pick(&base).clone(),
                    terms: parts
                        .iter()
                        .enumerate()
                        .filter(|(_, b)| linalg::max_abs(pick(b)) > 0.0)
                        .map(|(p, b)| (p, pick(b).clone()))
                        .collect(),
                };
                if d == 0 {
                    joint.push(collect(&|b| &b.t2b));
                }
                row.push(PairModel {
                    cov_y: collect(&|b| &b.cov_y),
                    t1b: collect(&|b| &b.t1b),
                    v: collect(&|b| &b.v),
                    a: collect(&|b| &b.a),
                    b: collect(&|b| &b.b),
                    n: collect(&|b| &b.n),
                });
            }
            pairs.push(row);
        }
        let power_weights = layout.power_weights();
        Ok(Self {
            mask,
            layout,
            pairs,
            joint,
            power_weights,
        })
    }

    pub fn mask(&self) -> BlockMask {
        self.mask
    }

    pub fn num_variables(&self) -> usize {
        self.layout.len()
    }

    pub fn slots(&self) -> usize {
        self.layout.slots
    }

    pub fn to_solution(&self, x: &[f64]) -> PrecoderSolution {
        self.layout.to_solution(x)
    }

    pub fn from_solution(&self, sol: &PrecoderSolution) -> Vec<f64> {
        self.layout.from_solution(sol)
    }
}

/// `f̃_{k,d}(x) = concave(x)/ln 2 + c + coef·x`, with the linear part
/// coming from the anchor expansions.
struct Linearized {
    c: f64,
    coef: Vec<f64>,
}

fn linearize(model: &SurrogateModel, anchor: &Anchor, terms: &SplitTerms) -> Vec<Vec<Linearized>> {
    let n = model.num_variables();
    model
        .pairs
        .iter()
        .enumerate()
        .map(|(k, row)| {
            row.iter()
                .enumerate()
                .map(|(d, pm)| {
                    let ap = &anchor.pairs[k][d];
                    let mut c = 0.0;
                    let mut coef = vec![0.0; n];
                    let mut add =
                        |aff: &AffineMat, exp: &crate::surrogate::Expansion, weight: f64| {
                            if aff.dim() == 0 {
                                return;
                            }
                            let (c0, cp) = aff.trace_against(&exp.inv, n);
                            c += weight * (exp.log2_det + (c0 - aff.dim() as f64) / LN_2);
                            for (acc, v) in coef.iter_mut().zip(cp) {
                                *acc += weight * v / LN_2;
                            }
                        };
                    for (&(w, p), exp) in terms.linear.iter().zip(ap) {
                        if w != 0.0 {
                            add(pm.piece(p, &model.joint[k]), exp, w);
                        }
                    }
                    Linearized { c, coef }
                })
                .collect()
        })
        .collect()
}

struct Barrier<'a> {
    model: &'a SurrogateModel,
    lin: Vec<Vec<Linearized>>,
    terms: SplitTerms,
    budgets: (Option<f64>, Option<f64>),
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl<'a> Barrier<'a> {
    fn new(
        model: &'a SurrogateModel,
        anchor: &Anchor,
        budgets: (Option<f64>, Option<f64>),
    ) -> Self {
        let terms = anchor.terms();
        Self {
            model,
            lin: linearize(model, anchor, &terms),
            terms,
            budgets,
        }
    }

    fn num_constraints(&self) -> f64 {
        let pairs: usize = self.model.pairs.iter().map(Vec::len).sum();
        let psd: usize = self.model.joint.iter().map(AffineMat::dim).sum();
        let budgets = self.budgets.0.is_some() as usize + self.budgets.1.is_some() as usize;
        (pairs + psd + budgets) as f64
    }

    /// Surrogate values `f̃_{k,d}(x)`; `None` outside the domain.
    fn surrogates(&self, x: &[f64]) -> Option<Vec<f64>> {
        let joint: Vec<f64> = self
            .model
            .joint
            .iter()
            .map(|m| ln_det_value(m, x))
            .collect::<Option<_>>()?;
        let mut out = Vec::new();
        for (k, row) in self.model.pairs.iter().enumerate() {
            for (d, pm) in row.iter().enumerate() {
                let mut concave = 0.0;
                for &(w, p) in &self.terms.exact {
                    concave += w * match p {
                        Piece::T2b => joint[k],
                        _ => ln_det_value(pm.piece(p, &self.model.joint[k]), x)?,
                    };
                }
                let lin = &self.lin[k][d];
                out.push(concave / LN_2 + lin.c + dot(&lin.coef, x));
            }
        }
        Some(out)
    }

    fn slacks(&self, x: &[f64]) -> Option<Vec<f64>> {
        let (a1, a2) = &self.model.power_weights;
        let mut out = Vec::new();
        if let Some(p) = self.budgets.0 {
            out.push(p - dot(a1, x));
        }
        if let Some(p) = self.budgets.1 {
            out.push(p - dot(a2, x));
        }
        out.iter().all(|&s| s > 0.0).then_some(out)
    }

    fn value(&self, t: f64, x: &[f64], r: f64) -> f64 {
        let Some(g) = self.surrogates(x) else {
            return f64::INFINITY;
        };
        let Some(slacks) = self.slacks(x) else {
            return f64::INFINITY;
        };
        let mut acc = -t * r;
        for gi in g {
            let u = gi - r;
            if !(u > 0.0) {
                return f64::INFINITY;
            }
            acc -= u.ln();
        }
        for s in slacks {
            acc -= s.ln();
        }
        for m in &self.model.joint {
            match ln_det_value(m, x) {
                Some(v) => acc -= v,
                None => return f64::INFINITY,
            }
        }
        if acc.is_nan() {
            f64::INFINITY
        } else {
            acc
        }
    }

    /// Gradient and Hessian over `(x, R)`, `R` last.
    fn derivatives(&self, t: f64, x: &[f64], r: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = x.len();
        let mut grad = DVector::zeros(n + 1);
        let mut hess = DMatrix::zeros(n + 1, n + 1);
        grad[n] = -t;

        let joint: Vec<LogDet> = self
            .model
            .joint
            .iter()
            .map(|m| ln_det_derivatives(m, x))
            .collect::<Option<_>>()?;
        for jd in &joint {
            for (a, &(p, gp)) in jd.grad.iter().enumerate() {
                grad[p] -= gp;
                for (b, &(q, _)) in jd.grad.iter().enumerate() {
                    hess[(p, q)] -= jd.hess[(a, b)];
                }
            }
        }

        let (a1, a2) = &self.model.power_weights;
        for (budget, w) in [(self.budgets.0, a1), (self.budgets.1, a2)] {
            if let Some(p) = budget {
                let s = p - dot(w, x);
                if !(s > 0.0) {
                    return None;
                }
                for i in 0..n {
                    if w[i] == 0.0 {
                        continue;
                    }
                    grad[i] += w[i] / s;
                    for j in 0..n {
                        hess[(i, j)] += w[i] * w[j] / (s * s);
                    }
                }
            }
        }

        let mut g_grad = vec![0.0; n];
        let mut g_hess = DMatrix::<f64>::zeros(n, n);
        for (k, row) in self.model.pairs.iter().enumerate() {
            for (d, pm) in row.iter().enumerate() {
                let lin = &self.lin[k][d];
                g_grad.copy_from_slice(&lin.coef);
                g_hess.fill(0.0);
                let mut value = lin.c + dot(&lin.coef, x);
                for &(w, piece) in &self.terms.exact {
                    let owned;
                    let ld = match piece {
                        Piece::T2b => &joint[k],
                        _ => {
                            owned = ln_det_derivatives(pm.piece(piece, &self.model.joint[k]), x)?;
                            &owned
                        }
                    };
                    let scale = w / LN_2;
                    value += scale * ld.value;
                    for (a, &(p, gp)) in ld.grad.iter().enumerate() {
                        g_grad[p] += scale * gp;
                        for (b, &(q, _)) in ld.grad.iter().enumerate() {
                            g_hess[(p, q)] += scale * ld.hess[(a, b)];
                        }
                    }
                }
                let u = value - r;
                if !(u > 0.0) {
                    return None;
                }
                // −log(g − R)
                for i in 0..n {
                    grad[i] -= g_grad[i] / u;
                }
                grad[n] += 1.0 / u;
                let u2 = u * u;
                for i in 0..n {
                    for j in 0..n {
                        hess[(i, j)] += g_grad[i] * g_grad[j] / u2 - g_hess[(i, j)] / u;
                    }
                    hess[(i, n)] -= g_grad[i] / u2;
                    hess[(n, i)] -= g_grad[i] / u2;
                }
                hess[(n, n)] += 1.0 / u2;
            }
        }
        if grad.iter().any(|v| !v.is_finite()) || hess.iter().any(|v: &f64| !v.is_finite()) {
            return None;
        }
        Some((grad, hess))
    }
}

/// Solve one subproblem from scratch (the affine model is rebuilt).
pub fn solve_subproblem(spec: &SubproblemSpec) -> Result<SubproblemResult> {
    spec.config.validate()?;
    let mask = effective_mask(spec.scheme_mask, spec.config);
    let slots = spec.anchor.solution.num_delays();
    let model = SurrogateModel::new(spec.config, spec.channels, slots, mask)?;
    let rebuilt;
    let anchor = if spec.anchor.mask == mask {
        spec.anchor
    } else {
        rebuilt = Anchor::with_split(
            &spec.anchor.solution,
            spec.channels,
            mask,
            spec.anchor.split,
        )?;
        &rebuilt
    };
    solve_with_model(&model, anchor, spec.config, &spec.tolerances)
}

/// Blocks with an empty power budget are frozen at zero.
pub fn effective_mask(mask: BlockMask, config: &SystemConfig) -> BlockMask {
    let v = mask.v && config.power_rrh1 > 0.0;
    let sigma_x2 = mask.sigma_x2 && config.power_rrh2 > 0.0;
    BlockMask {
        v,
        sigma_x2,
        omega: mask.omega && v && sigma_x2,
    }
}

/// Interior reference point: half of each budget spread evenly, `Ω = 0`.
fn center_point(model: &SurrogateModel, config: &SystemConfig) -> Vec<f64> {
    let (a1, a2) = &model.power_weights;
    let n1_total: f64 = a1.iter().sum();
    let n2_total: f64 = a2.iter().sum();
    (0..model.num_variables())
        .map(|p| {
            if a1[p] > 0.0 {
                0.5 * config.power_rrh1 / n1_total
            } else if a2[p] > 0.0 {
                0.5 * config.power_rrh2 / n2_total
            } else {
                0.0
            }
        })
        .collect()
}

const INTERIOR_BLEND: f64 = 1e-4;
const STAGE_GROWTH: f64 = 100.0;
const NEWTON_TOL: f64 = 1e-10;
/// Below this Newton decrement a rejected full step is treated as roundoff.
const ROUNDOFF_DECREMENT: f64 = 1e-6;
const MAX_NEWTON_PER_STAGE: usize = 100;

pub fn solve_with_model(
    model: &SurrogateModel,
    anchor: &Anchor,
    config: &SystemConfig,
    tol: &SolverTolerances,
) -> Result<SubproblemResult> {
    if anchor.mask != model.mask() || anchor.solution.num_delays() != model.slots() {
        return Err(Error::DimensionMismatch(
            "anchor does not match surrogate model".into(),
        ));
    }
    let n = model.num_variables();
    let barrier = Barrier::new(
        model,
        anchor,
        (
            model.mask.v.then_some(config.power_rrh1),
            model.mask.sigma_x2.then_some(config.power_rrh2),
        ),
    );
    let x_anchor = model.from_solution(&anchor.solution);
    let anchor_value = barrier
        .surrogates(&x_anchor)
        .map(|g| g.into_iter().fold(f64::INFINITY, f64::min))
        .filter(|v| v.is_finite());

    if n == 0 {
        let r = anchor_value.unwrap_or(0.0);
        return Ok(SubproblemResult {
            solution: model.to_solution(&[]),
            r_min: r,
            gap_certificate: 0.0,
            inner_iterations: 0,
            status: SolveStatus::Optimal,
        });
    }

    let center = center_point(model, config);
    let mut x: Vec<f64> = x_anchor
        .iter()
        .zip(&center)
        .map(|(a, c)| (1.0 - INTERIOR_BLEND) * a + INTERIOR_BLEND * c)
        .collect();
    let Some(g0) = barrier.surrogates(&x) else {
        return Err(Error::Solver(
            "interior start point outside the surrogate domain".into(),
        ));
    };
    let g0_min = g0.iter().copied().fold(f64::INFINITY, f64::min);
    if !g0_min.is_finite() {
        return Err(Error::Solver(
            "surrogate not finite at the start point".into(),
        ));
    }
    let mut r = g0_min - 1.0;

    let m = barrier.num_constraints();
    let mut t = 1.0;
    let mut inner = 0usize;
    let mut status = SolveStatus::Optimal;
    'stages: loop {
        for _ in 0..MAX_NEWTON_PER_STAGE {
            if inner >= tol.max_inner_iterations {
                status = SolveStatus::MaxIter;
                break 'stages;
            }
            let Some((grad, hess)) = barrier.derivatives(t, &x, r) else {
                status = SolveStatus::NumericalFailure;
                break 'stages;
            };
            let Some(step) = linalg::solve_spd(&hess, &(-&grad)) else {
                status = SolveStatus::NumericalFailure;
                break 'stages;
            };
            inner += 1;
            let decrement = -grad.dot(&step);
            if decrement.is_nan() {
                status = SolveStatus::NumericalFailure;
                break 'stages;
            }
            if decrement / 2.0 <= NEWTON_TOL {
                break;
            }
            let f0 = barrier.value(t, &x, r);
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha > 1e-16 {
                let xn: Vec<f64> = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| v + alpha * step[i])
                    .collect();
                let rn = r + alpha * step[n];
                let fv = barrier.value(t, &xn, rn);
                if fv.is_finite() && fv <= f0 - 0.25 * alpha * decrement {
                    x = xn;
                    r = rn;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted || (alpha < 1.0 && decrement <= ROUNDOFF_DECREMENT) {
                // Centered as far as the barrier value can resolve.
                break;
            }
        }
        if m / t <= tol.gap * r.abs().max(1.0) {
            break;
        }
        t *= STAGE_GROWTH;
    }

    let g = barrier
        .surrogates(&x)
        .ok_or_else(|| Error::Solver("iterate left the surrogate domain".into()))?;
    let mut r_min = g.iter().copied().fold(f64::INFINITY, f64::min);
    let mut solution = model.to_solution(&x);
    let gap_certificate = m / t;

    // The anchor is feasible for this subproblem; never return anything worse.
    if let Some(av) = anchor_value {
        if av >= r_min || !r_min.is_finite() {
            r_min = av;
            solution = anchor.solution.clone();
            if status == SolveStatus::NumericalFailure {
                status = SolveStatus::Optimal;
            }
        }
    }
    if !r_min.is_finite() {
        return Err(Error::Solver("no finite surrogate value".into()));
    }
    if !check_feasibility(
        &solution,
        &config.with_delay(model.slots() - 1),
        tol.feasibility,
    )
    .feasible
    {
        // Only reachable through round-off; the anchor is a safe answer.
        status = SolveStatus::NumericalFailure;
        solution = anchor.solution.clone();
        r_min = anchor_value.unwrap_or(f64::NEG_INFINITY);
    }
    Ok(SubproblemResult {
        solution,
        r_min,
        gap_certificate,
        inner_iterations: inner,
        status,
    })
}
