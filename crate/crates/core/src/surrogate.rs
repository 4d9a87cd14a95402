//! Concave minorant of the rate function around an anchor point.
//!
//! The rate is a signed sum of log-determinants of matrices that are affine
//! in the transmit correlations. Two groupings are available:
//!
//! ```text
//! Joint:        f = [log|Σ_y| + log|T1 B T1†| + log|T2 B T2†|] − [D log|V| + log|A| + log|B|]
//! Conditional:  f = log|Σ_y| + [log|T1 B T1†| − (D+1) log|V|] + [log|V| − log|A|] − log|N|
//! ```
//!
//! where `N` is the covariance of interference plus noise seen by the UE,
//! using `log|B| − log|T2 B T2†| = log|N|`. In the joint grouping every
//! log-det in the second bracket is linearized. In the conditional grouping
//! the first two terms are kept (the bracket is the log-det of a Schur
//! complement, hence concave) while `log|V| − log|A|` (convex) and
//! `−log|N|` are linearized; for `D = 0` the two brackets cancel and only
//! the interference term is linearized. Each conditional term stays finite
//! as `V` or the joint covariance approaches singularity, which keeps the
//! minorant from acting as a barrier there.
//!
//! Blocks frozen at zero (an RRH switched off) carry no randomness; their
//! coordinates are removed from every matrix before taking log-dets, which
//! leaves the rate unchanged and keeps the split finite.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{ChannelSet, PrecoderSolution};
use crate::rates::PairContext;

/// Anchor matrices whose smallest eigenvalue falls below this get
/// `ANCHOR_RIDGE · I` added before inversion.
pub const ANCHOR_RIDGE: f64 = 1e-8;

/// Which variable blocks are free; frozen blocks are identically zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockMask {
    pub v: bool,
    pub sigma_x2: bool,
    pub omega: bool,
}

impl BlockMask {
    pub const ALL: Self = Self {
        v: true,
        sigma_x2: true,
        omega: true,
    };

    /// `Ω` can only be non-zero when both RRHs transmit.
    pub fn omega_free(&self) -> bool {
        self.omega && self.v && self.sigma_x2
    }
}

/// Grouping of the rate into kept and linearized log-dets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Split {
    #[default]
    Conditional,
    Joint,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Conditional => "conditional",
            Split::Joint => "joint",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "conditional" => Ok(Split::Conditional),
            "joint" => Ok(Split::Joint),
            other => Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

/// `log₂|B| + tr(B⁻¹(A − B)) / ln 2`: tangent of `log₂|·|` at `B`, evaluated at `A`.
pub fn phi(a: &CMat, b: &CMat) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::DimensionMismatch("phi arguments".into()));
    }
    let binv =
        linalg::inverse_pd(b).ok_or_else(|| Error::Singular("phi expansion point".into()))?;
    let ld = linalg::ln_det_pd(b).ok_or_else(|| Error::Singular("phi expansion point".into()))?;
    Ok(ld / LN_2 + linalg::real_trace(&(binv * (a - b))) / LN_2)
}

/// Matrices entering either split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Piece {
    CovY,
    T1b,
    T2b,
    V,
    A,
    B,
    N,
}

/// Signed log-det terms of a split: `f = Σ w log|X|`.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SplitTerms {
    /// Kept as is (their sum is concave).
    pub exact: Vec<(f64, Piece)>,
    /// Replaced by their tangent at the anchor (their sum is convex).
    pub linear: Vec<(f64, Piece)>,
}

impl SplitTerms {
    pub fn new(split: Split, slots: usize, mask: BlockMask) -> Self {
        let window = (slots - 1) as f64;
        match split {
            Split::Joint => Self {
                exact: vec![(1.0, Piece::CovY), (1.0, Piece::T1b), (1.0, Piece::T2b)],
                linear: vec![(-window, Piece::V), (-1.0, Piece::A), (-1.0, Piece::B)],
            },
            Split::Conditional => {
                let mut exact = vec![(1.0, Piece::CovY)];
                let mut linear = vec![(-1.0, Piece::N)];
                if slots > 1 && mask.v {
                    exact.extend([(1.0, Piece::T1b), (-(window + 1.0), Piece::V)]);
                    linear.extend([(1.0, Piece::V), (-1.0, Piece::A)]);
                }
                Self { exact, linear }
            }
        }
    }
}

/// The matrices entering the split, restricted to the active coordinates.
#[derive(Debug, Clone)]
pub(crate) struct SplitBlocks {
    pub cov_y: CMat,
    pub t1b: CMat,
    pub t2b: CMat,
    pub v: CMat,
    pub a: CMat,
    pub b: CMat,
    pub n: CMat,
}

impl SplitBlocks {
    pub fn from_context(ctx: &PairContext, own: &CMat, v_k: &CMat, mask: BlockMask) -> Self {
        let n2 = ctx.c_mat.ncols();
        let nu = ctx.cov_y.nrows();
        let win = ctx.d_mat.nrows();
        let n1 = v_k.nrows();
        let x2: Vec<usize> = if mask.sigma_x2 {
            (0..n2).collect()
        } else {
            Vec::new()
        };
        let y: Vec<usize> = (n2..n2 + nu).collect();
        let vbar: Vec<usize> = if mask.v {
            (n2 + nu..n2 + nu + win).collect()
        } else {
            Vec::new()
        };
        let cat = |parts: &[&[usize]]| -> Vec<usize> {
            parts.iter().flat_map(|p| p.iter().copied()).collect()
        };

        let b = linalg::principal(&ctx.b_mat, &cat(&[&x2, &y, &vbar]));
        let t1b = linalg::principal(&ctx.b_mat, &cat(&[&y, &vbar]));
        let t2b = linalg::principal(&ctx.b_mat, &cat(&[&x2, &vbar]));
        let a_idx: Vec<usize> = if mask.v {
            (0..n1 + nu).collect()
        } else {
            (n1..n1 + nu).collect()
        };
        let a = linalg::principal(&ctx.a_mat, &a_idx);
        let v = if mask.v {
            v_k.clone()
        } else {
            linalg::zeros(0, 0)
        };
        let n = &ctx.cov_y - own;
        Self {
            cov_y: ctx.cov_y.clone(),
            t1b,
            t2b,
            v,
            a,
            b,
            n,
        }
    }

    pub fn build(
        sol: &PrecoderSolution,
        channels: &ChannelSet,
        k: usize,
        d: usize,
        mask: BlockMask,
        noise: f64,
    ) -> Result<Self> {
        let ctx = PairContext::with_noise(sol, channels, k, d, noise)?;
        let (h1, h2) = (channels.h1(k), channels.h2(k));
        let cross = h1 * &sol.omega[k][d] * h2.adjoint();
        let own = h1 * &sol.v[k] * h1.adjoint()
            + h2 * &sol.sigma_x2[k] * h2.adjoint()
            + &cross
            + cross.adjoint();
        Ok(Self::from_context(&ctx, &own, &sol.v[k], mask))
    }

    pub fn piece(&self, p: Piece) -> &CMat {
        match p {
            Piece::CovY => &self.cov_y,
            Piece::T1b => &self.t1b,
            Piece::T2b => &self.t2b,
            Piece::V => &self.v,
            Piece::A => &self.a,
            Piece::B => &self.b,
            Piece::N => &self.n,
        }
    }
}

/// First-order data of one convex piece at the anchor.
#[derive(Debug, Clone)]
pub(crate) struct Expansion {
    /// Inverse of the (possibly ridged) anchor matrix.
    pub inv: CMat,
    /// `log₂` determinant of the (possibly ridged) anchor matrix.
    pub log2_det: f64,
}

impl Expansion {
    fn at(m: &CMat) -> Result<Self> {
        let mut base = linalg::hermitize(m);
        if base.nrows() > 0 && linalg::min_eigenvalue(&base) < ANCHOR_RIDGE {
            base += linalg::identity(base.nrows()).scale(ANCHOR_RIDGE);
        }
        let inv =
            linalg::inverse_pd(&base).ok_or_else(|| Error::Singular("anchor matrix".into()))?;
        let log2_det =
            linalg::ln_det_pd(&base).ok_or_else(|| Error::Singular("anchor matrix".into()))? / LN_2;
        Ok(Self { inv, log2_det })
    }

    /// `Φ(x, anchor)` using the stored inverse.
    pub fn phi(&self, x: &CMat) -> f64 {
        if x.nrows() == 0 {
            return 0.0;
        }
        let n = x.nrows() as f64;
        self.log2_det + (linalg::real_trace(&(&self.inv * x)) - n) / LN_2
    }
}

/// Linearization point of one CCCP iteration.
#[derive(Debug, Clone)]
pub struct Anchor {
    pub solution: PrecoderSolution,
    pub mask: BlockMask,
    pub split: Split,
    /// Expansions of the linearized terms, per UE and delay, in the order of
    /// [`SplitTerms::linear`].
    pub(crate) pairs: Vec<Vec<Vec<Expansion>>>,
}

impl Anchor {
    /// Anchor for the default (conditional) split.
    pub fn new(
        solution: &PrecoderSolution,
        channels: &ChannelSet,
        mask: BlockMask,
    ) -> Result<Self> {
        Self::with_split(solution, channels, mask, Split::default())
    }

    pub fn with_split(
        solution: &PrecoderSolution,
        channels: &ChannelSet,
        mask: BlockMask,
        split: Split,
    ) -> Result<Self> {
        let terms = SplitTerms::new(split, solution.num_delays(), mask);
        let mut pairs = Vec::with_capacity(solution.num_ues());
        for k in 0..solution.num_ues() {
            let mut row = Vec::with_capacity(solution.num_delays());
            for d in 0..solution.num_delays() {
                let blocks = SplitBlocks::build(solution, channels, k, d, mask, 1.0)?;
                row.push(
                    terms
                        .linear
                        .iter()
                        .map(|&(_, p)| Expansion::at(blocks.piece(p)))
                        .collect::<Result<_>>()?,
                );
            }
            pairs.push(row);
        }
        Ok(Self {
            solution: solution.clone(),
            mask,
            split,
            pairs,
        })
    }

    /// Anchor with every block free.
    pub fn full(solution: &PrecoderSolution, channels: &ChannelSet) -> Result<Self> {
        Self::new(solution, channels, BlockMask::ALL)
    }

    pub(crate) fn terms(&self) -> SplitTerms {
        SplitTerms::new(self.split, self.solution.num_delays(), self.mask)
    }
}

fn log2_det(m: &CMat) -> f64 {
    linalg::ln_det_psd(m) / LN_2
}

/// Weighted log-det sum; singular matrices with zero weight are skipped.
fn weighted_log2_det(terms: &[(f64, Piece)], blocks: &SplitBlocks) -> f64 {
    terms
        .iter()
        .filter(|(w, _)| *w != 0.0)
        .map(|&(w, p)| {
            let m = blocks.piece(p);
            if m.nrows() == 0 {
                0.0
            } else {
                w * log2_det(m)
            }
        })
        .sum()
}

/// Concave minorant `f̃_{k,d}(sol; anchor)` in bits. `-inf` outside the
/// domain (joint covariance not positive definite).
pub fn surrogate_rate(
    sol: &PrecoderSolution,
    anchor: &Anchor,
    channels: &ChannelSet,
    k: usize,
    d: usize,
) -> Result<f64> {
    if sol.num_delays() != anchor.solution.num_delays()
        || sol.num_ues() != anchor.solution.num_ues()
    {
        return Err(Error::DimensionMismatch(
            "solution and anchor layouts differ".into(),
        ));
    }
    let blocks = SplitBlocks::build(sol, channels, k, d, anchor.mask, 1.0)?;
    let terms = anchor.terms();
    let exact = weighted_log2_det(&terms.exact, &blocks);
    if exact.is_nan() {
        return Ok(f64::NEG_INFINITY);
    }
    let linear: f64 = terms
        .linear
        .iter()
        .zip(&anchor.pairs[k][d])
        .map(|(&(w, p), exp)| {
            if w == 0.0 {
                0.0
            } else {
                w * exp.phi(blocks.piece(p))
            }
        })
        .sum();
    Ok(exact + linear)
}

/// The rate evaluated through a log-det split, without linearizing.
/// Agrees with [`crate::rates::rate_f`] whenever every block is non-singular.
pub fn split_rate(
    sol: &PrecoderSolution,
    channels: &ChannelSet,
    k: usize,
    d: usize,
    mask: BlockMask,
    split: Split,
) -> Result<f64> {
    let blocks = SplitBlocks::build(sol, channels, k, d, mask, 1.0)?;
    let terms = SplitTerms::new(split, sol.num_delays(), mask);
    Ok(weighted_log2_det(&terms.exact, &blocks) + weighted_log2_det(&terms.linear, &blocks))
}
