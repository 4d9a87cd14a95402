//! Brute-force Gaussian mutual information.
//!
//! Mutual informations among jointly Gaussian blocks are assembled from
//! block differential entropies,
//! `I(A; B | C) = h(A, C) + h(B, C) − h(A, B, C) − h(C)`,
//! with rank-deficient blocks measured on their support through
//! pseudo-determinants. The joint covariance of `(v̄_k, x_{2,k}, y_{k,d})` is
//! built here from the linear map that generates `y_{k,d}` out of every UE's
//! transmit vector and the noise, not from the closed-form blocks in the
//! parent module, so the two routes can be checked against each other.

use std::f64::consts::{E, LN_2, PI};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{assemble_joint_covariance, ChannelSet, PrecoderSolution};

/// Index sets into a joint covariance: `I(first; second | given)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub given: Vec<usize>,
}

impl Partition {
    pub fn new(first: Vec<usize>, second: Vec<usize>) -> Self {
        Self {
            first,
            second,
            given: Vec::new(),
        }
    }

    pub fn conditioned_on(mut self, given: Vec<usize>) -> Self {
        self.given = given;
        self
    }

    fn validate(&self, dim: usize) -> Result<()> {
        if self.first.is_empty() || self.second.is_empty() {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        let mut seen = vec![false; dim];
        for &i in self.first.iter().chain(&self.second).chain(&self.given) {
            if i >= dim {
                return Err(Error::InvalidPartition(format!(
                    "index {i} out of range {dim}"
                )));
            }
            if seen[i] {
                return Err(Error::InvalidPartition(format!("index {i} used twice")));
            }
            seen[i] = true;
        }
        Ok(())
    }
}

/// Differential entropy in bits of the (possibly degenerate) Gaussian with
/// covariance `cov[idx, idx]`, measured on its support.
fn entropy_bits(cov: &CMat, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let sub = linalg::principal(cov, idx);
    let ev = linalg::eigenvalues(&sub);
    let top = ev.last().copied().unwrap_or(0.0);
    let cut = linalg::PINV_REL_TOL * top.max(1.0);
    let mut acc = 0.0;
    for e in ev {
        if e > cut {
            acc += (PI * E * e).ln();
        }
    }
    acc / LN_2
}

/// `I(first; second | given)` in bits for a jointly Gaussian vector with the
/// given Hermitian PSD covariance.
pub fn mi_gaussian_oracle(joint: &CMat, partition: &Partition) -> Result<f64> {
    if joint.nrows() != joint.ncols() {
        return Err(Error::DimensionMismatch(
            "joint covariance must be square".into(),
        ));
    }
    partition.validate(joint.nrows())?;
    let cat = |parts: &[&[usize]]| -> Vec<usize> {
        parts.iter().flat_map(|p| p.iter().copied()).collect()
    };
    let (a, b, c) = (
        &partition.first[..],
        &partition.second[..],
        &partition.given[..],
    );
    Ok(
        entropy_bits(joint, &cat(&[a, c])) + entropy_bits(joint, &cat(&[b, c]))
            - entropy_bits(joint, &cat(&[a, b, c]))
            - entropy_bits(joint, c),
    )
}

/// Joint covariance of `(v̄_k, x_{2,k}, y_{k,d})` and the index sets of its
/// components.
#[derive(Debug, Clone)]
pub struct PairJoint {
    pub cov: CMat,
    /// Indices of `v_{k,i}` for each slot `i` of the delay window.
    pub v_slots: Vec<Vec<usize>>,
    pub x2: Vec<usize>,
    pub y: Vec<usize>,
}

impl PairJoint {
    pub fn vbar(&self) -> Vec<usize> {
        self.v_slots.iter().flatten().copied().collect()
    }
}

/// Covariance of `(v̄_k, x_{2,k}, y_{k,d})` as `G W G†`, where `W` is the
/// block-diagonal covariance of every UE's `[v̄_l; x_{2,l}]` and the noise
/// and `G` stacks the selector for UE `k`'s transmit vector on top of the
/// receive map `y = H_1 Σ_l v_{l,d} + H_2 Σ_l x_{2,l} + z`.
pub fn pair_joint_covariance(
    sol: &PrecoderSolution,
    channels: &ChannelSet,
    k: usize,
    d: usize,
) -> Result<PairJoint> {
    let users = sol.num_ues();
    if k >= users || d >= sol.num_delays() || channels.num_ues() != users {
        return Err(Error::DimensionMismatch("pair index".into()));
    }
    let slots = sol.num_delays();
    let n1 = sol.v[0].nrows();
    let n2 = sol.sigma_x2[0].nrows();
    let per_user = slots * n1 + n2;
    let nu = channels.h1(k).nrows();
    let total = users * per_user + nu;

    let mut w = linalg::zeros(total, total);
    for l in 0..users {
        let blk = assemble_joint_covariance(sol, l)?;
        w.view_mut((l * per_user, l * per_user), (per_user, per_user))
            .copy_from(&blk);
    }
    w.view_mut((users * per_user, users * per_user), (nu, nu))
        .copy_from(&linalg::identity(nu));

    let out_dim = per_user + nu;
    let mut g = linalg::zeros(out_dim, total);
    for i in 0..per_user {
        g[(i, k * per_user + i)] = 1.0.into();
    }
    let h1 = channels.h1(k);
    let h2 = channels.h2(k);
    for l in 0..users {
        let v_col = l * per_user + d * n1;
        let x_col = l * per_user + slots * n1;
        g.view_mut((per_user, v_col), (nu, n1)).copy_from(h1);
        g.view_mut((per_user, x_col), (nu, n2)).copy_from(h2);
    }
    g.view_mut((per_user, users * per_user), (nu, nu))
        .copy_from(&linalg::identity(nu));

    let cov = linalg::hermitize(&(&g * w * g.adjoint()));
    Ok(PairJoint {
        cov,
        v_slots: (0..slots)
            .map(|i| (i * n1..(i + 1) * n1).collect())
            .collect(),
        x2: (slots * n1..per_user).collect(),
        y: (per_user..out_dim).collect(),
    })
}

/// Oracle value of `I(v_{k,d}; y_{k,d})`.
pub fn oracle_mi_direct(
    sol: &PrecoderSolution,
    channels: &ChannelSet,
    k: usize,
    d: usize,
) -> Result<f64> {
    let pj = pair_joint_covariance(sol, channels, k, d)?;
    mi_gaussian_oracle(
        &pj.cov,
        &Partition::new(pj.v_slots[d].clone(), pj.y.clone()),
    )
}

/// Oracle value of `I(x_{2,k}; y_{k,d} | v̄_k)`.
pub fn oracle_mi_conditional(
    sol: &PrecoderSolution,
    channels: &ChannelSet,
    k: usize,
    d: usize,
) -> Result<f64> {
    let pj = pair_joint_covariance(sol, channels, k, d)?;
    mi_gaussian_oracle(
        &pj.cov,
        &Partition::new(pj.x2.clone(), pj.y.clone()).conditioned_on(pj.vbar()),
    )
}

/// Oracle value of `f_{k,d}`.
pub fn oracle_rate(
    sol: &PrecoderSolution,
    channels: &ChannelSet,
    k: usize,
    d: usize,
) -> Result<f64> {
    Ok(oracle_mi_direct(sol, channels, k, d)? + oracle_mi_conditional(sol, channels, k, d)?)
}

/// `I([v_{k,d}; x_{2,k}]; y_{k,d})`, the joint-input rate; equals `f_{k,0}`
/// when the window has a single slot.
pub fn oracle_joint_input_rate(
    sol: &PrecoderSolution,
    channels: &ChannelSet,
    k: usize,
    d: usize,
) -> Result<f64> {
    let pj = pair_joint_covariance(sol, channels, k, d)?;
    let inputs: Vec<usize> = pj.v_slots[d].iter().chain(&pj.x2).copied().collect();
    mi_gaussian_oracle(&pj.cov, &Partition::new(inputs, pj.y.clone()))
}
