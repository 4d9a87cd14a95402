//! Achievable rates of the robust asynchronous scheme.
//!
//! For UE `k` and delay hypothesis `d` the rate is
//! `f_{k,d} = I(v_{k,d}; y_{k,d}) + I(x_{2,k}; y_{k,d} | v̄_k)` and the
//! per-UE rate is the minimum over `d`. Both mutual informations are
//! evaluated as differences of log-determinants of conditional covariances
//! of `y`, each of which dominates the noise covariance. Only `V_k` is ever
//! inverted (as an eigenvalue-thresholded pseudo-inverse), so the rates stay
//! accurate on the PSD boundary where the optimizer tends to land. The block matrices of the
//! log-det form (`Σ_y`, `A`, `B`, `C`, `D`, selectors) are built by
//! [`PairContext`] and reused by the surrogate.

pub mod oracle;

use std::f64::consts::LN_2;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::model::{ChannelSet, PrecoderSolution, RateReport, SystemConfig};

/// Block matrices for one `(k, d)` pair.
///
/// Joint order inside `b_mat` is `(x_{2,k}, y_{k,d}, v̄_k)`.
#[derive(Debug, Clone)]
pub struct PairContext {
    pub k: usize,
    pub d: usize,
    /// Signal part of the received covariance.
    pub sigma_y: CMat,
    /// `sigma_y + I`.
    pub cov_y: CMat,
    /// Covariance of `(v_{k,d}, y_{k,d})`.
    pub a_mat: CMat,
    /// Covariance of `(x_{2,k}, y_{k,d}, v̄_k)`.
    pub b_mat: CMat,
    /// `Cov(y, x_2) = H_1 Ω_d + H_2 Σ_{x2}`.
    pub c_mat: CMat,
    /// `Cov(v̄, y)`, stacked over the delay window.
    pub d_mat: CMat,
    pub t1: CMat,
    pub t2: CMat,
    pub d_sel: CMat,
}

impl PairContext {
    pub fn new(sol: &PrecoderSolution, channels: &ChannelSet, k: usize, d: usize) -> Result<Self> {
        Self::with_noise(sol, channels, k, d, 1.0)
    }

    /// Same as [`PairContext::new`] with the receiver noise covariance scaled
    /// by `noise`. With `noise = 0` every matrix is linear in `sol`.
    pub(crate) fn with_noise(
        sol: &PrecoderSolution,
        channels: &ChannelSet,
        k: usize,
        d: usize,
        noise: f64,
    ) -> Result<Self> {
        check_pair(sol, channels, k, d)?;
        let h1 = channels.h1(k);
        let h2 = channels.h2(k);
        let v = &sol.v[k];
        let s = &sol.sigma_x2[k];
        let slots = sol.num_delays();
        let n1 = v.nrows();
        let n2 = s.nrows();
        let nu = h1.nrows();

        let sigma_y = signal_covariance(sol, channels, k, d);
        let cov_y = &sigma_y + linalg::identity(nu).scale(noise);

        let cross_vy = v * h1.adjoint() + &sol.omega[k][d] * h2.adjoint();
        let a_mat = linalg::hermitize(&linalg::block(&[
            vec![v.clone(), cross_vy.clone()],
            vec![cross_vy.adjoint(), cov_y.clone()],
        ]));

        let c_mat = h1 * &sol.omega[k][d] + h2 * s;
        let d_blocks: Vec<CMat> = (0..slots)
            .map(|i| {
                let mut blk = (h2 * sol.omega[k][i].adjoint()).adjoint();
                if i == d {
                    blk += v * h1.adjoint();
                }
                blk
            })
            .collect();
        let d_mat = linalg::vstack(&d_blocks, nu);
        let omega_bar = linalg::vstack(&sol.omega[k], n2);
        let vbar = linalg::block_diag_repeat(v, slots);
        let b_mat = linalg::hermitize(&linalg::block(&[
            vec![s.clone(), c_mat.adjoint(), omega_bar.adjoint()],
            vec![c_mat.clone(), cov_y.clone(), d_mat.adjoint()],
            vec![omega_bar, d_mat.clone(), vbar],
        ]));

        let win = slots * n1;
        let t1 = linalg::block(&[vec![
            linalg::zeros(nu + win, n2),
            linalg::identity(nu + win),
        ]]);
        let t2 = linalg::block(&[
            vec![
                linalg::identity(n2),
                linalg::zeros(n2, nu),
                linalg::zeros(n2, win),
            ],
            vec![
                linalg::zeros(win, n2),
                linalg::zeros(win, nu),
                linalg::identity(win),
            ],
        ]);
        let d_sel = linalg::block(&[vec![
            linalg::zeros(n1, d * n1),
            linalg::identity(n1),
            linalg::zeros(n1, (slots - 1 - d) * n1),
        ]]);

        Ok(Self {
            k,
            d,
            sigma_y,
            cov_y,
            a_mat,
            b_mat,
            c_mat,
            d_mat,
            t1,
            t2,
            d_sel,
        })
    }

    /// `T_1 B T_1†`: covariance of `(y, v̄)`.
    pub fn t1_b_t1(&self) -> CMat {
        linalg::hermitize(&(&self.t1 * &self.b_mat * self.t1.adjoint()))
    }

    /// `T_2 B T_2†`: covariance of `(x_2, v̄)`.
    pub fn t2_b_t2(&self) -> CMat {
        linalg::hermitize(&(&self.t2 * &self.b_mat * self.t2.adjoint()))
    }
}

fn check_pair(sol: &PrecoderSolution, channels: &ChannelSet, k: usize, d: usize) -> Result<()> {
    if k >= sol.num_ues() || k >= channels.num_ues() || sol.num_ues() != channels.num_ues() {
        return Err(Error::DimensionMismatch(format!(
            "UE index {k} / UE counts"
        )));
    }
    if d >= sol.num_delays() {
        return Err(Error::DimensionMismatch(format!(
            "delay {d} outside window of {}",
            sol.num_delays()
        )));
    }
    for l in 0..sol.num_ues() {
        let (h1, h2) = (channels.h1(l), channels.h2(l));
        if h1.ncols() != sol.v[l].nrows()
            || h2.ncols() != sol.sigma_x2[l].nrows()
            || h1.nrows() != h2.nrows()
            || sol.omega[l].len() != sol.num_delays()
        {
            return Err(Error::DimensionMismatch(format!(
                "channel/solution shapes for UE {l}"
            )));
        }
    }
    Ok(())
}

fn signal_covariance(sol: &PrecoderSolution, channels: &ChannelSet, k: usize, d: usize) -> CMat {
    let h1 = channels.h1(k);
    let h2 = channels.h2(k);
    let nu = h1.nrows();
    let mut acc = linalg::zeros(nu, nu);
    for l in 0..sol.num_ues() {
        acc += h1 * &sol.v[l] * h1.adjoint();
        acc += h2 * &sol.sigma_x2[l] * h2.adjoint();
        let cross = h1 * &sol.omega[l][d] * h2.adjoint();
        acc += &cross + cross.adjoint();
    }
    linalg::hermitize(&acc)
}

/// Covariance of `y_{k,d}` including the unit-variance noise.
pub fn received_covariance(
    sol: &PrecoderSolution,
    channels: &ChannelSet,
    k: usize,
    d: usize,
) -> Result<CMat> {
    check_pair(sol, channels, k, d)?;
    let nu = channels.h1(k).nrows();
    Ok(signal_covariance(sol, channels, k, d) + linalg::identity(nu))
}

fn log2_det(m: &CMat) -> f64 {
    linalg::ln_det_psd(m) / LN_2
}

/// `I(v_{k,d}; y_{k,d})` in bits.
pub fn mi_direct(sol: &PrecoderSolution, channels: &ChannelSet, k: usize, d: usize) -> Result<f64> {
    let cov_y = received_covariance(sol, channels, k, d)?;
    let v = &sol.v[k];
    let s = channels.h1(k) * v + channels.h2(k) * sol.omega[k][d].adjoint();
    let vinv = linalg::pinv_hermitian(v, linalg::PINV_REL_TOL);
    let cond = linalg::hermitize(&(&cov_y - &s * vinv * s.adjoint()));
    Ok(log2_det(&cov_y) - log2_det(&cond))
}

/// `I(x_{2,k}; y_{k,d} | v̄_k)` in bits.
///
/// UE `k`'s own signal is a linear function of `(x_2, v̄)`, so conditioning
/// on both leaves the interference-plus-noise covariance. The window
/// samples of `v̄` are independent, so `Cov(y | v̄)` only needs `V⁺`. Both
/// conditional covariances dominate `I` and stay well conditioned even when
/// the joint covariance of `(x_2, v̄)` is singular.
pub fn mi_conditional(
    sol: &PrecoderSolution,
    channels: &ChannelSet,
    k: usize,
    d: usize,
) -> Result<f64> {
    let cov_y = received_covariance(sol, channels, k, d)?;
    let (h1, h2) = (channels.h1(k), channels.h2(k));
    let v = &sol.v[k];
    let vinv = linalg::pinv_hermitian(v, linalg::PINV_REL_TOL);
    let mut y_given_v = cov_y.clone();
    for (i, om) in sol.omega[k].iter().enumerate() {
        // Cov(y, v_i)
        let mut s = h2 * om.adjoint();
        if i == d {
            s += h1 * v;
        }
        y_given_v -= &s * &vinv * s.adjoint();
    }
    let cross = h1 * &sol.omega[k][d] * h2.adjoint();
    let own =
        h1 * v * h1.adjoint() + h2 * &sol.sigma_x2[k] * h2.adjoint() + &cross + cross.adjoint();
    let noise_plus_interference = linalg::hermitize(&(&cov_y - own));
    Ok(log2_det(&linalg::hermitize(&y_given_v)) - log2_det(&noise_plus_interference))
}

/// `f_{k,d}` in bits.
pub fn rate_f(sol: &PrecoderSolution, channels: &ChannelSet, k: usize, d: usize) -> Result<f64> {
    Ok(mi_direct(sol, channels, k, d)? + mi_conditional(sol, channels, k, d)?)
}

/// Rates for every UE and every delay hypothesis carried by `sol`.
pub fn worst_case_rates(
    sol: &PrecoderSolution,
    channels: &ChannelSet,
    config: &SystemConfig,
) -> Result<RateReport> {
    channels.check_shapes(config)?;
    if sol.num_ues() != config.num_ues {
        return Err(Error::DimensionMismatch("solution UE count".into()));
    }
    let per_pair = (0..config.num_ues)
        .map(|k| {
            (0..sol.num_delays())
                .map(|d| rate_f(sol, channels, k, d))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RateReport::from_pairs(per_pair))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{apply_phase_offset, sample_channels};
    use approx::assert_abs_diff_eq;

    fn unit() -> ChannelSet {
        ChannelSet::from_scalars(&[(1.0, 1.0)])
    }

    fn scalar_sol(v: f64, s: f64, omega: &[f64]) -> PrecoderSolution {
        PrecoderSolution::from_scalars(&[v], &[s], &[omega.to_vec()])
    }

    #[test]
    fn received_covariance_examples() {
        let c = received_covariance(&scalar_sol(1.0, 1.0, &[1.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(c[(0, 0)].re, 5.0, epsilon = 1e-15);
        let c = received_covariance(&scalar_sol(0.0, 0.0, &[0.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(c[(0, 0)].re, 1.0, epsilon = 1e-15);
        let sol = scalar_sol(0.7, 1.9, &[0.0, 0.0]);
        for d in 0..2 {
            let c = received_covariance(&sol, &unit(), 0, d).unwrap();
            assert_abs_diff_eq!(c[(0, 0)].re, 3.6, epsilon = 1e-14);
        }
    }

    #[test]
    fn covariance_has_noise_floor() {
        let cfg = SystemConfig::symmetric(2, 2, 2, 1, 3.0);
        let ch = sample_channels(&cfg, 5);
        let sol = crate::cccp::initialize(&cfg, &crate::cccp::Scheme::Robust);
        for k in 0..2 {
            let ctx = PairContext::new(&sol, &ch, k, 1).unwrap();
            assert_eq!(&ctx.cov_y - &ctx.sigma_y, linalg::identity(2));
            assert!(linalg::min_eigenvalue(&ctx.cov_y) >= 1.0 - 1e-9);
        }
    }

    #[test]
    fn mi_direct_examples() {
        let r = mi_direct(&scalar_sol(1.0, 1.0, &[1.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(r, 5f64.log2(), epsilon = 1e-12);
        let r = mi_direct(&scalar_sol(0.0, 1.0, &[0.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
        let r = mi_direct(&scalar_sol(1.0, 1.0, &[0.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(r, 1.5f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn mi_conditional_examples() {
        // x2 is a deterministic function of the RRH 1 window.
        let r = mi_conditional(&scalar_sol(2.0, 3.0, &[6f64.sqrt()]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-9);
        let w = (2.0 * 3.0 / 2.0f64).sqrt();
        for d in 0..2 {
            let r = mi_conditional(&scalar_sol(2.0, 3.0, &[w, w]), &unit(), 0, d).unwrap();
            assert_abs_diff_eq!(r, 0.0, epsilon = 1e-8);
        }
        let r = mi_conditional(&scalar_sol(1.0, 1.0, &[0.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
        let r = mi_conditional(&scalar_sol(1.0, 0.0, &[0.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rate_examples() {
        let r = rate_f(&scalar_sol(1.0, 1.0, &[1.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(
            r,
            (1.0f64 + (1.0 + 1.0) * (1.0 + 1.0)).log2(),
            epsilon = 1e-9
        );
        let r = rate_f(&scalar_sol(1.0, 1.0, &[0.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(r, 3f64.log2(), epsilon = 1e-12);
        let r = rate_f(&scalar_sol(0.0, 0.0, &[0.0]), &unit(), 0, 0).unwrap();
        assert_abs_diff_eq!(r, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn worst_case_over_two_delays() {
        let cfg = SystemConfig::scalar(1, 1, 1.0);
        let sol = scalar_sol(1.0, 1.0, &[1.0, 0.0]);
        let rep = worst_case_rates(&sol, &unit(), &cfg).unwrap();
        assert_abs_diff_eq!(rep.per_pair[0][0], 5f64.log2(), epsilon = 1e-9);
        // At d = 1 the RRH 2 signal is a copy of v_0: pure interference for v_1.
        let oracle_d1 = oracle::oracle_rate(&sol, &unit(), 0, 1).unwrap();
        assert_abs_diff_eq!(rep.per_pair[0][1], oracle_d1, epsilon = 1e-9);
        assert_abs_diff_eq!(oracle_d1, 1.5f64.log2(), epsilon = 1e-9);
        assert_eq!(rep.per_ue[0], rep.per_pair[0][1]);
        assert_eq!(rep.min_rate, rep.per_pair[0][1]);
        assert_eq!(rep.argmin_delay(), 1);
    }

    #[test]
    fn independent_signals_are_delay_and_phase_invariant() {
        let cfg = SystemConfig::symmetric(2, 2, 2, 2, 4.0);
        let ch = sample_channels(&cfg, 9);
        let sol = crate::cccp::initialize(&cfg, &crate::cccp::Scheme::NonCooperative);
        let rep = worst_case_rates(&sol, &ch, &cfg).unwrap();
        for row in &rep.per_pair {
            let hi = row.iter().copied().fold(f64::MIN, f64::max);
            let lo = row.iter().copied().fold(f64::MAX, f64::min);
            assert!(hi - lo < 1e-9);
        }
        let rotated = worst_case_rates(&sol, &apply_phase_offset(&ch, 1.1), &cfg).unwrap();
        assert_abs_diff_eq!(rotated.min_rate, rep.min_rate, epsilon = 1e-9);
    }

    #[test]
    fn selectors_are_zero_one_with_single_one_per_row() {
        let sol = scalar_sol(1.0, 1.0, &[0.5, 0.2, 0.1]);
        let ctx = PairContext::new(&sol, &unit(), 0, 1).unwrap();
        for sel in [&ctx.t1, &ctx.t2, &ctx.d_sel] {
            for r in 0..sel.nrows() {
                let row: Vec<f64> = (0..sel.ncols()).map(|c| sel[(r, c)].re).collect();
                assert!(row.iter().all(|&x| x == 0.0 || x == 1.0));
                assert_eq!(row.iter().filter(|&&x| x == 1.0).count(), 1);
            }
        }
        assert_eq!(ctx.d_sel.ncols(), 3);
        assert_eq!(ctx.d_sel[(0, 1)].re, 1.0);
    }

    #[test]
    fn shape_errors_surface() {
        let sol = scalar_sol(1.0, 1.0, &[0.0]);
        assert!(rate_f(&sol, &unit(), 0, 1).is_err());
        assert!(rate_f(&sol, &unit(), 1, 0).is_err());
    }
}
