//! System model: configuration, channels, transmit correlation variables and
//! the per-UE joint covariance of the RRH 1 symbol window and the RRH 2 signal.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMat};

/// Default PSD slack used by feasibility checks.
pub const EPS_PSD: f64 = 1e-9;
/// Default power-budget slack used by feasibility checks.
pub const EPS_POW: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub num_ues: usize,
    pub antennas_rrh1: usize,
    pub antennas_rrh2: usize,
    /// Receive antennas per UE, length `num_ues`.
    pub antennas_ue: Vec<usize>,
    /// Worst-case delay `D`; the uncertainty set is `{0, 1, ..., D}`.
    pub worst_case_delay: usize,
    /// Linear power budget of RRH 1.
    pub power_rrh1: f64,
    /// Linear power budget of RRH 2.
    pub power_rrh2: f64,
    /// Phase offset in radians applied only when rates are evaluated.
    pub phase_offset_eval: f64,
}

impl SystemConfig {
    /// Symmetric setup: equal antennas per RRH, equal UE antennas, equal powers.
    pub fn symmetric(
        num_ues: usize,
        antennas_rrh: usize,
        antennas_ue: usize,
        worst_case_delay: usize,
        power: f64,
    ) -> Self {
        Self {
            num_ues,
            antennas_rrh1: antennas_rrh,
            antennas_rrh2: antennas_rrh,
            antennas_ue: vec![antennas_ue; num_ues],
            worst_case_delay,
            power_rrh1: power,
            power_rrh2: power,
            phase_offset_eval: 0.0,
        }
    }

    /// All-scalar links (one antenna everywhere).
    pub fn scalar(num_ues: usize, worst_case_delay: usize, power: f64) -> Self {
        Self::symmetric(num_ues, 1, 1, worst_case_delay, power)
    }

    pub fn with_delay(&self, worst_case_delay: usize) -> Self {
        Self {
            worst_case_delay,
            ..self.clone()
        }
    }

    /// Number of delay hypotheses, `D + 1`.
    pub fn num_delays(&self) -> usize {
        self.worst_case_delay + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_ues == 0 {
            return Err(Error::InvalidConfig("num_ues must be at least 1".into()));
        }
        if self.antennas_rrh1 == 0 || self.antennas_rrh2 == 0 {
            return Err(Error::InvalidConfig(
                "RRH antenna counts must be at least 1".into(),
            ));
        }
        if self.antennas_ue.len() != self.num_ues {
            return Err(Error::InvalidConfig(format!(
                "antennas_ue has {} entries for {} UEs",
                self.antennas_ue.len(),
                self.num_ues
            )));
        }
        if self.antennas_ue.contains(&0) {
            return Err(Error::InvalidConfig(
                "UE antenna counts must be at least 1".into(),
            ));
        }
        for (name, p) in [
            ("power_rrh1", self.power_rrh1),
            ("power_rrh2", self.power_rrh2),
        ] {
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "{name} must be finite and non-negative"
                )));
            }
        }
        if !self.phase_offset_eval.is_finite() {
            return Err(Error::InvalidConfig(
                "phase_offset_eval must be finite".into(),
            ));
        }
        Ok(())
    }
}

/// Flat-fading channel matrices `H_{k,1}` (RRH 1) and `H_{k,2}` (RRH 2) per UE.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    pub rrh1: Vec<CMat>,
    pub rrh2: Vec<CMat>,
}

impl ChannelSet {
    pub fn num_ues(&self) -> usize {
        self.rrh1.len()
    }

    pub fn h1(&self, k: usize) -> &CMat {
        &self.rrh1[k]
    }

    pub fn h2(&self, k: usize) -> &CMat {
        &self.rrh2[k]
    }

    /// Build from real scalar gains, one `(h1, h2)` pair per UE.
    pub fn from_scalars(gains: &[(f64, f64)]) -> Self {
        Self {
            rrh1: gains.iter().map(|g| linalg::scalar(g.0)).collect(),
            rrh2: gains.iter().map(|g| linalg::scalar(g.1)).collect(),
        }
    }

    pub fn check_shapes(&self, config: &SystemConfig) -> Result<()> {
        if self.rrh1.len() != config.num_ues || self.rrh2.len() != config.num_ues {
            return Err(Error::DimensionMismatch(format!(
                "channel set holds {} UEs, config has {}",
                self.rrh1.len(),
                config.num_ues
            )));
        }
        for k in 0..config.num_ues {
            let nu = config.antennas_ue[k];
            if self.rrh1[k].shape() != (nu, config.antennas_rrh1)
                || self.rrh2[k].shape() != (nu, config.antennas_rrh2)
            {
                return Err(Error::DimensionMismatch(format!(
                    "channel shapes of UE {k}"
                )));
            }
        }
        Ok(())
    }
}

/// Transmit correlation variables per UE: `V_k`, `Σ_{x2,k}` and `Ω_{k,d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSolution {
    pub v: Vec<CMat>,
    pub sigma_x2: Vec<CMat>,
    /// `omega[k][d]`, one `n_{R,1} × n_{R,2}` matrix per delay hypothesis.
    pub omega: Vec<Vec<CMat>>,
}

impl PrecoderSolution {
    pub fn zeros(config: &SystemConfig) -> Self {
        let (n1, n2) = (config.antennas_rrh1, config.antennas_rrh2);
        Self {
            v: vec![linalg::zeros(n1, n1); config.num_ues],
            sigma_x2: vec![linalg::zeros(n2, n2); config.num_ues],
            omega: vec![vec![linalg::zeros(n1, n2); config.num_delays()]; config.num_ues],
        }
    }

    /// Scalar single-antenna solution with real entries; `omega[k]` holds one
    /// value per delay.
    pub fn from_scalars(v: &[f64], sigma_x2: &[f64], omega: &[Vec<f64>]) -> Self {
        Self {
            v: v.iter().map(|&x| linalg::scalar(x)).collect(),
            sigma_x2: sigma_x2.iter().map(|&x| linalg::scalar(x)).collect(),
            omega: omega
                .iter()
                .map(|row| row.iter().map(|&x| linalg::scalar(x)).collect())
                .collect(),
        }
    }

    pub fn num_ues(&self) -> usize {
        self.v.len()
    }

    pub fn num_delays(&self) -> usize {
        self.omega.first().map_or(0, Vec::len)
    }

    pub fn check_shapes(&self, config: &SystemConfig) -> Result<()> {
        let (n1, n2) = (config.antennas_rrh1, config.antennas_rrh2);
        let ok = self.v.len() == config.num_ues
            && self.sigma_x2.len() == config.num_ues
            && self.omega.len() == config.num_ues
            && self.v.iter().all(|m| m.shape() == (n1, n1))
            && self.sigma_x2.iter().all(|m| m.shape() == (n2, n2))
            && self.omega.iter().all(|row| {
                row.len() == config.num_delays() && row.iter().all(|m| m.shape() == (n1, n2))
            });
        if ok {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(
                "precoder solution does not match configuration".into(),
            ))
        }
    }

    /// Every block multiplied by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        self.combine(self, |a, _| a.scale(alpha))
    }

    /// `(1 − t)·self + t·other`.
    pub fn lerp(&self, other: &Self, t: f64) -> Self {
        self.combine(other, |a, b| a.scale(1.0 - t) + b.scale(t))
    }

    fn combine(&self, other: &Self, f: impl Fn(&CMat, &CMat) -> CMat) -> Self {
        Self {
            v: self.v.iter().zip(&other.v).map(|(a, b)| f(a, b)).collect(),
            sigma_x2: self
                .sigma_x2
                .iter()
                .zip(&other.sigma_x2)
                .map(|(a, b)| f(a, b))
                .collect(),
            omega: self
                .omega
                .iter()
                .zip(&other.omega)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| f(a, b)).collect())
                .collect(),
        }
    }

    pub fn power_rrh1(&self) -> f64 {
        self.v.iter().map(linalg::real_trace).sum()
    }

    pub fn power_rrh2(&self) -> f64 {
        self.sigma_x2.iter().map(linalg::real_trace).sum()
    }
}

/// Per-(UE, delay) rates plus worst-case aggregates, in bits per channel use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    pub per_pair: Vec<Vec<f64>>,
    pub per_ue: Vec<f64>,
    pub min_rate: f64,
}

impl RateReport {
    pub fn from_pairs(per_pair: Vec<Vec<f64>>) -> Self {
        let per_ue: Vec<f64> = per_pair
            .iter()
            .map(|row| row.iter().copied().fold(f64::INFINITY, f64::min))
            .collect();
        let min_rate = per_ue.iter().copied().fold(f64::INFINITY, f64::min);
        Self {
            per_pair,
            per_ue,
            min_rate,
        }
    }

    /// Delay index attaining the minimum rate of the worst UE.
    pub fn argmin_delay(&self) -> usize {
        let mut best = (f64::INFINITY, 0);
        for row in &self.per_pair {
            for (d, &r) in row.iter().enumerate() {
                if r < best.0 {
                    best = (r, d);
                }
            }
        }
        best.1
    }
}

/// I.i.d. `CN(0, 1)` channel entries, deterministic in `seed`.
pub fn sample_channels(config: &SystemConfig, seed: u64) -> ChannelSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |rows: usize, cols: usize| {
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        CMat::from_fn(rows, cols, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * scale, im * scale)
        })
    };
    let mut rrh1 = Vec::with_capacity(config.num_ues);
    let mut rrh2 = Vec::with_capacity(config.num_ues);
    for k in 0..config.num_ues {
        let nu = config.antennas_ue[k];
        rrh1.push(draw(nu, config.antennas_rrh1));
        rrh2.push(draw(nu, config.antennas_rrh2));
    }
    ChannelSet { rrh1, rrh2 }
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re, im)
    })
}

/// Random strictly feasible solution, deterministic in `seed`.
///
/// Each RRH spends a random 30–95 % of its budget. Correlations are
/// `Ω_{k,d} = L_V K_d L_Σ†` with Cholesky factors `L` and contractions `K_d`
/// whose total Frobenius norm stays below one, which keeps every joint
/// covariance positive definite.
pub fn sample_solution(config: &SystemConfig, seed: u64) -> PrecoderSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n1, n2, users, slots) = (
        config.antennas_rrh1,
        config.antennas_rrh2,
        config.num_ues,
        config.num_delays(),
    );
    let psd = |rng: &mut ChaCha8Rng, n: usize| {
        let g = gaussian_matrix(rng, n, n);
        linalg::hermitize(&(&g * g.adjoint() + linalg::identity(n).scale(0.1)))
    };
    let mut v: Vec<CMat> = (0..users).map(|_| psd(&mut rng, n1)).collect();
    let mut sigma_x2: Vec<CMat> = (0..users).map(|_| psd(&mut rng, n2)).collect();
    for (blocks, budget) in [
        (&mut v, config.power_rrh1),
        (&mut sigma_x2, config.power_rrh2),
    ] {
        let used: f64 = blocks.iter().map(linalg::real_trace).sum();
        let share: f64 = rng.random_range(0.3..0.95);
        blocks
            .iter_mut()
            .for_each(|b| *b = b.scale(share * budget / used));
    }
    let mut omega = Vec::with_capacity(users);
    for k in 0..users {
        let (Some(lv), Some(ls)) = (
            linalg::cholesky_pd(&v[k]),
            linalg::cholesky_pd(&sigma_x2[k]),
        ) else {
            omega.push(vec![linalg::zeros(n1, n2); slots]);
            continue;
        };
        let ks: Vec<CMat> = (0..slots)
            .map(|_| gaussian_matrix(&mut rng, n1, n2))
            .collect();
        let total = ks.iter().map(|m| m.norm_squared()).sum::<f64>().sqrt();
        let rho: f64 = rng.random_range(0.0..0.95);
        omega.push(
            ks.iter()
                .map(|m| lv.l() * m.scale(rho / total) * ls.l().adjoint())
                .collect(),
        );
    }
    PrecoderSolution { v, sigma_x2, omega }
}

/// Joint covariance of `[v̄_k; x_{2,k}]`: block-diagonal copies of `V_k` over
/// the delay window, the stacked `Ω_{k,d}` as off-diagonal block, and `Σ_{x2,k}`.
pub fn assemble_joint_covariance(sol: &PrecoderSolution, k: usize) -> Result<CMat> {
    if k >= sol.num_ues() {
        return Err(Error::DimensionMismatch(format!(
            "UE index {k} out of range"
        )));
    }
    let v = &sol.v[k];
    let s = &sol.sigma_x2[k];
    let n1 = v.nrows();
    let n2 = s.nrows();
    if v.ncols() != n1 || s.ncols() != n2 || sol.omega[k].iter().any(|o| o.shape() != (n1, n2)) {
        return Err(Error::DimensionMismatch(format!("blocks of UE {k}")));
    }
    let slots = sol.omega[k].len();
    let vbar = linalg::block_diag_repeat(v, slots);
    let omega_bar = linalg::vstack(&sol.omega[k], n2);
    let joint = linalg::block(&[
        vec![vbar, omega_bar.clone()],
        vec![omega_bar.adjoint(), s.clone()],
    ]);
    Ok(linalg::hermitize(&joint))
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    PowerRrh1 { excess: f64 },
    PowerRrh2 { excess: f64 },
    JointCovariance { ue: usize, min_eigenvalue: f64 },
    Shape(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// Power budgets and PSD-ness of every joint covariance, each within `tol`.
pub fn check_feasibility(sol: &PrecoderSolution, config: &SystemConfig, tol: f64) -> Feasibility {
    let mut violations = Vec::new();
    if let Err(e) = sol.check_shapes(config) {
        violations.push(Violation::Shape(e.to_string()));
        return Feasibility {
            feasible: false,
            violations,
        };
    }
    let p1 = sol.power_rrh1() - config.power_rrh1;
    if p1 > tol {
        violations.push(Violation::PowerRrh1 { excess: p1 });
    }
    let p2 = sol.power_rrh2() - config.power_rrh2;
    if p2 > tol {
        violations.push(Violation::PowerRrh2 { excess: p2 });
    }
    for k in 0..config.num_ues {
        match assemble_joint_covariance(sol, k) {
            Ok(joint) => {
                let ev = linalg::min_eigenvalue(&joint);
                if ev < -tol {
                    violations.push(Violation::JointCovariance {
                        ue: k,
                        min_eigenvalue: ev,
                    });
                }
            }
            Err(e) => violations.push(Violation::Shape(e.to_string())),
        }
    }
    Feasibility {
        feasible: violations.is_empty(),
        violations,
    }
}

/// Rotates every `H_{k,1}` by `e^{jθ}`; `H_{k,2}` is left untouched.
pub fn apply_phase_offset(channels: &ChannelSet, theta: f64) -> ChannelSet {
    let rot = Complex64::from_polar(1.0, theta);
    ChannelSet {
        rrh1: channels.rrh1.iter().map(|h| h.map(|z| z * rot)).collect(),
        rrh2: channels.rrh2.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn re_grid(m: &CMat) -> Vec<f64> {
        (0..m.nrows())
            .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
            .map(|ij| m[ij].re)
            .collect()
    }

    #[test]
    fn sampling_is_deterministic() {
        let cfg = SystemConfig::symmetric(3, 2, 2, 1, 1.0);
        assert_eq!(sample_channels(&cfg, 7), sample_channels(&cfg, 7));
        assert_ne!(sample_channels(&cfg, 7), sample_channels(&cfg, 8));
    }

    #[test]
    fn sampling_has_unit_variance() {
        // 10^5 scalar entries; the std of |h|^2 for CN(0,1) is 1, so 3σ ≈ 0.0095.
        let cfg = SystemConfig::symmetric(1, 250, 200, 1, 1.0);
        let ch = sample_channels(&cfg, 11);
        let mut sum = 0.0;
        let mut n = 0usize;
        for m in ch.rrh1.iter().chain(&ch.rrh2) {
            for z in m.iter() {
                sum += z.norm_sqr();
                n += 1;
            }
        }
        assert_eq!(n, 100_000);
        let mean = sum / n as f64;
        assert!((0.98..=1.02).contains(&mean), "mean |h|^2 = {mean}");
    }

    #[test]
    fn fig2_dimensions_give_four_scalars() {
        let cfg = SystemConfig::scalar(2, 1, 10.0);
        let ch = sample_channels(&cfg, 1);
        let count: usize = ch.rrh1.iter().chain(&ch.rrh2).map(|m| m.len()).sum();
        assert_eq!(count, 4);
        ch.check_shapes(&cfg).unwrap();
    }

    #[test]
    fn joint_covariance_d0() {
        let sol = PrecoderSolution::from_scalars(&[1.0], &[1.0], &[vec![1.0]]);
        let j = assemble_joint_covariance(&sol, 0).unwrap();
        assert_eq!(re_grid(&j), vec![1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn joint_covariance_d1_layout() {
        let sol = PrecoderSolution::from_scalars(&[2.0], &[3.0], &[vec![1.0, 0.0]]);
        let j = assemble_joint_covariance(&sol, 0).unwrap();
        assert_eq!(
            re_grid(&j),
            vec![2.0, 0.0, 1.0, 0.0, 2.0, 0.0, 1.0, 0.0, 3.0]
        );
        assert_eq!(j.clone(), j.adjoint());
    }

    #[test]
    fn joint_covariance_rejects_bad_shapes() {
        let mut sol = PrecoderSolution::from_scalars(&[1.0], &[1.0], &[vec![1.0]]);
        sol.omega[0][0] = linalg::zeros(2, 1);
        assert!(matches!(
            assemble_joint_covariance(&sol, 0),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(assemble_joint_covariance(&sol, 3).is_err());
    }

    #[test]
    fn zero_solution_is_feasible() {
        let cfg = SystemConfig::symmetric(2, 2, 1, 2, 0.0);
        assert!(check_feasibility(&PrecoderSolution::zeros(&cfg), &cfg, 0.0).feasible);
    }

    #[test]
    fn over_correlated_is_infeasible() {
        let cfg = SystemConfig::scalar(1, 0, 5.0);
        let sol = PrecoderSolution::from_scalars(&[1.0], &[1.0], &[vec![2.0]]);
        let f = check_feasibility(&sol, &cfg, EPS_PSD);
        assert!(!f.feasible);
        match f.violations.as_slice() {
            [Violation::JointCovariance {
                ue: 0,
                min_eigenvalue,
            }] => {
                assert!((min_eigenvalue + 1.0).abs() < 1e-12)
            }
            other => panic!("unexpected violations {other:?}"),
        }
    }

    #[test]
    fn tight_budgets_are_feasible_at_zero_tolerance() {
        let mut cfg = SystemConfig::scalar(2, 1, 0.0);
        cfg.power_rrh1 = 3.0;
        cfg.power_rrh2 = 5.0;
        let sol = PrecoderSolution::from_scalars(
            &[1.0, 2.0],
            &[4.0, 1.0],
            &[vec![0.0, 0.0], vec![0.0, 0.0]],
        );
        assert!(check_feasibility(&sol, &cfg, 0.0).feasible);
        cfg.power_rrh2 = 4.5;
        let f = check_feasibility(&sol, &cfg, 0.0);
        assert_eq!(f.violations, vec![Violation::PowerRrh2 { excess: 0.5 }]);
    }

    #[test]
    fn phase_offset_rotates_rrh1_only() {
        let ch = ChannelSet::from_scalars(&[(1.0, 2.0)]);
        assert_eq!(apply_phase_offset(&ch, 0.0), ch);
        let flipped = apply_phase_offset(&ch, PI);
        assert!((flipped.h1(0)[(0, 0)] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
        assert_eq!(flipped.h2(0), ch.h2(0));

        let cfg = SystemConfig::symmetric(2, 2, 2, 1, 1.0);
        let ch = sample_channels(&cfg, 3);
        let twice = apply_phase_offset(&apply_phase_offset(&ch, PI / 2.0), PI / 2.0);
        let once = apply_phase_offset(&ch, PI);
        for (a, b) in twice.rrh1.iter().zip(&once.rrh1) {
            assert!(linalg::max_abs(&(a - b)) < 1e-14);
        }
    }

    #[test]
    fn sampled_solutions_are_strictly_feasible() {
        for seed in 0..20 {
            let cfg = SystemConfig::symmetric(2, 2, 1, (seed % 3) as usize, 3.0);
            let sol = sample_solution(&cfg, seed);
            sol.check_shapes(&cfg).unwrap();
            assert!(sol.power_rrh1() < 3.0 && sol.power_rrh2() < 3.0);
            for k in 0..2 {
                assert!(linalg::min_eigenvalue(&assemble_joint_covariance(&sol, k).unwrap()) > 0.0);
            }
        }
        assert_eq!(
            sample_solution(&SystemConfig::scalar(1, 1, 1.0), 5),
            sample_solution(&SystemConfig::scalar(1, 1, 1.0), 5)
        );
    }
}
