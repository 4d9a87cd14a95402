//! Quick invariant checks on random instances, run by the `selftest` command.

use crate::cccp::{run_cccp, run_scheme_suite, CccpOptions, Scheme};
use crate::error::Result;
use crate::model::{sample_channels, sample_solution, SystemConfig};
use crate::rates::oracle::{oracle_mi_conditional, oracle_mi_direct};
use crate::rates::{mi_conditional, mi_direct, rate_f, worst_case_rates};
use crate::surrogate::{surrogate_rate, Anchor};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: Result<f64>, limit: f64) -> Check {
    match worst {
        Ok(w) => Check {
            name,
            passed: w <= limit,
            detail: format!("worst {w:.3e} (limit {limit:.0e})"),
        },
        Err(e) => Check {
            name,
            passed: false,
            detail: e.to_string(),
        },
    }
}

fn small_config(i: u64) -> SystemConfig {
    let users = 1 + (i % 2) as usize;
    let ants = 1 + ((i / 2) % 2) as usize;
    SystemConfig::symmetric(
        users,
        ants,
        1 + ((i / 4) % 2) as usize,
        (i % 3) as usize,
        0.5 + (i % 5) as f64,
    )
}

fn oracle_gap(instances: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..instances {
        let cfg = small_config(i);
        let sol = sample_solution(&cfg, 1000 + i);
        let ch = sample_channels(&cfg, 2000 + i);
        for k in 0..cfg.num_ues {
            for d in 0..cfg.num_delays() {
                worst = worst
                    .max((mi_direct(&sol, &ch, k, d)? - oracle_mi_direct(&sol, &ch, k, d)?).abs());
                worst = worst.max(
                    (mi_conditional(&sol, &ch, k, d)? - oracle_mi_conditional(&sol, &ch, k, d)?)
                        .abs(),
                );
            }
        }
    }
    Ok(worst)
}

fn minorization_gap(pairs: u64) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for i in 0..pairs {
        let cfg = small_config(i);
        let ch = sample_channels(&cfg, 3000 + i);
        let sol = sample_solution(&cfg, 4000 + i);
        let anchor_sol = sample_solution(&cfg, 5000 + i);
        let anchor = Anchor::full(&anchor_sol, &ch)?;
        let at_anchor = Anchor::full(&sol, &ch)?;
        for k in 0..cfg.num_ues {
            for d in 0..cfg.num_delays() {
                let f = rate_f(&sol, &ch, k, d)?;
                worst = worst.max(surrogate_rate(&sol, &anchor, &ch, k, d)? - f);
                worst = worst.max((surrogate_rate(&sol, &at_anchor, &ch, k, d)? - f).abs());
            }
        }
    }
    Ok(worst.max(0.0))
}

fn monotonicity_drop(instances: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..instances {
        let cfg = SystemConfig::scalar(2, 1 + (i % 2) as usize, 10.0);
        let ch = sample_channels(&cfg, 6000 + i);
        let trace = run_cccp(&cfg, &ch, &Scheme::Robust, &CccpOptions::default())?;
        for w in trace.objective.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    Ok(worst)
}

fn ordering_violation(trials: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..trials {
        let cfg = SystemConfig::scalar(2, 1, 10.0);
        let ch = sample_channels(&cfg, 7000 + i);
        let suite = run_scheme_suite(&cfg, &ch, &CccpOptions::default(), None);
        let rate = |s: Scheme| {
            suite
                .min_rate(&s)
                .ok_or_else(|| crate::Error::Solver(format!("{s} failed")))
        };
        let chain = [
            rate(Scheme::TxSelection)?,
            rate(Scheme::NonCooperative)?,
            rate(Scheme::Robust)?,
            rate(Scheme::SyncGenie { known_delay: 0 })?,
        ];
        for w in chain.windows(2) {
            worst = worst.max(w[0] - w[1]);
        }
    }
    Ok(worst)
}

fn phase_invariance(instances: u64) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..instances {
        let cfg = small_config(i);
        let ch = sample_channels(&cfg, 8000 + i);
        let mut sol = sample_solution(&cfg, 9000 + i);
        sol.omega
            .iter_mut()
            .flatten()
            .for_each(|m| m.fill(0.0.into()));
        let base = worst_case_rates(&sol, &ch, &cfg)?;
        let rotated = worst_case_rates(
            &sol,
            &crate::model::apply_phase_offset(&ch, 0.7 + i as f64),
            &cfg,
        )?;
        for (a, b) in base
            .per_pair
            .iter()
            .flatten()
            .zip(rotated.per_pair.iter().flatten())
        {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// Runs every check; all should pass on a correct build.
pub fn run_selftest() -> Vec<Check> {
    vec![
        check("rates match the entropy oracle", oracle_gap(40), 1e-8),
        check(
            "surrogate minorizes and touches the rate",
            minorization_gap(100),
            1e-9,
        ),
        check("CCCP objective never decreases", monotonicity_drop(5), 1e-9),
        check(
            "scheme ordering holds per trial",
            ordering_violation(3),
            1e-6,
        ),
        check(
            "independent signals ignore phase offset",
            phase_invariance(20),
            1e-9,
        ),
    ]
}
