//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rayon::prelude::*;

use cran_async::harness::{ExperimentPlan, Preset};
use cran_async::model::{apply_phase_offset, sample_channels, sample_solution};
use cran_async::rates::oracle::{oracle_mi_conditional, oracle_mi_direct};
use cran_async::rates::{mi_conditional, mi_direct, rate_f, worst_case_rates};
use cran_async::solver::{solve_subproblem, SolverTolerances, SubproblemSpec};
use cran_async::surrogate::{surrogate_rate, Anchor, BlockMask, Split};
use cran_async::{
    run_cccp, run_scheme_suite, CccpOptions, ChannelSet, PrecoderSolution, Scheme, SuiteResult,
    SystemConfig,
};

const FIG2_SNR_DB: [f64; 6] = [-5.0, 0.0, 5.0, 10.0, 15.0, 20.0];

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: String) -> Outcome {
    Outcome { passed, detail }
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

/// `N_U ≤ 2`, antennas ≤ 2, `D ≤ 2`, cycling through every combination.
fn small_config(i: u64) -> SystemConfig {
    let users = 1 + (i % 2) as usize;
    let ants = 1 + ((i / 2) % 2) as usize;
    let ue_ants = 1 + ((i / 4) % 2) as usize;
    let delay = ((i / 8) % 3) as usize;
    SystemConfig::symmetric(users, ants, ue_ants, delay, 0.5 + (i % 7) as f64)
}

fn fig2_config(delay: usize, snr_db: f64) -> SystemConfig {
    SystemConfig::scalar(2, delay, db(snr_db))
}

fn suites(config: &SystemConfig, seeds: impl IntoParallelIterator<Item = u64>) -> Vec<SuiteResult> {
    seeds
        .into_par_iter()
        .map(|s| {
            run_scheme_suite(
                config,
                &sample_channels(config, s),
                &CccpOptions::default(),
                None,
            )
        })
        .collect()
}

fn average(suites: &[SuiteResult], scheme: Scheme) -> Option<f64> {
    let rates: Option<Vec<f64>> = suites.iter().map(|s| s.min_rate(&scheme)).collect();
    rates.map(|r| r.iter().sum::<f64>() / r.len() as f64)
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..200u64 {
        let cfg = small_config(i);
        let sol = sample_solution(&cfg, 10_000 + i);
        let ch = sample_channels(&cfg, 20_000 + i);
        for k in 0..cfg.num_ues {
            for d in 0..cfg.num_delays() {
                let direct = mi_direct(&sol, &ch, k, d).unwrap()
                    - oracle_mi_direct(&sol, &ch, k, d).unwrap();
                let cond = mi_conditional(&sol, &ch, k, d).unwrap()
                    - oracle_mi_conditional(&sol, &ch, k, d).unwrap();
                worst = worst.max(direct.abs()).max(cond.abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst < 1e-8 && secs < 10.0,
        format!("max |diff| {worst:.2e} bits in {secs:.2} s"),
    )
}

fn analytic_optimum() -> Outcome {
    let start = Instant::now();
    let ch = ChannelSet::from_scalars(&[(1.0, 1.0)]);
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for p in [1.0, 10.0] {
        let cfg = SystemConfig::scalar(1, 0, p);
        let trace = run_cccp(&cfg, &ch, &Scheme::Robust, &CccpOptions::default()).unwrap();
        let target = (1.0 + (2.0 * p.sqrt()).powi(2)).log2();
        let gap = (trace.final_report.min_rate - target).abs();
        worst = worst.max(gap);
        parts.push(format!(
            "P={p}: gap {gap:.1e} after {} iterations",
            trace.iterations
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-3 && secs < 30.0,
        format!("{} ({secs:.2} s)", parts.join(", ")),
    )
}

fn monotonicity() -> Outcome {
    let results: Vec<(f64, bool)> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let cfg = fig2_config(1 + (i % 2) as usize, FIG2_SNR_DB[(i % 6) as usize]);
            let trace = run_cccp(
                &cfg,
                &sample_channels(&cfg, 30_000 + i),
                &Scheme::Robust,
                &CccpOptions::default(),
            )
            .unwrap();
            let drop = trace
                .objective
                .windows(2)
                .map(|w| w[0] - w[1])
                .fold(0.0, f64::max);
            (drop, trace.converged && trace.iterations <= 50)
        })
        .collect();
    let drop = results.iter().map(|r| r.0).fold(0.0, f64::max);
    let converged = results.iter().filter(|r| r.1).count();
    outcome(
        drop <= 1e-9 && converged * 10 >= results.len() * 9,
        format!(
            "largest step decrease {drop:.1e}, converged {converged}/{}",
            results.len()
        ),
    )
}

fn minorization() -> Outcome {
    let mut above = f64::NEG_INFINITY;
    let mut touch = 0.0f64;
    for i in 0..500u64 {
        let cfg = small_config(i);
        let ch = sample_channels(&cfg, 40_000 + i);
        let sol = sample_solution(&cfg, 50_000 + i);
        let anchor_sol = sample_solution(&cfg, 60_000 + i);
        for split in [Split::Conditional, Split::Joint] {
            let anchor = Anchor::with_split(&anchor_sol, &ch, BlockMask::ALL, split).unwrap();
            let at_sol = Anchor::with_split(&sol, &ch, BlockMask::ALL, split).unwrap();
            for k in 0..cfg.num_ues {
                for d in 0..cfg.num_delays() {
                    let f = rate_f(&sol, &ch, k, d).unwrap();
                    above = above.max(surrogate_rate(&sol, &anchor, &ch, k, d).unwrap() - f);
                    touch =
                        touch.max((surrogate_rate(&sol, &at_sol, &ch, k, d).unwrap() - f).abs());
                }
            }
        }
    }
    outcome(
        above <= 1e-9 && touch <= 1e-9,
        format!("max surrogate − rate {above:.1e}, tangency gap {touch:.1e}"),
    )
}

fn scheme_ordering() -> Outcome {
    let violations: Vec<f64> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let cfg = fig2_config(1, FIG2_SNR_DB[(i % 6) as usize]);
            let suite = run_scheme_suite(
                &cfg,
                &sample_channels(&cfg, 70_000 + i),
                &CccpOptions::default(),
                None,
            );
            let chain = [
                Scheme::TxSelection,
                Scheme::NonCooperative,
                Scheme::Robust,
                Scheme::SyncGenie { known_delay: 0 },
            ]
            .map(|s| suite.min_rate(&s).unwrap_or(f64::NAN));
            chain
                .windows(2)
                .map(|w| w[0] - w[1])
                .fold(
                    0.0,
                    |a: f64, v| if v.is_nan() { f64::INFINITY } else { a.max(v) },
                )
        })
        .collect();
    let worst = violations.iter().copied().fold(0.0, f64::max);
    let bad = violations.iter().filter(|&&v| v > 1e-6).count();
    outcome(
        bad == 0,
        format!("worst violation {worst:.1e}, {bad} of 50 trials out of order"),
    )
}

fn fig2_trend(d1: &[SuiteResult]) -> Outcome {
    let get = |s| average(d1, s).unwrap_or(f64::NAN);
    let (robust, nc) = (get(Scheme::Robust), get(Scheme::NonCooperative));
    let (non_robust, tx) = (get(Scheme::NonRobustCoop), get(Scheme::TxSelection));
    outcome(
        robust > nc && non_robust < tx,
        format!("robust {robust:.4} > nonCooperative {nc:.4}; nonRobustCoop {non_robust:.4} < txSelection {tx:.4}"),
    )
}

fn fig2_delay_trend(d1: &[SuiteResult], d2: &[SuiteResult]) -> Outcome {
    let r1 = average(d1, Scheme::Robust).unwrap_or(f64::NAN);
    let r2 = average(d2, Scheme::Robust).unwrap_or(f64::NAN);
    outcome(r2 <= r1 + 1e-3, format!("robust D=2 {r2:.4} ≤ D=1 {r1:.4}"))
}

fn phase_offset() -> Outcome {
    let mut invariance = 0.0f64;
    for i in 0..50u64 {
        let cfg = small_config(i);
        let ch = sample_channels(&cfg, 80_000 + i);
        let mut sol = sample_solution(&cfg, 90_000 + i);
        sol.omega
            .iter_mut()
            .flatten()
            .for_each(|m| m.fill(0.0.into()));
        let base = worst_case_rates(&sol, &ch, &cfg).unwrap();
        let theta = 0.1 + 0.37 * i as f64;
        let turned = worst_case_rates(&sol, &apply_phase_offset(&ch, theta), &cfg).unwrap();
        for (a, b) in base
            .per_pair
            .iter()
            .flatten()
            .zip(turned.per_pair.iter().flatten())
        {
            invariance = invariance.max((a - b).abs());
        }
    }

    let cfg = ExperimentPlan::from_preset(Preset::Fig3)
        .config_at(2.0)
        .unwrap();
    let degraded: Vec<bool> = (0..50u64)
        .into_par_iter()
        .map(|i| {
            let ch = sample_channels(&cfg, 100_000 + i);
            let trace = run_cccp(&cfg, &ch, &Scheme::Robust, &CccpOptions::default()).unwrap();
            let turned = worst_case_rates(
                &trace.final_solution,
                &apply_phase_offset(&ch, 45f64.to_radians()),
                &cfg,
            )
            .unwrap();
            turned.min_rate <= trace.final_report.min_rate
        })
        .collect();
    let holds = degraded.iter().filter(|&&b| b).count();
    outcome(
        invariance <= 1e-9 && holds * 10 >= degraded.len() * 9,
        format!(
            "Ω=0 invariance gap {invariance:.1e}; robust at 45° ≤ 0° on {holds}/{}",
            degraded.len()
        ),
    )
}

/// Best `min_d f̃_d` over a 0.02 grid of single-UE scalar points.
fn grid_maximum(anchor: &Anchor, ch: &ChannelSet, power: f64, slots: usize) -> f64 {
    let step = 0.02;
    let levels = (power / step).round() as i64;
    // The zero level sits just inside the cone.
    let values: Vec<f64> = (0..=levels).map(|i| (i as f64 * step).max(1e-9)).collect();
    let coords: Vec<f64> = (-levels..=levels).map(|i| i as f64 * step).collect();
    let mut omegas: Vec<Vec<f64>> = vec![Vec::new()];
    for _ in 0..2 * slots {
        omegas = omegas
            .into_iter()
            .flat_map(|prefix| {
                coords.iter().map(move |&c| {
                    let mut next = prefix.clone();
                    next.push(c);
                    next
                })
            })
            .collect();
    }
    let mut best = f64::NEG_INFINITY;
    for &v in &values {
        for &s in &values {
            for om in &omegas {
                // Points outside the PSD ball land radially on (just inside) its boundary.
                let norm2 = om.iter().map(|x| x * x).sum::<f64>();
                let shrink = if norm2 >= v * s {
                    (v * s / norm2).sqrt() * (1.0 - 1e-9)
                } else {
                    1.0
                };
                let om: Vec<f64> = om.iter().map(|x| x * shrink).collect();
                let mut sol = PrecoderSolution::from_scalars(&[v], &[s], &[vec![0.0; slots]]);
                for d in 0..slots {
                    sol.omega[0][d][(0, 0)] = num_complex::Complex64::new(om[2 * d], om[2 * d + 1]);
                }
                let value = (0..slots)
                    .map(|d| surrogate_rate(&sol, anchor, ch, 0, d).unwrap())
                    .fold(f64::INFINITY, f64::min);
                best = best.max(value);
            }
        }
    }
    best
}

fn subproblem_grid() -> Outcome {
    let power = 0.1;
    let gaps: Vec<f64> = (0..10u64)
        .into_par_iter()
        .map(|i| {
            let cfg = SystemConfig::scalar(1, (i % 2) as usize, power);
            let ch = sample_channels(&cfg, 110_000 + i);
            let anchor = Anchor::full(&sample_solution(&cfg, 120_000 + i), &ch).unwrap();
            let spec = SubproblemSpec {
                anchor: &anchor,
                channels: &ch,
                config: &cfg,
                scheme_mask: BlockMask::ALL,
                tolerances: SolverTolerances::default(),
            };
            let solved = solve_subproblem(&spec).unwrap().r_min;
            solved - grid_maximum(&anchor, &ch, power, cfg.num_delays())
        })
        .collect();
    let worst = gaps.iter().map(|g| g.abs()).fold(0.0, f64::max);
    let below = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    outcome(
        worst <= 0.02,
        format!("max |solver − grid| {worst:.4} bits; solver − grid ≥ {below:.1e}"),
    )
}

fn reproducibility() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("plan.cfg");
    std::fs::write(
        &config,
        "preset = fig2\nsweep_values = 0, 10\nschemes = tx_selection, robust\n",
    )
    .unwrap();
    let run = |name: &str| {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_cran-async"))
            .args(["sweep", "--config"])
            .arg(&config)
            .args([
                "--trials", "4", "--seed", "11", "--format", "csv", "--quiet", "--out",
            ])
            .arg(&out)
            .status()
            .unwrap();
        (status.success(), std::fs::read(&out).unwrap_or_default())
    };
    let (ok_a, a) = run("a.csv");
    let (ok_b, b) = run("b.csv");
    outcome(
        ok_a && ok_b && !a.is_empty() && a == b,
        format!(
            "two runs wrote {} and {} bytes, identical: {}",
            a.len(),
            b.len(),
            a == b
        ),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let d1_cfg = fig2_config(1, 20.0);
    let d2_cfg = fig2_config(2, 20.0);
    let d1 = suites(&d1_cfg, 130_000..130_050u64);
    let d2 = suites(&d2_cfg, 130_000..130_050u64);

    let results = [
        ("1 oracle equivalence", oracle_equivalence()),
        ("2 analytic optimum", analytic_optimum()),
        ("3 MM monotonicity and convergence", monotonicity()),
        ("4 minorization and tangency", minorization()),
        ("5 scheme ordering per trial", scheme_ordering()),
        ("6 Fig.-2 trend at 20 dB", fig2_trend(&d1)),
        ("7 Fig.-2 trend versus D", fig2_delay_trend(&d1, &d2)),
        ("8 phase-offset sanity", phase_offset()),
        ("9 subproblem grid cross-check", subproblem_grid()),
        ("10 sweep reproducibility", reproducibility()),
    ];
    for (name, o) in &results {
        println!(
            "{} {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    let failed = results.iter().filter(|(_, o)| !o.passed).count();
    println!(
        "{} of {} criteria passed in {:.1} s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
