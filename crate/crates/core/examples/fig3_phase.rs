//! Sensitivity to a residual phase offset: rate versus number of UEs at
//! 0, 20 and 45 degrees. Only the robust and non-cooperative designs, two
//! UEs by default since six UEs take minutes per trial.

use cran_async::harness::{run_sweep, to_csv, ExperimentPlan};
use cran_async::Scheme;

fn main() -> cran_async::Result<()> {
    let mut plan = ExperimentPlan::fig3();
    plan.trials = 5;
    plan.sweep_values = std::env::args()
        .skip(1)
        .filter_map(|s| s.parse().ok())
        .collect();
    if plan.sweep_values.is_empty() {
        plan.sweep_values = vec![2.0];
    }
    plan.schemes = vec![Scheme::NonCooperative, Scheme::Robust];
    let out = run_sweep(&plan)?;
    print!("{}", to_csv(&out.rows));
    Ok(())
}
