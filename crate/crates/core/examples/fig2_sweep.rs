//! Reduced rate-versus-SNR sweep. Pass a trial count to change the default of 10.

use cran_async::harness::{run_sweep, to_csv, ExperimentPlan};

fn main() -> cran_async::Result<()> {
    let mut plan = ExperimentPlan::fig2();
    plan.trials = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(10);
    plan.sweep_values = vec![0.0, 10.0, 20.0];
    let out = run_sweep(&plan)?;
    print!("{}", to_csv(&out.rows));
    Ok(())
}
