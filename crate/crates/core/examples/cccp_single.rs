//! Full CCCP run for the robust scheme on one channel draw.

use cran_async::model::sample_channels;
use cran_async::{run_cccp, CccpOptions, Scheme, SystemConfig};

fn main() -> cran_async::Result<()> {
    let cfg = SystemConfig::symmetric(2, 1, 1, 2, 100.0);
    let ch = sample_channels(&cfg, 2024);
    let trace = run_cccp(&cfg, &ch, &Scheme::Robust, &CccpOptions::default())?;

    for (i, value) in trace.objective.iter().enumerate() {
        println!("iter {i:>2}  {value:.6} bits");
    }
    println!(
        "{} subproblems, {} extrapolated, converged: {}",
        trace.iterations, trace.extrapolations, trace.converged
    );
    for (k, row) in trace.final_report.per_pair.iter().enumerate() {
        let rates: Vec<String> = row.iter().map(|r| format!("{r:.4}")).collect();
        println!("UE {k} per-delay rates: {}", rates.join("  "));
    }
    Ok(())
}
