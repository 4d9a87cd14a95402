//! One convex subproblem: maximize the smallest minorant around a feasible
//! anchor and report the certificate.

use cran_async::model::{check_feasibility, sample_channels, sample_solution};
use cran_async::rates::worst_case_rates;
use cran_async::solver::{solve_subproblem, SolverTolerances, SubproblemSpec};
use cran_async::surrogate::{Anchor, BlockMask};
use cran_async::SystemConfig;

fn main() -> cran_async::Result<()> {
    let cfg = SystemConfig::symmetric(2, 2, 1, 1, 10.0);
    let ch = sample_channels(&cfg, 11);
    let start = sample_solution(&cfg, 12);
    let anchor = Anchor::full(&start, &ch)?;

    let result = solve_subproblem(&SubproblemSpec {
        anchor: &anchor,
        channels: &ch,
        config: &cfg,
        scheme_mask: BlockMask::ALL,
        tolerances: SolverTolerances::default(),
    })?;

    let before = worst_case_rates(&start, &ch, &cfg)?.min_rate;
    let after = worst_case_rates(&result.solution, &ch, &cfg)?.min_rate;
    println!("status         {:?}", result.status);
    println!("newton steps   {}", result.inner_iterations);
    println!("gap            {:.2e}", result.gap_certificate);
    println!("minorant value {:.4} bits", result.r_min);
    println!("true rate      {before:.4} -> {after:.4} bits");
    println!(
        "feasible       {}",
        check_feasibility(&result.solution, &cfg, 1e-7).feasible
    );
    Ok(())
}
