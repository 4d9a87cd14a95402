//! Evaluates the per-delay rates of a random feasible design and checks the
//! closed forms against the entropy oracle.

use cran_async::model::{apply_phase_offset, sample_channels, sample_solution};
use cran_async::rates::oracle::oracle_rate;
use cran_async::rates::{mi_conditional, mi_direct, rate_f, worst_case_rates};
use cran_async::SystemConfig;

fn main() -> cran_async::Result<()> {
    let cfg = SystemConfig::symmetric(2, 2, 1, 2, 10.0);
    let ch = sample_channels(&cfg, 7);
    let sol = sample_solution(&cfg, 8);

    println!("ue delay  direct  conditional  rate    oracle");
    for k in 0..cfg.num_ues {
        for d in 0..cfg.num_delays() {
            println!(
                "{k:>2} {d:>5}  {:.4}  {:.4}       {:.4}  {:.4}",
                mi_direct(&sol, &ch, k, d)?,
                mi_conditional(&sol, &ch, k, d)?,
                rate_f(&sol, &ch, k, d)?,
                oracle_rate(&sol, &ch, k, d)?
            );
        }
    }

    let report = worst_case_rates(&sol, &ch, &cfg)?;
    println!(
        "worst-case rate {:.4} bits (limited by delay {})",
        report.min_rate,
        report.argmin_delay()
    );
    for deg in [20.0f64, 45.0] {
        let turned = worst_case_rates(&sol, &apply_phase_offset(&ch, deg.to_radians()), &cfg)?;
        println!("at {deg:>2} deg phase offset: {:.4} bits", turned.min_rate);
    }
    Ok(())
}
