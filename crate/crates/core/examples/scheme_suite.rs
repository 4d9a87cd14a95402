//! All five schemes on the same channels, with the robust and naive designs
//! re-evaluated under a phase offset.

use cran_async::model::sample_channels;
use cran_async::{run_scheme_suite, CccpOptions, Scheme, SystemConfig};

fn main() -> cran_async::Result<()> {
    let cfg = SystemConfig::symmetric(2, 1, 1, 1, 100.0);
    let ch = sample_channels(&cfg, 99);
    let suite = run_scheme_suite(&cfg, &ch, &CccpOptions::default(), None);

    for (scheme, outcome) in &suite.entries {
        match outcome {
            Ok(o) => {
                let turned = o.evaluate_at(&cfg, &ch, 45f64.to_radians())?;
                println!(
                    "{:<16} {:.4} bits  ({:.4} at 45 deg, {} iterations)",
                    scheme.to_string(),
                    o.report().min_rate,
                    turned.min_rate,
                    o.trace.iterations
                );
            }
            Err(e) => println!("{scheme:<16} failed: {e}"),
        }
    }
    if let Some(Scheme::SyncGenie { known_delay }) = suite
        .get(&Scheme::SyncGenie { known_delay: 0 })
        .map(|o| o.scheme)
    {
        println!("genie told delay {known_delay}");
    }
    Ok(())
}
