//! Walks along a segment away from an anchor and prints the rate next to
//! its concave minorant for both log-det groupings.

use cran_async::model::{sample_channels, sample_solution};
use cran_async::rates::rate_f;
use cran_async::surrogate::{surrogate_rate, Anchor, BlockMask, Split};
use cran_async::SystemConfig;

fn main() -> cran_async::Result<()> {
    let cfg = SystemConfig::symmetric(2, 1, 1, 1, 10.0);
    let ch = sample_channels(&cfg, 3);
    let anchor_sol = sample_solution(&cfg, 4);
    let far = sample_solution(&cfg, 5);
    let (k, d) = (0, 1);

    for split in [Split::Conditional, Split::Joint] {
        let anchor = Anchor::with_split(&anchor_sol, &ch, BlockMask::ALL, split)?;
        println!("{split} split, UE {k}, delay {d}");
        println!("   t   rate    minorant  gap");
        for i in 0..=5 {
            let t = i as f64 / 5.0;
            let x = anchor_sol.lerp(&far, t);
            let f = rate_f(&x, &ch, k, d)?;
            let g = surrogate_rate(&x, &anchor, &ch, k, d)?;
            println!("{t:>4.1}   {f:.4}  {g:.4}    {:.2e}", f - g);
        }
    }
    Ok(())
}
