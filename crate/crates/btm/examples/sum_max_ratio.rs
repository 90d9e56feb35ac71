//! Sum/max ratio scans: the cumulative sum of slowly varying traps is
//! dominated by the running maximum, but for heavier parameters the
//! ratio keeps revisiting levels near N - 1.
//!
//! Run with: cargo run --release --example sum_max_ratio

use btm::landscape::{scan, Landscape, ScanParams};
use btm::numeric;
use btm::tails::TailModel;
use rayon::prelude::*;

fn main() -> Result<(), btm::Error> {
    for spec in ["stretched-log:0.3", "stretched-log:0.7"] {
        let model: TailModel = spec.parse()?;
        let n = model.analytic_n();
        println!("{spec}: N = {}", n.n);
        let stats: Vec<(f64, f64, f64)> = (0..50u64)
            .into_par_iter()
            .map(|seed| {
                let land = Landscape::new(seed, model);
                let params = ScanParams {
                    i_max: 1_000_000,
                    k_top: 1,
                    levels: vec![],
                    checkpoints: vec![1_000, 1_000_000],
                };
                let out = scan(&land, &params, 1_000).unwrap();
                (out.snapshots[0].ratio(), out.snapshots[1].ratio(), out.max_ratio)
            })
            .collect();
        let early: Vec<f64> = stats.iter().map(|s| s.0).collect();
        let late: Vec<f64> = stats.iter().map(|s| s.1).collect();
        let peak: Vec<f64> = stats.iter().map(|s| s.2).collect();
        println!("  median S/m at i = 1e3: {:.6}", numeric::median(&early));
        println!("  median S/m at i = 1e6: {:.6}", numeric::median(&late));
        println!(
            "  peak ratio over the scan: median {:.3}, max {:.3}",
            numeric::median(&peak),
            peak.iter().cloned().fold(0.0f64, f64::max)
        );
    }
    Ok(())
}
