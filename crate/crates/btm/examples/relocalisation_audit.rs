//! Relocalisation audit: at the times between consecutive records, the
//! localisation set can only pick up extra sites from the sets R1 (deep
//! traps past the new record) and R2 (medium traps above the lower
//! boundary). For N = 2 tails these are almost always empty.
//!
//! Run with: cargo run --release --example relocalisation_audit

use btm::landscape::Landscape;
use btm::localise::audit_r1_r2;
use btm::tails::{AuxFunction, TailModel};
use rayon::prelude::*;

fn main() -> Result<(), btm::Error> {
    let model: TailModel = "stretched-log:0.3".parse()?;
    let aux = AuxFunction::default();
    println!("model {model}: N = {}", model.analytic_n().n);

    let land = Landscape::new(3, model);
    println!("seed 3, record indices 4..9:");
    for n in 4..=9 {
        let audit = audit_r1_r2(&land, n, &aux, 100_000_000)?;
        println!(
            "  n = {n}: ln t_n = {:>8.2}, O_n = {:>12.1}, |R1| = {}, |R2| = {} \
             (undivided reading: {})",
            audit.t_n.ln(),
            audit.o_n,
            audit.r1.len(),
            audit.r2.len(),
            audit.r2_undivided_len
        );
    }

    let counts: Vec<usize> = (0..100u64)
        .into_par_iter()
        .flat_map_iter(|seed| {
            let land = Landscape::new(seed, model);
            (5..=10).map(move |n| {
                audit_r1_r2(&land, n, &aux, 100_000_000)
                    .map(|a| a.r1.len() + a.r2.len())
                    .unwrap_or(usize::MAX)
            })
        })
        .collect();
    let valid: Vec<usize> = counts.iter().copied().filter(|&c| c != usize::MAX).collect();
    let zero = valid.iter().filter(|&&c| c == 0).count();
    println!(
        "\n100 seeds, n in [5, 10]: |R1| + |R2| = 0 in {}/{} audits ({:.1}%)",
        zero,
        valid.len(),
        100.0 * zero as f64 / valid.len() as f64
    );
    Ok(())
}
