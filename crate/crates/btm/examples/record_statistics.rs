//! Record statistics of the trap sequence: the log-L increments between
//! records are unit-mean exponentials, record locations track
//! L(sigma_(n-1)), and the direct skeleton sampler reproduces the
//! streamed gap law.
//!
//! Run with: cargo run --release --example record_statistics

use btm::landscape::{sample_record_skeleton, scan, Landscape, ScanParams};
use btm::numeric;
use btm::tails::TailModel;
use rayon::prelude::*;

fn main() -> Result<(), btm::Error> {
    let model: TailModel = "stretched-log:0.5".parse()?;

    // Streamed records across seeds.
    let per_seed: Vec<(Vec<f64>, Vec<f64>)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let land = Landscape::new(seed, model);
            let out = scan(&land, &ScanParams::new(100_000), 1).unwrap();
            let entries = out.skeleton.entries;
            let mut gaps = Vec::new();
            let mut ratios = Vec::new();
            for w in entries.windows(2) {
                let prev_lnl = model.ln_l(w[0].sigma);
                gaps.push(model.ln_l(w[1].sigma) - prev_lnl);
                ratios.push((w[1].position - w[0].position) as f64 / prev_lnl.exp());
            }
            (gaps, ratios)
        })
        .collect();
    let mut gaps: Vec<f64> = per_seed.iter().flat_map(|p| p.0.clone()).collect();
    let mut ratios: Vec<f64> = per_seed.iter().flat_map(|p| p.1.clone()).collect();

    let ks = numeric::ks_distance_one_sample(&mut gaps, |x| 1.0 - (-x).exp());
    println!("pooled record gaps ({}): KS vs Exp(1) = {ks:.4}", gaps.len());
    let shortfall = numeric::ks_shortfall_below(&mut ratios, |x| 1.0 - (-x).exp());
    println!("gap ratio (r_n - r_(n-1)) / L(sigma_(n-1)): worst CDF shortfall below Exp(1) = {shortfall:.4}");

    // Skeleton sampler vs the stream, on matched record heights: both gap
    // laws are geometric with success 1/L, so the normalized gaps agree.
    let mut stream_norm = Vec::new();
    for (seed, p) in per_seed.iter().enumerate().take(100) {
        let land = Landscape::new(seed as u64, model);
        let out = scan(&land, &ScanParams::new(100_000), 1).unwrap();
        for w in out.skeleton.entries.windows(2) {
            let l_prev = model.ln_l(w[0].sigma).exp();
            stream_norm.push((w[1].position - w[0].position) as f64 / l_prev);
        }
        let _ = p;
    }
    let mut skeleton_norm = Vec::new();
    for seed in 0..2_000u64 {
        if let Ok(sk) = sample_record_skeleton(&model, 8, seed, 0.5, 2) {
            for w in sk.entries.windows(2) {
                let l_prev = model.ln_l(w[0].sigma).exp();
                skeleton_norm.push((w[1].position - w[0].position) as f64 / l_prev);
            }
        }
    }
    let two = numeric::ks_distance_two_sample(&mut stream_norm, &mut skeleton_norm);
    println!(
        "normalized gaps, stream ({}) vs skeleton ({}): two-sample KS = {two:.4}",
        stream_norm.len(),
        skeleton_norm.len()
    );
    Ok(())
}
