//! Numerical diagnostics for the standing assumptions: slow variation,
//! its second-order rate, the auxiliary-function window inequalities,
//! and the summability pattern behind the localisation count N.
//!
//! Run with: cargo run --release --example tail_assumptions

use btm::tails::{AuxFunction, CheckGrids, TailModel};

fn main() -> Result<(), btm::Error> {
    let aux = AuxFunction::default();
    for spec in ["stretched-log:0.3", "stretched-log:0.55", "stretched-log:0.7", "log:1.0", "double-log:1.0"] {
        let model: TailModel = spec.parse()?;
        let n = model.analytic_n();
        println!(
            "{spec}: N = {} (series-a diverges: {}, series-b converges: {})",
            n.n, n.sum_a_diverges, n.sum_b_converges
        );
        let report = model.check_assumptions(&aux, &CheckGrids {
            n_max: 100_000,
            ..CheckGrids::default_for_desk_scale()
        });
        println!("{report}\n");
    }

    // Partial-sum diagnostic vs the analytic N: on the gamma grid the
    // N-th series is nearly flat over the last decade while the
    // (N-1)-th one still grows.
    println!("partial sums of (d(e^n) log n)^(l-1), n <= 1e6:");
    for gamma in [0.3, 0.5, 0.55, 0.7, 0.8] {
        let model = TailModel::new(btm::tails::TailFamily::StretchedLog, gamma)?;
        let n = model.analytic_n().n;
        print!("  gamma = {gamma}: N = {n};");
        for ell in 2..=6u32 {
            let (total, growth) = model.partial_sum_growth(ell, 1_000_000);
            print!(" l={ell}: {total:.3e} (+{:.1}%)", growth * 100.0);
        }
        println!();
    }
    Ok(())
}
