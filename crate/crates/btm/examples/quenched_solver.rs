//! Exact quenched laws on a small trapping landscape: transition rows,
//! hitting-time CDFs against their closed-form bounds, and the Monte
//! Carlo oracle.
//!
//! Run with: cargo run --release --example quenched_solver

use btm::logreal::LogMagnitude;
use btm::quenched::{
    expected_hitting, mc, uniformization_row, Boundary, QuenchedSolver,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mags(values: &[f64]) -> Vec<LogMagnitude> {
    values.iter().map(|&v| LogMagnitude::from_linear(v).unwrap()).collect()
}

fn main() -> Result<(), btm::Error> {
    let traps = mags(&[1.0, 0.4, 30.0, 2.0, 7.0, 0.8]);
    let solver = QuenchedSolver::build(
        &traps,
        (Boundary::Reflecting, Boundary::Reflecting),
    )?;

    println!("eigenvalues: {:?}\n", solver.decomp.eigenvalues);

    for t_lin in [0.5, 5.0, 500.0] {
        let t = LogMagnitude::from_linear(t_lin)?;
        let d = solver.distribution_at(0, t)?;
        let row: Vec<String> = d.probs.iter().map(|p| format!("{p:.4}")).collect();
        println!("p_t(0, .) at t = {t_lin:>5}: [{}] (deficit {:.1e})", row.join(", "), d.deficit);
    }
    let pi = solver.stationary()?;
    println!("stationary:            [{}]\n", pi.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(", "));

    // Spectral vs uniformization in a mild regime.
    let t = LogMagnitude::from_linear(2.0)?;
    let spectral = solver.distribution_at(1, t)?.probs;
    let uni = uniformization_row(&solver.segment, 1, t)?;
    let max_dev = spectral
        .iter()
        .zip(&uni)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("spectral vs uniformization, max deviation: {max_dev:.2e}");

    // Hitting the right end: exact expectation, exact CDF, Monte Carlo.
    let absorbing = QuenchedSolver::build(&traps, (Boundary::Reflecting, Boundary::Absorbing))?;
    let expect = expected_hitting(&traps, 0, traps.len() - 1)?;
    println!("\nE_0[tau_b] = {}", expect.to_linear_checked()?);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let paths = 20_000;
    let t_probe = LogMagnitude::from_linear(150.0)?;
    let exact = absorbing.hitting_cdf(0, t_probe)?;
    let mut hits = 0;
    for _ in 0..paths {
        let seg = &absorbing.segment;
        if mc::endpoint(seg, 0, t_probe, &mut rng, 10_000_000)? == traps.len() - 1 {
            hits += 1;
        }
    }
    println!(
        "P(tau <= 150): exact {exact:.4}, Monte Carlo {:.4} ({} paths)",
        hits as f64 / paths as f64,
        paths
    );

    // The closed-form hitting bounds hold for every t.
    let sum_all: f64 = traps.iter().map(|s| s.to_linear_checked().unwrap()).sum::<f64>()
        - traps.last().unwrap().to_linear_checked().unwrap();
    for t_lin in [5.0, 50.0, 500.0] {
        let t = LogMagnitude::from_linear(t_lin)?;
        let cdf = absorbing.hitting_cdf(0, t)?;
        let upper_tail = 2.0 / t_lin * (traps.len() - 1) as f64 * sum_all;
        println!(
            "t = {t_lin:>5}: P(tau >= t) = {:.4} <= upper bound {:.4}",
            1.0 - cdf,
            upper_tail.min(1.0)
        );
    }
    Ok(())
}
