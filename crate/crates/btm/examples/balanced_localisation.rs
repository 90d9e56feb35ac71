//! Balanced localisation on planted favourable instances: at the balance
//! time (where the hitting CDF of the final site equals 1/N) the mass is
//! spread almost uniformly over the N near-record sites, and for N = 3
//! the middle site is not a record.
//!
//! Run with: cargo run --release --example balanced_localisation

use btm::harness::planted::{balance_time_bracket, plant_balanced};
use btm::landscape::TrapField;
use btm::logreal::LogMagnitude;
use btm::quenched::{balance_time_with_tolerance, Boundary, QuenchedSolver};

fn main() -> Result<(), btm::Error> {
    for n_sites in [2usize, 3] {
        let inst = plant_balanced(n_sites)?;
        let field = inst.field();
        println!(
            "N = {n_sites} (model {}): sites at {:?}, sigma_(n-1) = {}, Lambda = {:.3}",
            inst.model, inst.sites.sites, inst.sigma_nm1_linear, inst.lambda_nm1_linear
        );

        let target = 1.0 / n_sites as f64;
        let bal = balance_time_with_tolerance(&inst.segment_to_final_site(), target, 1e-6)?;
        println!(
            "  balance time: ln t_n = {:.4} (CDF residual {:.1e})",
            bal.t.ln(),
            (bal.cdf - target).abs()
        );
        let (lo, hi) = balance_time_bracket(&inst.eps, n_sites);
        let value =
            (bal.t.ln() - inst.lambda_nm1_linear.ln() - inst.sigma_nm1_linear.ln()).exp();
        println!("  t_n / (Lambda sigma) = {value:.1}, closed-form bracket ({lo:.0}, {hi:.0})");

        let traps: Vec<LogMagnitude> =
            (0..field.len() as u64).map(|p| field.trap_at(p)).collect();
        let solver = QuenchedSolver::build(&traps, (Boundary::Reflecting, Boundary::Reflecting))?
            .with_mass_tolerance(1e-6);
        let dist = solver.distribution_at(0, bal.t)?;
        for (idx, &pos) in inst.sites.sites.iter().enumerate() {
            println!(
                "  mass on z_{} (position {pos}): {:.6}",
                idx + 1,
                dist.probs[pos as usize]
            );
        }
        let total: f64 = inst.sites.sites.iter().map(|&p| dist.probs[p as usize]).sum();
        println!("  total on the favourable sites: {total:.6}\n");
    }
    Ok(())
}
