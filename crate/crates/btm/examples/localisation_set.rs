//! The localisation-set construction at increasing times: the level
//! l_t, the site Z_t, the inner/outer record sites, the boundaries, and
//! the set itself (usually a single site).
//!
//! Run with: cargo run --release --example localisation_set

use btm::landscape::Landscape;
use btm::localise::build_snapshot;
use btm::logreal::LogMagnitude;
use btm::tails::{AuxFunction, TailModel};

fn main() -> Result<(), btm::Error> {
    let model: TailModel = "stretched-log:0.3".parse()?;
    let aux = AuxFunction::default();
    let land = Landscape::new(11, model);

    println!(
        "{:>8} {:>10} {:>6} {:>7} {:>7} {:>10} {:>12} {:>6}",
        "ln_t", "ln_ell", "Z_t", "z_in", "z_out", "O_t", "ln_D_t", "|Gam|"
    );
    for ln_t in [3.0, 7.0, 11.0, 15.0, 19.0, 23.0, 27.0] {
        let snap = build_snapshot(&land, &model, LogMagnitude::from_ln(ln_t), &aux, 10_000_000)?;
        println!(
            "{:>8.1} {:>10.3} {:>6} {:>7} {:>7} {:>10.2} {:>12.3} {:>6}  {:?}",
            ln_t,
            snap.ell_t.ln(),
            snap.z_t,
            snap.z_inner,
            snap.z_outer,
            snap.o_t,
            snap.d_t.ln(),
            snap.gamma.len(),
            snap.gamma
        );
    }
    Ok(())
}
