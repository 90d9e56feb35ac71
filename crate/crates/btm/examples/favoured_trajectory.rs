//! Trajectory of the probability mass on the most favoured site.
//!
//! A planted landscape with well-separated deep records makes the walk
//! relocalise cleanly: the favoured-site mass stays near one inside each
//! record era and dips sharply while the mass migrates to the next
//! record around the relocalisation times.
//!
//! Run with: cargo run --release --example favoured_trajectory

use btm::harness::planted::plant_trajectory;
use btm::landscape::{RecordSkeleton, TrapField};
use btm::localise::{build_snapshot, records_until, reloc_time};
use btm::logreal::LogMagnitude;
use btm::quenched::{aggregate_masses, truncation_wall, Boundary, QuenchedSolver};
use btm::tails::AuxFunction;

fn main() -> Result<(), btm::Error> {
    let inst = plant_trajectory();
    let aux = AuxFunction::default();
    let field = &inst.field;
    let i_cap = field.len() as u64;

    // Detected relocalisation times for the planted records.
    let records = records_until(field, 4, i_cap)?;
    let skeleton = RecordSkeleton { entries: records, approximate: false, blocks: vec![] };
    let mut reloc_ln = Vec::new();
    for &n in &inst.reloc_ns {
        let t_n = reloc_time(&skeleton, n, &aux)?;
        reloc_ln.push((n, t_n.ln()));
        println!("relocalisation time t_{} = e^{:.3}", n, t_n.ln());
    }

    // Trajectory over a log grid spanning the relocalisations.
    let (lo, hi) = (reloc_ln[0].1 - 3.0, reloc_ln.last().unwrap().1 + 2.5);
    let grid: Vec<f64> = (0..=80).map(|k| lo + (hi - lo) * k as f64 / 80.0).collect();

    // One spectral build at a wall certified for the largest time.
    let t_max = LogMagnitude::from_ln(hi);
    let snap_max = build_snapshot(field, &inst.model, t_max, &aux, i_cap)?;
    let wall = truncation_wall(
        field,
        t_max,
        (snap_max.o_t.ceil() as u64).max(snap_max.z_t + 2),
        inst.trunc_budget,
        i_cap,
    )?;
    let traps: Vec<LogMagnitude> = (0..wall.boundary).map(|p| field.trap_at(p)).collect();
    let solver = QuenchedSolver::build(&traps, (Boundary::Reflecting, Boundary::Reflecting))?
        .with_mass_tolerance(3e-5);
    println!("reflecting wall at {} sites (escape budget {})", wall.boundary, inst.trunc_budget);

    println!("{:>10} {:>9} {:>7} {:>9} {:>9}", "ln_t", "sup_mass", "argmax", "gamma", "in_R");
    for &ln_t in &grid {
        let t = LogMagnitude::from_ln(ln_t);
        let snap = build_snapshot(field, &inst.model, t, &aux, i_cap)?;
        let dist = solver.distribution_at(0, t)?;
        let masses = aggregate_masses(&dist, &snap, &traps);
        let marker = reloc_ln
            .iter()
            .any(|&(_, r)| (ln_t - r).abs() < (hi - lo) / 160.0)
            .then_some("  <- near a relocalisation time")
            .unwrap_or("");
        println!(
            "{:>10.3} {:>9.5} {:>7} {:>9.5} {:>9.5}{}",
            ln_t, masses.sup_mass, masses.argmax, masses.gamma_mass, masses.record_mass, marker
        );
    }
    Ok(())
}
