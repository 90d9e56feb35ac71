//! The pilot-calibration protocol.
//!
//! Statistical thresholds that the source results fix only asymptotically
//! are calibrated from this fixed pilot (seeds 0..N per statistic, all
//! parameters printed) and frozen into `harness::calibration`. Re-run
//! after any change to the landscape generator and update the constants.
//!
//! Run with: cargo run --release --example pilot_calibration

use btm::landscape::{
    ell_of_t, first_exceedence, hyperbolic_exceedence, scan, Landscape, ScanParams, TrapField,
};
use btm::localise::{audit_r1_r2, build_snapshot, favourable_event, EpsilonTuple};
use btm::logreal::LogMagnitude;
use btm::numeric;
use btm::tails::{AuxFunction, TailModel};
use rayon::prelude::*;

fn main() {
    let aux = AuxFunction::default();

    // --- sum/max running-max fractions, stretched-log 0.7, seeds 0..99
    let model07: TailModel = "stretched-log:0.7".parse().unwrap();
    let fracs: Vec<(bool, bool)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let land = Landscape::new(seed, model07);
            let params = ScanParams {
                i_max: 10_000_000,
                k_top: 1,
                levels: vec![],
                checkpoints: vec![100_000, 10_000_000],
            };
            let out = scan(&land, &params, 1_000).unwrap();
            (out.snapshots[0].max_ratio_so_far > 1.5, out.snapshots[1].max_ratio_so_far > 1.5)
        })
        .collect();
    let at_1e5 = fracs.iter().filter(|f| f.0).count() as f64 / fracs.len() as f64;
    let at_1e7 = fracs.iter().filter(|f| f.1).count() as f64 / fracs.len() as f64;
    println!("sum-max gamma=0.7 frac(max ratio > 1.5): at 1e5 = {at_1e5:.3}, at 1e7 = {at_1e7:.3}");

    // --- sum/max medians, stretched-log 0.3, seeds 0..99
    let model03: TailModel = "stretched-log:0.3".parse().unwrap();
    let ratios: Vec<(f64, f64)> = (0..100u64)
        .into_par_iter()
        .map(|seed| {
            let land = Landscape::new(seed, model03);
            let params = ScanParams {
                i_max: 10_000_000,
                k_top: 1,
                levels: vec![],
                checkpoints: vec![1_000, 10_000_000],
            };
            let out = scan(&land, &params, 1_000).unwrap();
            (out.snapshots[0].ln_excess_ratio, out.snapshots[1].ln_excess_ratio)
        })
        .collect();
    let med_1e3 = numeric::median(&ratios.iter().map(|r| r.0).collect::<Vec<_>>());
    let med_1e7 = numeric::median(&ratios.iter().map(|r| r.1).collect::<Vec<_>>());
    println!("sum-max gamma=0.3 median ln((S-m)/m): at 1e3 = {med_1e3:.3}, at 1e7 = {med_1e7:.3}");

    // --- first-exceedence ratio i_x / L(x) at L(x) = 1e4, gamma 0.5, 500 seeds
    let model05: TailModel = "stretched-log:0.5".parse().unwrap();
    let level = model05.l_inv(LogMagnitude::from_ln(1e4f64.ln())).unwrap();
    let ratios: Vec<f64> = (0..500u64)
        .into_par_iter()
        .map(|seed| {
            let land = Landscape::new(seed, model05);
            let e = first_exceedence(&land, level, 10_000_000).unwrap();
            (e.position + 1) as f64 / 1e4
        })
        .collect();
    let med = numeric::median(&ratios);
    let bulk = ratios.iter().filter(|&&r| (1.0 / 64.0..=64.0).contains(&r)).count() as f64
        / ratios.len() as f64;
    println!("exceedence ratio: median = {med:.3}, frac in [1/64, 64] = {bulk:.3}");

    // --- typical-hyperbolic frequency at t = 1e3 and 1e12, gamma 0.5, 500 seeds
    for t_lin in [1e3f64, 1e12] {
        let t = LogMagnitude::from_ln(t_lin.ln());
        let hits: usize = (0..500u64)
            .into_par_iter()
            .filter(|&seed| {
                let land = Landscape::new(seed, model05);
                let ell = ell_of_t(&model05, t).unwrap();
                let e = first_exceedence(&land, ell, 10_000_000).unwrap();
                let h = hyperbolic_exceedence(&land, t, &aux, 10_000_000).unwrap();
                e.position == h.count - 1 && h.argmax_position == e.position
            })
            .count();
        println!("typical hyperbolic at t = {t_lin:.0e}: {:.3}", hits as f64 / 500.0);
    }

    // --- record bracket violations, gamma 0.5, 200 seeds, i_max 2e5
    let stats: Vec<(usize, usize)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let land = Landscape::new(seed, model05);
            let out = scan(&land, &ScanParams::new(200_000), 1).unwrap();
            let entries = &out.skeleton.entries;
            let mut total = 0;
            let mut violations = 0;
            for n in 3..=entries.len() {
                let r = (entries[n - 1].position + 1) as f64;
                let l_prev = model05.ln_l(entries[n - 2].sigma).exp();
                total += 1;
                if r < l_prev / (n as f64 * n as f64) || r > 2.0 * l_prev * (n as f64).ln() {
                    violations += 1;
                }
            }
            (violations, total)
        })
        .collect();
    let viol: usize = stats.iter().map(|s| s.0).sum();
    let total: usize = stats.iter().map(|s| s.1).sum();
    println!(
        "record bracket violations: {viol}/{total} = {:.4}",
        viol as f64 / total as f64
    );

    // --- localisation singleton = Z_t frequency, gamma 0.3, 200 seeds
    for t_lin in [1e3f64, 1e10] {
        let t = LogMagnitude::from_ln(t_lin.ln());
        let hits: usize = (0..200u64)
            .into_par_iter()
            .filter(|&seed| {
                let land = Landscape::new(seed, model03);
                let snap = build_snapshot(&land, &model03, t, &aux, 10_000_000).unwrap();
                snap.gamma.len() == 1 && snap.gamma[0] == snap.z_t
            })
            .count();
        println!("Gamma = {{Z_t}} at t = {t_lin:.0e}: {:.3}", hits as f64 / 200.0);
    }

    // --- audit emptiness, gamma 0.3, 200 seeds, n in [5, 12]
    let stats: Vec<(usize, usize)> = (0..200u64)
        .into_par_iter()
        .map(|seed| {
            let land = Landscape::new(seed, model03);
            let mut zero = 0;
            let mut total = 0;
            for n in 5..=12 {
                match audit_r1_r2(&land, n, &aux, 10_000_000) {
                    Ok(audit) => {
                        total += 1;
                        if audit.r1.is_empty() && audit.r2.is_empty() {
                            zero += 1;
                        }
                    }
                    Err(btm::Error::InsufficientLandscape { .. }) => {}
                    Err(e) => panic!("{e}"),
                }
            }
            (zero, total)
        })
        .collect();
    let zero: usize = stats.iter().map(|s| s.0).sum();
    let total: usize = stats.iter().map(|s| s.1).sum();
    println!(
        "audit |R1|+|R2| = 0 frequency: {:.4} (completed {total}/{})",
        zero as f64 / total as f64,
        stats.len() * 8
    );

    // --- favourable-event hits, gamma 0.55, corollary scheme eps = 0.9,
    //     seeds 0..3999, n in [3, 6]. (At eps = 0.5 the final-gap clause
    //     has probability e^-64 and the event is unobservable.)
    let model055: TailModel = "stretched-log:0.55".parse().unwrap();
    let hits: usize = (0..4000u64)
        .into_par_iter()
        .map(|seed| {
            let land = Landscape::new(seed, model055);
            let mut count = 0;
            for n in 3..=6 {
                let eps = EpsilonTuple::corollary_scheme(0.9, n).unwrap();
                if let Ok(fs) = favourable_event(&land, &model055, n, &eps, 10_000_000) {
                    if fs.clauses.as_ref().map_or(false, |c| c.event_holds) {
                        count += 1;
                    }
                }
            }
            count
        })
        .sum();
    println!("favourable-event hits (gamma 0.55, eps 0.9, n 3..6, 4000 seeds): {hits}");

    // Spot info: how long do the sampled landscapes stay within the
    // truncation/walls regime (diagnostic only).
    let land = Landscape::new(0, model05);
    let deep = (0..1000u64).map(|i| land.trap_at(i)).max().unwrap();
    println!("seed 0 deepest trap in 1000 positions: ln sigma = {:.2}", deep.ln());
}
