//! Cross-checks of the quenched solver beyond the acceptance gate:
//! Monte Carlo agreement for the hitting CDF, the survival-integral
//! identity, and the half-line favoured-mass bookkeeping.

use btm::landscape::TrapField;
use btm::harness::planted::plant_trajectory;
use btm::logreal::LogMagnitude;
use btm::numeric;
use btm::quenched::{expected_hitting, favoured_mass, mc, Boundary, QuenchedSolver};
use btm::tails::AuxFunction;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mags(values: &[f64]) -> Vec<LogMagnitude> {
    values.iter().map(|&v| LogMagnitude::from_linear(v).unwrap()).collect()
}

#[test]
fn hitting_cdf_matches_monte_carlo() {
    let values = [0.8, 2.0, 0.4, 3.0, 1.0, 0.6, 1.4, 0.9];
    let traps = mags(&values);
    let solver =
        QuenchedSolver::build(&traps, (Boundary::Reflecting, Boundary::Absorbing)).unwrap();
    let t = LogMagnitude::from_linear(40.0).unwrap();
    let exact = solver.hitting_cdf(0, t).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let paths = 100_000;
    let mut hits = 0;
    for _ in 0..paths {
        if mc::endpoint(&solver.segment, 0, t, &mut rng, 50_000_000).unwrap()
            == values.len() - 1
        {
            hits += 1;
        }
    }
    let emp = hits as f64 / paths as f64;
    let se = (exact * (1.0 - exact) / paths as f64).sqrt();
    assert!((emp - exact).abs() <= 3.0 * se, "MC {emp} vs exact {exact} (se {se})");
}

#[test]
fn expected_hitting_equals_survival_integral() {
    // E[tau] = integral of the survival function; quadrature over the
    // spectral closed form in the substitution t = E u.
    for (i, values) in
        [[1.0, 1.0, 1.0, 1.0].as_slice(), &[0.3, 5.0, 0.7, 2.2, 1.1], &[2.0, 0.1, 0.1, 4.0]]
            .iter()
            .enumerate()
    {
        let traps = mags(values);
        let b = values.len() - 1;
        let expect = expected_hitting(&traps, 0, b).unwrap().to_linear_checked().unwrap();
        let solver =
            QuenchedSolver::build(&traps, (Boundary::Reflecting, Boundary::Absorbing)).unwrap();
        let integral = expect
            * numeric::adaptive_simpson(
                &|u: f64| {
                    if u <= 0.0 {
                        1.0
                    } else {
                        solver
                            .survival(0, LogMagnitude::from_linear(expect * u).unwrap())
                            .unwrap()
                    }
                },
                0.0,
                60.0,
                1e-10,
            );
        assert!(
            ((integral - expect) / expect).abs() <= 1e-6,
            "instance {i}: integral {integral} vs formula {expect}"
        );
    }
}

#[test]
fn favoured_mass_bookkeeping_on_planted_instance() {
    let inst = plant_trajectory();
    let aux = AuxFunction::default();
    let t = LogMagnitude::from_ln(10.0);
    let fm = favoured_mass(
        &inst.field,
        &inst.model,
        t,
        &aux,
        inst.trunc_budget,
        inst.field.len() as u64,
    )
    .unwrap();
    assert!(fm.sup_mass > 0.0 && fm.sup_mass <= 1.0);
    assert!(fm.gamma_mass <= 1.0 + 1e-9);
    assert!(fm.record_mass >= fm.sup_mass - 1e-9, "argmax at t = e^10 is a record here");
    assert!(fm.truncation_bound <= inst.trunc_budget * 1.0001);
    assert!(fm.boundary >= fm.snapshot.o_t.ceil() as u64);
    // t -> 0: all mass at the origin.
    let fm0 = favoured_mass(
        &inst.field,
        &inst.model,
        LogMagnitude::from_ln(-30.0),
        &aux,
        inst.trunc_budget,
        inst.field.len() as u64,
    )
    .unwrap();
    assert_eq!(fm0.argmax, 0);
    assert!(fm0.sup_mass > 1.0 - 1e-9);
}

#[test]
fn mc_occupation_law_on_longer_segment() {
    // Occupation at z before absorption is Exp with mean 2(b-z) sigma_z
    // regardless of the rest of the landscape.
    let values = [1.0, 3.0, 0.5, 1.2, 2.4, 0.8, 1.7];
    let traps = mags(&values);
    let solver =
        QuenchedSolver::build(&traps, (Boundary::Reflecting, Boundary::Absorbing)).unwrap();
    let (z, b) = (3usize, values.len() - 1);
    let mean = 2.0 * (b - z) as f64 * values[z];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut occs: Vec<f64> = (0..10_000)
        .map(|_| {
            mc::occupation_before_absorption(&solver.segment, 0, z, &mut rng, 50_000_000)
                .unwrap()
                .to_linear_checked()
                .unwrap()
        })
        .collect();
    let ks = numeric::ks_distance_one_sample(&mut occs, |x| 1.0 - (-(x / mean)).exp());
    assert!(ks <= 0.03, "occupation KS {ks}");
}
