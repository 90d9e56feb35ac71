//! Event-driven Monte Carlo simulation of the walk, used as an
//! independent oracle against the spectral solver.
//!
//! Holding times are exponential with mean `sigma_x` at interior sites
//! and `2 sigma_x` where only one neighbour exists; jumps pick a
//! neighbour uniformly. On the unbounded half-line the trap cache grows
//! adaptively — the walk cannot pass position = number of jumps.

use rand::Rng;
use rand_distr::Exp1;

use crate::error::{Error, Result};
use crate::landscape::TrapField;
use crate::logreal::LogMagnitude;
use crate::quenched::solver::{Boundary, Segment};

pub const DEFAULT_STEP_BUDGET: u64 = 50_000_000;

/// Position of the walk at (scaled) time `t`, honoring the segment
/// boundaries; an absorbing end is terminal.
pub fn endpoint(
    segment: &Segment,
    start: usize,
    t: LogMagnitude,
    rng: &mut impl Rng,
    step_budget: u64,
) -> Result<usize> {
    let tau = segment.scaled_time_ln(t).exp();
    if !tau.is_finite() {
        return Err(Error::Domain("horizon not representable after rescaling".into()));
    }
    let n = segment.len();
    let (left, right) = segment.boundary();
    let mut x = start;
    let mut clock = 0.0f64;
    for step in 0..step_budget {
        let absorbed = (x == 0 && left == Boundary::Absorbing)
            || (x == n - 1 && right == Boundary::Absorbing);
        if absorbed {
            return Ok(x);
        }
        let hold: f64 = rng.sample::<f64, _>(Exp1) * segment.mean_holding_scaled(x);
        if clock + hold > tau {
            return Ok(x);
        }
        clock += hold;
        x = jump(x, n, rng);
        let _ = step;
    }
    Err(Error::StepBudget { budget: step_budget, time_reached: clock / tau })
}

/// Time to absorption (original units). Requires an absorbing end.
pub fn hitting_time(
    segment: &Segment,
    start: usize,
    rng: &mut impl Rng,
    step_budget: u64,
) -> Result<LogMagnitude> {
    let n = segment.len();
    let (left, right) = segment.boundary();
    if left != Boundary::Absorbing && right != Boundary::Absorbing {
        return Err(Error::Domain("hitting time needs an absorbing end".into()));
    }
    let mut x = start;
    let mut clock = 0.0f64;
    for _ in 0..step_budget {
        if (x == 0 && left == Boundary::Absorbing) || (x == n - 1 && right == Boundary::Absorbing)
        {
            return Ok(LogMagnitude::from_ln(clock.ln() + segment.ln_time_scale()));
        }
        clock += rng.sample::<f64, _>(Exp1) * segment.mean_holding_scaled(x);
        x = jump(x, n, rng);
    }
    Err(Error::StepBudget { budget: step_budget, time_reached: clock })
}

/// Total time spent at `site` before absorption (original units;
/// zero-magnitude when the site is never visited).
pub fn occupation_before_absorption(
    segment: &Segment,
    start: usize,
    site: usize,
    rng: &mut impl Rng,
    step_budget: u64,
) -> Result<LogMagnitude> {
    let n = segment.len();
    let (left, right) = segment.boundary();
    if left != Boundary::Absorbing && right != Boundary::Absorbing {
        return Err(Error::Domain("occupation time needs an absorbing end".into()));
    }
    let mut x = start;
    let mut occupied = 0.0f64;
    for _ in 0..step_budget {
        if (x == 0 && left == Boundary::Absorbing) || (x == n - 1 && right == Boundary::Absorbing)
        {
            return Ok(if occupied == 0.0 {
                LogMagnitude::ZERO
            } else {
                LogMagnitude::from_ln(occupied.ln() + segment.ln_time_scale())
            });
        }
        let hold: f64 = rng.sample::<f64, _>(Exp1) * segment.mean_holding_scaled(x);
        if x == site {
            occupied += hold;
        }
        x = jump(x, n, rng);
    }
    Err(Error::StepBudget { budget: step_budget, time_reached: occupied })
}

fn jump(x: usize, n: usize, rng: &mut impl Rng) -> usize {
    if x == 0 {
        1
    } else if x == n - 1 {
        x - 1
    } else if rng.gen::<bool>() {
        x + 1
    } else {
        x - 1
    }
}

/// Endpoint of the half-line walk started at 0 with horizon `t` (linear
/// scale). The trap cache grows as the walk explores; traps so deep that
/// the remaining horizon cannot outlast one holding time park the walk.
pub fn endpoint_on_landscape(
    field: &impl TrapField,
    t: f64,
    rng: &mut impl Rng,
    step_budget: u64,
) -> Result<u64> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::Domain(format!("horizon must be finite and positive, got {t}")));
    }
    let mut ln_sigma: Vec<f64> = Vec::new();
    let fetch = |pos: u64, cache: &mut Vec<f64>| -> Result<f64> {
        while cache.len() <= pos as usize {
            if let Some(limit) = field.limit() {
                if cache.len() as u64 >= limit {
                    return Err(Error::InsufficientLandscape {
                        needed: pos + 1,
                        reached: limit,
                    });
                }
            }
            cache.push(field.trap_at(cache.len() as u64).ln());
        }
        Ok(cache[pos as usize])
    };

    let mut x = 0u64;
    let mut clock = 0.0f64;
    for _ in 0..step_budget {
        let ls = fetch(x, &mut ln_sigma)?;
        let remaining = t - clock;
        // A trap much deeper than the remaining horizon holds the walk
        // past t with probability 1 - O(1e-18).
        if ls > remaining.ln() + 40.0 {
            return Ok(x);
        }
        let mean = if x == 0 { 2.0 * ls.exp() } else { ls.exp() };
        let hold: f64 = rng.sample::<f64, _>(Exp1) * mean;
        if clock + hold > t {
            return Ok(x);
        }
        clock += hold;
        x = if x == 0 {
            1
        } else if rng.gen::<bool>() {
            x + 1
        } else {
            x - 1
        };
    }
    Err(Error::StepBudget { budget: step_budget, time_reached: clock / t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quenched::solver::QuenchedSolver;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mags(values: &[f64]) -> Vec<LogMagnitude> {
        values.iter().map(|&v| LogMagnitude::from_linear(v).unwrap()).collect()
    }

    #[test]
    fn deep_trap_dominance_matches_spectral() {
        // sigma = (1, 1e6, 1, 1), start 0, t = 1e3: nearly all paths sit
        // in the deep trap; agreement within 3 standard errors.
        let traps = mags(&[1.0, 1e6, 1.0, 1.0]);
        let solver =
            QuenchedSolver::build(&traps, (Boundary::Reflecting, Boundary::Reflecting)).unwrap();
        let t = LogMagnitude::from_linear(1e3).unwrap();
        let exact = solver.distribution_at(0, t).unwrap().probs[1];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let paths = 10_000;
        let mut hits = 0;
        for _ in 0..paths {
            if endpoint(&solver.segment, 0, t, &mut rng, 1_000_000).unwrap() == 1 {
                hits += 1;
            }
        }
        let emp = hits as f64 / paths as f64;
        let se = (exact * (1.0 - exact) / paths as f64).sqrt().max(1e-4);
        assert!(
            (emp - exact).abs() <= 3.0 * se,
            "empirical {emp} vs exact {exact} (se {se})"
        );
    }

    #[test]
    fn landscape_endpoint_agrees_with_segment() {
        // Finite planted field: the adaptive half-line walker and the
        // segment walker share the law (wall far beyond reach).
        let mut traps = vec![1.0, 50.0, 2.0];
        traps.extend(std::iter::repeat(0.5).take(60));
        let field = crate::landscape::PlantedLandscape::from_linear(&traps).unwrap();
        let seg_traps = mags(&traps);
        let solver =
            QuenchedSolver::build(&seg_traps, (Boundary::Reflecting, Boundary::Reflecting))
                .unwrap();
        let t = 40.0;
        let exact = solver
            .distribution_at(0, LogMagnitude::from_linear(t).unwrap())
            .unwrap()
            .probs[1];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let paths = 8_000;
        let mut hits = 0;
        for _ in 0..paths {
            if endpoint_on_landscape(&field, t, &mut rng, 1_000_000).unwrap() == 1 {
                hits += 1;
            }
        }
        let emp = hits as f64 / paths as f64;
        let se = (exact * (1.0 - exact) / paths as f64).sqrt();
        assert!((emp - exact).abs() <= 3.5 * se, "empirical {emp} vs exact {exact}");
    }
}
