//! Hand-planted landscapes for the balanced-localisation and
//! favoured-site-trajectory experiments, together with the closed-form
//! mass windows and time brackets they are checked against.
//!
//! The instances are built so every clause of the favourable event holds
//! by construction (the builder re-verifies this through the literal
//! clause evaluator), the segment stays small enough for the spectral
//! solver, and the dynamic range keeps mass errors far below the window
//! slack.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::PlantedLandscape;
use crate::localise::{favourable_event, EpsilonTuple, FavourableSites};
use crate::logreal::LogMagnitude;
use crate::tails::{TailFamily, TailModel};

/// Lemma "probability mass on the final site": lower bound on
/// `P(X_{t_n} = z_N)`, namely
/// `(1/N)(1 - e5 (e4 + e7) - 6 e5 max(e1, e6) (1/e2 + 1/e3) N^2)`.
pub fn final_site_lower_bound(eps: &EpsilonTuple, n_sites: usize) -> f64 {
    let n = n_sites as f64;
    ((1.0 / n)
        * (1.0
            - eps.e5 * (eps.e4 + eps.e7)
            - 6.0 * eps.e5 * eps.e1.max(eps.e6) * (1.0 / eps.e2 + 1.0 / eps.e3) * n * n))
        .max(0.0)
}

/// Balancing proposition: lower bound on `P(X_{t_n} = z_i)` for the inner
/// sites, the product of the reach factor
/// `(N-1)/N - N e1 - e4/((N-1)(1-e0))` and the mixing factor
/// `1/(N-1) - 3 e0/(1-e0) - 8 sqrt(e0) - N e1/((1-e0) e0^2 e3)`.
/// Returns 0 when either factor or a precondition fails (the bound needs
/// `2 e4 <= e0 <= 1/N` and `N^2 e1 <= (1-e0) e0^2 e3`); at desk-scale
/// epsilon choices the mixing factor is typically vacuous.
pub fn inner_site_lower_bound(eps: &EpsilonTuple, n_sites: usize) -> f64 {
    let n = n_sites as f64;
    if n_sites < 2 || 2.0 * eps.e4 > eps.e0 || eps.e0 > 1.0 / n {
        return 0.0;
    }
    if n * n * eps.e1 > (1.0 - eps.e0) * eps.e0 * eps.e0 * eps.e3 {
        return 0.0;
    }
    let reach = (n - 1.0) / n - n * eps.e1 - eps.e4 / ((n - 1.0) * (1.0 - eps.e0));
    let mix = 1.0 / (n - 1.0)
        - 3.0 * eps.e0 / (1.0 - eps.e0)
        - 8.0 * eps.e0.sqrt()
        - n * eps.e1 / ((1.0 - eps.e0) * eps.e0 * eps.e0 * eps.e3);
    if reach <= 0.0 || mix <= 0.0 {
        return 0.0;
    }
    (reach * mix).max(0.0)
}

/// Bracket for `t_n / (Lambda_{n-1} sigma_(n-1))`:
/// `(2(1-e0)/(e1 N), 6 (1/e2 + 1/e3) N^2)`.
pub fn balance_time_bracket(eps: &EpsilonTuple, n_sites: usize) -> (f64, f64) {
    let n = n_sites as f64;
    (2.0 * (1.0 - eps.e0) / (eps.e1 * n), 6.0 * (1.0 / eps.e2 + 1.0 / eps.e3) * n * n)
}

/// Bound on `t_mix(8 sqrt(e0)) / (Lambda_{n-1} sigma_(n-1))`, valid when
/// `2 e4 <= e0 <= 1/N`: the bound is `N / (e0^2 e3)`.
pub fn mixing_time_bound(eps: &EpsilonTuple, n_sites: usize) -> Option<f64> {
    let n = n_sites as f64;
    (2.0 * eps.e4 <= eps.e0 && eps.e0 <= 1.0 / n).then(|| n / (eps.e0 * eps.e0 * eps.e3))
}

/// A fully verified balanced-localisation instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BalancedInstance {
    pub traps_linear: Vec<f64>,
    pub model: TailModel,
    /// Record index: `z_1 = r_{n-1}`.
    pub n: usize,
    pub n_sites: usize,
    pub eps: EpsilonTuple,
    pub sites: FavourableSites,
    pub sigma_nm1_linear: f64,
    pub lambda_nm1_linear: f64,
}

impl BalancedInstance {
    pub fn field(&self) -> PlantedLandscape {
        PlantedLandscape::from_linear(&self.traps_linear).expect("positive traps")
    }

    /// Traps of the segment `[0, z_N]` used for the balance-time search.
    pub fn segment_to_final_site(&self) -> Vec<LogMagnitude> {
        let z_n = *self.sites.sites.last().unwrap() as usize;
        self.traps_linear[..=z_n]
            .iter()
            .map(|&v| LogMagnitude::from_linear(v).unwrap())
            .collect()
    }

    /// Per-site mass windows `[lb_i, ub_i]` at the balance time: the final
    /// site combines its closed-form lower bound with the exact-CDF upper
    /// bound `1/N`; inner sites combine the (possibly vacuous) balancing
    /// lower bound with `1 - sum of the other lower bounds`.
    /// `mass_tol` absorbs truncation and spectral error.
    pub fn site_windows(&self, mass_tol: f64) -> Vec<(f64, f64)> {
        let n = self.n_sites;
        let lb_final = final_site_lower_bound(&self.eps, n);
        let lb_inner = inner_site_lower_bound(&self.eps, n);
        let mut windows = Vec::with_capacity(n);
        for i in 0..n {
            if i + 1 == n {
                windows.push(((lb_final - mass_tol).max(0.0), 1.0 / n as f64 + mass_tol));
            } else {
                let others = lb_final + lb_inner * (n - 2) as f64;
                windows.push(((lb_inner - mass_tol).max(0.0), 1.0 - others + mass_tol));
            }
        }
        windows
    }
}

/// Plants a balanced instance with `n_sites` in {2, 3}.
///
/// Geometry: a three-step ladder of shallow records, `z_1` carrying
/// `sigma_(n-1) = 5`, an optional near-record two sites later, and the
/// final record at distance `60 Lambda` (inside the `(Lambda/e1,
/// Lambda/e2)` window) carrying `10^4 sigma_(n-1)`. Fillers are small
/// enough that every sum clause holds with slack, and the dynamic range
/// stays near `e^23`, where the solver's validated accuracy is ample.
pub fn plant_balanced(n_sites: usize) -> Result<BalancedInstance> {
    if !(n_sites == 2 || n_sites == 3) {
        return Err(Error::Domain(format!("balanced instances support N in {{2,3}}, got {n_sites}")));
    }
    let model = match n_sites {
        2 => TailModel::new(TailFamily::StretchedLog, 0.3)?,
        _ => TailModel::new(TailFamily::StretchedLog, 0.55)?,
    };
    assert_eq!(model.analytic_n().n as usize, n_sites);

    let eps = EpsilonTuple {
        e0: 0.04,
        e1: 0.02,
        e2: 0.01,
        e3: 0.8,
        e4: 0.02,
        e5: 2e-4,
        e6: 0.02,
        e7: 0.1,
    };
    eps.validate()?;

    let v = 5.0f64;
    let filler = 1e-6 * v;
    let lambda = model
        .l(LogMagnitude::from_linear((1.0 - eps.e0) * v)?)
        .to_linear_checked()?;
    let gap = (60.0 * lambda).round() as usize;
    let right_window = (lambda / eps.e6).ceil() as usize;

    // Ladder records at 0..2, z_1 = r_4 at position 4.
    let z1 = 4usize;
    let z_mid = z1 + 2;
    let z_n = if n_sites == 3 { z_mid + gap } else { z1 + gap };
    let len = z_n + right_window + 220;

    let mut traps = vec![filler; len];
    traps[0] = 1e-5 * v;
    traps[1] = 1e-4 * v;
    traps[2] = 1e-3 * v;
    traps[z1] = v;
    if n_sites == 3 {
        traps[z_mid] = (1.0 - eps.e0 / 2.0) * v;
    }
    traps[z_n] = 1e4 * v;

    let field = PlantedLandscape::from_linear(&traps)?;
    let n = 5; // z_1 is the 4th record
    let sites = favourable_event(&field, &model, n, &eps, len as u64)?;
    let clauses = sites.clauses.as_ref().expect("clause evaluation requested");
    if !clauses.event_holds {
        return Err(Error::Domain(format!(
            "planted balanced instance failed its own favourable event: {clauses:?}"
        )));
    }
    if sites.sites.len() != n_sites || *sites.sites.last().unwrap() != z_n as u64 {
        return Err(Error::Domain(format!(
            "planted site chain {:?} does not match the construction",
            sites.sites
        )));
    }

    Ok(BalancedInstance {
        traps_linear: traps,
        model,
        n,
        n_sites,
        eps,
        sigma_nm1_linear: v,
        lambda_nm1_linear: lambda,
        sites,
    })
}

/// A trajectory instance: well-separated deep records so the favoured
/// site relocalises cleanly, plus a very deep backstop record that caps
/// the truncation wall.
#[derive(Clone, Debug)]
pub struct TrajectoryInstance {
    pub field: PlantedLandscape,
    pub model: TailModel,
    /// Arguments `n` for the relocalisation times `t_n` inside the
    /// experiment window (the walk moves from record `n-1` to `n`).
    pub reloc_ns: Vec<usize>,
    /// Effective number of localisation sites for the dip threshold.
    pub n_sites: usize,
    /// Truncation budget suited to the instance.
    pub trunc_budget: f64,
}

pub fn plant_trajectory() -> TrajectoryInstance {
    // Start trap 5.0 at the origin keeps the spectral mass scale tame;
    // records at 30, 300 and the backstop at 600 relocalise at widely
    // separated times t_2 ~ 1e2, t_3 ~ 7e6, t_4 ~ 1e10. The field runs
    // long enough past the backstop for the truncation wall at the
    // largest plotted time.
    let len = 1500usize;
    let mut traps = vec![0.01; len];
    traps[0] = 5.0;
    traps[30] = 8e3;
    traps[300] = 5e6;
    traps[600] = (23.0f64).exp();
    let field = PlantedLandscape::from_linear(&traps).unwrap();
    let model = TailModel::new(TailFamily::StretchedLog, 0.3).unwrap();
    TrajectoryInstance {
        field,
        model,
        reloc_ns: vec![2, 3],
        n_sites: 2,
        trunc_budget: 1e-5,
    }
}
