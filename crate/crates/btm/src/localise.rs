//! The localisation-set construction, relocalisation audits, and the
//! near-record favourable-event detector.
//!
//! The set is built from two record sites: the inner site `z_I` (the
//! argmax before the hyperbolic exceedence, which the walk has certainly
//! reached) and the outer site `z_O` obtained by chaining to successively
//! deeper traps within windows `h_t max{t/sigma, 1}`. The outer boundary
//! `O_t` extends one window past `z_O`; the lower boundary `D_t` is the
//! largest level whose strictly-below sum stays under `sigma_{z_I}/h_t`.
//! The localisation set holds every position left of `O_t` with depth at
//! least `D_t`.
//!
//! The lower boundary is computed from an explicit ascending prefix sum,
//! never by subtraction, so no cancellation is involved.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{hyperbolic_exceedence, RecordEntry, RecordSkeleton, TrapField};
use crate::logreal::{LogMagnitude, LseAccumulator};
use crate::tails::{AuxFunction, TailModel};

/// Localisation data for a single time.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LocalisationSnapshot {
    pub t: LogMagnitude,
    pub ell_t: LogMagnitude,
    /// `Z_t`: the first exceedence of the level `ell_t`.
    pub z_t: u64,
    /// Inner record site (argmax before the hyperbolic exceedence).
    pub z_inner: u64,
    /// Chain of record sites from `z_inner` to `z_outer`, strictly
    /// increasing in position and depth.
    pub chain: Vec<u64>,
    pub z_outer: u64,
    /// Real-valued right boundary.
    pub o_t: f64,
    /// Lower boundary: the exact trap value achieving the max.
    pub d_t: LogMagnitude,
    /// Sorted positions `x < O_t` with `sigma_x >= D_t`.
    pub gamma: Vec<u64>,
}

/// Streams records until `n` of them are found.
pub fn records_until(field: &impl TrapField, n: usize, i_cap: u64) -> Result<Vec<RecordEntry>> {
    let cap = field.limit().map_or(i_cap, |l| l.min(i_cap));
    let mut out = Vec::with_capacity(n);
    let mut sum = LseAccumulator::new();
    let mut max = LogMagnitude::ZERO;
    for pos in 0..cap {
        let sigma = field.trap_at(pos);
        if sigma > max {
            out.push(RecordEntry { position: pos, sigma, sum_before: sum.total() });
            max = sigma;
            if out.len() == n {
                return Ok(out);
            }
        }
        sum.push(sigma);
    }
    Err(Error::InsufficientLandscape { needed: cap + 1, reached: cap })
}

/// Chain window above `y`: `h max{t/sigma_y, 1}` on the linear scale
/// (saturating to infinity, which the caller must bound by its cap).
fn window_width(t: LogMagnitude, sigma_y: LogMagnitude, h: f64) -> f64 {
    let ratio_ln = (t.ln() - sigma_y.ln()).max(0.0);
    (h.ln() + ratio_ln).exp()
}

/// Runs the chaining procedure from `start` at time `t`: repeatedly move
/// to the first strictly deeper trap inside the open window
/// `(y, y + h_t max{t/sigma_y, 1})`, until no such trap exists.
///
/// Open integer windows: candidates are `y+1 ..= ceil(y+w)-1`; a width
/// `w <= 1` gives an empty window and terminates the chain.
pub fn chain_from(
    field: &impl TrapField,
    start: u64,
    t: LogMagnitude,
    aux: &AuxFunction,
    i_cap: u64,
) -> Result<Vec<u64>> {
    let h = aux.eval(t);
    let cap = field.limit().map_or(i_cap, |l| l.min(i_cap));
    let mut chain = vec![start];
    let mut y = start;
    let mut sigma_y = field.trap_at(y);
    loop {
        let w = window_width(t, sigma_y, h);
        let end = y as f64 + w; // exclusive real endpoint
        let last = (end.ceil() - 1.0).min((cap - 1) as f64);
        let mut found = None;
        let mut z = y + 1;
        while (z as f64) <= last {
            let sigma_z = field.trap_at(z);
            if sigma_z > sigma_y {
                found = Some((z, sigma_z));
                break;
            }
            z += 1;
        }
        match found {
            Some((z, sigma_z)) => {
                chain.push(z);
                y = z;
                sigma_y = sigma_z;
            }
            None => {
                if end > cap as f64 {
                    // The window ran past the available positions, so the
                    // chain cannot be certified complete.
                    return Err(Error::InsufficientLandscape {
                        needed: end.min(u64::MAX as f64) as u64,
                        reached: cap,
                    });
                }
                return Ok(chain);
            }
        }
    }
}

/// Lower boundary from the general construction: the largest level whose
/// strictly-below sum over positions `< n_positions` stays under
/// `threshold`. Returns the trap value achieving the max and the number
/// of positions inspected.
///
/// Works on the ascending sorted traps with a running log-sum; the answer
/// is the first trap whose inclusion reaches the threshold. The floor
/// `h >= 2` guarantees the threshold sits below the inner-site depth, so
/// the scan always stops at a real trap.
pub fn lower_boundary(
    field: &impl TrapField,
    n_positions: u64,
    threshold: LogMagnitude,
) -> LogMagnitude {
    let mut traps: Vec<LogMagnitude> = (0..n_positions).map(|p| field.trap_at(p)).collect();
    traps.sort();
    let mut acc = LseAccumulator::new();
    for v in traps {
        let mut tentative = acc;
        tentative.push(v);
        if tentative.total() < threshold {
            acc = tentative;
        } else {
            return v;
        }
    }
    unreachable!("threshold lies below the total sum by the aux floor")
}

/// Builds the localisation snapshot at time `t`.
pub fn build_snapshot(
    field: &impl TrapField,
    model: &TailModel,
    t: LogMagnitude,
    aux: &AuxFunction,
    i_cap: u64,
) -> Result<LocalisationSnapshot> {
    let ell_t = crate::landscape::ell_of_t(model, t)?;
    let z_t = crate::landscape::first_exceedence(field, ell_t, i_cap)?.position;
    let hyp = hyperbolic_exceedence(field, t, aux, i_cap)?;
    let z_inner = hyp.argmax_position;
    let chain = chain_from(field, z_inner, t, aux, i_cap)?;
    let z_outer = *chain.last().expect("chain contains its start");
    let h = aux.eval(t);
    let o_t = z_outer as f64 + window_width(t, field.trap_at(z_outer), h);

    let cap = field.limit().map_or(i_cap, |l| l.min(i_cap));
    let n_positions = o_t.ceil() as u64;
    if n_positions > cap {
        return Err(Error::InsufficientLandscape { needed: n_positions, reached: cap });
    }
    let threshold = field.trap_at(z_inner).div(LogMagnitude::from_linear(h)?)?;
    let d_t = lower_boundary(field, n_positions, threshold);
    let gamma: Vec<u64> = (0..n_positions).filter(|&x| field.trap_at(x) >= d_t).collect();

    Ok(LocalisationSnapshot { t, ell_t, z_t, z_inner, chain, z_outer, o_t, d_t, gamma })
}

/// The relocalisation time between records `n-1` and `n`: the unique `t`
/// with `t / h_t` equal to `S_(n)^-` times the number of positions before
/// the record (the spec fixes 0-based positions, so the 1-based paper
/// factor `r_n - 1` is the record's position value).
pub fn reloc_time(skeleton: &RecordSkeleton, n: usize, aux: &AuxFunction) -> Result<LogMagnitude> {
    if n < 2 {
        return Err(Error::Domain(format!("relocalisation time needs n >= 2, got {n}")));
    }
    let entry = skeleton
        .record(n)
        .ok_or_else(|| Error::Domain(format!("skeleton has {} records, need {n}", skeleton.len())))?;
    let rhs_ln = entry.sum_before.ln() + (entry.position as f64).ln();
    Ok(LogMagnitude::from_ln(aux.solve_t_over_h(rhs_ln)))
}

/// Relocalisation audit at the instants just before `t_n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelocalisationAudit {
    pub n: usize,
    pub t_n: LogMagnitude,
    pub o_n: f64,
    pub d_n: LogMagnitude,
    /// Positions in `(r_n, O_n)` with depth above `sigma_(n-1)`.
    pub r1: Vec<u64>,
    /// Positions below `O_n` with depth in `[D_n, sigma_(n-1))`.
    pub r2: Vec<u64>,
    /// Lower boundary and R2 count under the alternative reading of the
    /// audit level (no division by `h`); reported alongside the default.
    pub d_n_undivided: LogMagnitude,
    pub r2_undivided_len: usize,
}

/// Runs the general chaining construction from `r_{n-1}` at time `t_n`
/// and classifies the extra sites that could enter the localisation set.
///
/// The audit level is `sigma_(n-1) / h_{t_n}` (the general construction's
/// level slot evaluated at the inner site); the undivided alternative is
/// reported as well.
pub fn audit_r1_r2(
    field: &impl TrapField,
    n: usize,
    aux: &AuxFunction,
    i_cap: u64,
) -> Result<RelocalisationAudit> {
    if n < 2 {
        return Err(Error::Domain(format!("audit needs n >= 2, got {n}")));
    }
    let records = records_until(field, n, i_cap)?;
    let skeleton =
        RecordSkeleton { entries: records.clone(), approximate: false, blocks: Vec::new() };
    let t_n = reloc_time(&skeleton, n, aux)?;
    let prev = records[n - 2];
    let this = records[n - 1];

    let chain = chain_from(field, prev.position, t_n, aux, i_cap)?;
    let z_outer = *chain.last().unwrap();
    let h = aux.eval(t_n);
    let o_n = z_outer as f64 + window_width(t_n, field.trap_at(z_outer), h);
    let cap = field.limit().map_or(i_cap, |l| l.min(i_cap));
    let n_positions = o_n.ceil() as u64;
    if n_positions > cap {
        return Err(Error::InsufficientLandscape { needed: n_positions, reached: cap });
    }

    let divided = prev.sigma.div(LogMagnitude::from_linear(h)?)?;
    let d_n = lower_boundary(field, n_positions, divided);
    let d_n_undivided = lower_boundary(field, n_positions, prev.sigma);

    let mut r1 = Vec::new();
    let mut r2 = Vec::new();
    let mut r2_undivided_len = 0;
    for x in 0..n_positions {
        let sigma = field.trap_at(x);
        if x > this.position && (x as f64) < o_n && sigma > prev.sigma {
            r1.push(x);
        }
        if sigma < prev.sigma {
            if sigma >= d_n {
                r2.push(x);
            }
            if sigma >= d_n_undivided {
                r2_undivided_len += 1;
            }
        }
    }

    Ok(RelocalisationAudit { n, t_n, o_n, d_n, r1, r2, d_n_undivided, r2_undivided_len })
}

/// The near-record parameter tuple of the favourable event.
///
/// The final-gap window `(1/eps1, 1/eps2)` must be nonempty, which
/// requires `eps2 < eps1` (the balanced-localisation corollary picks
/// `eps1 = eps^6`, `eps2 = eps^7`).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct EpsilonTuple {
    pub e0: f64,
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub e4: f64,
    pub e5: f64,
    pub e6: f64,
    pub e7: f64,
}

impl EpsilonTuple {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eps0", self.e0),
            ("eps1", self.e1),
            ("eps2", self.e2),
            ("eps3", self.e3),
            ("eps4", self.e4),
            ("eps5", self.e5),
            ("eps6", self.e6),
            ("eps7", self.e7),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Domain(format!("{name} must lie in (0,1), got {v}")));
            }
        }
        if !(self.e2 < self.e1) {
            return Err(Error::Domain(format!(
                "the final-gap window (1/eps1, 1/eps2) is empty unless eps2 < eps1; \
                 got eps1 = {}, eps2 = {}",
                self.e1, self.e2
            )));
        }
        Ok(())
    }

    /// The single-parameter scheme of the balanced-localisation corollary:
    /// `eps0 = eps5 = eps^2`, `eps1 = eps6 = eps^6`, `eps3 = eps7 = eps`,
    /// `eps2 = eps^7`, `eps4 = 1/(4 log n)`.
    pub fn corollary_scheme(eps: f64, n: usize) -> Result<Self> {
        let tuple = EpsilonTuple {
            e0: eps * eps,
            e1: eps.powi(6),
            e2: eps.powi(7),
            e3: eps,
            e4: 1.0 / (4.0 * (n.max(2) as f64).ln()),
            e5: eps * eps,
            e6: eps.powi(6),
            e7: eps,
        };
        tuple.validate()?;
        Ok(tuple)
    }
}

/// Clause-by-clause evaluation of the favourable event.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EventClauses {
    pub eps: EpsilonTuple,
    /// `z_N = r_n`.
    pub final_site_is_record: bool,
    /// `(z_N - z_{N-1}) / Lambda_{n-1}` lies in `(1/eps1, 1/eps2)`.
    pub final_gap_in_window: bool,
    /// `(z_{N-1} - z_1) / Lambda_{n-1} < 1/eps3`.
    pub inner_span_small: bool,
    /// `z_1 / Lambda_{n-1} < 1/eps4`.
    pub start_near_origin: bool,
    /// Off-site sum below `z_N` under `eps4 sigma_(n-1)`.
    pub off_site_sum_small: bool,
    /// `sigma_(n) > sigma_(n-1) / eps5`.
    pub record_jump_large: bool,
    /// Right-window sum (closed window) under `eps7 sigma_(n-1)`.
    pub right_window_sum_small: bool,
    /// Right-window sum over the open window (used by the reduced event).
    pub right_window_sum_small_open: bool,
    /// The full event: all clauses above (closed right window).
    pub event_holds: bool,
    /// The reduced event: drops the origin and off-site clauses and uses
    /// the open right window.
    pub event_tilde_holds: bool,
}

/// Near-record sites and, when requested, the favourable-event clauses.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FavourableSites {
    pub n: usize,
    pub eps0: f64,
    /// `z_1 .. z_N`, with `z_1 = r_{n-1}`.
    pub sites: Vec<u64>,
    pub sigma_nm1: LogMagnitude,
    /// `Lambda_{n-1} = L((1 - eps0) sigma_(n-1))`.
    pub lambda_nm1: LogMagnitude,
    pub clauses: Option<EventClauses>,
}

/// The deterministic near-record scan: `z_1 = r_{n-1}` and each later
/// site is the next position whose depth exceeds `(1-eps0) sigma_(n-1)`.
pub fn near_record_sites(
    field: &impl TrapField,
    model: &TailModel,
    n: usize,
    eps0: f64,
    n_sites: usize,
    i_cap: u64,
) -> Result<FavourableSites> {
    if n < 2 {
        return Err(Error::Domain(format!("near-record sites need n >= 2, got {n}")));
    }
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::Domain(format!("eps0 must lie in (0,1), got {eps0}")));
    }
    if n_sites < 2 {
        return Err(Error::Domain(format!("need at least 2 sites, got {n_sites}")));
    }
    let records = records_until(field, n - 1, i_cap)?;
    let prev = records[n - 2];
    let threshold = prev.sigma.scale(1.0 - eps0)?;
    let cap = field.limit().map_or(i_cap, |l| l.min(i_cap));

    let mut sites = vec![prev.position];
    let mut z = prev.position;
    while sites.len() < n_sites {
        z += 1;
        if z >= cap {
            return Err(Error::InsufficientLandscape { needed: z + 1, reached: cap });
        }
        if field.trap_at(z) > threshold {
            sites.push(z);
        }
    }

    Ok(FavourableSites {
        n,
        eps0,
        sites,
        sigma_nm1: prev.sigma,
        lambda_nm1: model.l(threshold),
        clauses: None,
    })
}

/// Evaluates every clause of the favourable event literally, returning
/// the per-clause booleans. The number of sites is the model's
/// localisation count.
pub fn favourable_event(
    field: &impl TrapField,
    model: &TailModel,
    n: usize,
    eps: &EpsilonTuple,
    i_cap: u64,
) -> Result<FavourableSites> {
    eps.validate()?;
    let n_sites = model.analytic_n().n as usize;
    let mut out = near_record_sites(field, model, n, eps.e0, n_sites, i_cap)?;
    let records = records_until(field, n, i_cap)?;
    let this = records[n - 1];
    let sigma_nm1 = out.sigma_nm1;
    let lambda_ln = out.lambda_nm1.ln();

    let z_first = out.sites[0];
    let z_last = *out.sites.last().unwrap();
    let z_second_last = out.sites[out.sites.len() - 2];

    let final_site_is_record = z_last == this.position;
    let gap_ln = ((z_last - z_second_last) as f64).ln();
    let final_gap_in_window = gap_ln > lambda_ln - eps.e1.ln() && gap_ln < lambda_ln - eps.e2.ln();
    let span = (z_second_last - z_first) as f64;
    let inner_span_small = span.ln() < lambda_ln - eps.e3.ln();
    let start_near_origin = if z_first == 0 {
        true
    } else {
        (z_first as f64).ln() < lambda_ln - eps.e4.ln()
    };

    let mut off_site = LseAccumulator::new();
    for x in 0..z_last {
        if !out.sites[..out.sites.len() - 1].contains(&x) {
            off_site.push(field.trap_at(x));
        }
    }
    let off_site_sum_small = off_site.total() < sigma_nm1.scale(eps.e4)?;

    let record_jump_large = this.sigma > sigma_nm1.scale(1.0 / eps.e5)?;

    let window_w = (lambda_ln - eps.e6.ln()).exp();
    let closed_end = z_last + window_w.floor() as u64;
    let open_end = z_last + (window_w.ceil() as u64).saturating_sub(1);
    let cap = field.limit().map_or(i_cap, |l| l.min(i_cap));
    if closed_end.max(open_end) >= cap {
        return Err(Error::InsufficientLandscape {
            needed: closed_end.max(open_end) + 1,
            reached: cap,
        });
    }
    let mut right_closed = LseAccumulator::new();
    let mut right_open = LseAccumulator::new();
    for x in (z_last + 1)..=closed_end.max(open_end) {
        let sigma = field.trap_at(x);
        if x <= closed_end {
            right_closed.push(sigma);
        }
        if x <= open_end {
            right_open.push(sigma);
        }
    }
    let bound = sigma_nm1.scale(eps.e7)?;
    let right_window_sum_small = right_closed.total() < bound;
    let right_window_sum_small_open = right_open.total() < bound;

    let event_holds = final_site_is_record
        && final_gap_in_window
        && inner_span_small
        && start_near_origin
        && off_site_sum_small
        && record_jump_large
        && right_window_sum_small;
    let event_tilde_holds = final_site_is_record
        && final_gap_in_window
        && inner_span_small
        && record_jump_large
        && right_window_sum_small_open;

    out.clauses = Some(EventClauses {
        eps: *eps,
        final_site_is_record,
        final_gap_in_window,
        inner_span_small,
        start_near_origin,
        off_site_sum_small,
        record_jump_large,
        right_window_sum_small,
        right_window_sum_small_open,
        event_holds,
        event_tilde_holds,
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landscape::{scan, PlantedLandscape, ScanParams};
    use crate::logreal::lse_sum;
    use crate::tails::TailFamily;

    fn sl(gamma: f64) -> TailModel {
        TailModel::new(TailFamily::StretchedLog, gamma).unwrap()
    }

    fn planted(values: &[f64]) -> PlantedLandscape {
        PlantedLandscape::from_linear(values).unwrap()
    }

    #[test]
    fn snapshot_hand_walk() {
        // Traps (1, 100, 1, 1, ...); aux floor 2 and t = 100 give h = 2,
        // t/h = 50. The hyperbolic count is 2 (2 * 101 > 50), the inner
        // site is position 1, the chain stops immediately.
        let mut traps = vec![1.0, 100.0];
        traps.extend(std::iter::repeat(1.0).take(30));
        let field = planted(&traps);
        let aux = AuxFunction::default();
        let model = sl(0.5);
        let t = LogMagnitude::from_linear(100.0).unwrap();
        let snap = build_snapshot(&field, &model, t, &aux, 1000).unwrap();
        assert_eq!(snap.z_inner, 1);
        assert_eq!(snap.chain, vec![1]);
        assert_eq!(snap.z_outer, 1);
        // Window is h * max(t/sigma, 1) = 2, so O_t = 3.
        assert!((snap.o_t - 3.0).abs() < 1e-12);
        // Threshold 50: ascending prefix 1, 2 stays below, the next trap
        // (100) is the boundary. Gamma is the singleton {1}.
        assert!((snap.d_t.to_linear_checked().unwrap() - 100.0).abs() < 1e-12);
        assert_eq!(snap.gamma, vec![1]);
        assert!(snap.d_t <= field.trap_at(snap.z_inner));
    }

    #[test]
    fn snapshot_invariants_on_sampled_landscapes() {
        let model = sl(0.5);
        let aux = AuxFunction::default();
        for seed in 0..40u64 {
            let land = crate::landscape::Landscape::new(seed, model);
            for ln_t in [3.0, 8.0, 16.0, 23.0] {
                let t = LogMagnitude::from_ln(ln_t);
                let snap = build_snapshot(&land, &model, t, &aux, 1_000_000).unwrap();
                assert!(snap.gamma.contains(&snap.z_inner));
                assert!(snap.gamma.contains(&snap.z_outer));
                assert!(!snap.gamma.is_empty());
                assert!(snap.d_t <= land.trap_at(snap.z_inner));
                // Chain is strictly increasing in position and depth, and
                // z_outer is the deepest trap below O_t.
                for w in snap.chain.windows(2) {
                    assert!(w[1] > w[0]);
                    assert!(land.trap_at(w[1]) > land.trap_at(w[0]));
                }
                let max_below = (0..snap.o_t.ceil() as u64)
                    .map(|x| land.trap_at(x))
                    .max()
                    .unwrap();
                assert_eq!(max_below, land.trap_at(snap.z_outer));
            }
        }
    }

    #[test]
    fn lower_boundary_matches_brute_force() {
        // Brute force: try every candidate level (each trap value) and
        // keep the largest whose strictly-below sum stays under the
        // threshold.
        let field = planted(&[0.5, 3.0, 0.25, 8.0, 1.0, 2.0, 40.0, 0.75]);
        for threshold_lin in [0.3, 0.6, 1.0, 2.0, 5.0, 20.0, 39.0] {
            let threshold = LogMagnitude::from_linear(threshold_lin).unwrap();
            let d = lower_boundary(&field, 8, threshold);
            let mut best: Option<LogMagnitude> = None;
            for cand in field.traps() {
                let below = lse_sum(field.traps().iter().copied().filter(|s| s < cand));
                if below < threshold && best.map_or(true, |b| *cand > b) {
                    best = Some(*cand);
                }
            }
            assert_eq!(d, best.unwrap(), "threshold {threshold_lin}");
        }
    }

    #[test]
    fn reloc_time_constant_floor_and_monotone() {
        // Records at positions 0, 1, 3 with S^- growing; with a floor-3
        // aux and small right-hand sides, t_n = 3 * rhs exactly.
        let field = planted(&[1.0, 3.0, 0.5, 9.0, 0.1, 0.1]);
        let out = scan(&field, &ScanParams::new(6), 1).unwrap();
        let aux = AuxFunction::new(3.0).unwrap();
        let t2 = reloc_time(&out.skeleton, 2, &aux).unwrap();
        // rhs = S_(2)^- * r_2 = 1 * 1.
        assert!((t2.to_linear_checked().unwrap() - 3.0).abs() < 1e-9);
        let t3 = reloc_time(&out.skeleton, 3, &aux).unwrap();
        // rhs = S_(3)^- * r_3 = (1 + 3 + 0.5) * 3 = 13.5.
        assert!((t3.to_linear_checked().unwrap() - 40.5).abs() < 1e-7);
        assert!(t3 > t2);
        assert!(reloc_time(&out.skeleton, 1, &aux).is_err());

        // Residual on sampled skeletons with the default aux.
        let model = sl(0.5);
        let aux = AuxFunction::default();
        for seed in 0..10 {
            let sk = crate::landscape::sample_record_skeleton(&model, 8, seed, 0.5, 2).unwrap();
            for n in 2..=8 {
                let t = reloc_time(&sk, n, &aux).unwrap();
                let entry = sk.record(n).unwrap();
                let rhs_ln = entry.sum_before.ln() + (entry.position as f64).ln();
                let residual = t.ln() - aux.eval(t).ln() - rhs_ln;
                assert!(residual.abs() < 1e-9, "residual {residual}");
            }
        }
    }

    #[test]
    fn audit_quiet_landscape_is_empty() {
        // Records 1, 10, 100 with tiny fillers: nothing lands in R1/R2.
        let field = planted(&[
            1.0, 1e-4, 1e-4, 10.0, 1e-4, 1e-4, 1e-4, 1e-4, 100.0, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4,
            1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4,
            1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4, 1e-4,
        ]);
        let aux = AuxFunction::default();
        let audit = audit_r1_r2(&field, 3, &aux, 1000).unwrap();
        assert!(audit.r1.is_empty(), "r1 = {:?}", audit.r1);
        assert!(audit.r2.is_empty(), "r2 = {:?}", audit.r2);
        assert!(audit.r1.iter().all(|x| !audit.r2.contains(x)));
    }

    #[test]
    fn audit_detects_planted_near_record() {
        // A trap between sigma_(2) and sigma_(3) planted right after r_3.
        let mut traps = vec![1.0, 1e-4, 1e-4, 10.0, 1e-4, 1e-4, 1e-4, 1e-4, 100.0, 55.0];
        traps.extend(std::iter::repeat(1e-4).take(40));
        let field = planted(&traps);
        let aux = AuxFunction::default();
        let audit = audit_r1_r2(&field, 3, &aux, 1000).unwrap();
        assert!(audit.r1.contains(&9), "r1 = {:?}", audit.r1);
        // Disjointness and membership predicates.
        for &x in &audit.r1 {
            assert!(x > 8 && (x as f64) < audit.o_n);
            assert!(field.trap_at(x) > field.trap_at(3));
            assert!(!audit.r2.contains(&x));
        }
        for &x in &audit.r2 {
            assert!((x as f64) < audit.o_n);
            assert!(field.trap_at(x) >= audit.d_n && field.trap_at(x) < field.trap_at(3));
        }
    }

    #[test]
    fn boundary_nondecreasing_between_reloc_times() {
        let model = sl(0.5);
        let aux = AuxFunction::default();
        let land = crate::landscape::Landscape::new(17, model);
        let out = scan(&land, &ScanParams::new(200_000), 1).unwrap();
        let t4 = reloc_time(&out.skeleton, 4, &aux).unwrap();
        let t5 = reloc_time(&out.skeleton, 5, &aux).unwrap();
        let (lo, hi) = (t4.ln(), t5.ln());
        let mut prev = 0.0;
        for k in 1..20 {
            let ln_t = lo + (hi - lo) * k as f64 / 20.0;
            let snap =
                build_snapshot(&land, &model, LogMagnitude::from_ln(ln_t), &aux, 1_000_000)
                    .unwrap();
            assert!(snap.o_t >= prev, "O_t decreased: {} -> {}", prev, snap.o_t);
            prev = snap.o_t;
        }
    }

    #[test]
    fn near_record_sites_planted() {
        // Records at 0, 3; threshold-crossing near-records at 5 and 7,
        // next record at 9.
        let field = planted(&[
            1.0, 0.01, 0.01, 10.0, 0.01, 9.5, 0.01, 9.7, 0.01, 100.0, 0.01, 0.01,
        ]);
        let model = sl(0.55);
        let sites = near_record_sites(&field, &model, 3, 0.1, 3, 100).unwrap();
        assert_eq!(sites.sites, vec![3, 5, 7]);

        // eps0 -> 0: the next qualifying site is the record itself.
        let sites = near_record_sites(&field, &model, 3, 1e-9, 2, 100).unwrap();
        assert_eq!(sites.sites, vec![3, 9]);
    }

    #[test]
    fn favourable_event_planted_and_clause_isolation() {
        let model = sl(0.55); // N = 3
        assert_eq!(model.analytic_n().n, 3);
        // z_1 = r_2 at position 2 (records 0.9 then 10), z_2 near-record
        // at 4, z_3 = r_3 at 14 so the final gap of 10 sits inside the
        // window (Lambda/eps1, Lambda/eps2) = (5.4, 24.3); fillers tiny;
        // right window shallow.
        let mut traps = vec![0.9, 1e-6, 10.0, 1e-6, 9.8];
        traps.extend(std::iter::repeat(1e-6).take(9));
        traps.push(800.0);
        traps.extend(std::iter::repeat(1e-6).take(400));
        let field = planted(&traps);
        let eps = EpsilonTuple {
            e0: 0.1,
            e1: 0.9, // gap window (1.11, 5) * Lambda with Lambda = L(9) = 4.87
            e2: 0.2,
            e3: 0.5,
            e4: 0.3,
            e5: 0.1,
            e6: 0.5,
            e7: 0.1,
        };
        let fs = favourable_event(&field, &model, 3, &eps, 1000).unwrap();
        assert_eq!(fs.sites, vec![2, 4, 14]);
        let clauses = fs.clauses.unwrap();
        assert!(clauses.event_holds, "{clauses:?}");
        assert!(clauses.event_tilde_holds);

        // Shrinking the final record below 1/eps5 * sigma_(n-1) must flip
        // exactly the record-jump clause.
        let mut weak = traps.clone();
        weak[14] = 50.0; // below 10 / 0.1 = 100
        let field2 = planted(&weak);
        let fs2 = favourable_event(&field2, &model, 3, &eps, 1000).unwrap();
        let c2 = fs2.clauses.unwrap();
        assert!(!c2.record_jump_large);
        assert!(!c2.event_holds);
        assert!(
            c2.final_site_is_record
                && c2.final_gap_in_window
                && c2.inner_span_small
                && c2.start_near_origin
                && c2.off_site_sum_small
                && c2.right_window_sum_small
        );
    }

    #[test]
    fn epsilon_tuple_validation() {
        assert!(EpsilonTuple::corollary_scheme(0.5, 10).is_ok());
        let bad = EpsilonTuple { e0: 0.1, e1: 0.2, e2: 0.3, e3: 0.1, e4: 0.1, e5: 0.1, e6: 0.1, e7: 0.1 };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn near_record_count_matches_geometric_closed_form() {
        // Fixed record height v: the number of band near-records before
        // the next record has mean p/(1-p), with p the conditional band
        // probability. Stream Monte Carlo against the closed form.
        let model = sl(0.55);
        let v = model.l_inv_from_ln_l(3.0);
        let eps0 = 0.5;
        let lo = v.scale(1.0 - eps0).unwrap();
        let p = {
            // P(band | exceeds lo) among exceedences of lo.
            let la = model.ln_l(lo);
            let lv = model.ln_l(v);
            1.0 - (la - lv).exp()
        };
        let expect_mean = p / (1.0 - p);
        let mut total = 0u64;
        let trials = 10_000u64;
        let mut counter = 0u64;
        for _ in 0..trials {
            loop {
                let u = crate::landscape::counter_uniform(123_456, counter);
                counter += 1;
                let sigma = model.sample_trap(-u.ln()).unwrap();
                if sigma > v {
                    break;
                }
                if sigma > lo {
                    total += 1;
                }
            }
        }
        let mean = total as f64 / trials as f64;
        assert!(
            (mean - expect_mean).abs() / expect_mean < 0.05,
            "mean {mean} vs {expect_mean}"
        );
    }
}
