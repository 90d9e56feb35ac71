//! Exact quenched laws on finite segments via the spectral decomposition
//! of the symmetrized generator.
//!
//! The generator with rates `1/(2 sigma_x)` toward each neighbour is
//! similar, through `diag(sqrt(sigma))`, to a symmetric tridiagonal
//! matrix with off-diagonals `1/(2 sqrt(sigma_x sigma_y))`; its spectral
//! decomposition gives the transition law in closed form,
//! `p_t(x,y) = sum_k e^{lambda_k t} v_k(x) v_k(y) sqrt(sigma_y/sigma_x)`.
//!
//! The solver is the primary engine because the generator is stiff:
//! rates span many decades and uniformization's Poisson truncation blows
//! up at large `Lambda t`. Uniformization is retained as an independent
//! cross-check for mild regimes.
//!
//! Traps arrive as [`LogMagnitude`] values; the builder rescales them so
//! the log-values are centred at zero (recording the time scale), which
//! extends the usable dynamic range to the full float exponent budget.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::TrapField;
use crate::localise::LocalisationSnapshot;
use crate::logreal::{lse_sum, LogMagnitude, LseAccumulator};
use crate::quenched::eigen;
use crate::tails::{AuxFunction, TailModel};

/// Exponent-budget guard for the rescaled traps (natural-log units).
const LN_BUDGET: f64 = 680.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Reflecting,
    Absorbing,
}

/// A finite trap segment rescaled to the representable range.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Segment {
    sigma_ln: Vec<f64>,
    sigma_scaled: Vec<f64>,
    boundary: (Boundary, Boundary),
    /// Natural log of the factor by which original times divide:
    /// scaled time = original time * exp(-ln_time_scale).
    ln_time_scale: f64,
}

impl Segment {
    pub fn build(traps: &[LogMagnitude], boundary: (Boundary, Boundary)) -> Result<Segment> {
        if traps.len() < 2 {
            return Err(Error::Domain("segments need at least two sites".into()));
        }
        let sigma_ln: Vec<f64> = traps.iter().map(|s| s.ln()).collect();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &l in &sigma_ln {
            if !l.is_finite() {
                return Err(Error::Domain(
                    "segment traps must be finite and strictly positive".into(),
                ));
            }
            lo = lo.min(l);
            hi = hi.max(l);
        }
        if hi - lo > 2.0 * LN_BUDGET {
            return Err(Error::DynamicRange { ln_min: lo, ln_max: hi, budget: LN_BUDGET });
        }
        let shift = 0.5 * (hi + lo);
        let sigma_scaled: Vec<f64> = sigma_ln.iter().map(|l| (l - shift).exp()).collect();
        Ok(Segment { sigma_ln, sigma_scaled, boundary, ln_time_scale: shift })
    }

    pub fn len(&self) -> usize {
        self.sigma_ln.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma_ln.is_empty()
    }

    pub fn boundary(&self) -> (Boundary, Boundary) {
        self.boundary
    }

    pub fn ln_time_scale(&self) -> f64 {
        self.ln_time_scale
    }

    pub fn sigma_ln(&self) -> &[f64] {
        &self.sigma_ln
    }

    pub fn sigma_scaled(&self) -> &[f64] {
        &self.sigma_scaled
    }

    /// Original time -> scaled time, as a log-value.
    pub fn scaled_time_ln(&self, t: LogMagnitude) -> f64 {
        t.ln() - self.ln_time_scale
    }

    /// Active (non-absorbed) positions as a contiguous range.
    pub fn active_range(&self) -> std::ops::Range<usize> {
        let start = usize::from(self.boundary.0 == Boundary::Absorbing);
        let end = self.len() - usize::from(self.boundary.1 == Boundary::Absorbing);
        start..end
    }

    /// Mean holding time (scaled) at an active position: `sigma` interior,
    /// `2 sigma` where only one neighbour exists in the full segment.
    pub fn mean_holding_scaled(&self, position: usize) -> f64 {
        let neighbours = usize::from(position > 0) + usize::from(position + 1 < self.len());
        self.sigma_scaled[position] * 2.0 / neighbours as f64
    }
}

/// Spectral data of the symmetrized generator restricted to the active
/// sites.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    /// Nonincreasing; all `<= 0`, with the top value exactly 0 in the
    /// fully reflecting case.
    pub eigenvalues: Vec<f64>,
    vectors: Vec<f64>,
    n: usize,
    pub max_residual: f64,
    pub max_orthonormality_defect: f64,
    pub norm_inf: f64,
}

impl SpectralDecomposition {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vector_entry(&self, row: usize, k: usize) -> f64 {
        self.vectors[row * self.n + k]
    }
}

/// A segment together with its decomposition; one build serves many
/// queries and many threads.
#[derive(Clone, Debug)]
pub struct QuenchedSolver {
    pub segment: Segment,
    pub decomp: SpectralDecomposition,
    /// Negative-probability clamp threshold; the row-sum gate is ten
    /// times this. Default 1e-10. Wide dynamic ranges accumulate mass
    /// error like `eps n^{3/2} sqrt(sigma_max / sigma_start)`; callers
    /// reviewing that trade-off may loosen the tolerance, and the actual
    /// deficit is always reported on the distribution.
    pub mass_tolerance: f64,
}

/// Sampled orthonormality defect over a fixed probe set of column pairs.
fn sampled_orthonormality(vectors: &[f64], n: usize) -> f64 {
    let cols: Vec<usize> = if n <= 48 {
        (0..n).collect()
    } else {
        (0..16).chain(n - 16..n).chain((16..n - 16).step_by(n / 16)).collect()
    };
    let pairs: Vec<(usize, usize)> = cols
        .iter()
        .flat_map(|&j| cols.iter().filter(move |&&k| k >= j).map(move |&k| (j, k)))
        .collect();
    eigen::orthonormality_defect(vectors, n, &pairs)
}

/// A probability vector over segment positions (absorbed ends carry 0).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Distribution {
    pub probs: Vec<f64>,
    /// |1 - sum| before renormalization (reflecting case only).
    pub deficit: f64,
    /// Total negative mass clamped to zero.
    pub clamped: f64,
    pub renormalized: bool,
}

impl QuenchedSolver {
    pub fn build(traps: &[LogMagnitude], boundary: (Boundary, Boundary)) -> Result<Self> {
        let segment = Segment::build(traps, boundary)?;
        let active = segment.active_range();
        let n = active.len();
        if n == 0 {
            return Err(Error::Domain("no active sites between absorbing ends".into()));
        }

        let mut diag = vec![0.0; n];
        let mut off = vec![0.0; n.saturating_sub(1)];
        for (j, pos) in active.clone().enumerate() {
            let neighbours =
                usize::from(pos > 0) + usize::from(pos + 1 < segment.len());
            diag[j] = -(neighbours as f64) / (2.0 * segment.sigma_scaled[pos]);
            if j + 1 < n {
                // 1 / (2 sqrt(sigma_pos sigma_{pos+1})), computed in logs.
                let ln = -(2f64.ln())
                    - 0.5
                        * (segment.sigma_ln[pos] + segment.sigma_ln[pos + 1]
                            - 2.0 * segment.ln_time_scale);
                off[j] = ln.exp();
            }
        }
        let norm_inf = (0..n)
            .map(|i| {
                diag[i].abs()
                    + if i > 0 { off[i - 1].abs() } else { 0.0 }
                    + if i + 1 < n { off[i].abs() } else { 0.0 }
            })
            .fold(0.0, f64::max);

        let (mut eigenvalues, mut vectors) = eigen::symmetric_tridiagonal_eigen(&diag, &off)?;

        // The fully reflecting chain has a structural zero eigenvalue
        // whose eigenvector is known exactly (proportional to
        // sqrt(sigma)). Snap the value, pin the vector, and project the
        // remaining basis off it: the mass-balance identity then holds
        // by construction rather than to eigensolver accuracy.
        let fully_reflecting =
            boundary == (Boundary::Reflecting, Boundary::Reflecting);
        if fully_reflecting {
            if eigenvalues[0].abs() > 1e-10 * norm_inf.max(1.0) {
                return Err(Error::NumericalQuality(format!(
                    "reflecting chain lost its zero eigenvalue: got {}",
                    eigenvalues[0]
                )));
            }
            eigenvalues[0] = 0.0;
            let mut zero_mode: Vec<f64> = active
                .clone()
                .map(|pos| (0.5 * (segment.sigma_ln[pos] - segment.ln_time_scale)).exp())
                .collect();
            let norm = zero_mode.iter().map(|v| v * v).sum::<f64>().sqrt();
            for v in zero_mode.iter_mut() {
                *v /= norm;
            }
            for (row, &v) in zero_mode.iter().enumerate() {
                vectors[row * n] = v;
            }
            for k in 1..n {
                let dot: f64 = (0..n).map(|row| vectors[row * n + k] * zero_mode[row]).sum();
                let mut sq = 0.0;
                for row in 0..n {
                    vectors[row * n + k] -= dot * zero_mode[row];
                    sq += vectors[row * n + k] * vectors[row * n + k];
                }
                let inv = 1.0 / sq.sqrt();
                for row in 0..n {
                    vectors[row * n + k] *= inv;
                }
            }
            // Vectors inside near-degenerate slow clusters can pick up
            // mutual overlap from the projection; when the sampled
            // defect shows it, re-orthogonalize the whole basis by
            // modified Gram-Schmidt (cluster rotations are harmless).
            if sampled_orthonormality(&vectors, n) > 1e-11 {
                for k in 1..n {
                    for j in 0..k {
                        let dot: f64 = (0..n)
                            .map(|row| vectors[row * n + k] * vectors[row * n + j])
                            .sum();
                        for row in 0..n {
                            vectors[row * n + k] -= dot * vectors[row * n + j];
                        }
                    }
                    let sq: f64 = (0..n).map(|row| vectors[row * n + k].powi(2)).sum();
                    let inv = 1.0 / sq.sqrt();
                    for row in 0..n {
                        vectors[row * n + k] *= inv;
                    }
                }
            }
        }

        // Quality gates: residuals and orthonormality, exhaustive on
        // small problems and sampled on large ones.
        let columns: Vec<usize> = if n <= 256 {
            (0..n).collect()
        } else {
            (0..16).chain(n - 16..n).chain((16..n - 16).step_by(n / 24)).collect()
        };
        let max_residual = eigen::residual_inf(&diag, &off, &eigenvalues, &vectors, &columns);
        let pairs: Vec<(usize, usize)> = if n <= 256 {
            (0..n).flat_map(|j| (j..n).map(move |k| (j, k))).collect()
        } else {
            columns.iter().flat_map(|&j| columns.iter().map(move |&k| (j, k))).collect()
        };
        let max_orthonormality_defect = eigen::orthonormality_defect(&vectors, n, &pairs);
        if max_residual > 1e-10 * norm_inf.max(1.0) {
            return Err(Error::NumericalQuality(format!(
                "eigen residual {max_residual:.3e} exceeds 1e-10 * norm {norm_inf:.3e}"
            )));
        }
        if max_orthonormality_defect > 1e-10 {
            return Err(Error::NumericalQuality(format!(
                "eigenvector orthonormality defect {max_orthonormality_defect:.3e}"
            )));
        }

        Ok(QuenchedSolver {
            segment,
            decomp: SpectralDecomposition {
                eigenvalues,
                vectors,
                n,
                max_residual,
                max_orthonormality_defect,
                norm_inf,
            },
            mass_tolerance: 1e-10,
        })
    }

    /// Loosens the clamp/row-sum gates after a tolerance review (wide
    /// dynamic ranges); the reported deficit still travels with every
    /// distribution.
    pub fn with_mass_tolerance(mut self, tol: f64) -> Self {
        self.mass_tolerance = tol.max(1e-10);
        self
    }

    fn active_index(&self, position: usize) -> Result<usize> {
        let range = self.segment.active_range();
        if !range.contains(&position) {
            return Err(Error::Domain(format!(
                "position {position} is absorbed or outside the segment"
            )));
        }
        Ok(position - range.start)
    }

    /// `e^{lambda t}` with the product formed in log space, so times far
    /// beyond the float range select the surviving modes exactly.
    fn mode_factor(lambda: f64, ln_tau: f64) -> f64 {
        if lambda == 0.0 {
            return 1.0;
        }
        let s = lambda.abs().ln() + ln_tau;
        if s > 709.0 {
            0.0
        } else {
            (-s.exp()).exp()
        }
    }

    /// Raw spectral row `p_t(start, .)` over active sites, before any
    /// clamping policy.
    fn spectral_row(&self, start: usize, t: LogMagnitude) -> Result<Vec<f64>> {
        let xa = self.active_index(start)?;
        let ln_tau = self.segment.scaled_time_ln(t);
        let n = self.decomp.n;
        let active = self.segment.active_range();

        let mut coeff = vec![0.0; n];
        for k in 0..n {
            coeff[k] =
                Self::mode_factor(self.decomp.eigenvalues[k], ln_tau) * self.decomp.vector_entry(xa, k);
        }
        let mut row = vec![0.0; n];
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += coeff[k] * self.decomp.vector_entry(j, k);
            }
            // sqrt(sigma_y / sigma_x); the rescaling shift cancels.
            let pos = active.start + j;
            let scale =
                (0.5 * (self.segment.sigma_ln[pos] - self.segment.sigma_ln[start])).exp();
            row[j] = acc * scale;
        }
        Ok(row)
    }

    /// The quenched law at time `t` started from `start`.
    ///
    /// Negative entries below `-1e-10` are a numerical-quality error;
    /// tiny negatives are clamped to zero. Fully reflecting rows are
    /// renormalized when the deficit is within `1e-9`, otherwise they
    /// error out.
    pub fn distribution_at(&self, start: usize, t: LogMagnitude) -> Result<Distribution> {
        let row = self.spectral_row(start, t)?;
        let mut clamped = 0.0;
        let mut probs_active = Vec::with_capacity(row.len());
        for &p in &row {
            if p < -self.mass_tolerance {
                return Err(Error::NumericalQuality(format!(
                    "transition probability {p:.3e} below the clamp threshold {:.1e}",
                    self.mass_tolerance
                )));
            }
            if p < 0.0 {
                clamped -= p;
                probs_active.push(0.0);
            } else {
                probs_active.push(p);
            }
        }
        let sum: f64 = probs_active.iter().sum();
        let fully_reflecting =
            self.segment.boundary == (Boundary::Reflecting, Boundary::Reflecting);
        let mut deficit = 0.0;
        let mut renormalized = false;
        if fully_reflecting {
            deficit = (1.0 - sum).abs();
            if deficit > 10.0 * self.mass_tolerance {
                return Err(Error::NumericalQuality(format!(
                    "reflecting row sums to 1 - {deficit:.3e} (gate {:.1e})",
                    10.0 * self.mass_tolerance
                )));
            }
            for p in probs_active.iter_mut() {
                *p /= sum;
            }
            renormalized = true;
        }
        let mut probs = vec![0.0; self.segment.len()];
        let active = self.segment.active_range();
        probs[active].copy_from_slice(&probs_active);
        Ok(Distribution { probs, deficit, clamped, renormalized })
    }

    /// Survival probability (mass not yet absorbed) at time `t`.
    pub fn survival(&self, start: usize, t: LogMagnitude) -> Result<f64> {
        if self.segment.boundary == (Boundary::Reflecting, Boundary::Reflecting) {
            return Err(Error::Domain("survival needs at least one absorbing end".into()));
        }
        let row = self.spectral_row(start, t)?;
        let mut sum = 0.0;
        for &p in &row {
            if p < -self.mass_tolerance {
                return Err(Error::NumericalQuality(format!(
                    "survival component {p:.3e} below the clamp threshold {:.1e}",
                    self.mass_tolerance
                )));
            }
            sum += p.max(0.0);
        }
        Ok(sum.clamp(0.0, 1.0))
    }

    /// `P(tau <= t)` for the absorbing end(s).
    pub fn hitting_cdf(&self, start: usize, t: LogMagnitude) -> Result<f64> {
        Ok(1.0 - self.survival(start, t)?)
    }

    /// Stationary law of the fully reflecting chain: exactly
    /// `sigma_x / sum sigma`.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        if self.segment.boundary != (Boundary::Reflecting, Boundary::Reflecting) {
            return Err(Error::Domain("stationary law needs reflecting boundaries".into()));
        }
        let z = lse_sum(self.segment.sigma_ln.iter().map(|&l| LogMagnitude::from_ln(l)));
        Ok(self.segment.sigma_ln.iter().map(|&l| (l - z.ln()).exp()).collect())
    }
}

/// `E_x[tau_b]` on `[0, b]` with a reflecting left end: the exact sum
/// `sum_{z < b} 2 min{b - z, b - x} sigma_z`, formed in log space.
pub fn expected_hitting(traps: &[LogMagnitude], x: usize, b: usize) -> Result<LogMagnitude> {
    if b >= traps.len() || x > b {
        return Err(Error::Domain(format!(
            "need x <= b < len, got x = {x}, b = {b}, len = {}",
            traps.len()
        )));
    }
    let mut acc = LseAccumulator::new();
    for z in 0..b {
        let weight = 2 * (b - z).min(b - x);
        if weight > 0 {
            acc.push(traps[z].scale(weight as f64)?);
        }
    }
    Ok(acc.total())
}

/// Result of the balance-time search.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct BalanceTime {
    pub t: LogMagnitude,
    /// Achieved hitting CDF at `t` (within 1e-8 of the target).
    pub cdf: f64,
}

/// The unique time at which the hitting probability of the last site
/// equals `target`, for the walk started from 0 on `[0, len-1]` with a
/// reflecting origin. Bisection on `ln t` against the exact CDF.
pub fn balance_time(traps: &[LogMagnitude], target: f64) -> Result<BalanceTime> {
    balance_time_with_tolerance(traps, target, 1e-10)
}

/// [`balance_time`] with a reviewed mass tolerance for wide-range
/// segments.
pub fn balance_time_with_tolerance(
    traps: &[LogMagnitude],
    target: f64,
    mass_tol: f64,
) -> Result<BalanceTime> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target probability must be in (0,1), got {target}")));
    }
    let b = traps.len() - 1;
    let solver = QuenchedSolver::build(traps, (Boundary::Reflecting, Boundary::Absorbing))?
        .with_mass_tolerance(mass_tol);
    let expected = expected_hitting(traps, 0, b)?;
    let cdf_at = |ln_t: f64| solver.hitting_cdf(0, LogMagnitude::from_ln(ln_t));

    let mut lo = expected.ln() - 30.0;
    for _ in 0..40 {
        if cdf_at(lo)? < target {
            break;
        }
        lo -= 30.0;
    }
    // P(tau > t) <= E/t makes this upper bracket sufficient for any target.
    let mut hi = expected.ln() - (1.0 - target).ln() + 1.0;
    for _ in 0..40 {
        if cdf_at(hi)? >= target {
            break;
        }
        hi += 2.0;
    }
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..200 {
        mid = 0.5 * (lo + hi);
        let c = cdf_at(mid)?;
        if (c - target).abs() <= 1e-8 * 0.5 {
            break;
        }
        if c < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = LogMagnitude::from_ln(mid);
    let cdf = cdf_at(mid)?;
    if (cdf - target).abs() > 1e-8 {
        return Err(Error::NumericalQuality(format!(
            "balance-time residual {:.3e} above 1e-8",
            (cdf - target).abs()
        )));
    }
    Ok(BalanceTime { t, cdf })
}

/// Result of the restricted mixing-time search.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MixingTime {
    pub t: LogMagnitude,
    /// Worst-start L1 distance achieved at `t`.
    pub distance: f64,
    /// Whether the evaluations seen during the search were monotone
    /// nonincreasing (fallback grid scan triggers otherwise).
    pub monotone: bool,
}

/// The restricted mixing time: the first `t` at which the L1 distance to
/// stationarity, maximized over the given starts, drops to `eps`. The
/// caller supplies the modified landscape (e.g. with the final trap
/// replaced); the segment is fully reflecting.
pub fn mixing_time_restricted(
    traps: &[LogMagnitude],
    starts: &[usize],
    eps: f64,
) -> Result<MixingTime> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(Error::Domain(format!("mixing eps must be in (0,2), got {eps}")));
    }
    if starts.is_empty() {
        return Err(Error::Domain("mixing time needs at least one start".into()));
    }
    let solver = QuenchedSolver::build(traps, (Boundary::Reflecting, Boundary::Reflecting))?;
    let pi = solver.stationary()?;
    let dist_at = |ln_t: f64| -> Result<f64> {
        let mut worst = 0.0f64;
        for &z in starts {
            let d = solver.distribution_at(z, LogMagnitude::from_ln(ln_t))?;
            let l1: f64 = d.probs.iter().zip(&pi).map(|(p, q)| (p - q).abs()).sum();
            worst = worst.max(l1);
        }
        Ok(worst)
    };

    if dist_at(f64::NEG_INFINITY)? <= eps {
        return Ok(MixingTime { t: LogMagnitude::ZERO, distance: dist_at(f64::NEG_INFINITY)?, monotone: true });
    }

    // Bracket from the relaxation scale of the slowest nonzero mode.
    let gap = -solver.decomp.eigenvalues.get(1).copied().unwrap_or(-1.0);
    let mut hi = -gap.max(f64::MIN_POSITIVE).ln() + solver.segment.ln_time_scale;
    let mut lo = hi - 60.0;
    let mut evals: Vec<(f64, f64)> = Vec::new();
    let mut guard = 0;
    while dist_at(hi)? > eps {
        evals.push((hi, dist_at(hi)?));
        lo = hi;
        hi += std::f64::consts::LN_2;
        guard += 1;
        if guard > 400 {
            return Err(Error::NumericalQuality("mixing-time bracket failed to close".into()));
        }
    }
    while dist_at(lo)? <= eps {
        hi = lo;
        lo -= 4.0;
        guard += 1;
        if guard > 400 {
            // eps is met arbitrarily early; report time zero.
            return Ok(MixingTime { t: LogMagnitude::ZERO, distance: dist_at(lo)?, monotone: true });
        }
    }

    let monotone = {
        evals.sort_by(|a, b| a.0.total_cmp(&b.0));
        evals.windows(2).all(|w| w[1].1 <= w[0].1 + 1e-12)
    };
    if monotone {
        for _ in 0..120 {
            let mid = 0.5 * (lo + hi);
            if dist_at(mid)? <= eps {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-10 * hi.abs().max(1.0) {
                break;
            }
        }
    } else {
        // Conservative fallback: fine grid scan for the first crossing.
        let mut found = hi;
        for k in 0..=2048 {
            let ln_t = lo + (hi - lo) * k as f64 / 2048.0;
            if dist_at(ln_t)? <= eps {
                found = ln_t;
                break;
            }
        }
        hi = found;
    }
    Ok(MixingTime { t: LogMagnitude::from_ln(hi), distance: dist_at(hi)?, monotone })
}

/// A reflecting wall certified by the hitting-time lower bound.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Wall {
    /// Exclusive upper end of the truncated segment.
    pub boundary: u64,
    /// The record anchoring the escape bound.
    pub anchor_pos: u64,
    pub anchor_sigma: LogMagnitude,
}

/// Finds the cheapest reflecting wall with escape probability at most
/// `trunc_budget` by time `t`: each record `z*` admits a wall at
/// `z* + t / (2 sigma_{z*} budget)`, and the scan stops as soon as the
/// best candidate is passed. `min_wall` forces the wall past any region
/// the caller needs covered.
pub fn truncation_wall(
    field: &impl TrapField,
    t: LogMagnitude,
    min_wall: u64,
    trunc_budget: f64,
    i_cap: u64,
) -> Result<Wall> {
    if !(trunc_budget > 0.0 && trunc_budget < 1.0) {
        return Err(Error::Domain(format!(
            "truncation budget must be in (0,1), got {trunc_budget}"
        )));
    }
    let cap = field.limit().map_or(i_cap, |l| l.min(i_cap));
    let mut best_needed = f64::INFINITY;
    let mut best_anchor: Option<(u64, LogMagnitude)> = None;
    let mut deepest = LogMagnitude::ZERO;
    for pos in 0..cap {
        let sigma = field.trap_at(pos);
        if sigma > deepest {
            deepest = sigma;
            let off_ln = t.ln() - 2f64.ln() - sigma.ln() - trunc_budget.ln();
            let needed = pos as f64 + off_ln.exp().max(1.0) + 1.0;
            if needed < best_needed {
                best_needed = needed;
                best_anchor = Some((pos, sigma));
            }
        }
        if (pos + 1) as f64 >= best_needed.max(min_wall as f64) {
            let (anchor_pos, anchor_sigma) = best_anchor.expect("needed implies an anchor");
            return Ok(Wall { boundary: pos + 1, anchor_pos, anchor_sigma });
        }
    }
    Err(Error::NotFound {
        what: format!(
            "truncation wall for budget {trunc_budget} at ln t = {} \
             (deepest trap reached: ln sigma = {})",
            t.ln(),
            deepest.ln()
        ),
        cap,
    })
}

/// Masses aggregated over the structures of a localisation snapshot.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AggregatedMasses {
    pub sup_mass: f64,
    pub argmax: u64,
    pub gamma_mass: f64,
    pub record_mass: f64,
    pub z_t_mass: f64,
}

pub fn aggregate_masses(
    dist: &Distribution,
    snapshot: &LocalisationSnapshot,
    traps: &[LogMagnitude],
) -> AggregatedMasses {
    let (argmax, &sup_mass) = dist
        .probs
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty segment");
    let gamma_mass = snapshot
        .gamma
        .iter()
        .filter(|&&x| (x as usize) < dist.probs.len())
        .map(|&x| dist.probs[x as usize])
        .sum();
    let mut record_mass = 0.0;
    let mut running_max = LogMagnitude::ZERO;
    for (pos, &sigma) in traps.iter().enumerate() {
        if sigma > running_max {
            record_mass += dist.probs[pos];
            running_max = sigma;
        }
    }
    AggregatedMasses {
        sup_mass,
        argmax: argmax as u64,
        gamma_mass,
        record_mass,
        z_t_mass: dist.probs[snapshot.z_t as usize],
    }
}

/// Output of the half-line favoured-site query.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FavouredMass {
    pub sup_mass: f64,
    pub argmax: u64,
    /// Mass on the localisation set.
    pub gamma_mass: f64,
    /// Mass on the record sites below the truncation boundary.
    pub record_mass: f64,
    /// Mass on `Z_t` (the first exceedence of `ell_t`).
    pub z_t_mass: f64,
    /// Escape-probability bound at the reflecting wall; attached to every
    /// half-line answer as its truncation error.
    pub truncation_bound: f64,
    /// Wall position (exclusive upper end of the segment).
    pub boundary: u64,
    pub snapshot: LocalisationSnapshot,
}

/// Exact mass profile of the half-line walk at time `t`, truncated at a
/// reflecting wall placed where the hitting-time lower bound caps the
/// escape probability by `trunc_budget`.
pub fn favoured_mass(
    field: &impl TrapField,
    model: &TailModel,
    t: LogMagnitude,
    aux: &AuxFunction,
    trunc_budget: f64,
    i_cap: u64,
) -> Result<FavouredMass> {
    let snapshot = crate::localise::build_snapshot(field, model, t, aux, i_cap)?;
    let min_wall = (snapshot.o_t.ceil() as u64).max(snapshot.z_t + 2);
    let wall = truncation_wall(field, t, min_wall, trunc_budget, i_cap)?;

    let traps: Vec<LogMagnitude> = (0..wall.boundary).map(|p| field.trap_at(p)).collect();
    let solver = QuenchedSolver::build(&traps, (Boundary::Reflecting, Boundary::Reflecting))?;
    let dist = solver.distribution_at(0, t)?;
    let masses = aggregate_masses(&dist, &snapshot, &traps);
    let truncation_bound = (t.ln()
        - 2f64.ln()
        - (((wall.boundary - 1).saturating_sub(wall.anchor_pos)).max(1) as f64).ln()
        - wall.anchor_sigma.ln())
    .exp();

    Ok(FavouredMass {
        sup_mass: masses.sup_mass,
        argmax: masses.argmax,
        gamma_mass: masses.gamma_mass,
        record_mass: masses.record_mass,
        z_t_mass: masses.z_t_mass,
        truncation_bound,
        boundary: wall.boundary,
        snapshot,
    })
}

/// Independent cross-check: transition row by uniformization (truncated
/// Poisson mixture of jump-chain powers). Only valid in mild regimes;
/// the scaled `Lambda t` must stay below `1e7`.
pub fn uniformization_row(segment: &Segment, start: usize, t: LogMagnitude) -> Result<Vec<f64>> {
    let active = segment.active_range();
    if !active.contains(&start) {
        return Err(Error::Domain("start must be an active site".into()));
    }
    let n = segment.len();
    let rate: Vec<f64> = (0..n)
        .map(|x| {
            let neighbours = usize::from(x > 0) + usize::from(x + 1 < n);
            neighbours as f64 / (2.0 * segment.sigma_scaled[x])
        })
        .collect();
    let lambda = active.clone().map(|x| rate[x]).fold(0.0, f64::max);
    let tau_ln = segment.scaled_time_ln(t);
    let lambda_tau = (lambda.ln() + tau_ln).exp();
    if !(lambda_tau <= 1e7) {
        return Err(Error::Domain(format!(
            "uniformization restricted to Lambda t <= 1e7, got {lambda_tau:.3e}"
        )));
    }

    let mut v = vec![0.0; n];
    v[start] = 1.0;
    let mut out = vec![0.0; n];
    let mut ln_w = -lambda_tau; // ln Poisson(0)
    let mut covered = 0.0f64;
    let mut m = 0u64;
    // Roundoff keeps the accumulated Poisson mass a hair below one, so
    // also stop once the term count is far past the mode.
    let m_cap = (lambda_tau + 80.0 * lambda_tau.sqrt() + 80.0) as u64;
    loop {
        let w = ln_w.exp();
        if w > 0.0 {
            for x in 0..n {
                out[x] += w * v[x];
            }
            covered += w;
        }
        if covered >= 1.0 - 1e-12 || m > m_cap {
            break;
        }
        m += 1;
        // One jump-chain step: P = I + Q / Lambda on active sites.
        let mut next = vec![0.0; n];
        for x in active.clone() {
            let stay = 1.0 - rate[x] / lambda;
            next[x] += stay * v[x];
            let half = rate[x] / lambda / (usize::from(x > 0) + usize::from(x + 1 < n)) as f64;
            if x > 0 {
                if active.contains(&(x - 1)) {
                    next[x - 1] += half * v[x];
                }
            }
            if x + 1 < n {
                if active.contains(&(x + 1)) {
                    next[x + 1] += half * v[x];
                }
            }
        }
        v = next;
        ln_w += lambda_tau.ln() - (m as f64).ln();
    }
    Ok(out)
}
