//! Seeded i.i.d. trap landscapes with streaming analytics.
//!
//! A [`Landscape`] is a lazily generated sequence of traps on the
//! nonnegative integers. Trap `i` is a pure function of `(seed, model, i)`
//! through a counter-based generator, so landscapes need no storage,
//! scans in any order agree, and cross-seed experiments parallelise with
//! per-seed substreams.
//!
//! The streaming [`scan`] produces partial sums, the running maximum,
//! a top-k ledger, per-level sums and the full record skeleton in one
//! pass with O(k + #levels) state. Exceedence searches
//! ([`first_exceedence`], [`hyperbolic_exceedence`]) and the level map
//! [`ell_of_t`] locate the sites the localisation construction builds on.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logreal::{lse_sum, LogMagnitude, LseAccumulator};
use crate::numeric;
use crate::tails::TailModel;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform in the open interval (0, 1), keyed by `(seed, counter)`.
/// Two mixing rounds decorrelate nearby seeds and counters; the golden
/// offset keeps the all-zero state away from the mixer's fixed point.
pub fn counter_uniform(seed: u64, counter: u64) -> f64 {
    let state = seed.wrapping_add(counter.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN);
    let z = mix64(mix64(state));
    ((z >> 11) as f64 + 0.5) * (1.0 / 9_007_199_254_740_992.0)
}

/// Anything that exposes traps by position. Implementations may panic
/// past [`TrapField::limit`]; library operations check the limit first
/// and report an insufficient-landscape error instead.
pub trait TrapField {
    fn trap_at(&self, position: u64) -> LogMagnitude;

    /// Number of available positions, `None` when unbounded.
    fn limit(&self) -> Option<u64> {
        None
    }
}

/// Raises the appropriate error for a search that exhausted `[0, cap)`.
fn exhausted(field: &impl TrapField, cap: u64, i_cap: u64, what: &str) -> Error {
    match field.limit() {
        Some(limit) if limit < i_cap => {
            Error::InsufficientLandscape { needed: cap + 1, reached: limit }
        }
        _ => Error::NotFound { what: what.to_string(), cap },
    }
}

fn effective_cap(field: &impl TrapField, i_cap: u64) -> u64 {
    field.limit().map_or(i_cap, |l| l.min(i_cap))
}

/// A seeded i.i.d. trap landscape: `log L(sigma_i)` is a unit-mean
/// exponential derived from the counter generator.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Landscape {
    seed: u64,
    model: TailModel,
}

impl Landscape {
    pub fn new(seed: u64, model: TailModel) -> Self {
        Landscape { seed, model }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn model(&self) -> TailModel {
        self.model
    }

    /// The unit-mean exponential variate driving trap `i`; equal to
    /// `log L(sigma_i)` exactly.
    pub fn exp_variate_at(&self, position: u64) -> f64 {
        -counter_uniform(self.seed, position).ln()
    }
}

impl TrapField for Landscape {
    fn trap_at(&self, position: u64) -> LogMagnitude {
        self.model
            .sample_trap(self.exp_variate_at(position))
            .expect("counter uniforms are strictly inside (0,1)")
    }
}

/// A finite, explicitly listed landscape for hand-planted instances.
#[derive(Clone, Debug)]
pub struct PlantedLandscape {
    traps: Vec<LogMagnitude>,
}

impl PlantedLandscape {
    pub fn new(traps: Vec<LogMagnitude>) -> Self {
        PlantedLandscape { traps }
    }

    pub fn from_linear(values: &[f64]) -> Result<Self> {
        let traps =
            values.iter().map(|&v| LogMagnitude::from_linear(v)).collect::<Result<Vec<_>>>()?;
        Ok(PlantedLandscape { traps })
    }

    pub fn len(&self) -> usize {
        self.traps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traps.is_empty()
    }

    pub fn traps(&self) -> &[LogMagnitude] {
        &self.traps
    }
}

impl TrapField for PlantedLandscape {
    fn trap_at(&self, position: u64) -> LogMagnitude {
        self.traps[position as usize]
    }

    fn limit(&self) -> Option<u64> {
        Some(self.traps.len() as u64)
    }
}

/// One record of the trap sequence: its position, depth, and the sum of
/// all traps at strictly smaller positions.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct RecordEntry {
    pub position: u64,
    pub sigma: LogMagnitude,
    pub sum_before: LogMagnitude,
}

/// Sampled contents of one inter-record block (skeleton sampler only).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BlockSample {
    /// The block sits strictly between records `n` and `n+1` (1-based `n`).
    pub after_record: usize,
    pub gap: u64,
    /// Exact Binomial count of traps above `(1 - eps0) sigma_(n)`.
    pub near_count: u64,
    /// Sampled values for up to `k_block` of them.
    pub near_values: Vec<LogMagnitude>,
    /// Approximate sum of the sub-threshold remainder (conditional mean).
    pub subthreshold_sum: LogMagnitude,
}

/// The record chain of a landscape prefix.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecordSkeleton {
    pub entries: Vec<RecordEntry>,
    /// True when block contents were approximated by the direct sampler
    /// rather than streamed from a landscape.
    pub approximate: bool,
    pub blocks: Vec<BlockSample>,
}

impl RecordSkeleton {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(r_n, sigma_(n), S_(n)^-)` for 1-based record index `n`.
    pub fn record(&self, n: usize) -> Option<&RecordEntry> {
        (n >= 1).then(|| self.entries.get(n - 1)).flatten()
    }
}

/// Streaming state emitted at a checkpoint: `i` traps consumed
/// (positions `0..i-1`).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanSnapshot {
    pub i: u64,
    pub sum: LogMagnitude,
    pub max: LogMagnitude,
    pub argmax_position: u64,
    /// Up to `k` largest traps among positions `< i`, descending.
    pub top_k: Vec<(u64, LogMagnitude)>,
    /// `S^l_i` per requested level `l` (sum of traps strictly below `l`).
    pub level_sums: Vec<(LogMagnitude, LogMagnitude)>,
    pub n_records: usize,
    /// Largest sum/max ratio seen at any eligible count up to `i`.
    pub max_ratio_so_far: f64,
    /// `ln((S_i - m_i) / m_i)`, tracked as a separate accumulator so the
    /// excess over the maximum stays resolvable long after `S_i / m_i`
    /// rounds to one. Negative infinity when only the maximum exists.
    pub ln_excess_ratio: f64,
}

impl ScanSnapshot {
    /// Sum/max ratio on the linear scale.
    pub fn ratio(&self) -> f64 {
        (self.sum.ln() - self.max.ln()).exp()
    }

    /// `S_i^{(k)}`: the partial sum with the largest `k-1` traps removed
    /// (`k = 1` returns the full sum). Computed by subtracting the top-k
    /// ledger from the total; accuracy degrades if the remainder is
    /// catastrophically smaller than the sum.
    pub fn sum_from_kth(&self, k: usize) -> Result<LogMagnitude> {
        if k == 0 || k > self.top_k.len() + 1 {
            return Err(Error::Domain(format!(
                "sum_from_kth needs 1 <= k <= {}, got {k}",
                self.top_k.len() + 1
            )));
        }
        let top = lse_sum(self.top_k.iter().take(k - 1).map(|&(_, v)| v));
        crate::logreal::sub_positive(self.sum, top)
    }
}

/// Parameters of a streaming scan.
#[derive(Clone, Debug)]
pub struct ScanParams {
    pub i_max: u64,
    pub k_top: usize,
    pub levels: Vec<LogMagnitude>,
    /// Counts at which snapshots are emitted (sorted and deduplicated
    /// internally; `i_max` is always included).
    pub checkpoints: Vec<u64>,
}

impl ScanParams {
    pub fn new(i_max: u64) -> Self {
        ScanParams { i_max, k_top: 8, levels: Vec::new(), checkpoints: vec![i_max] }
    }

    /// Log-spaced checkpoints, `per_decade` of them per factor of ten.
    pub fn with_log_checkpoints(mut self, per_decade: u32) -> Self {
        let mut cps = Vec::new();
        let mut x = 1.0f64;
        while x < self.i_max as f64 {
            cps.push(x.round() as u64);
            x *= 10f64.powf(1.0 / per_decade as f64);
        }
        cps.push(self.i_max);
        self.checkpoints = cps;
        self
    }
}

/// Result of one streaming pass.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScanOutcome {
    pub snapshots: Vec<ScanSnapshot>,
    pub skeleton: RecordSkeleton,
    /// Largest sum/max ratio seen at any count `i >= ratio_from`, with
    /// the count it occurred at.
    pub max_ratio: f64,
    pub max_ratio_at: u64,
}

/// Single streaming pass over positions `0..i_max`.
///
/// `ratio_from`: counts `i >= ratio_from` participate in the running
/// max-ratio statistic (the first few traps are comparable by chance, so
/// the early ratio carries no information about clustering).
pub fn scan(field: &impl TrapField, params: &ScanParams, ratio_from: u64) -> Result<ScanOutcome> {
    let cap = effective_cap(field, params.i_max);
    if cap < params.i_max {
        return Err(Error::InsufficientLandscape { needed: params.i_max, reached: cap });
    }
    let mut checkpoints: Vec<u64> = params
        .checkpoints
        .iter()
        .copied()
        .filter(|&c| c >= 1 && c <= params.i_max)
        .chain([params.i_max])
        .collect();
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let mut sum = LseAccumulator::new();
    // The sum is also carried as max + remainder: the remainder absorbs
    // each displaced maximum, so the excess over the running maximum
    // never suffers cancellation.
    let mut remainder = LseAccumulator::new();
    let mut max = LogMagnitude::ZERO;
    let mut argmax = 0u64;
    let mut top: BinaryHeap<Reverse<(LogMagnitude, u64)>> = BinaryHeap::new();
    let mut levels: Vec<(LogMagnitude, LseAccumulator)> =
        params.levels.iter().map(|&l| (l, LseAccumulator::new())).collect();
    let mut entries = Vec::new();
    let mut snapshots = Vec::new();
    let mut next_cp = 0usize;
    let mut max_ratio = 1.0f64;
    let mut max_ratio_at = ratio_from.max(1);

    for pos in 0..params.i_max {
        let sigma = field.trap_at(pos);
        if sigma > max {
            entries.push(RecordEntry { position: pos, sigma, sum_before: sum.total() });
            if !max.is_zero() {
                remainder.push(max);
            }
            max = sigma;
            argmax = pos;
        } else {
            remainder.push(sigma);
        }
        sum.push(sigma);
        for (level, acc) in levels.iter_mut() {
            if sigma < *level {
                acc.push(sigma);
            }
        }
        if params.k_top > 0 {
            if top.len() < params.k_top {
                top.push(Reverse((sigma, pos)));
            } else if let Some(&Reverse((smallest, _))) = top.peek() {
                if sigma > smallest {
                    top.pop();
                    top.push(Reverse((sigma, pos)));
                }
            }
        }

        let i = pos + 1;
        if i >= ratio_from.max(1) {
            let ratio = 1.0 + (remainder.total().ln() - max.ln()).exp();
            if ratio > max_ratio {
                max_ratio = ratio;
                max_ratio_at = i;
            }
        }
        if next_cp < checkpoints.len() && i == checkpoints[next_cp] {
            let mut top_k: Vec<(u64, LogMagnitude)> =
                top.iter().map(|&Reverse((v, p))| (p, v)).collect();
            top_k.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
            snapshots.push(ScanSnapshot {
                i,
                sum: sum.total(),
                max,
                argmax_position: argmax,
                top_k,
                level_sums: levels.iter().map(|(l, a)| (*l, a.total())).collect(),
                n_records: entries.len(),
                max_ratio_so_far: max_ratio,
                ln_excess_ratio: remainder.total().ln() - max.ln(),
            });
            next_cp += 1;
        }
    }

    Ok(ScanOutcome {
        snapshots,
        skeleton: RecordSkeleton { entries, approximate: false, blocks: Vec::new() },
        max_ratio,
        max_ratio_at,
    })
}

/// First exceedence of a level, and the argmax over the strictly earlier
/// positions (absent when the exceedence is at position 0).
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Exceedence {
    pub position: u64,
    pub prior_argmax: Option<u64>,
}

pub fn first_exceedence(
    field: &impl TrapField,
    level: LogMagnitude,
    i_cap: u64,
) -> Result<Exceedence> {
    let cap = effective_cap(field, i_cap);
    let mut best: Option<(LogMagnitude, u64)> = None;
    for pos in 0..cap {
        let sigma = field.trap_at(pos);
        if sigma > level {
            return Ok(Exceedence { position: pos, prior_argmax: best.map(|(_, p)| p) });
        }
        if best.map_or(true, |(b, _)| sigma > b) {
            best = Some((sigma, pos));
        }
    }
    Err(exhausted(field, cap, i_cap, &format!("exceedence of level ln = {}", level.ln())))
}

/// The level `l_t = min{s >= 0 : s L(s) >= t}`. For the supported
/// families `s L(s)` is continuous and strictly increasing, so this is
/// the unique root of `s L(s) = t`, found by bisection on `ln s`.
pub fn ell_of_t(model: &TailModel, t: LogMagnitude) -> Result<LogMagnitude> {
    if t.is_zero() || t.is_saturated() {
        return Err(Error::Domain("ell_of_t needs a finite positive time".into()));
    }
    let ln_t = t.ln();
    let f = |ls: f64| ls + model.ln_l(LogMagnitude::from_ln(ls)) - ln_t;
    let lo = ln_t - model.ln_l(t);
    let root = numeric::bisect_increasing(f, lo, ln_t, 1e-14);
    Ok(LogMagnitude::from_ln(root))
}

/// A hyperbolic exceedence: the first count `i` with `i S_i > t / h_t`,
/// and the position of the largest trap among the consumed positions
/// `0..count-1`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Hyperbolic {
    /// 1-based count of consumed traps.
    pub count: u64,
    pub argmax_position: u64,
}

pub fn hyperbolic_exceedence(
    field: &impl TrapField,
    t: LogMagnitude,
    aux: &crate::tails::AuxFunction,
    i_cap: u64,
) -> Result<Hyperbolic> {
    if t.is_zero() {
        return Err(Error::Domain("hyperbolic exceedence needs t > 0".into()));
    }
    let target_ln = t.ln() - aux.eval(t).ln();
    let cap = effective_cap(field, i_cap);
    let mut sum = LseAccumulator::new();
    let mut best: Option<(LogMagnitude, u64)> = None;
    for pos in 0..cap {
        let sigma = field.trap_at(pos);
        sum.push(sigma);
        let count = pos + 1;
        if best.map_or(true, |(b, _)| sigma > b) {
            best = Some((sigma, pos));
        }
        if (count as f64).ln() + sum.total().ln() > target_ln {
            let argmax_position = best.expect("count >= 1").1;
            return Ok(Hyperbolic { count, argmax_position });
        }
    }
    Err(exhausted(field, cap, i_cap, &format!("hyperbolic exceedence at ln t = {}", t.ln())))
}

/// Samples the record chain directly, without streaming the landscape.
///
/// Record heights advance by unit-mean exponentials of `log L`; gaps are
/// geometric with success probability `1 / L(sigma_(n-1))`. Within each
/// inter-record block, the count of traps above `(1 - eps0) sigma_(n-1)`
/// is drawn exactly (Binomial) and up to `k_block` of their values are
/// sampled from the conditional band; the sub-threshold remainder is
/// approximated by its conditional mean. The output is flagged
/// approximate.
pub fn sample_record_skeleton(
    model: &TailModel,
    n_max: usize,
    seed: u64,
    eps0: f64,
    k_block: usize,
) -> Result<RecordSkeleton> {
    if n_max < 1 {
        return Err(Error::Domain("n_max must be at least 1".into()));
    }
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(Error::Domain(format!("eps0 must lie in (0,1), got {eps0}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w: f64 = rng.sample(Exp1);
    let mut entries = vec![RecordEntry {
        position: 0,
        sigma: model.l_inv_from_ln_l(w),
        sum_before: LogMagnitude::ZERO,
    }];
    let mut blocks = Vec::new();
    let mut sum_before = LseAccumulator::new();

    for n in 2..=n_max {
        let prev = entries[n - 2];
        let v = prev.sigma;
        if w > 42.0 {
            return Err(Error::Domain(format!(
                "record {n} sits at scale L = e^{w:.1}; gaps no longer fit in u64 — lower n_max"
            )));
        }
        let p = (-w).exp();
        let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let gap_f = (u.ln() / (-p).ln_1p()).ceil().max(1.0);
        if gap_f > 9.0e18 {
            return Err(Error::Domain(format!("record gap at n = {n} exceeds u64 range")));
        }
        let gap = gap_f as u64;

        // Block strictly between the records: gap - 1 traps, iid
        // sigma | sigma <= v. The exact Binomial count is sampled by
        // geometric skips, O(count) work even for astronomical blocks
        // (np stays small: it is the near-record clustering rate).
        let band_lo = v.scale(1.0 - eps0)?;
        let p_nr = model.conditional_band_prob(band_lo, v);
        let near_count = if gap > 1 && p_nr > 0.0 {
            binomial_by_skips(gap - 1, p_nr, &mut rng)
        } else {
            0
        };
        let mut near_values = Vec::new();
        for _ in 0..near_count.min(k_block as u64) {
            let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
            near_values.push(model.sample_trap_in_band(band_lo, v, u)?);
        }
        // Remainder approximations: unsampled near-records at the band
        // mean, sub-threshold traps at their conditional mean.
        let mut block = LseAccumulator::new();
        for &nv in &near_values {
            block.push(nv);
        }
        let extra_near = near_count.saturating_sub(k_block as u64);
        if extra_near > 0 {
            let band_mean = band_conditional_mean(model, band_lo, v)?;
            block.push(band_mean.scale(extra_near as f64)?);
        }
        let sub_count = gap - 1 - near_count;
        let mut subthreshold_sum = LogMagnitude::ZERO;
        if sub_count > 0 {
            subthreshold_sum = model.mean_below(band_lo)?.scale(sub_count as f64)?;
            block.push(subthreshold_sum);
        }
        blocks.push(BlockSample {
            after_record: n - 1,
            gap,
            near_count,
            near_values: near_values.clone(),
            subthreshold_sum,
        });

        sum_before.push(v);
        let block_total = block.total();
        if !block_total.is_zero() {
            sum_before.push(block_total);
        }
        w += rng.sample::<f64, _>(Exp1);
        entries.push(RecordEntry {
            position: prev.position + gap,
            sigma: model.l_inv_from_ln_l(w),
            sum_before: sum_before.total(),
        });
    }

    Ok(RecordSkeleton { entries, approximate: n_max > 1, blocks })
}

/// `E[sigma | sigma in (lo, hi]]` via the difference of truncated means.
fn band_conditional_mean(
    model: &TailModel,
    lo: LogMagnitude,
    hi: LogMagnitude,
) -> Result<LogMagnitude> {
    let num_hi = LogMagnitude::from_ln(hi.ln() + model.ln_mean_frac_below(hi)?);
    let num_lo = LogMagnitude::from_ln(lo.ln() + model.ln_mean_frac_below(lo)?);
    let num = crate::logreal::sub_positive(num_hi, num_lo)?;
    let w_lo = model.ln_l(lo);
    let w_hi = model.ln_l(hi);
    // P(lo < sigma <= hi) = e^{-w_lo} - e^{-w_hi}.
    let p = (-w_lo).exp() * (-(-(w_hi - w_lo)).exp_m1());
    num.div(LogMagnitude::from_linear(p)?)
}
