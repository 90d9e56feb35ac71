//! Pilot-frozen thresholds.
//!
//! Protocol: statistical acceptance thresholds that the source theorems
//! fix only asymptotically are calibrated once by a pilot run over fixed
//! seeds (`cargo run --release --example pilot_calibration`, seeds 0..N
//! per statistic as printed there), frozen here with a safety margin,
//! and thereafter treated as regression targets — never as ground truth.
//! Each constant records the pilot value it was frozen from. Re-run the
//! pilot and update this file after any change to the landscape
//! generator.

/// Sum/max ratio, stretched-log gamma = 0.7 (N = 4), ratios tracked from
/// count 1000, seeds 0..99. Pilot: fraction of seeds whose running max
/// ratio exceeds 1.5 was 0.910 by i = 1e5 and 0.970 by i = 1e7.
pub const SUMMAX_FRAC_GT15_AT_1E5_MIN: f64 = 0.80;
pub const SUMMAX_FRAC_GT15_AT_1E7_MIN: f64 = 0.90;

/// Ratio statistics start here; earlier counts are noise (comparable
/// traps by chance).
pub const SUMMAX_RATIO_FROM: u64 = 1_000;

/// First-exceedence ratio i_x / L(x) at L(x) = 1e4, stretched-log
/// gamma = 0.5, seeds 0..499. Pilot: median 0.728, fraction inside
/// [1/64, 64] = 0.986. The median band is fixed by the source example;
/// the bulk band operationalises tightness.
pub const EXCEEDENCE_MEDIAN_LO: f64 = 0.2;
pub const EXCEEDENCE_MEDIAN_HI: f64 = 3.0;
pub const EXCEEDENCE_BULK_BAND: f64 = 64.0;
pub const EXCEEDENCE_BULK_MIN: f64 = 0.90;

/// Frequency of the typical-hyperbolic event {i_{l_t} = j_t = j_t^-}
/// (0-based reading), stretched-log gamma = 0.5, seeds 0..499. Pilot:
/// 0.710 at t = 1e3, 0.840 at t = 1e12. Growth is asserted directly; the
/// floor applies at the large time.
pub const HYPERBOLIC_TYPICAL_AT_1E12_MIN: f64 = 0.78;

/// Fraction of record indices n in [3, n_max] violating the record
/// bracket L(s_(n-1))/n^2 <= r_n <= 2 L(s_(n-1)) log n (1-based
/// location), stretched-log gamma = 0.5, seeds 0..199, i_max = 2e5.
/// Pilot: 0.1044.
pub const RECORD_BRACKET_VIOLATION_MAX: f64 = 0.13;

/// KS slack for the domination of r_n / L(sigma_(n-1)) by Exp(1).
pub const RECORD_DOMINATION_SLACK: f64 = 0.05;

/// Localisation-set singleton frequency {Gamma_t = {Z_t}}, stretched-log
/// gamma = 0.3, seeds 0..199. Pilot: 0.670 at t = 1e3, 0.795 at t =
/// 1e10. Growth asserted directly; the floor applies at the large time.
pub const GAMMA_SINGLETON_AT_1E10_MIN: f64 = 0.72;

/// Audit emptiness frequency {|R1| + |R2| = 0} over seeds 0..199 and
/// n in [5, 12] with cap 1e7 (insufficient-cap audits skipped),
/// stretched-log gamma = 0.3 (N = 2). Pilot: 0.9081 at completion
/// 1556/1600.
pub const AUDIT_ZERO_FREQ_MIN: f64 = 0.85;
pub const AUDIT_COMPLETION_MIN: f64 = 0.95;

/// Favourable-event hits for stretched-log gamma = 0.55 (N = 3) with the
/// corollary epsilon scheme at eps = 0.9, seeds 0..3999, n in [3, 6].
/// Pilot: 3 hits at (1874, 3), (2430, 6), (3272, 4). The corollary
/// scheme at eps = 0.5 is numerically unobservable (the final-gap clause
/// has probability e^-64), so the scheme is run at eps = 0.9.
pub const FAVOURABLE_HITS_MIN: u64 = 1;
pub const FAVOURABLE_EPS: f64 = 0.9;
pub const FAVOURABLE_SEEDS: u64 = 4_000;

/// Last-decade growth ceilings for the convergent series
/// (d(e^n) log n)^{N-1} at n <= 1e6 on the gamma grid. Pilot values:
/// 0.000 / 0.001 / 0.016 / 0.250 / 0.471. The flat-to-under-1% reading
/// only holds for gamma <= 0.5 at this range; for larger gamma the
/// series still grows at n = 1e6 and only the ordering against the
/// (N-1)-th series is meaningful at desk scale.
pub fn series_growth_max(gamma: f64) -> f64 {
    if gamma <= 0.31 {
        0.01
    } else if gamma <= 0.51 {
        0.01
    } else if gamma <= 0.56 {
        0.05
    } else if gamma <= 0.71 {
        0.35
    } else {
        0.55
    }
}
