//! Slowly varying tail families.
//!
//! A trap law is described through `L(u) = 1 / P(sigma > u)`, a nondecreasing
//! unbounded function with `L(0) = 1`. Three families are supported, all
//! continuous and strictly increasing:
//!
//! * stretched-log: `L(u) = exp{(log(1+u))^gamma}`, `gamma` in (0, 1);
//! * log:           `L(u) = (1 + log(1+u))^gamma`, `gamma > 0`;
//! * double-log:    `L(u) = (1 + log(1 + log(1+u)))^gamma`, `gamma > 0`.
//!
//! The second-order rate `g` is the logarithmic derivative `u L'(u) / L(u)`,
//! which is the canonical rate producing `k(v) = log v`; for the
//! stretched-log family this reduces to the closed form
//! `gamma (log(1+u))^{gamma-1}`. The derived rate is `d(v) = g(L^{-1}(v))`.
//!
//! All evaluations run in log space: arguments and values whose magnitude
//! can be astronomical are passed as [`LogMagnitude`].

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::logreal::LogMagnitude;
use crate::numeric;

/// `ln(1 + e^l)`, stable over the whole real line.
pub(crate) fn ln1p_exp(l: f64) -> f64 {
    if l == f64::NEG_INFINITY {
        0.0
    } else if l > 30.0 {
        l + (-l).exp().ln_1p()
    } else {
        l.exp().ln_1p()
    }
}

/// `ln(e^y - 1)` for `y >= 0`.
fn ln_expm1(y: f64) -> f64 {
    if y == 0.0 {
        f64::NEG_INFINITY
    } else if y > 35.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// `u / (1 + u)` given `l = ln u`.
fn sigmoid_of_ln(l: f64) -> f64 {
    if l == f64::NEG_INFINITY {
        0.0
    } else {
        1.0 / (1.0 + (-l).exp())
    }
}

/// Supported slowly varying families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TailFamily {
    StretchedLog,
    Log,
    DoubleLog,
}

/// Which function of the family to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TailFn {
    L,
    Linv,
    G,
    D,
}

/// A slowly varying tail family with its parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailModel {
    family: TailFamily,
    gamma: f64,
}

/// The localisation count and the Assumption boundary flags.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct NReport {
    /// Number of quenched localisation sites.
    pub n: u32,
    /// Whether `sum_n d(e^n)^{N-2}` diverges.
    pub sum_a_diverges: bool,
    /// Whether `sum_n d(e^n)^{N-1} (log n)^N` converges.
    pub sum_b_converges: bool,
}

impl NReport {
    pub fn boundary_assumptions_hold(&self) -> bool {
        self.sum_a_diverges && self.sum_b_converges
    }
}

impl TailModel {
    pub fn new(family: TailFamily, gamma: f64) -> Result<Self> {
        let ok = match family {
            TailFamily::StretchedLog => gamma > 0.0 && gamma < 1.0,
            TailFamily::Log | TailFamily::DoubleLog => gamma > 0.0,
        };
        if !ok || !gamma.is_finite() {
            return Err(Error::Domain(format!(
                "invalid gamma {gamma} for family {family:?} (stretched-log needs gamma in (0,1), \
                 others gamma > 0)"
            )));
        }
        Ok(TailModel { family, gamma })
    }

    pub fn family(&self) -> TailFamily {
        self.family
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `ln L(u)`. Always finite for finite `u`; `ln L(0) = 0`.
    pub fn ln_l(&self, u: LogMagnitude) -> f64 {
        let y = ln1p_exp(u.ln()); // log(1+u)
        match self.family {
            TailFamily::StretchedLog => y.powf(self.gamma),
            TailFamily::Log => self.gamma * y.ln_1p(),
            TailFamily::DoubleLog => self.gamma * y.ln_1p().ln_1p(),
        }
    }

    /// `L(u)` as a magnitude.
    pub fn l(&self, u: LogMagnitude) -> LogMagnitude {
        LogMagnitude::from_ln(self.ln_l(u))
    }

    /// `L^{-1}(v)` for `v >= 1`.
    pub fn l_inv(&self, v: LogMagnitude) -> Result<LogMagnitude> {
        if v.ln() < 0.0 {
            return Err(Error::Domain(format!(
                "L inverse needs an argument >= 1, got ln v = {}",
                v.ln()
            )));
        }
        Ok(self.l_inv_from_ln_l(v.ln()))
    }

    /// `L^{-1}(e^m)` for `m >= 0`, i.e. the trap depth whose `ln L` equals `m`.
    ///
    /// Extreme arguments of the double-log family can push the *logarithm*
    /// of the result past the float range; the value then saturates to the
    /// infinite magnitude.
    pub fn l_inv_from_ln_l(&self, m: f64) -> LogMagnitude {
        debug_assert!(m >= 0.0);
        if m == 0.0 {
            return LogMagnitude::ZERO;
        }
        let ln_u = match self.family {
            TailFamily::StretchedLog => ln_expm1(m.powf(1.0 / self.gamma)),
            TailFamily::Log => {
                let y = (m / self.gamma).exp_m1(); // log(1+u)
                if y.is_infinite() {
                    f64::INFINITY
                } else {
                    ln_expm1(y)
                }
            }
            TailFamily::DoubleLog => {
                let a = (m / self.gamma).exp_m1(); // log(1 + log(1+u))
                let y = a.exp_m1();
                if y.is_infinite() {
                    f64::INFINITY
                } else {
                    ln_expm1(y)
                }
            }
        };
        LogMagnitude::from_ln(ln_u)
    }

    /// The second-order rate `g(u) = u L'(u) / L(u)`.
    pub fn g(&self, u: LogMagnitude) -> f64 {
        let l = u.ln();
        let y = ln1p_exp(l); // log(1+u)
        match self.family {
            TailFamily::StretchedLog => self.gamma * y.powf(self.gamma - 1.0),
            TailFamily::Log => self.gamma * sigmoid_of_ln(l) / (1.0 + y),
            TailFamily::DoubleLog => {
                self.gamma * sigmoid_of_ln(l) / ((1.0 + y) * (1.0 + y.ln_1p()))
            }
        }
    }

    /// The derived rate `d(v) = g(L^{-1}(v))`, in closed form (one layer
    /// of the inverse composed analytically). `v >= 1` required.
    pub fn d(&self, v: LogMagnitude) -> Result<f64> {
        let m = v.ln();
        if m < 0.0 {
            return Err(Error::Domain(format!("d needs an argument >= 1, got ln v = {m}")));
        }
        Ok(self.d_from_ln(m))
    }

    /// `d(e^m)` for `m >= 0`.
    pub fn d_from_ln(&self, m: f64) -> f64 {
        debug_assert!(m >= 0.0);
        match self.family {
            TailFamily::StretchedLog => {
                let beta = (1.0 - self.gamma) / self.gamma;
                self.gamma * m.powf(-beta)
            }
            TailFamily::Log => {
                let w = m / self.gamma;
                let y = w.exp_m1(); // log(1+u)
                self.gamma * (-(-y).exp_m1()) * (-w).exp()
            }
            TailFamily::DoubleLog => {
                let w = m / self.gamma;
                let a = w.exp_m1(); // log(1 + log(1+u))
                let y = a.exp_m1();
                let frac = if y.is_infinite() { 1.0 } else { -(-y).exp_m1() };
                self.gamma * frac * (-a).exp() * (-w).exp()
            }
        }
    }

    /// Dispatching evaluator. `G` and `D` are returned as magnitudes of
    /// their (small, positive) linear values.
    pub fn eval(&self, which: TailFn, u: LogMagnitude) -> Result<LogMagnitude> {
        match which {
            TailFn::L => Ok(self.l(u)),
            TailFn::Linv => self.l_inv(u),
            TailFn::G => LogMagnitude::from_linear(self.g(u)),
            TailFn::D => LogMagnitude::from_linear(self.d(u)?),
        }
    }

    /// The localisation count `N` with the boundary flags of the exclusion
    /// assumption, decided analytically per family. For the stretched-log
    /// family `N = 2 + floor(gamma / (1 - gamma))`; the summability flags
    /// follow from the exponent `beta = (1 - gamma) / gamma`, with the log
    /// factors breaking ties toward the strict inequality. The log and
    /// double-log families have exponentially decaying `d`, so `N = 2` and
    /// both flags hold.
    pub fn analytic_n(&self) -> NReport {
        match self.family {
            TailFamily::StretchedLog => {
                let n = 2 + (self.gamma / (1.0 - self.gamma)).floor() as u32;
                let beta = (1.0 - self.gamma) / self.gamma;
                NReport {
                    n,
                    sum_a_diverges: (n - 2) as f64 * beta <= 1.0,
                    sum_b_converges: (n - 1) as f64 * beta > 1.0,
                }
            }
            TailFamily::Log | TailFamily::DoubleLog => {
                NReport { n: 2, sum_a_diverges: true, sum_b_converges: true }
            }
        }
    }

    /// Maps a unit-mean exponential variate to a trap depth: `log L(sigma)`
    /// is Exp(1), so `sigma = L^{-1}(e^E)`.
    pub fn sample_trap(&self, exp_variate: f64) -> Result<LogMagnitude> {
        if !(exp_variate > 0.0) {
            return Err(Error::Domain(format!(
                "sample_trap needs a positive exponential variate, got {exp_variate}"
            )));
        }
        Ok(self.l_inv_from_ln_l(exp_variate))
    }

    /// `P(sigma in (lo, hi] | sigma <= hi)` for `lo <= hi`.
    pub fn conditional_band_prob(&self, lo: LogMagnitude, hi: LogMagnitude) -> f64 {
        let wa = self.ln_l(lo);
        let wv = self.ln_l(hi);
        let num = (-wa).exp() * (-(-(wv - wa)).exp_m1());
        let den = -(-wv).exp_m1();
        if den == 0.0 {
            0.0
        } else {
            (num / den).clamp(0.0, 1.0)
        }
    }

    /// Inverse-transform sample of `sigma | sigma in (lo, hi]` from a
    /// uniform `u01` in (0, 1).
    pub fn sample_trap_in_band(
        &self,
        lo: LogMagnitude,
        hi: LogMagnitude,
        u01: f64,
    ) -> Result<LogMagnitude> {
        if !(u01 > 0.0 && u01 < 1.0) {
            return Err(Error::Domain(format!("band sample needs u in (0,1), got {u01}")));
        }
        let wa = self.ln_l(lo);
        let wv = self.ln_l(hi);
        if !(wv > wa) {
            return Err(Error::Domain("band sample needs lo < hi".into()));
        }
        // ln L(sigma) is a truncated Exp(1) on (wa, wv].
        let w = wa - (-u01 * (-(-(wv - wa)).exp_m1())).ln_1p();
        Ok(self.l_inv_from_ln_l(w))
    }

    /// `ln E[(sigma/x) 1{sigma < x}]`, by quadrature in the substitution
    /// `u = x e^{-delta}`:
    /// `E = e^{-W} Int_0^inf e^{-delta} expm1(W - ln L(x e^{-delta})) ddelta`
    /// with `W = ln L(x)`. The integrand is smooth and the tail past
    /// `delta = 60` is negligible relative to the answer.
    pub fn ln_mean_frac_below(&self, x: LogMagnitude) -> Result<f64> {
        if x.is_zero() {
            return Err(Error::Domain("mean below zero level is undefined".into()));
        }
        let w = self.ln_l(x);
        if w > 700.0 {
            return Err(Error::Domain(format!(
                "ln L(x) = {w} too large for the quadrature range"
            )));
        }
        let ln_x = x.ln();
        let f = |delta: f64| -> f64 {
            let wd = self.ln_l(LogMagnitude::from_ln(ln_x - delta));
            (-delta).exp() * (w - wd).exp_m1()
        };
        let rough: f64 = (0..=240).map(|i| f(i as f64 * 0.25) * 0.25).sum();
        let tol = 1e-10 * rough.max(1e-280);
        let integral = numeric::adaptive_simpson(&f, 0.0, 60.0, tol);
        Ok(-w + integral.max(f64::MIN_POSITIVE).ln())
    }

    /// `E[sigma | sigma <= x]` as a magnitude.
    pub fn mean_below(&self, x: LogMagnitude) -> Result<LogMagnitude> {
        let w = self.ln_l(x);
        let ln_frac = self.ln_mean_frac_below(x)?;
        let ln_p_below = (-(-w).exp()).ln_1p(); // ln(1 - e^{-W})
        Ok(LogMagnitude::from_ln(x.ln() + ln_frac - ln_p_below))
    }

    /// Partial sums of `(d(e^n) log n)^{ell-1}` up to `n_max`, returning the
    /// total and the relative growth over the last decade of `n`. Used as a
    /// divergence/convergence diagnostic against [`TailModel::analytic_n`].
    pub fn partial_sum_growth(&self, ell: u32, n_max: u64) -> (f64, f64) {
        assert!(ell >= 1 && n_max >= 10);
        let mut total = 0.0;
        let mut at_tenth = 0.0;
        let cutoff = n_max / 10;
        for n in 1..=n_max {
            let term = (self.d_from_ln(n as f64) * (n as f64).ln()).powi(ell as i32 - 1);
            total += term;
            if n == cutoff {
                at_tenth = total;
            }
        }
        (total, (total - at_tenth) / total)
    }
}

impl fmt::Display for TailModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.family {
            TailFamily::StretchedLog => "stretched-log",
            TailFamily::Log => "log",
            TailFamily::DoubleLog => "double-log",
        };
        write!(f, "{name}:{}", self.gamma)
    }
}

impl FromStr for TailModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, gamma) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("model spec {s:?} is not <family>:<gamma>")))?;
        let gamma: f64 = gamma
            .parse()
            .map_err(|_| Error::Config(format!("model spec {s:?} has a non-numeric gamma")))?;
        let family = match name {
            "stretched-log" => TailFamily::StretchedLog,
            "log" => TailFamily::Log,
            "double-log" => TailFamily::DoubleLog,
            _ => {
                return Err(Error::Config(format!(
                    "unknown tail family {name:?} in model spec {s:?} \
                     (expected stretched-log, log or double-log)"
                )))
            }
        };
        TailModel::new(family, gamma)
    }
}

/// The auxiliary scaling function `h_t = max(h0, log(1 + log(1 + t)))`,
/// with floor `h0 >= 2`.
///
/// The floor guarantees `h_t > 1`, so the lower localisation boundary
/// always sits below the inner record depth; the double-log growth is slow
/// enough that the window inequalities hold for every supported family
/// (validated numerically by [`TailModel::check_assumptions`]). This is one
/// admissible choice; reports flag it as such.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxFunction {
    h0: f64,
}

impl AuxFunction {
    pub fn new(h0: f64) -> Result<Self> {
        if !(h0 >= 2.0) || !h0.is_finite() {
            return Err(Error::Domain(format!("aux floor must be >= 2, got {h0}")));
        }
        Ok(AuxFunction { h0 })
    }

    pub fn floor(&self) -> f64 {
        self.h0
    }

    /// `h_t` given `ln t`.
    pub fn eval_ln(&self, ln_t: f64) -> f64 {
        self.h0.max(ln1p_exp(ln_t).ln_1p())
    }

    pub fn eval(&self, t: LogMagnitude) -> f64 {
        self.eval_ln(t.ln())
    }

    /// Solves `t / h_t = rhs` for `t`, returning `ln t`. The map is
    /// strictly increasing, so bisection on `ln t` applies; the bracket is
    /// widened geometrically until it closes.
    pub fn solve_t_over_h(&self, rhs_ln: f64) -> f64 {
        let f = |lt: f64| lt - self.eval_ln(lt).ln() - rhs_ln;
        numeric::bisect_increasing_open(
            f,
            rhs_ln,
            rhs_ln + self.eval_ln(rhs_ln + 7.0).ln() + 7.0,
            std::f64::consts::LN_10,
            1e-12,
        )
    }
}

impl Default for AuxFunction {
    fn default() -> Self {
        AuxFunction { h0: 2.0 }
    }
}

impl fmt::Display for AuxFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.h0 == 2.0 {
            write!(f, "default")
        } else {
            write!(f, "floor:{}", self.h0)
        }
    }
}

impl FromStr for AuxFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "default" {
            return Ok(AuxFunction::default());
        }
        if let Some(h0) = s.strip_prefix("floor:") {
            let h0: f64 = h0
                .parse()
                .map_err(|_| Error::Config(format!("aux spec {s:?} has a non-numeric floor")))?;
            return AuxFunction::new(h0);
        }
        Err(Error::Config(format!("aux spec {s:?} is not \"default\" or \"floor:<h0>\"")))
    }
}

/// Grids for the assumption checker.
#[derive(Clone, Debug)]
pub struct CheckGrids {
    /// Levels `u` (also used as the times `t` of the window inequalities).
    pub u_grid: Vec<LogMagnitude>,
    /// Multipliers `v`.
    pub v_grid: Vec<f64>,
    /// Upper limit for the partial-sum diagnostics.
    pub n_max: u64,
}

impl CheckGrids {
    /// A log-spaced default: `ln u` from 20 to 400, `v` spanning both sides
    /// of one. The window inequalities only hold eventually, so the grid
    /// starts past the small-`t` regime.
    pub fn default_for_desk_scale() -> Self {
        CheckGrids {
            u_grid: (1..=20).map(|i| LogMagnitude::from_ln(20.0 * i as f64)).collect(),
            v_grid: vec![0.25, 0.5, 2.0, std::f64::consts::E, 10.0],
            n_max: 100_000,
        }
    }
}

/// Partial sums of a nonnegative series at checkpoints, with the relative
/// growth over the last decade. Labelled diagnostic: finite sums prove
/// neither convergence nor divergence.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PartialSumDiag {
    pub checkpoints: Vec<(u64, f64)>,
    pub last_decade_growth: f64,
}

fn partial_sum_diag<F: Fn(u64) -> f64>(term: F, n_max: u64) -> PartialSumDiag {
    let mut total = 0.0;
    let mut checkpoints = Vec::new();
    let mut next_cp = 10u64;
    let mut at_tenth = 0.0;
    for n in 1..=n_max {
        total += term(n);
        if n == next_cp || n == n_max {
            checkpoints.push((n, total));
            next_cp = next_cp.saturating_mul(10);
        }
        if n == n_max / 10 {
            at_tenth = total;
        }
    }
    PartialSumDiag { checkpoints, last_decade_growth: (total - at_tenth) / total.max(1e-300) }
}

/// Numerical report on the standing assumptions and the auxiliary-function
/// conditions. Report-only: nothing here is a proof.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub model: TailModel,
    pub aux_floor: f64,
    /// max over the grid of `|L(uv)/L(u) - 1|`.
    pub slow_variation_max_dev: f64,
    /// max over the grid of `|(L(uv)/L(u) - 1)/g(u) - log v|`.
    pub sosv_max_dev: f64,
    /// Window inequalities `L(t h^k)/L(t) < 1 + 1/h` and
    /// `L(t/h^k)/L(t) > 1 - 1/h` for k = 1..4 at every grid t.
    pub h_window_holds: bool,
    /// Smallest margin by which the window inequalities hold (negative
    /// means a violation).
    pub h_window_margin: f64,
    /// `(ln t, h^4 L(t h^2) E[(sigma/(t h^2)) 1{sigma < t h^2}])` per grid t.
    pub h3_values: Vec<(f64, f64)>,
    /// Whether the h3 sequence decreases over the top half of the grid.
    pub h3_tail_decreasing: bool,
    /// Partial sums of `e^{-n/2} h-hat_n`.
    pub h4_series_a: PartialSumDiag,
    /// Partial sums of `(d(e^n) (log n) h-hat_n^5)^{N-1}`.
    pub h4_series_b: PartialSumDiag,
    pub note: String,
}

impl TailModel {
    /// Evaluates the assumption diagnostics on the given grids.
    pub fn check_assumptions(&self, aux: &AuxFunction, grids: &CheckGrids) -> AssumptionReport {
        let mut slow_dev: f64 = 0.0;
        let mut sosv_dev: f64 = 0.0;
        for &u in &grids.u_grid {
            let ln_l_u = self.ln_l(u);
            let g_u = self.g(u);
            for &v in &grids.v_grid {
                let uv = LogMagnitude::from_ln(u.ln() + v.ln());
                let ratio_m1 = (self.ln_l(uv) - ln_l_u).exp_m1();
                slow_dev = slow_dev.max(ratio_m1.abs());
                sosv_dev = sosv_dev.max((ratio_m1 / g_u - v.ln()).abs());
            }
        }

        let mut margin = f64::INFINITY;
        let mut h3_values = Vec::new();
        for &t in &grids.u_grid {
            let h = aux.eval(t);
            let ln_l_t = self.ln_l(t);
            for k in 1..=4 {
                let up = LogMagnitude::from_ln(t.ln() + k as f64 * h.ln());
                let down = LogMagnitude::from_ln(t.ln() - k as f64 * h.ln());
                let up_ratio = (self.ln_l(up) - ln_l_t).exp();
                let down_ratio = (self.ln_l(down) - ln_l_t).exp();
                margin = margin.min(1.0 + 1.0 / h - up_ratio);
                margin = margin.min(down_ratio - (1.0 - 1.0 / h));
            }
            let th2 = LogMagnitude::from_ln(t.ln() + 2.0 * h.ln());
            let ln_h3 = match self.ln_mean_frac_below(th2) {
                Ok(ln_frac) => 4.0 * h.ln() + self.ln_l(th2) + ln_frac,
                Err(_) => f64::NAN,
            };
            h3_values.push((t.ln(), ln_h3.exp()));
        }
        let half = h3_values.len() / 2;
        let h3_tail_decreasing = h3_values
            .windows(2)
            .skip(half.saturating_sub(1))
            .all(|w| w[1].1 <= w[0].1 || w[0].1.is_nan() || w[1].1.is_nan());

        let n_loc = self.analytic_n().n;
        let hat_h = |n: u64| -> f64 {
            let nf = n as f64;
            let ln_log_n = if n <= 1 { f64::NEG_INFINITY } else { nf.ln().ln() };
            let ln_arg = (2.0 * n_loc as f64).ln()
                + 2.0 * nf
                + self.ln_l(LogMagnitude::from_ln(2.0 * nf))
                + ln_log_n;
            aux.eval_ln(ln_arg)
        };
        let h4_series_a = partial_sum_diag(|n| (-(n as f64) / 2.0).exp() * hat_h(n), grids.n_max);
        let h4_series_b = partial_sum_diag(
            |n| {
                let nf = n as f64;
                (self.d_from_ln(nf) * nf.ln() * hat_h(n).powi(5)).powi(n_loc as i32 - 1)
            },
            grids.n_max,
        );

        AssumptionReport {
            model: *self,
            aux_floor: aux.floor(),
            slow_variation_max_dev: slow_dev,
            sosv_max_dev: sosv_dev,
            h_window_holds: margin > 0.0,
            h_window_margin: margin,
            h3_values,
            h3_tail_decreasing,
            h4_series_a,
            h4_series_b,
            note: "numerical diagnostics on finite grids; not a proof".to_string(),
        }
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "assumption diagnostics for {} (aux floor {})", self.model, self.aux_floor)?;
        writeln!(f, "  slow variation: max |L(uv)/L(u) - 1| = {:.3e}", self.slow_variation_max_dev)?;
        writeln!(f, "  second order:   max |(L(uv)/L(u)-1)/g(u) - log v| = {:.3e}", self.sosv_max_dev)?;
        writeln!(
            f,
            "  window inequalities (k <= 4): {} (margin {:.3e})",
            if self.h_window_holds { "hold" } else { "VIOLATED" },
            self.h_window_margin
        )?;
        if let (Some(first), Some(last)) = (self.h3_values.first(), self.h3_values.last()) {
            writeln!(
                f,
                "  h3 expectation: {:.3e} at ln t = {} -> {:.3e} at ln t = {} (tail decreasing: {})",
                first.1, first.0, last.1, last.0, self.h3_tail_decreasing
            )?;
        }
        writeln!(
            f,
            "  h4 series: e^(-n/2) h-hat partial sum {:.6} (last-decade growth {:.2e}); \
             clustered series partial sum {:.6} (growth {:.2e})",
            self.h4_series_a.checkpoints.last().map(|c| c.1).unwrap_or(0.0),
            self.h4_series_a.last_decade_growth,
            self.h4_series_b.checkpoints.last().map(|c| c.1).unwrap_or(0.0),
            self.h4_series_b.last_decade_growth,
        )?;
        write!(f, "  {}", self.note)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sl(gamma: f64) -> TailModel {
        TailModel::new(TailFamily::StretchedLog, gamma).unwrap()
    }

    #[test]
    fn l_at_zero_is_one_for_every_family() {
        for model in [
            sl(0.5),
            TailModel::new(TailFamily::Log, 1.0).unwrap(),
            TailModel::new(TailFamily::DoubleLog, 1.0).unwrap(),
        ] {
            assert_eq!(model.ln_l(LogMagnitude::ZERO), 0.0);
        }
    }

    #[test]
    fn stretched_log_unit_argument() {
        // L(e - 1) = e since log(1+u) = 1.
        let u = LogMagnitude::from_linear(std::f64::consts::E - 1.0).unwrap();
        assert!((sl(0.5).ln_l(u) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn stretched_log_d_closed_form() {
        let model = sl(0.5);
        for n in [2.0, 5.0, 50.0, 1e4] {
            let d = model.d(LogMagnitude::from_ln(n)).unwrap();
            assert!(((d - 0.5 / n) / (0.5 / n)).abs() < 1e-14);
        }
    }

    #[test]
    fn log_family_inverse_value() {
        // L^{-1}(e) = exp(e - 1) - 1 for gamma = 1; verify by forward evaluation.
        let model = TailModel::new(TailFamily::Log, 1.0).unwrap();
        let inv = model.l_inv(LogMagnitude::from_ln(1.0)).unwrap();
        let expected = (std::f64::consts::E - 1.0).exp() - 1.0;
        assert!((inv.to_linear_checked().unwrap() - expected).abs() / expected < 1e-12);
        assert!((model.ln_l(inv) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn inverse_consistency_over_grid() {
        for model in [
            sl(0.3),
            sl(0.55),
            sl(0.8),
            TailModel::new(TailFamily::Log, 1.0).unwrap(),
            TailModel::new(TailFamily::Log, 2.0).unwrap(),
            TailModel::new(TailFamily::DoubleLog, 1.0).unwrap(),
        ] {
            for i in 0..=60 {
                let ln_u = 0.1 + (690.0 - 0.1) * i as f64 / 60.0;
                let u = LogMagnitude::from_ln(ln_u);
                let back = model.l_inv(model.l(u)).unwrap();
                assert!(
                    (back.ln() - ln_u).abs() < 1e-9 * ln_u.max(1.0),
                    "round trip failed for {model} at ln u = {ln_u}: got {}",
                    back.ln()
                );
            }
        }
    }

    #[test]
    fn d_matches_composition() {
        for model in [
            sl(0.3),
            sl(0.55),
            sl(0.7),
            TailModel::new(TailFamily::Log, 1.5).unwrap(),
            TailModel::new(TailFamily::DoubleLog, 2.0).unwrap(),
        ] {
            for m in [0.5, 1.0, 3.0, 10.0, 40.0] {
                let v = LogMagnitude::from_ln(m);
                let closed = model.d(v).unwrap();
                let composed = model.g(model.l_inv(v).unwrap());
                if closed < 1e-300 {
                    // Double-exponential decay underflows; both routes must agree on that.
                    assert!(composed < 1e-300);
                    continue;
                }
                assert!(
                    ((closed - composed) / closed).abs() < 1e-10,
                    "{model} at ln v = {m}: closed {closed} vs composed {composed}"
                );
            }
        }
    }

    #[test]
    fn analytic_n_presets() {
        assert_eq!(sl(0.3).analytic_n().n, 2);
        assert_eq!(sl(0.55).analytic_n().n, 3);
        assert_eq!(sl(0.7).analytic_n().n, 4);
        assert_eq!(TailModel::new(TailFamily::Log, 2.0).unwrap().analytic_n().n, 2);
        assert_eq!(TailModel::new(TailFamily::DoubleLog, 1.0).unwrap().analytic_n().n, 2);
        for model in [sl(0.3), sl(0.5), sl(0.55), sl(0.7), sl(0.8)] {
            assert!(model.analytic_n().boundary_assumptions_hold(), "{model}");
        }
    }

    #[test]
    fn sample_trap_closed_forms() {
        let model = sl(0.5);
        let s = model.sample_trap(1.0).unwrap();
        assert!((s.to_linear_checked().unwrap() - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        assert!((model.ln_l(s) - 1.0).abs() < 1e-12);

        // E = 100: ln(1 + sigma) = E^2 = 10^4 exactly.
        let deep = model.sample_trap(100.0).unwrap();
        assert!((deep.ln() - 1e4).abs() < 1e-11);

        let tiny = model.sample_trap(1e-12).unwrap();
        assert!(!tiny.is_zero() && tiny.ln() < -20.0);

        assert!(model.sample_trap(0.0).is_err());
        assert!(model.sample_trap(-1.0).is_err());
    }

    #[test]
    fn sosv_limit_near_log_v() {
        // (L(uv)/L(u) - 1)/g(u) approximates log v at large u.
        let model = sl(0.5);
        let u = LogMagnitude::from_ln(100.0);
        let uv = LogMagnitude::from_ln(100.0 + 2f64.ln());
        let ratio_m1 = (model.ln_l(uv) - model.ln_l(u)).exp_m1();
        assert!((ratio_m1 / model.g(u) - 2f64.ln()).abs() < 0.05);
    }

    #[test]
    fn aux_function_basics() {
        let aux = AuxFunction::default();
        assert_eq!(aux.eval_ln(f64::NEG_INFINITY), 2.0);
        assert!(aux.eval_ln(1e8f64.ln()) >= 2.0);
        // Nondecreasing and t/h strictly increasing on a log grid.
        let mut prev_h = 0.0;
        let mut prev_toh = f64::NEG_INFINITY;
        for i in 0..200 {
            let ln_t = i as f64 * 5.0;
            let h = aux.eval_ln(ln_t);
            assert!(h >= prev_h);
            let toh = ln_t - h.ln();
            assert!(toh > prev_toh);
            prev_h = h;
            prev_toh = toh;
        }
        assert!(AuxFunction::new(1.5).is_err());
    }

    #[test]
    fn aux_solver_inverts_t_over_h() {
        let aux = AuxFunction::new(3.0).unwrap();
        for rhs_ln in [0.0, 5.0, 40.0, 300.0] {
            let ln_t = aux.solve_t_over_h(rhs_ln);
            let residual = ln_t - aux.eval_ln(ln_t).ln() - rhs_ln;
            assert!(residual.abs() < 1e-9);
        }
        // Constant-floor regime: t = h0 * rhs.
        let ln_t = aux.solve_t_over_h(1.0);
        assert!((ln_t - (1.0 + 3f64.ln())).abs() < 1e-9);
    }

    #[test]
    fn mean_frac_below_matches_direct_quadrature() {
        // Independent oracle: integrate over the exponential variable
        // E = ln L(sigma) instead of the delta substitution.
        let model = sl(0.5);
        for ln_x in [2.0, 5.0, 10.0, 30.0] {
            let x = LogMagnitude::from_ln(ln_x);
            let w = model.ln_l(x);
            let direct = numeric::adaptive_simpson(
                &|e: f64| {
                    let s = model.l_inv_from_ln_l(e);
                    (-e).exp() * (s.ln() - ln_x).exp()
                },
                1e-12,
                w,
                1e-14,
            );
            let ln_frac = model.ln_mean_frac_below(x).unwrap();
            assert!(
                (ln_frac - direct.ln()).abs() < 1e-6,
                "ln x = {ln_x}: {ln_frac} vs {}",
                direct.ln()
            );
        }
    }

    #[test]
    fn model_spec_parsing() {
        let m: TailModel = "stretched-log:0.55".parse().unwrap();
        assert_eq!(m, sl(0.55));
        assert_eq!(m.to_string(), "stretched-log:0.55");
        assert!("stretched-log:1.2".parse::<TailModel>().is_err());
        assert!("weird:0.5".parse::<TailModel>().is_err());
        let a: AuxFunction = "floor:2.5".parse().unwrap();
        assert_eq!(a.floor(), 2.5);
        assert_eq!("default".parse::<AuxFunction>().unwrap(), AuxFunction::default());
    }

    #[test]
    fn assumption_report_window_regimes() {
        // gamma = 0.3 is inside the eventual regime of the window
        // inequalities on [e^30, e^400] with the default aux floor.
        let grids = CheckGrids {
            u_grid: (3..=40).map(|i| LogMagnitude::from_ln(10.0 * i as f64)).collect(),
            v_grid: vec![0.25, 0.5, 2.0, 10.0],
            n_max: 2_000,
        };
        let report = sl(0.3).check_assumptions(&AuxFunction::default(), &grids);
        assert!(report.h_window_holds, "margin {}", report.h_window_margin);
        assert!(report.sosv_max_dev < 0.25);

        let log_report = TailModel::new(TailFamily::Log, 1.0)
            .unwrap()
            .check_assumptions(&AuxFunction::default(), &grids);
        assert!(log_report.h_window_holds);

        // gamma = 0.5 has not yet entered the eventual regime at t = 1e8;
        // the checker must detect the violation there.
        let early = CheckGrids {
            u_grid: vec![LogMagnitude::from_ln(1e8f64.ln())],
            v_grid: vec![2.0],
            n_max: 100,
        };
        let early_report = sl(0.5).check_assumptions(&AuxFunction::default(), &early);
        assert!(!early_report.h_window_holds);

        // v = 1 would give ratio exactly 1; spot-check that directly.
        let model = sl(0.5);
        let u = LogMagnitude::from_ln(50.0);
        assert_eq!(model.ln_l(u), model.ln_l(LogMagnitude::from_ln(50.0 + 1f64.ln())));
    }
}
