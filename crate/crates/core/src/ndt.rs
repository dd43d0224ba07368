//! Normalized dwell time: a logistic reshaping of dwell time that is
//! steepest at `offset`, zero at `T = 0` and saturates at `t_max`.
//!
//! ```text
//! ndt(T) = a / (1 + exp(-(T - offset) / tau)) - b
//! ```
//!
//! `a` and `b` follow from `(offset, tau, t_max)`: `ndt(0) = 0` and
//! `sup ndt = a - b = t_max`.

use serde::{Deserialize, Serialize};

use crate::dwell_stats::DwellStats;
use crate::error::{Error, Result};
use crate::labeler::ValidReadLabel;

pub const DEFAULT_OFFSET: f64 = 15.0;
pub const DEFAULT_TAU: f64 = 20.0;
/// `2.319 - 0.744`, the range implied by the published curve constants.
pub const DEFAULT_T_MAX: f64 = 1.575;
pub const DEFAULT_PRECISION: f64 = 1e-5;

const INVARIANT_TOL: f64 = 1e-9;

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NdtParams {
    pub offset: f64,
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    pub t_max: f64,
    pub precision: f64,
}

/// Scale constants `(a, b)` giving `ndt(0) = 0` and `sup ndt = t_max`.
pub fn derive_scale(offset: f64, tau: f64, t_max: f64) -> Result<(f64, f64)> {
    if !(tau > 0.0 && t_max > 0.0 && offset >= 0.0) || !(offset.is_finite() && tau.is_finite() && t_max.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "derive_scale needs offset >= 0, tau > 0, t_max > 0 (got {offset}, {tau}, {t_max})"
        )));
    }
    let a = t_max / logistic(offset / tau);
    let b = a * logistic(-offset / tau);
    Ok((a, b))
}

fn rel_close(x: f64, y: f64) -> bool {
    (x - y).abs() <= INVARIANT_TOL * x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

impl NdtParams {
    /// Curve through `(offset, tau)` scaled to `[0, t_max)`.
    pub fn derived(offset: f64, tau: f64, t_max: f64, precision: f64) -> Result<Self> {
        if !(precision > 0.0) {
            return Err(Error::InvalidArgument(format!("precision must be > 0, got {precision}")));
        }
        let (a, b) = derive_scale(offset, tau, t_max)?;
        Ok(NdtParams {
            offset,
            tau,
            a,
            b,
            t_max,
            precision,
        })
    }

    /// offset 15s, tau 20s, t_max 1.575; gives a = 2.31897, b = 0.74397.
    pub fn paper_default() -> Self {
        Self::derived(DEFAULT_OFFSET, DEFAULT_TAU, DEFAULT_T_MAX, DEFAULT_PRECISION)
            .expect("default constants are valid")
    }

    /// Offset at `x_l` and the largest tau that flattens the curve to within
    /// `precision` of `t_max` by `x_h`.
    pub fn solved(stats: &DwellStats, precision: f64, t_max: f64) -> Result<Self> {
        let offset = stats.x_l;
        let tau = solve_tau(offset, stats.x_h, precision, t_max)?;
        Self::derived(offset, tau, t_max, precision)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("invalid ndt params: {what} ({self:?})")));
        if !(self.tau > 0.0) || !(self.a > 0.0) || !(self.b >= 0.0) || !(self.t_max > 0.0) || !(self.precision > 0.0) {
            return bad("tau, a, t_max, precision must be > 0 and b >= 0");
        }
        if !rel_close(self.a - self.b, self.t_max) {
            return bad("a - b != t_max");
        }
        if !rel_close(self.b, self.a * logistic(-self.offset / self.tau)) {
            return bad("ndt(0) != 0");
        }
        Ok(())
    }

    pub fn eval(&self, t: f64) -> f64 {
        ndt(t, self)
    }

    /// Slope of the curve at `t`.
    pub fn derivative(&self, t: f64) -> f64 {
        let s = logistic((t - self.offset) / self.tau);
        self.a * s * (1.0 - s) / self.tau
    }
}

impl Default for NdtParams {
    fn default() -> Self {
        Self::paper_default()
    }
}

pub fn ndt(t: f64, p: &NdtParams) -> f64 {
    p.a * logistic((t - p.offset) / p.tau) - p.b
}

/// `t_max - ndt(x_h)` for the curve through `(offset, tau)`.
fn tail_gap(offset: f64, tau: f64, x_h: f64, t_max: f64) -> f64 {
    let a = t_max / logistic(offset / tau);
    a * logistic(-(x_h - offset) / tau)
}

/// Largest `tau` (to 1e-3) whose tail gap at `x_h` is within `precision`.
/// The gap grows with `tau` towards `t_max`, so the answer is found by
/// bisection.
pub fn solve_tau(offset: f64, x_h: f64, precision: f64, t_max: f64) -> Result<f64> {
    if !(x_h > offset) || !(offset >= 0.0) {
        return Err(Error::InvalidArgument(format!("need 0 <= offset < x_h (got {offset}, {x_h})")));
    }
    if !(precision > 0.0) || !(t_max > 0.0) {
        return Err(Error::InvalidArgument("precision and t_max must be > 0".into()));
    }
    if precision >= t_max {
        return Err(Error::InvalidArgument(format!(
            "precision {precision} >= t_max {t_max} can never be violated"
        )));
    }
    let gap = |tau| tail_gap(offset, tau, x_h, t_max);
    let mut lo = 1e-6;
    let mut hi = 1.0;
    while gap(hi) <= precision {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::InvalidArgument("tau search did not bracket".into()));
        }
    }
    if gap(lo) > precision {
        return Err(Error::InvalidArgument(format!("precision {precision} unattainable")));
    }
    while hi - lo > 1e-4 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) <= precision {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// How negatives are weighted in the weighted tower.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegMode {
    /// Negatives get weight 1.
    #[default]
    Unit,
    /// Negatives get `ndt(T)` like positives (0 for unclicked impressions).
    Literal,
}

impl std::str::FromStr for NegMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" => Ok(NegMode::Unit),
            "literal" => Ok(NegMode::Literal),
            _ => Err(Error::InvalidArgument(format!("unknown neg mode {s:?}"))),
        }
    }
}

pub fn instance_weight(label: &ValidReadLabel, p: &NdtParams, neg_mode: NegMode) -> f64 {
    if label.is_valid_read() {
        return ndt(label.dwell_time_s, p);
    }
    match neg_mode {
        NegMode::Unit => 1.0,
        NegMode::Literal => ndt(label.dwell_time_s, p).max(0.0),
    }
}
