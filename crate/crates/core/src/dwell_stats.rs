//! Log-normal fit of clicked dwell times and the derived valid-read
//! thresholds `x_l = exp(mu - sigma)` and `x_h = exp(mu + sigma)`.
//!
//! Sums of `ln T` are kept in fixed point (2^-24 resolution) so that merging
//! accumulators is exact, associative and commutative. The fit is therefore
//! bit-identical regardless of event order or shard layout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::InteractionEvent;

const FIXED_SCALE: f64 = (1u64 << 24) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DwellStats {
    pub mu: f64,
    pub sigma: f64,
    pub n: u64,
    pub x_l: f64,
    pub x_h: f64,
}

impl DwellStats {
    pub fn from_moments(mu: f64, sigma: f64, n: u64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "bad log-normal moments mu={mu} sigma={sigma}"
            )));
        }
        Ok(DwellStats {
            mu,
            sigma,
            n,
            x_l: (mu - sigma).exp(),
            x_h: (mu + sigma).exp(),
        })
    }
}

/// Mergeable sufficient statistics of `ln T` over clicked events with `T > 0`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StatsAccumulator {
    n: u64,
    sum_ln: i128,
    sum_ln_sq: i128,
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn sum_ln(&self) -> f64 {
        self.sum_ln as f64 / FIXED_SCALE
    }

    pub fn sum_ln_sq(&self) -> f64 {
        self.sum_ln_sq as f64 / (FIXED_SCALE * FIXED_SCALE)
    }

    /// Adds one dwell time. Returns false (and ignores the value) when it
    /// cannot enter the fit: zero, negative or non-finite.
    pub fn push_dwell(&mut self, t: f64) -> bool {
        if !(t > 0.0 && t.is_finite()) {
            return false;
        }
        let q = (t.ln() * FIXED_SCALE).round() as i128;
        self.n += 1;
        self.sum_ln += q;
        self.sum_ln_sq += q * q;
        true
    }

    pub fn push(&mut self, e: &InteractionEvent) -> bool {
        e.clicked && self.push_dwell(e.dwell_time_s)
    }

    pub fn merge(&mut self, other: &StatsAccumulator) {
        self.n += other.n;
        self.sum_ln += other.sum_ln;
        self.sum_ln_sq += other.sum_ln_sq;
    }

    pub fn finalize(&self) -> Result<DwellStats> {
        if self.n < 2 {
            return Err(Error::InsufficientData(format!(
                "need at least 2 clicks with positive dwell time, have {}",
                self.n
            )));
        }
        let n = self.n as i128;
        let mu = self.sum_ln as f64 / self.n as f64 / FIXED_SCALE;
        // n^2 * var in fixed point, exact when it fits in i128.
        let var = match n
            .checked_mul(self.sum_ln_sq)
            .and_then(|a| self.sum_ln.checked_mul(self.sum_ln).map(|b| a - b))
        {
            Some(num) => num as f64 / (self.n as f64 * self.n as f64) / (FIXED_SCALE * FIXED_SCALE),
            None => {
                let m2 = self.sum_ln_sq() / self.n as f64;
                m2 - mu * mu
            }
        };
        DwellStats::from_moments(mu, var.max(0.0).sqrt(), self.n)
    }
}

impl<'a> FromIterator<&'a InteractionEvent> for StatsAccumulator {
    fn from_iter<I: IntoIterator<Item = &'a InteractionEvent>>(iter: I) -> Self {
        let mut acc = StatsAccumulator::new();
        for e in iter {
            acc.push(e);
        }
        acc
    }
}

/// Fits the Gaussian model of `ln T` over clicked events. Unclicked events
/// and clicks with zero dwell time are ignored. Population convention
/// (divisor n) for sigma.
pub fn fit_log_normal<'a>(events: impl IntoIterator<Item = &'a InteractionEvent>) -> Result<DwellStats> {
    events.into_iter().collect::<StatsAccumulator>().finalize()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub center: f64,
    pub count: u64,
}

fn clicked_ln(events: impl IntoIterator<Item = impl std::borrow::Borrow<InteractionEvent>>) -> Vec<f64> {
    events
        .into_iter()
        .filter_map(|e| {
            let e = e.borrow();
            (e.clicked && e.dwell_time_s > 0.0 && e.dwell_time_s.is_finite()).then(|| e.dwell_time_s.ln())
        })
        .collect()
}

/// Histogram of `ln T` over clicked events, spanning the observed range.
/// A degenerate range (one distinct value) gets unit-width bins centred on
/// that value.
pub fn histogram_ln_dwell<'a>(
    events: impl IntoIterator<Item = &'a InteractionEvent>,
    n_bins: usize,
) -> Result<Vec<HistogramBin>> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be >= 1".into()));
    }
    let values = clicked_ln(events);
    if values.is_empty() {
        return Ok(Vec::new());
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (lo, hi) = if hi > lo {
        (lo, hi)
    } else {
        let half = n_bins as f64 / 2.0;
        (lo - half, lo + half)
    };
    Ok(bin_values(&values, lo, hi, n_bins))
}

/// Histogram of `ln T` over a fixed `[lo, hi]` range. Values outside the
/// range are counted in the edge bins, so counts always sum to n.
pub fn histogram_ln_dwell_range<'a>(
    events: impl IntoIterator<Item = &'a InteractionEvent>,
    lo: f64,
    hi: f64,
    n_bins: usize,
) -> Result<Vec<HistogramBin>> {
    if n_bins == 0 || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "need n_bins >= 1 and hi > lo (got {n_bins}, [{lo}, {hi}])"
        )));
    }
    Ok(bin_values(&clicked_ln(events), lo, hi, n_bins))
}

fn bin_values(values: &[f64], lo: f64, hi: f64, n_bins: usize) -> Vec<HistogramBin> {
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0u64; n_bins];
    for &v in values {
        let idx = ((v - lo) / width).floor();
        let idx = if idx < 0.0 { 0 } else { (idx as usize).min(n_bins - 1) };
        counts[idx] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, count)| HistogramBin {
            center: lo + (i as f64 + 0.5) * width,
            count,
        })
        .collect()
}
