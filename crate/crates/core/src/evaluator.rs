//! Offline metrics: valid-read AUC, relative improvement over a baseline,
//! and the dwell-time migration table (activeness level x dwell-time decile).

use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::InteractionEvent;
use crate::profiles::{nearest_rank, WEEK_SECONDS};

/// Mann-Whitney AUC with ties counted as half a win, in O(n log n).
///
/// Ranks are handled as doubled integers so the result is exactly
/// `(wins + ties / 2) / (n_pos * n_neg)` rounded once.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores but {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count() as u128;
    let n_neg = labels.len() as u128 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::InsufficientData("AUC needs both positives and negatives".into()));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum2: u128 = 0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        // ranks i+1..=j share midrank (i+1+j)/2
        let pos_in_group = idx[i..j].iter().filter(|&&k| labels[k]).count() as u128;
        rank_sum2 += pos_in_group * (i as u128 + 1 + j as u128);
        i = j;
    }
    let u2 = rank_sum2 - n_pos * (n_pos + 1);
    Ok(u2 as f64 / (2 * n_pos * n_neg) as f64)
}

/// `(auc - 0.5) / (base_auc - 0.5) - 1`.
pub fn relaimpr(auc: f64, base_auc: f64) -> Result<f64> {
    if !(base_auc > 0.5) || !auc.is_finite() || base_auc > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "RelaImpr needs a baseline AUC above 0.5 (got {base_auc})"
        )));
    }
    Ok((auc - 0.5) / (base_auc - 0.5) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EvalReport {
    pub auc: f64,
    pub base_auc: Option<f64>,
    pub relaimpr: Option<f64>,
    pub n_pos: u64,
    pub n_neg: u64,
}

impl EvalReport {
    pub fn new(scores: &[f64], labels: &[bool], base_auc: Option<f64>) -> Result<Self> {
        let a = auc(scores, labels)?;
        let relaimpr = base_auc.map(|b| relaimpr(a, b)).transpose()?;
        let n_pos = labels.iter().filter(|&&l| l).count() as u64;
        Ok(EvalReport {
            auc: a,
            base_auc,
            relaimpr,
            n_pos,
            n_neg: labels.len() as u64 - n_pos,
        })
    }
}

/// Six strictly ascending weekly-click cut points separating levels 1..7.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ActivenessBoundaries(pub [u64; 6]);

impl ActivenessBoundaries {
    pub fn new(b: [u64; 6]) -> Result<Self> {
        if b.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!("boundaries {b:?} not strictly ascending")));
        }
        Ok(ActivenessBoundaries(b))
    }

    /// Equal-frequency septiles: boundary `j` is the first count of the
    /// `(j+1)`-th seventh of the sorted population, nudged up where ties
    /// would break strict ordering.
    pub fn equal_frequency(counts: &[u64]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InsufficientData("no users to derive activeness levels".into()));
        }
        let mut sorted = counts.to_vec();
        sorted.sort_unstable();
        let n = sorted.len() as u64;
        let mut b = [0u64; 6];
        for (j, slot) in b.iter_mut().enumerate() {
            let rank = nearest_rank((j + 1) as f64 / 7.0, n);
            *slot = sorted[(rank as usize).min(sorted.len() - 1)];
        }
        for j in 1..6 {
            if b[j] <= b[j - 1] {
                b[j] = b[j - 1] + 1;
            }
        }
        if b[0] == 0 {
            // level 1 must be reachable by users with no clicks
            let shift = 1;
            for v in &mut b {
                *v += shift;
            }
        }
        ActivenessBoundaries::new(b)
    }

    pub fn level(&self, week_clicks: u64) -> u8 {
        activeness_level(week_clicks, &self.0)
    }
}

/// `1 + #{boundaries <= clicks}`; level 7 is the most active.
pub fn activeness_level(user_week_clicks: u64, boundaries: &[u64; 6]) -> u8 {
    1 + boundaries.iter().filter(|&&b| b <= user_week_clicks).count() as u8
}

/// Average clicks per week for every user in the log (users without clicks
/// get 0). Weeks are counted over the log's whole time span, rounded up.
pub fn user_week_clicks(events: &[InteractionEvent]) -> BTreeMap<String, u64> {
    let mut clicks: BTreeMap<String, u64> = BTreeMap::new();
    let (mut lo, mut hi) = (i64::MAX, i64::MIN);
    for e in events {
        *clicks.entry(e.user_id.clone()).or_default() += u64::from(e.clicked);
        lo = lo.min(e.timestamp);
        hi = hi.max(e.timestamp);
    }
    if events.is_empty() {
        return clicks;
    }
    let span = (hi - lo + 1) as u64;
    let weeks = span.div_ceil(WEEK_SECONDS as u64).max(1);
    for v in clicks.values_mut() {
        *v /= weeks;
    }
    clicks
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecileMode {
    /// Each activeness level gets its own dwell-time decile cuts.
    #[default]
    WithinLevel,
    /// One set of cuts over all clicks of the arm.
    Global,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MigrationCell {
    pub activeness_level: u8,
    pub dt_decile: u8,
    pub mean_dt_baseline: Option<f64>,
    pub mean_dt_treatment: Option<f64>,
    pub delta: Option<f64>,
}

impl MigrationCell {
    pub fn delta_pct(&self) -> Option<f64> {
        match (self.delta, self.mean_dt_baseline) {
            (Some(d), Some(b)) if b != 0.0 => Some(100.0 * d / b),
            _ => None,
        }
    }
}

/// Decile (1..=10) of each position in a sorted list of `n` values, by
/// nearest rank: position `i` (1-based) is in the smallest decile `d` with
/// `i <= ceil(d * n / 10)`.
pub fn decile_of_positions(n: usize) -> Vec<u8> {
    let cuts: Vec<u64> = (1..=10).map(|d| nearest_rank(d as f64 / 10.0, n as u64)).collect();
    (1..=n as u64)
        .map(|i| cuts.iter().position(|&c| i <= c).map_or(10, |d| d as u8 + 1))
        .collect()
}

type CellMeans = BTreeMap<(u8, u8), f64>;

fn arm_means(events: &[InteractionEvent], bounds: &ActivenessBoundaries, mode: DecileMode) -> CellMeans {
    let week = user_week_clicks(events);
    let level_of = |u: &str| bounds.level(week.get(u).copied().unwrap_or(0));
    let clicks: Vec<(u8, f64)> = events
        .iter()
        .filter(|e| e.clicked)
        .map(|e| (level_of(&e.user_id), e.dwell_time_s))
        .collect();
    let mut sums: BTreeMap<(u8, u8), (f64, u64)> = BTreeMap::new();
    let mut add = |items: &mut Vec<(u8, f64)>| {
        items.sort_by(|a, b| a.1.total_cmp(&b.1));
        for ((level, t), d) in items.iter().zip(decile_of_positions(items.len())) {
            let cell = sums.entry((*level, d)).or_default();
            cell.0 += t;
            cell.1 += 1;
        }
    };
    match mode {
        DecileMode::Global => add(&mut clicks.clone()),
        DecileMode::WithinLevel => {
            for level in 1..=7u8 {
                let mut items: Vec<(u8, f64)> = clicks.iter().copied().filter(|c| c.0 == level).collect();
                add(&mut items);
            }
        }
    }
    sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

/// Mean clicked dwell time per (level, decile) in each arm and the change
/// from baseline to treatment. Levels come from each arm's own weekly
/// clicks; `boundaries` default to equal-frequency septiles of the
/// baseline. Cells are ordered level-major, decile-minor; empty cells carry
/// `None`.
pub fn migration_report(
    baseline: &[InteractionEvent],
    treatment: &[InteractionEvent],
    boundaries: Option<ActivenessBoundaries>,
    mode: DecileMode,
) -> Result<Vec<MigrationCell>> {
    if !baseline.iter().any(|e| e.clicked) || !treatment.iter().any(|e| e.clicked) {
        return Err(Error::InsufficientData("both logs need clicks".into()));
    }
    let bounds = match boundaries {
        Some(b) => b,
        None => {
            let counts: Vec<u64> = user_week_clicks(baseline).into_values().collect();
            ActivenessBoundaries::equal_frequency(&counts)?
        }
    };
    let base = arm_means(baseline, &bounds, mode);
    let treat = arm_means(treatment, &bounds, mode);
    let mut cells = Vec::with_capacity(70);
    for level in 1..=7u8 {
        for decile in 1..=10u8 {
            let b = base.get(&(level, decile)).copied();
            let t = treat.get(&(level, decile)).copied();
            cells.push(MigrationCell {
                activeness_level: level,
                dt_decile: decile,
                mean_dt_baseline: b,
                mean_dt_treatment: t,
                delta: b.zip(t).map(|(b, t)| t - b),
            });
        }
    }
    Ok(cells)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

pub fn write_migration_csv(mut w: impl Write, cells: &[MigrationCell], with_pct: bool) -> Result<()> {
    if with_pct {
        writeln!(w, "level,decile,mean_base,mean_treat,delta,delta_pct")?;
    } else {
        writeln!(w, "level,decile,mean_base,mean_treat,delta")?;
    }
    for c in cells {
        write!(
            w,
            "{},{},{},{},{}",
            c.activeness_level,
            c.dt_decile,
            fmt_opt(c.mean_dt_baseline),
            fmt_opt(c.mean_dt_treatment),
            fmt_opt(c.delta)
        )?;
        if with_pct {
            write!(w, ",{}", fmt_opt(c.delta_pct()))?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}
