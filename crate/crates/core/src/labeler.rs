//! Valid-read labeling.
//!
//! Every clicked event with at least 5s of dwell time is a valid read if one
//! of three rules holds, checked in priority order:
//!
//! * `T1`: dwell time strictly above the global threshold `x_l`;
//! * `T2`: the user is light (fewer than 7 clicks in the trailing week);
//! * `T3`: dwell time strictly above the item's historical P10.
//!
//! Clicks under the noise floor are `NoiseClick` whatever the rules say.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dwell_stats::DwellStats;
use crate::error::{Error, ParseReason, Result};
use crate::ingest::{format_event, parse_fields, split_fields, InteractionEvent, LOG_HEADER};
use crate::profiles::{ItemDwellProfile, ProfileStore, UserActivityProfile, WEEK_SECONDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelKind {
    NotClicked,
    NoiseClick,
    InvalidClick,
    ValidRead,
}

impl LabelKind {
    pub const ALL: [LabelKind; 4] = [
        LabelKind::NotClicked,
        LabelKind::NoiseClick,
        LabelKind::InvalidClick,
        LabelKind::ValidRead,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LabelKind::NotClicked => "not_clicked",
            LabelKind::NoiseClick => "noise_click",
            LabelKind::InvalidClick => "invalid_click",
            LabelKind::ValidRead => "valid_read",
        }
    }
}

impl fmt::Display for LabelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LabelKind {
    type Err = ParseReason;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        LabelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| ParseReason::Label(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum RuleSource {
    T1,
    T2,
    T3,
}

impl RuleSource {
    pub const ALL: [RuleSource; 3] = [RuleSource::T1, RuleSource::T2, RuleSource::T3];

    pub fn as_str(self) -> &'static str {
        match self {
            RuleSource::T1 => "T1",
            RuleSource::T2 => "T2",
            RuleSource::T3 => "T3",
        }
    }
}

impl fmt::Display for RuleSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidReadLabel {
    pub kind: LabelKind,
    pub source: Option<RuleSource>,
    pub dwell_time_s: f64,
}

impl ValidReadLabel {
    pub fn new(kind: LabelKind, source: Option<RuleSource>, dwell_time_s: f64) -> Self {
        debug_assert_eq!(source.is_some(), kind == LabelKind::ValidRead);
        ValidReadLabel {
            kind,
            source,
            dwell_time_s,
        }
    }

    pub fn is_valid_read(&self) -> bool {
        self.kind == LabelKind::ValidRead
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LabelConfig {
    /// Clicks with dwell time below this many seconds are noise.
    pub noise_floor_s: f64,
    /// A user is light with strictly fewer clicks than this in the window.
    pub light_user_clicks: usize,
    pub window_s: i64,
    /// Minimum item history size for T3 to apply.
    pub min_records_t3: u64,
    /// Leave the event's own record out of its item's P10.
    pub exclude_self: bool,
}

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            noise_floor_s: 5.0,
            light_user_clicks: 7,
            window_s: WEEK_SECONDS,
            min_records_t3: 1,
            exclude_self: false,
        }
    }
}

fn t3_matches(t: f64, item: &ItemDwellProfile, cfg: &LabelConfig) -> bool {
    let (n, p10) = if cfg.exclude_self {
        (item.n_records.saturating_sub(1), item.p10_excluding(t))
    } else {
        (item.n_records, item.p10())
    };
    if n < cfg.min_records_t3.max(1) {
        return false;
    }
    // item histories are f32; compare at that precision
    match p10 {
        Ok(p10) => f64::from(t as f32) > p10,
        Err(_) => false,
    }
}

/// Labels one event against frozen stats and profiles. A missing item
/// profile makes T3 inapplicable; a missing user profile counts as zero
/// clicks (light).
pub fn label_event(
    e: &InteractionEvent,
    stats: &DwellStats,
    item: Option<&ItemDwellProfile>,
    user: Option<&UserActivityProfile>,
    cfg: &LabelConfig,
) -> ValidReadLabel {
    let t = e.dwell_time_s;
    if !e.clicked {
        return ValidReadLabel::new(LabelKind::NotClicked, None, t);
    }
    if t < cfg.noise_floor_s {
        return ValidReadLabel::new(LabelKind::NoiseClick, None, t);
    }
    let source = if t > stats.x_l {
        Some(RuleSource::T1)
    } else if user.map_or(0, |u| u.clicks_in_window(e.timestamp, cfg.window_s)) < cfg.light_user_clicks {
        Some(RuleSource::T2)
    } else if item.is_some_and(|p| t3_matches(t, p, cfg)) {
        Some(RuleSource::T3)
    } else {
        None
    };
    match source {
        Some(s) => ValidReadLabel::new(LabelKind::ValidRead, Some(s), t),
        None => ValidReadLabel::new(LabelKind::InvalidClick, None, t),
    }
}

pub fn label_with_store(
    e: &InteractionEvent,
    stats: &DwellStats,
    store: &ProfileStore,
    cfg: &LabelConfig,
) -> ValidReadLabel {
    label_event(e, stats, store.item(&e.item_id), store.user(&e.user_id), cfg)
}

pub fn label_all<'a>(
    events: impl IntoIterator<Item = &'a InteractionEvent>,
    stats: &DwellStats,
    store: &ProfileStore,
    cfg: &LabelConfig,
) -> Vec<LabeledEvent> {
    events
        .into_iter()
        .map(|e| LabeledEvent {
            label: label_with_store(e, stats, store, cfg),
            event: e.clone(),
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEvent {
    pub event: InteractionEvent,
    pub label: ValidReadLabel,
}

pub const LABELED_HEADER: &str = "user_id,item_id,timestamp,clicked,dwell_time_s,label,source";

/// Event columns followed by `label,source`; `source` is empty unless the
/// label is `valid_read`.
pub fn format_labeled(le: &LabeledEvent) -> String {
    format!(
        "{},{},{}",
        format_event(&le.event),
        le.label.kind,
        le.label.source.map_or("", RuleSource::as_str)
    )
}

pub fn parse_labeled(record: &str, line: usize) -> Result<LabeledEvent> {
    let fields = split_fields(record);
    if fields.len() != 7 {
        return Err(Error::Parse {
            line,
            reason: ParseReason::FieldCount(fields.len()),
        });
    }
    let event = parse_fields(&fields[..5], line)?;
    let fail = |reason| Error::Parse { line, reason };
    let kind: LabelKind = fields[5].parse().map_err(fail)?;
    let source = match fields[6] {
        "" => None,
        "T1" => Some(RuleSource::T1),
        "T2" => Some(RuleSource::T2),
        "T3" => Some(RuleSource::T3),
        other => return Err(fail(ParseReason::Source(other.to_string()))),
    };
    if source.is_some() != (kind == LabelKind::ValidRead) || event.clicked != (kind != LabelKind::NotClicked) {
        return Err(fail(ParseReason::Source(fields[6].to_string())));
    }
    let label = ValidReadLabel::new(kind, source, event.dwell_time_s);
    Ok(LabeledEvent { event, label })
}

pub fn write_labeled<'a, W: Write>(
    mut out: W,
    labeled: impl IntoIterator<Item = &'a LabeledEvent>,
    header: bool,
) -> Result<()> {
    if header {
        writeln!(out, "{LABELED_HEADER}")?;
    }
    for le in labeled {
        writeln!(out, "{}", format_labeled(le))?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a labeled file. A first line equal to [`LABELED_HEADER`] (or the
/// plain log header) is skipped.
pub fn read_labeled(text: &str) -> Result<Vec<LabeledEvent>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() || (i == 0 && (line == LABELED_HEADER || line.starts_with(LOG_HEADER))) {
            continue;
        }
        out.push(parse_labeled(line, i + 1)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionReport {
    pub total: u64,
    pub counts: BTreeMap<LabelKind, u64>,
    pub source_counts: BTreeMap<RuleSource, u64>,
    /// Share of each rule among valid reads; empty when there are none.
    pub source_fractions: BTreeMap<RuleSource, f64>,
}

pub fn composition_report<'a>(labels: impl IntoIterator<Item = &'a ValidReadLabel>) -> CompositionReport {
    let mut counts: BTreeMap<LabelKind, u64> = LabelKind::ALL.into_iter().map(|k| (k, 0)).collect();
    let mut source_counts: BTreeMap<RuleSource, u64> = RuleSource::ALL.into_iter().map(|s| (s, 0)).collect();
    let mut total = 0;
    for l in labels {
        total += 1;
        *counts.entry(l.kind).or_default() += 1;
        if let Some(s) = l.source {
            *source_counts.entry(s).or_default() += 1;
        }
    }
    let valid = counts[&LabelKind::ValidRead];
    let source_fractions = if valid == 0 {
        BTreeMap::new()
    } else {
        source_counts
            .iter()
            .map(|(&s, &c)| (s, c as f64 / valid as f64))
            .collect()
    };
    CompositionReport {
        total,
        counts,
        source_counts,
        source_fractions,
    }
}
