//! Synthetic interaction logs with known structure.
//!
//! Users belong to one of seven activeness levels (fixed impression budget
//! per level); items belong to length classes with their own ln-DT
//! distribution. Clicks follow `logistic(bias + <u, v>)` over latent
//! vectors and a click's ln T is `class_mean + dt_affinity * <u, v> +
//! class_std * N(0, 1)`, so dwell time carries affinity signal whenever
//! `dt_affinity > 0`.
//!
//! Randomness: item and user latents come from ChaCha8 stream 0 of `seed`;
//! the impressions of user `i` come from stream `i + 1`, so users can be
//! generated in any order or in shards and still reproduce the same log.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ChiSquared, ContinuousCDF, DiscreteCDF, Normal};

use crate::error::{Error, Result};
use crate::evaluator::{decile_of_positions, user_week_clicks, ActivenessBoundaries};
use crate::ingest::InteractionEvent;
use crate::ndt::logistic;
use crate::profiles::{LIGHT_USER_CLICKS, WEEK_SECONDS};

pub const LEVELS: usize = 7;
const NOISE_FLOOR_S: f64 = 5.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemClass {
    pub name: String,
    pub share: f64,
    pub ln_mean: f64,
    pub ln_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub seed: u64,
    pub start_ts: i64,
    pub span_days: u32,
    /// Share of users in levels 1..=7.
    pub level_mix: [f64; LEVELS],
    /// Impressions per user at each level.
    pub level_impressions: [u32; LEVELS],
    pub classes: Vec<ItemClass>,
    pub latent_dim: usize,
    pub latent_std: f64,
    pub click_bias: f64,
    pub dt_affinity: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_users: 500,
            n_items: 100,
            seed: 7,
            start_ts: 1_700_000_000,
            span_days: 14,
            level_mix: [1.0 / 7.0; LEVELS],
            level_impressions: [60, 90, 120, 160, 200, 260, 340],
            classes: vec![
                ItemClass { name: "short".into(), share: 0.3, ln_mean: 2.2, ln_std: 0.8 },
                ItemClass { name: "medium".into(), share: 0.4, ln_mean: 3.5, ln_std: 1.0 },
                ItemClass { name: "long".into(), share: 0.3, ln_mean: 4.8, ln_std: 1.0 },
            ],
            latent_dim: 8,
            latent_std: 0.7,
            click_bias: -1.0,
            dt_affinity: 0.8,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(text)
            .map_err(|e| Error::InvalidArgument(format!("simulation config: {}", e.message())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.n_users == 0 || self.n_items == 0 {
            return bad("n_users and n_items must be positive".into());
        }
        if self.start_ts <= 0 || self.span_days == 0 {
            return bad("start_ts and span_days must be positive".into());
        }
        if self.level_mix.iter().any(|&p| !(p >= 0.0)) || (self.level_mix.iter().sum::<f64>() - 1.0).abs() > 1e-6 {
            return bad(format!("level_mix {:?} must be non-negative and sum to 1", self.level_mix));
        }
        if self.classes.is_empty() {
            return bad("at least one item class is required".into());
        }
        let share: f64 = self.classes.iter().map(|c| c.share).sum();
        if self.classes.iter().any(|c| !(c.share >= 0.0) || !(c.ln_std >= 0.0) || !c.ln_mean.is_finite())
            || (share - 1.0).abs() > 1e-6
        {
            return bad("class shares must be non-negative and sum to 1, ln_std >= 0".into());
        }
        if !(self.latent_std >= 0.0) || !self.click_bias.is_finite() || !self.dt_affinity.is_finite() {
            return bad("latent_std must be >= 0; click_bias and dt_affinity finite".into());
        }
        Ok(())
    }

    fn span_s(&self) -> i64 {
        i64::from(self.span_days) * 86_400
    }
}

/// Stratified assignment: index `i` of `n` goes to the first group whose
/// cumulative share exceeds `(i + 0.5) / n`, so group sizes match the
/// shares as closely as integers allow.
fn stratified(shares: &[f64], n: usize) -> Vec<usize> {
    let mut cum = Vec::with_capacity(shares.len());
    let mut acc = 0.0;
    for s in shares {
        acc += s;
        cum.push(acc);
    }
    (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            cum.iter().position(|&c| u < c).unwrap_or(shares.len() - 1)
        })
        .collect()
}

pub fn user_levels(cfg: &SimConfig) -> Vec<u8> {
    stratified(&cfg.level_mix, cfg.n_users).into_iter().map(|l| l as u8 + 1).collect()
}

pub fn item_classes(cfg: &SimConfig) -> Vec<usize> {
    let shares: Vec<f64> = cfg.classes.iter().map(|c| c.share).collect();
    stratified(&shares, cfg.n_items)
}

pub fn user_id(i: usize) -> String {
    format!("u{i}")
}

pub fn item_id(i: usize) -> String {
    format!("i{i}")
}

/// Ground truth for one generated event, aligned with the log row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TruthRow {
    pub user_level: u8,
    pub item_class: String,
    pub affinity: f64,
    pub click_prob: f64,
    /// Probability that the impression becomes a click whose dwell time
    /// clears the reference threshold `max(5, exp(mu - sigma))` of the
    /// class mixture (affinity ignored in the threshold).
    pub vr_propensity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub events: Vec<InteractionEvent>,
    pub truth: Vec<TruthRow>,
}

pub const SIDECAR_HEADER: &str = "user_id,item_id,timestamp,user_level,item_class,affinity,click_prob,vr_propensity";

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn latents(rng: &mut ChaCha8Rng, n: usize, dim: usize, std: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..dim).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect()
}

/// Moments of ln T over clicks when affinity does not move dwell time:
/// the class mixture weighted by item counts.
fn class_weights(cfg: &SimConfig) -> Vec<f64> {
    let mut w = vec![0.0; cfg.classes.len()];
    for c in item_classes(cfg) {
        w[c] += 1.0 / cfg.n_items as f64;
    }
    w
}

fn mixture_moments(cfg: &SimConfig) -> (f64, f64) {
    let w = class_weights(cfg);
    let mu: f64 = cfg.classes.iter().zip(&w).map(|(c, w)| w * c.ln_mean).sum();
    let m2: f64 = cfg
        .classes
        .iter()
        .zip(&w)
        .map(|(c, w)| w * (c.ln_std * c.ln_std + c.ln_mean * c.ln_mean))
        .sum();
    (mu, (m2 - mu * mu).max(0.0).sqrt())
}

/// P(ln T > x) for ln T ~ Normal(mean, std), with std = 0 as a point mass.
fn upper_tail(x: f64, mean: f64, std: f64) -> f64 {
    if std == 0.0 {
        return if mean > x { 1.0 } else { 0.0 };
    }
    1.0 - Normal::new(mean, std).expect("valid normal").cdf(x)
}

pub fn generate(cfg: &SimConfig) -> Result<SimOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let item_latent = latents(&mut rng, cfg.n_items, cfg.latent_dim, cfg.latent_std);
    let user_latent = latents(&mut rng, cfg.n_users, cfg.latent_dim, cfg.latent_std);
    let classes = item_classes(cfg);
    let levels = user_levels(cfg);
    let (mix_mu, mix_sigma) = mixture_moments(cfg);
    let ln_ref = (mix_mu - mix_sigma).max(NOISE_FLOOR_S.ln());
    let span = cfg.span_s();

    let mut rows: Vec<(InteractionEvent, TruthRow)> = Vec::new();
    for (u, level) in levels.iter().enumerate() {
        let mut urng = ChaCha8Rng::seed_from_u64(cfg.seed);
        urng.set_stream(u as u64 + 1);
        let uid = user_id(u);
        for _ in 0..cfg.level_impressions[*level as usize - 1] {
            let item = urng.random_range(0..cfg.n_items);
            let ts = cfg.start_ts + urng.random_range(0..span);
            let affinity = dot(&user_latent[u], &item_latent[item]);
            let click_prob = logistic(cfg.click_bias + affinity);
            let class = &cfg.classes[classes[item]];
            let z: f64 = urng.sample(StandardNormal);
            let clicked = urng.random::<f64>() < click_prob;
            let mean = class.ln_mean + cfg.dt_affinity * affinity;
            let iid = item_id(item);
            let event = if clicked {
                let t = ((mean + class.ln_std * z).exp() * 1000.0).round() / 1000.0;
                InteractionEvent::click(&uid, &iid, ts, t)
            } else {
                InteractionEvent::impression(&uid, &iid, ts)
            };
            let truth = TruthRow {
                user_level: *level,
                item_class: class.name.clone(),
                affinity,
                click_prob,
                vr_propensity: click_prob * upper_tail(ln_ref, mean, class.ln_std),
            };
            rows.push((event, truth));
        }
    }
    // stable: equal keys keep generation order
    rows.sort_by(|a, b| {
        (a.0.timestamp, &a.0.user_id, &a.0.item_id).cmp(&(b.0.timestamp, &b.0.user_id, &b.0.item_id))
    });
    let (events, truth) = rows.into_iter().unzip();
    Ok(SimOutput { events, truth })
}

pub fn write_sidecar(mut w: impl Write, out: &SimOutput) -> Result<()> {
    writeln!(w, "{SIDECAR_HEADER}")?;
    for (e, t) in out.events.iter().zip(&out.truth) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            e.user_id, e.item_id, e.timestamp, t.user_level, t.item_class, t.affinity, t.click_prob, t.vr_propensity
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Expected click probability over the latent distribution.
///
/// With `u, v ~ N(0, s^2 I_k)`, `<u, v>` given `|u|^2 = s^2 r` is
/// `N(0, s^4 r)` with `r ~ chi^2_k`; the outer integral uses 400
/// equal-probability chi-square cells, the inner a 0.01-step rule on
/// `[-8, 8]`.
pub fn analytic_click_rate(cfg: &SimConfig) -> Result<f64> {
    cfg.validate()?;
    let s2 = cfg.latent_std * cfg.latent_std;
    if s2 == 0.0 || cfg.latent_dim == 0 {
        return Ok(logistic(cfg.click_bias));
    }
    let chi = ChiSquared::new(cfg.latent_dim as f64).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let cells = 400;
    let steps = 1600;
    let h = 16.0 / steps as f64;
    let norm = (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for c in 0..cells {
        let r = chi.inverse_cdf((c as f64 + 0.5) / cells as f64);
        let scale = s2 * r.sqrt();
        let mut inner = 0.0;
        for i in 0..=steps {
            let z = -8.0 + i as f64 * h;
            let wt = if i == 0 || i == steps { 0.5 } else { 1.0 };
            inner += wt * (-0.5 * z * z).exp() / norm * logistic(cfg.click_bias + scale * z);
        }
        total += inner * h;
    }
    Ok(total / cells as f64)
}

/// Expected label shares among clicks, as the labeler would assign them
/// with thresholds from the population (not sample) distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RuleMix {
    pub x_l: f64,
    pub light_click_share: f64,
    pub noise: f64,
    pub invalid: f64,
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

/// Share of a level's clicks made while the user had fewer than 7 clicks
/// in the trailing week (the click itself included).
///
/// Other clicks land at uniform times; for a click at offset `t` the window
/// covers `min(t, W)` of the span `S`, so the number of other in-window
/// clicks is Binomial(M - 1, p * min(t, W) / S).
fn light_share_for_level(impressions: u32, p: f64, span_s: f64) -> Result<f64> {
    if impressions == 0 {
        return Ok(0.0);
    }
    let w = WEEK_SECONDS as f64;
    let steps = 2000;
    let mut acc = 0.0;
    for i in 0..steps {
        let t = (i as f64 + 0.5) / steps as f64 * span_s;
        let q = p * t.min(w) / span_s;
        let b = Binomial::new(q.clamp(0.0, 1.0), u64::from(impressions - 1))
            .map_err(|e| Error::InvalidArgument(e.to_string()))?;
        acc += b.cdf(LIGHT_USER_CLICKS as u64 - 2);
    }
    Ok(acc / steps as f64)
}

/// Closed-form rule mix; only defined when clicks and dwell times are
/// independent of the latents (`dt_affinity = 0` and `latent_std = 0`).
pub fn analytic_rule_mix(cfg: &SimConfig) -> Result<RuleMix> {
    cfg.validate()?;
    if cfg.dt_affinity != 0.0 || cfg.latent_std != 0.0 {
        return Err(Error::InvalidArgument(
            "analytic rule mix needs dt_affinity = 0 and latent_std = 0".into(),
        ));
    }
    let p = logistic(cfg.click_bias);
    let levels = user_levels(cfg);
    let (mut clicks, mut light) = (0.0, 0.0);
    for l in 0..LEVELS {
        let users = levels.iter().filter(|&&x| x as usize == l + 1).count() as f64;
        let m = cfg.level_impressions[l];
        let c = users * f64::from(m);
        clicks += c;
        light += c * light_share_for_level(m, p, cfg.span_s() as f64)?;
    }
    let q = if clicks > 0.0 { light / clicks } else { 0.0 };

    let (mu, sigma) = mixture_moments(cfg);
    let x_l = (mu - sigma).exp();
    let ln5 = NOISE_FLOOR_S.ln();
    let ln_hi = (mu - sigma).max(ln5);
    let z10 = Normal::new(0.0, 1.0).expect("standard normal").inverse_cdf(0.1);
    let w = class_weights(cfg);
    let mut mix = RuleMix { x_l, light_click_share: q, noise: 0.0, invalid: 0.0, t1: 0.0, t2: 0.0, t3: 0.0 };
    for (c, wc) in cfg.classes.iter().zip(&w) {
        let above = |x: f64| upper_tail(x, c.ln_mean, c.ln_std);
        let noise = 1.0 - above(ln5);
        let t1 = above(ln_hi);
        let band = (above(ln5) - above(ln_hi)).max(0.0);
        let ln_p10 = (c.ln_mean + c.ln_std * z10).max(ln5);
        let band_above_p10 = (above(ln_p10) - above(ln_hi)).max(0.0);
        mix.noise += wc * noise;
        mix.t1 += wc * t1;
        mix.t2 += wc * q * band;
        mix.t3 += wc * (1.0 - q) * band_above_p10;
    }
    mix.invalid = (1.0 - mix.noise - mix.t1 - mix.t2 - mix.t3).max(0.0);
    Ok(mix)
}

/// Expected fraction of users whose average weekly clicks fall below the
/// light-user threshold, with weeks counted as `ceil(span / 7 days)`.
/// Needs `latent_std = 0` so every impression clicks with the same
/// probability.
pub fn analytic_light_user_fraction(cfg: &SimConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.latent_std != 0.0 {
        return Err(Error::InvalidArgument("light-user fraction needs latent_std = 0".into()));
    }
    let p = logistic(cfg.click_bias);
    let weeks = (cfg.span_s() as u64).div_ceil(WEEK_SECONDS as u64).max(1);
    let limit = LIGHT_USER_CLICKS as u64 * weeks;
    let levels = user_levels(cfg);
    let mut frac = 0.0;
    for l in 0..LEVELS {
        let share = levels.iter().filter(|&&x| x as usize == l + 1).count() as f64 / cfg.n_users as f64;
        let b = Binomial::new(p, u64::from(cfg.level_impressions[l])).map_err(|e| Error::InvalidArgument(e.to_string()))?;
        frac += share * b.cdf(limit - 1);
    }
    Ok(frac)
}

/// A treatment arm derived from a baseline log with a known dwell-time
/// change per (activeness level, decile) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedMigration {
    pub treatment: Vec<InteractionEvent>,
    /// Expected change of the cell mean, keyed by (level, decile).
    pub planted: BTreeMap<(u8, u8), f64>,
}

/// Lengthens the short reads of light users: within each level up to
/// `max_level`, every click in deciles up to `max_decile` moves a fraction
/// `alpha` of the way toward the largest dwell time of those deciles.
/// The map is monotone and stays below that cap, so levels and decile
/// membership are the same in both arms and each targeted cell's mean
/// rises by exactly `alpha * (cap - cell_mean)`.
pub fn plant_migration(
    baseline: &[InteractionEvent],
    boundaries: ActivenessBoundaries,
    max_level: u8,
    max_decile: u8,
    alpha: f64,
) -> Result<PlantedMigration> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside [0, 1)")));
    }
    let week = user_week_clicks(baseline);
    let mut per_level: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
    for (k, e) in baseline.iter().enumerate() {
        if e.clicked {
            let level = boundaries.level(week.get(&e.user_id).copied().unwrap_or(0));
            per_level.entry(level).or_default().push(k);
        }
    }
    let mut treatment = baseline.to_vec();
    let mut planted = BTreeMap::new();
    for (level, mut idx) in per_level {
        if level > max_level {
            continue;
        }
        idx.sort_by(|&a, &b| baseline[a].dwell_time_s.total_cmp(&baseline[b].dwell_time_s));
        let deciles = decile_of_positions(idx.len());
        let Some(cap_pos) = deciles.iter().rposition(|&d| d <= max_decile) else {
            continue;
        };
        let cap = baseline[idx[cap_pos]].dwell_time_s;
        let mut sums: BTreeMap<u8, (f64, f64)> = BTreeMap::new();
        for (&k, &d) in idx.iter().zip(&deciles) {
            if d > max_decile {
                break;
            }
            let t = baseline[k].dwell_time_s;
            let t2 = t + alpha * (cap - t);
            treatment[k].dwell_time_s = t2;
            let s = sums.entry(d).or_default();
            s.0 += t2 - t;
            s.1 += 1.0;
        }
        for (d, (s, n)) in sums {
            planted.insert((level, d), s / n);
        }
    }
    Ok(PlantedMigration { treatment, planted })
}
