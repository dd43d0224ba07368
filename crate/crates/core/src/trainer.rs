//! Training of the two-tower model under the four objectives compared in
//! the offline study (single CTR, CTR + log DT, VR + log DT, VR + NDT).

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::InteractionEvent;
use crate::labeler::LabeledEvent;
use crate::mtl_model::{FeatureVector, Gradients, LossTerms, ModelConfig, MtlNetwork, TrainingInstance};
use crate::ndt::{instance_weight, NdtParams, NegMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Clicks as labels, weighted tower off.
    SingleCtr,
    /// Clicks as labels, weighted tower on `ln(1 + T)`.
    CtrLogdt,
    /// Valid reads as labels, weighted tower on `ln(1 + T)`.
    VrLogdt,
    /// Valid reads as labels, weighted tower on normalized dwell time.
    VrNdt,
}

impl Objective {
    pub const ALL: [Objective; 4] = [
        Objective::SingleCtr,
        Objective::CtrLogdt,
        Objective::VrLogdt,
        Objective::VrNdt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Objective::SingleCtr => "single_ctr",
            Objective::CtrLogdt => "ctr_logdt",
            Objective::VrLogdt => "vr_logdt",
            Objective::VrNdt => "vr_ndt",
        }
    }

    pub fn uses_weighted_tower(self) -> bool {
        self != Objective::SingleCtr
    }

    pub fn loss_terms(self) -> LossTerms {
        LossTerms {
            weighted_tower: self.uses_weighted_tower(),
        }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Objective {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Objective::ALL
            .into_iter()
            .find(|o| o.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown objective {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub objective: Objective,
    pub neg_mode: NegMode,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub emb_dim: usize,
    pub bottom_width: usize,
    pub tower_hidden: [usize; 2],
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            objective: Objective::VrNdt,
            neg_mode: NegMode::Unit,
            batch_size: 512,
            learning_rate: 1e-3,
            epochs: 3,
            seed: 0,
            emb_dim: 16,
            bottom_width: 64,
            tower_hidden: [64, 32],
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.epochs == 0 || !(self.learning_rate > 0.0) {
            return Err(Error::InvalidArgument(
                "batch_size and epochs must be >= 1 and learning_rate > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Maps user and item ids to embedding rows. Row 0 of each slot is shared
/// by ids not seen in training.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureEncoder {
    pub users: Vec<String>,
    pub items: Vec<String>,
}

pub const USER_SLOT: usize = 0;
pub const ITEM_SLOT: usize = 1;

impl FeatureEncoder {
    pub fn fit<'a>(events: impl IntoIterator<Item = &'a InteractionEvent>) -> Self {
        let mut users = std::collections::BTreeSet::new();
        let mut items = std::collections::BTreeSet::new();
        for e in events {
            users.insert(e.user_id.clone());
            items.insert(e.item_id.clone());
        }
        FeatureEncoder {
            users: users.into_iter().collect(),
            items: items.into_iter().collect(),
        }
    }

    fn index(vocab: &[String], id: &str) -> u32 {
        vocab.binary_search_by(|v| v.as_str().cmp(id)).map_or(0, |i| i as u32 + 1)
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        vec![self.users.len() + 1, self.items.len() + 1]
    }

    pub fn encode(&self, e: &InteractionEvent) -> FeatureVector {
        FeatureVector::categorical(vec![
            (USER_SLOT, Self::index(&self.users, &e.user_id)),
            (ITEM_SLOT, Self::index(&self.items, &e.item_id)),
        ])
    }
}

pub fn log_dwell_weight(t: f64) -> f64 {
    t.max(0.0).ln_1p()
}

/// Maps labeled events to `(features, y, w)` for the chosen objective.
pub fn build_instances(
    labeled: &[LabeledEvent],
    params: &NdtParams,
    cfg: &TrainConfig,
    encoder: &FeatureEncoder,
) -> Vec<TrainingInstance> {
    labeled
        .iter()
        .map(|le| {
            let t = le.event.dwell_time_s;
            let (y, w) = match cfg.objective {
                Objective::SingleCtr => (le.event.clicked, 0.0),
                Objective::CtrLogdt | Objective::VrLogdt => {
                    let y = if cfg.objective == Objective::CtrLogdt {
                        le.event.clicked
                    } else {
                        le.label.is_valid_read()
                    };
                    let w = if y || cfg.neg_mode == NegMode::Literal {
                        log_dwell_weight(t)
                    } else {
                        1.0
                    };
                    (y, w)
                }
                Objective::VrNdt => (le.label.is_valid_read(), instance_weight(&le.label, params, cfg.neg_mode)),
            };
            TrainingInstance {
                features: encoder.encode(&le.event),
                y: u8::from(y),
                w,
            }
        })
        .collect()
}

/// Adaptive-moment gradient descent (decays 0.9 / 0.999, epsilon 1e-8).
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(net: &MtlNetwork, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = net.tensors().iter().map(|t| vec![0.0; t.len()]).collect();
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// Applies `grads * scale`, skipping tensors in `frozen`.
    pub fn update(&mut self, net: &mut MtlNetwork, grads: &Gradients, scale: f64, frozen: std::ops::Range<usize>) {
        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);
        for (ti, params) in net.tensors_mut().into_iter().enumerate() {
            if frozen.contains(&ti) {
                continue;
            }
            let (m, v, g) = (&mut self.m[ti], &mut self.v[ti], &grads.tensors[ti]);
            for j in 0..params.len() {
                let gj = g[j] * scale;
                m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * gj;
                v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * gj * gj;
                let step = self.lr * (m[j] / bc1) / ((v[j] / bc2).sqrt() + self.eps);
                params[j] = (f64::from(params[j]) - step) as f32;
            }
        }
    }
}

/// Per-epoch seed for shuffling: `seed ^ ((epoch + 1) * 0x9E3779B97F4A7C15)`.
pub fn epoch_seed(seed: u64, epoch: usize) -> u64 {
    seed ^ (epoch as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Instance visit order for one epoch; a pure function of `(seed, epoch)`.
pub fn epoch_order(n: usize, seed: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(epoch_seed(seed, epoch));
    order.shuffle(&mut rng);
    order
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossTraceRow {
    pub epoch: usize,
    pub l_v: f64,
    pub l_w: f64,
    pub l: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub net: MtlNetwork,
    /// Row 0 is the initialized network; row `k` follows epoch `k`. Losses
    /// are per-instance means over the full training set.
    pub trace: Vec<LossTraceRow>,
}

fn mean_loss(net: &MtlNetwork, instances: &[TrainingInstance], terms: LossTerms, epoch: usize) -> Result<LossTraceRow> {
    let l = net.batch_loss(instances, terms)?;
    let n = instances.len() as f64;
    let row = LossTraceRow {
        epoch,
        l_v: l.l_v / n,
        l_w: l.l_w / n,
        l: l.l / n,
    };
    if !row.l.is_finite() {
        return Err(Error::Diverged { epoch, step: 0 });
    }
    Ok(row)
}

pub fn model_config(cfg: &TrainConfig, slot_cardinalities: Vec<usize>) -> ModelConfig {
    ModelConfig {
        slot_cardinalities,
        emb_dim: cfg.emb_dim,
        dense_dim: 0,
        bottom_width: cfg.bottom_width,
        tower_hidden: cfg.tower_hidden,
        seed: cfg.seed,
    }
}

/// Fixed-epoch mini-batch training of `L = L_v + L_w`. Deterministic for a
/// given config and instance list.
pub fn train(cfg: &TrainConfig, model: ModelConfig, instances: &[TrainingInstance]) -> Result<TrainOutput> {
    cfg.validate()?;
    if instances.is_empty() {
        return Err(Error::InvalidArgument("no training instances".into()));
    }
    let terms = cfg.objective.loss_terms();
    let mut net = MtlNetwork::init(model)?;
    let frozen = if terms.weighted_tower {
        0..0
    } else {
        net.tower_w_tensor_range()
    };
    let mut opt = Adam::new(&net, cfg.learning_rate);
    let mut trace = vec![mean_loss(&net, instances, terms, 0)?];
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for epoch in 1..=cfg.epochs {
        let order = epoch_order(instances.len(), cfg.seed, epoch);
        for (step, chunk) in order.chunks(cfg.batch_size).enumerate() {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| instances[i].clone()));
            let (grads, loss) = net.backward(&batch, terms)?;
            if !loss.l.is_finite() {
                return Err(Error::Diverged { epoch, step });
            }
            opt.update(&mut net, &grads, 1.0 / batch.len() as f64, frozen.clone());
        }
        trace.push(mean_loss(&net, instances, terms, epoch)?);
    }
    Ok(TrainOutput { net, trace })
}

pub fn write_loss_trace(mut w: impl Write, trace: &[LossTraceRow]) -> Result<()> {
    writeln!(w, "epoch,L_v,L_w,L")?;
    for r in trace {
        writeln!(w, "{},{},{},{}", r.epoch, r.l_v, r.l_w, r.l)?;
    }
    w.flush()?;
    Ok(())
}

/// A trained network with everything needed to score raw events.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub net: MtlNetwork,
    pub encoder: FeatureEncoder,
    pub objective: Objective,
    pub neg_mode: NegMode,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    objective: Objective,
    neg_mode: NegMode,
    seed: u64,
    encoder: FeatureEncoder,
    format_versions: BTreeMap<String, u32>,
}

impl TrainedModel {
    pub fn features(&self, e: &InteractionEvent) -> FeatureVector {
        self.encoder.encode(e)
    }

    /// `P + P'`, or `P` alone when the weighted tower was never trained.
    pub fn ranking_score(&self, e: &InteractionEvent) -> Result<f64> {
        let (p, pw) = self.net.forward(&self.features(e))?;
        Ok(if self.objective.uses_weighted_tower() { p + pw } else { p })
    }

    pub fn save(&self, w: &mut impl Write) -> Result<()> {
        let meta = CheckpointMeta {
            objective: self.objective,
            neg_mode: self.neg_mode,
            seed: self.seed,
            encoder: self.encoder.clone(),
            format_versions: BTreeMap::from([("checkpoint".to_string(), crate::mtl_model::CHECKPOINT_VERSION)]),
        };
        self.net.save(w, &serde_json::to_value(meta)?)
    }

    pub fn load(r: &mut impl Read) -> Result<Self> {
        let (net, meta) = MtlNetwork::load(r)?;
        let meta: CheckpointMeta = serde_json::from_value(meta)?;
        if meta.encoder.cardinalities() != net.config.slot_cardinalities {
            return Err(Error::format("checkpoint", "vocabulary does not match embedding tables"));
        }
        Ok(TrainedModel {
            net,
            encoder: meta.encoder,
            objective: meta.objective,
            neg_mode: meta.neg_mode,
            seed: meta.seed,
        })
    }
}

/// Fits the encoder, builds instances and trains in one go.
pub fn fit(labeled: &[LabeledEvent], params: &NdtParams, cfg: &TrainConfig) -> Result<(TrainedModel, Vec<LossTraceRow>)> {
    let encoder = FeatureEncoder::fit(labeled.iter().map(|le| &le.event));
    let instances = build_instances(labeled, params, cfg, &encoder);
    let out = train(cfg, model_config(cfg, encoder.cardinalities()), &instances)?;
    Ok((
        TrainedModel {
            net: out.net,
            encoder,
            objective: cfg.objective,
            neg_mode: cfg.neg_mode,
            seed: cfg.seed,
        },
        out.trace,
    ))
}

/// Splits events by time: the earliest `1 - holdout_frac` go to training.
/// Ties keep file order.
pub fn chronological_split<T: Clone>(items: &[T], ts: impl Fn(&T) -> i64, holdout_frac: f64) -> Result<(Vec<T>, Vec<T>)> {
    if !(0.0..1.0).contains(&holdout_frac) {
        return Err(Error::InvalidArgument(format!("holdout fraction {holdout_frac} not in [0, 1)")));
    }
    let mut idx: Vec<usize> = (0..items.len()).collect();
    idx.sort_by_key(|&i| ts(&items[i]));
    let cut = ((1.0 - holdout_frac) * items.len() as f64).floor() as usize;
    let train = idx[..cut].iter().map(|&i| items[i].clone()).collect();
    let test = idx[cut..].iter().map(|&i| items[i].clone()).collect();
    Ok((train, test))
}
