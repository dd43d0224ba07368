//! Shared-bottom network with two prediction towers.
//!
//! ```text
//! slot embeddings ++ dense ──► shared dense + ReLU ──┬─► tower_v: dense-ReLU, dense-ReLU, dense ──► P  = σ(z_v)
//!                                                    └─► tower_w: dense-ReLU, dense-ReLU, dense ──► P' = σ(z_w)
//! ```
//!
//! Parameters are stored as `f32` (the checkpoint precision); all arithmetic
//! runs in `f64`. Losses are binary cross-entropy sums, the second one
//! weighted per instance, and the ranking score is `P + P'`.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::*;
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"VRMT";
pub const CHECKPOINT_VERSION: u32 = 1;
pub const PROB_CLAMP: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Embedding table size of each categorical slot.
    pub slot_cardinalities: Vec<usize>,
    pub emb_dim: usize,
    pub dense_dim: usize,
    pub bottom_width: usize,
    /// Widths of the two hidden layers in each tower; the third layer has one output.
    pub tower_hidden: [usize; 2],
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(slot_cardinalities: Vec<usize>) -> Self {
        ModelConfig {
            slot_cardinalities,
            emb_dim: 16,
            dense_dim: 0,
            bottom_width: 64,
            tower_hidden: [64, 32],
            seed: 0,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.slot_cardinalities.len() * self.emb_dim + self.dense_dim
    }

    fn validate(&self) -> Result<()> {
        if self.emb_dim == 0 || self.bottom_width == 0 || self.tower_hidden.contains(&0) {
            return Err(Error::InvalidArgument("model widths must be >= 1".into()));
        }
        if self.input_dim() == 0 {
            return Err(Error::InvalidArgument("model has no inputs".into()));
        }
        if self.slot_cardinalities.contains(&0) {
            return Err(Error::InvalidArgument("slot cardinality must be >= 1".into()));
        }
        Ok(())
    }
}

/// Categorical `(slot, token)` pairs plus dense reals. Several tokens in one
/// slot are summed; a slot with no token contributes zeros.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    pub slots: Vec<(usize, u32)>,
    pub dense: Vec<f64>,
}

impl FeatureVector {
    pub fn categorical(slots: Vec<(usize, u32)>) -> Self {
        FeatureVector {
            slots,
            dense: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingInstance {
    pub features: FeatureVector,
    /// 1 for positives, 0 for negatives.
    pub y: u8,
    /// Weight in the weighted-tower loss.
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub n_out: usize,
    pub n_in: usize,
    /// Row-major `[n_out, n_in]`.
    pub w: Vec<f32>,
    pub b: Vec<f32>,
}

impl Dense {
    fn zeros(n_in: usize, n_out: usize) -> Self {
        Dense {
            n_out,
            n_in,
            w: vec![0.0; n_out * n_in],
            b: vec![0.0; n_out],
        }
    }

    fn glorot(n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut d = Dense::zeros(n_in, n_out);
        let s = (6.0 / (n_in + n_out) as f64).sqrt() as f32;
        for v in &mut d.w {
            *v = rng.random_range(-s..s);
        }
        d
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.n_out {
            let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
            let mut acc = f64::from(self.b[o]);
            for (w, xi) in row.iter().zip(x) {
                acc += f64::from(*w) * xi;
            }
            out.push(acc);
        }
    }

    /// Accumulates weight/bias gradients for upstream `d_out`; writes the
    /// input gradient into `d_in` when given.
    fn backward(&self, x: &[f64], d_out: &[f64], gw: &mut [f64], gb: &mut [f64], d_in: Option<&mut Vec<f64>>) {
        for (o, &g) in d_out.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            gb[o] += g;
            let grow = &mut gw[o * self.n_in..(o + 1) * self.n_in];
            for (gw, xi) in grow.iter_mut().zip(x) {
                *gw += g * xi;
            }
        }
        if let Some(d_in) = d_in {
            d_in.clear();
            d_in.resize(self.n_in, 0.0);
            for (o, &g) in d_out.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                let row = &self.w[o * self.n_in..(o + 1) * self.n_in];
                for (di, w) in d_in.iter_mut().zip(row) {
                    *di += g * f64::from(*w);
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tower {
    pub layers: [Dense; 3],
}

impl Tower {
    fn zeros(n_in: usize, hidden: [usize; 2]) -> Self {
        Tower {
            layers: [
                Dense::zeros(n_in, hidden[0]),
                Dense::zeros(hidden[0], hidden[1]),
                Dense::zeros(hidden[1], 1),
            ],
        }
    }

    fn glorot(n_in: usize, hidden: [usize; 2], rng: &mut ChaCha8Rng) -> Self {
        let l0 = Dense::glorot(n_in, hidden[0], rng);
        let l1 = Dense::glorot(hidden[0], hidden[1], rng);
        let l2 = Dense::glorot(hidden[1], 1, rng);
        Tower { layers: [l0, l1, l2] }
    }
}

#[derive(Debug, Clone, Default)]
struct TowerTrace {
    pre: [Vec<f64>; 2],
    act: [Vec<f64>; 2],
    z: f64,
}

#[derive(Debug, Clone, Default)]
struct Trace {
    x: Vec<f64>,
    h_pre: Vec<f64>,
    h: Vec<f64>,
    v: TowerTrace,
    w: TowerTrace,
}

fn relu_into(pre: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.extend(pre.iter().map(|&v| v.max(0.0)));
}

fn sigmoid(z: f64) -> f64 {
    crate::ndt::logistic(z)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MtlNetwork {
    pub config: ModelConfig,
    /// One `[cardinality, emb_dim]` row-major table per slot.
    pub embeddings: Vec<Vec<f32>>,
    pub bottom: Dense,
    pub tower_v: Tower,
    pub tower_w: Tower,
}

/// Which losses a batch contributes to. With the weighted tower disabled
/// `L_w` is zero and `tower_w` receives no gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossTerms {
    pub weighted_tower: bool,
}

impl Default for LossTerms {
    fn default() -> Self {
        LossTerms { weighted_tower: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BatchLoss {
    pub l_v: f64,
    pub l_w: f64,
    pub l: f64,
}

/// Gradient of `L` for every tensor, laid out like [`MtlNetwork::tensor_specs`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(net: &MtlNetwork) -> Self {
        Gradients {
            tensors: net.tensors().iter().map(|t| vec![0.0; t.len()]).collect(),
        }
    }
}

fn bce(p: f64, y: u8) -> (f64, f64) {
    let pc = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let loss = if y == 1 { -pc.ln() } else { -(1.0 - pc).ln() };
    // the clamp is flat outside its range
    let dz = if pc == p { p - f64::from(y) } else { 0.0 };
    (loss, dz)
}

impl MtlNetwork {
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let d = config.input_dim();
        Ok(MtlNetwork {
            embeddings: config
                .slot_cardinalities
                .iter()
                .map(|&c| vec![0.0; c * config.emb_dim])
                .collect(),
            bottom: Dense::zeros(d, config.bottom_width),
            tower_v: Tower::zeros(config.bottom_width, config.tower_hidden),
            tower_w: Tower::zeros(config.bottom_width, config.tower_hidden),
            config,
        })
    }

    /// Uniform `±sqrt(6 / (fan_in + fan_out))` weights from `config.seed`,
    /// zero biases. Embedding tables use `(cardinality, emb_dim)` as fans.
    pub fn init(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let e = config.emb_dim;
        let embeddings = config
            .slot_cardinalities
            .iter()
            .map(|&c| {
                let s = (6.0 / (c + e) as f64).sqrt() as f32;
                (0..c * e).map(|_| rng.random_range(-s..s)).collect()
            })
            .collect();
        let bottom = Dense::glorot(config.input_dim(), config.bottom_width, &mut rng);
        let tower_v = Tower::glorot(config.bottom_width, config.tower_hidden, &mut rng);
        let tower_w = Tower::glorot(config.bottom_width, config.tower_hidden, &mut rng);
        Ok(MtlNetwork {
            config,
            embeddings,
            bottom,
            tower_v,
            tower_w,
        })
    }

    fn n_slots(&self) -> usize {
        self.embeddings.len()
    }

    /// Tensor names and shapes, in the canonical order used by gradients,
    /// optimizers and checkpoints.
    pub fn tensor_specs(&self) -> Vec<(String, Vec<usize>)> {
        let mut out: Vec<(String, Vec<usize>)> = self
            .config
            .slot_cardinalities
            .iter()
            .enumerate()
            .map(|(s, &c)| (format!("emb.{s}"), vec![c, self.config.emb_dim]))
            .collect();
        let mut dense = |name: &str, d: &Dense| {
            out.push((format!("{name}.w"), vec![d.n_out, d.n_in]));
            out.push((format!("{name}.b"), vec![d.n_out]));
        };
        dense("bottom", &self.bottom);
        for (i, l) in self.tower_v.layers.iter().enumerate() {
            dense(&format!("tower_v.{i}"), l);
        }
        for (i, l) in self.tower_w.layers.iter().enumerate() {
            dense(&format!("tower_w.{i}"), l);
        }
        out
    }

    pub fn tensors(&self) -> Vec<&[f32]> {
        let mut out: Vec<&[f32]> = self.embeddings.iter().map(|t| t.as_slice()).collect();
        out.push(&self.bottom.w);
        out.push(&self.bottom.b);
        for l in self.tower_v.layers.iter().chain(&self.tower_w.layers) {
            out.push(&l.w);
            out.push(&l.b);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f32]> {
        let mut out: Vec<&mut [f32]> = self.embeddings.iter_mut().map(|t| t.as_mut_slice()).collect();
        out.push(&mut self.bottom.w);
        out.push(&mut self.bottom.b);
        for l in self.tower_v.layers.iter_mut().chain(self.tower_w.layers.iter_mut()) {
            out.push(&mut l.w);
            out.push(&mut l.b);
        }
        out
    }

    /// Index of the first `tower_w` tensor in [`Self::tensors`].
    pub fn tower_w_tensor_range(&self) -> std::ops::Range<usize> {
        let start = self.n_slots() + 2 + 6;
        start..start + 6
    }

    pub fn n_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn check(&self, f: &FeatureVector) -> Result<()> {
        for &(slot, token) in &f.slots {
            let card = self.config.slot_cardinalities.get(slot).copied().unwrap_or(0);
            if token as usize >= card {
                return Err(Error::IndexOutOfRange {
                    slot,
                    token,
                    cardinality: card,
                });
            }
        }
        if f.dense.len() != self.config.dense_dim {
            return Err(Error::InvalidArgument(format!(
                "expected {} dense features, got {}",
                self.config.dense_dim,
                f.dense.len()
            )));
        }
        Ok(())
    }

    fn input(&self, f: &FeatureVector, x: &mut Vec<f64>) {
        let e = self.config.emb_dim;
        x.clear();
        x.resize(self.config.input_dim(), 0.0);
        for &(slot, token) in &f.slots {
            let row = &self.embeddings[slot][token as usize * e..(token as usize + 1) * e];
            for (xi, v) in x[slot * e..(slot + 1) * e].iter_mut().zip(row) {
                *xi += f64::from(*v);
            }
        }
        x[self.n_slots() * e..].copy_from_slice(&f.dense);
    }

    fn tower_forward(tower: &Tower, h: &[f64], t: &mut TowerTrace) {
        tower.layers[0].forward(h, &mut t.pre[0]);
        relu_into(&t.pre[0], &mut t.act[0]);
        tower.layers[1].forward(&t.act[0], &mut t.pre[1]);
        relu_into(&t.pre[1], &mut t.act[1]);
        let mut z = Vec::with_capacity(1);
        tower.layers[2].forward(&t.act[1], &mut z);
        t.z = z[0];
    }

    fn run(&self, f: &FeatureVector, trace: &mut Trace, weighted: bool) {
        self.input(f, &mut trace.x);
        self.bottom.forward(&trace.x, &mut trace.h_pre);
        relu_into(&trace.h_pre, &mut trace.h);
        Self::tower_forward(&self.tower_v, &trace.h, &mut trace.v);
        if weighted {
            Self::tower_forward(&self.tower_w, &trace.h, &mut trace.w);
        }
    }

    /// `(P, P')` for one feature vector; the shared bottom runs once.
    pub fn forward(&self, f: &FeatureVector) -> Result<(f64, f64)> {
        self.check(f)?;
        let mut trace = Trace::default();
        self.run(f, &mut trace, true);
        Ok((sigmoid(trace.v.z), sigmoid(trace.w.z)))
    }

    /// Ranking score `P + P'`.
    pub fn score(&self, f: &FeatureVector) -> Result<f64> {
        let (p, pw) = self.forward(f)?;
        Ok(p + pw)
    }

    /// Summed losses over the batch, accumulated in canonical instance order.
    pub fn batch_loss(&self, batch: &[TrainingInstance], terms: LossTerms) -> Result<BatchLoss> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let mut trace = Trace::default();
        let mut out = BatchLoss::default();
        for i in canonical_order(batch) {
            let inst = &batch[i];
            self.check(&inst.features)?;
            self.run(&inst.features, &mut trace, terms.weighted_tower);
            out.l_v += bce(sigmoid(trace.v.z), inst.y).0;
            if terms.weighted_tower {
                out.l_w += inst.w * bce(sigmoid(trace.w.z), inst.y).0;
            }
        }
        out.l = out.l_v + out.l_w;
        Ok(out)
    }

    /// Analytic gradient of `L = L_v + L_w`, plus the losses themselves.
    pub fn backward(&self, batch: &[TrainingInstance], terms: LossTerms) -> Result<(Gradients, BatchLoss)> {
        if batch.is_empty() {
            return Err(Error::InvalidArgument("empty batch".into()));
        }
        let mut grads = Gradients::zeros_like(self);
        let mut loss = BatchLoss::default();
        let mut trace = Trace::default();
        let mut dh = Vec::new();
        let mut dh_w = Vec::new();
        let mut dx = Vec::new();
        let s = self.n_slots();
        let e = self.config.emb_dim;
        for i in canonical_order(batch) {
            let inst = &batch[i];
            self.check(&inst.features)?;
            self.run(&inst.features, &mut trace, terms.weighted_tower);

            let (lv, dz_v) = bce(sigmoid(trace.v.z), inst.y);
            loss.l_v += lv;
            tower_backward(&self.tower_v, &trace.h, &trace.v, dz_v, &mut grads.tensors[s + 2..s + 8], &mut dh);
            if terms.weighted_tower {
                let (lw, dz_w) = bce(sigmoid(trace.w.z), inst.y);
                loss.l_w += inst.w * lw;
                tower_backward(
                    &self.tower_w,
                    &trace.h,
                    &trace.w,
                    inst.w * dz_w,
                    &mut grads.tensors[s + 8..s + 14],
                    &mut dh_w,
                );
                for (a, b) in dh.iter_mut().zip(&dh_w) {
                    *a += b;
                }
            }
            for (g, pre) in dh.iter_mut().zip(&trace.h_pre) {
                if *pre <= 0.0 {
                    *g = 0.0;
                }
            }
            let (gw, rest) = grads.tensors[s..s + 2].split_at_mut(1);
            self.bottom.backward(&trace.x, &dh, &mut gw[0], &mut rest[0], Some(&mut dx));
            for &(slot, token) in &inst.features.slots {
                let row = &mut grads.tensors[slot][token as usize * e..(token as usize + 1) * e];
                for (g, d) in row.iter_mut().zip(&dx[slot * e..(slot + 1) * e]) {
                    *g += d;
                }
            }
        }
        loss.l = loss.l_v + loss.l_w;
        Ok((grads, loss))
    }

    /// Writes a checkpoint:
    ///
    /// ```text
    /// "VRMT" | version u32 | json_len u32 | JSON {"model": ModelConfig, "meta": ...}
    /// n_tensors u32 | n_tensors x (name_len u32 | name | rank u32 | rank x u32 dims | f32 data)
    /// ```
    ///
    /// Integers and floats little-endian, data row-major.
    pub fn save(&self, w: &mut impl Write, meta: &serde_json::Value) -> Result<()> {
        let header = serde_json::json!({ "model": self.config, "meta": meta });
        let blob = serde_json::to_vec(&header)?;
        w.write_all(CHECKPOINT_MAGIC)?;
        put_u32(w, CHECKPOINT_VERSION)?;
        put_len(w, blob.len(), "checkpoint")?;
        w.write_all(&blob)?;
        let specs = self.tensor_specs();
        put_len(w, specs.len(), "checkpoint")?;
        for ((name, shape), data) in specs.iter().zip(self.tensors()) {
            put_str(w, name, "checkpoint")?;
            put_len(w, shape.len(), "checkpoint")?;
            for &d in shape {
                put_len(w, d, "checkpoint")?;
            }
            put_f32s(w, data)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a checkpoint written by [`Self::save`]; returns the network and
    /// the `meta` value.
    pub fn load(r: &mut impl Read) -> Result<(Self, serde_json::Value)> {
        expect_magic(r, CHECKPOINT_MAGIC, "checkpoint")?;
        let version = get_u32(r, "checkpoint")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::format("checkpoint", format!("unsupported version {version}")));
        }
        let len = get_u32(r, "checkpoint")? as usize;
        let blob = get_bytes(r, len, "checkpoint")?;
        let mut header: serde_json::Value = serde_json::from_slice(&blob)?;
        let config: ModelConfig = serde_json::from_value(header["model"].take())?;
        let meta = header["meta"].take();
        let mut net = MtlNetwork::zeros(config)?;
        let specs = net.tensor_specs();
        let n = get_u32(r, "checkpoint")? as usize;
        if n != specs.len() {
            return Err(Error::format("checkpoint", format!("expected {} tensors, found {n}", specs.len())));
        }
        for ((name, shape), dst) in specs.iter().zip(net.tensors_mut()) {
            let got_name = get_str(r, "checkpoint")?;
            let rank = get_u32(r, "checkpoint")? as usize;
            let mut got_shape = Vec::with_capacity(rank);
            for _ in 0..rank.min(8) {
                got_shape.push(get_u32(r, "checkpoint")? as usize);
            }
            if &got_name != name || &got_shape != shape {
                return Err(Error::format(
                    "checkpoint",
                    format!("tensor {got_name} {got_shape:?} does not match {name} {shape:?}"),
                ));
            }
            dst.copy_from_slice(&get_f32s(r, dst.len(), "checkpoint")?);
        }
        Ok((net, meta))
    }
}

fn tower_backward(tower: &Tower, h: &[f64], t: &TowerTrace, dz: f64, g: &mut [Vec<f64>], dh: &mut Vec<f64>) {
    let (g0, rest) = g.split_at_mut(2);
    let (g1, g2) = rest.split_at_mut(2);
    let mut d2 = Vec::new();
    let (gw, gb) = g2.split_at_mut(1);
    tower.layers[2].backward(&t.act[1], &[dz], &mut gw[0], &mut gb[0], Some(&mut d2));
    for (d, pre) in d2.iter_mut().zip(&t.pre[1]) {
        if *pre <= 0.0 {
            *d = 0.0;
        }
    }
    let mut d1 = Vec::new();
    let (gw, gb) = g1.split_at_mut(1);
    tower.layers[1].backward(&t.act[0], &d2, &mut gw[0], &mut gb[0], Some(&mut d1));
    for (d, pre) in d1.iter_mut().zip(&t.pre[0]) {
        if *pre <= 0.0 {
            *d = 0.0;
        }
    }
    let (gw, gb) = g0.split_at_mut(1);
    tower.layers[0].backward(h, &d1, &mut gw[0], &mut gb[0], Some(dh));
}

/// Instance order used for every accumulation: sorted by features, label
/// and weight, so sums do not depend on how a batch was shuffled.
pub fn canonical_order(batch: &[TrainingInstance]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..batch.len()).collect();
    idx.sort_by(|&a, &b| {
        let (x, y) = (&batch[a], &batch[b]);
        x.features
            .slots
            .cmp(&y.features.slots)
            .then_with(|| {
                let xd = x.features.dense.iter().map(|v| v.to_bits());
                let yd = y.features.dense.iter().map(|v| v.to_bits());
                xd.cmp(yd)
            })
            .then(x.y.cmp(&y.y))
            .then(x.w.total_cmp(&y.w))
    });
    idx
}
