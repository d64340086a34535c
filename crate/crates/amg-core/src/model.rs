//! The tiny conditional denoiser, the linear latent codec, and the trainer
//! that deliberately overfits duplicated records to induce memorization.
//!
//! The denoiser is a two-hidden-layer tanh MLP over
//! `latent ++ sinusoidal-timestep-features ++ condition-embedding`, with a
//! learned embedding row per caption class plus a reserved null row for
//! classifier-free guidance training. An MLP keeps the similarity-gradient
//! chain used at sampling time cheap and exactly checkable.

use crate::datasets::Record;
use crate::diffusion::{forward_sample, NoiseSchedule};
use crate::error::{Error, Result};
use crate::linalg::jacobi_eigh;
use crate::rng::RngStream;
use crate::tape::{Gradients, NodeId, Tape};
use crate::tensor::Tensor;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Layer and embedding sizes of the denoiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DenoiserDims {
    /// Latent dimension `D_z` (also the output dimension).
    pub latent: usize,
    /// Width of the two hidden layers.
    pub hidden: usize,
    /// Sinusoidal timestep feature count (even).
    pub time_features: usize,
    /// Condition embedding width.
    pub cond_embed: usize,
    /// Number of caption classes; the null condition uses the extra row.
    pub captions: usize,
}

impl DenoiserDims {
    pub fn validate(&self) -> Result<()> {
        if self.latent == 0
            || self.hidden == 0
            || self.time_features == 0
            || self.time_features % 2 != 0
            || self.cond_embed == 0
            || self.captions == 0
        {
            return Err(Error::InvalidArgument(format!(
                "invalid denoiser dims {self:?}"
            )));
        }
        Ok(())
    }

    /// Reserved condition-table row for the empty label.
    pub fn null_index(&self) -> usize {
        self.captions
    }

    fn input_width(&self) -> usize {
        self.latent + self.time_features
    }
}

/// Weights of the conditional noise-prediction network.
///
/// The first layer is split into a latent/timestep block and a condition
/// block; summing the two matmuls is equivalent to one matmul over the
/// concatenated input and keeps batched training free of column concats.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserParams {
    pub dims: DenoiserDims,
    pub w1x: Tensor,
    pub w1c: Tensor,
    pub b1: Tensor,
    pub w2: Tensor,
    pub b2: Tensor,
    pub w3: Tensor,
    pub b3: Tensor,
    pub cond_table: Tensor,
}

/// Tape handles for every parameter tensor, in the fixed optimizer order.
pub struct DenoiserNodes {
    pub w1x: NodeId,
    pub w1c: NodeId,
    pub b1: NodeId,
    pub w2: NodeId,
    pub b2: NodeId,
    pub w3: NodeId,
    pub b3: NodeId,
    pub cond_table: NodeId,
}

impl DenoiserNodes {
    fn ids(&self) -> [NodeId; 8] {
        [
            self.w1x,
            self.w1c,
            self.b1,
            self.w2,
            self.b2,
            self.w3,
            self.b3,
            self.cond_table,
        ]
    }
}

impl DenoiserParams {
    /// Seeded init: weights scaled by 1/sqrt(fan_in), biases zero, embedding
    /// rows standard normal.
    pub fn init(dims: DenoiserDims, rng: &mut RngStream) -> Result<DenoiserParams> {
        dims.validate()?;
        let dz = dims.latent;
        let h = dims.hidden;
        let e = dims.cond_embed;
        let inw = dims.input_width();
        let mut mk = |rows: usize, cols: usize, fan_in: usize| -> Result<Tensor> {
            let scale = 1.0 / libm::sqrt(fan_in as f64);
            let mut data = Vec::with_capacity(rows * cols);
            for _ in 0..rows * cols {
                data.push(rng.next_normal() * scale);
            }
            Tensor::matrix(rows, cols, data)
        };
        Ok(DenoiserParams {
            dims,
            w1x: mk(inw, h, inw + e)?,
            w1c: mk(e, h, inw + e)?,
            b1: Tensor::zeros(&[h]),
            w2: mk(h, h, h)?,
            b2: Tensor::zeros(&[h]),
            w3: mk(h, dz, h)?,
            b3: Tensor::zeros(&[dz]),
            cond_table: {
                let mut data = Vec::with_capacity((dims.captions + 1) * e);
                for _ in 0..(dims.captions + 1) * e {
                    data.push(rng.next_normal());
                }
                Tensor::matrix(dims.captions + 1, e, data)?
            },
        })
    }

    /// All-zero parameters (the network output is identically zero).
    pub fn zeros(dims: DenoiserDims) -> Result<DenoiserParams> {
        dims.validate()?;
        let dz = dims.latent;
        let h = dims.hidden;
        let e = dims.cond_embed;
        Ok(DenoiserParams {
            dims,
            w1x: Tensor::zeros(&[dims.input_width(), h]),
            w1c: Tensor::zeros(&[e, h]),
            b1: Tensor::zeros(&[h]),
            w2: Tensor::zeros(&[h, h]),
            b2: Tensor::zeros(&[h]),
            w3: Tensor::zeros(&[h, dz]),
            b3: Tensor::zeros(&[dz]),
            cond_table: Tensor::zeros(&[dims.captions + 1, e]),
        })
    }

    pub fn fields(&self) -> [&Tensor; 8] {
        [
            &self.w1x,
            &self.w1c,
            &self.b1,
            &self.w2,
            &self.b2,
            &self.w3,
            &self.b3,
            &self.cond_table,
        ]
    }

    fn fields_mut(&mut self) -> [&mut Tensor; 8] {
        [
            &mut self.w1x,
            &mut self.w1c,
            &mut self.b1,
            &mut self.w2,
            &mut self.b2,
            &mut self.w3,
            &mut self.b3,
            &mut self.cond_table,
        ]
    }

    /// Copies the parameters onto a tape as leaves.
    pub fn nodes(&self, tape: &mut Tape, trainable: bool) -> DenoiserNodes {
        let mut leaf = |t: &Tensor| {
            if trainable {
                tape.var(t.clone())
            } else {
                tape.constant(t.clone())
            }
        };
        DenoiserNodes {
            w1x: leaf(&self.w1x),
            w1c: leaf(&self.w1c),
            b1: leaf(&self.b1),
            w2: leaf(&self.w2),
            b2: leaf(&self.b2),
            w3: leaf(&self.w3),
            b3: leaf(&self.b3),
            cond_table: leaf(&self.cond_table),
        }
    }

    fn cond_index(&self, caption: Option<u32>) -> Result<usize> {
        match caption {
            None => Ok(self.dims.null_index()),
            Some(c) if (c as usize) < self.dims.captions => Ok(c as usize),
            Some(c) => Err(Error::UnknownCaption { id: c }),
        }
    }

    fn cond_row(&self, idx: usize) -> Tensor {
        let e = self.dims.cond_embed;
        Tensor::vector(self.cond_table.data()[idx * e..(idx + 1) * e].to_vec())
            .expect("row of finite table")
    }
}

/// Sinusoidal timestep features: interleaved sin/cos at geometrically spaced
/// frequencies.
pub fn time_features(t: usize, dim: usize) -> Vec<f64> {
    let half = dim / 2;
    let mut feats = Vec::with_capacity(dim);
    for i in 0..half {
        let freq = libm::pow(10_000.0, -(i as f64) / half as f64);
        let angle = t as f64 * freq;
        feats.push(libm::sin(angle));
        feats.push(libm::cos(angle));
    }
    feats
}

fn tanh_tensor(t: &Tensor) -> Tensor {
    Tensor::from_vec(
        t.shape().to_vec(),
        t.data().iter().map(|&x| libm::tanh(x)).collect(),
    )
    .expect("tanh stays finite")
}

/// Deterministic forward pass of the denoiser (no tape).
pub fn denoise(
    params: &DenoiserParams,
    z_t: &Tensor,
    t: usize,
    caption: Option<u32>,
) -> Result<Tensor> {
    if z_t.shape() != [params.dims.latent] {
        return Err(Error::ShapeMismatch {
            op: "denoise",
            left: z_t.shape().to_vec(),
            right: vec![params.dims.latent],
        });
    }
    let idx = params.cond_index(caption)?;
    let mut xdata = z_t.data().to_vec();
    xdata.extend(time_features(t, params.dims.time_features));
    let x = Tensor::vector(xdata)?;
    let cond = params.cond_row(idx);

    let pre1 = x
        .matmul(&params.w1x)?
        .add(&cond.matmul(&params.w1c)?)?
        .add(&params.b1)?;
    let h1 = tanh_tensor(&pre1);
    let h2 = tanh_tensor(&h1.matmul(&params.w2)?.add(&params.b2)?);
    h2.matmul(&params.w3)?.add(&params.b3)
}

/// Taped forward pass for a single latent vector node. The parameter leaves
/// decide whether gradients flow to the weights; the latent node decides
/// whether they flow to the input. Mirrors [`denoise`] operation-for-
/// operation, so values are bit-identical to the plain path.
pub fn denoise_on_tape(
    tape: &mut Tape,
    params: &DenoiserParams,
    nodes: &DenoiserNodes,
    z_t: NodeId,
    t: usize,
    caption: Option<u32>,
) -> Result<NodeId> {
    let idx = params.cond_index(caption)?;
    let tfeat = tape.constant(Tensor::vector(time_features(t, params.dims.time_features))?);
    let x = tape.concat(&[z_t, tfeat])?;
    let cond = tape.constant(params.cond_row(idx));

    let xw = tape.matmul(x, nodes.w1x)?;
    let cw = tape.matmul(cond, nodes.w1c)?;
    let pre1 = tape.add(xw, cw)?;
    let pre1 = tape.add(pre1, nodes.b1)?;
    let h1 = tape.tanh(pre1)?;
    let pre2 = tape.matmul(h1, nodes.w2)?;
    let pre2 = tape.add(pre2, nodes.b2)?;
    let h2 = tape.tanh(pre2)?;
    let out = tape.matmul(h2, nodes.w3)?;
    tape.add(out, nodes.b3)
}

/// Taped batched forward pass used by training; condition rows are gathered
/// from the table so gradients reach the embeddings.
fn denoise_batch_on_tape(
    tape: &mut Tape,
    nodes: &DenoiserNodes,
    x: NodeId,
    cond_idx: &[usize],
) -> Result<NodeId> {
    let xw = tape.matmul(x, nodes.w1x)?;
    let c = tape.gather_rows(nodes.cond_table, cond_idx)?;
    let cw = tape.matmul(c, nodes.w1c)?;
    let pre1 = tape.add(xw, cw)?;
    let pre1 = tape.add_row(pre1, nodes.b1)?;
    let h1 = tape.tanh(pre1)?;
    let pre2 = tape.matmul(h1, nodes.w2)?;
    let pre2 = tape.add_row(pre2, nodes.b2)?;
    let h2 = tape.tanh(pre2)?;
    let out = tape.matmul(h2, nodes.w3)?;
    tape.add_row(out, nodes.b3)
}

// ── training ────────────────────────────────────────────────────────────

/// Training hyper-parameters (Adam with standard moments).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub steps: usize,
    pub p_uncond: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            batch_size: 32,
            steps: 6000,
            p_uncond: 0.1,
            seed: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("steps must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArgument("batch_size must be >= 1".into()));
        }
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::InvalidArgument(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.p_uncond) {
            return Err(Error::InvalidArgument("p_uncond must be in [0, 1]".into()));
        }
        Ok(())
    }
}

/// A batch already corrupted by the forward process: network inputs, target
/// noise, and per-item condition rows.
pub struct CorruptedBatch {
    pub inputs: Tensor,
    pub targets: Tensor,
    pub cond_idx: Vec<usize>,
}

/// Draws `(t, eps, condition-drop)` per item and corrupts it.
///
/// Timesteps are uniform over `1..=T`; the caption is replaced by the null
/// condition with probability `p_uncond` so the model learns both the
/// conditional and unconditional objectives.
pub fn corrupt_batch(
    items: &[(Tensor, Option<u32>)],
    dims: &DenoiserDims,
    sched: &NoiseSchedule,
    rng: &mut RngStream,
    p_uncond: f64,
) -> Result<CorruptedBatch> {
    if items.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let dz = dims.latent;
    let width = dims.input_width();
    let t_max = sched.timesteps();
    let mut inputs = Vec::with_capacity(items.len() * width);
    let mut targets = Vec::with_capacity(items.len() * dz);
    let mut cond_idx = Vec::with_capacity(items.len());
    for (z0, caption) in items {
        if z0.shape() != [dz] {
            return Err(Error::ShapeMismatch {
                op: "corrupt_batch",
                left: z0.shape().to_vec(),
                right: vec![dz],
            });
        }
        let t = 1 + rng.next_index(t_max);
        let mut eps = vec![0.0; dz];
        rng.fill_normal(&mut eps);
        let eps = Tensor::vector(eps)?;
        let z_t = forward_sample(z0, t, &eps, sched)?;
        inputs.extend_from_slice(z_t.data());
        inputs.extend(time_features(t, dims.time_features));
        targets.extend_from_slice(eps.data());
        let dropped = rng.next_f64() < p_uncond;
        let idx = match caption {
            Some(c) if !dropped => {
                if (*c as usize) >= dims.captions {
                    return Err(Error::UnknownCaption { id: *c });
                }
                *c as usize
            }
            _ => dims.null_index(),
        };
        cond_idx.push(idx);
    }
    Ok(CorruptedBatch {
        inputs: Tensor::matrix(items.len(), width, inputs)?,
        targets: Tensor::matrix(items.len(), dz, targets)?,
        cond_idx,
    })
}

/// Loss and parameter gradients for one already-corrupted batch:
/// `mean over items of |eps - eps_hat|^2`.
pub fn training_step(
    params: &DenoiserParams,
    batch: &CorruptedBatch,
) -> Result<(f64, Gradients, [NodeId; 8])> {
    let b = batch.cond_idx.len();
    let mut tape = Tape::new();
    let nodes = params.nodes(&mut tape, true);
    let x = tape.constant(batch.inputs.clone());
    let target = tape.constant(batch.targets.clone());
    let eps_hat = denoise_batch_on_tape(&mut tape, &nodes, x, &batch.cond_idx)?;
    let diff = tape.sub(eps_hat, target)?;
    let sq = tape.mul(diff, diff)?;
    let total = tape.sum(sq)?;
    let loss = tape.scale(total, 1.0 / b as f64)?;
    let loss_val = tape.value(loss).item()?;
    let ids = nodes.ids();
    let grads = tape.backward(loss)?;
    Ok((loss_val, grads, ids))
}

/// The training objective on a caller-supplied batch of `(z0, caption)`: the
/// corruption draws happen inside, the returned value is the mean squared
/// noise-prediction error.
pub fn training_loss(
    params: &DenoiserParams,
    batch: &[(Tensor, Option<u32>)],
    sched: &NoiseSchedule,
    rng: &mut RngStream,
    p_uncond: f64,
) -> Result<f64> {
    let corrupted = corrupt_batch(batch, &params.dims, sched, rng, p_uncond)?;
    let (loss, _, _) = training_step(params, &corrupted)?;
    Ok(loss)
}

/// Same objective evaluated against an arbitrary predictor instead of the
/// MLP; lets tests feed an oracle.
pub fn training_loss_with(
    predictor: impl Fn(&Tensor, usize, Option<u32>) -> Result<Tensor>,
    batch: &[(Tensor, Option<u32>)],
    sched: &NoiseSchedule,
    rng: &mut RngStream,
    p_uncond: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let t_max = sched.timesteps();
    let mut total = 0.0;
    for (z0, caption) in batch {
        let t = 1 + rng.next_index(t_max);
        let mut eps = vec![0.0; z0.numel()];
        rng.fill_normal(&mut eps);
        let eps = Tensor::vector(eps)?;
        let z_t = forward_sample(z0, t, &eps, sched)?;
        let dropped = rng.next_f64() < p_uncond;
        let cap = if dropped { None } else { *caption };
        let pred = predictor(&z_t, t, cap)?;
        let diff = eps.sub(&pred)?;
        total += diff.dot(&diff)?;
    }
    Ok(total / batch.len() as f64)
}

struct AdamState {
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    step: usize,
}

impl AdamState {
    fn new(params: &DenoiserParams) -> AdamState {
        let m = params
            .fields()
            .iter()
            .map(|t| Tensor::zeros(t.shape()))
            .collect();
        let v = params
            .fields()
            .iter()
            .map(|t| Tensor::zeros(t.shape()))
            .collect();
        AdamState { m, v, step: 0 }
    }

    fn apply(
        &mut self,
        params: &mut DenoiserParams,
        grads: &mut Gradients,
        ids: &[NodeId; 8],
        lr: f64,
    ) -> Result<()> {
        const BETA1: f64 = 0.9;
        const BETA2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.step += 1;
        let bc1 = 1.0 - libm::pow(BETA1, self.step as f64);
        let bc2 = 1.0 - libm::pow(BETA2, self.step as f64);
        for (slot, (field, id)) in params.fields_mut().into_iter().zip(ids).enumerate() {
            let g = grads
                .take(*id)
                .ok_or(Error::InvalidArgument("missing parameter gradient".into()))?;
            let m = self.m[slot].data_mut();
            let v = self.v[slot].data_mut();
            let p = field.data_mut();
            for i in 0..p.len() {
                let gi = g.data()[i];
                m[i] = BETA1 * m[i] + (1.0 - BETA1) * gi;
                v[i] = BETA2 * v[i] + (1.0 - BETA2) * gi * gi;
                let mhat = m[i] / bc1;
                let vhat = v[i] / bc2;
                p[i] -= lr * mhat / (libm::sqrt(vhat) + EPS);
            }
        }
        Ok(())
    }
}

/// Optimizes the noise-prediction objective over the encoded corpus.
///
/// Returns the trained parameters and the per-step loss curve. A non-finite
/// loss or parameter aborts with [`Error::Diverged`] naming the step.
pub fn train(
    corpus: &[Record],
    codec: &Codec,
    sched: &NoiseSchedule,
    dims: DenoiserDims,
    config: &TrainConfig,
) -> Result<(DenoiserParams, Vec<f64>)> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("empty corpus".into()));
    }
    let encoded: Vec<(Tensor, Option<u32>)> = corpus
        .iter()
        .map(|r| Ok((codec.encode(&r.clip)?, Some(r.caption_id))))
        .collect::<Result<_>>()?;
    for (_, cap) in &encoded {
        if let Some(c) = cap {
            if (*c as usize) >= dims.captions {
                return Err(Error::UnknownCaption { id: *c });
            }
        }
    }

    let mut rng = RngStream::new(config.seed);
    let mut params = DenoiserParams::init(dims, &mut rng)?;
    let mut adam = AdamState::new(&params);
    let mut losses = Vec::with_capacity(config.steps);

    for step in 0..config.steps {
        let mut batch = Vec::with_capacity(config.batch_size);
        for _ in 0..config.batch_size {
            let pick = rng.next_index(encoded.len());
            batch.push(encoded[pick].clone());
        }
        let corrupted = corrupt_batch(&batch, &dims, sched, &mut rng, config.p_uncond)?;
        let (loss, mut grads, ids) = match training_step(&params, &corrupted) {
            Ok(out) => out,
            Err(Error::NonFinite { .. }) => return Err(Error::Diverged { step }),
            Err(e) => return Err(e),
        };
        adam.apply(&mut params, &mut grads, &ids, config.learning_rate)?;
        for field in params.fields() {
            if field.check_finite("train").is_err() {
                return Err(Error::Diverged { step });
            }
        }
        losses.push(loss);
    }
    Ok((params, losses))
}

// ── codec ───────────────────────────────────────────────────────────────

/// Linear encoder/decoder pair between clip space and latent space, or the
/// identity when the dimensions match.
#[derive(Debug, Clone, PartialEq)]
pub struct Codec {
    input_len: usize,
    latent_dim: usize,
    /// `[N, D_z]`, absent in identity mode.
    encoder: Option<Tensor>,
    /// `[D_z, N]`, absent in identity mode.
    decoder: Option<Tensor>,
}

impl Codec {
    pub fn identity(n: usize) -> Codec {
        Codec {
            input_len: n,
            latent_dim: n,
            encoder: None,
            decoder: None,
        }
    }

    pub fn from_parts(encoder: Tensor, decoder: Tensor) -> Result<Codec> {
        let (n, dz) = match (encoder.shape(), decoder.shape()) {
            ([n, dz], [dz2, n2]) if n == n2 && dz == dz2 => (*n, *dz),
            _ => {
                return Err(Error::ShapeMismatch {
                    op: "codec",
                    left: encoder.shape().to_vec(),
                    right: decoder.shape().to_vec(),
                })
            }
        };
        Ok(Codec {
            input_len: n,
            latent_dim: dz,
            encoder: Some(encoder),
            decoder: Some(decoder),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.encoder.is_none()
    }

    pub fn input_len(&self) -> usize {
        self.input_len
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn encoder(&self) -> Option<&Tensor> {
        self.encoder.as_ref()
    }

    pub fn decoder(&self) -> Option<&Tensor> {
        self.decoder.as_ref()
    }

    pub fn encode(&self, x: &Tensor) -> Result<Tensor> {
        if x.shape() != [self.input_len] {
            return Err(Error::WrongClipLength {
                expected: self.input_len,
                got: x.numel(),
            });
        }
        match &self.encoder {
            None => Ok(x.clone()),
            Some(enc) => x.matmul(enc),
        }
    }

    pub fn decode(&self, z: &Tensor) -> Result<Tensor> {
        if z.shape() != [self.latent_dim] {
            return Err(Error::ShapeMismatch {
                op: "decode",
                left: z.shape().to_vec(),
                right: vec![self.latent_dim],
            });
        }
        match &self.decoder {
            None => Ok(z.clone()),
            Some(dec) => z.matmul(dec),
        }
    }

    /// Taped decode; identity mode passes the node through.
    pub fn decode_on_tape(&self, tape: &mut Tape, z: NodeId) -> Result<NodeId> {
        match &self.decoder {
            None => Ok(z),
            Some(dec) => {
                let d = tape.constant(dec.clone());
                tape.matmul(z, d)
            }
        }
    }
}

/// Fits the codec on training clips: identity when `d_z == n`, otherwise a
/// truncated PCA (top `d_z` eigenvectors of the uncentered Gram matrix).
pub fn fit_codec(clips: &[Tensor], d_z: usize) -> Result<Codec> {
    let n = match clips {
        [] => return Err(Error::InvalidArgument("fit_codec: empty corpus".into())),
        [first, ..] => first.numel(),
    };
    for c in clips {
        if c.shape() != [n] {
            return Err(Error::WrongClipLength {
                expected: n,
                got: c.numel(),
            });
        }
    }
    if d_z == 0 || d_z > n {
        return Err(Error::InvalidArgument(format!(
            "latent dim {d_z} must be in 1..={n}"
        )));
    }
    if d_z == n {
        return Ok(Codec::identity(n));
    }
    // Uncentered scatter matrix X^T X, built symmetric exactly.
    let mut gram = vec![0.0; n * n];
    for clip in clips {
        let d = clip.data();
        for i in 0..n {
            let di = d[i];
            if di == 0.0 {
                continue;
            }
            for j in i..n {
                gram[i * n + j] += di * d[j];
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            gram[i * n + j] = gram[j * n + i];
        }
    }
    let (_, vecs) = jacobi_eigh(&Tensor::matrix(n, n, gram)?)?;
    let vd = vecs.data();
    let mut enc = Vec::with_capacity(n * d_z);
    for i in 0..n {
        for j in 0..d_z {
            enc.push(vd[i * n + j]);
        }
    }
    let mut dec = Vec::with_capacity(d_z * n);
    for j in 0..d_z {
        for i in 0..n {
            dec.push(vd[i * n + j]);
        }
    }
    Codec::from_parts(Tensor::matrix(n, d_z, enc)?, Tensor::matrix(d_z, n, dec)?)
}
