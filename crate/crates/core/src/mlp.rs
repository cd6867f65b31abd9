//! Fully connected ReLU autoencoder with separate (untied) encoder and
//! decoder stacks, trained on RMMD² + MSRE with hand-written backprop.

use std::sync::Arc;

use crate::error::{invalid, mismatch, Error, Result};
use crate::estimators::ReconstructionKernel;
use crate::kernels::{Decoder, DecoderHandle, Kernel};
use crate::linear::TrainConfig;
use crate::matrix::{sq_dist, Matrix};
use crate::optim::Adam;
use crate::rng::RngStream;
use crate::textio::{fmt_row, Lines};

/// Affine map `x ↦ xW + b` with `W` of shape `in×out`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub biases: Vec<f64>,
}

impl Layer {
    pub fn new(weights: Matrix, biases: Vec<f64>) -> Result<Self> {
        if biases.len() != weights.ncols() {
            return Err(mismatch(format!(
                "{} biases for a layer with {} outputs",
                biases.len(),
                weights.ncols()
            )));
        }
        Ok(Self { weights, biases })
    }

    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weights: Matrix::zeros(input, output),
            biases: vec![0.0; output],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.ncols()
    }

    fn forward(&self, x: &Matrix) -> Matrix {
        let mut out = x.matmul(&self.weights).expect("layer widths checked");
        for i in 0..out.nrows() {
            for (o, b) in out.row_mut(i).iter_mut().zip(&self.biases) {
                *o += b;
            }
        }
        out
    }

    fn param_count(&self) -> usize {
        self.weights.as_slice().len() + self.biases.len()
    }
}

/// Encoder and decoder stacks. Hidden layers use ReLU; the last layer of each
/// stack is linear.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    encoder: Vec<Layer>,
    decoder: Vec<Layer>,
}

/// Gradients with the same layout as the owning [`Mlp`].
#[derive(Clone, Debug, PartialEq)]
pub struct MlpGrads {
    pub encoder: Vec<Layer>,
    pub decoder: Vec<Layer>,
}

impl MlpGrads {
    pub fn flatten(&self) -> Vec<f64> {
        flatten(&self.encoder, &self.decoder)
    }
}

fn check_stack(layers: &[Layer], input: usize, name: &str) -> Result<usize> {
    if layers.is_empty() {
        return Err(invalid(format!("{name} has no layers")));
    }
    let mut width = input;
    for (i, l) in layers.iter().enumerate() {
        if l.input_dim() != width {
            return Err(mismatch(format!(
                "{name} layer {i} expects width {}, previous layer gives {width}",
                l.input_dim()
            )));
        }
        if l.output_dim() == 0 {
            return Err(invalid(format!("{name} layer {i} has zero width")));
        }
        if !l.weights.is_finite() || l.biases.iter().any(|b| !b.is_finite()) {
            return Err(invalid(format!("{name} layer {i} has non-finite parameters")));
        }
        width = l.output_dim();
    }
    Ok(width)
}

fn flatten(encoder: &[Layer], decoder: &[Layer]) -> Vec<f64> {
    let mut out = Vec::new();
    for l in encoder.iter().chain(decoder) {
        out.extend_from_slice(l.weights.as_slice());
        out.extend_from_slice(&l.biases);
    }
    out
}

fn relu_in_place(m: &mut Matrix) {
    m.as_mut_slice().iter_mut().for_each(|v| {
        if *v < 0.0 {
            *v = 0.0
        }
    });
}

/// Forward pass through a stack keeping every layer input and pre-activation.
struct Trace {
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    output: Matrix,
}

fn forward_stack(layers: &[Layer], x: &Matrix) -> Trace {
    let mut inputs = Vec::with_capacity(layers.len());
    let mut pre = Vec::with_capacity(layers.len());
    let mut a = x.clone();
    for (i, l) in layers.iter().enumerate() {
        let z = l.forward(&a);
        inputs.push(a);
        let mut next = z.clone();
        if i + 1 < layers.len() {
            relu_in_place(&mut next);
        }
        pre.push(z);
        a = next;
    }
    Trace {
        inputs,
        pre,
        output: a,
    }
}

/// Backpropagates `delta = ∂L/∂output` through a stack, returning parameter
/// gradients and `∂L/∂input`.
fn backward_stack(layers: &[Layer], trace: &Trace, mut delta: Matrix) -> (Vec<Layer>, Matrix) {
    let mut grads: Vec<Layer> = Vec::with_capacity(layers.len());
    for i in (0..layers.len()).rev() {
        if i + 1 < layers.len() {
            // ReLU derivative, zero at the kink
            for (d, z) in delta.as_mut_slice().iter_mut().zip(trace.pre[i].as_slice()) {
                if *z <= 0.0 {
                    *d = 0.0;
                }
            }
        }
        let dw = trace.inputs[i].tr_matmul(&delta).expect("shapes follow forward pass");
        let mut db = vec![0.0; delta.ncols()];
        for r in delta.rows() {
            for (b, v) in db.iter_mut().zip(r) {
                *b += v;
            }
        }
        let next = delta.matmul_tr(&layers[i].weights).expect("shapes follow forward pass");
        grads.push(Layer {
            weights: dw,
            biases: db,
        });
        delta = next;
    }
    grads.reverse();
    (grads, delta)
}

impl Mlp {
    pub fn new(encoder: Vec<Layer>, decoder: Vec<Layer>) -> Result<Self> {
        let d = encoder
            .first()
            .map(|l| l.input_dim())
            .ok_or_else(|| invalid("encoder has no layers"))?;
        let p = check_stack(&encoder, d, "encoder")?;
        let out = check_stack(&decoder, p, "decoder")?;
        if out != d {
            return Err(mismatch(format!(
                "decoder outputs width {out} but the encoder consumes width {d}"
            )));
        }
        Ok(Self { encoder, decoder })
    }

    /// He initialisation: weights `N(0, 2/fan_in)`, zero biases. The decoder
    /// mirrors the encoder's hidden widths.
    pub fn he_init(d: usize, hidden: &[usize], p: usize, rng: &mut RngStream) -> Result<Self> {
        if d == 0 || p == 0 || hidden.contains(&0) {
            return Err(invalid("layer widths must be positive"));
        }
        let mut enc_widths = vec![d];
        enc_widths.extend_from_slice(hidden);
        enc_widths.push(p);
        let dec_widths: Vec<usize> = enc_widths.iter().rev().copied().collect();
        let mut build = |widths: &[usize]| -> Vec<Layer> {
            widths
                .windows(2)
                .map(|w| {
                    let sd = (2.0 / w[0] as f64).sqrt();
                    Layer {
                        weights: Matrix::from_fn(w[0], w[1], |_, _| sd * rng.normal()),
                        biases: vec![0.0; w[1]],
                    }
                })
                .collect()
        };
        let encoder = build(&enc_widths);
        let decoder = build(&dec_widths);
        Self::new(encoder, decoder)
    }

    pub fn encoder(&self) -> &[Layer] {
        &self.encoder
    }

    pub fn decoder(&self) -> &[Layer] {
        &self.decoder
    }

    pub fn ambient_dim(&self) -> usize {
        self.encoder[0].input_dim()
    }

    pub fn latent_dim(&self) -> usize {
        self.decoder[0].input_dim()
    }

    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.ambient_dim() {
            return Err(mismatch(format!(
                "encoder expects {} columns, got {}",
                self.ambient_dim(),
                x.ncols()
            )));
        }
        Ok(forward_stack(&self.encoder, x).output)
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        if z.ncols() != self.latent_dim() {
            return Err(mismatch(format!(
                "decoder expects {} columns, got {}",
                self.latent_dim(),
                z.ncols()
            )));
        }
        Ok(forward_stack(&self.decoder, z).output)
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decode(&self.encode(x)?)
    }

    pub fn param_count(&self) -> usize {
        self.encoder.iter().chain(&self.decoder).map(Layer::param_count).sum()
    }

    /// Parameters in layer order, weights (row-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        flatten(&self.encoder, &self.decoder)
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(mismatch(format!(
                "{} parameters for a network with {}",
                params.len(),
                self.param_count()
            )));
        }
        let mut off = 0;
        for l in self.encoder.iter_mut().chain(self.decoder.iter_mut()) {
            let nw = l.weights.as_slice().len();
            l.weights.as_mut_slice().copy_from_slice(&params[off..off + nw]);
            off += nw;
            let nb = l.biases.len();
            l.biases.copy_from_slice(&params[off..off + nb]);
            off += nb;
        }
        Ok(())
    }

    pub fn decoder_handle(&self) -> DecoderHandle {
        DecoderHandle::from_arc(Arc::new(self.clone()))
    }

    /// Header `mlp <encoder layers> <decoder layers>`, then per layer
    /// `layer <in> <out>`, the weight rows and a bias line.
    pub fn to_text(&self) -> String {
        let mut s = format!("mlp {} {}\n", self.encoder.len(), self.decoder.len());
        for l in self.encoder.iter().chain(&self.decoder) {
            s.push_str(&format!("layer {} {}\n", l.input_dim(), l.output_dim()));
            for r in l.weights.rows() {
                s.push_str(&fmt_row(r));
                s.push('\n');
            }
            s.push_str(&fmt_row(&l.biases));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        Self::parse(&mut lines).and_then(|m| lines.finish().map(|_| m))
    }

    pub(crate) fn parse(lines: &mut Lines) -> Result<Self> {
        let (_, counts) = lines.header("mlp", 2)?;
        let mut read_layers = |count: usize| -> Result<Vec<Layer>> {
            (0..count)
                .map(|_| {
                    let (_, dims) = lines.header("layer", 2)?;
                    let (input, output) = (dims[0], dims[1]);
                    let rows = (0..input)
                        .map(|i| lines.reals(output, &format!("weight row {i}")))
                        .collect::<Result<Vec<_>>>()?;
                    let biases = lines.reals(output, "bias line")?;
                    let weights = if input == 0 {
                        Matrix::zeros(0, output)
                    } else {
                        Matrix::from_rows(&rows)?
                    };
                    Layer::new(weights, biases)
                })
                .collect()
        };
        let encoder = read_layers(counts[0])?;
        let decoder = read_layers(counts[1])?;
        Self::new(encoder, decoder)
    }
}

impl Decoder for Mlp {
    fn latent_dim(&self) -> usize {
        Mlp::latent_dim(self)
    }

    fn ambient_dim(&self) -> usize {
        Mlp::ambient_dim(self)
    }

    fn decode_point(&self, z: &[f64]) -> Vec<f64> {
        let zm = Matrix::new(1, z.len(), z.to_vec()).expect("single row");
        forward_stack(&self.decoder, &zm).output.into_vec()
    }
}

pub fn mlp_encode(m: &Mlp, x: &Matrix) -> Result<Matrix> {
    m.encode(x)
}

pub fn mlp_decode(m: &Mlp, z: &Matrix) -> Result<Matrix> {
    m.decode(z)
}

/// Hybrid loss `RMMD² + MSRE` on a batch and its exact gradient with respect
/// to every weight and bias.
pub fn hybrid_backward(m: &Mlp, x: &Matrix, kernel: &Kernel) -> Result<(f64, MlpGrads)> {
    hybrid_backward_with(m, ReconstructionKernel::Marginal(kernel), x, None)
}

pub fn hybrid_backward_with(
    m: &Mlp,
    objective: ReconstructionKernel,
    x: &Matrix,
    responses: Option<&Matrix>,
) -> Result<(f64, MlpGrads)> {
    objective.require_differentiable()?;
    if x.ncols() != m.ambient_dim() {
        return Err(mismatch(format!(
            "network expects {} columns, got {}",
            m.ambient_dim(),
            x.ncols()
        )));
    }
    if x.is_empty() {
        return Err(Error::EmptyInput("empty batch".into()));
    }
    let enc = forward_stack(&m.encoder, x);
    let dec = forward_stack(&m.decoder, &enc.output);
    let recon = &dec.output;
    let (rmmd, mut delta) = objective.value_and_grad(x, responses, recon)?;

    let scale = 1.0 / (x.nrows() * x.ncols()) as f64;
    let sq: f64 = x.rows().zip(recon.rows()).map(|(a, b)| sq_dist(a, b)).sum();
    let loss = rmmd + sq * scale;
    for ((d, r), xi) in delta
        .as_mut_slice()
        .iter_mut()
        .zip(recon.as_slice())
        .zip(x.as_slice())
    {
        *d += 2.0 * scale * (r - xi);
    }

    let (dec_grads, delta_latent) = backward_stack(&m.decoder, &dec, delta);
    let (enc_grads, _) = backward_stack(&m.encoder, &enc, delta_latent);
    Ok((
        loss,
        MlpGrads {
            encoder: enc_grads,
            decoder: dec_grads,
        },
    ))
}

#[derive(Clone, Debug)]
pub struct MlpTraining {
    pub model: Mlp,
    pub initial: Mlp,
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
}

/// Shuffled minibatch Adam on the hybrid loss from a He initialisation.
pub fn train_nonlinear(
    x: &Matrix,
    hidden: &[usize],
    p: usize,
    kernel: &Kernel,
    cfg: &TrainConfig,
) -> Result<MlpTraining> {
    train_nonlinear_with(ReconstructionKernel::Marginal(kernel), x, None, hidden, p, cfg)
}

/// Joint variant: the reconstruction discrepancy pairs reconstructions with
/// their original responses.
pub fn train_nonlinear_joint(
    x: &Matrix,
    responses: &Matrix,
    hidden: &[usize],
    p: usize,
    feature_kernel: &Kernel,
    response_kernel: &Kernel,
    cfg: &TrainConfig,
) -> Result<MlpTraining> {
    if responses.nrows() != x.nrows() {
        return Err(mismatch("responses not row-aligned with features"));
    }
    train_nonlinear_with(
        ReconstructionKernel::Joint {
            feature: feature_kernel,
            response: response_kernel,
        },
        x,
        Some(responses),
        hidden,
        p,
        cfg,
    )
}

fn train_nonlinear_with(
    objective: ReconstructionKernel,
    x: &Matrix,
    responses: Option<&Matrix>,
    hidden: &[usize],
    p: usize,
    cfg: &TrainConfig,
) -> Result<MlpTraining> {
    cfg.validate()?;
    objective.require_differentiable()?;
    let (n, d) = x.shape();
    if n == 0 {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    let mut rng = RngStream::new(cfg.seed);
    let mut model = Mlp::he_init(d, hidden, p, &mut rng.substream(1))?;
    let initial = model.clone();
    let mut params = model.params();
    let mut adam = Adam::new(params.len(), cfg.learning_rate, cfg.adam);
    let batch = cfg.batch_size.min(n);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut steps = 0;
    for epoch in 0..cfg.epochs {
        let perm = rng.permutation(n);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in perm.chunks(batch) {
            let xb = x.select_rows(chunk);
            let yb = responses.map(|y| y.select_rows(chunk));
            let (loss, grads) = hybrid_backward_with(&model, objective, &xb, yb.as_ref())?;
            let g = grads.flatten();
            if !loss.is_finite() || g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence {
                    step: steps,
                    detail: format!("non-finite hybrid loss in epoch {epoch}"),
                });
            }
            adam.apply(&mut params, &g);
            model.set_params(&params)?;
            total += loss;
            batches += 1;
            steps += 1;
        }
        epoch_losses.push(total / batches as f64);
    }
    Ok(MlpTraining {
        model,
        initial,
        epoch_losses,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{hybrid_loss, msre, rmmd_sq};

    fn random(rng: &mut RngStream, n: usize, d: usize) -> Matrix {
        Matrix::from_fn(n, d, |_, _| rng.normal())
    }

    fn identity_net(d: usize) -> Mlp {
        let l = Layer::new(Matrix::identity(d), vec![0.0; d]).unwrap();
        Mlp::new(vec![l.clone()], vec![l]).unwrap()
    }

    #[test]
    fn zero_network_maps_to_zero() {
        let m = Mlp::new(
            vec![Layer::zeros(3, 4), Layer::zeros(4, 2)],
            vec![Layer::zeros(2, 4), Layer::zeros(4, 3)],
        )
        .unwrap();
        let mut rng = RngStream::new(1);
        let x = random(&mut rng, 5, 3);
        assert_eq!(m.encode(&x).unwrap(), Matrix::zeros(5, 2));
        assert_eq!(m.decode(&random(&mut rng, 5, 2)).unwrap(), Matrix::zeros(5, 3));
    }

    #[test]
    fn single_layer_is_affine() {
        let mut rng = RngStream::new(2);
        let w = random(&mut rng, 3, 2);
        let m = Mlp::new(
            vec![Layer::new(w.clone(), vec![0.0; 2]).unwrap()],
            vec![Layer::zeros(2, 3)],
        )
        .unwrap();
        let x = random(&mut rng, 4, 3);
        assert_eq!(m.encode(&x).unwrap(), x.matmul(&w).unwrap());
        let id = identity_net(3);
        assert_eq!(id.decode(&x).unwrap(), x);
        assert_eq!(id.reconstruct(&x).unwrap().ncols(), 3);
    }

    #[test]
    fn relu_kills_negative_preactivations() {
        let hidden = Layer::new(Matrix::from_rows(&[[-1.0, -2.0]]).unwrap(), vec![-0.5, -0.5]).unwrap();
        let out = Layer::new(Matrix::from_rows(&[[3.0], [4.0]]).unwrap(), vec![0.0]).unwrap();
        let m = Mlp::new(vec![hidden, out], vec![Layer::zeros(1, 1)]).unwrap();
        let x = Matrix::column(&[0.5, 1.0, 2.0]);
        assert_eq!(m.encode(&x).unwrap(), Matrix::column(&[0.0, 0.0, 0.0]));
    }

    #[test]
    fn width_validation() {
        assert!(Mlp::new(vec![Layer::zeros(3, 2)], vec![Layer::zeros(3, 3)]).is_err());
        assert!(Mlp::new(vec![Layer::zeros(3, 2)], vec![Layer::zeros(2, 4)]).is_err());
        let m = identity_net(2);
        assert!(m.encode(&Matrix::zeros(1, 3)).is_err());
        assert!(Mlp::he_init(3, &[0], 2, &mut RngStream::new(0)).is_err());
    }

    #[test]
    fn perfect_reconstruction_has_zero_loss_and_gradient() {
        let mut rng = RngStream::new(3);
        let x = random(&mut rng, 6, 3);
        let k = Kernel::gaussian(1.0).unwrap();
        let (loss, g) = hybrid_backward(&identity_net(3), &x, &k).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.flatten().iter().all(|v| v.abs() < 1e-15));
    }

    fn numeric_grad(m: &Mlp, x: &Matrix, k: &Kernel, h: f64) -> Vec<f64> {
        let base = m.params();
        (0..base.len())
            .map(|i| {
                let mut plus = m.clone();
                let mut minus = m.clone();
                let mut pp = base.clone();
                pp[i] += h;
                plus.set_params(&pp).unwrap();
                pp[i] -= 2.0 * h;
                minus.set_params(&pp).unwrap();
                let fp = hybrid_loss(k, x, &plus.reconstruct(x).unwrap()).unwrap();
                let fm = hybrid_loss(k, x, &minus.reconstruct(x).unwrap()).unwrap();
                (fp - fm) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = RngStream::new(4);
        let k = Kernel::gaussian(1.0).unwrap();
        let mut m = Mlp::he_init(2, &[3], 1, &mut rng).unwrap();
        // non-zero biases so every parameter is exercised
        let mut p = m.params();
        p.iter_mut().for_each(|v| *v += 0.1 * rng.normal());
        m.set_params(&p).unwrap();
        let x = random(&mut rng, 4, 2);
        let (loss, g) = hybrid_backward(&m, &x, &k).unwrap();
        let recon = m.reconstruct(&x).unwrap();
        assert!((loss - (rmmd_sq(&k, &x, &recon).unwrap() + msre(&x, &recon).unwrap())).abs() < 1e-12);
        let analytic = g.flatten();
        let numeric = numeric_grad(&m, &x, &k, 1e-6);
        let num: f64 = analytic.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let den: f64 = numeric.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!(num / den < 1e-4, "relative error {}", num / den);
    }

    #[test]
    fn duplicated_batch_has_same_loss() {
        let mut rng = RngStream::new(5);
        let k = Kernel::imq(1.0).unwrap();
        let m = Mlp::he_init(3, &[4], 2, &mut rng).unwrap();
        let x = random(&mut rng, 5, 3);
        let xx = x.vstack(&x).unwrap();
        let (a, _) = hybrid_backward(&m, &x, &k).unwrap();
        let (b, _) = hybrid_backward(&m, &xx, &k).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn row_permutation_leaves_loss_and_gradients() {
        let mut rng = RngStream::new(6);
        let k = Kernel::gaussian(1.3).unwrap();
        let m = Mlp::he_init(3, &[5], 2, &mut rng).unwrap();
        let x = random(&mut rng, 7, 3);
        let perm = rng.permutation(7);
        let (a, ga) = hybrid_backward(&m, &x, &k).unwrap();
        let (b, gb) = hybrid_backward(&m, &x.select_rows(&perm), &k).unwrap();
        assert!((a - b).abs() < 1e-10);
        let diff = ga.flatten().iter().zip(gb.flatten()).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-10);
    }

    #[test]
    fn training_reduces_loss_and_is_deterministic() {
        let mut rng = RngStream::new(7);
        let basis = crate::linear::orthonormalize(&random(&mut rng, 4, 2)).unwrap();
        let x = basis.decode(&random(&mut rng, 256, 2)).unwrap();
        let k = Kernel::gaussian(1.5).unwrap();
        let cfg = TrainConfig {
            epochs: 40,
            batch_size: 64,
            learning_rate: 1e-2,
            seed: 1,
            ..TrainConfig::default()
        };
        let a = train_nonlinear(&x, &[8], 2, &k, &cfg).unwrap();
        let b = train_nonlinear(&x, &[8], 2, &k, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        let first = hybrid_loss(&k, &x, &a.initial.reconstruct(&x).unwrap()).unwrap();
        let last = hybrid_loss(&k, &x, &a.model.reconstruct(&x).unwrap()).unwrap();
        assert!(last < 0.1 * first, "{first} -> {last}");

        let none = train_nonlinear(&x, &[8], 2, &k, &TrainConfig { epochs: 0, ..cfg }).unwrap();
        assert_eq!(none.model, none.initial);
    }

    #[test]
    fn text_round_trip() {
        let mut rng = RngStream::new(8);
        let m = Mlp::he_init(4, &[3, 5], 2, &mut rng).unwrap();
        assert_eq!(Mlp::from_text(&m.to_text()).unwrap(), m);
        assert!(Mlp::from_text("mlp 1 1\nlayer 2 1\n1.0\n").is_err());
    }

    #[test]
    fn decoder_handle_matches_decode() {
        let mut rng = RngStream::new(9);
        let m = Mlp::he_init(4, &[3], 2, &mut rng).unwrap();
        let z = random(&mut rng, 3, 2);
        let a = m.decode(&z).unwrap();
        let b = m.decoder_handle().decoder().decode_rows(&z);
        assert_eq!(a, b);
    }
}
