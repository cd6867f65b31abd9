//! Idempotent rank-`p` linear autoencoder `x ↦ xVVᵀ` with `V` on the Stiefel
//! manifold, trained on the reconstruction discrepancy by projected Adam and
//! QR retraction.

use std::sync::Arc;

use log::warn;
use nalgebra::SymmetricEigen;

use crate::error::{invalid, mismatch, Error, Result};
use crate::estimators::ReconstructionKernel;
use crate::kernels::{Decoder, DecoderHandle, Kernel};
use crate::matrix::{dot, Matrix};
use crate::optim::{Adam, AdamConfig};
use crate::rng::RngStream;
use crate::textio::{fmt_row, Lines};

/// Orthonormality tolerance `‖VᵀV − I‖_F` for a valid point.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// A `d×p` matrix with orthonormal columns.
#[derive(Clone, Debug, PartialEq)]
pub struct StiefelPoint {
    v: Matrix,
}

impl StiefelPoint {
    pub fn new(v: Matrix) -> Result<Self> {
        if v.ncols() == 0 || v.ncols() > v.nrows() {
            return Err(invalid(format!(
                "a Stiefel point needs 1 <= p <= d, got {}x{}",
                v.nrows(),
                v.ncols()
            )));
        }
        let err = orthonormality_error(&v);
        if !(err < ORTHONORMALITY_TOL) {
            return Err(invalid(format!(
                "columns are not orthonormal (‖VᵀV − I‖ = {err:e})"
            )));
        }
        Ok(Self { v })
    }

    /// The first `p` columns of the `d×d` identity.
    pub fn coordinate(d: usize, p: usize) -> Result<Self> {
        Self::new(Matrix::from_fn(d, p, |i, j| if i == j { 1.0 } else { 0.0 }))
    }

    pub fn identity(d: usize) -> Self {
        Self {
            v: Matrix::identity(d),
        }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.v
    }

    pub fn ambient_dim(&self) -> usize {
        self.v.nrows()
    }

    pub fn latent_dim(&self) -> usize {
        self.v.ncols()
    }

    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.v)
    }

    /// `XV`.
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        if x.ncols() != self.ambient_dim() {
            return Err(mismatch(format!(
                "encoder expects {} columns, got {}",
                self.ambient_dim(),
                x.ncols()
            )));
        }
        x.matmul(&self.v)
    }

    /// `ZVᵀ`.
    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        if z.ncols() != self.latent_dim() {
            return Err(mismatch(format!(
                "decoder expects {} columns, got {}",
                self.latent_dim(),
                z.ncols()
            )));
        }
        z.matmul_tr(&self.v)
    }

    /// `XVVᵀ`.
    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decode(&self.encode(x)?)
    }

    /// `VVᵀ`.
    pub fn projector(&self) -> Matrix {
        self.v.matmul_tr(&self.v).expect("square by construction")
    }

    pub fn decoder_handle(&self) -> DecoderHandle {
        DecoderHandle::from_arc(Arc::new(self.clone()))
    }

    /// Header `linear <d> <p>` followed by `d` rows of `p` reals.
    pub fn to_text(&self) -> String {
        let mut s = format!("linear {} {}\n", self.ambient_dim(), self.latent_dim());
        for r in self.v.rows() {
            s.push_str(&fmt_row(r));
            s.push('\n');
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        Self::parse(&mut lines).and_then(|v| lines.finish().map(|_| v))
    }

    pub(crate) fn parse(lines: &mut Lines) -> Result<Self> {
        let (_, dims) = lines.header("linear", 2)?;
        let (d, p) = (dims[0], dims[1]);
        let rows = (0..d)
            .map(|i| lines.reals(p, &format!("encoder row {i}")))
            .collect::<Result<Vec<_>>>()?;
        let v = Matrix::from_rows(&rows)?;
        Self::new(if d == 0 { Matrix::zeros(0, p) } else { v })
    }
}

impl Decoder for StiefelPoint {
    fn latent_dim(&self) -> usize {
        self.v.ncols()
    }

    fn ambient_dim(&self) -> usize {
        self.v.nrows()
    }

    fn decode_point(&self, z: &[f64]) -> Vec<f64> {
        self.v.rows().map(|r| dot(z, r)).collect()
    }
}

fn orthonormality_error(v: &Matrix) -> f64 {
    let g = v.tr_matmul(v).expect("same rows");
    g.sub(&Matrix::identity(v.ncols()))
        .expect("square")
        .frobenius_norm()
}

pub fn encode(v: &StiefelPoint, x: &Matrix) -> Result<Matrix> {
    v.encode(x)
}

pub fn decode(v: &StiefelPoint, z: &Matrix) -> Result<Matrix> {
    v.decode(z)
}

/// Projection onto the tangent space at `V`: `G − V·sym(VᵀG)`.
pub fn tangent_project(v: &StiefelPoint, g: &Matrix) -> Result<Matrix> {
    if g.shape() != v.matrix().shape() {
        return Err(mismatch(format!(
            "gradient shape {:?} differs from point shape {:?}",
            g.shape(),
            v.matrix().shape()
        )));
    }
    let vtg = v.matrix().tr_matmul(g)?;
    let sym = vtg.add(&vtg.transpose())?.scale(0.5);
    g.sub(&v.matrix().matmul(&sym)?)
}

/// `‖WᵀV + VᵀW‖_F`, zero for tangent vectors.
pub fn tangent_residual(v: &StiefelPoint, w: &Matrix) -> Result<f64> {
    let vtw = v.matrix().tr_matmul(w)?;
    Ok(vtw.add(&vtw.transpose())?.frobenius_norm())
}

/// Thin QR orthonormalisation with a positive `R` diagonal.
pub fn orthonormalize(m: &Matrix) -> Result<StiefelPoint> {
    let (d, p) = m.shape();
    if p == 0 || p > d {
        return Err(invalid(format!("cannot orthonormalise a {d}x{p} matrix")));
    }
    if !m.is_finite() {
        return Err(invalid("cannot orthonormalise non-finite entries"));
    }
    let qr = m.to_nalgebra().qr();
    let r = qr.r();
    let mut q = qr.q();
    let scale = m.frobenius_norm();
    for j in 0..p {
        let rjj = r[(j, j)];
        if !(rjj.abs() > 1e-12 * scale) {
            return Err(Error::RankDeficient(format!(
                "column {j} is linearly dependent (|R_jj| = {:e})",
                rjj.abs()
            )));
        }
        if rjj < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(StiefelPoint {
        v: Matrix::from_nalgebra(&q),
    })
}

/// QR retraction: the `Q` factor of `V + step`.
pub fn qr_retract(v: &StiefelPoint, step: &Matrix) -> Result<StiefelPoint> {
    orthonormalize(&v.matrix().add(step)?)
}

/// Top-`p` principal directions of the column-centred sample covariance,
/// each signed so its largest-magnitude entry is positive.
pub fn pca_init(x: &Matrix, p: usize) -> Result<StiefelPoint> {
    let (n, d) = x.shape();
    if n < 2 {
        return Err(invalid(format!("PCA needs at least 2 rows, got {n}")));
    }
    if p == 0 || p > d {
        return Err(invalid(format!("latent dimension {p} must lie in 1..={d}")));
    }
    let mean = x.column_means()?;
    let centred = Matrix::from_fn(n, d, |i, j| x[(i, j)] - mean[j]);
    let cov = centred.tr_matmul(&centred)?.scale(1.0 / (n as f64 - 1.0));
    let eig = SymmetricEigen::new(cov.to_nalgebra());

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..d)
        .map(|k| {
            let mut col: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            let lead = col
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |(bi, bv), (i, &v)| if v.abs() > bv { (i, v.abs()) } else { (bi, bv) })
                .0;
            if col[lead] < 0.0 {
                col.iter_mut().for_each(|v| *v = -*v);
            }
            (eig.eigenvalues[k], col)
        })
        .collect();
    pairs.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            a.1.iter()
                .zip(&b.1)
                .map(|(u, v)| u.total_cmp(v))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    let positive = pairs.iter().take(p).filter(|(l, _)| *l > 1e-12).count();
    if positive < p {
        warn!("covariance has only {positive} positive eigenvalues among the top {p}; basis completed arbitrarily");
    }
    let v = Matrix::from_fn(d, p, |i, j| pairs[j].1[i]);
    // eigenvectors are orthonormal to rounding; QR only touches the last bits
    orthonormalize(&v)
}

/// Analytic Euclidean gradient of `rmmd_sq(kernel, X, XVVᵀ)` with respect to `V`.
pub fn rmmd_grad_v(kernel: &Kernel, x: &Matrix, v: &StiefelPoint) -> Result<Matrix> {
    Ok(reconstruction_loss_and_grad(ReconstructionKernel::Marginal(kernel), x, None, v)?.1)
}

/// Reconstruction discrepancy at `V` and its gradient with respect to `V`.
///
/// With `Y = XVVᵀ` and `G = ∂L/∂Y`, the chain rule gives
/// `∂L/∂V = XᵀGV + GᵀXV`.
pub fn reconstruction_loss_and_grad(
    objective: ReconstructionKernel,
    x: &Matrix,
    responses: Option<&Matrix>,
    v: &StiefelPoint,
) -> Result<(f64, Matrix)> {
    objective.require_differentiable()?;
    let xv = v.encode(x)?;
    let recon = v.decode(&xv)?;
    let (loss, g) = objective.value_and_grad(x, responses, &recon)?;
    let term1 = x.tr_matmul(&g.matmul(v.matrix())?)?;
    let term2 = g.tr_matmul(&xv)?;
    Ok((loss, term1.add(&term2)?))
}

/// Training hyperparameters shared by the linear and MLP autoencoders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 3,
            batch_size: 64,
            learning_rate: 1e-2,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(invalid("batch size must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LinearInit {
    Pca,
    /// `N(0, 1/d)` entries, orthonormalised.
    GaussianRandom,
}

/// Result of a linear training run with per-step manifold diagnostics.
#[derive(Clone, Debug)]
pub struct LinearTraining {
    pub model: StiefelPoint,
    pub initial: StiefelPoint,
    /// Mean minibatch loss of every epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: usize,
    /// Largest `‖VᵀV − I‖_F` seen after any retraction.
    pub max_orthonormality_error: f64,
    /// Largest tangency residual of any projected gradient.
    pub max_tangent_residual: f64,
}

pub fn random_init(d: usize, p: usize, rng: &mut RngStream) -> Result<StiefelPoint> {
    let sd = (1.0 / d as f64).sqrt();
    let draws = Matrix::from_fn(d, p, |_, _| sd * rng.normal());
    orthonormalize(&draws)
}

/// Minibatch Stiefel training on the reconstruction discrepancy.
pub fn train_linear(
    x: &Matrix,
    p: usize,
    kernel: &Kernel,
    cfg: &TrainConfig,
    init: LinearInit,
) -> Result<LinearTraining> {
    train_linear_with(ReconstructionKernel::Marginal(kernel), x, None, p, cfg, init)
}

/// As [`train_linear`] but on the joint feature–response discrepancy, where
/// reconstructions keep their original responses.
pub fn train_linear_joint(
    x: &Matrix,
    responses: &Matrix,
    p: usize,
    feature_kernel: &Kernel,
    response_kernel: &Kernel,
    cfg: &TrainConfig,
    init: LinearInit,
) -> Result<LinearTraining> {
    if responses.nrows() != x.nrows() {
        return Err(mismatch("responses not row-aligned with features"));
    }
    train_linear_with(
        ReconstructionKernel::Joint {
            feature: feature_kernel,
            response: response_kernel,
        },
        x,
        Some(responses),
        p,
        cfg,
        init,
    )
}

fn train_linear_with(
    objective: ReconstructionKernel,
    x: &Matrix,
    responses: Option<&Matrix>,
    p: usize,
    cfg: &TrainConfig,
    init: LinearInit,
) -> Result<LinearTraining> {
    cfg.validate()?;
    objective.require_differentiable()?;
    let (n, d) = x.shape();
    if n == 0 {
        return Err(Error::EmptyInput("no training rows".into()));
    }
    if p == 0 || p > d {
        return Err(invalid(format!("latent dimension {p} must lie in 1..={d}")));
    }
    let mut rng = RngStream::new(cfg.seed);
    let mut v = match init {
        LinearInit::Pca => pca_init(x, p)?,
        LinearInit::GaussianRandom => random_init(d, p, &mut rng.substream(1))?,
    };
    let initial = v.clone();
    let mut adam = Adam::new(d * p, cfg.learning_rate, cfg.adam);
    let batch = cfg.batch_size.min(n);
    let mut out = LinearTraining {
        model: v.clone(),
        initial,
        epoch_losses: Vec::with_capacity(cfg.epochs),
        steps: 0,
        max_orthonormality_error: v.orthonormality_error(),
        max_tangent_residual: 0.0,
    };
    for epoch in 0..cfg.epochs {
        let perm = rng.permutation(n);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in perm.chunks(batch) {
            let xb = x.select_rows(chunk);
            let yb = responses.map(|y| y.select_rows(chunk));
            let (loss, g) = reconstruction_loss_and_grad(objective, &xb, yb.as_ref(), &v)?;
            if !loss.is_finite() || !g.is_finite() {
                return Err(Error::Divergence {
                    step: out.steps,
                    detail: format!("non-finite reconstruction loss in epoch {epoch}"),
                });
            }
            let w = tangent_project(&v, &g)?;
            out.max_tangent_residual = out.max_tangent_residual.max(tangent_residual(&v, &w)?);
            let step = Matrix::new(d, p, adam.step(w.as_slice()))?;
            v = qr_retract(&v, &step)?;
            out.max_orthonormality_error = out.max_orthonormality_error.max(v.orthonormality_error());
            out.steps += 1;
            total += loss;
            batches += 1;
        }
        out.epoch_losses.push(total / batches as f64);
    }
    out.model = v;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::rmmd_sq;
    use approx::assert_relative_eq;

    fn random(rng: &mut RngStream, n: usize, d: usize) -> Matrix {
        Matrix::from_fn(n, d, |_, _| rng.normal())
    }

    fn random_point(rng: &mut RngStream, d: usize, p: usize) -> StiefelPoint {
        orthonormalize(&random(rng, d, p)).unwrap()
    }

    #[test]
    fn coordinate_selection_and_idempotence() {
        let mut rng = RngStream::new(1);
        let x = random(&mut rng, 5, 4);
        let v = StiefelPoint::coordinate(4, 2).unwrap();
        let z = v.encode(&x).unwrap();
        assert_eq!(z, x.select_cols(0, 2));

        let v = random_point(&mut rng, 4, 2);
        let z = v.encode(&x).unwrap();
        let zz = v.encode(&v.decode(&z).unwrap()).unwrap();
        assert!(zz.sub(&z).unwrap().max_abs() < 1e-12);
        let r1 = v.reconstruct(&x).unwrap();
        let r2 = v.reconstruct(&r1).unwrap();
        assert!(r2.sub(&r1).unwrap().max_abs() < 1e-12);
        assert!(z.frobenius_norm() <= x.frobenius_norm() + 1e-10);
    }

    #[test]
    fn decode_is_an_isometry() {
        let mut rng = RngStream::new(2);
        let v = random_point(&mut rng, 6, 3);
        let z = random(&mut rng, 10, 3);
        let dz = v.decode(&z).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let a = crate::matrix::sq_dist(z.row(i), z.row(j)).sqrt();
                let b = crate::matrix::sq_dist(dz.row(i), dz.row(j)).sqrt();
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn full_rank_identity_reconstructs_exactly() {
        let mut rng = RngStream::new(3);
        let x = random(&mut rng, 7, 3);
        let v = StiefelPoint::identity(3);
        let k = Kernel::gaussian(1.0).unwrap();
        assert_eq!(rmmd_sq(&k, &x, &v.reconstruct(&x).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn dimension_checks() {
        let v = StiefelPoint::coordinate(3, 2).unwrap();
        assert!(v.encode(&Matrix::zeros(2, 2)).is_err());
        assert!(v.decode(&Matrix::zeros(2, 3)).is_err());
        assert!(StiefelPoint::new(Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap()).is_err());
        assert!(tangent_project(&v, &Matrix::zeros(2, 2)).is_err());
    }

    #[test]
    fn tangent_projection_properties() {
        let mut rng = RngStream::new(4);
        let v = random_point(&mut rng, 5, 2);
        assert!(tangent_project(&v, v.matrix()).unwrap().max_abs() < 1e-14);

        // W = VA with A skew-symmetric is tangent
        let a = Matrix::from_rows(&[[0.0, 0.7], [-0.7, 0.0]]).unwrap();
        let w = v.matrix().matmul(&a).unwrap();
        assert!(tangent_project(&v, &w).unwrap().sub(&w).unwrap().max_abs() < 1e-12);

        for _ in 0..20 {
            let g = random(&mut rng, 5, 2);
            let w = tangent_project(&v, &g).unwrap();
            assert!(tangent_residual(&v, &w).unwrap() < 1e-10);
        }
    }

    #[test]
    fn qr_retraction_examples() {
        let mut rng = RngStream::new(5);
        let v = random_point(&mut rng, 6, 3);
        let same = qr_retract(&v, &Matrix::zeros(6, 3)).unwrap();
        assert!(same.matrix().sub(v.matrix()).unwrap().max_abs() < 1e-12);
        for _ in 0..10 {
            let q = qr_retract(&v, &random(&mut rng, 6, 3)).unwrap();
            assert!(q.orthonormality_error() < 1e-12);
        }
        let e1 = StiefelPoint::coordinate(2, 1).unwrap();
        let q = qr_retract(&e1, &Matrix::column(&[0.0, 1.0])).unwrap();
        let h = 0.5f64.sqrt();
        assert_relative_eq!(q.matrix()[(0, 0)], h, epsilon = 1e-15);
        assert_relative_eq!(q.matrix()[(1, 0)], h, epsilon = 1e-15);
    }

    #[test]
    fn qr_retraction_detects_rank_loss() {
        let e1 = StiefelPoint::coordinate(2, 1).unwrap();
        let r = qr_retract(&e1, &Matrix::column(&[-1.0, 0.0]));
        assert!(matches!(r, Err(Error::RankDeficient(_))));
    }

    fn fd_grad_v(kernel: &Kernel, x: &Matrix, v: &Matrix, h: f64) -> Matrix {
        let f = |vm: &Matrix| {
            let rec = x.matmul(vm).unwrap().matmul_tr(vm).unwrap();
            rmmd_sq(kernel, x, &rec).unwrap()
        };
        Matrix::from_fn(v.nrows(), v.ncols(), |i, j| {
            let mut vp = v.clone();
            let mut vm = v.clone();
            vp[(i, j)] += h;
            vm[(i, j)] -= h;
            (f(&vp) - f(&vm)) / (2.0 * h)
        })
    }

    #[test]
    fn rmmd_gradient_matches_finite_differences() {
        let mut rng = RngStream::new(6);
        for kernel in [Kernel::gaussian(1.5).unwrap(), Kernel::imq(1.0).unwrap(), Kernel::quadratic()] {
            let x = random(&mut rng, 6, 4);
            let v = random_point(&mut rng, 4, 2);
            let g = rmmd_grad_v(&kernel, &x, &v).unwrap();
            let fd = fd_grad_v(&kernel, &x, v.matrix(), 1e-6);
            let rel = g.sub(&fd).unwrap().frobenius_norm() / fd.frobenius_norm();
            assert!(rel < 1e-5, "{} {rel}", kernel.name());
        }
    }

    #[test]
    fn full_rank_gradient_vanishes_on_the_manifold() {
        let mut rng = RngStream::new(7);
        let x = random(&mut rng, 6, 3);
        let k = Kernel::gaussian(1.0).unwrap();
        let g = rmmd_grad_v(&k, &x, &StiefelPoint::identity(3)).unwrap();
        let w = tangent_project(&StiefelPoint::identity(3), &g).unwrap();
        assert!(w.max_abs() < 1e-12);
    }

    #[test]
    fn gradient_is_permutation_invariant() {
        let mut rng = RngStream::new(8);
        let x = random(&mut rng, 8, 4);
        let v = random_point(&mut rng, 4, 2);
        let k = Kernel::gaussian(1.2).unwrap();
        let g1 = rmmd_grad_v(&k, &x, &v).unwrap();
        let perm = rng.permutation(8);
        let g2 = rmmd_grad_v(&k, &x.select_rows(&perm), &v).unwrap();
        assert!(g1.sub(&g2).unwrap().max_abs() < 1e-12);
    }

    #[test]
    fn pca_examples() {
        let mut rng = RngStream::new(9);
        let x = Matrix::from_fn(2000, 2, |_, j| rng.normal() * if j == 0 { 2.0 } else { 1.0 });
        let v = pca_init(&x, 1).unwrap();
        assert!((v.matrix()[(0, 0)] - 1.0).abs() < 0.01);
        assert!(v.matrix()[(0, 0)] > 0.0);
        let full = pca_init(&x, 2).unwrap();
        assert!(full.projector().sub(&Matrix::identity(2)).unwrap().max_abs() < 1e-10);
        assert!(pca_init(&x, 3).is_err());

        let iso = Matrix::from_rows(&[[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]]).unwrap();
        assert!(pca_init(&iso, 1).unwrap().orthonormality_error() < 1e-12);
        // rank-deficient covariance still yields an orthonormal basis
        let flat = Matrix::from_rows(&[[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]).unwrap();
        assert!(pca_init(&flat, 3).unwrap().orthonormality_error() < 1e-12);
    }

    #[test]
    fn subspace_data_stays_reconstructed() {
        let mut rng = RngStream::new(10);
        let u = random_point(&mut rng, 5, 2);
        let w = random(&mut rng, 200, 2);
        let x = u.decode(&w).unwrap();
        let k = Kernel::gaussian(2.0).unwrap();
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 3,
            ..TrainConfig::default()
        };
        let fit = train_linear(&x, 2, &k, &cfg, LinearInit::Pca).unwrap();
        assert!(fit.epoch_losses.iter().all(|&l| l < 1e-6), "{:?}", fit.epoch_losses);
        let rec = fit.model.reconstruct(&x).unwrap();
        assert!(rmmd_sq(&k, &x, &rec).unwrap() < 1e-6);
    }

    #[test]
    fn training_is_deterministic_and_respects_manifold() {
        let mut rng = RngStream::new(11);
        let x = random(&mut rng, 120, 4);
        let k = Kernel::gaussian(1.5).unwrap();
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 25,
            learning_rate: 0.02,
            seed: 99,
            ..TrainConfig::default()
        };
        let a = train_linear(&x, 2, &k, &cfg, LinearInit::GaussianRandom).unwrap();
        let b = train_linear(&x, 2, &k, &cfg, LinearInit::GaussianRandom).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.steps, 15);
        assert!(a.max_orthonormality_error < 1e-8);
        assert!(a.max_tangent_residual < 1e-10);
        assert!(train_linear(&x, 5, &k, &cfg, LinearInit::Pca).is_err());
    }

    #[test]
    fn text_round_trip() {
        let mut rng = RngStream::new(12);
        let v = random_point(&mut rng, 5, 2);
        let back = StiefelPoint::from_text(&v.to_text()).unwrap();
        assert_eq!(back, v);
        assert!(StiefelPoint::from_text("linear 2 1\n1.0\n").is_err());
        assert!(StiefelPoint::from_text("linear 2 1\n1.0\nabc\n").is_err());
    }
}
