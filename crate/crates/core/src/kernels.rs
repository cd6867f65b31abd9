//! Positive-definite kernels, their first-argument gradients, Gram matrices
//! and the median-heuristic lengthscale rule.

use std::fmt;
use std::sync::Arc;

use crate::error::{invalid, mismatch, Error, Result};
use crate::matrix::{dot, sq_dist, Matrix};
use crate::rng::RngStream;

/// A deterministic map from latent space `R^p` back to ambient space `R^d`.
pub trait Decoder: Send + Sync {
    fn latent_dim(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    fn decode_point(&self, z: &[f64]) -> Vec<f64>;

    fn decode_rows(&self, z: &Matrix) -> Matrix {
        let rows: Vec<Vec<f64>> = z.rows().map(|r| self.decode_point(r)).collect();
        if rows.is_empty() {
            return Matrix::zeros(0, self.ambient_dim());
        }
        Matrix::from_rows(&rows).expect("decoder produced ragged output")
    }
}

/// Shared handle to a decoder, used by [`Kernel::PullBack`].
#[derive(Clone)]
pub struct DecoderHandle(Arc<dyn Decoder>);

impl DecoderHandle {
    pub fn new(decoder: impl Decoder + 'static) -> Self {
        Self(Arc::new(decoder))
    }

    pub fn from_arc(decoder: Arc<dyn Decoder>) -> Self {
        Self(decoder)
    }

    pub fn decoder(&self) -> &dyn Decoder {
        self.0.as_ref()
    }
}

impl fmt::Debug for DecoderHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "DecoderHandle(R^{} -> R^{})",
            self.0.latent_dim(),
            self.0.ambient_dim()
        )
    }
}

#[derive(Clone, Debug)]
pub enum Kernel {
    /// `exp(-‖x−y‖² / (2λ²))`
    Gaussian { lengthscale: f64 },
    /// `(1 + ‖x−y‖² / (2λ²))^(-1/2)`
    Imq { lengthscale: f64 },
    /// `(1 + xᵀy)²`
    Quadratic,
    /// `k(x, x′)·l(y, y′)` on concatenated `[x | y]` points whose first
    /// `feature_dim` coordinates are the feature part.
    TensorProduct {
        feature: Box<Kernel>,
        response: Box<Kernel>,
        feature_dim: usize,
    },
    /// `k(φ(z), φ(z′))` for a decoder `φ`.
    PullBack {
        base: Box<Kernel>,
        decoder: DecoderHandle,
    },
}

fn check_lengthscale(lengthscale: f64) -> Result<()> {
    if lengthscale.is_finite() && lengthscale > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("lengthscale must be positive, got {lengthscale}")))
    }
}

impl Kernel {
    pub fn gaussian(lengthscale: f64) -> Result<Self> {
        check_lengthscale(lengthscale)?;
        Ok(Kernel::Gaussian { lengthscale })
    }

    pub fn imq(lengthscale: f64) -> Result<Self> {
        check_lengthscale(lengthscale)?;
        Ok(Kernel::Imq { lengthscale })
    }

    pub fn quadratic() -> Self {
        Kernel::Quadratic
    }

    pub fn tensor_product(feature: Kernel, response: Kernel, feature_dim: usize) -> Self {
        Kernel::TensorProduct {
            feature: Box::new(feature),
            response: Box::new(response),
            feature_dim,
        }
    }

    pub fn pull_back(base: Kernel, decoder: DecoderHandle) -> Self {
        Kernel::PullBack {
            base: Box::new(base),
            decoder,
        }
    }

    /// The same family with a different lengthscale. Only meaningful for
    /// Gaussian and IMQ kernels.
    pub fn with_lengthscale(&self, lengthscale: f64) -> Result<Self> {
        match self {
            Kernel::Gaussian { .. } => Kernel::gaussian(lengthscale),
            Kernel::Imq { .. } => Kernel::imq(lengthscale),
            other => Err(Error::Unsupported(format!(
                "{} kernel has no lengthscale",
                other.name()
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Gaussian { .. } => "gaussian",
            Kernel::Imq { .. } => "imq",
            Kernel::Quadratic => "quadratic",
            Kernel::TensorProduct { .. } => "tensor-product",
            Kernel::PullBack { .. } => "pull-back",
        }
    }

    /// Whether [`Kernel::grad_first`] is available.
    pub fn is_differentiable(&self) -> bool {
        matches!(
            self,
            Kernel::Gaussian { .. } | Kernel::Imq { .. } | Kernel::Quadratic
        )
    }

    pub(crate) fn require_differentiable(&self) -> Result<()> {
        if self.is_differentiable() {
            Ok(())
        } else {
            Err(Error::Unsupported(format!(
                "gradient of the {} kernel",
                self.name()
            )))
        }
    }

    /// Point dimension the kernel requires, if it fixes one.
    pub fn input_dim(&self) -> Option<usize> {
        match self {
            Kernel::PullBack { decoder, .. } => Some(decoder.decoder().latent_dim()),
            _ => None,
        }
    }

    fn check_pair(&self, x: &[f64], y: &[f64]) -> Result<()> {
        if x.len() != y.len() {
            return Err(mismatch(format!(
                "kernel arguments of dimension {} and {}",
                x.len(),
                y.len()
            )));
        }
        match self {
            Kernel::TensorProduct { feature_dim, .. } if x.len() <= *feature_dim => {
                Err(mismatch(format!(
                    "tensor-product input of dimension {} has no response part after {} features",
                    x.len(),
                    feature_dim
                )))
            }
            Kernel::PullBack { decoder, .. } if x.len() != decoder.decoder().latent_dim() => {
                Err(mismatch(format!(
                    "pull-back kernel expects latent points of dimension {}, got {}",
                    decoder.decoder().latent_dim(),
                    x.len()
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_pair(x, y)?;
        Ok(self.value(x, y))
    }

    /// Unchecked evaluation; callers guarantee matching dimensions.
    pub(crate) fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Kernel::Gaussian { lengthscale } => {
                (-sq_dist(x, y) / (2.0 * lengthscale * lengthscale)).exp()
            }
            Kernel::Imq { lengthscale } => {
                (1.0 + sq_dist(x, y) / (2.0 * lengthscale * lengthscale)).powf(-0.5)
            }
            Kernel::Quadratic => {
                let t = 1.0 + dot(x, y);
                t * t
            }
            Kernel::TensorProduct {
                feature,
                response,
                feature_dim,
            } => {
                let (xf, xr) = x.split_at(*feature_dim);
                let (yf, yr) = y.split_at(*feature_dim);
                feature.value(xf, yf) * response.value(xr, yr)
            }
            Kernel::PullBack { base, decoder } => {
                let d = decoder.decoder();
                base.value(&d.decode_point(x), &d.decode_point(y))
            }
        }
    }

    /// `∂k(x, y)/∂x`.
    pub fn grad_first(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        self.require_differentiable()?;
        self.check_pair(x, y)?;
        let mut g = vec![0.0; x.len()];
        self.accumulate_grad(x, y, 1.0, &mut g);
        Ok(g)
    }

    /// Adds `weight · ∂k(x, y)/∂x` into `out` and returns `k(x, y)`.
    ///
    /// Only defined for differentiable variants; callers check
    /// [`Kernel::is_differentiable`] first.
    pub(crate) fn accumulate_grad(&self, x: &[f64], y: &[f64], weight: f64, out: &mut [f64]) -> f64 {
        match self {
            Kernel::Gaussian { lengthscale } => {
                let l2 = lengthscale * lengthscale;
                let k = (-sq_dist(x, y) / (2.0 * l2)).exp();
                let c = -weight * k / l2;
                for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                    *o += c * (a - b);
                }
                k
            }
            Kernel::Imq { lengthscale } => {
                let two_l2 = 2.0 * lengthscale * lengthscale;
                let t = 1.0 + sq_dist(x, y) / two_l2;
                let k = t.powf(-0.5);
                let c = -weight * k / (t * two_l2);
                for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                    *o += c * (a - b);
                }
                k
            }
            Kernel::Quadratic => {
                let t = 1.0 + dot(x, y);
                let c = 2.0 * weight * t;
                for (o, b) in out.iter_mut().zip(y) {
                    *o += c * b;
                }
                t * t
            }
            _ => unreachable!("gradient requested for a non-differentiable kernel"),
        }
    }
}

/// Gram matrix `G[i][j] = k(a_i, b_j)`.
pub fn gram(kernel: &Kernel, a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if a.ncols() != b.ncols() {
        return Err(mismatch(format!(
            "gram between {}-d and {}-d points",
            a.ncols(),
            b.ncols()
        )));
    }
    if let Some(dim) = kernel.input_dim() {
        if a.ncols() != dim {
            return Err(mismatch(format!(
                "kernel expects {dim}-d points, got {}",
                a.ncols()
            )));
        }
    }
    if let (Kernel::TensorProduct { feature_dim, .. }, true) = (kernel, a.nrows() > 0) {
        if a.ncols() <= *feature_dim {
            return Err(mismatch("tensor-product input without response columns"));
        }
    }
    if let Kernel::PullBack { base, decoder } = kernel {
        // decode each row once; bit-identical to per-pair evaluation
        let da = decoder.decoder().decode_rows(a);
        let db = decoder.decoder().decode_rows(b);
        return gram(base, &da, &db);
    }
    Ok(Matrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        kernel.value(a.row(i), b.row(j))
    }))
}

/// Median-heuristic lengthscale `sqrt(H/2)`, where `H` is the median squared
/// distance over distinct pairs `i < j`.
///
/// When there are more than `cap` rows, the first `cap` rows of a seeded
/// shuffle are used.
pub fn median_heuristic(points: &Matrix, cap: usize, seed: u64) -> Result<f64> {
    if cap < 2 {
        return Err(invalid("median heuristic cap must be at least 2"));
    }
    let n = points.nrows();
    if n < 2 {
        return Err(invalid(format!(
            "median heuristic needs at least 2 points, got {n}"
        )));
    }
    let subset;
    let pts = if n > cap {
        let mut rng = RngStream::new(seed);
        let perm = rng.permutation(n);
        subset = points.select_rows(&perm[..cap]);
        &subset
    } else {
        points
    };
    let m = pts.nrows();
    let mut d2 = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in i + 1..m {
            d2.push(sq_dist(pts.row(i), pts.row(j)));
        }
    }
    let h = median(&mut d2);
    if !(h > 0.0) {
        return Err(Error::DegenerateScale(
            "median squared pairwise distance is zero".into(),
        ));
    }
    Ok((h / 2.0).sqrt())
}

/// Median with the even-length convention of averaging the two middle values.
pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::SymmetricEigen;

    struct Doubler;

    impl Decoder for Doubler {
        fn latent_dim(&self) -> usize {
            1
        }
        fn ambient_dim(&self) -> usize {
            2
        }
        fn decode_point(&self, z: &[f64]) -> Vec<f64> {
            vec![2.0 * z[0], -z[0]]
        }
    }

    fn random_matrix(rng: &mut RngStream, n: usize, d: usize) -> Matrix {
        Matrix::from_fn(n, d, |_, _| rng.normal())
    }

    #[test]
    fn scalar_values() {
        let g1 = Kernel::gaussian(1.0).unwrap();
        assert_eq!(g1.eval(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 1.0);
        let g = Kernel::gaussian(2f64.sqrt()).unwrap();
        assert_relative_eq!(g.eval(&[0.0], &[2.0]).unwrap(), 0.367_879_4, epsilon = 1e-7);
        let q = Kernel::quadratic();
        assert_eq!(q.eval(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 1.0);
        assert_eq!(q.eval(&[1.0, 1.0], &[1.0, 1.0]).unwrap(), 9.0);
        let imq = Kernel::imq(1.0).unwrap();
        assert_relative_eq!(imq.eval(&[0.0], &[2.0]).unwrap(), 3f64.powf(-0.5), epsilon = 1e-15);
    }

    #[test]
    fn invalid_lengthscale_rejected() {
        assert!(Kernel::gaussian(0.0).is_err());
        assert!(Kernel::imq(-1.0).is_err());
        assert!(Kernel::gaussian(f64::NAN).is_err());
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = Kernel::gaussian(1.0).unwrap();
        assert!(matches!(
            g.eval(&[0.0], &[0.0, 1.0]),
            Err(Error::DimensionMismatch(_))
        ));
        let a = Matrix::zeros(2, 3);
        let b = Matrix::zeros(2, 2);
        assert!(gram(&g, &a, &b).is_err());
    }

    #[test]
    fn tensor_product_and_pull_back() {
        let k = Kernel::gaussian(1.0).unwrap();
        let l = Kernel::imq(0.5).unwrap();
        let t = Kernel::tensor_product(k.clone(), l.clone(), 2);
        let x = [0.1, 0.2, 1.0];
        let y = [-0.3, 0.5, 0.4];
        let expect = k.eval(&x[..2], &y[..2]).unwrap() * l.eval(&x[2..], &y[2..]).unwrap();
        assert_eq!(t.eval(&x, &y).unwrap(), expect);
        assert!(t.eval(&[0.0, 1.0], &[0.0, 1.0]).is_err());

        let pb = Kernel::pull_back(k.clone(), DecoderHandle::new(Doubler));
        let direct = k.eval(&[1.0, -0.5], &[-0.4, 0.2]).unwrap();
        assert_eq!(pb.eval(&[0.5], &[-0.2]).unwrap(), direct);
        assert!(pb.eval(&[0.5, 1.0], &[0.1, 0.0]).is_err());
        assert!(matches!(
            pb.grad_first(&[0.5], &[0.1]),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn gaussian_gradient_hand_values() {
        let g = Kernel::gaussian(1.0).unwrap();
        assert_eq!(g.grad_first(&[0.4, 0.1], &[0.4, 0.1]).unwrap(), vec![0.0, 0.0]);
        let v = g.grad_first(&[1.0], &[0.0]).unwrap()[0];
        assert_relative_eq!(v, -0.606_530_7, epsilon = 1e-7);
    }

    #[test]
    fn gradients_match_central_differences() {
        let mut rng = RngStream::new(11);
        let kernels = [
            Kernel::gaussian(1.3).unwrap(),
            Kernel::imq(0.8).unwrap(),
            Kernel::quadratic(),
        ];
        let h = 1e-6;
        for kernel in &kernels {
            for _ in 0..50 {
                let x: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
                let y: Vec<f64> = (0..5).map(|_| rng.normal()).collect();
                let g = kernel.grad_first(&x, &y).unwrap();
                let fd: Vec<f64> = (0..5)
                    .map(|i| {
                        let mut xp = x.clone();
                        let mut xm = x.clone();
                        xp[i] += h;
                        xm[i] -= h;
                        (kernel.eval(&xp, &y).unwrap() - kernel.eval(&xm, &y).unwrap()) / (2.0 * h)
                    })
                    .collect();
                let num: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                let den: f64 = fd.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-8);
                assert!(num / den < 1e-6, "{} relative error {}", kernel.name(), num / den);
            }
        }
    }

    #[test]
    fn gram_matches_scalar_loop() {
        let mut rng = RngStream::new(5);
        let a = random_matrix(&mut rng, 8, 3);
        let b = random_matrix(&mut rng, 5, 3);
        for kernel in [Kernel::gaussian(0.7).unwrap(), Kernel::imq(1.1).unwrap(), Kernel::quadratic()] {
            let g = gram(&kernel, &a, &b).unwrap();
            for i in 0..8 {
                for j in 0..5 {
                    let e = kernel.eval(a.row(i), b.row(j)).unwrap();
                    assert!((g[(i, j)] - e).abs() < 1e-12);
                }
            }
        }
        let one = Matrix::from_rows(&[[0.5, 0.5, 0.5]]).unwrap();
        let k = Kernel::gaussian(1.0).unwrap();
        assert_eq!(gram(&k, &one, &a.select_rows(&[0])).unwrap()[(0, 0)], k.eval(one.row(0), a.row(0)).unwrap());
    }

    #[test]
    fn gram_is_symmetric_psd() {
        let mut rng = RngStream::new(9);
        for kernel in [Kernel::gaussian(0.9).unwrap(), Kernel::imq(0.4).unwrap(), Kernel::quadratic()] {
            for n in [3, 10, 20] {
                let a = random_matrix(&mut rng, n, 4);
                let g = gram(&kernel, &a, &a).unwrap();
                let asym = g.sub(&g.transpose()).unwrap().max_abs();
                assert!(asym < 1e-12);
                let trace: f64 = (0..n).map(|i| g[(i, i)]).sum();
                let eig = SymmetricEigen::new(g.to_nalgebra());
                let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
                assert!(min >= -1e-8 * trace, "{} min eigenvalue {min}", kernel.name());
                if let Kernel::Gaussian { .. } = kernel {
                    assert!((0..n).all(|i| g[(i, i)] == 1.0));
                }
            }
        }
    }

    #[test]
    fn median_heuristic_examples() {
        let pts = Matrix::column(&[0.0, 1.0, 3.0]);
        assert_relative_eq!(median_heuristic(&pts, 1000, 0).unwrap(), 2f64.sqrt(), epsilon = 1e-15);
        let two = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0]]).unwrap();
        assert_relative_eq!(median_heuristic(&two, 1000, 0).unwrap(), 1.0, epsilon = 1e-15);
        let same = Matrix::from_rows(&[[1.0, 2.0]; 5]).unwrap();
        assert!(matches!(
            median_heuristic(&same, 1000, 0),
            Err(Error::DegenerateScale(_))
        ));
        assert!(median_heuristic(&Matrix::column(&[1.0]), 1000, 0).is_err());
    }

    #[test]
    fn median_even_count_averages_middle() {
        // four points on a line: squared distances {1,4,9,1,4,1} -> sorted 1,1,1,4,4,9 -> (1+4)/2
        let pts = Matrix::column(&[0.0, 1.0, 2.0, 3.0]);
        assert_relative_eq!(median_heuristic(&pts, 1000, 0).unwrap(), (2.5f64 / 2.0).sqrt());
    }

    #[test]
    fn median_heuristic_subsample_is_seeded() {
        let mut rng = RngStream::new(2);
        let pts = random_matrix(&mut rng, 300, 2);
        let a = median_heuristic(&pts, 50, 7).unwrap();
        let b = median_heuristic(&pts, 50, 7).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
