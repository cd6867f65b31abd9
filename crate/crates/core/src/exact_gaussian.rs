//! Closed-form kernel mean embeddings of Gaussian mixtures under the Gaussian
//! kernel `exp(-‖x-y‖²/(2λ²))`.
//!
//! Every quantity reduces to the pairwise term
//! `|I + S/λ²|^(-1/2) exp(-½ δᵀ(λ²I + S)⁻¹δ)` for a summed covariance `S`,
//! evaluated through a symmetric eigendecomposition of `S`. Rank-deficient
//! `S` is fine because `λ² > 0` keeps `λ²I + S` invertible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, mismatch, Result};
use crate::estimators::clamp_sq;
use crate::kernels::{gram, Kernel};
use crate::matrix::Matrix;
use crate::rng::RngStream;
use crate::textio::{fmt_real, fmt_row, Lines};

const WEIGHT_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixture {
    weights: Vec<f64>,
    means: Vec<Vec<f64>>,
    covariances: Vec<Matrix>,
}

impl GaussianMixture {
    pub fn new(weights: Vec<f64>, means: Vec<Vec<f64>>, covariances: Vec<Matrix>) -> Result<Self> {
        let k = weights.len();
        if k == 0 {
            return Err(invalid("mixture needs at least one component"));
        }
        if means.len() != k || covariances.len() != k {
            return Err(mismatch(format!(
                "{k} weights but {} means and {} covariances",
                means.len(),
                covariances.len()
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(invalid("mixture weights must be positive"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() >= WEIGHT_TOL {
            return Err(invalid(format!("mixture weights sum to {total}")));
        }
        let d = means[0].len();
        for (i, (mu, cov)) in means.iter().zip(&covariances).enumerate() {
            if mu.len() != d || cov.shape() != (d, d) {
                return Err(mismatch(format!("component {i} does not have dimension {d}")));
            }
            if mu.iter().any(|v| !v.is_finite()) || !cov.is_finite() {
                return Err(invalid(format!("component {i} has non-finite parameters")));
            }
            check_covariance(i, cov)?;
        }
        Ok(Self {
            weights,
            means,
            covariances,
        })
    }

    /// Components sharing the covariance `variance · I`.
    pub fn isotropic(weights: Vec<f64>, means: Vec<Vec<f64>>, variance: f64) -> Result<Self> {
        let d = means.first().map_or(0, Vec::len);
        let covs = vec![Matrix::identity(d).scale(variance); means.len()];
        Self::new(weights, means, covs)
    }

    /// Equal-weight point masses at the rows of `points`.
    pub fn point_masses(points: &Matrix) -> Result<Self> {
        let m = points.nrows();
        if m == 0 {
            return Err(invalid("no points given"));
        }
        let d = points.ncols();
        Self::new(
            vec![1.0 / m as f64; m],
            points.rows().map(<[f64]>::to_vec).collect(),
            vec![Matrix::zeros(d, d); m],
        )
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn n_components(&self) -> usize {
        self.weights.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<f64>] {
        &self.means
    }

    pub fn covariances(&self) -> &[Matrix] {
        &self.covariances
    }

    /// Distribution of `x ↦ xA` for `A` with `dim()` rows.
    pub fn pushforward_linear(&self, a: &Matrix) -> Result<Self> {
        self.pushforward_affine(a, &vec![0.0; a.ncols()])
    }

    /// Distribution of `x ↦ xA + b`.
    pub fn pushforward_affine(&self, a: &Matrix, b: &[f64]) -> Result<Self> {
        if a.nrows() != self.dim() {
            return Err(mismatch(format!(
                "map has {} rows, mixture dimension is {}",
                a.nrows(),
                self.dim()
            )));
        }
        if b.len() != a.ncols() {
            return Err(mismatch("offset length differs from map output dimension"));
        }
        let means = self
            .means
            .iter()
            .map(|mu| {
                let row = Matrix::new(1, mu.len(), mu.clone())?.matmul(a)?;
                Ok(row.as_slice().iter().zip(b).map(|(x, o)| x + o).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        let covs = self
            .covariances
            .iter()
            .map(|s| {
                let c = a.tr_matmul(&s.matmul(a)?)?;
                Ok(symmetrize(&c))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.weights.clone(), means, covs)
    }

    /// `n` i.i.d. draws. Each row consumes one uniform and `dim()` normals.
    pub fn sample(&self, n: usize, rng: &mut RngStream) -> Matrix {
        let d = self.dim();
        let factors: Vec<DMatrix<f64>> = self.covariances.iter().map(sqrt_factor).collect();
        let mut cumulative = Vec::with_capacity(self.weights.len());
        let mut acc = 0.0;
        for w in &self.weights {
            acc += w;
            cumulative.push(acc);
        }
        let mut data = Vec::with_capacity(n * d);
        for _ in 0..n {
            let u = rng.uniform(0.0, 1.0) * acc;
            let c = cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1);
            let z = DVector::from_fn(d, |_, _| rng.normal());
            let x = &factors[c] * z;
            data.extend(self.means[c].iter().zip(x.iter()).map(|(m, v)| m + v));
        }
        Matrix::new(n, d, data).expect("sized above")
    }

    /// Header `mixture <K> <d>`, then per component a weight line, a mean
    /// line and `d` covariance rows.
    pub fn to_text(&self) -> String {
        let mut s = format!("mixture {} {}\n", self.n_components(), self.dim());
        for ((w, mu), cov) in self.weights.iter().zip(&self.means).zip(&self.covariances) {
            s.push_str(&fmt_real(*w));
            s.push('\n');
            s.push_str(&fmt_row(mu));
            s.push('\n');
            for r in cov.rows() {
                s.push_str(&fmt_row(r));
                s.push('\n');
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let (_, dims) = lines.header("mixture", 2)?;
        let (k, d) = (dims[0], dims[1]);
        let mut weights = Vec::with_capacity(k);
        let mut means = Vec::with_capacity(k);
        let mut covs = Vec::with_capacity(k);
        for i in 0..k {
            weights.push(lines.reals(1, &format!("component {i} weight"))?[0]);
            means.push(lines.reals(d, &format!("component {i} mean"))?);
            let rows = (0..d)
                .map(|r| lines.reals(d, &format!("component {i} covariance row {r}")))
                .collect::<Result<Vec<_>>>()?;
            covs.push(if d == 0 { Matrix::zeros(0, 0) } else { Matrix::from_rows(&rows)? });
        }
        lines.finish()?;
        Self::new(weights, means, covs)
    }
}

fn check_covariance(i: usize, cov: &Matrix) -> Result<()> {
    let d = cov.nrows();
    for r in 0..d {
        for c in r + 1..d {
            if (cov[(r, c)] - cov[(c, r)]).abs() > SYMMETRY_TOL {
                return Err(invalid(format!("covariance {i} is not symmetric")));
            }
        }
    }
    let floor = -PSD_TOL * cov.max_abs().max(1.0);
    let eig = SymmetricEigen::new(cov.to_nalgebra());
    if eig.eigenvalues.iter().any(|&e| e < floor) {
        return Err(invalid(format!("covariance {i} is not positive semidefinite")));
    }
    Ok(())
}

fn symmetrize(c: &Matrix) -> Matrix {
    Matrix::from_fn(c.nrows(), c.ncols(), |i, j| 0.5 * (c[(i, j)] + c[(j, i)]))
}

/// `Q diag(√max(s, 0))`, so that `F Fᵀ = Σ`.
fn sqrt_factor(cov: &Matrix) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(cov.to_nalgebra());
    let mut f = eig.eigenvectors;
    for (j, s) in eig.eigenvalues.iter().enumerate() {
        let r = s.max(0.0).sqrt();
        f.column_mut(j).scale_mut(r);
    }
    f
}

/// Pairwise term for a fixed summed covariance, reusable across offsets.
struct PairTerm {
    basis: Option<DMatrix<f64>>,
    inv: Vec<f64>,
    scale: f64,
}

impl PairTerm {
    fn new(cov_sum: &Matrix, lambda: f64) -> Self {
        let l2 = lambda * lambda;
        if cov_sum.max_abs() == 0.0 {
            return Self {
                basis: None,
                inv: vec![1.0 / l2],
                scale: 1.0,
            };
        }
        let eig = SymmetricEigen::new(cov_sum.to_nalgebra());
        let vals: Vec<f64> = eig.eigenvalues.iter().map(|s| s.max(0.0)).collect();
        let log_det: f64 = vals.iter().map(|s| (s / l2).ln_1p()).sum();
        Self {
            basis: Some(eig.eigenvectors),
            inv: vals.iter().map(|s| 1.0 / (l2 + s)).collect(),
            scale: (-0.5 * log_det).exp(),
        }
    }

    fn eval(&self, delta: &[f64]) -> f64 {
        let quad = match &self.basis {
            None => delta.iter().map(|v| v * v).sum::<f64>() * self.inv[0],
            Some(q) => q
                .column_iter()
                .zip(&self.inv)
                .map(|(col, inv)| {
                    let c: f64 = col.iter().zip(delta).map(|(a, b)| a * b).sum();
                    c * c * inv
                })
                .sum(),
        };
        self.scale * (-0.5 * quad).exp()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("lengthscale must be positive, got {lambda}")))
    }
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// `μ_P(x) = E_P[k(X, x)]`.
pub fn embedding_at(gm: &GaussianMixture, lambda: f64, x: &[f64]) -> Result<f64> {
    check_lambda(lambda)?;
    if x.len() != gm.dim() {
        return Err(mismatch(format!("point has dimension {}, mixture {}", x.len(), gm.dim())));
    }
    Ok(component_terms(gm, lambda)
        .iter()
        .zip(gm.weights.iter().zip(&gm.means))
        .map(|(t, (w, mu))| w * t.eval(&diff(x, mu)))
        .sum())
}

fn component_terms(gm: &GaussianMixture, lambda: f64) -> Vec<PairTerm> {
    gm.covariances.iter().map(|c| PairTerm::new(c, lambda)).collect()
}

/// `E[k(X, X′)]` for `X, X′` drawn independently from `p` and `q`.
fn cross_expectation(p: &GaussianMixture, q: &GaussianMixture, lambda: f64) -> Result<f64> {
    let mut total = 0.0;
    for (wa, (ma, ca)) in p.weights.iter().zip(p.means.iter().zip(&p.covariances)) {
        for (wb, (mb, cb)) in q.weights.iter().zip(q.means.iter().zip(&q.covariances)) {
            let term = PairTerm::new(&ca.add(cb)?, lambda);
            total += wa * wb * term.eval(&diff(ma, mb));
        }
    }
    Ok(total)
}

/// `E[k(X, X′)]` for independent `X, X′ ~ gm`.
pub fn expected_embedding(gm: &GaussianMixture, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    cross_expectation(gm, gm, lambda)
}

/// Population MMD² between two mixtures.
pub fn exact_mmd_sq_mixture(p: &GaussianMixture, q: &GaussianMixture, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if p.dim() != q.dim() {
        return Err(mismatch(format!("mixture dimensions {} and {}", p.dim(), q.dim())));
    }
    // canonical order keeps the value exactly symmetric
    let (a, b) = if p.to_text() <= q.to_text() { (p, q) } else { (q, p) };
    let v = cross_expectation(a, a, lambda)? + cross_expectation(b, b, lambda)?
        - 2.0 * cross_expectation(a, b, lambda)?;
    Ok(clamp_sq(v))
}

/// Population-vs-empirical MMD² between `gm` and the uniform measure on the
/// rows of `points`.
pub fn exact_mmd_sq_vs_points(gm: &GaussianMixture, points: &Matrix, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    if points.ncols() != gm.dim() {
        return Err(mismatch(format!(
            "points have dimension {}, mixture {}",
            points.ncols(),
            gm.dim()
        )));
    }
    let m = points.nrows();
    if m == 0 {
        return Err(invalid("no points given"));
    }
    let terms = component_terms(gm, lambda);
    let mut cross = 0.0;
    for s in points.rows() {
        cross += terms
            .iter()
            .zip(gm.weights.iter().zip(&gm.means))
            .map(|(t, (w, mu))| w * t.eval(&diff(s, mu)))
            .sum::<f64>();
    }
    let k = gram(&Kernel::gaussian(lambda)?, points, points)?;
    let self_term = k.as_slice().iter().sum::<f64>() / (m * m) as f64;
    let v = expected_embedding(gm, lambda)? - 2.0 * cross / m as f64 + self_term;
    Ok(clamp_sq(v))
}
