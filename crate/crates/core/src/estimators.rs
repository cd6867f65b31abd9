//! Empirical (V-statistic) maximum mean discrepancies.
//!
//! All discrepancies are normalised double sums
//! `(1/n²)ΣΣk(a,a′) − (2/nm)ΣΣk(a,b) + (1/m²)ΣΣk(b,b′)`; the reconstruction,
//! encoded and decoded variants differ only in which point sets are compared.
//! Joint variants multiply a feature kernel by a response kernel.

use std::cmp::Ordering;

use crate::error::{invalid, mismatch, Error, Result};
use crate::kernels::{gram, Kernel};
use crate::matrix::{dot, sq_dist, Matrix};

/// Values in `[-NEG_CLAMP, 0)` are rounding noise and are reported as zero.
pub const NEG_CLAMP: f64 = 1e-12;

pub(crate) fn clamp_sq(v: f64) -> f64 {
    if (-NEG_CLAMP..0.0).contains(&v) {
        0.0
    } else {
        v
    }
}

/// Features paired row-by-row with responses.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelledSet {
    features: Matrix,
    responses: Matrix,
}

impl LabelledSet {
    pub fn new(features: Matrix, responses: Matrix) -> Result<Self> {
        if features.nrows() != responses.nrows() {
            return Err(mismatch(format!(
                "{} feature rows but {} response rows",
                features.nrows(),
                responses.nrows()
            )));
        }
        if !features.is_finite() || !responses.is_finite() {
            return Err(invalid("labelled set contains non-finite entries"));
        }
        Ok(Self {
            features,
            responses,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn responses(&self) -> &Matrix {
        &self.responses
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn select_rows(&self, idx: &[usize]) -> Self {
        Self {
            features: self.features.select_rows(idx),
            responses: self.responses.select_rows(idx),
        }
    }

    pub fn into_parts(self) -> (Matrix, Matrix) {
        (self.features, self.responses)
    }
}

/// Feature kernel, optionally multiplied by a response kernel.
#[derive(Clone, Copy)]
pub(crate) struct PairKernel<'a> {
    pub feature: &'a Kernel,
    pub response: Option<&'a Kernel>,
}

/// A point set with optional responses, borrowed.
#[derive(Clone, Copy)]
pub(crate) struct Sample<'a> {
    pub x: &'a Matrix,
    pub y: Option<&'a Matrix>,
}

impl<'a> Sample<'a> {
    pub fn plain(x: &'a Matrix) -> Self {
        Self { x, y: None }
    }

    pub fn labelled(s: &'a LabelledSet) -> Self {
        Self {
            x: &s.features,
            y: Some(&s.responses),
        }
    }

    fn n(&self) -> usize {
        self.x.nrows()
    }
}

fn canonical_cmp(a: &Sample, b: &Sample) -> Ordering {
    let key = |s: &Sample| (s.x.nrows(), s.x.ncols());
    key(a).cmp(&key(b)).then_with(|| {
        let lex = |u: &Matrix, v: &Matrix| {
            u.as_slice()
                .iter()
                .zip(v.as_slice())
                .map(|(p, q)| p.total_cmp(q))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        };
        lex(a.x, b.x).then_with(|| match (a.y, b.y) {
            (Some(ya), Some(yb)) if ya.shape() == yb.shape() => lex(ya, yb),
            _ => Ordering::Equal,
        })
    })
}

impl<'a> PairKernel<'a> {
    pub fn marginal(kernel: &'a Kernel) -> Self {
        Self {
            feature: kernel,
            response: None,
        }
    }

    fn check(&self, a: &Sample, b: &Sample) -> Result<()> {
        if a.n() == 0 || b.n() == 0 {
            return Err(Error::EmptyInput("discrepancy between empty sets".into()));
        }
        if a.x.ncols() != b.x.ncols() {
            return Err(mismatch(format!(
                "comparing {}-d and {}-d points",
                a.x.ncols(),
                b.x.ncols()
            )));
        }
        if let Some(dim) = self.feature.input_dim() {
            if a.x.ncols() != dim {
                return Err(mismatch(format!(
                    "kernel expects {dim}-d points, got {}",
                    a.x.ncols()
                )));
            }
        }
        if let Kernel::TensorProduct { feature_dim, .. } = self.feature {
            if a.x.ncols() <= *feature_dim {
                return Err(mismatch("tensor-product input without response columns"));
            }
        }
        if self.response.is_some() {
            match (a.y, b.y) {
                (Some(ya), Some(yb)) => {
                    if ya.nrows() != a.n() || yb.nrows() != b.n() {
                        return Err(mismatch("responses not row-aligned with features"));
                    }
                    if ya.ncols() != yb.ncols() {
                        return Err(mismatch(format!(
                            "comparing {}-d and {}-d responses",
                            ya.ncols(),
                            yb.ncols()
                        )));
                    }
                }
                _ => return Err(invalid("joint discrepancy requires responses on both sides")),
            }
        }
        Ok(())
    }

    /// `ΣᵢΣⱼ k(aᵢ,bⱼ)·l(a′ᵢ,b′ⱼ)` summed row by row in index order.
    fn sum(&self, a: &Sample, b: &Sample) -> f64 {
        if let Kernel::PullBack { base, decoder } = self.feature {
            let da = decoder.decoder().decode_rows(a.x);
            let db = decoder.decoder().decode_rows(b.x);
            let inner = PairKernel {
                feature: base,
                response: self.response,
            };
            return inner.sum(&Sample { x: &da, y: a.y }, &Sample { x: &db, y: b.y });
        }
        if self.is_plain_quadratic() {
            return quadratic_sum(a.x, b.x);
        }
        let mut total = 0.0;
        for i in 0..a.n() {
            let ai = a.x.row(i);
            let mut row = 0.0;
            for j in 0..b.n() {
                let mut v = self.feature.value(ai, b.x.row(j));
                if let (Some(l), Some(ya), Some(yb)) = (self.response, a.y, b.y) {
                    v *= l.value(ya.row(i), yb.row(j));
                }
                row += v;
            }
            total += row;
        }
        total
    }

    pub fn mean_self(&self, a: &Sample) -> f64 {
        let n = a.n() as f64;
        self.sum(a, a) / (n * n)
    }

    /// Squared discrepancy; exactly symmetric in its arguments.
    pub fn discrepancy(&self, a: &Sample, b: &Sample) -> Result<f64> {
        self.check(a, b)?;
        let (first, second) = if canonical_cmp(a, b) == Ordering::Greater {
            (b, a)
        } else {
            (a, b)
        };
        let (n, m) = (first.n() as f64, second.n() as f64);
        let cross = self.sum(first, second) / (n * m);
        let own = self.mean_self(a) + self.mean_self(b);
        Ok(clamp_sq(own - 2.0 * cross))
    }

    /// Sums `ΣΣk(e,z)·l` and `ΣΣk(z,z′)·l` together with the gradient of the
    /// squared discrepancy with respect to the rows of `z` (and of its
    /// responses when a response kernel is present).
    pub fn grads(&self, e: &Sample, z: &Sample) -> Result<GradParts> {
        self.feature.require_differentiable()?;
        if let Some(l) = self.response {
            l.require_differentiable()?;
        }
        self.check(e, z)?;
        let (n, m) = (e.n(), z.n());
        let p = z.x.ncols();
        let q = z.y.map_or(0, |y| y.ncols());
        let self_coef = 2.0 / (m as f64 * m as f64);
        let cross_coef = -2.0 / (n as f64 * m as f64);
        if self.is_plain_quadratic() {
            return Ok(quadratic_grads(e.x, z.x, self_coef, cross_coef));
        }

        let mut gz = Matrix::zeros(m, p);
        let mut gw = self.response.map(|_| Matrix::zeros(m, q));
        let mut scratch = vec![0.0; q];
        let mut s_zz = 0.0;
        let mut s_ez = 0.0;

        for j in 0..m {
            let zj = z.x.row(j);
            let mut row_zz = 0.0;
            for l in 0..m {
                row_zz += self.accumulate(
                    zj,
                    z.x.row(l),
                    z.y.map(|y| (y.row(j), y.row(l))),
                    self_coef,
                    gz.row_mut(j),
                    gw.as_mut().map(|g| g.row_mut(j)),
                    &mut scratch,
                );
            }
            s_zz += row_zz;
            let mut row_ez = 0.0;
            for i in 0..n {
                row_ez += self.accumulate(
                    zj,
                    e.x.row(i),
                    z.y.zip(e.y).map(|(zy, ey)| (zy.row(j), ey.row(i))),
                    cross_coef,
                    gz.row_mut(j),
                    gw.as_mut().map(|g| g.row_mut(j)),
                    &mut scratch,
                );
            }
            s_ez += row_ez;
        }
        Ok(GradParts {
            s_ez,
            s_zz,
            grad_features: gz,
            grad_responses: gw,
        })
    }

    fn is_plain_quadratic(&self) -> bool {
        matches!(self.feature, Kernel::Quadratic) && self.response.is_none()
    }

    /// Adds `coef·∇ₓ[k(x,x′)·l(w,w′)]` into `gx` (and the `w` gradient into
    /// `gw`), returning the product kernel value.
    #[allow(clippy::too_many_arguments)]
    fn accumulate(
        &self,
        x: &[f64],
        xp: &[f64],
        resp: Option<(&[f64], &[f64])>,
        coef: f64,
        gx: &mut [f64],
        gw: Option<&mut [f64]>,
        scratch: &mut [f64],
    ) -> f64 {
        match (self.response, resp) {
            (Some(l), Some((w, wp))) => {
                scratch.iter_mut().for_each(|s| *s = 0.0);
                let lv = l.accumulate_grad(w, wp, 1.0, scratch);
                let kv = self.feature.accumulate_grad(x, xp, coef * lv, gx);
                if let Some(gw) = gw {
                    let c = coef * kv;
                    for (g, s) in gw.iter_mut().zip(scratch.iter()) {
                        *g += c * s;
                    }
                }
                kv * lv
            }
            _ => self.feature.accumulate_grad(x, xp, coef, gx),
        }
    }
}

/// `ΣᵢΣⱼ (1 + aᵢᵀbⱼ)² = n_a·n_b + 2·s_aᵀs_b + ⟨AᵀA, BᵀB⟩_F`, linear in the sample sizes.
fn quadratic_sum(a: &Matrix, b: &Matrix) -> f64 {
    let sa = column_sums(a);
    let sb = column_sums(b);
    let ma = a.tr_matmul(a).expect("square");
    let mb = b.tr_matmul(b).expect("square");
    let fro = dot(ma.as_slice(), mb.as_slice());
    (a.nrows() * b.nrows()) as f64 + 2.0 * dot(&sa, &sb) + fro
}

/// Moment form of the gradient: `Σₗ ∇k(z, zₗ) = 2(s_Z + ZᵀZ z)`.
fn quadratic_grads(e: &Matrix, z: &Matrix, self_coef: f64, cross_coef: f64) -> GradParts {
    let (sz, se) = (column_sums(z), column_sums(e));
    let mz = z.tr_matmul(z).expect("square");
    let me = e.tr_matmul(e).expect("square");
    let mut gz = Matrix::zeros(z.nrows(), z.ncols());
    for (j, zj) in z.rows().enumerate() {
        let g = gz.row_mut(j);
        for c in 0..zj.len() {
            let self_part = sz[c] + dot(mz.row(c), zj);
            let cross_part = se[c] + dot(me.row(c), zj);
            g[c] = 2.0 * (self_coef * self_part + cross_coef * cross_part);
        }
    }
    GradParts {
        s_ez: quadratic_sum(e, z),
        s_zz: quadratic_sum(z, z),
        grad_features: gz,
        grad_responses: None,
    }
}

fn column_sums(a: &Matrix) -> Vec<f64> {
    let mut s = vec![0.0; a.ncols()];
    for r in a.rows() {
        for (acc, v) in s.iter_mut().zip(r) {
            *acc += v;
        }
    }
    s
}

pub(crate) struct GradParts {
    pub s_ez: f64,
    pub s_zz: f64,
    pub grad_features: Matrix,
    pub grad_responses: Option<Matrix>,
}

pub fn mmd_sq(kernel: &Kernel, a: &Matrix, b: &Matrix) -> Result<f64> {
    PairKernel::marginal(kernel).discrepancy(&Sample::plain(a), &Sample::plain(b))
}

/// Discrepancy between data and its row-aligned reconstruction.
pub fn rmmd_sq(kernel: &Kernel, x: &Matrix, x_recon: &Matrix) -> Result<f64> {
    same_shape(x, x_recon)?;
    mmd_sq(kernel, x, x_recon)
}

/// Discrepancy between encoded data and a latent compressed set.
pub fn emmd_sq(kernel: &Kernel, encoded: &Matrix, z: &Matrix) -> Result<f64> {
    if z.is_empty() {
        return Err(Error::EmptyInput("compressed set is empty".into()));
    }
    mmd_sq(kernel, encoded, z)
}

/// Discrepancy between data and the decoded compressed set.
pub fn dmmd_sq(kernel: &Kernel, x: &Matrix, z_decoded: &Matrix) -> Result<f64> {
    if x.ncols() != z_decoded.ncols() {
        return Err(mismatch(format!(
            "data is {}-d but decoded set is {}-d",
            x.ncols(),
            z_decoded.ncols()
        )));
    }
    mmd_sq(kernel, x, z_decoded)
}

/// Squared discrepancy under the product kernel `k(x,x′)·l(y,y′)`.
pub fn joint_mmd_sq(
    feature_kernel: &Kernel,
    response_kernel: &Kernel,
    a: &LabelledSet,
    b: &LabelledSet,
) -> Result<f64> {
    PairKernel {
        feature: feature_kernel,
        response: Some(response_kernel),
    }
    .discrepancy(&Sample::labelled(a), &Sample::labelled(b))
}

/// Mean squared reconstruction error averaged over rows and coordinates.
pub fn msre(x: &Matrix, x_recon: &Matrix) -> Result<f64> {
    same_shape(x, x_recon)?;
    if x.is_empty() || x.ncols() == 0 {
        return Err(Error::EmptyInput("reconstruction error of an empty set".into()));
    }
    let total: f64 = x.rows().zip(x_recon.rows()).map(|(a, b)| sq_dist(a, b)).sum();
    Ok(total / (x.nrows() * x.ncols()) as f64)
}

/// RMMD² plus mean squared reconstruction error, with unit weights.
pub fn hybrid_loss(kernel: &Kernel, x: &Matrix, x_recon: &Matrix) -> Result<f64> {
    Ok(rmmd_sq(kernel, x, x_recon)? + msre(x, x_recon)?)
}

/// `∂ emmd_sq(kernel, E, Z) / ∂Z`.
pub fn emmd_grad(kernel: &Kernel, encoded: &Matrix, z: &Matrix) -> Result<Matrix> {
    Ok(PairKernel::marginal(kernel)
        .grads(&Sample::plain(encoded), &Sample::plain(z))?
        .grad_features)
}

/// Gradients of the joint discrepancy with respect to the compressed
/// features and the compressed responses.
pub fn joint_emmd_grad(
    feature_kernel: &Kernel,
    response_kernel: &Kernel,
    encoded: &LabelledSet,
    z: &LabelledSet,
) -> Result<(Matrix, Matrix)> {
    let parts = PairKernel {
        feature: feature_kernel,
        response: Some(response_kernel),
    }
    .grads(&Sample::labelled(encoded), &Sample::labelled(z))?;
    Ok((
        parts.grad_features,
        parts.grad_responses.expect("response gradient requested"),
    ))
}

/// For the RKHS function `f = Σ wᵢ k(cᵢ, ·)` returns
/// `(|mean_A f − mean_B f|, ‖f‖·sqrt(mmd_sq(A, B)))`; the first never exceeds
/// the second.
pub fn integration_error(
    kernel: &Kernel,
    weights: &[f64],
    centers: &Matrix,
    a: &Matrix,
    b: &Matrix,
) -> Result<(f64, f64)> {
    if weights.len() != centers.nrows() {
        return Err(mismatch(format!(
            "{} weights for {} centres",
            weights.len(),
            centers.nrows()
        )));
    }
    if centers.ncols() != a.ncols() {
        return Err(mismatch("centres and samples differ in dimension"));
    }
    let cc = gram(kernel, centers, centers)?;
    let mut norm_sq = 0.0;
    for (i, wi) in weights.iter().enumerate() {
        for (j, wj) in weights.iter().enumerate() {
            norm_sq += wi * wj * cc[(i, j)];
        }
    }
    let mean_f = |s: &Matrix| -> Result<f64> {
        let g = gram(kernel, s, centers)?;
        let total: f64 = g
            .rows()
            .map(|r| r.iter().zip(weights).map(|(k, w)| k * w).sum::<f64>())
            .sum();
        Ok(total / s.nrows() as f64)
    };
    let gap = (mean_f(a)? - mean_f(b)?).abs();
    let bound = norm_sq.max(0.0).sqrt() * mmd_sq(kernel, a, b)?.max(0.0).sqrt();
    Ok((gap, bound))
}

fn same_shape(a: &Matrix, b: &Matrix) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(mismatch(format!(
            "data shape {:?} differs from reconstruction shape {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(())
}

/// EMMD² against fixed encoded data, with the data–data term computed once.
///
/// The compressed set changes every descent step while the encoded data do
/// not, so each evaluation costs `O((n + m)·m·p)`.
pub struct EmmdObjective<'a> {
    kernel: PairKernel<'a>,
    encoded: Sample<'a>,
    data_term: f64,
}

impl<'a> EmmdObjective<'a> {
    pub fn new(kernel: &'a Kernel, encoded: &'a Matrix) -> Result<Self> {
        Self::build(PairKernel::marginal(kernel), Sample::plain(encoded))
    }

    pub fn joint(
        feature_kernel: &'a Kernel,
        response_kernel: &'a Kernel,
        encoded: &'a LabelledSet,
    ) -> Result<Self> {
        Self::build(
            PairKernel {
                feature: feature_kernel,
                response: Some(response_kernel),
            },
            Sample::labelled(encoded),
        )
    }

    fn build(kernel: PairKernel<'a>, encoded: Sample<'a>) -> Result<Self> {
        if encoded.n() == 0 {
            return Err(Error::EmptyInput("encoded data is empty".into()));
        }
        let data_term = kernel.mean_self(&encoded);
        Ok(Self {
            kernel,
            encoded,
            data_term,
        })
    }

    pub fn data_term(&self) -> f64 {
        self.data_term
    }

    pub fn n(&self) -> usize {
        self.encoded.n()
    }

    pub fn encoded(&self) -> &Matrix {
        self.encoded.x
    }

    pub fn encoded_responses(&self) -> Option<&Matrix> {
        self.encoded.y
    }

    pub fn is_joint(&self) -> bool {
        self.kernel.response.is_some()
    }

    fn sample<'b>(&self, z: &'b Matrix, w: Option<&'b Matrix>) -> Result<Sample<'b>> {
        if self.is_joint() && w.is_none() {
            return Err(invalid("joint objective needs compressed responses"));
        }
        Ok(Sample {
            x: z,
            y: if self.is_joint() { w } else { None },
        })
    }

    pub fn value(&self, z: &Matrix, w: Option<&Matrix>) -> Result<f64> {
        let s = self.sample(z, w)?;
        self.kernel.check(&self.encoded, &s)?;
        let (n, m) = (self.encoded.n() as f64, s.n() as f64);
        let cross = self.kernel.sum(&self.encoded, &s) / (n * m);
        let own = self.kernel.mean_self(&s);
        Ok(clamp_sq(self.data_term + own - 2.0 * cross))
    }

    /// Objective value and its gradient with respect to the compressed
    /// features (and responses, for the joint objective).
    pub fn value_and_grad(&self, z: &Matrix, w: Option<&Matrix>) -> Result<(f64, Matrix, Option<Matrix>)> {
        let s = self.sample(z, w)?;
        let parts = self.kernel.grads(&self.encoded, &s)?;
        let (n, m) = (self.encoded.n() as f64, s.n() as f64);
        let value = clamp_sq(self.data_term + parts.s_zz / (m * m) - 2.0 * parts.s_ez / (n * m));
        Ok((value, parts.grad_features, parts.grad_responses))
    }
}

/// Reconstruction objective used to train autoencoders: either the plain
/// RMMD² or the joint RJMMD² where reconstructions keep their responses.
#[derive(Clone, Copy, Debug)]
pub enum ReconstructionKernel<'a> {
    Marginal(&'a Kernel),
    Joint {
        feature: &'a Kernel,
        response: &'a Kernel,
    },
}

impl<'a> ReconstructionKernel<'a> {
    pub(crate) fn pair(&self) -> PairKernel<'a> {
        match *self {
            ReconstructionKernel::Marginal(k) => PairKernel::marginal(k),
            ReconstructionKernel::Joint { feature, response } => PairKernel {
                feature,
                response: Some(response),
            },
        }
    }

    pub(crate) fn require_differentiable(&self) -> Result<()> {
        match self {
            ReconstructionKernel::Marginal(k) => k.require_differentiable(),
            ReconstructionKernel::Joint { feature, response } => {
                feature.require_differentiable()?;
                response.require_differentiable()
            }
        }
    }

    /// Discrepancy between `(x, y)` and `(x_recon, y)` and its gradient with
    /// respect to `x_recon`.
    pub(crate) fn value_and_grad(
        &self,
        x: &Matrix,
        y: Option<&Matrix>,
        x_recon: &Matrix,
    ) -> Result<(f64, Matrix)> {
        same_shape(x, x_recon)?;
        let pair = self.pair();
        let y = if pair.response.is_some() {
            Some(y.ok_or_else(|| invalid("joint reconstruction loss needs responses"))?)
        } else {
            None
        };
        let data = Sample { x, y };
        let recon = Sample { x: x_recon, y };
        let parts = pair.grads(&data, &recon)?;
        let n = x.nrows() as f64;
        let value = clamp_sq(pair.mean_self(&data) + parts.s_zz / (n * n) - 2.0 * parts.s_ez / (n * n));
        Ok((value, parts.grad_features))
    }
}
