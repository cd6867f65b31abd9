//! Latent compressed-set construction.
//!
//! A compressed set is seeded with the best of several uniform subsamples of
//! the encoded data and then moved by Adam on the encoded discrepancy until
//! the gradient norm falls below a threshold or the step budget runs out.

use crate::error::{invalid, mismatch, Error, Result};
use crate::estimators::{dmmd_sq, emmd_sq, rmmd_sq, EmmdObjective, LabelledSet};
use crate::kernels::Kernel;
use crate::matrix::Matrix;
use crate::model::Model;
use crate::optim::{Adam, AdamConfig};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompressConfig {
    /// Compressed set size.
    pub m: usize,
    /// Number of random seed candidates.
    pub candidates: usize,
    pub max_steps: usize,
    pub learning_rate: f64,
    /// Stop once the Frobenius norm of the full gradient drops below this.
    pub grad_tol: f64,
    pub seed: u64,
    pub adam: AdamConfig,
}

impl Default for CompressConfig {
    fn default() -> Self {
        Self {
            m: 50,
            candidates: 10,
            max_steps: 1000,
            learning_rate: 1e-2,
            grad_tol: 1e-8,
            seed: 0,
            adam: AdamConfig::default(),
        }
    }
}

impl CompressConfig {
    fn validate(&self, n: usize) -> Result<()> {
        if self.m == 0 {
            return Err(invalid("compressed set size must be positive"));
        }
        if self.m > n {
            return Err(invalid(format!(
                "compressed set size {} exceeds the {n} available points",
                self.m
            )));
        }
        if self.candidates == 0 {
            return Err(invalid("need at least one seed candidate"));
        }
        if !(self.grad_tol > 0.0) {
            return Err(invalid("gradient tolerance must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(invalid("learning rate must be positive"));
        }
        Ok(())
    }
}

/// Outcome of best-of-C seeding.
#[derive(Clone, Debug)]
pub struct SeedSelection {
    pub points: Matrix,
    pub responses: Option<Matrix>,
    /// Row indices of the chosen candidate.
    pub indices: Vec<usize>,
    /// Index of the chosen candidate.
    pub chosen: usize,
    /// Row indices of every drawn candidate, in draw order.
    pub candidates: Vec<Vec<usize>>,
    pub objectives: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HistoryEntry {
    pub step: usize,
    pub objective: f64,
    pub grad_norm: f64,
}

#[derive(Clone, Debug)]
pub struct CompressedSet {
    pub latents: Matrix,
    pub responses: Option<Matrix>,
    /// One entry per evaluated iterate; entry 0 is the seed.
    pub history: Vec<HistoryEntry>,
    pub seed_indices: Vec<usize>,
    pub seed_objective: f64,
    /// Objective of the returned (lowest-objective) iterate.
    pub final_objective: f64,
    /// Step at which the returned iterate was reached.
    pub best_step: usize,
    pub stopped_early: bool,
    /// Objective after one-hot projection of the responses, if applied.
    pub projected_objective: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResponseMode {
    Continuous,
    OneHot,
}

pub fn seed_select(encoded: &Matrix, cfg: &CompressConfig, kernel: &Kernel) -> Result<SeedSelection> {
    cfg.validate(encoded.nrows())?;
    let objective = EmmdObjective::new(kernel, encoded)?;
    seed_with(&objective, cfg)
}

pub fn seed_select_joint(
    encoded: &LabelledSet,
    cfg: &CompressConfig,
    feature_kernel: &Kernel,
    response_kernel: &Kernel,
) -> Result<SeedSelection> {
    cfg.validate(encoded.len())?;
    let objective = EmmdObjective::joint(feature_kernel, response_kernel, encoded)?;
    seed_with(&objective, cfg)
}

fn seed_with(objective: &EmmdObjective, cfg: &CompressConfig) -> Result<SeedSelection> {
    let n = objective.n();
    let mut rng = RngStream::new(cfg.seed);
    let mut candidates = Vec::with_capacity(cfg.candidates);
    let mut objectives = Vec::with_capacity(cfg.candidates);
    let mut chosen = 0;
    for c in 0..cfg.candidates {
        let idx = rng.sample_without_replacement(n, cfg.m);
        let z = objective.encoded().select_rows(&idx);
        let w = objective.encoded_responses().map(|y| y.select_rows(&idx));
        let value = objective.value(&z, w.as_ref())?;
        // strict comparison keeps the lowest index on ties
        if c == 0 || value < objectives[chosen] {
            chosen = c;
        }
        candidates.push(idx);
        objectives.push(value);
    }
    let indices = candidates[chosen].clone();
    Ok(SeedSelection {
        points: objective.encoded().select_rows(&indices),
        responses: objective.encoded_responses().map(|y| y.select_rows(&indices)),
        indices,
        chosen,
        candidates,
        objectives,
    })
}

/// Seeds and then descends the encoded discrepancy with Adam.
pub fn compress(encoded: &Matrix, cfg: &CompressConfig, kernel: &Kernel) -> Result<CompressedSet> {
    kernel.require_differentiable()?;
    cfg.validate(encoded.nrows())?;
    let objective = EmmdObjective::new(kernel, encoded)?;
    let seed = seed_with(&objective, cfg)?;
    descend(&objective, seed, cfg)
}

/// Joint descent over compressed features and responses. In one-hot mode the
/// responses are optimised in the continuous relaxation and projected back to
/// one-hot rows by argmax at the end.
pub fn compress_joint(
    encoded: &LabelledSet,
    cfg: &CompressConfig,
    feature_kernel: &Kernel,
    response_kernel: &Kernel,
    mode: ResponseMode,
) -> Result<CompressedSet> {
    feature_kernel.require_differentiable()?;
    response_kernel.require_differentiable()?;
    cfg.validate(encoded.len())?;
    if encoded.responses().ncols() == 0 {
        return Err(invalid("joint compression needs responses"));
    }
    if mode == ResponseMode::OneHot {
        validate_one_hot(encoded.responses())?;
    }
    let objective = EmmdObjective::joint(feature_kernel, response_kernel, encoded)?;
    let seed = seed_with(&objective, cfg)?;
    let mut out = descend(&objective, seed, cfg)?;
    if mode == ResponseMode::OneHot {
        let w = out.responses.as_ref().expect("joint descent keeps responses");
        let classes = w.ncols();
        let labels = argmax_rows(w);
        let projected = Matrix::from_fn(w.nrows(), classes, |i, j| if labels[i] == j { 1.0 } else { 0.0 });
        out.projected_objective = Some(objective.value(&out.latents, Some(&projected))?);
        out.responses = Some(projected);
    }
    Ok(out)
}

fn descend(objective: &EmmdObjective, seed: SeedSelection, cfg: &CompressConfig) -> Result<CompressedSet> {
    let mut z = seed.points;
    let mut w = seed.responses;
    let (m, p) = z.shape();
    let q = w.as_ref().map_or(0, |w| w.ncols());
    let mut adam = Adam::new(m * (p + q), cfg.learning_rate, cfg.adam);
    let mut params = z.as_slice().to_vec();
    if let Some(w) = &w {
        params.extend_from_slice(w.as_slice());
    }

    let mut history = Vec::new();
    let mut best: Option<(f64, usize, Matrix, Option<Matrix>)> = None;
    let mut stopped_early = false;
    for step in 0..=cfg.max_steps {
        let (value, gz, gw) = objective.value_and_grad(&z, w.as_ref())?;
        if !value.is_finite() {
            return Err(Error::Divergence {
                step,
                detail: format!("objective became {value}"),
            });
        }
        let mut norm_sq = gz.as_slice().iter().map(|v| v * v).sum::<f64>();
        if let Some(gw) = &gw {
            norm_sq += gw.as_slice().iter().map(|v| v * v).sum::<f64>();
        }
        let grad_norm = norm_sq.sqrt();
        history.push(HistoryEntry {
            step,
            objective: value,
            grad_norm,
        });
        if best.as_ref().is_none_or(|b| value < b.0) {
            best = Some((value, step, z.clone(), w.clone()));
        }
        if grad_norm < cfg.grad_tol {
            stopped_early = true;
            break;
        }
        if step == cfg.max_steps {
            break;
        }
        let mut grad = gz.into_vec();
        if let Some(gw) = gw {
            grad.extend_from_slice(gw.as_slice());
        }
        adam.apply(&mut params, &grad);
        z = Matrix::new(m, p, params[..m * p].to_vec())?;
        if q > 0 {
            w = Some(Matrix::new(m, q, params[m * p..].to_vec())?);
        }
    }
    let (final_objective, best_step, latents, responses) = best.expect("at least one step evaluated");
    Ok(CompressedSet {
        latents,
        responses,
        seed_objective: history[0].objective,
        history,
        seed_indices: seed.indices,
        final_objective,
        best_step,
        stopped_early,
        projected_objective: None,
    })
}

fn validate_one_hot(y: &Matrix) -> Result<()> {
    for (i, r) in y.rows().enumerate() {
        let ones = r.iter().filter(|&&v| v == 1.0).count();
        let zeros = r.iter().filter(|&&v| v == 0.0).count();
        if ones != 1 || ones + zeros != r.len() {
            return Err(invalid(format!("response row {i} is not a one-hot vector")));
        }
    }
    Ok(())
}

/// Per-row argmax, ties to the lowest index.
pub fn argmax_rows(w: &Matrix) -> Vec<usize> {
    w.rows()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
                .0
        })
        .collect()
}

/// Discrepancies of a compressed set and the ambient bound built from them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvaluationReport {
    pub rmmd_sq: f64,
    pub emmd_sq: f64,
    pub dmmd_sq: f64,
    /// `(√rmmd_sq + √emmd_sq)²`.
    pub bound: f64,
    /// `dmmd_sq ≤ bound + 1e-9`, reported only when the latent kernel is the
    /// pull-back of the ambient kernel (otherwise the bound need not hold).
    pub bound_satisfied: Option<bool>,
}

pub const BOUND_SLACK: f64 = 1e-9;

/// The latent kernel `k(φ(z), φ(z′))` induced by the model's decoder.
pub fn pull_back_kernel(ambient: &Kernel, model: &Model) -> Kernel {
    Kernel::pull_back(ambient.clone(), model.decoder_handle())
}

pub fn evaluate(
    x: &Matrix,
    model: &Model,
    latents: &Matrix,
    kernel_ambient: &Kernel,
    kernel_latent: &Kernel,
) -> Result<EvaluationReport> {
    if x.ncols() != model.ambient_dim() {
        return Err(mismatch(format!(
            "model expects {}-d data, got {}",
            model.ambient_dim(),
            x.ncols()
        )));
    }
    if latents.ncols() != model.latent_dim() {
        return Err(mismatch(format!(
            "model has {} latent dimensions, compressed set has {}",
            model.latent_dim(),
            latents.ncols()
        )));
    }
    let encoded = model.encode(x)?;
    let recon = model.decode(&encoded)?;
    let decoded = model.decode(latents)?;
    let rmmd = rmmd_sq(kernel_ambient, x, &recon)?;
    let emmd = emmd_sq(kernel_latent, &encoded, latents)?;
    let dmmd = dmmd_sq(kernel_ambient, x, &decoded)?;
    let bound = (rmmd.sqrt() + emmd.sqrt()).powi(2);
    let bound_satisfied = match kernel_latent {
        Kernel::PullBack { .. } => Some(dmmd <= bound + BOUND_SLACK),
        _ => None,
    };
    Ok(EvaluationReport {
        rmmd_sq: rmmd,
        emmd_sq: emmd,
        dmmd_sq: dmmd,
        bound,
        bound_satisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::{orthonormalize, StiefelPoint};

    fn random(rng: &mut RngStream, n: usize, d: usize) -> Matrix {
        Matrix::from_fn(n, d, |_, _| rng.normal())
    }

    fn cfg(m: usize, candidates: usize) -> CompressConfig {
        CompressConfig {
            m,
            candidates,
            max_steps: 200,
            learning_rate: 0.05,
            grad_tol: 1e-8,
            seed: 4,
            adam: AdamConfig::default(),
        }
    }

    #[test]
    fn seed_rows_come_from_the_data() {
        let mut rng = RngStream::new(1);
        let e = random(&mut rng, 30, 2);
        let k = Kernel::gaussian(1.0).unwrap();
        let s = seed_select(&e, &cfg(5, 1), &k).unwrap();
        assert_eq!(s.chosen, 0);
        for (row, &i) in s.points.rows().zip(&s.indices) {
            assert_eq!(row, e.row(i));
        }
        assert!(seed_select(&e, &cfg(31, 1), &k).is_err());
    }

    #[test]
    fn full_size_candidates_all_tie_at_zero() {
        let mut rng = RngStream::new(2);
        let e = random(&mut rng, 8, 2);
        let k = Kernel::gaussian(1.0).unwrap();
        let s = seed_select(&e, &cfg(8, 5), &k).unwrap();
        assert_eq!(s.chosen, 0);
        assert!(s.objectives.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn seeding_picks_the_minimum_candidate() {
        let mut rng = RngStream::new(3);
        let e = random(&mut rng, 6, 2);
        let k = Kernel::gaussian(0.8).unwrap();
        let s = seed_select(&e, &cfg(2, 15), &k).unwrap();
        let recomputed: Vec<f64> = s
            .candidates
            .iter()
            .map(|idx| emmd_sq(&k, &e, &e.select_rows(idx)).unwrap())
            .collect();
        let min = recomputed.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((recomputed[s.chosen] - min).abs() < 1e-14);
    }

    #[test]
    fn full_subset_stops_immediately() {
        let mut rng = RngStream::new(4);
        let e = random(&mut rng, 10, 2);
        let k = Kernel::gaussian(1.0).unwrap();
        let out = compress(&e, &cfg(10, 1), &k).unwrap();
        assert!(out.stopped_early);
        assert!(out.history.len() <= 2);
        assert!(out.history.last().unwrap().grad_norm < 1e-8);
    }

    #[test]
    fn descent_improves_on_seed_and_is_deterministic() {
        let mut rng = RngStream::new(5);
        let e = random(&mut rng, 80, 2);
        let k = Kernel::gaussian(1.0).unwrap();
        let a = compress(&e, &cfg(4, 3), &k).unwrap();
        let b = compress(&e, &cfg(4, 3), &k).unwrap();
        assert_eq!(a.latents, b.latents);
        assert!(a.final_objective <= a.seed_objective + 1e-12);
        assert!(a.final_objective < 0.5 * a.seed_objective);
        assert!((emmd_sq(&k, &e, &a.latents).unwrap() - a.final_objective).abs() < 1e-12);
        if a.stopped_early {
            assert!(a.history.last().unwrap().grad_norm < 1e-8);
        }
    }

    #[test]
    fn non_differentiable_kernel_is_rejected() {
        let e = Matrix::zeros(4, 2);
        let pb = Kernel::pull_back(Kernel::gaussian(1.0).unwrap(), StiefelPoint::identity(2).decoder_handle());
        assert!(matches!(compress(&e, &cfg(2, 1), &pb), Err(Error::Unsupported(_))));
    }

    #[test]
    fn constant_responses_reproduce_marginal_trajectory() {
        let mut rng = RngStream::new(6);
        let e = random(&mut rng, 40, 2);
        let k = Kernel::gaussian(1.0).unwrap();
        let l = Kernel::gaussian(0.5).unwrap();
        let labelled = LabelledSet::new(e.clone(), Matrix::from_rows(&[[0.3]; 40]).unwrap()).unwrap();
        let c = cfg(3, 4);
        let a = compress(&e, &c, &k).unwrap();
        let b = compress_joint(&labelled, &c, &k, &l, ResponseMode::Continuous).unwrap();
        assert!(a.latents.sub(&b.latents).unwrap().max_abs() < 1e-10);
        assert_eq!(a.history.len(), b.history.len());
    }

    #[test]
    fn one_hot_responses_are_projected() {
        let mut rng = RngStream::new(7);
        let e = random(&mut rng, 30, 2);
        let labels: Vec<usize> = (0..30).map(|i| i % 3).collect();
        let y = Matrix::from_fn(30, 3, |i, j| if labels[i] == j { 1.0 } else { 0.0 });
        let set = LabelledSet::new(e, y).unwrap();
        let k = Kernel::gaussian(1.0).unwrap();
        let l = Kernel::gaussian(1.0).unwrap();
        let out = compress_joint(&set, &cfg(6, 2), &k, &l, ResponseMode::OneHot).unwrap();
        let w = out.responses.unwrap();
        for r in w.rows() {
            assert_eq!(r.iter().filter(|&&v| v == 1.0).count(), 1);
            assert_eq!(r.iter().filter(|&&v| v == 0.0).count(), 2);
        }
        assert!(out.projected_objective.is_some());

        let bad = LabelledSet::new(Matrix::zeros(3, 2), Matrix::from_rows(&[[0.5, 0.5]; 3]).unwrap()).unwrap();
        assert!(compress_joint(&bad, &cfg(2, 1), &k, &l, ResponseMode::OneHot).is_err());
    }

    #[test]
    fn argmax_ties_go_low() {
        let w = Matrix::from_rows(&[[0.1, 0.7, 0.2], [0.3, 0.3, 0.4], [0.5, 0.5, 0.0]]).unwrap();
        assert_eq!(argmax_rows(&w), vec![1, 2, 0]);
    }

    #[test]
    fn evaluation_of_exact_encoding_is_zero() {
        let mut rng = RngStream::new(8);
        let x = random(&mut rng, 12, 3);
        let model = Model::Linear(StiefelPoint::identity(3));
        let k = Kernel::gaussian(1.0).unwrap();
        let z = model.encode(&x).unwrap();
        let r = evaluate(&x, &model, &z, &k, &pull_back_kernel(&k, &model)).unwrap();
        assert_eq!((r.rmmd_sq, r.emmd_sq, r.dmmd_sq), (0.0, 0.0, 0.0));
        assert_eq!(r.bound_satisfied, Some(true));
        let plain = evaluate(&x, &model, &z, &k, &k).unwrap();
        assert_eq!(plain.bound_satisfied, None);
    }

    #[test]
    fn pull_back_bound_holds_on_random_configurations() {
        let mut rng = RngStream::new(9);
        let k = Kernel::gaussian(1.2).unwrap();
        for _ in 0..20 {
            let x = random(&mut rng, 15, 4);
            let v = orthonormalize(&random(&mut rng, 4, 2)).unwrap();
            let model = Model::Linear(v);
            let z = random(&mut rng, 5, 2);
            let r = evaluate(&x, &model, &z, &k, &pull_back_kernel(&k, &model)).unwrap();
            assert_eq!(r.bound_satisfied, Some(true));
            assert!((r.bound - (r.rmmd_sq.sqrt() + r.emmd_sq.sqrt()).powi(2)).abs() < 1e-12);
        }
    }
}
