use std::fs;

use anyhow::{Context, Result};
use serde::Serialize;

use bdc::compression::{self, CompressConfig, ResponseMode};
use bdc::data::{self, Table, TanhNetwork};
use bdc::estimators::LabelledSet;
use bdc::exact_gaussian::{exact_mmd_sq_vs_points, GaussianMixture};
use bdc::kernels::Kernel;
use bdc::linear::{self, LinearInit, TrainConfig};
use bdc::mlp;
use bdc::model::Model;
use bdc::Matrix;

use crate::kernel_spec::describe;
use crate::output::{out_path, prepare_dir, write_json, write_json_lines, Manifest};
use crate::{
    Arch, CompressArgs, Dataset, EvaluateArgs, GenerateArgs, Init, Projection, ResponseModeArg, TrainArgs,
    UsageError,
};

pub const DATA_FILE: &str = "data.csv";
pub const PROJECTION_FILE: &str = "projection.csv";
pub const MIXTURE_FILE: &str = "mixture.txt";
pub const MODEL_FILE: &str = "model.txt";
pub const TRAIN_LOG: &str = "train_log.jsonl";
pub const COMPRESSED_FILE: &str = "compressed.csv";
pub const DECODED_FILE: &str = "decoded.csv";
pub const COMPRESS_LOG: &str = "compress_log.jsonl";
pub const REPORT_FILE: &str = "report.json";

fn usage(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(UsageError(msg.into()))
}

fn named(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|j| format!("{prefix}{j}")).collect()
}

fn save_with_responses(
    path: &std::path::Path,
    features: &Matrix,
    prefix: &str,
    responses: Option<&Matrix>,
) -> Result<()> {
    let mut header = named(prefix, features.ncols());
    let table = match responses {
        Some(y) => {
            header.extend(named("y", y.ncols()));
            features.hstack(y)?
        }
        None => features.clone(),
    };
    data::save_csv(path, &table, &header).with_context(|| format!("writing {}", path.display()))
}

fn load_table(path: &std::path::Path) -> Result<Table> {
    data::load_csv(path).with_context(|| format!("reading {}", path.display()))
}

pub fn generate(a: &GenerateArgs) -> Result<()> {
    let mut manifest = Manifest::new("generate");
    prepare_dir(&a.out_dir)?;
    let (base, responses, mixture) = match a.dataset {
        Dataset::GaussianMixture => {
            let (x, gm) = data::gen_gaussian_mixture_2d(a.n, a.seed)?;
            (x, None, Some(gm))
        }
        Dataset::SwissRoll => {
            let s = data::gen_swiss_roll_with(a.n, a.seed, a.noise_sd)?;
            (s.points, Some(Matrix::column(&s.responses)), None)
        }
    };
    let (features, mixture) = match a.ambient_dim {
        None => (base, mixture),
        Some(dim) => match a.projection {
            Projection::Linear => {
                let (xp, p) = data::project_random_gaussian(&base, dim, a.seed)?;
                data::save_csv(out_path(&a.out_dir, PROJECTION_FILE), &p, &named("p", dim))?;
                let pushed = mixture.map(|gm| gm.pushforward_linear(&p)).transpose()?;
                (xp, pushed)
            }
            Projection::Tanh => {
                if dim < base.ncols() {
                    return Err(usage(format!("ambient dimension {dim} is below {}", base.ncols())));
                }
                let net = TanhNetwork::random(base.ncols(), a.projection_hidden, dim, a.seed)?;
                (net.apply(&base)?, None)
            }
        },
    };
    let data_path = out_path(&a.out_dir, DATA_FILE);
    save_with_responses(&data_path, &features, "x", responses.as_ref())?;
    if let Some(gm) = &mixture {
        fs::write(out_path(&a.out_dir, MIXTURE_FILE), gm.to_text())?;
    }

    manifest.set("dataset", format!("{:?}", a.dataset));
    manifest.set("n", a.n);
    manifest.set("seed", a.seed);
    manifest.set("ambient_dim", a.ambient_dim.map_or("none".into(), |d| d.to_string()));
    manifest.set("projection", format!("{:?}", a.projection));
    manifest.set("projection_hidden", a.projection_hidden);
    manifest.set("noise_sd", format!("{:?}", a.noise_sd));
    manifest.set_path("out_dir", &a.out_dir);
    manifest.set_path("data_file", &data_path);
    manifest.set("features", features.ncols());
    manifest.set("responses", responses.as_ref().map_or(0, |y| y.ncols()));
    manifest.set("mixture_file", mixture.is_some());
    manifest.write(&a.out_dir)
}

#[derive(Serialize)]
struct EpochRecord {
    epoch: usize,
    loss: f64,
}

pub fn train_ae(a: &TrainArgs) -> Result<()> {
    let mut manifest = Manifest::new("train-ae");
    let table = load_table(&a.data)?;
    let (x, y) = table.split_responses();
    let d = x.ncols();
    if a.latent_dim == 0 || a.latent_dim > d {
        return Err(usage(format!("latent dimension {} must lie in 1..={d}", a.latent_dim)));
    }
    let responses = match (a.labelled, y) {
        (true, None) => return Err(usage("--labelled needs y0.. response columns in the data")),
        (true, Some(y)) => Some(y),
        (false, _) => None,
    };
    prepare_dir(&a.out_dir)?;
    let kernel = a.kernel.resolve(&x, a.seed)?;
    let response_kernel = responses.as_ref().map(|y| a.response_kernel.resolve(y, a.seed)).transpose()?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        seed: a.seed,
        ..TrainConfig::default()
    };

    let (model, losses, steps) = match a.arch {
        Arch::Linear => {
            let init = match a.init {
                Init::Pca => LinearInit::Pca,
                Init::Gaussian => LinearInit::GaussianRandom,
            };
            let run = match (&responses, &response_kernel) {
                (Some(y), Some(l)) => linear::train_linear_joint(&x, y, a.latent_dim, &kernel, l, &cfg, init)?,
                _ => linear::train_linear(&x, a.latent_dim, &kernel, &cfg, init)?,
            };
            manifest.set("max_orthonormality_error", format!("{:?}", run.max_orthonormality_error));
            (Model::Linear(run.model), run.epoch_losses, run.steps)
        }
        Arch::Mlp => {
            let hidden = &a.hidden.0;
            let run = match (&responses, &response_kernel) {
                (Some(y), Some(l)) => mlp::train_nonlinear_joint(&x, y, hidden, a.latent_dim, &kernel, l, &cfg)?,
                _ => mlp::train_nonlinear(&x, hidden, a.latent_dim, &kernel, &cfg)?,
            };
            (Model::Mlp(run.model), run.epoch_losses, run.steps)
        }
    };

    let model_path = out_path(&a.out_dir, MODEL_FILE);
    model.save(&model_path)?;
    let log: Vec<EpochRecord> = losses
        .iter()
        .enumerate()
        .map(|(i, &loss)| EpochRecord { epoch: i + 1, loss })
        .collect();
    write_json_lines(&out_path(&a.out_dir, TRAIN_LOG), &log)?;

    manifest.set_path("data", &a.data);
    manifest.set("arch", format!("{:?}", a.arch));
    manifest.set("latent_dim", a.latent_dim);
    manifest.set("epochs", a.epochs);
    manifest.set("batch_size", a.batch_size);
    manifest.set("lr", format!("{:?}", a.lr));
    manifest.set("kernel_spec", a.kernel);
    manifest.set("kernel", describe(&kernel));
    manifest.set("labelled", a.labelled);
    manifest.set(
        "response_kernel",
        response_kernel.as_ref().map_or("none".into(), describe),
    );
    manifest.set("seed", a.seed);
    manifest.set("init", format!("{:?}", a.init));
    manifest.set(
        "hidden",
        a.hidden.0.iter().map(ToString::to_string).collect::<Vec<_>>().join(","),
    );
    manifest.set("steps", steps);
    manifest.set("final_loss", losses.last().map_or("none".into(), |l| format!("{l:?}")));
    manifest.set_path("model_file", &model_path);
    manifest.write(&a.out_dir)
}

#[derive(Serialize)]
struct StepRecord {
    step: usize,
    emmd_sq: f64,
    grad_norm: f64,
}

fn load_model(path: &std::path::Path) -> Result<Model> {
    Model::load(path).with_context(|| format!("loading model {}", path.display()))
}

pub fn compress(a: &CompressArgs) -> Result<()> {
    let mut manifest = Manifest::new("compress");
    let table = load_table(&a.data)?;
    let (x, y) = table.split_responses();
    let model = load_model(&a.model)?;
    if x.ncols() != model.ambient_dim() {
        anyhow::bail!(
            "model expects {} feature columns, data has {}",
            model.ambient_dim(),
            x.ncols()
        );
    }
    if a.m > x.nrows() {
        return Err(usage(format!("m = {} exceeds the {} data rows", a.m, x.nrows())));
    }
    let responses = match (a.labelled, y) {
        (true, None) => return Err(usage("--labelled needs y0.. response columns in the data")),
        (true, Some(y)) => Some(y),
        (false, _) => None,
    };
    prepare_dir(&a.out_dir)?;
    let encoded = model.encode(&x)?;
    let kernel = a.kernel.resolve(&encoded, a.seed)?;
    let cfg = CompressConfig {
        m: a.m,
        candidates: a.candidates,
        max_steps: a.max_steps,
        learning_rate: a.lr,
        grad_tol: a.grad_tol,
        seed: a.seed,
        ..CompressConfig::default()
    };
    let mut response_kernel = None;
    let out = match responses {
        Some(y) => {
            let l = a.response_kernel.resolve(&y, a.seed)?;
            let mode = match a.response_mode {
                ResponseModeArg::Continuous => ResponseMode::Continuous,
                ResponseModeArg::OneHot => ResponseMode::OneHot,
            };
            let set = LabelledSet::new(encoded, y)?;
            let out = compression::compress_joint(&set, &cfg, &kernel, &l, mode)?;
            response_kernel = Some(l);
            out
        }
        None => compression::compress(&encoded, &cfg, &kernel)?,
    };

    let compressed_path = out_path(&a.out_dir, COMPRESSED_FILE);
    save_with_responses(&compressed_path, &out.latents, "z", out.responses.as_ref())?;
    let decoded = model.decode(&out.latents)?;
    save_with_responses(&out_path(&a.out_dir, DECODED_FILE), &decoded, "x", out.responses.as_ref())?;
    let log: Vec<StepRecord> = out
        .history
        .iter()
        .map(|h| StepRecord {
            step: h.step,
            emmd_sq: h.objective,
            grad_norm: h.grad_norm,
        })
        .collect();
    write_json_lines(&out_path(&a.out_dir, COMPRESS_LOG), &log)?;

    manifest.set_path("data", &a.data);
    manifest.set_path("model", &a.model);
    manifest.set("m", a.m);
    manifest.set("candidates", a.candidates);
    manifest.set("max_steps", a.max_steps);
    manifest.set("lr", format!("{:?}", a.lr));
    manifest.set("grad_tol", format!("{:?}", a.grad_tol));
    manifest.set("kernel_spec", a.kernel);
    manifest.set("kernel", describe(&kernel));
    manifest.set("labelled", a.labelled);
    manifest.set("response_mode", format!("{:?}", a.response_mode));
    manifest.set(
        "response_kernel",
        response_kernel.as_ref().map_or("none".into(), describe),
    );
    manifest.set("seed", a.seed);
    manifest.set("seed_objective", format!("{:?}", out.seed_objective));
    manifest.set("final_objective", format!("{:?}", out.final_objective));
    manifest.set("best_step", out.best_step);
    manifest.set("steps_recorded", out.history.len());
    manifest.set("stopped_early", out.stopped_early);
    manifest.set_path("compressed_file", &compressed_path);
    manifest.write(&a.out_dir)
}

#[derive(Serialize)]
struct Report {
    rmmd_sq: f64,
    emmd_sq: f64,
    dmmd_sq: f64,
    bound: f64,
    bound_satisfied: Option<bool>,
    exact_mmd_sq: Option<f64>,
    ambient_kernel: String,
    latent_kernel: String,
    n: usize,
    m: usize,
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let mut manifest = Manifest::new("evaluate");
    let (x, _) = load_table(&a.data)?.split_responses();
    let model = load_model(&a.model)?;
    let (z, _) = load_table(&a.compressed)?.split_responses();
    if x.ncols() != model.ambient_dim() || z.ncols() != model.latent_dim() {
        anyhow::bail!(
            "artifact dimensions disagree: data {}, model {}->{}, compressed set {}",
            x.ncols(),
            model.ambient_dim(),
            model.latent_dim(),
            z.ncols()
        );
    }
    let mixture = a
        .exact_mixture
        .as_ref()
        .map(|p| -> Result<GaussianMixture> {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(GaussianMixture::from_text(&text)?)
        })
        .transpose()?;
    prepare_dir(&a.out_dir)?;
    let ambient = a.kernel.resolve(&x, a.seed)?;
    let latent = if a.pullback {
        compression::pull_back_kernel(&ambient, &model)
    } else {
        a.latent_kernel.resolve(&model.encode(&x)?, a.seed)?
    };
    let r = compression::evaluate(&x, &model, &z, &ambient, &latent)?;
    let exact = match (&mixture, &ambient) {
        (None, _) => None,
        (Some(gm), Kernel::Gaussian { lengthscale }) => {
            Some(exact_mmd_sq_vs_points(gm, &model.decode(&z)?, *lengthscale)?)
        }
        (Some(_), _) => return Err(usage("exact scoring requires a Gaussian ambient kernel")),
    };
    let latent_name = if a.pullback {
        format!("pull-back({})", describe(&ambient))
    } else {
        describe(&latent)
    };
    let report = Report {
        rmmd_sq: r.rmmd_sq,
        emmd_sq: r.emmd_sq,
        dmmd_sq: r.dmmd_sq,
        bound: r.bound,
        bound_satisfied: r.bound_satisfied,
        exact_mmd_sq: exact,
        ambient_kernel: describe(&ambient),
        latent_kernel: latent_name.clone(),
        n: x.nrows(),
        m: z.nrows(),
    };
    let report_path = out_path(&a.out_dir, REPORT_FILE);
    write_json(&report_path, &report)?;

    manifest.set_path("data", &a.data);
    manifest.set_path("model", &a.model);
    manifest.set_path("compressed", &a.compressed);
    manifest.set("kernel_spec", a.kernel);
    manifest.set("ambient_kernel", describe(&ambient));
    manifest.set("latent_kernel", latent_name);
    manifest.set("pullback", a.pullback);
    manifest.set(
        "exact_mixture",
        a.exact_mixture.as_ref().map_or("none".into(), |p| p.display().to_string()),
    );
    manifest.set("seed", a.seed);
    manifest.set_path("report_file", &report_path);
    manifest.write(&a.out_dir)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_names() {
        assert_eq!(named("z", 2), vec!["z0", "z1"]);
        assert_eq!(data::default_header(1, 1), vec!["x0", "y0"]);
    }
}
