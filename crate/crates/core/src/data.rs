//! Synthetic generators, standardisation, one-hot helpers and CSV files.

use std::f64::consts::PI;
use std::path::Path;

use crate::compression::argmax_rows;
use crate::error::{invalid, mismatch, Error, Result};
use crate::exact_gaussian::GaussianMixture;
use crate::matrix::Matrix;
use crate::rng::RngStream;
use crate::textio::fmt_real;

/// Default standard deviation of the Swiss-roll response noise.
pub const SWISS_ROLL_NOISE_SD: f64 = 0.5;

/// Per-column affine standardisation with the `n - 1` denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
    constant: Vec<bool>,
}

impl Standardizer {
    pub fn fit(x: &Matrix) -> Result<Self> {
        let n = x.nrows();
        if n < 2 {
            return Err(invalid("standardisation needs at least two rows"));
        }
        let means = x.column_means()?;
        let mut var = vec![0.0; x.ncols()];
        for r in x.rows() {
            for ((v, xi), m) in var.iter_mut().zip(r).zip(&means) {
                *v += (xi - m) * (xi - m);
            }
        }
        let stds: Vec<f64> = var.iter().map(|v| (v / (n - 1) as f64).sqrt()).collect();
        let constant = stds.iter().map(|&s| s == 0.0).collect();
        Ok(Self {
            means,
            stds,
            constant,
        })
    }

    pub fn means(&self) -> &[f64] {
        &self.means
    }

    pub fn stds(&self) -> &[f64] {
        &self.stds
    }

    /// Columns with zero spread; these are centred but not scaled.
    pub fn constant_columns(&self) -> &[bool] {
        &self.constant
    }

    fn scale(&self, j: usize) -> f64 {
        if self.constant[j] {
            1.0
        } else {
            self.stds[j]
        }
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.ncols() != self.means.len() {
            return Err(mismatch(format!(
                "standardiser fitted on {} columns, got {}",
                self.means.len(),
                x.ncols()
            )));
        }
        Ok(())
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        Ok(Matrix::from_fn(x.nrows(), x.ncols(), |i, j| (x[(i, j)] - self.means[j]) / self.scale(j)))
    }

    pub fn invert(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        Ok(Matrix::from_fn(x.nrows(), x.ncols(), |i, j| x[(i, j)] * self.scale(j) + self.means[j]))
    }
}

/// Nine unit-covariance components with equal weights.
pub fn nine_component_mixture() -> GaussianMixture {
    let means = [
        [0.0, 0.0],
        [1.0, 1.0],
        [-1.0, -1.0],
        [-1.0, 1.0],
        [1.0, -1.0],
        [2.0, 0.0],
        [-2.0, 0.0],
        [0.0, 2.0],
        [0.0, -2.0],
    ];
    GaussianMixture::isotropic(vec![1.0 / 9.0; 9], means.iter().map(|m| m.to_vec()).collect(), 1.0)
        .expect("valid constant mixture")
}

pub fn gen_gaussian_mixture_2d(n: usize, seed: u64) -> Result<(Matrix, GaussianMixture)> {
    if n == 0 {
        return Err(invalid("need at least one sample"));
    }
    let gm = nine_component_mixture();
    let x = gm.sample(n, &mut RngStream::new(seed));
    Ok((x, gm))
}

/// `(XP, P)` with `P` a `k × D` matrix of standard normal draws.
pub fn project_random_gaussian(x: &Matrix, ambient_dim: usize, seed: u64) -> Result<(Matrix, Matrix)> {
    let k = x.ncols();
    if ambient_dim < k {
        return Err(invalid(format!("ambient dimension {ambient_dim} is below data dimension {k}")));
    }
    let mut rng = RngStream::new(seed).substream(1);
    let p = Matrix::from_fn(k, ambient_dim, |_, _| rng.normal());
    Ok((project_with(x, &p)?, p))
}

/// `XP` for a caller-supplied `P`.
pub fn project_with(x: &Matrix, p: &Matrix) -> Result<Matrix> {
    x.matmul(p)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwissRoll {
    /// Noisy 3-d points.
    pub points: Matrix,
    /// Noisy responses.
    pub responses: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// `f(u, v)` before response noise.
    pub noiseless: Vec<f64>,
}

pub fn swiss_roll_response(u: f64, v: f64) -> f64 {
    let a = u / (3.0 * PI) - (1.0 + 3.0 * PI) / 2.0;
    4.0 * a * a + PI / 20.0 * v
}

pub fn gen_swiss_roll(n: usize, seed: u64) -> Result<SwissRoll> {
    gen_swiss_roll_with(n, seed, SWISS_ROLL_NOISE_SD)
}

pub fn gen_swiss_roll_with(n: usize, seed: u64, noise_sd: f64) -> Result<SwissRoll> {
    if n == 0 {
        return Err(invalid("need at least one sample"));
    }
    if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
        return Err(invalid("noise standard deviation must be non-negative"));
    }
    let mut rng = RngStream::new(seed);
    let mut out = SwissRoll {
        points: Matrix::zeros(n, 3),
        responses: Vec::with_capacity(n),
        u: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
        noiseless: Vec::with_capacity(n),
    };
    for i in 0..n {
        let u = rng.uniform(1.5 * PI, 4.5 * PI);
        let v = rng.uniform(0.0, 20.0);
        let t = [u * u.cos(), v, u * u.sin()];
        let row = out.points.row_mut(i);
        for (x, c) in row.iter_mut().zip(t) {
            *x = c + rng.normal();
        }
        let f = swiss_roll_response(u, v);
        out.responses.push(f + noise_sd * rng.normal());
        out.u.push(u);
        out.v.push(v);
        out.noiseless.push(f);
    }
    Ok(out)
}

/// Two-layer network `tanh(xW₁)W₂` with `N(0, 1/fan_in)` weights and no biases.
#[derive(Clone, Debug, PartialEq)]
pub struct TanhNetwork {
    pub hidden: Matrix,
    pub output: Matrix,
}

impl TanhNetwork {
    pub fn random(input: usize, hidden: usize, output: usize, seed: u64) -> Result<Self> {
        if input == 0 || hidden == 0 || output == 0 {
            return Err(invalid("network widths must be positive"));
        }
        let mut rng = RngStream::new(seed).substream(2);
        let s1 = (1.0 / input as f64).sqrt();
        let w1 = Matrix::from_fn(input, hidden, |_, _| s1 * rng.normal());
        let s2 = (1.0 / hidden as f64).sqrt();
        let w2 = Matrix::from_fn(hidden, output, |_, _| s2 * rng.normal());
        Ok(Self {
            hidden: w1,
            output: w2,
        })
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        x.matmul(&self.hidden)?.map(f64::tanh).matmul(&self.output)
    }
}

pub fn one_hot(labels: &[usize], classes: usize) -> Result<Matrix> {
    if let Some((i, &l)) = labels.iter().enumerate().find(|(_, &l)| l >= classes) {
        return Err(invalid(format!("label {l} at row {i} is outside [0, {classes})")));
    }
    Ok(Matrix::from_fn(labels.len(), classes, |i, j| if labels[i] == j { 1.0 } else { 0.0 }))
}

/// Row-wise argmax, ties to the lowest index.
pub fn argmax_project(w: &Matrix) -> Vec<usize> {
    argmax_rows(w)
}

/// A numeric table with an optional header row.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub data: Matrix,
    pub header: Option<Vec<String>>,
}

impl Table {
    /// Splits off trailing columns named `y0, y1, ...` as responses.
    pub fn split_responses(&self) -> (Matrix, Option<Matrix>) {
        let Some(header) = &self.header else {
            return (self.data.clone(), None);
        };
        let q = header.iter().rev().take_while(|h| is_response_name(h)).count();
        if q == 0 {
            return (self.data.clone(), None);
        }
        let d = header.len() - q;
        (self.data.select_cols(0, d), Some(self.data.select_cols(d, d + q)))
    }
}

fn is_response_name(h: &str) -> bool {
    h.strip_prefix('y').is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()))
}

/// `x0..x{d-1}` followed by `y0..y{q-1}`.
pub fn default_header(features: usize, responses: usize) -> Vec<String> {
    (0..features)
        .map(|j| format!("x{j}"))
        .chain((0..responses).map(|j| format!("y{j}")))
        .collect()
}

/// Reads a comma-separated numeric file. The first row is a header unless
/// every cell in it parses as a number.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Table> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_csv(file, &path.display().to_string())
}

pub fn read_csv(reader: impl std::io::Read, name: &str) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header = None;
    let mut width = None;
    let mut data = Vec::new();
    let mut rows = 0;
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            location: format!("{name}: record {}", idx + 1),
            detail: e.to_string(),
        })?;
        let line = rec.position().map_or(idx as u64 + 1, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if let Some(w) = width {
            if rec.len() != w {
                return Err(Error::Parse {
                    location: format!("{name}: row {line}"),
                    detail: format!("expected {w} fields, found {}", rec.len()),
                });
            }
        } else {
            width = Some(rec.len());
            if idx == 0 && rec.iter().any(|c| c.parse::<f64>().is_err()) {
                header = Some(rec.iter().map(str::to_owned).collect());
                continue;
            }
        }
        for (col, cell) in rec.iter().enumerate() {
            let v = cell.parse::<f64>().map_err(|_| Error::Parse {
                location: format!("{name}: row {line}, column {}", col + 1),
                detail: format!("`{cell}` is not a number"),
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let Some(cols) = width else {
        return Err(Error::EmptyInput(format!("{name} contains no rows")));
    };
    if rows == 0 {
        return Err(Error::EmptyInput(format!("{name} contains no data rows")));
    }
    Ok(Table {
        data: Matrix::new(rows, cols, data)?,
        header,
    })
}

pub fn save_csv(path: impl AsRef<Path>, data: &Matrix, header: &[String]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv(file, data, header)
}

pub fn write_csv(writer: impl std::io::Write, data: &Matrix, header: &[String]) -> Result<()> {
    if header.len() != data.ncols() {
        return Err(mismatch(format!(
            "{} header names for {} columns",
            header.len(),
            data.ncols()
        )));
    }
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(header).map_err(io)?;
    for r in data.rows() {
        w.write_record(r.iter().map(|v| fmt_real(*v))).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}
