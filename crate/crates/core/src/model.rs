//! A trained autoencoder of either kind, with a common text format.

use std::path::Path;

use crate::error::Result;
use crate::kernels::{Decoder, DecoderHandle};
use crate::linear::StiefelPoint;
use crate::matrix::Matrix;
use crate::mlp::Mlp;
use crate::textio::{parse_err, Lines};

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Linear(StiefelPoint),
    Mlp(Mlp),
}

impl Model {
    pub fn encode(&self, x: &Matrix) -> Result<Matrix> {
        match self {
            Model::Linear(v) => v.encode(x),
            Model::Mlp(m) => m.encode(x),
        }
    }

    pub fn decode(&self, z: &Matrix) -> Result<Matrix> {
        match self {
            Model::Linear(v) => v.decode(z),
            Model::Mlp(m) => m.decode(z),
        }
    }

    pub fn reconstruct(&self, x: &Matrix) -> Result<Matrix> {
        self.decode(&self.encode(x)?)
    }

    pub fn ambient_dim(&self) -> usize {
        match self {
            Model::Linear(v) => v.ambient_dim(),
            Model::Mlp(m) => m.ambient_dim(),
        }
    }

    pub fn latent_dim(&self) -> usize {
        match self {
            Model::Linear(v) => v.latent_dim(),
            Model::Mlp(m) => m.latent_dim(),
        }
    }

    pub fn decoder_handle(&self) -> DecoderHandle {
        match self {
            Model::Linear(v) => v.decoder_handle(),
            Model::Mlp(m) => m.decoder_handle(),
        }
    }

    pub fn to_text(&self) -> String {
        match self {
            Model::Linear(v) => v.to_text(),
            Model::Mlp(m) => m.to_text(),
        }
    }

    /// Parses either format, dispatching on the header keyword.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = Lines::new(text);
        let model = match lines.peek().map(|(no, l)| (*no, l.split_whitespace().next())) {
            Some((_, Some("linear"))) => Model::Linear(StiefelPoint::parse(&mut lines)?),
            Some((_, Some("mlp"))) => Model::Mlp(Mlp::parse(&mut lines)?),
            Some((no, _)) => return Err(parse_err(no, "expected `linear` or `mlp` header")),
            None => return Err(parse_err(0, "empty model file")),
        };
        lines.finish()?;
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }
}

impl Decoder for Model {
    fn latent_dim(&self) -> usize {
        Model::latent_dim(self)
    }

    fn ambient_dim(&self) -> usize {
        Model::ambient_dim(self)
    }

    fn decode_point(&self, z: &[f64]) -> Vec<f64> {
        match self {
            Model::Linear(v) => v.decode_point(z),
            Model::Mlp(m) => m.decode_point(z),
        }
    }
}
