use std::fmt;
use std::str::FromStr;

use bdc::kernels::{median_heuristic, Kernel};
use bdc::Matrix;

/// Points used by the median heuristic at most.
pub const MEDIAN_CAP: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Family {
    Gaussian,
    Imq,
    Quadratic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Scale {
    Fixed(f64),
    Median,
}

/// `name[:lengthscale|:median]`; a bare name means `:median`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    pub family: Family,
    pub scale: Scale,
}

impl FromStr for KernelSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (name, scale) = match s.split_once(':') {
            Some((n, sc)) => (n, Some(sc)),
            None => (s, None),
        };
        let family = match name {
            "gaussian" => Family::Gaussian,
            "imq" => Family::Imq,
            "quadratic" => Family::Quadratic,
            other => return Err(format!("unknown kernel `{other}`")),
        };
        let scale = match (family, scale) {
            (Family::Quadratic, None) => Scale::Fixed(1.0),
            (Family::Quadratic, Some(_)) => return Err("the quadratic kernel takes no lengthscale".into()),
            (_, None | Some("median")) => Scale::Median,
            (_, Some(v)) => match v.parse::<f64>() {
                Ok(l) if l > 0.0 && l.is_finite() => Scale::Fixed(l),
                _ => return Err(format!("`{v}` is not a positive lengthscale")),
            },
        };
        Ok(Self { family, scale })
    }
}

impl KernelSpec {
    /// Builds the kernel, running the median heuristic on `points` if needed.
    pub fn resolve(&self, points: &Matrix, seed: u64) -> bdc::Result<Kernel> {
        let lengthscale = match self.scale {
            Scale::Fixed(l) => l,
            Scale::Median if self.family == Family::Quadratic => 1.0,
            Scale::Median => median_heuristic(points, MEDIAN_CAP, seed)?,
        };
        match self.family {
            Family::Gaussian => Kernel::gaussian(lengthscale),
            Family::Imq => Kernel::imq(lengthscale),
            Family::Quadratic => Ok(Kernel::quadratic()),
        }
    }
}

impl fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.family {
            Family::Gaussian => "gaussian",
            Family::Imq => "imq",
            Family::Quadratic => return f.write_str("quadratic"),
        };
        match self.scale {
            Scale::Fixed(l) => write!(f, "{name}:{l:?}"),
            Scale::Median => write!(f, "{name}:median"),
        }
    }
}

/// Manifest rendering of a resolved kernel.
pub fn describe(kernel: &Kernel) -> String {
    match kernel {
        Kernel::Gaussian { lengthscale } => format!("gaussian:{lengthscale:?}"),
        Kernel::Imq { lengthscale } => format!("imq:{lengthscale:?}"),
        other => other.name().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parsing() {
        let g: KernelSpec = "gaussian:0.5".parse().unwrap();
        assert_eq!(g.scale, Scale::Fixed(0.5));
        let m: KernelSpec = "imq".parse().unwrap();
        assert_eq!((m.family, m.scale), (Family::Imq, Scale::Median));
        assert!("quadratic:2".parse::<KernelSpec>().is_err());
        assert!("gaussian:-1".parse::<KernelSpec>().is_err());
        assert!("laplace".parse::<KernelSpec>().is_err());
        assert_eq!(g.to_string(), "gaussian:0.5");
    }

    #[test]
    fn median_resolution() {
        let pts = Matrix::from_rows(&[[0.0], [2.0]]).unwrap();
        let k = "gaussian:median".parse::<KernelSpec>().unwrap().resolve(&pts, 0).unwrap();
        assert_eq!(describe(&k), format!("gaussian:{:?}", 2f64.sqrt()));
    }
}
