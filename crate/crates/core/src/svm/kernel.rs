//! Kernel functions and their parameterization.

use crate::textio::{self, Lines, TextIoError};
use crate::types::{dot, squared_distance};

use super::SvmError;

/// Kernel selector with parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelSpec {
    Linear,
    Rbf { gamma: f64 },
    Polynomial { gamma: f64, degree: u32, coef0: f64 },
    Sigmoid { gamma: f64, coef0: f64 },
}

impl KernelSpec {
    /// The stock default `gamma = 1 / n_features`.
    pub fn default_gamma(n_features: usize) -> f64 {
        if n_features == 0 {
            1.0
        } else {
            1.0 / n_features as f64
        }
    }

    pub fn rbf(gamma: f64) -> Self {
        KernelSpec::Rbf { gamma }
    }

    pub fn polynomial(gamma: f64, degree: u32) -> Self {
        KernelSpec::Polynomial {
            gamma,
            degree,
            coef0: 0.0,
        }
    }

    pub fn sigmoid(gamma: f64) -> Self {
        KernelSpec::Sigmoid { gamma, coef0: 0.0 }
    }

    /// Short table label: `linear`, `rbf`, `poly2`, `poly3`, `sigmoid`.
    pub fn label(&self) -> String {
        match self {
            KernelSpec::Linear => "linear".into(),
            KernelSpec::Rbf { .. } => "rbf".into(),
            KernelSpec::Polynomial { degree, .. } => format!("poly{degree}"),
            KernelSpec::Sigmoid { .. } => "sigmoid".into(),
        }
    }

    pub(crate) fn eval_unchecked(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            KernelSpec::Linear => dot(x, z),
            KernelSpec::Rbf { gamma } => (-gamma * squared_distance(x, z)).exp(),
            KernelSpec::Polynomial {
                gamma,
                degree,
                coef0,
            } => (gamma * dot(x, z) + coef0).powi(degree as i32),
            KernelSpec::Sigmoid { gamma, coef0 } => (gamma * dot(x, z) + coef0).tanh(),
        }
    }

    pub(crate) fn write_line(&self) -> String {
        match *self {
            KernelSpec::Linear => "kernel linear".into(),
            KernelSpec::Rbf { gamma } => format!("kernel rbf {}", textio::fmt_f64(gamma)),
            KernelSpec::Polynomial {
                gamma,
                degree,
                coef0,
            } => format!(
                "kernel polynomial {} {} {}",
                textio::fmt_f64(gamma),
                degree,
                textio::fmt_f64(coef0)
            ),
            KernelSpec::Sigmoid { gamma, coef0 } => format!(
                "kernel sigmoid {} {}",
                textio::fmt_f64(gamma),
                textio::fmt_f64(coef0)
            ),
        }
    }

    pub(crate) fn read_from(lines: &mut Lines<'_>) -> Result<Self, TextIoError> {
        let rest = lines.expect_tagged("kernel")?;
        let mut it = rest.split_ascii_whitespace();
        let kind = it.next().unwrap_or("");
        match kind {
            "linear" => Ok(KernelSpec::Linear),
            "rbf" => Ok(KernelSpec::Rbf {
                gamma: textio::parse_field(it.next(), "gamma")?,
            }),
            "polynomial" => Ok(KernelSpec::Polynomial {
                gamma: textio::parse_field(it.next(), "gamma")?,
                degree: textio::parse_field(it.next(), "degree")?,
                coef0: textio::parse_field(it.next(), "coef0")?,
            }),
            "sigmoid" => Ok(KernelSpec::Sigmoid {
                gamma: textio::parse_field(it.next(), "gamma")?,
                coef0: textio::parse_field(it.next(), "coef0")?,
            }),
            other => Err(TextIoError::Malformed(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Evaluate `K(x, z)`.
pub fn kernel_eval(x: &[f64], z: &[f64], spec: &KernelSpec) -> Result<f64, SvmError> {
    if x.len() != z.len() {
        return Err(SvmError::DimensionMismatch {
            expected: x.len(),
            got: z.len(),
        });
    }
    Ok(spec.eval_unchecked(x, z))
}
