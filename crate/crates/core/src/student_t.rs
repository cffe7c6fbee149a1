//! Scaled Student's-t error law: `eps = scale * T` with `T ~ t(dof)`.

use rand::Rng;
use rand_distr::{Distribution, StudentT};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const LN_PI: f64 = 1.144_729_885_849_400_2;

/// Log density of `scale * t(dof)`, with the normalizing constant cached.
#[derive(Debug, Clone, Copy)]
pub struct TDensity {
    dof: f64,
    scale: f64,
    log_norm: f64,
    half_dof_plus: f64,
}

impl TDensity {
    pub fn new(dof: f64, scale: f64) -> Self {
        let log_norm = ln_gamma(0.5 * (dof + 1.0))
            - ln_gamma(0.5 * dof)
            - 0.5 * (dof.ln() + LN_PI)
            - scale.ln();
        Self {
            dof,
            scale,
            log_norm,
            half_dof_plus: 0.5 * (dof + 1.0),
        }
    }

    #[inline]
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let z = x / self.scale;
        self.log_norm - self.half_dof_plus * (z * z / self.dof).ln_1p()
    }

    #[inline]
    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }
}

/// Draws from `scale * t(dof)`.
#[derive(Debug, Clone, Copy)]
pub struct TSampler {
    inner: StudentT<f64>,
    scale: f64,
}

impl TSampler {
    pub fn new(dof: f64, scale: f64) -> Result<Self> {
        let inner = StudentT::new(dof)
            .map_err(|e| Error::InvalidArgument(format!("Student's-t dof {dof}: {e}")))?;
        Ok(Self { inner, scale })
    }

    #[inline]
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.scale * self.inner.sample(rng)
    }
}

/// Log density of `N(0, variance)`.
#[inline]
pub fn normal_ln_pdf(x: f64, variance: f64) -> f64 {
    -0.5 * ((2.0 * std::f64::consts::PI * variance).ln() + x * x / variance)
}

/// `ln(sum(exp(xs)))` without overflow.
pub fn log_sum_exp(xs: impl IntoIterator<Item = f64> + Clone) -> f64 {
    let max = xs.clone().into_iter().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.into_iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
