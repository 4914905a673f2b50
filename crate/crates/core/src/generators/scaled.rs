//! Time-scaled (Moses) increments.

use crate::error::{Error, Result};
use crate::rng::RngStream;

pub(crate) fn check_moses(moses: f64) -> Result<()> {
    if moses > 0.0 && moses < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("M", moses, "0 < M < 1"))
    }
}

/// Right-endpoint weights `(k+1)^(M-½)` for increments `k = 0..n`.
#[derive(Debug, Clone)]
pub struct MosesWeights {
    weights: Vec<f64>,
}

impl MosesWeights {
    pub fn new(moses: f64, n: usize) -> Result<Self> {
        check_moses(moses)?;
        let exponent = moses - 0.5;
        Ok(MosesWeights {
            weights: (0..n).map(|k| ((k + 1) as f64).powf(exponent)).collect(),
        })
    }

    pub fn apply(&self, increments: &mut [f64]) {
        increments
            .iter_mut()
            .zip(&self.weights)
            .for_each(|(d, w)| *d *= w);
    }
}

/// Multiplies the `k`-th increment by `(k+1)^(M-½)`.
///
/// `M = 1` lies outside the admissible Moses range but is accepted here so the
/// weights can be checked against `sqrt(k+1)`.
pub fn moses_weights(increments: &[f64], moses: f64) -> Result<Vec<f64>> {
    if !(moses > 0.0 && moses <= 1.0) {
        return Err(Error::domain("M", moses, "0 < M < 1"));
    }
    let exponent = moses - 0.5;
    Ok(increments
        .iter()
        .enumerate()
        .map(|(k, d)| d * ((k + 1) as f64).powf(exponent))
        .collect())
}

/// Standard deviations of the exact unit-time increments of scaled Brownian
/// motion, `sqrt(((k+1)^2M - k^2M) / 2M)`.
#[derive(Debug, Clone)]
pub struct SbmScales {
    scales: Vec<f64>,
}

impl SbmScales {
    pub fn new(moses: f64, n: usize) -> Result<Self> {
        check_moses(moses)?;
        let two_m = 2.0 * moses;
        Ok(SbmScales {
            scales: (0..n)
                .map(|k| {
                    let var = (((k + 1) as f64).powf(two_m) - (k as f64).powf(two_m)) / two_m;
                    var.sqrt()
                })
                .collect(),
        })
    }

    pub fn variance(&self, k: usize) -> f64 {
        self.scales[k] * self.scales[k]
    }

    pub fn sample_into(&self, stream: &mut RngStream, out: &mut [f64]) {
        out.iter_mut()
            .zip(&self.scales)
            .for_each(|(v, s)| *v = s * stream.gaussian());
    }
}

/// Independent Gaussian increments with the exact integrated variance of
/// `∫ s^(M-½) dB_s` over each unit step.
pub fn sbm_exact_increments(moses: f64, n: usize, stream: &mut RngStream) -> Result<Vec<f64>> {
    let scales = SbmScales::new(moses, n)?;
    let mut out = vec![0.0; n];
    scales.sample_into(stream, &mut out);
    Ok(out)
}
