//! Exact fractional Gaussian noise by circulant embedding.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Autocovariance of unit-variance fractional Gaussian noise,
/// `½(|k+1|^2J - 2|k|^2J + |k-1|^2J)`.
pub fn fgn_autocovariance(joseph: f64, lag: usize) -> f64 {
    let two_j = 2.0 * joseph;
    let k = lag as f64;
    let below = if lag == 0 { 1.0 } else { (k - 1.0).powf(two_j) };
    0.5 * ((k + 1.0).powf(two_j) - 2.0 * k.powf(two_j) + below)
}

pub(crate) fn check_joseph(joseph: f64) -> Result<()> {
    if joseph > 0.0 && joseph < 1.0 {
        Ok(())
    } else {
        Err(Error::domain("J", joseph, "0 < J < 1"))
    }
}

/// Reusable fGn sampler for sequences of one length.
///
/// The covariance row is embedded in a circulant of size `2m`, with `m` the
/// smallest power of two `>= n - 1`; its eigenvalues are computed once and
/// each sample costs one real inverse FFT.
pub struct FgnGenerator {
    n: usize,
    half: usize,
    amplitudes: Vec<f64>,
    c2r: Option<Arc<dyn ComplexToReal<f64>>>,
}

/// Per-worker buffers for [`FgnGenerator::sample_into`].
pub struct FgnWork {
    spectrum: Vec<Complex<f64>>,
    signal: Vec<f64>,
    scratch: Vec<Complex<f64>>,
}

impl FgnGenerator {
    pub fn new(joseph: f64, n: usize) -> Result<Self> {
        check_joseph(joseph)?;
        if n <= 1 {
            return Ok(FgnGenerator {
                n,
                half: 0,
                amplitudes: Vec::new(),
                c2r: None,
            });
        }
        let half = (n - 1).next_power_of_two();
        let size = 2 * half;
        let mut planner = RealFftPlanner::<f64>::new();
        let r2c = planner.plan_fft_forward(size);
        let c2r = planner.plan_fft_inverse(size);

        let mut row = r2c.make_input_vec();
        for k in 0..=half {
            row[k] = fgn_autocovariance(joseph, k);
        }
        for k in 1..half {
            row[size - k] = row[k];
        }
        let mut eig = r2c.make_output_vec();
        r2c.process(&mut row, &mut eig)
            .map_err(|e| Error::Format(e.to_string()))?;

        let largest = eig.iter().map(|c| c.re).fold(0.0, f64::max);
        let size_f = size as f64;
        let amplitudes = eig
            .iter()
            .enumerate()
            .map(|(k, c)| {
                // the row is symmetric, so c.im is rounding noise
                let lambda = c.re;
                if lambda < -1e-10 * largest {
                    return Err(Error::NegativeEigenvalue {
                        index: k,
                        value: lambda,
                    });
                }
                let lambda = lambda.max(0.0);
                Ok(if k == 0 || k == half {
                    (lambda / size_f).sqrt()
                } else {
                    (lambda / (2.0 * size_f)).sqrt()
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(FgnGenerator {
            n,
            half,
            amplitudes,
            c2r: Some(c2r),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn work(&self) -> FgnWork {
        match &self.c2r {
            Some(c2r) => FgnWork {
                spectrum: c2r.make_input_vec(),
                signal: c2r.make_output_vec(),
                scratch: c2r.make_scratch_vec(),
            },
            None => FgnWork {
                spectrum: Vec::new(),
                signal: Vec::new(),
                scratch: Vec::new(),
            },
        }
    }

    /// Fills `out` (length `n`) with one fGn realization.
    pub fn sample_into(&self, stream: &mut RngStream, out: &mut [f64], work: &mut FgnWork) {
        assert_eq!(out.len(), self.n, "output length");
        let c2r = match &self.c2r {
            Some(c2r) => c2r,
            None => {
                out.iter_mut().for_each(|v| *v = stream.gaussian());
                return;
            }
        };
        let last = self.half;
        for (k, (w, &amp)) in work.spectrum.iter_mut().zip(&self.amplitudes).enumerate() {
            *w = if k == 0 || k == last {
                Complex::new(amp * stream.gaussian(), 0.0)
            } else {
                let re = stream.gaussian();
                let im = stream.gaussian();
                Complex::new(amp * re, amp * im)
            };
        }
        c2r.process_with_scratch(&mut work.spectrum, &mut work.signal, &mut work.scratch)
            .expect("buffer sizes come from the plan");
        out.copy_from_slice(&work.signal[..self.n]);
    }
}

/// One fGn sequence of length `n` with Joseph exponent `J`.
pub fn fgn(joseph: f64, n: usize, stream: &mut RngStream) -> Result<Vec<f64>> {
    let generator = FgnGenerator::new(joseph, n)?;
    let mut work = generator.work();
    let mut out = vec![0.0; n];
    generator.sample_into(stream, &mut out, &mut work);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sample autocovariance at `lag` around the known zero mean.
    fn sample_autocov(xs: &[f64], lag: usize) -> f64 {
        let n = xs.len() - lag;
        xs[..n].iter().zip(&xs[lag..]).map(|(a, b)| a * b).sum::<f64>() / n as f64
    }

    fn long_sample(joseph: f64, seed: u64) -> Vec<f64> {
        // 16 independent blocks of 65536 values
        let generator = FgnGenerator::new(joseph, 65_536).unwrap();
        let mut work = generator.work();
        let mut xs = Vec::new();
        for block in 0..16 {
            let mut stream = RngStream::new(seed, block);
            let mut out = vec![0.0; 65_536];
            generator.sample_into(&mut stream, &mut out, &mut work);
            xs.extend(out);
        }
        xs
    }

    #[test]
    fn analytic_lag_one() {
        assert!((fgn_autocovariance(0.7, 1) - 0.5 * (2f64.powf(1.4) - 2.0)).abs() < 1e-15);
        assert!((fgn_autocovariance(0.7, 1) - 0.3195).abs() < 1e-4);
        assert!((fgn_autocovariance(0.3, 1) + 0.2421).abs() < 1e-4);
        assert_eq!(fgn_autocovariance(0.5, 0), 1.0);
        assert_eq!(fgn_autocovariance(0.5, 3), 0.0);
    }

    #[test]
    fn white_noise_at_half() {
        let xs = long_sample(0.5, 1);
        assert!(sample_autocov(&xs, 1).abs() < 0.003);
        assert!((sample_autocov(&xs, 0) - 1.0).abs() < 0.01);
    }

    #[test]
    fn lag_one_covariance_matches() {
        for &(j, seed) in &[(0.7, 2), (0.3, 3)] {
            let xs = long_sample(j, seed);
            let got = sample_autocov(&xs, 1);
            let want = fgn_autocovariance(j, 1);
            assert!((got - want).abs() < 0.01, "J={j}: {got} vs {want}");
        }
    }

    #[test]
    fn odd_and_tiny_lengths() {
        let mut s = RngStream::new(0, 0);
        assert_eq!(fgn(0.6, 1, &mut s).unwrap().len(), 1);
        assert_eq!(fgn(0.6, 2, &mut s).unwrap().len(), 2);
        assert_eq!(fgn(0.6, 1001, &mut s).unwrap().len(), 1001);
        assert_eq!(fgn(0.6, 0, &mut s).unwrap().len(), 0);
    }

    #[test]
    fn embedding_is_nonnegative_across_exponents() {
        for j in [0.01, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
            for n in [2, 3, 17, 1000, 4097] {
                assert!(FgnGenerator::new(j, n).is_ok(), "J={j} n={n}");
            }
        }
    }

    #[test]
    fn domain() {
        assert!(FgnGenerator::new(0.0, 10).is_err());
        assert!(FgnGenerator::new(1.0, 10).is_err());
    }
}
