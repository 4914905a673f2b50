//! Seedable per-path random streams and the primitive variate samplers.
//!
//! Each stream is a ChaCha8 keystream keyed by the master seed and selected by
//! a 64-bit stream id, so the variates drawn for a given path depend only on
//! `(master_seed, stream_id)` and never on scheduling or on other streams.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::error::{Error, Result};

/// Stream ids at or above this value are reserved for analysis-side
/// randomness (bootstrap replicates); generators use the path index.
pub const RESERVED_STREAM_BASE: u64 = 1 << 63;

#[derive(Debug, Clone)]
pub struct RngStream {
    master_seed: u64,
    stream_id: u64,
    position: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
        rng.set_stream(stream_id);
        RngStream {
            master_seed,
            stream_id,
            position: 0,
            rng,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Number of variates drawn so far.
    pub fn position(&self) -> u64 {
        self.position
    }

    /// Standard normal variate.
    #[inline]
    pub fn gaussian(&mut self) -> f64 {
        self.position += 1;
        self.rng.sample(StandardNormal)
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn uniform_open(&mut self) -> f64 {
        self.position += 1;
        loop {
            let u: f64 = self.rng.gen();
            if u > 0.0 {
                return u;
            }
        }
    }

    /// Uniform integer in `0..n`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.position += 1;
        self.rng.gen_range(0..n)
    }

    /// Exponential with mean 1, strictly positive.
    #[inline]
    pub fn exponential(&mut self) -> f64 {
        self.position += 1;
        loop {
            let e: f64 = self.rng.sample(Exp1);
            if e > 0.0 {
                return e;
            }
        }
    }

    /// Symmetric stable variate with characteristic function
    /// `exp(-|θ|^(1/L))`, via [`chambers_mallows_stuck`].
    pub fn levy_stable(&mut self, latent: f64) -> Result<f64> {
        check_latent(latent)?;
        Ok(self.levy_stable_unchecked(latent))
    }

    #[inline]
    pub(crate) fn levy_stable_unchecked(&mut self, latent: f64) -> f64 {
        let eps = loop {
            let e = FRAC_PI_2 * (2.0 * self.uniform_open() - 1.0);
            if e.abs() < FRAC_PI_2 {
                break e;
            }
        };
        let phi = self.exponential();
        chambers_mallows_stuck(latent, eps, phi)
    }

    /// Direct access for samplers that need raw bits.
    pub fn rng_mut(&mut self) -> &mut impl RngCore {
        &mut self.rng
    }
}

/// Transforms a uniform angle `eps` in `(-π/2, π/2)` and a unit exponential
/// `phi` into a symmetric stable variate of index `α = 1/L`:
///
/// `sin(ε/L) / cos(ε)^L · (cos((L-1)ε/L) / Φ)^(L-1)`
pub fn chambers_mallows_stuck(latent: f64, eps: f64, phi: f64) -> f64 {
    let alpha = 1.0 / latent;
    let a = (alpha * eps).sin() / eps.cos().powf(latent);
    let b = ((1.0 - alpha) * eps).cos() / phi;
    a * b.powf(latent - 1.0)
}

pub fn draw_gaussian(stream: &mut RngStream) -> f64 {
    stream.gaussian()
}

pub fn draw_levy_stable(latent: f64, stream: &mut RngStream) -> Result<f64> {
    stream.levy_stable(latent)
}

pub(crate) fn check_latent(latent: f64) -> Result<()> {
    if (0.5..1.0).contains(&latent) {
        Ok(())
    } else {
        Err(Error::domain("L", latent, "1/2 <= L < 1"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moments(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn gaussian_moments() {
        let mut s = RngStream::new(11, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.gaussian()).collect();
        let (mean, var) = moments(&xs);
        assert!(mean.abs() < 0.004, "mean {mean}");
        assert!((var - 1.0).abs() < 0.005, "var {var}");
        assert_eq!(s.position(), 1_000_000);
    }

    #[test]
    fn determinism() {
        let mut a = RngStream::new(1, 0);
        let mut b = RngStream::new(1, 0);
        assert_eq!(a.gaussian().to_bits(), b.gaussian().to_bits());
        assert_eq!(a.gaussian().to_bits(), b.gaussian().to_bits());
    }

    #[test]
    fn streams_are_independent_of_interleaving() {
        let mut a = RngStream::new(5, 0);
        let mut b = RngStream::new(5, 1);
        let mut inter_a = Vec::new();
        let mut inter_b = Vec::new();
        for _ in 0..100 {
            inter_a.push(a.gaussian());
            inter_b.push(b.levy_stable(0.7).unwrap());
        }
        let mut solo_a = RngStream::new(5, 0);
        let mut solo_b = RngStream::new(5, 1);
        let iso_b: Vec<f64> = (0..100).map(|_| solo_b.levy_stable(0.7).unwrap()).collect();
        let iso_a: Vec<f64> = (0..100).map(|_| solo_a.gaussian()).collect();
        assert_eq!(inter_a, iso_a);
        assert_eq!(inter_b, iso_b);
        assert_ne!(iso_a[0], RngStream::new(5, 2).gaussian());
    }

    #[test]
    fn stable_rejects_bad_latent() {
        let mut s = RngStream::new(0, 0);
        assert!(s.levy_stable(1.2).is_err());
        assert!(s.levy_stable(1.0).is_err());
        assert!(s.levy_stable(0.49).is_err());
        assert!(s.levy_stable(0.5).is_ok());
    }

    #[test]
    fn gaussian_boundary_of_stable_family() {
        // α = 2: X = 2 sin(ε) sqrt(Φ), variance 2
        let mut s = RngStream::new(3, 0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| s.levy_stable(0.5).unwrap()).collect();
        let (_, var) = moments(&xs);
        assert!((var - 2.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn stable_draws_are_sign_balanced() {
        let n = 1_000_000;
        for &l in &[0.5, 0.6, 0.77, 0.95] {
            let mut s = RngStream::new(17, 0);
            let pos = (0..n).filter(|_| s.levy_stable(l).unwrap() > 0.0).count();
            let frac = pos as f64 / n as f64;
            assert!((frac - 0.5).abs() < 3.0 / (2.0 * (n as f64).sqrt()), "L={l}: {frac}");
        }
    }

    #[test]
    fn cms_closed_form_at_gaussian_boundary() {
        let (eps, phi) = (0.3f64, 1.7f64);
        let expect = 2.0 * eps.sin() * phi.sqrt();
        assert!((chambers_mallows_stuck(0.5, eps, phi) - expect).abs() < 1e-12);
    }
}
