//! Variable diffusion processes by Euler-Maruyama integration.

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Shape `𝒟(u)` of the scaled diffusion coefficient
/// `D(x, t) = t^(2H-1) 𝒟(x / t^H)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DiffusionProfile {
    /// `𝒟(u) = (2H/ε²)(1 + ε|u|)`, whose scaling density is bi-exponential.
    BiExponential { epsilon: f64 },
    /// `𝒟(u) = d0`, a Gaussian scaling density.
    Constant { d0: f64 },
}

/// Fine-step coefficient tables shared by all paths of one ensemble.
///
/// On fine step `i` (from `t = i·h`) the update is
/// `x += sqrt(base[i] · (1 + slope[i]·|x|)) · ξ`.
#[derive(Debug, Clone)]
pub struct VdpGenerator {
    n: usize,
    substeps: usize,
    base: Vec<f64>,
    slope: Vec<f64>,
}

impl VdpGenerator {
    pub fn new(hurst: f64, profile: DiffusionProfile, n: usize, substeps: usize) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::domain("H", hurst, "0 < H < 1"));
        }
        if substeps < 1 {
            return Err(Error::domain("substeps", substeps as f64, "substeps >= 1"));
        }
        let (d0, eps) = match profile {
            DiffusionProfile::BiExponential { epsilon } => {
                if !(epsilon > 0.0 && epsilon.is_finite()) {
                    return Err(Error::domain("epsilon", epsilon, "epsilon > 0"));
                }
                (2.0 * hurst / (epsilon * epsilon), epsilon)
            }
            DiffusionProfile::Constant { d0 } => {
                if !(d0 > 0.0 && d0.is_finite()) {
                    return Err(Error::domain("d0", d0, "d0 > 0"));
                }
                (d0, 0.0)
            }
        };
        let h = 1.0 / substeps as f64;
        let two_h = 2.0 * hurst;
        // fine step i covers [i·h, (i+1)·h]; the time factor t^(2H-1) is
        // integrated exactly over it and the state factor is taken at i·h
        let fine = n * substeps;
        let mut base = Vec::with_capacity(fine);
        let mut slope = Vec::with_capacity(fine);
        for i in 0..fine {
            let t = i as f64 * h;
            base.push(d0 * ((t + h).powf(two_h) - t.powf(two_h)) / two_h);
            slope.push(if i == 0 { 0.0 } else { eps * t.powf(-hurst) });
        }
        Ok(VdpGenerator {
            n,
            substeps,
            base,
            slope,
        })
    }

    /// Unit-time increments of one path started at `t = 0` with `x = 0`.
    pub fn sample_into(&self, stream: &mut RngStream, out: &mut [f64]) {
        assert_eq!(out.len(), self.n, "output length");
        let mut x = 0.0f64;
        let mut prev = 0.0f64;
        let mut step = 0;
        for (k, slot) in out.iter_mut().enumerate() {
            let end = (k + 1) * self.substeps;
            while step < end {
                let var = self.base[step] * (1.0 + self.slope[step] * x.abs());
                x += var.sqrt() * stream.gaussian();
                step += 1;
            }
            *slot = x - prev;
            prev = x;
        }
    }
}

/// One VDP path with the bi-exponential profile, as `n` unit increments.
pub fn vdp_path(
    hurst: f64,
    epsilon: f64,
    n: usize,
    substeps: usize,
    stream: &mut RngStream,
) -> Result<Vec<f64>> {
    let generator =
        VdpGenerator::new(hurst, DiffusionProfile::BiExponential { epsilon }, n, substeps)?;
    let mut out = vec![0.0; n];
    generator.sample_into(stream, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantile::iqr;

    #[test]
    fn constant_profile_at_half_is_brownian() {
        let generator = VdpGenerator::new(0.5, DiffusionProfile::Constant { d0: 1.0 }, 100, 4).unwrap();
        let positions: Vec<f64> = (0..20_000)
            .map(|p| {
                let mut s = RngStream::new(4, p);
                let mut out = vec![0.0; 100];
                generator.sample_into(&mut s, &mut out);
                out.iter().sum::<f64>()
            })
            .collect();
        // X_100 ~ N(0, 100); the IQR of N(0, 100) is 13.49
        let w = iqr(&positions).unwrap();
        assert!((w / 13.49 - 1.0).abs() < 0.02, "{w}");
    }

    #[test]
    fn domains() {
        let mut s = RngStream::new(0, 0);
        assert!(vdp_path(0.0, 1.0, 5, 4, &mut s).is_err());
        assert!(vdp_path(0.3, 0.0, 5, 4, &mut s).is_err());
        assert!(vdp_path(0.3, 1.0, 5, 0, &mut s).is_err());
        assert_eq!(vdp_path(0.3, 1.0, 5, 1, &mut s).unwrap().len(), 5);
    }

    #[test]
    fn first_increment_variance() {
        // x stays 0 during the first fine step, so with h = 1 the first
        // increment is Gaussian with variance ∫₀¹ d0·t^(2H-1) dt = d0/(2H),
        // d0 = 2H/ε²
        let var = (0..40_000)
            .map(|p| {
                let mut s = RngStream::new(1, p);
                vdp_path(0.3, 2.0, 1, 1, &mut s).unwrap()[0].powi(2)
            })
            .sum::<f64>()
            / 40_000.0;
        assert!((var / 0.25 - 1.0).abs() < 0.03, "{var}");
    }

    #[test]
    fn constant_profile_variance_follows_power_law() {
        let generator = VdpGenerator::new(0.3, DiffusionProfile::Constant { d0: 1.0 }, 50, 8).unwrap();
        let n = 20_000;
        let var = (0..n)
            .map(|p| {
                let mut s = RngStream::new(2, p);
                let mut out = vec![0.0; 50];
                generator.sample_into(&mut s, &mut out);
                out.iter().sum::<f64>().powi(2)
            })
            .sum::<f64>()
            / n as f64;
        // Var X_t = t^(2H) / (2H)
        let want = 50f64.powf(0.6) / 0.6;
        assert!((var / want - 1.0).abs() < 0.03, "{var} vs {want}");
    }
}
