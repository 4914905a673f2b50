//! Ensemble generators for the Brownian, fractional, Lévy, scaled and
//! variable-diffusion process families.

mod fgn;
mod levy;
mod scaled;
mod vdp;

pub use fgn::{fgn, fgn_autocovariance, FgnGenerator, FgnWork};
pub use levy::{flm_increments, stable_noise, FlmGenerator, FlmWork};
pub use scaled::{moses_weights, sbm_exact_increments, MosesWeights, SbmScales};
pub use vdp::{vdp_path, DiffusionProfile, VdpGenerator};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::PathEnsemble;
use crate::error::{Error, Result};
use crate::rng::{check_latent, RngStream};

pub const DEFAULT_FLM_MESH: usize = 16;
pub const DEFAULT_VDP_SUBSTEPS: usize = 16;
pub const DEFAULT_VDP_EPSILON: f64 = 1.0;

/// A process family together with the exponents that parameterize it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "UPPERCASE")]
pub enum ProcessSpec {
    Bm,
    Sbm {
        #[serde(rename = "M")]
        moses: f64,
    },
    Fbm {
        #[serde(rename = "J")]
        joseph: f64,
    },
    Sfbm {
        #[serde(rename = "J")]
        joseph: f64,
        #[serde(rename = "M")]
        moses: f64,
    },
    Lm {
        #[serde(rename = "L")]
        latent: f64,
    },
    Slm {
        #[serde(rename = "L")]
        latent: f64,
        #[serde(rename = "M")]
        moses: f64,
    },
    Flm {
        #[serde(rename = "J")]
        joseph: f64,
        #[serde(rename = "L")]
        latent: f64,
        mesh: usize,
        window: usize,
    },
    Sflm {
        #[serde(rename = "J")]
        joseph: f64,
        #[serde(rename = "L")]
        latent: f64,
        #[serde(rename = "M")]
        moses: f64,
        mesh: usize,
        window: usize,
    },
    Vdp {
        #[serde(rename = "H")]
        hurst: f64,
        epsilon: f64,
        substeps: usize,
    },
}

/// Theoretical `(J, L, M, H)` of a process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Exponents {
    pub joseph: f64,
    pub latent: f64,
    pub moses: f64,
    pub hurst: f64,
}

/// Kernel length, in fine steps, that spans a whole path of `n_steps`.
///
/// Shorter windows cut the long memory off at the window length, and past
/// it the width grows with the exponent of the underlying Lévy motion
/// instead of `J + L - 1/2`.
pub fn default_flm_window(mesh: usize, n_steps: usize) -> usize {
    (mesh * n_steps).max(1)
}

impl ProcessSpec {
    /// FLM with the default mesh and a kernel spanning `n_steps`.
    pub fn flm(joseph: f64, latent: f64, n_steps: usize) -> Self {
        ProcessSpec::Flm {
            joseph,
            latent,
            mesh: DEFAULT_FLM_MESH,
            window: default_flm_window(DEFAULT_FLM_MESH, n_steps),
        }
    }

    /// SFLM with the default mesh and a kernel spanning `n_steps`.
    pub fn sflm(joseph: f64, latent: f64, moses: f64, n_steps: usize) -> Self {
        ProcessSpec::Sflm {
            joseph,
            latent,
            moses,
            mesh: DEFAULT_FLM_MESH,
            window: default_flm_window(DEFAULT_FLM_MESH, n_steps),
        }
    }

    pub fn vdp(hurst: f64) -> Self {
        ProcessSpec::Vdp {
            hurst,
            epsilon: DEFAULT_VDP_EPSILON,
            substeps: DEFAULT_VDP_SUBSTEPS,
        }
    }

    pub fn family(&self) -> &'static str {
        match self {
            ProcessSpec::Bm => "BM",
            ProcessSpec::Sbm { .. } => "SBM",
            ProcessSpec::Fbm { .. } => "FBM",
            ProcessSpec::Sfbm { .. } => "SFBM",
            ProcessSpec::Lm { .. } => "LM",
            ProcessSpec::Slm { .. } => "SLM",
            ProcessSpec::Flm { .. } => "FLM",
            ProcessSpec::Sflm { .. } => "SFLM",
            ProcessSpec::Vdp { .. } => "VDP",
        }
    }

    pub fn validate(&self) -> Result<()> {
        use ProcessSpec::*;
        let joseph = |j: f64| fgn::check_joseph(j);
        let moses = |m: f64| scaled::check_moses(m);
        match *self {
            Bm => Ok(()),
            Sbm { moses: m } => moses(m),
            Fbm { joseph: j } => joseph(j),
            Sfbm { joseph: j, moses: m } => joseph(j).and(moses(m)),
            Lm { latent } => check_latent(latent),
            Slm { latent, moses: m } => check_latent(latent).and(moses(m)),
            Flm {
                joseph: j,
                latent,
                mesh,
                window,
            } => joseph(j)
                .and(check_latent(latent))
                .and(check_mesh(mesh, window)),
            Sflm {
                joseph: j,
                latent,
                moses: m,
                mesh,
                window,
            } => joseph(j)
                .and(check_latent(latent))
                .and(moses(m))
                .and(check_mesh(mesh, window)),
            Vdp {
                hurst,
                epsilon,
                substeps,
            } => {
                if !(hurst > 0.0 && hurst < 1.0) {
                    Err(Error::domain("H", hurst, "0 < H < 1"))
                } else if !(epsilon > 0.0 && epsilon.is_finite()) {
                    Err(Error::domain("epsilon", epsilon, "epsilon > 0"))
                } else if substeps < 1 {
                    Err(Error::domain("substeps", substeps as f64, "substeps >= 1"))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// Exponents implied by the construction, with `H = J + L + M - 1`.
    pub fn expected_exponents(&self) -> Exponents {
        use ProcessSpec::*;
        let (j, l, m) = match *self {
            Bm => (0.5, 0.5, 0.5),
            Sbm { moses } => (0.5, 0.5, moses),
            Fbm { joseph } => (joseph, 0.5, 0.5),
            Sfbm { joseph, moses } => (joseph, 0.5, moses),
            Lm { latent } => (0.5, latent, 0.5),
            Slm { latent, moses } => (0.5, latent, moses),
            Flm { joseph, latent, .. } => (joseph, latent, 0.5),
            Sflm {
                joseph,
                latent,
                moses,
                ..
            } => (joseph, latent, moses),
            Vdp { hurst, .. } => (0.5, 0.5, hurst),
        };
        Exponents {
            joseph: j,
            latent: l,
            moses: m,
            hurst: j + l + m - 1.0,
        }
    }

    /// Fractional Lévy processes with `J < ½` are unbounded, so R/S does not
    /// measure their Joseph exponent.
    pub fn rs_unreliable(&self) -> bool {
        matches!(
            *self,
            ProcessSpec::Flm { joseph, .. } | ProcessSpec::Sflm { joseph, .. } if joseph < 0.5
        )
    }

    pub fn descriptor(&self) -> String {
        serde_json::to_string(self).expect("process spec serializes")
    }

    /// Recovers the spec from an ensemble descriptor written by [`generate`].
    pub fn from_descriptor(descriptor: &str) -> Option<Self> {
        serde_json::from_str(descriptor).ok()
    }
}

fn check_mesh(mesh: usize, window: usize) -> Result<()> {
    if mesh < 1 {
        Err(Error::domain("mesh", mesh as f64, "mesh >= 1"))
    } else if window < 1 {
        Err(Error::domain("window", window as f64, "window >= 1"))
    } else {
        Ok(())
    }
}

enum Sampler {
    Sbm(SbmScales),
    Fgn(FgnGenerator, Option<MosesWeights>),
    Stable(f64, Option<MosesWeights>),
    Flm(FlmGenerator, Option<MosesWeights>),
    Vdp(VdpGenerator),
}

enum Work {
    None,
    Fgn(FgnWork),
    Flm(FlmWork),
}

impl Sampler {
    fn new(spec: &ProcessSpec, n: usize) -> Result<Self> {
        use ProcessSpec::*;
        let weights = |m: f64| MosesWeights::new(m, n).map(Some);
        Ok(match *spec {
            Bm => Sampler::Sbm(SbmScales::new(0.5, n)?),
            Sbm { moses } => Sampler::Sbm(SbmScales::new(moses, n)?),
            Fbm { joseph } => Sampler::Fgn(FgnGenerator::new(joseph, n)?, None),
            Sfbm { joseph, moses } => Sampler::Fgn(FgnGenerator::new(joseph, n)?, weights(moses)?),
            Lm { latent } => Sampler::Stable(latent, None),
            Slm { latent, moses } => Sampler::Stable(latent, weights(moses)?),
            Flm {
                joseph,
                latent,
                mesh,
                window,
            } => Sampler::Flm(FlmGenerator::new(joseph, latent, n, mesh, window)?, None),
            Sflm {
                joseph,
                latent,
                moses,
                mesh,
                window,
            } => Sampler::Flm(
                FlmGenerator::new(joseph, latent, n, mesh, window)?,
                weights(moses)?,
            ),
            Vdp {
                hurst,
                epsilon,
                substeps,
            } => Sampler::Vdp(VdpGenerator::new(
                hurst,
                DiffusionProfile::BiExponential { epsilon },
                n,
                substeps,
            )?),
        })
    }

    fn work(&self) -> Work {
        match self {
            Sampler::Fgn(g, _) => Work::Fgn(g.work()),
            Sampler::Flm(g, _) => Work::Flm(g.work()),
            _ => Work::None,
        }
    }

    fn sample_into(&self, stream: &mut RngStream, out: &mut [f64], work: &mut Work) {
        let weights = match (self, work) {
            (Sampler::Sbm(s), _) => {
                s.sample_into(stream, out);
                None
            }
            (Sampler::Fgn(g, w), Work::Fgn(work)) => {
                g.sample_into(stream, out, work);
                w.as_ref()
            }
            (Sampler::Stable(latent, w), _) => {
                out.iter_mut()
                    .for_each(|v| *v = stream.levy_stable_unchecked(*latent));
                w.as_ref()
            }
            (Sampler::Flm(g, w), Work::Flm(work)) => {
                g.sample_into(stream, out, work);
                w.as_ref()
            }
            (Sampler::Vdp(g), _) => {
                g.sample_into(stream, out);
                None
            }
            _ => unreachable!("work buffers match their sampler"),
        };
        if let Some(w) = weights {
            w.apply(out);
        }
    }
}

/// Generates `n_paths` independent paths of `n_steps` unit increments.
///
/// Path `p` draws from stream `(master_seed, p)`, so the output does not
/// depend on the number of worker threads.
pub fn generate(
    spec: &ProcessSpec,
    n_paths: usize,
    n_steps: usize,
    master_seed: u64,
) -> Result<PathEnsemble> {
    if n_paths == 0 || n_steps == 0 {
        return Err(Error::InvalidRange(format!(
            "need n_paths >= 1 and n_steps >= 1, got {n_paths} x {n_steps}"
        )));
    }
    spec.validate()?;
    if spec.rs_unreliable() {
        log::warn!(
            "{} with J < 1/2: R/S does not measure the Joseph exponent (R/S-unreliable)",
            spec.family()
        );
    }
    let sampler = Sampler::new(spec, n_steps)?;
    let mut increments = vec![0.0; n_paths * n_steps];
    increments
        .par_chunks_mut(n_steps)
        .enumerate()
        .for_each_init(
            || sampler.work(),
            |work, (p, row)| {
                let mut stream = RngStream::new(master_seed, p as u64);
                sampler.sample_into(&mut stream, row, work);
            },
        );
    PathEnsemble::new(n_paths, n_steps, increments, spec.descriptor(), master_seed)
}
