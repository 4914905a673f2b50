//! Lévy-stable noise and approximate fractional Lévy noise.

use std::sync::Arc;

use realfft::num_complex::Complex;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use statrs::function::gamma::gamma;

use super::fgn::check_joseph;
use crate::error::{Error, Result};
use crate::rng::{check_latent, RngStream};

/// `n` independent symmetric stable variates of latent exponent `L`.
pub fn stable_noise(latent: f64, n: usize, stream: &mut RngStream) -> Result<Vec<f64>> {
    check_latent(latent)?;
    Ok((0..n).map(|_| stream.levy_stable_unchecked(latent)).collect())
}

/// Approximate fractional Lévy noise as a discretized moving average of
/// stable noise.
///
/// Each unit step is split into `mesh` fine steps carrying stable variates of
/// scale `mesh^-L`. The unit increment ending at integer time `n + 1` is
///
/// `δ_n = mesh^(-d-L) / Γ(J + ½) · Σ_{k=1..window} h(k) ξ[mesh·(n+1) - k]`
///
/// with `d = J - ½` and `h(k) = k^d - (k - mesh)₊^d`, the difference of the
/// one-sided kernel `x₊^d` across one unit of time. The sum is evaluated for
/// all `n` at once by FFT convolution.
pub struct FlmGenerator {
    n: usize,
    latent: f64,
    mesh: usize,
    window: usize,
    noise_len: usize,
    kernel_spectrum: Vec<Complex<f64>>,
    scale: f64,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

pub struct FlmWork {
    signal: Vec<f64>,
    spectrum: Vec<Complex<f64>>,
    scratch: Vec<Complex<f64>>,
}

impl FlmGenerator {
    pub fn new(joseph: f64, latent: f64, n: usize, mesh: usize, window: usize) -> Result<Self> {
        check_joseph(joseph)?;
        check_latent(latent)?;
        if mesh < 1 {
            return Err(Error::domain("mesh", mesh as f64, "mesh >= 1"));
        }
        if window < 1 {
            return Err(Error::domain("window", window as f64, "window >= 1"));
        }
        let d = joseph - 0.5;
        let noise_len = mesh * n.saturating_sub(1) + window;
        // outputs start at index `window`, so a circular convolution of
        // any length above `noise_len` never wraps into them
        let fft_len = smooth_len(noise_len + 1);

        let mut planner = RealFftPlanner::<f64>::new();
        let r2c = planner.plan_fft_forward(fft_len);
        let c2r = planner.plan_fft_inverse(fft_len);

        let mut kernel = r2c.make_input_vec();
        for (k, slot) in kernel.iter_mut().enumerate().take(window + 1).skip(1) {
            let lead = (k as f64).powf(d);
            *slot = if k > mesh {
                lead - ((k - mesh) as f64).powf(d)
            } else {
                lead
            };
        }
        let mut kernel_spectrum = r2c.make_output_vec();
        r2c.process(&mut kernel, &mut kernel_spectrum)
            .map_err(|e| Error::Format(e.to_string()))?;

        let scale = (mesh as f64).powf(-d - latent) / gamma(joseph + 0.5) / fft_len as f64;
        Ok(FlmGenerator {
            n,
            latent,
            mesh,
            window,
            noise_len,
            kernel_spectrum,
            scale,
            r2c,
            c2r,
        })
    }

    pub fn mesh(&self) -> usize {
        self.mesh
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn work(&self) -> FlmWork {
        let scratch_len = self
            .r2c
            .get_scratch_len()
            .max(self.c2r.get_scratch_len());
        FlmWork {
            signal: self.r2c.make_input_vec(),
            spectrum: self.r2c.make_output_vec(),
            scratch: vec![Complex::default(); scratch_len],
        }
    }

    pub fn sample_into(&self, stream: &mut RngStream, out: &mut [f64], work: &mut FlmWork) {
        assert_eq!(out.len(), self.n, "output length");
        if self.n == 0 {
            return;
        }
        let (noise, pad) = work.signal.split_at_mut(self.noise_len);
        noise
            .iter_mut()
            .for_each(|v| *v = stream.levy_stable_unchecked(self.latent));
        pad.iter_mut().for_each(|v| *v = 0.0);

        self.r2c
            .process_with_scratch(&mut work.signal, &mut work.spectrum, &mut work.scratch)
            .expect("buffer sizes come from the plan");
        for (s, k) in work.spectrum.iter_mut().zip(&self.kernel_spectrum) {
            *s *= k;
        }
        // c2r requires purely real DC and Nyquist bins
        if let Some(first) = work.spectrum.first_mut() {
            first.im = 0.0;
        }
        if let Some(last) = work.spectrum.last_mut() {
            last.im = 0.0;
        }
        self.c2r
            .process_with_scratch(&mut work.spectrum, &mut work.signal, &mut work.scratch)
            .expect("buffer sizes come from the plan");

        for (i, v) in out.iter_mut().enumerate() {
            *v = self.scale * work.signal[self.mesh * i + self.window];
        }
    }
}

/// Smallest even `2^a 3^b 5^c` that is at least `min`.
fn smooth_len(min: usize) -> usize {
    let mut best = min.max(2).next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut n = 2 * p35;
            while n < min {
                n *= 2;
            }
            best = best.min(n);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

/// One approximate fractional Lévy noise sequence of length `n`.
pub fn flm_increments(
    joseph: f64,
    latent: f64,
    n: usize,
    stream: &mut RngStream,
    mesh: usize,
    window: usize,
) -> Result<Vec<f64>> {
    let generator = FlmGenerator::new(joseph, latent, n, mesh, window)?;
    let mut work = generator.work();
    let mut out = vec![0.0; n];
    generator.sample_into(stream, &mut out, &mut work);
    Ok(out)
}
