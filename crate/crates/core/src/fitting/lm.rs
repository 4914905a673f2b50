//! Damped Gauss-Newton (Levenberg-Marquardt) for `y = a·t^Ω + b·t^(Ω - c)`.
//!
//! The model is linear in `(a, b)`, so those are solved for exactly at every
//! trial point and the iteration runs over `(Ω, κ)` with `c = exp(κ)`.
//! Times are divided by their geometric mean and data by its largest
//! magnitude before solving.

use nalgebra::{DMatrix, DVector};

pub(crate) const START_C: [f64; 4] = [0.1, 0.25, 0.5, 1.0];
pub(crate) const MAX_ITERATIONS: usize = 500;
const REL_STEP_TOL: f64 = 1e-10;
const REL_COST_TOL: f64 = 1e-12;
const GRADIENT_TOL: f64 = 1e-10;
const LAMBDA_START: f64 = 1e-3;
const LAMBDA_MAX: f64 = 1e16;
pub(crate) const KAPPA_RANGE: (f64, f64) = (-9.210_340_371_976_184, 2.995_732_273_553_991); // ln 1e-4, ln 20
const OMEGA_RANGE: (f64, f64) = (-10.0, 10.0);

/// A scaled least-squares problem; `fixed_omega` removes Ω from the search.
pub(crate) struct Problem {
    pub(crate) u: Vec<f64>,
    pub(crate) ln_u: Vec<f64>,
    pub(crate) y: Vec<f64>,
    pub(crate) w: Vec<f64>,
    pub(crate) fixed_omega: Option<f64>,
    /// Lower bound on `κ = ln c`.
    pub(crate) kappa_min: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Params {
    pub(crate) omega: f64,
    pub(crate) a: f64,
    pub(crate) b: f64,
    pub(crate) kappa: f64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Outcome {
    pub(crate) params: Params,
    pub(crate) cost: f64,
    pub(crate) converged: bool,
    pub(crate) iterations: usize,
}


impl Problem {
    fn n_free(&self) -> usize {
        if self.fixed_omega.is_some() {
            1
        } else {
            2
        }
    }

    /// Completes `(Ω, κ)` with the best amplitudes and returns the cost.
    fn project(&self, omega: f64, kappa: f64) -> (Params, f64) {
        let (a, b) = self.linear_amplitudes(omega, kappa.exp());
        let p = Params { omega, a, b, kappa };
        (p, self.cost(&p))
    }

    pub(crate) fn cost(&self, p: &Params) -> f64 {
        let c = p.kappa.exp();
        let mut s = 0.0;
        for i in 0..self.u.len() {
            let lead = (p.omega * self.ln_u[i]).exp();
            let corr = ((p.omega - c) * self.ln_u[i]).exp();
            let r = self.y[i] - p.a * lead - p.b * corr;
            s += self.w[i] * r * r;
        }
        s
    }

    /// Normal equations for the nonlinear parameters after the amplitudes
    /// are eliminated. The Jacobian columns are projected onto the weighted
    /// complement of the amplitude basis (Kaufman's approximation).
    fn normal_equations(&self, p: &Params) -> (DMatrix<f64>, DVector<f64>) {
        let k = self.n_free();
        let n = self.u.len();
        let c = p.kappa.exp();
        let mut f1 = vec![0.0; n];
        let mut f2 = vec![0.0; n];
        let mut cols = vec![vec![0.0; n]; k];
        let mut r = vec![0.0; n];
        for i in 0..n {
            let l = self.ln_u[i];
            f1[i] = (p.omega * l).exp();
            f2[i] = ((p.omega - c) * l).exp();
            r[i] = self.y[i] - p.a * f1[i] - p.b * f2[i];
            if k == 2 {
                cols[0][i] = (p.a * f1[i] + p.b * f2[i]) * l;
            }
            cols[k - 1][i] = -p.b * f2[i] * l * c;
        }
        let dot = |x: &[f64], y: &[f64]| -> f64 { (0..n).map(|i| self.w[i] * x[i] * y[i]).sum() };
        let (s11, s12, s22) = (dot(&f1, &f1), dot(&f1, &f2), dot(&f2, &f2));
        let det = s11 * s22 - s12 * s12;
        for col in cols.iter_mut() {
            let (g1, g2) = (dot(&f1, col), dot(&f2, col));
            let (x1, x2) = if det.abs() > 1e-12 * s11 * s22 && det.is_finite() {
                ((g1 * s22 - g2 * s12) / det, (s11 * g2 - s12 * g1) / det)
            } else {
                (g1 / s11, 0.0)
            };
            for i in 0..n {
                col[i] -= x1 * f1[i] + x2 * f2[i];
            }
        }
        let mut jtj = DMatrix::zeros(k, k);
        let mut jtr = DVector::zeros(k);
        for m in 0..k {
            jtr[m] = dot(&cols[m], &r);
            for q in 0..k {
                jtj[(m, q)] = dot(&cols[m], &cols[q]);
            }
        }
        (jtj, jtr)
    }

    fn step_from(&self, p: &Params, d: &DVector<f64>) -> (f64, f64) {
        let (omega, kappa) = match self.fixed_omega {
            Some(o) => (o, p.kappa + d[0]),
            None => (p.omega + d[0], p.kappa + d[1]),
        };
        (
            omega.clamp(OMEGA_RANGE.0, OMEGA_RANGE.1),
            kappa.clamp(self.kappa_min, KAPPA_RANGE.1),
        )
    }

    /// Weighted linear solve for `(a, b)` with `Ω` and `c` held fixed.
    pub(crate) fn linear_amplitudes(&self, omega: f64, c: f64) -> (f64, f64) {
        let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..self.u.len() {
            let f1 = (omega * self.ln_u[i]).exp();
            let f2 = ((omega - c) * self.ln_u[i]).exp();
            let w = self.w[i];
            s11 += w * f1 * f1;
            s12 += w * f1 * f2;
            s22 += w * f2 * f2;
            r1 += w * f1 * self.y[i];
            r2 += w * f2 * self.y[i];
        }
        let det = s11 * s22 - s12 * s12;
        if det.abs() > 1e-12 * s11 * s22 && det.is_finite() {
            ((r1 * s22 - r2 * s12) / det, (s11 * r2 - s12 * r1) / det)
        } else {
            (r1 / s11, 0.0)
        }
    }

    /// Least-squares slope of `ln y` against `ln u` over the last decade of
    /// times, or 0 when the data there are not all positive.
    pub(crate) fn tail_slope(&self) -> f64 {
        let n = self.u.len();
        let cut = self.ln_u[n - 1] - std::f64::consts::LN_10;
        let mut idx: Vec<usize> = (0..n).filter(|&i| self.ln_u[i] >= cut).collect();
        if idx.len() < 2 {
            idx = (0..n).collect();
        }
        if idx.iter().any(|&i| self.y[i] <= 0.0) {
            return 0.0;
        }
        let m = idx.len() as f64;
        let mx = idx.iter().map(|&i| self.ln_u[i]).sum::<f64>() / m;
        let my = idx.iter().map(|&i| self.y[i].ln()).sum::<f64>() / m;
        let (mut sxy, mut sxx) = (0.0, 0.0);
        for &i in &idx {
            let dx = self.ln_u[i] - mx;
            sxx += dx * dx;
            sxy += dx * (self.y[i].ln() - my);
        }
        if sxx > 0.0 {
            (sxy / sxx).clamp(OMEGA_RANGE.0, OMEGA_RANGE.1)
        } else {
            0.0
        }
    }

    /// Damped iterations over `(Ω, κ)`, or `κ` alone when `Ω` is fixed.
    pub(crate) fn solve(&self, omega0: f64, c0: f64) -> Outcome {
        let k = self.n_free();
        let scale: f64 = self.y.iter().zip(&self.w).map(|(y, w)| w * y * y).sum();
        let omega0 = self.fixed_omega.unwrap_or(omega0).clamp(OMEGA_RANGE.0, OMEGA_RANGE.1);
        let (mut p, mut cost) = self.project(omega0, c0.ln().clamp(self.kappa_min, KAPPA_RANGE.1));
        let mut lambda = LAMBDA_START;
        let mut converged = false;
        let mut iterations = 0;
        while iterations < MAX_ITERATIONS {
            iterations += 1;
            if cost <= 1e-30 * scale {
                converged = true;
                break;
            }
            let (mut jtj, mut jtr) = self.normal_equations(&p);
            // a correction exponent held at a bound while the descent
            // direction points outward is frozen for this iteration
            let kk = k - 1;
            let outward = (p.kappa <= self.kappa_min && jtr[kk] < 0.0) || (p.kappa >= KAPPA_RANGE.1 && jtr[kk] > 0.0);
            if outward {
                for m in 0..k {
                    jtj[(kk, m)] = 0.0;
                    jtj[(m, kk)] = 0.0;
                }
                jtj[(kk, kk)] = 1.0;
                jtr[kk] = 0.0;
            }
            let floor = (0..k).map(|m| jtj[(m, m)]).fold(0.0, f64::max) * 1e-15;
            let gradient_small = (0..k).all(|m| {
                let d = jtj[(m, m)];
                d <= 0.0 || jtr[m].abs() <= GRADIENT_TOL * (d * cost).sqrt()
            });
            if gradient_small {
                converged = true;
                break;
            }
            let mut accepted = false;
            while lambda <= LAMBDA_MAX {
                let mut damped = jtj.clone();
                for m in 0..k {
                    damped[(m, m)] += lambda * jtj[(m, m)].max(floor).max(f64::MIN_POSITIVE);
                }
                let step = match damped.cholesky() {
                    Some(ch) => ch.solve(&jtr),
                    None => {
                        lambda *= 10.0;
                        continue;
                    }
                };
                let (omega, kappa) = self.step_from(&p, &step);
                let (trial, trial_cost) = self.project(omega, kappa);
                if trial_cost.is_finite() && trial_cost < cost {
                    let moved = ((trial.omega - p.omega).powi(2) + (trial.kappa - p.kappa).powi(2)).sqrt();
                    let rel_step = moved / ((p.omega.powi(2) + p.kappa.powi(2)).sqrt() + 1e-12);
                    let rel_cost = (cost - trial_cost) / cost;
                    // gain ratio against the local quadratic model; steps that
                    // overshoot along a weakly curved direction raise the damping
                    let predicted = 2.0 * step.dot(&jtr) - step.dot(&(&jtj * &step));
                    let rho = (cost - trial_cost) / predicted;
                    p = trial;
                    cost = trial_cost;
                    lambda = if predicted > 0.0 && rho.is_finite() {
                        (lambda * (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0)).max(1e-12)
                    } else {
                        lambda
                    };
                    accepted = true;
                    if rel_step < REL_STEP_TOL || rel_cost < REL_COST_TOL {
                        converged = true;
                    }
                    break;
                }
                lambda *= 10.0;
            }
            if !accepted {
                // no damping gives descent: a stationary point or a bound
                converged = true;
                break;
            }
            if converged {
                break;
            }
        }
        Outcome {
            params: p,
            cost,
            converged,
            iterations,
        }
    }
}

