//! Path ensembles stored as unit-time increments.

use crate::error::{Error, Result};

/// `n_paths` realizations of a process, each stored as its `n_steps`
/// unit-time increments. Positions are prefix sums, so every path starts at
/// `X_0 = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    n_paths: usize,
    n_steps: usize,
    increments: Vec<f64>,
    descriptor: String,
    master_seed: u64,
}

/// `(X_t, Y_t, Z_t)` for one path: the sums of the first `t` increments,
/// their absolute values, and their squares.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PartialSums {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl PartialSums {
    #[inline]
    pub fn push(&mut self, delta: f64) {
        self.x += delta;
        self.y += delta.abs();
        self.z += delta * delta;
    }
}

impl PathEnsemble {
    /// Builds an ensemble from row-major increments.
    pub fn new(
        n_paths: usize,
        n_steps: usize,
        increments: Vec<f64>,
        descriptor: impl Into<String>,
        master_seed: u64,
    ) -> Result<Self> {
        if n_paths == 0 || n_steps == 0 {
            return Err(Error::EmptyInput);
        }
        if increments.len() != n_paths * n_steps {
            return Err(Error::Format(format!(
                "{} increments for a {n_paths} x {n_steps} ensemble",
                increments.len()
            )));
        }
        Ok(PathEnsemble {
            n_paths,
            n_steps,
            increments,
            descriptor: descriptor.into(),
            master_seed,
        })
    }

    /// Builds an ensemble from per-path rows, which must share one length.
    pub fn from_rows(
        rows: Vec<Vec<f64>>,
        descriptor: impl Into<String>,
        master_seed: u64,
    ) -> Result<Self> {
        let n_paths = rows.len();
        let n_steps = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_steps) {
            return Err(Error::Format("rows have different lengths".into()));
        }
        let increments = rows.into_iter().flatten().collect();
        Self::new(n_paths, n_steps, increments, descriptor, master_seed)
    }

    pub fn n_paths(&self) -> usize {
        self.n_paths
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn descriptor(&self) -> &str {
        &self.descriptor
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn into_increments(self) -> Vec<f64> {
        self.increments
    }

    pub fn path(&self, p: usize) -> &[f64] {
        &self.increments[p * self.n_steps..(p + 1) * self.n_steps]
    }

    pub fn paths(&self) -> std::slice::ChunksExact<'_, f64> {
        self.increments.chunks_exact(self.n_steps)
    }

    /// Same data, new label.
    pub fn with_descriptor(mut self, descriptor: impl Into<String>) -> Self {
        self.descriptor = descriptor.into();
        self
    }

    /// Positions `X_1..=X_n` of path `p`.
    pub fn positions(&self, p: usize) -> Vec<f64> {
        self.path(p)
            .iter()
            .scan(0.0, |x, &d| {
                *x += d;
                Some(*x)
            })
            .collect()
    }
}

/// `(X_t, Y_t, Z_t)` for every path at a single time `t`.
pub fn partial_sums(ensemble: &PathEnsemble, t: usize) -> Result<Vec<PartialSums>> {
    if t < 1 || t > ensemble.n_steps() {
        return Err(Error::OutOfRange {
            t,
            n_steps: ensemble.n_steps(),
        });
    }
    Ok(ensemble
        .paths()
        .map(|path| {
            let mut s = PartialSums::default();
            path[..t].iter().for_each(|&d| s.push(d));
            s
        })
        .collect())
}

/// Partial sums of one path at each of the increasing `times`, computed in a
/// single pass over the path.
pub fn partial_sums_at(path: &[f64], times: &[usize]) -> Result<Vec<PartialSums>> {
    let mut out = Vec::with_capacity(times.len());
    let mut sums = PartialSums::default();
    let mut done = 0;
    for &t in times {
        if t < 1 || t > path.len() || t < done {
            return Err(Error::OutOfRange {
                t,
                n_steps: path.len(),
            });
        }
        path[done..t].iter().for_each(|&d| sums.push(d));
        done = t;
        out.push(sums);
    }
    Ok(out)
}
