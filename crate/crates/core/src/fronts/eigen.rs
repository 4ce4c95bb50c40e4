//! Principal eigenvalue `k(lambda e)` of the exponentially weighted cell operator.
//!
//! With `phi = exp(-lambda e . x) psi`, the zero-flux graph Laplacian acting on
//! `phi` becomes, on periodic `psi`,
//! `sum_open coef_d (w(z_d) psi_nb - psi) + r psi` with `z_d = lambda e . delta_d`.
//! Using `w(z) = 1 - z + z^2/2` in place of `exp(-z)` makes the free-plane
//! eigenvalue exactly `lambda^2 e.Ae + r`; `w > 0` keeps the matrix Metzler, so
//! the principal eigenvector is positive. Blocked faces are dropped, which is
//! the discrete form of the oblique boundary condition.

use crate::dynamics::DiffusionTensor;
use crate::geometry::PeriodicCellMask;
use crate::{Error, Result};

/// Converged eigenvalue with its Collatz-Wielandt bracket.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenEstimate {
    pub k: f64,
    pub lower: f64,
    pub upper: f64,
    pub steps: usize,
}

/// Periodic cell operator with a reusable, warm-started iteration vector.
#[derive(Debug, Clone)]
pub struct EigenSolver {
    n: usize,
    /// Neighbor slots `+x, -x, +y, -y`; blocked faces point at the zero slot `n`.
    neighbors: Vec<[u32; 4]>,
    /// `sum_open coef_d - r` per fluid cell.
    diag: Vec<f64>,
    coef: [f64; 4],
    delta: [(f64, f64); 4],
    rate: f64,
    tau: f64,
    psi: Vec<f64>,
    work: Vec<f64>,
    pub tolerance: f64,
    pub max_steps: usize,
}

/// Largest number of steps between bracket checks and renormalizations.
const BLOCK: usize = 64;

impl EigenSolver {
    pub fn new(mask: &PeriodicCellMask, diffusion: &DiffusionTensor, rate: f64) -> Result<Self> {
        if !(rate > 0.0) {
            return Err(Error::config(format!(
                "linear rate f'(0) = {rate} must be positive for the eigenvalue route"
            )));
        }
        let (nx, ny) = mask.dims();
        let mut slot = vec![u32::MAX; nx * ny];
        let mut n = 0u32;
        for j in 0..ny {
            for i in 0..nx {
                if mask.is_fluid(i as i64, j as i64) {
                    slot[j * nx + i] = n;
                    n += 1;
                }
            }
        }
        let dx = mask.dx();
        let (cx, cy) = (diffusion.a / (dx * dx), diffusion.b / (dx * dx));
        let coef = [cx, cx, cy, cy];
        let steps = [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)];
        let mut neighbors = Vec::with_capacity(n as usize);
        let mut diag = Vec::with_capacity(n as usize);
        for j in 0..ny as i64 {
            for i in 0..nx as i64 {
                if !mask.is_fluid(i, j) {
                    continue;
                }
                let mut nb = [n; 4];
                let mut open = 0.0;
                for (d, &(di, dj)) in steps.iter().enumerate() {
                    let (ni, nj) = (
                        (i + di).rem_euclid(nx as i64),
                        (j + dj).rem_euclid(ny as i64),
                    );
                    let s = slot[nj as usize * nx + ni as usize];
                    if s != u32::MAX {
                        nb[d] = s;
                        open += coef[d];
                    }
                }
                neighbors.push(nb);
                diag.push(open - rate);
            }
        }
        let n = n as usize;
        let mut psi = vec![1.0; n + 1];
        psi[n] = 0.0;
        Ok(EigenSolver {
            n,
            neighbors,
            diag,
            coef,
            delta: [(dx, 0.0), (-dx, 0.0), (0.0, dx), (0.0, -dx)],
            rate,
            tau: 0.95 / (2.0 * (cx + cy)),
            psi,
            work: vec![0.0; n + 1],
            tolerance: 1e-8,
            max_steps: 50_000_000,
        })
    }

    pub fn fluid_cells(&self) -> usize {
        self.n
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Resets the warm-start vector to a constant.
    pub fn reset(&mut self) {
        self.psi[..self.n].fill(1.0);
    }

    /// Principal eigenvalue for the weight `lambda e` (`e` need not be normalized).
    pub fn eigenvalue(&mut self, e: (f64, f64), lambda: f64) -> Result<EigenEstimate> {
        let w = |z: f64| 1.0 - z + 0.5 * z * z;
        let cw: [f64; 4] = std::array::from_fn(|d| {
            let z = lambda * (e.0 * self.delta[d].0 + e.1 * self.delta[d].1);
            self.coef[d] * w(z)
        });
        let n = self.n;
        let tau = self.tau;
        // Keep the growth between renormalizations far from overflow.
        let growth = (1.0 + tau * cw.iter().sum::<f64>()).log10();
        let block = ((200.0 / growth.max(1e-3)) as usize).clamp(1, BLOCK);
        let mut steps = 0usize;
        let mut last = f64::NAN;
        loop {
            // Block of plain steps psi <- psi + tau M psi.
            for _ in 0..block {
                apply(&self.neighbors, &self.diag, &cw, &self.psi, &mut self.work);
                for (p, m) in self.psi[..n].iter_mut().zip(&self.work[..n]) {
                    *p += tau * *m;
                }
            }
            steps += block;
            apply(&self.neighbors, &self.diag, &cw, &self.psi, &mut self.work);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            let (mut sum_m, mut sum_p) = (0.0, 0.0);
            for (&p, &m) in self.psi[..n].iter().zip(&self.work[..n]) {
                let q = m / p;
                lo = lo.min(q);
                hi = hi.max(q);
                sum_m += m;
                sum_p += p;
            }
            let estimate = sum_m / sum_p;
            let scale = n as f64 / sum_p;
            for p in &mut self.psi[..n] {
                *p *= scale;
            }
            if !(lo.is_finite() && hi.is_finite()) {
                self.reset();
                return Err(Error::NonConvergence(format!(
                    "iteration vector lost positivity at lambda = {lambda}"
                )));
            }
            let tol = self.tolerance * estimate.abs().max(1.0);
            if hi - lo <= tol || (hi - lo <= 1e3 * tol && (estimate - last).abs() <= 1e-3 * tol) {
                return Ok(EigenEstimate {
                    k: estimate.clamp(lo, hi),
                    lower: lo,
                    upper: hi,
                    steps,
                });
            }
            last = estimate;
            if steps >= self.max_steps {
                return Err(Error::NonConvergence(format!(
                    "principal eigenvalue at lambda = {lambda}: bracket [{lo}, {hi}] after {steps} steps"
                )));
            }
        }
    }
}

#[inline]
fn apply(neighbors: &[[u32; 4]], diag: &[f64], cw: &[f64; 4], psi: &[f64], out: &mut [f64]) {
    for (k, (nb, &dg)) in neighbors.iter().zip(diag).enumerate() {
        out[k] = cw[0] * psi[nb[0] as usize]
            + cw[1] * psi[nb[1] as usize]
            + cw[2] * psi[nb[2] as usize]
            + cw[3] * psi[nb[3] as usize]
            - dg * psi[k];
    }
}

/// Principal eigenvalue `k(lambda e)` on `mask` for `f'(0) = rate`.
pub fn kpp_eigenvalue(
    mask: &PeriodicCellMask,
    diffusion: &DiffusionTensor,
    rate: f64,
    e: (f64, f64),
    lambda: f64,
) -> Result<EigenEstimate> {
    EigenSolver::new(mask, diffusion, rate)?.eigenvalue(e, lambda)
}
