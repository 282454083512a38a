use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::field::SpaceTimeField;
use crate::error::{Error, Result};

/// Uniform periodic grid `x_m = x_min + m·dx`, `m = 0..n`, of period `n·dx`.
#[derive(Clone)]
pub struct PeriodicGrid {
    pub x_min: f64,
    pub dx: f64,
    pub n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PeriodicGrid")
            .field("x_min", &self.x_min)
            .field("dx", &self.dx)
            .field("n", &self.n)
            .finish()
    }
}

impl PeriodicGrid {
    pub fn new(x_min: f64, dx: f64, n: usize) -> Result<Self> {
        if !(dx > 0.0) || n < 4 {
            return Err(Error::InvalidConfig(format!("periodic grid dx = {dx}, n = {n}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            x_min,
            dx,
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        })
    }

    /// Grid symmetric about 0: `[−half_width, half_width)`.
    pub fn centered(half_width: f64, n: usize) -> Result<Self> {
        Self::new(-half_width, 2.0 * half_width / n as f64, n)
    }

    pub fn x(&self, m: usize) -> f64 {
        self.x_min + m as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|m| self.x(m)).collect()
    }

    /// Discrete wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as isize;
        let base = 2.0 * PI / (self.n as f64 * self.dx);
        (0..n)
            .map(|m| if m < (n + 1) / 2 { m } else { m - n })
            .map(|m| base * m as f64)
            .collect()
    }

    /// Normalized coefficients `ψ̂_m` with `ψ(x_j) = Σ_m ψ̂_m e^{iξ_m (x_j − x_min)}`.
    pub fn transform(&self, psi: &[C64]) -> Result<Vec<C64>> {
        self.check(psi)?;
        let mut buf = psi.to_vec();
        self.forward.process(&mut buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|z| *z *= s);
        Ok(buf)
    }

    pub fn synthesize(&self, coeffs: &[C64]) -> Result<Vec<C64>> {
        self.check(coeffs)?;
        let mut buf = coeffs.to_vec();
        self.inverse.process(&mut buf);
        Ok(buf)
    }

    fn check(&self, v: &[C64]) -> Result<()> {
        if v.len() != self.n {
            return Err(Error::BadShape {
                expected: self.n,
                got: v.len(),
            });
        }
        Ok(())
    }

    pub fn mass(&self, psi: &[C64]) -> f64 {
        psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }
}

/// `e^{it∂ₓ⁴}ψ`: multiply the discrete spectrum by `e^{−itξ⁴}`.
pub fn free_propagator(grid: &PeriodicGrid, psi: &[C64], t: f64) -> Result<Vec<C64>> {
    let mut c = grid.transform(psi)?;
    for (z, xi) in c.iter_mut().zip(grid.wavenumbers()) {
        *z *= C64::from_polar(1.0, -t * xi.powi(4));
    }
    grid.synthesize(&c)
}

/// `∂ₓᵏ(e^{it∂ₓ⁴}ψ)(x)` at one point for each time, summed directly over modes.
pub fn free_point_values(
    grid: &PeriodicGrid,
    psi: &[C64],
    x: f64,
    order: u32,
    times: &[f64],
) -> Result<Vec<C64>> {
    let coeffs = grid.transform(psi)?;
    let xi = grid.wavenumbers();
    let weighted: Vec<(f64, C64)> = xi
        .iter()
        .zip(&coeffs)
        .map(|(&k, &c)| {
            let d = C64::new(0.0, k).powu(order);
            (k.powi(4), c * d * C64::from_polar(1.0, k * (x - grid.x_min)))
        })
        .collect();
    let peak = weighted.iter().map(|w| w.1.norm()).fold(0.0, f64::max);
    let weighted: Vec<(f64, C64)> = weighted
        .into_iter()
        .filter(|w| w.1.norm() > 1e-17 * peak)
        .collect();
    Ok(times
        .par_iter()
        .map(|&t| weighted.iter().map(|&(k4, c)| c * C64::from_polar(1.0, -t * k4)).sum())
        .collect())
}

/// Duhamel term `−i ∫₀ᵗ e^{i(t−t′)∂ₓ⁴} w(t′) dt′` by the trapezoid rule in `t′`.
///
/// The field must live on `grid` and carry uniformly spaced time levels from 0.
pub fn duhamel(grid: &PeriodicGrid, w: &SpaceTimeField) -> Result<SpaceTimeField> {
    if w.nx() != grid.n {
        return Err(Error::BadShape {
            expected: grid.n,
            got: w.nx(),
        });
    }
    let nt = w.nt();
    let dt = if nt > 1 { w.times()[1] - w.times()[0] } else { 0.0 };
    let spectra = (0..nt)
        .map(|k| grid.transform(w.level(k)))
        .collect::<Result<Vec<_>>>()?;
    let xi4: Vec<f64> = grid.wavenumbers().iter().map(|k| k.powi(4)).collect();
    let levels = (0..nt)
        .into_par_iter()
        .map(|k| {
            let mut acc = vec![C64::new(0.0, 0.0); grid.n];
            for (j, spec) in spectra.iter().enumerate().take(k + 1) {
                let c = if k == 0 {
                    0.0
                } else if j == 0 || j == k {
                    0.5 * dt
                } else {
                    dt
                };
                let lag = (k - j) as f64 * dt;
                for ((a, s), q) in acc.iter_mut().zip(spec).zip(&xi4) {
                    *a += s * C64::from_polar(c, -lag * q);
                }
            }
            acc.iter_mut().for_each(|z| *z *= C64::new(0.0, -1.0));
            grid.synthesize(&acc)
        })
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(w.times().to_vec(), w.x_min(), w.dx(), levels.concat())
}
