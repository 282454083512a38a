//! Boundary forcing operators on the half-line `x ≥ 0`.
//!
//! `L⁰f(t, y) = M ∫₀ᵗ B(y/τ^{1/4}) τ^{−1/4} h(t − τ) dτ` with `h = I_{−3/4} f`.
//! Over each lag cell `[nΔt, (n+1)Δt]` the data `h` is linear and the kernel
//! integrals reduce, through `z = yτ^{−1/4}`, to differences of the cumulative
//! moments `C_4`, `C_8` of `B`. The resulting weights form a Toeplitz-in-time
//! matrix per `y`, computed once per grid.
//!
//! Fractional orders use the Weyl integral `W^ν G(x) = (1/Γ(ν)) ∫ₓ^∞ (y−x)^{ν−1} G(y) dy`:
//! with `G = L⁰(I_{−λ/4} g)` and `m` extra `y`-derivatives,
//! `L^λ g = (−1)^m W^{λ+m}(∂_y^m G)` and `∂ₓᵏ L^λ g = (−1)^m W^{λ+m}(∂_y^{m+k} G)`.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use super::field::SpaceTimeField;
use super::kernel::{kernel_moments, KernelMoments};
use crate::error::{Error, Result};
use crate::fractional::{frac_power, SampledSignal};
use crate::vertex_algebra::{b_at_origin, universal_constant};

/// Time steps and truncated half-line `y ∈ [0, y_max]` for the forcing operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForcingGrid {
    pub dt: f64,
    pub steps: usize,
    pub dy: f64,
    pub y_max: f64,
}

impl Default for ForcingGrid {
    fn default() -> Self {
        Self {
            dt: 0.005,
            steps: 200,
            dy: 0.02,
            y_max: 20.0,
        }
    }
}

impl ForcingGrid {
    pub fn ny(&self) -> usize {
        (self.y_max / self.dy).round() as usize + 1
    }

    pub fn y(&self, i: usize) -> f64 {
        i as f64 * self.dy
    }

    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.dt
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dy > 0.0 && self.y_max >= 8.0 * self.dy && self.steps >= 2) {
            return Err(Error::InvalidConfig(format!("forcing grid {self:?}")));
        }
        Ok(())
    }
}

/// How negative orders `λ ∈ (−4, 0)` are represented.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NegativeOrderRoute {
    /// `(−1)^m W^{λ+m} ∂_y^m L⁰(I_{−λ/4} g)` with the fewest derivatives `m = ⌈−λ⌉`.
    #[default]
    MinimalDerivative,
    /// `i W^{λ+4} L⁰(∂ₜ I_{−λ/4} g)`, derivative-free in `y` but with the
    /// slowly decaying weight `(y − x)^{λ+3}`.
    FourthDerivative,
}

/// `L^λ = factor · W^ν ∂_y^derivs L⁰ I_{h_order + 3/4}`, with `ν = 0` meaning no integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylForm {
    pub nu: f64,
    pub derivs: usize,
    pub factor: C64,
    /// Order `s` with `h = I_s g` fed to the `L⁰` quadrature.
    pub h_order: f64,
}

impl WeylForm {
    pub fn new(lambda: f64, route: NegativeOrderRoute) -> Result<Self> {
        if !(lambda > -4.0 && lambda <= 0.5) {
            return Err(Error::BadOrder(lambda));
        }
        let one = C64::new(1.0, 0.0);
        let base = -0.75 - lambda / 4.0;
        Ok(if lambda >= 0.0 {
            Self {
                nu: lambda,
                derivs: 0,
                factor: one,
                h_order: base,
            }
        } else {
            match route {
                NegativeOrderRoute::MinimalDerivative => {
                    let m = (-lambda).ceil() as usize;
                    Self {
                        nu: lambda + m as f64,
                        derivs: m,
                        factor: if m.is_multiple_of(2) { one } else { -one },
                        h_order: base,
                    }
                }
                NegativeOrderRoute::FourthDerivative => Self {
                    nu: lambda + 4.0,
                    derivs: 0,
                    factor: C64::new(0.0, 1.0),
                    h_order: base - 1.0,
                },
            }
        })
    }
}

/// Fornberg weights for the `k`-th derivative at 0 from nodes `offsets`.
pub fn fd_weights(offsets: &[f64], k: usize) -> Vec<f64> {
    let n = offsets.len();
    let mut c = vec![vec![0.0; k + 1]; n];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = offsets[0];
    for i in 1..n {
        let mn = i.min(k);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = offsets[i];
        for j in 0..i {
            let c3 = offsets[i] - offsets[j];
            c2 *= c3;
            if j == i - 1 {
                for d in (1..=mn).rev() {
                    c[i][d] = c1 * (d as f64 * c[i - 1][d - 1] - c5 * c[i - 1][d]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for d in (1..=mn).rev() {
                c[j][d] = (c4 * c[j][d] - d as f64 * c[j][d - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[k]).collect()
}

const FD_POINTS: usize = 8;

/// `k`-th derivative of a uniformly sampled profile with 8-point stencils,
/// centred where possible and shifted inwards at the ends.
pub fn derivative(profile: &[C64], h: f64, k: usize) -> Vec<C64> {
    if k == 0 {
        return profile.to_vec();
    }
    let n = profile.len();
    let npts = FD_POINTS.min(n);
    let half = npts / 2;
    let scale = h.powi(-(k as i32));
    let mut cache: Vec<Option<Vec<f64>>> = vec![None; npts];
    (0..n)
        .map(|i| {
            let start = i.saturating_sub(half).min(n - npts);
            let shift = i - start;
            let w = cache[shift].get_or_insert_with(|| {
                let offs: Vec<f64> = (0..npts).map(|q| q as f64 - shift as f64).collect();
                fd_weights(&offs, k)
            });
            profile[start..start + npts]
                .iter()
                .zip(w.iter())
                .map(|(p, w)| p * *w)
                .sum::<C64>()
                * scale
        })
        .collect()
}

/// Weyl integral `W^ν G(x_i)` over the truncated grid by product integration
/// against the piecewise-linear interpolant; `ν = 0` returns `G(x_i)`.
pub struct WeylIntegrator {
    nu: f64,
    scale: f64,
    p: Vec<f64>,
}

impl WeylIntegrator {
    pub fn new(nu: f64, h: f64, n: usize) -> Self {
        let p = (0..=n + 1).map(|d| (d as f64).powf(nu + 1.0)).collect();
        let scale = if nu > 0.0 { h.powf(nu) / gamma(nu + 2.0) } else { 1.0 };
        Self { nu, scale, p }
    }

    fn weight(&self, d: usize, n: usize) -> f64 {
        let nu = self.nu;
        if d == 0 {
            1.0
        } else if d == n {
            let nf = n as f64;
            self.p[n - 1] - (nf - 1.0 - nu) * nf.powf(nu)
        } else {
            self.p[d + 1] - 2.0 * self.p[d] + self.p[d - 1]
        }
    }

    /// Returns the value and the share contributed by the outer tenth of the range.
    pub fn at(&self, g: &[C64], i: usize) -> (C64, C64) {
        if self.nu == 0.0 {
            return (g[i], C64::new(0.0, 0.0));
        }
        let n = g.len() - 1 - i;
        let outer = n - n / 10;
        let mut total = C64::new(0.0, 0.0);
        let mut tail = C64::new(0.0, 0.0);
        for d in 0..=n {
            let v = g[i + d] * self.weight(d, n);
            total += v;
            if d >= outer {
                tail += v;
            }
        }
        (total * self.scale, tail * self.scale)
    }
}

/// The `L⁰` quadrature weights for one grid.
pub struct LZeroOperator {
    grid: ForcingGrid,
    /// `weights[i·(K+1) + n]` multiplies `h(t_k − nΔt)` at `y_i`.
    weights: Vec<C64>,
}

impl LZeroOperator {
    pub fn new(grid: ForcingGrid) -> Result<Self> {
        grid.validate()?;
        let moments = kernel_moments()?;
        let k1 = grid.steps + 1;
        let rows: Vec<Vec<C64>> = (0..grid.ny())
            .into_par_iter()
            .map(|i| Self::row(moments, &grid, grid.y(i)))
            .collect();
        Ok(Self {
            grid,
            weights: rows.into_iter().flat_map(|r| {
                debug_assert_eq!(r.len(), k1);
                r
            }).collect(),
        })
    }

    fn row(km: &KernelMoments, grid: &ForcingGrid, y: f64) -> Vec<C64> {
        let (dt, steps) = (grid.dt, grid.steps);
        let mut w = vec![C64::new(0.0, 0.0); steps + 1];
        let m = universal_constant();
        let b0 = b_at_origin();
        let (y3, y7) = (4.0 * y.powi(3), 4.0 * y.powi(7));
        let z_of = |tau: f64| if tau > 0.0 { y / tau.sqrt().sqrt() } else { f64::INFINITY };
        let (mut c4a, mut c8a) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for n in 0..steps {
            let (ta, tb) = (n as f64 * dt, (n + 1) as f64 * dt);
            let (j0, j1) = if y == 0.0 {
                (
                    b0 * (tb.powf(0.75) - ta.powf(0.75)) / 0.75,
                    b0 * (tb.powf(1.75) - ta.powf(1.75)) / 1.75,
                )
            } else {
                let zb = z_of(tb);
                let (c4b, c8b) = (km.c(4, zb), km.c(8, zb));
                let r = ((c4b - c4a) * y3, (c8b - c8a) * y7);
                c4a = c4b;
                c8a = c8b;
                r
            };
            let slope = (j1 - j0 * ta) / dt;
            w[n] += (j0 - slope) * m;
            w[n + 1] += slope * m;
        }
        w
    }

    pub fn grid(&self) -> &ForcingGrid {
        &self.grid
    }

    /// `L⁰` applied to data whose `I_{−3/4}` transform is `h`, at time indices `times`:
    /// returns `[time][y]`.
    pub fn apply(&self, h: &[C64], times: &[usize]) -> Result<Vec<Vec<C64>>> {
        let k1 = self.grid.steps + 1;
        if h.len() != k1 {
            return Err(Error::BadShape {
                expected: k1,
                got: h.len(),
            });
        }
        if let Some(&bad) = times.iter().find(|&&k| k >= k1) {
            return Err(Error::BadShape {
                expected: k1,
                got: bad + 1,
            });
        }
        let ny = self.grid.ny();
        let cols: Vec<Vec<C64>> = (0..ny)
            .into_par_iter()
            .map(|i| {
                let w = &self.weights[i * k1..(i + 1) * k1];
                times
                    .iter()
                    .map(|&k| (0..=k).map(|n| w[n] * h[k - n]).sum())
                    .collect()
            })
            .collect();
        Ok((0..times.len())
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect())
    }

    /// Potential of `L^λ g` at the given time indices.
    pub fn potential(
        &self,
        g: &SampledSignal,
        lambda: f64,
        route: NegativeOrderRoute,
        times: &[usize],
    ) -> Result<LambdaPotential> {
        if g.len() != self.grid.steps + 1 || (g.dt() - self.grid.dt).abs() > 1e-12 * self.grid.dt {
            return Err(Error::BadShape {
                expected: self.grid.steps + 1,
                got: g.len(),
            });
        }
        let form = WeylForm::new(lambda, route)?;
        let h = frac_power(g, form.h_order)?;
        let base = self.apply(h.samples(), times)?;
        Ok(LambdaPotential {
            form,
            dy: self.grid.dy,
            times: times.to_vec(),
            base,
        })
    }
}

/// `G = L⁰(·)` sampled at selected times, with the representation of `L^λ`.
pub struct LambdaPotential {
    pub form: WeylForm,
    dy: f64,
    pub times: Vec<usize>,
    base: Vec<Vec<C64>>,
}

impl LambdaPotential {
    fn integrand(&self, slot: usize, order: usize) -> Vec<C64> {
        derivative(&self.base[slot], self.dy, self.form.derivs + order)
    }

    /// `∂ₓᵏ L^λ g(t, 0⁺)` at each stored time.
    pub fn trace(&self, order: usize) -> Vec<C64> {
        let ny = self.base.first().map_or(0, Vec::len);
        let weyl = WeylIntegrator::new(self.form.nu, self.dy, ny);
        (0..self.times.len())
            .into_par_iter()
            .map(|s| weyl.at(&self.integrand(s, order), 0).0 * self.form.factor)
            .collect()
    }

    /// `∂ₓᵏ L^λ g(t, x_i)` on the whole grid at one stored time.
    pub fn profile(&self, slot: usize, order: usize) -> Vec<C64> {
        let f = self.integrand(slot, order);
        let weyl = WeylIntegrator::new(self.form.nu, self.dy, f.len());
        (0..f.len())
            .into_par_iter()
            .map(|i| weyl.at(&f, i).0 * self.form.factor)
            .collect()
    }

    /// Largest share of the `x = 0` value contributed by the outer tenth of the
    /// truncated `y` range, over times where the value is not negligible.
    pub fn truncation_indicator(&self) -> f64 {
        let ny = self.base.first().map_or(0, Vec::len);
        let weyl = WeylIntegrator::new(self.form.nu, self.dy, ny);
        let pairs: Vec<(C64, C64)> = (0..self.times.len())
            .map(|s| weyl.at(&self.integrand(s, 0), 0))
            .collect();
        let peak = pairs.iter().map(|p| p.0.norm()).fold(0.0, f64::max);
        pairs
            .iter()
            .filter(|p| p.0.norm() > 1e-3 * peak)
            .map(|p| p.1.norm() / p.0.norm())
            .fold(0.0, f64::max)
    }
}

/// Tail share above which a truncation warning is raised.
pub const TRUNCATION_WARNING: f64 = 0.01;

/// `L⁰ f` on `[0, t_K] × [0, y_max]`.
pub fn forcing_l0(f: &SampledSignal, grid: ForcingGrid) -> Result<SpaceTimeField> {
    let op = LZeroOperator::new(grid)?;
    let h = frac_power(f, -0.75)?;
    let times: Vec<usize> = (0..=grid.steps).collect();
    let levels = op.apply(h.samples(), &times)?;
    SpaceTimeField::new(
        times.iter().map(|&k| grid.t(k)).collect(),
        0.0,
        grid.dy,
        levels.concat(),
    )
}

/// Output of [`forcing_llambda`].
pub struct LambdaField {
    pub field: SpaceTimeField,
    pub truncation_indicator: f64,
    pub truncation_warning: bool,
}

/// `L^λ g` on `[0, t_K] × [0, y_max]` for `λ ∈ (−4, 1/2]`.
pub fn forcing_llambda(
    g: &SampledSignal,
    lambda: f64,
    grid: ForcingGrid,
    route: NegativeOrderRoute,
) -> Result<LambdaField> {
    WeylForm::new(lambda, route)?;
    let op = LZeroOperator::new(grid)?;
    let times: Vec<usize> = (0..=grid.steps).collect();
    let pot = op.potential(g, lambda, route, &times)?;
    let levels: Vec<Vec<C64>> = (0..times.len()).map(|s| pot.profile(s, 0)).collect();
    let indicator = pot.truncation_indicator();
    Ok(LambdaField {
        field: SpaceTimeField::new(
            times.iter().map(|&k| grid.t(k)).collect(),
            0.0,
            grid.dy,
            levels.concat(),
        )?,
        truncation_indicator: indicator,
        truncation_warning: indicator > TRUNCATION_WARNING,
    })
}

/// Measured `L^λ g(t, 0)/g(t)` against the closed-form trace value.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceCheck {
    pub lambda: f64,
    pub coefficient: C64,
    pub times: Vec<f64>,
    pub ratios: Vec<C64>,
    /// `max |ratio − coefficient| / |coefficient|`.
    pub max_deviation: f64,
    pub truncation_indicator: f64,
}

/// Trace check with `g(t) = sin²(πt)` on `[0, 1]`, sampled at `t ∈ {0.2, 0.3, …, 0.8}`.
pub fn trace_check(lambda: f64, grid: ForcingGrid, route: NegativeOrderRoute) -> Result<TraceCheck> {
    let g = SampledSignal::from_fn(grid.dt, grid.steps, |t| {
        C64::new((std::f64::consts::PI * t).sin().powi(2), 0.0)
    })?;
    let times: Vec<usize> = (2..=8)
        .map(|q| (q as f64 / 10.0 / grid.dt).round() as usize)
        .filter(|&k| k <= grid.steps)
        .collect();
    if times.is_empty() {
        return Err(Error::InvalidConfig("trace check needs t_K ≥ 0.2".into()));
    }
    let op = LZeroOperator::new(grid)?;
    let pot = op.potential(&g, lambda, route, &times)?;
    let vals = pot.trace(0);
    let coefficient = crate::vertex_algebra::trace_value(lambda);
    let ratios: Vec<C64> = times
        .iter()
        .zip(&vals)
        .map(|(&k, v)| v / g.samples()[k])
        .collect();
    let max_deviation = ratios
        .iter()
        .map(|r| (r - coefficient).norm() / coefficient.norm())
        .fold(0.0, f64::max);
    Ok(TraceCheck {
        lambda,
        coefficient,
        times: times.iter().map(|&k| grid.t(k)).collect(),
        ratios,
        max_deviation,
        truncation_indicator: pot.truncation_indicator(),
    })
}
