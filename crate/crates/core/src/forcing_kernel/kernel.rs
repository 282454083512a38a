//! The oscillatory kernel `B(x) = (1/2π) ∫ e^{ixξ} e^{−iξ⁴} dξ`.
//!
//! `B` is evaluated as `(1/π) ∫₀^∞ cos(xξ) e^{−iξ⁴} e^{−εξ²} dξ` for a halving
//! sequence of `ε`, followed by Richardson extrapolation to `ε = 0`. On
//! `ξ ≤ 2` composite Gauss–Legendre is used directly; beyond, the substitution
//! `u = ξ⁴` turns the phase into `e^{−iu}` and long panels are integrated by a
//! Filon rule (polynomial interpolation of the amplitude against exact moments
//! of `e^{−iu}`). Every level shares the same samples, only the damping factor
//! differs.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Lu};

const EPS0: f64 = 0.02;
const LEVELS: usize = 6;
const HEAD: f64 = 2.0;
const FILON_DEG: usize = 12;
const GL_ORDER: usize = 48;

/// Tabulated `B` values.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub xs: Vec<f64>,
    pub values: Vec<C64>,
    /// Smallest regularization parameter entering the extrapolation.
    pub eps_used: f64,
    /// Largest difference between the last two diagonal extrapolants.
    pub error_estimate: f64,
}

/// Evaluates `B` at every abscissa; fails when the extrapolation error exceeds `tol`.
pub fn kernel_b(xs: &[f64], tol: f64) -> Result<KernelTable> {
    if !(tol >= 1e-8) {
        return Err(Error::InvalidConfig(format!("kernel tolerance {tol} below 1e-8")));
    }
    let evals: Vec<(C64, f64)> = xs.par_iter().map(|&x| b_extrapolated(x)).collect();
    let mut error_estimate: f64 = 0.0;
    for (&x, &(_, err)) in xs.iter().zip(&evals) {
        if !(err < tol) {
            return Err(Error::NoConvergence {
                x,
                estimate: err,
                tol,
            });
        }
        error_estimate = error_estimate.max(err);
    }
    Ok(KernelTable {
        xs: xs.to_vec(),
        values: evals.into_iter().map(|(v, _)| v).collect(),
        eps_used: EPS0 / f64::from(1u32 << (LEVELS - 1)),
        error_estimate,
    })
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

struct Rules {
    gl_x: Vec<f64>,
    gl_w: Vec<f64>,
    cheb: Vec<f64>,
    vinv_t: CMatrix,
}

fn rules() -> &'static Rules {
    static RULES: OnceLock<Rules> = OnceLock::new();
    RULES.get_or_init(|| {
        let (gl_x, gl_w) = gauss_legendre(GL_ORDER);
        let m = FILON_DEG + 1;
        let cheb: Vec<f64> = (0..m)
            .map(|i| 0.5 * (1.0 - (PI * (i as f64 + 0.5) / m as f64).cos()))
            .collect();
        let mut v = CMatrix::zeros(m, m);
        for (i, &c) in cheb.iter().enumerate() {
            for k in 0..m {
                v[(i, k)] = C64::new(c.powi(k as i32), 0.0);
            }
        }
        let vinv = Lu::new(&v)
            .and_then(|lu| lu.inverse())
            .expect("Chebyshev Vandermonde matrix is invertible");
        let mut vinv_t = CMatrix::zeros(m, m);
        for i in 0..m {
            for k in 0..m {
                vinv_t[(i, k)] = vinv[(k, i)];
            }
        }
        Rules {
            gl_x,
            gl_w,
            cheb,
            vinv_t,
        }
    })
}

/// Node weights `w_i` with `∫₀¹ p(s) e^{−iωs} ds = Σ p(s_i) w_i` for degree-12 `p`.
fn filon_weights(omega: f64, r: &Rules) -> Vec<C64> {
    let m = FILON_DEG + 1;
    let e = C64::from_polar(1.0, -omega);
    let io = C64::new(0.0, 1.0 / omega);
    let mut mu = vec![C64::new(0.0, 0.0); m];
    mu[0] = io * (e - 1.0);
    for k in 1..m {
        mu[k] = io * e - io * k as f64 * mu[k - 1];
    }
    (0..m)
        .map(|i| (0..m).map(|k| r.vinv_t[(i, k)] * mu[k]).sum())
        .collect()
}

/// Damping factors `e^{−ε_l s}` for all levels from one exponential.
fn damping(s: f64) -> [f64; LEVELS] {
    let mut d = [0.0; LEVELS];
    d[LEVELS - 1] = (-EPS0 / f64::from(1u32 << (LEVELS - 1)) * s).exp();
    for l in (0..LEVELS - 1).rev() {
        d[l] = d[l + 1] * d[l + 1];
    }
    d
}

/// Regularized integrals for all `ε` levels.
fn b_levels(x: f64) -> [C64; LEVELS] {
    let r = rules();
    let x = x.abs();
    let mut acc = [C64::new(0.0, 0.0); LEVELS];

    let npan = ((x * HEAD + HEAD.powi(4)) / 3.0).ceil() as usize + 2;
    let hp = HEAD / npan as f64;
    for p in 0..npan {
        let mid = (p as f64 + 0.5) * hp;
        for (gx, gw) in r.gl_x.iter().zip(&r.gl_w) {
            let xi = mid + 0.5 * hp * gx;
            let base = C64::from_polar((x * xi).cos() * gw * 0.5 * hp, -xi.powi(4));
            let d = damping(xi * xi);
            for l in 0..LEVELS {
                acc[l] += base * d[l];
            }
        }
    }

    let eps_min = EPS0 / f64::from(1u32 << (LEVELS - 1));
    let u_max = (40.0 / eps_min).powi(2);
    let mut a = HEAD.powi(4);
    let amp = |u: f64| {
        let q = u.sqrt().sqrt();
        (x * q).cos() * q / (4.0 * u)
    };
    while a < u_max {
        let h_osc = if x > 0.0 { 8.0 * a.powf(0.75) / x } else { f64::INFINITY };
        let b = (a + (0.3 * a).min(h_osc)).min(u_max);
        let h = b - a;
        if h <= 40.0 {
            for (gx, gw) in r.gl_x.iter().zip(&r.gl_w) {
                let u = a + 0.5 * h * (1.0 + gx);
                let base = C64::from_polar(amp(u) * gw * 0.5 * h, -u);
                let d = damping(u.sqrt());
                for l in 0..LEVELS {
                    acc[l] += base * d[l];
                }
            }
        } else {
            let w = filon_weights(h, r);
            let phase = C64::from_polar(h, -a);
            let mut part = [C64::new(0.0, 0.0); LEVELS];
            for (c, wi) in r.cheb.iter().zip(&w) {
                let u = a + h * c;
                let base = wi * amp(u);
                let d = damping(u.sqrt());
                for l in 0..LEVELS {
                    part[l] += base * d[l];
                }
            }
            for l in 0..LEVELS {
                acc[l] += phase * part[l];
            }
        }
        a = b;
    }
    acc.map(|v| v / PI)
}

/// Richardson-extrapolated `B(x)` and the error estimate.
fn b_extrapolated(x: f64) -> (C64, f64) {
    let levels = b_levels(x);
    let mut prev: Vec<C64> = vec![levels[0]];
    let mut last_diag = levels[0];
    let mut err = f64::INFINITY;
    for (k, &v) in levels.iter().enumerate().skip(1) {
        let mut row = vec![v];
        for j in 1..=k {
            let f = f64::from((1u32 << j) - 1);
            let next = row[j - 1] + (row[j - 1] - prev[j - 1]) / f;
            row.push(next);
        }
        err = (row[k] - last_diag).norm();
        last_diag = row[k];
        prev = row;
    }
    (last_diag, err)
}

/// `B(x)` at a single point.
pub fn kernel_b_at(x: f64, tol: f64) -> Result<C64> {
    Ok(kernel_b(&[x], tol)?.values[0])
}

/// Taylor coefficient of `x^{2n}` in `B(x)`.
pub(crate) fn series_coefficient(n: usize) -> C64 {
    let q = (2 * n + 1) as f64;
    let mag = (ln_gamma(q / 4.0) - ln_gamma(2.0 * n as f64 + 1.0)).exp() / (4.0 * PI);
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    C64::from_polar(sign * mag, -PI * q / 8.0)
}

/// Stationary-phase approximation of `B(x)` with its first correction,
/// `B(x) ≈ √(π/6)/(2π ξ*) e^{i(3xξ*/4 − π/4)} (1 − 7i/(144 ξ*⁴))`, `ξ* = (|x|/4)^{1/3}`.
/// Relative error about `2·10⁻⁵` at `|x| = 40`, decaying like `|x|^{−8/3}`.
pub fn kernel_b_asymptotic(x: f64) -> C64 {
    let x = x.abs();
    let xs = (x / 4.0).cbrt();
    let amp = (PI / 6.0).sqrt() / (2.0 * PI * xs);
    C64::from_polar(amp, 0.75 * x * xs - PI / 4.0) * C64::new(1.0, -7.0 / (144.0 * xs.powi(4)))
}

const SERIES_TERMS: usize = 40;
// the series branch of `KernelMoments::c` relies on this being 1
const SERIES_EDGE: f64 = 1.0;

/// Dense table of `B` on `[0, z_max]` with the cumulative moments
/// `C_p(z) = ∫_z^∞ B(s) s^{−p} ds` for `p = 4, 8`.
///
/// Values up to `z_quad` come from [`kernel_b`], the rest of the table from
/// [`kernel_b_asymptotic`]. Beyond `z_max` one integration by parts closes the tail.
#[derive(Debug, Clone)]
pub struct KernelMoments {
    dz: f64,
    b: Vec<C64>,
    c4: Vec<C64>,
    c8: Vec<C64>,
    edge4: C64,
    edge8: C64,
    series: Vec<C64>,
}

impl KernelMoments {
    pub const Z_QUAD: f64 = 40.0;
    pub const Z_MAX: f64 = 400.0;
    pub const DZ: f64 = 0.02;

    pub fn build(z_quad: f64, z_max: f64, dz: f64) -> Result<Self> {
        let n = (z_max / dz).round() as usize;
        let nq = ((z_quad / dz).round() as usize).min(n);
        let zs: Vec<f64> = (0..=n).map(|i| i as f64 * dz).collect();
        let mut b = kernel_b(&zs[..=nq], 1e-8)?.values;
        b.extend(zs[nq + 1..].iter().map(|&z| kernel_b_asymptotic(z)));
        let (gx, gw) = gauss_legendre(6);
        let mut c4 = vec![C64::new(0.0, 0.0); n + 1];
        let mut c8 = vec![C64::new(0.0, 0.0); n + 1];
        let z_end = zs[n];
        c4[n] = Self::tail(b[n], z_end, 4);
        c8[n] = Self::tail(b[n], z_end, 8);
        for i in (0..n).rev() {
            let (mut s4, mut s8) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
            if zs[i] > 0.0 {
                for (x, w) in gx.iter().zip(&gw) {
                    let s = zs[i] + 0.5 * dz * (1.0 + x);
                    let bv = cubic_at(&b, dz, s) * (0.5 * dz * w);
                    s4 += bv * s.powi(-4);
                    s8 += bv * s.powi(-8);
                }
            }
            c4[i] = c4[i + 1] + s4;
            c8[i] = c8[i + 1] + s8;
        }
        let k = (SERIES_EDGE / dz).round() as usize;
        Ok(Self {
            dz,
            edge4: c4[k],
            edge8: c8[k],
            series: (0..SERIES_TERMS).map(series_coefficient).collect(),
            b,
            c4,
            c8,
        })
    }

    fn tail(b: C64, z: f64, p: i32) -> C64 {
        C64::new(0.0, 1.0) * b * z.powi(-p) / (z / 4.0).cbrt()
    }

    pub fn z_max(&self) -> f64 {
        (self.b.len() - 1) as f64 * self.dz
    }

    /// `B(z)` by local cubic interpolation inside the table, asymptotics beyond.
    pub fn b(&self, z: f64) -> C64 {
        let z = z.abs();
        if z >= self.z_max() {
            kernel_b_asymptotic(z)
        } else {
            cubic_at(&self.b, self.dz, z)
        }
    }

    /// `C_p(z)` for `p ∈ {4, 8}` and `z > 0`; `z = ∞` gives 0.
    pub fn c(&self, p: i32, z: f64) -> C64 {
        let (tab, edge) = match p {
            4 => (&self.c4, self.edge4),
            8 => (&self.c8, self.edge8),
            _ => panic!("moment order {p} not tabulated"),
        };
        if !z.is_finite() {
            return C64::new(0.0, 0.0);
        }
        if z < SERIES_EDGE {
            // Σ b_n (1 − z^q)/q with q = 2n − p + 1, SERIES_EDGE = 1
            let mut s = edge;
            let z2 = z * z;
            let mut zq = z.powi(1 - p);
            for (n, b) in self.series.iter().enumerate() {
                let q = f64::from((2 * n) as i32 - p + 1);
                s += b * ((1.0 - zq) / q);
                zq *= z2;
            }
            return s;
        }
        if z >= self.z_max() {
            return Self::tail(kernel_b_asymptotic(z), z, p);
        }
        // cubic Hermite with exact derivative −B(z) z^{−p}
        let t = z / self.dz;
        let i = (t.floor() as usize).min(tab.len() - 2);
        let s = t - i as f64;
        let (z0, z1) = (i as f64 * self.dz, (i + 1) as f64 * self.dz);
        let d0 = -self.b[i] * z0.powi(-p) * self.dz;
        let d1 = -self.b[i + 1] * z1.powi(-p) * self.dz;
        let (s2, s3) = (s * s, s * s * s);
        tab[i] * (2.0 * s3 - 3.0 * s2 + 1.0)
            + d0 * (s3 - 2.0 * s2 + s)
            + tab[i + 1] * (3.0 * s2 - 2.0 * s3)
            + d1 * (s3 - s2)
    }
}

/// Four-point Lagrange interpolation on a uniform table starting at 0.
fn cubic_at(tab: &[C64], h: f64, z: f64) -> C64 {
    let n = tab.len();
    let t = z / h;
    let i = (t.floor() as isize).clamp(1, n as isize - 3) as usize;
    let s = t - i as f64;
    let (p0, p1, p2, p3) = (tab[i - 1], tab[i], tab[i + 1], tab[i + 2]);
    let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
    let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
    let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
    let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
    p0 * w0 + p1 * w1 + p2 * w2 + p3 * w3
}

/// Shared default moment table (built on first use, a few seconds).
pub fn kernel_moments() -> Result<&'static KernelMoments> {
    static TABLE: OnceLock<std::result::Result<KernelMoments, Error>> = OnceLock::new();
    TABLE
        .get_or_init(|| {
            KernelMoments::build(KernelMoments::Z_QUAD, KernelMoments::Z_MAX, KernelMoments::DZ)
        })
        .as_ref()
        .map_err(Clone::clone)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(GL_ORDER);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(10)).sum();
        assert!((s - 2.0 / 11.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
    }

    #[test]
    fn filon_weights_are_exact_on_monomials() {
        let r = rules();
        let w = filon_weights(57.0, r);
        let approx: C64 = r.cheb.iter().zip(&w).map(|(c, w)| w * c.powi(3)).sum();
        // ∫₀¹ s³ e^{−iωs} ds by the recurrence itself is what is tested; compare with
        // a fine midpoint sum instead
        let n = 200_000;
        let exact: C64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) / n as f64;
                C64::from_polar(s.powi(3), -57.0 * s) / n as f64
            })
            .sum();
        assert!((approx - exact).norm() < 1e-9);
    }

    #[test]
    fn tolerance_floor() {
        assert!(kernel_b(&[0.0], 1e-9).is_err());
    }
}
