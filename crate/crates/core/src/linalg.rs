//! Small dense and banded complex linear algebra.
//!
//! Dense LU backs the coupling-matrix determinants and γ solves; the banded
//! factorization backs the Crank–Nicolson solves of the graph simulator.

use std::ops::{Index, IndexMut};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != cols {
                return Err(Error::BadShape {
                    expected: cols,
                    got: r.len(),
                });
            }
            m.data[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn from_diag(d: &[C64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    /// Copy of the submatrix on the given row and column index lists.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                m[(a, b)] = self[(i, j)];
            }
        }
        m
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::BadShape {
                expected: self.cols,
                got: other.rows,
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (o, b) in out.data.iter_mut().zip(&other.data) {
            *o -= b;
        }
        out
    }

    pub fn conj_transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum absolute column sum.
    pub fn norm_one(&self) -> f64 {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Product of the Euclidean row norms (Hadamard bound on |det|).
    pub fn row_norm_product(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
            .product()
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: CMatrix,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn new(a: &CMatrix) -> Result<Self> {
        if a.rows != a.cols {
            return Err(Error::BadShape {
                expected: a.rows,
                got: a.cols,
            });
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for k in 0..n {
            let (p, pmax) = (k..n)
                .map(|i| (i, lu[(i, k)].norm()))
                .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pmax == 0.0 {
                singular = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
                sign = -sign;
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in k + 1..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self {
            n,
            lu,
            perm,
            sign,
            singular,
        })
    }

    pub fn is_singular(&self) -> bool {
        self.singular
    }

    pub fn determinant(&self) -> C64 {
        if self.singular {
            return C64::new(0.0, 0.0);
        }
        (0..self.n).fold(C64::new(self.sign, 0.0), |acc, i| acc * self.lu[(i, i)])
    }

    pub fn solve(&self, b: &[C64]) -> Result<Vec<C64>> {
        if self.singular {
            return Err(Error::SingularMatrix);
        }
        if b.len() != self.n {
            return Err(Error::BadShape {
                expected: self.n,
                got: b.len(),
            });
        }
        let n = self.n;
        let mut x: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let s: C64 = (0..i).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..n).rev() {
            let s: C64 = (i + 1..n).map(|j| self.lu[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn inverse(&self) -> Result<CMatrix> {
        let n = self.n;
        let mut inv = CMatrix::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            e[j] = C64::new(1.0, 0.0);
            let col = self.solve(&e)?;
            for i in 0..n {
                inv[(i, j)] = col[i];
            }
        }
        Ok(inv)
    }
}

/// Determinant by LU with partial pivoting; zero for exactly singular input.
pub fn determinant(a: &CMatrix) -> Result<C64> {
    Ok(Lu::new(a)?.determinant())
}

/// 1-norm condition number `‖A‖₁‖A⁻¹‖₁` (infinite when singular).
pub fn condition_one(a: &CMatrix) -> Result<f64> {
    let lu = Lu::new(a)?;
    if lu.is_singular() {
        return Ok(f64::INFINITY);
    }
    Ok(a.norm_one() * lu.inverse()?.norm_one())
}

/// Square band matrix with `kl` sub- and `ku` super-diagonals.
#[derive(Debug, Clone)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    // column-major band storage, element (i, j) at j*ld + ku + i - j
    ab: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ld = kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ab: vec![C64::new(0.0, 0.0); ld * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i + self.ku >= j && j + self.kl >= i
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if self.in_band(i, j) {
            self.ab[j * (self.kl + self.ku + 1) + self.ku + i - j]
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// Adds `v` at `(i, j)`; panics outside the band, which indicates an assembly bug.
    pub fn add(&mut self, i: usize, j: usize, v: C64) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band");
        let ld = self.kl + self.ku + 1;
        self.ab[j * ld + self.ku + i - j] += v;
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.n];
        let ld = self.kl + self.ku + 1;
        for j in 0..self.n {
            let xj = x[j];
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                y[i] += self.ab[j * ld + self.ku + i - j] * xj;
            }
        }
        y
    }

    /// Dense copy, for diagnostics on small systems.
    pub fn to_dense(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                m[(i, j)] = self.get(i, j);
            }
        }
        m
    }

    /// `alpha * I + beta * self`.
    pub fn shifted(&self, alpha: C64, beta: C64) -> Self {
        let mut out = self.clone();
        out.ab.iter_mut().for_each(|v| *v *= beta);
        for i in 0..self.n {
            out.add(i, i, alpha);
        }
        out
    }
}

/// Banded LU with partial pivoting (LAPACK `gbtrf` layout).
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    kv: usize,
    ld: usize,
    ab: Vec<C64>,
    piv: Vec<usize>,
}

impl BandLu {
    pub fn new(a: &BandMatrix) -> Result<Self> {
        let (n, kl, ku) = (a.n, a.kl, a.ku);
        let kv = kl + ku;
        let ld = 2 * kl + ku + 1;
        let mut ab = vec![C64::new(0.0, 0.0); ld * n];
        for j in 0..n {
            for i in j.saturating_sub(ku)..=(j + kl).min(n - 1) {
                ab[j * ld + kv + i - j] = a.get(i, j);
            }
        }
        let idx = |i: usize, j: usize| j * ld + kv + i - j;
        let mut piv = vec![0; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = -1.0;
            for r in 0..=km {
                let v = ab[idx(j + r, j)].norm();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            piv[j] = j + jp;
            if best == 0.0 {
                return Err(Error::SingularMatrix);
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    ab.swap(idx(j, c), idx(j + jp, c));
                }
            }
            let pivot = ab[idx(j, j)];
            for r in 1..=km {
                ab[idx(j + r, j)] /= pivot;
            }
            for c in j + 1..=ju {
                let f = ab[idx(j, c)];
                if f == C64::new(0.0, 0.0) {
                    continue;
                }
                for r in 1..=km {
                    let l = ab[idx(j + r, j)];
                    ab[idx(j + r, c)] -= l * f;
                }
            }
        }
        Ok(Self {
            n,
            kl,
            kv,
            ld,
            ab,
            piv,
        })
    }

    pub fn solve_in_place(&self, b: &mut [C64]) {
        let idx = |i: usize, j: usize| j * self.ld + self.kv + i - j;
        let n = self.n;
        for j in 0..n {
            let km = self.kl.min(n - 1 - j);
            let l = self.piv[j];
            if l != j {
                b.swap(l, j);
            }
            let bj = b[j];
            for r in 1..=km {
                b[j + r] -= self.ab[idx(j + r, j)] * bj;
            }
        }
        for j in (0..n).rev() {
            b[j] /= self.ab[idx(j, j)];
            let bj = b[j];
            for i in j.saturating_sub(self.kv)..j {
                b[i] -= self.ab[idx(i, j)] * bj;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn determinant_of_simple_matrices() {
        assert_eq!(determinant(&CMatrix::identity(4)).unwrap(), c(1.0, 0.0));
        let d = CMatrix::from_diag(&[c(2.0, 0.0), c(0.0, 3.0)]);
        assert!((determinant(&d).unwrap() - c(0.0, 6.0)).norm() < 1e-15);
        let p = CMatrix::from_rows(&[vec![c(0.0, 0.0), c(1.0, 0.0)], vec![c(1.0, 0.0), c(0.0, 0.0)]])
            .unwrap();
        assert_eq!(determinant(&p).unwrap(), c(-1.0, 0.0));
    }

    #[test]
    fn singular_matrix_has_zero_determinant() {
        let m = CMatrix::from_rows(&[vec![c(1.0, 1.0), c(2.0, 2.0)], vec![c(1.0, 1.0), c(2.0, 2.0)]])
            .unwrap();
        assert_eq!(determinant(&m).unwrap(), c(0.0, 0.0));
        assert!(condition_one(&m).unwrap().is_infinite());
    }

    #[test]
    fn band_solve_matches_dense() {
        let n = 12;
        let mut band = BandMatrix::zeros(n, 2, 3);
        for i in 0..n {
            for j in i.saturating_sub(2)..=(i + 3).min(n - 1) {
                let v = c(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64);
                band.add(i, j, v);
            }
            band.add(i, i, c(0.1, 0.0));
        }
        let x: Vec<C64> = (0..n).map(|k| c(k as f64, 1.0 - k as f64)).collect();
        let b = band.matvec(&x);
        let mut y = b.clone();
        BandLu::new(&band).unwrap().solve_in_place(&mut y);
        let err: f64 = y.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10, "band solve error {err}");
        let dense = Lu::new(&band.to_dense()).unwrap().solve(&b).unwrap();
        let err: f64 = dense.iter().zip(&x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-10);
    }
}
