//! Closed-form reductions of the two-edge normalized matrices.

use num_complex::Complex64 as C64;

use super::coefficients::normalized_coefficients;
use super::matrix::{determinant_lu, NormalizedMatrix};
use super::{LambdaAssignment, VertexType};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;

/// For `N = 2` and one λ pair on both edges, `det M′ = sign · 4 · det D · det S`
/// where `D` (`S`) holds the barred coefficients of the continuity (sum) orders.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairFactors {
    pub continuity_minor: C64,
    pub sum_minor: C64,
    pub sign: f64,
}

impl PairFactors {
    pub fn determinant(&self) -> C64 {
        self.continuity_minor * self.sum_minor * (4.0 * self.sign)
    }
}

pub fn pair_factors(vt: VertexType, l1: f64, l2: f64) -> Result<PairFactors> {
    let (b1, b2) = (normalized_coefficients(l1)?, normalized_coefficients(l2)?);
    let minor = |[p, q]: [usize; 2]| b1.order(p) * b2.order(q) - b2.order(p) * b1.order(q);
    // parity of moving the continuity rows ahead of the sum rows
    let rows = vt.rows(2);
    let order: Vec<usize> = (0..4)
        .filter(|&r| matches!(rows[r], super::VertexRow::Continuity { .. }))
        .chain((0..4).filter(|&r| matches!(rows[r], super::VertexRow::Sum { .. })))
        .collect();
    let inversions = (0..4)
        .flat_map(|i| (i + 1..4).map(move |j| (i, j)))
        .filter(|&(i, j)| order[i] > order[j])
        .count();
    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
    Ok(PairFactors {
        continuity_minor: minor(vt.continuity_orders()),
        sum_minor: minor(vt.sum_orders()),
        sign,
    })
}

/// Real two-edge reduction of the Type A normalized matrix at `(−1/2, 1/4)`.
///
/// Dividing the rows of `A′` by `(√2, 2i, √2, −√2 i)` gives the real matrix
/// ```text
/// [ a    n  −a   −n ]
/// [ 1/c  g  −1/c −g ]
/// [ c    e   c    e ]
/// [ c    m   c    m ]
/// ```
/// whose determinant is `4 (e − m)(n − a c g)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TypeAReduction {
    pub a: f64,
    pub n: f64,
    pub c: f64,
    pub g: f64,
    pub e: f64,
    pub m: f64,
    pub reduced: CMatrix,
    /// `det A′` by LU.
    pub det_normalized: C64,
}

impl TypeAReduction {
    pub const ROW_SCALES: [C64; 4] = [
        C64::new(std::f64::consts::SQRT_2, 0.0),
        C64::new(0.0, 2.0),
        C64::new(std::f64::consts::SQRT_2, 0.0),
        C64::new(0.0, -std::f64::consts::SQRT_2),
    ];

    pub fn canonical() -> Result<Self> {
        let m = NormalizedMatrix::build(2, VertexType::A, &LambdaAssignment::canonical(2))?;
        Self::from_matrix(&m)
    }

    pub fn from_matrix(mp: &NormalizedMatrix) -> Result<Self> {
        if mp.vertex_type != VertexType::A || mp.n_edges() != 2 {
            return Err(Error::NotReducible("two-edge Type A matrix required".into()));
        }
        let mut r = mp.entries.clone();
        for i in 0..4 {
            for j in 0..4 {
                r[(i, j)] /= Self::ROW_SCALES[i];
            }
        }
        let re = |i: usize, j: usize| r[(i, j)].re;
        let (a, n, c, g, e, m) = (re(0, 0), re(0, 1), re(2, 0), re(1, 1), re(2, 1), re(3, 1));
        let expected = [
            [a, n, -a, -n],
            [1.0 / c, g, -1.0 / c, -g],
            [c, e, c, e],
            [c, m, c, m],
        ];
        for (i, row) in expected.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let z = r[(i, j)];
                if (z.re - v).abs() > 1e-12 * (1.0 + v.abs()) || z.im.abs() > 1e-12 {
                    return Err(Error::NotReducible(format!(
                        "entry ({i}, {j}) = {z} does not fit the real pair pattern"
                    )));
                }
            }
        }
        Ok(Self {
            a,
            n,
            c,
            g,
            e,
            m,
            reduced: r,
            det_normalized: determinant_lu(&mp.entries),
        })
    }

    pub fn e_minus_m(&self) -> f64 {
        self.e - self.m
    }

    pub fn n_minus_acg(&self) -> f64 {
        self.n - self.a * self.c * self.g
    }

    /// `4 (e − m)(n − a c g)`.
    pub fn det_reduced(&self) -> f64 {
        4.0 * self.e_minus_m() * self.n_minus_acg()
    }

    /// Product of the row scales, `4√2`.
    pub fn scale_product() -> C64 {
        Self::ROW_SCALES.iter().product()
    }
}

/// Real two-by-two minors of the barred coefficients at `(λ₁, λ₂)` with letters
/// `a = ā(λ₁)`, `n = ā(λ₂)`, `f = b̄(λ₁)/i`, `g = b̄(λ₂)/i`, `c = c̄(λ₁)`,
/// `e = c̄(λ₂)`, `d = d̄(λ₁)/i`, `m = d̄(λ₂)/i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMinors {
    pub ag_fn: f64,
    pub cg_fe: f64,
    pub cm_de: f64,
    pub am_dn: f64,
}

impl CouplingMinors {
    pub fn new(l1: f64, l2: f64) -> Result<Self> {
        let (p, q) = (normalized_coefficients(l1)?, normalized_coefficients(l2)?);
        let i = C64::new(0.0, 1.0);
        let (a, n) = (p.a.re, q.a.re);
        let (f, g) = ((p.b / i).re, (q.b / i).re);
        let (c, e) = (p.c.re, q.c.re);
        let (d, m) = ((p.d / i).re, (q.d / i).re);
        Ok(Self {
            ag_fn: a * g - f * n,
            cg_fe: c * g - f * e,
            cm_de: c * m - d * e,
            am_dn: a * m - d * n,
        })
    }

    pub fn canonical() -> Self {
        let [l1, l2] = LambdaAssignment::CANONICAL;
        Self::new(l1, l2).expect("canonical orders are regular")
    }
}
