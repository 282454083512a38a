use num_complex::Complex64 as C64;
use rayon::prelude::*;

use super::coefficients::{
    normalized_coefficients, order_phase, prefactor_polynomial, TraceCoefficients, TraceConvention,
};
use super::{LambdaAssignment, VertexRow, VertexType};
use crate::error::{Error, Result};
use crate::fractional::SampledSignal;
use crate::io::fmt_f64;
use crate::linalg::{condition_one, CMatrix, Lu};

/// Threshold on `|det| / Π‖row‖₂` below which a matrix is treated as singular.
pub const INVERTIBILITY_THRESHOLD: f64 = 1e-10;

/// The `2N × 2N` matrix mapping forcing densities `(γ₁₁, γ₁₂, …, γ_N2)` to the
/// vertex-condition rows of their traces.
#[derive(Debug, Clone)]
pub struct CouplingMatrix {
    pub vertex_type: VertexType,
    pub lambdas: LambdaAssignment,
    pub convention: TraceConvention,
    pub entries: CMatrix,
}

fn check_edges(n: usize, lambdas: &LambdaAssignment) -> Result<()> {
    if n < 2 || lambdas.n_edges() != n {
        return Err(Error::BadShape {
            expected: n.max(2),
            got: lambdas.n_edges(),
        });
    }
    Ok(())
}

impl CouplingMatrix {
    pub fn build(n: usize, vt: VertexType, lambdas: &LambdaAssignment) -> Result<Self> {
        Self::build_with(n, vt, lambdas, TraceConvention::Unsigned)
    }

    pub fn build_with(
        n: usize,
        vt: VertexType,
        lambdas: &LambdaAssignment,
        convention: TraceConvention,
    ) -> Result<Self> {
        check_edges(n, lambdas)?;
        let coefs = lambdas
            .flat()
            .into_iter()
            .map(TraceCoefficients::new)
            .collect::<Result<Vec<_>>>()?;
        let entries = assemble(vt, n, |row, col| coefs[col].signed(row.order(), convention));
        Ok(Self {
            vertex_type: vt,
            lambdas: lambdas.clone(),
            convention,
            entries,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.lambdas.n_edges()
    }

    pub fn rows(&self) -> Vec<VertexRow> {
        self.vertex_type.rows(self.n_edges())
    }
}

fn assemble(vt: VertexType, n: usize, coef: impl Fn(VertexRow, usize) -> C64) -> CMatrix {
    let mut m = CMatrix::zeros(2 * n, 2 * n);
    for (r, row) in vt.rows(n).into_iter().enumerate() {
        for col in 0..2 * n {
            let w = row.edge_weight(col / 2);
            if w != 0.0 {
                m[(r, col)] = coef(row, col) * w;
            }
        }
    }
    m
}

/// Coupling matrix with row phases and column factors divided out.
#[derive(Debug, Clone)]
pub struct NormalizedMatrix {
    pub vertex_type: VertexType,
    pub lambdas: LambdaAssignment,
    pub entries: CMatrix,
    /// `det M = prefactor · det M′`.
    pub prefactor: C64,
}

impl NormalizedMatrix {
    pub fn build(n: usize, vt: VertexType, lambdas: &LambdaAssignment) -> Result<Self> {
        check_edges(n, lambdas)?;
        let flat = lambdas.flat();
        let bars = flat
            .iter()
            .map(|&l| normalized_coefficients(l))
            .collect::<Result<Vec<_>>>()?;
        let entries = assemble(vt, n, |row, col| bars[col].order(row.order()));
        let rows: C64 = vt.rows(n).iter().map(|r| order_phase(r.order())).product();
        let cols: C64 = flat.iter().map(|&l| prefactor_polynomial(l)).product();
        Ok(Self {
            vertex_type: vt,
            lambdas: lambdas.clone(),
            entries,
            prefactor: rows * cols,
        })
    }

    pub fn n_edges(&self) -> usize {
        self.lambdas.n_edges()
    }
}

/// Determinant by LU with partial pivoting; zero when exactly singular.
pub fn determinant_lu(m: &CMatrix) -> C64 {
    Lu::new(m).map(|lu| lu.determinant()).unwrap_or(C64::new(0.0, 0.0))
}

/// Block split of `M′` around the 2×2 pivot block `G` formed by the two sum
/// rows and the last edge's columns.
#[derive(Debug, Clone)]
pub struct BlockSplit {
    /// `C − X G⁻¹ Y` on the remaining rows and columns.
    pub schur: CMatrix,
    pub pivot_block: CMatrix,
    /// Sign of the row permutation moving the sum rows last.
    pub sign: f64,
}

pub fn schur_complement(m: &NormalizedMatrix) -> Result<BlockSplit> {
    let n = m.n_edges();
    let rows = m.vertex_type.rows(n);
    let sum_rows: Vec<usize> = (0..rows.len())
        .filter(|&r| matches!(rows[r], VertexRow::Sum { .. }))
        .collect();
    let other_rows: Vec<usize> = (0..rows.len()).filter(|r| !sum_rows.contains(r)).collect();
    let last_cols = [2 * n - 2, 2 * n - 1];
    let other_cols: Vec<usize> = (0..2 * n - 2).collect();

    let g = m.entries.select(&sum_rows, &last_cols);
    let g_lu = Lu::new(&g)?;
    let det_g = g_lu.determinant();
    let g_scale = g.frobenius_norm().powi(2);
    if g_lu.is_singular() || det_g.norm() <= 1e-14 * g_scale {
        return Err(Error::SingularBlock);
    }
    let c = m.entries.select(&other_rows, &other_cols);
    let x = m.entries.select(&other_rows, &last_cols);
    let y = m.entries.select(&sum_rows, &other_cols);
    let g_inv_y = g_lu.inverse()?.matmul(&y)?;
    let schur = c.sub(&x.matmul(&g_inv_y)?);

    // parity of the permutation other_rows ++ sum_rows
    let order: Vec<usize> = other_rows.iter().chain(&sum_rows).copied().collect();
    let inversions = (0..order.len())
        .flat_map(|i| (i + 1..order.len()).map(move |j| (i, j)))
        .filter(|&(i, j)| order[i] > order[j])
        .count();
    let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };
    Ok(BlockSplit {
        schur,
        pivot_block: g,
        sign,
    })
}

/// `det M′ = ± det(C − X G⁻¹ Y) · det G`.
pub fn determinant_block(m: &NormalizedMatrix) -> Result<C64> {
    let split = schur_complement(m)?;
    Ok(determinant_lu(&split.schur) * determinant_lu(&split.pivot_block) * split.sign)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub n_edges: usize,
    pub vertex_type: VertexType,
    pub det: C64,
    /// Product of the row 2-norms.
    pub scale: f64,
    pub condition_estimate: f64,
    pub invertible: bool,
}

fn certify(m: &CMatrix, n: usize, vt: VertexType) -> Result<Certificate> {
    let det = determinant_lu(m);
    let scale = m.row_norm_product();
    Ok(Certificate {
        n_edges: n,
        vertex_type: vt,
        det,
        scale,
        condition_estimate: condition_one(m)?,
        invertible: det.norm() > INVERTIBILITY_THRESHOLD * scale,
    })
}

/// Certificate for the coupling matrix at the canonical orders `(−1/2, 1/4)`.
pub fn certify_invertible(n: usize, vt: VertexType) -> Result<Certificate> {
    let m = CouplingMatrix::build(n, vt, &LambdaAssignment::canonical(n))?;
    certify(&m.entries, n, vt)
}

impl CouplingMatrix {
    pub fn certificate(&self) -> Result<Certificate> {
        certify(&self.entries, self.n_edges(), self.vertex_type)
    }
}

/// Samplewise `γ(t) = M⁻¹ F(t)` for `2N` right-hand-side signals.
pub fn solve_gamma(m: &CouplingMatrix, rhs: &[SampledSignal]) -> Result<Vec<SampledSignal>> {
    let dim = m.entries.rows();
    if rhs.len() != dim {
        return Err(Error::BadShape {
            expected: dim,
            got: rhs.len(),
        });
    }
    let len = rhs[0].len();
    let dt = rhs[0].dt();
    if let Some(bad) = rhs.iter().find(|s| s.len() != len || s.dt() != dt) {
        return Err(Error::BadShape {
            expected: len,
            got: bad.len(),
        });
    }
    if !m.certificate()?.invertible {
        return Err(Error::SingularMatrix);
    }
    let lu = Lu::new(&m.entries)?;
    let columns: Vec<Vec<C64>> = (0..len)
        .into_par_iter()
        .map(|k| {
            let f: Vec<C64> = rhs.iter().map(|s| s.samples()[k]).collect();
            lu.solve(&f)
        })
        .collect::<Result<_>>()?;
    (0..dim)
        .map(|r| SampledSignal::new(dt, columns.iter().map(|c| c[r]).collect()))
        .collect()
}

/// Row-major CSV with one `re,im` pair per entry.
pub fn matrix_csv(m: &CMatrix) -> String {
    let mut out = String::new();
    for i in 0..m.rows() {
        let line: Vec<String> = m
            .row(i)
            .iter()
            .map(|z| format!("{},{}", fmt_f64(z.re), fmt_f64(z.im)))
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_pattern() {
        for vt in VertexType::ALL {
            let m = CouplingMatrix::build(4, vt, &LambdaAssignment::canonical(4)).unwrap();
            for (r, row) in m.rows().iter().enumerate() {
                let nnz = m.entries.row(r).iter().filter(|z| z.norm() > 0.0).count();
                match row {
                    VertexRow::Continuity { .. } => assert_eq!(nnz, 4),
                    VertexRow::Sum { .. } => assert_eq!(nnz, 8),
                }
            }
        }
    }

    #[test]
    fn block_determinant_n2_matches_lu() {
        let m = NormalizedMatrix::build(2, VertexType::A, &LambdaAssignment::canonical(2)).unwrap();
        let lu = determinant_lu(&m.entries);
        let blk = determinant_block(&m).unwrap();
        assert!((lu - blk).norm() < 1e-12 * lu.norm());
    }

    #[test]
    fn zero_rhs_gives_zero_gamma() {
        let m = CouplingMatrix::build(2, VertexType::A, &LambdaAssignment::canonical(2)).unwrap();
        let rhs = vec![SampledSignal::zeros(0.1, 5).unwrap(); 4];
        let g = solve_gamma(&m, &rhs).unwrap();
        assert!(g.iter().all(|s| s.samples().iter().all(|z| z.norm() == 0.0)));
    }
}
