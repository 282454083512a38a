use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::GridSpec;
use crate::error::{Error, Result};
use crate::forcing_kernel::fd_weights;
use crate::linalg::{condition_one, BandMatrix, CMatrix, Lu};
use crate::vertex_algebra::{VertexRow, VertexType};

/// Stencils used for `∂ₓᵏu(0)` in the vertex closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexStencil {
    /// Five points `−dx, 0, dx, 2dx, 3dx` for every order.
    #[default]
    OneSided5,
    /// Three centred points for orders 1 and 2, five points otherwise.
    Centered,
}

impl VertexStencil {
    fn offsets(self, k: usize) -> &'static [i32] {
        match (self, k) {
            (VertexStencil::Centered, 1 | 2) => &[-1, 0, 1],
            _ => &[-1, 0, 1, 2, 3],
        }
    }
}

const INTERIOR: [f64; 5] = [1.0, -4.0, 6.0, -4.0, 1.0];

/// Condition number above which the vertex closure is treated as singular.
const CLOSURE_CONDITION_LIMIT: f64 = 1e12;

/// Discrete `∂ₓ⁴` on the interior unknowns `u_{j,m}`, `m = 1..nx−1`, ordered
/// point-major (`(m−1)·N + j`) so the vertex coupling stays banded.
#[derive(Debug, Clone)]
pub struct BiharmonicOperator {
    pub n_edges: usize,
    pub nx: usize,
    pub dx: f64,
    pub vertex_type: VertexType,
    pub matrix: BandMatrix,
    /// Rows `2j` and `2j+1` give `u_{j,0}` and `u_{j,−1}` from the unknowns at points 1..3.
    ghosts: CMatrix,
}

impl BiharmonicOperator {
    pub fn dim(&self) -> usize {
        self.n_edges * (self.nx - 1)
    }

    pub fn index(&self, edge: usize, m: usize) -> usize {
        (m - 1) * self.n_edges + edge
    }

    /// `u_{j,0}` for every edge.
    pub fn vertex_values(&self, interior: &[C64]) -> Vec<C64> {
        let near = &interior[..3 * self.n_edges];
        (0..self.n_edges)
            .map(|j| {
                self.ghosts
                    .row(2 * j)
                    .iter()
                    .zip(near)
                    .map(|(e, u)| e * u)
                    .sum()
            })
            .collect()
    }

    pub fn apply(&self, interior: &[C64]) -> Vec<C64> {
        self.matrix.matvec(interior)
    }

    /// `‖D − Dᴴ‖_F / ‖D‖_F`.
    pub fn symmetry_defect(&self) -> f64 {
        let n = self.dim();
        let (kl, ku) = self.matrix.bandwidths();
        let w = kl.max(ku);
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            for j in i.saturating_sub(w)..(i + w + 1).min(n) {
                let a = self.matrix.get(i, j);
                den += a.norm_sqr();
                num += (a - self.matrix.get(j, i).conj()).norm_sqr();
            }
        }
        if den == 0.0 {
            0.0
        } else {
            (num / den).sqrt()
        }
    }
}

/// `dx^k ∂ₓᵏ` weights on the given integer offsets.
fn scaled_weights(offsets: &[i32], k: usize) -> Vec<f64> {
    let o: Vec<f64> = offsets.iter().map(|&o| f64::from(o)).collect();
    fd_weights(&o, k)
}

/// Assembles `D ≈ ∂ₓ⁴` with the vertex conditions of `vt` closed through two
/// ghost values per edge and the clamp `u = ∂ₓu = 0` at `x = L`.
pub fn assemble_biharmonic(
    grid: &GridSpec,
    vt: VertexType,
    stencil: VertexStencil,
) -> Result<BiharmonicOperator> {
    grid.validate()?;
    let n = grid.n_edges;
    let nx = grid.nx;
    let dx = grid.dx();
    let rows: Vec<VertexRow> = vt.rows(n);
    debug_assert_eq!(rows.len(), 2 * n);

    let mut g = CMatrix::zeros(2 * n, 2 * n);
    let mut h = CMatrix::zeros(2 * n, 3 * n);
    for (r, row) in rows.iter().enumerate() {
        let k = row.order();
        let offs = stencil.offsets(k);
        let w = scaled_weights(offs, k);
        for j in 0..n {
            let c = row.edge_weight(j);
            if c == 0.0 {
                continue;
            }
            for (&o, &wo) in offs.iter().zip(&w) {
                let v = C64::new(c * wo, 0.0);
                match o {
                    0 => g[(r, 2 * j)] += v,
                    -1 => g[(r, 2 * j + 1)] += v,
                    p => h[(r, (p as usize - 1) * n + j)] += v,
                }
            }
        }
    }
    let singular = || Error::SingularClosure {
        vertex_type: vt.to_string(),
        nx,
    };
    if condition_one(&g).map_or(true, |c| !(c < CLOSURE_CONDITION_LIMIT)) {
        return Err(singular());
    }
    let lu = Lu::new(&g).map_err(|_| singular())?;
    let mut ghosts = CMatrix::zeros(2 * n, 3 * n);
    for col in 0..3 * n {
        let rhs: Vec<C64> = (0..2 * n).map(|r| -h[(r, col)]).collect();
        for (r, v) in lu.solve(&rhs)?.into_iter().enumerate() {
            ghosts[(r, col)] = v;
        }
    }

    let dim = n * (nx - 1);
    let idx = |j: usize, m: usize| (m - 1) * n + j;
    let scale = dx.powi(-4);
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for j in 0..n {
        for m in 1..nx {
            let i = idx(j, m);
            for (q, &s) in INTERIOR.iter().enumerate() {
                let p = m as i64 + q as i64 - 2;
                let s = s * scale;
                match p {
                    0 | -1 => {
                        let ghost = if p == 0 { 2 * j } else { 2 * j + 1 };
                        for (col, e) in ghosts.row(ghost).iter().enumerate() {
                            if e.re != 0.0 {
                                entries.push((i, idx(col % n, col / n + 1), s * e.re));
                            }
                        }
                    }
                    p if p == nx as i64 => {}
                    p if p == nx as i64 + 1 => entries.push((i, idx(j, nx - 1), s)),
                    p => entries.push((i, idx(j, p as usize), s)),
                }
            }
        }
    }
    let kl = entries.iter().map(|&(i, c, _)| i.saturating_sub(c)).max().unwrap_or(0);
    let ku = entries.iter().map(|&(i, c, _)| c.saturating_sub(i)).max().unwrap_or(0);
    let mut matrix = BandMatrix::zeros(dim, kl, ku);
    for (i, c, v) in entries {
        matrix.add(i, c, C64::new(v, 0.0));
    }
    Ok(BiharmonicOperator {
        n_edges: n,
        nx,
        dx,
        vertex_type: vt,
        matrix,
        ghosts,
    })
}
