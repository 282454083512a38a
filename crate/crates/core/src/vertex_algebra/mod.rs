//! Vertex-coupling algebra for the three vertex-condition families.
//!
//! A star graph with `N` edges carries `2N` vertex conditions on the traces
//! `∂ₓᵏu_j(t, 0)`, `k = 0..3`. Each family splits the four derivative orders
//! into two *continuity* orders (`N − 1` adjacent-difference rows each) and two
//! *sum* orders (one all-edges sum row each). The same row layout drives the
//! coupling matrix, the right-hand side of the γ-solve, the ghost closure of
//! the simulator and every residual report.

mod coefficients;
mod matrix;
mod reduced;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use coefficients::{
    b_at_origin, normalized_coefficients, order_phase, prefactor_polynomial, trace_value,
    universal_constant, BarredCoefficients, TraceCoefficients, TraceConvention,
};
pub use matrix::{
    certify_invertible, determinant_block, determinant_lu, matrix_csv, schur_complement,
    solve_gamma, Certificate, CouplingMatrix, NormalizedMatrix,
};
pub use reduced::{pair_factors, CouplingMinors, PairFactors, TypeAReduction};

/// Vertex-condition family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexType {
    A,
    B,
    C,
}

impl VertexType {
    pub const ALL: [VertexType; 3] = [VertexType::A, VertexType::B, VertexType::C];

    /// Derivative orders at which adjacent edges must agree.
    pub fn continuity_orders(self) -> [usize; 2] {
        match self {
            VertexType::A => [0, 1],
            VertexType::B => [2, 3],
            VertexType::C => [0, 3],
        }
    }

    /// Derivative orders whose sum over edges must vanish.
    pub fn sum_orders(self) -> [usize; 2] {
        match self {
            VertexType::A => [2, 3],
            VertexType::B => [0, 1],
            VertexType::C => [1, 2],
        }
    }

    pub fn is_continuity_order(self, k: usize) -> bool {
        self.continuity_orders().contains(&k)
    }

    /// The `2N` condition rows, ordered by derivative order.
    pub fn rows(self, n_edges: usize) -> Vec<VertexRow> {
        let mut rows = Vec::with_capacity(2 * n_edges);
        for order in 0..4 {
            if self.is_continuity_order(order) {
                rows.extend((0..n_edges.saturating_sub(1)).map(|edge| VertexRow::Continuity { order, edge }));
            } else {
                rows.push(VertexRow::Sum { order });
            }
        }
        rows
    }
}

impl fmt::Display for VertexType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VertexType::A => "A",
            VertexType::B => "B",
            VertexType::C => "C",
        };
        f.write_str(s)
    }
}

impl FromStr for VertexType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "A" | "a" => Ok(VertexType::A),
            "B" | "b" => Ok(VertexType::B),
            "C" | "c" => Ok(VertexType::C),
            other => Err(Error::InvalidConfig(format!("unknown vertex type {other:?}"))),
        }
    }
}

/// One vertex condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VertexRow {
    /// `∂ₓᵏu_edge(0) − ∂ₓᵏu_{edge+1}(0) = 0`.
    Continuity { order: usize, edge: usize },
    /// `Σ_j ∂ₓᵏu_j(0) = 0`.
    Sum { order: usize },
}

impl VertexRow {
    pub fn order(self) -> usize {
        match self {
            VertexRow::Continuity { order, .. } | VertexRow::Sum { order } => order,
        }
    }

    /// Coefficient of edge `j` in this row.
    pub fn edge_weight(self, j: usize) -> f64 {
        match self {
            VertexRow::Continuity { edge, .. } if j == edge => 1.0,
            VertexRow::Continuity { edge, .. } if j == edge + 1 => -1.0,
            VertexRow::Continuity { .. } => 0.0,
            VertexRow::Sum { .. } => 1.0,
        }
    }

    /// Evaluates the row on per-edge traces `traces[j][k] = ∂ₓᵏu_j(0)`.
    pub fn apply(self, traces: &[[C64; 4]]) -> C64 {
        let k = self.order();
        traces
            .iter()
            .enumerate()
            .map(|(j, t)| t[k] * self.edge_weight(j))
            .sum()
    }
}

/// The `2N` forcing orders `λ_{j,1}, λ_{j,2}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaAssignment {
    lambdas: Vec<[f64; 2]>,
}

impl LambdaAssignment {
    pub const CANONICAL: [f64; 2] = [-0.5, 0.25];

    pub fn new(lambdas: Vec<[f64; 2]>) -> Result<Self> {
        if lambdas.len() < 2 {
            return Err(Error::BadShape {
                expected: 2,
                got: lambdas.len(),
            });
        }
        let out = Self { lambdas };
        out.check_poles()?;
        Ok(out)
    }

    /// The same pair on every edge.
    pub fn uniform(n_edges: usize, l1: f64, l2: f64) -> Result<Self> {
        Self::new(vec![[l1, l2]; n_edges])
    }

    /// `(−1/2, 1/4)` on every edge.
    pub fn canonical(n_edges: usize) -> Self {
        Self {
            lambdas: vec![Self::CANONICAL; n_edges],
        }
    }

    pub fn n_edges(&self) -> usize {
        self.lambdas.len()
    }

    pub fn get(&self, edge: usize, slot: usize) -> f64 {
        self.lambdas[edge][slot]
    }

    pub fn pairs(&self) -> &[[f64; 2]] {
        &self.lambdas
    }

    /// Column order `(λ₁₁, λ₁₂, λ₂₁, …)`.
    pub fn flat(&self) -> Vec<f64> {
        self.lambdas.iter().flatten().copied().collect()
    }

    pub fn is_uniform(&self) -> bool {
        self.lambdas.iter().all(|p| p == &self.lambdas[0])
    }

    /// Rejects odd-integer orders, where the prefactor `e^{−3iπλ/8} + e^{5iπλ/8}` vanishes.
    pub fn check_poles(&self) -> Result<()> {
        for &l in self.lambdas.iter().flatten() {
            coefficients::check_order(l)?;
        }
        Ok(())
    }

    /// Checks `max{(2s−7)/2, −1} < λ < min{s + 1/2, 1/2}` for regularity `s ∈ [0, 1/2)`.
    pub fn check_window(&self, s: f64) -> Result<()> {
        if !(0.0..0.5).contains(&s) {
            return Err(Error::InvalidConfig(format!("regularity s = {s} outside [0, 1/2)")));
        }
        let lo = ((2.0 * s - 7.0) / 2.0).max(-1.0);
        let hi = (s + 0.5).min(0.5);
        for &l in self.lambdas.iter().flatten() {
            if !(l > lo && l < hi) {
                return Err(Error::InvalidConfig(format!(
                    "forcing order {l} outside admissible window ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}
