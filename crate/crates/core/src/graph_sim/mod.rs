//! Time-domain simulation of `i∂ₜu_j − ∂ₓ⁴u_j + λ|u_j|²u_j = 0` on a star graph
//! whose `N` edges are truncated to `[0, L]`.
//!
//! Each edge carries samples `u_{j,m} ≈ u_j(m·dx)`, `m = 0..nx`. The vertex
//! values `u_{j,0}` and one ghost layer `u_{j,−1}` are eliminated through the
//! `2N` vertex conditions; the far end is clamped. Time stepping is
//! Crank–Nicolson with the averaged nonlinearity.

mod operator;
mod profile;
mod sim;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vertex_algebra::VertexType;

pub use operator::{assemble_biharmonic, BiharmonicOperator, VertexStencil};
pub use profile::Profile;
pub use sim::{
    flux_from_traces, mass, refinement_study, run, vertex_flux, vertex_residuals, vertex_traces,
    DiagnosticRow, GraphState, RefinementRow, RunOutput, Simulator, Snapshot,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_edges: usize,
    pub length: f64,
    /// Intervals per edge; `dx = length / nx`.
    pub nx: usize,
    pub dt: f64,
    pub t_end: f64,
}

impl GridSpec {
    pub fn dx(&self) -> f64 {
        self.length / self.nx as f64
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    /// Halves `dx` and `dt`.
    pub fn refined(&self) -> Self {
        Self {
            nx: 2 * self.nx,
            dt: self.dt / 2.0,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.n_edges >= 1
            && self.nx >= 16
            && self.length.is_finite()
            && self.length > 0.0
            && self.dt.is_finite()
            && self.dt > 0.0
            && self.t_end.is_finite()
            && self.t_end >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("grid {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    /// Diagnostics every `cadence` steps (plus the first and last step).
    pub cadence: usize,
    /// Snapshots every `snapshot_every` steps; 0 keeps only the initial and final states.
    pub snapshot_every: usize,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            cadence: 10,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub max_iterations: usize,
    pub tolerance: f64,
    /// `Blowup` once `sup|u|` exceeds this.
    pub blowup_cap: f64,
    pub stencil: VertexStencil,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            max_iterations: 20,
            tolerance: 1e-12,
            blowup_cap: 1e3,
            stencil: VertexStencil::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub grid: GridSpec,
    pub vertex_type: VertexType,
    /// Coefficient `λ` of `|u|²u`.
    #[serde(default)]
    pub nonlinearity: f64,
    #[serde(default = "default_max_nonlinearity")]
    pub max_nonlinearity: f64,
    /// One profile per edge.
    pub profiles: Vec<Profile>,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub solver: SolverSpec,
}

fn default_max_nonlinearity() -> f64 {
    100.0
}

/// Share of the initial mass that must lie in `[0, 0.8L]`.
pub const INITIAL_MASS_SHARE: f64 = 1.0 - 1e-10;

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.profiles.len() != self.grid.n_edges {
            return Err(Error::BadShape {
                expected: self.grid.n_edges,
                got: self.profiles.len(),
            });
        }
        for p in &self.profiles {
            p.validate()?;
        }
        let s = &self.solver;
        if !(self.nonlinearity.is_finite() && self.nonlinearity.abs() <= self.max_nonlinearity) {
            return Err(Error::InvalidConfig(format!(
                "|nonlinearity| = {} exceeds {}",
                self.nonlinearity.abs(),
                self.max_nonlinearity
            )));
        }
        if s.max_iterations == 0 || !(s.tolerance > 0.0) || !(s.blowup_cap > 0.0) || self.output.cadence == 0 {
            return Err(Error::InvalidConfig("solver and output knobs must be positive".into()));
        }
        Ok(())
    }
}
