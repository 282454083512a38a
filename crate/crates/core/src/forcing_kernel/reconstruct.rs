use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::boundary::{ForcingGrid, LZeroOperator, NegativeOrderRoute};
use super::propagator::{free_point_values, free_propagator, PeriodicGrid};
use crate::error::{Error, Result};
use crate::fractional::{frac_power, SampledSignal};
use crate::graph_sim::Profile;
use crate::vertex_algebra::{
    solve_gamma, CouplingMatrix, LambdaAssignment, TraceConvention, VertexRow, VertexType,
};

/// Parameters of the linear star-graph reconstruction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructConfig {
    pub vertex_type: VertexType,
    pub lambdas: [f64; 2],
    pub t_end: f64,
    pub dt: f64,
    /// Spacing of the half-line grid; the periodic grid uses `dy / 2`.
    pub dy: f64,
    pub y_max: f64,
    /// Period of the line on which the free evolution runs.
    pub period: f64,
    pub route: NegativeOrderRoute,
    pub convention: TraceConvention,
    /// Residuals are evaluated every `residual_stride` steps.
    pub residual_stride: usize,
}

impl Default for ReconstructConfig {
    fn default() -> Self {
        Self {
            vertex_type: VertexType::A,
            lambdas: LambdaAssignment::CANONICAL,
            t_end: 0.25,
            dt: 2.5e-4,
            dy: 0.025,
            y_max: 60.0,
            period: 409.6,
            route: NegativeOrderRoute::MinimalDerivative,
            convention: TraceConvention::Alternating,
            residual_stride: 10,
        }
    }
}

impl ReconstructConfig {
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    fn periodic_points(&self) -> usize {
        (2.0 * self.period / self.dy).round() as usize
    }

    fn validate(&self) -> Result<()> {
        let steps = self.steps();
        let ok = self.t_end > 0.0
            && self.dt > 0.0
            && ((steps as f64) * self.dt - self.t_end).abs() < 1e-9 * self.t_end
            && self.dy > 0.0
            && self.y_max > 0.0
            && self.period > 2.0 * self.y_max
            && self.residual_stride >= 1
            && self.residual_stride <= steps;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("reconstruction {self:?}")))
        }
    }
}

/// Sup norm of one vertex-condition residual over the sampled times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowResidual {
    pub row: String,
    pub order: usize,
    pub sup: f64,
    /// `max_j sup_t |∂ₓᵏu_j(t, 0)|` for the row's order.
    pub scale: f64,
    pub relative: f64,
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub config: ReconstructConfig,
    /// Sample times of the residual report.
    pub times: Vec<f64>,
    /// `traces[j][k][s] = ∂ₓᵏu_j(times[s], 0)`.
    pub traces: Vec<[Vec<C64>; 4]>,
    pub gamma: Vec<SampledSignal>,
    pub residuals: Vec<RowResidual>,
    /// `u_j(T, y_m)` on `[0, y_max]`.
    pub final_profiles: Vec<Vec<C64>>,
    pub initial_mass: f64,
    pub final_mass: f64,
    pub truncation_indicator: f64,
}

impl Reconstruction {
    pub fn max_relative_residual(&self) -> f64 {
        self.residuals.iter().map(|r| r.relative).fold(0.0, f64::max)
    }

    /// `|Σ∫|u_j(T)|² − Σ∫|u_j(0)|²| / Σ∫|u_j(0)|²`; zero for zero data.
    pub fn mass_budget(&self) -> f64 {
        if self.initial_mass == 0.0 {
            self.final_mass
        } else {
            (self.final_mass - self.initial_mass).abs() / self.initial_mass
        }
    }
}

fn row_label(row: VertexRow) -> String {
    match row {
        VertexRow::Continuity { order, edge } => format!("cont{order}_{}{}", edge + 1, edge + 2),
        VertexRow::Sum { order } => format!("sum{order}"),
    }
}

fn trapezoid_mass(v: &[C64], h: f64) -> f64 {
    let n = v.len();
    let s: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    h * (s - 0.5 * (v[0].norm_sqr() + v[n - 1].norm_sqr()))
}

/// Linear reconstruction `u_j = L^{λ₁}γ_{j1} + L^{λ₂}γ_{j2} + F_j` on a star
/// graph with `initial.len()` edges, with `γ` solved from the vertex conditions.
pub fn linear_reconstruct(initial: &[Profile], cfg: &ReconstructConfig) -> Result<Reconstruction> {
    cfg.validate()?;
    for p in initial {
        p.validate()?;
    }
    let n = initial.len();
    let lambdas = LambdaAssignment::uniform(n, cfg.lambdas[0], cfg.lambdas[1])?;
    let matrix = CouplingMatrix::build_with(n, cfg.vertex_type, &lambdas, cfg.convention)?;
    let steps = cfg.steps();
    let dt = cfg.dt;
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * dt).collect();

    let np = cfg.periodic_points();
    let periodic = PeriodicGrid::new(-cfg.period / 2.0, cfg.period / np as f64, np)?;
    let data: Vec<Vec<C64>> = initial
        .iter()
        .map(|p| {
            periodic
                .xs()
                .into_iter()
                .map(|x| if x > 0.0 { p.eval(x) } else { C64::new(0.0, 0.0) })
                .collect()
        })
        .collect();
    let initial_mass: f64 = data.iter().map(|d| periodic.mass(d)).sum();

    // free traces: free[j][k] = ∂ₓᵏF_j(t, 0)
    let free: Vec<[Vec<C64>; 4]> = data
        .iter()
        .map(|d| -> Result<[Vec<C64>; 4]> {
            Ok([
                free_point_values(&periodic, d, 0.0, 0, &times)?,
                free_point_values(&periodic, d, 0.0, 1, &times)?,
                free_point_values(&periodic, d, 0.0, 2, &times)?,
                free_point_values(&periodic, d, 0.0, 3, &times)?,
            ])
        })
        .collect::<Result<_>>()?;
    let smoothed: Vec<[SampledSignal; 4]> = free
        .iter()
        .map(|tr| -> Result<[SampledSignal; 4]> {
            let f = |k: usize| frac_power(&SampledSignal::new(dt, tr[k].clone())?, k as f64 / 4.0);
            Ok([f(0)?, f(1)?, f(2)?, f(3)?])
        })
        .collect::<Result<_>>()?;
    let rows = matrix.rows();
    let rhs: Vec<SampledSignal> = rows
        .iter()
        .map(|&row| {
            let samples = (0..=steps)
                .map(|s| {
                    let tr: Vec<[C64; 4]> = smoothed
                        .iter()
                        .map(|e| std::array::from_fn(|k| e[k].samples()[s]))
                        .collect();
                    -row.apply(&tr)
                })
                .collect();
            SampledSignal::new(dt, samples)
        })
        .collect::<Result<_>>()?;
    let gamma = solve_gamma(&matrix, &rhs)?;

    let grid = ForcingGrid {
        dt,
        steps,
        dy: cfg.dy,
        y_max: cfg.y_max,
    };
    let op = LZeroOperator::new(grid)?;
    let mut slots: Vec<usize> = (cfg.residual_stride..=steps).step_by(cfg.residual_stride).collect();
    if slots.last() != Some(&steps) {
        slots.push(steps);
    }
    let last = slots.len() - 1;
    let ny = grid.ny();

    let mut traces: Vec<[Vec<C64>; 4]> = Vec::with_capacity(n);
    let mut final_profiles = Vec::with_capacity(n);
    let mut truncation_indicator: f64 = 0.0;
    let evolved: Vec<Vec<C64>> = data
        .par_iter()
        .map(|d| free_propagator(&periodic, d, cfg.t_end))
        .collect::<Result<_>>()?;
    let origin = periodic.n / 2;
    for j in 0..n {
        let mut tr: [Vec<C64>; 4] = std::array::from_fn(|k| slots.iter().map(|&s| free[j][k][s]).collect());
        let mut profile: Vec<C64> = (0..ny)
            .map(|m| evolved[j].get(origin + 2 * m).copied().unwrap_or_default())
            .collect();
        for (i, &lam) in cfg.lambdas.iter().enumerate() {
            let g = &gamma[2 * j + i];
            if g.sup_norm() == 0.0 {
                continue;
            }
            let pot = op.potential(g, lam, cfg.route, &slots)?;
            truncation_indicator = truncation_indicator.max(pot.truncation_indicator());
            for (k, acc) in tr.iter_mut().enumerate() {
                for (a, v) in acc.iter_mut().zip(pot.trace(k)) {
                    *a += v;
                }
            }
            for (a, v) in profile.iter_mut().zip(pot.profile(last, 0)) {
                *a += v;
            }
        }
        traces.push(tr);
        final_profiles.push(profile);
    }

    let scale: [f64; 4] = std::array::from_fn(|k| {
        traces
            .iter()
            .flat_map(|t| t[k].iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    });
    let residuals = rows
        .iter()
        .map(|&row| {
            let k = row.order();
            let sup = (0..slots.len())
                .map(|s| {
                    let tr: Vec<[C64; 4]> = traces
                        .iter()
                        .map(|e| std::array::from_fn(|q| e[q][s]))
                        .collect();
                    row.apply(&tr).norm()
                })
                .fold(0.0, f64::max);
            RowResidual {
                row: row_label(row),
                order: k,
                sup,
                scale: scale[k],
                relative: if scale[k] > 0.0 { sup / scale[k] } else { sup },
            }
        })
        .collect();
    let final_mass = final_profiles.iter().map(|p| trapezoid_mass(p, cfg.dy)).sum();
    Ok(Reconstruction {
        config: cfg.clone(),
        times: slots.iter().map(|&s| times[s]).collect(),
        traces,
        gamma,
        residuals,
        final_profiles,
        initial_mass,
        final_mass,
        truncation_indicator,
    })
}
