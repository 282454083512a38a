use num_complex::Complex64 as C64;
use serde::Serialize;

use super::operator::{assemble_biharmonic, BiharmonicOperator};
use super::{GridSpec, Profile, SimConfig, INITIAL_MASS_SHARE};
use crate::error::{Error, Result};
use crate::forcing_kernel::fd_weights;
use crate::linalg::{BandLu, BandMatrix};
use crate::vertex_algebra::VertexType;

/// Edge samples `u[j][m] ≈ u_j(t, m·dx)`, `m = 0..=nx`.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState {
    pub t: f64,
    pub dx: f64,
    pub u: Vec<Vec<C64>>,
}

impl GraphState {
    pub fn from_profiles(profiles: &[Profile], grid: &GridSpec) -> Self {
        let dx = grid.dx();
        let u = profiles
            .iter()
            .map(|p| {
                let mut v: Vec<C64> = (0..=grid.nx).map(|m| p.eval(m as f64 * dx)).collect();
                v[grid.nx] = C64::new(0.0, 0.0);
                v
            })
            .collect();
        Self { t: 0.0, dx, u }
    }

    pub fn n_edges(&self) -> usize {
        self.u.len()
    }

    pub fn sup_norm(&self) -> f64 {
        self.u
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, nan_max)
    }

    /// Multiplies every sample by `e^{iθ}`.
    pub fn rotated(&self, theta: f64) -> Self {
        let r = C64::from_polar(1.0, theta);
        Self {
            u: self.u.iter().map(|e| e.iter().map(|z| z * r).collect()).collect(),
            ..self.clone()
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            u: self.u.iter().map(|e| e.iter().map(|z| z.conj()).collect()).collect(),
            ..self.clone()
        }
    }

    /// CSV with columns `t,edge,x,re,im`.
    pub fn to_csv(&self) -> String {
        use crate::io::fmt_f64;
        let mut out = String::from("t,edge,x,re,im\n");
        for (j, e) in self.u.iter().enumerate() {
            for (m, z) in e.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    fmt_f64(self.t),
                    j + 1,
                    fmt_f64(m as f64 * self.dx),
                    fmt_f64(z.re),
                    fmt_f64(z.im)
                ));
            }
        }
        out
    }
}

fn trapezoid_sq(v: &[C64], dx: f64) -> f64 {
    let n = v.len();
    let s: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    dx * (s - 0.5 * (v[0].norm_sqr() + v[n - 1].norm_sqr()))
}

/// `½ Σ_j ∫₀^L |u_j|² dx` by the trapezoid rule.
pub fn mass(state: &GraphState) -> f64 {
    0.5 * state.u.iter().map(|e| trapezoid_sq(e, state.dx)).sum::<f64>()
}

/// `∂ₓᵏu_j(0)`, `k = 0..3`, from the samples at `m = 0..4`.
pub fn vertex_traces(state: &GraphState) -> Vec<[C64; 4]> {
    let offs = [0.0, 1.0, 2.0, 3.0, 4.0];
    let w: [Vec<f64>; 4] = std::array::from_fn(|k| fd_weights(&offs, k));
    state
        .u
        .iter()
        .map(|e| {
            std::array::from_fn(|k| {
                e[..5].iter().zip(&w[k]).map(|(u, w)| u * *w).sum::<C64>() * state.dx.powi(-(k as i32))
            })
        })
        .collect()
}

/// Absolute values of the `2N` vertex conditions of `vt`, in row order.
pub fn vertex_residuals(state: &GraphState, vt: VertexType) -> Vec<f64> {
    let tr = vertex_traces(state);
    vt.rows(state.n_edges())
        .into_iter()
        .map(|r| r.apply(&tr).norm())
        .collect()
}

/// `Σ_j [Im(∂ₓ²u_j ∂ₓū_j) − Im(∂ₓ³u_j ū_j)]` at the vertex, which equals
/// `d/dt ½Σ∫|u_j|²` for smooth solutions on the half-lines.
pub fn flux_from_traces(traces: &[[C64; 4]]) -> f64 {
    traces
        .iter()
        .map(|t| (t[2] * t[1].conj()).im - (t[3] * t[0].conj()).im)
        .sum()
}

pub fn vertex_flux(state: &GraphState) -> f64 {
    flux_from_traces(&vertex_traces(state))
}

/// Crank–Nicolson integrator with cached factorization.
pub struct Simulator {
    config: SimConfig,
    op: BiharmonicOperator,
    explicit: BandMatrix,
    implicit: BandLu,
    interior: Vec<C64>,
    step: usize,
    t: f64,
}

impl Simulator {
    pub fn new(config: &SimConfig) -> Result<Self> {
        config.validate()?;
        let state = GraphState::from_profiles(&config.profiles, &config.grid);
        let total = mass(&state);
        if total > 0.0 {
            let keep = (0.8 * config.grid.nx as f64).floor() as usize + 1;
            let inner = 0.5
                * state
                    .u
                    .iter()
                    .map(|e| trapezoid_sq(&e[..keep], state.dx))
                    .sum::<f64>();
            if inner < INITIAL_MASS_SHARE * total {
                return Err(Error::InvalidConfig(format!(
                    "initial data not concentrated in [0, 0.8L]: share {}",
                    inner / total
                )));
            }
        }
        Self::from_state(config, &state)
    }

    /// Starts from arbitrary samples; only the interior values are used.
    pub fn from_state(config: &SimConfig, state: &GraphState) -> Result<Self> {
        config.validate()?;
        let grid = &config.grid;
        if state.n_edges() != grid.n_edges || state.u.iter().any(|e| e.len() != grid.nx + 1) {
            return Err(Error::BadShape {
                expected: grid.nx + 1,
                got: state.u.first().map_or(0, Vec::len),
            });
        }
        let op = assemble_biharmonic(grid, config.vertex_type, config.solver.stencil)?;
        let half = C64::new(0.0, 0.5 * grid.dt);
        let one = C64::new(1.0, 0.0);
        let explicit = op.matrix.shifted(one, -half);
        let implicit = BandLu::new(&op.matrix.shifted(one, half))?;
        let mut interior = vec![C64::new(0.0, 0.0); op.dim()];
        for (j, e) in state.u.iter().enumerate() {
            for (m, &z) in e.iter().enumerate().take(grid.nx).skip(1) {
                interior[op.index(j, m)] = z;
            }
        }
        Ok(Self {
            config: config.clone(),
            op,
            explicit,
            implicit,
            interior,
            step: 0,
            t: state.t,
        })
    }

    pub fn operator(&self) -> &BiharmonicOperator {
        &self.op
    }

    pub fn interior(&self) -> &[C64] {
        &self.interior
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Full samples with the vertex values from the closure and `u_{j,nx} = 0`.
    pub fn state(&self) -> GraphState {
        let nx = self.config.grid.nx;
        let n = self.config.grid.n_edges;
        let vertex = self.op.vertex_values(&self.interior);
        let u = (0..n)
            .map(|j| {
                let mut e = vec![C64::new(0.0, 0.0); nx + 1];
                e[0] = vertex[j];
                for (m, z) in e.iter_mut().enumerate().take(nx).skip(1) {
                    *z = self.interior[self.op.index(j, m)];
                }
                e
            })
            .collect();
        GraphState {
            t: self.t,
            dx: self.op.dx,
            u,
        }
    }

    pub fn step(&mut self) -> Result<()> {
        let dt = self.config.grid.dt;
        let lam = self.config.nonlinearity;
        let base = self.explicit.matvec(&self.interior);
        let next = if lam == 0.0 {
            let mut r = base;
            self.implicit.solve_in_place(&mut r);
            r
        } else {
            let solver = &self.config.solver;
            let coef = C64::new(0.0, dt * lam);
            let mut guess = self.interior.clone();
            let mut increment = f64::INFINITY;
            for _ in 0..solver.max_iterations {
                let mut r = base.clone();
                for ((r, g), u) in r.iter_mut().zip(&guess).zip(&self.interior) {
                    let density = 0.5 * (g.norm_sqr() + u.norm_sqr());
                    *r += coef * density * 0.5 * (g + u);
                }
                self.implicit.solve_in_place(&mut r);
                increment = r.iter().zip(&guess).map(|(a, b)| (a - b).norm()).fold(0.0, nan_max);
                let sup = r.iter().map(|z| z.norm()).fold(1.0, nan_max);
                guess = r;
                if increment <= solver.tolerance * sup {
                    break;
                }
            }
            let sup = guess.iter().map(|z| z.norm()).fold(1.0, nan_max);
            if !(increment <= solver.tolerance * sup) {
                return Err(Error::NoConvergence {
                    x: self.t + dt,
                    estimate: increment,
                    tol: solver.tolerance,
                });
            }
            guess
        };
        self.interior = next;
        self.step += 1;
        self.t = self.step as f64 * dt;
        let sup = self.interior.iter().map(|z| z.norm()).fold(0.0, nan_max);
        if !(sup <= self.config.solver.blowup_cap) {
            return Err(Error::Blowup {
                step: self.step,
                t: self.t,
            });
        }
        Ok(())
    }
}

/// `max` that lets a NaN through instead of discarding it.
fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub step: usize,
    pub t: f64,
    pub mass: f64,
    pub mass_drift_rel: f64,
    pub residuals: Vec<f64>,
    pub flux: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub state: GraphState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub diagnostics: Vec<DiagnosticRow>,
    pub snapshots: Vec<Snapshot>,
    pub symmetry_defect: f64,
    /// Set when stepping stopped early; the outputs cover the steps completed.
    pub error: Option<Error>,
}

impl RunOutput {
    pub fn final_drift(&self) -> f64 {
        self.diagnostics.last().map_or(0.0, |r| r.mass_drift_rel)
    }

    /// CSV with columns `step,t,mass,mass_drift_rel,res_1..res_2N,flux`.
    pub fn diagnostics_csv(&self) -> String {
        use crate::io::fmt_f64;
        let nres = self.diagnostics.first().map_or(0, |r| r.residuals.len());
        let mut out = String::from("step,t,mass,mass_drift_rel");
        for i in 1..=nres {
            out.push_str(&format!(",res_{i}"));
        }
        out.push_str(",flux\n");
        for r in &self.diagnostics {
            out.push_str(&format!(
                "{},{},{},{}",
                r.step,
                fmt_f64(r.t),
                fmt_f64(r.mass),
                fmt_f64(r.mass_drift_rel)
            ));
            for v in &r.residuals {
                out.push(',');
                out.push_str(&fmt_f64(*v));
            }
            out.push_str(&format!(",{}\n", fmt_f64(r.flux)));
        }
        out
    }
}

fn diagnostics(step: usize, state: &GraphState, vt: VertexType, mass0: f64) -> DiagnosticRow {
    let m = mass(state);
    DiagnosticRow {
        step,
        t: state.t,
        mass: m,
        mass_drift_rel: if mass0 > 0.0 { (m - mass0) / mass0 } else { 0.0 },
        residuals: vertex_residuals(state, vt),
        flux: vertex_flux(state),
    }
}

/// Steps to `t_end`, recording diagnostics and snapshots at the configured cadence.
pub fn run(config: &SimConfig) -> Result<RunOutput> {
    let mut sim = Simulator::new(config)?;
    let vt = config.vertex_type;
    let steps = config.grid.steps();
    let out = &config.output;
    let state = sim.state();
    let mass0 = mass(&state);
    let mut result = RunOutput {
        diagnostics: vec![diagnostics(0, &state, vt, mass0)],
        snapshots: vec![Snapshot { step: 0, state }],
        symmetry_defect: sim.operator().symmetry_defect(),
        error: None,
    };
    for s in 1..=steps {
        if let Err(e) = sim.step() {
            result.error = Some(e);
            let done = sim.steps_taken();
            if result.diagnostics.last().is_some_and(|r| r.step != done) {
                let state = sim.state();
                result.diagnostics.push(diagnostics(done, &state, vt, mass0));
                result.snapshots.push(Snapshot { step: done, state });
            }
            break;
        }
        let last = s == steps;
        let snap = out.snapshot_every > 0 && s % out.snapshot_every == 0;
        if s % out.cadence == 0 || last || snap {
            let state = sim.state();
            if s % out.cadence == 0 || last {
                result.diagnostics.push(diagnostics(s, &state, vt, mass0));
            }
            if snap || last {
                result.snapshots.push(Snapshot { step: s, state });
            }
        }
    }
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RefinementRow {
    pub nx: usize,
    pub dt: f64,
    pub final_drift: f64,
    /// `|drift(previous level)| / |drift(this level)|`.
    pub ratio: Option<f64>,
}

/// Runs `config` and `levels` successive halvings of `dx` and `dt`.
pub fn refinement_study(config: &SimConfig, levels: usize) -> Result<Vec<RefinementRow>> {
    let mut rows: Vec<RefinementRow> = Vec::with_capacity(levels + 1);
    let mut cfg = config.clone();
    cfg.output.snapshot_every = 0;
    for level in 0..=levels {
        if level > 0 {
            cfg.grid = cfg.grid.refined();
            cfg.output.cadence *= 2;
        }
        let out = run(&cfg)?;
        if let Some(e) = out.error {
            return Err(e);
        }
        let drift = out.final_drift();
        let ratio = rows.last().map(|p| p.final_drift.abs() / drift.abs());
        rows.push(RefinementRow {
            nx: cfg.grid.nx,
            dt: cfg.grid.dt,
            final_drift: drift,
            ratio,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_mass_on_three_edges() {
        let grid = GridSpec {
            n_edges: 3,
            length: 10.0,
            nx: 4000,
            dt: 1e-3,
            t_end: 0.0,
        };
        let st = GraphState::from_profiles(&[Profile::gaussian(0.0, 1.0); 3], &grid);
        let expect = 1.5 * (std::f64::consts::PI / 8.0).sqrt();
        assert!((mass(&st) - expect).abs() < 1e-8, "{}", mass(&st));
    }

    #[test]
    fn second_derivative_sum_of_gaussians() {
        let grid = GridSpec {
            n_edges: 2,
            length: 8.0,
            nx: 800,
            dt: 1e-3,
            t_end: 0.0,
        };
        let st = GraphState::from_profiles(&[Profile::gaussian(0.0, 1.0); 2], &grid);
        let r = vertex_residuals(&st, VertexType::A);
        assert!((r[2] - 4.0).abs() < 1e-3, "{r:?}");
        assert!(r[0] < 1e-14);
    }

    #[test]
    fn type_c_counterexample_flux() {
        let i = C64::new(0.0, 1.0);
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let tr = [[one, one, i, zero], [one, -one, -i, zero]];
        for row in VertexType::C.rows(2) {
            assert!(row.apply(&tr).norm() < 1e-15);
        }
        assert!((flux_from_traces(&tr) - 2.0).abs() < 1e-15);
    }
}
