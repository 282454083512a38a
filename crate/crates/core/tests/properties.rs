use bigraph::forcing_kernel::{duhamel, free_propagator, PeriodicGrid, SpaceTimeField};
use bigraph::fractional::{rl_integral, SampledSignal};
use bigraph::graph_sim::{
    flux_from_traces, mass, vertex_flux, vertex_residuals, GraphState, GridSpec, OutputSpec,
    Profile, SimConfig, Simulator, SolverSpec,
};
use bigraph::io::fmt_f64;
use bigraph::vertex_algebra::{
    determinant_block, determinant_lu, LambdaAssignment, NormalizedMatrix, TraceCoefficients,
    VertexType,
};
use bigraph::{Error, C64};
use proptest::prelude::*;

fn cplx() -> impl Strategy<Value = C64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b))
}

/// Orders away from the odd integers, where the coefficients degenerate.
fn order() -> impl Strategy<Value = f64> {
    (-3.9..0.5f64).prop_filter("odd integer", |l| {
        let r = l.round();
        (r as i64) % 2 == 0 || (l - r).abs() > 1e-3
    })
}

fn vertex_type() -> impl Strategy<Value = VertexType> {
    prop_oneof![Just(VertexType::A), Just(VertexType::B), Just(VertexType::C)]
}

fn random_state(n: usize, nx: usize) -> impl Strategy<Value = GraphState> {
    proptest::collection::vec(proptest::collection::vec(cplx(), nx + 1), n).prop_map(move |u| GraphState {
        t: 0.0,
        dx: 0.1,
        u,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn factored_coefficients_match_trace_values(l in order()) {
        let direct = TraceCoefficients::new(l).unwrap();
        let factored = TraceCoefficients::factored(l).unwrap();
        for k in 0..4 {
            let (a, b) = (direct.order(k), factored.order(k));
            prop_assert!((a - b).norm() <= 1e-10 * a.norm().max(1.0), "k = {} {} {}", k, a, b);
        }
    }

    #[test]
    fn block_determinant_matches_lu(vt in vertex_type(), n in 2usize..7, l1 in order(), l2 in order()) {
        prop_assume!((l1 - l2).abs() > 1e-3);
        let m = NormalizedMatrix::build(n, vt, &LambdaAssignment::uniform(n, l1, l2).unwrap()).unwrap();
        match determinant_block(&m) {
            Ok(d) => {
                let lu = determinant_lu(&m.entries);
                prop_assert!((d - lu).norm() <= 1e-8 * lu.norm().max(1e-300), "{} vs {}", d, lu);
            }
            Err(e) => prop_assert_eq!(e, Error::SingularBlock),
        }
    }

    #[test]
    fn type_a_boundary_data_carry_no_flux(u in cplx(), v in cplx(), rest in proptest::collection::vec((cplx(), cplx()), 1..6)) {
        let n = rest.len() + 1;
        let mut tr: Vec<[C64; 4]> = rest.iter().map(|&(p, w)| [u, v, p, w]).collect();
        let (sp, sw) = rest.iter().fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |a, r| (a.0 + r.0, a.1 + r.1));
        tr.push([u, v, -sp, -sw]);
        for row in VertexType::A.rows(n) {
            prop_assert!(row.apply(&tr).norm() < 1e-12);
        }
        prop_assert!(flux_from_traces(&tr).abs() < 1e-10);
    }

    #[test]
    fn type_b_boundary_data_carry_no_flux(p in cplx(), w in cplx(), rest in proptest::collection::vec((cplx(), cplx()), 1..6)) {
        let n = rest.len() + 1;
        let mut tr: Vec<[C64; 4]> = rest.iter().map(|&(u, v)| [u, v, p, w]).collect();
        let (su, sv) = rest.iter().fold((C64::new(0.0, 0.0), C64::new(0.0, 0.0)), |a, r| (a.0 + r.0, a.1 + r.1));
        tr.push([-su, -sv, p, w]);
        for row in VertexType::B.rows(n) {
            prop_assert!(row.apply(&tr).norm() < 1e-12);
        }
        prop_assert!(flux_from_traces(&tr).abs() < 1e-10);
    }

    #[test]
    fn diagnostics_are_gauge_invariant(st in random_state(3, 8), theta in -7.0..7.0f64, vt in vertex_type()) {
        let r = st.rotated(theta);
        prop_assert!((mass(&r) - mass(&st)).abs() < 1e-12 * mass(&st).max(1.0));
        // traces scale like dx^{-3}, so the flux reaches ~1e6
        prop_assert!((vertex_flux(&r) - vertex_flux(&st)).abs() <= 1e-12 * vertex_flux(&st).abs() + 1e-6);
        for (a, b) in vertex_residuals(&r, vt).iter().zip(vertex_residuals(&st, vt)) {
            prop_assert!((a - b).abs() <= 1e-12 * b + 1e-9);
        }
    }

    #[test]
    fn rl_integral_is_linear(f in proptest::collection::vec(cplx(), 20), g in proptest::collection::vec(cplx(), 20), a in cplx(), b in cplx(), alpha in 0.05..3.0f64) {
        let f = SampledSignal::new(0.05, f).unwrap();
        let g = SampledSignal::new(0.05, g).unwrap();
        let lhs = rl_integral(&f.combine(a, &g, b).unwrap(), alpha).unwrap();
        let rhs = rl_integral(&f, alpha).unwrap().combine(a, &rl_integral(&g, alpha).unwrap(), b).unwrap();
        for (x, y) in lhs.samples().iter().zip(rhs.samples()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn propagator_preserves_mass(data in proptest::collection::vec(cplx(), 64), t in -3.0..3.0f64) {
        let grid = PeriodicGrid::centered(5.0, 64).unwrap();
        let out = free_propagator(&grid, &data, t).unwrap();
        prop_assert!((grid.mass(&out) - grid.mass(&data)).abs() <= 1e-12 * grid.mass(&data).max(1e-300));
    }

    #[test]
    fn duhamel_is_linear(a in cplx(), seed in proptest::collection::vec(cplx(), 2 * 32 * 4)) {
        let grid = PeriodicGrid::centered(4.0, 32).unwrap();
        let times: Vec<f64> = (0..4).map(|k| 0.01 * k as f64).collect();
        let half = seed.len() / 2;
        let w1 = SpaceTimeField::new(times.clone(), grid.x_min, grid.dx, seed[..half].to_vec()).unwrap();
        let w2 = SpaceTimeField::new(times.clone(), grid.x_min, grid.dx, seed[half..].to_vec()).unwrap();
        let sum: Vec<C64> = seed[..half].iter().zip(&seed[half..]).map(|(x, y)| a * x + y).collect();
        let w = SpaceTimeField::new(times, grid.x_min, grid.dx, sum).unwrap();
        let (d, d1, d2) = (duhamel(&grid, &w).unwrap(), duhamel(&grid, &w1).unwrap(), duhamel(&grid, &w2).unwrap());
        for k in 0..4 {
            for m in 0..32 {
                prop_assert!((d.get(k, m) - (a * d1.get(k, m) + d2.get(k, m))).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn field_binary_round_trip(data in proptest::collection::vec(cplx(), 12), x0 in -5.0..5.0f64) {
        let f = SpaceTimeField::new(vec![0.0, 0.5, 1.0], x0, 0.25, data).unwrap();
        let mut bytes = Vec::new();
        f.write_binary(&mut bytes).unwrap();
        let g = SpaceTimeField::read_binary(&bytes).unwrap();
        prop_assert_eq!(g.times(), f.times());
        for k in 0..3 {
            prop_assert_eq!(g.level(k), f.level(k));
        }
        prop_assert!((g.dx() - f.dx()).abs() < 1e-15 && (g.x_min() - f.x_min()).abs() < 1e-15);
    }

    #[test]
    fn floats_round_trip_through_text(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        prop_assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
    }
}

fn small_config(vt: VertexType, lam: f64) -> SimConfig {
    SimConfig {
        grid: GridSpec {
            n_edges: 3,
            length: 10.0,
            nx: 40,
            dt: 1e-3,
            t_end: 0.01,
        },
        vertex_type: vt,
        nonlinearity: lam,
        max_nonlinearity: 100.0,
        profiles: vec![
            Profile::gaussian(3.0, 1.0),
            Profile::Gaussian {
                amplitude: [0.5, -0.3],
                center: 4.0,
                width: 0.8,
                wavenumber: 1.5,
            },
            Profile::Zero,
        ],
        output: OutputSpec::default(),
        solver: SolverSpec::default(),
    }
}

fn advance(cfg: &SimConfig, st: &GraphState, steps: usize) -> Vec<C64> {
    let mut sim = Simulator::from_state(cfg, st).unwrap();
    for _ in 0..steps {
        sim.step().unwrap();
    }
    sim.interior().to_vec()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn step_commutes_with_global_phase(theta in -3.2..3.2f64, vt in vertex_type(), lam in -2.0..2.0f64) {
        let cfg = small_config(vt, lam);
        let st = GraphState::from_profiles(&cfg.profiles, &cfg.grid);
        let a = advance(&cfg, &st.rotated(theta), 5);
        let r = C64::from_polar(1.0, theta);
        let b = advance(&cfg, &st, 5);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y * r).norm() < 1e-11);
        }
    }
}

#[test]
fn zero_is_a_fixed_point() {
    for vt in VertexType::ALL {
        let mut cfg = small_config(vt, -1.0);
        cfg.profiles = vec![Profile::Zero; 3];
        let st = GraphState::from_profiles(&cfg.profiles, &cfg.grid);
        assert!(advance(&cfg, &st, 10).iter().all(|z| z.norm() == 0.0));
    }
}

/// Stepping the conjugate of the end state returns the conjugate of the start.
#[test]
fn scheme_is_time_reversible() {
    for vt in VertexType::ALL {
        let cfg = small_config(vt, -1.0);
        let mut sim = Simulator::new(&cfg).unwrap();
        let start = sim.interior().to_vec();
        for _ in 0..10 {
            sim.step().unwrap();
        }
        let back = advance(&cfg, &sim.state().conj(), 10);
        for (x, y) in back.iter().zip(&start) {
            assert!((x - y.conj()).norm() < 1e-10, "{vt}");
        }
    }
}
