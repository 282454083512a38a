//! Acceptance report: one PASS/FAIL line per criterion, exit status 1 if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use bigraph::forcing_kernel::{
    kernel_b, kernel_b_at, linear_reconstruct, trace_check, ForcingGrid, NegativeOrderRoute,
    ReconstructConfig,
};
use bigraph::fractional::{rl_integral, SampledSignal};
use bigraph::graph_sim::{
    flux_from_traces, refinement_study, run, GraphState, GridSpec, OutputSpec, Profile, SimConfig,
    Simulator, SolverSpec,
};
use bigraph::vertex_algebra::{
    certify_invertible, determinant_block, determinant_lu, normalized_coefficients, universal_constant,
    CouplingMinors, LambdaAssignment, NormalizedMatrix, TypeAReduction, VertexType,
};
use bigraph::C64;
use nalgebra::DMatrix;
use statrs::function::gamma::gamma;

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn record(&mut self, id: u32, title: &str, pass: bool, detail: String, started: Instant) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!(
            "{verdict} criterion {id:>2} {title}: {detail} [{:.1}s]",
            started.elapsed().as_secs_f64()
        );
        if !pass {
            self.failed.push(id);
        }
    }
}

fn info(line: String) {
    println!("     {line}");
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn reduced_determinant(r: &mut Report) {
    let t = Instant::now();
    let red = TypeAReduction::canonical().expect("canonical reduction");
    let det = red.det_normalized;
    let (em, nacg) = (red.e_minus_m(), red.n_minus_acg());
    let ok_det = det.im.abs() <= 1e-3 && within(det.re, -7.1722, 1e-3);
    let ok_em = within(em, -0.6508, 1e-3);
    let ok_nacg = within(nacg, 0.9741, 1e-3);
    info(format!("det A' = {:.6} {:+.2e}i, target -7.1722 ± 1e-3: {}", det.re, det.im, ok_det));
    info(format!("e - m = {em:.6}, target -0.6508 ± 1e-3: {ok_em}"));
    info(format!("n - acg = {nacg:.6}, target 0.9741 ± 1e-3: {ok_nacg}"));
    info(format!(
        "8√2 (e - m)(0.9741) = {:.6}; 8√2 (e - m)(n - acg) = {:.6}",
        8.0 * SQRT_2 * em * 0.9741,
        8.0 * SQRT_2 * em * nacg
    ));
    r.record(
        1,
        "N=2 Type A reduced determinant",
        ok_det && ok_em && ok_nacg,
        format!("det={:.6} e-m={em:.6} n-acg={nacg:.6}", det.re),
        t,
    );
}

fn coupling_minors(r: &mut Report) {
    let t = Instant::now();
    let m = CouplingMinors::canonical();
    let ok_cg = within(m.cg_fe, -2.4053, 1e-3);
    let ok_am = within(m.am_dn, 0.8446, 1e-3);
    info(format!("cg - fe = {:.6}, target -2.4053 ± 1e-3: {ok_cg}", m.cg_fe));
    info(format!("am - dn = {:.6}, target 0.8446 ± 1e-3: {ok_am}", m.am_dn));
    info(format!("ag - fn = {:.6}, cm - de = {:.6}", m.ag_fn, m.cm_de));
    r.record(
        2,
        "coupling minors at (-1/2, 1/4)",
        ok_cg && ok_am,
        format!("cg-fe={:.6} am-dn={:.6}", m.cg_fe, m.am_dn),
        t,
    );
}

fn block_determinant(r: &mut Report) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for n in 2..=10 {
        let m = NormalizedMatrix::build(n, VertexType::A, &LambdaAssignment::canonical(n)).expect("build");
        let lu = determinant_lu(&m.entries);
        let block = determinant_block(&m).expect("block determinant");
        worst = worst.max((block - lu).norm() / lu.norm());
    }
    let [l1, l2] = LambdaAssignment::CANONICAL;
    let (p, q) = (normalized_coefficients(l1).unwrap(), normalized_coefficients(l2).unwrap());
    let (a, n, f, g) = (p.a, q.a, p.b, q.b);
    let (cc, e, d, m) = (p.c, q.c, p.d, q.d);
    let closed = 9.0 * (d * e - cc * m) * (a * g - n * f).powi(2);
    let m3 = NormalizedMatrix::build(3, VertexType::A, &LambdaAssignment::canonical(3)).unwrap();
    let lu3 = determinant_lu(&m3.entries);
    let rel3 = (lu3 - closed).norm() / lu3.norm();
    info(format!("max block/LU relative gap over N=2..10: {worst:.2e}"));
    info(format!("N=3: LU {lu3:.6}, 9(de-cm)(ag-nf)^2 {closed:.6}, relative gap {rel3:.2e}"));
    r.record(
        3,
        "block vs LU determinant",
        worst <= 1e-10 && rel3 <= 1e-10,
        format!("block/LU {worst:.2e}, N=3 closed form {rel3:.2e}"),
        t,
    );
}

fn invertibility(r: &mut Report) {
    let t = Instant::now();
    let mut bad = Vec::new();
    let mut weakest = f64::INFINITY;
    for vt in VertexType::ALL {
        for n in 2..=16 {
            let cert = certify_invertible(n, vt).expect("certificate");
            weakest = weakest.min(cert.det.norm() / cert.scale);
            if !cert.invertible {
                bad.push(format!("{vt}{n}"));
                info(format!(
                    "Type {vt}, N={n}: |det| {:.3e}, row-norm product {:.3e}, condition estimate {:.3e}",
                    cert.det.norm(),
                    cert.scale,
                    cert.condition_estimate
                ));
            }
        }
    }
    r.record(
        4,
        "invertibility for A, B, C and N=2..16",
        bad.is_empty(),
        format!("smallest |det|/scale {weakest:.3e}, failures {bad:?}"),
        t,
    );
}

fn constants(r: &mut Report) {
    let t = Instant::now();
    let m = universal_constant();
    let expected = C64::from_polar(2.0 * SQRT_2, PI / 8.0);
    let mod_err = (m.norm() - 2.0 * SQRT_2).abs();
    let b0 = kernel_b_at(0.0, 1e-8).expect("quadrature B(0)");
    let product_err = (m * b0 * gamma(0.75) - 1.0).norm();
    info(format!("|M - 2√2 e^(iπ/8)| = {:.2e}", (m - expected).norm()));
    r.record(
        5,
        "constant identities",
        mod_err <= 1e-10 && product_err <= 1e-6 && (m - expected).norm() <= 1e-10,
        format!("||M| - 2√2| = {mod_err:.2e}, |M B(0) Γ(3/4) - 1| = {product_err:.2e}"),
        t,
    );
}

/// `(M/8)(e^{−iπ(1+3λ)/8} + e^{−iπ(1−5λ)/8}) / sin((1−λ)π/4)` with `M = 2√2 e^{iπ/8}`.
fn trace_coefficient(lambda: f64) -> C64 {
    let m = C64::from_polar(2.0 * SQRT_2, PI / 8.0);
    let num = C64::from_polar(1.0, -PI * (1.0 + 3.0 * lambda) / 8.0) + C64::from_polar(1.0, -PI * (1.0 - 5.0 * lambda) / 8.0);
    m / 8.0 * num / ((1.0 - lambda) * PI / 4.0).sin()
}

fn trace_formula(r: &mut Report) {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [0.0, 0.25, -0.5] {
        let tc = trace_check(lambda, ForcingGrid::default(), NegativeOrderRoute::MinimalDerivative).expect("trace check");
        let target = trace_coefficient(lambda);
        let dev = tc
            .ratios
            .iter()
            .map(|z| (z - target).norm() / target.norm())
            .fold(0.0, f64::max);
        pass &= dev <= 0.05;
        parts.push(format!("λ={lambda}: {dev:.2e}"));
        info(format!(
            "λ = {lambda}: coefficient {target:.6}, max deviation {dev:.3e}, truncation indicator {:.2e}",
            tc.truncation_indicator
        ));
    }
    let alt = trace_check(-0.5, ForcingGrid::default(), NegativeOrderRoute::FourthDerivative).expect("trace check");
    info(format!(
        "λ = -0.5 by the fourth-derivative route (not scored): max deviation {:.3e}",
        alt.max_deviation
    ));
    r.record(6, "trace formula", pass, parts.join(", "), t);
}

fn signal(dt: f64, k: usize, f: impl Fn(f64) -> f64) -> SampledSignal {
    SampledSignal::from_fn(dt, k, |t| c(f(t), 0.0)).unwrap()
}

fn fractional_suite(r: &mut Report) {
    let t = Instant::now();
    let dt = 1e-3;
    let mut mono_ok = true;
    let mut worst: f64 = 0.0;
    for beta in [1.0, 2.0, 3.0] {
        let f = signal(dt, 1000, |t| t.powf(beta));
        for alpha in [0.25, 0.5, 0.75, 1.5] {
            let i = rl_integral(&f, alpha).unwrap();
            let exact = gamma(beta + 1.0) / gamma(beta + alpha + 1.0);
            let err = (0..f.len())
                .map(|k| (i.samples()[k].re - exact * i.time(k).powf(beta + alpha)).abs())
                .fold(0.0, f64::max);
            // product trapezoid is exact on linear data and O(dt²) otherwise
            mono_ok &= err <= if beta == 1.0 { 1e-12 } else { 1e-5 };
            worst = worst.max(err);
        }
    }
    let err = |dt: f64| {
        let k = (1.0 / dt).round() as usize;
        let f = signal(dt, k, |t| (PI * t).sin().powi(2));
        let twice = rl_integral(&rl_integral(&f, 0.5).unwrap(), 0.5).unwrap();
        let once = rl_integral(&f, 1.0).unwrap();
        twice
            .samples()
            .iter()
            .zip(once.samples())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    };
    let (e1, e2) = (err(0.01), err(0.005));
    let ratio = e1 / e2;
    info(format!("monomial max error {worst:.2e}; semigroup errors {e1:.3e} → {e2:.3e}"));
    r.record(
        7,
        "fractional calculus",
        mono_ok && (3.5..=4.5).contains(&ratio),
        format!("monomials ok = {mono_ok}, semigroup ratio {ratio:.3}"),
        t,
    );
}

fn expm_oracle(r: &mut Report) {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for vt in [VertexType::A, VertexType::B] {
        let cfg = SimConfig {
            grid: GridSpec {
                n_edges: 1,
                length: 10.0,
                nx: 60,
                dt: 1e-4,
                t_end: 0.05,
            },
            vertex_type: vt,
            nonlinearity: 0.0,
            max_nonlinearity: 100.0,
            profiles: vec![Profile::gaussian(4.0, 1.0)],
            output: OutputSpec::default(),
            solver: SolverSpec::default(),
        };
        let mut sim = Simulator::new(&cfg).unwrap();
        let n = sim.interior().len();
        let u0 = DMatrix::from_column_slice(n, 1, sim.interior());
        let d = sim.operator().matrix.to_dense();
        let gen = DMatrix::from_fn(n, n, |i, j| d[(i, j)] * c(0.0, -cfg.grid.t_end));
        let exact = gen.exp() * u0;
        for _ in 0..cfg.grid.steps() {
            sim.step().unwrap();
        }
        let ours = DMatrix::from_column_slice(n, 1, sim.interior());
        let rel = (ours - &exact).norm() / exact.norm();
        info(format!("Type {vt}: relative L² error {rel:.3e}"));
        worst = worst.max(rel);
    }
    r.record(8, "linear solver vs matrix exponential", worst <= 1e-4, format!("{worst:.3e}"), t);
}

fn three_edges(vt: VertexType, lam: f64) -> SimConfig {
    SimConfig {
        grid: GridSpec {
            n_edges: 3,
            length: 10.0,
            nx: 100,
            dt: 2e-4,
            t_end: 0.1,
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
        output: OutputSpec {
            cadence: 50,
            snapshot_every: 0,
        },
        solver: SolverSpec::default(),
    }
}

/// Deterministic pseudo-random complex numbers in `[−1, 1]²`.
fn samples(seed: u64, n: usize) -> Vec<C64> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    };
    (0..n).map(|_| c(next(), next())).collect()
}

/// Largest `|flux|` over random trace tuples that satisfy the vertex conditions exactly.
fn synthetic_flux(vt: VertexType) -> f64 {
    let mut worst: f64 = 0.0;
    for trial in 0..50u64 {
        let n = 2 + (trial % 5) as usize;
        let z = samples(trial + 1, 2 * n + 2);
        let (cont, free) = match vt {
            VertexType::A => ([0, 1], [2, 3]),
            VertexType::B => ([2, 3], [0, 1]),
            VertexType::C => ([0, 3], [1, 2]),
        };
        let mut traces = vec![[C64::new(0.0, 0.0); 4]; n];
        for (j, tr) in traces.iter_mut().enumerate() {
            tr[cont[0]] = z[0];
            tr[cont[1]] = z[1];
            if j + 1 < n {
                tr[free[0]] = z[2 + 2 * j];
                tr[free[1]] = z[3 + 2 * j];
            }
        }
        for k in free {
            let s: C64 = traces[..n - 1].iter().map(|t| t[k]).sum();
            traces[n - 1][k] = -s;
        }
        worst = worst.max(flux_from_traces(&traces).abs());
    }
    worst
}

fn mass_conservation(r: &mut Report) {
    let t = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for vt in [VertexType::A, VertexType::B] {
        for lam in [0.0, -1.0] {
            let rows = refinement_study(&three_edges(vt, lam), 2).expect("refinement study");
            let ratios: Vec<f64> = rows.iter().filter_map(|row| row.ratio).collect();
            let ok = ratios.iter().all(|q| (3.0..=5.0).contains(q));
            pass &= ok;
            let drifts: Vec<String> = rows.iter().map(|row| format!("{:.3e}", row.final_drift)).collect();
            info(format!("Type {vt}, λ_nl = {lam}: drifts {drifts:?}, ratios {ratios:.3?}"));
            parts.push(format!("{vt}/{lam}: {ratios:.2?}"));
        }
        let flux = synthetic_flux(vt);
        pass &= flux <= 1e-12;
        info(format!("Type {vt}: synthetic boundary-data flux {flux:.2e}"));
    }
    let out = run(&three_edges(VertexType::C, 0.0)).expect("Type C run");
    let last = out.diagnostics.last().expect("diagnostics");
    info(format!(
        "Type C (reported only): drift {:.3e}, flux {:.3e}, synthetic flux {:.3e}",
        last.mass_drift_rel,
        last.flux,
        synthetic_flux(VertexType::C)
    ));
    r.record(9, "mass conservation under refinement", pass, parts.join(", "), t);
}

fn reconstruction(r: &mut Report) {
    let t = Instant::now();
    let profiles = vec![
        Profile::gaussian(3.0, 0.75),
        Profile::Gaussian {
            amplitude: [0.5, 0.0],
            center: 3.0,
            width: 0.75,
            wavenumber: 0.0,
        },
    ];
    let rec = linear_reconstruct(&profiles, &ReconstructConfig::default()).expect("reconstruction");
    for row in &rec.residuals {
        info(format!("{}: sup {:.3e}, scale {:.3e}, relative {:.3e}", row.row, row.sup, row.scale, row.relative));
    }
    let res = rec.max_relative_residual();
    let budget = rec.mass_budget();
    r.record(
        10,
        "N=2 Type A linear reconstruction",
        res <= 0.05 && budget <= 0.05,
        format!("max residual {res:.3e}, mass budget {budget:.3e}"),
        t,
    );
}

fn run_cli(config: &Path, root: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_bigraph"))
        .args(["simulate", config.to_str().unwrap(), "--name", "run"])
        .env("BIGRAPH_OUTPUT_DIR", root)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn identical_dirs(a: &Path, b: &Path) -> bool {
    let mut names: Vec<PathBuf> = std::fs::read_dir(a).unwrap().map(|e| e.unwrap().path()).collect();
    names.sort();
    !names.is_empty()
        && names.iter().all(|p| {
            let other = b.join(p.file_name().unwrap());
            std::fs::read(p).ok() == std::fs::read(other).ok()
        })
}

fn invariance(r: &mut Report) {
    let t = Instant::now();
    let mut cfg = three_edges(VertexType::A, -1.0);
    cfg.grid.nx = 40;
    cfg.grid.dt = 1e-3;
    let st = GraphState::from_profiles(&cfg.profiles, &cfg.grid);
    let advance = |st: &GraphState| {
        let mut sim = Simulator::from_state(&cfg, st).unwrap();
        for _ in 0..5 {
            sim.step().unwrap();
        }
        sim.interior().to_vec()
    };
    let theta = 0.7;
    let rot = C64::from_polar(1.0, theta);
    let gauge = advance(&st.rotated(theta))
        .iter()
        .zip(advance(&st))
        .map(|(x, y)| (x - y * rot).norm())
        .fold(0.0, f64::max);

    let mut zero_cfg = cfg.clone();
    zero_cfg.profiles = vec![Profile::Zero; 3];
    let zero = GraphState::from_profiles(&zero_cfg.profiles, &zero_cfg.grid);
    let mut sim = Simulator::new(&zero_cfg).unwrap();
    for _ in 0..10 {
        sim.step().unwrap();
    }
    let zero_ok = sim.interior().iter().all(|z| *z == C64::new(0.0, 0.0)) && zero.sup_norm() == 0.0;

    let tol = 1e-8;
    let xs = [0.3, 1.0, 2.5, 4.0, 7.5];
    let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
    let (bp, bn) = (kernel_b(&xs, tol).unwrap(), kernel_b(&neg, tol).unwrap());
    let even = bp
        .values
        .iter()
        .zip(&bn.values)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/type_a_linear.toml");
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let deterministic =
        run_cli(&config, d1.path()) && run_cli(&config, d2.path()) && identical_dirs(&d1.path().join("run"), &d2.path().join("run"));

    info(format!("gauge defect {gauge:.2e}, zero fixed point {zero_ok}, evenness {even:.2e}, CLI byte-identical {deterministic}"));
    r.record(
        11,
        "invariance suite",
        gauge <= 1e-11 && zero_ok && even <= 10.0 * tol && deterministic,
        format!("gauge {gauge:.1e}, evenness {even:.1e}, deterministic {deterministic}"),
        t,
    );
}

fn main() {
    let mut report = Report { failed: Vec::new() };
    reduced_determinant(&mut report);
    coupling_minors(&mut report);
    block_determinant(&mut report);
    invertibility(&mut report);
    constants(&mut report);
    trace_formula(&mut report);
    fractional_suite(&mut report);
    expm_oracle(&mut report);
    mass_conservation(&mut report);
    reconstruction(&mut report);
    invariance(&mut report);
    if report.failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", report.failed);
        std::process::exit(1);
    }
}
