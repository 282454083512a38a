use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use bigraph::forcing_kernel::{
    kernel_b, linear_reconstruct, trace_check, ForcingGrid, NegativeOrderRoute, SpaceTimeField,
    TRUNCATION_WARNING,
};
use bigraph::graph_sim::{refinement_study, run, RunOutput};
use bigraph::io::fmt_f64;
use bigraph::vertex_algebra::{
    CouplingMinors, CouplingMatrix, LambdaAssignment, NormalizedMatrix, TypeAReduction, VertexType,
};
use bigraph::C64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{config_hash, load, ReconstructFile, SimulateFile, SnapshotFormat};
use crate::CliError;

fn kv(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "{key},{value}");
}

pub fn coupling_det(vt: VertexType, edges: usize, l1: f64, l2: f64) -> Result<(), CliError> {
    let lambdas = LambdaAssignment::uniform(edges, l1, l2)?;
    let m = CouplingMatrix::build(edges, vt, &lambdas)?;
    let cert = m.certificate()?;
    let mut out = String::new();
    kv(&mut out, "vertex_type", vt);
    kv(&mut out, "edges", edges);
    kv(&mut out, "lambda1", fmt_f64(l1));
    kv(&mut out, "lambda2", fmt_f64(l2));
    kv(&mut out, "det_re", fmt_f64(cert.det.re));
    kv(&mut out, "det_im", fmt_f64(cert.det.im));
    kv(&mut out, "det_abs", fmt_f64(cert.det.norm()));
    kv(&mut out, "row_norm_product", fmt_f64(cert.scale));
    kv(&mut out, "condition_estimate", fmt_f64(cert.condition_estimate));
    kv(&mut out, "invertible", cert.invertible);
    if edges == 2 {
        if vt == VertexType::A {
            let red = TypeAReduction::from_matrix(&NormalizedMatrix::build(2, vt, &lambdas)?)?;
            kv(&mut out, "reduced_e_minus_m", fmt_f64(red.e_minus_m()));
            kv(&mut out, "reduced_n_minus_acg", fmt_f64(red.n_minus_acg()));
            kv(&mut out, "reduced_det", fmt_f64(red.det_reduced()));
            kv(&mut out, "normalized_det_re", fmt_f64(red.det_normalized.re));
            kv(&mut out, "normalized_det_im", fmt_f64(red.det_normalized.im));
        } else {
            let c = CouplingMinors::new(l1, l2)?;
            kv(&mut out, "minor_ag_fn", fmt_f64(c.ag_fn));
            kv(&mut out, "minor_cg_fe", fmt_f64(c.cg_fe));
            kv(&mut out, "minor_cm_de", fmt_f64(c.cm_de));
            kv(&mut out, "minor_am_dn", fmt_f64(c.am_dn));
        }
    }
    print!("{out}");
    Ok(())
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

pub fn coupling_scan(
    vt: VertexType,
    edges: usize,
    l1: [f64; 2],
    l2: [f64; 2],
    points: usize,
    output: Option<&Path>,
) -> Result<(), CliError> {
    if points == 0 {
        return Err(CliError::Config("--points must be positive".into()));
    }
    let mut out = String::from("lambda1,lambda2,re,im,abs\n");
    for &a in &linspace(l1[0], l1[1], points) {
        for &b in &linspace(l2[0], l2[1], points) {
            let det = match LambdaAssignment::uniform(edges, a, b) {
                Ok(lam) => CouplingMatrix::build(edges, vt, &lam)?.certificate()?.det,
                Err(bigraph::Error::DegenerateOrder { .. }) => C64::new(f64::NAN, f64::NAN),
                Err(e) => return Err(e.into()),
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(a),
                fmt_f64(b),
                fmt_f64(det.re),
                fmt_f64(det.im),
                fmt_f64(det.norm())
            );
        }
    }
    match output {
        Some(p) => fs::write(p, out)?,
        None => print!("{out}"),
    }
    Ok(())
}

pub fn kernel_table(xmin: f64, xmax: f64, points: usize, tol: f64) -> Result<(), CliError> {
    if points == 0 || xmin.is_nan() || xmax.is_nan() || xmin > xmax {
        return Err(CliError::Config("need points ≥ 1 and xmin ≤ xmax".into()));
    }
    let table = kernel_b(&linspace(xmin, xmax, points), tol)?;
    let mut out = String::from("x,re,im,err_est\n");
    for (x, v) in table.xs.iter().zip(&table.values) {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(*x),
            fmt_f64(v.re),
            fmt_f64(v.im),
            fmt_f64(table.error_estimate)
        );
    }
    print!("{out}");
    Ok(())
}

pub fn kernel_trace_check(lambda: f64, route: NegativeOrderRoute, grid: ForcingGrid) -> Result<(), CliError> {
    let tc = trace_check(lambda, grid, route)?;
    let mut out = String::from("t,measured_re,measured_im,closed_re,closed_im,rel_deviation\n");
    for (t, r) in tc.times.iter().zip(&tc.ratios) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_f64(*t),
            fmt_f64(r.re),
            fmt_f64(r.im),
            fmt_f64(tc.coefficient.re),
            fmt_f64(tc.coefficient.im),
            fmt_f64((r - tc.coefficient).norm() / tc.coefficient.norm())
        );
    }
    print!("{out}");
    eprintln!(
        "lambda={} max_deviation={} truncation_indicator={}",
        fmt_f64(lambda),
        fmt_f64(tc.max_deviation),
        fmt_f64(tc.truncation_indicator)
    );
    if tc.truncation_indicator > TRUNCATION_WARNING {
        eprintln!("warning: the outer tenth of [0, y_max] contributes more than 1% of the trace");
    }
    Ok(())
}

fn run_dir(config: &Path, name: Option<&str>) -> Result<PathBuf, CliError> {
    let root = std::env::var_os("BIGRAPH_OUTPUT_DIR").map_or_else(|| PathBuf::from("output"), PathBuf::from);
    let stem = match name {
        Some(n) => n.to_owned(),
        None => config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .ok_or_else(|| CliError::Config("config path has no file name".into()))?,
    };
    let dir = root.join(stem);
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

struct Manifest<'a> {
    command: &'a str,
    config: Value,
    hash: String,
    seed: u64,
    outputs: Vec<String>,
    warnings: Vec<String>,
    results: Value,
    error: Option<String>,
}

impl Manifest<'_> {
    fn new<'a, T: Serialize>(command: &'a str, cfg: &T, seed: u64) -> Manifest<'a> {
        Manifest {
            command,
            config: serde_json::to_value(cfg).expect("config serializes"),
            hash: config_hash(cfg),
            seed,
            outputs: Vec::new(),
            warnings: Vec::new(),
            results: Value::Null,
            error: None,
        }
    }

    fn write(&self, dir: &Path, scheme: Value) -> Result<(), CliError> {
        let doc = json!({
            "tool": "bigraph",
            "version": env!("CARGO_PKG_VERSION"),
            "library_version": bigraph::VERSION,
            "command": self.command,
            "config_hash": self.hash,
            "seed": self.seed,
            "config": self.config,
            "scheme": scheme,
            "outputs": self.outputs,
            "warnings": self.warnings,
            "results": self.results,
            "status": if self.error.is_some() { "error" } else { "ok" },
            "error": self.error,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("manifest serializes");
        text.push('\n');
        fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn write_output(dir: &Path, manifest: &mut Manifest<'_>, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(dir.join(name), bytes)?;
    manifest.outputs.push(name.to_owned());
    Ok(())
}

fn write_snapshots(dir: &Path, manifest: &mut Manifest<'_>, out: &RunOutput, format: SnapshotFormat) -> Result<(), CliError> {
    match format {
        SnapshotFormat::Csv => {
            let mut text = String::from("step,t,edge,x,re,im\n");
            for s in &out.snapshots {
                for line in s.state.to_csv().lines().skip(1) {
                    let _ = writeln!(text, "{},{line}", s.step);
                }
            }
            write_output(dir, manifest, "snapshots.csv", text)
        }
        SnapshotFormat::Binary => {
            let Some(first) = out.snapshots.first() else {
                return Ok(());
            };
            let times: Vec<f64> = out.snapshots.iter().map(|s| s.state.t).collect();
            for j in 0..first.state.n_edges() {
                let data = out.snapshots.iter().flat_map(|s| s.state.u[j].iter().copied()).collect();
                let field = SpaceTimeField::new(times.clone(), 0.0, first.state.dx, data)?;
                let mut bytes = Vec::new();
                field.write_binary(&mut bytes)?;
                write_output(dir, manifest, &format!("snapshots_edge{}.bin", j + 1), bytes)?;
            }
            Ok(())
        }
    }
}

pub fn simulate(path: &Path, refine: usize, name: Option<&str>) -> Result<(), CliError> {
    let file: SimulateFile = load(path)?;
    let cfg = &file.simulation;
    cfg.validate()?;
    let dir = run_dir(path, name)?;
    let mut manifest = Manifest::new("simulate", &file, file.seed);
    let scheme = json!({
        "time": "crank_nicolson_averaged_nonlinearity",
        "order": 2,
        "interior_stencil": "five_point",
        "vertex_stencil": cfg.solver.stencil,
        "far_end": "clamped",
        "dx": cfg.grid.dx(),
        "steps": cfg.grid.steps(),
    });
    if cfg.vertex_type == VertexType::C {
        manifest.warnings.push(
            "Type C: the vertex flux does not vanish on all admissible boundary data; mass conservation is not asserted and the flux column is a diagnostic".into(),
        );
    }
    let out = match run(cfg) {
        Ok(out) => out,
        Err(e) => {
            manifest.error = Some(e.to_string());
            manifest.write(&dir, scheme)?;
            return Err(e.into());
        }
    };
    write_output(&dir, &mut manifest, "diagnostics.csv", out.diagnostics_csv())?;
    write_snapshots(&dir, &mut manifest, &out, file.export.snapshot_format)?;
    let last = out.diagnostics.last();
    manifest.results = json!({
        "symmetry_defect": out.symmetry_defect,
        "final_t": last.map(|r| r.t),
        "final_mass": last.map(|r| r.mass),
        "final_mass_drift_rel": last.map(|r| r.mass_drift_rel),
        "final_flux": last.map(|r| r.flux),
    });
    let mut failure = out.error.clone();
    if failure.is_none() && refine > 0 {
        match refinement_study(cfg, refine) {
            Ok(rows) => {
                let mut text = String::from("level,nx,dt,final_drift,ratio\n");
                for (i, r) in rows.iter().enumerate() {
                    let _ = writeln!(
                        text,
                        "{i},{},{},{},{}",
                        r.nx,
                        fmt_f64(r.dt),
                        fmt_f64(r.final_drift),
                        r.ratio.map_or_else(String::new, fmt_f64)
                    );
                }
                write_output(&dir, &mut manifest, "refinement.csv", text)?;
                manifest.results["refinement"] = serde_json::to_value(&rows).expect("rows serialize");
            }
            Err(e) => failure = Some(e),
        }
    }
    manifest.error = failure.as_ref().map(ToString::to_string);
    manifest.write(&dir, scheme)?;

    let mut summary = String::new();
    kv(&mut summary, "output_dir", dir.display());
    if let Some(r) = last {
        kv(&mut summary, "final_t", fmt_f64(r.t));
        kv(&mut summary, "final_mass_drift_rel", fmt_f64(r.mass_drift_rel));
        kv(&mut summary, "final_flux", fmt_f64(r.flux));
    }
    kv(&mut summary, "symmetry_defect", fmt_f64(out.symmetry_defect));
    print!("{summary}");
    match failure {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

pub fn reconstruct(path: &Path, name: Option<&str>) -> Result<(), CliError> {
    let file: ReconstructFile = load(path)?;
    let dir = run_dir(path, name)?;
    let mut manifest = Manifest::new("reconstruct", &file, file.seed);
    let cfg = &file.reconstruction;
    let scheme = json!({
        "free_evolution": "spectral_periodic",
        "time_quadrature": "product_trapezoid",
        "order": 2,
        "periodic_points": (2.0 * cfg.period / cfg.dy).round(),
        "steps": cfg.steps(),
    });
    let rec = match linear_reconstruct(&file.profiles, cfg) {
        Ok(r) => r,
        Err(e) => {
            manifest.error = Some(e.to_string());
            manifest.write(&dir, scheme)?;
            return Err(e.into());
        }
    };

    let mut text = String::from("row,order,sup,scale,relative\n");
    for r in &rec.residuals {
        let _ = writeln!(text, "{},{},{},{},{}", r.row, r.order, fmt_f64(r.sup), fmt_f64(r.scale), fmt_f64(r.relative));
    }
    write_output(&dir, &mut manifest, "residuals.csv", text)?;

    let mut text = String::from("t,edge,order,re,im\n");
    for (j, tr) in rec.traces.iter().enumerate() {
        for (k, series) in tr.iter().enumerate() {
            for (t, z) in rec.times.iter().zip(series) {
                let _ = writeln!(text, "{},{},{k},{},{}", fmt_f64(*t), j + 1, fmt_f64(z.re), fmt_f64(z.im));
            }
        }
    }
    write_output(&dir, &mut manifest, "traces.csv", text)?;

    let mut text = String::from("edge,x,re,im\n");
    for (j, p) in rec.final_profiles.iter().enumerate() {
        for (m, z) in p.iter().enumerate() {
            let _ = writeln!(text, "{},{},{},{}", j + 1, fmt_f64(m as f64 * cfg.dy), fmt_f64(z.re), fmt_f64(z.im));
        }
    }
    write_output(&dir, &mut manifest, "final_profile.csv", text)?;

    let mut text = String::from("t");
    for j in 0..rec.gamma.len() / 2 {
        for i in 1..=2 {
            let _ = write!(text, ",gamma_{}{i}_re,gamma_{}{i}_im", j + 1, j + 1);
        }
    }
    text.push('\n');
    if let Some(g0) = rec.gamma.first() {
        for k in 0..g0.len() {
            text.push_str(&fmt_f64(g0.time(k)));
            for g in &rec.gamma {
                let z = g.samples()[k];
                let _ = write!(text, ",{},{}", fmt_f64(z.re), fmt_f64(z.im));
            }
            text.push('\n');
        }
    }
    write_output(&dir, &mut manifest, "gamma.csv", text)?;

    if rec.truncation_indicator > TRUNCATION_WARNING {
        manifest.warnings.push(format!(
            "truncated y-range: outer tenth contributes {} of the forcing",
            fmt_f64(rec.truncation_indicator)
        ));
    }
    manifest.results = json!({
        "residuals": rec.residuals,
        "max_relative_residual": rec.max_relative_residual(),
        "initial_mass": rec.initial_mass,
        "final_mass": rec.final_mass,
        "mass_budget_rel": rec.mass_budget(),
        "truncation_indicator": rec.truncation_indicator,
    });
    manifest.write(&dir, scheme)?;

    let mut summary = String::new();
    kv(&mut summary, "output_dir", dir.display());
    for r in &rec.residuals {
        kv(&mut summary, &format!("residual_{}", r.row), fmt_f64(r.relative));
    }
    kv(&mut summary, "mass_budget_rel", fmt_f64(rec.mass_budget()));
    kv(&mut summary, "truncation_indicator", fmt_f64(rec.truncation_indicator));
    print!("{summary}");
    Ok(())
}
