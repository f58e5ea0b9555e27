use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use convspline::basis::{cq_basis_all, spline_eval};
use convspline::stability::{
    pn_scan, rational_q, root_condition_check, Classification, OscillatoryFamily, RootConditionOptions, Witness,
    MAX_SCAN_OMEGA_DT,
};
use convspline::vie::{converge_study, manufactured_rhs, march, ConvergenceProblem, RHS_TOL};
use convspline::weights::compute_weights;
use convspline::{Kernel, TemporalBasis, TimeGrid};
use convspline_tdbie::{
    run, solution_norms, AssemblyOptions, IncidentField, Point, RunSpec, SurfaceMesh, TdbieError,
};
use serde::Serialize;
use serde_json::json;

use crate::config::*;
use crate::error::CliError;

type Result<T> = std::result::Result<T, CliError>;

const DEFAULT_STEPS: usize = 160;

/// Shortest round-trip representation.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".config.json");
    PathBuf::from(s)
}

/// Write the primary output, plus the resolved configuration next to it.
fn emit<C: Serialize>(command: &str, cfg: &C, out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, body)?;
            let mut value = serde_json::to_value(cfg).map_err(|e| CliError::Other(e.to_string()))?;
            if let Some(obj) = value.as_object_mut() {
                obj.insert("command".into(), json!(command));
            }
            let text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Other(e.to_string()))?;
            std::fs::write(sidecar_path(path), text + "\n")?;
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn required<T: Clone>(v: &Option<T>, name: &str) -> Result<T> {
    v.clone().ok_or_else(|| CliError::Config(format!("missing {name}")))
}

fn kernel(spec: &Option<String>) -> Result<Kernel> {
    Ok(required(spec, "kernel")?.parse()?)
}

fn basis(spec: &Option<String>) -> Result<TemporalBasis> {
    Ok(required(spec, "basis")?.parse()?)
}

fn grid(horizon: f64, n: Option<usize>, dt: Option<f64>) -> Result<TimeGrid> {
    match (n, dt) {
        (Some(_), Some(_)) => Err(CliError::Config("give either N or dt, not both".into())),
        (None, Some(dt)) => {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(CliError::Config(format!("dt must be positive, got {dt}")));
            }
            let steps = horizon / dt;
            let n = steps.round();
            if !(n >= 1.0 && (steps - n).abs() <= 1e-9 * n) {
                return Err(CliError::Config(format!("T = {horizon} is not a multiple of dt = {dt}")));
            }
            Ok(TimeGrid::new(dt, n as usize)?)
        }
        (n, None) => Ok(TimeGrid::from_horizon(horizon, n.unwrap_or(DEFAULT_STEPS))?),
    }
}

fn smooth_solution(t: f64) -> f64 {
    t.powi(6) * (-t).exp()
}

fn pulse_rhs(t: f64) -> f64 {
    t.powi(6) * (-50.0 * (t - 0.5) * (t - 0.5)).exp()
}

pub fn vie_solve(mut cfg: VieSolveArgs) -> Result<()> {
    cfg = cfg.resolve("vie-solve")?;
    let k = kernel(&cfg.kernel)?;
    let b = basis(&cfg.basis)?;
    let g = grid(required(&cfg.horizon, "T")?, cfg.n, cfg.dt)?;
    let smooth = match required(&cfg.problem, "problem")?.as_str() {
        "smooth" => true,
        "pulse" => false,
        other => return Err(CliError::Config(format!("unknown problem `{other}` (smooth | pulse)"))),
    };
    let a = if smooth {
        manufactured_rhs(&smooth_solution, &k, g, RHS_TOL)?
    } else {
        g.times().map(pulse_rhs).collect()
    };
    let w = compute_weights(&k, b, g)?;
    let v = march(&w, &a)?;
    let mut body = String::from(if smooth { "n,t_n,v_n,U_tn,u_exact\n" } else { "n,t_n,v_n,U_tn\n" });
    for n in 0..=g.n_steps() {
        let t = g.time(n);
        let u = v.reconstruct(t)?;
        if !u.is_finite() {
            return Err(CliError::Numerical(format!("reconstruction is not finite at t = {t}")));
        }
        write!(body, "{n},{},{},{}", num(t), num(v.values[n]), num(u)).unwrap();
        if smooth {
            write!(body, ",{}", num(smooth_solution(t))).unwrap();
        }
        body.push('\n');
    }
    emit("vie-solve", &cfg, cfg.out.as_deref(), &body)
}

pub fn vie_converge(mut cfg: VieConvergeArgs) -> Result<()> {
    cfg = cfg.resolve("vie-converge")?;
    let k = kernel(&cfg.kernel)?;
    let b = basis(&cfg.basis)?;
    let mut problem = match required(&cfg.problem, "problem")?.as_str() {
        "smooth" => ConvergenceProblem::smooth(k),
        "pulse" => ConvergenceProblem::pulse(k),
        other => return Err(CliError::Config(format!("unknown problem `{other}` (smooth | pulse)"))),
    };
    problem.horizon = required(&cfg.horizon, "T")?;
    let table = converge_study(&problem, b, &required(&cfg.n_list, "N-list")?)?;
    let mut body = String::from("N,h,error,order\n");
    for row in &table.rows {
        let order = row.order.map(num).unwrap_or_default();
        writeln!(body, "{},{},{},{order}", row.n, num(row.h), num(row.error)).unwrap();
    }
    eprintln!("fitted order {}", num(table.fitted_order));
    emit("vie-converge", &cfg, cfg.out.as_deref(), &body)
}

pub fn stab_scan(mut cfg: StabScanArgs) -> Result<()> {
    cfg = cfg.resolve("stab-scan")?;
    let family: OscillatoryFamily = required(&cfg.kernel, "kernel")?.parse()?;
    let b = basis(&cfg.basis)?;
    let (from, to, points) = (required(&cfg.from, "from")?, required(&cfg.to, "to")?, required(&cfg.points, "points")?);
    if !(0.0 <= from && from <= to && to <= MAX_SCAN_OMEGA_DT) || points == 0 {
        return Err(CliError::Config(format!("need 0 <= from <= to <= 20π and points >= 1 (from = {from}, to = {to})")));
    }
    let n_max = required(&cfg.n_max, "n-max")?;
    if n_max == 0 {
        return Err(CliError::Config("n-max must be positive".into()));
    }
    let thetas: Vec<f64> = (0..points)
        .map(|i| if points == 1 { from } else { from + (to - from) * i as f64 / (points - 1) as f64 })
        .collect();
    let scan = pn_scan(b, family, &thetas, n_max, 1.0)?;
    let mut body = String::from("omega_dt,max_abs_pn\n");
    for p in &scan {
        writeln!(body, "{},{}", num(p.omega_dt), num(p.max_abs_pn)).unwrap();
    }
    emit("stab-scan", &cfg, cfg.out.as_deref(), &body)
}

fn cluster_json(z: &convspline::stability::RootCluster) -> serde_json::Value {
    json!({ "re": z.center.re, "im": z.center.im, "modulus": z.modulus, "multiplicity": z.multiplicity })
}

pub fn stab_roots(mut cfg: StabRootsArgs) -> Result<()> {
    cfg = cfg.resolve("stab-roots")?;
    let k = kernel(&cfg.kernel)?;
    let b = basis(&cfg.basis)?;
    let dt = required(&cfg.dt, "dt")?;
    let q = rational_q(b, &k, TimeGrid::new(dt, 1)?)?;
    let opts = RootConditionOptions { c: required(&cfg.c, "c")?, ..Default::default() };
    let verdict = root_condition_check(&q, dt, opts)?;
    let label = match verdict.classification {
        Classification::Stable => "Stable",
        Classification::Unstable => "Unstable",
        Classification::Marginal => "Marginal",
    };
    let witness = match &verdict.witness {
        None => serde_json::Value::Null,
        Some(Witness::Root(z)) => json!({ "root": cluster_json(z) }),
        Some(Witness::Growth { max_abs_pn }) => json!({ "max_abs_pn": max_abs_pn }),
    };
    let report = json!({
        "kernel": k.label(),
        "basis": b.label(),
        "dt": dt,
        "threshold": verdict.threshold,
        "verdict": label,
        "roots": verdict.roots.iter().map(cluster_json).collect::<Vec<_>>(),
        "witness": witness,
    });
    let body = serde_json::to_string_pretty(&report).map_err(|e| CliError::Other(e.to_string()))? + "\n";
    emit("stab-roots", &cfg, cfg.out.as_deref(), &body)
}

pub fn weights_dump(mut cfg: WeightsDumpArgs) -> Result<()> {
    cfg = cfg.resolve("weights-dump")?;
    let k = kernel(&cfg.kernel)?;
    let b = basis(&cfg.basis)?;
    let g = grid(required(&cfg.horizon, "T")?, cfg.n, cfg.dt)?;
    let w = compute_weights(&k, b, g)?;
    let mut body = String::from("j,q_j\n");
    for j in 0..=g.n_steps() {
        writeln!(body, "{j},{}", num(w.get(j))).unwrap();
    }
    emit("weights-dump", &cfg, cfg.out.as_deref(), &body)
}

pub fn basis_dump(mut cfg: BasisDumpArgs) -> Result<()> {
    cfg = cfg.resolve("basis-dump")?;
    let b = basis(&cfg.basis)?;
    let functions = required(&cfg.functions, "functions")?;
    let (tau_max, points) = (required(&cfg.tau_max, "tau-max")?, required(&cfg.points, "points")?);
    if !(tau_max > 0.0 && tau_max.is_finite()) || points < 2 {
        return Err(CliError::Config(format!("need tau-max > 0 and points >= 2 (tau-max = {tau_max})")));
    }
    let mut body = String::from("tau");
    for j in 0..=functions {
        write!(body, ",phi_{j}").unwrap();
    }
    body.push('\n');
    for i in 0..points {
        let tau = tau_max * i as f64 / (points - 1) as f64;
        let row = match b {
            TemporalBasis::Cq(method) => cq_basis_all(method, functions, tau)?,
            _ => (0..=functions).map(|j| spline_eval(b, j, tau)).collect::<convspline::Result<Vec<_>>>()?,
        };
        body.push_str(&num(tau));
        for v in row {
            write!(body, ",{}", num(v)).unwrap();
        }
        body.push('\n');
    }
    emit("basis-dump", &cfg, cfg.out.as_deref(), &body)
}

fn generated_mesh(shape: &str, level: usize) -> Result<SurfaceMesh> {
    match shape {
        "sphere" => Ok(SurfaceMesh::unit_sphere(level)?),
        "square" => Ok(SurfaceMesh::unit_square(level)?),
        other => Err(CliError::Config(format!("unknown shape `{other}` (sphere | square)"))),
    }
}

pub fn mesh_gen(mut cfg: MeshGenArgs) -> Result<()> {
    cfg = cfg.resolve("mesh-gen")?;
    let mesh = generated_mesh(&required(&cfg.shape, "shape")?, required(&cfg.level, "level")?)?;
    emit("mesh-gen", &cfg, cfg.out.as_deref(), &mesh.to_off())
}

pub fn tdbie_run(mut cfg: TdbieRunArgs) -> Result<()> {
    cfg = cfg.resolve("tdbie-run")?;
    cfg.fill_mesh_defaults();
    let mesh = match (&cfg.mesh, &cfg.shape) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either mesh or shape, not both".into())),
        (Some(path), None) => SurfaceMesh::read_off(path).map_err(|e| match e {
            TdbieError::Io(io) => CliError::Config(format!("cannot read mesh {}: {io}", path.display())),
            other => other.into(),
        })?,
        (None, Some(shape)) => generated_mesh(shape, required(&cfg.level, "level")?)?,
        (None, None) => unreachable!("mesh defaults filled"),
    };
    let dt = match (cfg.dt, cfg.ratio) {
        (Some(_), Some(_)) => return Err(CliError::Config("give either dt or ratio, not both".into())),
        (Some(dt), None) => dt,
        (None, Some(r)) if r > 0.0 && r.is_finite() => r * mesh.mean_element_size(),
        (None, r) => return Err(CliError::Config(format!("ratio must be positive, got {r:?}"))),
    };
    let source = required(&cfg.source, "source")?;
    if source.len() != 3 {
        return Err(CliError::Config(format!("source needs 3 coordinates, got {}", source.len())));
    }
    let spec = RunSpec {
        dt,
        t_end: required(&cfg.horizon, "T")?,
        basis: basis(&cfg.basis)?,
        field: IncidentField::new(required(&cfg.t0, "t0")?, Point::new(source[0], source[1], source[2])),
        assembly: AssemblyOptions {
            filter: !required(&cfg.unfiltered, "unfiltered")?,
            duffy_points: required(&cfg.duffy_points, "duffy-points")?,
            ..Default::default()
        },
    };
    let (matrices, sol) = run(&mesh, &spec)?;
    let mut body = String::from("n,t,linf_mid,l1\n");
    for row in solution_norms(&sol) {
        writeln!(body, "{},{},{},{}", row.n, num(row.t), num(row.linf_mid), num(row.l1)).unwrap();
    }
    if let Some(path) = &cfg.dump {
        sol.write_binary(path)?;
    }
    eprintln!(
        "{} elements, dt {}, {} steps, {} matrices, {} nonzeros",
        mesh.len(),
        num(dt),
        sol.grid.n_steps(),
        matrices.len(),
        matrices.nnz()
    );
    emit("tdbie-run", &cfg, cfg.out.as_deref(), &body)
}
