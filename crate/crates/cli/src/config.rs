//! Command-line and JSON configuration. Every command has one argument struct
//! that doubles as its config-file schema; flags override file values.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "convspline", version, about = "Convolution-spline time stepping for Volterra and retarded boundary integral equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one Volterra problem and write the coefficients and reconstruction.
    VieSolve(VieSolveArgs),
    /// Error and observed order over a list of step counts.
    VieConverge(VieConvergeArgs),
    /// max |p_n| over a grid of ω Δt for an oscillatory kernel.
    StabScan(StabScanArgs),
    /// Root-condition verdict for a kernel with rational weight transform.
    StabRoots(StabRootsArgs),
    /// Convolution weights q_j.
    WeightsDump(WeightsDumpArgs),
    /// Basis functions φ_j(τ) on a uniform τ grid.
    BasisDump(BasisDumpArgs),
    /// Write a generated surface mesh in OFF format.
    MeshGen(MeshGenArgs),
    /// Scatter the incident pulse off a surface and write per-step norms.
    TdbieRun(TdbieRunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::VieSolve(_) => "vie-solve",
            Command::VieConverge(_) => "vie-converge",
            Command::StabScan(_) => "stab-scan",
            Command::StabRoots(_) => "stab-roots",
            Command::WeightsDump(_) => "weights-dump",
            Command::BasisDump(_) => "basis-dump",
            Command::MeshGen(_) => "mesh-gen",
            Command::TdbieRun(_) => "tdbie-run",
        }
    }
}

/// Merge flag values over config-file values and fill defaults.
pub trait Resolve: Sized + Serialize + for<'de> Deserialize<'de> {
    fn config_path(&self) -> Option<&Path>;
    fn overlay(&mut self, file: Self);
    fn fill_defaults(&mut self);

    fn resolve(mut self, command: &str) -> Result<Self, CliError> {
        if let Some(path) = self.config_path() {
            let file = load_config(path, command)?;
            self.overlay(file);
        }
        self.fill_defaults();
        Ok(self)
    }
}

fn load_config<T: for<'de> Deserialize<'de>>(path: &Path, command: &str) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| CliError::Config(format!("config {} must be a JSON object", path.display())))?;
    if let Some(cmd) = obj.remove("command") {
        if cmd.as_str() != Some(command) {
            return Err(CliError::Config(format!("config is for command {cmd}, not `{command}`")));
        }
    }
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("config {}: {e}", path.display())))
}

macro_rules! resolvable {
    ($ty:ty { $($field:ident),* $(,)? } $(exclusive { $(($a:ident, $b:ident)),* })? defaults { $($dfield:ident = $dval:expr),* $(,)? }) => {
        impl Resolve for $ty {
            fn config_path(&self) -> Option<&Path> {
                self.config.as_deref()
            }

            #[allow(unused_mut)]
            fn overlay(&mut self, mut file: Self) {
                // A flag from an exclusive pair displaces both file values.
                $($( if self.$a.is_some() || self.$b.is_some() { file.$a = None; file.$b = None; } )*)?
                $( if self.$field.is_none() { self.$field = file.$field; } )*
            }

            fn fill_defaults(&mut self) {
                $( if self.$dfield.is_none() { self.$dfield = Some($dval); } )*
            }
        }
    };
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VieSolveArgs {
    /// constant | zero | step:L=<v> | cos:omega=<v> | j0:omega=<v>
    #[arg(long)]
    pub kernel: Option<String>,
    /// bspline:m=<0..3> | modcubic | cq:<bdf1..bdf4|trapezoidal>
    #[arg(long)]
    pub basis: Option<String>,
    /// Final time.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    /// Number of steps (exclusive with --dt).
    #[arg(long = "N", conflicts_with = "dt")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    /// Step size; T must be a multiple of it.
    #[arg(long)]
    pub dt: Option<f64>,
    /// smooth (manufactured u = t⁶e^{-t}) | pulse (a = t⁶ exp(-50 (t - 1/2)²))
    #[arg(long)]
    pub problem: Option<String>,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with any of the above; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

resolvable!(VieSolveArgs { kernel, basis, horizon, n, dt, problem, out } exclusive { (n, dt) }
    defaults { kernel = "constant".into(), basis = "modcubic".into(), horizon = 10.0, problem = "smooth".into() });

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct VieConvergeArgs {
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    /// Comma-separated step counts, increasing.
    #[arg(long = "N-list", value_delimiter = ',')]
    #[serde(rename = "N-list")]
    pub n_list: Option<Vec<usize>>,
    /// smooth (exact reference) | pulse (4× finer reference run)
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

resolvable!(VieConvergeArgs { kernel, basis, horizon, n_list, problem, out }
    defaults {
        kernel = "constant".into(),
        basis = "modcubic".into(),
        horizon = 10.0,
        n_list = vec![40, 80, 160, 320, 640],
        problem = "smooth".into(),
    });

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct StabScanArgs {
    /// cos | j0
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub basis: Option<String>,
    /// Smallest ω Δt.
    #[arg(long)]
    pub from: Option<f64>,
    /// Largest ω Δt (at most 20π).
    #[arg(long)]
    pub to: Option<f64>,
    /// Number of equally spaced ω Δt values, end points included.
    #[arg(long)]
    pub points: Option<usize>,
    /// Largest n in max |p_n|.
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

resolvable!(StabScanArgs { kernel, basis, from, to, points, n_max, out }
    defaults {
        kernel = "j0".into(),
        basis = "modcubic".into(),
        from = 0.0,
        to = std::f64::consts::PI,
        points = 65,
        n_max = convspline::stability::SCAN_STEPS,
    });

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct StabRootsArgs {
    /// constant | step:L=<v>
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// Margin constant c in ρ = 1 / (1 + c Δt).
    #[arg(long)]
    pub c: Option<f64>,
    /// Output JSON; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

resolvable!(StabRootsArgs { kernel, basis, dt, c, out }
    defaults { kernel = "constant".into(), basis = "modcubic".into(), dt = 0.1, c = 10.0 });

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct WeightsDumpArgs {
    #[arg(long)]
    pub kernel: Option<String>,
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    #[arg(long = "N", conflicts_with = "dt")]
    #[serde(rename = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

resolvable!(WeightsDumpArgs { kernel, basis, horizon, n, dt, out } exclusive { (n, dt) }
    defaults { kernel = "constant".into(), basis = "modcubic".into(), horizon = 10.0 });

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct BasisDumpArgs {
    #[arg(long)]
    pub basis: Option<String>,
    /// Highest index J in φ_0..φ_J.
    #[arg(long)]
    pub functions: Option<usize>,
    /// τ grid end.
    #[arg(long)]
    pub tau_max: Option<f64>,
    /// Number of τ samples, end points included.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

resolvable!(BasisDumpArgs { basis, functions, tau_max, points, out }
    defaults { basis = "modcubic".into(), functions = 6, tau_max = 8.0, points = 801 });

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct MeshGenArgs {
    /// sphere | square
    #[arg(long)]
    pub shape: Option<String>,
    /// Sphere: icosahedron subdivision level. Square: subdivisions per side.
    #[arg(long)]
    pub level: Option<usize>,
    /// Output OFF file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

resolvable!(MeshGenArgs { shape, level, out } defaults { shape = "sphere".into(), level = 1 });

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct TdbieRunArgs {
    /// OFF mesh file (exclusive with --shape).
    #[arg(long, conflicts_with = "shape")]
    pub mesh: Option<PathBuf>,
    /// Generated mesh: sphere | square.
    #[arg(long)]
    pub shape: Option<String>,
    /// Generator level, as in mesh-gen.
    #[arg(long)]
    pub level: Option<usize>,
    #[arg(long)]
    pub basis: Option<String>,
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub horizon: Option<f64>,
    /// Step size (exclusive with --ratio).
    #[arg(long, conflicts_with = "ratio")]
    pub dt: Option<f64>,
    /// Δt / Δx with Δx the mean longest triangle edge.
    #[arg(long)]
    pub ratio: Option<f64>,
    /// Pulse delay t0.
    #[arg(long)]
    pub t0: Option<f64>,
    /// Source point x,y,z.
    #[arg(long, value_delimiter = ',')]
    pub source: Option<Vec<f64>>,
    /// Gauss–Legendre points per direction for coincident pairs.
    #[arg(long)]
    pub duffy_points: Option<usize>,
    /// Assemble every pair, skipping nothing.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub unfiltered: Option<bool>,
    /// Binary dump of all densities.
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Norms CSV `n,t,linf_mid,l1`; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

resolvable!(TdbieRunArgs { mesh, shape, level, basis, horizon, dt, ratio, t0, source, duffy_points, unfiltered, dump, out }
    exclusive { (dt, ratio), (mesh, shape) }
    defaults {
        basis = "modcubic".into(),
        horizon = 10.0,
        t0 = 0.0,
        source = vec![0.0, 0.0, 0.0],
        duffy_points = convspline_tdbie::AssemblyOptions::default().duffy_points,
        unfiltered = false,
    });

impl TdbieRunArgs {
    /// A generated mesh is the default only when no file is named.
    pub fn fill_mesh_defaults(&mut self) {
        if self.mesh.is_none() {
            self.shape.get_or_insert_with(|| "sphere".into());
            self.level.get_or_insert(1);
        }
        if self.dt.is_none() {
            self.ratio.get_or_insert(convspline_tdbie::DEFAULT_MESH_RATIO);
        }
    }
}
