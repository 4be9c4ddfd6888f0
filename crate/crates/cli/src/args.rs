use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "dcs",
    version,
    about = "Discrete conformal structures: curvature, flows and prescribed-curvature solves"
)]
pub struct Cli {
    /// Disable the rayon thread pool for per-face work.
    #[arg(long, global = true)]
    pub sequential: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the mesh, the weights and (optionally) a state.
    Validate(ValidateArgs),
    /// Curvature report for a state, with optional spectra.
    Curvature(CurvatureArgs),
    /// Integrate a combinatorial curvature flow.
    Flow(FlowArgs),
    /// Solve for a prescribed α-curvature by Newton's method.
    Solve(SolveArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// OFF file, or a builtin: tetrahedron, torus7, genus2, torus-grid:RxC.
    #[arg(long)]
    pub mesh: String,

    /// Weights JSON file, or `tangential`, `vertex-scaling[:ETA]`, `uniform:EPS:ETA`.
    #[arg(long, default_value = "tangential")]
    pub weights: String,

    #[arg(long, default_value = "euclidean")]
    pub geometry: String,

    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub alpha: f64,

    /// CSV with a `u` or `f` column; the zero state (f ≡ 0) when omitted.
    #[arg(long)]
    pub state: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CurvatureArgs {
    #[command(flatten)]
    pub common: Common,

    /// Use extended angles on degenerate faces.
    #[arg(long)]
    pub extended: bool,

    /// Also report the spectrum of the curvature Jacobian and of a flow linearization.
    #[arg(long)]
    pub spectrum: bool,

    /// Flow whose linearization is reported with --spectrum.
    #[arg(long, default_value = "calabi")]
    pub kind: String,

    #[command(flatten)]
    pub target: TargetArgs,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TargetArgs {
    /// Constant target α-curvature at every vertex.
    #[arg(long, allow_negative_numbers = true, group = "target_source")]
    pub target_constant: Option<f64>,

    /// CSV with a `target` column.
    #[arg(long, group = "target_source")]
    pub target_file: Option<PathBuf>,

    /// State file whose (extended) α-curvature becomes the target.
    #[arg(long, group = "target_source")]
    pub target_from_state: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Rk4,
    Euler,
}

#[derive(Args, Debug)]
pub struct FlowArgs {
    #[command(flatten)]
    pub common: Common,

    /// ricci, normalized-ricci, modified-ricci, calabi, modified-calabi.
    #[arg(long, default_value = "normalized-ricci")]
    pub kind: String,

    /// Continue through degenerate faces (Ricci-family flows).
    #[arg(long)]
    pub extended: bool,

    #[command(flatten)]
    pub target: TargetArgs,

    #[arg(long, value_enum, default_value_t = MethodArg::Rk4)]
    pub method: MethodArg,

    #[arg(long, default_value_t = 1e-2)]
    pub h: f64,

    /// Local error tolerance; enables step-doubling refinement.
    #[arg(long)]
    pub adaptive: Option<f64>,

    #[arg(long, default_value_t = 100.0)]
    pub t_max: f64,

    #[arg(long, default_value_t = 1e-10)]
    pub residual_tol: f64,

    #[arg(long, default_value_t = 1)]
    pub record_every: usize,

    /// Add a uniform perturbation in [−r, r] (drawn from --seed) to the initial u.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GaugeArg {
    None,
    /// Fix Σu at its value in the initial state.
    SumU,
    /// Fix Σe^{αu} at its value in the initial state.
    SumExpAlphaU,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: Common,

    #[command(flatten)]
    pub target: TargetArgs,

    #[arg(long, value_enum, default_value_t = GaugeArg::None)]
    pub gauge: GaugeArg,

    #[arg(long, default_value_t = 1e-11)]
    pub tol: f64,

    #[arg(long, default_value_t = 200)]
    pub max_iterations: usize,

    /// Number of independent starts, solved in parallel.
    #[arg(long, default_value_t = 1)]
    pub starts: usize,

    /// Each start is the initial u plus a uniform draw in [−r, r] from --seed.
    #[arg(long, default_value_t = 0.0)]
    pub perturb: f64,
}
