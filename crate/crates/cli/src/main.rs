//! `sesqui`: analyze Legendre curves in `ℝ^{2n+1}(−3)`, verify the example
//! fixture, sweep the case formulas and run the discrete energy descent.
//!
//! Exit codes: 0 success, 1 failed assertion, 2 invalid input.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use sesqui_core::report::{
    cmd_analyze, cmd_flow, cmd_scan, cmd_verify_example, scan_csv, to_stable_json, AnalyzeConfig, FlowConfig,
    ScanConfig, SweepRange,
};
use sesqui_core::{Case, CurveSpec, DeltaPair, Grid, SignConvention};

#[derive(Parser)]
#[command(name = "sesqui", version, about = "Frenet analysis and sesqui-harmonic checks for Legendre curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analyze a curve file and emit a JSON report.
    Analyze(AnalyzeArgs),
    /// Run the built-in example curve through the pipeline.
    VerifyExample(VerifyArgs),
    /// Sweep the case formulas over c, k1, k2 (and alpha0) and emit CSV.
    Scan(ScanArgs),
    /// Run projected gradient descent on the discrete energy and emit CSV.
    Flow(FlowArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum SignArg {
    Corrected,
    Printed,
}

impl From<SignArg> for SignConvention {
    fn from(s: SignArg) -> Self {
        match s {
            SignArg::Corrected => SignConvention::Corrected,
            SignArg::Printed => SignConvention::AsPrinted,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    /// Number of samples.
    #[arg(long)]
    grid: Option<usize>,
    /// Parameter interval start.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    t0: f64,
    /// Parameter interval end.
    #[arg(long, default_value_t = 2.0 * PI, allow_negative_numbers = true)]
    t1: f64,
    /// Use an open grid that includes both ends instead of a periodic one.
    #[arg(long)]
    open: bool,
}

impl GridArgs {
    fn grid(&self, default_count: usize) -> Grid {
        let count = self.grid.unwrap_or(default_count);
        if self.open {
            Grid::open(self.t0, self.t1, count)
        } else {
            Grid::closed(self.t0, self.t1, count)
        }
    }
}

#[derive(Args)]
struct DeltaArgs {
    #[arg(long, default_value_t = -8.0, allow_negative_numbers = true)]
    delta1: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    delta2: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Curve file: header `n=<int>` followed by 2n+1 coordinate expressions.
    #[arg(long)]
    curve: PathBuf,
    /// Constant φ-sectional curvature.
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    c: f64,
    #[command(flatten)]
    delta: DeltaArgs,
    #[command(flatten)]
    grid: GridArgs,
    /// Tolerance for constancy tests, equation verdicts and input checks.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Threshold below which a curvature counts as zero.
    #[arg(long, default_value_t = 1e-7)]
    order_tol: f64,
    /// Sign of the (c+3)/4 term in the closed form.
    #[arg(long, value_enum, default_value_t = SignArg::Corrected)]
    sign: SignArg,
    /// Accept non-unit-speed curves and analyze them by arc length.
    #[arg(long)]
    any_speed: bool,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[command(flatten)]
    delta: DeltaArgs,
    #[arg(long, default_value_t = 512)]
    grid: usize,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = SignArg::Corrected)]
    sign: SignArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CaseArg {
    I,
    Ii,
    Iii,
    Iv,
    All,
}

#[derive(Args)]
struct ScanArgs {
    /// Cases to sweep; repeat or separate with commas.
    #[arg(long = "case", value_enum, value_delimiter = ',', default_value = "all", ignore_case = true)]
    cases: Vec<CaseArg>,
    /// `<value>` or `<start>:<end>:<count>`.
    #[arg(long, default_value = "-3", allow_hyphen_values = true)]
    c: String,
    #[arg(long, default_value = "2", allow_hyphen_values = true)]
    k1: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    k2: String,
    /// Case IV angle α₀.
    #[arg(long, default_value = "0.7853981633974483", allow_hyphen_values = true)]
    alpha0: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FlowArgs {
    #[arg(long)]
    curve: PathBuf,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    c: f64,
    #[command(flatten)]
    delta: DeltaArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Initial step length; backtracking halves it as needed.
    #[arg(long, default_value_t = 1e-3, allow_negative_numbers = true)]
    rate: f64,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    /// Bad input or configuration.
    Input(String),
    /// The command ran but a check failed.
    Assertion(String),
}

impl From<sesqui_core::Error> for Failure {
    fn from(e: sesqui_core::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

fn read_curve(path: &Path) -> Result<CurveSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    CurveSpec::parse_file(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, body).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn cases(args: &[CaseArg]) -> Vec<Case> {
    let mut out = Vec::new();
    for a in args {
        let add: &[Case] = match a {
            CaseArg::I => &[Case::I],
            CaseArg::Ii => &[Case::II],
            CaseArg::Iii => &[Case::III],
            CaseArg::Iv => &[Case::IV],
            CaseArg::All => &[Case::I, Case::II, Case::III, Case::IV],
        };
        for c in add {
            if !out.contains(c) {
                out.push(*c);
            }
        }
    }
    out
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Analyze(a) => {
            let spec = read_curve(&a.curve)?;
            let config = AnalyzeConfig {
                c: a.c,
                delta: DeltaPair::new(a.delta.delta1, a.delta.delta2),
                grid: a.grid.grid(512),
                tol: a.tol,
                order_tol: a.order_tol,
                sign: a.sign.into(),
                any_speed: a.any_speed,
            };
            let report = cmd_analyze(&spec, &config)?;
            emit(a.out.as_deref(), &to_stable_json(&report)?)
        }
        Command::VerifyExample(a) => {
            let config = AnalyzeConfig {
                delta: DeltaPair::new(a.delta.delta1, a.delta.delta2),
                grid: Grid::closed(0.0, 2.0 * PI, a.grid),
                tol: a.tol,
                sign: a.sign.into(),
                ..AnalyzeConfig::default()
            };
            let report = cmd_verify_example(&config)?;
            emit(a.out.as_deref(), &to_stable_json(&report)?)?;
            for note in &report.notes {
                eprintln!("note: {note}");
            }
            if report.pass {
                eprintln!("verify-example: PASS");
                Ok(())
            } else {
                Err(Failure::Assertion(format!("verify-example: FAIL ({})", report.failed.join("; "))))
            }
        }
        Command::Scan(a) => {
            let config = ScanConfig {
                cases: cases(&a.cases),
                c: SweepRange::parse(&a.c)?,
                k1: SweepRange::parse(&a.k1)?,
                k2: SweepRange::parse(&a.k2)?,
                alpha0: SweepRange::parse(&a.alpha0)?,
            };
            emit(a.out.as_deref(), &scan_csv(&cmd_scan(&config)?))
        }
        Command::Flow(a) => {
            let spec = read_curve(&a.curve)?;
            let config = FlowConfig {
                c: a.c,
                delta: DeltaPair::new(a.delta.delta1, a.delta.delta2),
                grid: a.grid.grid(128),
                steps: a.steps,
                rate: a.rate,
                tol: a.tol,
            };
            let trajectory = cmd_flow(&spec, &config)?;
            if let Some(reason) = &trajectory.stopped {
                eprintln!("flow stopped early: {reason}");
            }
            emit(a.out.as_deref(), &trajectory.to_csv())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Assertion(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
