//! `rieszcare`: CARE solving, quadrature studies, encoded solutions and RPA
//! correlation-energy estimates from the command line.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use rieszcare::{Error, ErrorClass};
use serde_json::json;

mod commands;
mod io;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    CareSolve,
    QuadratureStudy,
    RieszEncode,
    RpaEnergy,
    Estimate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::CareSolve => "care-solve",
            Command::QuadratureStudy => "quadrature-study",
            Command::RieszEncode => "riesz-encode",
            Command::RpaEnergy => "rpa-energy",
            Command::Estimate => "estimate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// Input files are CARE JSON (`p`, `q`, `r`), RPA-matrix JSON (`a`, `b`)
/// or integral text files. Matrix entries are numbers, `[re, im]` pairs or
/// `{"re", "im"}` objects.
#[derive(Debug, Clone, Parser)]
#[command(name = "rieszcare", version, about, allow_negative_numbers = true)]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub command: Command,
    #[arg(long)]
    pub input: PathBuf,
    /// Defaults to standard output.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Excitation rank for integral inputs.
    #[arg(long = "m", default_value_t = 1)]
    pub rank: usize,
    /// Quadrature node count, overriding the a-priori choice.
    #[arg(long = "M")]
    pub nodes: Option<usize>,
    /// Target error of the encoded solution. `estimate` derives it from
    /// `--eps-c` when absent.
    #[arg(long = "eps-x")]
    pub eps_x: Option<f64>,
    #[arg(long = "eps-c", default_value_t = 0.01)]
    pub eps_c: f64,
    #[arg(long = "eps-trap")]
    pub eps_trap: Option<f64>,
    #[arg(long = "eps-pol-pi")]
    pub eps_pol_pi: Option<f64>,
    #[arg(long = "eps-pol-plus")]
    pub eps_pol_plus: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Failure probability of the estimate.
    #[arg(long, default_value_t = 0.05)]
    pub pf: f64,
    /// Volume proxy `V` in `E_c/V`.
    #[arg(long, default_value_t = 1.0)]
    pub volume: f64,
    /// Add the sampled estimate to `rpa-energy`.
    #[arg(long)]
    pub with_estimate: bool,
    /// Also write the CARE derived from an RPA input to this path.
    #[arg(long = "export-care")]
    pub export_care: Option<PathBuf>,
}

impl RunConfig {
    fn validate(&self) -> Result<(), CliError> {
        let positive = [
            ("eps-x", self.eps_x),
            ("eps-c", Some(self.eps_c)),
            ("eps-trap", self.eps_trap),
            ("eps-pol-pi", self.eps_pol_pi),
            ("eps-pol-plus", self.eps_pol_plus),
            ("volume", Some(self.volume)),
        ];
        for (name, v) in positive {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return Err(CliError::io("config", format!("--{name} must be positive, got {x}")));
                }
            }
        }
        if !(self.pf > 0.0 && self.pf < 1.0) {
            return Err(CliError::io("config", format!("--pf must lie in (0, 1), got {}", self.pf)));
        }
        if self.rank == 0 {
            return Err(CliError::io("config", "--m must be at least 1".into()));
        }
        if self.nodes == Some(0) {
            return Err(CliError::io("config", "--M must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug)]
pub struct CliError {
    pub stage: String,
    pub reason: String,
    pub code: u8,
}

impl CliError {
    pub fn io(stage: &str, reason: String) -> Self {
        CliError { stage: stage.into(), reason, code: 1 }
    }

    pub fn lib(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Input => 1,
            ErrorClass::Spectral => 2,
            ErrorClass::Rank => 3,
            ErrorClass::Estimation => 4,
        };
        CliError { stage: e.stage().unwrap_or("library").into(), reason: e.root().to_string(), code }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::lib(e)
    }
}

fn main() -> ExitCode {
    let cfg = match RunConfig::try_parse() {
        Ok(cfg) => cfg,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            let reason = e.kind().to_string();
            eprintln!("{}", io::to_json_line(&json!({ "stage": "arguments", "reason": reason, "exit_code": 1 })));
            return ExitCode::from(1);
        }
    };
    let start = Instant::now();
    let result = cfg.validate().and_then(|_| commands::run(&cfg)).and_then(|text| io::emit(&text, cfg.output.as_deref()));
    match result {
        Ok(()) => {
            eprintln!("{}: {:.3} s", cfg.command.name(), start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", io::to_json_line(&json!({ "stage": e.stage, "reason": e.reason, "exit_code": e.code })));
            ExitCode::from(e.code)
        }
    }
}
