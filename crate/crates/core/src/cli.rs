//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 for a verified negative result,
//! 2 for execution errors. `--expect-fail` swaps 0 and 1.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::calculus::{gradcheck, hessian_symmetry_check, TangentSymmetryReport};
use crate::config::{model_preset, parse_gradient, ConfigError, ModelConfig, RunConfig, StateSource};
use crate::gfunc::{certify_positivity, GFunction};
use crate::invariants::{primitive_invariants, scaled_invariants, v1_extremal_scan};
use crate::les::{run, write_field_dump, RunStatus};
use crate::sampling::unit_states;
use crate::symmetry::{check_symmetries, GroupKind};
use crate::zoo::breakage_report;

#[derive(Debug, Parser)]
#[command(name = "sgs", version, about = "Invariant subgrid-scale closure toolkit")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory; without it results go to standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Overrides the tolerance of the selected check.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Treat a negative result as the expected outcome.
    #[arg(long, global = true)]
    pub expect_fail: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Primitive and scaled invariants of a batch of states (CSV).
    Invariants(InvariantsArgs),
    /// Equivariance of a closure under the symmetry groups (JSON).
    CheckSymmetries(ModelArgs),
    /// Positivity certificate for a polynomial g (JSON).
    Certify(CertifyArgs),
    /// Closed-form invariant gradients against finite differences (JSON).
    Gradcheck(GradcheckArgs),
    /// Periodic-box simulation with energy budget (CSV).
    Simulate(SimulateArgs),
    /// Per-group symmetry breakage over an ε grid (JSON).
    Breakage(ModelArgs),
}

#[derive(Debug, Args)]
pub struct InvariantsArgs {
    /// Random unit-norm ensemble of this size.
    #[arg(long, conflicts_with_all = ["preset", "grad", "states"])]
    pub random: Option<usize>,
    /// Use Ω = 0 for the random ensemble.
    #[arg(long)]
    pub no_rotation: bool,
    /// Named state.
    #[arg(long)]
    pub preset: Option<String>,
    /// Inline gradient, nine comma-separated entries row-major; repeatable.
    #[arg(long, allow_hyphen_values = true)]
    pub grad: Vec<String>,
    /// CSV file of gradients.
    #[arg(long)]
    pub states: Option<PathBuf>,
    /// Also run a brute-force v1 extremal scan with this many samples.
    #[arg(long)]
    pub v1_scan: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Named closure instead of the configured one.
    #[arg(long)]
    pub preset: Option<String>,
    /// Comma-separated groups (time_shift, galilean, rotation, pressure_shift, scaling).
    #[arg(long, value_delimiter = ',')]
    pub groups: Vec<String>,
    #[arg(long)]
    pub probes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct CertifyArgs {
    /// Named g: constant_g, potential or violating.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub nu: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long)]
    pub states: Option<usize>,
    /// Also test tangent symmetry of the configured model on this many states.
    #[arg(long)]
    pub hessian: Option<usize>,
    /// Named closure for the tangent-symmetry test.
    #[arg(long)]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Named closure instead of the configured one.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Write the final fields as a binary dump (requires --out).
    #[arg(long)]
    pub dump: bool,
}

/// Outcome of a command before `--expect-fail` is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Negative,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("{0}")]
    Failed(String),
}

fn fail<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Failed(e.to_string())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(outcome) => exit_code(outcome, cli.expect_fail),
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e}");
            2
        }
    }
}

pub fn exit_code(outcome: Outcome, expect_fail: bool) -> i32 {
    match (outcome, expect_fail) {
        (Outcome::Pass, false) | (Outcome::Negative, true) => 0,
        (Outcome::Pass, true) | (Outcome::Negative, false) => 1,
    }
}

fn outcome(ok: bool) -> Outcome {
    if ok {
        Outcome::Pass
    } else {
        Outcome::Negative
    }
}

/// Runs a parsed command, writing to `out` unless an output directory is set.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let mut config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(dir) = &cli.out {
        config.out = Some(dir.clone());
    }
    let mut sink = Sink { dir: config.out.clone(), stdout: out };
    match &cli.command {
        Command::Invariants(a) => cmd_invariants(&config, a, &mut sink),
        Command::CheckSymmetries(a) => cmd_check_symmetries(&config, a, cli.tolerance, &mut sink),
        Command::Certify(a) => cmd_certify(&config, a, &mut sink),
        Command::Gradcheck(a) => cmd_gradcheck(&config, a, cli.tolerance, &mut sink),
        Command::Simulate(a) => cmd_simulate(&config, a, cli.tolerance, &mut sink),
        Command::Breakage(a) => cmd_breakage(&config, a, cli.tolerance, &mut sink),
    }
}

/// Single writer for command output: a file in the output directory, or
/// standard output.
struct Sink<'a> {
    dir: Option<PathBuf>,
    stdout: &'a mut dyn Write,
}

impl Sink<'_> {
    fn emit(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        match &self.dir {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join(name), bytes)?;
            }
            None => self.stdout.write_all(bytes)?,
        }
        Ok(())
    }

    fn emit_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(fail)?;
        text.push('\n');
        self.emit(name, text.as_bytes())
    }

    fn path(&self, name: &str) -> Option<PathBuf> {
        self.dir.as_deref().map(|d: &Path| d.join(name))
    }
}

fn parse_groups(names: &[String], default: &[GroupKind]) -> Result<Vec<GroupKind>, CliError> {
    if names.is_empty() {
        return Ok(default.to_vec());
    }
    names
        .iter()
        .map(|n| GroupKind::parse(n).ok_or_else(|| CliError::Failed(format!("unknown group `{n}`"))))
        .collect()
}

fn selected_model(config: &RunConfig, preset: &Option<String>, nu: f64) -> Result<ModelConfig, CliError> {
    Ok(match preset {
        Some(p) => model_preset(p, nu)?,
        None => config.model.clone(),
    })
}

fn cmd_invariants(config: &RunConfig, a: &InvariantsArgs, sink: &mut Sink) -> Result<Outcome, CliError> {
    let source = if let Some(count) = a.random {
        StateSource::Random { count, rotation: !a.no_rotation }
    } else if let Some(name) = &a.preset {
        StateSource::Preset { name: name.clone() }
    } else if !a.grad.is_empty() {
        let gradients = a
            .grad
            .iter()
            .map(|g| {
                let values: Vec<f64> = g
                    .split(',')
                    .map(|v| v.trim().parse::<f64>().map_err(|e| CliError::Failed(format!("bad number in --grad: {e}"))))
                    .collect::<Result<_, _>>()?;
                Ok(*parse_gradient(&values)?.entries())
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        StateSource::Inline { gradients }
    } else if let Some(path) = &a.states {
        StateSource::File { path: path.clone() }
    } else {
        config.invariants.states.clone()
    };
    let states = source.states(config.seed)?;

    let mut csv = String::from("id,I1,I2,B1,B2,B3,B4,v1,v2,v3,v4,v5\n");
    for (id, (s, w)) in states.iter().enumerate() {
        let p = primitive_invariants(s, w);
        let v = scaled_invariants(&p, p.i1.max(0.0).sqrt());
        let mut row = format!("{id}");
        for x in p.as_array() {
            row.push_str(&format!(",{x:?}"));
        }
        match v {
            Ok(v) => {
                for x in v.as_array() {
                    row.push_str(&format!(",{x:?}"));
                }
            }
            // scaled invariants are undefined at S = 0
            Err(_) => row.push_str(",,,,,"),
        }
        row.push('\n');
        csv.push_str(&row);
    }
    sink.emit("invariants.csv", csv.as_bytes())?;

    let scan = a.v1_scan.unwrap_or(config.invariants.v1_scan);
    if scan > 0 {
        let report = v1_extremal_scan(scan, config.seed);
        sink.emit_json("v1_scan.json", &report)?;
        if !report.candidate_bounds.iter().any(|b| b.respected) {
            return Ok(Outcome::Negative);
        }
    }
    Ok(Outcome::Pass)
}

fn cmd_check_symmetries(
    config: &RunConfig,
    a: &ModelArgs,
    tolerance: Option<f64>,
    sink: &mut Sink,
) -> Result<Outcome, CliError> {
    let model = selected_model(config, &a.preset, config.simulate.nu)?.build().map_err(fail)?;
    let groups = parse_groups(&a.groups, &config.symmetries.groups)?;
    let probes = a.probes.unwrap_or(config.symmetries.probes);
    let tol = tolerance.unwrap_or(config.tolerances.symmetry);
    let report = check_symmetries(&model, &groups, config.symmetries.elements, probes, config.seed, tol);
    sink.emit_json("symmetries.json", &report)?;
    Ok(outcome(report.passed))
}

#[derive(Serialize)]
struct CertifyOutput<'a> {
    g: &'a crate::gfunc::PolynomialG,
    certificate: crate::gfunc::PositivityCertificate,
    certified: bool,
}

fn cmd_certify(config: &RunConfig, a: &CertifyArgs, sink: &mut Sink) -> Result<Outcome, CliError> {
    let nu = a.nu.unwrap_or(config.certify.nu);
    let g = match &a.preset {
        Some(p) => match model_preset(p, nu)? {
            ModelConfig::Potential { g } => g,
            _ => return Err(CliError::Failed(format!("preset `{p}` is not a g-based closure"))),
        },
        None => config.certify.g,
    };
    let samples = a.samples.unwrap_or(config.certify.samples);
    let cert = certify_positivity(&GFunction::Polynomial(g), nu, config.certify.v_star, samples, config.seed);
    let certified = cert.certified();
    sink.emit_json("certificate.json", &CertifyOutput { g: &g, certificate: cert, certified })?;
    Ok(outcome(certified))
}

#[derive(Serialize)]
struct GradcheckOutput {
    gradients: crate::calculus::GradCheckReport,
    tangent_symmetry: Option<TangentSummary>,
    passed: bool,
}

#[derive(Serialize)]
struct TangentSummary {
    model: String,
    states: usize,
    tolerance: f64,
    max_asymmetry: f64,
    passed: bool,
}

fn cmd_gradcheck(
    config: &RunConfig,
    a: &GradcheckArgs,
    tolerance: Option<f64>,
    sink: &mut Sink,
) -> Result<Outcome, CliError> {
    let n = a.states.unwrap_or(config.gradcheck.states);
    let tol = tolerance.unwrap_or(config.tolerances.gradcheck);
    let states = unit_states(n, config.seed);
    let report = gradcheck(&states, tol).map_err(fail)?;
    let hessian_states = a.hessian.unwrap_or(config.gradcheck.hessian_states);
    let tangent = if hessian_states > 0 {
        let model = selected_model(config, &a.preset, config.simulate.nu)?.build().map_err(fail)?;
        let htol = config.tolerances.hessian;
        let mut worst = 0.0_f64;
        for (s, w) in unit_states(hessian_states, config.seed.wrapping_add(1)) {
            let r: TangentSymmetryReport = hessian_symmetry_check(&model, &s, &w, htol).map_err(fail)?;
            worst = worst.max(r.asymmetry);
        }
        Some(TangentSummary {
            model: model.label(),
            states: hessian_states,
            tolerance: htol,
            max_asymmetry: worst,
            passed: worst <= htol,
        })
    } else {
        None
    };
    let passed = report.passed && tangent.as_ref().is_none_or(|t| t.passed);
    sink.emit_json("gradcheck.json", &GradcheckOutput { gradients: report, tangent_symmetry: tangent, passed })?;
    Ok(outcome(passed))
}

#[derive(Serialize)]
struct SimulateSummary {
    model: String,
    status: RunStatus,
    steps_taken: usize,
    initial_energy: f64,
    final_energy: f64,
    max_relative_growth: f64,
    growth_steps: Vec<usize>,
    min_phi_sgs: f64,
    max_divergence: f64,
    energy_bounded: bool,
}

fn cmd_simulate(
    config: &RunConfig,
    a: &SimulateArgs,
    tolerance: Option<f64>,
    sink: &mut Sink,
) -> Result<Outcome, CliError> {
    let mut params = config.simulate.clone();
    if let Some(n) = a.n {
        params.n = n;
    }
    if let Some(s) = a.steps {
        params.steps = s;
    }
    if let Some(t) = tolerance {
        params.energy_tolerance = t;
    }
    let model = selected_model(config, &a.preset, params.nu)?.build().map_err(fail)?;
    let out = run(&params, &model).map_err(fail)?;
    let mut csv = Vec::new();
    out.budget.write_csv(&mut csv)?;
    sink.emit("budget.csv", &csv)?;
    let summary = SimulateSummary {
        model: model.label(),
        status: out.status,
        steps_taken: out.steps_taken,
        initial_energy: out.budget.rows.first().map_or(0.0, |r| r.energy),
        final_energy: out.budget.rows.last().map_or(0.0, |r| r.energy),
        max_relative_growth: out.budget.max_relative_growth(),
        growth_steps: out.budget.growth_steps.clone(),
        min_phi_sgs: out.budget.min_phi_sgs(),
        max_divergence: out.max_divergence,
        energy_bounded: out.energy_bounded(),
    };
    if sink.dir.is_some() {
        sink.emit_json("summary.json", &summary)?;
    }
    if a.dump {
        let path = sink.path("fields.bin").ok_or_else(|| CliError::Failed("--dump requires --out".into()))?;
        let mut buf = Vec::new();
        write_field_dump(&mut buf, &out.state)?;
        fs::write(path, buf)?;
    }
    Ok(outcome(summary.energy_bounded))
}

fn cmd_breakage(config: &RunConfig, a: &ModelArgs, tolerance: Option<f64>, sink: &mut Sink) -> Result<Outcome, CliError> {
    let model = selected_model(config, &a.preset, config.simulate.nu)?.build().map_err(fail)?;
    let groups = parse_groups(&a.groups, &config.breakage.groups)?;
    let probes = a.probes.unwrap_or(config.breakage.probes);
    let tol = tolerance.unwrap_or(config.tolerances.symmetry);
    let report = breakage_report(&model, &groups, &config.breakage.eps_grid, probes, config.seed, tol);
    sink.emit_json("breakage.json", &report)?;
    Ok(outcome(report.broken.is_empty()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (Result<Outcome, CliError>, String) {
        let cli = Cli::try_parse_from(std::iter::once("sgs").chain(args.iter().copied())).unwrap();
        let mut buf = Vec::new();
        let r = execute(&cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(Outcome::Pass, false), 0);
        assert_eq!(exit_code(Outcome::Negative, false), 1);
        assert_eq!(exit_code(Outcome::Negative, true), 0);
        assert_eq!(exit_code(Outcome::Pass, true), 1);
    }

    #[test]
    fn plane_shear_invariants_row() {
        let (r, out) = run_args(&["invariants", "--preset", "plane_shear"]);
        assert_eq!(r.unwrap(), Outcome::Pass);
        let row: Vec<f64> = out.lines().nth(1).unwrap().split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        assert_eq!(row[0], 0.5);
        assert!(row[1].abs() < 1e-16);
        assert!((row[3] + 0.5).abs() < 1e-15);
        assert!(row[6].abs() < 1e-15);
    }

    #[test]
    fn no_rotation_zeroes_b_columns() {
        let (_, out) = run_args(&["invariants", "--random", "20", "--no-rotation", "--seed", "3"]);
        for line in out.lines().skip(1) {
            let v: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert!(v[3..7].iter().all(|b| *b == 0.0));
        }
    }

    #[test]
    fn singular_state_leaves_scaled_columns_empty() {
        let (r, out) = run_args(&["invariants", "--grad", "0,-1,0,1,0,0,0,0,0"]);
        assert_eq!(r.unwrap(), Outcome::Pass);
        assert!(out.lines().nth(1).unwrap().ends_with(",,,,,"));
    }

    #[test]
    fn certify_presets() {
        assert_eq!(run_args(&["certify", "--preset", "constant_g"]).0.unwrap(), Outcome::Pass);
        assert_eq!(run_args(&["certify", "--preset", "violating"]).0.unwrap(), Outcome::Negative);
    }

    #[test]
    fn symmetry_presets() {
        let (r, _) = run_args(&["check-symmetries", "--preset", "lund_novikov", "--probes", "20"]);
        assert_eq!(r.unwrap(), Outcome::Negative);
        let (r, _) = run_args(&["check-symmetries", "--preset", "smagorinsky", "--groups", "rotation", "--probes", "20"]);
        assert_eq!(r.unwrap(), Outcome::Pass);
        let (r, _) = run_args(&["check-symmetries", "--preset", "scaled", "--probes", "20"]);
        assert_eq!(r.unwrap(), Outcome::Pass);
    }

    #[test]
    fn bad_config_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        fs::write(&path, "bogus = 1\n").unwrap();
        let (r, _) = run_args(&["--config", path.to_str().unwrap(), "gradcheck"]);
        assert!(matches!(r, Err(CliError::Config(_))));
    }
}
