//! Library behind the `fatigue` binary: argument model, configuration
//! merging and the subcommand drivers.

// Index loops mirror the tensor notation; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use config::{load_file, merge, parse_value, push_table, set_path, validate_tree, Command, Format};
pub use error::{CliError, Kind, Result};
use output::{InputFile, Report};

/// Probabilistic LCF lifing, shape sensitivity and service planning.
#[derive(Debug, Parser)]
#[command(name = "fatigue", version, about)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Material card (TOML), merged over the configuration.
    #[arg(long, global = true)]
    pub material: Option<PathBuf>,
    /// Economic parameters (TOML), merged over the configuration.
    #[arg(long, global = true)]
    pub economic: Option<PathBuf>,
    /// Override any key, e.g. `--set statistics.m_bar=2.5`. Applied last.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub set: Vec<String>,
    /// Output file (default: stdout).
    #[arg(short, long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed for random commands (default: `seed` key, else derived from the configuration hash).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Validate the configuration and stop.
    #[arg(long, global = true)]
    pub dry_run: bool,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Solve the elastic problem and report displacements.
    #[command(allow_negative_numbers = true)]
    Solve(FeArgs),
    /// Surface life field and component life.
    #[command(allow_negative_numbers = true)]
    Life(FeArgs),
    /// Probability of failure at given cycle counts.
    #[command(allow_negative_numbers = true)]
    Pof {
        #[command(flatten)]
        fe: FeArgs,
        /// Cycle counts, comma separated.
        #[arg(long, value_delimiter = ',')]
        times: Option<Vec<f64>>,
    },
    /// Grain-scale Schmid-factor life distribution at one stress state.
    #[command(allow_negative_numbers = true)]
    Schmid(SchmidArgs),
    /// Compare adjoint and finite-difference shape derivatives.
    #[command(allow_negative_numbers = true)]
    Gradcheck {
        #[command(flatten)]
        fe: FeArgs,
        /// Finite-difference step.
        #[arg(long)]
        step: Option<f64>,
        /// Shape exponent of the life functional.
        #[arg(long)]
        m: Option<f64>,
        /// Cycle count of the life functional.
        #[arg(long)]
        t: Option<f64>,
    },
    /// Optimal service interval.
    #[command(allow_negative_numbers = true)]
    Service(ServiceArgs),
    /// Optimal service interval across incomes.
    #[command(allow_negative_numbers = true)]
    Sweep {
        #[command(flatten)]
        service: ServiceArgs,
        /// Incomes per unit time, comma separated.
        #[arg(long, value_delimiter = ',')]
        incomes: Option<Vec<f64>>,
    },
}

#[derive(Debug, Args, Default)]
pub struct FeArgs {
    /// Mesh file in the `FATIGUE-MESH 1` format
    #[arg(long)]
    pub mesh: Option<PathBuf>,
    /// Uniform refinement passes (tet4 and hex8 meshes).
    #[arg(long)]
    pub refine: Option<usize>,
    /// Surface traction, `TAG:GX,GY,GZ`. Repeatable.
    #[arg(long, value_name = "TAG:GX,GY,GZ")]
    pub traction: Vec<String>,
    /// Extra Dirichlet condition, `TAG:xyz` naming the fixed components. Repeatable.
    #[arg(long, value_name = "TAG:COMPONENTS")]
    pub bc: Vec<String>,
    /// Centrifugal load speed; density, origin and axis come from the configuration.
    #[arg(long)]
    pub rpm: Option<f64>,
    /// Linear solver: direct or cg.
    #[arg(long)]
    pub solver: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct SchmidArgs {
    /// Stress tensor `xx,yy,zz,yz,xz,xy`.
    #[arg(long, value_delimiter = ',')]
    pub stress: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub mu_g: Option<f64>,
    #[arg(long)]
    pub eps_a: Option<f64>,
    /// Report the multiaxiality of the stress state only.
    #[arg(long)]
    pub kappa_report: bool,
}

#[derive(Debug, Args, Default)]
pub struct ServiceArgs {
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub m: Option<f64>,
    #[arg(long)]
    pub income: Option<f64>,
    /// Cost of one service.
    #[arg(long)]
    pub cm: Option<f64>,
    /// Cost of one in-service failure.
    #[arg(long)]
    pub cr: Option<f64>,
    /// Continuous discount rate.
    #[arg(long)]
    pub ieff: Option<f64>,
    /// Outage length of a service.
    #[arg(long)]
    pub w: Option<f64>,
    /// Search bracket `LO,HI`.
    #[arg(long, value_delimiter = ',')]
    pub bracket: Option<Vec<f64>>,
    #[arg(long)]
    pub tol: Option<f64>,
}

impl Sub {
    pub fn command(&self) -> Command {
        match self {
            Sub::Solve(_) => Command::Solve,
            Sub::Life(_) => Command::Life,
            Sub::Pof { .. } => Command::Pof,
            Sub::Schmid(_) => Command::Schmid,
            Sub::Gradcheck { .. } => Command::Gradcheck,
            Sub::Service(_) => Command::Service,
            Sub::Sweep { .. } => Command::Sweep,
        }
    }
}

fn float(x: f64) -> Value {
    Value::Float(x)
}

fn floats(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| Value::Float(x)).collect())
}

fn set_opt(tree: &mut Table, key: &str, v: Option<Value>) -> Result<()> {
    match v {
        Some(v) => set_path(tree, key, v),
        None => Ok(()),
    }
}

fn parse_traction(raw: &str) -> Result<(String, [f64; 3])> {
    let bad = || CliError::config(format!("--traction `{raw}`: expected TAG:GX,GY,GZ"));
    let (tag, rest) = raw.rsplit_once(':').ok_or_else(bad)?;
    let g: Vec<f64> =
        rest.split(',').map(|s| s.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let g: [f64; 3] = g.try_into().map_err(|_| bad())?;
    if tag.is_empty() {
        return Err(bad());
    }
    Ok((tag.to_string(), g))
}

fn parse_bc(raw: &str) -> Result<(String, [bool; 3])> {
    let bad = || CliError::config(format!("--bc `{raw}`: expected TAG:COMPONENTS, e.g. xmin:x or base:xyz"));
    let (tag, comps) = raw.rsplit_once(':').ok_or_else(bad)?;
    if tag.is_empty() || comps.is_empty() {
        return Err(bad());
    }
    let mut mask = [false; 3];
    for c in comps.chars() {
        match c {
            'x' => mask[0] = true,
            'y' => mask[1] = true,
            'z' => mask[2] = true,
            _ => return Err(bad()),
        }
    }
    Ok((tag.to_string(), mask))
}

fn apply_fe(tree: &mut Table, fe: &FeArgs) -> Result<()> {
    set_opt(tree, "mesh.path", fe.mesh.as_ref().map(|p| Value::String(p.display().to_string())))?;
    set_opt(tree, "mesh.refine", fe.refine.map(|n| Value::Integer(n as i64)))?;
    for raw in &fe.traction {
        let (tag, g) = parse_traction(raw)?;
        let mut t = Table::new();
        t.insert("tag".into(), Value::String(tag));
        t.insert("g".into(), floats(&g));
        push_table(tree, "load.traction", t)?;
    }
    for raw in &fe.bc {
        let (tag, mask) = parse_bc(raw)?;
        let mut t = Table::new();
        t.insert("tag".into(), Value::String(tag));
        t.insert("mask".into(), Value::Array(mask.iter().map(|&b| Value::Boolean(b)).collect()));
        push_table(tree, "mesh.dirichlet", t)?;
    }
    set_opt(tree, "load.centrifugal.rpm", fe.rpm.map(float))?;
    set_opt(tree, "solver.method", fe.solver.clone().map(Value::String))?;
    Ok(())
}

fn apply_service(tree: &mut Table, s: &ServiceArgs) -> Result<()> {
    for (key, v) in [
        ("eta", s.eta),
        ("m", s.m),
        ("income", s.income),
        ("cm", s.cm),
        ("cr", s.cr),
        ("ieff", s.ieff),
        ("w", s.w),
        ("tol", s.tol),
    ] {
        set_opt(tree, &format!("service.{key}"), v.map(float))?;
    }
    set_opt(tree, "service.bracket", s.bracket.as_deref().map(floats))
}

/// Wraps a card in `section` unless it already has that table.
fn as_section(mut t: Table, section: &str) -> Table {
    if t.len() == 1 && t.get(section).is_some_and(Value::is_table) {
        return t;
    }
    if let Some(Value::Table(inner)) = t.remove(section) {
        merge(&mut t, inner);
    }
    let mut out = Table::new();
    out.insert(section.into(), Value::Table(t));
    out
}

/// Merged configuration tree and the files it was read from.
pub fn build_tree(cli: &Cli) -> Result<(Table, Vec<InputFile>)> {
    let g = &cli.global;
    let mut tree = Table::new();
    let mut inputs = Vec::new();
    let mut read = |role: &str, path: &Path, section: Option<&str>, tree: &mut Table| -> Result<()> {
        let t = load_file(path)?;
        inputs.push(commands::file_input(role, path)?);
        merge(
            tree,
            match section {
                Some(s) => as_section(t, s),
                None => t,
            },
        );
        Ok(())
    };
    if let Some(p) = &g.config {
        read("config", p, None, &mut tree)?;
    }
    if let Some(p) = &g.material {
        read("material", p, Some("material"), &mut tree)?;
    }
    if let Some(p) = &g.economic {
        read("economic", p, Some("service"), &mut tree)?;
    }
    match &cli.command {
        Sub::Solve(fe) | Sub::Life(fe) => apply_fe(&mut tree, fe)?,
        Sub::Pof { fe, times } => {
            apply_fe(&mut tree, fe)?;
            set_opt(&mut tree, "pof.times", times.as_deref().map(floats))?;
        }
        Sub::Schmid(s) => {
            set_opt(&mut tree, "schmid.stress", s.stress.as_deref().map(floats))?;
            set_opt(&mut tree, "schmid.samples", s.samples.map(|n| Value::Integer(n as i64)))?;
            set_opt(&mut tree, "schmid.mu_g", s.mu_g.map(float))?;
            set_opt(&mut tree, "schmid.eps_a", s.eps_a.map(float))?;
        }
        Sub::Gradcheck { fe, step, m, t } => {
            apply_fe(&mut tree, fe)?;
            set_opt(&mut tree, "gradcheck.step", step.map(float))?;
            set_opt(&mut tree, "gradcheck.m", m.map(float))?;
            set_opt(&mut tree, "gradcheck.t", t.map(float))?;
        }
        Sub::Service(s) => apply_service(&mut tree, s)?,
        Sub::Sweep { service, incomes } => {
            apply_service(&mut tree, service)?;
            set_opt(&mut tree, "service.incomes", incomes.as_deref().map(floats))?;
        }
    }
    for raw in &g.set {
        let (key, value) =
            raw.split_once('=').ok_or_else(|| CliError::config(format!("--set `{raw}`: expected KEY=VALUE")))?;
        set_path(&mut tree, key.trim(), parse_value(value.trim()))?;
    }
    Ok((tree, inputs))
}

fn kappa_only(cli: &Cli) -> bool {
    matches!(&cli.command, Sub::Schmid(s) if s.kappa_report)
}

/// What a run produced.
#[derive(Debug)]
pub enum Outcome {
    Report(Report),
    /// `--dry-run` on a valid configuration.
    Valid {
        command: Command,
        config_sha256: String,
    },
}

impl Outcome {
    pub fn render(&self, format: Format) -> Result<String> {
        match self {
            Outcome::Report(r) => match format {
                Format::Json => Ok(r.to_json()),
                Format::Csv => r.to_csv(),
            },
            Outcome::Valid { command, config_sha256 } => {
                let v = serde_json::json!({"valid": true, "command": command, "config_sha256": config_sha256, "issues": []});
                Ok(serde_json::to_string_pretty(&v).expect("serializes") + "\n")
            }
        }
    }
}

/// Parses, validates and runs. Does not touch the global thread pool.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let (tree, inputs) = build_tree(cli)?;
    let cfg = validate_tree(cli.command.command(), tree, cli.global.seed, kappa_only(cli))?;
    if cli.global.dry_run {
        return Ok(Outcome::Valid { command: cfg.command, config_sha256: cfg.config_hash() });
    }
    let mut report = commands::execute(&cfg)?;
    let mut all = inputs;
    all.append(&mut report.provenance.inputs);
    report.provenance.inputs = all;
    Ok(Outcome::Report(report))
}

/// Dry-run rendering of a failed validation: `{"valid": false, "issues": [...]}`.
pub fn invalid_json(e: &CliError) -> String {
    let v = serde_json::json!({"valid": false, "error": e, "issues": e.issues});
    serde_json::to_string_pretty(&v).expect("serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn traction_and_bc_flags_parse() {
        assert_eq!(parse_traction("xmax:1,0,-2.5").unwrap(), ("xmax".into(), [1.0, 0.0, -2.5]));
        assert!(parse_traction("xmax:1,0").is_err());
        assert!(parse_traction(":1,0,0").is_err());
        assert_eq!(parse_bc("xmin:xz").unwrap(), ("xmin".into(), [true, false, true]));
        assert!(parse_bc("xmin:w").is_err());
    }

    #[test]
    fn cards_are_wrapped_in_their_section() {
        let bare: Table = "E = 1.0\nnu = 0.3\n".parse().unwrap();
        let t = as_section(bare, "material");
        assert_eq!(t["material"]["E"], Value::Float(1.0));
        let wrapped: Table = "[material]\nE = 2.0\n".parse().unwrap();
        assert_eq!(as_section(wrapped, "material")["material"]["E"], Value::Float(2.0));
    }

    #[test]
    fn flags_override_config_and_set_overrides_flags() {
        let cli = Cli::parse_from([
            "fatigue",
            "service",
            "--eta",
            "2000",
            "--m",
            "2.4",
            "--income",
            "50",
            "--cm",
            "300",
            "--cr",
            "500000",
            "--ieff",
            "0.003",
            "--w",
            "30",
            "--set",
            "service.m=3",
        ]);
        let (tree, _) = build_tree(&cli).unwrap();
        assert_eq!(tree["service"]["eta"], Value::Float(2000.0));
        assert_eq!(tree["service"]["m"], Value::Integer(3));
    }
}
