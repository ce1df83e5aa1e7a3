//! Run configuration: TOML files merged with flag overrides, then checked
//! against the schema with every problem collected before reporting.
//!
//! ```toml
//! seed = 7
//!
//! [material]
//! E = 210000.0          # or lambda + mu (E optional, checked for consistency)
//! nu = 0.3
//! K = 1200.0
//! n_prime = 0.15
//! sigma_f_prime = 1000.0
//! eps_f_prime = 0.5
//! b = -0.09
//! c = -0.6
//! n_max = 1e12          # runout cap
//! units = "MPa"         # metadata only
//!
//! [statistics]
//! model = "weibull"     # or "gompertz" with c and alpha
//! m_bar = 2.0
//!
//! [mesh]
//! path = "bar.mesh"     # relative to the file it appears in
//! refine = 0
//! [[mesh.dirichlet]]
//! tag = "xmin"
//! mask = [true, false, false]
//!
//! [[load.traction]]
//! tag = "xmax"
//! g = [100.0, 0.0, 0.0]
//! [load.body]
//! f = [0.0, 0.0, 0.0]
//! [load.centrifugal]
//! density = 8.2e-9
//! rpm = 110000.0
//! origin = [0.0, 0.0, 0.0]
//! axis = [0.0, 0.0, 1.0]
//!
//! [solver]
//! method = "direct"     # or "cg"
//! tol = 1e-10
//! quad_face_points = 4
//! tri_face_degree = 8
//! hex20_reduced = true
//!
//! [pof]
//! times = [100.0, 1000.0]
//!
//! [schmid]
//! stress = [xx, yy, zz, yz, xz, xy]
//! samples = 10000
//! mu_g = 0.01
//! vartheta = 0.45229
//! eps_a = 0.004         # default: strain amplitude of the von Mises stress
//! bins = 20
//!
//! [gradcheck]
//! m = 1.0               # default: statistics.m_bar
//! t = 1.0
//! step = 1e-4
//! [[gradcheck.perturbation]]
//! name = "bump"
//! centre = [2.0, 1.0, 0.25]
//! radius = [0.5, inf, inf]  # or one number for all axes
//! direction = [0.0, 1.0, 0.0]
//! window = { y = [0.0, 2.0], z = [0.0, 0.5] }  # sin² factor, zero at both ends
//!
//! [service]
//! model = "weibull"     # eta + m, or "gompertz" with j + alpha
//! eta = 2000.0
//! m = 2.4
//! income = 50.0
//! cm = 300.0
//! cr = 500000.0
//! ieff = 0.003
//! w = 30.0
//! bracket = [1.0, 10000.0]
//! tol = 1e-3
//! incomes = [30.0, 50.0, 70.0]
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use fatigue_core::failure::{FailureDistribution, GompertzModel, WeibullModel};
use fatigue_core::fem::{BodyForce, DirichletBc, LoadCase, QuadratureOptions, SolverOptions};
use fatigue_core::material::{CoffinMansonBasquin, ElasticParams, Lifing, RambergOsgood, DEFAULT_N_MAX};
use fatigue_core::microstructure::{MultiscaleParams, DEFAULT_VARTHETA};
use fatigue_core::service::{EconomicParams, OptimizeOptions};
use fatigue_core::sparse::LinearSolver;
use fatigue_core::tensor::StressTensor;
use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::error::{CliError, Issue, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Solve,
    Life,
    Pof,
    Schmid,
    Gradcheck,
    Service,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Solve => "solve",
            Command::Life => "life",
            Command::Pof => "pof",
            Command::Schmid => "schmid",
            Command::Gradcheck => "gradcheck",
            Command::Service => "service",
            Command::Sweep => "sweep",
        }
    }

    fn needs_fe(self) -> bool {
        matches!(self, Command::Solve | Command::Life | Command::Pof | Command::Gradcheck)
    }

    fn needs_lifing(self) -> bool {
        matches!(self, Command::Life | Command::Pof | Command::Schmid | Command::Gradcheck)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone)]
pub struct MaterialConfig {
    pub elastic: ElasticParams<f64>,
    /// Absent for purely elastic runs.
    pub lifing: Option<Lifing<f64>>,
    pub units: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Statistics {
    Weibull(WeibullModel<f64>),
    Gompertz(GompertzModel<f64>),
}

#[derive(Debug, Clone)]
pub struct MeshConfig {
    pub path: PathBuf,
    pub refine: usize,
    pub dirichlet: Vec<DirichletBc>,
}

#[derive(Debug, Clone)]
pub struct SchmidConfig {
    pub stress: StressTensor<f64>,
    pub samples: usize,
    pub params: MultiscaleParams<f64>,
    pub eps_a: Option<f64>,
    pub bins: usize,
}

/// Gaussian bump `V(x) = d Π_k exp(-(x_k - c_k)² / r_k²) w_k(x_k)`, where an
/// optional window `w_k = sin²(π (x_k - lo) / (hi - lo))` on `[lo, hi]` (zero
/// outside) pins the field to zero on chosen planes.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub name: String,
    pub centre: [f64; 3],
    /// Per-axis radius; `inf` switches the Gaussian off along that axis.
    pub radius: [f64; 3],
    pub direction: [f64; 3],
    pub window: [Option<(f64, f64)>; 3],
}

impl Perturbation {
    pub fn at(&self, x: &[f64; 3]) -> [f64; 3] {
        let mut a = 1.0;
        for k in 0..3 {
            let u = (x[k] - self.centre[k]) / self.radius[k];
            a *= (-u * u).exp();
            if let Some((lo, hi)) = self.window[k] {
                a *= if x[k] < lo || x[k] > hi {
                    0.0
                } else {
                    (std::f64::consts::PI * (x[k] - lo) / (hi - lo)).sin().powi(2)
                };
            }
        }
        self.direction.map(|d| d * a)
    }
}

#[derive(Debug, Clone)]
pub struct GradcheckConfig {
    pub m: f64,
    pub t: f64,
    pub step: f64,
    pub perturbations: Vec<Perturbation>,
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub distribution: FailureDistribution<f64>,
    pub econ: EconomicParams<f64>,
    pub opts: OptimizeOptions<f64>,
    pub incomes: Vec<f64>,
}

/// Where the seed of a random command came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedSource {
    Flag,
    Config,
    Derived,
}

/// A validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    /// Merged configuration tree the run was built from.
    pub tree: Table,
    pub material: Option<MaterialConfig>,
    pub statistics: Option<Statistics>,
    pub mesh: Option<MeshConfig>,
    pub load: Option<LoadCase<f64>>,
    pub solver: SolverOptions<f64>,
    pub times: Vec<f64>,
    pub schmid: Option<SchmidConfig>,
    pub kappa_report: bool,
    pub gradcheck: Option<GradcheckConfig>,
    pub service: Option<ServiceConfig>,
    pub seed: Option<(u64, SeedSource)>,
}

impl RunConfig {
    /// SHA-256 of the command and the canonical form of the merged tree.
    pub fn config_hash(&self) -> String {
        config_hash(self.command, &self.tree)
    }
}

pub fn config_hash(command: Command, tree: &Table) -> String {
    let mut h = Sha256::new();
    h.update(command.name().as_bytes());
    h.update(b"\n");
    h.update(toml::to_string(tree).unwrap_or_default().as_bytes());
    hex(&h.finalize())
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a TOML file; relative `mesh.path` entries are resolved against the
/// file's directory.
pub fn load_file(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    let mut table: Table = text.parse().map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
    if let Some(Value::Table(mesh)) = table.get_mut("mesh") {
        if let Some(Value::String(p)) = mesh.get_mut("path") {
            let rel = PathBuf::from(&*p);
            if rel.is_relative() {
                let base = path.parent().unwrap_or(Path::new(""));
                *p = base.join(rel).to_string_lossy().into_owned();
            }
        }
    }
    Ok(table)
}

/// Deep merge: tables merge key by key, anything else in `over` wins.
pub fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses a flag value as a TOML value, falling back to a plain string.
pub fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.into())),
        Err(_) => Value::String(raw.into()),
    }
}

/// Sets `a.b.c = value`, creating intermediate tables.
pub fn set_path(tree: &mut Table, key: &str, value: Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::config(format!("invalid override key `{key}`")));
    }
    let mut t = tree;
    for p in &parts[..parts.len() - 1] {
        let entry = t.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        t = match entry {
            Value::Table(inner) => inner,
            _ => return Err(CliError::config(format!("override `{key}`: `{p}` is not a table"))),
        };
    }
    t.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Appends a table to the array of tables at `key`.
pub fn push_table(tree: &mut Table, key: &str, value: Table) -> Result<()> {
    let (parent, last) = key.rsplit_once('.').unwrap_or(("", key));
    let mut t = tree;
    if !parent.is_empty() {
        for p in parent.split('.') {
            let entry = t.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
            t = match entry {
                Value::Table(inner) => inner,
                _ => return Err(CliError::config(format!("`{p}` is not a table"))),
            };
        }
    }
    match t.entry(last.to_string()).or_insert_with(|| Value::Array(Vec::new())) {
        Value::Array(a) => {
            a.push(Value::Table(value));
            Ok(())
        }
        _ => Err(CliError::config(format!("`{key}` is not an array of tables"))),
    }
}

/// Schema-driven reader that records which keys were consumed and every
/// problem it meets.
struct Reader<'a> {
    root: &'a Table,
    used: BTreeSet<String>,
    issues: Vec<Issue>,
}

impl<'a> Reader<'a> {
    fn new(root: &'a Table) -> Self {
        Self { root, used: BTreeSet::new(), issues: Vec::new() }
    }

    fn issue(&mut self, key: &str, msg: impl Into<String>) {
        self.issues.push(Issue::new(key, msg));
    }

    fn lookup(&self, key: &str) -> Option<&'a Value> {
        let mut cur: Option<&Value> = None;
        let mut table = Some(self.root);
        for part in key.split('.') {
            let (name, idx) = match part.split_once('[') {
                Some((n, rest)) => (n, rest.trim_end_matches(']').parse::<usize>().ok()),
                None => (part, None),
            };
            let v = table?.get(name)?;
            cur = match idx {
                Some(i) => v.as_array()?.get(i),
                None => Some(v),
            };
            table = cur.and_then(Value::as_table);
        }
        cur
    }

    fn has(&self, key: &str) -> bool {
        self.lookup(key).is_some()
    }

    fn get(&mut self, key: &str) -> Option<&'a Value> {
        let v = self.lookup(key);
        if v.is_some() {
            self.used.insert(key.to_string());
        }
        v
    }

    fn f64(&mut self, key: &str) -> Option<f64> {
        match self.get(key)? {
            Value::Float(x) => Some(*x),
            Value::Integer(i) => Some(*i as f64),
            other => {
                self.issue(key, format!("expected a number, got {}", other.type_str()));
                None
            }
        }
    }

    fn req_f64(&mut self, key: &str) -> Option<f64> {
        if !self.has(key) {
            self.issue(key, "required key is missing (number)");
            return None;
        }
        self.f64(key)
    }

    fn usize(&mut self, key: &str) -> Option<usize> {
        match self.get(key)? {
            Value::Integer(i) if *i >= 0 => Some(*i as usize),
            other => {
                self.issue(key, format!("expected a non-negative integer, got {other}"));
                None
            }
        }
    }

    fn u64(&mut self, key: &str) -> Option<u64> {
        self.usize(key).map(|v| v as u64)
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        match self.get(key)? {
            Value::Boolean(b) => Some(*b),
            other => {
                self.issue(key, format!("expected true or false, got {other}"));
                None
            }
        }
    }

    fn string(&mut self, key: &str) -> Option<String> {
        match self.get(key)? {
            Value::String(s) => Some(s.clone()),
            other => {
                self.issue(key, format!("expected a string, got {}", other.type_str()));
                None
            }
        }
    }

    fn f64_list(&mut self, key: &str) -> Option<Vec<f64>> {
        let v = self.get(key)?;
        let Some(arr) = v.as_array() else {
            self.issue(key, format!("expected an array of numbers, got {}", v.type_str()));
            return None;
        };
        let mut out = Vec::with_capacity(arr.len());
        for x in arr {
            match x {
                Value::Float(f) => out.push(*f),
                Value::Integer(i) => out.push(*i as f64),
                other => {
                    self.issue(key, format!("expected an array of numbers, found {}", other.type_str()));
                    return None;
                }
            }
        }
        Some(out)
    }

    fn fixed<const N: usize>(&mut self, key: &str) -> Option<[f64; N]> {
        let v = self.f64_list(key)?;
        match <[f64; N]>::try_from(v.as_slice()) {
            Ok(a) => Some(a),
            Err(_) => {
                self.issue(key, format!("expected {N} numbers, got {}", v.len()));
                None
            }
        }
    }

    fn table_count(&mut self, key: &str) -> usize {
        match self.lookup(key) {
            None => 0,
            Some(Value::Array(a)) if a.iter().all(Value::is_table) => {
                self.used.insert(key.to_string());
                a.len()
            }
            Some(other) => {
                self.used.insert(key.to_string());
                self.issue(key, format!("expected an array of tables, got {}", other.type_str()));
                0
            }
        }
    }

    /// Flags every leaf key that no parser consumed.
    fn unknown_keys(&mut self) {
        let mut leaves = Vec::new();
        collect_leaves(self.root, "", &mut leaves);
        for leaf in leaves {
            let consumed = self
                .used
                .iter()
                .any(|u| leaf == *u || leaf.starts_with(&format!("{u}.")) || leaf.starts_with(&format!("{u}[")))
                || self.used.iter().any(|u| u.starts_with(&format!("{leaf}[")));
            if !consumed {
                self.issue(&leaf, "unknown key");
            }
        }
    }
}

fn collect_leaves(t: &Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in t {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => collect_leaves(inner, &key, out),
            Value::Array(a) if !a.is_empty() && a.iter().all(Value::is_table) => {
                for (i, item) in a.iter().enumerate() {
                    collect_leaves(item.as_table().expect("checked"), &format!("{key}[{i}]"), out);
                }
            }
            _ => out.push(key),
        }
    }
}

/// Runs a core constructor and files its error under `key`.
fn check<T>(r: &mut Reader, key: &str, res: fatigue_core::Result<T>) -> Option<T> {
    match res {
        Ok(v) => Some(v),
        Err(e) => {
            r.issue(key, e.to_string());
            None
        }
    }
}

fn positive(r: &mut Reader, key: &str, v: Option<f64>) -> Option<f64> {
    match v {
        Some(x) if x > 0.0 && x.is_finite() => Some(x),
        Some(x) => {
            r.issue(key, format!("must be > 0, got {x}"));
            None
        }
        None => None,
    }
}

fn read_material(r: &mut Reader, lifing_needed: bool) -> Option<MaterialConfig> {
    let e = r.f64("material.E");
    let nu = r.f64("material.nu");
    let lambda = r.f64("material.lambda");
    let mu = r.f64("material.mu");
    let elastic = match (lambda, mu, e, nu) {
        (Some(l), Some(m), Some(e), None) => check(r, "material.E", ElasticParams::new(l, m, e)),
        (Some(l), Some(m), None, None) => check(r, "material.lambda", ElasticParams::from_lame(l, m)),
        (None, None, Some(e), Some(nu)) => check(r, "material.nu", ElasticParams::from_youngs_poisson(e, nu)),
        _ => {
            r.issue("material", "give either E and nu, or lambda and mu (E optional, checked for consistency)");
            None
        }
    };
    let k = r.f64("material.K");
    let n_prime = r.f64("material.n_prime");
    let sf = r.f64("material.sigma_f_prime");
    let ef = r.f64("material.eps_f_prime");
    let b = r.f64("material.b");
    let c = r.f64("material.c");
    let n_max = r.f64("material.n_max").unwrap_or(DEFAULT_N_MAX);
    let tol = r.f64("material.tol");
    let units = r.string("material.units");
    let any_lifing = [k, n_prime, sf, ef, b, c].iter().any(Option::is_some);
    let lifing = if lifing_needed || any_lifing {
        for (name, v) in
            [("K", k), ("n_prime", n_prime), ("sigma_f_prime", sf), ("eps_f_prime", ef), ("b", b), ("c", c)]
        {
            if v.is_none() && !r.has(&format!("material.{name}")) {
                r.issue(&format!("material.{name}"), "required key is missing (number)");
            }
        }
        let youngs = elastic.map(|e| e.youngs);
        let ro = match (youngs, k, n_prime) {
            (Some(e), Some(k), Some(n)) => check(r, "material.n_prime", RambergOsgood::new(e, k, n)),
            _ => None,
        };
        let cmb = match (sf, ef, b, c) {
            (Some(sf), Some(ef), Some(b), Some(c)) => check(r, "material.b", CoffinMansonBasquin::new(sf, ef, b, c)),
            _ => None,
        };
        if !(n_max > 1.0 && n_max.is_finite()) {
            r.issue("material.n_max", format!("must be > 1, got {n_max}"));
        }
        let tol = positive(r, "material.tol", tol);
        match (ro, cmb) {
            (Some(ro), Some(cmb)) => {
                let l = Lifing::new(ro, cmb).with_n_max(n_max);
                Some(match tol {
                    Some(t) => l.with_tol(t),
                    None => l,
                })
            }
            _ => None,
        }
    } else {
        None
    };
    let elastic = elastic?;
    if lifing_needed && lifing.is_none() {
        return None;
    }
    Some(MaterialConfig { elastic, lifing, units })
}

fn read_statistics(r: &mut Reader, required: bool) -> Option<Statistics> {
    if !r.has("statistics") {
        if required {
            r.issue("statistics", "required section is missing (model, m_bar or c + alpha)");
        }
        return None;
    }
    let model = r.string("statistics.model").unwrap_or_else(|| "weibull".into());
    let m_bar = r.f64("statistics.m_bar");
    let c = r.f64("statistics.c");
    let alpha = r.f64("statistics.alpha");
    match model.as_str() {
        "weibull" => match m_bar {
            Some(m) => check(r, "statistics.m_bar", WeibullModel::new(m)).map(Statistics::Weibull),
            None => {
                r.issue("statistics.m_bar", "required key is missing for the weibull model (number >= 1)");
                None
            }
        },
        "gompertz" => match (c, alpha) {
            (Some(c), Some(a)) => check(r, "statistics.alpha", GompertzModel::new(c, a)).map(Statistics::Gompertz),
            _ => {
                r.issue("statistics", "the gompertz model needs c > 0 and alpha > 0");
                None
            }
        },
        other => {
            r.issue("statistics.model", format!("expected \"weibull\" or \"gompertz\", got \"{other}\""));
            None
        }
    }
}

fn read_mesh(r: &mut Reader) -> Option<MeshConfig> {
    let path = match r.string("mesh.path") {
        Some(p) => PathBuf::from(p),
        None => {
            if !r.has("mesh.path") {
                r.issue("mesh.path", "required key is missing (path to a mesh file)");
            }
            return None;
        }
    };
    if !path.is_file() {
        r.issue("mesh.path", format!("file `{}` does not exist", path.display()));
    }
    let refine = r.usize("mesh.refine").unwrap_or(0);
    let mut dirichlet = Vec::new();
    for i in 0..r.table_count("mesh.dirichlet") {
        let key = format!("mesh.dirichlet[{i}]");
        let tag = r.string(&format!("{key}.tag"));
        let mask = match r.get(&format!("{key}.mask")) {
            Some(Value::Array(a)) if a.len() == 3 && a.iter().all(Value::is_bool) => {
                Some([a[0].as_bool().unwrap(), a[1].as_bool().unwrap(), a[2].as_bool().unwrap()])
            }
            _ => {
                r.issue(&format!("{key}.mask"), "expected three booleans");
                None
            }
        };
        match (tag, mask) {
            (Some(tag), Some(mask)) => dirichlet.push(DirichletBc { tag, mask }),
            (None, _) => r.issue(&format!("{key}.tag"), "required key is missing (face tag)"),
            _ => {}
        }
    }
    Some(MeshConfig { path, refine, dirichlet })
}

fn read_load(r: &mut Reader) -> Option<LoadCase<f64>> {
    let mut load = LoadCase::default();
    let n = r.table_count("load.traction");
    for i in 0..n {
        let key = format!("load.traction[{i}]");
        let tag = r.string(&format!("{key}.tag"));
        let g = r.fixed::<3>(&format!("{key}.g"));
        match (tag, g) {
            (Some(t), Some(g)) => load = load.with_traction(t, g),
            _ => r.issue(&key, "each traction needs a tag and g = [gx, gy, gz]"),
        }
    }
    let body = r.fixed::<3>("load.body.f");
    let centrifugal = r.has("load.centrifugal");
    if centrifugal {
        let density = {
            let v = r_req(r, "load.centrifugal.density");
            positive(r, "load.centrifugal.density", v)
        };
        let rpm = r_req(r, "load.centrifugal.rpm");
        let origin = r.fixed::<3>("load.centrifugal.origin").unwrap_or([0.0; 3]);
        let axis = r.fixed::<3>("load.centrifugal.axis").unwrap_or([0.0, 0.0, 1.0]);
        if axis.iter().all(|a| *a == 0.0) {
            r.issue("load.centrifugal.axis", "must be a nonzero vector");
        }
        if body.is_some() {
            r.issue("load.body", "give either a uniform body force or a centrifugal load, not both");
        }
        if let (Some(d), Some(rpm)) = (density, rpm) {
            load = load.with_body(BodyForce::from_rpm(d, rpm, origin, axis));
        }
    } else if let Some(f) = body {
        load = load.with_body(BodyForce::Uniform { f });
    }
    if load.tractions.is_empty() && load.body.is_zero() {
        r.issue("load", "no load given: add load.traction entries, load.body or load.centrifugal");
    }
    Some(load)
}

fn r_req(r: &mut Reader, key: &str) -> Option<f64> {
    r.req_f64(key)
}

fn read_solver(r: &mut Reader) -> SolverOptions<f64> {
    let mut opts = SolverOptions::default();
    if let Some(m) = r.string("solver.method") {
        match m.as_str() {
            "direct" => opts.method = LinearSolver::Direct,
            "cg" => opts.method = LinearSolver::Cg,
            other => r.issue("solver.method", format!("expected \"direct\" or \"cg\", got \"{other}\"")),
        }
    }
    let tol = r.f64("solver.tol");
    if let Some(t) = positive(r, "solver.tol", tol) {
        opts.tol = t;
    }
    let mut q = QuadratureOptions::default();
    if let Some(n) = r.usize("solver.quad_face_points") {
        if (1..=10).contains(&n) {
            q.quad_face_points = n;
        } else {
            r.issue("solver.quad_face_points", format!("must lie in 1..=10, got {n}"));
        }
    }
    if let Some(d) = r.usize("solver.tri_face_degree") {
        if (1..=20).contains(&d) {
            q.tri_face_degree = d;
        } else {
            r.issue("solver.tri_face_degree", format!("must lie in 1..=20, got {d}"));
        }
    }
    if let Some(b) = r.bool("solver.hex20_reduced") {
        q.hex20_reduced = b;
    }
    opts.quadrature = q;
    opts
}

fn read_times(r: &mut Reader) -> Vec<f64> {
    match r.f64_list("pof.times") {
        Some(t) if !t.is_empty() => {
            if let Some(bad) = t.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                r.issue("pof.times", format!("times must be finite and >= 0, got {bad}"));
            }
            t
        }
        Some(_) => {
            r.issue("pof.times", "needs at least one time");
            Vec::new()
        }
        None => {
            if !r.has("pof.times") {
                r.issue("pof.times", "required key is missing (list of cycle counts)");
            }
            Vec::new()
        }
    }
}

fn read_schmid(r: &mut Reader, kappa_only: bool) -> Option<SchmidConfig> {
    let stress = match r.fixed::<6>("schmid.stress") {
        Some([xx, yy, zz, yz, xz, xy]) => Some(StressTensor::new(xx, yy, zz, yz, xz, xy)),
        None => {
            if !r.has("schmid.stress") {
                r.issue("schmid.stress", "required key is missing ([xx, yy, zz, yz, xz, xy])");
            }
            None
        }
    };
    let samples = r.usize("schmid.samples").unwrap_or(10_000);
    if samples == 0 {
        r.issue("schmid.samples", "must be >= 1");
    }
    let mu_g = if kappa_only { r.f64("schmid.mu_g").or(Some(1.0)) } else { r.req_f64("schmid.mu_g") };
    let vartheta = r.f64("schmid.vartheta").unwrap_or(DEFAULT_VARTHETA);
    let params = mu_g.and_then(|m| check(r, "schmid.mu_g", MultiscaleParams::new(m, vartheta)));
    let eps_a = {
        let v = r.f64("schmid.eps_a");
        positive(r, "schmid.eps_a", v)
    };
    let bins = r.usize("schmid.bins").unwrap_or(20);
    if bins == 0 {
        r.issue("schmid.bins", "must be >= 1");
    }
    Some(SchmidConfig { stress: stress?, samples, params: params?, eps_a, bins })
}

fn read_gradcheck(r: &mut Reader, stats: Option<Statistics>) -> Option<GradcheckConfig> {
    let m = match r.f64("gradcheck.m") {
        Some(m) => Some(m),
        None => match stats {
            Some(Statistics::Weibull(w)) => Some(w.m_bar),
            _ => {
                r.issue("gradcheck.m", "required key is missing (or give statistics.m_bar)");
                None
            }
        },
    };
    if let Some(m) = m {
        if !(m >= 1.0) {
            r.issue("gradcheck.m", format!("must be >= 1, got {m}"));
        }
    }
    let t = {
        let v = r.f64("gradcheck.t").or(Some(1.0));
        positive(r, "gradcheck.t", v)
    };
    let step = {
        let v = r.f64("gradcheck.step").or(Some(1e-4));
        positive(r, "gradcheck.step", v)
    };
    let n = r.table_count("gradcheck.perturbation");
    if n == 0 {
        r.issue("gradcheck.perturbation", "at least one perturbation is required");
    }
    let mut perturbations = Vec::new();
    for i in 0..n {
        let key = format!("gradcheck.perturbation[{i}]");
        let name = r.string(&format!("{key}.name")).unwrap_or_else(|| format!("perturbation{i}"));
        let centre = r.fixed::<3>(&format!("{key}.centre"));
        let rkey = format!("{key}.radius");
        let radius = match r.lookup(&rkey) {
            Some(Value::Array(_)) => r.fixed::<3>(&rkey),
            _ => r.f64(&rkey).map(|v| [v; 3]),
        };
        if let Some(rad) = radius {
            if rad.iter().any(|v| !(*v > 0.0)) {
                r.issue(&rkey, format!("radii must be > 0 (inf allowed), got {rad:?}"));
            }
        }
        let direction = r.fixed::<3>(&format!("{key}.direction"));
        let mut window = [None; 3];
        for (k, axis) in ["x", "y", "z"].iter().enumerate() {
            let wkey = format!("{key}.window.{axis}");
            if let Some([lo, hi]) = r.fixed::<2>(&wkey) {
                if lo < hi {
                    window[k] = Some((lo, hi));
                } else {
                    r.issue(&wkey, format!("expected [lo, hi] with lo < hi, got [{lo}, {hi}]"));
                }
            }
        }
        match (centre, radius, direction) {
            (Some(centre), Some(radius), Some(direction)) => {
                perturbations.push(Perturbation { name, centre, radius, direction, window })
            }
            _ => {
                r.issue(&key, "needs centre = [x, y, z], radius (number or three numbers) and direction = [dx, dy, dz]")
            }
        }
    }
    Some(GradcheckConfig { m: m?, t: t?, step: step?, perturbations })
}

fn read_service(r: &mut Reader, sweep: bool) -> Option<ServiceConfig> {
    let model = r.string("service.model").unwrap_or_else(|| "weibull".into());
    let distribution = match model.as_str() {
        "weibull" => {
            let eta = r.req_f64("service.eta");
            let m = r.req_f64("service.m");
            match (eta, m) {
                (Some(eta), Some(m)) => check(r, "service.m", FailureDistribution::weibull(eta, m)),
                _ => None,
            }
        }
        "gompertz" => {
            let j = r.req_f64("service.j");
            let alpha = r.req_f64("service.alpha");
            match (j, alpha) {
                (Some(j), Some(a)) => check(r, "service.alpha", FailureDistribution::gompertz(j, a)),
                _ => None,
            }
        }
        other => {
            r.issue("service.model", format!("expected \"weibull\" or \"gompertz\", got \"{other}\""));
            None
        }
    };
    let income = if sweep { r.f64("service.income").or(Some(0.0)) } else { r.req_f64("service.income") };
    let cm = r.req_f64("service.cm");
    let cr = r.req_f64("service.cr");
    let ieff = r.req_f64("service.ieff");
    let w = r.req_f64("service.w");
    let econ = match (income, cm, cr, ieff, w) {
        (Some(i), Some(cm), Some(cr), Some(ie), Some(w)) => check(r, "service", EconomicParams::new(i, cm, cr, ie, w)),
        _ => None,
    };
    let bracket = r.fixed::<2>("service.bracket").unwrap_or([1.0, 1e4]);
    let mut opts = check(r, "service.bracket", OptimizeOptions::new(bracket[0], bracket[1]));
    if let (Some(o), Some(tol)) = (opts, r.f64("service.tol")) {
        opts = check(r, "service.tol", o.with_tol(tol));
    }
    let incomes = r.f64_list("service.incomes").unwrap_or_default();
    if sweep {
        if incomes.is_empty() {
            r.issue("service.incomes", "sweep needs a nonempty list of incomes");
        }
        if let Some(bad) = incomes.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
            r.issue("service.incomes", format!("incomes must be finite and >= 0, got {bad}"));
        }
    }
    Some(ServiceConfig { distribution: distribution?, econ: econ?, opts: opts?, incomes })
}

/// Checks a merged configuration tree for `command`, collecting every
/// problem instead of stopping at the first.
pub fn validate_tree(command: Command, tree: Table, seed_flag: Option<u64>, kappa_report: bool) -> Result<RunConfig> {
    let mut r = Reader::new(&tree);
    let seed_cfg = r.u64("seed");
    let fe = command.needs_fe();
    let lifing_needed = command.needs_lifing() && !(command == Command::Schmid && kappa_report);
    let material = if r.has("material") {
        read_material(&mut r, lifing_needed)
    } else {
        if fe || lifing_needed {
            r.issue("material", "required section is missing");
        }
        None
    };
    let statistics = read_statistics(&mut r, matches!(command, Command::Life | Command::Pof));
    let mesh = if fe || r.has("mesh") { read_mesh(&mut r) } else { None };
    if fe && mesh.is_none() && r.issues.iter().all(|i| i.key != "mesh.path") {
        r.issue("mesh.path", "required key is missing (path to a mesh file)");
    }
    let load = if fe || r.has("load") { read_load(&mut r) } else { None };
    let solver = read_solver(&mut r);
    let times = if command == Command::Pof || r.has("pof") { read_times(&mut r) } else { Vec::new() };
    let schmid = if command == Command::Schmid || r.has("schmid") { read_schmid(&mut r, kappa_report) } else { None };
    let gradcheck =
        if command == Command::Gradcheck || r.has("gradcheck") { read_gradcheck(&mut r, statistics) } else { None };
    let service = if matches!(command, Command::Service | Command::Sweep) || r.has("service") {
        read_service(&mut r, command == Command::Sweep)
    } else {
        None
    };
    r.unknown_keys();
    if !r.issues.is_empty() {
        return Err(CliError::invalid(r.issues));
    }
    let seed = match (seed_flag, seed_cfg) {
        (Some(s), _) => Some((s, SeedSource::Flag)),
        (None, Some(s)) => Some((s, SeedSource::Config)),
        (None, None) if command == Command::Schmid && !kappa_report => {
            let h = config_hash(command, &tree);
            Some((u64::from_str_radix(&h[..16], 16).expect("hex digest"), SeedSource::Derived))
        }
        _ => None,
    };
    Ok(RunConfig {
        command,
        tree,
        material,
        statistics,
        mesh,
        load,
        solver,
        times,
        schmid,
        kappa_report,
        gradcheck,
        service,
        seed,
    })
}

/// Loads `path` and validates it for `command`.
pub fn validate_config(path: &Path, command: Command) -> Result<RunConfig> {
    validate_tree(command, load_file(path)?, None, false)
}
