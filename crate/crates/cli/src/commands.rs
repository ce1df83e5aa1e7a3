//! The seven subcommands. Each turns a validated [`RunConfig`] into a
//! [`Report`].

use std::collections::BTreeSet;
use std::path::Path;

use fatigue_core::failure::{
    gompertz_j, ndet_component, proportional_hazard_j, weibull_eta, FailureDistribution, FailureReport,
};
use fatigue_core::fem::post::life_field;
use fatigue_core::fem::{assemble_and_solve, parse_mesh, stress_at_surface, LoadCase, Mesh};
use fatigue_core::material::von_mises;
use fatigue_core::microstructure::{kappa, life_distribution, principal_by_magnitude};
use fatigue_core::sensitivity::{
    fd_shape_gradient, optimality_residual, shape_sensitivity, GradientCheck, LcfObjective,
};
use fatigue_core::service::{epv_sweep, optimize_interval};
use fatigue_core::tensor::norm;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::config::{hex, Command, MaterialConfig, RunConfig, Statistics};
use crate::error::{CliError, Result};
use crate::output::{num, InputFile, Provenance, Report, Table};

pub fn execute(cfg: &RunConfig) -> Result<Report> {
    let mut provenance = Provenance::new(cfg.config_hash(), cfg.seed);
    let (result, table, notes) = match cfg.command {
        Command::Solve => solve(cfg, &mut provenance)?,
        Command::Life => life(cfg, &mut provenance)?,
        Command::Pof => pof(cfg, &mut provenance)?,
        Command::Schmid => schmid(cfg)?,
        Command::Gradcheck => gradcheck(cfg, &mut provenance)?,
        Command::Service => service(cfg)?,
        Command::Sweep => sweep(cfg)?,
    };
    Ok(Report { command: cfg.command, provenance, result, notes, table })
}

type Output = (Value, Table, Vec<String>);

struct Fe<'a> {
    mesh: Mesh<f64>,
    material: &'a MaterialConfig,
    load: &'a LoadCase<f64>,
}

fn prepare_fe<'a>(cfg: &'a RunConfig, provenance: &mut Provenance) -> Result<Fe<'a>> {
    let mc = cfg.mesh.as_ref().expect("validated");
    let material = cfg.material.as_ref().expect("validated");
    let load = cfg.load.as_ref().expect("validated");
    let bytes = std::fs::read(&mc.path).map_err(|e| CliError::io(format!("{}: {e}", mc.path.display())))?;
    provenance.inputs.push(InputFile {
        role: "mesh".into(),
        path: mc.path.display().to_string(),
        sha256: hex(&Sha256::digest(&bytes)),
    });
    let text =
        String::from_utf8(bytes).map_err(|_| CliError::config(format!("{}: not UTF-8 text", mc.path.display())))?;
    let mut mesh: Mesh<f64> = parse_mesh(&text).map_err(|e| CliError::config(format!("{}: {e}", mc.path.display())))?;
    mesh.dirichlet.extend(mc.dirichlet.iter().cloned());
    for _ in 0..mc.refine {
        mesh = mesh.refine_uniform()?;
    }
    let tags: BTreeSet<String> = mesh.tags().into_iter().collect();
    let mut issues = Vec::new();
    for (i, (tag, _)) in load.tractions.iter().enumerate() {
        if !tags.contains(tag) {
            issues.push(crate::error::Issue::new(
                format!("load.traction[{i}].tag"),
                format!("mesh has no faces tagged `{tag}` (tags: {})", join(&tags)),
            ));
        }
    }
    for (i, bc) in mc.dirichlet.iter().enumerate() {
        if !tags.contains(&bc.tag) {
            issues.push(crate::error::Issue::new(
                format!("mesh.dirichlet[{i}].tag"),
                format!("mesh has no faces tagged `{}` (tags: {})", bc.tag, join(&tags)),
            ));
        }
    }
    if mesh.dirichlet.is_empty() {
        issues.push(crate::error::Issue::new(
            "mesh.dirichlet",
            "no Dirichlet boundary: the problem has rigid-body modes",
        ));
    }
    if !issues.is_empty() {
        return Err(CliError::invalid(issues));
    }
    Ok(Fe { mesh, material, load })
}

fn join(tags: &BTreeSet<String>) -> String {
    tags.iter().cloned().collect::<Vec<_>>().join(", ")
}

fn lifing(cfg: &RunConfig) -> fatigue_core::Lifing {
    cfg.material.as_ref().and_then(|m| m.lifing).expect("validated")
}

fn mesh_summary(mesh: &Mesh<f64>, cfg: &RunConfig) -> Value {
    let kinds: BTreeSet<&str> = mesh.elements.iter().map(|e| e.kind.name()).collect();
    json!({
        "nodes": mesh.nodes.len(),
        "elements": mesh.elements.len(),
        "boundary_faces": mesh.faces.len(),
        "element_kinds": kinds,
        "tags": mesh.tags(),
        "refine": cfg.mesh.as_ref().map_or(0, |m| m.refine),
    })
}

fn solve(cfg: &RunConfig, provenance: &mut Provenance) -> Result<Output> {
    let fe = prepare_fe(cfg, provenance)?;
    let (sol, _) = assemble_and_solve(&fe.mesh, &fe.material.elastic, fe.load, &cfg.solver)?;
    let stress = stress_at_surface(&fe.mesh, &sol.u, &fe.material.elastic, &cfg.solver.quadrature)?;
    let (imax, umax) =
        sol.u.iter().map(norm).enumerate().fold((0, 0.0), |acc, (i, n)| if n > acc.1 { (i, n) } else { acc });
    let vm: Vec<f64> = stress.stress.iter().map(von_mises).collect();
    let (qmax, vmax) = vm.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    let mut table = Table::new(&["node", "x", "y", "z", "ux", "uy", "uz"]);
    for (i, (p, u)) in fe.mesh.nodes.iter().zip(&sol.u).enumerate() {
        table.push(vec![i.to_string(), num(p[0]), num(p[1]), num(p[2]), num(u[0]), num(u[1]), num(u[2])]);
    }
    let critical = stress.points.get(qmax).map(|q| json!({"face": q.face, "x": q.x, "von_mises": vmax}));
    let result = json!({
        "mesh": mesh_summary(&fe.mesh, cfg),
        "solver": {"method": cfg.solver.method, "iterations": sol.stats.iterations, "relative_residual": sol.stats.relative_residual},
        "energy": sol.energy,
        "max_displacement": {"node": imax, "magnitude": umax, "u": sol.u.get(imax)},
        "surface": {"points": stress.points.len(), "max_von_mises": critical},
    });
    Ok((result, table, sol.notes))
}

struct LifeRun {
    result: Value,
    table: Table,
    notes: Vec<String>,
    ndet_component: f64,
    distribution: Option<FailureDistribution<f64>>,
}

fn life_run(cfg: &RunConfig, provenance: &mut Provenance) -> Result<LifeRun> {
    let fe = prepare_fe(cfg, provenance)?;
    let lifing = lifing(cfg);
    let (sol, _) = assemble_and_solve(&fe.mesh, &fe.material.elastic, fe.load, &cfg.solver)?;
    let stress = stress_at_surface(&fe.mesh, &sol.u, &fe.material.elastic, &cfg.solver.quadrature)?;
    let lf = life_field(&stress, &lifing)?;
    let ncomp = ndet_component(&lf.ndet)?;
    let mut notes = sol.notes;
    let runouts = lf.runout_count();
    if runouts == lf.runout.len() {
        notes.push("every surface point is at the runout cap".into());
    }
    let mut table = Table::new(&["face", "tag", "x", "y", "z", "weight", "amplitude", "ndet", "runout"]);
    let mut critical = None;
    for ((q, l), (a, r)) in stress.points.iter().zip(lf.ndet.points()).zip(lf.amplitude.points().iter().zip(&lf.runout))
    {
        debug_assert_eq!(q.face, l.face);
        if critical.is_none_or(|(_, n)| l.value < n) {
            critical = Some((q, l.value));
        }
        table.push(vec![
            q.face.to_string(),
            fe.mesh.faces[q.face].tag.clone(),
            num(q.x[0]),
            num(q.x[1]),
            num(q.x[2]),
            num(q.weight),
            num(a.value),
            num(l.value),
            r.to_string(),
        ]);
    }
    let (statistics, distribution) = match cfg.statistics {
        Some(Statistics::Weibull(w)) => {
            let eta = weibull_eta(&lf.ndet, &w)?;
            let j = proportional_hazard_j(&lf.ndet, &w)?;
            (
                json!({"model": "weibull", "m_bar": w.m_bar, "eta": eta, "j": j}),
                Some(FailureDistribution::weibull(eta, w.m_bar)?),
            )
        }
        Some(Statistics::Gompertz(g)) => {
            let j = gompertz_j(&lf.ndet, &g)?;
            if j == 0.0 {
                notes.push("Gompertz scale J underflowed to zero: the failure probability is zero at all times".into());
            }
            (
                json!({"model": "gompertz", "c": g.c, "alpha": g.alpha, "j": j}),
                Some(FailureDistribution::gompertz(j, g.alpha)?),
            )
        }
        None => (Value::Null, None),
    };
    let result = json!({
        "mesh": mesh_summary(&fe.mesh, cfg),
        "ndet_component": ncomp,
        "critical": critical.map(|(q, n)| json!({"face": q.face, "tag": fe.mesh.faces[q.face].tag, "x": q.x, "ndet": n})),
        "surface_points": lf.runout.len(),
        "runout_points": runouts,
        "area": lf.ndet.area(),
        "max_amplitude": lf.amplitude.points().iter().map(|p| p.value).fold(0.0, f64::max),
        "statistics": statistics,
    });
    Ok(LifeRun { result, table, notes, ndet_component: ncomp, distribution })
}

fn life(cfg: &RunConfig, provenance: &mut Provenance) -> Result<Output> {
    let run = life_run(cfg, provenance)?;
    Ok((run.result, run.table, run.notes))
}

fn pof(cfg: &RunConfig, provenance: &mut Provenance) -> Result<Output> {
    let run = life_run(cfg, provenance)?;
    let dist = run.distribution.expect("validated");
    let report = FailureReport::evaluate(dist, run.ndet_component, &cfg.times)?;
    let survival: Vec<f64> = cfg.times.iter().map(|&t| dist.survival(t)).collect::<fatigue_core::Result<_>>()?;
    let mut table = Table::new(&["t", "pof", "pof_underflow", "hazard", "survival"]);
    for i in 0..cfg.times.len() {
        table.push(vec![
            num(report.times[i]),
            num(report.pof[i]),
            report.pof_underflow[i].to_string(),
            num(report.hazard[i]),
            num(survival[i]),
        ]);
    }
    let mut result = run.result;
    result["pof"] = json!({
        "distribution": report.distribution,
        "times": report.times,
        "pof": report.pof,
        "pof_underflow": report.pof_underflow,
        "hazard": report.hazard,
        "survival": survival,
    });
    Ok((result, table, run.notes))
}

/// Equal-width histogram of `log10` of the positive values.
fn log_histogram(values: &[f64], bins: usize) -> Value {
    let logs: Vec<f64> = values.iter().filter(|v| **v > 0.0).map(|v| v.log10()).collect();
    if logs.is_empty() {
        return Value::Null;
    }
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
    let mut counts = vec![0usize; bins];
    for l in &logs {
        let k = (((l - lo) / width) as usize).min(bins - 1);
        counts[k] += 1;
    }
    let edges: Vec<f64> = (0..=bins).map(|k| lo + k as f64 * width).collect();
    json!({"log10_edges": edges, "counts": counts})
}

fn schmid(cfg: &RunConfig) -> Result<Output> {
    let sc = cfg.schmid.as_ref().expect("validated");
    let s = sc.stress;
    let stress = json!([s.0[0], s.0[1], s.0[2], s.0[3], s.0[4], s.0[5]]);
    let kappa = kappa(&s).ok();
    let mut notes = Vec::new();
    if kappa.is_none() {
        notes.push("kappa is undefined for a zero stress tensor".into());
    }
    if cfg.kappa_report {
        let result = json!({"stress": stress, "principal_by_magnitude": principal_by_magnitude(&s), "kappa": kappa});
        let mut table = Table::new(&["kappa"]);
        table.push(vec![kappa.map_or_else(String::new, num)]);
        return Ok((result, table, notes));
    }
    let lifing = lifing(cfg);
    let vm = von_mises(&s);
    let (eps_a, source) = match sc.eps_a {
        Some(e) => (e, "config"),
        None => (lifing.strain_amplitude(vm)?, "von_mises"),
    };
    let (seed, _) = cfg.seed.expect("schmid runs are seeded");
    let sample = life_distribution(&s, eps_a, sc.samples, seed, &lifing, &sc.params)?;
    let mut table = Table::new(&["index", "factor", "life"]);
    for (i, (f, l)) in sample.factors.iter().zip(&sample.lives).enumerate() {
        table.push(vec![i.to_string(), num(*f), num(*l)]);
    }
    if sample.runouts > 0 {
        notes.push(format!("{} of {} grains reached the runout cap", sample.runouts, sc.samples));
    }
    let result = json!({
        "stress": stress,
        "von_mises": vm,
        "kappa": kappa,
        "eps_a": eps_a,
        "eps_a_source": source,
        "mu_g": sc.params.mu_g,
        "vartheta": sc.params.vartheta,
        "samples": sc.samples,
        "runouts": sample.runouts,
        "life_summary": sample.life_summary,
        "factor_summary": sample.factor_summary,
        "life_histogram": log_histogram(&sample.lives, sc.bins),
    });
    Ok((result, table, notes))
}

fn gradcheck(cfg: &RunConfig, provenance: &mut Provenance) -> Result<Output> {
    let gc = cfg.gradcheck.as_ref().expect("validated");
    let fe = prepare_fe(cfg, provenance)?;
    let objective = LcfObjective::new(lifing(cfg), fe.material.elastic, gc.m, gc.t)?;
    let ss = shape_sensitivity(&fe.mesh, fe.load, &objective, &cfg.solver)?;
    let mut notes = ss.notes.clone();
    // Nodes of Dirichlet faces with their constrained components.
    let constrained = fe.mesh.constrained();
    let dirichlet_nodes: BTreeSet<usize> = (0..fe.mesh.faces.len())
        .filter(|&f| fe.mesh.is_dirichlet_tag(&fe.mesh.faces[f].tag))
        .flat_map(|f| fe.mesh.face_nodes(f))
        .collect();
    // Nodes where Neumann faces of different tags meet.
    let mut node_tags: std::collections::BTreeMap<usize, BTreeSet<&str>> = Default::default();
    for f in fe.mesh.neumann_faces() {
        for n in fe.mesh.face_nodes(f) {
            node_tags.entry(n).or_default().insert(fe.mesh.faces[f].tag.as_str());
        }
    }
    let edge_nodes: Vec<usize> = node_tags.into_iter().filter(|(_, t)| t.len() > 1).map(|(n, _)| n).collect();
    let mut checks = Vec::new();
    for p in &gc.perturbations {
        let v = |x: &[f64; 3]| p.at(x);
        let peak = norm(&p.direction);
        let on_dirichlet = dirichlet_nodes
            .iter()
            .map(|&n| {
                let vn = v(&fe.mesh.nodes[n]);
                (0..3).filter(|&k| constrained[n][k]).map(|k| vn[k].abs()).fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if on_dirichlet > 1e-6 * peak {
            notes.push(format!(
                "perturbation `{}` moves Dirichlet-face nodes along constrained directions (up to {:.3e}); the boundary density does not account for that",
                p.name, on_dirichlet
            ));
        }
        let on_edges = edge_nodes.iter().map(|&n| norm(&v(&fe.mesh.nodes[n]))).fold(0.0, f64::max);
        if on_edges > 1e-3 * peak {
            notes.push(format!(
                "perturbation `{}` moves nodes on edges between differently tagged Neumann faces (|V| up to {:.3e}); the density has no edge term, so expect a larger gap",
                p.name, on_edges
            ));
        }
        let adj = ss.density.directional_derivative(v);
        let fd = fd_shape_gradient(&fe.mesh, fe.load, &objective, &cfg.solver, v, gc.step)?;
        checks.push((p.name.clone(), GradientCheck::new(adj, fd)));
    }
    let mut table = Table::new(&["face", "tag", "psi_mean"]);
    for (f, psi) in ss.density.per_face() {
        table.push(vec![f.to_string(), fe.mesh.faces[f].tag.clone(), num(psi)]);
    }
    let max_gap = checks.iter().map(|c| c.1.relative_gap).fold(0.0, f64::max);
    let result = json!({
        "mesh": mesh_summary(&fe.mesh, cfg),
        "objective": {"value": ss.objective, "m": gc.m, "t": gc.t},
        "runout_points": ss.field.runout_count(),
        "adjoint": {"iterations": ss.adjoint.stats.iterations, "relative_residual": ss.adjoint.stats.relative_residual},
        "density": {"area": ss.density.area(), "rms": ss.density.rms(), "optimality_residual": optimality_residual(&ss.density)},
        "step": gc.step,
        "checks": checks.iter().map(|(name, c)| json!({
            "name": name,
            "dJ_adjoint": c.dj_adjoint,
            "dJ_fd": c.dj_fd,
            "relative_gap": c.relative_gap,
        })).collect::<Vec<_>>(),
        "max_relative_gap": max_gap,
    });
    Ok((result, table, notes))
}

fn service(cfg: &RunConfig) -> Result<Output> {
    let sc = cfg.service.as_ref().expect("validated");
    let r = optimize_interval(&sc.distribution, &sc.econ, &sc.opts)?;
    let mut notes = Vec::new();
    if r.never_profitable {
        notes.push("EPV is negative over the whole bracket: the component is never profitable".into());
    }
    if let Some(b) = r.boundary {
        notes.push(format!(
            "optimum lies on the {} end of the bracket",
            if b == fatigue_core::service::Boundary::Lower { "lower" } else { "upper" }
        ));
    }
    let mut table = Table::new(&["delta", "epv", "optimal"]);
    let mut rows: Vec<(f64, f64, bool)> = r.epv_curve.iter().map(|&(d, v)| (d, v, false)).collect();
    rows.push((r.delta_star, r.epv_star, true));
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (d, v, o) in rows {
        table.push(vec![num(d), num(v), o.to_string()]);
    }
    let result = json!({
        "distribution": sc.distribution,
        "economics": sc.econ,
        "bracket": [sc.opts.bracket.0, sc.opts.bracket.1],
        "tol": sc.opts.tol,
        "delta_star": r.delta_star,
        "epv_star": r.epv_star,
        "boundary": r.boundary,
        "never_profitable": r.never_profitable,
        "epv_curve": r.epv_curve.iter().map(|(d, v)| json!({"delta": d, "epv": v})).collect::<Vec<_>>(),
    });
    Ok((result, table, notes))
}

fn sweep(cfg: &RunConfig) -> Result<Output> {
    let sc = cfg.service.as_ref().expect("validated");
    let curves = epv_sweep(&sc.distribution, &sc.econ, &sc.incomes, &sc.opts)?;
    let mut table = Table::new(&["income", "delta_star", "epv_star", "boundary", "never_profitable"]);
    let mut out = Vec::new();
    for c in &curves {
        let boundary = c.result.boundary.map(|b| serde_json::to_value(b).expect("enum serializes"));
        table.push(vec![
            num(c.income),
            num(c.result.delta_star),
            num(c.result.epv_star),
            boundary.as_ref().and_then(Value::as_str).unwrap_or("").to_string(),
            c.result.never_profitable.to_string(),
        ]);
        out.push(json!({
            "income": c.income,
            "delta_star": c.result.delta_star,
            "epv_star": c.result.epv_star,
            "boundary": boundary,
            "never_profitable": c.result.never_profitable,
            "epv_curve": c.result.epv_curve.iter().map(|(d, v)| json!({"delta": d, "epv": v})).collect::<Vec<_>>(),
        }));
    }
    let result = json!({
        "distribution": sc.distribution,
        "economics": sc.econ,
        "bracket": [sc.opts.bracket.0, sc.opts.bracket.1],
        "curves": out,
    });
    Ok((result, table, Vec::new()))
}

/// Reads and hashes a file for the provenance block.
pub fn file_input(role: &str, path: &Path) -> Result<InputFile> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))?;
    Ok(InputFile { role: role.into(), path: path.display().to_string(), sha256: hex(&Sha256::digest(&bytes)) })
}
