//! The six subcommands. Each returns the process exit code.

use std::path::Path;

use anyhow::anyhow;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use hiddenosc::describing::{hb_predict, hb_vs_simulation};
use hiddenosc::dynamics::{integrate, ConvergenceCriterion, IntegratorConfig, TerminalStatus, Trajectory};
use hiddenosc::io::PhasePortrait;
use hiddenosc::io::{read_trajectory_csv, trajectory_csv_string};
use hiddenosc::models::Model;
use hiddenosc::oscillation::{classify_cycle, find_cycles, omega_limit, ClassifyOutcome, LimitCycle, PoincareSection};
use hiddenosc::sweep::sweep_keldysh;
use hiddenosc::verify::{
    check_barbashin_krasovsky, check_gelig_leonov, check_leonov_cylindrical, keldysh_stability_margin,
    simulate_starts, start_grid, ConditionStatus, ProbeConfig, TheoremVariant, VerificationReport,
};

use crate::config::{ModelSpec, RunConfig, Task};
use crate::manifest::{Manifest, Outputs};
use crate::Failure;

const DIVERGENCE_PROBE_RADIUS: f64 = 1e3;

pub fn execute(task: Task, cfg: &RunConfig, base: &Path, out: &Path) -> Result<u8, Failure> {
    let model = cfg.model.build()?;
    let mut outputs = Outputs::create(out).map_err(Failure::internal)?;
    let (code, statuses) = match task {
        Task::Simulate => simulate(cfg, &model, &mut outputs)?,
        Task::Verify => verify(cfg, &model, &mut outputs)?,
        Task::Cycles => cycles(cfg, &model, &mut outputs)?,
        Task::Hb => hb(cfg, &mut outputs)?,
        Task::Sweep => sweep(cfg, &mut outputs)?,
        Task::Plot => plot(cfg, &model, base, &mut outputs)?,
    };
    let manifest = Manifest {
        tool: "hiddenosc",
        version: env!("CARGO_PKG_VERSION"),
        command: task.as_str(),
        seed: cfg.integrator.seed,
        exit_code: code,
        config: cfg,
        statuses,
        files: outputs.files(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).map_err(Failure::internal)?;
    text.push('\n');
    std::fs::write(out.join("manifest.json"), text).map_err(Failure::internal)?;
    Ok(code)
}

type Step = Result<(u8, serde_json::Value), Failure>;

fn internal<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::internal(e)
}

fn status_str(s: TerminalStatus) -> &'static str {
    match s {
        TerminalStatus::HorizonReached => "horizon_reached",
        TerminalStatus::Converged => "converged",
        TerminalStatus::Diverged => "diverged",
        TerminalStatus::IntegratorFailure => "integrator_failure",
    }
}

fn simulate(cfg: &RunConfig, model: &Model, outputs: &mut Outputs) -> Step {
    let starts = cfg.simulate.starts.all().map_err(Failure::config)?;
    let stop = ConvergenceCriterion::new(&model.stationary);
    let stop = cfg.simulate.stop_at_rest.then_some(&stop);
    let trajectories: Vec<Trajectory> = starts
        .par_iter()
        .map(|x0| integrate(&model.system, x0, &cfg.integrator, stop))
        .collect::<hiddenosc::Result<_>>()?;
    let wrap = model.system.periodic_coordinates();
    let mut statuses = Vec::new();
    for (i, (x0, tr)) in starts.iter().zip(&trajectories).enumerate() {
        let name = format!("traj_{i:03}.csv");
        let csv = trajectory_csv_string(tr, &model.labels, model.certificate.as_ref())?;
        outputs.write(&name, csv.as_bytes()).map_err(internal)?;
        let omega = omega_limit(tr, &model.stationary, &[], wrap, &cfg.simulate.omega);
        statuses.push(json!({
            "file": name,
            "start": x0,
            "terminal_status": status_str(tr.status),
            "failure": tr.failure,
            "duration": tr.duration(),
            "final_state": tr.last().x,
            "events": tr.events.len(),
            "omega_limit": omega.kind.as_str(),
        }));
        println!("{name}: {} after t = {}", status_str(tr.status), tr.duration());
    }
    Ok((0, serde_json::Value::Array(statuses)))
}

fn default_theorem(model: &Model) -> TheoremVariant {
    if model.system.surface().is_some() {
        TheoremVariant::GeligLeonov
    } else if !model.system.periodic_coordinates().is_empty() {
        TheoremVariant::LeonovCylindrical
    } else {
        TheoremVariant::BarbashinKrasovsky
    }
}

fn default_probe(cfg: &RunConfig, model: &Model) -> ProbeConfig {
    let mut probe = match &cfg.model {
        ModelSpec::Pll(_) => ProbeConfig::default().with_box(vec![-2.0, -std::f64::consts::PI], vec![2.0, std::f64::consts::PI]),
        _ => {
            let n = model.system.dim();
            ProbeConfig::default().with_box(vec![-2.0; n], vec![2.0; n])
        }
    };
    probe.seed = cfg.integrator.seed;
    probe
}

/// Starts for the trajectory-sampled conditions when the config gives none.
fn default_verify_starts(cfg: &RunConfig, probe: &ProbeConfig) -> Vec<Vec<f64>> {
    match &cfg.model {
        // 5 x 4 grid
        ModelSpec::Pll(_) => {
            let mut v = Vec::new();
            for i in 0..5 {
                for j in 0..4 {
                    let z = probe.box_lo[0] + (probe.box_hi[0] - probe.box_lo[0]) * i as f64 / 4.0;
                    let s = probe.box_lo[1] + (probe.box_hi[1] - probe.box_lo[1]) * (j as f64 + 0.5) / 4.0;
                    v.push(vec![z, s]);
                }
            }
            v
        }
        _ if probe.box_lo.len() == 2 => start_grid(&probe.box_lo, &probe.box_hi, 20),
        _ => Vec::new(),
    }
}

fn verify(cfg: &RunConfig, model: &Model, outputs: &mut Outputs) -> Step {
    let theorem = cfg.verify.theorem.unwrap_or_else(|| default_theorem(model));
    let cert = cfg.verify.certificate_for(model, theorem).map_err(Failure::config)?;
    if cert.variant != theorem {
        return Err(Failure::config(anyhow!(
            "certificate is for {:?} but the requested theorem is {:?}",
            cert.variant,
            theorem
        )));
    }
    if cert.dim() != model.system.dim() {
        return Err(Failure::config(anyhow!(
            "certificate dimension {} does not match the model dimension {}",
            cert.dim(),
            model.system.dim()
        )));
    }
    let probe = cfg.verify.probe.clone().unwrap_or_else(|| default_probe(cfg, model));
    let mut report: VerificationReport = match theorem {
        TheoremVariant::BarbashinKrasovsky => check_barbashin_krasovsky(&model.system, &cert, &probe)?,
        TheoremVariant::LeonovCylindrical | TheoremVariant::GeligLeonov => {
            let starts = if cfg.verify.starts.is_empty() {
                default_verify_starts(cfg, &probe)
            } else {
                cfg.verify.starts.all().map_err(Failure::config)?
            };
            let trs = simulate_starts(&model.system, &model.stationary, &starts, &cfg.integrator)?;
            if theorem == TheoremVariant::LeonovCylindrical {
                check_leonov_cylindrical(&model.system, &cert, &model.stationary, &trs, &probe)?
            } else {
                check_gelig_leonov(&model.system, &cert, &model.stationary, &trs, &probe)?
            }
        }
    };
    let mut statuses = json!({ "theorem": report.theorem, "overall": report.overall() });
    if let Some(x0) = &model.divergence_probe {
        // growth is linear in t for the BK example; a 1e3 radius is reached well inside the horizon
        let probe_cfg = IntegratorConfig {
            divergence_radius: cfg.integrator.divergence_radius.min(DIVERGENCE_PROBE_RADIUS),
            horizon: cfg.integrator.horizon.max(1000.0),
            ..cfg.integrator.clone()
        };
        let tr = integrate(&model.system, x0, &probe_cfg, None)?;
        let omega = omega_limit(&tr, &model.stationary, &[], model.system.periodic_coordinates(), &cfg.simulate.omega);
        report.notes.push(format!(
            "trajectory from {:?} ended {} at t = {} (|x| = {:e}); omega-limit {}",
            x0,
            status_str(tr.status),
            tr.duration(),
            omega.final_norm,
            omega.kind.as_str()
        ));
        statuses["divergence_probe"] = json!(omega.kind.as_str());
    }
    if let ModelSpec::Keldysh(p) = &cfg.model {
        let m = keldysh_stability_margin(p)?;
        report.notes.push(format!("stability margin mu + 2 sqrt(friction * damper) = {}", m.margin));
        statuses["margin"] = json!(m);
    }
    outputs.write_json("report.json", &report).map_err(internal)?;
    for c in &report.conditions {
        println!("({}) {:?}: {}", c.id, c.status, c.description);
    }
    let code = match report.overall() {
        ConditionStatus::Passed => 0,
        ConditionStatus::Violated => 2,
        ConditionStatus::Inconclusive => 3,
    };
    Ok((code, statuses))
}

#[derive(Serialize)]
struct CyclesFile<'a> {
    section: &'a PoincareSection,
    cycles: &'a [LimitCycle],
    classifications: Vec<Vec<ClassifyOutcome>>,
}

fn cycles(cfg: &RunConfig, model: &Model, outputs: &mut Outputs) -> Step {
    let section = cfg.section(&cfg.cycles.section).map_err(Failure::config)?;
    let spec = &cfg.cycles;
    let mut found = find_cycles(&model.system, &section, &model.stationary, &spec.search, &cfg.integrator)?;
    let mut classifications = vec![Vec::new(); found.len()];
    if spec.classify && !model.stationary.is_empty() {
        for (i, per) in classifications.iter_mut().enumerate() {
            for &eps in &spec.epsilon {
                per.push(classify_cycle(
                    &model.system,
                    &found,
                    i,
                    &model.stationary,
                    eps,
                    spec.n_dirs,
                    &cfg.integrator,
                    &spec.omega,
                )?);
            }
        }
        for (c, per) in found.iter_mut().zip(&classifications) {
            if let Some(first) = per.first() {
                c.classification = first.classification;
            }
        }
    }
    for c in &found {
        println!(
            "cycle rho = {} period = {} {:?} {}",
            c.radius,
            c.period,
            c.stability,
            c.classification.as_str()
        );
    }
    let file = CyclesFile {
        section: &section,
        cycles: &found,
        classifications,
    };
    outputs.write_json("cycles.json", &file).map_err(internal)?;
    let statuses = json!({
        "cycle_count": found.len(),
        "stability": found.iter().map(|c| c.stability).collect::<Vec<_>>(),
        "classification": found.iter().map(|c| c.classification.as_str()).collect::<Vec<_>>(),
    });
    Ok((0, statuses))
}

fn keldysh_params(cfg: &RunConfig) -> Result<hiddenosc::models::KeldyshParams, Failure> {
    match &cfg.model {
        ModelSpec::Keldysh(p) => Ok(*p),
        other => Err(Failure::config(anyhow!("this command needs the keldysh model, got {}", other.id()))),
    }
}

fn hb(cfg: &RunConfig, outputs: &mut Outputs) -> Step {
    let p = keldysh_params(cfg)?;
    let section = cfg.section(&cfg.hb.section).map_err(Failure::config)?;
    let cmp = hb_vs_simulation(&p, &section, &cfg.hb.search, &cfg.integrator)?;
    outputs.write_json("hb.json", &cmp).map_err(internal)?;
    println!(
        "harmonic balance: {} cycle(s), simulation: {} cycle(s), verdict {}",
        cmp.prediction.cycle_count,
        cmp.simulated_count,
        cmp.verdict.as_str()
    );
    let code = if cmp.verdict == hiddenosc::describing::HbVerdict::Agree { 0 } else { 2 };
    Ok((code, json!({ "verdict": cmp.verdict, "predicted": cmp.prediction.cycle_count, "simulated": cmp.simulated_count })))
}

fn sweep(cfg: &RunConfig, outputs: &mut Outputs) -> Step {
    let p = keldysh_params(cfg)?;
    if cfg.sweep.axes.is_empty() {
        return Err(Failure::config(anyhow!("sweep.axes is empty")));
    }
    let result = sweep_keldysh(&p, &cfg.sweep.axes, &cfg.sweep.options, &cfg.integrator)?;
    outputs.write("sweep.csv", result.to_csv()?.as_bytes()).map_err(internal)?;
    outputs.write_json("sweep.json", &result).map_err(internal)?;
    for b in &result.boundaries {
        println!(
            "boundary on axis {} ({}): {} cycle(s) at {} -> {} cycle(s) at {}",
            b.axis,
            b.param.as_str(),
            b.from_count,
            b.from_value,
            b.to_count,
            b.to_value
        );
    }
    let errors = result.points.iter().filter(|p| p.error.is_some()).count();
    let statuses = json!({
        "points": result.points.len(),
        "errors": errors,
        "boundaries": result.boundaries.len(),
    });
    Ok((0, statuses))
}

fn plot(cfg: &RunConfig, model: &Model, base: &Path, outputs: &mut Outputs) -> Step {
    let spec = &cfg.plot;
    let title = if spec.title.is_empty() { model.name.clone() } else { spec.title.clone() };
    let (xl, yl) = match spec.projection {
        Some((a, b)) => (label(model, a), label(model, b)),
        None => (label(model, 0), label(model, 1)),
    };
    let mut portrait = PhasePortrait::new(&title, &xl, &yl);
    for rel in &spec.trajectories {
        let path = base.join(rel);
        let file = std::fs::File::open(&path).map_err(|e| Failure::config(anyhow!("{}: {e}", path.display())))?;
        let table = read_trajectory_csv(file).map_err(|e| Failure::config(anyhow!("{}: {e}", path.display())))?;
        portrait.add_trajectory(&table.states(), spec.projection)?;
    }
    let mut n_cycles = 0;
    if let Some(rel) = &spec.cycles {
        let path = base.join(rel);
        let text = std::fs::read_to_string(&path).map_err(|e| Failure::config(anyhow!("{}: {e}", path.display())))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Failure::config(anyhow!("{}: {e}", path.display())))?;
        let cycles: Vec<LimitCycle> = serde_json::from_value(value.get("cycles").cloned().unwrap_or(json!([])))
            .map_err(|e| Failure::config(anyhow!("{}: {e}", path.display())))?;
        for c in &cycles {
            portrait.add_cycle(&c.orbit, spec.projection)?;
        }
        n_cycles = cycles.len();
    }
    let mut n_ellipses = 0;
    if spec.hb_ellipses {
        let p = keldysh_params(cfg)?;
        for (a, b) in hb_predict(&p)?.ellipses(&p) {
            portrait.add_predicted_ellipse(a, b);
            n_ellipses += 1;
        }
    }
    let (a, b) = spec.projection.unwrap_or((0, 1));
    let pick = |x: &[f64]| -> Option<[f64; 2]> { Some([*x.get(a)?, *x.get(b)?]) };
    for s in &model.stationary.segments {
        if let (Some(p), Some(q)) = (pick(&s.0), pick(&s.1)) {
            portrait.segments.push((p, q));
        }
    }
    for x in &model.stationary.points {
        if let Some(p) = pick(x) {
            portrait.points.push(p);
        }
    }
    let svg = portrait.render();
    outputs.write(&spec.file, svg.as_bytes()).map_err(internal)?;
    Ok((
        0,
        json!({ "trajectories": spec.trajectories.len(), "cycles": n_cycles, "predicted": n_ellipses }),
    ))
}

fn label(model: &Model, i: usize) -> String {
    model.labels.get(i).cloned().unwrap_or_else(|| format!("x{}", i + 1))
}
