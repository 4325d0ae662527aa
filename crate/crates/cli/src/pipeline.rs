// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! The relax, round and improve stages and the artifacts they leave behind.
//!
//! A run directory holds, per stage, `<stage>_controls.csv` and
//! `<stage>_report.json`, plus `summary.json` and plot-data CSVs. Existing
//! files are never overwritten unless `force` is set. A failing stage leaves
//! the earlier artifacts in place and writes `failure.json`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use serde::Serialize;
use serde_json::json;

use bqctl_core::alb::{alb_improve, AlbMode, TrustRegionConfig};
use bqctl_core::instances::{
    build_circuit_instance_with_target, build_cnot_instance, build_energy_instance,
    build_not_instance, grid_edges, random_unitary, read_target, write_target, Coupling,
};
use bqctl_core::io::{read_controls, write_controls};
use bqctl_core::objectives::{evaluate, sos1_penalty, tv_seminorm, PenaltyConfig, Sos1Mode};
use bqctl_core::relax::{admm_solve, pgrape_solve, AdmmConfig, PgrapeConfig, QuasiNewtonConfig};
use bqctl_core::report::{SolveReport, Status};
use bqctl_core::rounding::{
    cia_round, sos1_drift_epsilon, sum_up_rounding, BoundCertificate, RoundingConstraint,
    SearchStatus,
};
use bqctl_core::{Controls, Instance};

use crate::config::{Family, ImproveMode, RelaxMethod, RoundMethod, RunConfig};
use crate::error::CliError;

#[derive(Clone, Debug)]
pub struct RunOptions {
    pub out: PathBuf,
    pub force: bool,
    /// Overrides the config seed.
    pub seed: Option<u64>,
    /// Wall-clock budget per stage.
    pub time_limit: Option<Duration>,
}

impl RunOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            out: out.into(),
            force: false,
            seed: None,
            time_limit: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Relax,
    Round,
    Improve,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Self::Relax => "relax",
            Self::Round => "round",
            Self::Improve => "improve",
        }
    }

    pub fn controls_file(self) -> String {
        format!("{}_controls.csv", self.name())
    }

    pub fn report_file(self) -> String {
        format!("{}_report.json", self.name())
    }
}

/// Writes into the run directory, refusing to overwrite without `force`.
struct RunDir<'a> {
    root: &'a Path,
    force: bool,
}

impl RunDir<'_> {
    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn claim(&self, name: &str) -> Result<PathBuf, CliError> {
        let p = self.path(name);
        if p.exists() && !self.force {
            return Err(CliError::Exists(p));
        }
        Ok(p)
    }

    fn write_text(&self, name: &str, text: &str) -> Result<(), CliError> {
        std::fs::write(self.claim(name)?, text)?;
        Ok(())
    }

    fn write_json(&self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write_text(name, &text)
    }

    fn write_controls(&self, stage: Stage, u: &Controls) -> Result<(), CliError> {
        write_controls(&self.claim(&stage.controls_file())?, u)?;
        Ok(())
    }
}

/// Builds the configured instance. A circuit run without a target file gets a
/// seeded random target, which is saved to `target.txt` when `save_to` is set.
pub fn build_instance(
    cfg: &RunConfig,
    seed: u64,
    save_to: Option<&Path>,
) -> Result<Instance, CliError> {
    let ic = &cfg.instance;
    let mut inst: Instance = match ic.family {
        Family::Energy => {
            let q = ic.q.unwrap_or(2);
            let coupling = match (q, ic.coupling_seed) {
                (2, None) => Coupling::AllOnes,
                (_, s) => Coupling::Seed(s.unwrap_or(seed)),
            };
            build_energy_instance(q, coupling)?
        }
        Family::Cnot => {
            let tf = ic.t_f.unwrap_or(10.0);
            build_cnot_instance(
                tf,
                ic.n_steps.unwrap_or((20.0 * tf).round().max(1.0) as usize),
            )
        }
        Family::Not => build_not_instance(ic.t_f.unwrap_or(6.0), ic.n_steps.unwrap_or(60)),
        Family::Circuit => {
            let q = ic.q.unwrap_or(2);
            let edges = ic.edges.clone().unwrap_or_else(|| default_edges(q));
            let target = match &ic.target {
                Some(path) => read_target(path)?,
                None => {
                    let t = random_unitary(1 << q, seed);
                    if let Some(dir) = save_to {
                        write_target(&dir.join("target.txt"), &t)?;
                    }
                    t
                }
            };
            build_circuit_instance_with_target(q, &edges, target)?
        }
    };
    if matches!(ic.family, Family::Cnot | Family::Not) && ic.q.is_some_and(|q| q != inst.n_qubits) {
        return Err(CliError::Config(format!(
            "{} instances have a fixed size; drop q",
            inst.name
        )));
    }
    let p = &mut inst.params;
    if let Some(v) = ic.t_f {
        p.t_final = v;
    }
    if let Some(v) = ic.n_steps {
        p.n_steps = v;
    }
    if let Some(v) = ic.alpha {
        p.alpha = v;
    }
    if let Some(v) = ic.t_minup {
        p.t_minup = v;
    }
    if let Some(v) = ic.s_max {
        p.s_max = v;
    }
    if let Some(v) = ic.rho {
        p.rho = v;
    }
    if let Some(v) = ic.sos1_mode {
        p.sos1_mode = v;
    }
    if p.sos1_mode == Sos1Mode::SubstitutedTwoControl && inst.h_controls.len() != 2 {
        return Err(CliError::Config(format!(
            "substitution mode needs 2 controllers, {} has {}",
            inst.name,
            inst.h_controls.len()
        )));
    }
    if !(p.t_final > 0.0) || p.n_steps == 0 {
        return Err(CliError::Config("t_f and T must be positive".into()));
    }
    inst.validate()?;
    Ok(inst)
}

/// Nearest-neighbour edges on the most square `rows x cols` grid with `rows * cols = q`.
pub fn default_edges(q: usize) -> Vec<(usize, usize)> {
    let rows = (1..=q)
        .filter(|r| q.is_multiple_of(*r) && r * r <= q)
        .max()
        .unwrap_or(1);
    grid_edges(rows, q / rows)
}

fn penalty_for(inst: &Instance) -> Result<PenaltyConfig<f64>, CliError> {
    let p = &inst.params;
    let rho = if p.sos1_mode == Sos1Mode::Penalized {
        p.rho
    } else {
        0.0
    };
    Ok(PenaltyConfig::new(rho, p.alpha, p.sos1_mode)?)
}

fn rounding_constraint(inst: &Instance, method: RoundMethod) -> RoundingConstraint {
    match method {
        RoundMethod::Sur | RoundMethod::Cia => RoundingConstraint::Unconstrained,
        RoundMethod::Mt => RoundingConstraint::MinUpTime {
            t_minup: inst.params.t_minup,
        },
        RoundMethod::Ms => RoundingConstraint::MaxSwitching {
            s_max: inst.params.s_max,
        },
    }
}

/// Solves the configured relaxation from the constant start `x0`.
pub fn relax_stage(
    inst: &Instance,
    cfg: &RunConfig,
    time_limit: Option<Duration>,
) -> Result<(Controls, SolveReport), CliError> {
    let p = &inst.params;
    let rc = &cfg.relax;
    if !(0.0..=1.0).contains(&rc.x0) {
        return Err(CliError::Config(format!(
            "x0 = {} lies outside [0, 1]",
            rc.x0
        )));
    }
    let mut x0 = Controls::constant(inst.n_controllers(), p.n_steps, p.t_final, rc.x0);
    if p.sos1_mode == Sos1Mode::SubstitutedTwoControl {
        for k in 0..p.n_steps {
            x0.set(1, k, 1.0 - rc.x0);
        }
    }
    let qn = QuasiNewtonConfig {
        memory: rc.memory,
        max_iterations: rc.max_iterations,
        projected_gradient_tol: rc.projected_gradient_tol,
        time_limit,
        ..Default::default()
    };
    let inner = PgrapeConfig {
        qn,
        ..Default::default()
    };
    let penalty = penalty_for(inst)?;
    let (u, mut report) = match rc.method {
        RelaxMethod::Pgrape => pgrape_solve(inst, &inst.objective, &penalty, &x0, &inner)?,
        RelaxMethod::Admm => {
            let admm = AdmmConfig {
                beta: rc.beta,
                alpha: p.alpha,
                delta: rc.delta,
                max_outer: rc.max_outer,
                inner,
            };
            admm_solve(inst, &inst.objective, &penalty, &admm, &x0, None)?
        }
    };
    report.epsilon = sos1_drift_epsilon(&u);
    Ok((u, report))
}

/// Rounds relaxed controls to SOS1 binary controls.
pub fn round_stage(
    inst: &Instance,
    cfg: &RunConfig,
    relaxed: &Controls,
    time_limit: Option<Duration>,
) -> Result<(Controls, SolveReport), CliError> {
    let start = Instant::now();
    let mut report = SolveReport::new("round");
    let u = match cfg.round.method {
        RoundMethod::Sur => sum_up_rounding(relaxed),
        method => {
            let res = cia_round(relaxed, rounding_constraint(inst, method), time_limit)?;
            report.nodes = Some(res.nodes);
            if res.status == SearchStatus::TimeLimit {
                report.status = Status::TimeLimit;
            }
            res.controls
        }
    };
    let cert = BoundCertificate::compute(relaxed, &u)?;
    report.objective = evaluate(inst, &u, &inst.objective)?;
    report.tv_value = tv_seminorm(&u);
    report.sos1_penalty = sos1_penalty(&u);
    report.epsilon = cert.epsilon;
    report.bound_certificates = Some(cert);
    report.switches = u.switch_counts();
    report.wall_seconds = start.elapsed().as_secs_f64();
    Ok((u, report))
}

/// Trust-region improvement of binary controls.
pub fn improve_stage(
    inst: &Instance,
    cfg: &RunConfig,
    binary: &Controls,
    time_limit: Option<Duration>,
) -> Result<(Controls, SolveReport), CliError> {
    let ic = &cfg.improve;
    let constraint = rounding_constraint(inst, cfg.round.method);
    let tv = match ic.mode {
        ImproveMode::Tv => true,
        ImproveMode::Constrained => false,
        ImproveMode::Auto => matches!(cfg.round.method, RoundMethod::Sur | RoundMethod::Cia),
    };
    let mode = if tv {
        AlbMode::Tv {
            alpha: inst.params.alpha,
        }
    } else {
        AlbMode::Constrained { constraint }
    };
    let tr = TrustRegionConfig {
        r0: ic.r0,
        r_bar: ic.r_bar,
        eta: ic.eta,
        max_outer: ic.max_outer,
        time_limit,
    };
    let (u, mut report) = alb_improve(inst, &inst.objective, binary, mode, &tr)?;
    report.sos1_penalty = sos1_penalty(&u);
    report.notes.push(serde_json::to_string(&mode)?);
    Ok((u, report))
}

/// Everything a pipeline run produced.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub controls: Vec<(Stage, Controls)>,
    pub reports: Vec<SolveReport>,
    pub summary_path: PathBuf,
}

/// Runs relax, round and (unless disabled) improve, persisting every stage.
pub fn run_pipeline(cfg: &RunConfig, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    std::fs::create_dir_all(&opts.out)?;
    let dir = RunDir {
        root: &opts.out,
        force: opts.force,
    };
    let mut stages = vec![Stage::Relax, Stage::Round];
    if cfg.improve.enabled {
        stages.push(Stage::Improve);
    }
    // Fail before any work if the directory already holds this run's files.
    for s in &stages {
        dir.claim(&s.controls_file())?;
        dir.claim(&s.report_file())?;
    }
    dir.claim("summary.json")?;

    let seed = opts.seed.unwrap_or(cfg.seed);
    let mut outcome = RunOutcome {
        controls: Vec::new(),
        reports: Vec::new(),
        summary_path: dir.path("summary.json"),
    };
    let inst = build_instance(cfg, seed, Some(&opts.out)).map_err(|e| fail(&dir, "setup", e))?;
    for &stage in &stages {
        let result = match (stage, outcome.controls.last()) {
            (Stage::Relax, _) => relax_stage(&inst, cfg, opts.time_limit),
            (Stage::Round, Some((_, prev))) => round_stage(&inst, cfg, prev, opts.time_limit),
            (Stage::Improve, Some((_, prev))) => improve_stage(&inst, cfg, prev, opts.time_limit),
            _ => unreachable!("stages run in order"),
        };
        let (u, report) = result.map_err(|e| fail(&dir, stage.name(), e))?;
        dir.write_controls(stage, &u)?;
        dir.write_json(&stage.report_file(), &report)?;
        outcome.controls.push((stage, u));
        outcome.reports.push(report);
    }

    let mut plot = String::from("stage,objective,tv\n");
    for r in &outcome.reports {
        plot.push_str(&format!(
            "{},{:.16e},{:.16e}\n",
            r.stage, r.objective, r.tv_value
        ));
    }
    dir.write_text("plot_objective_tv.csv", &plot)?;
    for r in &outcome.reports {
        if !r.history.is_empty() {
            let mut text = String::from("iteration,value\n");
            for (i, v) in r.history.iter().enumerate() {
                text.push_str(&format!("{i},{v:.16e}\n"));
            }
            dir.write_text(&format!("plot_{}_history.csv", r.stage), &text)?;
        }
    }
    let summary = json!({
        "instance": instance_summary(&inst),
        "seed": seed,
        "config": cfg,
        "stages": outcome.reports,
        "status": "ok",
    });
    dir.write_json("summary.json", &summary)?;
    Ok(outcome)
}

/// Runs a single stage, reading its input controls from `input` when needed.
pub fn run_stage(
    cfg: &RunConfig,
    opts: &RunOptions,
    stage: Stage,
    input: Option<&Path>,
) -> Result<(Controls, SolveReport), CliError> {
    std::fs::create_dir_all(&opts.out)?;
    let dir = RunDir {
        root: &opts.out,
        force: opts.force,
    };
    dir.claim(&stage.controls_file())?;
    dir.claim(&stage.report_file())?;
    let seed = opts.seed.unwrap_or(cfg.seed);
    let inst = build_instance(cfg, seed, Some(&opts.out))?;
    let load = |default: Stage| -> Result<Controls, CliError> {
        let path = input
            .map(Path::to_path_buf)
            .unwrap_or_else(|| dir.path(&default.controls_file()));
        let u = read_controls(&path, Some(inst.params.t_final))?;
        if (u.n_controllers(), u.n_steps()) != (inst.n_controllers(), inst.params.n_steps) {
            return Err(CliError::Config(format!(
                "{} holds a {}x{} grid, the instance needs {}x{}",
                path.display(),
                u.n_controllers(),
                u.n_steps(),
                inst.n_controllers(),
                inst.params.n_steps
            )));
        }
        Ok(u)
    };
    let (u, report) = match stage {
        Stage::Relax => relax_stage(&inst, cfg, opts.time_limit),
        Stage::Round => round_stage(&inst, cfg, &load(Stage::Relax)?, opts.time_limit),
        Stage::Improve => improve_stage(&inst, cfg, &load(Stage::Round)?, opts.time_limit),
    }
    .map_err(|e| fail(&dir, stage.name(), e))?;
    dir.write_controls(stage, &u)?;
    dir.write_json(&stage.report_file(), &report)?;
    Ok((u, report))
}

fn instance_summary(inst: &Instance) -> serde_json::Value {
    let p = &inst.params;
    json!({
        "name": inst.name,
        "q": inst.n_qubits,
        "dim": inst.dim(),
        "N": inst.n_controllers(),
        "t_f": p.t_final,
        "T": p.n_steps,
        "alpha": p.alpha,
        "t_minup": p.t_minup,
        "s_max": p.s_max,
        "rho": p.rho,
        "sos1_mode": p.sos1_mode,
    })
}

/// Records a stage failure next to the partial artifacts and passes the error on.
fn fail(dir: &RunDir<'_>, stage: &str, err: CliError) -> CliError {
    let record = json!({
        "status": "failed",
        "stage": stage,
        "kind": err.kind(),
        "message": err.to_string(),
    });
    let text = serde_json::to_string_pretty(&record).unwrap_or_default();
    let _ = std::fs::write(dir.path("failure.json"), text + "\n");
    err
}
