// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Verification suites: each check records what was measured, the bound it
//! was held to and the margin. A failing check is a report entry, not an error.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use bqctl_core::alb::{alb_improve, tr_subproblem_constrained, tr_subproblem_tv, AlbMode};
use bqctl_core::controls::Grid;
use bqctl_core::dynamics::evolve;
use bqctl_core::instances::{
    build_circuit_instance_with_target, build_cnot_instance, build_not_instance,
    energy_instance_for, grid_edges, random_unitary, write_target, QuantumInstance,
};
use bqctl_core::objectives::{
    adjoint_gradient, evaluate, GradientMethod, ObjectiveSpec, PenaltyConfig,
};
use bqctl_core::oracle::{
    brute_force_cia, brute_force_trust_region, central_difference, gradient_error_ratio,
    random_hermitian,
};
use bqctl_core::relax::{pgrape_solve, PgrapeConfig};
use bqctl_core::report::SolveReport;
use bqctl_core::rounding::{
    cia_round, max_integral_deviation, sos1_drift_epsilon, sum_up_rounding, BoundCertificate,
    RoundingConstraint,
};
use bqctl_core::{Controls, Instance};

use crate::config::{Family, ImproveMode, InstanceConfig, RoundMethod, RunConfig};
use crate::error::CliError;
use crate::pipeline::{run_pipeline, RunOptions, Stage};

/// Relative slack for bounds that can be attained with equality.
const TIGHT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Gradients,
    RoundingBounds,
    OracleEquivalence,
    Tables,
}

/// One verified quantity.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub measured: f64,
    /// `"<="`, `">="` or `"<"`.
    pub relation: &'static str,
    pub bound: f64,
    /// Distance to the bound; nonnegative when the check passes.
    pub margin: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_most(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::make(
            criterion,
            name,
            measured,
            "<=",
            bound,
            bound - measured,
            measured <= bound,
        )
    }

    pub fn at_least(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::make(
            criterion,
            name,
            measured,
            ">=",
            bound,
            measured - bound,
            measured >= bound,
        )
    }

    pub fn below(criterion: u8, name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self::make(
            criterion,
            name,
            measured,
            "<",
            bound,
            bound - measured,
            measured < bound,
        )
    }

    fn make(
        criterion: u8,
        name: impl Into<String>,
        measured: f64,
        relation: &'static str,
        bound: f64,
        margin: f64,
        passed: bool,
    ) -> Self {
        Self {
            criterion,
            name: name.into(),
            measured,
            relation,
            bound,
            margin,
            passed: passed && measured.is_finite(),
        }
    }
}

/// Invariants asserted over every solver output of a verification run.
#[derive(Clone, Debug, Default)]
pub struct InvariantLog {
    runs: usize,
    worst_unitarity: f64,
    sos1_violations: usize,
    constraint_violations: usize,
    monotonicity_violations: usize,
    messages: Vec<String>,
}

impl InvariantLog {
    pub fn unitarity(&mut self, what: &str, inst: &Instance, u: &Controls) {
        self.runs += 1;
        let defect = evolve(inst, u)
            .map(|tr| tr.final_state().unitarity_defect())
            .unwrap_or(f64::INFINITY);
        if !(defect <= 1e-10) {
            self.messages
                .push(format!("{what}: unitarity defect {defect:e}"));
        }
        self.worst_unitarity = self.worst_unitarity.max(if defect.is_nan() {
            f64::INFINITY
        } else {
            defect
        });
    }

    pub fn binary(&mut self, what: &str, u: &Controls) {
        if !u.is_sos1_binary() {
            self.sos1_violations += 1;
            self.messages.push(format!("{what}: not SOS1 binary"));
        }
    }

    pub fn constrained(&mut self, what: &str, u: &Controls, constraint: RoundingConstraint) {
        self.binary(what, u);
        if !constraint.is_satisfied_by(u) {
            self.constraint_violations += 1;
            self.messages
                .push(format!("{what}: violates {constraint:?}"));
        }
    }

    /// The improvement history must never increase.
    pub fn monotone(&mut self, what: &str, report: &SolveReport) {
        if let Some(w) = report.history.windows(2).find(|w| w[1] > w[0]) {
            self.monotonicity_violations += 1;
            self.messages
                .push(format!("{what}: history rises {} -> {}", w[0], w[1]));
        }
    }

    pub fn messages(&self) -> &[String] {
        &self.messages
    }

    pub fn checks(&self) -> Vec<Check> {
        vec![
            Check::at_most(
                10,
                format!("max unitarity defect over {} runs", self.runs),
                self.worst_unitarity,
                1e-10,
            ),
            Check::at_most(
                10,
                "binary outputs violating SOS1",
                self.sos1_violations as f64,
                0.0,
            ),
            Check::at_most(
                10,
                "constrained outputs violating their constraint",
                self.constraint_violations as f64,
                0.0,
            ),
            Check::at_most(
                10,
                "ALB histories that increase",
                self.monotonicity_violations as f64,
                0.0,
            ),
        ]
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub passed: bool,
    pub wall_seconds: f64,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Runs a suite. Plot data and the pipeline run of the tables suite go to `out`.
pub fn verify(suite: Suite, seed: u64, out: &Path) -> Result<VerifyReport, CliError> {
    let start = Instant::now();
    let mut inv = InvariantLog::default();
    let mut checks = Vec::new();
    match suite {
        Suite::Gradients => checks.extend(gradient_checks(seed)?),
        Suite::RoundingBounds => checks.extend(sur_bound_checks(seed, &mut inv)),
        Suite::OracleEquivalence => {
            checks.extend(cia_exactness_checks(seed, &mut inv)?);
            checks.extend(trust_region_checks(seed, &mut inv)?);
        }
        Suite::Tables => {
            std::fs::create_dir_all(out)?;
            checks.extend(energy2_relaxation_checks(&mut inv)?);
            checks.extend(not_cnot_relaxation_checks(&mut inv)?);
            let (c, rows) = epsilon_convergence_checks(&mut inv)?;
            checks.extend(c);
            write_rows(
                &out.join("plot_eps_vs_T.csv"),
                "T,epsilon,bound,sos1_penalty",
                &rows,
            )?;
            let (c, rows) = penalty_decay_checks(&mut inv)?;
            checks.extend(c);
            write_rows(
                &out.join("plot_penalty_vs_rho.csv"),
                "rho,sos1_penalty,objective",
                &rows,
            )?;
            checks.extend(energy2_chain_checks(&mut inv)?);
            checks.extend(circuit_pipeline_checks(
                &out.join("circuit_h2"),
                0,
                &mut inv,
            )?);
        }
    }
    if suite != Suite::Gradients {
        checks.extend(inv.checks());
    }
    Ok(VerifyReport {
        suite,
        passed: checks.iter().all(|c| c.passed),
        wall_seconds: start.elapsed().as_secs_f64(),
        checks,
        notes: inv.messages().to_vec(),
    })
}

fn write_rows(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut text = format!("{header}\n");
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:.16e}")).collect();
        text.push_str(&cells.join(","));
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn random_interior(n: usize, t: usize, tf: f64, rng: &mut ChaCha8Rng) -> Controls {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..t).map(|_| rng.gen_range(0.05..0.95)).collect())
        .collect();
    Controls::from_rows(&rows, tf).expect("valid grid")
}

/// Adjoint gradients against central differences at 20 random interior points
/// per family, componentwise relative error 1e-5 with absolute floor 1e-8.
pub fn gradient_checks(seed: u64) -> Result<Vec<Check>, CliError> {
    let circuit =
        build_circuit_instance_with_target(2, &grid_edges(1, 2), random_unitary(4, seed))?;
    let families: Vec<(&str, Instance)> = vec![
        ("Energy2", energy_instance_for(2, seed)?),
        ("CNOT5", build_cnot_instance(5.0, 100)),
        ("NOT6", build_not_instance(6.0, 60)),
        ("CircuitH2", circuit),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();
    for (name, inst) in families {
        let p = &inst.params;
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let u = random_interior(inst.n_controllers(), p.n_steps, p.t_final, &mut rng);
            let g = adjoint_gradient(&inst, &u, &inst.objective, GradientMethod::Exact)?;
            let fd = central_difference(&u, 1e-6, |x| {
                evaluate(&inst, x, &inst.objective).unwrap_or(f64::NAN)
            });
            worst = worst.max(gradient_error_ratio(&g, &fd, 1e-5, 1e-8));
        }
        checks.push(Check::at_most(
            1,
            format!("{name} gradient error / max(1e-5 |fd|, 1e-8)"),
            worst,
            1.0,
        ));
    }
    Ok(checks)
}

fn pgrape(
    inst: &Instance,
    penalty: &PenaltyConfig<f64>,
    x0: &Controls,
) -> Result<(Controls, SolveReport), CliError> {
    Ok(pgrape_solve(
        inst,
        &inst.objective,
        penalty,
        x0,
        &PgrapeConfig::default(),
    )?)
}

fn substituted_start(t: usize, tf: f64) -> Controls {
    Controls::constant(2, t, tf, 0.5)
}

/// Energy2 relaxation from the constant half start.
pub fn energy2_relaxation_checks(inv: &mut InvariantLog) -> Result<Vec<Check>, CliError> {
    let inst = energy_instance_for(2, 0)?;
    let (u, r) = pgrape(
        &inst,
        &PenaltyConfig::substituted(),
        &substituted_start(40, 2.0),
    )?;
    inv.unitarity("Energy2 relax", &inst, &u);
    Ok(vec![Check::at_most(
        2,
        "Energy2 continuous objective",
        r.objective,
        1e-6,
    )])
}

/// NOT6 (substitution) and CNOT10 (no SOS1 coupling) relaxations.
pub fn not_cnot_relaxation_checks(inv: &mut InvariantLog) -> Result<Vec<Check>, CliError> {
    let not6 = build_not_instance(6.0, 60);
    let (u, r_not) = pgrape(
        &not6,
        &PenaltyConfig::substituted(),
        &substituted_start(60, 6.0),
    )?;
    inv.unitarity("NOT6 relax", &not6, &u);
    let cnot = build_cnot_instance(10.0, 200);
    let x0 = Controls::constant(cnot.n_controllers(), 200, 10.0, 0.5);
    let (u, r_cnot) = pgrape(&cnot, &PenaltyConfig::off(), &x0)?;
    inv.unitarity("CNOT10 relax", &cnot, &u);
    Ok(vec![
        Check::at_most(3, "NOT6 continuous objective", r_not.objective, 1e-4),
        Check::at_most(3, "CNOT10 continuous objective", r_cnot.objective, 1e-4),
    ])
}

/// SUR error certificates over 1000 random continuous sequences.
pub fn sur_bound_checks(seed: u64, inv: &mut InvariantLog) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut upper, mut penalty, mut lower) = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
    for trial in 0..1000 {
        let n = [2, 3, 5][rng.gen_range(0..3)];
        let t = rng.gen_range(8..=64);
        let tf = rng.gen_range(0.5..5.0);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..t).map(|_| rng.gen_range(0.0..=1.0)).collect())
            .collect();
        let u_c = Controls::from_rows(&rows, tf).expect("valid grid");
        let u_b = sum_up_rounding(&u_c);
        inv.binary(&format!("SUR trial {trial}"), &u_b);
        let cert = BoundCertificate::compute(&u_c, &u_b).expect("same grid");
        upper = upper.min(cert.deviation_bound - cert.max_integral_deviation);
        penalty = penalty.min(cert.penalty_bound - cert.epsilon);
        lower = lower.min(cert.max_integral_deviation - cert.lower_bound);
    }
    vec![
        Check::at_least(4, "min margin of the SUR deviation upper bound", upper, 0.0),
        Check::at_least(4, "min margin of the epsilon penalty bound", penalty, 0.0),
        Check::at_least(4, "min margin of the SOS1 rounding lower bound", lower, 0.0),
    ]
}

/// Target seed of the epsilon-convergence instance.
pub const EPSILON_TARGET_SEED: u64 = 7;

/// CircuitH2 penalty relaxations at T = 20, 40, 80, 160, each warm-started from
/// the previous solution refined twofold. Returns the checks and plot rows
/// `(T, epsilon, bound, l)`.
pub fn epsilon_convergence_checks(
    inv: &mut InvariantLog,
) -> Result<(Vec<Check>, Vec<Vec<f64>>), CliError> {
    let tf = 4.0;
    let inst = build_circuit_instance_with_target(
        2,
        &grid_edges(1, 2),
        random_unitary(4, EPSILON_TARGET_SEED),
    )?;
    let n = inst.n_controllers();
    let penalty = PenaltyConfig::penalized(1.0);
    let mut prev: Option<Controls> = None;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for t in [20usize, 40, 80, 160] {
        let x0 = prev
            .as_ref()
            .map_or_else(|| Controls::constant(n, t, tf, 0.5), |p| p.refine(2));
        let (u, r) = pgrape(&inst, &penalty, &x0)?;
        inv.unitarity(&format!("CircuitH2 relax T={t}"), &inst, &u);
        let eps = sos1_drift_epsilon(&u);
        let bound = (tf * r.sos1_penalty * tf / t as f64).sqrt();
        checks.push(Check::at_most(
            5,
            format!("epsilon at T={t} vs sqrt(t_f l dt)"),
            eps,
            bound * (1.0 + TIGHT_SLACK) + 1e-15,
        ));
        if let Some(last) = rows.last().map(|r: &Vec<f64>| r[1]) {
            checks.push(Check::at_most(
                5,
                format!("epsilon at T={t} vs previous T"),
                eps,
                last,
            ));
        }
        rows.push(vec![t as f64, eps, bound, r.sos1_penalty]);
        prev = Some(u);
    }
    Ok((checks, rows))
}

/// The three-controller single-qubit instance used for the penalty sweep.
pub fn penalty_sweep_instance() -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let drift = random_hermitian(2, &mut rng);
    let controls = (0..3).map(|_| random_hermitian(2, &mut rng)).collect();
    QuantumInstance::bare(drift, controls).with_objective(ObjectiveSpec::Infidelity {
        target: random_unitary(2, 100),
        norm_dim: 2.0,
    })
}

/// Least-squares slope of `log10 y` against `log10 x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log10()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log10()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Converged SOS1 penalty against rho. Returns the checks and plot rows
/// `(rho, l, F)`.
pub fn penalty_decay_checks(
    inv: &mut InvariantLog,
) -> Result<(Vec<Check>, Vec<Vec<f64>>), CliError> {
    let inst = penalty_sweep_instance();
    let rhos = [1e-2, 1e-1, 1.0, 10.0];
    let mut ls = Vec::new();
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for rho in rhos {
        let x0 = Controls::constant(3, 10, 4.0, 0.5);
        let (u, r) = pgrape(&inst, &PenaltyConfig::penalized(rho), &x0)?;
        inv.unitarity(&format!("penalty sweep rho={rho}"), &inst, &u);
        checks.push(Check::at_most(
            6,
            format!("l(u*) at rho={rho} vs 2/rho"),
            r.sos1_penalty,
            2.0 / rho,
        ));
        ls.push(r.sos1_penalty);
        rows.push(vec![rho, r.sos1_penalty, r.objective]);
    }
    let slope = log_log_slope(&rhos, &ls);
    checks.push(Check::at_most(
        6,
        "|log-log slope of l vs rho + 1|",
        (slope + 1.0).abs(),
        0.3,
    ));
    Ok((checks, rows))
}

fn random_continuous(n: usize, t: usize, rng: &mut ChaCha8Rng) -> Controls {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..t).map(|_| rng.gen_range(0.0..=1.0)).collect())
        .collect();
    Controls::from_rows(&rows, rng.gen_range(0.5..2.0)).expect("valid grid")
}

/// Branch and bound against exhaustive enumeration, 100 instances per constraint.
pub fn cia_exactness_checks(seed: u64, inv: &mut InvariantLog) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7c1a);
    let kinds = [
        ("unconstrained", RoundingConstraint::Unconstrained),
        (
            "min-up time 3",
            RoundingConstraint::MinUpTime { t_minup: 3 },
        ),
        (
            "max switching 2",
            RoundingConstraint::MaxSwitching { s_max: 2 },
        ),
    ];
    let mut checks = Vec::new();
    let mut sur_excess = f64::NEG_INFINITY;
    for (name, constraint) in kinds {
        let mut worst: f64 = 0.0;
        for i in 0..100 {
            let t = rng.gen_range(3..=10);
            let u_c = random_continuous(2, t, &mut rng);
            let res = cia_round(&u_c, constraint, None)?;
            inv.constrained(&format!("CIA {name} #{i}"), &res.controls, constraint);
            let (_, exact) = brute_force_cia(&u_c, constraint);
            let got = max_integral_deviation(&u_c, &res.controls)?;
            worst = worst
                .max((got - exact).abs())
                .max((res.objective - exact).abs());
            if constraint == RoundingConstraint::Unconstrained {
                let sur = max_integral_deviation(&u_c, &sum_up_rounding(&u_c))?;
                sur_excess = sur_excess.max(got - sur);
            }
        }
        checks.push(Check::at_most(
            7,
            format!("{name}: max |BnB - exhaustive|"),
            worst,
            1e-12,
        ));
    }
    checks.push(Check::at_most(
        7,
        "max (BnB - SUR) deviation, unconstrained",
        sur_excess,
        1e-12,
    ));
    Ok(checks)
}

/// Trust-region subproblems against brute force, `N^T <= 3^8`.
pub fn trust_region_checks(seed: u64, inv: &mut InvariantLog) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x3b55);
    let (mut worst_tv, mut worst_con): (f64, f64) = (0.0, 0.0);
    for i in 0..200 {
        let n = rng.gen_range(2..=3);
        let t_max = if n == 2 { 12 } else { 8 };
        let t = rng.gen_range(3..=t_max);
        let tf = rng.gen_range(0.5..2.0);
        let mut grad = Grid::zeros(n, t);
        for j in 0..n {
            for k in 0..t {
                grad.set(j, k, rng.gen_range(-1.0..1.0));
            }
        }
        let radius = rng.gen_range(0..=2 * t);
        if i % 2 == 0 {
            let assignment: Vec<usize> = (0..t).map(|_| rng.gen_range(0..n)).collect();
            let center = Controls::from_assignment(n, &assignment, tf)?;
            let alpha = rng.gen_range(0.0..0.5);
            let (u, pred) = tr_subproblem_tv(&center, &grad, alpha, radius as i64)?;
            inv.binary(&format!("TV subproblem #{i}"), &u);
            let (_, exact) = brute_force_trust_region(
                &center,
                &grad,
                Some(alpha),
                radius,
                RoundingConstraint::Unconstrained,
            );
            worst_tv = worst_tv.max((pred + exact).abs());
        } else {
            let constraint = if rng.gen_bool(0.5) {
                RoundingConstraint::MinUpTime {
                    t_minup: rng.gen_range(1..=3.min(t)),
                }
            } else {
                RoundingConstraint::MaxSwitching {
                    s_max: rng.gen_range(0..=3),
                }
            };
            // A feasible center: the CIA rounding of random controls.
            let center = cia_round(&random_continuous(n, t, &mut rng), constraint, None)?.controls;
            let center = Controls::from_assignment(n, &center.assignment().expect("binary"), tf)?;
            let (u, pred, _) = tr_subproblem_constrained(&center, &grad, radius, constraint, None)?;
            inv.constrained(&format!("constrained subproblem #{i}"), &u, constraint);
            let (_, exact) = brute_force_trust_region(&center, &grad, None, radius, constraint);
            worst_con = worst_con.max((pred + exact).abs());
        }
    }
    Ok(vec![
        Check::at_most(8, "TV mode: max |DP - exhaustive|", worst_tv, 1e-12),
        Check::at_most(
            8,
            "constrained mode: max |BnB - exhaustive|",
            worst_con,
            1e-12,
        ),
    ])
}

/// Energy2: relax, then SUR; and relax, then max-switching CIA and ALB.
pub fn energy2_chain_checks(inv: &mut InvariantLog) -> Result<Vec<Check>, CliError> {
    let inst = energy_instance_for(2, 0)?;
    let (u_c, _) = pgrape(
        &inst,
        &PenaltyConfig::substituted(),
        &substituted_start(40, 2.0),
    )?;
    let sur = sum_up_rounding(&u_c);
    inv.binary("Energy2 SUR", &sur);
    inv.unitarity("Energy2 SUR", &inst, &sur);
    let f_sur = evaluate(&inst, &sur, &inst.objective)?;

    let constraint = RoundingConstraint::MaxSwitching { s_max: 10 };
    let ms = cia_round(&u_c, constraint, Some(Duration::from_secs(120)))?;
    inv.constrained("Energy2 MS", &ms.controls, constraint);
    let (u, r) = alb_improve(
        &inst,
        &inst.objective,
        &ms.controls,
        AlbMode::Constrained { constraint },
        &Default::default(),
    )?;
    inv.constrained("Energy2 MS+ALB", &u, constraint);
    inv.unitarity("Energy2 MS+ALB", &inst, &u);
    inv.monotone("Energy2 MS+ALB", &r);
    let max_switches = u.switch_counts().into_iter().max().unwrap_or(0);
    Ok(vec![
        Check::at_most(9, "Energy2 SUR binary objective", f_sur, 1e-2),
        Check::at_most(9, "Energy2 MS(10)+ALB objective", r.objective, 1e-2),
        Check::at_most(
            9,
            "Energy2 MS(10)+ALB max switches per controller",
            max_switches as f64,
            10.0,
        ),
    ])
}

/// Full CircuitH2 pipeline on a provided random target: penalty relaxation,
/// min-up-time CIA, constrained ALB. Artifacts go to `dir`, replacing any
/// earlier run there.
pub fn circuit_pipeline_checks(
    dir: &Path,
    target_seed: u64,
    inv: &mut InvariantLog,
) -> Result<Vec<Check>, CliError> {
    std::fs::create_dir_all(dir)?;
    let target_path: PathBuf = dir.join("provided_target.txt");
    write_target(&target_path, &random_unitary::<f64>(4, target_seed))?;
    let mut cfg = RunConfig {
        instance: InstanceConfig {
            family: Family::Circuit,
            q: Some(2),
            target: Some(target_path),
            ..Default::default()
        },
        ..Default::default()
    };
    cfg.round.method = RoundMethod::Mt;
    cfg.improve.mode = ImproveMode::Constrained;
    let mut opts = RunOptions::new(dir.join("run"));
    opts.force = true;
    let outcome = run_pipeline(&cfg, &opts)?;
    let inst = crate::pipeline::build_instance(&cfg, 0, None)?;
    let constraint = RoundingConstraint::MinUpTime {
        t_minup: inst.params.t_minup,
    };
    for (stage, u) in &outcome.controls {
        inv.unitarity(&format!("CircuitH2 {}", stage.name()), &inst, u);
        if *stage != Stage::Relax {
            inv.constrained(&format!("CircuitH2 {}", stage.name()), u, constraint);
        }
    }
    let round = &outcome.reports[1];
    let improve = &outcome.reports[2];
    inv.monotone("CircuitH2 ALB", improve);
    Ok(vec![Check::below(
        9,
        "CircuitH2 ALB objective vs rounded objective",
        improve.objective,
        round.objective,
    )])
}
