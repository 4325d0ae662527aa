// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! The ten acceptance criteria, one pass/fail line each.

use std::time::{Duration, Instant};

use bqctl_cli::verify::{
    cia_exactness_checks, circuit_pipeline_checks, energy2_chain_checks, energy2_relaxation_checks,
    epsilon_convergence_checks, gradient_checks, not_cnot_relaxation_checks, penalty_decay_checks,
    sur_bound_checks, trust_region_checks, Check, InvariantLog,
};
use bqctl_cli::CliError;

struct Outcome {
    id: u8,
    title: &'static str,
    checks: Vec<Check>,
    elapsed: Duration,
    budget: Duration,
    error: Option<String>,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.error.is_none() && self.elapsed <= self.budget && self.checks.iter().all(|c| c.passed)
    }
}

fn run(
    id: u8,
    title: &'static str,
    budget_secs: u64,
    f: impl FnOnce() -> Result<Vec<Check>, CliError>,
) -> Outcome {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (checks, error) = match result {
        Ok(c) => (c, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    Outcome {
        id,
        title,
        checks,
        elapsed,
        budget: Duration::from_secs(budget_secs),
        error,
    }
}

fn main() {
    let mut inv = InvariantLog::default();
    let scratch = tempfile::tempdir().unwrap();
    let mut outcomes = vec![run(1, "gradient correctness", 120, || gradient_checks(0))];
    outcomes.push(run(2, "Energy2 relaxation", 30, || {
        energy2_relaxation_checks(&mut inv)
    }));
    outcomes.push(run(3, "NOT6 and CNOT10 relaxation", 300, || {
        not_cnot_relaxation_checks(&mut inv)
    }));
    outcomes.push(run(4, "SUR bound suite", 60, || {
        Ok(sur_bound_checks(0, &mut inv))
    }));
    outcomes.push(run(5, "epsilon convergence", 300, || {
        epsilon_convergence_checks(&mut inv).map(|(c, _)| c)
    }));
    outcomes.push(run(6, "penalty decay law", 180, || {
        penalty_decay_checks(&mut inv).map(|(c, _)| c)
    }));
    outcomes.push(run(7, "CIA exactness", 120, || {
        cia_exactness_checks(0, &mut inv)
    }));
    outcomes.push(run(8, "trust-region subproblem exactness", 120, || {
        trust_region_checks(0, &mut inv)
    }));
    outcomes.push(run(9, "end-to-end chains", 300, || {
        let mut checks = energy2_chain_checks(&mut inv)?;
        checks.extend(circuit_pipeline_checks(scratch.path(), 0, &mut inv)?);
        Ok(checks)
    }));
    let messages = inv.messages().to_vec();
    outcomes.push(run(10, "invariant sweeps", 1, || Ok(inv.checks())));

    for o in &outcomes {
        let tag = if o.passed() { "PASS" } else { "FAIL" };
        println!(
            "[{tag}] C{:<2} {} ({:.1} s)",
            o.id,
            o.title,
            o.elapsed.as_secs_f64()
        );
        for c in &o.checks {
            println!(
                "         {} {}: {:.6e} {} {:.6e} (margin {:.3e})",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.measured,
                c.relation,
                c.bound,
                c.margin
            );
        }
        if let Some(e) = &o.error {
            println!("         error: {e}");
        }
        if o.elapsed > o.budget {
            println!("         over the {} s budget", o.budget.as_secs());
        }
    }
    for m in &messages {
        println!("  invariant: {m}");
    }
    let failed: Vec<u8> = outcomes
        .iter()
        .filter(|o| !o.passed())
        .map(|o| o.id)
        .collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
