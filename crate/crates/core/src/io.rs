// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Controls CSV: header `step,t_start,u_1,...,u_N`, one row per time step.
//!
//! Values are written with 17 significant digits so continuous controls read
//! back bitwise and binary ones read back exact.

use std::io::{Read, Write};
use std::path::Path;

use crate::controls::{ControlSequence, Grid};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn write_controls_to<R: Real, W: Write>(
    writer: W,
    controls: &ControlSequence<R>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let n = controls.n_controllers();
    let mut header = vec!["step".to_string(), "t_start".to_string()];
    header.extend((1..=n).map(|j| format!("u_{j}")));
    w.write_record(&header)?;
    let t = controls.n_steps();
    let tf = controls.t_final().as_f64();
    for k in 0..t {
        let mut row = vec![k.to_string(), format!("{:.16e}", tf * k as f64 / t as f64)];
        row.extend((0..n).map(|j| format!("{:.16e}", controls.get(j, k).as_f64())));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_controls<R: Real>(path: &Path, controls: &ControlSequence<R>) -> Result<()> {
    write_controls_to(std::fs::File::create(path)?, controls)
}

/// Reads a controls CSV. Without `t_final` the horizon is inferred from the
/// `t_start` column, which needs at least two steps.
pub fn read_controls_from<R: Real, Rd: Read>(
    reader: Rd,
    t_final: Option<R>,
) -> Result<ControlSequence<R>> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let n = header.len().saturating_sub(2);
    let expected: Vec<String> = ["step".to_string(), "t_start".to_string()]
        .into_iter()
        .chain((1..=n).map(|j| format!("u_{j}")))
        .collect();
    if n == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(Error::Parse {
            line: 1,
            message: format!("expected header {}", expected.join(",")),
        });
    }
    let mut columns: Vec<Vec<R>> = vec![Vec::new(); n];
    let mut starts = Vec::new();
    for (i, record) in r.records().enumerate() {
        let record = record?;
        let line = i + 2;
        let field = |c: usize| -> Result<f64> {
            record
                .get(c)
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("missing column {}", c + 1),
                })?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Parse {
                    line,
                    message: e.to_string(),
                })
        };
        let step: usize = record
            .get(0)
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| Error::Parse {
                line,
                message: "step must be a nonnegative integer".into(),
            })?;
        if step != i {
            return Err(Error::Parse {
                line,
                message: format!("expected step {i}, found {step}"),
            });
        }
        starts.push(field(1)?);
        for (j, col) in columns.iter_mut().enumerate() {
            col.push(R::lit(field(j + 2)?));
        }
    }
    let t = starts.len();
    if t == 0 {
        return Err(Error::Parse {
            line: 2,
            message: "no time steps".into(),
        });
    }
    let tf = match t_final {
        Some(tf) => tf,
        None if t >= 2 => R::lit(starts[t - 1] * t as f64 / (t - 1) as f64),
        None => {
            return Err(Error::InvalidArgument(
                "cannot infer the horizon from a single step".into(),
            ))
        }
    };
    ControlSequence::from_grid(Grid::from_rows(&columns)?, tf)
}

pub fn read_controls<R: Real>(path: &Path, t_final: Option<R>) -> Result<ControlSequence<R>> {
    read_controls_from(std::fs::File::open(path)?, t_final)
}
