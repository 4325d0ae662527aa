// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Piecewise-constant control sequences and plain real grids.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major `rows x cols` real matrix. Rows index controllers, columns time steps.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid<R> {
    rows: usize,
    cols: usize,
    data: Vec<R>,
}

impl<R: Real> Grid<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, R::zero())
    }

    pub fn filled(rows: usize, cols: usize, value: R) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<R>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} values cannot fill a {rows}x{cols} grid",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<R>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data: rows.iter().flatten().copied().collect(),
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> R {
        self.data[j * self.cols + k]
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: R) {
        self.data[j * self.cols + k] = v;
    }

    #[inline]
    pub fn add_at(&mut self, j: usize, k: usize, v: R) {
        self.data[j * self.cols + k] += v;
    }

    pub fn row(&self, j: usize) -> &[R] {
        &self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn row_mut(&mut self, j: usize) -> &mut [R] {
        &mut self.data[j * self.cols..(j + 1) * self.cols]
    }

    pub fn column(&self, k: usize) -> Vec<R> {
        (0..self.rows).map(|j| self.get(j, k)).collect()
    }

    pub fn as_slice(&self) -> &[R] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [R] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<R> {
        self.data
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().fold(R::zero(), |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(R::zero(), |m, (a, b)| m.max((*a - *b).abs()))
    }

    /// Frobenius inner product.
    pub fn dot(&self, other: &Self) -> R {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| a * b)
            .sum()
    }
}

/// Control amplitudes `u_jk` for `N` controllers on a uniform grid of `T` steps.
#[derive(Clone, Debug, PartialEq)]
pub struct ControlSequence<R: Real> {
    values: Grid<R>,
    dt: R,
    t_final: R,
}

impl<R: Real> ControlSequence<R> {
    /// Sequence on `[0, t_final]` with every value set to `fill`.
    pub fn constant(n_controllers: usize, n_steps: usize, t_final: R, fill: R) -> Self {
        assert!(n_controllers > 0 && n_steps > 0, "empty control grid");
        Self {
            values: Grid::filled(n_controllers, n_steps, fill),
            dt: t_final / R::count(n_steps),
            t_final,
        }
    }

    pub fn zeros(n_controllers: usize, n_steps: usize, t_final: R) -> Self {
        Self::constant(n_controllers, n_steps, t_final, R::zero())
    }

    pub fn from_grid(values: Grid<R>, t_final: R) -> Result<Self> {
        if values.rows() == 0 || values.cols() == 0 {
            return Err(Error::Dimension("empty control grid".into()));
        }
        if !(t_final > R::zero()) {
            return Err(Error::InvalidArgument(format!(
                "horizon must be positive, got {t_final}"
            )));
        }
        let dt = t_final / R::count(values.cols());
        Ok(Self {
            values,
            dt,
            t_final,
        })
    }

    /// Rows are controllers, entries are time steps.
    pub fn from_rows(rows: &[Vec<R>], t_final: R) -> Result<Self> {
        Self::from_grid(Grid::from_rows(rows)?, t_final)
    }

    /// Builds a sequence with the same grid as `self` but new values.
    pub fn with_values(&self, values: Grid<R>) -> Result<Self> {
        if (values.rows(), values.cols()) != (self.n_controllers(), self.n_steps()) {
            return Err(Error::GridMismatch(format!(
                "{}x{} values for a {}x{} grid",
                values.rows(),
                values.cols(),
                self.n_controllers(),
                self.n_steps()
            )));
        }
        Ok(Self {
            values,
            dt: self.dt,
            t_final: self.t_final,
        })
    }

    #[inline]
    pub fn n_controllers(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn n_steps(&self) -> usize {
        self.values.cols()
    }

    #[inline]
    pub fn dt(&self) -> R {
        self.dt
    }

    #[inline]
    pub fn t_final(&self) -> R {
        self.t_final
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> R {
        self.values.get(j, k)
    }

    #[inline]
    pub fn set(&mut self, j: usize, k: usize, v: R) {
        self.values.set(j, k, v);
    }

    pub fn values(&self) -> &Grid<R> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Grid<R> {
        &mut self.values
    }

    pub fn column(&self, k: usize) -> Vec<R> {
        self.values.column(k)
    }

    /// Index of the active controller at step `k` for a binary SOS1 column.
    pub fn active(&self, k: usize) -> Option<usize> {
        let mut found = None;
        for j in 0..self.n_controllers() {
            let v = self.get(j, k);
            if v == R::one() {
                if found.is_some() {
                    return None;
                }
                found = Some(j);
            } else if v != R::zero() {
                return None;
            }
        }
        found
    }

    /// Binary sequence activating `assignment[k]` at step `k`.
    pub fn from_assignment(n_controllers: usize, assignment: &[usize], t_final: R) -> Result<Self> {
        let mut seq = Self::zeros(n_controllers, assignment.len().max(1), t_final);
        if assignment.is_empty() {
            return Err(Error::Dimension("empty assignment".into()));
        }
        for (k, &j) in assignment.iter().enumerate() {
            if j >= n_controllers {
                return Err(Error::InvalidArgument(format!(
                    "controller {j} out of range at step {k}"
                )));
            }
            seq.set(j, k, R::one());
        }
        Ok(seq)
    }

    /// Active controller per step, or `None` if some column is not a unit vector.
    pub fn assignment(&self) -> Option<Vec<usize>> {
        (0..self.n_steps()).map(|k| self.active(k)).collect()
    }

    pub fn is_in_box(&self) -> bool {
        self.values
            .as_slice()
            .iter()
            .all(|&v| v >= R::zero() && v <= R::one())
    }

    pub fn is_binary(&self) -> bool {
        self.values
            .as_slice()
            .iter()
            .all(|&v| v == R::zero() || v == R::one())
    }

    /// Exactly one controller active at every step.
    pub fn is_sos1_binary(&self) -> bool {
        self.assignment().is_some()
    }

    /// Per-controller count of value changes between consecutive steps.
    pub fn switch_counts(&self) -> Vec<usize> {
        (0..self.n_controllers())
            .map(|j| {
                self.values
                    .row(j)
                    .windows(2)
                    .filter(|w| w[0] != w[1])
                    .count()
            })
            .collect()
    }

    pub fn same_grid(&self, other: &Self) -> bool {
        self.n_controllers() == other.n_controllers()
            && self.n_steps() == other.n_steps()
            && self.dt == other.dt
    }

    pub fn cast<S: Real>(&self) -> ControlSequence<S> {
        let data = self
            .values
            .as_slice()
            .iter()
            .map(|v| S::lit(v.as_f64()))
            .collect();
        ControlSequence {
            values: Grid::from_vec(self.n_controllers(), self.n_steps(), data).expect("same shape"),
            dt: S::lit(self.dt.as_f64()),
            t_final: S::lit(self.t_final.as_f64()),
        }
    }

    /// Repeats each step `factor` times on the same horizon.
    pub fn refine(&self, factor: usize) -> Self {
        assert!(factor > 0);
        let n = self.n_controllers();
        let t = self.n_steps();
        let mut out = Self::zeros(n, t * factor, self.t_final);
        for j in 0..n {
            for k in 0..t * factor {
                out.set(j, k, self.get(j, k / factor));
            }
        }
        out
    }
}
