// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Small dense complex matrices and a Jacobi eigensolver for Hermitian ones.
//!
//! Matrices here are at most a few dozen rows wide (2^q for q <= 6), so a
//! row-major `Vec` with naive triple loops is both simple and fast enough.

use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_traits::{One, Zero};

use crate::scalar::{cr, Real, C};

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix<R: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<R>>,
}

impl<R: Real> ComplexMatrix<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![C::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<R>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C<R>>]) -> Self {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|r| r.len() == m), "ragged rows");
        Self {
            rows: n,
            cols: m,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    /// Real-valued matrix from `f64` rows, convenient for fixed Hamiltonians.
    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let v: Vec<Vec<C<R>>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| cr(R::lit(x))).collect())
            .collect();
        Self::from_rows(&v)
    }

    pub fn diagonal(entries: &[C<R>]) -> Self {
        let n = entries.len();
        let mut m = Self::zeros(n, n);
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = e;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Side length; only meaningful for square matrices.
    #[inline]
    pub fn dim(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C<R>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C<R>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C<R> {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .fold(C::zero(), |a, b| a + b)
    }

    pub fn scale(&self, s: C<R>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: R) -> Self {
        self.scale(cr(s))
    }

    /// `self += s * other`.
    pub fn add_scaled_assign(&mut self, s: R, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self^dagger * rhs` without materialising the adjoint.
    pub fn adjoint_matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "inner dimensions differ");
        let mut out = Self::zeros(self.cols, rhs.cols);
        for k in 0..self.rows {
            let rhs_row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
            for i in 0..self.cols {
                let a = self.data[k * self.cols + i].conj();
                if a.is_zero() {
                    continue;
                }
                let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C<R>]) -> Vec<C<R>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(C::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `self^dagger * v`.
    pub fn adjoint_mul_vec(&self, v: &[C<R>]) -> Vec<C<R>> {
        assert_eq!(self.rows, v.len());
        let mut out = vec![C::zero(); self.cols];
        for (k, &vk) in v.iter().enumerate() {
            for (o, &a) in out.iter_mut().zip(self.row(k)) {
                *o += a.conj() * vk;
            }
        }
        out
    }

    /// Kronecker product `self (x) rhs`.
    pub fn kron(&self, rhs: &Self) -> Self {
        Self::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |i, j| {
            self[(i / rhs.rows, j / rhs.cols)] * rhs[(i % rhs.rows, j % rhs.cols)]
        })
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Self) -> R {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).norm())
            .fold(R::zero(), R::max)
    }

    pub fn max_abs(&self) -> R {
        self.data.iter().map(|z| z.norm()).fold(R::zero(), R::max)
    }

    pub fn frobenius_norm(&self) -> R {
        self.data.iter().map(|z| z.norm_sqr()).sum::<R>().sqrt()
    }

    /// `max |A - A^dagger|`; infinite for non-square input.
    pub fn hermitian_defect(&self) -> R {
        if !self.is_square() {
            return R::infinity();
        }
        let mut worst = R::zero();
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |A^dagger A - I|`; infinite for non-square input.
    pub fn unitarity_defect(&self) -> R {
        if !self.is_square() {
            return R::infinity();
        }
        self.adjoint_matmul(self)
            .max_abs_diff(&Self::identity(self.rows))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|z| z.is_zero())
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
    /// rotations. Only the upper triangle's Hermitian part matters; callers
    /// validate Hermiticity before relying on the result.
    pub fn hermitian_eigen(&self) -> HermitianEigen<R> {
        jacobi_eigen(self)
    }
}

impl<R: Real> Index<(usize, usize)> for ComplexMatrix<R> {
    type Output = C<R>;

    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<R> {
        &self.data[i * self.cols + j]
    }
}

impl<R: Real> IndexMut<(usize, usize)> for ComplexMatrix<R> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<R> {
        &mut self.data[i * self.cols + j]
    }
}

impl<R: Real> Mul for &ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn mul(self, rhs: Self) -> ComplexMatrix<R> {
        self.matmul(rhs)
    }
}

impl<R: Real> Add for &ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn add(self, rhs: Self) -> ComplexMatrix<R> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }
}

impl<R: Real> Sub for &ComplexMatrix<R> {
    type Output = ComplexMatrix<R>;

    fn sub(self, rhs: Self) -> ComplexMatrix<R> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        }
    }
}

/// `A = V diag(values) V^dagger` with orthonormal columns in `vectors`.
#[derive(Clone, Debug)]
pub struct HermitianEigen<R: Real> {
    pub values: Vec<R>,
    pub vectors: ComplexMatrix<R>,
}

impl<R: Real> HermitianEigen<R> {
    /// `V diag(f(lambda)) V^dagger`.
    pub fn map_spectrum(&self, f: impl Fn(R) -> C<R>) -> ComplexMatrix<R> {
        let n = self.values.len();
        let fv: Vec<C<R>> = self.values.iter().map(|&l| f(l)).collect();
        let v = &self.vectors;
        ComplexMatrix::from_fn(n, n, |i, j| {
            (0..n).fold(C::zero(), |acc, k| {
                acc + v[(i, k)] * fv[k] * v[(j, k)].conj()
            })
        })
    }
}

const MAX_SWEEPS: usize = 60;

fn jacobi_eigen<R: Real>(input: &ComplexMatrix<R>) -> HermitianEigen<R> {
    assert!(
        input.is_square(),
        "eigen decomposition needs a square matrix"
    );
    let n = input.rows();
    // Work on the Hermitian part so tiny asymmetries cannot stall rotations.
    let half = R::lit(0.5);
    let mut a = ComplexMatrix::from_fn(n, n, |i, j| (input[(i, j)] + input[(j, i)].conj()) * half);
    let mut v = ComplexMatrix::identity(n);

    let scale = a.frobenius_norm();
    if scale == R::zero() || n == 1 {
        return HermitianEigen {
            values: (0..n).map(|i| a[(i, i)].re).collect(),
            vectors: v,
        };
    }
    let tiny = R::epsilon() * scale;

    for _ in 0..MAX_SWEEPS {
        let off: R = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum();
        if off.sqrt() <= tiny * R::lit(1e-2) {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let g = apq.norm();
                if g <= tiny * R::lit(1e-3) {
                    a[(p, q)] = C::zero();
                    a[(q, p)] = C::zero();
                    continue;
                }
                // Phase e^{i phi} = apq / |apq| turns the pivot real, then a
                // real rotation annihilates it.
                let phase = apq / cr(g);
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (R::lit(2.0) * g);
                let t = if tau >= R::zero() {
                    R::one() / (tau + (R::one() + tau * tau).sqrt())
                } else {
                    -R::one() / (-tau + (R::one() + tau * tau).sqrt())
                };
                let cs = R::one() / (R::one() + t * t).sqrt();
                let sn = t * cs;
                // W = diag(1, conj(phase)) * [[c, s], [-s, c]] on the (p, q) plane.
                let w_pp = cr(cs);
                let w_pq = cr(sn);
                let w_qp = phase.conj() * cr(-sn);
                let w_qq = phase.conj() * cr(cs);
                rotate(&mut a, &mut v, p, q, [w_pp, w_pq, w_qp, w_qq]);
                a[(p, q)] = C::zero();
                a[(q, p)] = C::zero();
                a[(p, p)] = cr(app - t * g);
                a[(q, q)] = cr(aqq + t * g);
            }
        }
    }

    HermitianEigen {
        values: (0..n).map(|i| a[(i, i)].re).collect(),
        vectors: v,
    }
}

/// `A <- W^dagger A W`, `V <- V W` for a plane rotation acting on (p, q).
fn rotate<R: Real>(
    a: &mut ComplexMatrix<R>,
    v: &mut ComplexMatrix<R>,
    p: usize,
    q: usize,
    [w_pp, w_pq, w_qp, w_qq]: [C<R>; 4],
) {
    let n = a.rows();
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * w_pp + akq * w_qp;
        a[(k, q)] = akp * w_pq + akq * w_qq;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = w_pp.conj() * apk + w_qp.conj() * aqk;
        a[(q, k)] = w_pq.conj() * apk + w_qq.conj() * aqk;
    }
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * w_pp + vkq * w_qp;
        v[(k, q)] = vkp * w_pq + vkq * w_qq;
    }
}

/// Inner product `<a|b>` (conjugate-linear in the first argument).
pub fn inner<R: Real>(a: &[C<R>], b: &[C<R>]) -> C<R> {
    a.iter()
        .zip(b)
        .fold(C::zero(), |acc, (&x, &y)| acc + x.conj() * y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::c;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix<f64> {
        let m = ComplexMatrix::from_fn(n, n, |_, _| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = &m + &m.adjoint();
        h.scale_real(0.5)
    }

    #[test]
    fn eigen_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [1, 2, 3, 4, 8, 16] {
            let h = random_hermitian(n, &mut rng);
            let e = h.hermitian_eigen();
            assert!(e.vectors.unitarity_defect() < 1e-13, "n={n}");
            let back = e.map_spectrum(cr);
            assert!(back.max_abs_diff(&h) < 1e-13, "n={n}");
        }
    }

    #[test]
    fn eigen_handles_degenerate_spectrum() {
        // Heisenberg exchange on two spins: eigenvalues {-3, 1, 1, 1}.
        let h = ComplexMatrix::<f64>::from_real_rows(&[
            &[1.0, 0.0, 0.0, 0.0],
            &[0.0, -1.0, 2.0, 0.0],
            &[0.0, 2.0, -1.0, 0.0],
            &[0.0, 0.0, 0.0, 1.0],
        ]);
        let mut vals = h.hermitian_eigen().values;
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (got, want) in vals.iter().zip([-3.0, 1.0, 1.0, 1.0]) {
            assert!((got - want).abs() < 1e-14);
        }
    }

    #[test]
    fn adjoint_products_match_explicit_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_hermitian(3, &mut rng);
        let b = ComplexMatrix::from_fn(3, 3, |i, j| c(i as f64, j as f64 - 1.0));
        let lhs = a.scale(c(0.3, 0.7)).adjoint_matmul(&b);
        let rhs = a.scale(c(0.3, 0.7)).adjoint().matmul(&b);
        assert!(lhs.max_abs_diff(&rhs) < 1e-15);
        let v = vec![c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 1.0)];
        let w1 = b.adjoint_mul_vec(&v);
        let w2 = b.adjoint().mul_vec(&v);
        for (x, y) in w1.iter().zip(&w2) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn kron_of_identities_is_identity() {
        let i2 = ComplexMatrix::<f64>::identity(2);
        let i3 = ComplexMatrix::<f64>::identity(3);
        assert_eq!(i2.kron(&i3), ComplexMatrix::identity(6));
    }

    #[test]
    fn single_precision_eigen_is_accurate_to_its_epsilon() {
        let h = ComplexMatrix::<f32>::from_fn(4, 4, |i, j| {
            let base = (i + 2 * j) as f32 * 0.1;
            if i == j {
                c(base, 0.0)
            } else if i < j {
                c(base, 0.2)
            } else {
                c((j + 2 * i) as f32 * 0.1, -0.2)
            }
        });
        let e = h.hermitian_eigen();
        assert!(e.vectors.unitarity_defect() < 1e-5);
        assert!(e.map_spectrum(cr).max_abs_diff(&h) < 1e-5);
    }
}
