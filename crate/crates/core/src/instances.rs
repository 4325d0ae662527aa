// Copyright 2026 The bqctl Authors
// SPDX-License-Identifier: Apache-2.0

//! Benchmark problem families: energy minimization, CNOT and leaky NOT gates,
//! and circuit compilation on a gmon-style qubit grid.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::objectives::{ObjectiveSpec, Sos1Mode};
use crate::scalar::{c, cr, Real, C};

/// Single-qubit operators.
pub mod pauli {
    use super::*;

    pub fn x<R: Real>() -> ComplexMatrix<R> {
        ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn y<R: Real>() -> ComplexMatrix<R> {
        let o = R::one();
        let z = R::zero();
        ComplexMatrix::from_rows(&[vec![cr(z), c(z, -o)], vec![c(z, o), cr(z)]])
    }

    pub fn z<R: Real>() -> ComplexMatrix<R> {
        ComplexMatrix::from_real_rows(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    /// Projector onto the excited state, `diag(0, 1)`.
    pub fn excited<R: Real>() -> ComplexMatrix<R> {
        ComplexMatrix::from_real_rows(&[&[0.0, 0.0], &[0.0, 1.0]])
    }
}

/// Table-level parameters attached to an instance.
#[derive(Clone, Debug, PartialEq)]
pub struct InstanceParams {
    pub t_final: f64,
    pub n_steps: usize,
    pub alpha: f64,
    pub t_minup: usize,
    pub s_max: usize,
    pub rho: f64,
    pub sos1_mode: Sos1Mode,
}

/// A discretized control problem: Hamiltonians, initial operator and objective.
#[derive(Clone, Debug)]
pub struct QuantumInstance<R: Real> {
    pub name: String,
    /// Qubit count, or level count for the leaky NOT.
    pub n_qubits: usize,
    pub h_drift: ComplexMatrix<R>,
    pub h_controls: Vec<ComplexMatrix<R>>,
    pub x_init: ComplexMatrix<R>,
    pub objective: ObjectiveSpec<R>,
    pub params: InstanceParams,
}

impl<R: Real> QuantumInstance<R> {
    /// Minimal instance with identity start and an identity-target infidelity.
    pub fn bare(h_drift: ComplexMatrix<R>, h_controls: Vec<ComplexMatrix<R>>) -> Self {
        let dim = h_drift.rows();
        Self {
            name: "bare".into(),
            n_qubits: dim.trailing_zeros() as usize,
            x_init: ComplexMatrix::identity(dim),
            objective: ObjectiveSpec::Infidelity {
                target: ComplexMatrix::identity(dim),
                norm_dim: R::count(dim),
            },
            params: InstanceParams {
                t_final: 1.0,
                n_steps: 10,
                alpha: 0.0,
                t_minup: 1,
                s_max: 10,
                rho: 0.0,
                sos1_mode: Sos1Mode::Off,
            },
            h_drift,
            h_controls,
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.h_drift.rows()
    }

    #[inline]
    pub fn n_controllers(&self) -> usize {
        self.h_controls.len()
    }

    pub fn with_objective(mut self, objective: ObjectiveSpec<R>) -> Self {
        self.objective = objective;
        self
    }

    /// Checks Hermiticity of every Hamiltonian and unitarity of `x_init`.
    pub fn validate(&self) -> Result<()> {
        let dim = self.dim();
        let tol = R::hermitian_tol();
        let check = |m: &ComplexMatrix<R>| -> Result<()> {
            let d = m.hermitian_defect();
            if !(d <= tol) {
                return Err(Error::NotHermitian { defect: d.as_f64() });
            }
            Ok(())
        };
        check(&self.h_drift)?;
        for (index, h) in self.h_controls.iter().enumerate() {
            if h.rows() != dim || h.cols() != dim {
                return Err(Error::ControllerDimension {
                    index,
                    expected: dim,
                    found: h.rows(),
                });
            }
            check(h)?;
        }
        if self.h_controls.is_empty() {
            return Err(Error::InvalidArgument("instance has no controllers".into()));
        }
        let defect = self.x_init.unitarity_defect();
        if !(defect <= R::unitary_tol()) {
            return Err(Error::NotUnitary {
                defect: defect.as_f64(),
            });
        }
        self.objective.validate(dim)
    }

    pub fn cast<S: Real>(&self) -> QuantumInstance<S> {
        QuantumInstance {
            name: self.name.clone(),
            n_qubits: self.n_qubits,
            h_drift: cast_matrix(&self.h_drift),
            h_controls: self.h_controls.iter().map(cast_matrix).collect(),
            x_init: cast_matrix(&self.x_init),
            objective: self.objective.cast(),
            params: self.params.clone(),
        }
    }
}

pub(crate) fn cast_matrix<R: Real, S: Real>(m: &ComplexMatrix<R>) -> ComplexMatrix<S> {
    ComplexMatrix::from_fn(m.rows(), m.cols(), |i, j| {
        let z = m[(i, j)];
        c(S::lit(z.re.as_f64()), S::lit(z.im.as_f64()))
    })
}

/// `I^(site-1) (x) p (x) I^(q-site)` with 1-based `site`.
pub fn pauli_embed<R: Real>(
    p: &ComplexMatrix<R>,
    site: usize,
    q: usize,
) -> Result<ComplexMatrix<R>> {
    if site == 0 || site > q {
        return Err(Error::InvalidArgument(format!(
            "site {site} outside 1..={q}"
        )));
    }
    if p.rows() != 2 || p.cols() != 2 {
        return Err(Error::Dimension("single-site operator must be 2x2".into()));
    }
    let left = ComplexMatrix::identity(1usize << (site - 1));
    let right = ComplexMatrix::identity(1usize << (q - site));
    Ok(left.kron(p).kron(&right))
}

/// Coupling matrix source for the energy family.
#[derive(Clone, Debug)]
pub enum Coupling {
    /// Explicit symmetric matrix with zero diagonal.
    Matrix(Vec<Vec<f64>>),
    /// Off-diagonal entries uniform in `[-1, 1]` from a seeded generator.
    Seed(u64),
    /// Every off-diagonal entry equal to one.
    AllOnes,
}

/// Seeded symmetric coupling matrix with zero diagonal.
#[allow(clippy::needless_range_loop)]
pub fn random_coupling(q: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut j = vec![vec![0.0; q]; q];
    for a in 0..q {
        for b in a + 1..q {
            let v = rng.gen_range(-1.0..=1.0);
            j[a][b] = v;
            j[b][a] = v;
        }
    }
    j
}

/// Energy minimization on `q` qubits: `H1 = -sum X_i`, `H2 = sum_{i != j} J_ij Z_i Z_j`.
#[allow(clippy::needless_range_loop)]
pub fn build_energy_instance<R: Real>(q: usize, coupling: Coupling) -> Result<QuantumInstance<R>> {
    if q == 0 {
        return Err(Error::InvalidArgument(
            "energy instance needs q >= 1".into(),
        ));
    }
    let j = match coupling {
        Coupling::Matrix(m) => m,
        Coupling::Seed(s) => random_coupling(q, s),
        Coupling::AllOnes => (0..q)
            .map(|a| (0..q).map(|b| if a == b { 0.0 } else { 1.0 }).collect())
            .collect(),
    };
    if j.len() != q || j.iter().any(|r| r.len() != q) {
        return Err(Error::Dimension(format!("coupling matrix must be {q}x{q}")));
    }
    for a in 0..q {
        if j[a][a] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "coupling diagonal entry {a} is nonzero"
            )));
        }
        for b in 0..q {
            if j[a][b] != j[b][a] {
                return Err(Error::InvalidArgument(format!(
                    "coupling matrix is not symmetric at ({a}, {b})"
                )));
            }
        }
    }
    let dim = 1usize << q;
    let mut h1 = ComplexMatrix::zeros(dim, dim);
    let mut h2 = ComplexMatrix::zeros(dim, dim);
    let zs: Vec<_> = (1..=q)
        .map(|s| pauli_embed(&pauli::z::<R>(), s, q))
        .collect::<Result<_>>()?;
    for s in 1..=q {
        h1.add_scaled_assign(-R::one(), &pauli_embed(&pauli::x(), s, q)?);
    }
    for a in 0..q {
        for b in 0..q {
            if a != b && j[a][b] != 0.0 {
                h2.add_scaled_assign(R::lit(j[a][b]), &zs[a].matmul(&zs[b]));
            }
        }
    }
    let e_min = (0..dim).map(|i| h2[(i, i)].re).fold(R::infinity(), R::min);
    if !(e_min < R::zero()) {
        return Err(Error::InvalidArgument(
            "coupling yields a nonnegative ground energy".into(),
        ));
    }
    let amp = R::one() / R::count(dim).sqrt();
    Ok(QuantumInstance {
        name: format!("Energy{q}"),
        n_qubits: q,
        h_drift: ComplexMatrix::zeros(dim, dim),
        x_init: ComplexMatrix::identity(dim),
        objective: ObjectiveSpec::Energy {
            hbar: h2.clone(),
            psi0: vec![cr(amp); dim],
            e_min,
        },
        h_controls: vec![h1, h2],
        params: InstanceParams {
            t_final: 2.0,
            n_steps: 40,
            alpha: 0.01,
            t_minup: 10,
            s_max: 5,
            rho: 0.0,
            sos1_mode: Sos1Mode::SubstitutedTwoControl,
        },
    })
}

/// Energy instance with the default coupling: all ones for `q = 2`, seeded otherwise.
pub fn energy_instance_for<R: Real>(q: usize, seed: u64) -> Result<QuantumInstance<R>> {
    let coupling = if q == 2 {
        Coupling::AllOnes
    } else {
        Coupling::Seed(seed)
    };
    build_energy_instance(q, coupling)
}

pub fn cnot_target<R: Real>() -> ComplexMatrix<R> {
    ComplexMatrix::from_real_rows(&[
        &[1.0, 0.0, 0.0, 0.0],
        &[0.0, 1.0, 0.0, 0.0],
        &[0.0, 0.0, 0.0, 1.0],
        &[0.0, 0.0, 1.0, 0.0],
    ])
}

/// CNOT synthesis on an isotropic Heisenberg pair driven by `X_1` and `Y_1`.
pub fn build_cnot_instance<R: Real>(t_final: f64, n_steps: usize) -> QuantumInstance<R> {
    let (x, y, z) = (pauli::x::<R>(), pauli::y::<R>(), pauli::z::<R>());
    let mut drift = x.kron(&x);
    drift = &drift + &y.kron(&y);
    drift = &drift + &z.kron(&z);
    let i2 = ComplexMatrix::identity(2);
    let alpha = if t_final >= 10.0 { 0.001 } else { 0.01 };
    QuantumInstance {
        name: format!("CNOT{}", t_final),
        n_qubits: 2,
        h_drift: drift,
        h_controls: vec![x.kron(&i2), y.kron(&i2)],
        x_init: ComplexMatrix::identity(4),
        objective: ObjectiveSpec::Infidelity {
            target: cnot_target(),
            norm_dim: R::lit(4.0),
        },
        params: InstanceParams {
            t_final,
            n_steps,
            alpha,
            t_minup: 10,
            s_max: 20,
            rho: 0.0,
            sos1_mode: Sos1Mode::Off,
        },
    }
}

/// NOT target on the qubit subspace of a three-level system; the leak level row
/// and column are zero.
pub fn not_target<R: Real>() -> ComplexMatrix<R> {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0, 0.0], &[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]])
}

/// NOT gate on the lowest two levels of a three-level system with leakage.
pub fn build_not_instance<R: Real>(t_final: f64, n_steps: usize) -> QuantumInstance<R> {
    let mu2 = R::lit(2.0) * R::PI();
    let w1 = R::one();
    let w2 = R::lit(2.0).sqrt();
    let o = R::zero();
    let mut drift = ComplexMatrix::zeros(3, 3);
    drift[(2, 2)] = cr(mu2);
    let h1 = ComplexMatrix::from_rows(&[
        vec![cr(o), cr(w1), cr(o)],
        vec![cr(w1), cr(o), cr(w2)],
        vec![cr(o), cr(w2), cr(o)],
    ]);
    let h2 = ComplexMatrix::from_rows(&[
        vec![cr(o), c(o, w1), cr(o)],
        vec![c(o, -w1), cr(o), c(o, w2)],
        vec![cr(o), c(o, -w2), cr(o)],
    ]);
    QuantumInstance {
        name: format!("NOT{}", t_final),
        n_qubits: 1,
        h_drift: drift,
        h_controls: vec![h1, h2],
        x_init: ComplexMatrix::identity(3),
        objective: ObjectiveSpec::Infidelity {
            target: not_target(),
            norm_dim: R::lit(2.0),
        },
        params: InstanceParams {
            t_final,
            n_steps,
            alpha: 0.001,
            t_minup: 5,
            s_max: 12,
            rho: 0.0,
            sos1_mode: Sos1Mode::SubstitutedTwoControl,
        },
    }
}

/// Coupling strengths of the circuit family.
pub const CIRCUIT_JC: f64 = 0.2 * std::f64::consts::PI;
pub const CIRCUIT_JF: f64 = 3.0 * std::f64::consts::PI;
pub const CIRCUIT_JE: f64 = 0.1 * std::f64::consts::PI;

/// Nearest-neighbour edges of a `rows x cols` qubit grid, 1-based, row-major.
pub fn grid_edges(rows: usize, cols: usize) -> Vec<(usize, usize)> {
    let idx = |r: usize, c: usize| r * cols + c + 1;
    let mut edges = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((idx(r, c), idx(r, c + 1)));
            }
            if r + 1 < rows {
                edges.push((idx(r, c), idx(r + 1, c)));
            }
        }
    }
    edges
}

/// Circuit compilation with a target unitary read from `target_file`.
pub fn build_circuit_instance<R: Real>(
    q: usize,
    edges: &[(usize, usize)],
    target_file: &Path,
) -> Result<QuantumInstance<R>> {
    let target = read_target(target_file)?;
    build_circuit_instance_with_target(q, edges, target)
}

/// Circuit compilation: per qubit a charge drive `Jc X_j` and flux drive
/// `Jf |1><1|_j`, per edge an `Je X_a X_b` coupler.
pub fn build_circuit_instance_with_target<R: Real>(
    q: usize,
    edges: &[(usize, usize)],
    target: ComplexMatrix<R>,
) -> Result<QuantumInstance<R>> {
    if q == 0 {
        return Err(Error::InvalidArgument(
            "circuit instance needs q >= 1".into(),
        ));
    }
    let dim = 1usize << q;
    if target.rows() != dim || target.cols() != dim {
        return Err(Error::Dimension(format!(
            "target is {}x{}, expected {dim}x{dim}",
            target.rows(),
            target.cols()
        )));
    }
    check_target_unitary(&target)?;
    let mut controls = Vec::with_capacity(2 * q + edges.len());
    for s in 1..=q {
        controls.push(pauli_embed(&pauli::x(), s, q)?.scale_real(R::lit(CIRCUIT_JC)));
        controls.push(pauli_embed(&pauli::excited(), s, q)?.scale_real(R::lit(CIRCUIT_JF)));
    }
    for &(a, b) in edges {
        if a == b {
            return Err(Error::InvalidArgument(format!(
                "self-loop edge at qubit {a}"
            )));
        }
        let xa = pauli_embed(&pauli::x::<R>(), a, q)?;
        let xb = pauli_embed(&pauli::x::<R>(), b, q)?;
        controls.push(xa.matmul(&xb).scale_real(R::lit(CIRCUIT_JE)));
    }
    let (t_final, n_steps, t_minup, s_max, rho) = if q <= 2 {
        (4.0, 80, 10, 8, 1.0)
    } else {
        (20.0, 200, 5, 40, 0.1)
    };
    Ok(QuantumInstance {
        name: format!("Circuit{q}"),
        n_qubits: q,
        h_drift: ComplexMatrix::zeros(dim, dim),
        h_controls: controls,
        x_init: ComplexMatrix::identity(dim),
        objective: ObjectiveSpec::Infidelity {
            target,
            norm_dim: R::count(dim),
        },
        params: InstanceParams {
            t_final,
            n_steps,
            alpha: 0.001,
            t_minup,
            s_max,
            rho,
            sos1_mode: Sos1Mode::Penalized,
        },
    })
}

const TARGET_UNITARY_TOL: f64 = 1e-8;

fn check_target_unitary<R: Real>(target: &ComplexMatrix<R>) -> Result<()> {
    let defect = target.unitarity_defect();
    if !(defect.as_f64() <= TARGET_UNITARY_TOL) {
        return Err(Error::NotUnitary {
            defect: defect.as_f64(),
        });
    }
    Ok(())
}

/// Haar-like random unitary: QR of a complex Gaussian matrix with phase-fixed R.
pub fn random_unitary<R: Real>(dim: usize, seed: u64) -> ComplexMatrix<R> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = || {
        // Box-Muller keeps the generator the only dependency.
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    };
    let mut cols: Vec<Vec<Complex<f64>>> = (0..dim)
        .map(|_| (0..dim).map(|_| Complex::new(gauss(), gauss())).collect())
        .collect();
    // Modified Gram-Schmidt, applied twice for orthogonality to machine precision.
    for k in 0..dim {
        for _ in 0..2 {
            for p in 0..k {
                let proj: Complex<f64> = cols[p]
                    .iter()
                    .zip(&cols[k])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                let prev = cols[p].clone();
                for (x, y) in cols[k].iter_mut().zip(&prev) {
                    *x -= proj * y;
                }
            }
        }
        let norm = cols[k].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in cols[k].iter_mut() {
            *x /= norm;
        }
    }
    ComplexMatrix::from_fn(dim, dim, |i, j| {
        let z = cols[j][i];
        c(R::lit(z.re), R::lit(z.im))
    })
}

/// Parses the target-unitary text format: `dim d` then `d` rows of `a+bi` entries.
pub fn parse_target<R: Real>(text: &str) -> Result<ComplexMatrix<R>> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        message: "empty target file".into(),
    })?;
    let dim: usize = header
        .strip_prefix("dim")
        .and_then(|r| r.trim().parse().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| Error::Parse {
            line: hline,
            message: format!("expected header `dim <d>`, found `{header}`"),
        })?;
    let mut m = ComplexMatrix::zeros(dim, dim);
    for row in 0..dim {
        let (line, content) = lines.next().ok_or_else(|| Error::Parse {
            line: hline + row + 1,
            message: format!("expected {dim} rows, found {row}"),
        })?;
        let entries: Vec<&str> = content.split_whitespace().collect();
        if entries.len() != dim {
            return Err(Error::Parse {
                line,
                message: format!("expected {dim} entries, found {}", entries.len()),
            });
        }
        for (col, tok) in entries.iter().enumerate() {
            let z: Complex<f64> = tok.parse().map_err(|_| Error::Parse {
                line,
                message: format!("cannot parse complex entry `{tok}`"),
            })?;
            m[(row, col)] = c(R::lit(z.re), R::lit(z.im));
        }
    }
    if let Some((line, extra)) = lines.next() {
        return Err(Error::Parse {
            line,
            message: format!("unexpected trailing content `{extra}`"),
        });
    }
    Ok(m)
}

pub fn read_target<R: Real>(path: &Path) -> Result<ComplexMatrix<R>> {
    parse_target(&std::fs::read_to_string(path)?)
}

/// Formats a matrix in the target-unitary text format with 17 significant digits.
pub fn format_target<R: Real>(m: &ComplexMatrix<R>) -> String {
    let mut out = format!("dim {}\n", m.rows());
    for i in 0..m.rows() {
        let row: Vec<String> = (0..m.cols()).map(|j| format_complex(m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn write_target<R: Real>(path: &Path, m: &ComplexMatrix<R>) -> Result<()> {
    std::fs::write(path, format_target(m))?;
    Ok(())
}

fn format_complex<R: Real>(z: C<R>) -> String {
    let re = z.re.as_f64();
    let im = z.im.as_f64();
    let sign = if im.is_sign_negative() { '-' } else { '+' };
    format!("{re:.16e}{sign}{:.16e}i", im.abs())
}
