//! Dense complex linear algebra at small dimension.
//!
//! Everything here works on square row-major matrices of dimension at most
//! [`tol::MAX_DIM`]. The eigensolver is a cyclic complex Jacobi method, which
//! converges unconditionally for Hermitian input and is plenty fast at the
//! sizes this crate deals with.

use std::fmt;
use std::ops::{Add, Deref, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    dim: usize,
    data: Vec<C64>,
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Matrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Builds a matrix from rows; every row must have as many entries as there are rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::OutOfRange("matrix must have at least one row".into()));
        }
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: row.len() });
            }
            data.extend_from_slice(row);
        }
        Ok(Self { dim, data })
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = C64::new(v, 0.0);
        }
        m
    }

    /// The outer product `|v><v|`.
    pub fn outer(v: &[C64]) -> Self {
        Self::from_fn(v.len(), |i, j| v[i] * v[j].conj())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|z| z * s).collect() }
    }

    pub fn matmul(&self, other: &Matrix) -> Matrix {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            let out_row = &mut out[i * n..(i + 1) * n];
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let b_row = &other.data[k * n..(k + 1) * n];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Matrix { dim: n, data: out }
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &Matrix) -> C64 {
        assert_eq!(self.dim, other.dim, "trace_product dimension mismatch");
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self.data[i * n + k] * other.data[k * n + i];
            }
        }
        acc
    }

    /// Kronecker product, with no dimension limit.
    pub fn kron(&self, other: &Matrix) -> Matrix {
        let (n, m) = (self.dim, other.dim);
        Matrix::from_fn(n * m, |i, j| self[(i / m, j / m)] * other[(i % m, j % m)])
    }

    /// Largest `|a_ij - conj(a_ji)|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.dim {
            for j in i..self.dim {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `(M + M^dagger) / 2`, the nearest Hermitian matrix. Never fails.
    pub fn hermitian_part(&self) -> HermitianMatrix {
        let m = Matrix::from_fn(self.dim, |i, j| {
            if i == j {
                C64::new(self[(i, i)].re, 0.0)
            } else {
                (self[(i, j)] + self[(j, i)].conj()) * 0.5
            }
        });
        HermitianMatrix(m)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = C64;
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &Matrix {
    type Output = Matrix;
    fn add(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        Matrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &Matrix) -> Matrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        Matrix { dim: self.dim, data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect() }
    }
}

impl Mul for &Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &Matrix) -> Matrix {
        self.matmul(rhs)
    }
}

/// A matrix equal to its own conjugate transpose.
///
/// Construction through [`HermitianMatrix::new`] checks symmetry against
/// [`tol::HERMITIAN`] and then stores the exactly symmetrized matrix.
#[derive(Clone, PartialEq)]
pub struct HermitianMatrix(Matrix);

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl Deref for HermitianMatrix {
    type Target = Matrix;
    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl HermitianMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        let max_asymmetry = m.max_asymmetry();
        if max_asymmetry.is_nan() || max_asymmetry > tol::HERMITIAN {
            return Err(Error::NotHermitian { max_asymmetry });
        }
        Ok(m.hermitian_part())
    }

    pub fn zeros(dim: usize) -> Self {
        Self(Matrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Matrix::identity(dim))
    }

    /// Identity divided by the dimension.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self(Matrix::identity(dim).scale(1.0 / dim as f64))
    }

    pub fn diag(values: &[f64]) -> Self {
        Self(Matrix::diag(values))
    }

    /// Projector onto the (not necessarily normalized) vector `v`.
    pub fn projector(v: &[C64]) -> Self {
        Matrix::outer(v).hermitian_part()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        Self(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        Self(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        Self(self.0.scale(s))
    }

    /// Real trace.
    pub fn trace_re(&self) -> f64 {
        self.0.trace().re
    }

    /// `tr(self * other)` for two Hermitian matrices, which is real.
    pub fn inner(&self, other: &HermitianMatrix) -> f64 {
        self.0.trace_product(&other.0).re
    }

    /// `B * self * B^dagger`, symmetrized.
    pub fn congruence(&self, b: &Matrix) -> HermitianMatrix {
        b.matmul(&self.0).matmul(&b.adjoint()).hermitian_part()
    }

    /// `self * X * self` for Hermitian `X`, symmetrized.
    pub fn sandwich(&self, x: &HermitianMatrix) -> HermitianMatrix {
        self.0.matmul(&x.0).matmul(&self.0).hermitian_part()
    }

    pub fn eig(&self) -> Spectrum {
        hermitian_eig(self)
    }
}

/// Eigenvalues in descending order with orthonormal eigenvectors as columns.
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        *self.values.last().expect("spectrum is never empty")
    }

    pub fn max(&self) -> f64 {
        self.values[0]
    }

    /// Column `i` of the eigenvector matrix.
    pub fn vector(&self, i: usize) -> Vec<C64> {
        (0..self.dim()).map(|r| self.vectors[(r, i)]).collect()
    }

    /// `V f(Lambda) V^dagger`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.dim();
        let weights: Vec<f64> = self.values.iter().map(|&l| f(l)).collect();
        let mut out = Matrix::zeros(n);
        for (k, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * self.vectors[(j, k)].conj();
                }
            }
        }
        out.hermitian_part()
    }

    pub fn reconstruct(&self) -> HermitianMatrix {
        self.map(|l| l)
    }

    /// Projector onto eigenvectors whose eigenvalue satisfies `keep`.
    pub fn projector(&self, keep: impl Fn(f64) -> bool) -> HermitianMatrix {
        self.map(|l| if keep(l) { 1.0 } else { 0.0 })
    }
}

const MAX_SWEEPS: usize = 100;

/// Full eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Deterministic: identical input gives bit-identical output.
pub fn hermitian_eig(m: &HermitianMatrix) -> Spectrum {
    let n = m.dim();
    let mut a = m.as_slice().to_vec();
    let mut v = Matrix::identity(n);

    // Entries below this are dropped outright; they cannot move any eigenvalue
    // by more than a few ulps of the matrix norm.
    let floor = f64::EPSILON * 1e-6 * m.frobenius_norm();

    for sweep in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|p| (p + 1..n).map(move |q| (p, q)))
            .map(|(p, q)| a[p * n + q].norm_sqr())
            .sum();
        if off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let g = apq.norm();
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                let negligible = sweep > 3 && app.abs() + 100.0 * g == app.abs() && aqq.abs() + 100.0 * g == aqq.abs();
                if g <= floor || negligible {
                    a[p * n + q] = ZERO;
                    a[q * n + p] = ZERO;
                    continue;
                }
                let phase = apq / g;
                let tau = (aqq - app) / (2.0 * g);
                let t = if tau.is_infinite() {
                    0.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ph_conj = phase.conj();

                // A <- A U with U = [[c, s], [-s conj(phase), c conj(phase)]] on (p, q).
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * c - akq * ph_conj * s;
                    a[k * n + q] = akp * s + akq * ph_conj * c;
                }
                // A <- U^dagger A.
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = apk * c - aqk * phase * s;
                    a[q * n + k] = apk * s + aqk * phase * c;
                }
                a[p * n + q] = ZERO;
                a[q * n + p] = ZERO;
                a[p * n + p].im = 0.0;
                a[q * n + q].im = 0.0;

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ph_conj * s;
                    v[(k, q)] = vkp * s + vkq * ph_conj * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].re.total_cmp(&a[i * n + i].re).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = Matrix::from_fn(n, |r, c| v[(r, order[c])]);
    Spectrum { values, vectors }
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(m: &HermitianMatrix) -> f64 {
    hermitian_eig(m).values.iter().map(|l| l.abs()).sum()
}

/// Half the trace norm of `a - b`.
pub fn trace_distance(a: &HermitianMatrix, b: &HermitianMatrix) -> f64 {
    0.5 * trace_norm(&a.sub(b))
}

/// Kronecker product, rejected when the result would exceed [`tol::MAX_DIM`].
pub fn tensor(a: &HermitianMatrix, b: &HermitianMatrix) -> Result<HermitianMatrix> {
    tensor_with_limit(a, b, tol::MAX_DIM)
}

pub fn tensor_with_limit(a: &HermitianMatrix, b: &HermitianMatrix, max_dim: usize) -> Result<HermitianMatrix> {
    let dim = a.dim().saturating_mul(b.dim());
    if dim > max_dim {
        return Err(Error::DimensionOverflow { dim, max: max_dim });
    }
    Ok(HermitianMatrix(a.kron(b)))
}

pub fn is_positive_semidefinite(m: &HermitianMatrix, tol: f64) -> bool {
    hermitian_eig(m).min() >= -tol
}

/// Checks unit trace and positivity within the shared tolerances.
pub fn check_density_operator(rho: &HermitianMatrix) -> Result<()> {
    let tr = rho.trace_re();
    if (tr - 1.0).abs() > tol::PROBABILITY_SUM {
        return Err(Error::NotDensityOperator(format!("trace {tr} differs from 1")));
    }
    let min = hermitian_eig(rho).min();
    if min < -tol::PSD {
        return Err(Error::NotDensityOperator(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Neumaier-compensated sum, accurate to a few ulps regardless of length.
pub fn stable_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0_f64, 0.0_f64);
    for x in xs {
        let t = sum + x;
        carry += if sum.abs() >= x.abs() { (sum - t) + x } else { (x - t) + sum };
        sum = t;
    }
    sum + carry
}

/// Shannon entropy of a list of weights in bits, with `0 log 0 = 0`.
pub(crate) fn entropy_bits(weights: impl IntoIterator<Item = f64>) -> f64 {
    stable_sum(weights.into_iter().filter(|&p| p > 0.0).map(|p| -p * p.log2()))
}

/// `-tr(rho log2 rho)`.
pub fn von_neumann_entropy(rho: &HermitianMatrix) -> Result<f64> {
    check_density_operator(rho)?;
    Ok(entropy_bits(hermitian_eig(rho).values).max(0.0))
}

/// Tensor product of kets.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect()
}

/// Largest entry modulus of the commutator `[a, b]`.
pub fn commutator_defect(a: &Matrix, b: &Matrix) -> f64 {
    (&a.matmul(b) - &b.matmul(a)).max_abs()
}
