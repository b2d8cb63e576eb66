//! Independent oracles and random inputs shared by the integration suites.

#![allow(dead_code)]

use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use tdsec_core::linalg::hermitian_eig;
use tdsec_core::{CqEnsemble, Entry, HermitianMatrix, Key, Matrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// `G G^dagger / tr`, with `G` a `dim x rank` complex Gaussian matrix.
pub fn random_density(rng: &mut ChaCha8Rng, dim: usize, rank: usize) -> HermitianMatrix {
    let g: Vec<Vec<C64>> = (0..dim).map(|_| (0..rank).map(|_| gaussian(rng)).collect()).collect();
    let m = Matrix::from_fn(dim, |i, j| (0..rank).map(|r| g[i][r] * g[j][r].conj()).sum());
    let tr = m.trace().re;
    HermitianMatrix::new(m.scale(1.0 / tr)).unwrap()
}

/// Dirichlet(1, ..., 1) weights.
pub fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Eigenvectors of a random Hermitian matrix: a random unitary.
pub fn random_unitary(rng: &mut ChaCha8Rng, dim: usize) -> Matrix {
    let a = Matrix::from_fn(dim, |_, _| gaussian(rng));
    hermitian_eig(&a.hermitian_part()).vectors
}

/// A commuting ensemble `rho^k = U diag(joint[k] / p(k)) U^dagger` together with
/// its joint table `joint[k][y] = p(k) <y|rho^k|y>` in the rotated basis.
pub fn random_commuting(rng: &mut ChaCha8Rng, n_bits: usize, dim: usize) -> (CqEnsemble, Vec<Vec<f64>>) {
    let n = 1 << n_bits;
    let flat = random_simplex(rng, n * dim);
    // Sparsify so that some outcomes single out keys and MAP ties are rare.
    let joint: Vec<Vec<f64>> = flat.chunks(dim).map(|c| c.iter().map(|x| x * x).collect()).collect();
    let total: f64 = joint.iter().flatten().sum();
    let joint: Vec<Vec<f64>> = joint.iter().map(|r| r.iter().map(|x| x / total).collect()).collect();
    let u = random_unitary(rng, dim);
    let entries = joint
        .iter()
        .enumerate()
        .map(|(k, row)| {
            let p: f64 = row.iter().sum();
            let diag = Matrix::diag(&row.iter().map(|x| x / p).collect::<Vec<_>>());
            let state = u.matmul(&diag).matmul(&u.adjoint()).hermitian_part();
            Entry { key: Key::from_index(k as u64, n_bits), prob: p, state }
        })
        .collect();
    (CqEnsemble::new(n_bits, entries).unwrap(), joint)
}

/// `sum_y max_k p(k, y)`: the best guessing probability from outcome `y`.
pub fn exact_map_success(joint: &[Vec<f64>]) -> f64 {
    let dim = joint[0].len();
    (0..dim).map(|y| joint.iter().map(|row| row[y]).fold(0.0, f64::max)).sum()
}

/// Projector onto the Bloch direction `(theta, phi)`.
fn bloch_projector(theta: f64, phi: f64) -> Matrix {
    let v = [C64::new((theta / 2.0).cos(), 0.0), C64::from_polar((theta / 2.0).sin(), phi)];
    Matrix::from_fn(2, |i, j| v[i] * v[j].conj())
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    while b - a > 1e-10 {
        let c = b - r * (b - a);
        let d = a + r * (b - a);
        if f(c) > f(d) {
            b = d;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

/// Best two-outcome qubit measurement found by a 180 x 360 grid over Bloch
/// angles, refined by alternating golden-section searches. Also considers
/// the two trivial measurements that always guess the same hypothesis.
pub fn bloch_search_helstrom(p0: f64, rho0: &HermitianMatrix, p1: f64, rho1: &HermitianMatrix) -> f64 {
    let success = |theta: f64, phi: f64| {
        let proj = bloch_projector(theta, phi);
        let rest = &Matrix::identity(2) - &proj;
        p0 * rho0.trace_product(&proj).re + p1 * rho1.trace_product(&rest).re
    };
    let pi = std::f64::consts::PI;
    let mut best = (0.0, 0.0, f64::NEG_INFINITY);
    for i in 0..180 {
        for j in 0..360 {
            let (t, p) = (pi * (i as f64 + 0.5) / 180.0, 2.0 * pi * j as f64 / 360.0);
            let s = success(t, p);
            if s > best.2 {
                best = (t, p, s);
            }
        }
    }
    let (mut t, mut p) = (best.0, best.1);
    let step = pi / 90.0;
    for _ in 0..30 {
        t = golden_max(|x| success(x, p), (t - step).max(0.0), (t + step).min(pi));
        p = golden_max(|x| success(t, x), p - step, p + step);
    }
    success(t, p).max(p0).max(p1)
}
