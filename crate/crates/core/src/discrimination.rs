//! Measurements that guess the key from Eve's state.
//!
//! [`optimal_povm`] is the general minimum-error solver. It runs the
//! fixed-point map
//!
//! ```text
//! Pi_k <- L^{-1/2} (W_k Pi_k W_k) L^{-1/2},   L = sum_j W_j Pi_j W_j,   W_k = p(k) rho^k
//! ```
//!
//! from the pretty-good measurement and stops once the Yuen-Kennedy-Lax
//! optimality conditions hold to within the requested residual, so every
//! converged answer carries its own certificate.

use serde::{Deserialize, Serialize};

use rand::Rng;

use crate::ensemble::{marginalize_subset, random_state, BitSubset, CqEnsemble, Key, Purity};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eig, HermitianMatrix, Matrix};
use crate::tol;

#[derive(Clone, Debug)]
pub struct PovmElement {
    pub operator: HermitianMatrix,
    pub guess: Key,
}

/// A finite POVM whose outcomes are key guesses.
#[derive(Clone, Debug)]
pub struct Povm {
    dim: usize,
    elements: Vec<PovmElement>,
}

impl Povm {
    /// Validates positivity of every element and completeness of the sum.
    pub fn new(elements: Vec<PovmElement>) -> Result<Self> {
        let povm = Self::assemble(elements)?;
        for (i, e) in povm.elements.iter().enumerate() {
            let min = hermitian_eig(&e.operator).min();
            if min < -tol::PSD {
                return Err(Error::InvalidPovm(format!("element {i} has eigenvalue {min:e}")));
            }
        }
        let defect = povm.completeness_defect();
        if defect > tol::POVM_COMPLETENESS {
            return Err(Error::InvalidPovm(format!("elements sum to identity only within {defect:e}")));
        }
        Ok(povm)
    }

    fn assemble(elements: Vec<PovmElement>) -> Result<Self> {
        let Some(first) = elements.first() else {
            return Err(Error::InvalidPovm("no elements".into()));
        };
        let dim = first.operator.dim();
        let bits = first.guess.len();
        for e in &elements {
            if e.operator.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.operator.dim() });
            }
            if e.guess.len() != bits {
                return Err(Error::InvalidPovm(format!("guess {} has {} bits, expected {bits}", e.guess, e.guess.len())));
            }
        }
        Ok(Povm { dim, elements })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[PovmElement] {
        &self.elements
    }

    /// Largest entry of `sum_i Pi_i - I`.
    pub fn completeness_defect(&self) -> f64 {
        let sum = self.elements.iter().fold(Matrix::zeros(self.dim), |acc, e| &acc + &e.operator);
        (&sum - &Matrix::identity(self.dim)).max_abs()
    }

    fn check_for(&self, ens: &CqEnsemble) -> Result<()> {
        if self.dim != ens.dim() {
            return Err(Error::DimensionMismatch { expected: ens.dim(), found: self.dim });
        }
        let bits = self.elements[0].guess.len();
        if bits != ens.n_bits() {
            return Err(Error::InvalidPovm(format!("guesses have {bits} bits but keys have {}", ens.n_bits())));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Helstrom,
    Map,
    Pgm,
    Iterative,
    PerBit,
    /// A measurement supplied by the caller.
    Given,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Helstrom => "helstrom",
            Method::Map => "map",
            Method::Pgm => "pgm",
            Method::Iterative => "iterative",
            Method::PerBit => "per-bit",
            Method::Given => "given",
        }
    }
}

/// Outcome of one attack on a key ensemble.
#[derive(Clone, Debug, Serialize)]
pub struct AttackResult {
    pub method: Method,
    /// Probability of guessing the whole target correctly. Absent for
    /// per-bit attacks on more than one bit, which use a different
    /// measurement for every bit and so have no joint guess.
    pub success_prob: Option<f64>,
    pub per_bit_error: Vec<f64>,
    /// Mean of `per_bit_error`.
    pub ber: f64,
    pub certificate_residual: Option<f64>,
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
}

impl AttackResult {
    fn evaluated(method: Method, success: f64, per_bit_error: Vec<f64>) -> Self {
        let ber = mean(&per_bit_error);
        AttackResult {
            method,
            success_prob: Some(success),
            per_bit_error,
            ber,
            certificate_residual: None,
            converged: None,
            iterations: None,
        }
    }

    /// True unless an iterative solve stopped short of its certificate.
    pub fn is_certified(&self) -> bool {
        self.converged.unwrap_or(true)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// A measurement together with its evaluation.
#[derive(Clone, Debug)]
pub struct Measurement {
    pub result: AttackResult,
    pub povm: Povm,
}

/// Success probability and per-bit error rates of `povm` on `ens`.
pub fn evaluate_measurement(ens: &CqEnsemble, povm: &Povm) -> Result<AttackResult> {
    povm.check_for(ens)?;
    let mut success = 0.0;
    let mut per_bit_error = vec![0.0; ens.n_bits()];
    for element in &povm.elements {
        for (_, entry) in ens.support() {
            let q = entry.prob * entry.state.inner(&element.operator);
            if element.guess == entry.key {
                success += q;
            }
            for (i, err) in per_bit_error.iter_mut().enumerate() {
                if element.guess.bit(i) != entry.key.bit(i) {
                    *err += q;
                }
            }
        }
    }
    Ok(AttackResult::evaluated(Method::Given, success, per_bit_error))
}

fn with_method(mut result: AttackResult, method: Method) -> AttackResult {
    result.method = method;
    result
}

/// Optimal discrimination of two hypotheses: success `1/2 + 1/2 ||p0 rho0 - p1 rho1||_1`.
///
/// The measurement projects onto the nonnegative eigenspace of
/// `p0 rho0 - p1 rho1` (guess `0`, zero eigenvalues included) and its complement (guess `1`).
pub fn helstrom_binary(
    p0: f64,
    rho0: &HermitianMatrix,
    p1: f64,
    rho1: &HermitianMatrix,
) -> Result<(f64, Povm)> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch { expected: rho0.dim(), found: rho1.dim() });
    }
    if p0 < 0.0 || p1 < 0.0 || (p0 + p1 - 1.0).abs() > tol::PROBABILITY_SUM {
        return Err(Error::OutOfRange(format!("priors {p0} and {p1} must be nonnegative and sum to 1")));
    }
    let gamma = rho0.scale(p0).sub(&rho1.scale(p1));
    let spectrum = hermitian_eig(&gamma);
    let zero = 1e-14 * spectrum.values.iter().map(|l| l.abs()).fold(1.0, f64::max);
    let trace_norm: f64 = spectrum.values.iter().map(|l| l.abs()).sum();
    let pi0 = spectrum.projector(|l| l >= -zero);
    let pi1 = spectrum.projector(|l| l < -zero);
    let povm = Povm {
        dim: rho0.dim(),
        elements: vec![
            PovmElement { operator: pi0, guess: Key::new(vec![false]) },
            PovmElement { operator: pi1, guess: Key::new(vec![true]) },
        ],
    };
    Ok(((0.5 + 0.5 * trace_norm).min(1.0), povm))
}

/// Basis in which every state of a commuting ensemble is diagonal.
pub(crate) fn common_eigenbasis(ens: &CqEnsemble) -> Result<Matrix> {
    let max_commutator = ens.max_commutator();
    if max_commutator > tol::COMMUTATION {
        return Err(Error::NonCommuting(max_commutator));
    }
    // A generic combination of commuting operators shares their eigenvectors.
    for attempt in 0..4 {
        let mix = ens.entries().iter().enumerate().fold(HermitianMatrix::zeros(ens.dim()), |acc, (k, e)| {
            let c = 1.0 + ((k + 1 + 7 * attempt) as f64 * 0.618_033_988_749_894_9).fract();
            acc.add(&e.state.scale(c))
        });
        let basis = hermitian_eig(&mix).vectors;
        let diagonal = ens.entries().iter().all(|e| {
            let rotated = basis.adjoint().matmul(&e.state).matmul(&basis);
            (0..ens.dim()).all(|i| (0..ens.dim()).all(|j| i == j || rotated[(i, j)].norm() <= 1e-7))
        });
        if diagonal {
            return Ok(basis);
        }
    }
    Err(Error::NonCommuting(max_commutator))
}

/// Exact maximum-a-posteriori guessing for ensembles whose states commute.
///
/// Each outcome of the common-eigenbasis measurement is assigned to the key
/// maximizing `p(k) <x|rho^k|x>`, ties going to the lexicographically smallest key.
pub fn map_success_classical(ens: &CqEnsemble) -> Result<Measurement> {
    let basis = common_eigenbasis(ens)?;
    let dim = ens.dim();
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); ens.entries().len()];
    for x in 0..dim {
        let column: Vec<_> = (0..dim).map(|r| basis[(r, x)]).collect();
        let projector = HermitianMatrix::projector(&column);
        let mut best: Option<(usize, f64)> = None;
        for (k, entry) in ens.support() {
            let weight = entry.prob * entry.state.inner(&projector);
            if best.is_none_or(|(_, b)| weight > b + 1e-15) {
                best = Some((k, weight));
            }
        }
        let (k, _) = best.expect("ensembles have at least one key of positive probability");
        assigned[k].push(x);
    }
    let elements = assigned
        .into_iter()
        .enumerate()
        .filter(|(_, xs)| !xs.is_empty())
        .map(|(k, xs)| {
            let operator = xs.iter().fold(HermitianMatrix::zeros(dim), |acc, &x| {
                let column: Vec<_> = (0..dim).map(|r| basis[(r, x)]).collect();
                acc.add(&HermitianMatrix::projector(&column))
            });
            PovmElement { operator, guess: ens.entries()[k].key.clone() }
        })
        .collect();
    let povm = Povm::assemble(elements)?;
    let result = with_method(evaluate_measurement(ens, &povm)?, Method::Map);
    Ok(Measurement { result, povm })
}

/// Threshold below which an eigenvalue of a positive operator counts as zero.
fn support_threshold(max_eigenvalue: f64) -> f64 {
    1e-12 * max_eigenvalue.max(f64::MIN_POSITIVE)
}

/// Square-root measurement `rho_E^{-1/2} p(k) rho^k rho_E^{-1/2}`.
///
/// The projector onto the kernel of `rho_E` is added to the element of the
/// lexicographically smallest key with positive probability.
pub fn pretty_good_measurement(ens: &CqEnsemble) -> Measurement {
    let support: Vec<usize> = ens.support().map(|(k, _)| k).collect();
    let weighted: Vec<HermitianMatrix> = support.iter().map(|&k| ens.weighted_state(k)).collect();
    let operators = normalize_elements(&weighted);
    let povm = povm_from_operators(ens, &support, operators);
    let result = with_method(evaluate_measurement(ens, &povm).expect("dimensions agree"), Method::Pgm);
    Measurement { result, povm }
}

/// `S X_k S` with `S = (sum_j X_j)^{-1/2}` on its support; the kernel projector goes to element 0.
fn normalize_elements(xs: &[HermitianMatrix]) -> Vec<HermitianMatrix> {
    let dim = xs[0].dim();
    let total = xs.iter().fold(HermitianMatrix::zeros(dim), |acc, x| acc.add(x));
    let spectrum = hermitian_eig(&total);
    let floor = support_threshold(spectrum.max());
    let inv_sqrt = spectrum.map(|l| if l > floor { 1.0 / l.sqrt() } else { 0.0 });
    let kernel = spectrum.projector(|l| l <= floor);
    let mut out: Vec<HermitianMatrix> = xs.iter().map(|x| inv_sqrt.sandwich(x)).collect();
    out[0] = out[0].add(&kernel);
    out
}

fn povm_from_operators(ens: &CqEnsemble, support: &[usize], operators: Vec<HermitianMatrix>) -> Povm {
    let elements = support
        .iter()
        .zip(operators)
        .map(|(&k, operator)| PovmElement { operator, guess: ens.entries()[k].key.clone() })
        .collect();
    Povm { dim: ens.dim(), elements }
}

/// A random POVM with `outcomes` elements `S^{-1/2} A_j S^{-1/2}`, each `A_j`
/// a random mixed state and `S = sum_j A_j`. Outcome `j` guesses key `j mod 2^n_bits`.
pub fn random_povm(rng: &mut impl Rng, dim: usize, n_bits: usize, outcomes: usize) -> Result<Povm> {
    if outcomes == 0 || dim == 0 {
        return Err(Error::InvalidPovm("a POVM needs at least one outcome and dimension".into()));
    }
    if n_bits == 0 || n_bits > 16 {
        return Err(Error::OutOfRange(format!("random POVM guesses need 1 to 16 key bits (got {n_bits})")));
    }
    let seeds: Vec<HermitianMatrix> = (0..outcomes).map(|_| random_state(rng, dim, Purity::Mixed)).collect();
    let elements = normalize_elements(&seeds)
        .into_iter()
        .enumerate()
        .map(|(j, operator)| PovmElement { operator, guess: Key::from_index((j % (1 << n_bits)) as u64, n_bits) })
        .collect();
    Povm::assemble(elements)
}

/// Violation of the Yuen-Kennedy-Lax optimality conditions.
///
/// With `Y = sum_k p(k) rho^k Pi_k`, returns the largest negative-eigenvalue
/// magnitude of `(Y + Y^dagger)/2 - p(k) rho^k` over all keys (absent keys
/// contribute `W = 0`), plus the largest entry of `Y - Y^dagger`. Zero exactly
/// at an optimal measurement.
pub fn ykl_residual(ens: &CqEnsemble, povm: &Povm) -> Result<f64> {
    povm.check_for(ens)?;
    let mut upsilon = Matrix::zeros(ens.dim());
    for element in &povm.elements {
        if let Some(entry) = ens.find(&element.guess) {
            let w = entry.state.scale(entry.prob);
            upsilon = &upsilon + &w.matmul(&element.operator);
        }
    }
    let candidates = ens.weighted_states();
    Ok(ykl_from_upsilon(&upsilon, candidates.iter()))
}

fn ykl_from_upsilon<'a>(upsilon: &Matrix, candidates: impl Iterator<Item = &'a HermitianMatrix>) -> f64 {
    let asymmetry = (upsilon - &upsilon.adjoint()).max_abs();
    let sym = upsilon.hermitian_part();
    let mut worst = (-hermitian_eig(&sym).min()).max(0.0);
    for w in candidates {
        worst = worst.max(-hermitian_eig(&sym.sub(w)).min());
    }
    worst + asymmetry
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    /// Target YKL residual.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-8, max_iter: 5000 }
    }
}

/// How often the solver tries to snap onto the YKL support structure.
const POLISH_EVERY: usize = 25;

struct Iterate {
    pis: Vec<HermitianMatrix>,
    success: f64,
}

fn success_of(ws: &[HermitianMatrix], pis: &[HermitianMatrix]) -> f64 {
    ws.iter().zip(pis).map(|(w, p)| w.inner(p)).sum()
}

fn residual_of(ws: &[HermitianMatrix], pis: &[HermitianMatrix]) -> f64 {
    let upsilon = ws.iter().zip(pis).fold(Matrix::zeros(ws[0].dim()), |acc, (w, p)| &acc + &w.matmul(p));
    ykl_from_upsilon(&upsilon, ws.iter())
}

/// One fixed-point step with every `W_k` shifted by `shift * I`.
///
/// The shift leaves the optimum unchanged (it adds `shift` to every
/// measurement's success) and shortens the step as it grows.
fn fixed_point_step(ws: &[HermitianMatrix], pis: &[HermitianMatrix], shift: f64) -> Vec<HermitianMatrix> {
    let dim = ws[0].dim();
    let shifted: Vec<HermitianMatrix> = if shift == 0.0 {
        ws.to_vec()
    } else {
        ws.iter().map(|w| w.add(&HermitianMatrix::identity(dim).scale(shift))).collect()
    };
    let sandwiches: Vec<HermitianMatrix> = shifted.iter().zip(pis).map(|(a, p)| a.sandwich(p)).collect();
    normalize_elements(&sandwiches)
}

/// Drops each element onto the near-kernel of `Y - W_k` and renormalizes.
///
/// At an optimum `Pi_k` lives in the kernel of `Y - W_k`; near one this
/// removes the residual weight that the multiplicative iteration only
/// shrinks geometrically.
fn polish(ws: &[HermitianMatrix], pis: &[HermitianMatrix], cutoff: f64) -> Vec<HermitianMatrix> {
    let dim = ws[0].dim();
    let upsilon = ws.iter().zip(pis).fold(Matrix::zeros(dim), |acc, (w, p)| &acc + &w.matmul(p));
    let sym = upsilon.hermitian_part();
    let projected: Vec<HermitianMatrix> = ws
        .iter()
        .zip(pis)
        .map(|(w, p)| {
            let q = hermitian_eig(&sym.sub(w)).projector(|l| l <= cutoff);
            q.sandwich(p)
        })
        .collect();
    normalize_elements(&projected)
}

/// Minimum-error measurement for the whole key, certified by the YKL residual.
///
/// Starts from the pretty-good measurement. A step that would lower the
/// success probability by more than `1e-12` is rejected and retried with a
/// larger shift. Stops when the residual reaches `opts.tol`; otherwise returns
/// the best iterate with `converged = Some(false)` and its last residual.
pub fn optimal_povm(ens: &CqEnsemble, opts: &SolverOptions) -> Result<Measurement> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::OutOfRange(format!("solver tolerance {} must be positive", opts.tol)));
    }
    let support: Vec<usize> = ens.support().map(|(k, _)| k).collect();
    let ws: Vec<HermitianMatrix> = support.iter().map(|&k| ens.weighted_state(k)).collect();
    let scale = ws.iter().map(|w| hermitian_eig(w).max()).fold(0.0, f64::max);

    let seed = normalize_elements(&ws);
    let mut current = Iterate { success: success_of(&ws, &seed), pis: seed };
    let mut residual = residual_of(&ws, &current.pis);
    let mut shift = 0.0;
    let mut iterations = 0;

    while residual > opts.tol && iterations < opts.max_iter {
        iterations += 1;
        let candidate = fixed_point_step(&ws, &current.pis, shift);
        let success = success_of(&ws, &candidate);
        if success < current.success - 1e-12 {
            shift = if shift == 0.0 { scale } else { 2.0 * shift };
            continue;
        }
        current = Iterate { pis: candidate, success };
        shift = if shift < 1e-3 * scale { 0.0 } else { 0.5 * shift };
        residual = residual_of(&ws, &current.pis);

        if residual > opts.tol && iterations % POLISH_EVERY == 0 {
            if let Some((pis, r, s)) = try_polish(&ws, &current, scale, opts.tol) {
                current = Iterate { pis, success: s };
                residual = r;
            }
        }
    }
    // A final snap usually removes what is left of the residual entirely.
    if let Some((pis, r, s)) = try_polish(&ws, &current, scale, residual) {
        current = Iterate { pis, success: s };
        residual = r;
    }

    let povm = povm_from_operators(ens, &support, current.pis);
    let mut result = with_method(evaluate_measurement(ens, &povm)?, Method::Iterative);
    result.certificate_residual = Some(residual);
    result.converged = Some(residual <= opts.tol);
    result.iterations = Some(iterations);
    Ok(Measurement { result, povm })
}

/// Polishes at a ladder of cutoffs and keeps the smallest residual that is
/// at most `target`, provided the success probability does not drop.
fn try_polish(ws: &[HermitianMatrix], current: &Iterate, scale: f64, target: f64) -> Option<(Vec<HermitianMatrix>, f64, f64)> {
    let mut best: Option<(Vec<HermitianMatrix>, f64, f64)> = None;
    for exponent in [2, 3, 4, 5, 6, 7, 8] {
        let cutoff = scale * 10f64.powi(-exponent);
        let pis = polish(ws, &current.pis, cutoff);
        let success = success_of(ws, &pis);
        if success < current.success - 1e-12 {
            continue;
        }
        let residual = residual_of(ws, &pis);
        if residual <= target && best.as_ref().is_none_or(|(_, r, _)| residual < *r) {
            best = Some((pis, residual, success));
        }
    }
    best
}

/// Optimal success probability for each key bit on its own.
///
/// Bit `i` is attacked with the Helstrom measurement on the single-bit marginal.
pub fn per_bit_optimal_ber(ens: &CqEnsemble) -> Result<Vec<f64>> {
    (0..ens.n_bits())
        .map(|i| {
            let marginal = marginalize_subset(ens, &BitSubset::new(vec![i])?)?;
            let zero = marginal.find(&Key::new(vec![false]));
            let one = marginal.find(&Key::new(vec![true]));
            let (p0, rho0, p1, rho1) = match (zero, one) {
                (Some(a), Some(b)) => (a.prob, &a.state, b.prob, &b.state),
                (Some(a), None) => (1.0, &a.state, 0.0, &a.state),
                (None, Some(b)) => (0.0, &b.state, 1.0, &b.state),
                (None, None) => unreachable!("marginals keep every key of positive probability"),
            };
            let total = p0 + p1;
            helstrom_binary(p0 / total, rho0, p1 / total, rho1).map(|(success, _)| success)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{build_locking_example, build_random_ensemble, ClassicalDistribution, Entry, Purity};
    use crate::linalg::C64;
    use proptest::prelude::*;

    fn key(s: &str) -> Key {
        s.parse().unwrap()
    }

    fn real_ket(v: &[f64]) -> Vec<C64> {
        v.iter().map(|&x| C64::new(x, 0.0)).collect()
    }

    fn pure(v: &[f64]) -> HermitianMatrix {
        HermitianMatrix::projector(&real_ket(v))
    }

    fn trine() -> CqEnsemble {
        let entries = (0..3)
            .map(|j| {
                let a = 2.0 * std::f64::consts::PI * j as f64 / 3.0;
                Entry { key: Key::from_index(j, 2), prob: 1.0 / 3.0, state: pure(&[a.cos(), a.sin()]) }
            })
            .collect();
        CqEnsemble::new(2, entries).unwrap()
    }

    #[test]
    fn helstrom_examples() {
        let (s, povm) = helstrom_binary(0.5, &pure(&[1., 0.]), 0.5, &pure(&[0., 1.])).unwrap();
        assert!((s - 1.0).abs() < 1e-15);
        assert!(povm.completeness_defect() < 1e-14);

        let rho = HermitianMatrix::diag(&[0.3, 0.7]);
        let (s, _) = helstrom_binary(0.7, &rho, 0.3, &rho).unwrap();
        assert!((s - 0.7).abs() < 1e-15);

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (s, _) = helstrom_binary(0.5, &pure(&[1., 0.]), 0.5, &pure(&[h, h])).unwrap();
        assert!((s - 0.853_553_390_593_273_7).abs() < 1e-12, "{s}");

        assert!(helstrom_binary(0.5, &pure(&[1., 0.]), 0.5, &pure(&[1., 0., 0.])).is_err());
    }

    #[test]
    fn helstrom_ties_go_to_zero() {
        let rho = HermitianMatrix::maximally_mixed(2);
        let (s, povm) = helstrom_binary(0.5, &rho, 0.5, &rho).unwrap();
        assert!((s - 0.5).abs() < 1e-15);
        assert_eq!(*povm.elements()[0].operator, Matrix::identity(2));
    }

    #[test]
    fn helstrom_is_certified() {
        let ens = build_random_ensemble(1, 3, 11, Purity::Mixed).unwrap();
        let [a, b] = [&ens.entries()[0], &ens.entries()[1]];
        let (_, povm) = helstrom_binary(a.prob, &a.state, b.prob, &b.state).unwrap();
        assert!(ykl_residual(&ens, &povm).unwrap() <= 1e-10);
    }

    #[test]
    fn map_examples() {
        let flat = CqEnsemble::ideal(2, HermitianMatrix::maximally_mixed(3)).unwrap();
        let m = map_success_classical(&flat).unwrap();
        assert!((m.result.success_prob.unwrap() - 0.25).abs() < 1e-15);

        let biased = crate::ensemble::build_biased_classical(2, 0.3).unwrap();
        let records = CqEnsemble::classical(2, &biased).unwrap();
        let m = map_success_classical(&records).unwrap();
        assert!((m.result.success_prob.unwrap() - 1.0).abs() < 1e-14);
        assert!(m.result.ber < 1e-14);

        assert!(matches!(map_success_classical(&build_locking_example()), Err(Error::NonCommuting(_))));
    }

    #[test]
    fn map_biased_posterior() {
        // Y uniform over N outcomes; p(k|y) is the biased table rotated by y.
        let (n_bits, eps) = (3, 0.4);
        let posterior = crate::ensemble::build_biased_classical(n_bits, eps).unwrap();
        let n = 1 << n_bits;
        let joint: Vec<Vec<f64>> =
            (0..n).map(|k| (0..n).map(|y| posterior.probs()[(k + y) % n] / n as f64).collect()).collect();
        let ens = CqEnsemble::from_joint_table(n_bits, &joint).unwrap();
        let m = map_success_classical(&ens).unwrap();
        assert!((m.result.success_prob.unwrap() - (1.0 + eps) / n as f64).abs() < 1e-14);
    }

    #[test]
    fn pgm_examples() {
        let orth = CqEnsemble::classical(2, &ClassicalDistribution::uniform(4)).unwrap();
        let m = pretty_good_measurement(&orth);
        assert!((m.result.success_prob.unwrap() - 1.0).abs() < 1e-14);

        let m = pretty_good_measurement(&build_locking_example());
        let s = m.result.success_prob.unwrap();
        assert!((0.25..=0.5 + 1e-12).contains(&s), "{s}");
        assert!(m.povm.completeness_defect() <= 1e-8);
        assert!(Povm::new(m.povm.elements().to_vec()).is_ok());
    }

    #[test]
    fn pgm_can_lose_to_blind_guessing() {
        // Identical states: the square-root measurement guesses k with probability p(k).
        let probs = ClassicalDistribution::new(vec![0.9, 0.1]).unwrap();
        let ens = CqEnsemble::with_common_state(1, &probs, HermitianMatrix::maximally_mixed(2)).unwrap();
        let pgm = pretty_good_measurement(&ens).result.success_prob.unwrap();
        assert!((pgm - 0.82).abs() < 1e-12);
        let opt = optimal_povm(&ens, &SolverOptions::default()).unwrap();
        assert!((opt.result.success_prob.unwrap() - 0.9).abs() < 1e-6);
    }

    #[test]
    fn optimal_trine() {
        let ens = trine();
        let m = optimal_povm(&ens, &SolverOptions::default()).unwrap();
        assert!((m.result.success_prob.unwrap() - 2.0 / 3.0).abs() < 1e-6);
        assert!(m.result.certificate_residual.unwrap() <= 1e-8);
        let pgm = pretty_good_measurement(&ens);
        assert!((pgm.result.success_prob.unwrap() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn optimal_locking() {
        let m = optimal_povm(&build_locking_example(), &SolverOptions::default()).unwrap();
        assert!((m.result.success_prob.unwrap() - 0.5).abs() < 1e-6);
        assert_eq!(m.result.converged, Some(true));
        assert!(m.result.certificate_residual.unwrap() <= 1e-8);
    }

    #[test]
    fn optimal_rejects_bad_tolerance() {
        let opts = SolverOptions { tol: 0.0, max_iter: 10 };
        assert!(optimal_povm(&trine(), &opts).is_err());
    }

    #[test]
    fn ykl_examples() {
        let ens = build_random_ensemble(2, 2, 5, Purity::Pure).unwrap();
        let blind = Povm::new(vec![PovmElement { operator: HermitianMatrix::identity(2), guess: key("00") }]).unwrap();
        assert!(ykl_residual(&ens, &blind).unwrap() > 1e-3);

        let m = optimal_povm(&ens, &SolverOptions::default()).unwrap();
        let forward = ykl_residual(&ens, &m.povm).unwrap();
        let mut reversed = m.povm.elements().to_vec();
        reversed.reverse();
        let backward = ykl_residual(&ens, &Povm::new(reversed).unwrap()).unwrap();
        assert!((forward - backward).abs() < 1e-15);
    }

    #[test]
    fn evaluate_examples() {
        let orth = CqEnsemble::classical(1, &ClassicalDistribution::uniform(2)).unwrap();
        let perfect = Povm::new(vec![
            PovmElement { operator: HermitianMatrix::diag(&[1., 0.]), guess: key("0") },
            PovmElement { operator: HermitianMatrix::diag(&[0., 1.]), guess: key("1") },
        ])
        .unwrap();
        let r = evaluate_measurement(&orth, &perfect).unwrap();
        assert!((r.success_prob.unwrap() - 1.0).abs() < 1e-15 && r.ber == 0.0);

        let flat = CqEnsemble::ideal(2, HermitianMatrix::identity(1)).unwrap();
        let blind = Povm::new(vec![PovmElement { operator: HermitianMatrix::identity(1), guess: key("10") }]).unwrap();
        let r = evaluate_measurement(&flat, &blind).unwrap();
        assert!((r.success_prob.unwrap() - 0.25).abs() < 1e-15);
        assert!((r.ber - 0.5).abs() < 1e-15);

        assert!(evaluate_measurement(&orth, &blind).is_err());
    }

    #[test]
    fn evaluate_locking_outcome_table() {
        // Second qubit in the computational basis: |1> -> guess 11, |3> -> guess 10.
        let povm = Povm::new(vec![
            PovmElement { operator: HermitianMatrix::diag(&[1., 0., 1., 0.]), guess: key("11") },
            PovmElement { operator: HermitianMatrix::diag(&[0., 1., 0., 1.]), guess: key("10") },
        ])
        .unwrap();
        let r = evaluate_measurement(&build_locking_example(), &povm).unwrap();
        assert!((r.success_prob.unwrap() - 0.5).abs() < 1e-15);
        assert!((r.per_bit_error[0] - 0.5).abs() < 1e-15);
        assert!((r.per_bit_error[1] - 0.25).abs() < 1e-15);
        assert!((r.ber - 0.375).abs() < 1e-15);
    }

    #[test]
    fn povm_validation() {
        let half = HermitianMatrix::maximally_mixed(2);
        assert!(Povm::new(vec![PovmElement { operator: half.clone(), guess: key("0") }]).is_err());
        let negative = HermitianMatrix::diag(&[1.5, -0.5]);
        let complement = HermitianMatrix::diag(&[-0.5, 1.5]);
        assert!(Povm::new(vec![
            PovmElement { operator: negative, guess: key("0") },
            PovmElement { operator: complement, guess: key("1") },
        ])
        .is_err());
    }

    #[test]
    fn per_bit_examples() {
        let ideal = CqEnsemble::ideal(3, HermitianMatrix::maximally_mixed(2)).unwrap();
        for s in per_bit_optimal_ber(&ideal).unwrap() {
            assert!((s - 0.5).abs() < 1e-15);
        }
        let locking = per_bit_optimal_ber(&build_locking_example()).unwrap();
        assert!((locking[0] - 0.5).abs() < 1e-12);
        assert!((locking[1] - 0.853_553_390_593_273_7).abs() < 1e-12);
    }

    fn random_ensemble() -> impl Strategy<Value = CqEnsemble> {
        (1usize..4, 1usize..5, any::<u64>(), any::<bool>()).prop_map(|(n, d, seed, pure)| {
            build_random_ensemble(n, d, seed, if pure { Purity::Pure } else { Purity::Mixed }).unwrap()
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn solvers_beat_blind_guessing_and_respect_d(ens in random_ensemble()) {
            let blind = ens.prior().into_iter().fold(0.0, f64::max);
            let pgm = pretty_good_measurement(&ens).result.success_prob.unwrap();
            let opt = optimal_povm(&ens, &SolverOptions::default()).unwrap();
            let best = opt.result.success_prob.unwrap();
            prop_assert!(best >= blind - 1e-9);
            prop_assert!(best >= pgm - 1e-9);
            let d = crate::ensemble::compute_d(&ens);
            prop_assert!(best <= 1.0 / ens.key_space_size() + d + 1e-9);
        }

        #[test]
        fn per_bit_attack_is_bitwise_optimal(ens in random_ensemble()) {
            let per_bit = per_bit_optimal_ber(&ens).unwrap();
            let per_bit_ber = per_bit.iter().map(|s| 1.0 - s).sum::<f64>() / per_bit.len() as f64;
            let opt = optimal_povm(&ens, &SolverOptions::default()).unwrap();
            prop_assert!(per_bit_ber <= opt.result.ber + 1e-9);
        }
    }
}
