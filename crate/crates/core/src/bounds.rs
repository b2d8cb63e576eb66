//! Scalar bounds relating `d` to attack performance.
//!
//! All entropies are in bits. `log e` in the bit-error deviation bound is
//! `log2 e`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::ensemble::{ClassicalDistribution, CqEnsemble};
use crate::discrimination::common_eigenbasis;
use crate::error::{Error, Result};
use crate::linalg::{entropy_bits, hermitian_eig, stable_sum};

/// A named bound value together with the formula and inputs that produced it.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub formula_ref: String,
    pub inputs: BTreeMap<String, f64>,
    /// Value actually achieved by an attack, when the row compares one against the bound.
    pub achieved: Option<f64>,
    /// Whether `achieved` respects the bound (within the stated slack).
    pub holds: Option<bool>,
    pub note: Option<String>,
}

impl BoundReport {
    pub fn new(name: impl Into<String>, value: f64, formula_ref: impl Into<String>) -> Self {
        debug_assert!(value.is_finite());
        BoundReport {
            name: name.into(),
            value,
            formula_ref: formula_ref.into(),
            inputs: BTreeMap::new(),
            achieved: None,
            holds: None,
            note: None,
        }
    }

    pub fn input(mut self, name: &str, value: f64) -> Self {
        self.inputs.insert(name.to_owned(), value);
        self
    }

    pub fn note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Records an achieved value that must not exceed `value + slack`.
    pub fn achieved_at_most(mut self, achieved: f64, slack: f64) -> Self {
        self.achieved = Some(achieved);
        self.holds = Some(achieved <= self.value + slack);
        self
    }

    /// Records an achieved value that must not fall below `value - slack`.
    pub fn achieved_at_least(mut self, achieved: f64, slack: f64) -> Self {
        self.achieved = Some(achieved);
        self.holds = Some(achieved >= self.value - slack);
        self
    }
}

/// `sum_i |P_i - Q_i|`, halved when `halved` is set.
pub fn variational_distance(p: &ClassicalDistribution, q: &ClassicalDistribution, halved: bool) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch { expected: p.len(), found: q.len() });
    }
    let sum = stable_sum(p.probs().iter().zip(q.probs()).map(|(a, b)| (a - b).abs()));
    Ok(if halved { 0.5 * sum } else { sum })
}

pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// The `p` in `[0, 1/2]` with `binary_entropy(p) = h`, by bisection.
pub fn inverse_binary_entropy(h: f64) -> f64 {
    if h <= 0.0 {
        return 0.0;
    }
    if h >= 1.0 {
        return 0.5;
    }
    let (mut lo, mut hi) = (0.0_f64, 0.5_f64);
    while hi - lo > 1e-15 {
        let mid = 0.5 * (lo + hi);
        if binary_entropy(mid) < h {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn shannon_entropy(p: &ClassicalDistribution) -> f64 {
    entropy_bits(p.probs().iter().copied())
}

/// `n - eps (n + log2(1/eps))`: lower bound on `H(K)` for an `n`-bit key
/// within halved variational distance `eps` of uniform. Valid for `eps <= 1/2`.
pub fn entropy_lower_bound(n: u32, eps: f64) -> Result<f64> {
    if !(0.0..=0.5).contains(&eps) {
        return Err(Error::OutOfRange(format!(
            "entropy continuity bound needs 0 <= eps <= 1/2 (got {eps}); beyond 1/2 the bound is not valid"
        )));
    }
    let n = f64::from(n);
    if eps == 0.0 {
        return Ok(n);
    }
    Ok(n - eps * (n + (1.0 / eps).log2()))
}

/// Thresholds and total failure probability for converting an averaged
/// guarantee `eps` into individual guarantees with the Markov inequality.
#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct FailureBudget {
    pub eps: f64,
    pub uses: u32,
    /// Optimal thresholds, all equal to `eps^(1/(uses+1))`.
    pub sigmas: Vec<f64>,
    /// `(uses + 1) eps^(1/(uses+1))`, clamped to 1.
    pub total_failure: f64,
    /// For one use: `1 - (1 - sigma)(1 - eps/sigma)` at `sigma = sqrt(eps)`.
    pub exact_two_level: Option<f64>,
    /// For one use: numerically minimized `(sigma, failure)` of the exact two-level form.
    pub exact_minimizer: Option<(f64, f64)>,
}

/// Markov failure budget for `uses` in `1..=3` applications.
pub fn markov_failure_budget(eps: f64, uses: u32) -> Result<FailureBudget> {
    if !(0.0..1.0).contains(&eps) {
        return Err(Error::OutOfRange(format!("Markov budget needs 0 <= eps < 1 (got {eps})")));
    }
    if !(1..=3).contains(&uses) {
        return Err(Error::OutOfRange(format!("Markov budget supports 1 to 3 uses (got {uses})")));
    }
    // Dedicated roots are exact on powers of two, where powf is not.
    let sigma = match uses {
        1 => eps.sqrt(),
        2 => eps.cbrt(),
        _ => eps.sqrt().sqrt(),
    };
    let total = (f64::from(uses + 1) * sigma).min(1.0);
    let (exact_two_level, exact_minimizer) = if uses == 1 && eps > 0.0 {
        let two_level = |s: f64| 1.0 - (1.0 - s) * (1.0 - eps / s);
        (Some(two_level(sigma)), Some(minimize_two_level(eps)))
    } else {
        (None, None)
    };
    Ok(FailureBudget { eps, uses, sigmas: vec![sigma; uses as usize], total_failure: total, exact_two_level, exact_minimizer })
}

/// Golden-section minimization of `sigma + eps/sigma - eps` over `log sigma in [log eps, 0]`.
fn minimize_two_level(eps: f64) -> (f64, f64) {
    let f = |t: f64| {
        let s = t.exp();
        s + eps / s - eps
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (eps.ln(), 0.0);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    while (b - a).abs() > 1e-12 {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - inv_phi * (b - a);
        d = a + inv_phi * (b - a);
    }
    let t = 0.5 * (a + b);
    (t.exp(), f(t))
}

/// `1/N + 3 eps^(1/3)` with `N = 2^key_bits`: guaranteed whole-key guessing probability.
pub fn sequence_error_bound(key_bits: u32, eps: f64) -> Result<BoundReport> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::OutOfRange(format!("eps must be nonnegative (got {eps})")));
    }
    let blind = (-f64::from(key_bits)).exp2();
    let value = blind + 3.0 * eps.cbrt();
    let report = BoundReport::new("sequence guessing probability", value, "1/N + 3 eps^(1/3)")
        .input("eps", eps)
        .input("n_bits", f64::from(key_bits));
    Ok(if value >= 1.0 { report.note("bound is at least 1 and says nothing") } else { report })
}

/// Above this deviation the small-deviation expansion of the binary entropy behind the
/// bit-error bound is visibly inaccurate.
pub const FANO_DEVIATION_VALIDITY: f64 = 0.1;

/// `eps^(1/4) / (2 sqrt(log2 e))`: guaranteed deviation of the bit error rate from 1/2.
pub fn fano_ber_deviation(eps: f64) -> Result<BoundReport> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange(format!("eps must lie in [0, 1] (got {eps})")));
    }
    let value = eps.powf(0.25) / (2.0 * std::f64::consts::LOG2_E.sqrt());
    let report = BoundReport::new("BER deviation from 1/2", value, "eps^(1/4) / (2 sqrt(log2 e))").input("eps", eps);
    Ok(if value > FANO_DEVIATION_VALIDITY {
        report.note("deviation too large for the small-deviation entropy expansion; treat as indicative only")
    } else {
        report
    })
}

/// Smallest BER consistent with `n H(p_b) >= H(K) - I_ac`.
pub fn fano_ber_floor(n: u32, key_entropy: f64, accessible_info: f64) -> f64 {
    let h = ((key_entropy - accessible_info) / f64::from(n)).max(0.0);
    inverse_binary_entropy(h)
}

/// Mutual information between the key and the common-eigenbasis measurement,
/// which is the accessible information when the states commute.
pub fn accessible_information_classical(ens: &CqEnsemble) -> Result<f64> {
    let basis = common_eigenbasis(ens)?;
    let dim = ens.dim();
    // joint[k][y] = p(k) <y|rho^k|y>
    let joint: Vec<Vec<f64>> = ens
        .entries()
        .iter()
        .map(|e| {
            let rotated = basis.adjoint().matmul(&e.state).matmul(&basis);
            (0..dim).map(|y| e.prob * rotated[(y, y)].re.max(0.0)).collect()
        })
        .collect();
    let p_key: Vec<f64> = joint.iter().map(|row| row.iter().sum()).collect();
    let p_out: Vec<f64> = (0..dim).map(|y| joint.iter().map(|row| row[y]).sum()).collect();
    let mut info = 0.0;
    for (k, row) in joint.iter().enumerate() {
        for (y, &pj) in row.iter().enumerate() {
            if pj > 0.0 {
                info += pj * (pj / (p_key[k] * p_out[y])).log2();
            }
        }
    }
    Ok(info.max(0.0))
}

/// `S(rho_E) - sum_k p(k) S(rho^k)`, an upper bound on the accessible information.
pub fn holevo_bound(ens: &CqEnsemble) -> f64 {
    let average = entropy_bits(hermitian_eig(&crate::ensemble::average_state(ens)).values);
    let conditional: f64 =
        ens.entries().iter().map(|e| e.prob * entropy_bits(hermitian_eig(&e.state).values)).sum();
    (average - conditional).max(0.0)
}
