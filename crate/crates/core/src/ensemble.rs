//! Classical-quantum key ensembles and the trace-distance criterion `d`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{self, kron_vec, trace_norm, HermitianMatrix, Matrix, C64};
use crate::tol;

/// Longest key the toolkit will index. Keeps `2^n_bits` exact in an `f64`.
pub const MAX_KEY_BITS: usize = 52;

/// A key bitstring. Position 0 is the leftmost character.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Key(Vec<bool>);

impl Key {
    pub fn new(bits: Vec<bool>) -> Self {
        Key(bits)
    }

    /// The `n_bits`-bit key whose binary value is `value`, most significant bit first.
    pub fn from_index(value: u64, n_bits: usize) -> Self {
        Key((0..n_bits).map(|i| (value >> (n_bits - 1 - i)) & 1 == 1).collect())
    }

    pub fn index(&self) -> u64 {
        self.0.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn bit(&self, position: usize) -> bool {
        self.0[position]
    }

    /// The bits at `positions`, in the order given.
    pub fn restrict(&self, positions: &[usize]) -> Key {
        Key(positions.iter().map(|&p| self.0[p]).collect())
    }

    pub fn hamming(&self, other: &Key) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl FromStr for Key {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::InvalidKey(format!("unexpected character {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Key)
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Key({self})")
    }
}

impl Serialize for Key {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Key {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A nonempty, strictly increasing set of key bit positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct BitSubset(Vec<usize>);

impl BitSubset {
    pub fn new(mut positions: Vec<usize>) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::InvalidSubset("subset must be nonempty".into()));
        }
        let len = positions.len();
        positions.sort_unstable();
        positions.dedup();
        if positions.len() != len {
            return Err(Error::InvalidSubset("duplicate positions".into()));
        }
        Ok(BitSubset(positions))
    }

    /// All positions `0..n_bits`.
    pub fn all(n_bits: usize) -> Result<Self> {
        Self::new((0..n_bits).collect())
    }

    pub fn positions(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, position: usize) -> bool {
        self.0.binary_search(&position).is_ok()
    }

    pub fn check_within(&self, n_bits: usize) -> Result<()> {
        match self.0.last() {
            Some(&p) if p >= n_bits => {
                Err(Error::InvalidSubset(format!("position {p} out of range for a {n_bits}-bit key")))
            }
            _ => Ok(()),
        }
    }

    /// Positions of `0..n_bits` not in this subset (possibly empty).
    pub fn complement(&self, n_bits: usize) -> Vec<usize> {
        (0..n_bits).filter(|&p| !self.contains(p)).collect()
    }
}

/// A probability vector over outcome indices.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalDistribution(Vec<f64>);

impl ClassicalDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidDistribution("no outcomes".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
            return Err(Error::InvalidDistribution(format!("entry {p} is not a probability")));
        }
        let total = linalg::stable_sum(probs.iter().copied());
        if (total - 1.0).abs() > tol::DISTRIBUTION_SUM {
            return Err(Error::InvalidDistribution(format!("total mass {total} differs from 1")));
        }
        Ok(ClassicalDistribution(probs))
    }

    pub fn uniform(n: usize) -> Self {
        ClassicalDistribution(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct Entry {
    pub key: Key,
    pub prob: f64,
    pub state: HermitianMatrix,
}

/// `{p(k), rho_E^k}` over `n_bits`-bit keys. Keys not listed carry probability 0.
///
/// Entries are kept sorted by key.
#[derive(Clone, Debug)]
pub struct CqEnsemble {
    n_bits: usize,
    dim: usize,
    entries: Vec<Entry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Purity {
    Pure,
    Mixed,
}

impl CqEnsemble {
    pub fn new(n_bits: usize, mut entries: Vec<Entry>) -> Result<Self> {
        if n_bits == 0 || n_bits > MAX_KEY_BITS {
            return Err(Error::InvalidEnsemble(format!("n_bits must be in 1..={MAX_KEY_BITS}, got {n_bits}")));
        }
        let Some(first) = entries.first() else {
            return Err(Error::InvalidEnsemble("no entries".into()));
        };
        let dim = first.state.dim();
        if entries.len() as f64 > (n_bits as f64).exp2() {
            return Err(Error::InvalidEnsemble(format!("{} entries exceed 2^{n_bits} keys", entries.len())));
        }
        let mut total = 0.0;
        for (i, e) in entries.iter().enumerate() {
            if e.key.len() != n_bits {
                return Err(Error::InvalidEnsemble(format!(
                    "entry {i}: key {} has {} bits, expected {n_bits}",
                    e.key,
                    e.key.len()
                )));
            }
            if !(0.0..=1.0).contains(&e.prob) {
                return Err(Error::InvalidEnsemble(format!("entry {i}: probability {} outside [0, 1]", e.prob)));
            }
            if e.state.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: e.state.dim() });
            }
            linalg::check_density_operator(&e.state)
                .map_err(|err| Error::InvalidEnsemble(format!("entry {i} (key {}): {err}", e.key)))?;
            total += e.prob;
        }
        if (total - 1.0).abs() > tol::PROBABILITY_SUM {
            return Err(Error::InvalidEnsemble(format!("probabilities sum to {total}")));
        }
        entries.sort_by(|a, b| a.key.cmp(&b.key));
        if let Some(w) = entries.windows(2).find(|w| w[0].key == w[1].key) {
            return Err(Error::InvalidEnsemble(format!("duplicate key {}", w[0].key)));
        }
        Ok(CqEnsemble { n_bits, dim, entries })
    }

    /// Every key of `n_bits` bits with probability `1/N` and the same state.
    pub fn ideal(n_bits: usize, state: HermitianMatrix) -> Result<Self> {
        if n_bits == 0 || n_bits > 16 {
            return Err(Error::OutOfRange(format!("ideal ensembles need 1 <= n_bits <= 16, got {n_bits}")));
        }
        Self::with_common_state(n_bits, &ClassicalDistribution::uniform(1 << n_bits), state)
    }

    /// Priors from `probs` (one per key index), all keys sharing `state`.
    pub fn with_common_state(n_bits: usize, probs: &ClassicalDistribution, state: HermitianMatrix) -> Result<Self> {
        if probs.len() as f64 != (n_bits as f64).exp2() {
            return Err(Error::InvalidEnsemble(format!("{} priors for 2^{n_bits} keys", probs.len())));
        }
        let entries = probs
            .probs()
            .iter()
            .enumerate()
            .map(|(i, &prob)| Entry { key: Key::from_index(i as u64, n_bits), prob, state: state.clone() })
            .collect();
        Self::new(n_bits, entries)
    }

    /// Key `i` held as the basis state `|i>` in dimension `2^n_bits`.
    pub fn classical(n_bits: usize, probs: &ClassicalDistribution) -> Result<Self> {
        let n = probs.len();
        if n as f64 != (n_bits as f64).exp2() || n > tol::MAX_DIM {
            return Err(Error::InvalidEnsemble(format!("{n} priors for 2^{n_bits} keys")));
        }
        let entries = probs
            .probs()
            .iter()
            .enumerate()
            .map(|(i, &prob)| {
                let mut diag = vec![0.0; n];
                diag[i] = 1.0;
                Entry { key: Key::from_index(i as u64, n_bits), prob, state: HermitianMatrix::diag(&diag) }
            })
            .collect();
        Self::new(n_bits, entries)
    }

    /// A commuting ensemble from a joint table `joint[k][y] = P(K = k, Y = y)`:
    /// key `k` holds `diag(P(y | k))`.
    pub fn from_joint_table(n_bits: usize, joint: &[Vec<f64>]) -> Result<Self> {
        let mut entries = Vec::new();
        for (k, row) in joint.iter().enumerate() {
            let prob: f64 = row.iter().sum();
            if prob <= 0.0 {
                continue;
            }
            let diag: Vec<f64> = row.iter().map(|p| p / prob).collect();
            entries.push(Entry { key: Key::from_index(k as u64, n_bits), prob, state: HermitianMatrix::diag(&diag) });
        }
        Self::new(n_bits, entries)
    }

    pub fn n_bits(&self) -> usize {
        self.n_bits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    /// `N = 2^n_bits`.
    pub fn key_space_size(&self) -> f64 {
        (self.n_bits as f64).exp2()
    }

    /// Number of keys of the key space that have no entry.
    pub fn absent_keys(&self) -> f64 {
        self.key_space_size() - self.entries.len() as f64
    }

    /// `p(k) rho^k`.
    pub fn weighted_state(&self, i: usize) -> HermitianMatrix {
        let e = &self.entries[i];
        e.state.scale(e.prob)
    }

    pub fn weighted_states(&self) -> Vec<HermitianMatrix> {
        (0..self.entries.len()).map(|i| self.weighted_state(i)).collect()
    }

    /// Entries with nonzero probability.
    pub fn support(&self) -> impl Iterator<Item = (usize, &Entry)> {
        self.entries.iter().enumerate().filter(|(_, e)| e.prob > 0.0)
    }

    pub fn prior(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.prob).collect()
    }

    pub fn find(&self, key: &Key) -> Option<&Entry> {
        self.position(key).map(|i| &self.entries[i])
    }

    /// Index of `key` among the entries.
    pub fn position(&self, key: &Key) -> Option<usize> {
        self.entries.binary_search_by(|e| e.key.cmp(key)).ok()
    }

    /// Largest commutator entry over all pairs of states.
    pub fn max_commutator(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.entries.iter().enumerate() {
            for b in &self.entries[i + 1..] {
                worst = worst.max(linalg::commutator_defect(&a.state, &b.state));
            }
        }
        worst
    }

    pub fn is_commuting(&self) -> bool {
        self.max_commutator() <= tol::COMMUTATION
    }

    /// Entrywise comparison of keys, priors and states.
    pub fn approx_eq(&self, other: &CqEnsemble, tol: f64) -> bool {
        self.n_bits == other.n_bits
            && self.dim == other.dim
            && self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(a, b)| {
                a.key == b.key && (a.prob - b.prob).abs() <= tol && (&*a.state - &*b.state).max_abs() <= tol
            })
    }
}

/// `rho_E = sum_k p(k) rho_E^k`.
pub fn average_state(ens: &CqEnsemble) -> HermitianMatrix {
    ens.entries.iter().fold(HermitianMatrix::zeros(ens.dim), |acc, e| acc.add(&e.state.scale(e.prob)))
}

/// `d = 1/2 sum_k || p(k) rho^k - rho_E / N ||_1` over all `2^n_bits` keys.
///
/// Each absent key contributes `1/2 ||rho_E / N||_1 = 1/(2N)`.
pub fn compute_d(ens: &CqEnsemble) -> f64 {
    let n = ens.key_space_size();
    let reference = average_state(ens).scale(1.0 / n);
    let present: f64 = ens.entries.iter().map(|e| trace_norm(&e.state.scale(e.prob).sub(&reference))).sum();
    0.5 * present + ens.absent_keys() / (2.0 * n)
}

/// `d = 1/2 || rho_KE - rho_U (x) rho_E ||_1`, built explicitly on the joint space.
///
/// Rejected with [`Error::DimensionOverflow`] when `2^n_bits * dim` exceeds [`tol::MAX_DIM`].
pub fn compute_d_joint(ens: &CqEnsemble) -> Result<f64> {
    let n = ens.key_space_size();
    let joint_dim = n * ens.dim as f64;
    if joint_dim > tol::MAX_DIM as f64 {
        return Err(Error::DimensionOverflow { dim: joint_dim as usize, max: tol::MAX_DIM });
    }
    let n = n as usize;
    let rho_e = average_state(ens);
    let ideal = linalg::tensor(&HermitianMatrix::maximally_mixed(n), &rho_e)?;
    let mut real = HermitianMatrix::zeros(n * ens.dim);
    for e in &ens.entries {
        let mut basis = vec![0.0; n];
        basis[e.key.index() as usize] = 1.0;
        real = real.add(&linalg::tensor(&HermitianMatrix::diag(&basis), &e.state.scale(e.prob))?);
    }
    Ok(0.5 * trace_norm(&real.sub(&ideal)))
}

fn ket(re: &[f64]) -> Vec<C64> {
    re.iter().map(|&x| C64::new(x, 0.0)).collect()
}

/// The two-bit ensemble in which the second key bit is hidden in a BB84 basis
/// chosen by the first bit.
///
/// Each key `k1 k2` holds `|1>|phi_k>` with `phi_11 = |1>`, `phi_10 = |3>`,
/// `phi_01 = |2>`, `phi_00 = |4>`; `{|1>, |3>}` is the computational basis and
/// `|2>, |4> = (|1> +- |3>)/sqrt 2`.
pub fn build_locking_example() -> CqEnsemble {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let s1 = ket(&[1.0, 0.0]);
    let s3 = ket(&[0.0, 1.0]);
    let s2 = ket(&[h, h]);
    let s4 = ket(&[h, -h]);
    let entries = [("11", &s1), ("10", &s3), ("01", &s2), ("00", &s4)]
        .into_iter()
        .map(|(key, phi)| Entry {
            key: key.parse().expect("literal key"),
            prob: 0.25,
            state: HermitianMatrix::projector(&kron_vec(&s1, phi)),
        })
        .collect();
    CqEnsemble::new(2, entries).expect("locking ensemble is valid")
}

/// `P_i = (1 + eps)/N` on the first half of the outcomes and `(1 - eps)/N` on the second.
pub fn build_biased_classical(n_bits: usize, eps: f64) -> Result<ClassicalDistribution> {
    if !(0.0..=1.0).contains(&eps) {
        return Err(Error::OutOfRange(format!("eps = {eps} must lie in [0, 1]")));
    }
    if n_bits == 0 || n_bits > 24 {
        return Err(Error::OutOfRange(format!("n_bits = {n_bits} must lie in 1..=24")));
    }
    let n = 1usize << n_bits;
    let nf = n as f64;
    let probs = (0..n).map(|i| if i < n / 2 { (1.0 + eps) / nf } else { (1.0 - eps) / nf }).collect();
    ClassicalDistribution::new(probs)
}

pub const MAX_RANDOM_DIM: usize = 64;
pub const MAX_RANDOM_BITS: usize = 8;

/// A reproducible pseudo-random ensemble over all `2^n_bits` keys.
///
/// Pure states are normalized complex Gaussian vectors; mixed states are
/// `G G^dagger / tr(G G^dagger)` for a complex Gaussian square `G`. Priors are
/// a symmetric Dirichlet(1) draw.
pub fn build_random_ensemble(n_bits: usize, dim: usize, seed: u64, purity: Purity) -> Result<CqEnsemble> {
    if dim == 0 || dim > MAX_RANDOM_DIM || n_bits == 0 || n_bits > MAX_RANDOM_BITS {
        return Err(Error::OutOfRange(format!(
            "random ensembles need 1 <= dim <= {MAX_RANDOM_DIM} and 1 <= n_bits <= {MAX_RANDOM_BITS}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1usize << n_bits;
    let weights: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
    let total: f64 = weights.iter().sum();
    let entries = weights
        .iter()
        .enumerate()
        .map(|(i, w)| Entry {
            key: Key::from_index(i as u64, n_bits),
            prob: w / total,
            state: random_state(&mut rng, dim, purity),
        })
        .collect::<Vec<_>>();
    // Renormalize against roundoff in the prior sum.
    let total: f64 = entries.iter().map(|e| e.prob).sum();
    let entries = entries.into_iter().map(|e| Entry { prob: e.prob / total, ..e }).collect();
    CqEnsemble::new(n_bits, entries)
}

pub(crate) fn gaussian_vector(rng: &mut impl Rng, dim: usize) -> Vec<C64> {
    (0..dim)
        .map(|_| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect()
}

/// A random density operator of the requested purity.
pub fn random_state(rng: &mut impl Rng, dim: usize, purity: Purity) -> HermitianMatrix {
    match purity {
        Purity::Pure => {
            let v = gaussian_vector(rng, dim);
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let v: Vec<C64> = v.into_iter().map(|z| z / norm).collect();
            HermitianMatrix::projector(&v)
        }
        Purity::Mixed => {
            let g = Matrix::from_fn(dim, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
            let w = g.matmul(&g.adjoint()).hermitian_part();
            let tr = w.trace_re();
            w.scale(1.0 / tr)
        }
    }
}

/// Key distribution restricted to `subset`, with Eve's state averaged over the
/// remaining bits. Reduced keys of probability zero are omitted.
pub fn marginalize_subset(ens: &CqEnsemble, subset: &BitSubset) -> Result<CqEnsemble> {
    subset.check_within(ens.n_bits)?;
    let mut groups: BTreeMap<Key, (f64, HermitianMatrix)> = BTreeMap::new();
    for e in &ens.entries {
        let slot = groups.entry(e.key.restrict(subset.positions())).or_insert_with(|| (0.0, HermitianMatrix::zeros(ens.dim)));
        slot.0 += e.prob;
        slot.1 = slot.1.add(&e.state.scale(e.prob));
    }
    let total: f64 = groups.values().map(|(p, _)| p).sum();
    let entries = groups
        .into_iter()
        .filter(|(_, (p, _))| *p > 0.0)
        .map(|(key, (p, weighted))| Entry { key, prob: p / total, state: weighted.scale(1.0 / p) })
        .collect();
    CqEnsemble::new(subset.len(), entries)
}

/// Posterior ensemble over the unknown bits given that the bits at `known`
/// equal `values`. The result is keyed by the complement positions in
/// increasing order.
pub fn condition_on_known(ens: &CqEnsemble, known: &BitSubset, values: &Key) -> Result<CqEnsemble> {
    known.check_within(ens.n_bits)?;
    if values.len() != known.len() {
        return Err(Error::InvalidKey(format!("{} known values for {} known positions", values.len(), known.len())));
    }
    let rest = known.complement(ens.n_bits);
    if rest.is_empty() {
        return Err(Error::InvalidSubset("every key bit is known; nothing is left to estimate".into()));
    }
    let matching: Vec<&Entry> = ens
        .entries
        .iter()
        .filter(|e| e.prob > 0.0 && e.key.restrict(known.positions()) == *values)
        .collect();
    let total: f64 = matching.iter().map(|e| e.prob).sum();
    if total <= 0.0 {
        return Err(Error::ZeroProbabilityCondition);
    }
    let entries = matching
        .into_iter()
        .map(|e| Entry { key: e.key.restrict(&rest), prob: e.prob / total, state: e.state.clone() })
        .collect();
    CqEnsemble::new(rest.len(), entries)
}

/// Worst-case trace norms that the pairwise and singleton inequalities bound by `4d` and `2d`.
#[derive(Clone, Debug, Serialize)]
pub struct PairwiseReport {
    pub d: f64,
    /// `max_{k != k'} || p(k) rho^k - p(k') rho^k' ||_1`
    pub max_pairwise: f64,
    pub pairwise_bound: f64,
    /// `max_k || p(k) rho^k - rho_E / N ||_1`
    pub max_singleton: f64,
    pub singleton_bound: f64,
}

impl PairwiseReport {
    pub fn holds(&self, slack: f64) -> bool {
        self.max_pairwise <= self.pairwise_bound + slack && self.max_singleton <= self.singleton_bound + slack
    }
}

pub fn pairwise_distance_checks(ens: &CqEnsemble) -> PairwiseReport {
    let d = compute_d(ens);
    let n = ens.key_space_size();
    let rho_e = average_state(ens);
    let reference = rho_e.scale(1.0 / n);
    let weighted = ens.weighted_states();

    let mut max_pairwise = 0.0_f64;
    for (i, a) in weighted.iter().enumerate() {
        for b in &weighted[i + 1..] {
            max_pairwise = max_pairwise.max(trace_norm(&a.sub(b)));
        }
    }
    let mut max_singleton = weighted.iter().map(|w| trace_norm(&w.sub(&reference))).fold(0.0, f64::max);
    if ens.absent_keys() > 0.0 {
        // An absent key carries the zero operator.
        max_pairwise = max_pairwise.max(ens.entries.iter().map(|e| e.prob).fold(0.0, f64::max));
        max_singleton = max_singleton.max(1.0 / n);
    }
    PairwiseReport { d, max_pairwise, pairwise_bound: 4.0 * d, max_singleton, singleton_bound: 2.0 * d }
}
