//! Finite joint distributions on `X1 x X2`, their product extensions, and the
//! information measures used throughout the crate. All logarithms are base 2.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::gf::{Alphabet, Symbol};
use crate::numeric::{csum, entropy_bits};
use crate::{Error, Result};

/// Tolerance on the total mass accepted at validation time.
pub const VALIDATION_TOL: f64 = 1e-9;

/// Which coordinate a conditional quantity conditions on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    First,
    Second,
}

impl Axis {
    pub fn other(self) -> Axis {
        match self {
            Axis::First => Axis::Second,
            Axis::Second => Axis::First,
        }
    }
}

/// Validates a one-dimensional PMF.
pub fn validate(pmf: &[f64]) -> Result<()> {
    if pmf.is_empty() {
        return Err(Error::InvalidPmf("empty pmf".into()));
    }
    if let Some(bad) = pmf.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidPmf(format!(
            "entry {bad} is negative or not finite"
        )));
    }
    let total = csum(pmf.iter().copied());
    if (total - 1.0).abs() > VALIDATION_TOL {
        return Err(Error::InvalidPmf(format!("entries sum to {total}, not 1")));
    }
    Ok(())
}

/// Shannon entropy in bits of a one-dimensional PMF.
pub fn entropy(pmf: &[f64]) -> Result<f64> {
    validate(pmf)?;
    Ok(entropy_bits(pmf.iter().copied()).max(0.0))
}

#[derive(Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct RawJoint {
    q1: u32,
    q2: u32,
    probs: Vec<f64>,
}

/// Joint PMF on `GF(q1) x GF(q2)`, stored row-major (`probs[a * q2 + b]`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint", into = "RawJoint")]
pub struct JointPmf {
    alphabet1: Alphabet,
    alphabet2: Alphabet,
    probs: Vec<f64>,
}

impl TryFrom<RawJoint> for JointPmf {
    type Error = Error;

    fn try_from(raw: RawJoint) -> Result<Self> {
        JointPmf::new(raw.q1, raw.q2, raw.probs)
    }
}

impl From<JointPmf> for RawJoint {
    fn from(j: JointPmf) -> RawJoint {
        RawJoint {
            q1: j.alphabet1.size() as u32,
            q2: j.alphabet2.size() as u32,
            probs: j.probs,
        }
    }
}

impl JointPmf {
    /// Validates and renormalizes a row-major probability matrix.
    pub fn new(q1: u32, q2: u32, probs: Vec<f64>) -> Result<Self> {
        let alphabet1 = Alphabet::new(q1)?;
        let alphabet2 = Alphabet::new(q2)?;
        if probs.len() != (q1 * q2) as usize {
            return Err(Error::InvalidPmf(format!(
                "expected {} entries for a {q1}x{q2} joint, got {}",
                q1 * q2,
                probs.len()
            )));
        }
        validate(&probs)?;
        let total = csum(probs.iter().copied());
        let probs = probs.into_iter().map(|p| p / total).collect();
        Ok(Self {
            alphabet1,
            alphabet2,
            probs,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let q1 = rows.len() as u32;
        let q2 = rows.first().map_or(0, |r| r.len()) as u32;
        if rows.iter().any(|r| r.len() as u32 != q2) {
            return Err(Error::InvalidPmf("ragged probability matrix".into()));
        }
        Self::new(q1, q2, rows.concat())
    }

    pub fn uniform(q1: u32, q2: u32) -> Result<Self> {
        let cells = (q1 * q2) as usize;
        Self::new(q1, q2, vec![1.0 / cells as f64; cells])
    }

    /// Product of two marginals.
    pub fn independent(p1: &[f64], p2: &[f64]) -> Result<Self> {
        validate(p1)?;
        validate(p2)?;
        let probs = p1
            .iter()
            .flat_map(|a| p2.iter().map(move |b| a * b))
            .collect();
        Self::new(p1.len() as u32, p2.len() as u32, probs)
    }

    /// `X1 = X2` with common marginal `p`.
    pub fn identical(p: &[f64]) -> Result<Self> {
        validate(p)?;
        let q = p.len();
        let mut probs = vec![0.0; q * q];
        for (a, &pa) in p.iter().enumerate() {
            probs[a * q + a] = pa;
        }
        Self::new(q as u32, q as u32, probs)
    }

    /// Doubly symmetric binary source: uniform bits that differ with
    /// probability `crossover`.
    pub fn dsbs(crossover: f64) -> Result<Self> {
        let same = (1.0 - crossover) / 2.0;
        let diff = crossover / 2.0;
        Self::new(2, 2, vec![same, diff, diff, same])
    }

    pub fn point_mass(q1: u32, q2: u32, a: Symbol, b: Symbol) -> Result<Self> {
        let mut probs = vec![0.0; (q1 * q2) as usize];
        let idx = a as usize * q2 as usize + b as usize;
        if a as u32 >= q1 || b as u32 >= q2 {
            return Err(Error::Domain(format!("point ({a},{b}) outside {q1}x{q2}")));
        }
        probs[idx] = 1.0;
        Self::new(q1, q2, probs)
    }

    /// Dirichlet(1) random joint, i.e. uniform on the simplex.
    pub fn random<R: Rng + ?Sized>(q1: u32, q2: u32, rng: &mut R) -> Result<Self> {
        let cells = (q1 * q2) as usize;
        let draws: Vec<f64> = (0..cells).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        Self::new(q1, q2, draws.into_iter().map(|d| d / total).collect())
    }

    pub fn alphabet1(&self) -> &Alphabet {
        &self.alphabet1
    }

    pub fn alphabet2(&self) -> &Alphabet {
        &self.alphabet2
    }

    pub fn q1(&self) -> usize {
        self.alphabet1.size()
    }

    pub fn q2(&self) -> usize {
        self.alphabet2.size()
    }

    pub fn alphabet(&self, axis: Axis) -> &Alphabet {
        match axis {
            Axis::First => &self.alphabet1,
            Axis::Second => &self.alphabet2,
        }
    }

    /// Row-major probabilities.
    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, a: Symbol, b: Symbol) -> f64 {
        self.probs[a as usize * self.q2() + b as usize]
    }

    pub fn marginal(&self, axis: Axis) -> Vec<f64> {
        let (q1, q2) = (self.q1(), self.q2());
        match axis {
            Axis::First => (0..q1)
                .map(|a| csum((0..q2).map(|b| self.probs[a * q2 + b])))
                .collect(),
            Axis::Second => (0..q2)
                .map(|b| csum((0..q1).map(|a| self.probs[a * q2 + b])))
                .collect(),
        }
    }

    /// `H(X1 X2)`.
    pub fn joint_entropy(&self) -> f64 {
        entropy_bits(self.probs.iter().copied()).max(0.0)
    }

    /// `H(X1)` or `H(X2)`.
    pub fn marginal_entropy(&self, axis: Axis) -> f64 {
        entropy_bits(self.marginal(axis)).max(0.0)
    }

    /// Smallest nonzero cell probability.
    pub fn min_positive(&self) -> f64 {
        self.probs
            .iter()
            .copied()
            .filter(|&p| p > 0.0)
            .fold(f64::INFINITY, f64::min)
    }

    /// Swaps the roles of the two coordinates.
    pub fn transposed(&self) -> JointPmf {
        let (q1, q2) = (self.q1(), self.q2());
        let mut probs = vec![0.0; q1 * q2];
        for a in 0..q1 {
            for b in 0..q2 {
                probs[b * q1 + a] = self.probs[a * q2 + b];
            }
        }
        JointPmf {
            alphabet1: self.alphabet2.clone(),
            alphabet2: self.alphabet1.clone(),
            probs,
        }
    }
}

/// `H(X_i | X_{3-i})` where `conditioned_on` names `X_{3-i}`.
pub fn conditional_entropy(joint: &JointPmf, conditioned_on: Axis) -> f64 {
    (joint.joint_entropy() - joint.marginal_entropy(conditioned_on)).max(0.0)
}

/// `I(X1; X2) = H(X1) + H(X2) - H(X1 X2)`.
pub fn mutual_information(joint: &JointPmf) -> f64 {
    (joint.marginal_entropy(Axis::First) + joint.marginal_entropy(Axis::Second)
        - joint.joint_entropy())
    .max(0.0)
}

/// Mutual information of an arbitrary dense `rows x cols` joint table.
///
/// Used for tables whose axes are not field alphabets (for example ciphertext
/// pairs against plaintext pairs).
pub fn mutual_information_table(probs: &[f64], rows: usize, cols: usize) -> Result<f64> {
    if probs.len() != rows * cols {
        return Err(Error::InvalidPmf(format!(
            "table has {} entries, expected {rows}x{cols}",
            probs.len()
        )));
    }
    validate(probs)?;
    let row_m: Vec<f64> = (0..rows)
        .map(|r| csum(probs[r * cols..(r + 1) * cols].iter().copied()))
        .collect();
    let col_m: Vec<f64> = (0..cols)
        .map(|c| csum((0..rows).map(|r| probs[r * cols + c])))
        .collect();
    let h = entropy_bits(row_m) + entropy_bits(col_m) - entropy_bits(probs.iter().copied());
    Ok(h.max(0.0))
}

/// A pair of equal-length words `(x1, x2)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SequencePair {
    pub x1: Vec<Symbol>,
    pub x2: Vec<Symbol>,
}

impl SequencePair {
    pub fn new(x1: Vec<Symbol>, x2: Vec<Symbol>) -> Result<Self> {
        if x1.is_empty() || x1.len() != x2.len() {
            return Err(Error::Domain(format!(
                "sequence pair needs equal positive lengths, got {} and {}",
                x1.len(),
                x2.len()
            )));
        }
        Ok(Self { x1, x2 })
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }

    pub fn get(&self, axis: Axis) -> &[Symbol] {
        match axis {
            Axis::First => &self.x1,
            Axis::Second => &self.x2,
        }
    }
}

/// Per-cell occurrence counts of a word pair: the joint type, unnormalized.
pub(crate) fn pair_counts(joint: &JointPmf, x1: &[Symbol], x2: &[Symbol]) -> Vec<u32> {
    let q2 = joint.q2();
    let mut counts = vec![0u32; joint.probs.len()];
    for (&a, &b) in x1.iter().zip(x2) {
        counts[a as usize * q2 + b as usize] += 1;
    }
    counts
}

/// `prod_t p(x1_t, x2_t)` computed from the joint type in a fixed cell order,
/// so that pairs of the same type get bit-identical values.
pub(crate) fn product_prob_unchecked(joint: &JointPmf, x1: &[Symbol], x2: &[Symbol]) -> f64 {
    let cells = joint.probs.len();
    if cells <= 64 {
        let q2 = joint.q2();
        let mut counts = [0u32; 64];
        for (&a, &b) in x1.iter().zip(x2) {
            counts[a as usize * q2 + b as usize] += 1;
        }
        type_prob(&joint.probs, &counts[..cells])
    } else {
        type_prob(&joint.probs, &pair_counts(joint, x1, x2))
    }
}

fn type_prob(probs: &[f64], counts: &[u32]) -> f64 {
    probs
        .iter()
        .zip(counts)
        .filter(|(_, &c)| c > 0)
        .map(|(&p, &c)| p.powi(c as i32))
        .product()
}

/// `p^n(x1, x2)` for the memoryless extension of `joint`.
pub fn product_prob(joint: &JointPmf, pair: &SequencePair) -> Result<f64> {
    check_word(joint.alphabet1(), &pair.x1)?;
    check_word(joint.alphabet2(), &pair.x2)?;
    Ok(product_prob_unchecked(joint, &pair.x1, &pair.x2))
}

/// `p^n(x)` for a single-axis word under the marginal of `joint`.
pub fn marginal_product_prob(joint: &JointPmf, axis: Axis, word: &[Symbol]) -> Result<f64> {
    let alphabet = joint.alphabet(axis);
    check_word(alphabet, word)?;
    let marginal = joint.marginal(axis);
    let mut counts = vec![0u32; marginal.len()];
    for &s in word {
        counts[s as usize] += 1;
    }
    Ok(type_prob(&marginal, &counts))
}

pub(crate) fn check_word(alphabet: &Alphabet, word: &[Symbol]) -> Result<()> {
    match word.iter().find(|&&s| !alphabet.contains(s)) {
        Some(s) => Err(Error::Domain(format!(
            "symbol {s} outside GF({})",
            alphabet.size()
        ))),
        None => Ok(()),
    }
}

/// Draws i.i.d. letter pairs from a joint PMF.
#[derive(Debug, Clone)]
pub struct PairSampler {
    q2: usize,
    index: WeightedIndex<f64>,
}

impl PairSampler {
    pub fn new(joint: &JointPmf) -> Self {
        let index = WeightedIndex::new(joint.probs()).expect("validated pmf has positive mass");
        Self {
            q2: joint.q2(),
            index,
        }
    }

    pub fn sample_letter<R: Rng + ?Sized>(&self, rng: &mut R) -> (Symbol, Symbol) {
        let cell = self.index.sample(rng);
        ((cell / self.q2) as Symbol, (cell % self.q2) as Symbol)
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, x1: &mut [Symbol], x2: &mut [Symbol]) {
        for (a, b) in x1.iter_mut().zip(x2.iter_mut()) {
            (*a, *b) = self.sample_letter(rng);
        }
    }

    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> SequencePair {
        let mut x1 = vec![0; n];
        let mut x2 = vec![0; n];
        self.sample_into(rng, &mut x1, &mut x2);
        SequencePair { x1, x2 }
    }
}

/// Draws a length-`n` pair from the memoryless source, deterministic in `seed`.
pub fn sample(joint: &JointPmf, n: usize, seed: u64) -> Result<SequencePair> {
    if n == 0 {
        return Err(Error::Domain("sample length must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(PairSampler::new(joint).sample_pair(&mut rng, n))
}
