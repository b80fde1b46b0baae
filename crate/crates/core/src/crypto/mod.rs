//! Common-key cryptosystems `C_i = A_i (X_i + K_i)` over prime fields.
//!
//! The key-free companion is `M_i = A_i X_i`. Decryption subtracts the key
//! image `A_i K_i` and runs the key-free maximum-likelihood decoder, so the
//! set of correctly decoded source pairs does not depend on the keys.
//!
//! Words are enumerated by their big-endian base-`q` index (see [`crate::gf`]);
//! a pair of words `(x1, x2)` has index `x1 * q2^n + x2`, and a ciphertext or
//! syndrome pair `(s1, s2)` has index `s1 * q2^m2 + s2`.

mod decode;
mod encoder;
mod leakage;

use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use decode::{decodable_set, decrypt, ml_decode, DecodableSet, Decoded};
pub use encoder::LinearEncoder;
pub use leakage::{
    error_probability, error_probability_sampled, key_image_distribution, leakage_exact,
    leakage_sampled, leakage_sampled_with, source_image_distribution, SampledError, SampledLeakage,
    DEFAULT_BOOTSTRAP, MIN_TRIALS, RADIUS_SDS,
};

use crate::error::check_budget;
use crate::gf::{Alphabet, Symbol};
use crate::pmf::{product_prob_unchecked, Axis, JointPmf};
use crate::{Error, Result, DEFAULT_BUDGET};

/// `A (x + k)`.
pub fn encrypt(enc: &LinearEncoder, key: &[Symbol], x: &[Symbol]) -> Result<Vec<Symbol>> {
    enc.check_len(key, "key")?;
    enc.check_len(x, "plaintext")?;
    let masked = enc.alphabet().add_words(x, key);
    enc.apply(&masked)
}

/// `A x`.
pub fn keyfree_encode(enc: &LinearEncoder, x: &[Symbol]) -> Result<Vec<Symbol>> {
    enc.apply(x)
}

/// A concrete two-terminal system: blocklength, both compressors, and the
/// source and key distributions (independent of each other by construction).
#[derive(Debug, Clone)]
pub struct SystemSpec {
    n: usize,
    enc1: LinearEncoder,
    enc2: LinearEncoder,
    px: JointPmf,
    pk: JointPmf,
    budget: u64,
    tables: OnceLock<Arc<Tables>>,
}

impl SystemSpec {
    pub fn new(
        n: usize,
        enc1: LinearEncoder,
        enc2: LinearEncoder,
        px: JointPmf,
        pk: JointPmf,
    ) -> Result<Self> {
        if enc1.n() != n || enc2.n() != n {
            return Err(Error::InvalidEncoder(format!(
                "encoders have blocklengths {} and {}, system has n={n}",
                enc1.n(),
                enc2.n()
            )));
        }
        if enc1.alphabet() != px.alphabet1() || enc2.alphabet() != px.alphabet2() {
            return Err(Error::InvalidEncoder(
                "encoder fields differ from the source alphabets".into(),
            ));
        }
        if pk.alphabet1() != px.alphabet1() || pk.alphabet2() != px.alphabet2() {
            return Err(Error::Domain(
                "keys must live on the same alphabets as the sources".into(),
            ));
        }
        Ok(Self {
            n,
            enc1,
            enc2,
            px,
            pk,
            budget: DEFAULT_BUDGET,
            tables: OnceLock::new(),
        })
    }

    /// System with seeded random full-rank compressors.
    pub fn random(
        px: JointPmf,
        pk: JointPmf,
        n: usize,
        m1: usize,
        m2: usize,
        seed: u64,
    ) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let enc1 = LinearEncoder::random_full_rank(px.alphabet1().clone(), n, m1, &mut rng)?;
        let enc2 = LinearEncoder::random_full_rank(px.alphabet2().clone(), n, m2, &mut rng)?;
        Self::new(n, enc1, enc2, px, pk)
    }

    /// System with identity compressors (plain one-time pad).
    pub fn identity(px: JointPmf, pk: JointPmf, n: usize) -> Result<Self> {
        let enc1 = LinearEncoder::identity(px.alphabet1().clone(), n)?;
        let enc2 = LinearEncoder::identity(px.alphabet2().clone(), n)?;
        Self::new(n, enc1, enc2, px, pk)
    }

    /// Replaces the enumeration budget (number of states).
    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn enc1(&self) -> &LinearEncoder {
        &self.enc1
    }

    pub fn enc2(&self) -> &LinearEncoder {
        &self.enc2
    }

    pub fn encoder(&self, axis: Axis) -> &LinearEncoder {
        match axis {
            Axis::First => &self.enc1,
            Axis::Second => &self.enc2,
        }
    }

    pub fn px(&self) -> &JointPmf {
        &self.px
    }

    pub fn pk(&self) -> &JointPmf {
        &self.pk
    }

    pub fn budget(&self) -> u64 {
        self.budget
    }

    pub fn alphabet(&self, axis: Axis) -> &Alphabet {
        self.px.alphabet(axis)
    }

    /// `(m_i / n) log2 q_i` for both terminals.
    pub fn rates(&self) -> (f64, f64) {
        (self.enc1.rate(), self.enc2.rate())
    }

    /// `q_i^n`, the number of length-`n` words on `axis`.
    pub fn word_count(&self, axis: Axis) -> u128 {
        crate::numeric::pow_u128(self.alphabet(axis).size(), self.n)
    }

    /// `q_i^{m_i}`, the ciphertext alphabet size on `axis`.
    pub fn cipher_count(&self, axis: Axis) -> u128 {
        let enc = self.encoder(axis);
        crate::numeric::pow_u128(enc.alphabet().size(), enc.m())
    }

    /// Number of source (or key) word pairs, `q1^n q2^n`.
    pub fn pair_count(&self) -> u128 {
        self.word_count(Axis::First)
            .saturating_mul(self.word_count(Axis::Second))
    }

    /// Number of ciphertext pairs, `q1^m1 q2^m2`.
    pub fn cipher_pair_count(&self) -> u128 {
        self.cipher_count(Axis::First)
            .saturating_mul(self.cipher_count(Axis::Second))
    }

    pub(crate) fn tables(&self) -> Result<&Tables> {
        if let Some(t) = self.tables.get() {
            return Ok(t);
        }
        let largest = self
            .word_count(Axis::First)
            .max(self.word_count(Axis::Second));
        check_budget(
            largest,
            self.budget,
            "; syndrome tables need q^n words per terminal",
        )?;
        let built = Arc::new(Tables::build(self));
        Ok(self.tables.get_or_init(|| built))
    }

    pub(crate) fn shared_tables(&self) -> Result<Arc<Tables>> {
        self.tables()?;
        Ok(Arc::clone(
            self.tables.get().expect("tables were just built"),
        ))
    }

    /// `p^n(x1, x2)` by word indices.
    pub(crate) fn source_prob(&self, t: &Tables, i1: usize, i2: usize) -> f64 {
        product_prob_unchecked(&self.px, t.first.word(i1), t.second.word(i2))
    }

    pub(crate) fn key_prob(&self, t: &Tables, i1: usize, i2: usize) -> f64 {
        product_prob_unchecked(&self.pk, t.first.word(i1), t.second.word(i2))
    }
}

/// Enumeration tables for one terminal: every word, its syndrome, and the
/// coset members of each syndrome in increasing order.
#[derive(Debug)]
pub(crate) struct CosetTable {
    pub n: usize,
    pub q: usize,
    pub m: usize,
    words: Vec<Symbol>,
    pub syndrome: Vec<u32>,
    pub members: Vec<Vec<u32>>,
}

impl CosetTable {
    fn build(enc: &LinearEncoder) -> Self {
        let alphabet = enc.alphabet();
        let n = enc.n();
        let q = alphabet.size();
        let m = enc.m();
        let count = alphabet.word_count(n).expect("checked against the budget");
        let cipher_count = alphabet.word_count(m).expect("m <= n");
        let mut words = Vec::with_capacity(count * n);
        let mut syndrome = Vec::with_capacity(count);
        let mut members = vec![Vec::new(); cipher_count];
        for idx in 0..count {
            let w = alphabet.index_to_word(idx, n);
            let s = alphabet.word_to_index(&enc.apply_unchecked(&w));
            words.extend_from_slice(&w);
            syndrome.push(s as u32);
            members[s].push(idx as u32);
        }
        Self {
            n,
            q,
            m,
            words,
            syndrome,
            members,
        }
    }

    #[inline]
    pub fn word(&self, idx: usize) -> &[Symbol] {
        &self.words[idx * self.n..(idx + 1) * self.n]
    }

    pub fn word_count(&self) -> usize {
        self.syndrome.len()
    }

    pub fn cipher_count(&self) -> usize {
        self.members.len()
    }

    /// Index of the digitwise sum of two length-`m` words given by index.
    #[inline]
    pub fn cipher_add(&self, a: usize, b: usize) -> usize {
        digit_add(self.q, self.m, a, b)
    }

    /// Index of the digitwise difference `a - b` of two length-`m` words.
    #[inline]
    pub fn cipher_sub(&self, a: usize, b: usize) -> usize {
        digit_sub(self.q, self.m, a, b)
    }

    /// Index of the digitwise sum of two length-`n` words given by index.
    #[inline]
    pub fn word_add(&self, a: usize, b: usize) -> usize {
        digit_add(self.q, self.n, a, b)
    }
}

#[inline]
fn digit_add(q: usize, len: usize, a: usize, b: usize) -> usize {
    if q == 2 {
        return a ^ b;
    }
    let (mut a, mut b, mut out, mut place) = (a, b, 0, 1);
    for _ in 0..len {
        out += ((a % q + b % q) % q) * place;
        a /= q;
        b /= q;
        place *= q;
    }
    out
}

#[inline]
fn digit_sub(q: usize, len: usize, a: usize, b: usize) -> usize {
    if q == 2 {
        return a ^ b;
    }
    let (mut a, mut b, mut out, mut place) = (a, b, 0, 1);
    for _ in 0..len {
        out += ((a % q + q - b % q) % q) * place;
        a /= q;
        b /= q;
        place *= q;
    }
    out
}

#[derive(Debug)]
pub(crate) struct Tables {
    pub first: CosetTable,
    pub second: CosetTable,
}

impl Tables {
    fn build(spec: &SystemSpec) -> Self {
        Self {
            first: CosetTable::build(&spec.enc1),
            second: CosetTable::build(&spec.enc2),
        }
    }

    pub fn get(&self, axis: Axis) -> &CosetTable {
        match axis {
            Axis::First => &self.first,
            Axis::Second => &self.second,
        }
    }

    /// Ciphertext-pair index of `(s1, s2)`.
    #[inline]
    pub fn cipher_pair(&self, s1: usize, s2: usize) -> usize {
        s1 * self.second.cipher_count() + s2
    }

    /// `(c1 + w1, c2 + w2)` on ciphertext-pair indices.
    #[inline]
    pub fn cipher_pair_add(&self, c: usize, w: usize) -> usize {
        let m2 = self.second.cipher_count();
        self.cipher_pair(
            self.first.cipher_add(c / m2, w / m2),
            self.second.cipher_add(c % m2, w % m2),
        )
    }

    /// `(c1 - w1, c2 - w2)` on ciphertext-pair indices.
    #[inline]
    pub fn cipher_pair_sub(&self, c: usize, w: usize) -> usize {
        let m2 = self.second.cipher_count();
        self.cipher_pair(
            self.first.cipher_sub(c / m2, w / m2),
            self.second.cipher_sub(c % m2, w % m2),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn encrypt_examples() {
        let b = Alphabet::binary();
        let a = LinearEncoder::new(b.clone(), 2, vec![vec![1, 1]]).unwrap();
        assert_eq!(encrypt(&a, &[1, 0], &[0, 1]).unwrap(), vec![0]);
        let id = LinearEncoder::identity(b, 3).unwrap();
        assert_eq!(encrypt(&id, &[1, 1, 0], &[0, 1, 0]).unwrap(), vec![1, 0, 0]);
        assert_eq!(
            encrypt(&id, &[0, 0, 0], &[0, 1, 0]).unwrap(),
            keyfree_encode(&id, &[0, 1, 0]).unwrap()
        );
        assert!(encrypt(&id, &[0, 0], &[0, 1, 0]).is_err());
    }

    #[test]
    fn cipher_index_arithmetic_matches_words() {
        let t = Alphabet::new(3).unwrap();
        let px = JointPmf::uniform(3, 3).unwrap();
        let spec = SystemSpec::random(px.clone(), px, 3, 2, 2, 1).unwrap();
        let tables = spec.tables().unwrap();
        for a in 0..9 {
            for b in 0..9 {
                let wa = t.index_to_word(a, 2);
                let wb = t.index_to_word(b, 2);
                assert_eq!(
                    tables.first.cipher_add(a, b),
                    t.word_to_index(&t.add_words(&wa, &wb))
                );
                assert_eq!(
                    tables.first.cipher_sub(a, b),
                    t.word_to_index(&t.sub_words(&wa, &wb))
                );
            }
        }
    }

    #[test]
    fn system_validation() {
        let px = JointPmf::uniform(2, 3).unwrap();
        let pk = JointPmf::uniform(2, 2).unwrap();
        assert!(SystemSpec::identity(px.clone(), pk, 2).is_err());
        let enc = LinearEncoder::identity(Alphabet::binary(), 3).unwrap();
        let enc3 = LinearEncoder::identity(Alphabet::new(3).unwrap(), 2).unwrap();
        assert!(SystemSpec::new(2, enc, enc3, px.clone(), px).is_err());
    }

    #[test]
    fn budget_refusal() {
        let px = JointPmf::uniform(2, 2).unwrap();
        let spec = SystemSpec::identity(px.clone(), px, 10)
            .unwrap()
            .with_budget(100);
        assert!(matches!(spec.tables(), Err(Error::BudgetExceeded { .. })));
    }
}
