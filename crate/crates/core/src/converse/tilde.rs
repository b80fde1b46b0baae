use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use super::TypicalSets;
use crate::crypto::{encrypt, key_image_distribution, SystemSpec, Tables};
use crate::error::check_budget;
use crate::numeric::{csum, entropy_bits, CompensatedSum};
use crate::pmf::{marginal_product_prob, product_prob, Axis, SequencePair};
use crate::{Error, Result};

/// One atom of the conditioned ensemble: word indices of the source pair,
/// ciphertext indices on both terminals, and the probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TildeAtom {
    pub x1: u32,
    pub x2: u32,
    pub c1: u32,
    pub c2: u32,
    pub p: f64,
}

/// Source pair, ciphertexts and their joint law conditioned on the
/// typical-decodable event, with the conditioning masses.
#[derive(Debug, Clone)]
pub struct TildeEnsemble {
    pub n: usize,
    /// `p^n` of the typical-decodable set.
    pub q12: f64,
    /// `Q_i = p_{X_i}` of the projection of the set on terminal `i`.
    pub q_marginal: [f64; 2],
    /// `Q_{i|3-i}(x)` for `x` in the projection on the other terminal, keyed
    /// by the word index of `x`. Slot 0 holds `Q_{1|2}`, slot 1 `Q_{2|1}`.
    pub q_cond: [BTreeMap<u32, f64>; 2],
    /// `p_{X_i}^n(x)` on each projection, keyed by word index.
    pub source_marginal: [BTreeMap<u32, f64>; 2],
    /// Word counts `q1^n`, `q2^n`.
    pub word_counts: [usize; 2],
    /// Ciphertext alphabet sizes `q1^{m1}`, `q2^{m2}`.
    pub cipher_counts: [usize; 2],
    /// Members as `(x1, x2, syndrome pair, p_X~(x))`, sorted by `(x1, x2)`.
    members: Vec<(u32, u32, usize, f64)>,
    /// Support of the key-image law as `(image pair, probability)`.
    image: Vec<(usize, f64)>,
    /// Support of the per-terminal key-image laws.
    image_marginal: [Vec<(usize, f64)>; 2],
    cipher_law: Vec<f64>,
    /// `H(X1~ X2~ C1~ C2~)`.
    joint_entropy: f64,
    tables: Arc<Tables>,
}

fn slot(axis: Axis) -> usize {
    match axis {
        Axis::First => 0,
        Axis::Second => 1,
    }
}

/// Sums masses into `size` cells, in cell order.
fn dense_law(size: usize, cells: impl Iterator<Item = (usize, f64)>) -> Vec<f64> {
    let mut acc = vec![CompensatedSum::new(); size];
    for (i, p) in cells {
        acc[i].add(p);
    }
    acc.iter().map(CompensatedSum::value).collect()
}

fn entropy_of(law: &[f64]) -> f64 {
    entropy_bits(law.iter().copied()).max(0.0)
}

impl TildeEnsemble {
    /// Positive-probability atoms grouped by source pair in increasing
    /// `(x1, x2)` order. Each `(x, c)` appears once.
    pub fn atoms(&self) -> impl Iterator<Item = TildeAtom> + '_ {
        let m2 = self.cipher_counts[1];
        self.members.iter().flat_map(move |&(x1, x2, s, p)| {
            self.image.iter().map(move |&(w, pw)| {
                let c = self.tables.cipher_pair_add(s, w);
                TildeAtom {
                    x1,
                    x2,
                    c1: (c / m2) as u32,
                    c2: (c % m2) as u32,
                    p: p * pw,
                }
            })
        })
    }

    pub fn atom_count(&self) -> usize {
        self.members.len() * self.image.len()
    }

    fn words(&self, axis: Axis) -> usize {
        self.word_counts[slot(axis)]
    }

    fn ciphers(&self, axis: Axis) -> usize {
        self.cipher_counts[slot(axis)]
    }

    fn member_word(axis: Axis, m: &(u32, u32, usize, f64)) -> usize {
        match axis {
            Axis::First => m.0 as usize,
            Axis::Second => m.1 as usize,
        }
    }

    /// Syndrome of a member on terminal `axis`.
    fn member_syndrome(&self, axis: Axis, m: &(u32, u32, usize, f64)) -> usize {
        let m2 = self.cipher_counts[1];
        match axis {
            Axis::First => m.2 / m2,
            Axis::Second => m.2 % m2,
        }
    }

    /// `p_{C1~ C2~}`, indexed by `c1 * q2^{m2} + c2`.
    pub fn cipher_law(&self) -> &[f64] {
        &self.cipher_law
    }

    /// `p_{C_i~}`, indexed by ciphertext.
    pub fn cipher_marginal(&self, axis: Axis) -> Vec<f64> {
        let m2 = self.cipher_counts[1];
        let cell = |c: usize| match axis {
            Axis::First => c / m2,
            Axis::Second => c % m2,
        };
        dense_law(
            self.ciphers(axis),
            self.cipher_law
                .iter()
                .enumerate()
                .map(|(c, &p)| (cell(c), p)),
        )
    }

    /// `p_{X_j~}`, indexed by word.
    pub fn source_law(&self, axis: Axis) -> Vec<f64> {
        dense_law(
            self.words(axis),
            self.members
                .iter()
                .map(|m| (Self::member_word(axis, m), m.3)),
        )
    }

    /// `p_{X1~ X2~}`, indexed by `x1 * q2^n + x2`.
    pub fn source_pair_law(&self) -> Vec<f64> {
        let w2 = self.word_counts[1];
        dense_law(
            self.word_counts[0] * w2,
            self.members
                .iter()
                .map(|m| (m.0 as usize * w2 + m.1 as usize, m.3)),
        )
    }

    /// `p_{C_i~ X_j~}`, indexed by `c * q_j^n + x`. Uses
    /// `p(c_i | x) = W_i(c_i - A_i x_i)` with `W_i` the image law of `K_i`.
    pub fn cipher_source_law(&self, cipher: Axis, given: Axis) -> Vec<f64> {
        let w = self.words(given);
        let table = self.tables.get(cipher);
        let image = &self.image_marginal[slot(cipher)];
        dense_law(
            self.ciphers(cipher) * w,
            self.members.iter().flat_map(|m| {
                let s = self.member_syndrome(cipher, m);
                let x = Self::member_word(given, m);
                image
                    .iter()
                    .map(move |&(k, pk)| (table.cipher_add(s, k) * w + x, m.3 * pk))
            }),
        )
    }

    /// `p_{C_i~ | X_j~}(c | x)`, indexed by `c * q_j^n + x`; zero where
    /// `p_{X_j~}(x) = 0`.
    pub fn cipher_given_source(&self, cipher: Axis, given: Axis) -> Vec<f64> {
        let marg = self.source_law(given);
        let w = marg.len();
        let mut law = self.cipher_source_law(cipher, given);
        for (i, p) in law.iter_mut().enumerate() {
            if *p > 0.0 {
                *p /= marg[i % w];
            }
        }
        law
    }

    /// `H(C1~ C2~)`.
    pub fn h_ciphers(&self) -> f64 {
        entropy_of(&self.cipher_law)
    }

    /// `H(C_i~)` for terminal `axis`.
    pub fn h_cipher(&self, axis: Axis) -> f64 {
        entropy_of(&self.cipher_marginal(axis))
    }

    /// `H(X1~ X2~)`.
    pub fn h_sources(&self) -> f64 {
        entropy_of(&self.source_pair_law())
    }

    /// `H(C_i~ | X_j~)` for cipher terminal `cipher` and source terminal `given`.
    pub fn h_cipher_given_source(&self, cipher: Axis, given: Axis) -> f64 {
        let joint = entropy_of(&self.cipher_source_law(cipher, given));
        (joint - entropy_of(&self.source_law(given))).max(0.0)
    }

    /// `H(C_i~ | X1~ X2~)`. Given `x`, distinct key images give distinct
    /// ciphertexts, so the cells of `(x, c_i)` are `p_X~(x) W_i(w)`.
    pub fn h_cipher_given_sources(&self, cipher: Axis) -> f64 {
        let image = &self.image_marginal[slot(cipher)];
        let joint = entropy_bits(
            self.members
                .iter()
                .flat_map(|m| image.iter().map(move |&(_, pk)| m.3 * pk)),
        );
        (joint - self.h_sources()).max(0.0)
    }

    /// `H(C1~ C2~ | X1~ X2~)`.
    pub fn h_ciphers_given_sources(&self) -> f64 {
        (self.joint_entropy - self.h_sources()).max(0.0)
    }

    /// `I(X1~ X2~; C1~ C2~)`, the leakage conditioned on the event.
    pub fn mi(&self) -> f64 {
        (self.h_ciphers() - self.h_ciphers_given_sources()).max(0.0)
    }

    pub fn q_cond(&self, axis: Axis) -> &BTreeMap<u32, f64> {
        &self.q_cond[slot(axis)]
    }

    pub fn source_marginal(&self, axis: Axis) -> &BTreeMap<u32, f64> {
        &self.source_marginal[slot(axis)]
    }
}

/// Builds the ensemble on the typical-decodable set of `sets`.
///
/// The atom of `(x, c)` is `p^n(x) / Q12 * W(c - A x)` with `W` the key-image
/// law.
pub fn build_tilde(spec: &SystemSpec, sets: &TypicalSets) -> Result<TildeEnsemble> {
    if sets.d_tilde.is_empty() {
        return Err(Error::EmptyTypicalSet(format!(
            "n={}, gamma={}: no pair is both typical and decodable",
            sets.n, sets.gamma
        )));
    }
    if sets.n != spec.n() {
        return Err(Error::Domain(format!(
            "typical sets are for n={}, system has n={}",
            sets.n,
            spec.n()
        )));
    }
    let t = spec.tables()?;
    let px = spec.px();
    let w = key_image_distribution(spec)?;
    let m2 = t.second.cipher_count();
    let support: Vec<(usize, f64)> = w
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| (i, p))
        .collect();

    let probs: Vec<f64> = sets
        .d_tilde
        .iter()
        .map(|&(a, b)| spec.source_prob(t, a as usize, b as usize))
        .collect();
    let q12 = csum(probs.iter().copied());

    let members: Vec<(u32, u32, usize, f64)> = sets
        .d_tilde
        .iter()
        .zip(&probs)
        .map(|(&(x1, x2), &p)| {
            let s = t.cipher_pair(
                t.first.syndrome[x1 as usize] as usize,
                t.second.syndrome[x2 as usize] as usize,
            );
            (x1, x2, s, p / q12)
        })
        .collect();

    let m1 = t.first.cipher_count();
    let positive = |law: Vec<f64>| -> Vec<(usize, f64)> {
        law.into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .collect()
    };
    let image_marginal = [
        positive(dense_law(m1, support.iter().map(|&(k, p)| (k / m2, p)))),
        positive(dense_law(m2, support.iter().map(|&(k, p)| (k % m2, p)))),
    ];
    let syndrome_law = dense_law(m1 * m2, members.iter().map(|m| (m.2, m.3)));
    let cipher_law = dense_law(
        m1 * m2,
        syndrome_law
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .flat_map(|(s, &p)| {
                support
                    .iter()
                    .map(move |&(k, pk)| (t.cipher_pair_add(s, k), p * pk))
            }),
    );
    let joint_entropy = entropy_bits(
        members
            .iter()
            .flat_map(|m| support.iter().map(move |&(_, pk)| m.3 * pk)),
    );

    let mut source_marginal: [BTreeMap<u32, f64>; 2] = Default::default();
    let mut q_cond_acc: [BTreeMap<u32, CompensatedSum>; 2] = Default::default();
    for axis in [Axis::First, Axis::Second] {
        let table = t.get(axis);
        let other = axis.other();
        for (&(x1, x2), &p) in sets.d_tilde.iter().zip(&probs) {
            let (own, theirs) = match axis {
                Axis::First => (x1, x2),
                Axis::Second => (x2, x1),
            };
            source_marginal[slot(axis)].entry(own).or_insert_with(|| {
                marginal_product_prob(px, axis, table.word(own as usize)).unwrap_or(0.0)
            });
            // Q_{i|3-i}(x_{3-i}) accumulates p(x_i | x_{3-i}) over the slice,
            // with i = axis.
            let p_other = marginal_product_prob(px, other, t.get(other).word(theirs as usize))?;
            q_cond_acc[slot(axis)]
                .entry(theirs)
                .or_default()
                .add(p / p_other);
        }
    }
    let q_cond = q_cond_acc.map(|m| m.into_iter().map(|(k, v)| (k, v.value())).collect());
    let q_marginal = [
        csum(source_marginal[0].values().copied()),
        csum(source_marginal[1].values().copied()),
    ];

    Ok(TildeEnsemble {
        n: spec.n(),
        q12,
        q_marginal,
        q_cond,
        source_marginal,
        word_counts: [t.first.word_count(), t.second.word_count()],
        cipher_counts: [t.first.cipher_count(), m2],
        members,
        image: support,
        image_marginal,
        cipher_law,
        joint_entropy,
        tables: spec.shared_tables()?,
    })
}

/// Largest absolute gap between the ensemble atoms and the conditional law of
/// `(X1, X2, C1, C2)` given the typical-decodable event, where the latter is
/// computed by encrypting every member with every key pair. Needs
/// `|D~| q1^n q2^n` within the budget.
pub fn check_direct_law(spec: &SystemSpec, sets: &TypicalSets, ens: &TildeEnsemble) -> Result<f64> {
    check_budget(
        (sets.d_tilde.len() as u128).saturating_mul(spec.pair_count()),
        spec.budget(),
        "; the direct conditional law encrypts every member under every key pair",
    )?;
    let (f1, f2) = (spec.alphabet(Axis::First), spec.alphabet(Axis::Second));
    let n = spec.n();
    let (w1, w2) = (f1.word_count(n)?, f2.word_count(n)?);
    let keys1: Vec<Vec<u8>> = (0..w1).map(|k| f1.index_to_word(k, n)).collect();
    let keys2: Vec<Vec<u8>> = (0..w2).map(|k| f2.index_to_word(k, n)).collect();
    let mut key_probs = Vec::new();
    for (k1, a) in keys1.iter().enumerate() {
        for (k2, b) in keys2.iter().enumerate() {
            let p = product_prob(spec.pk(), &SequencePair::new(a.clone(), b.clone())?)?;
            if p > 0.0 {
                key_probs.push((k1, k2, p));
            }
        }
    }

    // Ciphertext index of every (source word, key word), by terminal.
    let ciphers = |enc, keys: &[Vec<u8>], f: &crate::gf::Alphabet, x: u32| -> Result<Vec<u64>> {
        let word = f.index_to_word(x as usize, n);
        keys.iter()
            .map(|k| Ok(f.word_to_index(&encrypt(enc, k, &word)?) as u64))
            .collect()
    };
    let mut table1: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    let mut table2: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for &(a, b) in &sets.d_tilde {
        if let std::collections::btree_map::Entry::Vacant(e) = table1.entry(a) {
            e.insert(ciphers(spec.enc1(), &keys1, f1, a)?);
        }
        if let std::collections::btree_map::Entry::Vacant(e) = table2.entry(b) {
            e.insert(ciphers(spec.enc2(), &keys2, f2, b)?);
        }
    }

    let c2_count = ens.cipher_counts[1] as u64;
    let c_pairs = ens.cipher_counts[0] as u64 * c2_count;
    let cell = |a: u32, b: u32, c1: u64, c2: u64| {
        ((a as u64 * w2 as u64 + b as u64) * c_pairs) + c1 * c2_count + c2
    };
    let mut event_mass = CompensatedSum::new();
    let mut joint: HashMap<u64, CompensatedSum> = HashMap::new();
    for &(a, b) in &sets.d_tilde {
        let pair = SequencePair {
            x1: f1.index_to_word(a as usize, n),
            x2: f2.index_to_word(b as usize, n),
        };
        let px = product_prob(spec.px(), &pair)?;
        event_mass.add(px);
        let (t1, t2) = (&table1[&a], &table2[&b]);
        for &(k1, k2, pk) in &key_probs {
            joint
                .entry(cell(a, b, t1[k1], t2[k2]))
                .or_default()
                .add(px * pk);
        }
    }
    let mass = event_mass.value();
    let mut worst: f64 = 0.0;
    let mut seen = 0usize;
    for atom in ens.atoms() {
        let direct = joint
            .get(&cell(atom.x1, atom.x2, atom.c1 as u64, atom.c2 as u64))
            .map_or(0.0, |s| s.value() / mass);
        worst = worst.max((direct - atom.p).abs());
        if direct > 0.0 {
            seen += 1;
        }
    }
    // Direct atoms the ensemble lacks count in full.
    if seen < joint.len() {
        let listed: std::collections::HashSet<u64> = ens
            .atoms()
            .map(|a| cell(a.x1, a.x2, a.c1 as u64, a.c2 as u64))
            .collect();
        for (k, v) in &joint {
            if !listed.contains(k) {
                worst = worst.max(v.value() / mass);
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::converse::build_typical;
    use crate::crypto::decodable_set;
    use crate::pmf::JointPmf;
    use approx::assert_abs_diff_eq;

    #[test]
    fn sure_event_gives_unconditional_laws() {
        let u = JointPmf::uniform(2, 2).unwrap();
        let spec = SystemSpec::identity(u.clone(), u.clone(), 2).unwrap();
        let set = decodable_set(&spec).unwrap();
        let sets = build_typical(&u, 2, 0.2, spec.budget())
            .unwrap()
            .restrict(&set, 0.0);
        let ens = build_tilde(&spec, &sets).unwrap();
        assert_abs_diff_eq!(ens.q12, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ens.h_sources(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ens.h_ciphers(), 4.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ens.mi(), 0.0, epsilon = 1e-12);
        assert!(check_direct_law(&spec, &sets, &ens).unwrap() < 1e-15);
    }

    #[test]
    fn single_pair_event_is_a_point_mass() {
        let x = JointPmf::dsbs(0.25).unwrap();
        let k = JointPmf::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        let spec = SystemSpec::identity(x.clone(), k, 1).unwrap();
        let set = decodable_set(&spec).unwrap();
        let mut sets = build_typical(&x, 1, 10.0, spec.budget())
            .unwrap()
            .restrict(&set, 0.0);
        sets.d_tilde = vec![(1, 0)];
        let ens = build_tilde(&spec, &sets).unwrap();
        assert_abs_diff_eq!(ens.h_sources(), 0.0, epsilon = 1e-15);
        let law = ens.cipher_law();
        // c = x + k with x = (1, 0): c1 = 1 + k1, c2 = k2.
        assert_abs_diff_eq!(law[0], 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(law[2], 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(law[1], 0.4, epsilon = 1e-15);
        assert!(check_direct_law(&spec, &sets, &ens).unwrap() < 1e-15);
    }

    #[test]
    fn empty_set_is_an_error() {
        let x = JointPmf::dsbs(0.25).unwrap();
        let spec = SystemSpec::identity(x.clone(), x.clone(), 2).unwrap();
        let mut sets = build_typical(&x, 2, 0.2, spec.budget()).unwrap();
        sets.d_tilde.clear();
        assert!(matches!(
            build_tilde(&spec, &sets),
            Err(Error::EmptyTypicalSet(_))
        ));
    }
}
