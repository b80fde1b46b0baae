//! Brute-force oracles shared by the integration tests. Everything here
//! enumerates sources and keys through the public API only.
#![allow(dead_code)]

use dselab::crypto::{encrypt, SystemSpec};
use dselab::gf::{Alphabet, Symbol};
use dselab::pmf::{mutual_information_table, product_prob, Axis, JointPmf, SequencePair};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn words(f: &Alphabet, n: usize) -> Vec<Vec<Symbol>> {
    let count = f.word_count(n).unwrap();
    (0..count).map(|i| f.index_to_word(i, n)).collect()
}

pub fn pair_prob(joint: &JointPmf, a: &[Symbol], b: &[Symbol]) -> f64 {
    product_prob(joint, &SequencePair::new(a.to_vec(), b.to_vec()).unwrap()).unwrap()
}

/// Joint law of the source pair and the ciphertext pair, rows indexed by
/// `x1 * q2^n + x2` and columns by `c1 * q2^m2 + c2`, by enumerating every
/// source pair and key pair and encrypting.
pub struct BruteJoint {
    pub table: Vec<f64>,
    pub rows: usize,
    pub cols: usize,
    pub c2_count: usize,
}

impl BruteJoint {
    pub fn of(spec: &SystemSpec) -> Self {
        let n = spec.n();
        let (f1, f2) = (spec.alphabet(Axis::First), spec.alphabet(Axis::Second));
        let (w1, w2) = (words(f1, n), words(f2, n));
        let c1_count = f1.word_count(spec.enc1().m()).unwrap();
        let c2_count = f2.word_count(spec.enc2().m()).unwrap();
        let rows = w1.len() * w2.len();
        let cols = c1_count * c2_count;
        let mut table = vec![0.0; rows * cols];
        let keys: Vec<(Vec<Symbol>, Vec<Symbol>, f64)> = w1
            .iter()
            .flat_map(|a| w2.iter().map(move |b| (a.clone(), b.clone())))
            .map(|(a, b)| {
                let p = pair_prob(spec.pk(), &a, &b);
                (a, b, p)
            })
            .filter(|k| k.2 > 0.0)
            .collect();
        for (i1, x1) in w1.iter().enumerate() {
            for (i2, x2) in w2.iter().enumerate() {
                let px = pair_prob(spec.px(), x1, x2);
                if px == 0.0 {
                    continue;
                }
                let row = i1 * w2.len() + i2;
                for (k1, k2, pk) in &keys {
                    let c1 = f1.word_to_index(&encrypt(spec.enc1(), k1, x1).unwrap());
                    let c2 = f2.word_to_index(&encrypt(spec.enc2(), k2, x2).unwrap());
                    table[row * cols + c1 * c2_count + c2] += px * pk;
                }
            }
        }
        Self {
            table,
            rows,
            cols,
            c2_count,
        }
    }

    pub fn mutual_information(&self) -> f64 {
        mutual_information_table(&self.table, self.rows, self.cols).unwrap()
    }
}

/// `p(c | x)` for one source pair, indexed like the columns of [`BruteJoint`].
pub fn cipher_given_source(spec: &SystemSpec, x1: &[Symbol], x2: &[Symbol]) -> Vec<f64> {
    let n = spec.n();
    let (f1, f2) = (spec.alphabet(Axis::First), spec.alphabet(Axis::Second));
    let c2_count = f2.word_count(spec.enc2().m()).unwrap();
    let c1_count = f1.word_count(spec.enc1().m()).unwrap();
    let mut law = vec![0.0; c1_count * c2_count];
    for k1 in words(f1, n) {
        for k2 in words(f2, n) {
            let pk = pair_prob(spec.pk(), &k1, &k2);
            if pk == 0.0 {
                continue;
            }
            let c1 = f1.word_to_index(&encrypt(spec.enc1(), &k1, x1).unwrap());
            let c2 = f2.word_to_index(&encrypt(spec.enc2(), &k2, x2).unwrap());
            law[c1 * c2_count + c2] += pk;
        }
    }
    law
}

/// Largest joint and conditional sums of `p(c | x)` over a set of source
/// pairs given as word indices, by direct enumeration.
pub fn brute_preimage_sums(spec: &SystemSpec, pairs: &[(u32, u32)]) -> (f64, [f64; 2]) {
    let n = spec.n();
    let (f1, f2) = (spec.alphabet(Axis::First), spec.alphabet(Axis::Second));
    let c2_count = f2.word_count(spec.enc2().m()).unwrap();
    let c1_count = f1.word_count(spec.enc1().m()).unwrap();
    let laws: Vec<Vec<f64>> = pairs
        .iter()
        .map(|&(a, b)| {
            cipher_given_source(
                spec,
                &f1.index_to_word(a as usize, n),
                &f2.index_to_word(b as usize, n),
            )
        })
        .collect();
    let joint = (0..c1_count * c2_count)
        .map(|c| laws.iter().map(|l| l[c]).sum::<f64>())
        .fold(0.0, f64::max);

    let mut cond = [0.0f64; 2];
    // Terminal-1 ciphertext given x2: sum over x1 in the slice.
    let mut acc1 = std::collections::BTreeMap::<(u32, usize), f64>::new();
    let mut acc2 = std::collections::BTreeMap::<(u32, usize), f64>::new();
    for (&(a, b), law) in pairs.iter().zip(&laws) {
        for c1 in 0..c1_count {
            let p: f64 = (0..c2_count).map(|c2| law[c1 * c2_count + c2]).sum();
            *acc1.entry((b, c1)).or_default() += p;
        }
        for c2 in 0..c2_count {
            let p: f64 = (0..c1_count).map(|c1| law[c1 * c2_count + c2]).sum();
            *acc2.entry((a, c2)).or_default() += p;
        }
    }
    cond[0] = acc1.values().copied().fold(0.0, f64::max);
    cond[1] = acc2.values().copied().fold(0.0, f64::max);
    (joint, cond)
}

/// Entropy in bits of a list of masses.
pub fn entropy(masses: impl IntoIterator<Item = f64>) -> f64 {
    masses
        .into_iter()
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum()
}
