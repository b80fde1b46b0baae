//! Preimage key sets and the sum bounds they imply.
//!
//! For a ciphertext `c` and plaintext `x` on one terminal, the preimage set is
//! `A_x(c) = {k : A (x + k) = c}`. Distinct decodable plaintexts have disjoint
//! preimage sets for every ciphertext, so the conditional ciphertext
//! probabilities summed over the decodable plaintexts never exceed one.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::crypto::{encrypt, key_image_distribution, DecodableSet, LinearEncoder, SystemSpec};
use crate::error::check_budget;
use crate::gf::Symbol;
use crate::numeric::{csum, CompensatedSum};
use crate::pmf::{marginal_product_prob, Axis};
use crate::Result;

/// Tolerance on the unit bound of the sums.
pub const SUM_TOL: f64 = 1e-12;

/// The key set mapping plaintext `x` to ciphertext `c`, found by evaluating
/// the encryption map on every key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreimageSet {
    pub keys: Vec<Vec<Symbol>>,
}

impl PreimageSet {
    pub fn single(enc: &LinearEncoder, x: &[Symbol], c: &[Symbol]) -> Result<Self> {
        let f = enc.alphabet();
        let n = enc.n();
        let count = f.word_count(n)?;
        let mut keys = Vec::new();
        for idx in 0..count {
            let k = f.index_to_word(idx, n);
            if encrypt(enc, &k, x)? == c {
                keys.push(k);
            }
        }
        Ok(Self { keys })
    }

    /// `A_{x1,x2}(c1,c2) = A_{x1}(c1) x A_{x2}(c2)` as key pairs.
    pub fn joint(
        spec: &SystemSpec,
        x: (&[Symbol], &[Symbol]),
        c: (&[Symbol], &[Symbol]),
    ) -> Result<Vec<(Vec<Symbol>, Vec<Symbol>)>> {
        let a = Self::single(spec.enc1(), x.0, c.0)?;
        let b = Self::single(spec.enc2(), x.1, c.1)?;
        Ok(a.keys
            .iter()
            .flat_map(|k1| b.keys.iter().map(move |k2| (k1.clone(), k2.clone())))
            .collect())
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn contains(&self, key: &[Symbol]) -> bool {
        self.keys.iter().any(|k| k == key)
    }
}

/// Result of the disjointness scan.
#[derive(Debug, Clone, PartialEq)]
pub struct DisjointnessReport {
    /// Largest `|A_x(c) ∩ A_x'(c)|` over ciphertexts and distinct decodable
    /// plaintexts, on either terminal slice or jointly.
    pub max_overlap: usize,
    /// Number of (key, ciphertext) incidences examined.
    pub incidences: u64,
}

impl DisjointnessReport {
    pub fn pass(&self) -> bool {
        self.max_overlap == 0
    }
}

/// Largest number of keys shared by two distinct owners at one ciphertext,
/// given `(ciphertext, owner)` claims grouped per key.
fn max_shared(claims_per_key: impl Iterator<Item = Vec<(usize, usize)>>) -> usize {
    let mut shared: HashMap<(usize, usize, usize), usize> = HashMap::new();
    for mut claims in claims_per_key {
        claims.sort_unstable();
        for w in claims.windows(2) {
            if w[0].0 == w[1].0 && w[0].1 != w[1].1 {
                *shared.entry((w[0].0, w[0].1, w[1].1)).or_default() += 1;
            }
        }
    }
    shared.values().copied().max().unwrap_or(0)
}

/// Checks that preimage key sets of distinct decodable plaintexts never
/// intersect: within each slice `D_{i|3-i}(x)` on each terminal, and over
/// the joint set with key pairs.
pub fn check_disjointness(spec: &SystemSpec, set: &DecodableSet) -> Result<DisjointnessReport> {
    check_budget(
        (set.len() as u128).saturating_mul(spec.pair_count()),
        spec.budget(),
        "; the disjointness scan visits every member and key pair",
    )?;
    let t = spec.tables()?;
    let mut max_overlap = 0;
    let mut incidences = 0u64;

    for axis in [Axis::First, Axis::Second] {
        let table = t.get(axis);
        let other_words = t.get(axis.other()).word_count();
        for other in 0..other_words {
            let slice = set.slice(axis, other);
            if slice.len() < 2 {
                continue;
            }
            let per_key = (0..table.word_count()).map(|k| {
                slice
                    .iter()
                    .map(|&x| {
                        (
                            table.syndrome[table.word_add(x as usize, k)] as usize,
                            x as usize,
                        )
                    })
                    .collect()
            });
            max_overlap = max_overlap.max(max_shared(per_key));
            incidences += (slice.len() * table.word_count()) as u64;
        }
    }

    let pairs = set.pair_indices();
    let w2 = t.second.word_count();
    let per_key: Vec<usize> = (0..t.first.word_count() * w2)
        .into_par_iter()
        .map(|key| {
            let (k1, k2) = (key / w2, key % w2);
            max_shared(std::iter::once(
                pairs
                    .iter()
                    .enumerate()
                    .map(|(owner, &(x1, x2))| {
                        let c = t.cipher_pair(
                            t.first.syndrome[t.first.word_add(x1 as usize, k1)] as usize,
                            t.second.syndrome[t.second.word_add(x2 as usize, k2)] as usize,
                        );
                        (c, owner)
                    })
                    .collect(),
            ))
        })
        .collect();
    // A positive entry means some key pair is claimed twice at one ciphertext.
    let joint_overlap = per_key.into_iter().max().unwrap_or(0);
    max_overlap = max_overlap.max(joint_overlap);
    incidences += (pairs.len() * t.first.word_count() * w2) as u64;

    Ok(DisjointnessReport {
        max_overlap,
        incidences,
    })
}

/// Largest sums found by [`check_preimage_sums`].
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageSumReport {
    /// `max_c sum_{x in D} p(c | x)`.
    pub max_joint_sum: f64,
    /// `max_{c_i, x_{3-i}} sum_{x_i in D_{i|3-i}(x_{3-i})} p(c_i | x)` for
    /// `i = 1, 2`.
    pub max_conditional_sum: [f64; 2],
}

/// One line of the standalone report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub check: String,
    pub worst_case_value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl PreimageSumReport {
    pub fn pass(&self) -> bool {
        self.max_joint_sum <= 1.0 + SUM_TOL
            && self.max_conditional_sum.iter().all(|&s| s <= 1.0 + SUM_TOL)
    }

    pub fn rows(&self) -> Vec<CheckRow> {
        let row = |check: &str, v: f64| CheckRow {
            check: check.into(),
            worst_case_value: v,
            bound: 1.0,
            pass: v <= 1.0 + SUM_TOL,
        };
        vec![
            row("joint_sum", self.max_joint_sum),
            row("conditional_sum_1", self.max_conditional_sum[0]),
            row("conditional_sum_2", self.max_conditional_sum[1]),
        ]
    }
}

/// Per-terminal key image law `W_i(w) = Pr{A_i K_i = w}` from the joint one.
fn marginal_image(w: &[f64], m2: usize, axis: Axis) -> Vec<f64> {
    let m1 = w.len() / m2;
    match axis {
        Axis::First => (0..m1)
            .map(|a| csum((0..m2).map(|b| w[a * m2 + b])))
            .collect(),
        Axis::Second => (0..m2)
            .map(|b| csum((0..m1).map(|a| w[a * m2 + b])))
            .collect(),
    }
}

/// Evaluates both sum bounds exhaustively over ciphertexts.
pub fn check_preimage_sums(spec: &SystemSpec, set: &DecodableSet) -> Result<PreimageSumReport> {
    check_budget(
        (set.len() as u128).saturating_mul(spec.cipher_pair_count()),
        spec.budget(),
        "; the sum scan visits every member and ciphertext pair",
    )?;
    let t = spec.tables()?;
    let w = key_image_distribution(spec)?;
    let c_pairs = w.len();
    let syndromes: Vec<usize> = set
        .pair_indices()
        .iter()
        .map(|&(a, b)| {
            t.cipher_pair(
                t.first.syndrome[a as usize] as usize,
                t.second.syndrome[b as usize] as usize,
            )
        })
        .collect();
    let max_joint_sum = (0..c_pairs)
        .into_par_iter()
        .map(|c| csum(syndromes.iter().map(|&s| w[t.cipher_pair_sub(c, s)])))
        .reduce(|| 0.0, f64::max);

    let mut max_conditional_sum = [0.0f64; 2];
    for (slot, axis) in [Axis::First, Axis::Second].into_iter().enumerate() {
        let table = t.get(axis);
        let wi = marginal_image(&w, t.second.cipher_count(), axis);
        let other_words = t.get(axis.other()).word_count();
        for other in 0..other_words {
            let slice = set.slice(axis, other);
            if slice.is_empty() {
                continue;
            }
            for c in 0..table.cipher_count() {
                let mut acc = CompensatedSum::new();
                for &x in slice {
                    acc.add(wi[table.cipher_sub(c, table.syndrome[x as usize] as usize)]);
                }
                max_conditional_sum[slot] = max_conditional_sum[slot].max(acc.value());
            }
        }
    }
    Ok(PreimageSumReport {
        max_joint_sum,
        max_conditional_sum,
    })
}

/// Compares `p(c_i | x1, x2)`, computed from the joint key law, with
/// `Pr{K_i in A_{x_i}(c_i)}` from the key marginal alone, for every source
/// pair and ciphertext. Returns the largest absolute difference.
pub fn check_key_independence(spec: &SystemSpec) -> Result<f64> {
    check_budget(
        spec.pair_count().saturating_mul(spec.pair_count()),
        spec.budget(),
        "; every source pair is combined with every key pair",
    )?;
    let t = spec.tables()?;
    let w2 = t.second.word_count();
    let pk = spec.pk();
    let mut worst: f64 = 0.0;
    for axis in [Axis::First, Axis::Second] {
        let table = t.get(axis);
        // Pr{K_i in A_x(c)} by listing the preimage keys of each (x, c).
        let marginal: Vec<Vec<f64>> = (0..table.word_count())
            .map(|x| {
                let mut row = vec![CompensatedSum::new(); table.cipher_count()];
                for k in 0..table.word_count() {
                    let c = table.syndrome[table.word_add(x, k)] as usize;
                    row[c].add(marginal_product_prob(pk, axis, table.word(k)).unwrap_or(0.0));
                }
                row.iter().map(CompensatedSum::value).collect()
            })
            .collect();
        let diffs: Vec<f64> = (0..t.first.word_count() * w2)
            .into_par_iter()
            .map(|xi| {
                let (x1, x2) = (xi / w2, xi % w2);
                let mut cond = vec![CompensatedSum::new(); table.cipher_count()];
                for ki in 0..t.first.word_count() * w2 {
                    let (k1, k2) = (ki / w2, ki % w2);
                    let c = match axis {
                        Axis::First => t.first.syndrome[t.first.word_add(x1, k1)],
                        Axis::Second => t.second.syndrome[t.second.word_add(x2, k2)],
                    };
                    cond[c as usize].add(spec.key_prob(t, k1, k2));
                }
                let x = match axis {
                    Axis::First => x1,
                    Axis::Second => x2,
                };
                cond.iter()
                    .zip(&marginal[x])
                    .map(|(a, b)| (a.value() - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        worst = diffs.into_iter().fold(worst, f64::max);
    }
    Ok(worst)
}
