use rayon::prelude::*;

use super::{CosetTable, SystemSpec, Tables};
use crate::error::check_budget;
use crate::gf::Symbol;
use crate::pmf::{check_word, Axis, SequencePair};
use crate::{Error, Result};

/// Output of the key-free decoder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub pair: SequencePair,
    /// False when a syndrome lies outside the column space of its matrix; the
    /// pair is then the all-zero pair.
    pub in_range: bool,
}

/// Maximum-likelihood decoding over a coset pair, by word indices.
///
/// Candidates are scanned in lexicographic order of `(x1, x2)` and only a
/// strictly larger probability replaces the incumbent, so ties go to the
/// lexicographically smallest pair.
pub(crate) fn decode_indices(
    spec: &SystemSpec,
    t: &Tables,
    s1: usize,
    s2: usize,
) -> Option<(usize, usize)> {
    let c1 = &t.first.members[s1];
    let c2 = &t.second.members[s2];
    if c1.is_empty() || c2.is_empty() {
        return None;
    }
    let mut best = (c1[0] as usize, c2[0] as usize);
    let mut best_p = spec.source_prob(t, best.0, best.1);
    for &x1 in c1 {
        for &x2 in c2 {
            let p = spec.source_prob(t, x1 as usize, x2 as usize);
            if p > best_p {
                best_p = p;
                best = (x1 as usize, x2 as usize);
            }
        }
    }
    Some(best)
}

fn syndrome_index(spec: &SystemSpec, axis: Axis, s: &[Symbol]) -> Result<usize> {
    let enc = spec.encoder(axis);
    if s.len() != enc.m() {
        return Err(Error::Domain(format!(
            "syndrome has length {}, encoder outputs {}",
            s.len(),
            enc.m()
        )));
    }
    check_word(enc.alphabet(), s)?;
    Ok(enc.alphabet().word_to_index(s))
}

fn word_of(table: &CosetTable, idx: usize) -> Vec<Symbol> {
    table.word(idx).to_vec()
}

/// Key-free decoder: the most likely pair `(x1, x2)` with `A1 x1 = s1` and
/// `A2 x2 = s2`, ties broken lexicographically.
pub fn ml_decode(s1: &[Symbol], s2: &[Symbol], spec: &SystemSpec) -> Result<Decoded> {
    let i1 = syndrome_index(spec, Axis::First, s1)?;
    let i2 = syndrome_index(spec, Axis::Second, s2)?;
    let t = spec.tables()?;
    Ok(match decode_indices(spec, t, i1, i2) {
        Some((x1, x2)) => Decoded {
            pair: SequencePair {
                x1: word_of(&t.first, x1),
                x2: word_of(&t.second, x2),
            },
            in_range: true,
        },
        None => Decoded {
            pair: SequencePair {
                x1: vec![0; spec.n()],
                x2: vec![0; spec.n()],
            },
            in_range: false,
        },
    })
}

/// Removes the key images and decodes: `ml_decode(c1 - A1 k1, c2 - A2 k2)`.
pub fn decrypt(
    spec: &SystemSpec,
    k1: &[Symbol],
    k2: &[Symbol],
    c1: &[Symbol],
    c2: &[Symbol],
) -> Result<SequencePair> {
    let (e1, e2) = (spec.enc1(), spec.enc2());
    if c1.len() != e1.m() || c2.len() != e2.m() {
        return Err(Error::Domain(format!(
            "ciphertext lengths ({}, {}) do not match encoder outputs ({}, {})",
            c1.len(),
            c2.len(),
            e1.m(),
            e2.m()
        )));
    }
    e1.check_len(k1, "key")?;
    e2.check_len(k2, "key")?;
    let s1 = e1.alphabet().sub_words(c1, &e1.apply(k1)?);
    let s2 = e2.alphabet().sub_words(c2, &e2.apply(k2)?);
    Ok(ml_decode(&s1, &s2, spec)?.pair)
}

/// The set of source pairs recovered correctly by the key-free decoder, with
/// its per-coordinate slices.
#[derive(Debug, Clone)]
pub struct DecodableSet {
    n: usize,
    q1: usize,
    q2: usize,
    words2: usize,
    pairs: Vec<(u32, u32)>,
    members: Vec<bool>,
    given_second: Vec<Vec<u32>>,
    given_first: Vec<Vec<u32>>,
}

/// Enumerates the decodable set exactly. Needs `q1^n q2^n` within the budget.
///
/// Each in-range syndrome pair decodes to exactly one member, and a pair is a
/// member iff it is the decoder output for its own syndromes.
pub fn decodable_set(spec: &SystemSpec) -> Result<DecodableSet> {
    check_budget(
        spec.pair_count(),
        spec.budget(),
        "; the decodable set is never sampled",
    )?;
    let t = spec.tables()?;
    let (w1, w2) = (t.first.word_count(), t.second.word_count());
    let m2 = t.second.cipher_count();
    let rows: Vec<Vec<(u32, u32)>> = (0..t.first.cipher_count())
        .into_par_iter()
        .map(|s1| {
            (0..m2)
                .filter_map(|s2| decode_indices(spec, t, s1, s2))
                .map(|(a, b)| (a as u32, b as u32))
                .collect()
        })
        .collect();
    let mut pairs: Vec<(u32, u32)> = rows.into_iter().flatten().collect();
    pairs.sort_unstable();
    let mut members = vec![false; w1 * w2];
    let mut given_second = vec![Vec::new(); w2];
    let mut given_first = vec![Vec::new(); w1];
    for &(a, b) in &pairs {
        members[a as usize * w2 + b as usize] = true;
        given_second[b as usize].push(a);
        given_first[a as usize].push(b);
    }
    Ok(DecodableSet {
        n: spec.n(),
        q1: spec.alphabet(Axis::First).size(),
        q2: spec.alphabet(Axis::Second).size(),
        words2: w2,
        pairs,
        members,
        given_second,
        given_first,
    })
}

impl DecodableSet {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Members as word-index pairs, sorted lexicographically.
    pub fn pair_indices(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn contains_indices(&self, x1: usize, x2: usize) -> bool {
        self.members[x1 * self.words2 + x2]
    }

    pub fn contains(&self, pair: &SequencePair) -> bool {
        if pair.len() != self.n
            || pair.x1.iter().any(|&s| s as usize >= self.q1)
            || pair.x2.iter().any(|&s| s as usize >= self.q2)
        {
            return false;
        }
        let idx = |w: &[Symbol], q: usize| w.iter().fold(0usize, |acc, &s| acc * q + s as usize);
        self.contains_indices(idx(&pair.x1, self.q1), idx(&pair.x2, self.q2))
    }

    /// `D_{i|3-i}(x)`: indices of the `X_i` words decodable together with the
    /// word of index `x` on the other terminal. `axis` names `X_i`.
    pub fn slice(&self, axis: Axis, other: usize) -> &[u32] {
        match axis {
            Axis::First => &self.given_second[other],
            Axis::Second => &self.given_first[other],
        }
    }

    /// Indices of the words on `axis` that occur in some member, ascending.
    pub fn projection(&self, axis: Axis) -> Vec<u32> {
        let slices = match axis {
            Axis::First => &self.given_first,
            Axis::Second => &self.given_second,
        };
        (0..slices.len() as u32)
            .filter(|&i| !slices[i as usize].is_empty())
            .collect()
    }

    pub fn to_pairs(&self, spec: &SystemSpec) -> Result<Vec<SequencePair>> {
        let t = spec.tables()?;
        Ok(self
            .pairs
            .iter()
            .map(|&(a, b)| SequencePair {
                x1: word_of(&t.first, a as usize),
                x2: word_of(&t.second, b as usize),
            })
            .collect())
    }

    /// Re-encodes and re-decodes every member through the public operations.
    pub fn recheck(&self, spec: &SystemSpec) -> Result<bool> {
        for pair in self.to_pairs(spec)? {
            let s1 = spec.enc1().apply(&pair.x1)?;
            let s2 = spec.enc2().apply(&pair.x2)?;
            if ml_decode(&s1, &s2, spec)?.pair != pair {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
