//! Prime-field alphabets and the word/index conventions used for enumeration.
//!
//! A word of length `n` over GF(q) is identified with its big-endian base-`q`
//! index, so increasing indices enumerate words in lexicographic order.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type Symbol = u8;

/// GF(q) for prime `q`, with precomputed addition, negation and multiplication.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Alphabet {
    q: u32,
    add: Vec<Symbol>,
    mul: Vec<Symbol>,
    neg: Vec<Symbol>,
    inv: Vec<Symbol>,
}

impl Alphabet {
    /// Builds GF(q). Only prime `q` in `2..=251` is supported.
    pub fn new(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::Domain(format!(
                "alphabet size must be >= 2, got {q}"
            )));
        }
        if q > 251 || !is_prime(q) {
            return Err(Error::Domain(format!(
                "alphabet size {q} is not a supported prime (2..=251)"
            )));
        }
        let qu = q as usize;
        let mut add = vec![0; qu * qu];
        let mut mul = vec![0; qu * qu];
        for a in 0..qu {
            for b in 0..qu {
                add[a * qu + b] = ((a + b) % qu) as Symbol;
                mul[a * qu + b] = ((a * b) % qu) as Symbol;
            }
        }
        let neg = (0..qu).map(|a| ((qu - a) % qu) as Symbol).collect();
        let inv = (0..qu)
            .map(|a| {
                if a == 0 {
                    0
                } else {
                    (1..qu).find(|&b| (a * b) % qu == 1).unwrap() as Symbol
                }
            })
            .collect();
        Ok(Self {
            q,
            add,
            mul,
            neg,
            inv,
        })
    }

    pub fn binary() -> Self {
        Self::new(2).expect("2 is prime")
    }

    pub fn size(&self) -> usize {
        self.q as usize
    }

    /// `log2 q`, the per-symbol information capacity.
    pub fn log_size(&self) -> f64 {
        (self.q as f64).log2()
    }

    #[inline]
    pub fn add(&self, a: Symbol, b: Symbol) -> Symbol {
        self.add[a as usize * self.q as usize + b as usize]
    }

    #[inline]
    pub fn neg(&self, a: Symbol) -> Symbol {
        self.neg[a as usize]
    }

    #[inline]
    pub fn sub(&self, a: Symbol, b: Symbol) -> Symbol {
        self.add(a, self.neg(b))
    }

    #[inline]
    pub fn mul(&self, a: Symbol, b: Symbol) -> Symbol {
        self.mul[a as usize * self.q as usize + b as usize]
    }

    /// Multiplicative inverse; `inv(0)` is reported as 0.
    #[inline]
    pub fn inv(&self, a: Symbol) -> Symbol {
        self.inv[a as usize]
    }

    pub fn contains(&self, a: Symbol) -> bool {
        (a as u32) < self.q
    }

    pub fn add_words(&self, a: &[Symbol], b: &[Symbol]) -> Vec<Symbol> {
        a.iter().zip(b).map(|(&x, &y)| self.add(x, y)).collect()
    }

    pub fn sub_words(&self, a: &[Symbol], b: &[Symbol]) -> Vec<Symbol> {
        a.iter().zip(b).map(|(&x, &y)| self.sub(x, y)).collect()
    }

    /// Number of words of length `n`, or an error if it does not fit in `usize`.
    pub fn word_count(&self, n: usize) -> Result<usize> {
        let mut acc: usize = 1;
        for _ in 0..n {
            acc = acc
                .checked_mul(self.q as usize)
                .ok_or_else(|| Error::Domain(format!("q^{n} overflows")))?;
        }
        Ok(acc)
    }

    pub fn word_to_index(&self, word: &[Symbol]) -> usize {
        word.iter()
            .fold(0usize, |acc, &s| acc * self.q as usize + s as usize)
    }

    pub fn index_to_word(&self, mut index: usize, n: usize) -> Vec<Symbol> {
        let q = self.q as usize;
        let mut out = vec![0; n];
        for slot in out.iter_mut().rev() {
            *slot = (index % q) as Symbol;
            index /= q;
        }
        out
    }
}

impl TryFrom<u32> for Alphabet {
    type Error = Error;

    fn try_from(q: u32) -> Result<Self> {
        Alphabet::new(q)
    }
}

impl From<Alphabet> for u32 {
    fn from(a: Alphabet) -> u32 {
        a.q
    }
}

fn is_prime(q: u32) -> bool {
    q >= 2
        && (2..q)
            .take_while(|d| d * d <= q)
            .all(|d| !q.is_multiple_of(d))
}

/// Rank of a matrix over GF(q) by Gaussian elimination.
pub fn rank(alphabet: &Alphabet, rows: &[Vec<Symbol>]) -> usize {
    let mut m: Vec<Vec<Symbol>> = rows.to_vec();
    let cols = m.first().map_or(0, |r| r.len());
    let mut rank = 0;
    for col in 0..cols {
        let Some(pivot) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, pivot);
        let inv = alphabet.inv(m[rank][col]);
        for v in m[rank].iter_mut() {
            *v = alphabet.mul(*v, inv);
        }
        for r in 0..m.len() {
            if r != rank && m[r][col] != 0 {
                let factor = m[r][col];
                let pivot = m[rank].clone();
                for (v, &p) in m[r].iter_mut().zip(&pivot) {
                    *v = alphabet.sub(*v, alphabet.mul(factor, p));
                }
            }
        }
        rank += 1;
    }
    rank
}
