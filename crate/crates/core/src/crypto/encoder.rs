use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::gf::{rank, Alphabet, Symbol};
use crate::{Error, Result};

/// An `m x n` matrix over GF(q) acting as a compressor `x -> A x`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinearEncoder {
    alphabet: Alphabet,
    n: usize,
    rows: Vec<Vec<Symbol>>,
}

impl LinearEncoder {
    /// Validates `1 <= m <= n`, row lengths and entries.
    pub fn new(alphabet: Alphabet, n: usize, rows: Vec<Vec<Symbol>>) -> Result<Self> {
        let m = rows.len();
        if n == 0 || m == 0 || m > n {
            return Err(Error::InvalidEncoder(format!(
                "need 1 <= m <= n, got m={m}, n={n}"
            )));
        }
        if let Some(row) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::InvalidEncoder(format!(
                "row of length {} in a matrix with n={n}",
                row.len()
            )));
        }
        if rows.iter().flatten().any(|&v| !alphabet.contains(v)) {
            return Err(Error::InvalidEncoder(format!(
                "matrix entry outside GF({})",
                alphabet.size()
            )));
        }
        Ok(Self { alphabet, n, rows })
    }

    pub fn identity(alphabet: Alphabet, n: usize) -> Result<Self> {
        let rows = (0..n)
            .map(|i| (0..n).map(|j| Symbol::from(i == j)).collect())
            .collect();
        Self::new(alphabet, n, rows)
    }

    /// Uniform random `m x n` matrix conditioned on full row rank.
    pub fn random_full_rank<R: Rng + ?Sized>(
        alphabet: Alphabet,
        n: usize,
        m: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n == 0 || m == 0 || m > n {
            return Err(Error::InvalidEncoder(format!(
                "need 1 <= m <= n, got m={m}, n={n}"
            )));
        }
        let q = alphabet.size() as Symbol;
        loop {
            let rows: Vec<Vec<Symbol>> = (0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(0..q)).collect())
                .collect();
            if rank(&alphabet, &rows) == m {
                return Self::new(alphabet, n, rows);
            }
        }
    }

    pub fn seeded(alphabet: Alphabet, n: usize, m: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::random_full_rank(alphabet, n, m, &mut rng)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<Symbol>] {
        &self.rows
    }

    pub fn rank(&self) -> usize {
        rank(&self.alphabet, &self.rows)
    }

    /// `(m/n) log2 q`, the rate in bits per source symbol.
    pub fn rate(&self) -> f64 {
        self.m() as f64 / self.n as f64 * self.alphabet.log_size()
    }

    /// `A x`.
    pub fn apply(&self, x: &[Symbol]) -> Result<Vec<Symbol>> {
        self.check_len(x, "input")?;
        if let Some(&s) = x.iter().find(|&&s| !self.alphabet.contains(s)) {
            return Err(Error::Domain(format!(
                "symbol {s} outside GF({})",
                self.alphabet.size()
            )));
        }
        Ok(self.apply_unchecked(x))
    }

    pub(crate) fn apply_unchecked(&self, x: &[Symbol]) -> Vec<Symbol> {
        let f = &self.alphabet;
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .zip(x)
                    .fold(0, |acc, (&a, &b)| f.add(acc, f.mul(a, b)))
            })
            .collect()
    }

    pub(crate) fn check_len(&self, x: &[Symbol], what: &str) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::Domain(format!(
                "{what} has length {}, encoder expects {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }
}
