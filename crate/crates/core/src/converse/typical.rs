use rayon::prelude::*;

use crate::crypto::DecodableSet;
use crate::error::check_budget;
use crate::gf::Symbol;
use crate::numeric::{csum, pow_u128};
use crate::pmf::{
    check_word, conditional_entropy, product_prob_unchecked, Axis, JointPmf, SequencePair,
};
use crate::Result;

/// Absolute slack added to the typicality conditions so that sequences whose
/// empirical rate equals `H +- gamma` are not dropped by rounding.
pub const TYPICAL_TOL: f64 = 1e-12;

/// The entropy-typical pairs, their intersection with a decodable set, and the
/// atypical mass.
#[derive(Debug, Clone, PartialEq)]
pub struct TypicalSets {
    pub n: usize,
    pub gamma: f64,
    /// Typical pairs as word indices, sorted.
    pub a_tilde: Vec<(u32, u32)>,
    /// Typical and decodable pairs, sorted. Equal to `a_tilde` until
    /// [`TypicalSets::restrict`] is applied.
    pub d_tilde: Vec<(u32, u32)>,
    /// `1 - p^n(a_tilde)`.
    pub nu: f64,
    /// Reliability budget attached by [`TypicalSets::restrict`].
    pub epsilon: f64,
}

impl TypicalSets {
    /// Intersects with the decodable set and attaches the reliability budget.
    pub fn restrict(mut self, set: &DecodableSet, epsilon: f64) -> Self {
        self.d_tilde = self
            .a_tilde
            .iter()
            .copied()
            .filter(|&(a, b)| set.contains_indices(a as usize, b as usize))
            .collect();
        self.epsilon = epsilon;
        self
    }

    /// `nu + epsilon`.
    pub fn nu_bar(&self) -> f64 {
        self.nu + self.epsilon
    }
}

/// Per-pair log-probabilities `-(1/n) log2` of the joint and both
/// conditionals, from the joint type.
fn empirical_rates(px: &JointPmf, x1: &[Symbol], x2: &[Symbol]) -> Option<[f64; 3]> {
    let n = x1.len() as f64;
    let p = product_prob_unchecked(px, x1, x2);
    if p <= 0.0 {
        return None;
    }
    let (q1, q2) = (px.q1(), px.q2());
    let m1 = px.marginal(Axis::First);
    let m2 = px.marginal(Axis::Second);
    let mut joint = 0.0;
    let mut marg1 = 0.0;
    let mut marg2 = 0.0;
    let mut cells = vec![0u32; q1 * q2];
    for (&a, &b) in x1.iter().zip(x2) {
        cells[a as usize * q2 + b as usize] += 1;
    }
    for a in 0..q1 {
        let row: u32 = (0..q2).map(|b| cells[a * q2 + b]).sum();
        if row > 0 {
            marg1 += row as f64 * m1[a].log2();
        }
    }
    for b in 0..q2 {
        let col: u32 = (0..q1).map(|a| cells[a * q2 + b]).sum();
        if col > 0 {
            marg2 += col as f64 * m2[b].log2();
        }
    }
    for (cell, &c) in cells.iter().enumerate() {
        if c > 0 {
            joint += c as f64 * px.probs()[cell].log2();
        }
    }
    Some([-joint / n, -(joint - marg2) / n, -(joint - marg1) / n])
}

/// Whether `pair` satisfies the three typicality conditions: the joint rate
/// and both conditional rates lie within `gamma` of their entropies.
pub fn is_typical(px: &JointPmf, gamma: f64, pair: &SequencePair) -> Result<bool> {
    check_word(px.alphabet1(), &pair.x1)?;
    check_word(px.alphabet2(), &pair.x2)?;
    let targets = [
        px.joint_entropy(),
        conditional_entropy(px, Axis::Second),
        conditional_entropy(px, Axis::First),
    ];
    Ok(typical_against(px, gamma, &targets, &pair.x1, &pair.x2))
}

fn typical_against(
    px: &JointPmf,
    gamma: f64,
    targets: &[f64; 3],
    x1: &[Symbol],
    x2: &[Symbol],
) -> bool {
    match empirical_rates(px, x1, x2) {
        Some(rates) => rates
            .iter()
            .zip(targets)
            .all(|(r, h)| (r - h).abs() <= gamma + TYPICAL_TOL),
        None => false,
    }
}

/// Enumerates the typical set of length-`n` pairs. Needs `q1^n q2^n` within
/// the budget.
pub fn build_typical(px: &JointPmf, n: usize, gamma: f64, budget: u64) -> Result<TypicalSets> {
    check_budget(
        pow_u128(px.q1(), n).saturating_mul(pow_u128(px.q2(), n)),
        budget,
        "; typical sets are enumerated exactly",
    )?;
    let (f1, f2) = (px.alphabet1(), px.alphabet2());
    let (w1, w2) = (f1.word_count(n)?, f2.word_count(n)?);
    let targets = [
        px.joint_entropy(),
        conditional_entropy(px, Axis::Second),
        conditional_entropy(px, Axis::First),
    ];
    let words2: Vec<Vec<Symbol>> = (0..w2).map(|i| f2.index_to_word(i, n)).collect();
    let rows: Vec<(Vec<(u32, u32)>, f64)> = (0..w1)
        .into_par_iter()
        .map(|i1| {
            let x1 = f1.index_to_word(i1, n);
            let mut members = Vec::new();
            let mut mass = Vec::new();
            for (i2, x2) in words2.iter().enumerate() {
                if typical_against(px, gamma, &targets, &x1, x2) {
                    members.push((i1 as u32, i2 as u32));
                    mass.push(product_prob_unchecked(px, &x1, x2));
                }
            }
            (members, csum(mass))
        })
        .collect();
    let mass = csum(rows.iter().map(|r| r.1));
    let a_tilde: Vec<(u32, u32)> = rows.into_iter().flat_map(|r| r.0).collect();
    Ok(TypicalSets {
        n,
        gamma,
        d_tilde: a_tilde.clone(),
        a_tilde,
        nu: (1.0 - mass).clamp(0.0, 1.0),
        epsilon: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::DEFAULT_BUDGET;

    #[test]
    fn uniform_sources_are_all_typical() {
        let u = JointPmf::uniform(2, 2).unwrap();
        let t = build_typical(&u, 3, 0.01, DEFAULT_BUDGET).unwrap();
        assert_eq!(t.a_tilde.len(), 64);
        assert_eq!(t.nu, 0.0);
    }

    #[test]
    fn large_gamma_gives_the_support() {
        let j = JointPmf::from_rows(&[vec![0.5, 0.0], vec![0.25, 0.25]]).unwrap();
        // log2(1 / p_min) bounds every rate for the joint and both conditionals
        let gamma = 10.0;
        let t = build_typical(&j, 3, gamma, DEFAULT_BUDGET).unwrap();
        assert_eq!(t.a_tilde.len(), 27);
        assert!(t.nu.abs() < 1e-15);
    }

    #[test]
    fn members_recheck() {
        let x = JointPmf::dsbs(0.25).unwrap();
        let t = build_typical(&x, 4, 0.2, DEFAULT_BUDGET).unwrap();
        let f = x.alphabet1();
        for &(a, b) in &t.a_tilde {
            let pair = SequencePair::new(
                f.index_to_word(a as usize, 4),
                f.index_to_word(b as usize, 4),
            )
            .unwrap();
            assert!(is_typical(&x, 0.2, &pair).unwrap());
        }
        assert!(t.nu > 0.0 && t.nu < 1.0);
    }
}
