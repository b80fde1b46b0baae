mod common;

use std::collections::BTreeMap;

use approx::assert_abs_diff_eq;
use dselab::converse::{
    build_tilde, build_typical, run_all, zeta, Premises, TypicalParams, TypicalSets,
};
use dselab::crypto::{decodable_set, encrypt, error_probability, SystemSpec};
use dselab::pmf::{Axis, JointPmf};
use dselab::DEFAULT_BUDGET;
use proptest::prelude::*;
use rand::Rng;

use common::{entropy, pair_prob, rng, words};

fn random_system(seed: u64, n: usize) -> SystemSpec {
    let mut r = rng(seed);
    let px = JointPmf::random(2, 2, &mut r).unwrap();
    let raw = JointPmf::random(2, 2, &mut r).unwrap();
    let pk = JointPmf::new(2, 2, raw.probs().iter().map(|p| 0.5 * p + 0.125).collect()).unwrap();
    let m1 = r.gen_range(1..=n);
    let m2 = r.gen_range(1..=n);
    SystemSpec::random(px, pk, n, m1, m2, r.gen()).unwrap()
}

fn restricted(spec: &SystemSpec, gamma: f64) -> TypicalSets {
    let set = decodable_set(spec).unwrap();
    let p_e = error_probability(spec).unwrap();
    build_typical(spec.px(), spec.n(), gamma, DEFAULT_BUDGET)
        .unwrap()
        .restrict(&set, p_e)
}

/// Marginal of `p` over sequences of one terminal.
fn word_prob(joint: &JointPmf, axis: Axis, w: &[u8]) -> f64 {
    let m = joint.marginal(axis);
    w.iter().map(|&s| m[s as usize]).product()
}

#[test]
fn typical_set_matches_direct_rates() {
    let mut r = rng(1);
    for n in 1..=5 {
        let px = JointPmf::random(2, 2, &mut r).unwrap();
        let gamma = 0.3;
        let sets = build_typical(&px, n, gamma, DEFAULT_BUDGET).unwrap();
        let h = [
            px.joint_entropy(),
            px.joint_entropy() - px.marginal_entropy(Axis::Second),
            px.joint_entropy() - px.marginal_entropy(Axis::First),
        ];
        let f = px.alphabet1().clone();
        let mut mass = 0.0;
        for (i1, a) in words(&f, n).iter().enumerate() {
            for (i2, b) in words(&f, n).iter().enumerate() {
                let p = pair_prob(&px, a, b);
                let rates = [
                    -p.log2() / n as f64,
                    -(p / word_prob(&px, Axis::Second, b)).log2() / n as f64,
                    -(p / word_prob(&px, Axis::First, a)).log2() / n as f64,
                ];
                let gaps: Vec<f64> = rates
                    .iter()
                    .zip(&h)
                    .map(|(x, y)| (x - y).abs() - gamma)
                    .collect();
                if p > 0.0 && gaps.iter().all(|g| g.abs() > 1e-9) {
                    let typical = gaps.iter().all(|&g| g < 0.0);
                    assert_eq!(sets.a_tilde.contains(&(i1 as u32, i2 as u32)), typical);
                }
                if sets.a_tilde.contains(&(i1 as u32, i2 as u32)) {
                    mass += p;
                }
            }
        }
        assert_abs_diff_eq!(sets.nu, 1.0 - mass, epsilon = 1e-12);
    }
}

/// Conditioned joint law of `(x1, x2, c1, c2)` by encrypting every member of
/// the set under every key pair.
struct BruteTilde {
    atoms: BTreeMap<(usize, usize, usize, usize), f64>,
}

impl BruteTilde {
    fn of(spec: &SystemSpec, sets: &TypicalSets) -> Self {
        let n = spec.n();
        let f1 = spec.alphabet(Axis::First);
        let f2 = spec.alphabet(Axis::Second);
        let q12: f64 = sets
            .d_tilde
            .iter()
            .map(|&(a, b)| {
                pair_prob(
                    spec.px(),
                    &f1.index_to_word(a as usize, n),
                    &f2.index_to_word(b as usize, n),
                )
            })
            .sum();
        let mut atoms = BTreeMap::new();
        for &(a, b) in &sets.d_tilde {
            let (x1, x2) = (
                f1.index_to_word(a as usize, n),
                f2.index_to_word(b as usize, n),
            );
            let p = pair_prob(spec.px(), &x1, &x2) / q12;
            for k1 in words(f1, n) {
                for k2 in words(f2, n) {
                    let c1 = f1.word_to_index(&encrypt(spec.enc1(), &k1, &x1).unwrap());
                    let c2 = f2.word_to_index(&encrypt(spec.enc2(), &k2, &x2).unwrap());
                    *atoms.entry((a as usize, b as usize, c1, c2)).or_insert(0.0) +=
                        p * pair_prob(spec.pk(), &k1, &k2);
                }
            }
        }
        Self { atoms }
    }

    fn h<K: Ord>(&self, key: impl Fn(&(usize, usize, usize, usize)) -> K) -> f64 {
        let mut law: BTreeMap<K, f64> = BTreeMap::new();
        for (k, p) in &self.atoms {
            *law.entry(key(k)).or_insert(0.0) += p;
        }
        entropy(law.into_values())
    }
}

#[test]
fn ensemble_entropies_match_direct_encryption() {
    let mut checked = 0;
    for seed in 0..12 {
        let spec = random_system(seed, 2 + (seed as usize % 3));
        let sets = restricted(&spec, 0.4);
        if sets.d_tilde.is_empty() {
            continue;
        }
        checked += 1;
        let ens = build_tilde(&spec, &sets).unwrap();
        let b = BruteTilde::of(&spec, &sets);
        let hx = b.h(|k| (k.0, k.1));
        let hx1 = b.h(|k| k.0);
        let hx2 = b.h(|k| k.1);
        let tol = 1e-11;
        assert_abs_diff_eq!(ens.h_sources(), hx, epsilon = tol);
        assert_abs_diff_eq!(ens.h_ciphers(), b.h(|k| (k.2, k.3)), epsilon = tol);
        assert_abs_diff_eq!(ens.h_cipher(Axis::First), b.h(|k| k.2), epsilon = tol);
        assert_abs_diff_eq!(ens.h_cipher(Axis::Second), b.h(|k| k.3), epsilon = tol);
        assert_abs_diff_eq!(
            ens.h_ciphers_given_sources(),
            b.h(|k| *k) - hx,
            epsilon = tol
        );
        assert_abs_diff_eq!(
            ens.h_cipher_given_sources(Axis::First),
            b.h(|k| (k.0, k.1, k.2)) - hx,
            epsilon = tol
        );
        assert_abs_diff_eq!(
            ens.h_cipher_given_sources(Axis::Second),
            b.h(|k| (k.0, k.1, k.3)) - hx,
            epsilon = tol
        );
        assert_abs_diff_eq!(
            ens.h_cipher_given_source(Axis::First, Axis::Second),
            b.h(|k| (k.1, k.2)) - hx2,
            epsilon = tol
        );
        assert_abs_diff_eq!(
            ens.h_cipher_given_source(Axis::Second, Axis::First),
            b.h(|k| (k.0, k.3)) - hx1,
            epsilon = tol
        );
        assert_abs_diff_eq!(
            ens.h_cipher_given_source(Axis::First, Axis::First),
            b.h(|k| (k.0, k.2)) - hx1,
            epsilon = tol
        );
        assert_abs_diff_eq!(
            ens.mi(),
            b.h(|k| (k.2, k.3)) + hx - b.h(|k| *k),
            epsilon = tol
        );
        assert_eq!(
            ens.atom_count(),
            b.atoms.values().filter(|&&p| p > 0.0).count()
        );
    }
    assert!(
        checked >= 6,
        "only {checked} systems had typical-decodable pairs"
    );
}

#[test]
fn conditioning_masses_match_their_definitions() {
    let spec = random_system(40, 3);
    let sets = restricted(&spec, 0.5);
    let ens = build_tilde(&spec, &sets).unwrap();
    let n = spec.n();
    let f = spec.alphabet(Axis::First).clone();
    let word = |i: u32| f.index_to_word(i as usize, n);
    let q12: f64 = sets
        .d_tilde
        .iter()
        .map(|&(a, b)| pair_prob(spec.px(), &word(a), &word(b)))
        .sum();
    assert_abs_diff_eq!(ens.q12, q12, epsilon = 1e-12);

    let mut proj1 = std::collections::BTreeSet::new();
    let mut cond: BTreeMap<u32, f64> = BTreeMap::new();
    for &(a, b) in &sets.d_tilde {
        proj1.insert(a);
        *cond.entry(b).or_insert(0.0) +=
            pair_prob(spec.px(), &word(a), &word(b)) / word_prob(spec.px(), Axis::Second, &word(b));
    }
    let q1: f64 = proj1
        .iter()
        .map(|&a| word_prob(spec.px(), Axis::First, &word(a)))
        .sum();
    assert_abs_diff_eq!(ens.q_marginal[0], q1, epsilon = 1e-12);
    let got = ens.q_cond(Axis::First);
    assert_eq!(got.len(), cond.len());
    for (k, v) in &cond {
        assert_abs_diff_eq!(got[k], *v, epsilon = 1e-12);
    }
}

#[test]
fn zeta_matches_closed_form() {
    let params = TypicalParams::new(0.2, 0.05, 0.3, 1.0).unwrap();
    let nu = 0.1;
    let keep: f64 = 1.0 - 0.15;
    let expected = (0.3 / keep + (1.0 / keep).log2()) / 4.0;
    assert_abs_diff_eq!(zeta(&params, 4, nu).unwrap(), expected, epsilon = 1e-15);
    assert!(zeta(&params, 4, 0.95).is_err());
    assert!(TypicalParams::new(0.2, 1.0, 0.0, 1.0).is_err());
    assert!(TypicalParams::new(0.2, 0.0, 1.5, 1.0).is_err());
}

#[test]
fn budgets_below_achieved_values_are_reported_not_violated() {
    let spec = random_system(50, 3);
    let report = run_all(
        &spec,
        &Premises {
            epsilon: Some(0.0),
            delta: Some(0.0),
            ..Premises::default()
        },
    )
    .unwrap();
    let p_e = error_probability(&spec).unwrap();
    if p_e > 1e-12 {
        assert!(!report.premises_met);
        assert_eq!(report.status(), "premises unmet");
    }
    assert_eq!(report.violations().count(), 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Every inequality holds on systems whose premises are met.
    #[test]
    fn chain_holds_on_random_systems(seed in any::<u64>(), n in 2usize..=4, gamma in 0.15f64..0.6) {
        let spec = random_system(seed, n);
        let report = run_all(&spec, &Premises { gamma, ..Premises::default() }).unwrap();
        if report.premises_met {
            let failed: Vec<_> = report.violations().map(|r| r.name.clone()).collect();
            prop_assert!(failed.is_empty(), "{failed:?}");
            let law = report.get("tilde/direct_law").unwrap();
            prop_assert!(law.lhs <= 1e-12);
        }
    }
}
