use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::decode::{decodable_set, decode_indices};
use super::{SystemSpec, Tables};
use crate::error::check_budget;
use crate::numeric::{csum, derive_seed, CompensatedSum};
use crate::pmf::{JointPmf, PairSampler};
use crate::{Error, Result};

/// Minimum number of trials accepted by the sampled estimators.
pub const MIN_TRIALS: usize = 1000;

/// Bootstrap replicates used by [`leakage_sampled`].
pub const DEFAULT_BOOTSTRAP: usize = 200;

/// Bootstrap standard deviations that make up the reported radius.
pub const RADIUS_SDS: f64 = 3.0;

const CHUNKS: usize = 64;

/// Distribution of `(A1 W1, A2 W2)` for `(W1, W2) ~ joint^n`, indexed by
/// ciphertext-pair index. Each cell is a sum over a coset pair.
fn image_distribution(t: &Tables, joint: &JointPmf) -> Vec<f64> {
    let m2 = t.second.cipher_count();
    let rows: Vec<Vec<f64>> = (0..t.first.cipher_count())
        .into_par_iter()
        .map(|s1| {
            let c1 = &t.first.members[s1];
            (0..m2)
                .map(|s2| {
                    let c2 = &t.second.members[s2];
                    csum(c1.iter().flat_map(|&k1| {
                        c2.iter().map(move |&k2| {
                            crate::pmf::product_prob_unchecked(
                                joint,
                                t.first.word(k1 as usize),
                                t.second.word(k2 as usize),
                            )
                        })
                    }))
                })
                .collect()
        })
        .collect();
    rows.concat()
}

/// `W(w1, w2) = Pr{A1 K1 = w1, A2 K2 = w2}`, by enumerating all key pairs.
///
/// The ciphertext law given a source pair is `p(c | x) = W(c - A x)`.
pub fn key_image_distribution(spec: &SystemSpec) -> Result<Vec<f64>> {
    check_budget(
        spec.pair_count(),
        spec.budget(),
        "; key pairs are enumerated",
    )?;
    let t = spec.tables()?;
    Ok(image_distribution(t, spec.pk()))
}

/// Distribution of the key-free encodings `(A1 X1, A2 X2)`.
pub fn source_image_distribution(spec: &SystemSpec) -> Result<Vec<f64>> {
    check_budget(
        spec.pair_count(),
        spec.budget(),
        "; source pairs are enumerated",
    )?;
    let t = spec.tables()?;
    Ok(image_distribution(t, spec.px()))
}

/// `p_e = 1 - p^n(D)`, exactly.
pub fn error_probability(spec: &SystemSpec) -> Result<f64> {
    let set = decodable_set(spec)?;
    let t = spec.tables()?;
    let mass = csum(
        set.pair_indices()
            .iter()
            .map(|&(a, b)| spec.source_prob(t, a as usize, b as usize)),
    );
    Ok((1.0 - mass).clamp(0.0, 1.0))
}

/// Monte-Carlo estimate of the decoding error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledError {
    pub p_e: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Draws `trials` source pairs and counts decoder failures.
///
/// Trials are split into fixed chunks with derived seeds, so the result does
/// not depend on the number of worker threads.
pub fn error_probability_sampled(
    spec: &SystemSpec,
    trials: usize,
    seed: u64,
) -> Result<SampledError> {
    if trials == 0 {
        return Err(Error::Domain("need at least one trial".into()));
    }
    let t = spec.tables()?;
    let sampler = PairSampler::new(spec.px());
    let n = spec.n();
    let (q1, q2) = (t.first.q, t.second.q);
    let failures: usize = chunk_sizes(trials)
        .into_par_iter()
        .map(|(chunk, size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, chunk as u64]));
            let (mut x1, mut x2) = (vec![0; n], vec![0; n]);
            let mut fails = 0;
            for _ in 0..size {
                sampler.sample_into(&mut rng, &mut x1, &mut x2);
                let i1 = word_index(&x1, q1);
                let i2 = word_index(&x2, q2);
                let s1 = t.first.syndrome[i1] as usize;
                let s2 = t.second.syndrome[i2] as usize;
                if decode_indices(spec, t, s1, s2) != Some((i1, i2)) {
                    fails += 1;
                }
            }
            fails
        })
        .sum();
    let p_e = failures as f64 / trials as f64;
    Ok(SampledError {
        p_e,
        std_err: (p_e * (1.0 - p_e) / trials as f64).sqrt(),
        trials,
    })
}

fn chunk_sizes(trials: usize) -> Vec<(usize, usize)> {
    let chunks = CHUNKS.min(trials);
    (0..chunks)
        .map(|c| (c, trials / chunks + usize::from(c < trials % chunks)))
        .collect()
}

#[inline]
fn word_index(w: &[u8], q: usize) -> usize {
    w.iter().fold(0usize, |acc, &s| acc * q + s as usize)
}

/// Exact `I(C1 C2; X1^n X2^n)` in bits.
///
/// The joint atom of `(x, c)` is `p^n(x) W(c - A x)`, where `W` sums the key
/// probabilities over the preimage coset of `c - A x`. The ciphertext marginal
/// is the convolution of the source-encoding law with `W`. Needs
/// `q1^n q2^n * q1^m1 q2^m2` within the budget.
pub fn leakage_exact(spec: &SystemSpec) -> Result<f64> {
    check_budget(
        spec.pair_count().saturating_mul(spec.cipher_pair_count()),
        spec.budget(),
        "; use leakage_sampled for larger systems",
    )?;
    let t = spec.tables()?;
    let w = image_distribution(t, spec.pk());
    let ps = image_distribution(t, spec.px());
    let support: Vec<(usize, f64)> = w
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(i, &p)| (i, p))
        .collect();

    let mut pc = vec![CompensatedSum::new(); w.len()];
    for (s, &p_s) in ps.iter().enumerate().filter(|(_, &p)| p > 0.0) {
        for &(wi, p_w) in &support {
            pc[t.cipher_pair_add(s, wi)].add(p_s * p_w);
        }
    }
    let pc: Vec<f64> = pc.iter().map(CompensatedSum::value).collect();

    let w2 = t.second.word_count();
    let rows: Vec<f64> = (0..t.first.word_count())
        .into_par_iter()
        .map(|x1| {
            let s1 = t.first.syndrome[x1] as usize;
            csum((0..w2).map(|x2| {
                let p_x = spec.source_prob(t, x1, x2);
                if p_x == 0.0 {
                    return 0.0;
                }
                let s = t.cipher_pair(s1, t.second.syndrome[x2] as usize);
                let inner = csum(support.iter().map(|&(wi, p_w)| {
                    let c = t.cipher_pair_add(s, wi);
                    p_w * (p_w / pc[c]).log2()
                }));
                p_x * inner
            }))
        })
        .collect();
    Ok(csum(rows).max(0.0))
}

/// Sampled leakage estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampledLeakage {
    /// Plug-in mutual information of the empirical joint.
    pub plug_in: f64,
    /// Plug-in value with the Miller-Madow bias correction applied.
    pub miller_madow: f64,
    /// Bootstrap radius around `miller_madow`: `RADIUS_SDS` replicate standard
    /// deviations plus the bootstrap estimate of the remaining bias.
    pub radius: f64,
    pub trials: usize,
    pub bootstrap: usize,
}

impl SampledLeakage {
    pub fn brackets(&self, value: f64) -> bool {
        (self.miller_madow - value).abs() <= self.radius
    }

    /// Upper end of the plug-in bias for a table with the given alphabet sizes.
    pub fn bias_bound(cipher_pairs: f64, source_pairs: f64, trials: usize) -> f64 {
        (cipher_pairs - 1.0) * (source_pairs - 1.0) / (2.0 * trials as f64 * std::f64::consts::LN_2)
    }
}

/// Plug-in, bias-corrected and bootstrapped estimate of the leakage from
/// `trials` independent draws of (source pair, key pair).
pub fn leakage_sampled(spec: &SystemSpec, trials: usize, seed: u64) -> Result<SampledLeakage> {
    leakage_sampled_with(spec, trials, seed, DEFAULT_BOOTSTRAP)
}

pub fn leakage_sampled_with(
    spec: &SystemSpec,
    trials: usize,
    seed: u64,
    bootstrap: usize,
) -> Result<SampledLeakage> {
    if trials < MIN_TRIALS {
        return Err(Error::Domain(format!(
            "sampled leakage needs at least {MIN_TRIALS} trials, got {trials}"
        )));
    }
    let t = spec.tables()?;
    let n = spec.n();
    let (q1, q2) = (t.first.q, t.second.q);
    let (f1, f2) = (spec.enc1().alphabet(), spec.enc2().alphabet());
    let src = PairSampler::new(spec.px());
    let key = PairSampler::new(spec.pk());
    let w2 = t.second.word_count() as u64;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut x1, mut x2, mut k1, mut k2) = (vec![0; n], vec![0; n], vec![0; n], vec![0; n]);
    let mut draws: Vec<(u64, u64)> = Vec::with_capacity(trials);
    for _ in 0..trials {
        src.sample_into(&mut rng, &mut x1, &mut x2);
        key.sample_into(&mut rng, &mut k1, &mut k2);
        let xi = word_index(&x1, q1) as u64 * w2 + word_index(&x2, q2) as u64;
        let m1: Vec<u8> = x1.iter().zip(&k1).map(|(&a, &b)| f1.add(a, b)).collect();
        let m2: Vec<u8> = x2.iter().zip(&k2).map(|(&a, &b)| f2.add(a, b)).collect();
        let c = t.cipher_pair(
            t.first.syndrome[word_index(&m1, q1)] as usize,
            t.second.syndrome[word_index(&m2, q2)] as usize,
        );
        draws.push((xi, c as u64));
    }

    let coded = DenseDraws::new(&draws);
    let (plug_in, miller_madow) = coded.estimate(&coded.all_counts());
    let replicates: Vec<f64> = (0..bootstrap)
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 0xB007, b as u64]));
            coded.estimate(&coded.resample_counts(&mut rng)).1
        })
        .collect();
    // The bootstrap spread covers sampling noise; the shift of the replicate
    // mean away from the estimate covers bias left after the correction.
    let radius = if bootstrap < 2 {
        0.0
    } else {
        let mean = csum(replicates.iter().copied()) / bootstrap as f64;
        let var = csum(replicates.iter().map(|r| (r - mean).powi(2))) / (bootstrap - 1) as f64;
        RADIUS_SDS * var.sqrt() + (mean - miller_madow).abs()
    };
    Ok(SampledLeakage {
        plug_in,
        miller_madow,
        radius,
        trials,
        bootstrap,
    })
}

/// Draws recoded to dense ids for the source value, ciphertext value and pair.
struct DenseDraws {
    ids: Vec<(u32, u32, u32)>,
    kx: usize,
    kc: usize,
    kxc: usize,
}

struct Counts {
    x: Vec<u32>,
    c: Vec<u32>,
    xc: Vec<u32>,
    total: usize,
}

impl DenseDraws {
    fn new(draws: &[(u64, u64)]) -> Self {
        let dense = |keys: Vec<u64>| -> (Vec<u64>, usize) {
            let mut sorted = keys.clone();
            sorted.sort_unstable();
            sorted.dedup();
            let k = sorted.len();
            (sorted, k)
        };
        let (xs, kx) = dense(draws.iter().map(|d| d.0).collect());
        let (cs, kc) = dense(draws.iter().map(|d| d.1).collect());
        let mut pairs: Vec<(u64, u64)> = draws.to_vec();
        pairs.sort_unstable();
        pairs.dedup();
        let kxc = pairs.len();
        let ids = draws
            .iter()
            .map(|d| {
                (
                    xs.binary_search(&d.0).unwrap() as u32,
                    cs.binary_search(&d.1).unwrap() as u32,
                    pairs.binary_search(d).unwrap() as u32,
                )
            })
            .collect();
        Self { ids, kx, kc, kxc }
    }

    fn empty_counts(&self) -> Counts {
        Counts {
            x: vec![0; self.kx],
            c: vec![0; self.kc],
            xc: vec![0; self.kxc],
            total: 0,
        }
    }

    fn all_counts(&self) -> Counts {
        let mut counts = self.empty_counts();
        for &(x, c, xc) in &self.ids {
            counts.x[x as usize] += 1;
            counts.c[c as usize] += 1;
            counts.xc[xc as usize] += 1;
        }
        counts.total = self.ids.len();
        counts
    }

    fn resample_counts<R: Rng>(&self, rng: &mut R) -> Counts {
        let mut counts = self.empty_counts();
        let len = self.ids.len();
        for _ in 0..len {
            let (x, c, xc) = self.ids[rng.gen_range(0..len)];
            counts.x[x as usize] += 1;
            counts.c[c as usize] += 1;
            counts.xc[xc as usize] += 1;
        }
        counts.total = len;
        counts
    }

    /// `(plug-in, Miller-Madow)` mutual information in bits.
    fn estimate(&self, counts: &Counts) -> (f64, f64) {
        let n = counts.total as f64;
        let nlogn = |v: &[u32]| {
            csum(
                v.iter()
                    .filter(|&&c| c > 0)
                    .map(|&c| c as f64 * (c as f64).log2()),
            )
        };
        let plug_in =
            (n.log2() + (nlogn(&counts.xc) - nlogn(&counts.x) - nlogn(&counts.c)) / n).max(0.0);
        let occupied = |v: &[u32]| v.iter().filter(|&&c| c > 0).count() as f64;
        let correction = (occupied(&counts.xc) - occupied(&counts.x) - occupied(&counts.c) + 1.0)
            / (2.0 * n * std::f64::consts::LN_2);
        (plug_in, plug_in - correction)
    }
}
