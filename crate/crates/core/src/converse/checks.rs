use super::{
    build_tilde, build_typical, check_direct_law, zeta_raw, ConverseReport, Record, TildeEnsemble,
    TypicalParams, TypicalSets, DEFAULT_DELTA0, DEFAULT_GAMMA,
};
use crate::crypto::{decodable_set, error_probability, leakage_exact, SystemSpec};
use crate::numeric::csum;
use crate::pmf::{Axis, JointPmf};
use crate::region::{EntropyProfile, RatePair};
use crate::Result;

/// Tolerance of identities that hold exactly up to rounding.
const IDENTITY_TOL: f64 = 1e-12;

/// Tolerance for a target rate pair to count as lying on the sum-rate line.
const SUM_LINE_TOL: f64 = 1e-6;

const AXES: [Axis; 2] = [Axis::First, Axis::Second];

fn label(axis: Axis) -> usize {
    match axis {
        Axis::First => 1,
        Axis::Second => 2,
    }
}

/// Inputs of a certification run. Budgets left as `None` default to the
/// system's achieved error probability and leakage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Premises {
    pub gamma: f64,
    pub epsilon: Option<f64>,
    pub delta: Option<f64>,
    pub delta0: f64,
    /// Target rate pair for the rate bounds; those bounds are evaluated only
    /// when the pair lies on the sum-rate line `R1 + R2 = H(X1 X2)`.
    pub rates: Option<RatePair>,
    /// Compare the ensemble against the conditional law obtained by direct
    /// encryption, when the budget allows.
    pub check_direct_law: bool,
}

impl Default for Premises {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            epsilon: None,
            delta: None,
            delta0: DEFAULT_DELTA0,
            rates: None,
            check_direct_law: true,
        }
    }
}

/// Bounds on the largest conditioned ciphertext probabilities, and the
/// identity expressing the conditioned source marginal through `Q_{i|3-i}`.
pub fn check_probability_bounds(ens: &TildeEnsemble, px: &JointPmf, gamma: f64) -> ConverseReport {
    let n = ens.n as f64;
    let h = EntropyProfile::of(px);
    let mut records = Vec::new();
    for axis in AXES {
        let i = label(axis);
        let other = axis.other();
        let q_cond = ens.q_cond(axis);
        let w = ens.word_counts[label(other) - 1];
        let worst = ens
            .cipher_given_source(axis, other)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(idx, &p)| p * q_cond[&((idx % w) as u32)])
            .fold(0.0, f64::max);
        records.push(Record::le(
            format!("prob_bounds/cond_cipher_prob[{i}]"),
            worst,
            (-n * (h.conditional(axis) - gamma)).exp2(),
        ));

        let marg = ens.source_marginal(other);
        let gap = ens
            .source_law(other)
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(x, &p)| {
                let x = x as u32;
                (p - q_cond[&x] * marg[&x] / ens.q12).abs()
            })
            .fold(0.0, f64::max);
        records.push(Record::le(
            format!("prob_bounds/tilde_marginal[{}]", label(other)),
            gap,
            IDENTITY_TOL,
        ));
    }
    let worst = ens.cipher_law().iter().fold(0.0f64, |a, &p| a.max(p)) * ens.q12;
    records.push(Record::le(
        "prob_bounds/joint_cipher_prob",
        worst,
        (-n * (h.h12 - gamma)).exp2(),
    ));
    ConverseReport::new(records)
}

/// `sum_x p_{X~_{3-i}}(x) log2 Q_{i|3-i}(x)`.
fn weighted_log_q(ens: &TildeEnsemble, axis: Axis) -> f64 {
    let q_cond = ens.q_cond(axis);
    csum(
        ens.source_law(axis.other())
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(x, &p)| p * q_cond[&(x as u32)].log2()),
    )
}

/// Lower bounds on the conditioned ciphertext entropies from the probability
/// bounds, and upper bounds from the key entropies.
pub fn check_entropy_bounds(ens: &TildeEnsemble, spec: &SystemSpec, gamma: f64) -> ConverseReport {
    let n = ens.n as f64;
    let h = EntropyProfile::of(spec.px());
    let log_q12 = ens.q12.log2();
    let mut records = Vec::new();
    for axis in AXES {
        let i = label(axis);
        let other = axis.other();
        let h_cond = ens.h_cipher_given_source(axis, other);
        records.push(Record::ge(
            format!("entropy_lb/cond_cipher[{i}]"),
            h_cond,
            n * (h.conditional(axis) - gamma) + log_q12,
        ));
        let lambda = weighted_log_q(ens, axis);
        records.push(Record::ge(
            format!("entropy_lb/cond_cipher_weighted[{i}]"),
            h_cond,
            lambda + n * (h.conditional(axis) - gamma),
        ));
        let projected = ens.q_marginal[label(other) - 1];
        records.push(Record::ge(
            format!("entropy_lb/jensen[{i}]"),
            lambda,
            (ens.q12 / projected).log2(),
        ));
        records.push(Record::ge(
            format!("entropy_lb/jensen_floor[{i}]"),
            (ens.q12 / projected).log2(),
            log_q12,
        ));

        let own = ens.h_cipher_given_source(axis, axis);
        records.push(Record::le(
            format!("entropy_ub/cipher_given_sources[{i}]"),
            ens.h_cipher_given_sources(axis),
            own,
        ));
        records.push(Record::le(
            format!("entropy_ub/cipher_given_own_source[{i}]"),
            own,
            n * spec.pk().marginal_entropy(axis),
        ));
    }
    records.push(Record::ge(
        "entropy_lb/joint_cipher",
        ens.h_ciphers(),
        n * (h.h12 - gamma) + log_q12,
    ));
    records.push(Record::le(
        "entropy_ub/ciphers_given_sources",
        ens.h_ciphers_given_sources(),
        n * spec.pk().joint_entropy(),
    ));
    ConverseReport::new(records)
}

/// Conditioning on an event of mass `Q12` scales the leakage by at most `1/Q12`.
pub fn check_mi_conditioning(ens: &TildeEnsemble, leakage: f64, delta: f64) -> ConverseReport {
    let i_cond = ens.mi();
    ConverseReport::new(vec![
        Record::le("mi_conditioning/weighted", ens.q12 * i_cond, leakage),
        Record::le("mi_conditioning/budget", leakage, delta),
        Record::le("mi_conditioning/conditional", i_cond, delta / ens.q12),
    ])
}

/// The mass outside the typical-decodable set is covered by the atypical mass
/// plus the error probability.
pub fn check_typical_mass(
    ens: &TildeEnsemble,
    sets: &TypicalSets,
    error_probability: f64,
) -> ConverseReport {
    ConverseReport::new(vec![
        Record::le(
            "typical_mass/union_bound",
            1.0 - ens.q12,
            sets.nu + error_probability,
        ),
        Record::ge("typical_mass/kept", ens.q12, 1.0 - sets.nu_bar()),
    ])
}

/// The rate-versus-key bounds: the conditional source entropies, and on the
/// sum-rate line the individual rates, are bounded by the key entropies plus
/// vanishing terms.
pub fn check_rate_key_bounds(
    ens: &TildeEnsemble,
    spec: &SystemSpec,
    params: &TypicalParams,
    nu: f64,
    rates: Option<RatePair>,
) -> Result<ConverseReport> {
    let n = ens.n as f64;
    let gamma = params.gamma;
    let h = EntropyProfile::of(spec.px());
    let pk = spec.pk();
    let log_q12 = ens.q12.log2();
    let i_cond = ens.mi();
    let excess = (params.delta / ens.q12 - log_q12) / n;
    let zeta = zeta_raw(ens.n, nu + params.epsilon, params.delta)?;
    let mut records = Vec::new();
    let mut notes = Vec::new();

    for axis in AXES {
        let i = label(axis);
        let hk = pk.marginal_entropy(axis);
        let h_cond = ens.h_cipher_given_source(axis, axis.other());
        records.push(Record::ge(
            format!("key_entropy/mi_from_cipher[{i}]"),
            i_cond,
            h_cond - n * hk,
        ));
        records.push(Record::ge(
            format!("key_entropy/mi_lower[{i}]"),
            i_cond,
            n * (h.conditional(axis) - gamma) + log_q12 - n * hk,
        ));
        records.push(Record::le(
            format!("key_entropy/rate_vs_key[{i}]"),
            h.conditional(axis),
            hk + gamma + excess,
        ));
        records.push(Record::le(
            format!("key_entropy/rate_vs_key_zeta[{i}]"),
            h.conditional(axis),
            hk + gamma + zeta,
        ));
    }
    let hk12 = pk.joint_entropy();
    records.push(Record::ge(
        "key_entropy/mi_lower_joint",
        i_cond,
        n * (h.h12 - gamma) + log_q12 - n * hk12,
    ));
    records.push(Record::le(
        "key_entropy/rate_vs_key_joint",
        h.h12,
        hk12 + gamma + excess,
    ));
    records.push(Record::le(
        "key_entropy/rate_vs_key_zeta_joint",
        h.h12,
        hk12 + gamma + zeta,
    ));

    match rates {
        Some(r) if (r.sum() - h.h12).abs() <= SUM_LINE_TOL => {
            let h_joint = ens.h_ciphers();
            records.push(Record::ge(
                "sum_line/joint_cipher_lb",
                h_joint,
                n * (r.sum() - gamma) + log_q12,
            ));
            for axis in AXES {
                let i = label(axis);
                let ri = r.get(axis);
                let hk = pk.marginal_entropy(axis);
                let enc = spec.encoder(axis);
                let alphabet_bits = enc.m() as f64 * enc.alphabet().log_size();
                let h_ci = ens.h_cipher(axis);
                records.push(Record::le(
                    format!("sum_line/cipher_entropy_ub[{i}]"),
                    h_ci,
                    alphabet_bits,
                ));
                records.push(Record::le(
                    format!("sum_line/cipher_alphabet[{i}]"),
                    alphabet_bits,
                    n * (ri + gamma),
                ));
                records.push(Record::ge(
                    format!("sum_line/cipher_entropy_lb[{i}]"),
                    h_ci,
                    n * (ri - 2.0 * gamma) + log_q12,
                ));
                records.push(Record::ge(
                    format!("sum_line/mi_from_marginal[{i}]"),
                    i_cond,
                    h_ci - ens.h_cipher_given_source(axis, axis),
                ));
                records.push(Record::ge(
                    format!("sum_line/key_and_rate[{i}]"),
                    params.delta / ens.q12,
                    n * (ri - 2.0 * gamma) + log_q12 - n * hk,
                ));
                records.push(Record::le(
                    format!("sum_line/rate_vs_key[{i}]"),
                    ri,
                    hk + 2.0 * gamma + excess,
                ));
                records.push(Record::le(
                    format!("sum_line/rate_vs_key_zeta[{i}]"),
                    ri,
                    hk + 2.0 * gamma + zeta,
                ));
            }
        }
        Some(r) => notes.push(format!(
            "target rates ({}, {}) sum to {}, not H(X1X2) = {}; individual rate bounds skipped",
            r.r1,
            r.r2,
            r.sum(),
            h.h12
        )),
        None => notes.push("no target rates; individual rate bounds skipped".into()),
    }
    let mut report = ConverseReport::new(records);
    report.notes = notes;
    report.quantities.push(("zeta".into(), zeta));
    Ok(report)
}

/// A rate pair on the sum-rate line that the system's code rates
/// `r_i = (m_i/n) log2 q_i` fit under, i.e. `r_i <= R_i + gamma`.
///
/// The slack `H(X1X2) - (r1 + r2 - 2 gamma)` is split evenly; negative
/// coordinates are clipped to zero. `None` when the code rates exceed the
/// line by more than `2 gamma` in sum.
pub fn rates_on_sum_line(spec: &SystemSpec, gamma: f64) -> Option<RatePair> {
    let (r1, r2) = spec.rates();
    let h12 = spec.px().joint_entropy();
    let slack = h12 - (r1 + r2 - 2.0 * gamma);
    if slack < 0.0 {
        return None;
    }
    let a = r1 - gamma + slack / 2.0;
    let b = r2 - gamma + slack / 2.0;
    let (a, b) = if a < 0.0 {
        (0.0, h12)
    } else if b < 0.0 {
        (h12, 0.0)
    } else {
        (a, b)
    };
    RatePair::new(a, b).ok()
}

/// Evaluates the whole chain on `spec`.
///
/// Premises that fail (budgets below the achieved values, `delta > delta0`,
/// code rates above the target rates plus `gamma`, no typical-decodable mass)
/// mark the report as informational rather than producing violations.
pub fn run_all(spec: &SystemSpec, premises: &Premises) -> Result<ConverseReport> {
    let gamma = premises.gamma;
    let p_e = error_probability(spec)?;
    let leakage = leakage_exact(spec)?;
    let epsilon = premises.epsilon.unwrap_or(p_e);
    let delta = premises.delta.unwrap_or(leakage);

    let mut unmet = Vec::new();
    if p_e > epsilon + IDENTITY_TOL {
        unmet.push(format!(
            "error probability {p_e} exceeds epsilon = {epsilon}"
        ));
    }
    if leakage > delta + IDENTITY_TOL {
        unmet.push(format!("leakage {leakage} exceeds delta = {delta}"));
    }
    if delta > premises.delta0 {
        unmet.push(format!(
            "delta = {delta} exceeds delta0 = {}",
            premises.delta0
        ));
    }
    if epsilon >= 1.0 {
        unmet.push(format!("epsilon = {epsilon} leaves no reliability"));
    }
    if let Some(r) = premises.rates {
        let (c1, c2) = spec.rates();
        for (axis, code) in AXES.into_iter().zip([c1, c2]) {
            if code > r.get(axis) + gamma + IDENTITY_TOL {
                unmet.push(format!(
                    "code rate {code} on terminal {} exceeds R{} + gamma = {}",
                    label(axis),
                    label(axis),
                    r.get(axis) + gamma
                ));
            }
        }
    }

    let quantities = vec![
        ("error_probability".to_string(), p_e),
        ("leakage".to_string(), leakage),
        ("epsilon".to_string(), epsilon),
        ("delta".to_string(), delta),
    ];
    let params = match TypicalParams::new(
        gamma,
        epsilon.min(1.0 - f64::EPSILON),
        delta.min(premises.delta0),
        premises.delta0,
    ) {
        Ok(p) if unmet.is_empty() => TypicalParams {
            epsilon,
            delta,
            ..p
        },
        Ok(p) => p,
        Err(e) => {
            let mut report = ConverseReport::premises_unmet(e.to_string());
            report.notes.extend(unmet);
            report.quantities = quantities;
            return Ok(report);
        }
    };

    let set = decodable_set(spec)?;
    let sets = build_typical(spec.px(), spec.n(), gamma, spec.budget())?.restrict(&set, epsilon);
    let mut quantities = quantities;
    quantities.push(("nu".into(), sets.nu));
    if sets.nu_bar() >= 1.0 {
        unmet.push(format!("nu + epsilon = {} >= 1", sets.nu_bar()));
    }
    if sets.d_tilde.is_empty() {
        unmet.push("no pair is both typical and decodable".into());
    }
    if sets.nu_bar() >= 1.0 || sets.d_tilde.is_empty() {
        let mut report = ConverseReport::premises_unmet(unmet.remove(0));
        report.notes.extend(unmet);
        report.quantities = quantities;
        return Ok(report);
    }

    let ens = build_tilde(spec, &sets)?;
    quantities.push(("q12".into(), ens.q12));
    let mut report = ConverseReport::new(Vec::new());
    if premises.check_direct_law {
        let cost = (sets.d_tilde.len() as u128).saturating_mul(spec.pair_count());
        if cost <= spec.budget() as u128 {
            let d = check_direct_law(spec, &sets, &ens)?;
            report
                .records
                .push(Record::le("tilde/direct_law", d, IDENTITY_TOL));
        } else {
            report
                .notes
                .push("direct conditional law over budget; atom-wise comparison skipped".into());
        }
    }
    report.extend(check_typical_mass(&ens, &sets, p_e));
    report.extend(check_probability_bounds(&ens, spec.px(), gamma));
    report.extend(check_entropy_bounds(&ens, spec, gamma));
    report.extend(check_mi_conditioning(&ens, leakage, params.delta));
    let props = check_rate_key_bounds(&ens, spec, &params, sets.nu, premises.rates)?;
    report.extend(props);
    let mut all = quantities;
    all.append(&mut report.quantities);
    report.quantities = all;
    if !unmet.is_empty() {
        report.premises_met = false;
        report.notes.extend(unmet);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaky_system() -> SystemSpec {
        let x = JointPmf::dsbs(0.2).unwrap();
        let k = JointPmf::from_rows(&[vec![0.5, 0.2], vec![0.1, 0.2]]).unwrap();
        SystemSpec::random(x, k, 4, 3, 4, 7).unwrap()
    }

    #[test]
    fn chain_holds_on_a_leaky_system() {
        let spec = leaky_system();
        let premises = Premises {
            gamma: 0.4,
            ..Premises::default()
        };
        let report = run_all(&spec, &premises).unwrap();
        assert!(report.premises_met, "{report}");
        assert!(report.pass(), "{report}");
        assert!(report.records.len() > 20);
        assert!(report.get("tilde/direct_law").is_some());
    }

    #[test]
    fn sum_line_rates_fit_the_code() {
        let spec = leaky_system();
        let r = rates_on_sum_line(&spec, 0.2).unwrap();
        let h12 = spec.px().joint_entropy();
        assert!((r.sum() - h12).abs() < 1e-12);
        let (c1, c2) = spec.rates();
        assert!(c1 <= r.r1 + 0.2 + 1e-12 && c2 <= r.r2 + 0.2 + 1e-12);
    }

    #[test]
    fn sum_line_records_on_the_line() {
        let spec = leaky_system();
        let gamma = 0.4;
        let premises = Premises {
            gamma,
            rates: rates_on_sum_line(&spec, gamma),
            ..Premises::default()
        };
        let report = run_all(&spec, &premises).unwrap();
        assert!(
            report.get("sum_line/rate_vs_key_zeta[1]").is_some(),
            "{report}"
        );
        assert!(report.pass(), "{report}");
    }

    #[test]
    fn tight_budgets_are_premise_failures() {
        let spec = leaky_system();
        let premises = Premises {
            delta: Some(0.0),
            ..Premises::default()
        };
        let report = run_all(&spec, &premises).unwrap();
        assert!(!report.premises_met);
        assert_eq!(report.status(), "premises unmet");
        assert!(report.pass());
    }
}
