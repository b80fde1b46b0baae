//! JSON-configured experiment runs producing CSV tables.
//!
//! Every mode maps a config onto the library operations, evaluates rows in
//! parallel and merges them in row-key order, so the same config and seeds
//! give byte-identical output for any worker count.

use std::fmt;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use crate::birkhoff::{check_disjointness, check_preimage_sums};
use crate::converse::{rates_on_sum_line, run_all, Premises, DEFAULT_DELTA0, DEFAULT_GAMMA};
use crate::crypto::{
    decodable_set, error_probability, error_probability_sampled, leakage_exact,
    leakage_sampled_with, LinearEncoder, SystemSpec, DEFAULT_BOOTSTRAP,
};
use crate::gf::Symbol;
use crate::numeric::{csum, derive_seed};
use crate::pmf::{Axis, JointPmf};
use crate::region::{
    key_region, region_nonempty, sum_rate_segment, sw_region, Constraint, EntropyProfile, RatePair,
};
use crate::{Error, Result, DEFAULT_BUDGET};

/// Version string stamped on every row.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Monte-Carlo trials when the config does not set them.
pub const DEFAULT_TRIALS: usize = 10_000;

/// Seeded codes tried per blocklength in the strong-converse run.
pub const DEFAULT_CODES_PER_N: usize = 8;

/// Standard errors of slack allowed between consecutive error estimates
/// before the trend counts as decreasing.
pub const TREND_SDS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Region,
    Simulate,
    VerifyLemma1,
    Converse,
    Sweep,
    StrongConverse,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Region => "region",
            Mode::Simulate => "simulate",
            Mode::VerifyLemma1 => "verify-lemma1",
            Mode::Converse => "converse",
            Mode::Sweep => "sweep",
            Mode::StrongConverse => "strong-converse",
        })
    }
}

/// One `(n, m1, m2)` system. Explicit matrices replace the seeded ones.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemEntry {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    #[serde(default)]
    pub a1: Option<Vec<Vec<Symbol>>>,
    #[serde(default)]
    pub a2: Option<Vec<Vec<Symbol>>>,
}

fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}

fn default_delta0() -> f64 {
    DEFAULT_DELTA0
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// When present, must name the subcommand the config is run with.
    #[serde(default)]
    pub mode: Option<Mode>,
    pub source: JointPmf,
    pub key: JointPmf,
    #[serde(default)]
    pub systems: Vec<SystemEntry>,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default = "default_delta0")]
    pub delta0: f64,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub trials: Option<usize>,
    /// Target rate pair: the rates of the strong-converse run, or the point
    /// the converse run evaluates the individual rate bounds at.
    #[serde(default)]
    pub rates: Option<[f64; 2]>,
    /// Inclusive blocklength range of the sweep and strong-converse runs.
    #[serde(default)]
    pub n_range: Option<[usize; 2]>,
    #[serde(default)]
    pub codes_per_n: Option<usize>,
    #[serde(default)]
    pub budget: Option<u64>,
    #[serde(default)]
    pub bootstrap: Option<usize>,
}

impl ExperimentConfig {
    /// Parses and validates a JSON config. Errors name the offending field
    /// and its line.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let inner = e.inner();
            let path = e.path().to_string();
            let at = if path == "." {
                String::new()
            } else {
                format!(" at `{path}`")
            };
            Error::Config(format!(
                "{inner}{at} (line {}, column {})",
                inner.line(),
                inner.column()
            ))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.key.alphabet1() != self.source.alphabet1()
            || self.key.alphabet2() != self.source.alphabet2()
        {
            return bad("key alphabets must equal the source alphabets".into());
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if self.delta0.is_nan() || self.delta0 < 0.0 {
            return bad(format!("delta0 must be nonnegative, got {}", self.delta0));
        }
        if let Some(e) = self.epsilon {
            if !(0.0..1.0).contains(&e) {
                return bad(format!("epsilon must lie in [0, 1), got {e}"));
            }
        }
        if let Some(d) = self.delta {
            if d.is_nan() || d < 0.0 {
                return bad(format!("delta must be nonnegative, got {d}"));
            }
        }
        if self.seeds.is_empty() {
            return bad("seeds must not be empty".into());
        }
        if self.trials == Some(0) {
            return bad("trials must be positive".into());
        }
        if self.codes_per_n == Some(0) {
            return bad("codes_per_n must be positive".into());
        }
        if let Some([lo, hi]) = self.n_range {
            if lo == 0 || lo > hi {
                return bad(format!("n_range [{lo}, {hi}] must satisfy 1 <= lo <= hi"));
            }
        }
        if let Some([a, b]) = self.rates {
            if !(a >= 0.0 && b >= 0.0 && a.is_finite() && b.is_finite()) {
                return bad(format!(
                    "rates must be finite and nonnegative, got [{a}, {b}]"
                ));
            }
        }
        for (i, s) in self.systems.iter().enumerate() {
            if s.n == 0 || s.m1 == 0 || s.m2 == 0 || s.m1 > s.n || s.m2 > s.n {
                return bad(format!(
                    "systems[{i}]: need 1 <= m1, m2 <= n, got n={}, m1={}, m2={}",
                    s.n, s.m1, s.m2
                ));
            }
            for (name, rows, m) in [("a1", &s.a1, s.m1), ("a2", &s.a2, s.m2)] {
                if let Some(rows) = rows {
                    if rows.len() != m {
                        return bad(format!(
                            "systems[{i}].{name} has {} rows, expected {m}",
                            rows.len()
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    fn rate_pair(&self) -> Result<Option<RatePair>> {
        self.rates.map(|[a, b]| RatePair::new(a, b)).transpose()
    }
}

/// Overrides applied on top of the config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    /// Replaces the configured seeds by `seed, seed + 1, ...` (same count).
    pub seed: Option<u64>,
    /// Enumeration budget; takes precedence over the config value.
    pub budget: Option<u64>,
}

/// A CSV table with a trailing `key=value` summary.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub summary: Vec<(String, String)>,
    /// Number of failed checks while their premises held.
    pub violations: usize,
    pub warnings: Vec<String>,
    /// Secondary tables written next to the main one, by name.
    pub attachments: Vec<(String, Table)>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }

    /// Column index by name.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn summary_value(&self, key: &str) -> Option<&str> {
        self.summary
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }
}

/// Runs `mode` on `config`.
pub fn run(config: &ExperimentConfig, mode: Mode, opts: &RunOptions) -> Result<Table> {
    if let Some(m) = config.mode {
        if m != mode {
            return Err(Error::Config(format!(
                "config is for mode `{m}`, run as `{mode}`"
            )));
        }
    }
    let ctx = Context::new(config, opts);
    match mode {
        Mode::Region => run_region(&ctx),
        Mode::Simulate => run_simulate(&ctx),
        Mode::VerifyLemma1 => run_verify_lemma1(&ctx),
        Mode::Converse => run_converse(&ctx),
        Mode::Sweep => run_sweep(&ctx),
        Mode::StrongConverse => run_strong_converse(&ctx),
    }
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    seeds: Vec<u64>,
    budget: u64,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a ExperimentConfig, opts: &RunOptions) -> Self {
        let seeds = match opts.seed {
            Some(s) => (0..cfg.seeds.len() as u64)
                .map(|i| s.wrapping_add(i))
                .collect(),
            None => cfg.seeds.clone(),
        };
        Self {
            cfg,
            seeds,
            budget: opts.budget.or(cfg.budget).unwrap_or(DEFAULT_BUDGET),
        }
    }

    fn trials(&self) -> usize {
        self.cfg.trials.unwrap_or(DEFAULT_TRIALS)
    }

    fn need_systems(&self, mode: Mode) -> Result<()> {
        if self.cfg.systems.is_empty() {
            return Err(Error::Config(format!(
                "mode `{mode}` needs a nonempty `systems` list"
            )));
        }
        Ok(())
    }

    /// Every `(system, seed)` job in row-key order.
    fn jobs(&self) -> Vec<(usize, u64)> {
        (0..self.cfg.systems.len())
            .flat_map(|i| self.seeds.iter().map(move |&s| (i, s)))
            .collect()
    }

    fn system(&self, entry: &SystemEntry, seed: u64) -> Result<SystemSpec> {
        let (px, pk) = (self.cfg.source.clone(), self.cfg.key.clone());
        let n = entry.n;
        let encoder = |axis: Axis, rows: &Option<Vec<Vec<Symbol>>>, m: usize| match rows {
            Some(rows) => LinearEncoder::new(px.alphabet(axis).clone(), n, rows.clone()),
            None => LinearEncoder::seeded(
                px.alphabet(axis).clone(),
                n,
                m,
                derive_seed(&[seed, axis as u64]),
            ),
        };
        let spec = match (&entry.a1, &entry.a2) {
            (None, None) => SystemSpec::random(px.clone(), pk, n, entry.m1, entry.m2, seed)?,
            _ => SystemSpec::new(
                n,
                encoder(Axis::First, &entry.a1, entry.m1)?,
                encoder(Axis::Second, &entry.a2, entry.m2)?,
                px.clone(),
                pk,
            )?,
        };
        Ok(spec.with_budget(self.budget))
    }
}

fn fmt_f(x: f64) -> String {
    format!("{x}")
}

fn alphabet_label(px: &JointPmf) -> String {
    if px.q1() == px.q2() {
        px.q1().to_string()
    } else {
        format!("{}x{}", px.q1(), px.q2())
    }
}

fn region_rows(table: &mut Table, kind: &str, constraints: &[Constraint], seed: u64) {
    for c in constraints {
        table.rows.push(vec![
            kind.to_string(),
            fmt_f(c.a),
            fmt_f(c.b),
            c.sense.to_string(),
            fmt_f(c.c),
            seed.to_string(),
            VERSION.to_string(),
        ]);
    }
}

fn run_region(ctx: &Context) -> Result<Table> {
    let (px, pk) = (&ctx.cfg.source, &ctx.cfg.key);
    let seed = ctx.seeds[0];
    let mut table = Table::new(&["kind", "a", "b", "sense", "c", "seed", "version"]);
    let sw = sw_region(px);
    let key = key_region(pk);
    region_rows(&mut table, &sw.kind.to_string(), &sw.constraints, seed);
    region_rows(&mut table, &key.kind.to_string(), &key.constraints, seed);
    let (direct, entropy) = region_nonempty(px, pk);
    if direct != entropy {
        table.violations += 1;
        table.warnings.push(format!(
            "direct intersection test says nonempty={direct}, entropy test says nonempty={entropy}"
        ));
    }
    table.note("nonempty", entropy);
    table.note("nonempty_direct", direct);
    match sum_rate_segment(px, pk) {
        Some(seg) => {
            table.note("segment_lo", fmt_f(seg.lo));
            table.note("segment_hi", fmt_f(seg.hi));
        }
        None => table.note("segment", "empty"),
    }
    Ok(table)
}

/// Error probability and leakage of one system, exact when the budget allows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement {
    pub p_e: f64,
    pub mi_bits: f64,
    /// Bootstrap radius of a sampled leakage, zero when exact.
    pub mi_radius: f64,
    pub exact: bool,
}

impl Measurement {
    pub fn method(&self) -> &'static str {
        if self.exact {
            "exact"
        } else {
            "sampled"
        }
    }
}

/// Measures `spec`, falling back to Monte-Carlo estimates with a warning when
/// exact enumeration exceeds the budget.
pub fn measure(
    spec: &SystemSpec,
    trials: usize,
    seed: u64,
    bootstrap: usize,
    warnings: &mut Vec<String>,
) -> Result<Measurement> {
    let pairs = spec.pair_count();
    let exact_fits = pairs.saturating_mul(spec.cipher_pair_count()) <= spec.budget() as u128
        && pairs <= spec.budget() as u128;
    if exact_fits {
        return Ok(Measurement {
            p_e: error_probability(spec)?,
            mi_bits: leakage_exact(spec)?,
            mi_radius: 0.0,
            exact: true,
        });
    }
    warnings.push(format!(
        "n={}, m=({}, {}): exact evaluation exceeds the budget of {} states; using {trials} sampled trials",
        spec.n(),
        spec.enc1().m(),
        spec.enc2().m(),
        spec.budget()
    ));
    let err = error_probability_sampled(spec, trials, derive_seed(&[seed, 1]))?;
    let leak = leakage_sampled_with(spec, trials, derive_seed(&[seed, 2]), bootstrap)?;
    Ok(Measurement {
        p_e: err.p_e,
        mi_bits: leak.miller_madow,
        mi_radius: leak.radius,
        exact: false,
    })
}

fn run_simulate(ctx: &Context) -> Result<Table> {
    ctx.need_systems(Mode::Simulate)?;
    let trials = ctx.trials();
    let bootstrap = ctx.cfg.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP);
    let results: Vec<(Vec<String>, Vec<String>)> = ctx
        .jobs()
        .into_par_iter()
        .map(|(i, seed)| {
            let entry = &ctx.cfg.systems[i];
            let spec = ctx.system(entry, seed)?;
            let mut warnings = Vec::new();
            let m = measure(&spec, trials, seed, bootstrap, &mut warnings)?;
            let row = vec![
                entry.n.to_string(),
                entry.m1.to_string(),
                entry.m2.to_string(),
                alphabet_label(spec.px()),
                fmt_f(m.p_e),
                fmt_f(m.mi_bits),
                fmt_f(m.mi_radius),
                m.method().to_string(),
                seed.to_string(),
                VERSION.to_string(),
            ];
            Ok((row, warnings))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "n",
        "m1",
        "m2",
        "q",
        "p_e",
        "mi_bits",
        "mi_radius",
        "method",
        "seed",
        "version",
    ]);
    for (row, warnings) in results {
        table.rows.push(row);
        table.warnings.extend(warnings);
    }
    table.note("rows", table.rows.len());
    Ok(table)
}

fn run_verify_lemma1(ctx: &Context) -> Result<Table> {
    ctx.need_systems(Mode::VerifyLemma1)?;
    let results: Vec<(Vec<String>, Vec<Vec<String>>, bool)> = ctx
        .jobs()
        .into_par_iter()
        .map(|(i, seed)| {
            let entry = &ctx.cfg.systems[i];
            let spec = ctx.system(entry, seed)?;
            let set = decodable_set(&spec)?;
            let sums = check_preimage_sums(&spec, &set)?;
            let disjoint = check_disjointness(&spec, &set)?;
            let pass = sums.pass() && disjoint.pass();
            let row = vec![
                entry.n.to_string(),
                entry.m1.to_string(),
                entry.m2.to_string(),
                set.len().to_string(),
                fmt_f(sums.max_joint_sum),
                fmt_f(sums.max_conditional_sum[0]),
                fmt_f(sums.max_conditional_sum[1]),
                disjoint.max_overlap.to_string(),
                pass.to_string(),
                seed.to_string(),
                VERSION.to_string(),
            ];
            let mut checks: Vec<Vec<String>> = sums
                .rows()
                .into_iter()
                .map(|r| {
                    vec![
                        i.to_string(),
                        seed.to_string(),
                        r.check,
                        fmt_f(r.worst_case_value),
                        fmt_f(r.bound),
                        r.pass.to_string(),
                    ]
                })
                .collect();
            checks.push(vec![
                i.to_string(),
                seed.to_string(),
                "preimage_overlap".into(),
                disjoint.max_overlap.to_string(),
                "1".into(),
                disjoint.pass().to_string(),
            ]);
            Ok((row, checks, pass))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "n",
        "m1",
        "m2",
        "decodable",
        "max_joint_sum",
        "max_conditional_sum_1",
        "max_conditional_sum_2",
        "max_overlap",
        "pass",
        "seed",
        "version",
    ]);
    let mut checks = Table::new(&[
        "system",
        "seed",
        "check",
        "worst_case_value",
        "bound",
        "pass",
    ]);
    for (row, check_rows, pass) in results {
        table.rows.push(row);
        checks.rows.extend(check_rows);
        if !pass {
            table.violations += 1;
        }
    }
    table.note("systems", table.rows.len());
    table.note("failed", table.violations);
    table.attachments.push(("checks".into(), checks));
    Ok(table)
}

fn premises_for(ctx: &Context, spec: &SystemSpec) -> Result<Premises> {
    let rates = match ctx.cfg.rate_pair()? {
        Some(r) => Some(r),
        None => rates_on_sum_line(spec, ctx.cfg.gamma),
    };
    Ok(Premises {
        gamma: ctx.cfg.gamma,
        epsilon: ctx.cfg.epsilon,
        delta: ctx.cfg.delta,
        delta0: ctx.cfg.delta0,
        rates,
        check_direct_law: true,
    })
}

fn run_converse(ctx: &Context) -> Result<Table> {
    ctx.need_systems(Mode::Converse)?;
    let reports: Vec<_> = ctx
        .jobs()
        .into_par_iter()
        .map(|(i, seed)| {
            let spec = ctx.system(&ctx.cfg.systems[i], seed)?;
            let premises = premises_for(ctx, &spec)?;
            Ok((i, seed, run_all(&spec, &premises)?))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&[
        "n",
        "m1",
        "m2",
        "inequality",
        "lhs",
        "relation",
        "rhs",
        "slack",
        "pass",
        "status",
        "seed",
        "version",
    ]);
    let mut met = 0usize;
    let mut min_slack = f64::INFINITY;
    for (i, seed, report) in &reports {
        let entry = &ctx.cfg.systems[*i];
        let head = [
            entry.n.to_string(),
            entry.m1.to_string(),
            entry.m2.to_string(),
        ];
        if report.premises_met {
            met += 1;
            min_slack = min_slack.min(report.min_slack());
        }
        if report.records.is_empty() {
            let mut row = head.to_vec();
            row.extend([
                "premises".into(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ]);
            row.extend([
                report.premises_met.to_string(),
                report.status().into(),
                seed.to_string(),
                VERSION.into(),
            ]);
            table.rows.push(row);
        }
        for r in &report.records {
            let mut row = head.to_vec();
            row.extend([
                r.name.clone(),
                fmt_f(r.lhs),
                r.relation.to_string(),
                fmt_f(r.rhs),
                fmt_f(r.slack),
                r.pass.to_string(),
                report.status().into(),
                seed.to_string(),
                VERSION.into(),
            ]);
            table.rows.push(row);
        }
        table.violations += report.violations().count();
        for note in &report.notes {
            table
                .warnings
                .push(format!("system {i} seed {seed}: {note}"));
        }
    }
    table.note("systems", reports.len());
    table.note("premises_met", met);
    table.note("violations", table.violations);
    if met > 0 {
        table.note("min_slack", fmt_f(min_slack));
    }
    Ok(table)
}

/// `m` with `(m / n) log2 q` closest to `rate` from above (`up`) or below,
/// clamped to `[1, n]`.
pub fn rows_for_rate(rate: f64, n: usize, q: usize, up: bool) -> usize {
    let x = rate * n as f64 / (q as f64).log2();
    let m = if up {
        (x - 1e-9).ceil()
    } else {
        (x + 1e-9).floor()
    };
    (m.max(1.0) as usize).min(n)
}

fn run_sweep(ctx: &Context) -> Result<Table> {
    let (px, pk) = (&ctx.cfg.source, &ctx.cfg.key);
    let [lo, hi] = ctx.cfg.n_range.unwrap_or([4, 4]);
    let h12 = px.joint_entropy();
    let segment = sum_rate_segment(px, pk);
    let trials = ctx.trials();
    let bootstrap = ctx.cfg.bootstrap.unwrap_or(DEFAULT_BOOTSTRAP);
    let gamma = ctx.cfg.gamma;
    let (lq1, lq2) = (px.alphabet1().log_size(), px.alphabet2().log_size());

    let points: Vec<(usize, usize, usize)> = (lo..=hi)
        .flat_map(|n| {
            (1..=n).map(move |m1| {
                let r1 = m1 as f64 * lq1 / n as f64;
                let m2 = rows_for_rate((h12 - r1).max(0.0), n, px.q2(), true);
                (n, m1, m2)
            })
        })
        .collect();

    let rows: Vec<(Vec<String>, Vec<String>, bool)> = points
        .into_par_iter()
        .map(|(n, m1, m2)| {
            let r1 = m1 as f64 * lq1 / n as f64;
            let r2_code = m2 as f64 * lq2 / n as f64;
            let entry = SystemEntry {
                n,
                m1,
                m2,
                a1: None,
                a2: None,
            };
            let mut warnings = Vec::new();
            let mut best: Option<(Measurement, u64)> = None;
            for &seed in &ctx.seeds {
                let spec = ctx.system(&entry, derive_seed(&[seed, n as u64, m1 as u64]))?;
                let m = measure(&spec, trials, seed, bootstrap, &mut warnings)?;
                let better = match &best {
                    None => true,
                    Some((b, _)) => (m.p_e, m.mi_bits) < (b.p_e, b.mi_bits),
                };
                if better {
                    best = Some((m, seed));
                }
            }
            let (m, seed) = best.expect("seeds are nonempty");
            let spec = ctx.system(&entry, derive_seed(&[seed, n as u64, m1 as u64]))?;
            let target = if h12 >= r1 {
                RatePair::new(r1, h12 - r1).ok()
            } else {
                None
            };
            let (bound, status) = match (target, m.exact) {
                (Some(t), true) => {
                    let premises = Premises {
                        gamma,
                        epsilon: ctx.cfg.epsilon,
                        delta: ctx.cfg.delta,
                        delta0: ctx.cfg.delta0,
                        rates: Some(t),
                        check_direct_law: false,
                    };
                    let report = run_all(&spec, &premises)?;
                    let bound = report
                        .get("sum_line/rate_vs_key_zeta[1]")
                        .map(|r| fmt_f(r.rhs))
                        .unwrap_or_default();
                    (bound, report.status().to_string())
                }
                (None, _) => (String::new(), "off-line".to_string()),
                (_, false) => (String::new(), "skipped".to_string()),
            };
            let violated = status == "violation";
            let row = vec![
                n.to_string(),
                m1.to_string(),
                m2.to_string(),
                fmt_f(r1),
                fmt_f(r2_code),
                segment.is_some_and(|s| s.contains(r1)).to_string(),
                fmt_f(m.p_e),
                fmt_f(m.mi_bits),
                m.method().to_string(),
                bound,
                status,
                seed.to_string(),
                VERSION.to_string(),
            ];
            Ok((row, warnings, violated))
        })
        .collect::<Result<_>>()?;

    let mut table = Table::new(&[
        "n",
        "m1",
        "m2",
        "r1",
        "r2",
        "in_segment",
        "p_e",
        "mi_bits",
        "method",
        "rate_bound_1",
        "rate_bound_status",
        "best_seed",
        "version",
    ]);
    for (row, warnings, violated) in rows {
        table.rows.push(row);
        table.warnings.extend(warnings);
        table.violations += usize::from(violated);
    }
    match segment {
        Some(s) => {
            table.note("segment_lo", fmt_f(s.lo));
            table.note("segment_hi", fmt_f(s.hi));
        }
        None => table.note("segment", "empty"),
    }
    table.note("h12", fmt_f(h12));
    table.note("violations", table.violations);
    Ok(table)
}

/// Per-blocklength outcome of the strong-converse run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrendPoint {
    pub n: usize,
    pub m1: usize,
    pub m2: usize,
    pub p_e: f64,
    pub std_err: f64,
    pub best_seed: u64,
}

/// Best sampled error probability per blocklength for codes at `rates`.
///
/// Row counts round down when `rates` lie outside `R_sw` and up when inside,
/// so the code rates stay on the same side of the region boundary. Each
/// blocklength tries `codes` seeded matrix pairs and keeps the lowest error.
#[allow(clippy::too_many_arguments)]
pub fn strong_converse_trend(
    px: &JointPmf,
    pk: &JointPmf,
    rates: RatePair,
    ns: &[usize],
    codes: usize,
    trials: usize,
    seed: u64,
    budget: u64,
) -> Result<Vec<TrendPoint>> {
    let inside = sw_region(px).contains(&rates);
    let jobs: Vec<(usize, usize)> = ns
        .iter()
        .flat_map(|&n| (0..codes).map(move |k| (n, k)))
        .collect();
    let runs: Vec<(usize, usize, usize, f64, f64, u64)> = jobs
        .into_par_iter()
        .map(|(n, k)| {
            let m1 = rows_for_rate(rates.r1, n, px.q1(), inside);
            let m2 = rows_for_rate(rates.r2, n, px.q2(), inside);
            let code_seed = derive_seed(&[seed, n as u64, k as u64]);
            let spec = SystemSpec::random(px.clone(), pk.clone(), n, m1, m2, code_seed)?
                .with_budget(budget);
            let e = error_probability_sampled(&spec, trials, derive_seed(&[code_seed, 1]))?;
            Ok((n, m1, m2, e.p_e, e.std_err, code_seed))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<TrendPoint> = Vec::new();
    for (n, m1, m2, p_e, std_err, best_seed) in runs {
        match out.last_mut() {
            Some(last) if last.n == n => {
                if p_e < last.p_e {
                    *last = TrendPoint {
                        n,
                        m1,
                        m2,
                        p_e,
                        std_err,
                        best_seed,
                    };
                }
            }
            _ => out.push(TrendPoint {
                n,
                m1,
                m2,
                p_e,
                std_err,
                best_seed,
            }),
        }
    }
    Ok(out)
}

/// Whether the error estimates never drop by more than `TREND_SDS` combined
/// standard errors between consecutive blocklengths.
pub fn nondecreasing(points: &[TrendPoint]) -> bool {
    points.windows(2).all(|w| {
        let tol = TREND_SDS * (w[0].std_err.powi(2) + w[1].std_err.powi(2)).sqrt();
        w[1].p_e >= w[0].p_e - tol
    })
}

fn run_strong_converse(ctx: &Context) -> Result<Table> {
    let (px, pk) = (&ctx.cfg.source, &ctx.cfg.key);
    let rates = ctx
        .cfg
        .rate_pair()?
        .ok_or_else(|| Error::Config("mode `strong-converse` needs `rates`".into()))?;
    let [lo, hi] = ctx.cfg.n_range.unwrap_or([2, 12]);
    let ns: Vec<usize> = (lo..=hi).collect();
    let codes = ctx.cfg.codes_per_n.unwrap_or(DEFAULT_CODES_PER_N);
    let trials = ctx.trials();
    let seed = ctx.seeds[0];
    let points = strong_converse_trend(px, pk, rates, &ns, codes, trials, seed, ctx.budget)?;
    let inside = sw_region(px).contains(&rates);

    let mut table = Table::new(&[
        "n",
        "m1",
        "m2",
        "r1",
        "r2",
        "p_e",
        "std_err",
        "trials",
        "best_seed",
        "seed",
        "version",
    ]);
    for p in &points {
        table.rows.push(vec![
            p.n.to_string(),
            p.m1.to_string(),
            p.m2.to_string(),
            fmt_f(p.m1 as f64 * px.alphabet1().log_size() / p.n as f64),
            fmt_f(p.m2 as f64 * px.alphabet2().log_size() / p.n as f64),
            fmt_f(p.p_e),
            fmt_f(p.std_err),
            trials.to_string(),
            p.best_seed.to_string(),
            seed.to_string(),
            VERSION.to_string(),
        ]);
    }
    let last = points.last().map_or(f64::NAN, |p| p.p_e);
    table.note("inside_sw", inside);
    table.note("final_p_e", fmt_f(last));
    if inside {
        let ok = last <= 0.1;
        table.note("final_below_0.1", ok);
        table.violations += usize::from(!ok);
    } else {
        let mono = nondecreasing(&points);
        let ok = last > 0.9;
        table.note("nondecreasing", mono);
        table.note("final_above_0.9", ok);
        table.violations += usize::from(!mono) + usize::from(!ok);
    }
    Ok(table)
}

/// Outcome of the randomized search for systems whose source entropy exceeds
/// the key entropy by more than the converse allows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ContrapositiveSummary {
    pub examined: usize,
    pub premises_met: usize,
    /// Systems meeting the premises with `H(X1X2) - H(K1K2) > gamma + zeta_n`.
    pub admissible_gaps: usize,
    /// Failed inequalities among systems meeting the premises.
    pub violations: usize,
}

/// Random sources with deliberately low-entropy keys at the blocklengths in
/// `ns`, certified with the achieved error and leakage as budgets.
pub fn contrapositive_search(
    systems: usize,
    ns: &[usize],
    gamma: f64,
    seed: u64,
) -> Result<ContrapositiveSummary> {
    let results: Vec<(bool, bool, usize)> = (0..systems)
        .into_par_iter()
        .map(|j| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, j as u64]));
            let px = JointPmf::random(2, 2, &mut rng)?;
            // Sharpening a Dirichlet draw concentrates the key on few letters.
            let raw = JointPmf::random(2, 2, &mut rng)?;
            let power = rng.gen_range(2..=6);
            let sharp: Vec<f64> = raw.probs().iter().map(|p| p.powi(power)).collect();
            let total = csum(sharp.iter().copied());
            let pk = JointPmf::new(2, 2, sharp.iter().map(|p| p / total).collect())?;
            let n = ns[rng.gen_range(0..ns.len())];
            let m1 = rng.gen_range(1..=n);
            let m2 = rng.gen_range(1..=n);
            let spec = SystemSpec::random(px.clone(), pk.clone(), n, m1, m2, rng.gen())?;
            let report = run_all(
                &spec,
                &Premises {
                    gamma,
                    ..Premises::default()
                },
            )?;
            let met = report.premises_met;
            let gap = EntropyProfile::of(&px).h12 - EntropyProfile::of(&pk).h12;
            let exceeds = met && report.quantity("zeta").is_some_and(|z| gap > gamma + z);
            Ok((met, exceeds, report.violations().count()))
        })
        .collect::<Result<_>>()?;
    let mut s = ContrapositiveSummary {
        examined: results.len(),
        ..Default::default()
    };
    for (met, exceeds, v) in results {
        s.premises_met += usize::from(met);
        s.admissible_gaps += usize::from(exceeds);
        s.violations += v;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const UNIFORM: &str = r#"{
        "source": {"q1": 2, "q2": 2, "probs": [0.25, 0.25, 0.25, 0.25]},
        "key": {"q1": 2, "q2": 2, "probs": [0.25, 0.25, 0.25, 0.25]}
    "#;

    fn uniform(extra: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(&format!("{UNIFORM}{extra}}}")).unwrap()
    }

    #[test]
    fn region_on_uniform_inputs() {
        let t = run(&uniform(""), Mode::Region, &RunOptions::default()).unwrap();
        assert_eq!(t.rows.len(), 6);
        assert_eq!(t.summary_value("nonempty"), Some("true"));
        assert_eq!(t.violations, 0);
    }

    #[test]
    fn unknown_field_names_its_path_and_line() {
        let text = "{\n \"source\": {\"q1\": 2, \"q2\": 2, \"probs\": [1, 0, 0, 0]},\n \"key\": {\"q1\": 2, \"q2\": 2, \"probs\": [1, 0, 0, 0], \"bogus\": 1}\n}";
        let err = ExperimentConfig::from_json(text).unwrap_err().to_string();
        assert!(err.contains("bogus") && err.contains("line 3"), "{err}");
        assert!(err.contains("key"), "{err}");
    }

    #[test]
    fn mode_mismatch_is_a_config_error() {
        let cfg = uniform(r#", "mode": "sweep""#);
        assert!(matches!(
            run(&cfg, Mode::Region, &RunOptions::default()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn row_rounding() {
        assert_eq!(rows_for_rate(0.73, 12, 2, false), 8);
        assert_eq!(rows_for_rate(0.5, 4, 2, true), 2);
        assert_eq!(rows_for_rate(0.0, 4, 2, true), 1);
        assert_eq!(rows_for_rate(2.0, 4, 2, true), 4);
    }

    #[test]
    fn sweep_uniform_has_a_perfect_point() {
        let cfg = uniform(r#", "n_range": [3, 3], "seeds": [1, 2]"#);
        let t = run(&cfg, Mode::Sweep, &RunOptions::default()).unwrap();
        let (pe, mi, m1) = (
            t.column("p_e").unwrap(),
            t.column("mi_bits").unwrap(),
            t.column("m1").unwrap(),
        );
        let full = t.rows.iter().find(|r| r[m1] == "3").unwrap();
        assert_eq!(full[pe], "0");
        assert!(full[mi].parse::<f64>().unwrap() < 1e-12);
        assert_eq!(t.summary_value("segment_lo"), Some("1"));
    }

    #[test]
    fn contrapositive_search_examines_every_system() {
        let s = contrapositive_search(6, &[2], 0.2, 3).unwrap();
        assert_eq!(s.examined, 6);
        assert!(s.premises_met <= 6);
        assert_eq!(s.violations, 0);
    }
}
