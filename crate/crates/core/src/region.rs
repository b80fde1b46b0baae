//! Two-dimensional rate regions described by half-plane constraints.
//!
//! `R_sw` is the Slepian-Wolf region of the source, `R_key` the region allowed
//! by the key entropies, and the inner region is the up-set of their
//! intersection. The sum-rate segment is the part of the intersection lying on
//! the line `R1 + R2 = H(X1 X2)`.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pmf::{conditional_entropy, Axis, JointPmf};
use crate::{Error, Result};

/// Tolerance applied to every constraint evaluation. Boundary points are members.
pub const MEMBERSHIP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Result<Self> {
        if !(r1.is_finite() && r2.is_finite()) || r1 < 0.0 || r2 < 0.0 {
            return Err(Error::Domain(format!(
                "rates must be finite and nonnegative, got ({r1}, {r2})"
            )));
        }
        Ok(Self { r1, r2 })
    }

    pub fn sum(&self) -> f64 {
        self.r1 + self.r2
    }

    pub fn get(&self, axis: Axis) -> f64 {
        match axis {
            Axis::First => self.r1,
            Axis::Second => self.r2,
        }
    }

    /// Componentwise `self >= other` up to the membership tolerance.
    pub fn dominates(&self, other: &RatePair) -> bool {
        self.r1 >= other.r1 - MEMBERSHIP_TOL && self.r2 >= other.r2 - MEMBERSHIP_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Ge,
    Le,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Ge => ">=",
            Sense::Le => "<=",
        })
    }
}

/// `a R1 + b R2 (>= | <=) c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub a: f64,
    pub b: f64,
    pub sense: Sense,
    pub c: f64,
}

impl Constraint {
    pub fn ge(a: f64, b: f64, c: f64) -> Self {
        Self {
            a,
            b,
            sense: Sense::Ge,
            c,
        }
    }

    pub fn le(a: f64, b: f64, c: f64) -> Self {
        Self {
            a,
            b,
            sense: Sense::Le,
            c,
        }
    }

    /// Signed margin: nonnegative when the constraint holds exactly.
    pub fn margin(&self, r: &RatePair) -> f64 {
        let lhs = self.a * r.r1 + self.b * r.r2;
        match self.sense {
            Sense::Ge => lhs - self.c,
            Sense::Le => self.c - lhs,
        }
    }

    pub fn holds(&self, r: &RatePair) -> bool {
        self.margin(r) >= -MEMBERSHIP_TOL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionKind {
    Sw,
    Key,
    Inner,
    Outer,
    SSet,
}

impl fmt::Display for RegionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegionKind::Sw => "SW",
            RegionKind::Key => "KEY",
            RegionKind::Inner => "INNER",
            RegionKind::Outer => "OUTER",
            RegionKind::SSet => "S_SET",
        })
    }
}

/// A region in the nonnegative quadrant, given as a conjunction of constraints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub kind: RegionKind,
    pub constraints: Vec<Constraint>,
}

impl Region {
    pub fn new(kind: RegionKind, constraints: Vec<Constraint>) -> Self {
        Self { kind, constraints }
    }

    /// The empty region, encoded by the infeasible constraint `0 >= 1`.
    pub fn empty(kind: RegionKind) -> Self {
        Self::new(kind, vec![Constraint::ge(0.0, 0.0, 1.0)])
    }

    pub fn contains(&self, r: &RatePair) -> bool {
        self.constraints.iter().all(|c| c.holds(r))
    }

    /// Conjunction of two constraint lists.
    pub fn intersect(&self, other: &Region, kind: RegionKind) -> Region {
        let mut constraints = self.constraints.clone();
        constraints.extend_from_slice(&other.constraints);
        Region::new(kind, constraints)
    }

    /// Finds a member inside the box `[0, bound]^2`, or `None`.
    ///
    /// Two-variable LP feasibility by vertex enumeration: if the feasible
    /// polygon is nonempty it has a vertex on two of the boundary lines
    /// (constraint lines or box sides), so checking all pairwise
    /// intersections is exhaustive.
    pub fn feasible_point(&self, bound: f64) -> Option<RatePair> {
        let mut lines: Vec<Constraint> = self.constraints.clone();
        lines.push(Constraint::ge(1.0, 0.0, 0.0));
        lines.push(Constraint::ge(0.0, 1.0, 0.0));
        lines.push(Constraint::le(1.0, 0.0, bound));
        lines.push(Constraint::le(0.0, 1.0, bound));
        let in_box = |r: &RatePair| lines.iter().all(|c| c.holds(r));
        for i in 0..lines.len() {
            for j in i + 1..lines.len() {
                let (l1, l2) = (&lines[i], &lines[j]);
                let det = l1.a * l2.b - l1.b * l2.a;
                if det.abs() < 1e-14 {
                    continue;
                }
                let r1 = (l1.c * l2.b - l1.b * l2.c) / det;
                let r2 = (l1.a * l2.c - l1.c * l2.a) / det;
                let candidate = RatePair { r1, r2 };
                if in_box(&candidate) {
                    return Some(candidate);
                }
            }
        }
        None
    }

    /// Restricts the region to the line `R1 + R2 = sum` and returns the
    /// resulting closed interval of `R1`, clipped to `[0, sum]`.
    pub fn on_sum_line(&self, sum: f64) -> Option<Interval> {
        let mut lo: f64 = 0.0;
        let mut hi: f64 = sum;
        for c in &self.constraints {
            // a R1 + b (sum - R1) = (a - b) R1 + b sum
            let slope = c.a - c.b;
            let rhs = c.c - c.b * sum;
            if slope.abs() < 1e-14 {
                let ok = match c.sense {
                    Sense::Ge => 0.0 >= rhs - MEMBERSHIP_TOL,
                    Sense::Le => 0.0 <= rhs + MEMBERSHIP_TOL,
                };
                if !ok {
                    return None;
                }
                continue;
            }
            let t = rhs / slope;
            let lower_bound = (c.sense == Sense::Ge) == (slope > 0.0);
            if lower_bound {
                lo = lo.max(t);
            } else {
                hi = hi.min(t);
            }
        }
        Interval::new_tolerant(lo, hi)
    }
}

/// Closed interval `[lo, hi]` of `R1` values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    /// Empty when `lo > hi + tol`; nearly-degenerate intervals collapse to a point.
    fn new_tolerant(lo: f64, hi: f64) -> Option<Self> {
        if lo > hi + MEMBERSHIP_TOL {
            None
        } else if lo > hi {
            let mid = 0.5 * (lo + hi);
            Some(Self { lo: mid, hi: mid })
        } else {
            Some(Self { lo, hi })
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo - MEMBERSHIP_TOL && x <= self.hi + MEMBERSHIP_TOL
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Entropies of a joint PMF that the region constraints are built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyProfile {
    pub h1: f64,
    pub h2: f64,
    pub h12: f64,
    pub h1_given_2: f64,
    pub h2_given_1: f64,
}

impl EntropyProfile {
    pub fn of(joint: &JointPmf) -> Self {
        Self {
            h1: joint.marginal_entropy(Axis::First),
            h2: joint.marginal_entropy(Axis::Second),
            h12: joint.joint_entropy(),
            h1_given_2: conditional_entropy(joint, Axis::Second),
            h2_given_1: conditional_entropy(joint, Axis::First),
        }
    }

    pub fn marginal(&self, axis: Axis) -> f64 {
        match axis {
            Axis::First => self.h1,
            Axis::Second => self.h2,
        }
    }

    /// `H(X_i | X_{3-i})` for `X_i` on `axis`.
    pub fn conditional(&self, axis: Axis) -> f64 {
        match axis {
            Axis::First => self.h1_given_2,
            Axis::Second => self.h2_given_1,
        }
    }
}

/// `{R1 >= H(X1|X2), R2 >= H(X2|X1), R1 + R2 >= H(X1X2)}`.
pub fn sw_region(px: &JointPmf) -> Region {
    let h = EntropyProfile::of(px);
    Region::new(
        RegionKind::Sw,
        vec![
            Constraint::ge(1.0, 0.0, h.h1_given_2),
            Constraint::ge(0.0, 1.0, h.h2_given_1),
            Constraint::ge(1.0, 1.0, h.h12),
        ],
    )
}

/// `{R1 <= H(K1), R2 <= H(K2), R1 + R2 <= H(K1K2)}`.
pub fn key_region(pk: &JointPmf) -> Region {
    let h = EntropyProfile::of(pk);
    Region::new(
        RegionKind::Key,
        vec![
            Constraint::le(1.0, 0.0, h.h1),
            Constraint::le(0.0, 1.0, h.h2),
            Constraint::le(1.0, 1.0, h.h12),
        ],
    )
}

/// The part of `R_sw ∩ R_key` on the line `R1 + R2 = H(X1X2)`, as an interval
/// of `R1`, from the closed-form endpoint formulas.
pub fn sum_rate_segment(px: &JointPmf, pk: &JointPmf) -> Option<Interval> {
    let x = EntropyProfile::of(px);
    let k = EntropyProfile::of(pk);
    if x.h12 > k.h12 + MEMBERSHIP_TOL {
        return None;
    }
    let lo = x.h1_given_2.max(x.h12 - k.h2);
    let hi = (x.h12 - x.h2_given_1).min(k.h1);
    Interval::new_tolerant(lo, hi)
}

/// The segment as a region on the sum-rate line.
pub fn s_set(px: &JointPmf, pk: &JointPmf) -> Region {
    let h12 = px.joint_entropy();
    match sum_rate_segment(px, pk) {
        Some(seg) => Region::new(
            RegionKind::SSet,
            vec![
                Constraint::ge(1.0, 1.0, h12),
                Constraint::le(1.0, 1.0, h12),
                Constraint::ge(1.0, 0.0, seg.lo),
                Constraint::le(1.0, 0.0, seg.hi),
            ],
        ),
        None => Region::empty(RegionKind::SSet),
    }
}

/// The up-set of `R_key ∩ R_sw`: the points dominating some segment point.
pub fn inner_region(px: &JointPmf, pk: &JointPmf) -> Region {
    let h12 = px.joint_entropy();
    match sum_rate_segment(px, pk) {
        Some(seg) => Region::new(
            RegionKind::Inner,
            vec![
                Constraint::ge(1.0, 0.0, seg.lo),
                Constraint::ge(0.0, 1.0, h12 - seg.hi),
                Constraint::ge(1.0, 1.0, h12),
            ],
        ),
        None => Region::empty(RegionKind::Inner),
    }
}

pub fn inner_contains(px: &JointPmf, pk: &JointPmf, r: &RatePair) -> bool {
    inner_region(px, pk).contains(r)
}

/// Entropy-inequality form of nonemptiness:
/// `H(X_i|X_{3-i}) <= H(K_i)` for both `i` and `H(X1X2) <= H(K1K2)`.
pub fn nonempty_by_entropies(px: &JointPmf, pk: &JointPmf) -> bool {
    let x = EntropyProfile::of(px);
    let k = EntropyProfile::of(pk);
    x.h1_given_2 <= k.h1 + MEMBERSHIP_TOL
        && x.h2_given_1 <= k.h2 + MEMBERSHIP_TOL
        && x.h12 <= k.h12 + MEMBERSHIP_TOL
}

/// Nonemptiness of `R_key ∩ R_sw` by direct LP feasibility.
pub fn nonempty_by_intersection(px: &JointPmf, pk: &JointPmf) -> bool {
    let bound = px.alphabet1().log_size().max(px.alphabet2().log_size()) * 2.0 + 1.0;
    sw_region(px)
        .intersect(&key_region(pk), RegionKind::Inner)
        .feasible_point(bound)
        .is_some()
}

/// `(direct intersection test, entropy-inequality test)`; the two agree.
pub fn region_nonempty(px: &JointPmf, pk: &JointPmf) -> (bool, bool) {
    (
        nonempty_by_intersection(px, pk),
        nonempty_by_entropies(px, pk),
    )
}

/// Whether the inner region equals `R_sw`: `H(X_i) <= H(K_i)` for both `i`
/// and `H(X1X2) <= H(K1K2)`.
pub fn coincides_with_sw(px: &JointPmf, pk: &JointPmf) -> bool {
    let x = EntropyProfile::of(px);
    let k = EntropyProfile::of(pk);
    x.h1 <= k.h1 + MEMBERSHIP_TOL
        && x.h2 <= k.h2 + MEMBERSHIP_TOL
        && x.h12 <= k.h12 + MEMBERSHIP_TOL
}

/// The outer region: `R_sw` when the inner region is nonempty, else empty.
///
/// Only this two-case shape is established; no general-case outer bound
/// beyond it is claimed.
pub fn outer_region(px: &JointPmf, pk: &JointPmf) -> Region {
    if nonempty_by_entropies(px, pk) {
        Region::new(RegionKind::Outer, sw_region(px).constraints)
    } else {
        Region::empty(RegionKind::Outer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::binary_entropy;
    use approx::assert_abs_diff_eq;

    fn rp(r1: f64, r2: f64) -> RatePair {
        RatePair::new(r1, r2).unwrap()
    }

    #[test]
    fn constraint_margins_and_tolerance() {
        let c = Constraint::ge(1.0, 1.0, 2.0);
        assert!(c.holds(&rp(1.0, 1.0 - 5e-10)));
        assert!(!c.holds(&rp(1.0, 1.0 - 1e-8)));
        assert!(Region::empty(RegionKind::Inner)
            .feasible_point(10.0)
            .is_none());
        assert!(!Region::empty(RegionKind::Inner).contains(&rp(0.0, 0.0)));
        assert!(RatePair::new(-1.0, 0.0).is_err());
    }

    #[test]
    fn uniform_everything() {
        let u = JointPmf::uniform(2, 2).unwrap();
        let sw = sw_region(&u);
        assert_eq!(sw.constraints[0], Constraint::ge(1.0, 0.0, 1.0));
        assert_eq!(sw.constraints[2], Constraint::ge(1.0, 1.0, 2.0));
        assert!(inner_contains(&u, &u, &rp(1.0, 1.0)));
        assert!(!inner_contains(&u, &u, &rp(0.99, 1.0)));
        assert_eq!(region_nonempty(&u, &u), (true, true));
        assert!(coincides_with_sw(&u, &u));
        let seg = sum_rate_segment(&u, &u).unwrap();
        assert_abs_diff_eq!(seg.lo, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(seg.hi, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn identical_keys_kill_the_region() {
        let u = JointPmf::uniform(2, 2).unwrap();
        let same = JointPmf::identical(&[0.5, 0.5]).unwrap();
        assert_eq!(region_nonempty(&u, &same), (false, false));
        assert!(sum_rate_segment(&u, &same).is_none());
        assert!(!inner_contains(&u, &same, &rp(5.0, 5.0)));
        assert_eq!(outer_region(&u, &same), Region::empty(RegionKind::Outer));
        let k = key_region(&same);
        assert_abs_diff_eq!(k.constraints[2].c, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn dsbs_with_uniform_keys() {
        let x = JointPmf::dsbs(0.25).unwrap();
        let u = JointPmf::uniform(2, 2).unwrap();
        let h = binary_entropy(0.25);
        let sw = sw_region(&x);
        assert_abs_diff_eq!(sw.constraints[0].c, h, epsilon = 1e-12);
        assert_abs_diff_eq!(sw.constraints[2].c, 1.0 + h, epsilon = 1e-12);
        let seg = sum_rate_segment(&x, &u).unwrap();
        assert_abs_diff_eq!(seg.lo, h, epsilon = 1e-12);
        assert_abs_diff_eq!(seg.hi, 1.0, epsilon = 1e-12);
        assert!(inner_contains(&x, &u, &rp(1.0, 0.9)));
        assert_eq!(outer_region(&x, &u).constraints, sw.constraints);
    }

    #[test]
    fn correlated_keys_sum_bound() {
        let k = JointPmf::from_rows(&[vec![0.4, 0.1], vec![0.1, 0.4]]).unwrap();
        let key = key_region(&k);
        assert_abs_diff_eq!(key.constraints[0].c, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            key.constraints[2].c,
            1.0 + binary_entropy(0.2),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(key.constraints[2].c, 1.721928, epsilon = 1e-6);
    }

    #[test]
    fn coincidence_fails_with_biased_key() {
        let x = JointPmf::uniform(2, 2).unwrap();
        let k = JointPmf::independent(&[0.9, 0.1], &[0.5, 0.5]).unwrap();
        assert!(!coincides_with_sw(&x, &k));
        let same = JointPmf::identical(&[0.5, 0.5]).unwrap();
        assert!(coincides_with_sw(&same, &same));
    }

    #[test]
    fn sum_line_restriction_matches_closed_form() {
        let x = JointPmf::dsbs(0.25).unwrap();
        let u = JointPmf::uniform(2, 2).unwrap();
        let inter = sw_region(&x).intersect(&key_region(&u), RegionKind::Inner);
        let direct = inter.on_sum_line(x.joint_entropy()).unwrap();
        let closed = sum_rate_segment(&x, &u).unwrap();
        assert_abs_diff_eq!(direct.lo, closed.lo, epsilon = 1e-12);
        assert_abs_diff_eq!(direct.hi, closed.hi, epsilon = 1e-12);
    }
}
