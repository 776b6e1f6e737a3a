//! Rational angles, laminations, pinching cycles and formal matings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::biset::{BisetError, SphereBiset, Transitions};
use crate::group::{Group, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MatingError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("chords cross: {0} and {1}")]
    Crossing(String, String),
    #[error("class {0} is not forward invariant: its image {1} lies in no class")]
    NotForwardInvariant(String, String),
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("no adding-machine structure: {0}")]
    NoAddingMachineStructure(String),
    #[error(transparent)]
    Biset(#[from] BisetError),
}

/// A rational angle in `[0, 1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Angle(Ratio<i64>);

impl Angle {
    pub fn new(p: i64, q: i64) -> Angle {
        Angle::from_ratio(Ratio::new(p, q))
    }

    pub fn from_ratio(r: Ratio<i64>) -> Angle {
        Angle(r - r.floor())
    }

    pub fn ratio(self) -> Ratio<i64> {
        self.0
    }

    pub fn times(self, d: i64) -> Angle {
        Angle::from_ratio(self.0 * d)
    }


    /// Periodic under `θ ↦ dθ` iff the denominator is coprime to `d`.
    pub fn is_periodic(self, d: i64) -> bool {
        num_integer::gcd(*self.0.denom(), d) == 1
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl std::ops::Neg for Angle {
    type Output = Angle;

    fn neg(self) -> Angle {
        Angle::from_ratio(-self.0)
    }
}

impl FromStr for Angle {
    type Err = String;

    fn from_str(s: &str) -> Result<Angle, String> {
        let s = s.trim();
        let (p, q) = s.split_once('/').unwrap_or((s, "1"));
        let p: i64 = p.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
        let q: i64 = q.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
        if q <= 0 {
            return Err(format!("denominator must be positive in `{s}`"));
        }
        let r = Ratio::new(p, q);
        if r < Ratio::from_integer(0) || r >= Ratio::from_integer(1) {
            return Err(format!("angle `{s}` is outside [0, 1)"));
        }
        Ok(Angle(r))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AngleOrbit {
    pub preperiod: usize,
    pub period: usize,
    pub orbit: Vec<Angle>,
}

/// Exact orbit under `θ ↦ dθ mod 1`.
pub fn angle_orbit(theta: Angle, d: usize) -> AngleOrbit {
    let mut orbit: Vec<Angle> = Vec::new();
    let mut t = theta;
    while !orbit.contains(&t) {
        orbit.push(t);
        t = t.times(d as i64);
    }
    let preperiod = orbit.iter().position(|&x| x == t).unwrap();
    AngleOrbit { preperiod, period: orbit.len() - preperiod, orbit }
}

fn class_string(c: &BTreeSet<Angle>) -> String {
    let v: Vec<String> = c.iter().map(|a| a.to_string()).collect();
    format!("{{{}}}", v.join(", "))
}

/// Landing classes of external rays.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Lamination {
    pub degree: usize,
    pub classes: Vec<BTreeSet<Angle>>,
}

impl Lamination {
    /// Classes sharing an angle are merged; singletons are dropped.
    pub fn new(degree: usize, classes: Vec<BTreeSet<Angle>>) -> Lamination {
        let mut l = Lamination { degree, classes };
        l.close();
        l
    }

    fn close(&mut self) {
        let mut merged: Vec<BTreeSet<Angle>> = Vec::new();
        for c in self.classes.drain(..) {
            let mut c = c;
            let mut rest = Vec::new();
            for m in merged {
                if m.is_disjoint(&c) {
                    rest.push(m);
                } else {
                    c.extend(m);
                }
            }
            rest.push(c);
            merged = rest;
        }
        merged.retain(|c| c.len() >= 2);
        merged.sort();
        self.classes = merged;
    }

    /// `degree d`, then one comma-separated class per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Lamination, MatingError> {
        let mut degree = None;
        let mut classes = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| MatingError::Parse { line: i + 1, msg };
            if let Some(rest) = line.strip_prefix("degree") {
                let d: usize = rest.trim().parse().map_err(|_| err(format!("bad degree `{}`", rest.trim())))?;
                if d < 2 {
                    return Err(err("degree must be at least 2".into()));
                }
                degree = Some(d);
                continue;
            }
            if degree.is_none() {
                return Err(err("expected `degree d` before the first class".into()));
            }
            let class = line.split(',').map(|s| s.parse::<Angle>()).collect::<Result<BTreeSet<_>, _>>().map_err(err)?;
            classes.push(class);
        }
        let degree = degree.ok_or(MatingError::Parse { line: 0, msg: "missing `degree d` line".into() })?;
        Ok(Lamination::new(degree, classes))
    }

    pub fn class_of(&self, a: Angle) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&a))
    }

    pub fn land_together(&self, a: Angle, b: Angle) -> bool {
        a == b || self.classes.iter().any(|c| c.contains(&a) && c.contains(&b))
    }

    pub fn support(&self) -> BTreeSet<Angle> {
        self.classes.iter().flatten().copied().collect()
    }

    /// Unlinked and forward invariant.
    pub fn validate(&self) -> Result<(), MatingError> {
        for (i, c) in self.classes.iter().enumerate() {
            for e in &self.classes[i + 1..] {
                if linked(c, e) {
                    return Err(MatingError::Crossing(class_string(c), class_string(e)));
                }
            }
        }
        for c in &self.classes {
            let image: BTreeSet<Angle> = c.iter().map(|a| a.times(self.degree as i64)).collect();
            if image.len() >= 2 && !self.classes.iter().any(|k| image.is_subset(k)) {
                return Err(MatingError::NotForwardInvariant(class_string(c), class_string(&image)));
            }
        }
        Ok(())
    }

    /// Add forward images of classes until closed.
    pub fn saturated(&self) -> Lamination {
        let mut l = self.clone();
        loop {
            let before = l.classes.clone();
            let images: Vec<BTreeSet<Angle>> = l
                .classes
                .iter()
                .map(|c| c.iter().map(|a| a.times(l.degree as i64)).collect())
                .collect();
            l.classes.extend(images);
            l.close();
            if l.classes == before {
                return l;
            }
        }
    }

    /// `{−a : a ∈ c}` for every class.
    pub fn negated(&self) -> Lamination {
        Lamination::new(self.degree, self.classes.iter().map(|c| c.iter().map(|&a| -a).collect()).collect())
    }
}

/// Two disjoint finite subsets of the circle are linked when the points of
/// one do not all lie in the same gap of the other.
fn linked(c: &BTreeSet<Angle>, e: &BTreeSet<Angle>) -> bool {
    let pts: Vec<Angle> = c.iter().copied().collect();
    let gap = |a: &Angle| pts.iter().filter(|&p| p < a).count() % pts.len();
    let mut gaps = e.iter().map(gap);
    let first = gaps.next();
    gaps.any(|g| Some(g) != first)
}

/// Angles `φ₀ … φ_{2n−1}` with `{φ_{2i}, φ_{2i+1}}` co-landing for `p₊` and
/// `{−φ_{2i}, −φ_{2i−1}}` co-landing for `p₋`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PinchingCycle {
    pub angles: Vec<Angle>,
    /// Number of landing clauses, i.e. `2n`.
    pub ray_pairs: usize,
    pub n: usize,
    /// For each clause, the side and the index of the certifying class.
    pub witnesses: Vec<(char, usize)>,
}

/// The definition, clause by clause: for `ε = ±1` and every `i` (indices mod
/// `2n`), the rays `ε·φ_{2i}` and `ε·φ_{2i+ε}` land together for `p_ε`. Also
/// requires the angles to be periodic and consecutive angles to differ.
pub fn check_pinching_cycle(plus: &Lamination, minus: &Lamination, phi: &[Angle]) -> bool {
    let len = phi.len();
    let d = plus.degree as i64;
    if len < 2 || !len.is_multiple_of(2) || plus.degree != minus.degree {
        return false;
    }
    if phi.iter().any(|a| !a.is_periodic(d)) {
        return false;
    }
    if (0..len).any(|i| phi[i] == phi[(i + 1) % len]) {
        return false;
    }
    let at = |k: i64| phi[k.rem_euclid(len as i64) as usize];
    for i in 0..len as i64 {
        for eps in [1i64, -1] {
            let lam = if eps == 1 { plus } else { minus };
            let (a, b) = (at(2 * i), at(2 * i + eps));
            let (a, b) = if eps == 1 { (a, b) } else { (-a, -b) };
            if !lam.land_together(a, b) {
                return false;
            }
        }
    }
    true
}

/// Least representative under even rotations and the reflections `φ_{k−i}`, `k` odd.
fn canonical_cycle(phi: &[Angle]) -> Vec<Angle> {
    let len = phi.len();
    let mut best: Option<Vec<Angle>> = None;
    for r in (0..len).step_by(2) {
        let rot: Vec<Angle> = (0..len).map(|i| phi[(i + r) % len]).collect();
        let refl: Vec<Angle> = (0..len).map(|i| phi[(r + 1 + len - i % len) % len]).collect();
        for c in [rot, refl] {
            if best.as_ref().is_none_or(|b| c < *b) {
                best = Some(c);
            }
        }
    }
    best.unwrap_or_default()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PinchingSearch {
    /// Shortest cycle found (canonical form).
    pub cycle: Option<PinchingCycle>,
    /// All distinct cycles, canonical, up to the length bound.
    pub cycles: Vec<Vec<Angle>>,
    pub has_two_ray_pair_cycle: bool,
    pub support: Vec<Angle>,
}

/// Alternating-cycle search over the periodic angles of both saturated laminations.
pub fn find_pinching_cycle(plus: &Lamination, minus: &Lamination, max_angles: usize) -> PinchingSearch {
    let d = plus.degree as i64;
    let (plus, minus) = (plus.saturated(), minus.saturated());
    let neg_minus = minus.negated();
    let support: BTreeSet<Angle> = plus
        .support()
        .union(&neg_minus.support())
        .copied()
        .filter(|a| a.is_periodic(d))
        .collect();
    let nodes: Vec<Angle> = support.iter().copied().collect();
    let edges = |lam: &Lamination| -> Vec<Vec<usize>> {
        nodes
            .iter()
            .map(|&a| (0..nodes.len()).filter(|&j| nodes[j] != a && lam.land_together(a, nodes[j])).collect())
            .collect()
    };
    let (pe, me) = (edges(&plus), edges(&neg_minus));
    let mut found: BTreeSet<Vec<Angle>> = BTreeSet::new();
    // simple alternating cycles starting at their least node with a plus edge
    for s in 0..nodes.len() {
        let mut path = vec![s];
        dfs(s, &mut path, &pe, &me, max_angles, &mut |p: &[usize]| {
            let phi: Vec<Angle> = p.iter().map(|&i| nodes[i]).collect();
            found.insert(canonical_cycle(&phi));
        });
    }
    let mut cycles: Vec<Vec<Angle>> = found.into_iter().collect();
    cycles.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    let cycle = cycles.first().map(|phi| {
        let len = phi.len();
        let witnesses = (0..len)
            .map(|i| {
                let (a, b) = (phi[i], phi[(i + 1) % len]);
                if i % 2 == 0 {
                    ('+', plus.classes.iter().position(|c| c.contains(&a) && c.contains(&b)).unwrap())
                } else {
                    ('-', minus.classes.iter().position(|c| c.contains(&-a) && c.contains(&-b)).unwrap())
                }
            })
            .collect();
        PinchingCycle { angles: phi.clone(), ray_pairs: len, n: len / 2, witnesses }
    });
    PinchingSearch {
        has_two_ray_pair_cycle: cycles.iter().any(|c| c.len() == 2),
        cycle,
        cycles,
        support: nodes,
    }
}

fn dfs(
    s: usize,
    path: &mut Vec<usize>,
    pe: &[Vec<usize>],
    me: &[Vec<usize>],
    max: usize,
    emit: &mut dyn FnMut(&[usize]),
) {
    let u = *path.last().unwrap();
    // edge from position k to k+1 is plus for even k
    let plus_step = path.len() % 2 == 1;
    let next = if plus_step { &pe[u] } else { &me[u] };
    for &v in next {
        if v == s && !plus_step && path.len() >= 2 {
            emit(path);
        }
        if v <= s || path.contains(&v) || path.len() >= max {
            continue;
        }
        path.push(v);
        dfs(s, path, pe, me, max, emit);
        path.pop();
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MateabilityReport {
    pub degree: usize,
    pub mateable: bool,
    pub certificate: Option<PinchingCycle>,
    pub has_two_ray_pair_cycle: bool,
    /// No cycle was found, but only within the supplied landing data.
    pub support_limited: bool,
    /// Hyperbolicity of both polynomials is assumed, not checked.
    pub hyperbolicity_assumed: bool,
}

pub fn mateability_report(plus: &Lamination, minus: &Lamination) -> Result<MateabilityReport, MatingError> {
    if plus.degree != minus.degree {
        return Err(MatingError::DegreeMismatch(plus.degree, minus.degree));
    }
    plus.validate()?;
    minus.validate()?;
    let bound = plus.saturated().support().len() + minus.saturated().support().len();
    let s = find_pinching_cycle(plus, minus, bound.max(2));
    Ok(MateabilityReport {
        degree: plus.degree,
        mateable: s.cycle.is_none(),
        support_limited: s.cycle.is_none(),
        certificate: s.cycle,
        has_two_ray_pair_cycle: s.has_two_ray_pair_cycle,
        hyperbolicity_assumed: true,
    })
}

/// Check that generator `inf` acts as `x_i·t = x_{i+1}`, `x_{d−1}·t = t·x_0`.
fn check_adding_machine(b: &SphereBiset, side: &str) -> Result<usize, MatingError> {
    let g = b.group();
    let inf = b
        .infinity()
        .ok_or_else(|| MatingError::NoAddingMachineStructure(format!("{side} machine declares no infinity generator")))?;
    if !b.angle_order() {
        return Err(MatingError::NoAddingMachineStructure(format!("{side} machine declares no angle order")));
    }
    if inf != g.rank() - 1 || inf != g.eliminated() {
        return Err(MatingError::NoAddingMachineStructure(format!(
            "{side} machine: the infinity generator must be the last, eliminated generator"
        )));
    }
    let d = b.degree();
    let t = b.transitions(inf);
    let gen = g.generator(inf);
    for x in 0..d {
        let (want_y, want_c) = if x + 1 < d { (x + 1, g.identity()) } else { (0, gen.clone()) };
        if t.perm[x] != want_y || t.cofactor[x] != want_c {
            return Err(MatingError::NoAddingMachineStructure(format!(
                "{side} machine: infinity does not act as the adding machine at letter {}",
                b.letters()[x]
            )));
        }
    }
    Ok(inf)
}

/// Formal mating: generators of `p₊` then of `p₋` (infinity removed), with
/// relation `a₁⋯a_k·b₁⋯b_m = 1`; `p₋` acts through the reversed basis.
pub fn mate_bisets(plus: &SphereBiset, minus: &SphereBiset) -> Result<SphereBiset, MatingError> {
    if plus.degree() != minus.degree() {
        return Err(MatingError::DegreeMismatch(plus.degree(), minus.degree()));
    }
    let d = plus.degree();
    let kp = check_adding_machine(plus, "plus")?;
    let km = check_adding_machine(minus, "minus")?;
    let (gp, gm) = (plus.group(), minus.group());
    let mut names: Vec<String> = gp.names()[..kp].iter().map(|n| format!("{n}+")).collect();
    names.extend(gm.names()[..km].iter().map(|n| format!("{n}-")));
    let mut orders = gp.orders()[..kp].to_vec();
    orders.extend_from_slice(&gm.orders()[..km]);
    let n = names.len();
    let group = Group::sphere_with_eliminated(names, orders, n - 1).map_err(BisetError::from)?;
    let map = |w: &Word, offset: usize| -> Word {
        w.syllables()
            .iter()
            .fold(group.identity(), |acc, s| group.mul(&acc, &group.gen_pow(s.gen as usize + offset, s.exp as i64)))
    };
    let rev = |x: usize| d - 1 - x;
    let mut transitions: Vec<Option<Transitions>> = Vec::with_capacity(n);
    for i in 0..kp {
        let t = plus.transitions(i);
        transitions.push(Some(Transitions::new(t.perm.clone(), t.cofactor.iter().map(|c| map(c, 0)).collect())));
    }
    for j in 0..km {
        let t = minus.transitions(j);
        let mut perm = vec![0; d];
        let mut cofactor = vec![group.identity(); d];
        for x in 0..d {
            perm[rev(x)] = rev(t.perm[x]);
            cofactor[rev(x)] = map(&t.cofactor[x], kp);
        }
        transitions.push(Some(Transitions::new(perm, cofactor)));
    }
    let letters = plus.letters().to_vec();
    let b = SphereBiset::new(group, letters, transitions)?;
    b.validate()?;
    Ok(b)
}

/// Adjacency of angle classes, for reports.
pub fn lamination_summary(l: &Lamination) -> BTreeMap<String, Vec<String>> {
    l.classes
        .iter()
        .map(|c| {
            let image: BTreeSet<Angle> = c.iter().map(|a| a.times(l.degree as i64)).collect();
            (class_string(c), image.iter().map(|a| a.to_string()).collect())
        })
        .collect()
}
