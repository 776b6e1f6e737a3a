//! Left-free bisets given by wreath recursions.
//!
//! A recursion stores, for each generator `g` and basis letter `x`, the
//! decomposition `x·g = c·y`. Words act letter by letter; on tensor powers the
//! rightmost letter is processed first and the cofactor travels left.

use std::collections::BTreeMap;

use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

use crate::group::{ConjClass, CrystElt, Group, GroupError, GroupKind, Order, OrbisphereStructure, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BisetError {
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error("transitions of `{gen}` do not form a permutation of the basis")]
    NotAPermutation { gen: String },
    #[error("generator `{gen}` has {found} transitions, expected {expected}")]
    WrongArity { gen: String, found: usize, expected: usize },
    #[error("missing transitions for generator `{0}`")]
    MissingGenerator(String),
    #[error("sphere relation acts nontrivially: transition of `{gen}` at letter `{letter}` disagrees with the product of the other generators")]
    SphereRelation { gen: String, letter: String },
    #[error("`{gen}^{order}` acts nontrivially at letter `{letter}`")]
    OrderViolated { gen: String, order: u32, letter: String },
    #[error("not a sphere biset: a lift of `{gen}` is `{lift}`, which is neither trivial nor a peripheral generator")]
    NonPeripheralLift { gen: String, lift: String },
    #[error("not a sphere biset: peripheral class of `{0}` occurs twice among the lifts")]
    DuplicateLift(String),
    #[error("not a sphere biset: peripheral class of `{0}` is not a lift of any peripheral class")]
    MissingLift(String),
    #[error("Riemann–Hurwitz count is {found}, expected {expected}")]
    RiemannHurwitz { found: usize, expected: usize },
    #[error("bisets are over different groups")]
    GroupMismatch,
    #[error("degree mismatch: {0} vs {1}")]
    DegreeMismatch(usize, usize),
    #[error("orbisphere structure {0}")]
    InvalidStructure(String),
}

/// Transitions of one generator: `x·g = cofactor[x]·perm[x]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Transitions {
    pub perm: Vec<usize>,
    pub cofactor: Vec<Word>,
}

impl Transitions {
    pub fn new(perm: Vec<usize>, cofactor: Vec<Word>) -> Self {
        Transitions { perm, cofactor }
    }

    fn inverse(&self, group: &Group) -> Transitions {
        let d = self.perm.len();
        let mut perm = vec![0; d];
        let mut cofactor = vec![group.identity(); d];
        for x in 0..d {
            let y = self.perm[x];
            // x·g = c·y  ⇒  y·g⁻¹ = c⁻¹·x
            perm[y] = x;
            cofactor[y] = group.inv(&self.cofactor[x]);
        }
        Transitions { perm, cofactor }
    }
}

/// Image of a peripheral class under the biset, with local degrees.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Portrait {
    /// `B_*(a)`.
    pub image: Vec<usize>,
    /// `deg_a`.
    pub degree: Vec<u32>,
    /// Degrees of the unmarked preimages of each marked point.
    pub unmarked: Vec<Vec<u32>>,
}

impl Portrait {
    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    /// Indices lying on a `B_*`-cycle.
    pub fn periodic(&self) -> Vec<bool> {
        let n = self.len();
        (0..n)
            .map(|a| {
                let mut b = self.image[a];
                for _ in 0..n {
                    if b == a {
                        return true;
                    }
                    b = self.image[b];
                }
                false
            })
            .collect()
    }

    fn cycle_of(&self, a: usize) -> Vec<usize> {
        let mut c = vec![a];
        let mut b = self.image[a];
        while b != a {
            c.push(b);
            b = self.image[b];
        }
        c
    }

    /// Every periodic cycle contains a critical index.
    pub fn is_hyperbolic(&self) -> bool {
        let per = self.periodic();
        (0..self.len()).filter(|&a| per[a]).all(|a| self.cycle_of(a).iter().any(|&b| self.degree[b] > 1))
    }

    /// Forward orbit of the periodic critical points.
    pub fn periodic_critical_orbit(&self) -> Vec<bool> {
        let per = self.periodic();
        (0..self.len())
            .map(|a| per[a] && self.cycle_of(a).iter().any(|&b| self.degree[b] > 1))
            .collect()
    }

    /// Minimal orbisphere structure: `∞` on the orbit of periodic critical
    /// points, elsewhere the least fixed point of
    /// `ord(a) = lcm { deg_b·ord(b) : B_*(b) = a } ∪ {unmarked degrees}`.
    pub fn minimal_orbisphere(&self) -> OrbisphereStructure {
        let n = self.len();
        let inf = self.periodic_critical_orbit();
        let mut ord: Vec<u64> = vec![1; n];
        // Chains of finite points are at most n long before repeating with degree 1.
        for _ in 0..=2 * n + 1 {
            let mut next = ord.clone();
            for a in (0..n).filter(|&a| !inf[a]) {
                let mut l = self.unmarked[a].iter().fold(1u64, |acc, &k| acc.lcm(&(k as u64)));
                for b in (0..n).filter(|&b| self.image[b] == a) {
                    l = l.lcm(&(self.degree[b] as u64 * ord[b]));
                }
                next[a] = l;
            }
            if next == ord {
                break;
            }
            ord = next;
        }
        OrbisphereStructure::new(
            (0..n)
                .map(|a| if inf[a] { Order::Infinite } else { Order::Finite(ord[a] as u32) })
                .collect(),
        )
    }

    /// Portrait of the composite `B ⊗ B'` (apply `self` first).
    pub fn compose(&self, other: &Portrait) -> Portrait {
        let n = self.len();
        Portrait {
            image: (0..n).map(|a| other.image[self.image[a]]).collect(),
            degree: (0..n).map(|a| self.degree[a] * other.degree[self.image[a]]).collect(),
            unmarked: Vec::new(),
        }
    }
}

/// A left-free biset presented by a wreath recursion.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SphereBiset {
    group: Group,
    letters: Vec<String>,
    angle_order: bool,
    infinity: Option<usize>,
    gens: Vec<Transitions>,
    inv: Vec<Transitions>,
}

impl SphereBiset {
    /// Build from transitions for every generator; the entry of the
    /// eliminated generator may be `None`, in which case it is derived from
    /// the sphere relation, and is otherwise checked against it.
    ///
    /// Only structural properties are checked here; see [`SphereBiset::validate`].
    pub fn new(group: Group, letters: Vec<String>, transitions: Vec<Option<Transitions>>) -> Result<Self, BisetError> {
        let d = letters.len();
        let n = group.rank();
        if transitions.len() != n {
            return Err(BisetError::Group(GroupError::PresentationMismatch));
        }
        let e = group.eliminated();
        let mut gens: Vec<Transitions> = Vec::with_capacity(n + 2);
        for (i, t) in transitions.iter().enumerate() {
            let name = group.names()[i].clone();
            match t {
                Some(t) => {
                    if t.perm.len() != d || t.cofactor.len() != d {
                        return Err(BisetError::WrongArity { gen: name, found: t.perm.len(), expected: d });
                    }
                    let mut seen = vec![false; d];
                    for &y in &t.perm {
                        if y >= d || std::mem::replace(&mut seen[y], true) {
                            return Err(BisetError::NotAPermutation { gen: name });
                        }
                    }
                    for c in &t.cofactor {
                        if c.kind() != group.kind() {
                            return Err(BisetError::Group(GroupError::PresentationMismatch));
                        }
                    }
                    gens.push(t.clone());
                }
                None if i == e => gens.push(Transitions::new((0..d).collect(), vec![group.identity(); d])),
                None => return Err(BisetError::MissingGenerator(name)),
            }
        }
        let inv = gens.iter().map(|t| t.inverse(&group)).collect();
        let mut b = SphereBiset { group, letters, angle_order: false, infinity: None, gens, inv };
        if b.group.kind() == GroupKind::Cryst {
            b.install_translations();
        }
        // derive the eliminated generator from the others
        let elim_word = b.group.generator(e);
        let derived = b.transitions_of(&elim_word);
        if let Some(given) = &transitions[e] {
            for x in 0..d {
                if given.perm[x] != derived.perm[x] || given.cofactor[x] != derived.cofactor[x] {
                    return Err(BisetError::SphereRelation {
                        gen: b.group.names()[e].clone(),
                        letter: b.letters[x].clone(),
                    });
                }
            }
        }
        b.inv[e] = derived.inverse(&b.group);
        b.gens[e] = derived;
        if b.group.kind() == GroupKind::Cryst {
            b.install_translations();
        }
        b.check_orders()?;
        Ok(b)
    }

    /// Cryst bisets act through `e₁ = t₂t₁`, `e₂ = t₃t₂` and the flip `t₁`;
    /// their transitions sit after the generators.
    fn install_translations(&mut self) {
        let n = self.group.rank();
        self.gens.truncate(n);
        self.inv.truncate(n);
        let e1 = self.compose_steps(&[(1, false), (0, false)]);
        let e2 = self.compose_steps(&[(2, false), (1, false)]);
        for t in [e1, e2] {
            self.inv.push(t.inverse(&self.group));
            self.gens.push(t);
        }
    }

    fn compose_steps(&self, steps: &[(usize, bool)]) -> Transitions {
        let d = self.degree();
        let mut perm = Vec::with_capacity(d);
        let mut cofactor = Vec::with_capacity(d);
        for x in 0..d {
            let mut c = self.group.identity();
            let mut y = x;
            for &(g, inverse) in steps {
                let (c2, y2) = self.step(y, g, inverse);
                c = self.group.mul(&c, &c2);
                y = y2;
            }
            perm.push(y);
            cofactor.push(c);
        }
        Transitions { perm, cofactor }
    }

    fn transitions_of(&self, w: &Word) -> Transitions {
        let d = self.degree();
        let (cofactor, perm) = (0..d).map(|x| self.act(x, w)).unzip();
        Transitions { perm, cofactor }
    }

    fn check_orders(&self) -> Result<(), BisetError> {
        for (i, o) in self.group.orders().iter().enumerate() {
            let Order::Finite(o) = *o else { continue };
            if i == self.group.eliminated() && self.group.relaxed() {
                continue;
            }
            for x in 0..self.degree() {
                let mut c = self.group.identity();
                let mut y = x;
                for _ in 0..o {
                    let (c2, y2) = self.step(y, i, false);
                    c = self.group.mul(&c, &c2);
                    y = y2;
                }
                if y != x || !c.is_identity() {
                    return Err(BisetError::OrderViolated {
                        gen: self.group.names()[i].clone(),
                        order: o,
                        letter: self.letters[x].clone(),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn with_angle_order(mut self, angle_order: bool) -> Self {
        self.angle_order = angle_order;
        self
    }

    pub fn with_infinity(mut self, infinity: Option<usize>) -> Self {
        self.infinity = infinity;
        self
    }

    pub fn group(&self) -> &Group {
        &self.group
    }

    pub fn letters(&self) -> &[String] {
        &self.letters
    }

    pub fn degree(&self) -> usize {
        self.letters.len()
    }

    pub fn angle_order(&self) -> bool {
        self.angle_order
    }

    pub fn infinity(&self) -> Option<usize> {
        self.infinity
    }

    /// Transitions of generator `i` (derived for the eliminated generator).
    pub fn transitions(&self, i: usize) -> &Transitions {
        &self.gens[i]
    }

    fn step(&self, x: usize, g: usize, inverse: bool) -> (Word, usize) {
        let t = if inverse { &self.inv[g] } else { &self.gens[g] };
        (t.cofactor[x].clone(), t.perm[x])
    }

    /// `x·w = c·y`; returns `(c, y)`.
    pub fn act(&self, x: usize, w: &Word) -> (Word, usize) {
        let mut y = x;
        match w {
            Word::Free(syl) => {
                // collect the cofactor syllables and reduce once
                let mut acc = Vec::new();
                for s in syl {
                    let t = if s.exp < 0 { &self.inv[s.gen as usize] } else { &self.gens[s.gen as usize] };
                    for _ in 0..s.exp.unsigned_abs() {
                        acc.extend_from_slice(t.cofactor[y].syllables());
                        y = t.perm[y];
                    }
                }
                (self.group.reduce(&acc), y)
            }
            Word::Cryst(CrystElt { t, flip }) => {
                let mut c = self.group.identity();
                let mut apply = |g: usize, inverse: bool, times: u64| {
                    for _ in 0..times {
                        let (c2, y2) = self.step(y, g, inverse);
                        c = self.group.mul(&c, &c2);
                        y = y2;
                    }
                };
                let n = self.group.rank();
                apply(n, t[0] < 0, t[0].unsigned_abs());
                apply(n + 1, t[1] < 0, t[1].unsigned_abs());
                if *flip {
                    apply(0, false, 1);
                }
                (c, y)
            }
        }
    }

    /// Action on `X^{⊗k}`: `(x₁⋯x_k)·w = c·(y₁⋯y_k)`, processing `x_k` first.
    pub fn tensor_act(&self, u: &[usize], w: &Word) -> (Word, Vec<usize>) {
        let mut v = u.to_vec();
        let mut c = w.clone();
        for i in (0..u.len()).rev() {
            let (c2, y) = self.act(u[i], &c);
            v[i] = y;
            c = c2;
        }
        (c, v)
    }

    /// Lifts of a conjugacy class, one per cycle of the induced permutation,
    /// with the cycle length as degree.
    pub fn lift_class(&self, c: &ConjClass) -> Vec<(ConjClass, usize)> {
        let g = c.representative();
        let d = self.degree();
        let t = self.transitions_of(&g);
        let mut seen = vec![false; d];
        let mut out = Vec::new();
        for x in 0..d {
            if seen[x] {
                continue;
            }
            let mut prod = self.group.identity();
            let mut y = x;
            let mut k = 0;
            while !seen[y] {
                seen[y] = true;
                prod = self.group.mul(&prod, &t.cofactor[y]);
                y = t.perm[y];
                k += 1;
            }
            out.push((self.group.conj_class(&prod), k));
        }
        out
    }

    /// Check the sphere-biset axioms that are verifiable from the recursion:
    /// every lift of a peripheral class is trivial or a peripheral generator,
    /// each peripheral class is the lift of exactly one peripheral class, and
    /// the Riemann–Hurwitz count equals `2d − 2`.
    pub fn validate(&self) -> Result<Portrait, BisetError> {
        let g = &self.group;
        let n = g.rank();
        let periph: Vec<ConjClass> = (0..n).map(|a| g.peripheral_class(a)).collect();
        let mut image = vec![usize::MAX; n];
        let mut degree = vec![0u32; n];
        let mut unmarked = vec![Vec::new(); n];
        let mut rh = 0usize;
        for a in 0..n {
            for (lift, k) in self.lift_class(&periph[a]) {
                rh += k - 1;
                if lift.is_trivial() {
                    unmarked[a].push(k as u32);
                    continue;
                }
                let Some(b) = periph.iter().position(|p| *p == lift) else {
                    return Err(BisetError::NonPeripheralLift {
                        gen: g.names()[a].clone(),
                        lift: g.format_class(&lift),
                    });
                };
                if image[b] != usize::MAX {
                    return Err(BisetError::DuplicateLift(g.names()[b].clone()));
                }
                image[b] = a;
                degree[b] = k as u32;
            }
        }
        if let Some(b) = image.iter().position(|&a| a == usize::MAX) {
            return Err(BisetError::MissingLift(g.names()[b].clone()));
        }
        let expected = 2 * self.degree() - 2;
        if rh != expected {
            return Err(BisetError::RiemannHurwitz { found: rh, expected });
        }
        Ok(Portrait { image, degree, unmarked })
    }

    pub fn portrait(&self) -> Result<Portrait, BisetError> {
        self.validate()
    }

    pub fn minimal_orbisphere(&self) -> Result<OrbisphereStructure, BisetError> {
        Ok(self.validate()?.minimal_orbisphere())
    }

    /// `ord(a) = ∞ ⇔ ord_B(a) = ∞` and `ord(a)·deg_a ∣ ord(B_*(a))`.
    pub fn check_bounded(&self, ord: &OrbisphereStructure) -> Result<(), BisetError> {
        let p = self.validate()?;
        let min = p.minimal_orbisphere();
        if ord.ord.len() != p.len() {
            return Err(BisetError::InvalidStructure("has the wrong number of points".into()));
        }
        for a in 0..p.len() {
            let (o, m, t) = (ord.ord[a], min.ord[a], ord.ord[p.image[a]]);
            if o.is_finite() != m.is_finite() {
                return Err(BisetError::InvalidStructure(format!(
                    "is not bounded: point {} has order {o}, minimal order {m}",
                    self.group.names()[a]
                )));
            }
            if let (Order::Finite(o), Order::Finite(t)) = (o, t) {
                if t % (o * p.degree[a]) != 0 {
                    return Err(BisetError::InvalidStructure(format!(
                        "is not bounded at point {}: {o}·{} does not divide {t}",
                        self.group.names()[a],
                        p.degree[a]
                    )));
                }
            }
        }
        Ok(())
    }

    /// The same recursion over `quotient(group, ord)`.
    pub fn over_quotient(&self, ord: &OrbisphereStructure) -> Result<SphereBiset, BisetError> {
        let q = self.group.quotient(ord)?;
        self.rewritten(q)
    }

    /// The recursion transported along the generator-wise map into `target`.
    pub fn rewritten(&self, target: Group) -> Result<SphereBiset, BisetError> {
        let n = self.group.rank();
        let transitions = (0..n)
            .map(|i| {
                if i == target.eliminated() {
                    return None;
                }
                let t = &self.gens[i];
                Some(Transitions::new(
                    t.perm.clone(),
                    t.cofactor.iter().map(|c| self.group.map_word(&target, c)).collect(),
                ))
            })
            .collect();
        Ok(SphereBiset::new(target, self.letters.clone(), transitions)?
            .with_angle_order(self.angle_order)
            .with_infinity(self.infinity))
    }

    /// `B ⊗ C` on the basis of pairs.
    pub fn tensor(&self, other: &SphereBiset) -> Result<SphereBiset, BisetError> {
        if self.group != other.group {
            return Err(BisetError::GroupMismatch);
        }
        let (d1, d2) = (self.degree(), other.degree());
        let letters = (0..d1)
            .flat_map(|s| (0..d2).map(move |t| (s, t)))
            .map(|(s, t)| format!("{}/{}", self.letters[s], other.letters[t]))
            .collect();
        let n = self.group.rank();
        let transitions = (0..n)
            .map(|i| {
                if i == self.group.eliminated() {
                    return None;
                }
                let g = self.group.generator(i);
                let mut perm = Vec::with_capacity(d1 * d2);
                let mut cofactor = Vec::with_capacity(d1 * d2);
                for s in 0..d1 {
                    for t in 0..d2 {
                        let (c, v) = self.tensor_pair(other, s, t, &g);
                        perm.push(v.0 * d2 + v.1);
                        cofactor.push(c);
                    }
                }
                Some(Transitions::new(perm, cofactor))
            })
            .collect();
        SphereBiset::new(self.group.clone(), letters, transitions)
    }

    fn tensor_pair(&self, other: &SphereBiset, s: usize, t: usize, g: &Word) -> (Word, (usize, usize)) {
        let (c, t2) = other.act(t, g);
        let (c2, s2) = self.act(s, &c);
        (c2, (s2, t2))
    }

    /// Identity biset on one letter.
    pub fn identity_biset(group: Group) -> SphereBiset {
        let n = group.rank();
        let e = group.eliminated();
        let transitions = (0..n)
            .map(|i| (i != e).then(|| Transitions::new(vec![0], vec![group.generator(i)])))
            .collect();
        SphereBiset::new(group, vec!["0".into()], transitions).expect("identity recursion is valid")
    }

    /// Re-base: new letter `x'_i = h_i · x_{π(i)}`.
    pub fn rebased(&self, h: &[Word], pi: &[usize]) -> Result<SphereBiset, BisetError> {
        let d = self.degree();
        let mut pinv = vec![0; d];
        for (i, &p) in pi.iter().enumerate() {
            pinv[p] = i;
        }
        let g = &self.group;
        let transitions = (0..g.rank())
            .map(|k| {
                if k == g.eliminated() {
                    return None;
                }
                let gen = g.generator(k);
                let mut perm = vec![0; d];
                let mut cofactor = vec![g.identity(); d];
                for i in 0..d {
                    // x'_i·s = h_i (x_{π i}·s) = h_i c x_y = h_i c h_j⁻¹ x'_j
                    let (c, y) = self.act(pi[i], &gen);
                    let j = pinv[y];
                    let c = g.mul(&g.mul(&h[i], &c), &g.inv(&h[j]));
                    perm[i] = j;
                    cofactor[i] = c;
                }
                Some(Transitions::new(perm, cofactor))
            })
            .collect();
        Ok(SphereBiset::new(g.clone(), self.letters.clone(), transitions)?
            .with_angle_order(self.angle_order)
            .with_infinity(self.infinity))
    }

    /// Lift table of every peripheral generator, for reports.
    pub fn peripheral_lifts(&self) -> BTreeMap<String, Vec<(String, usize)>> {
        (0..self.group.rank())
            .map(|a| {
                let lifts = self
                    .lift_class(&self.group.peripheral_class(a))
                    .into_iter()
                    .map(|(c, k)| (self.group.format_class(&c), k))
                    .collect();
                (self.group.names()[a].clone(), lifts)
            })
            .collect()
    }
}

/// Handy constructors for machines used throughout the tests and the CLI.
pub mod machines {
    use super::*;

    fn parse_table(group: &Group, d: usize, rows: &[(&str, &[(&str, usize)])]) -> Vec<Option<Transitions>> {
        let mut out = vec![None; group.rank()];
        for (name, row) in rows {
            let i = group.gen_index(name).expect("generator");
            assert_eq!(row.len(), d);
            out[i] = Some(Transitions::new(
                row.iter().map(|r| r.1).collect(),
                row.iter().map(|r| group.parse_word(r.0).expect("word")).collect(),
            ));
        }
        out
    }

    fn letters(d: usize) -> Vec<String> {
        (0..d).map(|i| i.to_string()).collect()
    }

    /// `z² − 1` on `{0, −1, ∞}`: `0·a = 1, 1·a = b·0, 0·b = 0, 1·b = a·1`.
    pub fn basilica() -> SphereBiset {
        let g = Group::free_sphere(&["a", "b", "c"]);
        let t = parse_table(&g, 2, &[("a", &[("1", 1), ("b", 0)]), ("b", &[("1", 0), ("a", 1)])]);
        SphereBiset::new(g, letters(2), t).unwrap().with_infinity(Some(2))
    }

    /// `z² − 1` in the basis `x₀, b⁻¹x₁`, where `c` is the adding machine
    /// and letters follow binary angle digits.
    pub fn basilica_angles() -> SphereBiset {
        let g = Group::free_sphere(&["a", "b", "c"]);
        let t = parse_table(&g, 2, &[("a", &[("b", 1), ("1", 0)]), ("b", &[("1", 0), ("b^-1*a*b", 1)])]);
        SphereBiset::new(g, letters(2), t).unwrap().with_angle_order(true).with_infinity(Some(2))
    }

    /// `z^d` on `{0, ∞}`: `∞` is the adding machine `x_i·u = x_{i+1}`,
    /// `x_{d−1}·u = u·x_0`, and `t = u⁻¹`.
    pub fn adding_machine(d: usize) -> SphereBiset {
        let g = Group::free_sphere(&["t", "u"]);
        let row: Vec<(&str, usize)> = (0..d).map(|i| if i > 0 { ("1", i - 1) } else { ("t", d - 1) }).collect();
        let t = parse_table(&g, d, &[("t", &row)]);
        SphereBiset::new(g, letters(d), t).unwrap().with_angle_order(true).with_infinity(Some(1))
    }

    /// One-letter recursion `x·g = g²·x` (not a sphere biset; its nucleus search
    /// never terminates).
    pub fn doubling() -> SphereBiset {
        let g = Group::free_sphere(&["g", "h"]);
        let t = parse_table(&g, 1, &[("g", &[("g^2", 0)])]);
        SphereBiset::new(g, letters(1), t).unwrap()
    }
}
