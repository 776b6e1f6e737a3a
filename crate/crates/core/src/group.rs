//! Marked-sphere groups (free products of cyclic groups with one generator
//! eliminated through the sphere relation) and the crystallographic group
//! `Z² ⋊ Z/2`.
//!
//! Words are plain data; every operation that needs the orders of the
//! generators goes through a [`Group`].

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("malformed word `{0}`")]
    MalformedWord(String),
    #[error("word of kind {found} used in a group of kind {expected}")]
    KindMismatch { expected: &'static str, found: &'static str },
    #[error("presentation mismatch")]
    PresentationMismatch,
    #[error("a sphere group needs at least two generators, got {0}")]
    TooFewGenerators(usize),
    #[error("invalid order {0}; orders are positive integers or `inf`")]
    InvalidOrder(String),
}

/// Order of a peripheral generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Order {
    Finite(u32),
    Infinite,
}

impl Order {
    pub fn is_finite(self) -> bool {
        matches!(self, Order::Finite(_))
    }

    /// `1/o`, with `1/∞ = 0`.
    pub fn reciprocal(self) -> Ratio<i64> {
        match self {
            Order::Finite(o) => Ratio::new(1, o as i64),
            Order::Infinite => Ratio::from_integer(0),
        }
    }

    pub fn parse(s: &str) -> Result<Order, GroupError> {
        match s {
            "inf" | "∞" | "infinity" => Ok(Order::Infinite),
            _ => match s.parse::<u32>() {
                Ok(o) if o >= 1 => Ok(Order::Finite(o)),
                _ => Err(GroupError::InvalidOrder(s.to_string())),
            },
        }
    }
}

impl fmt::Display for Order {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Order::Finite(o) => write!(f, "{o}"),
            Order::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Order {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Order {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Order::parse(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GroupKind {
    Sphere,
    Cryst,
}

impl GroupKind {
    fn name(self) -> &'static str {
        match self {
            GroupKind::Sphere => "sphere",
            GroupKind::Cryst => "cryst",
        }
    }
}

/// One syllable `g^e` of a free-product normal form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Syllable {
    pub gen: u32,
    pub exp: i32,
}

/// Element `(n, ε)` of `Z² ⋊ Z/2`; multiplication is
/// `(n,ε)(m,δ) = (n + (−1)^ε m, ε⊕δ)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CrystElt {
    pub t: [i64; 2],
    pub flip: bool,
}

impl CrystElt {
    pub const IDENTITY: CrystElt = CrystElt { t: [0, 0], flip: false };

    pub fn translation(t: [i64; 2]) -> CrystElt {
        CrystElt { t, flip: false }
    }

    pub fn inv(self) -> CrystElt {
        if self.flip {
            self
        } else {
            CrystElt::translation([-self.t[0], -self.t[1]])
        }
    }
}

impl std::ops::Mul for CrystElt {
    type Output = CrystElt;

    fn mul(self, other: CrystElt) -> CrystElt {
        let s = if self.flip { -1 } else { 1 };
        CrystElt {
            t: [self.t[0] + s * other.t[0], self.t[1] + s * other.t[1]],
            flip: self.flip ^ other.flip,
        }
    }
}

/// A reduced group element.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Word {
    Free(Vec<Syllable>),
    Cryst(CrystElt),
}

impl Word {
    pub fn kind(&self) -> GroupKind {
        match self {
            Word::Free(_) => GroupKind::Sphere,
            Word::Cryst(_) => GroupKind::Cryst,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Word::Free(s) => s.is_empty(),
            Word::Cryst(c) => *c == CrystElt::IDENTITY,
        }
    }

    /// Number of syllables (free kind) or `|n₁|+|n₂|+ε` (cryst kind).
    pub fn syllable_len(&self) -> usize {
        match self {
            Word::Free(s) => s.len(),
            Word::Cryst(c) => (c.t[0].unsigned_abs() + c.t[1].unsigned_abs()) as usize + c.flip as usize,
        }
    }

    /// Word length counting `g^e` as `|e|` letters.
    pub fn letter_len(&self) -> usize {
        match self {
            Word::Free(s) => s.iter().map(|x| x.exp.unsigned_abs() as usize).sum(),
            Word::Cryst(_) => self.syllable_len(),
        }
    }

    pub fn syllables(&self) -> &[Syllable] {
        match self {
            Word::Free(s) => s,
            Word::Cryst(_) => &[],
        }
    }
}

/// Conjugacy class, stored as a canonical representative.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ConjClass {
    /// Cyclically reduced, lexicographically least rotation.
    Free(Vec<Syllable>),
    /// Class `{±n}` of a translation; the stored vector is the larger of the two.
    Translation([i64; 2]),
    /// Class of a flip `(n,1)`, determined by `n mod 2`.
    Flip([u8; 2]),
}

impl ConjClass {
    pub fn is_trivial(&self) -> bool {
        match self {
            ConjClass::Free(s) => s.is_empty(),
            ConjClass::Translation(t) => *t == [0, 0],
            ConjClass::Flip(_) => false,
        }
    }

    /// A representative word of the class.
    pub fn representative(&self) -> Word {
        match self {
            ConjClass::Free(s) => Word::Free(s.clone()),
            ConjClass::Translation(t) => Word::Cryst(CrystElt::translation(*t)),
            ConjClass::Flip(p) => Word::Cryst(CrystElt { t: [p[0] as i64, p[1] as i64], flip: true }),
        }
    }

    pub fn len(&self) -> usize {
        self.representative().letter_len()
    }

    pub fn is_empty(&self) -> bool {
        self.is_trivial()
    }
}

/// An orbisphere structure: one order per peripheral generator.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OrbisphereStructure {
    pub ord: Vec<Order>,
}

impl OrbisphereStructure {
    pub fn new(ord: Vec<Order>) -> Self {
        OrbisphereStructure { ord }
    }

    /// `2 − Σ (1 − 1/ord(a))`.
    pub fn euler_characteristic(&self) -> Ratio<i64> {
        let one = Ratio::from_integer(1);
        self.ord.iter().fold(Ratio::from_integer(2), |acc, o| acc - (one - o.reciprocal()))
    }
}

/// A marked-sphere group `⟨g₁,…,gₙ | g₁⋯gₙ, gᵢ^{oᵢ}⟩`, or the group `Z² ⋊ Z/2`.
///
/// For the sphere kind one generator (`eliminated`) never appears in normal
/// forms: it stands for `(g₁⋯g_{e−1})⁻¹(g_{e+1}⋯gₙ)⁻¹`. The remaining
/// generators generate a free product of cyclic groups. When every order is
/// finite the order of the eliminated generator is not imposed and the group is
/// flagged `relaxed`.
///
/// The cryst kind has four order-2 generators `t₁=(0,0;1)`, `t₂=(1,0;1)`,
/// `t₃=(1,1;1)`, `t₄=(0,1;1)` with `t₁t₂t₃t₄ = 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Group {
    kind: GroupKind,
    names: Vec<String>,
    orders: Vec<Order>,
    eliminated: usize,
}

const CRYST_FLIPS: [[i64; 2]; 4] = [[0, 0], [1, 0], [1, 1], [0, 1]];

impl Group {
    /// Sphere group; the eliminated generator is the last one of infinite
    /// order, or the last generator if all orders are finite.
    pub fn sphere(names: Vec<String>, orders: Vec<Order>) -> Result<Group, GroupError> {
        let eliminated = orders
            .iter()
            .rposition(|o| !o.is_finite())
            .unwrap_or(orders.len().saturating_sub(1));
        Group::sphere_with_eliminated(names, orders, eliminated)
    }

    pub fn sphere_with_eliminated(
        names: Vec<String>,
        orders: Vec<Order>,
        eliminated: usize,
    ) -> Result<Group, GroupError> {
        if names.len() < 2 {
            return Err(GroupError::TooFewGenerators(names.len()));
        }
        if names.len() != orders.len() || eliminated >= names.len() {
            return Err(GroupError::PresentationMismatch);
        }
        Ok(Group { kind: GroupKind::Sphere, names, orders, eliminated })
    }

    /// Free sphere group on the given names (all orders infinite).
    pub fn free_sphere<S: AsRef<str>>(names: &[S]) -> Group {
        let names: Vec<String> = names.iter().map(|s| s.as_ref().to_string()).collect();
        let orders = vec![Order::Infinite; names.len()];
        Group::sphere(names, orders).expect("at least two generators")
    }

    pub fn cryst<S: AsRef<str>>(names: &[S]) -> Result<Group, GroupError> {
        if names.len() != 4 {
            return Err(GroupError::PresentationMismatch);
        }
        Ok(Group {
            kind: GroupKind::Cryst,
            names: names.iter().map(|s| s.as_ref().to_string()).collect(),
            orders: vec![Order::Finite(2); 4],
            eliminated: 3,
        })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn orders(&self) -> &[Order] {
        &self.orders
    }

    pub fn eliminated(&self) -> usize {
        self.eliminated
    }

    /// True when the order relation of the eliminated generator is not imposed.
    pub fn relaxed(&self) -> bool {
        self.kind == GroupKind::Sphere && self.orders[self.eliminated].is_finite()
    }

    pub fn gen_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn check(&self, w: &Word) -> Result<(), GroupError> {
        if w.kind() != self.kind {
            return Err(GroupError::KindMismatch { expected: self.kind.name(), found: w.kind().name() });
        }
        Ok(())
    }

    pub fn identity(&self) -> Word {
        match self.kind {
            GroupKind::Sphere => Word::Free(Vec::new()),
            GroupKind::Cryst => Word::Cryst(CrystElt::IDENTITY),
        }
    }

    /// Canonical exponent of `g^e`: the representative in
    /// `[−⌊(o−1)/2⌋, ⌈(o−1)/2⌉]` for finite order `o`.
    pub fn canonical_exp(&self, gen: usize, e: i64) -> i64 {
        match self.orders[gen] {
            Order::Finite(o) if gen != self.eliminated => {
                let o = o as i64;
                let r = e.rem_euclid(o);
                if r > o / 2 {
                    r - o
                } else {
                    r
                }
            }
            _ => e,
        }
    }

    /// The element represented by generator `i` (the eliminated generator
    /// expands through the sphere relation).
    pub fn generator(&self, i: usize) -> Word {
        match self.kind {
            GroupKind::Cryst => {
                Word::Cryst(CrystElt { t: CRYST_FLIPS[i], flip: true })
            }
            GroupKind::Sphere => {
                if i != self.eliminated {
                    Word::Free(vec![Syllable { gen: i as u32, exp: 1 }])
                } else {
                    let before = self.product_of(0..i);
                    let after = self.product_of(i + 1..self.rank());
                    self.mul(&self.inv(&before), &self.inv(&after))
                }
            }
        }
    }

    fn product_of(&self, range: std::ops::Range<usize>) -> Word {
        let syl: Vec<Syllable> = range.map(|j| Syllable { gen: j as u32, exp: 1 }).collect();
        self.reduce(&syl)
    }

    /// `g_i^k`, expanding the eliminated generator.
    pub fn gen_pow(&self, i: usize, k: i64) -> Word {
        if self.kind == GroupKind::Sphere && i != self.eliminated {
            self.reduce(&[Syllable { gen: i as u32, exp: k as i32 }])
        } else {
            self.pow(&self.generator(i), k)
        }
    }

    /// Free-product normal form of a syllable list (syllables must avoid the
    /// eliminated generator).
    pub fn reduce(&self, syl: &[Syllable]) -> Word {
        let mut out: Vec<Syllable> = Vec::with_capacity(syl.len());
        for s in syl {
            self.push_syllable(&mut out, *s);
        }
        Word::Free(out)
    }

    fn push_syllable(&self, out: &mut Vec<Syllable>, s: Syllable) {
        let e = self.canonical_exp(s.gen as usize, s.exp as i64);
        if e == 0 {
            return;
        }
        match out.last_mut() {
            Some(top) if top.gen == s.gen => {
                let m = self.canonical_exp(s.gen as usize, top.exp as i64 + e);
                if m == 0 {
                    out.pop();
                } else {
                    top.exp = m as i32;
                }
            }
            _ => out.push(Syllable { gen: s.gen, exp: e as i32 }),
        }
    }

    pub fn mul(&self, a: &Word, b: &Word) -> Word {
        match (a, b) {
            (Word::Free(x), Word::Free(y)) => {
                let mut out = x.clone();
                for s in y {
                    self.push_syllable(&mut out, *s);
                }
                Word::Free(out)
            }
            (Word::Cryst(x), Word::Cryst(y)) => Word::Cryst(*x * *y),
            _ => panic!("mixing word kinds"),
        }
    }

    pub fn try_mul(&self, a: &Word, b: &Word) -> Result<Word, GroupError> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.mul(a, b))
    }

    pub fn inv(&self, a: &Word) -> Word {
        match a {
            Word::Free(x) => {
                let syl: Vec<Syllable> =
                    x.iter().rev().map(|s| Syllable { gen: s.gen, exp: -s.exp }).collect();
                self.reduce(&syl)
            }
            Word::Cryst(c) => Word::Cryst(c.inv()),
        }
    }

    pub fn pow(&self, a: &Word, k: i64) -> Word {
        let base = if k < 0 { self.inv(a) } else { a.clone() };
        let mut acc = self.identity();
        for _ in 0..k.unsigned_abs() {
            acc = self.mul(&acc, &base);
        }
        acc
    }

    pub fn conjugate(&self, w: &Word, by: &Word) -> Word {
        self.mul(&self.mul(by, w), &self.inv(by))
    }

    /// Cyclic reduction followed by least rotation.
    pub fn conj_class(&self, w: &Word) -> ConjClass {
        match w {
            Word::Cryst(c) => {
                if c.flip {
                    ConjClass::Flip([c.t[0].rem_euclid(2) as u8, c.t[1].rem_euclid(2) as u8])
                } else {
                    let neg = [-c.t[0], -c.t[1]];
                    ConjClass::Translation(c.t.max(neg))
                }
            }
            Word::Free(syl) => {
                let mut v: std::collections::VecDeque<Syllable> = syl.iter().copied().collect();
                while v.len() >= 2 && v.front().unwrap().gen == v.back().unwrap().gen {
                    let last = v.pop_back().unwrap();
                    let first = v.pop_front().unwrap();
                    let e = self.canonical_exp(first.gen as usize, first.exp as i64 + last.exp as i64);
                    if e != 0 {
                        v.push_front(Syllable { gen: first.gen, exp: e as i32 });
                    }
                }
                let v: Vec<Syllable> = v.into_iter().collect();
                ConjClass::Free(least_rotation(&v))
            }
        }
    }

    pub fn inverse_class(&self, c: &ConjClass) -> ConjClass {
        self.conj_class(&self.inv(&c.representative()))
    }

    /// The unoriented class: the smaller of `c` and `c⁻¹`.
    pub fn unoriented(&self, c: &ConjClass) -> ConjClass {
        let i = self.inverse_class(c);
        if i < *c {
            i
        } else {
            c.clone()
        }
    }

    /// Peripheral class of generator `i`.
    pub fn peripheral_class(&self, i: usize) -> ConjClass {
        self.conj_class(&self.generator(i))
    }

    /// `Some((a, k))` iff `c` is the class of `γ_a^k` with `k ≠ 0`.
    pub fn peripheral_membership(&self, c: &ConjClass) -> Option<(usize, i64)> {
        match c {
            ConjClass::Flip(p) => {
                let idx = CRYST_FLIPS.iter().position(|f| f[0] as u8 == p[0] && f[1] as u8 == p[1])?;
                Some((idx, 1))
            }
            ConjClass::Translation(_) => None,
            ConjClass::Free(s) => {
                if s.is_empty() {
                    return None;
                }
                if s.len() == 1 {
                    return Some((s[0].gen as usize, s[0].exp as i64));
                }
                let e = self.eliminated;
                let base = self.generator(e).syllable_len();
                if base < 2 || s.len() % base != 0 {
                    return None;
                }
                let k = (s.len() / base) as i64;
                [k, -k]
                    .into_iter()
                    .find(|&k| self.conj_class(&self.gen_pow(e, k)) == *c)
                    .map(|k| (e, k))
            }
        }
    }

    /// Algebraically essential: nontrivial and not peripheral.
    pub fn is_essential(&self, c: &ConjClass) -> bool {
        !c.is_trivial() && self.peripheral_membership(c).is_none()
    }

    /// The same presentation with new orders installed.
    ///
    /// The eliminated generator is kept when it stays of infinite order, moved
    /// to an infinite-order generator otherwise, and kept (relaxed) when every
    /// order is finite.
    ///
    /// The crystallographic group is its own quotient by orders `(2,2,2,2)`.
    pub fn quotient(&self, ord: &OrbisphereStructure) -> Result<Group, GroupError> {
        if self.kind == GroupKind::Cryst && ord.ord == self.orders {
            return Ok(self.clone());
        }
        if self.kind != GroupKind::Sphere || ord.ord.len() != self.rank() {
            return Err(GroupError::PresentationMismatch);
        }
        let eliminated = if !ord.ord[self.eliminated].is_finite() {
            self.eliminated
        } else {
            ord.ord.iter().rposition(|o| !o.is_finite()).unwrap_or(self.eliminated)
        };
        Group::sphere_with_eliminated(self.names.clone(), ord.ord.clone(), eliminated)
    }

    /// Image of a word of `self` in `target`, generator by generator.
    pub fn map_word(&self, target: &Group, w: &Word) -> Word {
        match w {
            Word::Cryst(_) => w.clone(),
            Word::Free(syl) => syl.iter().fold(target.identity(), |acc, s| {
                target.mul(&acc, &target.gen_pow(s.gen as usize, s.exp as i64))
            }),
        }
    }

    /// Parse `a*b^-1*c^2`; whitespace also separates factors; `1` is the
    /// identity. Cryst groups additionally accept literals `[x,y,f]`.
    pub fn parse_word(&self, text: &str) -> Result<Word, GroupError> {
        let mut acc = self.identity();
        let text = text.trim();
        if text.is_empty() || text == "1" || text == "e" || text == "ε" {
            return Ok(acc);
        }
        let mut rest = text;
        while !rest.is_empty() {
            rest = rest.trim_start_matches(|c: char| c == '*' || c.is_whitespace());
            if rest.is_empty() {
                break;
            }
            if let Some(lit) = rest.strip_prefix('[') {
                let end = lit.find(']').ok_or_else(|| GroupError::MalformedWord(text.to_string()))?;
                let elt = self.parse_cryst_literal(&lit[..end], text)?;
                acc = self.mul(&acc, &elt);
                rest = &lit[end + 1..];
                continue;
            }
            let end = rest
                .find(|c: char| c == '*' || c.is_whitespace() || c == '[')
                .unwrap_or(rest.len());
            let token = &rest[..end];
            rest = &rest[end..];
            let (name, exp) = match token.split_once('^') {
                Some((n, e)) => (
                    n,
                    e.parse::<i64>().map_err(|_| GroupError::MalformedWord(text.to_string()))?,
                ),
                None => (token, 1),
            };
            if name == "1" {
                continue;
            }
            let i = self.gen_index(name).ok_or_else(|| GroupError::UnknownGenerator(name.to_string()))?;
            acc = self.mul(&acc, &self.gen_pow(i, exp));
        }
        Ok(acc)
    }

    fn parse_cryst_literal(&self, inner: &str, text: &str) -> Result<Word, GroupError> {
        if self.kind != GroupKind::Cryst {
            return Err(GroupError::MalformedWord(text.to_string()));
        }
        let parts: Vec<i64> = inner
            .split(',')
            .map(|p| p.trim().parse::<i64>())
            .collect::<Result<_, _>>()
            .map_err(|_| GroupError::MalformedWord(text.to_string()))?;
        match parts.as_slice() {
            [x, y, f] if *f == 0 || *f == 1 => Ok(Word::Cryst(CrystElt { t: [*x, *y], flip: *f == 1 })),
            _ => Err(GroupError::MalformedWord(text.to_string())),
        }
    }

    pub fn format_word(&self, w: &Word) -> String {
        match w {
            Word::Cryst(c) => format!("[{},{},{}]", c.t[0], c.t[1], c.flip as u8),
            Word::Free(syl) if syl.is_empty() => "1".to_string(),
            Word::Free(syl) => syl
                .iter()
                .map(|s| {
                    let n = &self.names[s.gen as usize];
                    if s.exp == 1 {
                        n.clone()
                    } else {
                        format!("{n}^{}", s.exp)
                    }
                })
                .collect::<Vec<_>>()
                .join("*"),
        }
    }

    pub fn format_class(&self, c: &ConjClass) -> String {
        self.format_word(&c.representative())
    }

    pub fn parse_class(&self, text: &str) -> Result<ConjClass, GroupError> {
        Ok(self.conj_class(&self.parse_word(text)?))
    }
}

/// Lexicographically least rotation (Booth's algorithm).
fn least_rotation(v: &[Syllable]) -> Vec<Syllable> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    let at = |i: usize| v[i % n];
    let mut fail: Vec<isize> = vec![-1; 2 * n];
    let mut k = 0usize;
    for j in 1..2 * n {
        let sj = at(j);
        let mut i = fail[j - k - 1];
        while i != -1 && sj != at(k + i as usize + 1) {
            if sj < at(k + i as usize + 1) {
                k = j - i as usize - 1;
            }
            i = fail[i as usize];
        }
        if i == -1 && sj != at(k) {
            if sj < at(k) {
                k = j;
            }
            fail[j - k] = -1;
        } else {
            fail[j - k] = i + 1;
        }
    }
    (0..n).map(|i| at(k + i)).collect()
}
