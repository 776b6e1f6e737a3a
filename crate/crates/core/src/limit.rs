//! Asymptotic equivalence of symbol sequences and finite-depth pictures of the limit space.
//!
//! A sequence `x₁x₂…` is identified with `y₁y₂…` when there are nucleus states
//! `g₀, g₁, …` with `xₙ·gₙ = gₙ₋₁·yₙ` for all `n`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use num_integer::Integer;
use num_rational::Ratio;
use serde::Serialize;
use thiserror::Error;

use crate::biset::SphereBiset;
use crate::contraction::WordSet;
use crate::group::Word;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LimitError {
    #[error("machine does not declare an angle-compatible basis order")]
    IncompatibleBasisOrder,
    #[error("angle {0} is outside [0, 1)")]
    AngleOutOfRange(String),
    #[error("sequence uses letter {letter} but the basis has {degree} letters")]
    LetterOutOfRange { letter: usize, degree: usize },
    #[error("a periodic sequence needs a nonempty period")]
    EmptyPeriod,
}

/// An eventually periodic sequence `preperiod · period^∞`, kept canonical.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EvPeriodicSeq {
    preperiod: Vec<usize>,
    period: Vec<usize>,
}

impl EvPeriodicSeq {
    pub fn new(preperiod: Vec<usize>, period: Vec<usize>) -> Result<Self, LimitError> {
        if period.is_empty() {
            return Err(LimitError::EmptyPeriod);
        }
        let mut s = EvPeriodicSeq { preperiod, period };
        s.canonicalize();
        Ok(s)
    }

    fn canonicalize(&mut self) {
        let q = self.period.len();
        if let Some(p) = (1..=q).find(|&p| q.is_multiple_of(p) && (0..q).all(|i| self.period[i] == self.period[i % p])) {
            self.period.truncate(p);
        }
        while let Some(&last) = self.preperiod.last() {
            if last != *self.period.last().unwrap() {
                break;
            }
            self.preperiod.pop();
            self.period.rotate_right(1);
        }
    }

    pub fn preperiod(&self) -> &[usize] {
        &self.preperiod
    }

    pub fn period(&self) -> &[usize] {
        &self.period
    }

    /// Letter at 0-based position `i`.
    pub fn at(&self, i: usize) -> usize {
        if i < self.preperiod.len() {
            self.preperiod[i]
        } else {
            self.period[(i - self.preperiod.len()) % self.period.len()]
        }
    }

    /// `w · self`.
    pub fn prefixed(&self, w: &[usize]) -> EvPeriodicSeq {
        let mut pre = w.to_vec();
        pre.extend_from_slice(&self.preperiod);
        EvPeriodicSeq::new(pre, self.period.clone()).expect("period is nonempty")
    }

    /// Drop the first letter.
    pub fn shift(&self) -> EvPeriodicSeq {
        if self.preperiod.is_empty() {
            let mut p = self.period.clone();
            p.rotate_left(1);
            EvPeriodicSeq::new(Vec::new(), p).expect("period is nonempty")
        } else {
            EvPeriodicSeq::new(self.preperiod[1..].to_vec(), self.period.clone()).expect("period is nonempty")
        }
    }

    /// The value `Σ xᵢ d^{−i}`.
    pub fn value(&self, d: usize) -> Ratio<i64> {
        let d = d as i64;
        let mut v = Ratio::from_integer(0);
        let mut scale = Ratio::new(1, d);
        for &x in &self.preperiod {
            v += scale * x as i64;
            scale /= d;
        }
        let mut per = Ratio::from_integer(0);
        let mut s = Ratio::from_integer(1);
        for &x in &self.period {
            s /= d;
            per += s * x as i64;
        }
        let denom = Ratio::from_integer(1) - s;
        v + scale * d * per / denom
    }
}

impl std::fmt::Display for EvPeriodicSeq {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for x in &self.preperiod {
            write!(f, "{x}")?;
        }
        f.write_str("(")?;
        for x in &self.period {
            write!(f, "{x}")?;
        }
        f.write_str(")^inf")
    }
}

fn check_letters(b: &SphereBiset, s: &EvPeriodicSeq) -> Result<(), LimitError> {
    let degree = b.degree();
    match s.preperiod.iter().chain(&s.period).find(|&&x| x >= degree) {
        Some(&letter) => Err(LimitError::LetterOutOfRange { letter, degree }),
        None => Ok(()),
    }
}

/// States at position `n − 1` reachable from `states` at position `n` along
/// an edge labelled `x → y`.
fn back_step(b: &SphereBiset, states: &WordSet, x: usize, y: usize) -> WordSet {
    states
        .iter()
        .filter_map(|g| {
            let (c, z) = b.act(x, g);
            (z == y).then_some(c)
        })
        .collect()
}

/// A state `g₀` witnessing `u ∼ v`, if any (the identity when possible).
pub fn asymptotically_equivalent(
    b: &SphereBiset,
    nucleus: &WordSet,
    u: &EvPeriodicSeq,
    v: &EvPeriodicSeq,
) -> Result<Option<Word>, LimitError> {
    check_letters(b, u)?;
    check_letters(b, v)?;
    let pre = u.preperiod.len().max(v.preperiod.len());
    let per = u.period.len().lcm(&v.period.len());
    // greatest set of states at position `pre` carrying an infinite path through the periodic part
    let mut s = nucleus.clone();
    loop {
        let mut t = s.clone();
        for i in (pre..pre + per).rev() {
            t = back_step(b, &t, u.at(i), v.at(i));
        }
        let next: WordSet = t.intersection(&s).cloned().collect();
        if next == s {
            break;
        }
        s = next;
    }
    for i in (0..pre).rev() {
        s = back_step(b, &s, u.at(i), v.at(i));
    }
    let id = b.group().identity();
    if s.contains(&id) {
        Ok(Some(id))
    } else {
        Ok(s.into_iter().next())
    }
}

/// Nucleus states lying on a left-infinite path: the greatest set `R` whose
/// elements all have an incoming edge from `R`.
pub fn recurrent_states(b: &SphereBiset, nucleus: &WordSet) -> WordSet {
    let mut r = nucleus.clone();
    loop {
        let targets: WordSet = r.iter().flat_map(|g| (0..b.degree()).map(move |x| b.act(x, g).0)).collect();
        let next: WordSet = r.intersection(&targets).cloned().collect();
        if next == r {
            return r;
        }
        r = next;
    }
}

fn all_words(d: usize, n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..d.pow(n as u32)).map(move |mut k| {
        let mut w = vec![0; n];
        for i in (0..n).rev() {
            w[i] = k % d;
            k /= d;
        }
        w
    })
}

/// Unordered pairs `{u, v}` of distinct depth-`n` words joined by a nucleus path
/// that extends infinitely to the left.
pub fn identification_pairs(b: &SphereBiset, nucleus: &WordSet, depth: usize) -> BTreeSet<(Vec<usize>, Vec<usize>)> {
    let r = recurrent_states(b, nucleus);
    let mut out = BTreeSet::new();
    for u in all_words(b.degree(), depth) {
        for g in &r {
            let (_, v) = b.tensor_act(&u, g);
            if v != u {
                let pair = if u < v { (u.clone(), v) } else { (v, u.clone()) };
                out.insert(pair);
            }
        }
    }
    out
}

/// Classes of the equivalence relation generated by the pairs.
pub fn identification_classes(pairs: &BTreeSet<(Vec<usize>, Vec<usize>)>) -> Vec<BTreeSet<Vec<usize>>> {
    let mut index: HashMap<&Vec<usize>, usize> = HashMap::new();
    let mut parent: Vec<usize> = Vec::new();
    fn find(p: &mut [usize], mut i: usize) -> usize {
        while p[i] != i {
            p[i] = p[p[i]];
            i = p[i];
        }
        i
    }
    let mut words: Vec<&Vec<usize>> = Vec::new();
    for (u, v) in pairs {
        for w in [u, v] {
            if !index.contains_key(w) {
                index.insert(w, parent.len());
                parent.push(parent.len());
                words.push(w);
            }
        }
        let (a, c) = (find(&mut parent, index[u]), find(&mut parent, index[v]));
        parent[a] = c;
    }
    let mut classes: BTreeMap<usize, BTreeSet<Vec<usize>>> = BTreeMap::new();
    for (i, w) in words.iter().enumerate() {
        let r = find(&mut parent, i);
        classes.entry(r).or_default().insert((*w).clone());
    }
    classes.into_values().collect()
}

/// Base-`d` digits of `θ ∈ [0, 1)` as an eventually periodic sequence.
pub fn angle_encode(theta: Ratio<i64>, d: usize) -> Result<EvPeriodicSeq, LimitError> {
    if theta < Ratio::from_integer(0) || theta >= Ratio::from_integer(1) {
        return Err(LimitError::AngleOutOfRange(theta.to_string()));
    }
    let d = d as i64;
    let mut seen: HashMap<Ratio<i64>, usize> = HashMap::new();
    let mut digits = Vec::new();
    let mut t = theta;
    while !seen.contains_key(&t) {
        seen.insert(t, digits.len());
        let s = t * d;
        let digit = s.to_integer();
        digits.push(digit as usize);
        t = s - digit;
    }
    let start = seen[&t];
    let period = digits.split_off(start);
    EvPeriodicSeq::new(digits, period)
}

/// First `k` base-`d` digits of `θ`.
pub fn angle_digits(theta: Ratio<i64>, d: usize, k: usize) -> Result<Vec<usize>, LimitError> {
    let s = angle_encode(theta, d)?;
    Ok((0..k).map(|i| s.at(i)).collect())
}

/// Whether the external rays at `θ₁` and `θ₂` land together.
pub fn landing_equivalent(
    b: &SphereBiset,
    nucleus: &WordSet,
    theta1: Ratio<i64>,
    theta2: Ratio<i64>,
) -> Result<bool, LimitError> {
    if !b.angle_order() {
        return Err(LimitError::IncompatibleBasisOrder);
    }
    let u = angle_encode(theta1, b.degree())?;
    let v = angle_encode(theta2, b.degree())?;
    Ok(asymptotically_equivalent(b, nucleus, &u, &v)?.is_some())
}

/// Identification edges at a fixed depth, for export.
#[derive(Clone, Debug, Serialize)]
pub struct LimitPicture {
    pub degree: usize,
    pub depth: usize,
    pub edges: Vec<(String, String)>,
    #[serde(skip)]
    index_edges: Vec<(usize, usize)>,
}

impl LimitPicture {
    pub fn new(b: &SphereBiset, nucleus: &WordSet, depth: usize) -> LimitPicture {
        let d = b.degree();
        let word = |w: &[usize]| w.iter().map(|&x| b.letters()[x].clone()).collect::<Vec<_>>().join("");
        let index = |w: &[usize]| w.iter().fold(0usize, |acc, &x| acc * d + x);
        let pairs = identification_pairs(b, nucleus, depth);
        LimitPicture {
            degree: d,
            depth,
            edges: pairs.iter().map(|(u, v)| (word(u), word(v))).collect(),
            index_edges: pairs.iter().map(|(u, v)| (index(u), index(v))).collect(),
        }
    }

    fn position(&self, index: usize, size: f64) -> (f64, f64) {
        let n = self.degree.pow(self.depth as u32) as f64;
        let a = std::f64::consts::TAU * (index as f64 + 0.5) / n;
        let r = 0.45 * size;
        (size / 2.0 + r * a.cos(), size / 2.0 - r * a.sin())
    }

    fn edge_indices(&self) -> Vec<(usize, usize)> {
        self.index_edges.clone()
    }

    /// Minimal SVG: words on a circle by base-`d` value, identifications as chords.
    pub fn to_svg(&self, size: u32) -> String {
        let s = size as f64;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">"#
        );
        let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
        for (i, j) in self.edge_indices() {
            let (x1, y1) = self.position(i, s);
            let (x2, y2) = self.position(j, s);
            let _ = writeln!(
                out,
                r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}" stroke="black" stroke-width="0.5"/>"#
            );
        }
        let n = self.degree.pow(self.depth as u32);
        for i in 0..n {
            let (x, y) = self.position(i, s);
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="1" fill="red"/>"#);
        }
        out.push_str("</svg>\n");
        out
    }

    /// Binary PPM (P6) raster of the same picture.
    pub fn to_ppm(&self, size: u32) -> Vec<u8> {
        let n = size as usize;
        let mut px = vec![255u8; n * n * 3];
        let mut plot = |x: i64, y: i64, rgb: [u8; 3]| {
            if (0..n as i64).contains(&x) && (0..n as i64).contains(&y) {
                let k = (y as usize * n + x as usize) * 3;
                px[k..k + 3].copy_from_slice(&rgb);
            }
        };
        for (i, j) in self.edge_indices() {
            let (x1, y1) = self.position(i, size as f64);
            let (x2, y2) = self.position(j, size as f64);
            let steps = ((x2 - x1).abs().max((y2 - y1).abs()).ceil() as usize).max(1);
            for t in 0..=steps {
                let f = t as f64 / steps as f64;
                plot((x1 + f * (x2 - x1)).round() as i64, (y1 + f * (y2 - y1)).round() as i64, [0, 0, 0]);
            }
        }
        for i in 0..self.degree.pow(self.depth as u32) {
            let (x, y) = self.position(i, size as f64);
            plot(x.round() as i64, y.round() as i64, [255, 0, 0]);
        }
        let mut out = format!("P6\n{size} {size}\n255\n").into_bytes();
        out.extend(px);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biset::machines::{adding_machine, basilica};
    use crate::contraction::{nucleus, Budget};

    fn seq(pre: &[usize], per: &[usize]) -> EvPeriodicSeq {
        EvPeriodicSeq::new(pre.to_vec(), per.to_vec()).unwrap()
    }

    #[test]
    fn canonical_form() {
        assert_eq!(seq(&[0, 1], &[0, 1, 0, 1]), seq(&[], &[0, 1]));
        assert_eq!(seq(&[1], &[1, 1]), seq(&[], &[1]));
        assert_eq!(seq(&[0], &[1, 0]).preperiod(), &[] as &[usize]);
        assert_eq!(seq(&[1, 0], &[1, 1]).shift(), seq(&[0], &[1]));
    }

    #[test]
    fn encoding_of_simple_angles() {
        assert_eq!(angle_encode(Ratio::new(1, 3), 2).unwrap(), seq(&[], &[0, 1]));
        assert_eq!(angle_encode(Ratio::new(2, 3), 2).unwrap(), seq(&[], &[1, 0]));
        assert_eq!(angle_encode(Ratio::new(1, 6), 2).unwrap(), seq(&[0], &[0, 1]));
        assert_eq!(angle_encode(Ratio::new(0, 1), 3).unwrap(), seq(&[], &[0]));
        for (p, q) in [(1, 7), (5, 12), (3, 8)] {
            let t = Ratio::new(p, q);
            assert_eq!(angle_encode(t, 3).unwrap().value(3), t);
        }
    }

    #[test]
    fn basilica_displayed_identification() {
        let b = basilica();
        let n = nucleus(&b, Budget::default()).unwrap();
        let u = seq(&[0], &[1]);
        let v = seq(&[1], &[1, 0]);
        assert_eq!(asymptotically_equivalent(&b, &n, &u, &v).unwrap(), Some(b.group().identity()));
        let (u2, v2) = (u.prefixed(&[0, 1]), v.prefixed(&[0, 1]));
        assert!(asymptotically_equivalent(&b, &n, &u2, &v2).unwrap().is_some());
        assert!(asymptotically_equivalent(&b, &n, &seq(&[], &[0]), &seq(&[], &[1])).unwrap().is_none());
    }

    #[test]
    fn reflexive_with_trivial_witness() {
        let b = basilica();
        let n = nucleus(&b, Budget::default()).unwrap();
        let u = seq(&[1, 0, 0], &[0, 1, 1]);
        assert_eq!(asymptotically_equivalent(&b, &n, &u, &u).unwrap(), Some(b.group().identity()));
    }

    #[test]
    fn trivial_nucleus_identifies_nothing() {
        let b = basilica();
        let n: WordSet = [b.group().identity()].into_iter().collect();
        assert!(identification_pairs(&b, &n, 4).is_empty());
    }

    #[test]
    fn adding_machine_glues_carry_chains() {
        let b = adding_machine(2);
        let n = nucleus(&b, Budget::default()).unwrap();
        let pairs = identification_pairs(&b, &n, 2);
        assert!(pairs.contains(&(vec![0, 1], vec![1, 0])));
        assert!(pairs.contains(&(vec![0, 0], vec![1, 1])));
    }

    #[test]
    fn basilica_depth_one() {
        let b = basilica();
        let n = nucleus(&b, Budget::default()).unwrap();
        let pairs = identification_pairs(&b, &n, 1);
        assert_eq!(pairs, [(vec![0], vec![1])].into_iter().collect());
    }

    #[test]
    fn angle_order_is_required() {
        let b = basilica();
        let n = nucleus(&b, Budget::default()).unwrap();
        assert_eq!(
            landing_equivalent(&b, &n, Ratio::new(1, 3), Ratio::new(2, 3)),
            Err(LimitError::IncompatibleBasisOrder)
        );
    }

    #[test]
    fn images_are_well_formed() {
        let b = basilica();
        let n = nucleus(&b, Budget::default()).unwrap();
        let pic = LimitPicture::new(&b, &n, 4);
        let svg = pic.to_svg(200);
        assert!(svg.starts_with("<svg") && svg.contains("<line"));
        let ppm = pic.to_ppm(64);
        assert!(ppm.starts_with(b"P6\n64 64\n255\n"));
        assert_eq!(ppm.len(), "P6\n64 64\n255\n".len() + 64 * 64 * 3);
    }
}
