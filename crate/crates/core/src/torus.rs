//! Maps double-covered by torus endomorphisms `z ↦ Mz + v`.
//!
//! Over `Z² ⋊ Z/2` the endomorphism `M^v` sends `(n,0) ↦ (Mn,0)` and
//! `(n,1) ↦ (Mn+v,1)`. Its biset is the group itself with `g·h = M^v(g)·h`,
//! presented on coset representatives of `MZ²`.

use serde::Serialize;
use thiserror::Error;

use crate::biset::{BisetError, SphereBiset, Transitions};
use crate::group::{CrystElt, Group, GroupKind, Order, Word};
use crate::levy::{find_levy_cycle, LevyCertificate};

pub type Matrix = [[i64; 2]; 2];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TorusError {
    #[error("matrix {0:?} has |det| < 2")]
    DegenerateMatrix(Matrix),
    #[error("not torus-covered: {0}")]
    NotTorusCovered(String),
    #[error("not right-principal: {0}")]
    NotPrincipal(String),
    #[error(transparent)]
    Biset(#[from] BisetError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TorusParams {
    /// Row-major.
    pub m: Matrix,
    pub v: [i64; 2],
}

pub fn det(m: &Matrix) -> i64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// `M` has eigenvalue `1` or `−1`.
pub fn eigenvalue_gate(m: &Matrix) -> bool {
    let minus = [[m[0][0] - 1, m[0][1]], [m[1][0], m[1][1] - 1]];
    let plus = [[m[0][0] + 1, m[0][1]], [m[1][0], m[1][1] + 1]];
    det(&minus) * det(&plus) == 0
}

fn apply(m: &Matrix, x: [i64; 2]) -> [i64; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}

/// Basis `(h₁₁, h₂₁), (0, h₂₂)` of the lattice spanned by `vecs`, with
/// `h₁₁, h₂₂ > 0` and `0 ≤ h₂₁ < h₂₂`; `None` unless of full rank.
pub fn lattice_basis(vecs: &[[i64; 2]]) -> Option<([i64; 2], [i64; 2])> {
    let mut rows: Vec<[i64; 2]> = vecs.iter().copied().filter(|r| *r != [0, 0]).collect();
    loop {
        let nz: Vec<usize> = (0..rows.len()).filter(|&i| rows[i][0] != 0).collect();
        if nz.len() <= 1 {
            break;
        }
        let p = *nz.iter().min_by_key(|&&i| rows[i][0].abs()).unwrap();
        let pivot = rows[p];
        for &i in &nz {
            if i != p {
                let q = rows[i][0].div_euclid(pivot[0]);
                rows[i] = [rows[i][0] - q * pivot[0], rows[i][1] - q * pivot[1]];
            }
        }
    }
    let p = rows.iter().position(|r| r[0] != 0)?;
    let mut first = rows[p];
    if first[0] < 0 {
        first = [-first[0], -first[1]];
    }
    let g = rows
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != p)
        .fold(0i64, |acc, (_, r)| num_integer::gcd(acc, r[1]));
    if g == 0 {
        return None;
    }
    first[1] = first[1].rem_euclid(g);
    Some((first, [0, g]))
}

/// Coset representatives of `MZ²` in `Z²`, in a fixed order.
#[derive(Clone, Debug)]
struct Cosets {
    l1: [i64; 2],
    l2: [i64; 2],
}

impl Cosets {
    fn new(m: &Matrix) -> Option<Cosets> {
        let (l1, l2) = lattice_basis(&[[m[0][0], m[1][0]], [m[0][1], m[1][1]]])?;
        Some(Cosets { l1, l2 })
    }

    fn reps(&self) -> Vec<[i64; 2]> {
        (0..self.l1[0]).flat_map(|a| (0..self.l2[1]).map(move |b| [a, b])).collect()
    }

    fn canon(&self, r: [i64; 2]) -> [i64; 2] {
        let q = r[0].div_euclid(self.l1[0]);
        let r = [r[0] - q * self.l1[0], r[1] - q * self.l1[1]];
        [r[0], r[1].rem_euclid(self.l2[1])]
    }

    fn index(&self, r: [i64; 2]) -> usize {
        let c = self.canon(r);
        (c[0] * self.l2[1] + c[1]) as usize
    }
}

/// `M⁻¹x`, provided it is integral.
fn solve(m: &Matrix, x: [i64; 2]) -> Option<[i64; 2]> {
    let d = det(m);
    let a = m[1][1] * x[0] - m[0][1] * x[1];
    let b = -m[1][0] * x[0] + m[0][0] * x[1];
    (d != 0 && a % d == 0 && b % d == 0).then(|| [a / d, b / d])
}

/// The biset of `M^v` on coset representatives of `MZ²`; letter 0 is the zero coset.
pub fn torus_biset_from(m: Matrix, v: [i64; 2]) -> Result<SphereBiset, TorusError> {
    if det(&m).abs() < 2 {
        return Err(TorusError::DegenerateMatrix(m));
    }
    let cosets = Cosets::new(&m).ok_or(TorusError::DegenerateMatrix(m))?;
    let reps = cosets.reps();
    let group = Group::cryst(&["t1", "t2", "t3", "t4"]).expect("four generators");
    let transitions = (0..4)
        .map(|i| {
            if i == group.eliminated() {
                return None;
            }
            let Word::Cryst(g) = group.generator(i) else { unreachable!() };
            let mut perm = Vec::with_capacity(reps.len());
            let mut cofactor = Vec::with_capacity(reps.len());
            for &r in &reps {
                // (r,0)(m,1) = (r+m,1) = (Mk+v,1)(r',0) with r' ≡ v − r − m
                let s = [r[0] + g.t[0], r[1] + g.t[1]];
                let r2 = cosets.canon([v[0] - s[0], v[1] - s[1]]);
                let k = solve(&m, [s[0] + r2[0] - v[0], s[1] + r2[1] - v[1]]).expect("coset arithmetic");
                perm.push(cosets.index(r2));
                cofactor.push(Word::Cryst(CrystElt { t: k, flip: true }));
            }
            Some(Transitions::new(perm, cofactor))
        })
        .collect();
    let letters = reps.iter().map(|r| format!("{}_{}", r[0], r[1])).collect();
    Ok(SphereBiset::new(group, letters, transitions)?)
}

/// Four marked points, all of order 2 in the minimal orbisphere structure.
pub fn is2cover(b: &SphereBiset) -> bool {
    if b.group().rank() != 4 {
        return false;
    }
    match b.minimal_orbisphere() {
        Ok(o) => o.ord.iter().all(|&x| x == Order::Finite(2)),
        Err(_) => false,
    }
}

/// The same recursion over `Z² ⋊ Z/2`, sending the `i`-th generator to `t_i`.
pub fn to_cryst(b: &SphereBiset) -> Result<SphereBiset, TorusError> {
    if b.group().kind() == GroupKind::Cryst {
        return Ok(b.clone());
    }
    if !is2cover(b) {
        return Err(TorusError::NotTorusCovered(
            "the minimal orbisphere structure is not (2,2,2,2)".into(),
        ));
    }
    let q = b.over_quotient(&b.minimal_orbisphere()?)?;
    let target = Group::cryst(b.group().names()).map_err(BisetError::from)?;
    Ok(q.rewritten(target)?)
}

fn translation_of(w: &Word) -> Option<[i64; 2]> {
    match w {
        Word::Cryst(c) if !c.flip => Some(c.t),
        _ => None,
    }
}

/// Read `(M, v)` off a torus-covered biset, relative to the basepoint letter 0
/// and the translation basis `e₁, e₂`.
pub fn getparam(b: &SphereBiset) -> Result<TorusParams, TorusError> {
    let b = to_cryst(b)?;
    let d = b.degree();
    let g = b.group();
    let tr = |n: [i64; 2]| Word::Cryst(CrystElt::translation(n));
    // orbit of letter 0 under translations, with a transversal
    let mut reach: Vec<Option<[i64; 2]>> = vec![None; d];
    reach[0] = Some([0, 0]);
    let mut queue = vec![0usize];
    let mut schreier: Vec<[i64; 2]> = Vec::new();
    while let Some(y) = queue.pop() {
        let n = reach[y].unwrap();
        for e in [[1, 0], [0, 1]] {
            let (_, z) = b.act(y, &tr(e));
            let m = [n[0] + e[0], n[1] + e[1]];
            match reach[z] {
                Some(nz) => schreier.push([m[0] - nz[0], m[1] - nz[1]]),
                None => {
                    reach[z] = Some(m);
                    queue.push(z);
                }
            }
        }
    }
    if reach.iter().any(|r| r.is_none()) {
        return Err(TorusError::NotPrincipal("translations do not act transitively on the basis".into()));
    }
    let (l1, l2) = lattice_basis(&schreier)
        .ok_or_else(|| TorusError::NotPrincipal("stabilizer of the basepoint is not a lattice".into()))?;
    let phi = |l: [i64; 2]| -> Result<[i64; 2], TorusError> {
        let (c, y) = b.act(0, &tr(l));
        debug_assert_eq!(y, 0);
        translation_of(&c).ok_or_else(|| TorusError::NotPrincipal("a stabilizer cofactor is not a translation".into()))
    };
    let (p1, p2) = (phi(l1)?, phi(l2)?);
    // M·[p1 p2] = [l1 l2]
    let dp = p1[0] * p2[1] - p2[0] * p1[1];
    if dp == 0 {
        return Err(TorusError::NotPrincipal("stabilizer cofactors are degenerate".into()));
    }
    let l = [[l1[0], l2[0]], [l1[1], l2[1]]];
    let pinv_adj = [[p2[1], -p2[0]], [-p1[1], p1[0]]];
    let mut m = [[0i64; 2]; 2];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let s = l[i][0] * pinv_adj[0][j] + l[i][1] * pinv_adj[1][j];
            if s % dp != 0 {
                return Err(TorusError::NotPrincipal("the induced matrix is not integral".into()));
            }
            *entry = s / dp;
        }
    }
    if det(&m).unsigned_abs() as usize != d {
        return Err(TorusError::NotPrincipal(format!("|det M| = {} but the degree is {d}", det(&m).abs())));
    }
    // a flip fixing the basepoint: (n_y, 1) where y = 0·t₁
    let (_, y) = b.act(0, &g.generator(0));
    let n = reach[y].unwrap();
    let h = Word::Cryst(CrystElt { t: n, flip: true });
    let (c, z) = b.act(0, &h);
    let Word::Cryst(c) = c else { unreachable!() };
    if z != 0 || !c.flip {
        return Err(TorusError::NotPrincipal("no flip fixes the basepoint".into()));
    }
    let mk = apply(&m, c.t);
    let params = TorusParams { m, v: [n[0] - mk[0], n[1] - mk[1]] };
    let reference = torus_biset_from(params.m, params.v)?;
    if isomorphism_from(&b, &reference, 0, &g.identity()).is_none() {
        return Err(TorusError::NotPrincipal("not isomorphic to the biset of the extracted endomorphism".into()));
    }
    Ok(params)
}

/// `x ↦ k_x·π(x)`: a biset isomorphism onto a reference recursion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasisMap {
    pub pi: Vec<usize>,
    pub k: Vec<String>,
    #[serde(skip)]
    pub raw_k: Vec<Word>,
}

/// Propagate the choice `π(0) = p`, `k_0 = k` along the transitions.
fn isomorphism_from(b: &SphereBiset, r: &SphereBiset, p: usize, k: &Word) -> Option<BasisMap> {
    let g = b.group();
    let d = b.degree();
    if r.degree() != d {
        return None;
    }
    let mut pi: Vec<Option<usize>> = vec![None; d];
    let mut ks: Vec<Option<Word>> = vec![None; d];
    pi[0] = Some(p);
    ks[0] = Some(k.clone());
    let mut stack = vec![0usize];
    while let Some(x) = stack.pop() {
        let (px, kx) = (pi[x].unwrap(), ks[x].clone().unwrap());
        for i in 0..g.rank() {
            let s = g.generator(i);
            let (c, y) = b.act(x, &s);
            let (c2, y2) = r.act(px, &s);
            // k_x c' = c k_y
            let ky = g.mul(&g.mul(&g.inv(&c), &kx), &c2);
            match (&pi[y], &ks[y]) {
                (Some(py), Some(k0)) => {
                    if *py != y2 || *k0 != ky {
                        return None;
                    }
                }
                _ => {
                    pi[y] = Some(y2);
                    ks[y] = Some(ky);
                    stack.push(y);
                }
            }
        }
    }
    let pi: Vec<usize> = pi.into_iter().collect::<Option<_>>()?;
    let raw_k: Vec<Word> = ks.into_iter().collect::<Option<_>>()?;
    let mut sorted = pi.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.len() != d {
        return None;
    }
    Some(BasisMap { pi, k: raw_k.iter().map(|w| g.format_word(w)).collect(), raw_k })
}

/// Search `π(0)` over the basis and `k_0` over the ball of radius `radius`.
pub fn find_isomorphism(b: &SphereBiset, r: &SphereBiset, radius: i64) -> Option<BasisMap> {
    for p in 0..r.degree() {
        for flip in [false, true] {
            for x in -radius..=radius {
                for y in -radius..=radius {
                    let k = Word::Cryst(CrystElt { t: [x, y], flip });
                    if let Some(m) = isomorphism_from(b, r, p, &k) {
                        return Some(m);
                    }
                }
            }
        }
    }
    None
}

/// Check `π(y) = y'` and `k_x c' = c k_y` for every letter and generator,
/// where `x·s = c·y` in `b` and `π(x)·s = c'·y'` in `r`.
pub fn verify_isomorphism(b: &SphereBiset, r: &SphereBiset, map: &BasisMap) -> bool {
    let g = b.group();
    let d = b.degree();
    if map.pi.len() != d || map.raw_k.len() != d || r.degree() != d {
        return false;
    }
    let mut hit = vec![false; d];
    for &p in &map.pi {
        if p >= d || std::mem::replace(&mut hit[p], true) {
            return false;
        }
    }
    for x in 0..d {
        for i in 0..g.rank() {
            let s = g.generator(i);
            let (c, y) = b.act(x, &s);
            let (c2, y2) = r.act(map.pi[x], &s);
            if map.pi[y] != y2 || g.mul(&map.raw_k[x], &c2) != g.mul(&c, &map.raw_k[y]) {
                return false;
            }
        }
    }
    true
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum TorVerdict {
    Yes { params: TorusParams, witness: BasisMap },
    No { params: TorusParams, reason: String, levy: Option<LevyCertificate> },
    Undecided { params: TorusParams, levy_bound: usize, radius: i64 },
}

/// Whether a torus-covered biset is geometric: eigenvalue gate, then a Levy
/// search dovetailed with an isomorphism search against the reference biset.
pub fn istor(b: &SphereBiset, rounds: usize) -> Result<TorVerdict, TorusError> {
    let params = getparam(b)?;
    if eigenvalue_gate(&params.m) {
        return Ok(TorVerdict::No { params, reason: "M has eigenvalue ±1".into(), levy: None });
    }
    let cb = to_cryst(b)?;
    let reference = torus_biset_from(params.m, params.v)?;
    let mut last = (0, 0);
    for round in 0..rounds.max(1) {
        let radius = 1i64 << round;
        if let Some(witness) = find_isomorphism(&cb, &reference, radius) {
            debug_assert!(verify_isomorphism(&cb, &reference, &witness));
            return Ok(TorVerdict::Yes { params, witness });
        }
        let len = 2 + 2 * round;
        if let Some(c) = find_levy_cycle(&cb, len, len) {
            return Ok(TorVerdict::No { params, reason: "Levy cycle".into(), levy: Some(c) });
        }
        last = (len, radius);
    }
    Ok(TorVerdict::Undecided { params, levy_bound: last.0, radius: last.1 })
}
