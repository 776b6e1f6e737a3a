//! Levy cycles, invariant multicurves and their lift digraphs.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;
use thiserror::Error;

use crate::biset::SphereBiset;
use crate::group::{ConjClass, Group, GroupKind, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LevyError {
    #[error("multicurve is not invariant: `{lift}` is an essential lift of `{class}` outside the set")]
    NotInvariant { class: String, lift: String },
    #[error("lift closure exceeded {0} classes")]
    CapExceeded(usize),
    #[error("edge refers to node {0}, but there are only {1} nodes")]
    BadEdge(usize, usize),
}

/// One step of a Levy cycle: `x·g = h·x` with `g` representing `c_{i+1}` and
/// `h` representing `c_i` up to orientation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevyStep {
    pub letter: usize,
    pub cofactor: String,
}

/// Classes `c₀, …, c_{m−1}` with `c_i` a degree-1 lift of `c_{i+1}` (indices mod `m`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LevyCertificate {
    pub period: usize,
    pub classes: Vec<String>,
    pub steps: Vec<LevyStep>,
    #[serde(skip)]
    pub raw: Vec<ConjClass>,
}

/// Canonical unoriented essential classes whose representative has at most
/// `max_len` letters (primitive translations up to sign for the crystallographic group).
pub fn essential_classes(g: &Group, max_len: usize) -> BTreeSet<ConjClass> {
    let mut out = BTreeSet::new();
    match g.kind() {
        GroupKind::Cryst => {
            let l = max_len as i64;
            for x in -l..=l {
                for y in -l..=l {
                    if (x, y) != (0, 0) && num_integer::gcd(x, y) == 1 && x.abs() + y.abs() <= l {
                        out.insert(g.unoriented(&g.conj_class(&Word::Cryst(crate::group::CrystElt::translation([x, y])))));
                    }
                }
            }
        }
        GroupKind::Sphere => {
            let mut letters: Vec<Word> = Vec::new();
            for i in (0..g.rank()).filter(|&i| i != g.eliminated()) {
                let a = g.generator(i);
                let ai = g.inv(&a);
                if ai != a {
                    letters.push(ai);
                }
                if !a.is_identity() {
                    letters.push(a);
                }
            }
            let mut stack: Vec<Word> = vec![g.identity()];
            while let Some(w) = stack.pop() {
                let c = g.conj_class(&w);
                if c.len() <= max_len && g.is_essential(&c) {
                    out.insert(g.unoriented(&c));
                }
                if w.letter_len() == max_len {
                    continue;
                }
                for l in &letters {
                    let next = g.mul(&w, l);
                    if next.letter_len() == w.letter_len() + 1 {
                        stack.push(next);
                    }
                }
            }
        }
    }
    out
}

/// Search the degree-1 lift graph on essential classes of length `≤ max_len`
/// for a cycle of length `≤ max_period`.
pub fn find_levy_cycle(b: &SphereBiset, max_len: usize, max_period: usize) -> Option<LevyCertificate> {
    let g = b.group();
    let nodes: Vec<ConjClass> = essential_classes(g, max_len).into_iter().collect();
    let index: BTreeMap<&ConjClass, usize> = nodes.iter().enumerate().map(|(i, c)| (c, i)).collect();
    // edges: lifted class → class it lifts (i.e. c_i ← c_{i+1} reversed), stored as target → source
    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (i, c) in nodes.iter().enumerate() {
        for (lift, k) in b.lift_class(c) {
            if k != 1 || !g.is_essential(&lift) {
                continue;
            }
            if let Some(&j) = index.get(&g.unoriented(&lift)) {
                succ[i].push(j);
            }
        }
    }
    // shortest cycle through each node, by BFS
    let mut best: Option<Vec<usize>> = None;
    for s in 0..nodes.len() {
        let mut prev: Vec<Option<usize>> = vec![None; nodes.len()];
        let mut dist = vec![usize::MAX; nodes.len()];
        let mut queue = VecDeque::new();
        dist[s] = 0;
        queue.push_back(s);
        let mut closing = None;
        'bfs: while let Some(u) = queue.pop_front() {
            if dist[u] + 1 > max_period {
                break;
            }
            for &v in &succ[u] {
                if v == s {
                    closing = Some(u);
                    break 'bfs;
                }
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    prev[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if let Some(mut u) = closing {
            let mut path = vec![u];
            while let Some(p) = prev[u] {
                path.push(p);
                u = p;
            }
            // path = [last, …, s]; successive entries are lifts of their predecessors in `succ` order
            path.reverse();
            if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                best = Some(path);
            }
            if best.as_ref().unwrap().len() == 1 {
                break;
            }
        }
    }
    let path = best?;
    // path[j+1] is a lift of path[j]; certificate order has c_i a lift of c_{i+1}
    let raw: Vec<ConjClass> = path.iter().rev().map(|&i| nodes[i].clone()).collect();
    let m = raw.len();
    let steps = (0..m)
        .map(|i| {
            let rep = raw[(i + 1) % m].representative();
            let target = &raw[i];
            (0..b.degree())
                .find_map(|x| {
                    let (h, y) = b.act(x, &rep);
                    (y == x && g.unoriented(&g.conj_class(&h)) == *target)
                        .then(|| LevyStep { letter: x, cofactor: g.format_word(&h) })
                })
                .expect("degree-1 lift has a fixed letter")
        })
        .collect();
    Some(LevyCertificate {
        period: m,
        classes: raw.iter().map(|c| g.format_class(c)).collect(),
        steps,
        raw,
    })
}

/// Independent check of a certificate, from the recursion alone: for every
/// step, the recorded letter is fixed by the representative of `c_{i+1}` and
/// its cofactor is conjugate to `c_i^{±1}`; all classes are essential.
pub fn verify_levy_certificate(b: &SphereBiset, cert: &LevyCertificate) -> bool {
    let g = b.group();
    let m = cert.raw.len();
    if m == 0 || m != cert.period || cert.steps.len() != m {
        return false;
    }
    for i in 0..m {
        let c = &cert.raw[i];
        if c.is_trivial() || g.peripheral_membership(c).is_some() {
            return false;
        }
        let rep = cert.raw[(i + 1) % m].representative();
        let x = cert.steps[i].letter;
        if x >= b.degree() {
            return false;
        }
        // follow the orbit of x under rep: a degree-1 lift is a fixed letter
        let (h, y) = b.act(x, &rep);
        if y != x {
            return false;
        }
        let hc = g.conj_class(&h);
        let hi = g.conj_class(&g.inv(&h));
        if hc != *c && hi != *c {
            return false;
        }
    }
    true
}

/// Lift-closure of a set of classes under essential lifts.
pub fn invariant_closure(seed: &[ConjClass], b: &SphereBiset, cap: usize) -> Result<Vec<ConjClass>, LevyError> {
    let g = b.group();
    let mut seen: BTreeSet<ConjClass> = BTreeSet::new();
    let mut queue: VecDeque<ConjClass> = VecDeque::new();
    for c in seed {
        if g.is_essential(c) && seen.insert(g.unoriented(c)) {
            queue.push_back(g.unoriented(c));
        }
    }
    while let Some(c) = queue.pop_front() {
        for (lift, _) in b.lift_class(&c) {
            if !g.is_essential(&lift) {
                continue;
            }
            let u = g.unoriented(&lift);
            if seen.insert(u.clone()) {
                if seen.len() > cap {
                    return Err(LevyError::CapExceeded(cap));
                }
                queue.push_back(u);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

/// `to` is a lift of `from` of the given degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LiftEdge {
    pub from: usize,
    pub to: usize,
    pub degree: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ComponentTags {
    pub unicycle: bool,
    pub bicycle: bool,
    pub primitive: bool,
    pub levy: bool,
}

/// Two distinct paths of length `length` from `from` to `to`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BicycleWitness {
    pub from: usize,
    pub to: usize,
    pub length: usize,
    pub paths: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Component {
    pub nodes: Vec<usize>,
    pub tags: ComponentTags,
    pub witness: Option<BicycleWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MulticurveDigraph {
    pub nodes: Vec<String>,
    pub edges: Vec<LiftEdge>,
    pub components: Vec<Component>,
    /// Lift-closure of the bicycles.
    pub cantor: Vec<usize>,
    /// Lift-closure of the Levy cycles.
    pub levy: Vec<usize>,
}

impl MulticurveDigraph {
    /// Classify an abstract lift structure.
    pub fn from_edges(nodes: Vec<String>, edges: Vec<LiftEdge>) -> Result<Self, LevyError> {
        let n = nodes.len();
        if let Some(e) = edges.iter().find(|e| e.from >= n || e.to >= n) {
            return Err(LevyError::BadEdge(e.from.max(e.to), n));
        }
        let mut graph: DiGraph<(), ()> = DiGraph::new();
        let ix: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
        for e in &edges {
            graph.add_edge(ix[e.from], ix[e.to], ());
        }
        let mut comp_of = vec![0; n];
        let mut sccs: Vec<Vec<usize>> = tarjan_scc(&graph)
            .into_iter()
            .map(|c| {
                let mut v: Vec<usize> = c.into_iter().map(|x| x.index()).collect();
                v.sort();
                v
            })
            .collect();
        sccs.sort();
        for (k, c) in sccs.iter().enumerate() {
            for &v in c {
                comp_of[v] = k;
            }
        }
        let components = sccs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let internal: Vec<&LiftEdge> =
                    edges.iter().filter(|e| comp_of[e.from] == k && comp_of[e.to] == k).collect();
                let nontrivial = !internal.is_empty();
                let bicycle = internal.len() > c.len();
                let unicycle = nontrivial && internal.len() == c.len();
                let levy = unicycle && internal.iter().all(|e| e.degree == 1);
                let primitive = !edges.iter().any(|e| comp_of[e.to] == k && comp_of[e.from] != k);
                let witness = bicycle.then(|| bicycle_witness(c, &internal)).flatten();
                Component { nodes: c.clone(), tags: ComponentTags { unicycle, bicycle, primitive, levy }, witness }
            })
            .collect::<Vec<_>>();
        let closure = |seed: Vec<usize>| -> Vec<usize> {
            let mut seen: BTreeSet<usize> = seed.iter().copied().collect();
            let mut stack = seed;
            while let Some(u) = stack.pop() {
                for e in edges.iter().filter(|e| e.from == u) {
                    if seen.insert(e.to) {
                        stack.push(e.to);
                    }
                }
            }
            seen.into_iter().collect()
        };
        let pick = |f: fn(&ComponentTags) -> bool| -> Vec<usize> {
            components.iter().filter(|c| f(&c.tags)).flat_map(|c| c.nodes.clone()).collect()
        };
        let cantor = closure(pick(|t| t.bicycle));
        let levy = closure(pick(|t| t.levy));
        Ok(MulticurveDigraph { nodes, edges, components, cantor, levy })
    }
}

/// Smallest `n` and pair joined by at least two distinct length-`n` paths.
fn bicycle_witness(nodes: &[usize], edges: &[&LiftEdge]) -> Option<BicycleWitness> {
    let bound = 2 * nodes.len() + 1;
    for &s in nodes {
        let mut count: BTreeMap<usize, u64> = [(s, 1)].into_iter().collect();
        for length in 1..=bound {
            let mut next: BTreeMap<usize, u64> = BTreeMap::new();
            for (&u, &c) in &count {
                for e in edges.iter().filter(|e| e.from == u) {
                    let entry = next.entry(e.to).or_insert(0);
                    *entry = (*entry + c).min(2);
                }
            }
            if let Some((&to, &paths)) = next.iter().find(|(_, &c)| c >= 2) {
                return Some(BicycleWitness { from: s, to, length, paths });
            }
            count = next;
        }
    }
    None
}

/// Lift digraph of a multicurve given by classes; fails unless every
/// essential lift of a node is (up to orientation) a node.
pub fn classify_multicurve(classes: &[ConjClass], b: &SphereBiset) -> Result<MulticurveDigraph, LevyError> {
    let g = b.group();
    let nodes: Vec<ConjClass> = classes.iter().map(|c| g.unoriented(c)).collect();
    let mut edges = Vec::new();
    for (i, c) in nodes.iter().enumerate() {
        for (lift, k) in b.lift_class(c) {
            if !g.is_essential(&lift) {
                continue;
            }
            let u = g.unoriented(&lift);
            match nodes.iter().position(|x| *x == u) {
                Some(j) => edges.push(LiftEdge { from: i, to: j, degree: k as u32 }),
                None => {
                    return Err(LevyError::NotInvariant { class: g.format_class(c), lift: g.format_class(&lift) })
                }
            }
        }
    }
    MulticurveDigraph::from_edges(nodes.iter().map(|c| g.format_class(c)).collect(), edges)
}
