//! Fixtures, generators and property checks shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use num_rational::Ratio;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed, TestCaseError, TestRunner};

use thurston::biset::SphereBiset;
use thurston::contraction::{nucleus, phi, Budget, WordSet};
use thurston::decide::{decide_expanding, DecideBudgets};
use thurston::group::{Group, Word};
use thurston::levy::{LiftEdge, MulticurveDigraph};
use thurston::limit::{
    asymptotically_equivalent, identification_pairs, recurrent_states, EvPeriodicSeq,
};
use thurston::machine::{parse_machine, write_machine};
use thurston::mating::{Angle, Lamination, MatingError};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture_text(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn machine(name: &str) -> SphereBiset {
    parse_machine(&fixture_text(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn lamination(name: &str) -> Lamination {
    Lamination::parse(&fixture_text(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Every `.machine` fixture, sorted by name.
pub fn corpus() -> Vec<(String, SphereBiset)> {
    let mut names: Vec<String> = std::fs::read_dir(fixture_path(""))
        .expect("fixtures directory")
        .filter_map(|e| e.ok()?.file_name().into_string().ok())
        .filter(|n| n.ends_with(".machine"))
        .collect();
    names.sort();
    names.into_iter().map(|n| (n.clone(), machine(&n))).collect()
}

pub fn config(seed: u64, cases: u32) -> Config {
    Config { cases, rng_seed: RngSeed::Fixed(seed), failure_persistence: None, ..Config::default() }
}

/// Run one property with a fixed seed; `Err` carries the shrunk counterexample.
pub fn check<S: Strategy>(
    seed: u64,
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String>
where
    S::Value: std::fmt::Debug,
{
    TestRunner::new(config(seed, cases)).run(&strategy, test).map_err(|e| e.to_string())
}

/// Raw words: generator index (taken mod rank) and a sign.
pub fn raw_word(max_len: usize) -> impl Strategy<Value = Vec<(usize, bool)>> {
    prop::collection::vec((0usize..8, any::<bool>()), 0..=max_len)
}

pub fn word(g: &Group, raw: &[(usize, bool)]) -> Word {
    raw.iter().fold(g.identity(), |acc, &(i, pos)| g.mul(&acc, &g.gen_pow(i % g.rank(), if pos { 1 } else { -1 })))
}

pub fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

// ---- group and biset laws ----

/// `x·(w₁w₂)` threads through `w₁` then `w₂`.
pub fn wreath_homomorphism(b: &SphereBiset, w1: &Word, w2: &Word) -> Result<(), TestCaseError> {
    let g = b.group();
    for x in 0..b.degree() {
        let (c1, y) = b.act(x, w1);
        let (c2, z) = b.act(y, w2);
        let direct = b.act(x, &g.mul(w1, w2));
        ensure(direct == (g.mul(&c1, &c2), z), || format!("letter {x}: {direct:?}"))?;
    }
    Ok(())
}

/// `Σ (deg − 1)` over the lifts of all peripheral classes is `2d − 2`.
pub fn riemann_hurwitz(b: &SphereBiset) -> Result<(), TestCaseError> {
    let g = b.group();
    let total: usize = (0..g.rank())
        .flat_map(|i| b.lift_class(&g.peripheral_class(i)))
        .map(|(_, deg)| deg - 1)
        .sum();
    ensure(total == 2 * b.degree() - 2, || format!("Σ(deg−1) = {total}, d = {}", b.degree()))
}

pub fn lift_degree_sum(b: &SphereBiset, w: &Word) -> Result<(), TestCaseError> {
    let c = b.group().conj_class(w);
    let sum: usize = b.lift_class(&c).iter().map(|(_, d)| d).sum();
    ensure(sum == b.degree(), || format!("degrees of lifts sum to {sum}"))
}

/// Conjugation leaves the class unchanged; products associate.
pub fn conjugacy_laws(g: &Group, w: &Word, h: &Word, k: &Word) -> Result<(), TestCaseError> {
    let conj = g.mul(&g.mul(h, w), &g.inv(h));
    ensure(g.conj_class(&conj) == g.conj_class(w), || "class not conjugation invariant".into())?;
    ensure(g.conj_class(&g.mul(w, h)) == g.conj_class(&g.mul(h, w)), || "wh and hw differ".into())?;
    ensure(g.mul(&g.mul(w, h), k) == g.mul(w, &g.mul(h, k)), || "not associative".into())?;
    ensure(g.mul(w, &g.inv(w)).is_identity(), || "w·w⁻¹ ≠ 1".into())
}

/// Least `n₀` with `Xⁿ·s ⊆ N·Xⁿ` for every `s` and every `n₀ ≤ n ≤ depth`, by enumeration.
pub fn certify_by_enumeration(b: &SphereBiset, n: &WordSet, gens: &[Word], depth: usize) -> Result<usize, String> {
    let d = b.degree();
    let holds = |len: usize| {
        gens.iter().all(|s| {
            (0..d.pow(len as u32)).all(|k| {
                let u: Vec<usize> = (0..len).map(|i| (k / d.pow(i as u32)) % d).collect();
                n.contains(&b.tensor_act(&u, s).0)
            })
        })
    };
    let ok: Vec<bool> = (0..=depth).map(holds).collect();
    let n0 = ok.iter().position(|&x| x).ok_or_else(|| format!("fails at every depth up to {depth}"))?;
    match ok[n0..].iter().position(|&x| !x) {
        Some(k) => Err(format!("holds at depth {n0} but fails at depth {}", n0 + k)),
        None => Ok(n0),
    }
}

/// Nucleus laws: symmetric, contains the identity, `φ`-closed.
pub fn nucleus_laws(b: &SphereBiset, n: &WordSet) -> Result<(), String> {
    let g = b.group();
    if !n.contains(&g.identity()) {
        return Err("identity missing".into());
    }
    if let Some(w) = n.iter().find(|w| !n.contains(&g.inv(w))) {
        return Err(format!("{} has no inverse in the nucleus", g.format_word(w)));
    }
    if !phi(b, n).is_subset(n) {
        return Err("not closed under restriction".into());
    }
    Ok(())
}

/// Cofactors at depth `depth` of every element of the radius-`radius` ball.
pub fn brute_force_attractor(b: &SphereBiset, depth: usize, radius: usize) -> WordSet {
    let g = b.group();
    let mut ball: BTreeSet<Word> = [g.identity()].into_iter().collect();
    let mut frontier = ball.clone();
    for _ in 0..radius {
        let mut next = BTreeSet::new();
        for w in &frontier {
            for i in 0..g.rank() {
                for e in [1, -1] {
                    let v = g.mul(w, &g.gen_pow(i, e));
                    if !ball.contains(&v) {
                        next.insert(v);
                    }
                }
            }
        }
        ball.extend(next.iter().cloned());
        frontier = next;
    }
    let d = b.degree();
    let mut out = WordSet::new();
    for h in &ball {
        for k in 0..d.pow(depth as u32) {
            let u: Vec<usize> = (0..depth).map(|i| (k / d.pow(i as u32)) % d).collect();
            out.insert(b.tensor_act(&u, h).0);
        }
    }
    out
}

pub fn basilica_nucleus() -> (SphereBiset, WordSet) {
    let b = machine("basilica.machine");
    let n = nucleus(&b, Budget::default()).expect("Basilica is contracting");
    (b, n)
}

// ---- limit space ----

pub fn ev_seq() -> impl Strategy<Value = EvPeriodicSeq> {
    (prop::collection::vec(0usize..2, 0..=3), prop::collection::vec(0usize..2, 1..=3))
        .prop_map(|(pre, per)| EvPeriodicSeq::new(pre, per).expect("nonempty period"))
}

pub fn equivalence_laws(
    b: &SphereBiset,
    n: &WordSet,
    u: &EvPeriodicSeq,
    v: &EvPeriodicSeq,
    w: &EvPeriodicSeq,
) -> Result<(), TestCaseError> {
    let eq = |x: &EvPeriodicSeq, y: &EvPeriodicSeq| asymptotically_equivalent(b, n, x, y).unwrap().is_some();
    ensure(eq(u, u), || format!("{u} not reflexive"))?;
    ensure(eq(u, v) == eq(v, u), || format!("{u}, {v} not symmetric"))?;
    if eq(u, v) && eq(v, w) {
        ensure(eq(u, w), || format!("{u} ∼ {v} ∼ {w} not transitive"))?;
    }
    if let Some(g0) = asymptotically_equivalent(b, n, u, v).unwrap() {
        ensure(eq(&u.shift(), &v.shift()), || format!("{u} ∼ {v} not shift invariant"))?;
        for x in 0..b.degree() {
            let (_, y) = b.act(x, &g0);
            ensure(eq(&u.prefixed(&[x]), &v.prefixed(&[y])), || format!("{u} ∼ {v} lost after prefixes {x}, {y}"))?;
        }
    }
    Ok(())
}

/// A pair at depth `n` with left cofactor `g₀` stays identified after a prefix
/// `w` on one side and `w·g₀ = c·w′` on the other, for `|w| ≤ extra`. When
/// `g₀ = 1` this is the literal `(wu, wv)`.
pub fn prefix_stability(b: &SphereBiset, nuc: &WordSet, n: usize, extra: usize) -> Result<usize, String> {
    let d = b.degree();
    let r = recurrent_states(b, nuc);
    let mut untwisted = 0;
    for m in 1..=extra {
        let deeper = identification_pairs(b, nuc, n + m);
        for k in 0..d.pow(n as u32) {
            let u: Vec<usize> = (0..n).map(|i| (k / d.pow(i as u32)) % d).collect();
            for g in &r {
                let (g0, v) = b.tensor_act(&u, g);
                if u == v {
                    continue;
                }
                for j in 0..d.pow(m as u32) {
                    let w: Vec<usize> = (0..m).map(|i| (j / d.pow(i as u32)) % d).collect();
                    let (_, w2) = b.tensor_act(&w, &g0);
                    let (wu, wv) = ([w.as_slice(), &u].concat(), [w2.as_slice(), &v].concat());
                    let pair = if wu < wv { (wu.clone(), wv.clone()) } else { (wv.clone(), wu.clone()) };
                    if wu != wv && !deeper.contains(&pair) {
                        return Err(format!("{u:?} ~ {v:?} but not {wu:?} ~ {wv:?}"));
                    }
                    if g0.is_identity() {
                        untwisted += 1;
                    }
                }
            }
        }
    }
    Ok(untwisted)
}

/// Each word at depth `≤ max_depth` meets at most `#N` words, itself included;
/// and every `∼`-class of eventually periodic sequences (preperiod and period
/// at most 3) has at most `#N` elements.
pub fn class_size_bound(b: &SphereBiset, nuc: &WordSet, max_depth: usize) -> Result<(), String> {
    let r = recurrent_states(b, nuc);
    let d = b.degree();
    for depth in 1..=max_depth {
        for k in 0..d.pow(depth as u32) {
            let u: Vec<usize> = (0..depth).map(|i| (k / d.pow(i as u32)) % d).collect();
            let met: BTreeSet<Vec<usize>> = r.iter().map(|g| b.tensor_act(&u, g).1).chain([u.clone()]).collect();
            if met.len() > nuc.len() {
                return Err(format!("{u:?} meets {} words, #N = {}", met.len(), nuc.len()));
            }
        }
    }
    let words = |max: usize, min: usize| -> Vec<Vec<usize>> {
        (min..=max)
            .flat_map(|len| (0..d.pow(len as u32)).map(move |k| (0..len).map(|i| (k / d.pow(i as u32)) % d).collect()))
            .collect()
    };
    let seqs: BTreeSet<EvPeriodicSeq> = words(3, 0)
        .into_iter()
        .flat_map(|pre| words(3, 1).into_iter().map(move |per| EvPeriodicSeq::new(pre.clone(), per).unwrap()))
        .collect();
    for u in &seqs {
        let class = seqs.iter().filter(|v| asymptotically_equivalent(b, nuc, u, v).unwrap().is_some()).count();
        if class > nuc.len() {
            return Err(format!("class of {u} has {class} elements, #N = {}", nuc.len()));
        }
    }
    Ok(())
}

// ---- laminations ----

/// Chords between angles with denominator `q`.
pub fn chords(q: i64, max: usize) -> impl Strategy<Value = Vec<(i64, i64)>> {
    prop::collection::vec((0..q, 0..q), 1..=max)
        .prop_map(|v| v.into_iter().filter(|(a, b)| a != b).collect::<Vec<_>>())
}

pub fn lamination_from(d: usize, q: i64, chords: &[(i64, i64)]) -> Lamination {
    Lamination::new(d, chords.iter().map(|&(a, b)| [Angle::new(a, q), Angle::new(b, q)].into_iter().collect()).collect())
}

/// Chords `{a,b}` and `{c,e}` cross when exactly one of `c, e` lies strictly between `a` and `b`.
fn crosses(a: Ratio<i64>, b: Ratio<i64>, c: Ratio<i64>, e: Ratio<i64>) -> bool {
    let (lo, hi) = if a < b { (a, b) } else { (b, a) };
    let inside = |t: Ratio<i64>| lo < t && t < hi;
    [a, b].iter().all(|x| *x != c && *x != e) && (inside(c) != inside(e))
}

pub fn unlinkedness(l: &Lamination) -> Result<(), TestCaseError> {
    let mut oracle = false;
    for (i, c) in l.classes.iter().enumerate() {
        for e in &l.classes[i + 1..] {
            for a in c {
                for b in c {
                    for x in e {
                        for y in e {
                            oracle |= crosses(a.ratio(), b.ratio(), x.ratio(), y.ratio());
                        }
                    }
                }
            }
        }
    }
    let reported = matches!(l.validate(), Err(MatingError::Crossing(..)));
    ensure(oracle == reported, || format!("oracle says crossing = {oracle}, validate says {reported}"))
}

pub fn saturation_idempotent(l: &Lamination) -> Result<(), TestCaseError> {
    let once = l.saturated();
    ensure(once.saturated() == once, || "saturating twice changed the lamination".into())
}

// ---- decisions ----

/// Verdicts agree across schedules that start small or large.
pub fn dovetail_determinism(b: &SphereBiset) -> Result<(), String> {
    let base = DecideBudgets::default();
    let schedules = [
        base,
        DecideBudgets { start_word: 4, start_levy: 2, ..base },
        DecideBudgets { start_word: 16, start_levy: 5, ..base },
        DecideBudgets { start_word: 64, ..base },
    ];
    let verdicts: Vec<String> = schedules
        .iter()
        .map(|s| decide_expanding(b, *s).map(|d| d.name().to_string()).unwrap_or_else(|e| e.to_string()))
        .collect();
    if verdicts.iter().all(|v| *v == verdicts[0]) {
        Ok(())
    } else {
        Err(format!("verdicts differ: {verdicts:?}"))
    }
}

// ---- multicurve digraphs ----

pub fn lift_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize, u32)>)> {
    (1usize..=5).prop_flat_map(|n| (Just(n), prop::collection::vec((0..n, 0..n, 1u32..=2), 0..=8)))
}

/// Tags agree with a reachability oracle; Levy cycles have degree-1 edges; bicycles carry a witness.
pub fn multicurve_tags(n: usize, raw: &[(usize, usize, u32)]) -> Result<(), TestCaseError> {
    let edges: Vec<LiftEdge> = raw.iter().map(|&(from, to, degree)| LiftEdge { from, to, degree }).collect();
    let d = MulticurveDigraph::from_edges((0..n).map(|i| format!("v{i}")).collect(), edges.clone()).unwrap();
    let mut reach = vec![vec![false; n]; n];
    for e in &edges {
        reach[e.from][e.to] = true;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                reach[i][j] |= reach[i][k] && reach[k][j];
            }
        }
    }
    for comp in &d.components {
        let set: BTreeSet<usize> = comp.nodes.iter().copied().collect();
        let v = comp.nodes[0];
        let same: BTreeSet<usize> = (0..n).filter(|&u| u == v || (reach[v][u] && reach[u][v])).collect();
        ensure(set == same, || format!("component {set:?} ≠ oracle {same:?}"))?;
        let internal: Vec<&LiftEdge> = edges.iter().filter(|e| set.contains(&e.from) && set.contains(&e.to)).collect();
        let cyclic = !internal.is_empty();
        ensure(comp.tags.unicycle == (cyclic && internal.len() == set.len()), || format!("unicycle tag on {set:?}"))?;
        ensure(comp.tags.bicycle == (internal.len() > set.len()), || format!("bicycle tag on {set:?}"))?;
        if comp.tags.levy {
            ensure(comp.tags.unicycle && internal.iter().all(|e| e.degree == 1), || "Levy tag with degree > 1".into())?;
        }
        if comp.tags.bicycle {
            let ok = comp.witness.as_ref().is_some_and(|w| w.paths >= 2);
            ensure(ok, || format!("bicycle {set:?} without a two-path witness"))?;
        }
        let entering = edges.iter().any(|e| !set.contains(&e.from) && set.contains(&e.to));
        ensure(comp.tags.primitive == !entering, || format!("primitive tag on {set:?}"))?;
    }
    Ok(())
}

/// A machine file with explicit rows for the eliminated generator.
pub fn with_eliminated_rows(b: &SphereBiset) -> String {
    let g = b.group();
    let t = b.transitions(g.eliminated());
    let mut text = write_machine(b);
    for x in 0..b.degree() {
        text.push_str(&format!(
            "  {}: {} -> {}.{}\n",
            g.names()[g.eliminated()],
            b.letters()[x],
            g.format_word(&t.cofactor[x]),
            b.letters()[t.perm[x]]
        ));
    }
    text
}

