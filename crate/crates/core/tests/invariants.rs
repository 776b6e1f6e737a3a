//! Property tests with fixed seeds, plus exhaustive checks on small inputs.

mod common;

use std::collections::BTreeSet;

use proptest::prelude::*;

use common::*;
use thurston::biset::BisetError;
use thurston::contraction::{is_orbisphere_contracting, nucleus, Budget};
use thurston::decide::{decide_expanding, DecideBudgets};
use thurston::group::{Group, Word};
use thurston::levy::{find_levy_cycle, verify_levy_certificate};
use thurston::machine::{parse_machine, write_machine, MachineError};
use thurston::mating::{check_pinching_cycle, find_pinching_cycle, Angle, Lamination};
use thurston::torus::{det, eigenvalue_gate, getparam, istor, torus_biset_from, verify_isomorphism, TorVerdict};

fn corpus_index() -> impl Strategy<Value = usize> {
    0..corpus().len()
}

proptest! {
    #![proptest_config(config(0x5eed_0001, 96))]

    #[test]
    fn act_is_a_homomorphism(i in corpus_index(), a in raw_word(6), b in raw_word(6)) {
        let (_, m) = &corpus()[i];
        let g = m.group();
        wreath_homomorphism(m, &word(g, &a), &word(g, &b))?;
    }

    #[test]
    fn lift_degrees_sum_to_degree(i in corpus_index(), w in raw_word(6)) {
        let (_, m) = &corpus()[i];
        lift_degree_sum(m, &word(m.group(), &w))?;
    }

    #[test]
    fn conjugacy_normal_form(w in raw_word(6), h in raw_word(6), k in raw_word(6)) {
        let g = Group::free_sphere(&["a", "b", "c"]);
        conjugacy_laws(&g, &word(&g, &w), &word(&g, &h), &word(&g, &k))?;
        let q = machine("torus_double.machine").group().clone();
        conjugacy_laws(&q, &word(&q, &w), &word(&q, &h), &word(&q, &k))?;
    }

    #[test]
    fn asymptotic_equivalence_laws(u in ev_seq(), v in ev_seq(), w in ev_seq()) {
        let (b, n) = basilica_nucleus();
        equivalence_laws(&b, &n, &u, &v, &w)?;
    }

    #[test]
    fn unlinked_iff_no_crossing(c in chords(12, 4)) {
        unlinkedness(&lamination_from(2, 12, &c))?;
    }

    #[test]
    fn saturation_is_idempotent(c in chords(7, 3)) {
        saturation_idempotent(&lamination_from(2, 7, &c))?;
        saturation_idempotent(&lamination_from(3, 8, &c.iter().map(|&(a, b)| (a % 8, b % 8)).collect::<Vec<_>>()))?;
    }

    #[test]
    fn multicurve_tags_match_oracle((n, edges) in lift_graph()) {
        multicurve_tags(n, &edges)?;
    }
}

proptest! {
    #![proptest_config(config(0x5eed_0002, 20))]

    #[test]
    fn torus_round_trip(m in prop::array::uniform4(-4i64..=4), v in prop::array::uniform2(0i64..=1)) {
        let m = [[m[0], m[1]], [m[2], m[3]]];
        prop_assume!((2..=9).contains(&det(&m).abs()));
        let b = torus_biset_from(m, v).unwrap();
        prop_assert_eq!(b.degree() as i64, det(&m).abs());
        let p = getparam(&b).unwrap();
        prop_assert_eq!((p.m, p.v), (m, v));
    }

    #[test]
    fn eigenvalue_gate_matches_characteristic_polynomial(m in prop::array::uniform4(-6i64..=6)) {
        let m = [[m[0], m[1]], [m[2], m[3]]];
        let (tr, dt) = (m[0][0] + m[1][1], det(&m));
        let chi = |x: i64| x * x - tr * x + dt;
        prop_assert_eq!(eigenvalue_gate(&m), chi(1) == 0 || chi(-1) == 0);
    }

    #[test]
    fn rebasing_preserves_contraction(h in prop::collection::vec(raw_word(3), 2), swap in any::<bool>()) {
        let b = machine("basilica.machine");
        let g = b.group();
        let hs: Vec<Word> = h.iter().map(|w| word(g, w)).collect();
        let pi = if swap { vec![1, 0] } else { vec![0, 1] };
        let r = b.rebased(&hs, &pi).unwrap();
        prop_assert!(is_orbisphere_contracting(&r, None, Budget::default()).is_ok());
    }
}

#[test]
fn riemann_hurwitz_on_corpus() {
    for (name, b) in corpus() {
        riemann_hurwitz(&b).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn fixture_round_trip() {
    for (name, b) in corpus() {
        assert_eq!(parse_machine(&write_machine(&b)).unwrap(), b, "{name}");
    }
}

/// Changing one cofactor of the eliminated generator breaks the sphere relation.
#[test]
fn mutated_relation_is_rejected() {
    for (name, b) in corpus().into_iter().filter(|(_, b)| b.group().kind() == thurston::group::GroupKind::Sphere) {
        let text = with_eliminated_rows(&b);
        assert_eq!(parse_machine(&text).unwrap(), b, "{name}");
        let g = b.group();
        let e = &g.names()[g.eliminated()];
        let row = format!("  {e}: {} -> ", b.letters()[0]);
        let start = text.find(&row).unwrap() + row.len();
        let mutated = format!("{}{}*{}", &text[..start], g.names()[0], &text[start..]);
        let err = parse_machine(&mutated).unwrap_err();
        assert!(
            matches!(err, MachineError::Invalid(BisetError::SphereRelation { .. } | BisetError::Group(_))),
            "{name}: {err}"
        );
    }
}

/// Classes in the free group of rank 2 agree with cyclic-rotation equality.
#[test]
fn conjugacy_classes_exhaustive() {
    let g = Group::free_sphere(&["a", "b", "c"]);
    let letters: [(usize, i64); 4] = [(0, 1), (0, -1), (1, 1), (1, -1)];
    let mut words: Vec<Vec<(usize, i64)>> = vec![vec![]];
    for len in 1..=4 {
        let mut next = Vec::new();
        for w in words.iter().filter(|w| w.len() == len - 1) {
            for l in letters {
                if w.last().is_some_and(|&(i, e)| i == l.0 && e == -l.1) {
                    continue;
                }
                next.push([w.clone(), vec![l]].concat());
            }
        }
        words.extend(next);
    }
    // cyclically reduce, then compare rotation sets
    let cyclic = |w: &[(usize, i64)]| -> BTreeSet<Vec<(usize, i64)>> {
        let mut v = w.to_vec();
        while v.len() >= 2 && v[0].0 == v[v.len() - 1].0 && v[0].1 == -v[v.len() - 1].1 {
            v = v[1..v.len() - 1].to_vec();
        }
        (0..v.len().max(1)).map(|i| [&v[i.min(v.len())..], &v[..i.min(v.len())]].concat()).collect()
    };
    let to_word = |w: &[(usize, i64)]| w.iter().fold(g.identity(), |acc, &(i, e)| g.mul(&acc, &g.gen_pow(i, e)));
    for u in &words {
        for v in &words {
            let same = cyclic(u) == cyclic(v);
            assert_eq!(g.conj_class(&to_word(u)) == g.conj_class(&to_word(v)), same, "{u:?} {v:?}");
        }
    }
}

#[test]
fn nucleus_laws_and_certification() {
    for (name, b) in corpus().into_iter().filter(|(_, b)| b.group().rank() <= 3) {
        let n = nucleus(&b, Budget::default()).unwrap();
        nucleus_laws(&b, &n).unwrap_or_else(|e| panic!("{name}: {e}"));
        let g = b.group();
        let gens: Vec<Word> = (0..g.rank())
            .filter(|&i| i != g.eliminated())
            .flat_map(|i| [g.gen_pow(i, 1), g.gen_pow(i, -1)])
            .collect();
        let n0 = certify_by_enumeration(&b, &n, &gens, 8).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert!(n0 <= 2, "{name}: n₀ = {n0}");
    }
}

#[test]
fn free_contraction_implies_minimal_contraction() {
    for (name, b) in corpus() {
        if nucleus(&b, Budget::default()).is_ok() {
            assert!(is_orbisphere_contracting(&b, None, Budget::default()).is_ok(), "{name}");
        }
    }
}

#[test]
fn limit_space_prefix_stability_and_class_size() {
    let (b, n) = basilica_nucleus();
    assert!(prefix_stability(&b, &n, 4, 2).unwrap() > 0);
    class_size_bound(&b, &n, 6).unwrap();
}

#[test]
fn verdicts_do_not_depend_on_schedule() {
    for (name, b) in corpus() {
        dovetail_determinism(&b).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

/// No machine is both contracting and Levy obstructed.
#[test]
fn expanding_machines_have_no_levy_cycle() {
    for (name, b) in corpus() {
        let d = decide_expanding(&b, DecideBudgets::default()).unwrap();
        if d.name() == "Expanding" {
            assert!(find_levy_cycle(&b, 6, 6).is_none(), "{name}");
        }
        if let Some(cert) = find_levy_cycle(&b, 6, 6) {
            assert!(verify_levy_certificate(&b, &cert), "{name}");
        }
    }
}

#[test]
fn torus_isomorphisms_verify() {
    let b = machine("torus_double.machine");
    let TorVerdict::Yes { witness, .. } = istor(&b, 3).unwrap() else { panic!("expected yes") };
    assert!(verify_isomorphism(&b, &torus_biset_from([[2, 0], [0, 2]], [0, 0]).unwrap(), &witness));
}

#[test]
fn pinching_search_is_sound_and_symmetric() {
    let pairs = [
        (lamination("deg3_plus.lam"), lamination("deg3_minus.lam")),
        (lamination("basilica.lam"), lamination("basilica.lam")),
        (lamination("deg3_plus.lam"), lamination("deg3_plus.lam")),
        (Lamination::new(2, vec![]), lamination("basilica.lam")),
    ];
    for (p, m) in &pairs {
        let s = find_pinching_cycle(p, m, 8);
        for c in &s.cycles {
            assert!(check_pinching_cycle(p, m, c), "{c:?}");
        }
        let swapped = find_pinching_cycle(&m.negated(), &p.negated(), 8);
        assert_eq!(s.cycle.is_some(), swapped.cycle.is_some());
        for l in [p, m] {
            saturation_idempotent(l).unwrap();
        }
    }
    let none = find_pinching_cycle(&Lamination::new(2, vec![]), &lamination("basilica.lam"), 8);
    assert!(none.cycle.is_none());
    assert!(!check_pinching_cycle(&lamination("basilica.lam"), &lamination("basilica.lam"), &[Angle::new(1, 3)]));
}
