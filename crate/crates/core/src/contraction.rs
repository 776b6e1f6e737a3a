//! Contraction: the nucleus of a biset and the Mealy automaton it carries.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::biset::{BisetError, SphereBiset};
use crate::group::{OrbisphereStructure, Word};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ContractionError {
    #[error("budget exceeded ({reason}); frontier has {} words", frontier.len())]
    BudgetExceeded { reason: String, frontier: Vec<String> },
    #[error("nucleus certificate failed for `{word}` up to depth {depth}")]
    CertificateFailed { word: String, depth: usize },
    #[error(transparent)]
    Biset(#[from] BisetError),
}

/// Search limits for the nucleus computation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    /// Longest word (in letters) allowed in a `φ`-closure.
    pub max_word: usize,
    /// Largest closure allowed.
    pub max_set: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { max_word: 64, max_set: 10_000 }
    }
}

pub type WordSet = BTreeSet<Word>;

/// `φ(A)`: every cofactor of `x·g` for `g ∈ A`.
pub fn phi(b: &SphereBiset, set: &WordSet) -> WordSet {
    let mut out = WordSet::new();
    for g in set {
        for x in 0..b.degree() {
            out.insert(b.act(x, g).0);
        }
    }
    out
}

/// `ψ(A)`: the smallest `φ`-closed set containing `A`.
pub fn psi(b: &SphereBiset, set: &WordSet, budget: Budget) -> Result<WordSet, ContractionError> {
    let mut seen: WordSet = set.clone();
    let mut frontier: Vec<Word> = set.iter().cloned().collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for g in &frontier {
            for x in 0..b.degree() {
                let c = b.act(x, g).0;
                if seen.contains(&c) {
                    continue;
                }
                if c.letter_len() > budget.max_word {
                    return Err(exceeded(b, "word length", &[c]));
                }
                seen.insert(c.clone());
                next.push(c);
                if seen.len() > budget.max_set {
                    return Err(exceeded(b, "set size", &next));
                }
            }
        }
        frontier = next;
    }
    Ok(seen)
}

fn exceeded(b: &SphereBiset, reason: &str, frontier: &[Word]) -> ContractionError {
    ContractionError::BudgetExceeded {
        reason: reason.to_string(),
        frontier: frontier.iter().take(16).map(|w| b.group().format_word(w)).collect(),
    }
}

/// `ω(A) = ⋂ₙ φⁿ(ψ(A))`.
pub fn omega(b: &SphereBiset, set: &WordSet, budget: Budget) -> Result<WordSet, ContractionError> {
    let mut cur = psi(b, set, budget)?;
    loop {
        let next = phi(b, &cur);
        if next == cur {
            return Ok(cur);
        }
        cur = next;
    }
}

fn generators_and_inverses(b: &SphereBiset) -> WordSet {
    let g = b.group();
    let mut s = WordSet::new();
    s.insert(g.identity());
    for i in 0..g.rank() {
        let x = g.generator(i);
        s.insert(g.inv(&x));
        s.insert(x);
    }
    s
}

/// The nucleus: iterate `Nₙ = ω(Nₙ₋₁·S)` from `{1}` until it stabilises.
pub fn nucleus(b: &SphereBiset, budget: Budget) -> Result<WordSet, ContractionError> {
    let g = b.group();
    let s = generators_and_inverses(b);
    let mut n: WordSet = [g.identity()].into_iter().collect();
    loop {
        let prod: WordSet = n.iter().flat_map(|x| s.iter().map(move |y| g.mul(x, y))).collect();
        let next = omega(b, &prod, budget)?;
        if next == n {
            return Ok(n);
        }
        n = next;
    }
}

/// Least `n` with `Xⁿ·g ⊆ N·Xⁿ` for every `g ∈ N·S`, checked up to `max_depth`.
pub fn certify(b: &SphereBiset, nucleus: &WordSet, max_depth: usize) -> Result<usize, ContractionError> {
    let g = b.group();
    let s = generators_and_inverses(b);
    let mut worst = 0;
    for x in nucleus {
        for y in &s {
            let w = g.mul(x, y);
            let mut states: WordSet = [w.clone()].into_iter().collect();
            let mut depth = 0;
            while !states.is_subset(nucleus) {
                if depth == max_depth {
                    return Err(ContractionError::CertificateFailed { word: g.format_word(&w), depth });
                }
                states = phi(b, &states);
                depth += 1;
            }
            worst = worst.max(depth);
        }
    }
    Ok(worst)
}

/// Nucleus of the biset over the quotient by `ord` (the minimal structure by default).
pub fn is_orbisphere_contracting(
    b: &SphereBiset,
    ord: Option<&OrbisphereStructure>,
    budget: Budget,
) -> Result<(SphereBiset, WordSet), ContractionError> {
    let ord = match ord {
        Some(o) => o.clone(),
        None => b.minimal_orbisphere()?,
    };
    let q = b.over_quotient(&ord)?;
    let n = nucleus(&q, budget)?;
    Ok((q, n))
}

/// Finite-state automaton on the nucleus: in state `g` reading `x`, output
/// `y` and move to `c`, where `x·g = c·y`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Mealy {
    pub states: Vec<String>,
    pub letters: Vec<String>,
    /// `transitions[state][letter] = (output letter, next state)`.
    pub transitions: Vec<Vec<(usize, usize)>>,
}

impl Mealy {
    pub fn from_nucleus(b: &SphereBiset, nucleus: &WordSet) -> Mealy {
        let words: Vec<&Word> = nucleus.iter().collect();
        let index = |w: &Word| words.iter().position(|x| *x == w).expect("nucleus is φ-closed");
        let transitions = words
            .iter()
            .map(|g| {
                (0..b.degree())
                    .map(|x| {
                        let (c, y) = b.act(x, g);
                        (y, index(&c))
                    })
                    .collect()
            })
            .collect();
        Mealy {
            states: words.iter().map(|w| b.group().format_word(w)).collect(),
            letters: b.letters().to_vec(),
            transitions,
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biset::machines::{adding_machine, basilica, doubling};

    fn names(b: &SphereBiset, n: &WordSet) -> Vec<String> {
        n.iter().map(|w| b.group().format_word(w)).collect()
    }

    #[test]
    fn basilica_nucleus() {
        let b = basilica();
        let n = nucleus(&b, Budget::default()).unwrap();
        let set: BTreeSet<String> = names(&b, &n).into_iter().collect();
        for w in ["1", "a", "b", "a^-1", "b^-1", "b^-1*a", "a^-1*b"] {
            assert!(set.contains(w), "{w} missing from {set:?}");
        }
        assert_eq!(n.len(), 7);
        assert!(certify(&b, &n, 8).is_ok());
    }

    #[test]
    fn adding_machine_nucleus() {
        let b = adding_machine(2);
        let n = nucleus(&b, Budget::default()).unwrap();
        assert_eq!(names(&b, &n).len(), 3);
    }

    #[test]
    fn doubling_exceeds_budget() {
        let b = doubling();
        let r = nucleus(&b, Budget { max_word: 64, max_set: 1000 });
        assert!(matches!(r, Err(ContractionError::BudgetExceeded { .. })));
    }

    #[test]
    fn psi_is_closed_and_omega_is_invariant() {
        let b = basilica();
        let g = b.group();
        let a: WordSet = [g.parse_word("a*b*a^-1").unwrap()].into_iter().collect();
        let p = psi(&b, &a, Budget::default()).unwrap();
        assert!(phi(&b, &p).is_subset(&p));
        let o = omega(&b, &a, Budget::default()).unwrap();
        assert_eq!(phi(&b, &o), o);
    }

    #[test]
    fn mealy_is_deterministic() {
        let b = basilica();
        let n = nucleus(&b, Budget::default()).unwrap();
        let m = Mealy::from_nucleus(&b, &n);
        assert_eq!(m.len(), n.len());
        for row in &m.transitions {
            let mut outs: Vec<usize> = row.iter().map(|t| t.0).collect();
            outs.sort();
            assert_eq!(outs, vec![0, 1]);
        }
    }
}
