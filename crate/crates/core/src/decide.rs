//! Deciding expansion: nucleus search dovetailed with a Levy search.

use serde::Serialize;

use crate::biset::{BisetError, SphereBiset};
use crate::contraction::{is_orbisphere_contracting, Budget, ContractionError};
use crate::group::Order;
use crate::levy::{find_levy_cycle, verify_levy_certificate, LevyCertificate};
use crate::torus::{is2cover, istor, TorVerdict, TorusError};

/// Upper limits for the dovetailed searches, and where the schedule starts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DecideBudgets {
    pub max_word: usize,
    pub max_set: usize,
    /// Longest class enumerated by the Levy search.
    pub max_len: usize,
    pub max_period: usize,
    pub torus_rounds: usize,
    /// Word cap of the first nucleus round; doubled every round.
    pub start_word: usize,
    /// Class length and period of the first Levy round; incremented every round.
    pub start_levy: usize,
}

impl Default for DecideBudgets {
    fn default() -> Self {
        DecideBudgets {
            max_word: 64,
            max_set: 10_000,
            max_len: 8,
            max_period: 8,
            torus_rounds: 4,
            start_word: 8,
            start_levy: 4,
        }
    }
}

/// Enumerating classes is exponential in their length; scaled Levy bounds stop here.
const LEVY_LENGTH_CEILING: usize = 12;

impl DecideBudgets {
    /// Defaults multiplied by `THURSTON_BUDGET_SCALE` when it is set.
    pub fn from_env() -> Self {
        let scale = std::env::var("THURSTON_BUDGET_SCALE")
            .ok()
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|s| s.is_finite() && *s > 0.0)
            .unwrap_or(1.0);
        Self::default().scaled(scale)
    }

    pub fn scaled(self, s: f64) -> Self {
        let f = |x: usize| ((x as f64 * s).round() as usize).max(1);
        DecideBudgets {
            max_word: f(self.max_word),
            max_set: f(self.max_set),
            max_len: f(self.max_len).min(LEVY_LENGTH_CEILING),
            max_period: f(self.max_period),
            torus_rounds: f(self.torus_rounds),
            ..self
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict")]
pub enum Decision {
    Expanding {
        nucleus: Vec<String>,
        orbisphere: Vec<Order>,
        round: usize,
    },
    LevyObstructed {
        certificate: LevyCertificate,
        verified: bool,
        round: usize,
    },
    TorusCase {
        torus: TorVerdict,
    },
    Undecided {
        nucleus_frontier: Vec<String>,
        nucleus_word_cap: usize,
        levy_length: usize,
        levy_period: usize,
    },
}

impl Decision {
    pub fn name(&self) -> &'static str {
        match self {
            Decision::Expanding { .. } => "Expanding",
            Decision::LevyObstructed { .. } => "LevyObstructed",
            Decision::TorusCase { .. } => "TorusCase",
            Decision::Undecided { .. } => "Undecided",
        }
    }

    pub fn is_decided(&self) -> bool {
        !matches!(
            self,
            Decision::Undecided { .. } | Decision::TorusCase { torus: TorVerdict::Undecided { .. } }
        )
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DecideError {
    #[error(transparent)]
    Biset(#[from] BisetError),
    #[error(transparent)]
    Torus(#[from] TorusError),
}

pub fn decide_expanding(b: &SphereBiset, budgets: DecideBudgets) -> Result<Decision, DecideError> {
    let portrait = b.validate()?;
    if is2cover(b) {
        return Ok(Decision::TorusCase { torus: istor(b, budgets.torus_rounds)? });
    }
    let ord = portrait.minimal_orbisphere();
    let mut round = 0;
    loop {
        let word_cap = budgets.start_word.saturating_mul(1usize << round.min(40)).min(budgets.max_word);
        let levy = (budgets.start_levy + round).min(budgets.max_len.max(budgets.start_levy));
        let period = (budgets.start_levy + round).min(budgets.max_period.max(budgets.start_levy));
        let nucleus = is_orbisphere_contracting(b, Some(&ord), Budget { max_word: word_cap, max_set: budgets.max_set });
        let cycle = find_levy_cycle(b, levy, period);
        match (nucleus, cycle) {
            (Ok((q, n)), cycle) => {
                if cycle.is_some() {
                    log::warn!("nucleus and Levy cycle found in the same round; reporting Expanding");
                }
                return Ok(Decision::Expanding {
                    nucleus: n.iter().map(|w| q.group().format_word(w)).collect(),
                    orbisphere: ord.ord.clone(),
                    round,
                });
            }
            (Err(_), Some(certificate)) => {
                let verified = verify_levy_certificate(b, &certificate);
                return Ok(Decision::LevyObstructed { certificate, verified, round });
            }
            (Err(ContractionError::Biset(e)), None) => return Err(e.into()),
            (Err(e), None) => {
                let exhausted = word_cap >= budgets.max_word
                    && levy >= budgets.max_len.max(budgets.start_levy)
                    && period >= budgets.max_period.max(budgets.start_levy);
                if exhausted {
                    let nucleus_frontier = match e {
                        ContractionError::BudgetExceeded { frontier, .. } => frontier,
                        other => vec![other.to_string()],
                    };
                    return Ok(Decision::Undecided {
                        nucleus_frontier,
                        nucleus_word_cap: word_cap,
                        levy_length: levy,
                        levy_period: period,
                    });
                }
            }
        }
        round += 1;
    }
}
