//! Click-efficiency ranking and the ranking functions it reduces to.
//!
//! Sorting by `CE(e) = U(e)·C(e) / (C(e) + γ(e))` in descending order
//! maximizes the cascade expected utility: an adjacent pair `(a, b)` is in the
//! better order iff `U_a C_a / μ_a ≥ U_b C_b / μ_b`. Under limiting
//! assumptions on `γ` the score collapses to the classic rankings (sort by
//! relevance, by bid, by expected profit); those are exposed as
//! [`RankingVariant`]s.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{expected_utility, ClickParams, Entity, Ranking};

/// Largest instance [`brute_force_optimal`] will enumerate.
pub const BRUTE_FORCE_MAX: usize = 10;

/// Click efficiency: expected utility per unit of absorbed view probability.
///
/// Zero whenever `C = 0`, regardless of `γ`.
pub fn ce_score(e: &Entity) -> f64 {
    e.utility() * e.click_share()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RankingVariant {
    /// Full click efficiency `U·C/(C+γ)`.
    Ce,
    /// Sort by relevance `U` (the `γ = 0` document case).
    Prp,
    /// `U²/k`: `C ≈ U` and `γ = k − U`.
    RelevanceSquaredOverK { k: f64 },
    /// `C·U`: perceived relevance times actual relevance (`γ = k − C`).
    PerceivedTimesActual,
    /// `U²/(U+γ)`: abandonment-aware ranking with `C ≈ U`.
    AbandonmentAware,
    /// Sort by bid/CPC `U` (the `γ = 0` ad case).
    BidOrder,
    /// `C·U`: stand-alone expected profit (the `γ = k − C` ad case).
    ExpectedProfit,
    /// `C·U/(C+γ)` with `U` read as the advertiser's private value.
    SocialOptimal,
}

impl RankingVariant {
    pub const NAMES: [&'static str; 8] = [
        "ce",
        "prp",
        "r2k",
        "cr",
        "abandonment",
        "bid",
        "expected-profit",
        "social",
    ];

    /// Resolves a variant by name. `k` is only consulted by `r2k`, which
    /// requires it.
    pub fn from_name(name: &str, k: Option<f64>) -> Result<Self> {
        let v = match name {
            "ce" => Self::Ce,
            "prp" => Self::Prp,
            "r2k" => {
                let k = k.ok_or_else(|| {
                    Error::InvalidArgument("variant r2k requires the constant k".into())
                })?;
                validate_k(k)?;
                Self::RelevanceSquaredOverK { k }
            }
            "cr" => Self::PerceivedTimesActual,
            "abandonment" => Self::AbandonmentAware,
            "bid" => Self::BidOrder,
            "expected-profit" => Self::ExpectedProfit,
            "social" => Self::SocialOptimal,
            other => {
                return Err(Error::InvalidArgument(format!(
                    "unknown ranking variant {other:?}; expected one of {}",
                    Self::NAMES.join(", ")
                )))
            }
        };
        Ok(v)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ce => "ce",
            Self::Prp => "prp",
            Self::RelevanceSquaredOverK { .. } => "r2k",
            Self::PerceivedTimesActual => "cr",
            Self::AbandonmentAware => "abandonment",
            Self::BidOrder => "bid",
            Self::ExpectedProfit => "expected-profit",
            Self::SocialOptimal => "social",
        }
    }

    /// The variant's sort key for one entity.
    pub fn score(&self, e: &Entity) -> f64 {
        let u = e.utility();
        let c = e.click_prob();
        match *self {
            Self::Ce | Self::SocialOptimal => ce_score(e),
            Self::Prp | Self::BidOrder => u,
            Self::RelevanceSquaredOverK { k } => u * u / k,
            Self::PerceivedTimesActual | Self::ExpectedProfit => c * u,
            Self::AbandonmentAware => {
                let denom = u + e.abandon_prob();
                if denom == 0.0 {
                    0.0
                } else {
                    u * u / denom
                }
            }
        }
    }
}

impl fmt::Display for RankingVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RankingVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::from_name(s, None)
    }
}

fn validate_k(k: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0 && k <= 1.0) {
        return Err(Error::invalid("k", format!("must lie in (0, 1], got {k}")));
    }
    Ok(())
}

/// Indices sorted by descending score; equal scores keep input order.
pub fn argsort_desc(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Optimal cascade ranking: descending click efficiency, stable on ties.
pub fn rank_by_ce(entities: &[Entity]) -> Result<Ranking> {
    rank_by_variant(entities, RankingVariant::Ce)
}

pub fn rank_by_variant(entities: &[Entity], variant: RankingVariant) -> Result<Ranking> {
    if entities.is_empty() {
        return Err(Error::Empty("entity list"));
    }
    let scores: Vec<f64> = entities.iter().map(|e| variant.score(e)).collect();
    Ranking::new(entities, argsort_desc(&scores))
}

/// Sets `γ = k − C` on every entity, the abandonment model under which CE
/// reduces to ranking by `C·U`.
pub fn with_linear_abandonment(entities: &[Entity], k: f64) -> Result<Vec<Entity>> {
    validate_k(k)?;
    entities
        .iter()
        .enumerate()
        .map(|(i, e)| {
            let c = e.click_prob();
            if c > k {
                return Err(Error::invalid(
                    format!("entities[{i}].click_prob"),
                    format!("exceeds k = {k}, so γ = k − C would be negative"),
                ));
            }
            Entity::new(e.id(), e.utility(), c, k - c)
        })
        .collect()
}

/// Exhaustive search over all orderings for the maximum expected utility.
///
/// Among orderings with equal value the lexicographically smallest wins.
pub fn brute_force_optimal(entities: &[Entity]) -> Result<(Ranking, f64)> {
    let n = entities.len();
    if n == 0 {
        return Err(Error::Empty("entity list"));
    }
    if n > BRUTE_FORCE_MAX {
        return Err(Error::TooLarge {
            what: "brute-force ranking",
            size: n,
            max: BRUTE_FORCE_MAX,
        });
    }
    let gains: Vec<f64> = entities
        .iter()
        .map(|e| e.utility() * e.click_prob())
        .collect();
    let conts: Vec<f64> = entities.iter().map(|e| e.continuation()).collect();

    // One subtree per leading entity; subtrees are visited in lexicographic
    // order and merged in the same order so the result is deterministic.
    let best = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut search = PrefixSearch {
                gains: &gains,
                conts: &conts,
                used: vec![false; n],
                prefix: Vec::with_capacity(n),
                best_value: f64::NEG_INFINITY,
                best_order: Vec::new(),
            };
            search.used[first] = true;
            search.prefix.push(first);
            search.descend(gains[first], conts[first]);
            (search.best_value, search.best_order)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, cand| {
            if cand.0 > acc.0 {
                cand
            } else {
                acc
            }
        });

    // Report the value the same way `expected_utility` does, not the search's running sum.
    let ranking = Ranking::new(entities, best.1)?;
    let value = expected_utility(entities, &ranking)?.expected_utility;
    Ok((ranking, value))
}

struct PrefixSearch<'a> {
    gains: &'a [f64],
    conts: &'a [f64],
    used: Vec<bool>,
    prefix: Vec<usize>,
    best_value: f64,
    best_order: Vec<usize>,
}

impl PrefixSearch<'_> {
    fn descend(&mut self, value: f64, view: f64) {
        if self.prefix.len() == self.gains.len() {
            if value > self.best_value {
                self.best_value = value;
                self.best_order.clone_from(&self.prefix);
            }
            return;
        }
        for next in 0..self.gains.len() {
            if self.used[next] {
                continue;
            }
            self.used[next] = true;
            self.prefix.push(next);
            self.descend(value + view * self.gains[next], view * self.conts[next]);
            self.prefix.pop();
            self.used[next] = false;
        }
    }
}
