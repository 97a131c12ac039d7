//! Cascade click model.
//!
//! A user scans a ranked list from the top. At each viewed entity they click
//! it with probability `C`, abandon the list with probability `γ`, or move on
//! to the next entity with probability `1 - (C + γ)`. A click ends the
//! session. The expected utility of a ranking is therefore
//!
//! ```text
//! E(U) = Σ_i U(e_i) · C(e_i) · Π_{j<i} (1 - μ_j),   μ_j = C(e_j) + γ(e_j)
//! ```
//!
//! Positions are zero-based throughout the crate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack allowed on `C + γ ≤ 1` before a parameter set is rejected.
pub const PROBABILITY_TOLERANCE: f64 = 1e-12;

/// Per-entity click behaviour shared by documents and ads.
pub trait ClickParams {
    fn click_prob(&self) -> f64;
    fn abandon_prob(&self) -> f64;

    /// Total absorption probability `μ = C + γ`.
    fn absorption(&self) -> f64 {
        self.click_prob() + self.abandon_prob()
    }

    /// Probability of moving past this entity, `1 - μ`.
    fn continuation(&self) -> f64 {
        (1.0 - self.absorption()).max(0.0)
    }

    /// Share of the absorbed mass that turns into clicks, `C / μ`.
    ///
    /// Zero when `C = 0`, which also covers the `μ = 0` case.
    fn click_share(&self) -> f64 {
        let c = self.click_prob();
        if c == 0.0 {
            0.0
        } else {
            c / self.absorption()
        }
    }
}

pub(crate) fn check_probability(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(Error::invalid(
            field,
            format!("must be a probability in [0, 1], got {value}"),
        ));
    }
    Ok(())
}

pub(crate) fn check_nonnegative(field: &str, value: f64) -> Result<()> {
    if !value.is_finite() || value < 0.0 {
        return Err(Error::invalid(
            field,
            format!("must be a finite nonnegative number, got {value}"),
        ));
    }
    Ok(())
}

/// Validates a `(C, γ)` pair. Errors name the offending field relative to `prefix`.
pub(crate) fn check_click_pair(
    prefix: &str,
    click_name: &str,
    click: f64,
    abandon: f64,
) -> Result<()> {
    check_probability(&format!("{prefix}{click_name}"), click)?;
    check_probability(&format!("{prefix}abandon_prob"), abandon)?;
    if click + abandon > 1.0 + PROBABILITY_TOLERANCE {
        return Err(Error::invalid(
            format!("{prefix}{click_name}"),
            format!("{click_name} + abandon_prob exceeds 1 ({click} + {abandon})"),
        ));
    }
    Ok(())
}

/// One rankable item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEntity", into = "RawEntity")]
pub struct Entity {
    id: String,
    utility: f64,
    click_prob: f64,
    abandon_prob: f64,
}

impl Entity {
    pub fn new(
        id: impl Into<String>,
        utility: f64,
        click_prob: f64,
        abandon_prob: f64,
    ) -> Result<Self> {
        check_nonnegative("utility", utility)?;
        check_click_pair("", "click_prob", click_prob, abandon_prob)?;
        Ok(Self {
            id: id.into(),
            utility,
            click_prob,
            abandon_prob,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn utility(&self) -> f64 {
        self.utility
    }

    /// Copy of this entity with a different utility and the same click behaviour.
    pub fn with_utility(&self, utility: f64) -> Result<Self> {
        Self::new(self.id.clone(), utility, self.click_prob, self.abandon_prob)
    }
}

impl ClickParams for Entity {
    fn click_prob(&self) -> f64 {
        self.click_prob
    }

    fn abandon_prob(&self) -> f64 {
        self.abandon_prob
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntity {
    id: String,
    utility: f64,
    click_prob: f64,
    abandon_prob: f64,
}

impl TryFrom<RawEntity> for Entity {
    type Error = Error;

    fn try_from(raw: RawEntity) -> Result<Self> {
        Entity::new(raw.id, raw.utility, raw.click_prob, raw.abandon_prob)
    }
}

impl From<Entity> for RawEntity {
    fn from(e: Entity) -> Self {
        RawEntity {
            id: e.id,
            utility: e.utility,
            click_prob: e.click_prob,
            abandon_prob: e.abandon_prob,
        }
    }
}

/// A permutation of item indices together with the per-position view and
/// click probabilities it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct Ranking {
    order: Vec<usize>,
    view_probs: Vec<f64>,
    click_probs: Vec<f64>,
    exhaustion_prob: f64,
}

impl Ranking {
    /// Builds a ranking of `items` in the given order. `order[p]` is the index
    /// of the item shown at position `p`.
    pub fn new<P: ClickParams>(items: &[P], order: Vec<usize>) -> Result<Self> {
        if order.is_empty() {
            return Err(Error::Empty("ranking"));
        }
        if order.len() != items.len() {
            return Err(Error::DimensionMismatch {
                expected: items.len(),
                found: order.len(),
            });
        }
        let mut seen = vec![false; items.len()];
        for &idx in &order {
            if idx >= items.len() || seen[idx] {
                return Err(Error::InvalidArgument(format!(
                    "order is not a permutation of 0..{}",
                    items.len()
                )));
            }
            seen[idx] = true;
        }

        let mut view_probs = Vec::with_capacity(order.len());
        let mut click_probs = Vec::with_capacity(order.len());
        let mut view = 1.0;
        for &idx in &order {
            let item = &items[idx];
            view_probs.push(view);
            click_probs.push(item.click_prob() * view);
            view *= item.continuation();
        }
        Ok(Self {
            order,
            view_probs,
            click_probs,
            exhaustion_prob: view,
        })
    }

    /// Items in input order.
    pub fn identity<P: ClickParams>(items: &[P]) -> Result<Self> {
        Self::new(items, (0..items.len()).collect())
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Index of the item shown at `position`.
    pub fn item_at(&self, position: usize) -> Result<usize> {
        self.check_position(position)?;
        Ok(self.order[position])
    }

    /// `Π_{j<position} (1 - μ_j)`; exactly 1 at the top.
    pub fn view_probability(&self, position: usize) -> Result<f64> {
        self.check_position(position)?;
        Ok(self.view_probs[position])
    }

    /// `C(e_position) · view_probability(position)`.
    pub fn click_probability(&self, position: usize) -> Result<f64> {
        self.check_position(position)?;
        Ok(self.click_probs[position])
    }

    pub fn view_probs(&self) -> &[f64] {
        &self.view_probs
    }

    pub fn click_probs(&self) -> &[f64] {
        &self.click_probs
    }

    /// Probability that the user scans past the last item without clicking
    /// or abandoning.
    pub fn exhaustion_probability(&self) -> f64 {
        self.exhaustion_prob
    }

    /// Position of every item: `positions()[item] = position`.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.order.len()];
        for (p, &idx) in self.order.iter().enumerate() {
            pos[idx] = p;
        }
        pos
    }

    fn check_position(&self, position: usize) -> Result<()> {
        if position >= self.order.len() {
            return Err(Error::PositionOutOfRange {
                position,
                len: self.order.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub expected_utility: f64,
    /// `U(e_p) · P_c(p)` for each position `p`.
    pub per_position_contribution: Vec<f64>,
}

/// Expected utility of showing `entities` in the order of `ranking`.
pub fn expected_utility(entities: &[Entity], ranking: &Ranking) -> Result<UtilityReport> {
    if entities.len() != ranking.len() {
        return Err(Error::DimensionMismatch {
            expected: ranking.len(),
            found: entities.len(),
        });
    }
    let per_position_contribution: Vec<f64> = ranking
        .order()
        .iter()
        .zip(ranking.click_probs())
        .map(|(&idx, &pc)| entities[idx].utility() * pc)
        .collect();
    Ok(UtilityReport {
        expected_utility: per_position_contribution.iter().sum(),
        per_position_contribution,
    })
}
