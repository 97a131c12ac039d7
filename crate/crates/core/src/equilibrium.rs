//! Envy-free equilibrium of the CE mechanism.
//!
//! With advertisers sorted by `v·c/μ`, the bids
//!
//! ```text
//! b_N = v_N μ_N
//! b_i = (μ_i / c_i) · [v_i c_i + (1 − μ_i) · b_{i+1} c_{i+1} / μ_{i+1}]
//! ```
//!
//! leave no advertiser a profitable move to any other slot. Profit is
//! piecewise constant in the bid between slot boundaries, so checking every
//! target slot (plus dropping out) is an exhaustive deviation search.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::{
    pricing_weight, run_ce_auction, run_vcg_auction, social_revenue_bound, vcg_prices_in_order,
    Advertiser, AuctionOutcome, BidVector,
};
use crate::model::ClickParams;
use crate::ranking::argsort_desc;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;

fn social_score(a: &Advertiser) -> f64 {
    a.value() * a.click_share()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumBids {
    /// Advertisers in descending `v·c/μ` order.
    pub order: Vec<usize>,
    /// Equilibrium bid of each advertiser, indexed by advertiser.
    pub bids: BidVector,
    /// Positions `p` whose `v·c/μ` ties exactly with position `p + 1`.
    pub tied_positions: Vec<usize>,
}

pub fn equilibrium_bids(ads: &[Advertiser]) -> Result<EquilibriumBids> {
    if ads.is_empty() {
        return Err(Error::Empty("advertiser list"));
    }
    let scores: Vec<f64> = ads.iter().map(social_score).collect();
    let order = argsort_desc(&scores);
    let mut bids = vec![0.0; ads.len()];
    // `weighted` carries w_{i+1} b_{i+1} = b_{i+1} c_{i+1} / μ_{i+1}.
    let mut weighted = 0.0;
    for &idx in order.iter().rev() {
        let a = &ads[idx];
        weighted = a.value() * a.ctr() + a.continuation() * weighted;
        if a.ctr() > 0.0 {
            bids[idx] = a.absorption() / a.ctr() * weighted;
        }
    }
    let tied_positions = order
        .windows(2)
        .enumerate()
        .filter(|(_, w)| scores[w[0]] == scores[w[1]])
        .map(|(p, _)| p)
        .collect();
    Ok(EquilibriumBids {
        order,
        bids: BidVector::new(bids)?,
        tied_positions,
    })
}

/// Equilibrium bids for GSP (`γ = k − c`), from `b_i c_i = k v_i c_i + (1 − k) b_{i+1} c_{i+1}`
/// with advertisers sorted by `v·c`.
pub fn gsp_equilibrium_bids(values: &[f64], ctrs: &[f64], k: f64) -> Vec<f64> {
    let scores: Vec<f64> = values.iter().zip(ctrs).map(|(v, c)| v * c).collect();
    let mut bids = vec![0.0; values.len()];
    let mut below = 0.0;
    for idx in argsort_desc(&scores).into_iter().rev() {
        below = k * values[idx] * ctrs[idx] + (1.0 - k) * below;
        if ctrs[idx] > 0.0 {
            bids[idx] = below / ctrs[idx];
        }
    }
    bids
}

/// Equilibrium bids for Overture (`γ = 0`): `b_i = v_i c_i + (1 − c_i) b_{i+1}`,
/// advertisers sorted by value.
pub fn overture_equilibrium_bids(values: &[f64], ctrs: &[f64]) -> Vec<f64> {
    let mut bids = vec![0.0; values.len()];
    let mut below = 0.0;
    for idx in argsort_desc(values).into_iter().rev() {
        below = values[idx] * ctrs[idx] + (1.0 - ctrs[idx]) * below;
        bids[idx] = below;
    }
    bids
}

/// A unilateral change of bid by one advertiser.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Deviation {
    /// Bid exactly enough to land at this position (zero-based).
    MoveTo(usize),
    /// Leave the auction.
    DropOut,
}

/// Where `advertiser` lands and who ends up directly below it if it moves to `position`.
fn deviated_neighbours(
    outcome: &AuctionOutcome,
    advertiser: usize,
    position: usize,
) -> (Vec<usize>, Option<usize>) {
    let others: Vec<usize> = outcome
        .allocation
        .iter()
        .copied()
        .filter(|&a| a != advertiser)
        .collect();
    let above = others[..position].to_vec();
    let below = others.get(position).copied();
    (above, below)
}

fn check_target(ads: &[Advertiser], advertiser: usize, position: usize) -> Result<()> {
    if advertiser >= ads.len() {
        return Err(Error::PositionOutOfRange {
            position: advertiser,
            len: ads.len(),
        });
    }
    if position >= ads.len() {
        return Err(Error::PositionOutOfRange {
            position,
            len: ads.len(),
        });
    }
    Ok(())
}

/// Per-click price `advertiser` pays after moving to `position`, others' bids fixed:
/// the `w·b` of the ad that ends up directly below, divided by its own `w`.
pub fn deviation_price(
    ads: &[Advertiser],
    bids: &BidVector,
    advertiser: usize,
    position: usize,
) -> Result<f64> {
    check_target(ads, advertiser, position)?;
    let outcome = run_ce_auction(ads, bids)?;
    Ok(price_after_move(ads, bids, &outcome, advertiser, position))
}

fn price_after_move(
    ads: &[Advertiser],
    bids: &BidVector,
    outcome: &AuctionOutcome,
    advertiser: usize,
    position: usize,
) -> f64 {
    let w = pricing_weight(&ads[advertiser]);
    let (_, below) = deviated_neighbours(outcome, advertiser, position);
    match below {
        Some(j) if w > 0.0 => pricing_weight(&ads[j]) * bids.as_slice()[j] / w,
        _ => 0.0,
    }
}

fn profit_after(
    ads: &[Advertiser],
    bids: &BidVector,
    outcome: &AuctionOutcome,
    advertiser: usize,
    deviation: Deviation,
) -> f64 {
    let position = match deviation {
        Deviation::DropOut => return 0.0,
        Deviation::MoveTo(p) => p,
    };
    let a = &ads[advertiser];
    if a.ctr() == 0.0 {
        return 0.0;
    }
    let (above, _) = deviated_neighbours(outcome, advertiser, position);
    let view: f64 = above.iter().map(|&j| ads[j].continuation()).product();
    let price = price_after_move(ads, bids, outcome, advertiser, position);
    (a.value() - price) * a.ctr() * view
}

/// Expected profit of `advertiser` after the given unilateral deviation.
pub fn deviation_profit(
    ads: &[Advertiser],
    bids: &BidVector,
    advertiser: usize,
    deviation: Deviation,
) -> Result<f64> {
    let position = match deviation {
        Deviation::MoveTo(p) => p,
        Deviation::DropOut => 0,
    };
    check_target(ads, advertiser, position)?;
    let outcome = run_ce_auction(ads, bids)?;
    Ok(profit_after(ads, bids, &outcome, advertiser, deviation))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub bids: BidVector,
    pub allocation: Vec<usize>,
    pub is_envy_free: bool,
    /// Largest profit gain over all deviations (never negative: staying put gains 0).
    pub worst_violation: f64,
    /// Advertiser and move achieving `worst_violation`, when it is positive.
    pub worst_deviation: Option<(usize, Deviation)>,
    pub tolerance: f64,
    pub se_revenue: f64,
    pub total_revenue: f64,
    pub social_revenue: f64,
    pub vcg_truthful_revenue: f64,
}

/// Tries every advertiser at every position, and dropping out.
pub fn verify_equilibrium(
    ads: &[Advertiser],
    bids: &BidVector,
    tolerance: f64,
) -> Result<EquilibriumReport> {
    let outcome = run_ce_auction(ads, bids)?;
    let positions = outcome.positions();
    let mut worst_violation = 0.0;
    let mut worst_deviation = None;
    for i in 0..ads.len() {
        let current = profit_after(ads, bids, &outcome, i, Deviation::MoveTo(positions[i]));
        let moves = (0..ads.len())
            .filter(|&m| m != positions[i])
            .map(Deviation::MoveTo)
            .chain(std::iter::once(Deviation::DropOut));
        for dev in moves {
            let gain = profit_after(ads, bids, &outcome, i, dev) - current;
            if gain > worst_violation {
                worst_violation = gain;
                worst_deviation = Some((i, dev));
            }
        }
    }
    let vcg = run_vcg_auction(ads, &BidVector::truthful(ads))?;
    Ok(EquilibriumReport {
        bids: bids.clone(),
        allocation: outcome.allocation.clone(),
        is_envy_free: worst_violation <= tolerance,
        worst_violation,
        worst_deviation,
        tolerance,
        se_revenue: outcome.se_revenue,
        total_revenue: outcome.total_revenue,
        social_revenue: social_revenue_bound(ads)?,
        vcg_truthful_revenue: vcg.se_revenue,
    })
}

/// CE prices at the equilibrium bids next to VCG prices at truthful bids,
/// both on the CE allocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VcgEquivalence {
    pub equilibrium: EquilibriumBids,
    pub allocation: Vec<usize>,
    pub ce_prices: Vec<f64>,
    pub vcg_prices: Vec<f64>,
    pub abs_diffs: Vec<f64>,
    pub max_abs_diff: f64,
    pub ce_revenue: f64,
    pub vcg_revenue: f64,
}

pub fn vcg_equivalence_check(ads: &[Advertiser]) -> Result<VcgEquivalence> {
    let equilibrium = equilibrium_bids(ads)?;
    let ce = run_ce_auction(ads, &equilibrium.bids)?;
    let vcg_prices = vcg_prices_in_order(ads, &BidVector::truthful(ads), &ce.allocation)?;
    let abs_diffs: Vec<f64> = ce
        .prices
        .iter()
        .zip(&vcg_prices)
        .map(|(a, b)| (a - b).abs())
        .collect();
    let vcg_revenue = vcg_prices
        .iter()
        .zip(&ce.click_probs)
        .map(|(p, c)| p * c)
        .sum();
    Ok(VcgEquivalence {
        allocation: ce.allocation.clone(),
        max_abs_diff: abs_diffs.iter().copied().fold(0.0, f64::max),
        ce_prices: ce.prices.clone(),
        vcg_prices,
        abs_diffs,
        ce_revenue: ce.se_revenue,
        vcg_revenue,
        equilibrium,
    })
}
