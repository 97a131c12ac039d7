//! Sponsored-search auction mechanisms on the cascade model.
//!
//! The CE mechanism ranks advertisers by `w·b` with `w = c/(c+γ)` and charges
//! each the smallest bid that keeps its slot: `p_i = w_{i+1} b_{i+1} / w_i`.
//! With `γ = 0` everywhere `w = 1` and this is the Overture rank-by-bid
//! second-price auction; with `γ = k − c` it is GSP. VCG on the same
//! allocation charges each ad the utility it takes from the ads below.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_click_pair, check_nonnegative, ClickParams, Entity, Ranking};
use crate::ranking::{argsort_desc, rank_by_ce};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAdvertiser", into = "RawAdvertiser")]
pub struct Advertiser {
    id: String,
    value: f64,
    ctr: f64,
    abandon_prob: f64,
}

impl Advertiser {
    pub fn new(id: impl Into<String>, value: f64, ctr: f64, abandon_prob: f64) -> Result<Self> {
        check_nonnegative("value", value)?;
        check_click_pair("", "ctr", ctr, abandon_prob)?;
        Ok(Self {
            id: id.into(),
            value,
            ctr,
            abandon_prob,
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Private value per click.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn ctr(&self) -> f64 {
        self.ctr
    }

    /// The advertiser as a rankable entity whose utility is `utility`.
    pub fn to_entity(&self, utility: f64) -> Result<Entity> {
        Entity::new(self.id.clone(), utility, self.ctr, self.abandon_prob)
    }
}

impl ClickParams for Advertiser {
    fn click_prob(&self) -> f64 {
        self.ctr
    }

    fn abandon_prob(&self) -> f64 {
        self.abandon_prob
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAdvertiser {
    id: String,
    value: f64,
    ctr: f64,
    abandon_prob: f64,
}

impl TryFrom<RawAdvertiser> for Advertiser {
    type Error = Error;

    fn try_from(raw: RawAdvertiser) -> Result<Self> {
        Advertiser::new(raw.id, raw.value, raw.ctr, raw.abandon_prob)
    }
}

impl From<Advertiser> for RawAdvertiser {
    fn from(a: Advertiser) -> Self {
        RawAdvertiser {
            id: a.id,
            value: a.value,
            ctr: a.ctr,
            abandon_prob: a.abandon_prob,
        }
    }
}

/// Per-advertiser bids, indexed like the advertiser list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct BidVector(Vec<f64>);

impl BidVector {
    pub fn new(bids: Vec<f64>) -> Result<Self> {
        for (i, &b) in bids.iter().enumerate() {
            check_nonnegative(&format!("bids[{i}]"), b)?;
        }
        Ok(Self(bids))
    }

    /// Truthful bids: every advertiser bids its private value.
    pub fn truthful(ads: &[Advertiser]) -> Self {
        Self(ads.iter().map(Advertiser::value).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn with_bid(&self, advertiser: usize, bid: f64) -> Result<Self> {
        let mut bids = self.0.clone();
        *bids.get_mut(advertiser).ok_or(Error::PositionOutOfRange {
            position: advertiser,
            len: self.0.len(),
        })? = bid;
        Self::new(bids)
    }
}

impl TryFrom<Vec<f64>> for BidVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<BidVector> for Vec<f64> {
    fn from(b: BidVector) -> Self {
        b.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    Ce,
    Gsp,
    Overture,
    Vcg,
}

impl Mechanism {
    pub const ALL: [Mechanism; 4] = [Self::Ce, Self::Gsp, Self::Overture, Self::Vcg];

    pub fn name(&self) -> &'static str {
        match self {
            Self::Ce => "ce",
            Self::Gsp => "gsp",
            Self::Overture => "overture",
            Self::Vcg => "vcg",
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown mechanism {s:?}; expected one of ce, gsp, overture, vcg"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuctionOutcome {
    pub mechanism: Mechanism,
    /// `allocation[p]` is the advertiser shown at position `p`.
    pub allocation: Vec<usize>,
    /// Cost per click charged at each position.
    pub prices: Vec<f64>,
    /// Cascade click probability at each position.
    pub click_probs: Vec<f64>,
    /// `Σ p_i · P_c(i)`.
    pub se_revenue: f64,
    /// `(v_a − p_a) · P_c(a)`, indexed by advertiser.
    pub advertiser_profits: Vec<f64>,
    /// `Σ v_i · P_c(i)`.
    pub total_revenue: f64,
}

impl AuctionOutcome {
    fn settle(
        mechanism: Mechanism,
        ads: &[Advertiser],
        allocation: Vec<usize>,
        prices: Vec<f64>,
    ) -> Result<Self> {
        let ranking = Ranking::new(ads, allocation)?;
        let click_probs = ranking.click_probs().to_vec();
        let mut se_revenue = 0.0;
        let mut total_revenue = 0.0;
        let mut advertiser_profits = vec![0.0; ads.len()];
        for (pos, &idx) in ranking.order().iter().enumerate() {
            let pc = click_probs[pos];
            let v = ads[idx].value();
            se_revenue += prices[pos] * pc;
            total_revenue += v * pc;
            advertiser_profits[idx] = (v - prices[pos]) * pc;
        }
        Ok(Self {
            mechanism,
            allocation: ranking.order().to_vec(),
            prices,
            click_probs,
            se_revenue,
            advertiser_profits,
            total_revenue,
        })
    }

    /// Position of each advertiser, indexed by advertiser.
    pub fn positions(&self) -> Vec<usize> {
        let mut pos = vec![0; self.allocation.len()];
        for (p, &a) in self.allocation.iter().enumerate() {
            pos[a] = p;
        }
        pos
    }
}

/// `w = c/(c+γ)`, zero when `c = 0`.
pub fn pricing_weight(a: &Advertiser) -> f64 {
    a.click_share()
}

fn check_inputs(ads: &[Advertiser], bids: &BidVector) -> Result<()> {
    if ads.is_empty() {
        return Err(Error::Empty("advertiser list"));
    }
    if bids.len() != ads.len() {
        return Err(Error::DimensionMismatch {
            expected: ads.len(),
            found: bids.len(),
        });
    }
    Ok(())
}

/// Rounding can push a price computed as `key_{i+1} / weight_i` a few ulps
/// above `b_i` when `key_i == key_{i+1}`. The exact price never exceeds the
/// bid because the allocation is sorted by key.
fn cap_at_bid(price: f64, bid: f64) -> f64 {
    debug_assert!(
        price <= bid + 1e-9 * (1.0 + bid.abs()),
        "price {price} exceeds bid {bid} by more than rounding"
    );
    price.min(bid)
}

/// Ranks by `weight·bid` and charges `key_{i+1} / weight_i`.
fn weighted_second_price(
    mechanism: Mechanism,
    ads: &[Advertiser],
    bids: &BidVector,
    weight: impl Fn(&Advertiser) -> f64,
) -> Result<AuctionOutcome> {
    check_inputs(ads, bids)?;
    let weights: Vec<f64> = ads.iter().map(&weight).collect();
    let keys: Vec<f64> = weights
        .iter()
        .zip(bids.as_slice())
        .map(|(w, b)| w * b)
        .collect();
    let order = argsort_desc(&keys);
    let prices = order
        .iter()
        .enumerate()
        .map(|(pos, &idx)| match order.get(pos + 1) {
            Some(&below) if weights[idx] > 0.0 => {
                cap_at_bid(keys[below] / weights[idx], bids.as_slice()[idx])
            }
            _ => 0.0,
        })
        .collect();
    AuctionOutcome::settle(mechanism, ads, order, prices)
}

/// CE mechanism: rank by `w·b`, price `w_{i+1} b_{i+1} / w_i`, bottom pays 0.
pub fn run_ce_auction(ads: &[Advertiser], bids: &BidVector) -> Result<AuctionOutcome> {
    weighted_second_price(Mechanism::Ce, ads, bids, pricing_weight)
}

/// GSP: rank by `c·b`, price `b_{i+1} c_{i+1} / c_i`.
pub fn run_gsp_auction(ads: &[Advertiser], bids: &BidVector) -> Result<AuctionOutcome> {
    weighted_second_price(Mechanism::Gsp, ads, bids, Advertiser::ctr)
}

/// Overture: rank by bid, pay the next bid.
pub fn run_overture_auction(ads: &[Advertiser], bids: &BidVector) -> Result<AuctionOutcome> {
    weighted_second_price(Mechanism::Overture, ads, bids, |_| 1.0)
}

/// VCG prices on the bid-optimal (`b·c/μ`) allocation.
pub fn run_vcg_auction(ads: &[Advertiser], bids: &BidVector) -> Result<AuctionOutcome> {
    check_inputs(ads, bids)?;
    let order = bid_optimal_order(ads, bids);
    let prices = vcg_prices_in_order(ads, bids, &order)?
        .into_iter()
        .zip(&order)
        .map(|(p, &idx)| cap_at_bid(p, bids.as_slice()[idx]))
        .collect();
    AuctionOutcome::settle(Mechanism::Vcg, ads, order, prices)
}

pub fn run_auction(
    mechanism: Mechanism,
    ads: &[Advertiser],
    bids: &BidVector,
) -> Result<AuctionOutcome> {
    match mechanism {
        Mechanism::Ce => run_ce_auction(ads, bids),
        Mechanism::Gsp => run_gsp_auction(ads, bids),
        Mechanism::Overture => run_overture_auction(ads, bids),
        Mechanism::Vcg => run_vcg_auction(ads, bids),
    }
}

/// Descending `b·c/μ`, computed as `w·b` so it matches the CE allocation.
fn bid_optimal_order(ads: &[Advertiser], bids: &BidVector) -> Vec<usize> {
    let keys: Vec<f64> = ads
        .iter()
        .zip(bids.as_slice())
        .map(|(a, b)| pricing_weight(a) * b)
        .collect();
    argsort_desc(&keys)
}

/// Per-position VCG prices on the bid-optimal allocation.
pub fn vcg_prices(ads: &[Advertiser], bids: &BidVector) -> Result<Vec<f64>> {
    Ok(run_vcg_auction(ads, bids)?.prices)
}

/// VCG per-click prices for a fixed allocation, by direct summation:
///
/// ```text
/// p_i = (μ_i / c_i) · Σ_{j>i} b_j c_j Π_{i<k<j} (1 − μ_k)
/// ```
///
/// The ad at the bottom pays 0, as does any ad with `c = 0`.
pub fn vcg_prices_in_order(
    ads: &[Advertiser],
    bids: &BidVector,
    order: &[usize],
) -> Result<Vec<f64>> {
    check_inputs(ads, bids)?;
    Ranking::new(ads, order.to_vec())?;
    let b = bids.as_slice();
    let prices: Vec<f64> = (0..order.len())
        .map(|i| {
            let ad = &ads[order[i]];
            if ad.ctr() == 0.0 {
                return 0.0;
            }
            let mut externality = 0.0;
            let mut reach = 1.0;
            for &j in &order[i + 1..] {
                externality += b[j] * ads[j].ctr() * reach;
                reach *= ads[j].continuation();
            }
            ad.absorption() / ad.ctr() * externality
        })
        .collect();
    debug_assert!(prices
        .iter()
        .zip(vcg_prices_recursive(ads, bids, order))
        .all(|(a, b)| (a - b).abs() <= 1e-9 * (1.0 + a.abs())));
    Ok(prices)
}

/// The same prices through the bottom-up recurrence
///
/// ```text
/// p_i = r_i · (b_{i+1} μ_{i+1} + (1 − μ_{i+1}) p_{i+1}),   r_i = μ_i c_{i+1} / (c_i μ_{i+1})
/// ```
///
/// with `p_N = 0`. Used as an independent cross-check of the summation form.
pub fn vcg_prices_recursive(ads: &[Advertiser], bids: &BidVector, order: &[usize]) -> Vec<f64> {
    let n = order.len();
    let b = bids.as_slice();
    let mut prices = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        let here = &ads[order[i]];
        let below = &ads[order[i + 1]];
        if here.ctr() == 0.0 || below.ctr() == 0.0 {
            continue;
        }
        let mu_below = below.absorption();
        let ratio = here.absorption() * below.ctr() / (here.ctr() * mu_below);
        prices[i] = ratio * (b[order[i + 1]] * mu_below + (1.0 - mu_below) * prices[i + 1]);
    }
    prices
}

/// Largest achievable total revenue `Σ v_i P_c(i)`: the expected value of
/// ranking advertisers by `v·c/μ`.
pub fn social_revenue_bound(ads: &[Advertiser]) -> Result<f64> {
    let entities = ads
        .iter()
        .map(|a| a.to_entity(a.value()))
        .collect::<Result<Vec<_>>>()?;
    let ranking = rank_by_ce(&entities)?;
    Ok(crate::model::expected_utility(&entities, &ranking)?.expected_utility)
}
