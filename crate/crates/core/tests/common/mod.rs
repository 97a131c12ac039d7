//! Strategies and independent oracles shared by the integration tests.
//!
//! The oracles deliberately avoid the library's own helpers: expected utility
//! is computed by walking the browsing states, permutations come from Heap's
//! algorithm, and VCG prices from the externality definition.

#![allow(dead_code)]

use ce_rank::mechanism::{Advertiser, BidVector};
use ce_rank::model::Entity;
use proptest::prelude::*;

/// `(U, C, γ)` with `γ` a fraction of the remaining mass; hits the edges
/// `C = 0`, `γ = 0` and `C + γ = 1` now and then.
pub fn params() -> impl Strategy<Value = (f64, f64, f64)> {
    let click = prop_oneof![1 => Just(0.0), 1 => Just(1.0), 8 => 0.0..=1.0f64];
    let frac = prop_oneof![1 => Just(0.0), 1 => Just(1.0), 8 => 0.0..=1.0f64];
    (0.0..10.0f64, click, frac).prop_map(|(u, c, f)| (u, c, f * (1.0 - c)))
}

pub fn entity(i: usize, (u, c, g): (f64, f64, f64)) -> Entity {
    Entity::new(format!("e{i}"), u, c, g).unwrap()
}

pub fn entities(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Entity>> {
    prop::collection::vec(params(), n).prop_map(|ps| {
        ps.into_iter()
            .enumerate()
            .map(|(i, p)| entity(i, p))
            .collect()
    })
}

/// Advertisers paired with bids.
pub fn auction(
    n: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (Vec<Advertiser>, BidVector)> {
    prop::collection::vec((params(), 0.0..10.0f64), n).prop_map(|rows| {
        let ads = rows
            .iter()
            .enumerate()
            .map(|(i, &((v, c, g), _))| Advertiser::new(format!("a{i}"), v, c, g).unwrap())
            .collect();
        let bids = BidVector::new(rows.iter().map(|r| r.1).collect()).unwrap();
        (ads, bids)
    })
}

/// Advertisers with strictly positive CTR and `μ < 1`.
pub fn regular_ads(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<Advertiser>> {
    prop::collection::vec((0.1..10.0f64, 0.05..0.95f64, 0.0..0.95f64), n).prop_map(|rows| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (v, c, f))| Advertiser::new(format!("a{i}"), v, c, f * (1.0 - c)).unwrap())
            .collect()
    })
}

/// Expected utility by walking the browsing process state by state:
/// probability mass arriving at each position splits into click, abandon and continue.
pub fn walk_utility(items: &[(f64, f64, f64)], order: &[usize]) -> f64 {
    let mut arriving = 1.0;
    let mut total = 0.0;
    for &i in order {
        let (u, c, g) = items[i];
        let clicked = arriving * c;
        let abandoned = arriving * g;
        total += u * clicked;
        arriving = arriving - clicked - abandoned;
    }
    total
}

pub fn triples(es: &[Entity]) -> Vec<(f64, f64, f64)> {
    use ce_rank::ClickParams;
    es.iter()
        .map(|e| (e.utility(), e.click_prob(), e.abandon_prob()))
        .collect()
}

/// All permutations of `0..n` (Heap's algorithm).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn heap(k: usize, a: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k <= 1 {
            out.push(a.clone());
            return;
        }
        heap(k - 1, a, out);
        for i in 0..k - 1 {
            if k.is_multiple_of(2) {
                a.swap(i, k - 1);
            } else {
                a.swap(0, k - 1);
            }
            heap(k - 1, a, out);
        }
    }
    let mut out = Vec::new();
    heap(n, &mut (0..n).collect(), &mut out);
    out
}

/// Best value over all orders.
pub fn exhaustive_best(items: &[(f64, f64, f64)]) -> f64 {
    permutations(items.len())
        .iter()
        .map(|p| walk_utility(items, p))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// VCG per-click price for the ad at each position of `order`, from the
/// definition: the bid-value the other advertisers lose because it is present,
/// divided by its click probability. Ads above are unaffected by its presence,
/// so both welfare terms are evaluated from its own position (reach 1).
pub fn vcg_by_externality(ads: &[Advertiser], bids: &[f64], order: &[usize]) -> Vec<f64> {
    use ce_rank::ClickParams;
    let items: Vec<(f64, f64, f64)> = ads
        .iter()
        .zip(bids)
        .map(|(a, &b)| (b, a.ctr(), a.abandon_prob()))
        .collect();
    order
        .iter()
        .enumerate()
        .map(|(pos, &i)| {
            let (b, c, _) = items[i];
            if c == 0.0 {
                return 0.0;
            }
            let with_me = walk_utility(&items, &order[pos..]);
            let others_with = with_me - b * c;
            let others_without = walk_utility(&items, &order[pos + 1..]);
            (others_without - others_with) / c
        })
        .collect()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
