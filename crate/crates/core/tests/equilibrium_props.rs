mod common;

use ce_rank::equilibrium::{
    deviation_profit, equilibrium_bids, gsp_equilibrium_bids, overture_equilibrium_bids,
    vcg_equivalence_check, verify_equilibrium, Deviation, DEFAULT_TOLERANCE,
};
use ce_rank::mechanism::{
    pricing_weight, run_ce_auction, social_revenue_bound, Advertiser, BidVector,
};
use ce_rank::ClickParams;
use common::{auction, close, regular_ads};
use proptest::prelude::*;

/// A bid that puts `i` at position `m` in a real auction, or `None` when the
/// neighbouring keys leave no room strictly between them.
fn landing_bid(ads: &[Advertiser], bids: &BidVector, i: usize, m: usize) -> Option<f64> {
    let w = pricing_weight(&ads[i]);
    if w == 0.0 {
        return None;
    }
    let o = run_ce_auction(ads, bids).unwrap();
    let key = |j: usize| pricing_weight(&ads[j]) * bids.as_slice()[j];
    let others: Vec<usize> = o.allocation.iter().copied().filter(|&j| j != i).collect();
    let above = m.checked_sub(1).map(|p| key(others[p]));
    let below = others.get(m).map_or(0.0, |&j| key(j));
    let target = match above {
        None => 2.0 * below + 1.0,
        Some(a) if a > below => below + (a - below) / 2.0,
        Some(_) => return None,
    };
    let bid = target / w;
    if !(bid.is_finite() && bid * w > below && above.is_none_or(|a| bid * w < a)) {
        return None;
    }
    Some(bid)
}

/// Profit of `i` after actually re-running the auction with a landing bid.
fn realized_profit(ads: &[Advertiser], bids: &BidVector, i: usize, m: usize) -> Option<f64> {
    let bid = landing_bid(ads, bids, i, m)?;
    let moved = bids.with_bid(i, bid).unwrap();
    let o = run_ce_auction(ads, &moved).unwrap();
    if o.positions()[i] != m {
        return None;
    }
    Some(o.advertiser_profits[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn deviation_profit_matches_rerun((ads, b) in auction(1..=7), who in 0usize..7) {
        let i = who % ads.len();
        for m in 0..ads.len() {
            if let Some(real) = realized_profit(&ads, &b, i, m) {
                let model = deviation_profit(&ads, &b, i, Deviation::MoveTo(m)).unwrap();
                prop_assert!(close(model, real, 1e-12), "move to {}: {} vs {}", m, model, real);
            }
        }
        prop_assert_eq!(deviation_profit(&ads, &b, i, Deviation::DropOut).unwrap(), 0.0);
    }

    #[test]
    fn null_deviation_is_current_profit((ads, b) in auction(1..=7), who in 0usize..7) {
        let i = who % ads.len();
        let o = run_ce_auction(&ads, &b).unwrap();
        let p = deviation_profit(&ads, &b, i, Deviation::MoveTo(o.positions()[i])).unwrap();
        prop_assert!(close(p, o.advertiser_profits[i], 1e-12));
    }

    #[test]
    fn equilibrium_is_envy_free(ads in regular_ads(1..=8)) {
        let eq = equilibrium_bids(&ads).unwrap();
        let report = verify_equilibrium(&ads, &eq.bids, DEFAULT_TOLERANCE).unwrap();
        prop_assert!(report.is_envy_free, "{:?}", report.worst_deviation);
        prop_assert!(report.worst_violation <= DEFAULT_TOLERANCE);
        prop_assert!((report.total_revenue - social_revenue_bound(&ads).unwrap()).abs() <= 1e-12);

        // Independent of the deviation model: re-run real auctions with landing bids.
        let o = run_ce_auction(&ads, &eq.bids).unwrap();
        for i in 0..ads.len() {
            let current = o.advertiser_profits[i];
            prop_assert!(current >= -1e-12);
            for m in 0..ads.len() {
                if let Some(p) = realized_profit(&ads, &eq.bids, i, m) {
                    prop_assert!(p <= current + DEFAULT_TOLERANCE, "ad {} to {}: {} > {}", i, m, p, current);
                }
            }
        }
    }

    #[test]
    fn equilibrium_bid_structure(ads in regular_ads(1..=8)) {
        let eq = equilibrium_bids(&ads).unwrap();
        let b = eq.bids.as_slice();
        let key = |i: usize| pricing_weight(&ads[i]) * b[i];
        let o = run_ce_auction(&ads, &eq.bids).unwrap();
        for (p, &i) in eq.order.iter().enumerate() {
            let below = eq.order.get(p + 1).map_or(0.0, |&j| key(j));
            let top = ads[i].value() * ads[i].click_share();
            prop_assert!(key(i) >= below.min(top) - 1e-12 && key(i) <= below.max(top) + 1e-12);
            prop_assert!(o.prices[o.positions()[i]] <= ads[i].value() + 1e-12);
        }
    }

    #[test]
    fn equivalent_to_truthful_vcg(ads in regular_ads(1..=8)) {
        let eq = vcg_equivalence_check(&ads).unwrap();
        prop_assert!(eq.max_abs_diff <= 1e-9);
        prop_assert_eq!(*eq.ce_prices.last().unwrap(), 0.0);
        prop_assert_eq!(*eq.vcg_prices.last().unwrap(), 0.0);
        prop_assert!((eq.ce_revenue - eq.vcg_revenue).abs() <= 1e-9);
    }

    #[test]
    fn linear_abandonment_gives_gsp_equilibrium(
        rows in prop::collection::vec((0.1..10.0f64, 0.05..=1.0f64), 1..=8),
        k in 0.2..=1.0f64,
    ) {
        let ads: Vec<Advertiser> = rows
            .iter()
            .enumerate()
            .map(|(i, &(v, f))| {
                let c = f * k;
                Advertiser::new(format!("a{i}"), v, c, k - c).unwrap()
            })
            .collect();
        let values: Vec<f64> = ads.iter().map(|a| a.value()).collect();
        let ctrs: Vec<f64> = ads.iter().map(|a| a.ctr()).collect();
        let ours = equilibrium_bids(&ads).unwrap();
        let gsp = gsp_equilibrium_bids(&values, &ctrs, k);
        for (a, g) in ours.bids.as_slice().iter().zip(&gsp) {
            prop_assert!(close(*a, *g, 1e-12), "{} vs {}", a, g);
        }
    }

    #[test]
    fn zero_abandonment_gives_overture_equilibrium(
        rows in prop::collection::vec((0.1..10.0f64, 0.05..=1.0f64), 1..=8),
    ) {
        let ads: Vec<Advertiser> = rows
            .iter()
            .enumerate()
            .map(|(i, &(v, c))| Advertiser::new(format!("a{i}"), v, c, 0.0).unwrap())
            .collect();
        let eq = equilibrium_bids(&ads).unwrap();
        let b = eq.bids.as_slice();
        for (p, &i) in eq.order.iter().enumerate() {
            let next = eq.order.get(p + 1).map_or(0.0, |&j| b[j]);
            let expect = ads[i].value() * ads[i].ctr() + (1.0 - ads[i].ctr()) * next;
            prop_assert!(close(b[i], expect, 1e-12));
        }
        let values: Vec<f64> = ads.iter().map(|a| a.value()).collect();
        let ctrs: Vec<f64> = ads.iter().map(|a| a.ctr()).collect();
        for (a, o) in b.iter().zip(overture_equilibrium_bids(&values, &ctrs)) {
            prop_assert!(close(*a, o, 1e-12));
        }
    }
}

#[test]
fn worked_pair() {
    let ads = [
        Advertiser::new("a1", 10.0, 0.5, 0.5).unwrap(),
        Advertiser::new("a2", 4.0, 0.3, 0.3).unwrap(),
    ];
    let eq = equilibrium_bids(&ads).unwrap();
    assert_eq!(eq.order, vec![0, 1]);
    assert_eq!(eq.bids.as_slice(), &[10.0, 2.4]);
    let report = verify_equilibrium(&ads, &eq.bids, DEFAULT_TOLERANCE).unwrap();
    assert!(report.is_envy_free);
    assert_eq!(report.se_revenue, report.vcg_truthful_revenue);
    let vcg = vcg_equivalence_check(&ads).unwrap();
    assert_eq!(vcg.ce_prices[0], 2.4);
    assert_eq!(vcg.vcg_prices[0], 2.4);
}

#[test]
fn overbidding_breaks_envy_freeness() {
    // The low-value ad grabs the top slot; moving back down is strictly better for it.
    let ads = [
        Advertiser::new("big", 10.0, 0.5, 0.1).unwrap(),
        Advertiser::new("small", 1.0, 0.5, 0.1).unwrap(),
    ];
    let eq = equilibrium_bids(&ads).unwrap();
    let grab = eq.bids.with_bid(1, 100.0).unwrap();
    let report = verify_equilibrium(&ads, &grab, DEFAULT_TOLERANCE).unwrap();
    assert!(!report.is_envy_free);
    assert_eq!(report.worst_deviation, Some((1, Deviation::MoveTo(1))));
}

#[test]
fn ties_are_reported() {
    let ads = [
        Advertiser::new("a", 2.0, 0.5, 0.5).unwrap(),
        Advertiser::new("b", 2.0, 0.5, 0.5).unwrap(),
    ];
    let eq = equilibrium_bids(&ads).unwrap();
    assert_eq!(eq.tied_positions, vec![0]);
    assert!(
        verify_equilibrium(&ads, &eq.bids, DEFAULT_TOLERANCE)
            .unwrap()
            .is_envy_free
    );
}
