mod common;

use ce_rank::model::{expected_utility, ClickParams, Entity, Ranking};
use common::{entities, triples, walk_utility};
use proptest::prelude::*;

fn shuffled(n: usize) -> impl Strategy<Value = Vec<usize>> {
    Just((0..n).collect::<Vec<_>>()).prop_shuffle()
}

fn with_order(
    n: std::ops::RangeInclusive<usize>,
) -> impl Strategy<Value = (Vec<Entity>, Vec<usize>)> {
    entities(n).prop_flat_map(|es| {
        let len = es.len();
        (Just(es), shuffled(len))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn matches_state_walk((es, order) in with_order(1..=8)) {
        let r = Ranking::new(&es, order.clone()).unwrap();
        let report = expected_utility(&es, &r).unwrap();
        let oracle = walk_utility(&triples(&es), &order);
        prop_assert!(common::close(report.expected_utility, oracle, 1e-12));
        let sum: f64 = report.per_position_contribution.iter().sum();
        prop_assert!((sum - report.expected_utility).abs() <= 1e-12);
    }

    #[test]
    fn flow_balance((es, order) in with_order(1..=8)) {
        let r = Ranking::new(&es, order).unwrap();
        let clicks: f64 = r.click_probs().iter().sum();
        let abandons: f64 = r
            .order()
            .iter()
            .zip(r.view_probs())
            .map(|(&i, v)| es[i].abandon_prob() * v)
            .sum();
        prop_assert!((clicks + abandons + r.exhaustion_probability() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn view_recursion((es, order) in with_order(1..=8)) {
        let r = Ranking::new(&es, order).unwrap();
        prop_assert_eq!(r.view_probability(0).unwrap(), 1.0);
        for p in 0..r.len() {
            let e = &es[r.item_at(p).unwrap()];
            prop_assert_eq!(r.click_probability(p).unwrap(), e.click_prob() * r.view_probs()[p]);
            if p + 1 < r.len() {
                let expect = r.view_probs()[p] * (1.0 - e.absorption());
                prop_assert!((r.view_probability(p + 1).unwrap() - expect).abs() <= 1e-15);
            }
        }
        prop_assert!(r.view_probability(r.len()).is_err());
    }

    #[test]
    fn scaling_is_linear((es, order) in with_order(1..=8), shift in -4i32..=4, lambda in 0.01..100.0f64) {
        let base = expected_utility(&es, &Ranking::new(&es, order.clone()).unwrap())
            .unwrap()
            .expected_utility;
        let scale = |l: f64| {
            let scaled: Vec<Entity> = es.iter().map(|e| e.with_utility(e.utility() * l).unwrap()).collect();
            expected_utility(&scaled, &Ranking::new(&scaled, order.clone()).unwrap())
                .unwrap()
                .expected_utility
        };
        // Powers of two scale without rounding.
        let pow2 = 2f64.powi(shift);
        prop_assert_eq!(scale(pow2), base * pow2);
        prop_assert!(common::close(scale(lambda), base * lambda, 1e-12));
    }

    #[test]
    fn identical_triples_are_interchangeable(
        (es, order) in with_order(2..=6),
        dup in 0usize..6,
    ) {
        // Replace one entity by a copy of another and swap the pair in the order.
        let n = es.len();
        let src = dup % n;
        let dst = (dup + 1) % n;
        let mut es = es;
        let copy = Entity::new("copy", es[src].utility(), es[src].click_prob(), es[src].abandon_prob()).unwrap();
        es[dst] = copy;
        let a = expected_utility(&es, &Ranking::new(&es, order.clone()).unwrap()).unwrap();
        let swapped: Vec<usize> = order
            .iter()
            .map(|&i| if i == src { dst } else if i == dst { src } else { i })
            .collect();
        let b = expected_utility(&es, &Ranking::new(&es, swapped).unwrap()).unwrap();
        prop_assert_eq!(a.expected_utility, b.expected_utility);
    }
}

#[test]
fn rejects_bad_rankings() {
    let es = vec![
        Entity::new("a", 1.0, 0.4, 0.1).unwrap(),
        Entity::new("b", 2.0, 0.3, 0.2).unwrap(),
    ];
    assert!(Ranking::new(&es, vec![0]).is_err());
    assert!(Ranking::new(&es, vec![0, 0]).is_err());
    assert!(Ranking::new(&es, vec![0, 2]).is_err());
    assert!(Ranking::new::<Entity>(&[], vec![]).is_err());
    let r = Ranking::identity(&es).unwrap();
    assert!(expected_utility(&es[..1], &r).is_err());
}

#[test]
fn two_entity_orders() {
    // Hand evaluation: [B, A] = 2*0.3 + 1*0.4*0.5 = 0.8, [A, B] = 0.4 + 2*0.3*0.5 = 0.7.
    let es = vec![
        Entity::new("A", 1.0, 0.4, 0.1).unwrap(),
        Entity::new("B", 2.0, 0.3, 0.2).unwrap(),
    ];
    let ba = expected_utility(&es, &Ranking::new(&es, vec![1, 0]).unwrap()).unwrap();
    let ab = expected_utility(&es, &Ranking::new(&es, vec![0, 1]).unwrap()).unwrap();
    assert!((ba.expected_utility - 0.8).abs() <= 1e-15);
    assert!((ab.expected_utility - 0.7).abs() <= 1e-15);
}
