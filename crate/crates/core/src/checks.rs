//! Property checks over random instance batches.
//!
//! Each check returns a [`CheckResult`] instead of panicking so the same
//! code backs both the acceptance test target and `ce-rank selfcheck`.
//! Instance batches are generated from fixed seeds and verified in parallel;
//! results are collected in instance order, so details are reproducible.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::cli::{self, Solver};
use crate::diversity::{
    brute_force_diversity, greedy_diversity, instance_from_graph, max_independent_set_bruteforce,
    nonzero_residual_set,
};
use crate::equilibrium::{equilibrium_bids, vcg_equivalence_check, verify_equilibrium};
use crate::mechanism::{
    pricing_weight, run_auction, run_ce_auction, run_gsp_auction, run_overture_auction,
    social_revenue_bound, vcg_prices_in_order, Advertiser, BidVector, Mechanism,
};
use crate::model::{expected_utility, ClickParams, Ranking};
use crate::ranking::{brute_force_optimal, rank_by_ce, rank_by_variant, RankingVariant};
use crate::scenario::{
    generate_instances, AbandonmentModel, RandomInstanceSpec, Report, ReportFormat, Scenario,
    ScenarioKind,
};
use crate::simulator::estimate_expected_utility;

const EXACT_TOL: f64 = 1e-12;
const EQUILIBRIUM_TOL: f64 = 1e-9;

/// Instance counts for one run of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckConfig {
    pub seed: u64,
    pub optimality_instances: usize,
    pub taxonomy_instances: usize,
    pub auction_instances: usize,
    pub equilibrium_instances: usize,
    pub sim_rankings: usize,
    pub sim_trials: u64,
    pub random_graphs: usize,
    pub roundtrip_instances: usize,
    pub label: &'static str,
}

impl CheckConfig {
    /// Acceptance-scale counts.
    pub fn full(seed: u64) -> Self {
        Self {
            seed,
            optimality_instances: 10_000,
            taxonomy_instances: 1_000,
            auction_instances: 1_000,
            equilibrium_instances: 1_000,
            sim_rankings: 100,
            sim_trials: 100_000,
            random_graphs: 50,
            roundtrip_instances: 100,
            label: "full",
        }
    }

    pub fn reduced(seed: u64) -> Self {
        Self {
            seed,
            optimality_instances: 500,
            taxonomy_instances: 200,
            auction_instances: 200,
            equilibrium_instances: 200,
            sim_rankings: 10,
            sim_trials: 100_000,
            random_graphs: 20,
            roundtrip_instances: 20,
            label: "reduced",
        }
    }

    fn seed_for(&self, check: u64) -> u64 {
        self.seed.wrapping_mul(0x9E37_79B9).wrapping_add(check)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:>2} {:<34} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

fn result(id: usize, name: &'static str, failures: &[String], detail: String) -> CheckResult {
    let detail = match failures.first() {
        None => detail,
        Some(first) => format!("{detail}; {} failures, first: {first}", failures.len()),
    };
    CheckResult {
        id,
        name,
        passed: failures.is_empty(),
        detail,
    }
}

pub const CHECK_COUNT: usize = 12;

pub fn run_all(cfg: &CheckConfig) -> Vec<CheckResult> {
    (1..=CHECK_COUNT).map(|id| run_one(cfg, id)).collect()
}

/// Runs the check numbered `id` (1-based).
pub fn run_one(cfg: &CheckConfig, id: usize) -> CheckResult {
    match id {
        1 => ce_optimality(cfg),
        2 => adjacent_swaps(cfg),
        3 => taxonomy_reductions(cfg),
        4 => order_preservation(cfg),
        5 => individual_rationality(cfg),
        6 => mechanism_reductions(cfg),
        7 => nash_equilibrium(cfg),
        8 => vcg_dominance(cfg),
        9 => revenue_equivalence(cfg),
        10 => monte_carlo(cfg),
        11 => diversity_reduction(cfg),
        12 => round_trip(cfg),
        _ => panic!("no check numbered {id}"),
    }
}

/// One verdict per check plus the detail lines as notes.
pub fn summary_report(cfg: &CheckConfig, results: &[CheckResult]) -> Report {
    let mut report = Report::new("selfcheck", cfg.label);
    report.metric("seed", cfg.seed as f64);
    for r in results {
        report.verdict(
            &format!("{:02}_{}", r.id, r.name.replace(' ', "_")),
            r.passed,
        );
        report.notes.push(r.to_string());
    }
    report
}

fn batch(kind: ScenarioKind, count: usize, seed: u64) -> RandomInstanceSpec {
    RandomInstanceSpec::new(kind, count, seed)
}

fn generate(spec: &RandomInstanceSpec) -> Vec<Scenario> {
    generate_instances(spec).expect("check batches use valid generator settings")
}

/// Runs `check` on every instance; returns failures (tagged by instance index) and per-instance stats.
fn verify_all<T: Send>(
    instances: &[Scenario],
    check: impl Fn(&Scenario) -> Result<T, String> + Sync + Send,
) -> (Vec<String>, Vec<T>) {
    let outcomes: Vec<Result<T, String>> = instances.par_iter().map(check).collect();
    let mut failures = Vec::new();
    let mut stats = Vec::new();
    for (n, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(t) => stats.push(t),
            Err(e) => failures.push(format!("instance {n}: {e}")),
        }
    }
    (failures, stats)
}

fn max_of(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(0.0, f64::max)
}

/// True when `keys` read along `order` never increase. Pairs within
/// `slack · max(1, |key|)` count as ties.
fn non_increasing_along(order: &[usize], keys: &[f64], slack: f64) -> bool {
    order.windows(2).all(|w| {
        let (a, b) = (keys[w[0]], keys[w[1]]);
        a >= b || b - a <= slack * a.abs().max(1.0)
    })
}

fn ce_optimality(cfg: &CheckConfig) -> CheckResult {
    let spec = batch(
        ScenarioKind::Ranking,
        cfg.optimality_instances,
        cfg.seed_for(1),
    );
    let (failures, gaps) = verify_all(&generate(&spec), |s| {
        let ranking = rank_by_ce(&s.entities).map_err(|e| e.to_string())?;
        let value = expected_utility(&s.entities, &ranking)
            .map_err(|e| e.to_string())?
            .expected_utility;
        let (_, best) = brute_force_optimal(&s.entities).map_err(|e| e.to_string())?;
        let gap = (best - value).abs();
        if gap > EXACT_TOL {
            return Err(format!("CE {value} vs optimum {best}"));
        }
        Ok(gap)
    });
    result(
        1,
        "ce optimality",
        &failures,
        format!(
            "{} instances, N in 2..=8, max |gap| {:.3e}",
            cfg.optimality_instances,
            max_of(&gaps)
        ),
    )
}

fn adjacent_swaps(cfg: &CheckConfig) -> CheckResult {
    let spec = batch(
        ScenarioKind::Ranking,
        cfg.optimality_instances,
        cfg.seed_for(1),
    );
    let (failures, gains) = verify_all(&generate(&spec), |s| {
        let ranking = rank_by_ce(&s.entities).map_err(|e| e.to_string())?;
        let base = expected_utility(&s.entities, &ranking)
            .map_err(|e| e.to_string())?
            .expected_utility;
        let mut worst = f64::NEG_INFINITY;
        for p in 0..ranking.len() - 1 {
            let mut order = ranking.order().to_vec();
            order.swap(p, p + 1);
            let swapped = Ranking::new(&s.entities, order).map_err(|e| e.to_string())?;
            let value = expected_utility(&s.entities, &swapped)
                .map_err(|e| e.to_string())?
                .expected_utility;
            worst = worst.max(value - base);
        }
        if worst > EXACT_TOL {
            return Err(format!("swap gains {worst}"));
        }
        Ok(worst)
    });
    result(
        2,
        "adjacent swap",
        &failures,
        format!(
            "{} instances, largest swap gain {:.3e}",
            cfg.optimality_instances,
            gains.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        ),
    )
}

fn taxonomy_reductions(cfg: &CheckConfig) -> CheckResult {
    let n = cfg.taxonomy_instances;
    let zero = RandomInstanceSpec {
        abandonment: AbandonmentModel::Zero,
        ..batch(ScenarioKind::Ranking, n, cfg.seed_for(3))
    };
    let (mut failures, _) = verify_all(&generate(&zero), |s| {
        let ce = rank_by_ce(&s.entities).map_err(|e| e.to_string())?;
        let utility: Vec<f64> = s.entities.iter().map(|e| e.utility()).collect();
        if !non_increasing_along(ce.order(), &utility, 0.0) {
            return Err("gamma = 0: CE order is not sorted by U".into());
        }
        for v in [
            RankingVariant::Prp,
            RankingVariant::BidOrder,
            RankingVariant::SocialOptimal,
        ] {
            let other = rank_by_variant(&s.entities, v).map_err(|e| e.to_string())?;
            if !non_increasing_along(other.order(), &utility, 0.0) {
                return Err(format!("gamma = 0: {v} order is not sorted by U"));
            }
        }
        Ok(())
    });
    for (slot, k) in [0.6, 1.0].into_iter().enumerate() {
        let linear = RandomInstanceSpec {
            abandonment: AbandonmentModel::Linear { k },
            ..batch(ScenarioKind::Ranking, n, cfg.seed_for(30 + slot as u64))
        };
        let (f, _) = verify_all(&generate(&linear), |s| {
            let ce = rank_by_ce(&s.entities).map_err(|e| e.to_string())?;
            let cu: Vec<f64> = s
                .entities
                .iter()
                .map(|e| e.click_prob() * e.utility())
                .collect();
            if !non_increasing_along(ce.order(), &cu, 0.0) {
                return Err(format!("gamma = {k} - C: CE order is not sorted by C*U"));
            }
            for v in [
                RankingVariant::PerceivedTimesActual,
                RankingVariant::ExpectedProfit,
            ] {
                let other = rank_by_variant(&s.entities, v).map_err(|e| e.to_string())?;
                let ce_score: Vec<f64> = s.entities.iter().map(crate::ranking::ce_score).collect();
                if !non_increasing_along(other.order(), &ce_score, 0.0) {
                    return Err(format!("gamma = {k} - C: {v} order is not sorted by CE"));
                }
            }
            Ok(())
        });
        failures.extend(f.into_iter().map(|e| format!("k = {k}, {e}")));
    }
    result(
        3,
        "taxonomy reductions",
        &failures,
        format!("{n} instances with gamma = 0, {n} each with gamma = k - C for k in {{0.6, 1}}"),
    )
}

fn auction_batch(cfg: &CheckConfig, check: u64, abandonment: AbandonmentModel) -> Vec<Scenario> {
    generate(&RandomInstanceSpec {
        abandonment,
        ..batch(
            ScenarioKind::Auction,
            cfg.auction_instances,
            cfg.seed_for(check),
        )
    })
}

fn default_abandonment() -> AbandonmentModel {
    RandomInstanceSpec::default().abandonment
}

fn bids_of(s: &Scenario) -> &BidVector {
    s.bids.as_ref().expect("auction scenarios carry bids")
}

fn order_preservation(cfg: &CheckConfig) -> CheckResult {
    let instances = auction_batch(cfg, 4, default_abandonment());
    let (failures, _) = verify_all(&instances, |s| {
        let ads = &s.advertisers;
        let o = run_ce_auction(ads, bids_of(s)).map_err(|e| e.to_string())?;
        // CE score of each advertiser with its price as utility: p·c/μ = p·w.
        let mut ce = vec![0.0; ads.len()];
        for (&i, &p) in o.allocation.iter().zip(&o.prices) {
            ce[i] = p * pricing_weight(&ads[i]);
        }
        let keys: Vec<f64> = ads
            .iter()
            .zip(bids_of(s).as_slice())
            .map(|(a, b)| pricing_weight(a) * b)
            .collect();
        if !non_increasing_along(&o.allocation, &keys, 0.0) {
            return Err("allocation is not sorted by w*b".into());
        }
        if !non_increasing_along(&o.allocation, &ce, EXACT_TOL) {
            return Err(format!("p*c/mu not sorted along the allocation: {ce:?}"));
        }
        Ok(())
    });
    result(
        4,
        "order preservation",
        &failures,
        format!("{} auctions", cfg.auction_instances),
    )
}

fn individual_rationality(cfg: &CheckConfig) -> CheckResult {
    let instances = auction_batch(cfg, 5, default_abandonment());
    let (failures, _) = verify_all(&instances, |s| {
        let bids = bids_of(s);
        for m in Mechanism::ALL {
            let o = run_auction(m, &s.advertisers, bids).map_err(|e| e.to_string())?;
            for (pos, (&i, &p)) in o.allocation.iter().zip(&o.prices).enumerate() {
                if !(p >= 0.0 && p <= bids.as_slice()[i]) {
                    return Err(format!(
                        "{m}: position {pos} pays {p} on bid {}",
                        bids.as_slice()[i]
                    ));
                }
            }
        }
        Ok(())
    });
    result(
        5,
        "individual rationality",
        &failures,
        format!("{} auctions x 4 mechanisms", cfg.auction_instances),
    )
}

fn mechanism_reductions(cfg: &CheckConfig) -> CheckResult {
    let zero = auction_batch(cfg, 6, AbandonmentModel::Zero);
    let (mut failures, _) = verify_all(&zero, |s| {
        let ce = run_ce_auction(&s.advertisers, bids_of(s)).map_err(|e| e.to_string())?;
        let ov = run_overture_auction(&s.advertisers, bids_of(s)).map_err(|e| e.to_string())?;
        if ce.allocation != ov.allocation || ce.prices != ov.prices {
            return Err(format!(
                "gamma = 0: CE {:?} vs Overture {:?}",
                ce.prices, ov.prices
            ));
        }
        Ok(())
    });
    let linear = auction_batch(cfg, 60, AbandonmentModel::Linear { k: 0.7 });
    let (f, diffs) = verify_all(&linear, |s| {
        let ce = run_ce_auction(&s.advertisers, bids_of(s)).map_err(|e| e.to_string())?;
        let gsp = run_gsp_auction(&s.advertisers, bids_of(s)).map_err(|e| e.to_string())?;
        if ce.allocation != gsp.allocation {
            return Err("gamma = k - c: allocations differ".into());
        }
        let diff = max_of(
            &ce.prices
                .iter()
                .zip(&gsp.prices)
                .map(|(a, b)| (a - b).abs())
                .collect::<Vec<_>>(),
        );
        if diff > EXACT_TOL {
            return Err(format!("gamma = k - c: price gap {diff}"));
        }
        Ok(diff)
    });
    failures.extend(f);
    result(
        6,
        "mechanism reductions",
        &failures,
        format!(
            "{n} Overture cases exact, {n} GSP cases max |dp| {:.3e}",
            max_of(&diffs),
            n = cfg.auction_instances
        ),
    )
}

fn equilibrium_batch(cfg: &CheckConfig, check: u64) -> Vec<Scenario> {
    generate(&batch(
        ScenarioKind::Equilibrium,
        cfg.equilibrium_instances,
        cfg.seed_for(check),
    ))
}

/// Bid-order and price properties of the equilibrium that follow from the bid recursion.
fn equilibrium_structure(
    ads: &[Advertiser],
    bids: &BidVector,
    order: &[usize],
) -> Result<(), String> {
    let key = |i: usize| pricing_weight(&ads[i]) * bids.as_slice()[i];
    for (p, &i) in order.iter().enumerate() {
        let a = &ads[i];
        if a.ctr() == 0.0 {
            continue;
        }
        let below = order.get(p + 1).map_or(0.0, |&j| key(j));
        let top = a.value() * a.click_share();
        let (lo, hi) = (below.min(top), below.max(top));
        let slack = EXACT_TOL * hi.max(1.0);
        if key(i) < lo - slack || key(i) > hi + slack {
            return Err(format!(
                "w*b = {} at position {p} not between {below} and {top}",
                key(i)
            ));
        }
    }
    let o = run_ce_auction(ads, bids).map_err(|e| e.to_string())?;
    for (&i, &p) in o.allocation.iter().zip(&o.prices) {
        if p > ads[i].value() + EXACT_TOL * ads[i].value().max(1.0) {
            return Err(format!("price {p} above value {}", ads[i].value()));
        }
    }
    Ok(())
}

fn nash_equilibrium(cfg: &CheckConfig) -> CheckResult {
    let instances = equilibrium_batch(cfg, 7);
    let (failures, stats) = verify_all(&instances, |s| {
        let ads = &s.advertisers;
        let eq = equilibrium_bids(ads).map_err(|e| e.to_string())?;
        let report =
            verify_equilibrium(ads, &eq.bids, EQUILIBRIUM_TOL).map_err(|e| e.to_string())?;
        if !report.is_envy_free {
            return Err(format!(
                "deviation {:?} gains {}",
                report.worst_deviation, report.worst_violation
            ));
        }
        let social = social_revenue_bound(ads).map_err(|e| e.to_string())?;
        let gap = (report.total_revenue - social).abs();
        if gap > EXACT_TOL {
            return Err(format!(
                "total revenue {} vs social {social}",
                report.total_revenue
            ));
        }
        equilibrium_structure(ads, &eq.bids, &eq.order)?;
        Ok((report.worst_violation, gap))
    });
    let worst = max_of(&stats.iter().map(|s| s.0).collect::<Vec<_>>());
    let gap = max_of(&stats.iter().map(|s| s.1).collect::<Vec<_>>());
    result(
        7,
        "nash equilibrium",
        &failures,
        format!(
            "{} instances, worst deviation gain {worst:.3e}, max |revenue - social| {gap:.3e}",
            cfg.equilibrium_instances
        ),
    )
}

fn vcg_dominance(cfg: &CheckConfig) -> CheckResult {
    let instances = auction_batch(cfg, 8, default_abandonment());
    let (failures, margins) = verify_all(&instances, |s| {
        let bids = bids_of(s);
        let ce = run_ce_auction(&s.advertisers, bids).map_err(|e| e.to_string())?;
        let vcg =
            vcg_prices_in_order(&s.advertisers, bids, &ce.allocation).map_err(|e| e.to_string())?;
        let mut margin = f64::INFINITY;
        for (pos, (c, v)) in ce.prices.iter().zip(&vcg).enumerate() {
            margin = margin.min(c - v);
            if *c < v - EXACT_TOL {
                return Err(format!("position {pos}: CE {c} < VCG {v}"));
            }
        }
        Ok(margin)
    });
    result(
        8,
        "vcg revenue dominance",
        &failures,
        format!(
            "{} auctions, smallest p_ce - p_vcg {:.3e}",
            cfg.auction_instances,
            margins.iter().copied().fold(f64::INFINITY, f64::min)
        ),
    )
}

fn worked_pair() -> Result<(), String> {
    let ads = [
        Advertiser::new("a1", 10.0, 0.5, 0.5).map_err(|e| e.to_string())?,
        Advertiser::new("a2", 4.0, 0.3, 0.3).map_err(|e| e.to_string())?,
    ];
    let eq = vcg_equivalence_check(&ads).map_err(|e| e.to_string())?;
    if eq.equilibrium.bids.as_slice() != [10.0, 2.4] {
        return Err(format!("worked pair bids {:?}", eq.equilibrium.bids));
    }
    if eq.ce_prices[0] != 2.4 || eq.vcg_prices[0] != 2.4 {
        return Err(format!(
            "worked pair prices {} vs {}",
            eq.ce_prices[0], eq.vcg_prices[0]
        ));
    }
    Ok(())
}

fn revenue_equivalence(cfg: &CheckConfig) -> CheckResult {
    let instances = equilibrium_batch(cfg, 9);
    let (mut failures, diffs) = verify_all(&instances, |s| {
        let eq = vcg_equivalence_check(&s.advertisers).map_err(|e| e.to_string())?;
        if eq.max_abs_diff > EQUILIBRIUM_TOL {
            return Err(format!("price gap {}", eq.max_abs_diff));
        }
        Ok(eq.max_abs_diff)
    });
    if let Err(e) = worked_pair() {
        failures.push(e);
    }
    result(
        9,
        "revenue equivalence",
        &failures,
        format!(
            "{} instances, max |p_ce - p_vcg| {:.3e}; worked pair 2.4 = 2.4",
            cfg.equilibrium_instances,
            max_of(&diffs)
        ),
    )
}

fn monte_carlo(cfg: &CheckConfig) -> CheckResult {
    let spec = batch(ScenarioKind::Ranking, cfg.sim_rankings, cfg.seed_for(10));
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed_for(100));
    let cases: Vec<(Scenario, Vec<usize>)> = generate(&spec)
        .into_iter()
        .map(|s| {
            let mut order: Vec<usize> = (0..s.entities.len()).collect();
            order.shuffle(&mut rng);
            (s, order)
        })
        .collect();
    let trials = cfg.sim_trials;
    let t = trials as f64;
    let mut failures = Vec::new();
    let mut max_z: f64 = 0.0;
    for (n, (s, order)) in cases.iter().enumerate() {
        let outcome = (|| -> Result<f64, String> {
            let ranking = Ranking::new(&s.entities, order.clone()).map_err(|e| e.to_string())?;
            let analytic = expected_utility(&s.entities, &ranking)
                .map_err(|e| e.to_string())?
                .expected_utility;
            let seed = cfg.seed_for(1000 + n as u64);
            let est = estimate_expected_utility(&s.entities, &ranking, trials, seed)
                .map_err(|e| e.to_string())?;
            let diff = (est.mean_utility - analytic).abs();
            if diff > 4.0 * est.std_error {
                return Err(format!(
                    "mean {} vs analytic {analytic} (se {})",
                    est.mean_utility, est.std_error
                ));
            }
            for (p, (&f, &pc)) in est
                .per_position_click_freq
                .iter()
                .zip(ranking.click_probs())
                .enumerate()
            {
                if (f - pc).abs() > 4.0 * (pc * (1.0 - pc) / t).sqrt() {
                    return Err(format!("position {p}: click frequency {f} vs {pc}"));
                }
            }
            if n < 5 {
                let again = estimate_expected_utility(&s.entities, &ranking, trials, seed)
                    .map_err(|e| e.to_string())?;
                if again != est || again.mean_utility.to_bits() != est.mean_utility.to_bits() {
                    return Err("replay differs".into());
                }
            }
            Ok(if est.std_error > 0.0 {
                diff / est.std_error
            } else {
                0.0
            })
        })();
        match outcome {
            Ok(z) => max_z = max_z.max(z),
            Err(e) => failures.push(format!("ranking {n}: {e}")),
        }
    }
    result(
        10,
        "monte carlo consistency",
        &failures,
        format!(
            "{} rankings x {trials} trials, max |z| {max_z:.2}, replay bit-identical",
            cfg.sim_rankings
        ),
    )
}

fn named_graphs() -> Vec<(String, Vec<Vec<u8>>)> {
    let from_edges = |n: usize, edges: &[(usize, usize)]| {
        let mut adj = vec![vec![0u8; n]; n];
        for &(a, b) in edges {
            adj[a][b] = 1;
            adj[b][a] = 1;
        }
        adj
    };
    vec![
        ("K3".into(), from_edges(3, &[(0, 1), (1, 2), (0, 2)])),
        ("P3".into(), from_edges(3, &[(0, 1), (1, 2)])),
        (
            "C5".into(),
            from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]),
        ),
        ("edgeless4".into(), from_edges(4, &[])),
    ]
}

/// Name, adjacency, and the shared `(U, C, γ)` of the vertices.
type GraphCase = (String, Vec<Vec<u8>>, f64, f64, f64);

fn diversity_reduction(cfg: &CheckConfig) -> CheckResult {
    let mut graphs: Vec<GraphCase> = named_graphs()
        .into_iter()
        .map(|(name, adj)| (name, adj, 1.0, 0.5, 0.1))
        .collect();
    let spec = RandomInstanceSpec {
        utility: (0.5, 10.0),
        abandonment: AbandonmentModel::Fraction { lo: 0.0, hi: 0.9 },
        ..batch(ScenarioKind::Diversity, cfg.random_graphs, cfg.seed_for(11))
    };
    for (n, s) in generate(&spec).into_iter().enumerate() {
        let g = s.graph.expect("diversity batches are graph scenarios");
        graphs.push((
            format!("G{n}(n={})", g.adjacency.len()),
            g.adjacency,
            g.utility,
            g.click_prob,
            g.abandon_prob,
        ));
    }
    let outcomes: Vec<Result<(), String>> = graphs
        .par_iter()
        .map(|(name, adj, u, c, g)| {
            let err = |e: crate::error::Error| format!("{name}: {e}");
            let instance = instance_from_graph(adj, *u, *c, *g).map_err(err)?;
            let (best, value) = brute_force_diversity(&instance).map_err(err)?;
            let kept = nonzero_residual_set(&instance, best.order());
            let mis = max_independent_set_bruteforce(adj).map_err(err)?;
            if !kept.iter().all(|&i| kept.iter().all(|&j| adj[i][j] == 0)) {
                return Err(format!("{name}: nonzero set {kept:?} is not independent"));
            }
            if kept.len() != mis.len() {
                return Err(format!(
                    "{name}: nonzero set size {} vs independent set size {}",
                    kept.len(),
                    mis.len()
                ));
            }
            let (_, greedy) = greedy_diversity(&instance).map_err(err)?;
            if greedy > value + EXACT_TOL {
                return Err(format!("{name}: greedy {greedy} above optimum {value}"));
            }
            Ok(())
        })
        .collect();
    let failures: Vec<String> = outcomes.into_iter().filter_map(Result::err).collect();
    result(
        11,
        "diversity reduction",
        &failures,
        format!(
            "K3, P3, C5, edgeless and {} random graphs, n <= 8",
            cfg.random_graphs
        ),
    )
}

fn parse_csv_floats(text: &str) -> Result<Vec<Vec<Option<f64>>>, String> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .records()
        .map(|rec| {
            let rec = rec.map_err(|e| e.to_string())?;
            [2, 3, 4, 5]
                .iter()
                .map(|&col| match rec.get(col) {
                    Some("") | None => Ok(None),
                    Some(v) => v.parse::<f64>().map(Some).map_err(|e| e.to_string()),
                })
                .collect()
        })
        .collect()
}

/// Structured and tabular rendering both preserve every value, and rendering is deterministic.
fn check_report(report: &Report, again: &Report) -> Result<(), String> {
    let json = report.render(ReportFormat::Structured);
    if json != again.render(ReportFormat::Structured) {
        return Err(format!("{} report differs between runs", report.command));
    }
    let back: Report = serde_json::from_str(&json).map_err(|e| e.to_string())?;
    if &back != report {
        return Err(format!("{} report does not round-trip", report.command));
    }
    let csv = report.render(ReportFormat::Tabular);
    if csv != again.render(ReportFormat::Tabular) {
        return Err(format!("{} table differs between runs", report.command));
    }
    let rows = parse_csv_floats(&csv)?;
    if rows.len() != report.rows.len() {
        return Err(format!("{} table has {} rows", report.command, rows.len()));
    }
    for (r, parsed) in report.rows.iter().zip(rows) {
        let expect = [
            Some(r.score),
            r.price,
            Some(r.click_prob),
            Some(r.contribution),
        ];
        let same = expect.iter().zip(&parsed).all(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => a.to_bits() == b.to_bits(),
            (None, None) => true,
            _ => false,
        });
        if !same {
            return Err(format!(
                "{} table row {} loses precision",
                report.command, r.position
            ));
        }
    }
    Ok(())
}

fn reports_for(s: &Scenario) -> Result<Vec<Report>, String> {
    let e = |e: cli::CliError| e.to_string();
    Ok(match s.kind {
        ScenarioKind::Ranking => vec![
            cli::rank_report(s, RankingVariant::Ce, true).map_err(e)?,
            cli::simulate_report(s, RankingVariant::Ce, 1_000, 5).map_err(e)?,
            cli::compare_report(s).map_err(e)?,
        ],
        ScenarioKind::Auction => Mechanism::ALL
            .iter()
            .map(|&m| cli::auction_report(s, m).map_err(e))
            .chain(std::iter::once(cli::compare_report(s).map_err(e)))
            .collect::<Result<_, _>>()?,
        ScenarioKind::Equilibrium => {
            vec![cli::equilibrium_report(s, EQUILIBRIUM_TOL).map_err(e)?]
        }
        ScenarioKind::Diversity => vec![
            cli::diversity_report(s, Solver::Brute).map_err(e)?,
            cli::diversity_report(s, Solver::Greedy).map_err(e)?,
        ],
    })
}

fn round_trip(cfg: &CheckConfig) -> CheckResult {
    let kinds = [
        ScenarioKind::Ranking,
        ScenarioKind::Auction,
        ScenarioKind::Equilibrium,
        ScenarioKind::Diversity,
    ];
    let mut instances = Vec::new();
    for (slot, kind) in kinds.into_iter().enumerate() {
        instances.extend(generate(&batch(
            kind,
            cfg.roundtrip_instances,
            cfg.seed_for(120 + slot as u64),
        )));
    }
    let (failures, _) = verify_all(&instances, |s| {
        let text = s.to_toml_string();
        let back = Scenario::from_toml_str(&text).map_err(|e| e.to_string())?;
        if &back != s {
            return Err("scenario does not round-trip".into());
        }
        if back.to_toml_string() != text {
            return Err("scenario text is not stable".into());
        }
        for (a, b) in reports_for(s)?.iter().zip(reports_for(&back)?) {
            check_report(a, &b)?;
        }
        Ok(())
    });
    result(
        12,
        "round trip and determinism",
        &failures,
        format!(
            "{} scenarios across 4 kinds, reports in both formats",
            instances.len()
        ),
    )
}
