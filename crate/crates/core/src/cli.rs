//! Command-line driver.
//!
//! Every subcommand turns a scenario into a [`Report`]. The report goes to
//! stdout, or to `--out` when given. Exit codes: 0 success, 1 a verification
//! verdict failed, 2 usage or schema error.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::checks::{self, CheckConfig};
use crate::diversity::{
    brute_force_diversity, greedy_diversity, max_independent_set_bruteforce, nonzero_residual_set,
    DiversityInstance,
};
use crate::equilibrium::{
    equilibrium_bids, vcg_equivalence_check, verify_equilibrium, DEFAULT_TOLERANCE,
};
use crate::mechanism::{
    pricing_weight, run_auction, run_ce_auction, vcg_prices_in_order, Advertiser, AuctionOutcome,
    BidVector, Mechanism,
};
use crate::model::{expected_utility, Entity, Ranking};
use crate::ranking::{brute_force_optimal, rank_by_variant, RankingVariant, BRUTE_FORCE_MAX};
use crate::scenario::{
    generate_instances, load_scenario, write_report, PositionRow, RandomInstanceSpec, Report,
    ReportFormat, Scenario, ScenarioError, ScenarioKind,
};
use crate::simulator::estimate_expected_utility;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Absolute slack for "equal within rounding" verdicts.
const EXACT_TOL: f64 = 1e-12;
const DEFAULT_TRIALS: u64 = 100_000;

#[derive(Debug, Parser)]
#[command(
    name = "ce-rank",
    version,
    about = "Click-efficiency ranking and ad auctions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Structured,
    Tabular,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Structured => ReportFormat::Structured,
            FormatArg::Tabular => ReportFormat::Tabular,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Solver {
    Brute,
    Greedy,
}

#[derive(Debug, Clone, Args)]
pub struct Output {
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "structured")]
    pub format: FormatArg,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank entities and report expected utility.
    Rank {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "ce")]
        variant: String,
        /// Taxonomy constant, overrides the scenario's `k`.
        #[arg(long)]
        k: Option<f64>,
        /// Also run the exhaustive search and report the gap.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        output: Output,
    },
    /// Run one auction mechanism on the scenario's bids.
    Auction {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "ce")]
        mechanism: Mechanism,
        #[command(flatten)]
        output: Output,
    },
    /// Equilibrium bids and envy-freeness, for one scenario or a random batch.
    Equilibrium {
        #[arg(long, required_unless_present = "batch")]
        scenario: Option<PathBuf>,
        /// Verify this many random instances instead of a scenario.
        #[arg(long, conflicts_with = "scenario")]
        batch: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
        tolerance: f64,
        #[command(flatten)]
        output: Output,
    },
    /// Monte-Carlo estimate of expected utility next to the analytic value.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "ce")]
        variant: String,
        #[arg(long)]
        k: Option<f64>,
        /// Defaults to the scenario's simulation block, then 100000.
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        output: Output,
    },
    /// Residual-utility ranking.
    Diversity {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "brute")]
        solver: Solver,
        #[command(flatten)]
        output: Output,
    },
    /// Side-by-side comparison of all variants, mechanisms or solvers.
    Compare {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        k: Option<f64>,
        #[command(flatten)]
        output: Output,
    },
    /// Run the property suite at reduced instance counts.
    Selfcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Model(#[from] crate::error::Error),
}

type CliResult<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli.command) {
        Ok((report, output)) => match emit(&report, output) {
            Ok(()) if report.passed() => EXIT_OK,
            Ok(()) => EXIT_VERIFICATION,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_USAGE
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}

fn emit(report: &Report, output: &Output) -> CliResult<()> {
    match &output.out {
        Some(path) => write_report(report, path, output.format.into())?,
        None => print!("{}", report.render(output.format.into())),
    }
    Ok(())
}

/// Builds the report for a parsed command without writing it anywhere.
pub fn execute(command: &Command) -> CliResult<(Report, &Output)> {
    let report = match command {
        Command::Rank {
            scenario,
            variant,
            k,
            oracle,
            output,
        } => {
            let s = load_kind(scenario, &[ScenarioKind::Ranking])?;
            let variant = parse_variant(variant, k.or(s.k))?;
            (rank_report(&s, variant, *oracle)?, output)
        }
        Command::Auction {
            scenario,
            mechanism,
            output,
        } => {
            let s = load_kind(scenario, &[ScenarioKind::Auction])?;
            (auction_report(&s, *mechanism)?, output)
        }
        Command::Equilibrium {
            scenario,
            batch,
            seed,
            tolerance,
            output,
        } => {
            if !(tolerance.is_finite() && *tolerance >= 0.0) {
                return Err(usage("--tolerance must be a nonnegative number"));
            }
            let report = match (scenario, batch) {
                (_, Some(n)) => equilibrium_batch_report(*n, *seed, *tolerance)?,
                (Some(path), None) => {
                    let s = load_kind(path, &[ScenarioKind::Equilibrium, ScenarioKind::Auction])?;
                    equilibrium_report(&s, *tolerance)?
                }
                (None, None) => return Err(usage("give --scenario or --batch")),
            };
            (report, output)
        }
        Command::Simulate {
            scenario,
            variant,
            k,
            trials,
            seed,
            output,
        } => {
            let s = load_kind(scenario, &[ScenarioKind::Ranking])?;
            let variant = parse_variant(variant, k.or(s.k))?;
            let trials = trials
                .or(s.simulation.as_ref().map(|b| b.trials))
                .unwrap_or(DEFAULT_TRIALS);
            let seed = seed.or(s.simulation.as_ref().map(|b| b.seed)).unwrap_or(0);
            (simulate_report(&s, variant, trials, seed)?, output)
        }
        Command::Diversity {
            scenario,
            solver,
            output,
        } => {
            let s = load_kind(scenario, &[ScenarioKind::Diversity])?;
            (diversity_report(&s, *solver)?, output)
        }
        Command::Compare {
            scenario,
            k,
            output,
        } => {
            let mut s = load_scenario(scenario)?;
            if k.is_some() {
                s.k = *k;
            }
            (compare_report(&s)?, output)
        }
        Command::Selfcheck { seed, output } => {
            let cfg = CheckConfig::reduced(*seed);
            let results = checks::run_all(&cfg);
            for r in &results {
                eprintln!("{r}");
            }
            (checks::summary_report(&cfg, &results), output)
        }
    };
    Ok(report)
}

fn load_kind(path: &PathBuf, kinds: &[ScenarioKind]) -> CliResult<Scenario> {
    let s = load_scenario(path)?;
    if !kinds.contains(&s.kind) {
        let names: Vec<String> = kinds
            .iter()
            .map(|k| format!("{k:?}").to_lowercase())
            .collect();
        return Err(usage(format!(
            "this subcommand needs a {} scenario, got {:?}",
            names.join(" or "),
            s.kind
        )));
    }
    Ok(s)
}

fn parse_variant(name: &str, k: Option<f64>) -> CliResult<RankingVariant> {
    RankingVariant::from_name(name, k).map_err(|e| usage(e.to_string()))
}

fn rows_for(
    ids: impl Fn(usize) -> String,
    order: &[usize],
    scores: &[f64],
    click: &[f64],
    contrib: &[f64],
    prices: Option<&[f64]>,
) -> Vec<PositionRow> {
    order
        .iter()
        .enumerate()
        .map(|(p, &idx)| PositionRow {
            position: p + 1,
            id: ids(idx),
            score: scores[idx],
            price: prices.map(|pr| pr[p]),
            click_prob: click[p],
            contribution: contrib[p],
        })
        .collect()
}

pub fn rank_report(s: &Scenario, variant: RankingVariant, oracle: bool) -> CliResult<Report> {
    let entities = &s.entities;
    let ranking = rank_by_variant(entities, variant)?;
    let utility = expected_utility(entities, &ranking)?;
    let scores: Vec<f64> = entities.iter().map(|e| variant.score(e)).collect();
    let mut report = Report::new("rank", variant.name());
    report.rows = rows_for(
        |i| entities[i].id().to_string(),
        ranking.order(),
        &scores,
        ranking.click_probs(),
        &utility.per_position_contribution,
        None,
    );
    report.metric("expected_utility", utility.expected_utility);
    report.metric("exhaustion_prob", ranking.exhaustion_probability());
    if oracle {
        let (best, value) = brute_force_optimal(entities)?;
        let gap = value - utility.expected_utility;
        report.metric("oracle_value", value);
        report.metric("oracle_gap", gap);
        report
            .notes
            .push(format!("oracle order: {}", ids(entities, best.order())));
        if matches!(variant, RankingVariant::Ce | RankingVariant::SocialOptimal) {
            report.verdict("matches_oracle", gap.abs() <= EXACT_TOL);
        }
    }
    Ok(report)
}

fn ids(entities: &[Entity], order: &[usize]) -> String {
    order
        .iter()
        .map(|&i| entities[i].id())
        .collect::<Vec<_>>()
        .join(" ")
}

fn ad_ids(ads: &[Advertiser], order: &[usize]) -> String {
    order
        .iter()
        .map(|&i| ads[i].id())
        .collect::<Vec<_>>()
        .join(" ")
}

fn ranking_key(mechanism: Mechanism, a: &Advertiser, bid: f64) -> f64 {
    match mechanism {
        Mechanism::Ce | Mechanism::Vcg => pricing_weight(a) * bid,
        Mechanism::Gsp => a.ctr() * bid,
        Mechanism::Overture => bid,
    }
}

fn outcome_rows(
    ads: &[Advertiser],
    outcome: &AuctionOutcome,
    score: impl Fn(usize) -> f64,
) -> Vec<PositionRow> {
    let scores: Vec<f64> = (0..ads.len()).map(score).collect();
    let contrib: Vec<f64> = outcome
        .prices
        .iter()
        .zip(&outcome.click_probs)
        .map(|(p, c)| p * c)
        .collect();
    rows_for(
        |i| ads[i].id().to_string(),
        &outcome.allocation,
        &scores,
        &outcome.click_probs,
        &contrib,
        Some(&outcome.prices),
    )
}

fn record_outcome(report: &mut Report, ads: &[Advertiser], bids: &BidVector, o: &AuctionOutcome) {
    report.metric("se_revenue", o.se_revenue);
    report.metric("total_revenue", o.total_revenue);
    let profits: f64 = o.advertiser_profits.iter().sum();
    report.metric("advertiser_profit_total", profits);
    for (a, p) in ads.iter().zip(&o.advertiser_profits) {
        report.metric(&format!("profit.{}", a.id()), *p);
    }
    let rational = o
        .allocation
        .iter()
        .zip(&o.prices)
        .all(|(&i, &p)| p <= bids.as_slice()[i]);
    report.verdict("individual_rationality", rational);
    report.verdict(
        "revenue_decomposition",
        (o.se_revenue + profits - o.total_revenue).abs() <= EXACT_TOL * o.total_revenue.max(1.0),
    );
}

pub fn auction_report(s: &Scenario, mechanism: Mechanism) -> CliResult<Report> {
    let ads = &s.advertisers;
    let bids = s
        .bids
        .as_ref()
        .ok_or_else(|| usage("auction scenario has no bids"))?;
    let outcome = run_auction(mechanism, ads, bids)?;
    let mut report = Report::new("auction", mechanism.name());
    report.rows = outcome_rows(ads, &outcome, |i| {
        ranking_key(mechanism, &ads[i], bids.as_slice()[i])
    });
    record_outcome(&mut report, ads, bids, &outcome);
    if mechanism == Mechanism::Ce {
        let vcg = vcg_prices_in_order(ads, bids, &outcome.allocation)?;
        let vcg_revenue: f64 = vcg
            .iter()
            .zip(&outcome.click_probs)
            .map(|(p, c)| p * c)
            .sum();
        for (p, v) in vcg.iter().enumerate() {
            report.metric(&format!("vcg_price.{:03}", p + 1), *v);
        }
        report.metric("vcg_se_revenue", vcg_revenue);
        report.verdict(
            "dominates_vcg",
            outcome
                .prices
                .iter()
                .zip(&vcg)
                .all(|(c, v)| *c >= v - EXACT_TOL),
        );
    }
    Ok(report)
}

pub fn equilibrium_report(s: &Scenario, tolerance: f64) -> CliResult<Report> {
    let ads = &s.advertisers;
    let eq = equilibrium_bids(ads)?;
    let check = verify_equilibrium(ads, &eq.bids, tolerance)?;
    let outcome = run_ce_auction(ads, &eq.bids)?;
    let vcg = vcg_equivalence_check(ads)?;
    let mut report = Report::new("equilibrium", "ce");
    report.rows = outcome_rows(ads, &outcome, |i| eq.bids.as_slice()[i]);
    report.metric("worst_violation", check.worst_violation);
    report.metric("tolerance", tolerance);
    report.metric("se_revenue", check.se_revenue);
    report.metric("total_revenue", check.total_revenue);
    report.metric("social_revenue", check.social_revenue);
    report.metric("vcg_truthful_revenue", check.vcg_truthful_revenue);
    report.metric("max_vcg_price_gap", vcg.max_abs_diff);
    report.verdict("envy_free", check.is_envy_free);
    report.verdict(
        "social_optimum",
        (check.total_revenue - check.social_revenue).abs()
            <= EXACT_TOL * check.social_revenue.max(1.0),
    );
    report.verdict("vcg_equivalent", vcg.max_abs_diff <= DEFAULT_TOLERANCE);
    if let Some((i, dev)) = check.worst_deviation {
        report
            .notes
            .push(format!("best deviation: {} {:?}", ads[i].id(), dev));
    }
    for p in &eq.tied_positions {
        report.notes.push(format!(
            "tie in v*c/mu between positions {} and {}; either order is an equilibrium",
            p + 1,
            p + 2
        ));
    }
    if let Some(bids) = &s.bids {
        let given = verify_equilibrium(ads, bids, tolerance)?;
        report.metric("scenario_bids_worst_violation", given.worst_violation);
        report
            .notes
            .push(format!("scenario bids envy-free: {}", given.is_envy_free));
    }
    Ok(report)
}

pub fn equilibrium_batch_report(count: usize, seed: u64, tolerance: f64) -> CliResult<Report> {
    let spec = RandomInstanceSpec::new(ScenarioKind::Equilibrium, count, seed);
    let mut report = Report::new("equilibrium", "batch");
    let mut passed = 0usize;
    let mut worst = 0.0f64;
    let mut max_gap = 0.0f64;
    for (n, s) in generate_instances(&spec)?.iter().enumerate() {
        let ads = &s.advertisers;
        let eq = equilibrium_bids(ads)?;
        let check = verify_equilibrium(ads, &eq.bids, tolerance)?;
        let gap = vcg_equivalence_check(ads)?.max_abs_diff;
        worst = worst.max(check.worst_violation);
        max_gap = max_gap.max(gap);
        if check.is_envy_free && gap <= DEFAULT_TOLERANCE {
            passed += 1;
        } else {
            report.notes.push(format!("instance {n} failed"));
        }
    }
    report.metric("instances", count as f64);
    report.metric("passed", passed as f64);
    report.metric("failed", (count - passed) as f64);
    report.metric("worst_violation", worst);
    report.metric("max_vcg_price_gap", max_gap);
    report.verdict("all_envy_free", passed == count);
    Ok(report)
}

pub fn simulate_report(
    s: &Scenario,
    variant: RankingVariant,
    trials: u64,
    seed: u64,
) -> CliResult<Report> {
    let entities = &s.entities;
    let ranking = rank_by_variant(entities, variant)?;
    let analytic = expected_utility(entities, &ranking)?;
    let est = estimate_expected_utility(entities, &ranking, trials, seed)?;
    let scores: Vec<f64> = entities.iter().map(|e| variant.score(e)).collect();
    let mut report = Report::new("simulate", variant.name());
    report.rows = rows_for(
        |i| entities[i].id().to_string(),
        ranking.order(),
        &scores,
        ranking.click_probs(),
        &analytic.per_position_contribution,
        None,
    );
    let diff = est.mean_utility - analytic.expected_utility;
    report.metric("analytic_utility", analytic.expected_utility);
    report.metric("simulated_utility", est.mean_utility);
    report.metric("std_error", est.std_error);
    report.metric("trials", trials as f64);
    report.metric("seed", seed as f64);
    if est.std_error > 0.0 {
        report.metric("z_score", diff / est.std_error);
    }
    report.verdict("within_4_std_errors", diff.abs() <= 4.0 * est.std_error);
    let t = trials as f64;
    let mut freq_ok = true;
    for (p, (&f, &pc)) in est
        .per_position_click_freq
        .iter()
        .zip(ranking.click_probs())
        .enumerate()
    {
        report.metric(&format!("click_freq.{:03}", p + 1), f);
        freq_ok &= (f - pc).abs() <= 4.0 * (pc * (1.0 - pc) / t).sqrt();
    }
    report.verdict("click_freq_within_4_sigma", freq_ok);
    Ok(report)
}

pub fn diversity_report(s: &Scenario, solver: Solver) -> CliResult<Report> {
    let instance = s.diversity_instance()?;
    let (ranking, value) = match solver {
        Solver::Brute => brute_force_diversity(&instance)?,
        Solver::Greedy => greedy_diversity(&instance)?,
    };
    let label = match solver {
        Solver::Brute => "brute",
        Solver::Greedy => "greedy",
    };
    let mut report = Report::new("diversity", label);
    diversity_rows(&mut report, &instance, &ranking);
    report.metric("objective", value);
    if solver == Solver::Greedy && instance.len() <= BRUTE_FORCE_MAX {
        let (_, best) = brute_force_diversity(&instance)?;
        report.metric("optimum", best);
        report.verdict("greedy_within_optimum", value <= best + EXACT_TOL);
    }
    if let Some(graph) = &s.graph {
        let mis = max_independent_set_bruteforce(&graph.adjacency)?;
        let kept = nonzero_residual_set(&instance, ranking.order());
        report.metric("max_independent_set_size", mis.len() as f64);
        report.metric("nonzero_residual_count", kept.len() as f64);
        report.notes.push(format!("max independent set: {mis:?}"));
        let reducible = graph.utility > 0.0
            && graph.click_prob > 0.0
            && graph.click_prob + graph.abandon_prob < 1.0;
        if solver == Solver::Brute && reducible {
            let independent = kept
                .iter()
                .all(|&i| kept.iter().all(|&j| graph.adjacency[i][j] == 0));
            let matched = independent && kept.len() == mis.len();
            report.verdict("independent_set_correspondence", matched);
            report.notes.push(format!(
                "correspondence: {}",
                if matched { "match" } else { "mismatch" }
            ));
        }
    }
    Ok(report)
}

fn diversity_rows(report: &mut Report, instance: &DiversityInstance, ranking: &Ranking) {
    let order = ranking.order();
    let residual = instance.residual_utilities(order);
    let mut scores = vec![0.0; order.len()];
    for (&idx, &u) in order.iter().zip(&residual) {
        scores[idx] = u;
    }
    let contrib: Vec<f64> = residual
        .iter()
        .zip(ranking.click_probs())
        .map(|(u, c)| u * c)
        .collect();
    let entities = instance.entities();
    report.rows = rows_for(
        |i| entities[i].id().to_string(),
        order,
        &scores,
        ranking.click_probs(),
        &contrib,
        None,
    );
}

pub fn compare_report(s: &Scenario) -> CliResult<Report> {
    let mut report = Report::new("compare", format!("{:?}", s.kind).to_lowercase());
    match s.kind {
        ScenarioKind::Ranking => {
            let mut ce_value = 0.0;
            for name in RankingVariant::NAMES {
                let variant = match RankingVariant::from_name(name, s.k) {
                    Ok(v) => v,
                    Err(_) => {
                        report
                            .notes
                            .push(format!("{name} skipped: needs k in (0, 1]"));
                        continue;
                    }
                };
                let ranking = rank_by_variant(&s.entities, variant)?;
                let value = expected_utility(&s.entities, &ranking)?.expected_utility;
                if variant == RankingVariant::Ce {
                    ce_value = value;
                    let rows = rank_report(s, variant, false)?.rows;
                    report.rows = rows;
                }
                report.metric(&format!("expected_utility.{name}"), value);
                report.notes.push(format!(
                    "{name} order: {}",
                    ids(&s.entities, ranking.order())
                ));
            }
            if s.entities.len() <= BRUTE_FORCE_MAX {
                let (_, best) = brute_force_optimal(&s.entities)?;
                report.metric("oracle_value", best);
                report.verdict("ce_optimal", (best - ce_value).abs() <= EXACT_TOL);
            }
        }
        ScenarioKind::Auction | ScenarioKind::Equilibrium => {
            let ads = &s.advertisers;
            let bids = match &s.bids {
                Some(b) => b.clone(),
                None => {
                    report
                        .notes
                        .push("no bids given; using truthful bids".into());
                    BidVector::truthful(ads)
                }
            };
            let mut revenue = [0.0; 4];
            for (slot, m) in Mechanism::ALL.iter().enumerate() {
                let o = run_auction(*m, ads, &bids)?;
                if *m == Mechanism::Ce {
                    report.rows =
                        outcome_rows(ads, &o, |i| ranking_key(*m, &ads[i], bids.as_slice()[i]));
                }
                revenue[slot] = o.se_revenue;
                report.metric(&format!("se_revenue.{}", m.name()), o.se_revenue);
                report.metric(&format!("total_revenue.{}", m.name()), o.total_revenue);
                report.notes.push(format!(
                    "{} allocation: {}",
                    m.name(),
                    ad_ids(ads, &o.allocation)
                ));
            }
            let ce = run_ce_auction(ads, &bids)?;
            let vcg = vcg_prices_in_order(ads, &bids, &ce.allocation)?;
            report.verdict(
                "ce_dominates_vcg",
                ce.prices.iter().zip(&vcg).all(|(c, v)| *c >= v - EXACT_TOL),
            );
            let social = crate::mechanism::social_revenue_bound(ads)?;
            report.metric("social_revenue", social);
        }
        ScenarioKind::Diversity => {
            let instance = s.diversity_instance()?;
            let (greedy_rank, greedy) = greedy_diversity(&instance)?;
            diversity_rows(&mut report, &instance, &greedy_rank);
            report.metric("objective.greedy", greedy);
            if instance.len() <= BRUTE_FORCE_MAX {
                let (_, best) = brute_force_diversity(&instance)?;
                report.metric("objective.brute", best);
                report.verdict("greedy_within_optimum", greedy <= best + EXACT_TOL);
            }
        }
    }
    Ok(report)
}
