//! Monte-Carlo replay of the cascade browsing model.
//!
//! Each trial gets its own ChaCha8 stream seeded from
//! `splitmix64(master_seed ^ splitmix64(trial_index))`, so trials can run in
//! any order and on any number of threads. Per-chunk partial sums are merged
//! in chunk order, which keeps estimates bit-identical across runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ClickParams, Entity, Ranking};

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Event {
    Clicked,
    Abandoned,
    Continued,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminal {
    ClickedAt(usize),
    AbandonedAt(usize),
    ExhaustedList,
}

/// Outcome of a single simulated session.
///
/// `events` holds one entry per viewed position, in order; every position
/// listed was viewed. A click or abandonment is always the last event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialTrace {
    pub events: Vec<(usize, Event)>,
    pub terminal: Terminal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationEstimate {
    pub mean_utility: f64,
    pub std_error: f64,
    pub trials: u64,
    pub per_position_click_freq: Vec<f64>,
}

/// Mixes a trial index into the master seed.
pub fn trial_seed(master_seed: u64, trial: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(trial))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Walks the list once. One uniform draw per viewed position, split as
/// `[0, C)` click, `[C, C+γ)` abandon, otherwise continue.
pub fn simulate_trial<R: Rng + ?Sized>(
    entities: &[Entity],
    ranking: &Ranking,
    rng: &mut R,
) -> TrialTrace {
    let mut events = Vec::new();
    for (pos, &idx) in ranking.order().iter().enumerate() {
        let e = &entities[idx];
        let u: f64 = rng.random();
        if u < e.click_prob() {
            events.push((pos, Event::Clicked));
            return TrialTrace {
                events,
                terminal: Terminal::ClickedAt(pos),
            };
        }
        if u < e.absorption() {
            events.push((pos, Event::Abandoned));
            return TrialTrace {
                events,
                terminal: Terminal::AbandonedAt(pos),
            };
        }
        events.push((pos, Event::Continued));
    }
    TrialTrace {
        events,
        terminal: Terminal::ExhaustedList,
    }
}

/// Position clicked in one trial, without recording the trace.
fn simulate_click<R: Rng>(entities: &[Entity], order: &[usize], rng: &mut R) -> Option<usize> {
    for (pos, &idx) in order.iter().enumerate() {
        let e = &entities[idx];
        let u: f64 = rng.random();
        if u < e.click_prob() {
            return Some(pos);
        }
        if u < e.absorption() {
            return None;
        }
    }
    None
}

#[derive(Clone)]
struct Partial {
    sum: f64,
    sum_sq: f64,
    clicks: Vec<u64>,
}

impl Partial {
    fn new(n: usize) -> Self {
        Self {
            sum: 0.0,
            sum_sq: 0.0,
            clicks: vec![0; n],
        }
    }
}

pub fn estimate_expected_utility(
    entities: &[Entity],
    ranking: &Ranking,
    trials: u64,
    master_seed: u64,
) -> Result<SimulationEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    if entities.len() != ranking.len() {
        return Err(Error::DimensionMismatch {
            expected: ranking.len(),
            found: entities.len(),
        });
    }
    let n = ranking.len();
    let order = ranking.order();
    let chunks = trials.div_ceil(CHUNK as u64);

    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * CHUNK as u64;
            let end = (start + CHUNK as u64).min(trials);
            let mut acc = Partial::new(n);
            for trial in start..end {
                let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, trial));
                if let Some(pos) = simulate_click(entities, order, &mut rng) {
                    let u = entities[order[pos]].utility();
                    acc.sum += u;
                    acc.sum_sq += u * u;
                    acc.clicks[pos] += 1;
                }
            }
            acc
        })
        .collect();

    let mut total = Partial::new(n);
    for p in &partials {
        total.sum += p.sum;
        total.sum_sq += p.sum_sq;
        for (t, c) in total.clicks.iter_mut().zip(&p.clicks) {
            *t += c;
        }
    }

    let t = trials as f64;
    let mean = total.sum / t;
    let std_error = if trials > 1 {
        let var = ((total.sum_sq - t * mean * mean) / (t - 1.0)).max(0.0);
        (var / t).sqrt()
    } else {
        0.0
    };
    Ok(SimulationEstimate {
        mean_utility: mean,
        std_error,
        trials,
        per_position_click_freq: total.clicks.iter().map(|&c| c as f64 / t).collect(),
    })
}
