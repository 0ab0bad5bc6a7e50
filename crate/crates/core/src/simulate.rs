//! Monte-Carlo conflicts under the equilibrium strategies.
//!
//! Draw `i` takes its two uniforms from a ChaCha8 stream positioned at
//! `4 i` words, so every draw depends only on `(seed, i)`. Draws are
//! aggregated in fixed-size chunks whose partial sums are combined in chunk
//! order; results are therefore bit-identical for any number of threads.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::general::IterationMode;
use crate::model::{ratio_payoff, ConflictRatios, Winner};
use crate::numerics::pairwise_sum;
use crate::strategy::{Method, StrategyPair};

const CHUNK: usize = 8192;
/// Two `f64` draws consume four 32-bit ChaCha words.
const WORDS_PER_DRAW: u128 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolutionSource {
    EqualClosedForm,
    GeneralIterated,
}

impl SolutionSource {
    pub fn method(self) -> Method {
        match self {
            SolutionSource::EqualClosedForm => Method::Equal,
            SolutionSource::GeneralIterated => Method::Iterate(IterationMode::Order2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub n_draws: u64,
    pub win_prob_1: f64,
    pub win_prob_2: f64,
    pub tie_prob: f64,
    pub mean_payoff_1: f64,
    pub mean_payoff_2: f64,
    /// Mean production taken by winners from losers.
    pub mean_transfer: f64,
    /// Mean of `beta (r1 - b1) + (r2 - b2)`.
    pub mean_total_production: f64,
    /// Largest per-draw `|w1 + w2 - production| / max(|production|, 1e-300)`.
    pub max_conservation_rel_error: f64,
    /// Fraction of draws where either bid is negative or exceeds its resource.
    pub infeasible_bid_rate: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub draw: u64,
    pub r1: f64,
    pub r2: f64,
    pub b1: f64,
    pub b2: f64,
    pub winner: Winner,
    pub w1: f64,
    pub w2: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    wins1: u64,
    wins2: u64,
    ties: u64,
    infeasible: u64,
    max_rel_err: f64,
}

impl Tally {
    fn merge(mut self, other: &Tally) -> Tally {
        self.wins1 += other.wins1;
        self.wins2 += other.wins2;
        self.ties += other.ties;
        self.infeasible += other.infeasible;
        self.max_rel_err = self.max_rel_err.max(other.max_rel_err);
        self
    }
}

struct Simulation {
    pair: StrategyPair,
    seed: u64,
    lo: f64,
}

impl Simulation {
    fn new(params: ConflictRatios, source: SolutionSource, seed: u64) -> Result<Self> {
        let (pair, _) = StrategyPair::solve(params, source.method())?;
        Ok(Self {
            lo: pair.r_min(),
            pair,
            seed,
        })
    }

    fn rng_at(&self, draw: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_word_pos(u128::from(draw) * WORDS_PER_DRAW);
        rng
    }

    fn draw(&self, rng: &mut ChaCha8Rng, index: u64) -> Result<TraceRow> {
        let span = 1.0 - self.lo;
        let r1 = self.lo + span * rng.gen::<f64>();
        let r2 = self.lo + span * rng.gen::<f64>();
        let (b1, _) = self.pair.eval(r1)?;
        let (_, b2) = self.pair.eval(r2)?;
        let out = ratio_payoff(r1, b1, r2, b2, &self.pair.ratios);
        Ok(TraceRow {
            draw: index,
            r1,
            r2,
            b1,
            b2,
            winner: out.winner,
            w1: out.w1,
            w2: out.w2,
        })
    }

    /// Per-draw payoff, transfer and production columns plus counters.
    fn chunk(&self, start: u64, len: usize) -> Result<(Tally, [f64; 4])> {
        let mut rng = self.rng_at(start);
        let ratios = &self.pair.ratios;
        let mut t = Tally::default();
        let mut cols: [Vec<f64>; 4] = Default::default();
        for c in cols.iter_mut() {
            c.reserve(len);
        }
        for k in 0..len as u64 {
            let row = self.draw(&mut rng, start + k)?;
            let kept1 = ratios.beta * (row.r1 - row.b1);
            let kept2 = row.r2 - row.b2;
            let production = kept1 + kept2;
            let transfer = match row.winner {
                Winner::Country1 => (1.0 - ratios.alpha) * kept2,
                Winner::Country2 => (1.0 - ratios.alpha) * kept1,
                Winner::Tie => 0.0,
            };
            match row.winner {
                Winner::Country1 => t.wins1 += 1,
                Winner::Country2 => t.wins2 += 1,
                Winner::Tie => t.ties += 1,
            }
            if row.b1 < 0.0 || row.b1 > row.r1 || row.b2 < 0.0 || row.b2 > row.r2 {
                t.infeasible += 1;
            }
            let err = (row.w1 + row.w2 - production).abs() / production.abs().max(1e-300);
            t.max_rel_err = t.max_rel_err.max(err);
            cols[0].push(row.w1);
            cols[1].push(row.w2);
            cols[2].push(transfer);
            cols[3].push(production);
        }
        let sums = [
            pairwise_sum(&cols[0]),
            pairwise_sum(&cols[1]),
            pairwise_sum(&cols[2]),
            pairwise_sum(&cols[3]),
        ];
        Ok((t, sums))
    }
}

/// Simulates `n` conflicts on the global thread pool.
pub fn simulate(params: ConflictRatios, source: SolutionSource, n: u64, seed: u64) -> Result<SimulationSummary> {
    simulate_with_threads(params, source, n, seed, 0)
}

/// As [`simulate`], on a dedicated pool of `threads` workers (0 = automatic).
pub fn simulate_with_threads(
    params: ConflictRatios,
    source: SolutionSource,
    n: u64,
    seed: u64,
    threads: usize,
) -> Result<SimulationSummary> {
    if n == 0 {
        return Err(domain("need at least one draw"));
    }
    let sim = Simulation::new(params, source, seed)?;
    let chunks: Vec<(u64, usize)> = (0..n)
        .step_by(CHUNK)
        .map(|start| (start, (n - start).min(CHUNK as u64) as usize))
        .collect();
    let run = || {
        chunks
            .par_iter()
            .map(|&(start, len)| sim.chunk(start, len))
            .collect::<Result<Vec<_>>>()
    };
    let parts = if threads == 0 {
        run()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(run)?
    };

    let tally = parts.iter().fold(Tally::default(), |acc, (t, _)| acc.merge(t));
    let column = |j: usize| pairwise_sum(&parts.iter().map(|(_, s)| s[j]).collect::<Vec<_>>());
    let nf = n as f64;
    Ok(SimulationSummary {
        n_draws: n,
        win_prob_1: tally.wins1 as f64 / nf,
        win_prob_2: tally.wins2 as f64 / nf,
        tie_prob: tally.ties as f64 / nf,
        mean_payoff_1: column(0) / nf,
        mean_payoff_2: column(1) / nf,
        mean_transfer: column(2) / nf,
        mean_total_production: column(3) / nf,
        max_conservation_rel_error: tally.max_rel_err,
        infeasible_bid_rate: tally.infeasible as f64 / nf,
        seed,
    })
}

/// Streams every draw as CSV (`draw,r1,r2,b1,b2,winner,w1,w2`). The rows
/// are the same draws [`simulate`] aggregates.
pub fn write_trace<W: Write>(
    params: ConflictRatios,
    source: SolutionSource,
    n: u64,
    seed: u64,
    out: W,
) -> Result<()> {
    let sim = Simulation::new(params, source, seed)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut rng = sim.rng_at(0);
    for i in 0..n {
        w.serialize(sim.draw(&mut rng, i)?)?;
    }
    w.flush()?;
    Ok(())
}
