use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::detector::{DetectorContext, DetectorOutcome};
use super::encoder::{encode_a_with, encode_b_with, joint_counts, sample_index, type_index, ChannelTable, Encoding, Transcript};
use super::{BinningRealization, ProtocolConfig, ProtocolMode};
use crate::error::{argument, Result};
use crate::prob::unravel_into;
use crate::rng::{stream_rng, StreamRng};
use crate::types::Sequence;

/// Redraws of `f` allowed per trial before the trial counts as a rejection.
pub const MAX_RESAMPLES: u32 = 1000;

/// Empirical error rates of both detectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub n: u64,
    pub trials: u64,
    pub delta_prime: f64,
    pub mode: ProtocolMode,
    /// Type-I rate per detector, `P(decide 1 | null)`.
    pub alpha: [f64; 2],
    /// Type-II rate per detector, `P(decide 0 | alternative)`.
    pub beta: [f64; 2],
    pub alpha_stderr: [f64; 2],
    pub beta_stderr: [f64; 2],
    /// Total `f` redraws under the null and under the alternative.
    pub aborts: [u64; 2],
    /// Trials that exhausted [`MAX_RESAMPLES`], per hypothesis.
    pub exhausted: [u64; 2],
}

/// One delimited output row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub hypothesis: u8,
    pub detector: u8,
    pub n: u64,
    pub trials: u64,
    pub rate: f64,
    pub stderr: f64,
    pub aborts: u64,
}

impl ErrorReport {
    pub fn rows(&self) -> Vec<ErrorRow> {
        let mut rows = Vec::with_capacity(4);
        for h in 0..2u8 {
            for j in 0..2 {
                let (rate, stderr) = if h == 0 {
                    (self.alpha[j], self.alpha_stderr[j])
                } else {
                    (self.beta[j], self.beta_stderr[j])
                };
                rows.push(ErrorRow {
                    hypothesis: h,
                    detector: j as u8 + 1,
                    n: self.n,
                    trials: self.trials,
                    rate,
                    stderr,
                    aborts: self.aborts[h as usize],
                });
            }
        }
        rows
    }
}

/// Letters of `(X, Z1, Z2, S1, S2)` with positive mass; the alternative
/// leaves `S` at 0.
struct LetterTable {
    letters: Vec<[usize; 5]>,
    weights: Vec<f64>,
}

impl LetterTable {
    fn new(weights: &[f64], shape: &[usize]) -> Self {
        let mut letters = Vec::new();
        let mut kept = Vec::new();
        let mut at = vec![0usize; shape.len()];
        for (k, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                unravel_into(k, shape, &mut at);
                let mut l = [0usize; 5];
                l[..at.len()].copy_from_slice(&at);
                letters.push(l);
                kept.push(w);
            }
        }
        LetterTable { letters, weights: kept }
    }

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> [Vec<usize>; 5] {
        let mut out: [Vec<usize>; 5] = std::array::from_fn(|_| Vec::with_capacity(n));
        for _ in 0..n {
            let k = sample_index(&self.weights, rng).expect("source has positive mass");
            for (v, &s) in out.iter_mut().zip(&self.letters[k]) {
                v.push(s);
            }
        }
        out
    }
}

/// Shared read-only state of a batch of trials.
pub(crate) struct TrialEnv<'a> {
    pub cfg: &'a ProtocolConfig,
    pub bins: &'a BinningRealization,
    pub table: ChannelTable,
    detectors: [DetectorContext; 2],
    sources: [LetterTable; 2],
}

pub(crate) struct TrialRun {
    pub letters: [Vec<usize>; 5],
    pub encoding: Option<Encoding>,
    pub resamples: u32,
    pub outcomes: [DetectorOutcome; 2],
}

impl<'a> TrialEnv<'a> {
    pub fn new(cfg: &'a ProtocolConfig, bins: &'a BinningRealization) -> Result<Self> {
        cfg.validate()?;
        if bins.n() != cfg.n || bins.y_sizes() != cfg.y_sizes() {
            return Err(argument("binning realization does not match the configuration"));
        }
        for j in [1, 2] {
            let pairs = bins.max_detector_pairs(j);
            if pairs > cfg.enumeration_budget {
                return Err(crate::error::Error::Budget {
                    what: format!("detector {j} bucket pairs"),
                    count: pairs.to_string(),
                    budget: cfg.enumeration_budget,
                });
            }
        }
        Ok(TrialEnv {
            cfg,
            bins,
            table: ChannelTable::new(&cfg.chan),
            detectors: [DetectorContext::new(cfg, 1)?, DetectorContext::new(cfg, 2)?],
            sources: [
                LetterTable::new(cfg.source.weights(), &cfg.source.shape()),
                LetterTable::new(cfg.alt.weights(), &cfg.alt.shape()),
            ],
        })
    }

    /// Encodes `x` under the configured mode, redrawing `f` after aborts.
    pub fn encode(&self, x: &[usize], rng: &mut StreamRng) -> (Option<Encoding>, u32) {
        match self.cfg.mode {
            ProtocolMode::A => (Some(encode_a_with(&self.table, self.bins, x, rng)), 0),
            ProtocolMode::B => {
                let fb = self.bins.f_bins();
                for attempt in 0..=MAX_RESAMPLES {
                    let f = std::array::from_fn(|i| rng.random_range(0..fb[i]));
                    if let Ok(e) = encode_b_with(&self.table, self.bins, x, f, rng) {
                        return (Some(e), attempt);
                    }
                }
                (None, MAX_RESAMPLES)
            }
        }
    }

    /// Source letters and encoder output on stream `stream` of the seed.
    pub fn draw(&self, h: usize, stream: u64) -> ([Vec<usize>; 5], Option<Encoding>, u32) {
        let mut rng = stream_rng(self.cfg.seed, stream);
        let letters = self.sources[h].sample(self.cfg.n as usize, &mut rng);
        let (encoding, resamples) = self.encode(&letters[0], &mut rng);
        (letters, encoding, resamples)
    }

    /// Trial `k` under hypothesis `h` on its own stream.
    pub fn run(&self, h: usize, k: u64) -> TrialRun {
        let (letters, encoding, resamples) = self.draw(h, 2 * k + h as u64);
        let outcomes = match &encoding {
            Some(e) => {
                let counts = joint_counts(&letters[0], &self.table.y_sizes, &e.y_ranks, self.cfg.source.axes()[0].size);
                std::array::from_fn(|d| {
                    let j = d + 1;
                    self.detectors[d].decide(self.bins, &letters[j], [e.m[0], e.m[j]], [e.f[0], e.f[j]], &counts)
                })
            }
            None => std::array::from_fn(|_| DetectorOutcome {
                decision: 1,
                type_typical: false,
                witness_found: false,
                witness: None,
            }),
        };
        TrialRun {
            letters,
            encoding,
            resamples,
            outcomes,
        }
    }
}

/// Monte Carlo type-I and type-II rates of both detectors on one binning
/// realization. Trial `k` under hypothesis `h` uses stream `2k + h` of
/// `cfg.seed`, so results do not depend on the worker count.
pub fn estimate_errors(cfg: &ProtocolConfig, bins: &BinningRealization, trials: u64) -> Result<ErrorReport> {
    if trials == 0 {
        return Err(argument("trials must be at least 1"));
    }
    let env = TrialEnv::new(cfg, bins)?;
    let mut rejects = [[0u64; 2]; 2];
    let mut aborts = [0u64; 2];
    let mut exhausted = [0u64; 2];
    for h in 0..2 {
        let runs: Vec<([u8; 2], u32, bool)> = (0..trials)
            .into_par_iter()
            .map(|k| {
                let r = env.run(h, k);
                ([r.outcomes[0].decision, r.outcomes[1].decision], r.resamples, r.encoding.is_none())
            })
            .collect();
        for (d, resamples, failed) in runs {
            for j in 0..2 {
                rejects[h][j] += d[j] as u64;
            }
            aborts[h] += resamples as u64;
            exhausted[h] += failed as u64;
        }
    }
    let t = trials as f64;
    let rate = |c: u64| c as f64 / t;
    let se = |p: f64| (p * (1.0 - p) / t).sqrt();
    let alpha = [rate(rejects[0][0]), rate(rejects[0][1])];
    let beta = [rate(trials - rejects[1][0]), rate(trials - rejects[1][1])];
    Ok(ErrorReport {
        n: cfg.n,
        trials,
        delta_prime: cfg.delta_prime,
        mode: cfg.mode,
        alpha,
        beta,
        alpha_stderr: alpha.map(se),
        beta_stderr: beta.map(se),
        aborts,
        exhausted,
    })
}

/// Full transcripts of the first `trials` runs under hypothesis `h`, on the
/// same streams as [`estimate_errors`]. Runs that exhausted the `f`
/// redraws are left out.
pub fn simulate_transcripts(cfg: &ProtocolConfig, bins: &BinningRealization, h: u8, trials: u64) -> Result<Vec<Transcript>> {
    if h > 1 {
        return Err(argument("hypothesis must be 0 or 1"));
    }
    let env = TrialEnv::new(cfg, bins)?;
    let axes = cfg.source.axes();
    let runs: Vec<TrialRun> = (0..trials).into_par_iter().map(|k| env.run(h as usize, k)).collect();
    Ok(runs
        .into_iter()
        .filter_map(|r| {
            let e = r.encoding?;
            let seq = |axis: usize| Sequence::from_parts(axes[axis].clone(), r.letters[axis].clone());
            let x = seq(0);
            let y = |i: usize| {
                Sequence::from_rank(cfg.chan.to_axes()[i].clone(), cfg.n as usize, e.y_ranks[i])
            };
            Some(Transcript {
                type_index: type_index(cfg, &x, &e.y_ranks),
                z1: seq(1),
                z2: seq(2),
                s1: (h == 0).then(|| seq(3)),
                s2: (h == 0).then(|| seq(4)),
                y0: y(0),
                y1: y(1),
                y2: y(2),
                m: e.m,
                f: e.f,
                resamples: r.resamples,
                x,
            })
        })
        .collect())
}
