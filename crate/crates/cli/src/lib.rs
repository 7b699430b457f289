//! Batch front end for `gwht-core`: one TOML document per experiment,
//! six commands, JSON or CSV output.

pub mod config;
pub mod records;

use gwht_core::exponents::{check_binning_conditions, check_rate_region, check_tilde_region, privacy_bound, theta_star};
use gwht_core::osrb::{aleph_exponent, empirical_osrb_tv, exhaustive_osrb_tv, zeta_exponent, BinningSpec};
use gwht_core::prob::marginalize;
use gwht_core::protocol::{
    estimate_equivocation, estimate_errors, mode_distance, sample_binning,
};
use gwht_core::exponents::RateVector;
use rayon::prelude::*;
use thiserror::Error;

pub use config::{parse_experiment, Experiment, Issue, IssueCode, Overrides};
pub use records::{Format, Records};
use records::*;

/// Environment variable that replaces the default enumeration budget.
pub const BUDGET_ENV: &str = "GWHT_ENUM_BUDGET";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum Command {
    /// E0, E1, E2 and theta* for both detectors.
    Exponents,
    /// Rate, randomization-rate and binning-rate inequality margins.
    Region,
    /// Random-binning exponent against measured TV.
    Osrb,
    /// Monte Carlo type-I and type-II error rates.
    Simulate,
    /// Equivocation of both private attributes.
    Equivocation,
    /// Transcript distance between encoder modes A and B.
    Duality,
}

impl Command {
    pub fn needs_seed(self) -> bool {
        matches!(self, Command::Osrb | Command::Simulate | Command::Equivocation | Command::Duality)
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] gwht_core::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Format(String),
    #[error("{0}")]
    Usage(String),
}

/// Budget from [`BUDGET_ENV`], or the library default when unset.
pub fn budget_from_env() -> Result<u64, RunError> {
    match std::env::var(BUDGET_ENV) {
        Ok(v) => v
            .trim()
            .parse::<u64>()
            .ok()
            .filter(|&b| b > 0)
            .ok_or_else(|| RunError::Usage(format!("{BUDGET_ENV}={v} is not a positive integer"))),
        Err(_) => Ok(gwht_core::DEFAULT_ENUMERATION_BUDGET),
    }
}

/// Runs `command` over every sweep point. Points run in parallel; records
/// come back in sweep order.
pub fn run(command: Command, exp: &Experiment, budget: u64) -> Result<Records, RunError> {
    let mut exp = exp.clone();
    exp.base.enumeration_budget = budget;
    let exp = &exp;
    Ok(match command {
        Command::Exponents => Records::Exponents(per_point(exp, exponent_key(exp.finite_n), |p| exponents(exp, p))?),
        Command::Region => Records::Region(per_point(exp, |p| rates_key(&p.rates), |p| region(exp, p))?),
        Command::Osrb => Records::Osrb(osrb(exp, budget)?),
        Command::Simulate => Records::Simulate(per_point(exp, point_key, |p| simulate(exp, p))?),
        Command::Equivocation => {
            let mut e = exp.clone();
            e.points = exp.equivocation_points();
            Records::Equivocation(per_point(&e, point_key, |p| equivocation(&e, p))?)
        }
        Command::Duality => Records::Duality(per_point(exp, |p| rates_key(&p.rates).into_iter().chain([p.n]).collect(), |p| duality(exp, p))?),
    })
}

type Key = Vec<u64>;

fn rates_key(r: &RateVector) -> Key {
    [r.r0, r.r1, r.r2, r.rt0, r.rt1, r.rt2].iter().map(|v| v.to_bits()).collect()
}

fn point_key(p: &config::SweepPoint) -> Key {
    let mut k = rates_key(&p.rates);
    k.push(p.n);
    k.push(p.delta.at(p.n).to_bits());
    k
}

/// Blocklength matters only for the finite-n corrections.
fn exponent_key(finite_n: bool) -> impl Fn(&config::SweepPoint) -> Key {
    move |p| {
        let mut k = rates_key(&p.rates);
        if finite_n {
            k.push(p.n);
        }
        k
    }
}

/// Evaluates `f` once per distinct key, in first-seen order.
fn per_point<R: Send>(
    exp: &Experiment,
    key: impl Fn(&config::SweepPoint) -> Key,
    f: impl Fn(&config::SweepPoint) -> Result<Vec<R>, RunError> + Sync,
) -> Result<Vec<R>, RunError> {
    let mut seen = Vec::new();
    let mut points = Vec::new();
    for p in &exp.points {
        let k = key(p);
        if !seen.contains(&k) {
            seen.push(k);
            points.push(p);
        }
    }
    let per: Vec<Vec<R>> = points.par_iter().map(|p| f(p)).collect::<Result<_, _>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn r6(r: &RateVector) -> [f64; 6] {
    [r.r0, r.r1, r.r2, r.rt0, r.rt1, r.rt2]
}

fn exponents(exp: &Experiment, p: &config::SweepPoint) -> Result<Vec<ExponentRecord>, RunError> {
    let cfg = exp.config_at(p);
    let hyp = cfg.hypotheses()?;
    let n = exp.finite_n.then_some(p.n);
    let [r0, r1, r2, rt0, rt1, rt2] = r6(&p.rates);
    (1..=2)
        .map(|j| {
            let rep = theta_star(&hyp, &cfg.chan, &p.rates, j, n)?;
            Ok(ExponentRecord {
                n,
                r0,
                r1,
                r2,
                rt0,
                rt1,
                rt2,
                detector: j as u8,
                e0: rep.e0.value,
                e1: rep.e1.value,
                e2: rep.e2.value,
                theta_star: rep.theta_star,
                attained_by: rep.attained_by,
                e1_divergence: rep.e1.divergence,
                e2_divergence: rep.e2.divergence,
            })
        })
        .collect()
}

fn region(exp: &Experiment, p: &config::SweepPoint) -> Result<Vec<RegionRecord>, RunError> {
    let law = marginalize(&exp.base.source, &[0, 1, 2])?;
    let chan = &exp.base.chan;
    let mut blocks = vec![
        ("rate".to_string(), check_rate_region(&p.rates, &law, chan)?),
        ("tilde".to_string(), check_tilde_region(&p.rates, &law, chan)?),
    ];
    for j in 1..=2 {
        blocks.push((format!("binning{j}"), check_binning_conditions(&p.rates, &law, chan, j)?));
    }
    let [r0, r1, r2, rt0, rt1, rt2] = r6(&p.rates);
    Ok(blocks
        .into_iter()
        .flat_map(|(block, margins)| {
            margins.into_iter().map(move |m| RegionRecord {
                r0,
                r1,
                r2,
                rt0,
                rt1,
                rt2,
                block: block.clone(),
                label: m.label,
                lhs: m.lhs,
                rhs: m.rhs,
                margin: m.margin,
                satisfied: m.satisfied,
                interpreted: m.interpreted,
            })
        })
        .collect())
}

fn simulate(exp: &Experiment, p: &config::SweepPoint) -> Result<Vec<SimulationRecord>, RunError> {
    let cfg = exp.config_at(p);
    let bins = sample_binning(&cfg)?;
    let rep = estimate_errors(&cfg, &bins, exp.trials)?;
    let [r0, r1, r2, rt0, rt1, rt2] = r6(&p.rates);
    Ok(rep
        .rows()
        .into_iter()
        .map(|row| SimulationRecord {
            n: row.n,
            r0,
            r1,
            r2,
            rt0,
            rt1,
            rt2,
            delta_prime: rep.delta_prime,
            hypothesis: row.hypothesis,
            detector: row.detector,
            trials: row.trials,
            rate: row.rate,
            stderr: row.stderr,
            aborts: row.aborts,
            exhausted: rep.exhausted[row.hypothesis as usize],
        })
        .collect())
}

fn equivocation(exp: &Experiment, p: &config::SweepPoint) -> Result<Vec<EquivocationRecord>, RunError> {
    let cfg = exp.config_at(p);
    let bins = sample_binning(&cfg)?;
    let [r0, r1, r2, rt0, rt1, rt2] = r6(&p.rates);
    (1..=2)
        .map(|i| {
            let rep = estimate_equivocation(&cfg, &bins, i, exp.equivocation_mode, exp.equivocation_trials)?;
            Ok(EquivocationRecord {
                n: rep.n,
                r0,
                r1,
                r2,
                rt0,
                rt1,
                rt2,
                source: i as u8,
                mode: serde_json::to_value(rep.mode)?.as_str().unwrap_or_default().to_string(),
                value: rep.value,
                h_s: rep.h_s,
                privacy_bound: privacy_bound(&cfg.source, &cfg.chan, i)?,
                trials: rep.trials,
            })
        })
        .collect()
}

/// Histogram of `(m, f)` over the non-exhausted trials under the null.
/// Exact TV between the mode A and mode B transcript laws under one
/// binning drawn from the seed.
fn duality(exp: &Experiment, p: &config::SweepPoint) -> Result<Vec<DualityRecord>, RunError> {
    let cfg = exp.config_at(p);
    let bins = sample_binning(&cfg)?;
    let tv = mode_distance(&cfg, &bins)?;
    let [r0, r1, r2, rt0, rt1, rt2] = r6(&p.rates);
    Ok(vec![DualityRecord { n: p.n, r0, r1, r2, rt0, rt1, rt2, tv }])
}

fn join(v: impl IntoIterator<Item = impl ToString>) -> String {
    v.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}

/// One record per distinct blocklength of the sweep.
fn osrb(exp: &Experiment, budget: u64) -> Result<Vec<OsrbRecord>, RunError> {
    let o = exp
        .osrb
        .as_ref()
        .ok_or_else(|| RunError::Usage("the osrb command needs an [osrb] section".into()))?;
    let mut ns: Vec<u64> = Vec::new();
    for p in &exp.points {
        if !ns.contains(&p.n) {
            ns.push(p.n);
        }
    }
    let source = o.source()?;
    let seed = exp.base.seed;
    ns.par_iter()
        .map(|&n| {
            let spec = BinningSpec::new(o.rates.clone(), n)?;
            let zeta = zeta_exponent(&spec, &o.p_x, &o.chan)?;
            let aleph = match &o.side {
                Some((freq, xz)) => {
                    let z = config::OsrbSettings::z_type(freq, n)?;
                    Some(aleph_exponent(&spec, &z, xz, &o.chan)?.value)
                }
                None => None,
            };
            let m = empirical_osrb_tv(&spec, &source, o.trials, seed, budget)?;
            let exhaustive_tv = if o.exhaustive {
                Some(exhaustive_osrb_tv(&spec, &source, budget)?)
            } else {
                None
            };
            let (e, se) = (m.exponent(), m.exponent_stderr());
            Ok(OsrbRecord {
                n,
                rates: join(&o.rates),
                bins: join(&m.bins),
                trials: m.trials,
                mean_tv: m.mean_tv,
                stderr: m.stderr,
                measured_exponent: e,
                measured_exponent_stderr: se,
                zeta: zeta.value,
                zeta_negative: zeta.negative,
                aleph,
                exhaustive_tv,
                bound_holds: e >= zeta.value - 3.0 * se,
            })
        })
        .collect()
}
