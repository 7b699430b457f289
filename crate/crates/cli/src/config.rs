//! Experiment documents: parsing and validation.
//!
//! A document is TOML. Parsing is strict (unknown keys are rejected) and
//! stops at the first syntax or type error; semantic checks run after and
//! report every violation they find. The grammar is described in
//! `docs/config.md`.

use std::fmt;
use std::ops::Range;

use gwht_core::exponents::{RateVector, MARGINAL_TOLERANCE};
use gwht_core::prob::{Alphabet, CondPmf, JointPmf, Pmf};
use gwht_core::protocol::{EquivocationMode, ProtocolConfig, ProtocolMode};
use gwht_core::types::{default_delta_prime, NType};
use serde::{Deserialize, Serialize};
use toml::Spanned;

/// Accepted gap between a table's sum and 1. Tables that pass are
/// renormalized exactly before use.
pub const INPUT_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IssueCode {
    MarginalMismatch,
    Normalization,
    Range,
    Shape,
    MissingField,
    Parse,
}

impl IssueCode {
    pub fn as_str(self) -> &'static str {
        match self {
            IssueCode::MarginalMismatch => "MARGINAL_MISMATCH",
            IssueCode::Normalization => "NORMALIZATION",
            IssueCode::Range => "RANGE",
            IssueCode::Shape => "SHAPE",
            IssueCode::MissingField => "MISSING_FIELD",
            IssueCode::Parse => "PARSE",
        }
    }
}

impl fmt::Display for IssueCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One problem found in a document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub code: IssueCode,
    /// Dotted key path, empty when unknown.
    pub field: String,
    /// 1-based line of the offending value, when known.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code)?;
        if !self.field.is_empty() {
            write!(f, " {}", self.field)?;
        }
        if let Some(l) = self.line {
            write!(f, " (line {l})")?;
        }
        write!(f, ": {}", self.message)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDoc {
    seed: Option<Spanned<i64>>,
    mode: Option<Spanned<ProtocolMode>>,
    alphabets: Option<RawAlphabets>,
    laws: Option<RawLaws>,
    rates: Option<RawRates>,
    protocol: Option<RawProtocol>,
    sweep: Option<RawSweep>,
    exponents: Option<RawExponents>,
    equivocation: Option<RawEquivocation>,
    osrb: Option<RawOsrb>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAlphabets {
    x: Option<Spanned<i64>>,
    y: Option<Spanned<Vec<i64>>>,
    z: Option<Spanned<Vec<i64>>>,
    s: Option<Spanned<Vec<i64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLaws {
    null: Option<Spanned<Vec<f64>>>,
    alternative: Option<Spanned<Vec<f64>>>,
    channel: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRates {
    r: Option<Spanned<Vec<f64>>>,
    rt: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    n: Option<Spanned<i64>>,
    delta_c: Option<Spanned<f64>>,
    delta_prime: Option<Spanned<f64>>,
    trials: Option<Spanned<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRatePoint {
    r: Vec<f64>,
    rt: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    n: Option<Spanned<Vec<i64>>>,
    rates: Option<Spanned<Vec<RawRatePoint>>>,
    delta_c: Option<Spanned<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawExponents {
    finite_n: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEquivocation {
    mode: Option<EquivocationMode>,
    n: Option<Spanned<Vec<i64>>>,
    trials: Option<Spanned<i64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOsrb {
    p_x: Option<Spanned<Vec<f64>>>,
    y_sizes: Option<Spanned<Vec<i64>>>,
    channel: Option<Spanned<Vec<f64>>>,
    rates: Option<Spanned<Vec<f64>>>,
    trials: Option<Spanned<i64>>,
    exhaustive: Option<bool>,
    z_freq: Option<Spanned<Vec<f64>>>,
    x_given_z: Option<Spanned<Vec<f64>>>,
}

/// Command-line values that replace document fields.
#[derive(Clone, Copy, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    /// Whether the command draws randomness, making `seed` mandatory.
    pub needs_seed: bool,
}

/// How `delta_prime` follows the blocklength.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaRule {
    Fixed(f64),
    /// `c * n^{-1/3}`.
    Schedule(f64),
}

impl DeltaRule {
    pub fn at(self, n: u64) -> f64 {
        match self {
            DeltaRule::Fixed(d) => d,
            DeltaRule::Schedule(c) => default_delta_prime(n, c),
        }
    }
}

/// One point of the parameter grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub n: u64,
    pub rates: RateVector,
    pub delta: DeltaRule,
}

/// Random-binning experiment on its own source.
#[derive(Clone, Debug, PartialEq)]
pub struct OsrbSettings {
    pub p_x: Pmf,
    /// `p(y_1, ..., y_T | x)`.
    pub chan: CondPmf,
    pub rates: Vec<f64>,
    pub trials: u64,
    pub exhaustive: bool,
    /// Side information for the conditional exponent: type frequencies and
    /// `p(x | z)`.
    pub side: Option<(Vec<f64>, CondPmf)>,
}

impl OsrbSettings {
    /// Law of `(Y_1, ..., Y_T, X)`.
    pub fn source(&self) -> gwht_core::Result<JointPmf> {
        let joint = gwht_core::prob::compose(self.p_x.as_joint(), &self.chan, &[0])?;
        let t = self.chan.to_axes().len();
        let order: Vec<usize> = (1..=t).chain([0]).collect();
        joint.permute(&order)
    }

    /// The `n`-type of the side sequence nearest to `freq`: floors, then
    /// the remainder goes to the largest fractional parts (lowest index on
    /// ties).
    pub fn z_type(freq: &[f64], n: u64) -> gwht_core::Result<NType> {
        let scaled: Vec<f64> = freq.iter().map(|f| f * n as f64).collect();
        let mut counts: Vec<u64> = scaled.iter().map(|v| v.floor() as u64).collect();
        let mut rest = n - counts.iter().sum::<u64>().min(n);
        let mut order: Vec<usize> = (0..freq.len()).collect();
        order.sort_by(|&a, &b| {
            let fa = scaled[a] - scaled[a].floor();
            let fb = scaled[b] - scaled[b].floor();
            fb.total_cmp(&fa).then(a.cmp(&b))
        });
        for &k in order.iter().cycle() {
            if rest == 0 {
                break;
            }
            counts[k] += 1;
            rest -= 1;
        }
        NType::new(Alphabet::new("Z", freq.len())?, counts)
    }
}

/// A validated document.
#[derive(Clone, Debug, PartialEq)]
pub struct Experiment {
    /// Configuration at the document's own `n`, rates and slack.
    pub base: ProtocolConfig,
    pub delta: DeltaRule,
    pub trials: u64,
    pub points: Vec<SweepPoint>,
    pub finite_n: bool,
    pub equivocation_mode: EquivocationMode,
    pub equivocation_trials: u64,
    /// Blocklengths for the equivocation command; the sweep's when `None`.
    pub equivocation_n: Option<Vec<u64>>,
    pub osrb: Option<OsrbSettings>,
}

impl Experiment {
    /// Sweep points of the equivocation command: the grid with `n`
    /// replaced by `equivocation_n` when given.
    pub fn equivocation_points(&self) -> Vec<SweepPoint> {
        let Some(ns) = &self.equivocation_n else {
            return self.points.clone();
        };
        let mut out = Vec::new();
        for &n in ns {
            for p in &self.points {
                let q = SweepPoint { n, ..p.clone() };
                if !out.contains(&q) {
                    out.push(q);
                }
            }
        }
        out
    }

    /// The base configuration moved to a sweep point.
    pub fn config_at(&self, p: &SweepPoint) -> ProtocolConfig {
        ProtocolConfig {
            n: p.n,
            rates: p.rates,
            delta_prime: p.delta.at(p.n),
            ..self.base.clone()
        }
    }
}

struct Checker<'a> {
    src: &'a str,
    issues: Vec<Issue>,
}

fn line_of(src: &str, span: Range<usize>) -> usize {
    src[..span.start.min(src.len())].matches('\n').count() + 1
}

impl Checker<'_> {
    fn push(&mut self, code: IssueCode, field: &str, span: Option<Range<usize>>, message: impl Into<String>) {
        let line = span.map(|s| line_of(self.src, s));
        self.issues.push(Issue {
            code,
            field: field.into(),
            line,
            message: message.into(),
        });
    }

    fn missing(&mut self, field: &str) {
        self.push(IssueCode::MissingField, field, None, "required field is absent");
    }

    fn require<'v, T>(&mut self, v: &'v Option<T>, field: &str) -> Option<&'v T> {
        if v.is_none() {
            self.missing(field);
        }
        v.as_ref()
    }

    fn positive_int(&mut self, v: &Spanned<i64>, field: &str) -> Option<u64> {
        if *v.get_ref() >= 1 {
            Some(*v.get_ref() as u64)
        } else {
            self.push(IssueCode::Range, field, Some(v.span()), format!("{} must be at least 1", v.get_ref()));
            None
        }
    }

    fn sizes(&mut self, v: &Spanned<Vec<i64>>, field: &str, len: Option<usize>) -> Option<Vec<usize>> {
        if let Some(len) = len {
            if v.get_ref().len() != len {
                let msg = format!("expected {len} entries, found {}", v.get_ref().len());
                self.push(IssueCode::Shape, field, Some(v.span()), msg);
                return None;
            }
        }
        if v.get_ref().is_empty() {
            self.push(IssueCode::Shape, field, Some(v.span()), "list is empty");
            return None;
        }
        if let Some(bad) = v.get_ref().iter().find(|&&s| s < 1) {
            self.push(IssueCode::Range, field, Some(v.span()), format!("size {bad} must be at least 1"));
            return None;
        }
        Some(v.get_ref().iter().map(|&s| s as usize).collect())
    }

    fn rates(&mut self, v: &[f64], span: Range<usize>, field: &str) -> Option<[f64; 3]> {
        if v.len() != 3 {
            self.push(IssueCode::Shape, field, Some(span), format!("expected 3 rates, found {}", v.len()));
            return None;
        }
        if let Some(bad) = v.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            self.push(IssueCode::Range, field, Some(span), format!("rate {bad} must be finite and non-negative"));
            return None;
        }
        Some([v[0], v[1], v[2]])
    }

    /// Checks `rows` blocks of `width` entries, each a pmf, and returns the
    /// renormalized table.
    fn table(&mut self, v: &Spanned<Vec<f64>>, field: &str, rows: usize, width: usize) -> Option<Vec<f64>> {
        let w = v.get_ref();
        let span = v.span();
        if w.len() != rows * width {
            let msg = format!("expected {} entries ({rows} x {width}), found {}", rows * width, w.len());
            self.push(IssueCode::Shape, field, Some(span), msg);
            return None;
        }
        if let Some((i, bad)) = w.iter().enumerate().find(|(_, x)| !(x.is_finite() && **x >= 0.0)) {
            self.push(IssueCode::Range, field, Some(span), format!("entry {i} = {bad} is negative or not finite"));
            return None;
        }
        let mut out = Vec::with_capacity(w.len());
        let mut ok = true;
        for (r, row) in w.chunks(width).enumerate() {
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > INPUT_TOLERANCE {
                let which = if rows == 1 { String::new() } else { format!("row {r} ") };
                self.push(IssueCode::Normalization, field, Some(span.clone()), format!("{which}sums to {sum}"));
                ok = false;
            }
            out.extend(row.iter().map(|x| x / sum));
        }
        ok.then_some(out)
    }
}

fn axes(labels: &[&str], sizes: &[usize]) -> Vec<Alphabet> {
    labels
        .iter()
        .zip(sizes)
        .map(|(l, &s)| Alphabet::new(*l, s).expect("sizes checked"))
        .collect()
}

/// Parses and validates a document.
pub fn parse_experiment(src: &str, ov: Overrides) -> Result<Experiment, Vec<Issue>> {
    let raw: RawDoc = toml::from_str(src).map_err(|e| {
        vec![Issue {
            code: IssueCode::Parse,
            field: String::new(),
            line: e.span().map(|s| line_of(src, s)),
            message: e.message().trim().to_string(),
        }]
    })?;
    let mut c = Checker { src, issues: Vec::new() };
    let exp = check(&mut c, raw, ov);
    match exp {
        Some(e) if c.issues.is_empty() => Ok(e),
        _ => Err(c.issues),
    }
}

fn check(c: &mut Checker, raw: RawDoc, ov: Overrides) -> Option<Experiment> {
    let seed = match (ov.seed, &raw.seed) {
        (Some(s), _) => Some(s),
        (None, Some(s)) if *s.get_ref() >= 0 => Some(*s.get_ref() as u64),
        (None, Some(s)) => {
            c.push(IssueCode::Range, "seed", Some(s.span()), "seed must be non-negative");
            None
        }
        (None, None) => {
            if ov.needs_seed {
                c.missing("seed");
            }
            Some(0)
        }
    };
    let mode = raw.mode.map(|m| m.into_inner()).unwrap_or_default();

    // Alphabet sizes.
    let alph = c.require(&raw.alphabets, "alphabets");
    let (mut x, mut y, mut z, mut s) = (None, None, None, None);
    if let Some(a) = alph {
        x = c.require(&a.x, "alphabets.x").and_then(|v| c.positive_int(v, "alphabets.x")).map(|v| v as usize);
        y = c.require(&a.y, "alphabets.y").and_then(|v| c.sizes(v, "alphabets.y", Some(3)));
        z = c.require(&a.z, "alphabets.z").and_then(|v| c.sizes(v, "alphabets.z", Some(2)));
        s = c.require(&a.s, "alphabets.s").and_then(|v| c.sizes(v, "alphabets.s", Some(2)));
    }

    // Laws.
    let laws = c.require(&raw.laws, "laws");
    let (mut null, mut alt, mut chan) = (None, None, None);
    if let (Some(l), Some(x), Some(y), Some(z), Some(s)) = (laws, x, &y, &z, &s) {
        let null_axes = axes(&["X", "Z1", "Z2", "S1", "S2"], &[x, z[0], z[1], s[0], s[1]]);
        let alt_axes = axes(&["X", "Z1", "Z2"], &[x, z[0], z[1]]);
        let width: usize = null_axes.iter().map(|a| a.size).product();
        if let Some(v) = c.require(&l.null, "laws.null") {
            null = c.table(v, "laws.null", 1, width).map(|w| (JointPmf::new(null_axes, w), v.span()));
        }
        if let Some(v) = c.require(&l.alternative, "laws.alternative") {
            let width = alt_axes.iter().map(|a| a.size).product();
            alt = c.table(v, "laws.alternative", 1, width).map(|w| (JointPmf::new(alt_axes, w), v.span()));
        }
        if let Some(v) = c.require(&l.channel, "laws.channel") {
            let width = y.iter().product();
            chan = c
                .table(v, "laws.channel", x, width)
                .map(|w| CondPmf::new(axes(&["X"], &[x]), axes(&["Y0", "Y1", "Y2"], y), w));
        }
    } else if let Some(l) = laws {
        for (v, f) in [(&l.null, "laws.null"), (&l.alternative, "laws.alternative"), (&l.channel, "laws.channel")] {
            c.require(v, f);
        }
    }
    let null = null.and_then(|(p, span)| match p {
        Ok(p) => Some((p, span)),
        Err(e) => {
            c.push(IssueCode::Normalization, "laws.null", Some(span), e.to_string());
            None
        }
    });
    let alt = alt.and_then(|(p, span)| match p {
        Ok(p) => Some((p, span)),
        Err(e) => {
            c.push(IssueCode::Normalization, "laws.alternative", Some(span), e.to_string());
            None
        }
    });
    let chan = chan.and_then(|p| match p {
        Ok(p) => Some(p),
        Err(e) => {
            c.push(IssueCode::Normalization, "laws.channel", None, e.to_string());
            None
        }
    });
    if let (Some((p, _)), Some((q, span))) = (&null, &alt) {
        let px = gwht_core::prob::marginalize(p, &[0]).ok()?;
        let qx = gwht_core::prob::marginalize(q, &[0]).ok()?;
        let gap = px.weights().iter().zip(qx.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if gap > MARGINAL_TOLERANCE {
            c.push(
                IssueCode::MarginalMismatch,
                "laws.alternative",
                Some(span.clone()),
                format!("X marginal differs from the null's by {gap:e}"),
            );
        }
    }

    // Rates.
    let rates = c.require(&raw.rates, "rates").and_then(|r| {
        let a = c.require(&r.r, "rates.r").and_then(|v| c.rates(v.get_ref(), v.span(), "rates.r"));
        let b = c.require(&r.rt, "rates.rt").and_then(|v| c.rates(v.get_ref(), v.span(), "rates.rt"));
        Some(RateVector::new(a?, b?).expect("rates checked"))
    });

    // Protocol parameters.
    let proto = c.require(&raw.protocol, "protocol");
    let (mut n, mut delta, mut trials) = (None, None, None);
    if let Some(p) = proto {
        n = c.require(&p.n, "protocol.n").and_then(|v| c.positive_int(v, "protocol.n"));
        delta = match (&p.delta_c, &p.delta_prime) {
            (Some(d), None) if *d.get_ref() > 0.0 => Some(DeltaRule::Schedule(*d.get_ref())),
            (None, Some(d)) if *d.get_ref() > 0.0 => Some(DeltaRule::Fixed(*d.get_ref())),
            (Some(a), Some(_)) => {
                c.push(IssueCode::Range, "protocol.delta_c", Some(a.span()), "give delta_c or delta_prime, not both");
                None
            }
            (None, None) => {
                c.missing("protocol.delta_c");
                None
            }
            (Some(d), _) | (_, Some(d)) => {
                c.push(IssueCode::Range, "protocol.delta_c", Some(d.span()), "slack must be positive");
                None
            }
        };
        trials = match (ov.trials, &p.trials) {
            (Some(t), _) if t >= 1 => Some(t),
            (Some(_), _) => {
                c.push(IssueCode::Range, "--trials", None, "trials must be at least 1");
                None
            }
            (None, Some(v)) => c.positive_int(v, "protocol.trials"),
            (None, None) => Some(10_000),
        };
    }

    // Sweep grid.
    let mut ns = n.map(|n| vec![n]);
    let mut rate_points = rates.map(|r| vec![r]);
    let mut deltas = delta.map(|d| vec![d]);
    if let Some(sw) = &raw.sweep {
        if let Some(v) = &sw.n {
            ns = if v.get_ref().is_empty() {
                c.push(IssueCode::Shape, "sweep.n", Some(v.span()), "sweep grid is empty");
                None
            } else {
                let vals: Vec<Option<u64>> = v
                    .get_ref()
                    .iter()
                    .map(|&k| c.positive_int(&Spanned::new(v.span(), k), "sweep.n"))
                    .collect();
                vals.into_iter().collect()
            };
        }
        if let Some(v) = &sw.rates {
            rate_points = if v.get_ref().is_empty() {
                c.push(IssueCode::Shape, "sweep.rates", Some(v.span()), "sweep grid is empty");
                None
            } else {
                let vals: Vec<Option<RateVector>> = v
                    .get_ref()
                    .iter()
                    .map(|p| {
                        let a = c.rates(&p.r, v.span(), "sweep.rates.r");
                        let b = c.rates(&p.rt, v.span(), "sweep.rates.rt");
                        Some(RateVector::new(a?, b?).expect("rates checked"))
                    })
                    .collect();
                vals.into_iter().collect()
            };
        }
        if let Some(v) = &sw.delta_c {
            deltas = if v.get_ref().is_empty() {
                c.push(IssueCode::Shape, "sweep.delta_c", Some(v.span()), "sweep grid is empty");
                None
            } else if let Some(bad) = v.get_ref().iter().find(|d| !(**d > 0.0 && d.is_finite())) {
                c.push(IssueCode::Range, "sweep.delta_c", Some(v.span()), format!("slack {bad} must be positive"));
                None
            } else {
                Some(v.get_ref().iter().map(|&d| DeltaRule::Schedule(d)).collect())
            };
        }
    }

    let finite_n = raw.exponents.as_ref().and_then(|e| e.finite_n).unwrap_or(false);
    let (equivocation_mode, equivocation_trials) = match &raw.equivocation {
        Some(e) => {
            let t = match (ov.trials, &e.trials) {
                (Some(t), _) => Some(t.max(1)),
                (None, Some(v)) => c.positive_int(v, "equivocation.trials"),
                (None, None) => Some(10_000),
            };
            (e.mode.unwrap_or_default(), t)
        }
        None => (EquivocationMode::default(), Some(ov.trials.unwrap_or(10_000).max(1))),
    };
    let equivocation_n = match raw.equivocation.as_ref().and_then(|e| e.n.as_ref()) {
        Some(v) if v.get_ref().is_empty() => {
            c.push(IssueCode::Shape, "equivocation.n", Some(v.span()), "list is empty");
            None
        }
        Some(v) => {
            let vals: Vec<Option<u64>> = v
                .get_ref()
                .iter()
                .map(|&k| c.positive_int(&Spanned::new(v.span(), k), "equivocation.n"))
                .collect();
            vals.into_iter().collect::<Option<Vec<u64>>>().map(Some)
        }
        None => Some(None),
    };
    let osrb = raw.osrb.as_ref().and_then(|o| check_osrb(c, o, ov));

    // Everything below needs the pieces above.
    let (null, alt, chan, rates, n, delta) = (null?.0, alt?.0, chan?, rates?, n?, delta?);
    let base = ProtocolConfig {
        source: null,
        alt,
        chan,
        rates,
        n,
        delta_prime: delta.at(n),
        seed: seed?,
        mode,
        enumeration_budget: gwht_core::DEFAULT_ENUMERATION_BUDGET,
    };
    let mut points = Vec::new();
    for &n in &ns? {
        for r in rate_points.as_ref()? {
            for &d in deltas.as_ref()? {
                points.push(SweepPoint {
                    n,
                    rates: *r,
                    delta: d,
                });
            }
        }
    }
    Some(Experiment {
        base,
        delta,
        trials: trials?,
        points,
        finite_n,
        equivocation_mode,
        equivocation_trials: equivocation_trials?,
        equivocation_n: equivocation_n?,
        osrb: if raw.osrb.is_some() { Some(osrb?) } else { None },
    })
}

fn check_osrb(c: &mut Checker, o: &RawOsrb, ov: Overrides) -> Option<OsrbSettings> {
    let p_x = c.require(&o.p_x, "osrb.p_x").and_then(|v| {
        let k = v.get_ref().len().max(1);
        c.table(v, "osrb.p_x", 1, k)
    });
    let y_sizes = c.require(&o.y_sizes, "osrb.y_sizes").and_then(|v| c.sizes(v, "osrb.y_sizes", None));
    let rates = c.require(&o.rates, "osrb.rates").and_then(|v| {
        if let Some(ys) = &y_sizes {
            if v.get_ref().len() != ys.len() {
                let msg = format!("expected {} rates, found {}", ys.len(), v.get_ref().len());
                c.push(IssueCode::Shape, "osrb.rates", Some(v.span()), msg);
                return None;
            }
        }
        if let Some(bad) = v.get_ref().iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            c.push(IssueCode::Range, "osrb.rates", Some(v.span()), format!("rate {bad} must be finite and non-negative"));
            return None;
        }
        Some(v.get_ref().clone())
    });
    let chan = match (c.require(&o.channel, "osrb.channel"), &p_x, &y_sizes) {
        (Some(v), Some(px), Some(ys)) => c.table(v, "osrb.channel", px.len(), ys.iter().product()).map(|w| {
            let labels: Vec<String> = (1..=ys.len()).map(|i| format!("Y{i}")).collect();
            let to = labels.iter().zip(ys).map(|(l, &s)| Alphabet::new(l.as_str(), s).expect("checked")).collect();
            CondPmf::new(axes(&["X"], &[px.len()]), to, w).expect("checked")
        }),
        _ => None,
    };
    let trials = match (ov.trials, &o.trials) {
        (Some(t), _) => Some(t.max(1)),
        (None, Some(v)) => c.positive_int(v, "osrb.trials"),
        (None, None) => Some(2000),
    };
    let side = match (&o.z_freq, &o.x_given_z) {
        (None, None) => Some(None),
        (Some(f), Some(xz)) => {
            let freq = c.table(f, "osrb.z_freq", 1, f.get_ref().len().max(1));
            let rows = match (&freq, &p_x) {
                (Some(fr), Some(px)) => c.table(xz, "osrb.x_given_z", fr.len(), px.len()),
                _ => None,
            };
            match (freq, rows, &p_x) {
                (Some(fr), Some(rows), Some(px)) => {
                    let k = fr.len();
                    let cond = CondPmf::new(axes(&["Z"], &[k]), axes(&["X"], &[px.len()]), rows).expect("checked");
                    Some(Some((fr, cond)))
                }
                _ => None,
            }
        }
        (Some(_), None) => {
            c.missing("osrb.x_given_z");
            None
        }
        (None, Some(_)) => {
            c.missing("osrb.z_freq");
            None
        }
    };
    let p_x = Pmf::new(Alphabet::new("X", p_x.as_ref()?.len()).ok()?, p_x?).ok()?;
    Some(OsrbSettings {
        p_x,
        chan: chan?,
        rates: rates?,
        trials: trials?,
        exhaustive: o.exhaustive.unwrap_or(false),
        side: side?,
    })
}
