use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{BinningRealization, ProtocolConfig};
use crate::prob::{unravel_into, CondPmf};
use crate::types::{JointNType, Sequence};

/// Protocol B found no output tuple with positive channel mass inside the
/// announced shared-randomness buckets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, thiserror::Error)]
#[error("no output tuple with positive mass lies in the buckets f = {f:?}")]
pub struct EncoderAbort {
    pub f: [u32; 3],
}

/// One protocol run as seen by an omniscient observer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub x: Sequence,
    pub z1: Sequence,
    pub z2: Sequence,
    /// Private attributes; only drawn under the null.
    pub s1: Option<Sequence>,
    pub s2: Option<Sequence>,
    pub y0: Sequence,
    pub y1: Sequence,
    pub y2: Sequence,
    pub m: [u32; 3],
    pub f: [u32; 3],
    pub type_index: JointNType,
    /// How many times `f` was redrawn after an [`EncoderAbort`].
    pub resamples: u32,
}

/// Encoder output for a given `x^n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoding {
    pub y_ranks: [usize; 3],
    pub m: [u32; 3],
    pub f: [u32; 3],
}

/// `true` when `p(y0,y1,y2|x) = prod_i p(y_i|x)` for every `x`.
pub(crate) fn factorizes(chan: &CondPmf) -> bool {
    ChannelTable::new(chan).factors.is_some()
}

/// Channel rows reorganised for sequence-level sampling.
pub(crate) struct ChannelTable {
    pub y_sizes: [usize; 3],
    /// `support[x]`: letters `(y0, y1, y2)` with positive mass and that mass.
    pub support: Vec<Vec<([usize; 3], f64)>>,
    /// `factors[i][x][y]` when the channel factorizes.
    pub factors: Option<[Vec<Vec<f64>>; 3]>,
}

impl ChannelTable {
    pub fn new(chan: &CondPmf) -> Self {
        let a = chan.to_axes();
        let y_sizes = [a[0].size, a[1].size, a[2].size];
        let nx = chan.from_size();
        let mut support = Vec::with_capacity(nx);
        let mut marg: [Vec<Vec<f64>>; 3] = std::array::from_fn(|i| vec![vec![0.0; y_sizes[i]]; nx]);
        let mut letter = [0usize; 3];
        for x in 0..nx {
            let mut s = Vec::new();
            for (k, &w) in chan.row(x).iter().enumerate() {
                unravel_into(k, &y_sizes, &mut letter);
                for i in 0..3 {
                    marg[i][x][letter[i]] += w;
                }
                if w > 0.0 {
                    s.push((letter, w));
                }
            }
            support.push(s);
        }
        let mut product = true;
        'outer: for x in 0..nx {
            for (k, &w) in chan.row(x).iter().enumerate() {
                unravel_into(k, &y_sizes, &mut letter);
                let p: f64 = (0..3).map(|i| marg[i][x][letter[i]]).product();
                if (p - w).abs() > 1e-12 {
                    product = false;
                    break 'outer;
                }
            }
        }
        ChannelTable {
            y_sizes,
            support,
            factors: product.then_some(marg),
        }
    }
}

pub(crate) fn decode(rank: usize, size: usize, n: usize, out: &mut [usize]) {
    let mut r = rank;
    for t in (0..n).rev() {
        out[t] = r % size;
        r /= size;
    }
    debug_assert_eq!(out.len(), n);
}

pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Option<usize> {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = None;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = Some(k);
            if u < acc {
                return Some(k);
            }
        }
    }
    last
}

pub(crate) fn encode_b_with<R: Rng + ?Sized>(
    table: &ChannelTable,
    bins: &BinningRealization,
    x: &[usize],
    f: [u32; 3],
    rng: &mut R,
) -> Result<Encoding, EncoderAbort> {
    let n = x.len();
    let mut ranks = [0usize; 3];
    if let Some(factors) = &table.factors {
        let mut sym = vec![0usize; n];
        for i in 0..3 {
            let bucket = bins.f_bucket(i, f[i]);
            let weights: Vec<f64> = bucket
                .iter()
                .map(|&r| {
                    decode(r as usize, table.y_sizes[i], n, &mut sym);
                    (0..n).map(|t| factors[i][x[t]][sym[t]]).product()
                })
                .collect();
            let k = sample_index(&weights, rng).ok_or(EncoderAbort { f })?;
            ranks[i] = bucket[k] as usize;
        }
    } else {
        let mut leaves: Vec<([usize; 3], f64)> = Vec::new();
        collect_leaves(table, bins, x, f, 0, [0; 3], 1.0, &mut leaves);
        let weights: Vec<f64> = leaves.iter().map(|l| l.1).collect();
        let k = sample_index(&weights, rng).ok_or(EncoderAbort { f })?;
        ranks = leaves[k].0;
    }
    Ok(finish(bins, ranks, f))
}

#[allow(clippy::too_many_arguments)]
fn collect_leaves(
    table: &ChannelTable,
    bins: &BinningRealization,
    x: &[usize],
    f: [u32; 3],
    t: usize,
    ranks: [usize; 3],
    weight: f64,
    out: &mut Vec<([usize; 3], f64)>,
) {
    if t == x.len() {
        if (0..3).all(|i| bins.f_index(i, ranks[i]) == f[i]) {
            out.push((ranks, weight));
        }
        return;
    }
    for &(letter, w) in &table.support[x[t]] {
        let next = std::array::from_fn(|i| ranks[i] * table.y_sizes[i] + letter[i]);
        collect_leaves(table, bins, x, f, t + 1, next, weight * w, out);
    }
}

fn finish(bins: &BinningRealization, ranks: [usize; 3], f: [u32; 3]) -> Encoding {
    Encoding {
        y_ranks: ranks,
        m: std::array::from_fn(|i| bins.m_index(i, ranks[i])),
        f,
    }
}

pub(crate) fn encode_a_with<R: Rng + ?Sized>(table: &ChannelTable, bins: &BinningRealization, x: &[usize], rng: &mut R) -> Encoding {
    let mut ranks = [0usize; 3];
    for &xt in x {
        let weights: Vec<f64> = table.support[xt].iter().map(|s| s.1).collect();
        let k = sample_index(&weights, rng).expect("channel rows are normalized");
        let letter = table.support[xt][k].0;
        for i in 0..3 {
            ranks[i] = ranks[i] * table.y_sizes[i] + letter[i];
        }
    }
    let f = std::array::from_fn(|i| bins.f_index(i, ranks[i]));
    finish(bins, ranks, f)
}

/// Samples `y` from the channel restricted to the `f` buckets.
pub fn encode_protocol_b<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    bins: &BinningRealization,
    x: &Sequence,
    f: [u32; 3],
    rng: &mut R,
) -> Result<(Encoding, JointNType), EncoderAbort> {
    let table = ChannelTable::new(&cfg.chan);
    let e = encode_b_with(&table, bins, x.symbols(), f, rng)?;
    let t = type_index(cfg, x, &e.y_ranks);
    Ok((e, t))
}

/// Samples `y` from the plain channel and reads `f` off the bins.
pub fn encode_protocol_a<R: Rng + ?Sized>(
    cfg: &ProtocolConfig,
    bins: &BinningRealization,
    x: &Sequence,
    rng: &mut R,
) -> (Encoding, JointNType) {
    let table = ChannelTable::new(&cfg.chan);
    let e = encode_a_with(&table, bins, x.symbols(), rng);
    let t = type_index(cfg, x, &e.y_ranks);
    (e, t)
}

/// Joint type of `(x, y0, y1, y2)`.
pub(crate) fn type_index(cfg: &ProtocolConfig, x: &Sequence, y_ranks: &[usize; 3]) -> JointNType {
    let mut axes = vec![x.alphabet().clone()];
    axes.extend(cfg.chan.to_axes().iter().cloned());
    let counts = joint_counts(x.symbols(), &cfg.y_sizes(), y_ranks, x.alphabet().size);
    JointNType::new(axes, counts).expect("non-empty sequence")
}

pub(crate) fn joint_counts(x: &[usize], y_sizes: &[usize; 3], y_ranks: &[usize; 3], x_size: usize) -> Vec<u64> {
    let n = x.len();
    let cells = x_size * y_sizes.iter().product::<usize>();
    let mut counts = vec![0u64; cells];
    let mut ys: [Vec<usize>; 3] = std::array::from_fn(|_| vec![0; n]);
    for i in 0..3 {
        decode(y_ranks[i], y_sizes[i], n, &mut ys[i]);
    }
    for t in 0..n {
        let k = ((x[t] * y_sizes[0] + ys[0][t]) * y_sizes[1] + ys[1][t]) * y_sizes[2] + ys[2][t];
        counts[k] += 1;
    }
    counts
}

/// Probability of the restricted law used by mode B, by enumeration.
#[cfg(test)]
pub(crate) fn restricted_law(
    table: &ChannelTable,
    bins: &BinningRealization,
    x: &[usize],
    f: [u32; 3],
) -> Vec<([usize; 3], f64)> {
    let mut leaves = Vec::new();
    collect_leaves(table, bins, x, f, 0, [0; 3], 1.0, &mut leaves);
    let total: f64 = leaves.iter().map(|l| l.1).sum();
    leaves.into_iter().map(|(r, w)| (r, w / total)).collect()
}
