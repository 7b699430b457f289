use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::encoder::ChannelTable;
use super::estimate::TrialEnv;
use super::{BinningRealization, ProtocolConfig, ProtocolMode};
use crate::error::{argument, Error, Result};
use crate::prob::{marginalize, shannon};

/// Streams used by plug-in equivocation trials start here, away from the
/// error-estimation streams.
const EQUIVOCATION_STREAM_BASE: u64 = 1 << 62;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EquivocationMode {
    #[default]
    Exact,
    Plugin,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivocationReport {
    /// Which private attribute, 1 or 2.
    pub source: usize,
    pub n: u64,
    pub mode: EquivocationMode,
    /// `H(S^n | Z^n, M0, Mi) / n` in bits per symbol.
    pub value: f64,
    /// Single-letter `H(S_i)`, the ceiling of `value`.
    pub h_s: f64,
    /// Monte Carlo trials; `None` in exact mode.
    pub trials: Option<u64>,
}

/// Equivocation of `S_i` at a detector that sees `(Z_i^n, M0, Mi)` under
/// the fixed realization `bins`.
///
/// Exact mode enumerates every `x^n`, every `(z_i, s_i)^n` and every
/// output tuple reachable from `x^n`. Mode `B` draws `f` uniformly among
/// the tuples whose restriction is non-empty, which is what redrawing after
/// aborts amounts to. Plug-in mode samples `trials` runs and applies the
/// Miller-Madow correction to both joint entropies; the result is clipped
/// to `[0, H(S_i)]`.
pub fn estimate_equivocation(
    cfg: &ProtocolConfig,
    bins: &BinningRealization,
    i: usize,
    mode: EquivocationMode,
    trials: u64,
) -> Result<EquivocationReport> {
    if i != 1 && i != 2 {
        return Err(argument(format!("source index {i} must be 1 or 2")));
    }
    let h_s = shannon(marginalize(&cfg.source, &[2 + i])?.weights());
    let (total, trials) = match mode {
        EquivocationMode::Exact => {
            cfg.validate()?;
            (exact(cfg, bins, i)?, None)
        }
        EquivocationMode::Plugin => {
            if trials == 0 {
                return Err(argument("trials must be at least 1"));
            }
            (plugin(cfg, bins, i, trials)?, Some(trials))
        }
    };
    let n = cfg.n as f64;
    let mut value = total / n;
    if mode == EquivocationMode::Plugin {
        value = value.clamp(0.0, h_s);
    }
    Ok(EquivocationReport {
        source: i,
        n: cfg.n,
        mode,
        value,
        h_s,
        trials,
    })
}

/// Output tuples reachable from `x` with their channel mass.
pub(super) fn reachable(table: &ChannelTable, x: &[usize]) -> Vec<([usize; 3], f64)> {
    let mut leaves = vec![([0usize; 3], 1.0)];
    for &xt in x {
        let mut next = Vec::with_capacity(leaves.len() * table.support[xt].len());
        for (ranks, w) in &leaves {
            for &(letter, lw) in &table.support[xt] {
                let r: [usize; 3] = std::array::from_fn(|k| ranks[k] * table.y_sizes[k] + letter[k]);
                next.push((r, w * lw));
            }
        }
        leaves = next;
    }
    leaves
}

/// `P(m0, mi | x)` laid out as `m0 * M_i + mi`.
fn message_law(cfg: &ProtocolConfig, bins: &BinningRealization, table: &ChannelTable, x: &[usize], i: usize) -> Vec<f64> {
    let mb = bins.m_bins();
    let mi = mb[i] as usize;
    let mut law = vec![0.0; mb[0] as usize * mi];
    let leaves = reachable(table, x);
    match cfg.mode {
        ProtocolMode::A => {
            for (r, w) in &leaves {
                law[bins.m_index(0, r[0]) as usize * mi + bins.m_index(i, r[i]) as usize] += w;
            }
        }
        ProtocolMode::B => {
            let fb = bins.f_bins().map(|b| b as usize);
            let key = |r: &[usize; 3]| {
                (bins.f_index(0, r[0]) as usize * fb[1] + bins.f_index(1, r[1]) as usize) * fb[2]
                    + bins.f_index(2, r[2]) as usize
            };
            let mut mass: BTreeMap<usize, f64> = BTreeMap::new();
            for (r, w) in &leaves {
                *mass.entry(key(r)).or_default() += w;
            }
            let valid = mass.values().filter(|&&m| m > 0.0).count() as f64;
            for (r, w) in &leaves {
                if *w > 0.0 {
                    law[bins.m_index(0, r[0]) as usize * mi + bins.m_index(i, r[i]) as usize] += w / mass[&key(r)] / valid;
                }
            }
        }
    }
    law
}

fn exact(cfg: &ProtocolConfig, bins: &BinningRealization, i: usize) -> Result<f64> {
    let n = cfg.n as usize;
    let axes = cfg.source.axes();
    let (xs, zs, ss) = (axes[0].size, axes[i].size, axes[2 + i].size);
    let table = ChannelTable::new(&cfg.chan);
    let reach = table.support.iter().map(Vec::len).max().unwrap_or(0) as f64;
    let pow = |b: usize| (b as f64).powi(n as i32);
    let mb = bins.m_bins();
    let m_cells = mb[0] as usize * mb[i] as usize;
    let cells = pow(ss) * pow(zs) * m_cells as f64;
    let cost = pow(xs) * (reach.powi(n as i32) + pow(zs * ss)) + cells;
    if cost > cfg.enumeration_budget as f64 {
        return Err(Error::Budget {
            what: format!("exact equivocation at n = {n}"),
            count: format!("{cost}"),
            budget: cfg.enumeration_budget,
        });
    }
    // Single-letter law of (X, Z_i, S_i).
    let xzs = marginalize(&cfg.source, &[0, i, 2 + i])?;
    let w = xzs.weights();
    let zs_seqs = (zs * ss).pow(n as u32);
    let s_seqs = ss.pow(n as u32);
    let z_seqs = zs.pow(n as u32);

    let per_x: Vec<Vec<f64>> = (0..xs.pow(n as u32))
        .into_par_iter()
        .map(|xr| {
            let mut x = vec![0usize; n];
            super::encoder::decode(xr, xs, n, &mut x);
            let msg = message_law(cfg, bins, &table, &x, i);
            let mut joint = vec![0.0; s_seqs * z_seqs * m_cells];
            let mut pair = vec![0usize; n];
            for r in 0..zs_seqs {
                super::encoder::decode(r, zs * ss, n, &mut pair);
                let mut p = 1.0;
                let (mut zr, mut sr) = (0usize, 0usize);
                for t in 0..n {
                    let (z, s) = (pair[t] / ss, pair[t] % ss);
                    p *= w[(x[t] * zs + z) * ss + s];
                    zr = zr * zs + z;
                    sr = sr * ss + s;
                }
                if p == 0.0 {
                    continue;
                }
                let base = (sr * z_seqs + zr) * m_cells;
                for (k, &pm) in msg.iter().enumerate() {
                    joint[base + k] += p * pm;
                }
            }
            joint
        })
        .collect();
    let mut joint = vec![0.0; s_seqs * z_seqs * m_cells];
    for part in &per_x {
        for (a, b) in joint.iter_mut().zip(part) {
            *a += b;
        }
    }
    let mut zm = vec![0.0; z_seqs * m_cells];
    for (k, &v) in joint.iter().enumerate() {
        zm[k % (z_seqs * m_cells)] += v;
    }
    Ok((shannon(&joint) - shannon(&zm)).max(0.0))
}

fn plugin(cfg: &ProtocolConfig, bins: &BinningRealization, i: usize, trials: u64) -> Result<f64> {
    let env = TrialEnv::new(cfg, bins)?;
    let ranks = |v: &[usize], size: usize| v.iter().fold(0u64, |r, &s| r * size as u64 + s as u64);
    let axes = cfg.source.axes();
    let samples: Vec<Option<(u64, u64, u32, u32)>> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let (letters, enc, _) = env.draw(0, EQUIVOCATION_STREAM_BASE + k);
            let e = enc?;
            Some((
                ranks(&letters[2 + i], axes[2 + i].size),
                ranks(&letters[i], axes[i].size),
                e.m[0],
                e.m[i],
            ))
        })
        .collect();
    let mut full: BTreeMap<(u64, u64, u32, u32), u64> = BTreeMap::new();
    let mut given: BTreeMap<(u64, u32, u32), u64> = BTreeMap::new();
    for (s, z, m0, mi) in samples.into_iter().flatten() {
        *full.entry((s, z, m0, mi)).or_default() += 1;
        *given.entry((z, m0, mi)).or_default() += 1;
    }
    let h_full = miller_madow(full.values().copied());
    let h_given = miller_madow(given.values().copied());
    Ok(h_full - h_given)
}

/// Plug-in entropy in bits plus `(K - 1) / (2N ln 2)` for `K` occupied cells.
pub(crate) fn miller_madow(counts: impl Iterator<Item = u64> + Clone) -> f64 {
    let total: u64 = counts.clone().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let occupied = counts.clone().filter(|&c| c > 0).count() as f64;
    let h: f64 = counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h + (occupied - 1.0) / (2.0 * n * std::f64::consts::LN_2)
}
