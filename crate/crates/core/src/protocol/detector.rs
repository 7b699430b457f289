use serde::{Deserialize, Serialize};

use super::{BinningRealization, ProtocolConfig};
use crate::error::Result;
use crate::types::{JointNType, Sequence};

/// Detector decision with the events behind it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DetectorOutcome {
    /// 0 accepts the null, 1 rejects it.
    pub decision: u8,
    /// The announced joint type is typical for the null.
    pub type_typical: bool,
    /// Some bucket pair is jointly typical with the side information.
    pub witness_found: bool,
    /// Ranks `(y0, yj)` of the first witness in scan order.
    pub witness: Option<(u32, u32)>,
}

/// Fixed pieces of detector `j`'s test.
pub(crate) struct DetectorContext {
    pub j: usize,
    pub delta: f64,
    pub p_xy: Vec<f64>,
    pub p_pair_z: Vec<f64>,
    pub y0_size: usize,
    pub yj_size: usize,
    pub z_size: usize,
}

impl DetectorContext {
    pub fn new(cfg: &ProtocolConfig, j: usize) -> Result<Self> {
        let sizes = cfg.y_sizes();
        Ok(DetectorContext {
            j,
            delta: cfg.delta_prime,
            p_xy: cfg.p_xy()?.weights().to_vec(),
            p_pair_z: cfg.p_y0_yj_zj(j)?.weights().to_vec(),
            y0_size: sizes[0],
            yj_size: sizes[j],
            z_size: cfg.source.axes()[j].size,
        })
    }

    pub fn type_typical(&self, type_counts: &[u64], n: usize) -> bool {
        close(type_counts, n, &self.p_xy, self.delta)
    }

    /// Scans `bucket(m0, f0) x bucket(mj, fj)` in rank order.
    pub fn find_witness(&self, bins: &BinningRealization, z: &[usize], m: [u32; 2], f: [u32; 2]) -> Option<(u32, u32)> {
        let n = z.len();
        let b0 = bins.mf_bucket(0, m[0], f[0]);
        let bj = bins.mf_bucket(self.j, m[1], f[1]);
        if b0.is_empty() || bj.is_empty() {
            return None;
        }
        let zs = self.z_size;
        // Per-candidate offsets into the (y0, yj, z) cell table.
        let offs_j: Vec<Vec<usize>> = bj
            .iter()
            .map(|&r| digits(r as usize, self.yj_size, n).into_iter().map(|y| y * zs).collect())
            .collect();
        let mut counts = vec![0u64; self.p_pair_z.len()];
        let mut base = vec![0usize; n];
        for &r0 in b0 {
            for (t, y) in digits(r0 as usize, self.y0_size, n).into_iter().enumerate() {
                base[t] = y * self.yj_size * zs + z[t];
            }
            for (k, off) in offs_j.iter().enumerate() {
                counts.iter_mut().for_each(|c| *c = 0);
                for t in 0..n {
                    counts[base[t] + off[t]] += 1;
                }
                if close(&counts, n, &self.p_pair_z, self.delta) {
                    return Some((r0, bj[k]));
                }
            }
        }
        None
    }

    pub fn decide(&self, bins: &BinningRealization, z: &[usize], m: [u32; 2], f: [u32; 2], type_counts: &[u64]) -> DetectorOutcome {
        let type_typical = self.type_typical(type_counts, z.len());
        // The witness search is skipped when the type test already fails.
        let witness = if type_typical { self.find_witness(bins, z, m, f) } else { None };
        let witness_found = witness.is_some();
        DetectorOutcome {
            decision: if type_typical && witness_found { 0 } else { 1 },
            type_typical,
            witness_found,
            witness,
        }
    }
}

pub(crate) fn digits(rank: usize, size: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    let mut r = rank;
    for t in (0..n).rev() {
        out[t] = r % size;
        r /= size;
    }
    out
}

fn close(counts: &[u64], n: usize, target: &[f64], delta: f64) -> bool {
    let n = n as f64;
    counts.iter().zip(target).all(|(&c, &p)| (c as f64 / n - p).abs() < delta)
}

/// Full outcome of detector `j`.
#[allow(clippy::too_many_arguments)]
pub fn detect_outcome(
    cfg: &ProtocolConfig,
    bins: &BinningRealization,
    j: usize,
    z: &Sequence,
    m0: u32,
    mj: u32,
    f0: u32,
    fj: u32,
    type_index: &JointNType,
) -> Result<DetectorOutcome> {
    if j != 1 && j != 2 {
        return Err(crate::error::argument(format!("detector index {j} must be 1 or 2")));
    }
    let ctx = DetectorContext::new(cfg, j)?;
    Ok(ctx.decide(bins, z.symbols(), [m0, mj], [f0, fj], type_index.counts()))
}

/// Decision bit of detector `j`: 0 iff the type is typical and a jointly
/// typical pair sits in the announced buckets.
#[allow(clippy::too_many_arguments)]
pub fn detect(
    cfg: &ProtocolConfig,
    bins: &BinningRealization,
    j: usize,
    z: &Sequence,
    m0: u32,
    mj: u32,
    f0: u32,
    fj: u32,
    type_index: &JointNType,
) -> Result<u8> {
    Ok(detect_outcome(cfg, bins, j, z, m0, mj, f0, fj, type_index)?.decision)
}
