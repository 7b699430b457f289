use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ProtocolConfig;
use crate::error::{argument, Result};
use crate::osrb::bin_count;
use crate::rng::{stream_rng, BINNING_STREAM};

/// Six random bin maps over the output sequences, with inverse buckets.
///
/// Sequences are identified by their rank (first symbol most significant).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningRealization {
    n: u64,
    y_sizes: [usize; 3],
    m_bins: [u32; 3],
    f_bins: [u32; 3],
    m_maps: [Vec<u32>; 3],
    f_maps: [Vec<u32>; 3],
    /// `mf_buckets[i][m * F_i + f]`: ranks with both indices, ascending.
    #[serde(skip)]
    mf_buckets: [Vec<Vec<u32>>; 3],
    /// `f_buckets[i][f]`: ranks with that shared-randomness index, ascending.
    #[serde(skip)]
    f_buckets: [Vec<Vec<u32>>; 3],
}

impl BinningRealization {
    /// Builds a realization from explicit maps (fixtures and exhaustive tests).
    pub fn from_maps(
        n: u64,
        y_sizes: [usize; 3],
        m_bins: [u32; 3],
        f_bins: [u32; 3],
        m_maps: [Vec<u32>; 3],
        f_maps: [Vec<u32>; 3],
    ) -> Result<Self> {
        for i in 0..3 {
            let domain = y_sizes[i].pow(n as u32);
            if m_maps[i].len() != domain || f_maps[i].len() != domain {
                return Err(argument(format!("maps of source {i} must cover {domain} sequences")));
            }
            if m_bins[i] == 0 || f_bins[i] == 0 {
                return Err(argument("bin counts must be positive"));
            }
            if m_maps[i].iter().any(|&b| b >= m_bins[i]) || f_maps[i].iter().any(|&b| b >= f_bins[i]) {
                return Err(argument(format!("map of source {i} leaves its bin range")));
            }
        }
        let mut out = BinningRealization {
            n,
            y_sizes,
            m_bins,
            f_bins,
            m_maps,
            f_maps,
            mf_buckets: Default::default(),
            f_buckets: Default::default(),
        };
        out.index();
        Ok(out)
    }

    fn index(&mut self) {
        for i in 0..3 {
            let fb = self.f_bins[i] as usize;
            let mut mf = vec![Vec::new(); self.m_bins[i] as usize * fb];
            let mut f = vec![Vec::new(); fb];
            for (rank, (&m, &ff)) in self.m_maps[i].iter().zip(&self.f_maps[i]).enumerate() {
                mf[m as usize * fb + ff as usize].push(rank as u32);
                f[ff as usize].push(rank as u32);
            }
            self.mf_buckets[i] = mf;
            self.f_buckets[i] = f;
        }
    }

    /// Rebuilds the inverse buckets after deserialization.
    pub fn reindexed(mut self) -> Self {
        self.index();
        self
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn y_sizes(&self) -> [usize; 3] {
        self.y_sizes
    }

    pub fn m_bins(&self) -> [u32; 3] {
        self.m_bins
    }

    pub fn f_bins(&self) -> [u32; 3] {
        self.f_bins
    }

    pub fn m_index(&self, i: usize, rank: usize) -> u32 {
        self.m_maps[i][rank]
    }

    pub fn f_index(&self, i: usize, rank: usize) -> u32 {
        self.f_maps[i][rank]
    }

    pub fn mf_bucket(&self, i: usize, m: u32, f: u32) -> &[u32] {
        &self.mf_buckets[i][m as usize * self.f_bins[i] as usize + f as usize]
    }

    pub fn f_bucket(&self, i: usize, f: u32) -> &[u32] {
        &self.f_buckets[i][f as usize]
    }

    /// Sizes of the `M`-buckets of source `i` (summing over `f`).
    pub fn m_bucket_sizes(&self, i: usize) -> Vec<usize> {
        let mut sizes = vec![0; self.m_bins[i] as usize];
        for &m in &self.m_maps[i] {
            sizes[m as usize] += 1;
        }
        sizes
    }

    /// Largest `|bucket_0| * |bucket_j|` a detector may have to scan.
    pub fn max_detector_pairs(&self, j: usize) -> u64 {
        let widest = |i: usize| self.mf_buckets[i].iter().map(Vec::len).max().unwrap_or(0) as u64;
        widest(0) * widest(j)
    }
}

/// Draws every index i.i.d. uniform. Uses a dedicated stream of `cfg.seed`,
/// so the realization is independent of trial streams.
pub fn sample_binning(cfg: &ProtocolConfig) -> Result<BinningRealization> {
    cfg.validate()?;
    sample_binning_with(cfg, &mut stream_rng(cfg.seed, BINNING_STREAM))
}

pub(crate) fn sample_binning_with<R: Rng + ?Sized>(cfg: &ProtocolConfig, rng: &mut R) -> Result<BinningRealization> {
    let y_sizes = cfg.y_sizes();
    let r = &cfg.rates;
    let count = |rate: f64| -> Result<u32> {
        let c = bin_count(rate, cfg.n);
        u32::try_from(c).map_err(|_| argument(format!("{c} bins do not fit the index type")))
    };
    let m_bins = [count(r.r0)?, count(r.r1)?, count(r.r2)?];
    let f_bins = [count(r.rt0)?, count(r.rt1)?, count(r.rt2)?];
    let mut m_maps: [Vec<u32>; 3] = Default::default();
    let mut f_maps: [Vec<u32>; 3] = Default::default();
    for i in 0..3 {
        let domain = y_sizes[i].pow(cfg.n as u32);
        m_maps[i].reserve(domain);
        f_maps[i].reserve(domain);
        for _ in 0..domain {
            m_maps[i].push(rng.random_range(0..m_bins[i]));
            f_maps[i].push(rng.random_range(0..f_bins[i]));
        }
    }
    BinningRealization::from_maps(cfg.n, y_sizes, m_bins, f_bins, m_maps, f_maps)
}
