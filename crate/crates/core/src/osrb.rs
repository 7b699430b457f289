//! Output statistics of random binning at finite blocklength.
//!
//! Each source `Y_i^n` is hashed uniformly at random into `M_i` bins. The
//! induced law `P(x^n, b)` fluctuates around its mean `p(x^n) / prod M_i`;
//! this module evaluates the exponential lower bound on the expected total
//! variation of that fluctuation and measures the quantity itself by
//! sampling binnings and computing `P(x^n, b)` exactly.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::exponents::solver::{BracketProblem, BracketTerm};
use crate::exponents::SolverDiag;
use crate::prob::{Alphabet, CondPmf, JointPmf, Pmf};
use crate::rng::stream_rng;
use crate::types::NType;

/// Bin rates of `T` sources at blocklength `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub rates: Vec<f64>,
    pub n: u64,
}

/// Slack used when rounding `2^{nR}` up to an integer, so that values that
/// are integral up to floating-point noise are not bumped to the next one.
const CEIL_SLACK: f64 = 1e-9;

/// `ceil(2^{n R})`, at least 1.
pub fn bin_count(rate: f64, n: u64) -> u64 {
    ((n as f64 * rate).exp2() - CEIL_SLACK).ceil().max(1.0) as u64
}

impl BinningSpec {
    pub fn new(rates: Vec<f64>, n: u64) -> Result<Self> {
        let s = BinningSpec { rates, n };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.rates.is_empty() {
            return Err(argument("binning needs at least one source"));
        }
        if self.n == 0 {
            return Err(argument("blocklength must be at least 1"));
        }
        if let Some(r) = self.rates.iter().find(|r| !(**r >= 0.0) || !r.is_finite()) {
            return Err(argument(format!("bin rate {r} must be finite and non-negative")));
        }
        Ok(())
    }

    pub fn t(&self) -> usize {
        self.rates.len()
    }

    pub fn bin_counts(&self) -> Vec<u64> {
        self.rates.iter().map(|&r| bin_count(r, self.n)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsetCorrection {
    pub subset: Vec<usize>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrectionTerms {
    pub eps_n: f64,
    /// One entry per non-empty subset of the sources, in bitmask order.
    pub delta_n: Vec<SubsetCorrection>,
}

/// Product of `sizes[i]` over `i` in `subset`.
pub fn subset_product(sizes: &[usize], subset: &[usize]) -> usize {
    subset.iter().map(|&i| sizes[i]).product()
}

/// `|X| |Y_S| log2(n+1)/n + T/n`.
pub fn delta_term(x_size: usize, ys_size: usize, t: usize, n: u64) -> f64 {
    let n = n as f64;
    (x_size * ys_size) as f64 * (n + 1.0).log2() / n + t as f64 / n
}

/// Non-empty subsets of `0..t` in increasing bitmask order.
pub fn nonempty_subsets(t: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << t))
        .map(|mask| (0..t).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

pub fn correction_terms(x_size: usize, y_sizes: &[usize], n: u64) -> CorrectionTerms {
    let t = y_sizes.len();
    let all: usize = y_sizes.iter().product();
    let nf = n as f64;
    CorrectionTerms {
        eps_n: (x_size * all) as f64 * (nf + 1.0).log2() / nf,
        delta_n: nonempty_subsets(t)
            .into_iter()
            .map(|s| {
                let value = delta_term(x_size, subset_product(y_sizes, &s), t, n);
                SubsetCorrection { subset: s, value }
            })
            .collect(),
    }
}

/// A solved OSRB exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsrbExponent {
    /// Raw value; may be negative when the corrections dominate.
    #[serde(with = "crate::serde_ext::float")]
    pub value: f64,
    pub negative: bool,
    /// The minimum before subtracting `eps_n`.
    #[serde(with = "crate::serde_ext::float")]
    pub bracket_min: f64,
    pub corrections: CorrectionTerms,
    pub subset: Option<Vec<usize>>,
    pub argmin: Option<JointPmf>,
    pub diag: SolverDiag,
}

fn check_chan(x: &Alphabet, chan: &CondPmf, t: usize) -> Result<()> {
    if chan.from_axes() != std::slice::from_ref(x) {
        return Err(argument(format!("channel must read the single axis {x}")));
    }
    if chan.to_axes().len() != t {
        return Err(argument(format!(
            "channel has {} outputs but the binning has {t} sources",
            chan.to_axes().len()
        )));
    }
    Ok(())
}

/// Shared core of the unconditional and conditional exponents. The joint
/// lives on `(Z, X, Y_1, ..., Y_T)`; `z_weights` is the law of `Z`.
fn osrb_exponent(
    spec: &BinningSpec,
    z_axis: Alphabet,
    z_weights: &[f64],
    x_given_z: &CondPmf,
    chan: &CondPmf,
) -> Result<OsrbExponent> {
    spec.validate()?;
    let x_axis = x_given_z.to_axes()[0].clone();
    check_chan(&x_axis, chan, spec.t())?;
    let y_sizes: Vec<usize> = chan.to_axes().iter().map(|a| a.size).collect();
    let (nz, nx, ny) = (z_axis.size, x_axis.size, chan.to_size());
    let mut axes = vec![z_axis, x_axis];
    axes.extend(chan.to_axes().iter().cloned());
    let shape: Vec<usize> = axes.iter().map(|a| a.size).collect();

    let mut reference = Vec::with_capacity(nz * nx * ny);
    for z in 0..nz {
        for x in 0..nx {
            let zx = z_weights[z] * x_given_z.prob(z, x);
            reference.extend(chan.row(x).iter().map(|&c| zx * c));
        }
    }
    let corrections = correction_terms(nx, &y_sizes, spec.n);
    let subsets = nonempty_subsets(spec.t());
    let terms = subsets
        .iter()
        .zip(&corrections.delta_n)
        .map(|(s, d)| BracketTerm {
            y_axes: s.iter().map(|&i| 2 + i).collect(),
            shift: s.iter().map(|&i| spec.rates[i]).sum::<f64>() + d.value,
        })
        .collect();
    let problem = BracketProblem {
        reference: &reference,
        shape: &shape,
        group_axis: 0,
        group_target: z_weights,
        x_axes: vec![1],
        terms,
    };
    let sol = problem.solve();
    let value = sol.value - corrections.eps_n;
    Ok(OsrbExponent {
        value,
        negative: value < 0.0,
        bracket_min: sol.value,
        subset: sol.term.map(|k| subsets[k].clone()),
        argmin: sol.argmin.map(|w| JointPmf::from_parts(axes, w)),
        corrections,
        diag: sol.diag,
    })
}

/// Unconditional exponent for `p_X * chan`. The argmin is a law on
/// `(X, Y_1, ..., Y_T)`.
pub fn zeta_exponent(spec: &BinningSpec, p_x: &Pmf, chan: &CondPmf) -> Result<OsrbExponent> {
    let z = Alphabet::new("Z", 1)?;
    let x_given_z = CondPmf::new(vec![z.clone()], vec![p_x.alphabet().clone()], p_x.weights().to_vec())?;
    let mut out = osrb_exponent(spec, z, &[1.0], &x_given_z, chan)?;
    out.argmin = out
        .argmin
        .map(|a| JointPmf::from_parts(a.axes()[1..].to_vec(), a.weights().to_vec()));
    Ok(out)
}

/// Exponent when a side sequence `Z^n` of type `z_type` is drawn uniformly
/// from its type class and `X` is generated through `x_given_z`. The
/// divergence is averaged over the empirical law of `Z`. The argmin is a
/// law on `(Z, X, Y_1, ..., Y_T)`.
pub fn aleph_exponent(spec: &BinningSpec, z_type: &NType, x_given_z: &CondPmf, chan: &CondPmf) -> Result<OsrbExponent> {
    if z_type.n() != spec.n {
        return Err(argument(format!(
            "z_type has denominator {} but the blocklength is {}",
            z_type.n(),
            spec.n
        )));
    }
    if x_given_z.from_axes() != std::slice::from_ref(z_type.alphabet()) || x_given_z.to_axes().len() != 1 {
        return Err(argument("x_given_z must map the alphabet of z_type to a single X axis"));
    }
    osrb_exponent(spec, z_type.alphabet().clone(), &z_type.frequencies(), x_given_z, chan)
}

/// Precomputed pieces for evaluating `P(x^n, b)` under one binning.
pub struct OsrbEngine {
    n: usize,
    x_size: usize,
    /// Joint letter size `prod |Y_i|`.
    y_size: usize,
    y_sizes: Vec<usize>,
    /// `kernel[x * y_size + y] = p(y, x)`.
    kernel: Vec<f64>,
    /// `p(x^n)`, base-|X| ranks with the first symbol most significant.
    p_xn: Vec<f64>,
    /// For every source, the rank of its component of each `y^n` tuple.
    ranks: Vec<Vec<u32>>,
    bins: Vec<u64>,
}

impl OsrbEngine {
    /// `source` is a law on `(Y_1, ..., Y_T, X)`.
    pub fn new(spec: &BinningSpec, source: &JointPmf, budget: u64) -> Result<Self> {
        spec.validate()?;
        let t = spec.t();
        if source.rank() != t + 1 {
            return Err(argument(format!(
                "source has {} axes, expected {} sources plus X",
                source.rank(),
                t
            )));
        }
        let shape = source.shape();
        let y_sizes = shape[..t].to_vec();
        let x_size = shape[t];
        let y_size: usize = y_sizes.iter().product();
        let n = spec.n as usize;
        let tuples = (y_size as f64).powi(n as i32);
        let xs = (x_size as f64).powi(n as i32);
        if tuples.max(xs) > budget as f64 {
            return Err(Error::Budget {
                what: format!("y^n tuples at n = {n}"),
                count: format!("{}", tuples.max(xs)),
                budget,
            });
        }
        let mut kernel = vec![0.0; x_size * y_size];
        for (cell, &w) in source.weights().iter().enumerate() {
            let (y, x) = (cell / x_size, cell % x_size);
            kernel[x * y_size + y] = w;
        }
        let p_x: Vec<f64> = (0..x_size).map(|x| kernel[x * y_size..(x + 1) * y_size].iter().sum()).collect();
        let p_xn = expand_product(&p_x, n);

        let tuples = tuples as usize;
        let mut ranks = vec![vec![0u32; tuples]; t];
        let mut letter = vec![0usize; t];
        for tuple in 0..tuples {
            let mut rest = tuple;
            let mut digits = Vec::with_capacity(n);
            for _ in 0..n {
                digits.push(rest % y_size);
                rest /= y_size;
            }
            digits.reverse();
            let mut acc = vec![0u32; t];
            for &d in &digits {
                crate::prob::unravel_into(d, &y_sizes, &mut letter);
                for i in 0..t {
                    acc[i] = acc[i] * y_sizes[i] as u32 + letter[i] as u32;
                }
            }
            for i in 0..t {
                ranks[i][tuple] = acc[i];
            }
        }
        Ok(OsrbEngine {
            n,
            x_size,
            y_size,
            y_sizes,
            kernel,
            p_xn,
            ranks,
            bins: spec.bin_counts(),
        })
    }

    pub fn bin_counts(&self) -> &[u64] {
        &self.bins
    }

    /// Number of sequences each source's binning map must cover.
    pub fn domain_sizes(&self) -> Vec<usize> {
        self.y_sizes.iter().map(|&k| k.pow(self.n as u32)).collect()
    }

    /// Draws one binning: `maps[i][rank]` is the bin of source `i`'s sequence.
    pub fn sample_maps<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Vec<u32>> {
        self.domain_sizes()
            .iter()
            .zip(&self.bins)
            .map(|(&d, &m)| (0..d).map(|_| rng.random_range(0..m) as u32).collect())
            .collect()
    }

    /// `|| P(x^n, b) - p(x^n) / prod M ||_TV` for one binning.
    pub fn realization_tv(&self, maps: &[Vec<u32>]) -> f64 {
        let total_bins: u64 = self.bins.iter().product();
        let mut bin_of = vec![0usize; self.ranks[0].len()];
        let mut stride = 1usize;
        for i in (0..self.ranks.len()).rev() {
            for (slot, &r) in bin_of.iter_mut().zip(&self.ranks[i]) {
                *slot += maps[i][r as usize] as usize * stride;
            }
            stride *= self.bins[i] as usize;
        }
        let inv = 1.0 / total_bins as f64;
        let mut occupied = vec![false; total_bins as usize];
        for &b in &bin_of {
            occupied[b] = true;
        }
        let mut tv = 0.0;
        let mut indicator = vec![0.0; bin_of.len()];
        for (b, &used) in occupied.iter().enumerate() {
            if !used {
                tv += self.p_xn.iter().sum::<f64>() * inv;
                continue;
            }
            for (v, &k) in indicator.iter_mut().zip(&bin_of) {
                *v = if k == b { 1.0 } else { 0.0 };
            }
            let joint = kron_apply(&self.kernel, self.x_size, self.y_size, self.n, &indicator);
            tv += joint
                .iter()
                .zip(&self.p_xn)
                .map(|(&a, &p)| (a - p * inv).abs())
                .sum::<f64>();
        }
        0.5 * tv
    }
}

/// `p^{⊗n}` as a flat vector, first coordinate most significant.
fn expand_product(p: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..n {
        out = out.iter().flat_map(|&a| p.iter().map(move |&b| a * b)).collect();
    }
    out
}

/// Applies `K^{⊗n}` (`K` is `dx x dy`, row-major) to a vector over `[dy]^n`.
fn kron_apply(k: &[f64], dx: usize, dy: usize, n: usize, v: &[f64]) -> Vec<f64> {
    let mut cur = v.to_vec();
    let mut dims = vec![dy; n];
    for t in 0..n {
        let pre: usize = dims[..t].iter().product();
        let post: usize = dims[t + 1..].iter().product();
        let mut out = vec![0.0; pre * dx * post];
        for a in 0..pre {
            for i in 0..dy {
                let src = &cur[(a * dy + i) * post..(a * dy + i + 1) * post];
                if src.iter().all(|&s| s == 0.0) {
                    continue;
                }
                for o in 0..dx {
                    let w = k[o * dy + i];
                    if w == 0.0 {
                        continue;
                    }
                    let dst = &mut out[(a * dx + o) * post..(a * dx + o + 1) * post];
                    for (d, &s) in dst.iter_mut().zip(src) {
                        *d += w * s;
                    }
                }
            }
        }
        dims[t] = dx;
        cur = out;
    }
    cur
}

/// Monte Carlo estimate of the expected OSRB total variation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsrbMeasurement {
    pub n: u64,
    pub rates: Vec<f64>,
    pub bins: Vec<u64>,
    pub trials: u64,
    pub mean_tv: f64,
    pub stderr: f64,
}

impl OsrbMeasurement {
    /// `-(1/n) log2(mean_tv)`; `+inf` when the mean is exactly 0.
    pub fn exponent(&self) -> f64 {
        -self.mean_tv.log2() / self.n as f64
    }

    /// Standard error of [`Self::exponent`] by the delta method.
    pub fn exponent_stderr(&self) -> f64 {
        self.stderr / (self.n as f64 * self.mean_tv * std::f64::consts::LN_2)
    }
}

/// Samples `trials` independent binnings; trial `k` uses stream `(seed, k)`.
pub fn empirical_osrb_tv(
    spec: &BinningSpec,
    source: &JointPmf,
    trials: u64,
    seed: u64,
    budget: u64,
) -> Result<OsrbMeasurement> {
    if trials == 0 {
        return Err(argument("trials must be at least 1"));
    }
    let engine = OsrbEngine::new(spec, source, budget)?;
    let tvs: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            engine.realization_tv(&engine.sample_maps(&mut rng))
        })
        .collect();
    let (mean, stderr) = mean_and_stderr(&tvs);
    Ok(OsrbMeasurement {
        n: spec.n,
        rates: spec.rates.clone(),
        bins: engine.bins.clone(),
        trials,
        mean_tv: mean,
        stderr,
    })
}

pub(crate) fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Exact expectation over every binning map, for tiny instances.
pub fn exhaustive_osrb_tv(spec: &BinningSpec, source: &JointPmf, budget: u64) -> Result<f64> {
    let engine = OsrbEngine::new(spec, source, budget)?;
    let domains = engine.domain_sizes();
    let per_source: Vec<f64> = domains
        .iter()
        .zip(&engine.bins)
        .map(|(&d, &m)| (m as f64).powi(d as i32))
        .collect();
    let total: f64 = per_source.iter().product();
    if total > budget as f64 {
        return Err(Error::Budget {
            what: "binning maps".into(),
            count: format!("{total}"),
            budget,
        });
    }
    let total = total as u64;
    let tvs: Vec<f64> = (0..total)
        .into_par_iter()
        .map(|mut code| {
            let maps: Vec<Vec<u32>> = domains
                .iter()
                .zip(&engine.bins)
                .map(|(&d, &m)| {
                    (0..d)
                        .map(|_| {
                            let b = (code % m) as u32;
                            code /= m;
                            b
                        })
                        .collect()
                })
                .collect();
            engine.realization_tv(&maps)
        })
        .collect();
    Ok(tvs.iter().sum::<f64>() / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ax(l: &str, k: usize) -> Alphabet {
        Alphabet::new(l, k).unwrap()
    }

    fn bsc_source(eps: f64) -> JointPmf {
        // Axes (Y, X), X uniform.
        JointPmf::from_fn(vec![ax("Y", 2), ax("X", 2)], |i| {
            0.5 * if i[0] == i[1] { 1.0 - eps } else { eps }
        })
        .unwrap()
    }

    #[test]
    fn bin_counts_round_up() {
        assert_eq!(bin_count(0.0, 10), 1);
        assert_eq!(bin_count(0.25, 4), 2);
        assert_eq!(bin_count(0.25, 12), 8);
        assert_eq!(bin_count(0.3, 4), 3);
        assert_eq!(bin_count(1.0 / 3.0, 3), 2);
    }

    #[test]
    fn correction_examples() {
        let c = correction_terms(2, &[2], 3);
        assert!((c.eps_n - 8.0 / 3.0).abs() < 1e-12);
        assert_eq!(c.delta_n.len(), 1);
        assert!(c.delta_n[0].value >= 1.0 / 3.0);
        let mut prev = f64::INFINITY;
        for n in 3..200 {
            let c = correction_terms(2, &[2, 3], n);
            assert!(c.eps_n < prev);
            prev = c.eps_n;
            for d in &c.delta_n {
                assert!(d.value >= 2.0 / n as f64);
            }
        }
        assert!(correction_terms(2, &[2], 1_000_000).eps_n < 1e-3);
    }

    #[test]
    fn single_bin_has_zero_tv() {
        let spec = BinningSpec::new(vec![0.0], 1).unwrap();
        let e = OsrbEngine::new(&spec, &bsc_source(0.1), 1 << 20).unwrap();
        let maps = e.sample_maps(&mut stream_rng(0, 0));
        assert_eq!(e.realization_tv(&maps), 0.0);
    }

    #[test]
    fn kron_matches_direct_sum() {
        let spec = BinningSpec::new(vec![1.0], 3).unwrap();
        let src = bsc_source(0.2);
        let e = OsrbEngine::new(&spec, &src, 1 << 20).unwrap();
        let maps = e.sample_maps(&mut stream_rng(3, 1));
        // Direct evaluation of P(x^n, b).
        let w = src.weights();
        let mut direct = 0.0;
        let m = e.bin_counts()[0];
        for b in 0..m {
            for x in 0..8usize {
                let xs: Vec<usize> = (0..3).map(|t| (x >> (2 - t)) & 1).collect();
                let px: f64 = xs.iter().map(|_| 0.5).product();
                let mut p = 0.0;
                for y in 0..8usize {
                    if maps[0][y] as u64 != b {
                        continue;
                    }
                    let ys: Vec<usize> = (0..3).map(|t| (y >> (2 - t)) & 1).collect();
                    p += (0..3).map(|t| w[ys[t] * 2 + xs[t]]).product::<f64>();
                }
                direct += (p - px / m as f64).abs();
            }
        }
        assert!((e.realization_tv(&maps) - 0.5 * direct).abs() < 1e-14);
    }

    #[test]
    fn high_rate_zeta_is_minus_eps() {
        let px = Pmf::new(ax("X", 2), vec![0.5, 0.5]).unwrap();
        let chan = CondPmf::new(vec![ax("X", 2)], vec![ax("Y", 2)], vec![0.9, 0.1, 0.1, 0.9]).unwrap();
        let spec = BinningSpec::new(vec![2.0], 16).unwrap();
        let z = zeta_exponent(&spec, &px, &chan).unwrap();
        assert_eq!(z.value, -z.corrections.eps_n);
        assert!(z.negative);
    }

    #[test]
    fn deterministic_channel_zeta_is_minus_eps() {
        let px = Pmf::new(ax("X", 2), vec![0.3, 0.7]).unwrap();
        let chan = CondPmf::deterministic(vec![ax("X", 2)], vec![ax("Y", 2)], |x| x).unwrap();
        let spec = BinningSpec::new(vec![0.0], 8).unwrap();
        let z = zeta_exponent(&spec, &px, &chan).unwrap();
        assert_eq!(z.value, -z.corrections.eps_n);
    }

    #[test]
    fn aleph_reduces_to_zeta() {
        let px = Pmf::new(ax("X", 2), vec![0.4, 0.6]).unwrap();
        let chan = CondPmf::new(vec![ax("X", 2)], vec![ax("Y", 3)], vec![0.7, 0.2, 0.1, 0.1, 0.3, 0.6]).unwrap();
        let spec = BinningSpec::new(vec![0.1], 200).unwrap();
        let zeta = zeta_exponent(&spec, &px, &chan).unwrap();
        let z1 = NType::new(ax("Z", 1), vec![200]).unwrap();
        let xz = CondPmf::new(vec![ax("Z", 1)], vec![ax("X", 2)], vec![0.4, 0.6]).unwrap();
        let aleph = aleph_exponent(&spec, &z1, &xz, &chan).unwrap();
        assert_eq!(zeta.value.to_bits(), aleph.value.to_bits());
        assert!(zeta.value > 0.0);
    }
}
