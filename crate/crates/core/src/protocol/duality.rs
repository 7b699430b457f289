use std::collections::BTreeMap;

use rayon::prelude::*;

use super::encoder::{decode, ChannelTable};
use super::equivocation::reachable;
use super::{BinningRealization, ProtocolConfig};
use crate::error::{Error, Result};
use crate::prob::marginalize;

/// Total variation between the laws of `(X^n, Y0^n, Y1^n, Y2^n)` under
/// encoder modes A and B, and therefore between their transcripts.
///
/// Given `x^n`, both modes put the same shape on `y` inside each `f`
/// bucket; they differ only in the law of `f`, which is `W_f(x^n)` (the
/// channel mass of the bucket) in mode A and uniform over the non-empty
/// buckets in mode B. The distance is
/// `sum_x p(x^n) 1/2 sum_f |W_f(x^n) - u_f(x^n)|`, computed by enumeration.
pub fn mode_distance(cfg: &ProtocolConfig, bins: &BinningRealization) -> Result<f64> {
    cfg.validate()?;
    let n = cfg.n as usize;
    let xs = cfg.source.axes()[0].size;
    let table = ChannelTable::new(&cfg.chan);
    let reach = table.support.iter().map(Vec::len).max().unwrap_or(0) as f64;
    let cost = (xs as f64).powi(n as i32) * reach.powi(n as i32);
    if cost > cfg.enumeration_budget as f64 {
        return Err(Error::Budget {
            what: format!("mode distance at n = {n}"),
            count: format!("{cost}"),
            budget: cfg.enumeration_budget,
        });
    }
    let px = marginalize(&cfg.source, &[0])?;
    let px = px.weights();
    let fb = bins.f_bins().map(|b| b as usize);
    let parts: Vec<f64> = (0..xs.pow(n as u32))
        .into_par_iter()
        .map(|xr| {
            let mut x = vec![0usize; n];
            decode(xr, xs, n, &mut x);
            let p: f64 = x.iter().map(|&a| px[a]).product();
            if p == 0.0 {
                return 0.0;
            }
            let mut mass: BTreeMap<usize, f64> = BTreeMap::new();
            for (r, w) in reachable(&table, &x) {
                let key = (bins.f_index(0, r[0]) as usize * fb[1] + bins.f_index(1, r[1]) as usize) * fb[2]
                    + bins.f_index(2, r[2]) as usize;
                *mass.entry(key).or_default() += w;
            }
            let valid = mass.values().filter(|&&m| m > 0.0).count() as f64;
            p * 0.5 * mass.values().map(|&w| (w - 1.0 / valid).abs()).sum::<f64>()
        })
        .collect();
    Ok(parts.iter().sum())
}
