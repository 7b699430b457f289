//! Exhaustive and grid oracles for the random-binning quantities.

use crate::grid::minimize;
use crate::info::{h2, kl};

fn digits(mut rank: usize, base: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for t in (0..n).rev() {
        out[t] = rank % base;
        rank /= base;
    }
    out
}

/// Mean over every binning of `TV(P(x^n, b), p(x^n) / prod M)`.
///
/// `source` is a row-major table on `(Y_1, ..., Y_T, X)` with sizes
/// `y_sizes` and `x_size`; source `i` is binned into `bins[i]` cells.
pub fn exhaustive_mean_tv(source: &[f64], y_sizes: &[usize], x_size: usize, n: usize, bins: &[usize]) -> f64 {
    let t = y_sizes.len();
    let domains: Vec<usize> = y_sizes.iter().map(|&s| s.pow(n as u32)).collect();
    let maps_per: Vec<usize> = domains.iter().zip(bins).map(|(&d, &m)| m.pow(d as u32)).collect();
    let total_maps: usize = maps_per.iter().product();
    let xn = x_size.pow(n as u32);
    let y_tuples: usize = domains.iter().product();
    let cells: usize = bins.iter().product();
    let letter = |ys: &[usize], x: usize| {
        let mut k = 0;
        for (i, &y) in ys.iter().enumerate() {
            k = k * y_sizes[i] + y;
        }
        source[k * x_size + x]
    };
    // p(x^n, y^n) for every pair, and p(x^n).
    let mut pxy = vec![0.0; xn * y_tuples];
    let mut px = vec![0.0; xn];
    for xr in 0..xn {
        let xs = digits(xr, x_size, n);
        for yr in 0..y_tuples {
            let mut per = Vec::with_capacity(t);
            let mut rem = yr;
            for i in (0..t).rev() {
                per.push(digits(rem % domains[i], y_sizes[i], n));
                rem /= domains[i];
            }
            per.reverse();
            let mut p = 1.0;
            for s in 0..n {
                let ys: Vec<usize> = per.iter().map(|v| v[s]).collect();
                p *= letter(&ys, xs[s]);
            }
            pxy[xr * y_tuples + yr] = p;
            px[xr] += p;
        }
    }
    let mut sum = 0.0;
    for code in 0..total_maps {
        let mut c = code;
        let maps: Vec<Vec<usize>> = (0..t)
            .map(|i| {
                let m = c % maps_per[i];
                c /= maps_per[i];
                digits(m, bins[i], domains[i])
            })
            .collect();
        let mut joint = vec![0.0; xn * cells];
        for yr in 0..y_tuples {
            let mut rem = yr;
            let mut idx = vec![0; t];
            for i in (0..t).rev() {
                idx[i] = rem % domains[i];
                rem /= domains[i];
            }
            let mut b = 0;
            for i in 0..t {
                b = b * bins[i] + maps[i][idx[i]];
            }
            for xr in 0..xn {
                joint[xr * cells + b] += pxy[xr * y_tuples + yr];
            }
        }
        let mut tv = 0.0;
        for xr in 0..xn {
            for b in 0..cells {
                tv += (joint[xr * cells + b] - px[xr] / cells as f64).abs();
            }
        }
        sum += 0.5 * tv;
    }
    sum / total_maps as f64
}

/// `|X| |Y| log2(n + 1) / n` for one binary source.
pub fn eps_n(x_size: usize, y_size: usize, n: u64) -> f64 {
    (x_size * y_size) as f64 * ((n + 1) as f64).log2() / n as f64
}

/// Single-source exponent on binary `X`, `Y`:
/// `min_pi D(pi || p) + 1/2 [H_pi(Y|X) - R - delta]^+ - eps`.
pub fn zeta_binary(px0: f64, y_given_x: [[f64; 2]; 2], rate: f64, n: u64, points: usize, zooms: usize) -> f64 {
    let eps = eps_n(2, 2, n);
    let delta = eps + 1.0 / n as f64;
    let p = [
        px0 * y_given_x[0][0],
        px0 * y_given_x[0][1],
        (1.0 - px0) * y_given_x[1][0],
        (1.0 - px0) * y_given_x[1][1],
    ];
    let (v, _) = minimize(
        |t| {
            let pi = [t[0] * t[1], t[0] * (1.0 - t[1]), (1.0 - t[0]) * t[2], (1.0 - t[0]) * (1.0 - t[2])];
            let h = t[0] * h2(t[1]) + (1.0 - t[0]) * h2(t[2]);
            kl(&pi, &p) + 0.5 * (h - rate - delta).max(0.0)
        },
        &[0.0; 3],
        &[1.0; 3],
        points,
        zooms,
    );
    v - eps
}

/// Conditional version with binary `Z` of frequencies `z_freq`:
/// `min sum_z f(z) D(pi(.|z) || p(x|z) p(y|x)) + 1/2 [H_pi(Y|X) - R - delta]^+ - eps`,
/// the entropy taken under the `Z`-averaged law. As in the unconditional
/// case only `pi(x|z)` and a shared `pi(y|x)` need searching.
pub fn aleph_binary(
    z_freq: [f64; 2],
    x_given_z: [[f64; 2]; 2],
    y_given_x: [[f64; 2]; 2],
    rate: f64,
    n: u64,
    points: usize,
    zooms: usize,
) -> f64 {
    let eps = eps_n(2, 2, n);
    let delta = eps + 1.0 / n as f64;
    let (v, _) = minimize(
        |t| {
            let xz = [[t[0], 1.0 - t[0]], [t[1], 1.0 - t[1]]];
            let yx = [[t[2], 1.0 - t[2]], [t[3], 1.0 - t[3]]];
            let mut d = 0.0;
            let mut px = [0.0; 2];
            for z in 0..2 {
                if z_freq[z] == 0.0 {
                    continue;
                }
                let mut pi = [0.0; 4];
                let mut p = [0.0; 4];
                for x in 0..2 {
                    px[x] += z_freq[z] * xz[z][x];
                    for y in 0..2 {
                        pi[2 * x + y] = xz[z][x] * yx[x][y];
                        p[2 * x + y] = x_given_z[z][x] * y_given_x[x][y];
                    }
                }
                d += z_freq[z] * kl(&pi, &p);
            }
            let h = px[0] * h2(t[2]) + px[1] * h2(t[3]);
            d + 0.5 * (h - rate - delta).max(0.0)
        },
        &[0.0; 4],
        &[1.0; 4],
        points,
        zooms,
    );
    v - eps
}
