//! Grid oracles for the three exponents on binary instances whose three
//! outputs are one shared copy `Y0 = Y1 = Y2 = Y`.
//!
//! With that channel every law in play lives on the eight cells `(x, y, z)`
//! (index `4x + 2y + z`) of one detector, so the constrained polytopes have
//! at most four free coordinates and can be searched exhaustively.

use crate::grid::minimize;
use crate::info::{conditional_entropy, h2, kl};

#[derive(Clone, Debug, PartialEq)]
pub struct CopyInstance {
    pub px: [f64; 2],
    /// `p(z | x)` of the detector's side information under the null.
    pub z_null: [[f64; 2]; 2],
    /// `q(z | x)` under the alternative.
    pub z_alt: [[f64; 2]; 2],
    /// `p(y | x)` of the shared output.
    pub y_given_x: [[f64; 2]; 2],
    pub r: [f64; 3],
    pub rt: [f64; 3],
}

/// Grid resolution and refinement passes.
#[derive(Clone, Copy, Debug)]
pub struct GridSpec {
    pub points: usize,
    pub zooms: usize,
}

impl CopyInstance {
    fn joint(&self, z: &[[f64; 2]; 2]) -> [f64; 8] {
        let mut out = [0.0; 8];
        for x in 0..2 {
            for y in 0..2 {
                for zz in 0..2 {
                    out[4 * x + 2 * y + zz] = self.px[x] * self.y_given_x[x][y] * z[x][zz];
                }
            }
        }
        out
    }

    pub fn null(&self) -> [f64; 8] {
        self.joint(&self.z_null)
    }

    pub fn reference(&self) -> [f64; 8] {
        self.joint(&self.z_alt)
    }

    fn p_xy(&self) -> [[f64; 2]; 2] {
        let p = self.null();
        let mut m = [[0.0; 2]; 2];
        for x in 0..2 {
            for y in 0..2 {
                m[x][y] = p[4 * x + 2 * y] + p[4 * x + 2 * y + 1];
            }
        }
        m
    }

    fn p_yz(&self) -> [[f64; 2]; 2] {
        let p = self.null();
        let mut m = [[0.0; 2]; 2];
        for y in 0..2 {
            for z in 0..2 {
                m[y][z] = p[2 * y + z] + p[4 + 2 * y + z];
            }
        }
        m
    }

    fn p_z(&self) -> [f64; 2] {
        let m = self.p_yz();
        [m[0][0] + m[1][0], m[0][1] + m[1][1]]
    }

    /// `D(pi || q_{XZ} p_{Y|X})` for a full table, `inf` for negative cells.
    fn divergence(&self, pi: &[f64; 8]) -> f64 {
        if pi.iter().any(|&v| v < -1e-15) {
            return f64::INFINITY;
        }
        let clipped: Vec<f64> = pi.iter().map(|&v| v.max(0.0)).collect();
        kl(&clipped, &self.reference())
    }

    /// Divergence part of `E0`: `pi_{XY} = p_{XY}`, `pi_{YZ} = p_{YZ}`.
    /// Free coordinates are `pi(0, y, 0)` for both `y`.
    pub fn e0(&self, g: GridSpec) -> f64 {
        let (xy, yz) = (self.p_xy(), self.p_yz());
        let lo: Vec<f64> = (0..2).map(|y| (yz[y][0] - xy[1][y]).max(0.0)).collect();
        let hi: Vec<f64> = (0..2).map(|y| xy[0][y].min(yz[y][0])).collect();
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return f64::INFINITY;
        }
        minimize(
            |t| {
                let mut pi = [0.0; 8];
                for y in 0..2 {
                    let t1 = yz[y][0] - t[y];
                    pi[2 * y] = t[y];
                    pi[2 * y + 1] = xy[0][y] - t[y];
                    pi[4 + 2 * y] = t1;
                    pi[4 + 2 * y + 1] = xy[1][y] - t1;
                }
                self.divergence(&pi)
            },
            &lo,
            &hi,
            g.points,
            g.zooms,
        )
        .0
    }

    /// Divergence part of `E1`: `pi_{XY} = p_{XY}`, `pi_Z = p_Z`.
    /// Free coordinates are `pi(x, y, 0)` for three of the four `(x, y)`.
    pub fn e1_divergence(&self, g: GridSpec) -> f64 {
        let (xy, pz) = (self.p_xy(), self.p_z());
        let hi = [xy[0][0], xy[0][1], xy[1][0]];
        minimize(
            |t| {
                let t11 = pz[0] - t[0] - t[1] - t[2];
                if t11 < -1e-15 || t11 > xy[1][1] + 1e-15 {
                    return f64::INFINITY;
                }
                let ts = [t[0], t[1], t[2], t11];
                let mut pi = [0.0; 8];
                for (k, &tv) in ts.iter().enumerate() {
                    let (x, y) = (k / 2, k % 2);
                    pi[4 * x + 2 * y] = tv;
                    pi[4 * x + 2 * y + 1] = xy[x][y] - tv;
                }
                self.divergence(&pi)
            },
            &[0.0; 3],
            &hi,
            g.points,
            g.zooms,
        )
        .0
    }

    /// `min(R0 + Rt0, Rj + Rtj, R0 + Rt0 + Rj + Rtj - H(Y | Z))`; the two
    /// conditional entropies given the other copy vanish.
    pub fn e1_rate_term(&self, j: usize) -> f64 {
        let b0 = self.r[0] + self.rt[0];
        let bj = self.r[j] + self.rt[j];
        let yz = self.p_yz();
        let pz = self.p_z();
        let h_y_given_z: f64 = (0..2)
            .map(|z| if pz[z] > 0.0 { pz[z] * h2(yz[0][z] / pz[z]) } else { 0.0 })
            .sum();
        b0.min(bj).min(b0 + bj - h_y_given_z)
    }

    pub fn e1(&self, j: usize, g: GridSpec) -> f64 {
        self.e1_divergence(g) + self.e1_rate_term(j)
    }

    /// `E2 = min_{pi_Z = p_Z} D + 1/2 [H_pi(Y|X) - (Rt0 + Rt1 + Rt2)]^+`.
    ///
    /// Every non-empty output subset is the single variable `Y`, so the
    /// inner minimum picks the largest shift. For a fixed `pi(y|x)` the
    /// divergence is smallest when `Y` ignores `Z` given `X` (convexity), so
    /// the search runs over `pi(x=0|z)` and `pi(y=0|x)`.
    pub fn e2(&self, g: GridSpec) -> f64 {
        let pz = self.p_z();
        let shift: f64 = self.rt.iter().sum();
        minimize(
            |t| {
                let x_given_z = [[t[0], 1.0 - t[0]], [t[1], 1.0 - t[1]]];
                let y_given_x = [[t[2], 1.0 - t[2]], [t[3], 1.0 - t[3]]];
                let mut pi = [0.0; 8];
                let mut xy = [0.0; 4];
                for x in 0..2 {
                    for y in 0..2 {
                        for z in 0..2 {
                            let v = pz[z] * x_given_z[z][x] * y_given_x[x][y];
                            pi[4 * x + 2 * y + z] = v;
                            xy[2 * x + y] += v;
                        }
                    }
                }
                let bracket = (conditional_entropy(&xy, 2) - shift).max(0.0);
                self.divergence(&pi) + 0.5 * bracket
            },
            &[0.0; 4],
            &[1.0; 4],
            g.points,
            g.zooms,
        )
        .0
    }
}
