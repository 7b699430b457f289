//! Monte Carlo model of the binning protocol over the Gray-Wyner network.
//!
//! An encoder observes `x^n`, draws `(y0, y1, y2)^n` through the auxiliary
//! channel, and sends bin indices `m_i = B_{M,i}(y_i)` while `f_i =
//! B_{F,i}(y_i)` play the role of shared randomness. Detector `j` sees
//! `(z_j^n, m0, mj, f0, fj)` plus the joint type of `(x, y0, y1, y2)` and
//! accepts the null iff that type is typical and some pair in the
//! announced buckets is jointly typical with `z_j`.
//!
//! Two encoder modes exist. In mode `B` the shared randomness is drawn
//! first and `y` is sampled from the channel restricted to the `f`
//! buckets; in mode `A` `y` is drawn from the plain channel and `f` is read
//! off the bins.

mod binning;
mod detector;
mod duality;
mod encoder;
mod equivocation;
mod estimate;

pub use binning::{sample_binning, BinningRealization};
pub use detector::{detect, detect_outcome, DetectorOutcome};
pub use duality::mode_distance;
pub use encoder::{encode_protocol_a, encode_protocol_b, EncoderAbort, Transcript};
pub use equivocation::{estimate_equivocation, EquivocationMode, EquivocationReport};
pub use estimate::{estimate_errors, simulate_transcripts, ErrorReport, ErrorRow};

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::exponents::{HypothesisPair, RateVector};
use crate::prob::{marginalize, CondPmf, JointPmf};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProtocolMode {
    A,
    #[default]
    B,
}

/// Everything one simulation needs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    /// Law of `(X, Z1, Z2, S1, S2)` under the null.
    pub source: JointPmf,
    /// Law of `(X, Z1, Z2)` under the alternative.
    pub alt: JointPmf,
    /// `p(y0, y1, y2 | x)`.
    pub chan: CondPmf,
    pub rates: RateVector,
    pub n: u64,
    pub delta_prime: f64,
    pub seed: u64,
    pub mode: ProtocolMode,
    pub enumeration_budget: u64,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.source.rank() != 5 {
            return Err(argument("source must be a law of (X, Z1, Z2, S1, S2)"));
        }
        if self.alt.rank() != 3 || self.alt.axes() != &self.source.axes()[..3] {
            return Err(argument("alternative must be a law of the same (X, Z1, Z2)"));
        }
        self.hypotheses()?;
        crate::exponents::check_channel(&self.source.axes()[0], &self.chan)?;
        self.rates.validate()?;
        if self.n == 0 {
            return Err(argument("blocklength must be at least 1"));
        }
        if !(self.delta_prime > 0.0) {
            return Err(argument("delta_prime must be positive"));
        }
        let cost = self.encoder_cost();
        if cost > self.enumeration_budget as f64 {
            return Err(Error::Budget {
                what: format!("encoder candidates at n = {}", self.n),
                count: format!("{cost}"),
                budget: self.enumeration_budget,
            });
        }
        let maps: f64 = self.y_sizes().iter().map(|&k| (k as f64).powi(self.n as i32)).sum();
        if maps > self.enumeration_budget as f64 {
            return Err(Error::Budget {
                what: format!("binning map entries at n = {}", self.n),
                count: format!("{maps}"),
                budget: self.enumeration_budget,
            });
        }
        Ok(())
    }

    pub fn hypotheses(&self) -> Result<HypothesisPair> {
        HypothesisPair::new(marginalize(&self.source, &[0, 1, 2])?, self.alt.clone())
    }

    pub fn y_sizes(&self) -> [usize; 3] {
        let a = self.chan.to_axes();
        [a[0].size, a[1].size, a[2].size]
    }

    /// Number of `y` tuples the encoder may have to weigh for one `x^n`.
    ///
    /// For a channel that factorizes over `Y0, Y1, Y2` each output is
    /// sampled on its own, so the cost is the largest `|Y_i|^n`; otherwise
    /// it is `L^n` with `L` the largest number of output letters any input
    /// letter can reach.
    pub fn encoder_cost(&self) -> f64 {
        let n = self.n as i32;
        if encoder::factorizes(&self.chan) {
            self.y_sizes().iter().map(|&k| (k as f64).powi(n)).fold(0.0, f64::max)
        } else {
            let widest = (0..self.chan.from_size())
                .map(|x| self.chan.row(x).iter().filter(|&&w| w > 0.0).count())
                .max()
                .unwrap_or(0);
            (widest as f64).powi(n)
        }
    }

    /// `p_{X, Y0, Y1, Y2}` under the null.
    pub(crate) fn p_xy(&self) -> Result<JointPmf> {
        let px = marginalize(&self.source, &[0])?;
        crate::prob::compose(&px, &self.chan, &[0])
    }

    /// `p_{Y0, Yj, Zj}` under the null.
    pub(crate) fn p_y0_yj_zj(&self, j: usize) -> Result<JointPmf> {
        let d = crate::exponents::detector_joint(&marginalize(&self.source, &[0, 1, 2])?, &self.chan, j)?;
        marginalize(&d, &[crate::exponents::AX_Y0, crate::exponents::ax_y(j), crate::exponents::AX_Z])
    }
}

#[cfg(test)]
mod tests;
