//! Achievable type-II error exponents for the two detectors.
//!
//! Every quantity for detector `j` lives on the joint alphabet
//! `X x Y0 x Y1 x Y2 x Zj` (in that axis order). The reference measure is
//! `r = q_{X,Zj} p_{Y|X}` and the three exponents are
//!
//! * `E0 = min D(pi || r)` over `pi_{X,Y} = p_{X,Y}`, `pi_{Y0,Yj,Zj} = p_{Y0,Yj,Zj}`;
//! * `E1 = min D(pi || r)` over `pi_{X,Y} = p_{X,Y}`, `pi_{Zj} = p_{Zj}`, plus
//!   `min_S sum_{i in S}(R_i + Rt_i) - H_p(Y_S | Zj, Y_{S^c})` for `S ⊆ {0, j}`;
//! * `E2 = min D(pi || r) + 1/2 [min_S H_pi(Y_S | X) - sum_{i in S} Rt_i]^+`
//!   over `pi_{Zj} = p_{Zj}`, with `S` ranging over non-empty subsets of
//!   `{0, 1, 2}`.
//!
//! Passing a blocklength `n` yields the finite-n variants, which subtract
//! the method-of-types slack terms.

mod region;
pub(crate) mod solver;

pub use region::{
    check_binning_conditions, check_rate_region, check_tilde_region, privacy_bound, InequalityMargin,
    SATISFIED_MARGIN,
};
pub use solver::SolverDiag;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Result};
use crate::osrb::{correction_terms, subset_product};
use crate::prob::{compose, entropy, marginalize, CondPmf, JointPmf};
use solver::{BracketProblem, BracketTerm, MarginalConstraint};

/// Axis positions on the per-detector joint alphabet.
pub const AX_X: usize = 0;
pub const AX_Y0: usize = 1;
pub const AX_Z: usize = 4;

pub const fn ax_y(i: usize) -> usize {
    1 + i
}

/// Null and alternative laws of `(X, Z1, Z2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisPair {
    p: JointPmf,
    q: JointPmf,
}

/// Tolerance for the shared-marginal requirement `p_X = q_X`.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

impl HypothesisPair {
    pub fn new(p: JointPmf, q: JointPmf) -> Result<Self> {
        if p.rank() != 3 {
            return Err(argument("hypotheses must be laws of (X, Z1, Z2)"));
        }
        if p.axes() != q.axes() {
            return Err(argument("null and alternative use different alphabets"));
        }
        let px = marginalize(&p, &[0])?;
        let qx = marginalize(&q, &[0])?;
        let gap = crate::types::max_abs_diff(px.weights(), qx.weights());
        if gap > MARGINAL_TOLERANCE {
            return Err(argument(format!(
                "p_X and q_X differ by {gap:e} (tolerance {MARGINAL_TOLERANCE:e})"
            )));
        }
        Ok(HypothesisPair { p, q })
    }

    pub fn p(&self) -> &JointPmf {
        &self.p
    }

    pub fn q(&self) -> &JointPmf {
        &self.q
    }
}

/// Message rates `R` and shared-randomness rates `Rt`, bits per symbol.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RateVector {
    pub r0: f64,
    pub r1: f64,
    pub r2: f64,
    pub rt0: f64,
    pub rt1: f64,
    pub rt2: f64,
}

impl RateVector {
    pub fn new(r: [f64; 3], rt: [f64; 3]) -> Result<Self> {
        let v = RateVector {
            r0: r[0],
            r1: r[1],
            r2: r[2],
            rt0: rt[0],
            rt1: rt[1],
            rt2: rt[2],
        };
        v.validate()?;
        Ok(v)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [
            ("r0", self.r0),
            ("r1", self.r1),
            ("r2", self.r2),
            ("rt0", self.rt0),
            ("rt1", self.rt1),
            ("rt2", self.rt2),
        ] {
            if !(x >= 0.0) || !x.is_finite() {
                return Err(argument(format!("rate {name} = {x} must be finite and non-negative")));
            }
        }
        Ok(())
    }

    pub fn r(&self, i: usize) -> f64 {
        [self.r0, self.r1, self.r2][i]
    }

    pub fn rt(&self, i: usize) -> f64 {
        [self.rt0, self.rt1, self.rt2][i]
    }
}

/// One solved exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentValue {
    /// The exponent, finite-n corrections included when requested.
    #[serde(with = "crate::serde_ext::float")]
    pub value: f64,
    /// The constrained divergence minimum on its own.
    #[serde(with = "crate::serde_ext::float")]
    pub divergence: f64,
    /// Rate surplus term (E1) or bracket contribution (E2); 0 for E0.
    #[serde(with = "crate::serde_ext::float")]
    pub rate_term: f64,
    /// Finite-n slack that was subtracted; 0 in the asymptotic form.
    pub correction: f64,
    /// Subset of `{0,1,2}` attaining the inner minimum, when one exists.
    pub subset: Option<Vec<usize>>,
    pub argmin: Option<JointPmf>,
    pub diag: SolverDiag,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub detector: usize,
    pub n: Option<u64>,
    pub e0: ExponentValue,
    pub e1: ExponentValue,
    pub e2: ExponentValue,
    #[serde(with = "crate::serde_ext::float")]
    pub theta_star: f64,
    /// Which of `e0`, `e1`, `e2` attains `theta_star` (lowest on ties).
    pub attained_by: String,
    pub argmin_pi: Option<JointPmf>,
}

fn check_detector(j: usize) -> Result<()> {
    if j == 1 || j == 2 {
        Ok(())
    } else {
        Err(argument(format!("detector index {j} must be 1 or 2")))
    }
}

pub(crate) fn check_channel(x: &crate::prob::Alphabet, chan: &CondPmf) -> Result<()> {
    if chan.from_axes() != std::slice::from_ref(x) {
        return Err(argument(format!(
            "channel reads {:?}, expected the single axis {x}",
            chan.from_axes().iter().map(ToString::to_string).collect::<Vec<_>>()
        )));
    }
    if chan.to_axes().len() != 3 {
        return Err(argument("channel must output (Y0, Y1, Y2)"));
    }
    Ok(())
}

/// `law(X, Zj) * chan` laid out as `(X, Y0, Y1, Y2, Zj)`.
pub(crate) fn detector_joint(law: &JointPmf, chan: &CondPmf, j: usize) -> Result<JointPmf> {
    let xz = marginalize(law, &[0, j])?;
    compose(&xz, chan, &[0])?.permute(&[0, 2, 3, 4, 1])
}

struct Setup {
    p: JointPmf,
    r: JointPmf,
    shape: Vec<usize>,
}

fn setup(hyp: &HypothesisPair, chan: &CondPmf, j: usize) -> Result<Setup> {
    check_detector(j)?;
    check_channel(&hyp.p.axes()[0], chan)?;
    let p = detector_joint(&hyp.p, chan, j)?;
    let r = detector_joint(&hyp.q, chan, j)?;
    let shape = p.shape();
    Ok(Setup { p, r, shape })
}

fn constraint(p: &JointPmf, axes: &[usize]) -> Result<MarginalConstraint> {
    Ok(MarginalConstraint {
        axes: axes.to_vec(),
        target: marginalize(p, axes)?.weights().to_vec(),
    })
}

/// `log2(n+1)/n * |X| |Y0||Y1||Y2| |Zj|`.
pub fn nu_correction(shape: &[usize], n: u64) -> f64 {
    let cells: usize = shape.iter().product();
    (n as f64 + 1.0).log2() / n as f64 * cells as f64
}

fn check_n(n: Option<u64>) -> Result<()> {
    if n == Some(0) {
        return Err(argument("blocklength must be at least 1"));
    }
    Ok(())
}

pub fn exponent_e0(hyp: &HypothesisPair, chan: &CondPmf, j: usize, n: Option<u64>) -> Result<ExponentValue> {
    check_n(n)?;
    let s = setup(hyp, chan, j)?;
    let cons = [
        constraint(&s.p, &[AX_X, 1, 2, 3])?,
        constraint(&s.p, &[AX_Y0, ax_y(j), AX_Z])?,
    ];
    let sol = solver::i_projection(s.r.weights(), &s.shape, &cons);
    let correction = n.map_or(0.0, |n| nu_correction(&s.shape, n));
    Ok(ExponentValue {
        value: sol.value - correction,
        divergence: sol.value,
        rate_term: 0.0,
        correction,
        subset: None,
        argmin: sol.argmin.map(|w| JointPmf::from_parts(s.p.axes().to_vec(), w)),
        diag: sol.diag,
    })
}

/// `min_{S ⊆ {0,j}, S ≠ ∅} sum_{i in S}(R_i + Rt_i) - H_p(Y_S | Zj, Y_{S^c})`
/// and the attaining subset.
pub fn e1_rate_term(hyp: &HypothesisPair, chan: &CondPmf, rates: &RateVector, j: usize) -> Result<(f64, Vec<usize>)> {
    let s = setup(hyp, chan, j)?;
    rate_term(&s.p, rates, j)
}

fn rate_term(p: &JointPmf, rates: &RateVector, j: usize) -> Result<(f64, Vec<usize>)> {
    let mut best: Option<(f64, Vec<usize>)> = None;
    for subset in [vec![0], vec![j], vec![0, j]] {
        let rest: Vec<usize> = [0, j].into_iter().filter(|i| !subset.contains(i)).collect();
        let vars: Vec<usize> = subset.iter().map(|&i| ax_y(i)).collect();
        let mut given = vec![AX_Z];
        given.extend(rest.iter().map(|&i| ax_y(i)));
        let h = entropy(p, &vars, &given)?;
        let budget: f64 = subset.iter().map(|&i| rates.r(i) + rates.rt(i)).sum();
        let v = budget - h;
        if best.as_ref().is_none_or(|(b, _)| v < *b) {
            best = Some((v, subset));
        }
    }
    Ok(best.expect("three candidate subsets"))
}

/// `log2(3)/n + nu`; the typical-set slack inside it is taken as 0.
pub fn kappa_correction(shape: &[usize], n: u64) -> f64 {
    3f64.log2() / n as f64 + nu_correction(shape, n)
}

pub fn exponent_e1(
    hyp: &HypothesisPair,
    chan: &CondPmf,
    rates: &RateVector,
    j: usize,
    n: Option<u64>,
) -> Result<ExponentValue> {
    check_n(n)?;
    rates.validate()?;
    let s = setup(hyp, chan, j)?;
    let cons = [
        constraint(&s.p, &[AX_X, 1, 2, 3])?,
        constraint(&s.p, &[AX_Z])?,
    ];
    let sol = solver::i_projection(s.r.weights(), &s.shape, &cons);
    let (term, subset) = rate_term(&s.p, rates, j)?;
    let correction = n.map_or(0.0, |n| kappa_correction(&s.shape, n));
    Ok(ExponentValue {
        value: sol.value + term - correction,
        divergence: sol.value,
        rate_term: term,
        correction,
        subset: Some(subset),
        argmin: sol.argmin.map(|w| JointPmf::from_parts(s.p.axes().to_vec(), w)),
        diag: sol.diag,
    })
}

/// Non-empty subsets of `{0,1,2}` in the order singletons, pairs, triple.
pub const Y_SUBSETS: [&[usize]; 7] = [&[0], &[1], &[2], &[0, 1], &[0, 2], &[1, 2], &[0, 1, 2]];

pub fn exponent_e2(
    hyp: &HypothesisPair,
    chan: &CondPmf,
    rates: &RateVector,
    j: usize,
    n: Option<u64>,
) -> Result<ExponentValue> {
    check_n(n)?;
    rates.validate()?;
    let s = setup(hyp, chan, j)?;
    let y_sizes = &s.shape[1..4];
    let slack = n.map(|n| correction_terms(s.shape[AX_X], y_sizes, n));
    let terms: Vec<BracketTerm> = Y_SUBSETS
        .iter()
        .map(|subset| {
            let delta = match (&slack, n) {
                (Some(_), Some(n)) => {
                    crate::osrb::delta_term(s.shape[AX_X], subset_product(y_sizes, subset), 3, n)
                }
                _ => 0.0,
            };
            BracketTerm {
                y_axes: subset.iter().map(|&i| ax_y(i)).collect(),
                shift: subset.iter().map(|&i| rates.rt(i)).sum::<f64>() + delta,
            }
        })
        .collect();
    let z_target = marginalize(&s.p, &[AX_Z])?.weights().to_vec();
    let problem = BracketProblem {
        reference: s.r.weights(),
        shape: &s.shape,
        group_axis: AX_Z,
        group_target: &z_target,
        x_axes: vec![AX_X],
        terms,
    };
    let sol = problem.solve();
    let correction = slack.map_or(0.0, |c| c.eps_n);
    Ok(ExponentValue {
        value: sol.value - correction,
        divergence: sol.divergence_only,
        rate_term: sol.value - sol.divergence_only,
        correction,
        subset: sol.term.map(|t| Y_SUBSETS[t].to_vec()),
        argmin: sol.argmin.map(|w| JointPmf::from_parts(s.p.axes().to_vec(), w)),
        diag: sol.diag,
    })
}

/// All three exponents of detector `j` and their minimum.
pub fn theta_star(
    hyp: &HypothesisPair,
    chan: &CondPmf,
    rates: &RateVector,
    j: usize,
    n: Option<u64>,
) -> Result<ExponentReport> {
    let e0 = exponent_e0(hyp, chan, j, n)?;
    let e1 = exponent_e1(hyp, chan, rates, j, n)?;
    let e2 = exponent_e2(hyp, chan, rates, j, n)?;
    let mut pick = (0, e0.value);
    for (k, v) in [(1, e1.value), (2, e2.value)] {
        if v < pick.1 {
            pick = (k, v);
        }
    }
    let argmin_pi = [&e0, &e1, &e2][pick.0].argmin.clone();
    Ok(ExponentReport {
        detector: j,
        n,
        theta_star: pick.1,
        attained_by: ["e0", "e1", "e2"][pick.0].to_string(),
        argmin_pi,
        e0,
        e1,
        e2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Alphabet;

    fn ax(l: &str, k: usize) -> Alphabet {
        Alphabet::new(l, k).unwrap()
    }

    fn xz_axes() -> Vec<Alphabet> {
        vec![ax("X", 2), ax("Z1", 2), ax("Z2", 2)]
    }

    /// X uniform, each Zi an independent BSC(b) of X.
    fn source(b: f64) -> JointPmf {
        JointPmf::from_fn(xz_axes(), |i| {
            let f = |z: usize| if z == i[0] { 1.0 - b } else { b };
            0.5 * f(i[1]) * f(i[2])
        })
        .unwrap()
    }

    /// Y0 = BSC(a)(X), Y1 = Y2 = Y0.
    fn copy_channel(a: f64) -> CondPmf {
        CondPmf::from_fn(vec![ax("X", 2)], vec![ax("Y0", 2), ax("Y1", 2), ax("Y2", 2)], |x, y| {
            if y[0] != y[1] || y[0] != y[2] {
                0.0
            } else if y[0] == x[0] {
                1.0 - a
            } else {
                a
            }
        })
        .unwrap()
    }

    #[test]
    fn q_equal_p_gives_zero_e0() {
        let hyp = HypothesisPair::new(source(0.2), source(0.2)).unwrap();
        for j in [1, 2] {
            let e0 = exponent_e0(&hyp, &copy_channel(0.1), j, None).unwrap();
            assert!(e0.value.abs() < 1e-12, "{}", e0.value);
        }
    }

    #[test]
    fn nesting_of_divergence_parts() {
        let hyp = HypothesisPair::new(source(0.1), source(0.35)).unwrap();
        let chan = copy_channel(0.2);
        let rates = RateVector::new([0.5; 3], [0.05; 3]).unwrap();
        let r = theta_star(&hyp, &chan, &rates, 1, None).unwrap();
        assert!(r.e2.divergence <= r.e1.divergence + 1e-9);
        assert!(r.e1.divergence <= r.e0.divergence + 1e-9);
        assert_eq!(r.theta_star, r.e0.value.min(r.e1.value).min(r.e2.value));
    }

    #[test]
    fn rejects_mismatched_marginals() {
        let q = JointPmf::from_fn(xz_axes(), |i| if i[0] == 0 { 0.15 } else { 0.1 }).unwrap();
        assert!(HypothesisPair::new(source(0.2), q).is_err());
    }

    #[test]
    fn rejects_bad_detector_index() {
        let hyp = HypothesisPair::new(source(0.2), source(0.3)).unwrap();
        assert!(exponent_e0(&hyp, &copy_channel(0.1), 3, None).is_err());
    }
}
