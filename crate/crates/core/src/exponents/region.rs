//! Rate-region, randomization-rate and binning-rate inequality checks, and
//! the single-letter equivocation bound.

use serde::{Deserialize, Serialize};

use super::{ax_y, check_channel, RateVector, Y_SUBSETS};
use crate::error::{argument, Result};
use crate::prob::{compose, entropy, mutual_information, CondPmf, JointPmf};

/// Margins above this count as strictly satisfied.
pub const SATISFIED_MARGIN: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityMargin {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs` for `>` constraints, `rhs - lhs` for `<` constraints.
    pub margin: f64,
    pub satisfied: bool,
    /// The right-hand side reads a comma-separated `I(Y0,Yi|Zi)` term, taken
    /// here as the mutual information `I(Y0;Yi|Zi)`.
    pub interpreted: bool,
}

impl InequalityMargin {
    fn greater(label: impl Into<String>, lhs: f64, rhs: f64, interpreted: bool) -> Self {
        let margin = lhs - rhs;
        InequalityMargin {
            label: label.into(),
            lhs,
            rhs,
            margin,
            satisfied: margin > SATISFIED_MARGIN,
            interpreted,
        }
    }

    fn less(label: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        let margin = rhs - lhs;
        InequalityMargin {
            label: label.into(),
            lhs,
            rhs,
            margin,
            satisfied: margin > SATISFIED_MARGIN,
            interpreted: false,
        }
    }
}

// Axis layout of the full joint used by the region checks.
const X: usize = 0;
const Y0: usize = 1;
const Y1: usize = 2;
const Y2: usize = 3;
const Z1: usize = 4;
const Z2: usize = 5;

/// `p(x, z1, z2) * chan(y0, y1, y2 | x)` laid out as `(X, Y0, Y1, Y2, Z1, Z2)`.
fn full_joint(p: &JointPmf, chan: &CondPmf) -> Result<JointPmf> {
    if p.rank() != 3 {
        return Err(argument("source must be a law of (X, Z1, Z2)"));
    }
    check_channel(&p.axes()[0], chan)?;
    compose(p, chan, &[0])?.permute(&[0, 3, 4, 5, 1, 2])
}

/// The eleven strict inequalities on `(R0, R1, R2)`.
pub fn check_rate_region(rates: &RateVector, p: &JointPmf, chan: &CondPmf) -> Result<Vec<InequalityMargin>> {
    let j = full_joint(p, chan)?;
    let i = |a: &[usize], b: &[usize], c: &[usize]| mutual_information(&j, a, b, c);
    let z = [Z1, Z2];
    let y = [Y1, Y2];
    let (r0, r1, r2) = (rates.r0, rates.r1, rates.r2);

    let i_x_y0_z: Vec<f64> = z.iter().map(|&zi| i(&[X], &[Y0], &[zi])).collect::<Result<_>>()?;
    let i_y0_yi_zi: Vec<f64> = (0..2).map(|k| i(&[Y0], &[y[k]], &[z[k]])).collect::<Result<_>>()?;
    let i_x_yi_y0zi: Vec<f64> = (0..2).map(|k| i(&[X], &[y[k]], &[Y0, z[k]])).collect::<Result<_>>()?;
    let i_y1_y2_xy0 = i(&[Y1], &[Y2], &[X, Y0])?;
    let i_y1y2_y0_x = i(&[Y1, Y2], &[Y0], &[X])?;

    let mut out = Vec::with_capacity(11);
    for k in 0..2 {
        out.push(InequalityMargin::greater(
            format!("R0 > I(X;Y0|Z{0}) - I(Y0;Y{0}|Z{0})", k + 1),
            r0,
            i_x_y0_z[k] - i_y0_yi_zi[k],
            true,
        ));
    }
    for (k, rk) in [r1, r2].into_iter().enumerate() {
        let idx = k + 1;
        out.push(InequalityMargin::greater(
            format!("R{idx} > I(X;Y{idx}|Z{idx}) - I(Y0;Y{idx}|Z{idx})"),
            rk,
            i(&[X], &[y[k]], &[z[k]])? - i_y0_yi_zi[k],
            true,
        ));
    }
    for (k, rk) in [r1, r2].into_iter().enumerate() {
        let idx = k + 1;
        out.push(InequalityMargin::greater(
            format!("R0 + R{idx} > I(X;Y0Y{idx}|Z{idx})"),
            r0 + rk,
            i(&[X], &[Y0, y[k]], &[z[k]])?,
            false,
        ));
    }
    out.push(InequalityMargin::greater(
        "R0 + R1 > I(X;Y0|Z2) + I(X;Y1|Y0Z1) - I(Y0;Y2|Z2)",
        r0 + r1,
        i_x_y0_z[1] + i_x_yi_y0zi[0] - i_y0_yi_zi[1],
        false,
    ));
    out.push(InequalityMargin::greater(
        "R0 + R2 > I(X;Y0|Z1) + I(X;Y2|Y0Z2) - I(Y0;Y1|Z1)",
        r0 + r2,
        i_x_y0_z[0] + i_x_yi_y0zi[1] - i_y0_yi_zi[0],
        false,
    ));
    out.push(InequalityMargin::greater(
        "R1 + R2 > I(X;Y1|Y0Z1) + I(X;Y2|Y0Z2) + I(Y1;Y2|XY0) - I(Y1Y2;Y0|X)",
        r1 + r2,
        i_x_yi_y0zi[0] + i_x_yi_y0zi[1] + i_y1_y2_xy0 - i_y1y2_y0_x,
        false,
    ));
    out.push(InequalityMargin::greater(
        "R0 + R1 + R2 > I(X;Y1|Y0Z1) + I(X;Y2|Y0Z2) + max_i I(Y0;X|Zi) + I(Y1;Y2|XY0)",
        r0 + r1 + r2,
        i_x_yi_y0zi[0] + i_x_yi_y0zi[1] + i_x_y0_z[0].max(i_x_y0_z[1]) + i_y1_y2_xy0,
        false,
    ));
    out.push(InequalityMargin::greater(
        "2R0 + R1 + R2 > I(X;Y1|Y0Z1) + I(X;Y2|Y0Z2) + I(Y0;X|Z1) + I(Y0;X|Z2) + I(Y1;Y2|XY0)",
        2.0 * r0 + r1 + r2,
        i_x_yi_y0zi[0] + i_x_yi_y0zi[1] + i_x_y0_z[0] + i_x_y0_z[1] + i_y1_y2_xy0,
        false,
    ));
    Ok(out)
}

/// `sum_{i in S} Rt_i < H(Y_S | X)` for the seven non-empty `S ⊆ {0,1,2}`.
pub fn check_tilde_region(rates: &RateVector, p: &JointPmf, chan: &CondPmf) -> Result<Vec<InequalityMargin>> {
    let j = full_joint(p, chan)?;
    Y_SUBSETS
        .iter()
        .map(|s| {
            let lhs: f64 = s.iter().map(|&i| rates.rt(i)).sum();
            let vars: Vec<usize> = s.iter().map(|&i| ax_y(i)).collect();
            let names: Vec<String> = s.iter().map(|i| format!("Y{i}")).collect();
            let rts: Vec<String> = s.iter().map(|i| format!("Rt{i}")).collect();
            Ok(InequalityMargin::less(
                format!("{} < H({}|X)", rts.join(" + "), names.join("")),
                lhs,
                entropy(&j, &vars, &[X])?,
            ))
        })
        .collect()
}

/// The three binning-rate conditions of detector `j`.
pub fn check_binning_conditions(
    rates: &RateVector,
    p: &JointPmf,
    chan: &CondPmf,
    j: usize,
) -> Result<Vec<InequalityMargin>> {
    if j != 1 && j != 2 {
        return Err(argument(format!("detector index {j} must be 1 or 2")));
    }
    let full = full_joint(p, chan)?;
    let (yj, zj) = (ax_y(j), if j == 1 { Z1 } else { Z2 });
    let b0 = rates.r0 + rates.rt0;
    let bj = rates.r(j) + rates.rt(j);
    Ok(vec![
        InequalityMargin::greater(
            format!("R0 + Rt0 > H(Y0|Y{j}Z{j})"),
            b0,
            entropy(&full, &[Y0], &[yj, zj])?,
            false,
        ),
        InequalityMargin::greater(
            format!("R{j} + Rt{j} > H(Y{j}|Y0Z{j})"),
            bj,
            entropy(&full, &[yj], &[Y0, zj])?,
            false,
        ),
        InequalityMargin::greater(
            format!("R0 + Rt0 + R{j} + Rt{j} > H(Y0Y{j}|Z{j})"),
            b0 + bj,
            entropy(&full, &[Y0, yj], &[zj])?,
            false,
        ),
    ])
}

/// `H(S_i | Z_i, Y0, Y_i)` for a source law on `(X, Z1, Z2, S1, S2)`.
pub fn privacy_bound(source: &JointPmf, chan: &CondPmf, i: usize) -> Result<f64> {
    if source.rank() != 5 {
        return Err(argument("source must be a law of (X, Z1, Z2, S1, S2)"));
    }
    if i != 1 && i != 2 {
        return Err(argument(format!("detector index {i} must be 1 or 2")));
    }
    check_channel(&source.axes()[0], chan)?;
    // Axes after composition: X Z1 Z2 S1 S2 Y0 Y1 Y2.
    let j = compose(source, chan, &[0])?;
    entropy(&j, &[2 + i], &[i, 5, 5 + i])
}
