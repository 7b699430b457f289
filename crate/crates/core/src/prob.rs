//! Finite-alphabet probability arithmetic.
//!
//! Tables are dense and row-major over their axes in declared order, last
//! axis fastest. Every constructor validates non-negativity and
//! normalization to within [`NORMALIZATION_TOLERANCE`]; nothing is silently
//! renormalized. Logs are base 2 and `0 log 0 = 0` throughout.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};

pub const NORMALIZATION_TOLERANCE: f64 = 1e-12;

/// A finite support set.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Alphabet {
    pub label: String,
    pub size: usize,
}

impl Alphabet {
    pub fn new(label: impl Into<String>, size: usize) -> Result<Self> {
        if size == 0 {
            return Err(argument("alphabet size must be at least 1"));
        }
        Ok(Alphabet {
            label: label.into(),
            size,
        })
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}[{}]", self.label, self.size)
    }
}

/// Row-major strides for a shape, last axis fastest.
pub(crate) fn strides(shape: &[usize]) -> Vec<usize> {
    let mut s = vec![1; shape.len()];
    for i in (0..shape.len().saturating_sub(1)).rev() {
        s[i] = s[i + 1] * shape[i + 1];
    }
    s
}

/// `-x log2 x` with the `0 log 0 = 0` convention.
#[inline]
pub(crate) fn neg_xlogx(x: f64) -> f64 {
    if x > 0.0 {
        -x * x.log2()
    } else {
        0.0
    }
}

pub(crate) fn shannon(weights: &[f64]) -> f64 {
    weights.iter().map(|&w| neg_xlogx(w)).sum()
}

/// For every flat cell of `shape`, the flat index of its projection onto
/// `keep` (in the order given by `keep`).
pub(crate) fn projection_map(shape: &[usize], keep: &[usize]) -> (Vec<usize>, usize) {
    let full_strides = strides(shape);
    let kept_shape: Vec<usize> = keep.iter().map(|&a| shape[a]).collect();
    let kept_strides = strides(&kept_shape);
    let total: usize = shape.iter().product();
    let out_len: usize = kept_shape.iter().product();
    let map = (0..total)
        .map(|cell| {
            keep.iter()
                .zip(&kept_strides)
                .map(|(&axis, &ks)| (cell / full_strides[axis]) % shape[axis] * ks)
                .sum()
        })
        .collect();
    (map, out_len)
}

pub(crate) fn marginal_of(weights: &[f64], shape: &[usize], keep: &[usize]) -> Vec<f64> {
    let (map, len) = projection_map(shape, keep);
    let mut out = vec![0.0; len];
    for (w, &m) in weights.iter().zip(&map) {
        out[m] += w;
    }
    out
}

fn check_weights(weights: &[f64]) -> Result<()> {
    for (index, &value) in weights.iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeWeight { index, value });
        }
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
        return Err(Error::Normalization {
            sum,
            tolerance: NORMALIZATION_TOLERANCE,
        });
    }
    Ok(())
}

/// Dense probability table over a product of alphabets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TableDoc", into = "TableDoc")]
pub struct JointPmf {
    axes: Vec<Alphabet>,
    weights: Vec<f64>,
}

/// Wire form of a [`JointPmf`]: axis list plus the flat row-major weights.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TableDoc {
    pub axes: Vec<Alphabet>,
    pub weights: Vec<f64>,
}

impl TryFrom<TableDoc> for JointPmf {
    type Error = Error;
    fn try_from(doc: TableDoc) -> Result<Self> {
        JointPmf::new(doc.axes, doc.weights)
    }
}

impl From<JointPmf> for TableDoc {
    fn from(p: JointPmf) -> Self {
        TableDoc {
            axes: p.axes,
            weights: p.weights,
        }
    }
}

impl JointPmf {
    pub fn new(axes: Vec<Alphabet>, weights: Vec<f64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(argument("a joint pmf needs at least one axis"));
        }
        if let Some(a) = axes.iter().find(|a| a.size == 0) {
            return Err(argument(format!("axis {} has size 0", a.label)));
        }
        let len: usize = axes.iter().map(|a| a.size).product();
        if weights.len() != len {
            return Err(Error::Shape(format!(
                "{} weights for a table of {} cells",
                weights.len(),
                len
            )));
        }
        check_weights(&weights)?;
        Ok(JointPmf { axes, weights })
    }

    /// Builds a table by evaluating `f` on every multi-index.
    pub fn from_fn(axes: Vec<Alphabet>, f: impl Fn(&[usize]) -> f64) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let len: usize = shape.iter().product();
        let mut idx = vec![0usize; shape.len()];
        let mut weights = Vec::with_capacity(len);
        for cell in 0..len {
            unravel_into(cell, &shape, &mut idx);
            weights.push(f(&idx));
        }
        JointPmf::new(axes, weights)
    }

    pub fn uniform(axes: Vec<Alphabet>) -> Result<Self> {
        let len: usize = axes.iter().map(|a| a.size).product();
        JointPmf::new(axes, vec![1.0 / len as f64; len])
    }

    pub fn point_mass(axes: Vec<Alphabet>, at: &[usize]) -> Result<Self> {
        let shape: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let cell = ravel(at, &shape)?;
        let mut weights = vec![0.0; shape.iter().product()];
        weights[cell] = 1.0;
        JointPmf::new(axes, weights)
    }

    /// Internal constructor for tables produced by exact operations on
    /// validated inputs.
    pub(crate) fn from_parts(axes: Vec<Alphabet>, weights: Vec<f64>) -> Self {
        debug_assert_eq!(weights.len(), axes.iter().map(|a| a.size).product::<usize>());
        JointPmf { axes, weights }
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rank(&self) -> usize {
        self.axes.len()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn prob(&self, at: &[usize]) -> Result<f64> {
        Ok(self.weights[ravel(at, &self.shape())?])
    }

    /// Reorders axes; `order[k]` is the old axis placed at position `k`.
    pub fn permute(&self, order: &[usize]) -> Result<JointPmf> {
        let mut seen = vec![false; self.rank()];
        if order.len() != self.rank() {
            return Err(argument("permutation length differs from rank"));
        }
        for &a in order {
            if a >= self.rank() || seen[a] {
                return Err(argument(format!("{order:?} is not a permutation")));
            }
            seen[a] = true;
        }
        let old_shape = self.shape();
        let old_strides = strides(&old_shape);
        let axes: Vec<Alphabet> = order.iter().map(|&a| self.axes[a].clone()).collect();
        let new_shape: Vec<usize> = axes.iter().map(|a| a.size).collect();
        let mut idx = vec![0usize; new_shape.len()];
        let weights = (0..self.len())
            .map(|cell| {
                unravel_into(cell, &new_shape, &mut idx);
                let old: usize = order.iter().zip(&idx).map(|(&a, &i)| i * old_strides[a]).sum();
                self.weights[old]
            })
            .collect();
        Ok(JointPmf::from_parts(axes, weights))
    }

    /// Independent joint `self x other`, axes concatenated.
    pub fn product(&self, other: &JointPmf) -> JointPmf {
        let mut axes = self.axes.clone();
        axes.extend(other.axes.iter().cloned());
        let weights = self
            .weights
            .iter()
            .flat_map(|&a| other.weights.iter().map(move |&b| a * b))
            .collect();
        JointPmf::from_parts(axes, weights)
    }

    fn same_axes(&self, other: &JointPmf) -> Result<()> {
        if self.axes != other.axes {
            return Err(argument(format!(
                "axis mismatch: {:?} vs {:?}",
                self.axes.iter().map(ToString::to_string).collect::<Vec<_>>(),
                other.axes.iter().map(ToString::to_string).collect::<Vec<_>>()
            )));
        }
        Ok(())
    }

    fn check_subset(&self, subset: &[usize], name: &str) -> Result<()> {
        let mut seen = vec![false; self.rank()];
        for &a in subset {
            if a >= self.rank() {
                return Err(argument(format!("{name}: axis {a} out of range")));
            }
            if seen[a] {
                return Err(argument(format!("{name}: axis {a} repeated")));
            }
            seen[a] = true;
        }
        Ok(())
    }

    /// Entropy of the marginal on `axes` (order irrelevant).
    pub(crate) fn marginal_entropy(&self, axes: &[usize]) -> f64 {
        if axes.is_empty() {
            return 0.0;
        }
        shannon(&marginal_of(&self.weights, &self.shape(), axes))
    }
}

pub(crate) fn ravel(at: &[usize], shape: &[usize]) -> Result<usize> {
    if at.len() != shape.len() {
        return Err(argument("index rank differs from table rank"));
    }
    let mut cell = 0;
    for (&i, &s) in at.iter().zip(shape) {
        if i >= s {
            return Err(argument(format!("index {i} out of range for axis of size {s}")));
        }
        cell = cell * s + i;
    }
    Ok(cell)
}

pub(crate) fn unravel_into(mut cell: usize, shape: &[usize], out: &mut [usize]) {
    for k in (0..shape.len()).rev() {
        out[k] = cell % shape[k];
        cell /= shape[k];
    }
}

/// Probability mass function over a single alphabet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointPmf", into = "JointPmf")]
pub struct Pmf(JointPmf);

impl TryFrom<JointPmf> for Pmf {
    type Error = Error;
    fn try_from(p: JointPmf) -> Result<Self> {
        if p.rank() != 1 {
            return Err(argument("a pmf has exactly one axis"));
        }
        Ok(Pmf(p))
    }
}

impl From<Pmf> for JointPmf {
    fn from(p: Pmf) -> Self {
        p.0
    }
}

impl Pmf {
    pub fn new(alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        Ok(Pmf(JointPmf::new(vec![alphabet], weights)?))
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.0.axes[0]
    }

    pub fn weights(&self) -> &[f64] {
        &self.0.weights
    }

    pub fn as_joint(&self) -> &JointPmf {
        &self.0
    }
}

/// Conditional pmf: one row over `to_axes` per joint symbol of `from_axes`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CondDoc", into = "CondDoc")]
pub struct CondPmf {
    from_axes: Vec<Alphabet>,
    to_axes: Vec<Alphabet>,
    rows: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CondDoc {
    pub from_axes: Vec<Alphabet>,
    pub to_axes: Vec<Alphabet>,
    /// Flat rows, one block of `|to|` weights per `from` symbol.
    pub weights: Vec<f64>,
}

impl TryFrom<CondDoc> for CondPmf {
    type Error = Error;
    fn try_from(doc: CondDoc) -> Result<Self> {
        CondPmf::new(doc.from_axes, doc.to_axes, doc.weights)
    }
}

impl From<CondPmf> for CondDoc {
    fn from(c: CondPmf) -> Self {
        CondDoc {
            from_axes: c.from_axes,
            to_axes: c.to_axes,
            weights: c.rows,
        }
    }
}

impl CondPmf {
    pub fn new(from_axes: Vec<Alphabet>, to_axes: Vec<Alphabet>, rows: Vec<f64>) -> Result<Self> {
        if from_axes.is_empty() || to_axes.is_empty() {
            return Err(argument("a conditional pmf needs source and target axes"));
        }
        let from: usize = from_axes.iter().map(|a| a.size).product();
        let to: usize = to_axes.iter().map(|a| a.size).product();
        if rows.len() != from * to {
            return Err(Error::Shape(format!(
                "{} weights for {from} rows of {to}",
                rows.len()
            )));
        }
        for (r, row) in rows.chunks(to).enumerate() {
            check_weights(row).map_err(|e| match e {
                Error::Normalization { sum, tolerance } => Error::Argument(format!(
                    "row {r} sums to {sum}, expected 1 within {tolerance:e}"
                )),
                Error::NegativeWeight { index, value } => Error::NegativeWeight {
                    index: r * to + index,
                    value,
                },
                other => other,
            })?;
        }
        Ok(CondPmf {
            from_axes,
            to_axes,
            rows,
        })
    }

    pub fn from_fn(
        from_axes: Vec<Alphabet>,
        to_axes: Vec<Alphabet>,
        f: impl Fn(&[usize], &[usize]) -> f64,
    ) -> Result<Self> {
        let fs: Vec<usize> = from_axes.iter().map(|a| a.size).collect();
        let ts: Vec<usize> = to_axes.iter().map(|a| a.size).collect();
        let (nf, nt) = (fs.iter().product::<usize>(), ts.iter().product::<usize>());
        let mut a = vec![0; fs.len()];
        let mut b = vec![0; ts.len()];
        let mut rows = Vec::with_capacity(nf * nt);
        for i in 0..nf {
            unravel_into(i, &fs, &mut a);
            for j in 0..nt {
                unravel_into(j, &ts, &mut b);
                rows.push(f(&a, &b));
            }
        }
        CondPmf::new(from_axes, to_axes, rows)
    }

    /// Channel that maps each source symbol to a single target symbol.
    pub fn deterministic(
        from_axes: Vec<Alphabet>,
        to_axes: Vec<Alphabet>,
        map: impl Fn(usize) -> usize,
    ) -> Result<Self> {
        let nf: usize = from_axes.iter().map(|a| a.size).product();
        let nt: usize = to_axes.iter().map(|a| a.size).product();
        let mut rows = vec![0.0; nf * nt];
        for i in 0..nf {
            let j = map(i);
            if j >= nt {
                return Err(argument(format!("deterministic map sends {i} to {j} >= {nt}")));
            }
            rows[i * nt + j] = 1.0;
        }
        CondPmf::new(from_axes, to_axes, rows)
    }

    pub fn from_axes(&self) -> &[Alphabet] {
        &self.from_axes
    }

    pub fn to_axes(&self) -> &[Alphabet] {
        &self.to_axes
    }

    pub fn from_size(&self) -> usize {
        self.from_axes.iter().map(|a| a.size).product()
    }

    pub fn to_size(&self) -> usize {
        self.to_axes.iter().map(|a| a.size).product()
    }

    pub fn row(&self, from: usize) -> &[f64] {
        let t = self.to_size();
        &self.rows[from * t..(from + 1) * t]
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    /// `p(to | from)` on flat indices.
    #[inline]
    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.rows[from * self.to_size() + to]
    }
}

/// `H(vars | given)` in bits.
pub fn entropy(p: &JointPmf, vars: &[usize], given: &[usize]) -> Result<f64> {
    p.check_subset(vars, "vars")?;
    p.check_subset(given, "given")?;
    if vars.iter().any(|v| given.contains(v)) {
        return Err(argument("vars and given overlap"));
    }
    let mut all = given.to_vec();
    all.extend_from_slice(vars);
    Ok(p.marginal_entropy(&all) - p.marginal_entropy(given))
}

/// `I(a; b | given)` in bits.
pub fn mutual_information(p: &JointPmf, a: &[usize], b: &[usize], given: &[usize]) -> Result<f64> {
    p.check_subset(a, "a")?;
    p.check_subset(b, "b")?;
    p.check_subset(given, "given")?;
    let overlap = |x: &[usize], y: &[usize]| x.iter().any(|v| y.contains(v));
    if overlap(a, b) || overlap(a, given) || overlap(b, given) {
        return Err(argument("mutual information subsets must be pairwise disjoint"));
    }
    let mut ab = b.to_vec();
    ab.extend_from_slice(given);
    Ok(entropy(p, a, given)? - entropy(p, a, &ab)?)
}

/// `D(p || q)` in bits; `+inf` when `p` charges a cell that `q` does not.
pub fn kl_divergence(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    p.same_axes(q)?;
    Ok(kl_slices(&p.weights, &q.weights))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    let mut d = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            d += a * (a / b).log2();
        }
    }
    d
}

pub fn tv_distance(p: &JointPmf, q: &JointPmf) -> Result<f64> {
    p.same_axes(q)?;
    Ok(tv_slices(&p.weights, &q.weights))
}

pub(crate) fn tv_slices(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Sums out every axis not in `keep`; the result's axes follow `keep`'s order.
pub fn marginalize(p: &JointPmf, keep: &[usize]) -> Result<JointPmf> {
    if keep.is_empty() {
        return Err(argument("marginalize needs at least one axis to keep"));
    }
    p.check_subset(keep, "keep")?;
    let axes = keep.iter().map(|&a| p.axes[a].clone()).collect();
    Ok(JointPmf::from_parts(axes, marginal_of(&p.weights, &p.shape(), keep)))
}

/// Joint law of `p` followed by channel `c`, where `c` reads the axes
/// `from_axes` of `p`. Result axes are `p`'s axes followed by `c`'s targets.
pub fn compose(p: &JointPmf, c: &CondPmf, from_axes: &[usize]) -> Result<JointPmf> {
    p.check_subset(from_axes, "from_axes")?;
    if from_axes.len() != c.from_axes.len()
        || from_axes.iter().zip(&c.from_axes).any(|(&a, alph)| p.axes[a] != *alph)
    {
        return Err(argument("channel inputs do not match the selected axes"));
    }
    let (map, _) = projection_map(&p.shape(), from_axes);
    let t = c.to_size();
    let mut weights = Vec::with_capacity(p.len() * t);
    for (cell, &w) in p.weights.iter().enumerate() {
        weights.extend(c.row(map[cell]).iter().map(|&r| w * r));
    }
    let mut axes = p.axes.clone();
    axes.extend(c.to_axes.iter().cloned());
    Ok(JointPmf::from_parts(axes, weights))
}

/// Upper bound on an entropy gap in terms of total variation `theta`.
///
/// Unconditional (`theta <= 1/4`): `|H_p(X) - H_q(X)| <= -2 theta log(2 theta / |X|)`.
/// Conditional (`theta <= 1/(2e)`): `|H_p(Y|X) - H_q(Y|X)| <= -5 theta log(4 theta / |Y|)`.
pub fn entropy_continuity_bound(theta: f64, out_alphabet_size: usize, conditional: bool) -> Result<f64> {
    if out_alphabet_size == 0 {
        return Err(argument("alphabet size must be at least 1"));
    }
    let size = out_alphabet_size as f64;
    let (limit, bound) = if conditional {
        (1.0 / (2.0 * std::f64::consts::E), -5.0 * theta * (4.0 * theta / size).log2())
    } else {
        (0.25, -2.0 * theta * (2.0 * theta / size).log2())
    };
    if !(theta > 0.0 && theta <= limit) {
        return Err(argument(format!("theta = {theta} outside (0, {limit}]")));
    }
    Ok(bound)
}
