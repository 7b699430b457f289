//! Method of types: n-types, type classes, conditional types, typicality and
//! constant-composition sampling.
//!
//! Counting is exact ([`BigUint`]); entropies of types are evaluated in
//! floating point from the rationals `count / n`.

use num_bigint::BigUint;
use num_traits::One;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::prob::{neg_xlogx, strides, Alphabet, JointPmf};

/// Empirical distribution with denominator `n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "NTypeDoc", into = "NTypeDoc")]
pub struct NType {
    alphabet: Alphabet,
    counts: Vec<u64>,
    n: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NTypeDoc {
    pub alphabet: Alphabet,
    pub counts: Vec<u64>,
}

impl TryFrom<NTypeDoc> for NType {
    type Error = Error;
    fn try_from(d: NTypeDoc) -> Result<Self> {
        NType::new(d.alphabet, d.counts)
    }
}

impl From<NType> for NTypeDoc {
    fn from(t: NType) -> Self {
        NTypeDoc {
            alphabet: t.alphabet,
            counts: t.counts,
        }
    }
}

impl NType {
    pub fn new(alphabet: Alphabet, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != alphabet.size {
            return Err(Error::Shape(format!(
                "{} counts for alphabet of size {}",
                counts.len(),
                alphabet.size
            )));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(argument("an n-type needs n >= 1"));
        }
        Ok(NType { alphabet, counts, n })
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64 / self.n as f64).collect()
    }

    pub fn to_pmf(&self) -> JointPmf {
        JointPmf::from_parts(vec![self.alphabet.clone()], self.frequencies())
    }

    /// `H(t)` in bits.
    pub fn entropy(&self) -> f64 {
        self.frequencies().into_iter().map(neg_xlogx).sum()
    }
}

/// Joint empirical distribution of several aligned sequences.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "JointNTypeDoc", into = "JointNTypeDoc")]
pub struct JointNType {
    axes: Vec<Alphabet>,
    counts: Vec<u64>,
    n: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct JointNTypeDoc {
    pub axes: Vec<Alphabet>,
    pub counts: Vec<u64>,
}

impl TryFrom<JointNTypeDoc> for JointNType {
    type Error = Error;
    fn try_from(d: JointNTypeDoc) -> Result<Self> {
        JointNType::new(d.axes, d.counts)
    }
}

impl From<JointNType> for JointNTypeDoc {
    fn from(t: JointNType) -> Self {
        JointNTypeDoc {
            axes: t.axes,
            counts: t.counts,
        }
    }
}

impl JointNType {
    pub fn new(axes: Vec<Alphabet>, counts: Vec<u64>) -> Result<Self> {
        if axes.is_empty() {
            return Err(argument("a joint type needs at least one axis"));
        }
        let len: usize = axes.iter().map(|a| a.size).product();
        if counts.len() != len {
            return Err(Error::Shape(format!("{} counts for {len} cells", counts.len())));
        }
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(argument("a joint type needs n >= 1"));
        }
        Ok(JointNType { axes, counts, n })
    }

    pub fn axes(&self) -> &[Alphabet] {
        &self.axes
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.size).collect()
    }

    pub fn to_pmf(&self) -> JointPmf {
        let n = self.n as f64;
        JointPmf::from_parts(
            self.axes.clone(),
            self.counts.iter().map(|&c| c as f64 / n).collect(),
        )
    }

    /// Type of the component on `axis`.
    pub fn marginal(&self, axis: usize) -> Result<NType> {
        if axis >= self.axes.len() {
            return Err(argument(format!("axis {axis} out of range")));
        }
        let shape = self.shape();
        let st = strides(&shape);
        let mut counts = vec![0u64; shape[axis]];
        for (cell, &c) in self.counts.iter().enumerate() {
            counts[(cell / st[axis]) % shape[axis]] += c;
        }
        NType::new(self.axes[axis].clone(), counts)
    }
}

/// A length-n string over a finite alphabet.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SequenceDoc", into = "SequenceDoc")]
pub struct Sequence {
    alphabet: Alphabet,
    symbols: Vec<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub alphabet: Alphabet,
    pub symbols: Vec<usize>,
}

impl TryFrom<SequenceDoc> for Sequence {
    type Error = Error;
    fn try_from(d: SequenceDoc) -> Result<Self> {
        Sequence::new(d.alphabet, d.symbols)
    }
}

impl From<Sequence> for SequenceDoc {
    fn from(s: Sequence) -> Self {
        SequenceDoc {
            alphabet: s.alphabet,
            symbols: s.symbols,
        }
    }
}

impl Sequence {
    pub fn new(alphabet: Alphabet, symbols: Vec<usize>) -> Result<Self> {
        if let Some((i, &s)) = symbols.iter().enumerate().find(|(_, &s)| s >= alphabet.size) {
            return Err(argument(format!(
                "symbol {s} at position {i} outside alphabet {alphabet}"
            )));
        }
        Ok(Sequence { alphabet, symbols })
    }

    pub(crate) fn from_parts(alphabet: Alphabet, symbols: Vec<usize>) -> Self {
        Sequence { alphabet, symbols }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Base-|alphabet| index of the sequence, first symbol most significant.
    pub fn rank(&self) -> usize {
        self.symbols
            .iter()
            .fold(0, |acc, &s| acc * self.alphabet.size + s)
    }

    pub fn from_rank(alphabet: Alphabet, n: usize, mut rank: usize) -> Self {
        let mut symbols = vec![0; n];
        for slot in symbols.iter_mut().rev() {
            *slot = rank % alphabet.size;
            rank /= alphabet.size;
        }
        Sequence { alphabet, symbols }
    }
}

/// `C(n + k - 1, k - 1)`, the number of n-types over `k` letters.
pub fn ntype_count(alphabet_size: usize, n: u64) -> BigUint {
    binomial(n + alphabet_size as u64 - 1, alphabet_size as u64 - 1)
}

fn binomial(n: u64, k: u64) -> BigUint {
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

/// All n-types on `alphabet`, first coordinate descending: for a binary
/// alphabet and n = 2 the order is (2,0), (1,1), (0,2).
pub fn enumerate_ntypes(alphabet: &Alphabet, n: u64, budget: u64) -> Result<Vec<NType>> {
    if n == 0 {
        return Err(argument("n must be at least 1"));
    }
    let count = ntype_count(alphabet.size, n);
    if count > BigUint::from(budget) {
        return Err(Error::Budget {
            what: format!("n-types of {alphabet} at n = {n}"),
            count: count.to_string(),
            budget,
        });
    }
    let mut out = Vec::new();
    let mut counts = vec![0u64; alphabet.size];
    fill(&mut counts, 0, n, &mut |c| {
        out.push(NType {
            alphabet: alphabet.clone(),
            counts: c.to_vec(),
            n,
        })
    });
    Ok(out)
}

fn fill(counts: &mut [u64], pos: usize, remaining: u64, emit: &mut impl FnMut(&[u64])) {
    if pos + 1 == counts.len() {
        counts[pos] = remaining;
        emit(counts);
        return;
    }
    for c in (0..=remaining).rev() {
        counts[pos] = c;
        fill(counts, pos + 1, remaining - c, emit);
    }
}

pub fn type_of(seq: &Sequence) -> Result<NType> {
    let mut counts = vec![0u64; seq.alphabet.size];
    for &s in &seq.symbols {
        counts[s] += 1;
    }
    NType::new(seq.alphabet.clone(), counts)
}

/// Joint type of aligned sequences; axes follow the order of `seqs`.
pub fn joint_type_of(seqs: &[&Sequence]) -> Result<JointNType> {
    let first = seqs
        .first()
        .ok_or_else(|| argument("joint_type_of needs at least one sequence"))?;
    let n = first.len();
    if seqs.iter().any(|s| s.len() != n) {
        return Err(argument("sequences have different lengths"));
    }
    let axes: Vec<Alphabet> = seqs.iter().map(|s| s.alphabet.clone()).collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.size).collect();
    let mut counts = vec![0u64; shape.iter().product()];
    for t in 0..n {
        let cell = seqs
            .iter()
            .zip(&shape)
            .fold(0, |acc, (s, &k)| acc * k + s.symbols[t]);
        counts[cell] += 1;
    }
    JointNType::new(axes, counts)
}

/// `n! / prod_a counts(a)!`.
pub fn type_class_size(t: &NType) -> BigUint {
    multinomial(t.n, &t.counts)
}

fn multinomial(n: u64, counts: &[u64]) -> BigUint {
    let den = counts
        .iter()
        .fold(BigUint::one(), |acc, &c| acc * factorial(c));
    factorial(n) / den
}

/// Number of sequences on the non-given axes having conditional type
/// `joint` given a fixed sequence whose type is `given_type`.
///
/// Fails if the marginal of `joint` on `given_axis` is not `given_type`.
pub fn conditional_type_class_size(
    joint: &JointNType,
    given_axis: usize,
    given_type: &NType,
) -> Result<BigUint> {
    let marginal = joint.marginal(given_axis)?;
    if marginal != *given_type {
        return Err(argument(format!(
            "joint type marginal {:?} on axis {given_axis} is inconsistent with {:?}",
            marginal.counts, given_type.counts
        )));
    }
    let shape = joint.shape();
    let st = strides(&shape);
    let mut rows: Vec<Vec<u64>> = vec![Vec::new(); shape[given_axis]];
    for (cell, &c) in joint.counts.iter().enumerate() {
        rows[(cell / st[given_axis]) % shape[given_axis]].push(c);
    }
    Ok(rows
        .iter()
        .zip(&given_type.counts)
        .fold(BigUint::one(), |acc, (row, &nx)| acc * multinomial(nx, row)))
}

/// Entrywise closeness: `max |a - b| < delta`.
pub fn is_delta_close(a: &JointPmf, b: &JointPmf, delta: f64) -> Result<bool> {
    if a.axes() != b.axes() {
        return Err(argument("is_delta_close: axis mismatch"));
    }
    if !(delta > 0.0) {
        return Err(argument("delta must be positive"));
    }
    Ok(max_abs_diff(a.weights(), b.weights()) < delta)
}

pub fn is_type_delta_close(t: &JointNType, b: &JointPmf, delta: f64) -> Result<bool> {
    is_delta_close(&t.to_pmf(), b, delta)
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Uniform draw from the type class of `t`.
pub fn sample_constant_composition<R: Rng + ?Sized>(t: &NType, rng: &mut R) -> Sequence {
    let mut symbols: Vec<usize> = t
        .counts
        .iter()
        .enumerate()
        .flat_map(|(a, &c)| std::iter::repeat_n(a, c as usize))
        .collect();
    symbols.shuffle(rng);
    Sequence::from_parts(t.alphabet.clone(), symbols)
}

/// Default typicality slack `c * n^{-1/3}`.
pub fn default_delta_prime(n: u64, c: f64) -> f64 {
    c * (n as f64).powf(-1.0 / 3.0)
}
