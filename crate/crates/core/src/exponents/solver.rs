//! Numerical kernels behind the exponent formulas.
//!
//! Two problem shapes occur:
//!
//! * I-projections `min D(pi || r)` under one or two marginal constraints,
//!   solved by iterative proportional fitting after a max-flow test decides
//!   whether any `pi` supported on `supp(r)` meets the constraints.
//! * Bracket problems `min D(pi || r) + 1/2 [H_pi(Y_S | X) - s]^+` under a
//!   single group-marginal constraint. For `c = lambda/2 <= 1/2` the
//!   Lagrangian `D + c H_pi(Y_S|X)` is convex in `pi`, so each term is a
//!   convex min-max in `lambda in [0,1]`; the inner problem is solved by the
//!   fixed-point iteration `pi ~ r * pi(y_S|x)^c` and the outer one by
//!   bisection on the sign of the bracket (the derivative of the dual).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::prob::{kl_slices, marginal_of, projection_map};

/// A linear marginal constraint `pi_{axes} = target`.
#[derive(Clone, Debug)]
pub(crate) struct MarginalConstraint {
    pub axes: Vec<usize>,
    pub target: Vec<f64>,
}

/// Convergence record attached to every solved exponent.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiag {
    pub iterations: u64,
    /// Upper bound minus lower bound on the optimum; 0 for closed forms.
    #[serde(with = "crate::serde_ext::float")]
    pub gap: f64,
    /// Largest absolute violation of any equality constraint at the argmin.
    #[serde(with = "crate::serde_ext::float")]
    pub constraint_violation: f64,
    /// Set when the value is `+inf` because no admissible `pi` exists.
    pub infeasible: Option<String>,
}

pub(crate) struct Solution {
    pub value: f64,
    pub argmin: Option<Vec<f64>>,
    pub diag: SolverDiag,
}

const IPF_TOLERANCE: f64 = 1e-13;
const IPF_MAX_SWEEPS: u64 = 200_000;
const FLOW_TOLERANCE: f64 = 1e-9;

/// `min D(pi || r)` subject to `constraints` (at most two).
pub(crate) fn i_projection(reference: &[f64], shape: &[usize], constraints: &[MarginalConstraint]) -> Solution {
    if let Some(reason) = infeasibility(reference, shape, constraints) {
        return Solution {
            value: f64::INFINITY,
            argmin: None,
            diag: SolverDiag {
                infeasible: Some(reason),
                ..Default::default()
            },
        };
    }
    let maps: Vec<(Vec<usize>, usize)> = constraints
        .iter()
        .map(|c| projection_map(shape, &c.axes))
        .collect();
    let mut pi = reference.to_vec();
    let mut sweeps = 0;
    let mut violation = f64::INFINITY;
    while sweeps < IPF_MAX_SWEEPS {
        sweeps += 1;
        for (c, (map, len)) in constraints.iter().zip(&maps) {
            let mut m = vec![0.0; *len];
            for (w, &k) in pi.iter().zip(map) {
                m[k] += w;
            }
            for (w, &k) in pi.iter_mut().zip(map) {
                if m[k] > 0.0 {
                    *w *= c.target[k] / m[k];
                }
            }
        }
        violation = max_violation(&pi, constraints, &maps);
        if violation < IPF_TOLERANCE {
            break;
        }
    }
    Solution {
        value: kl_slices(&pi, reference),
        argmin: Some(pi),
        diag: SolverDiag {
            iterations: sweeps,
            gap: 0.0,
            constraint_violation: violation,
            infeasible: None,
        },
    }
}

fn max_violation(pi: &[f64], constraints: &[MarginalConstraint], maps: &[(Vec<usize>, usize)]) -> f64 {
    let mut worst: f64 = 0.0;
    for (c, (map, len)) in constraints.iter().zip(maps) {
        let mut m = vec![0.0; *len];
        for (w, &k) in pi.iter().zip(map) {
            m[k] += w;
        }
        for (a, b) in m.iter().zip(&c.target) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Returns a reason when no `pi` with `supp(pi) ⊆ supp(r)` meets the
/// constraints.
fn infeasibility(reference: &[f64], shape: &[usize], constraints: &[MarginalConstraint]) -> Option<String> {
    for c in constraints {
        let rm = marginal_of(reference, shape, &c.axes);
        if let Some(k) = (0..rm.len()).find(|&k| c.target[k] > 0.0 && rm[k] <= 0.0) {
            return Some(format!(
                "target on axes {:?} charges cell {k} where the reference has no mass",
                c.axes
            ));
        }
    }
    match constraints {
        [a, b] => transport_infeasibility(reference, shape, a, b),
        [] | [_] => None,
        _ => unreachable!("at most two constraints are supported"),
    }
}

/// Splits the problem by the value of the shared axes and checks, per block,
/// that a coupling of the two targets fits inside the reference support.
fn transport_infeasibility(
    reference: &[f64],
    shape: &[usize],
    a: &MarginalConstraint,
    b: &MarginalConstraint,
) -> Option<String> {
    let shared: Vec<usize> = a.axes.iter().copied().filter(|x| b.axes.contains(x)).collect();
    let (shared_map, blocks) = projection_map(shape, &shared);
    let (a_map, _) = projection_map(shape, &a.axes);
    let (b_map, _) = projection_map(shape, &b.axes);
    for block in 0..blocks {
        let mut left: Vec<usize> = Vec::new();
        let mut right: Vec<usize> = Vec::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        for cell in 0..reference.len() {
            if shared_map[cell] != block {
                continue;
            }
            let (ka, kb) = (a_map[cell], b_map[cell]);
            if !left.contains(&ka) {
                left.push(ka);
            }
            if !right.contains(&kb) {
                right.push(kb);
            }
            if reference[cell] > 0.0 && a.target[ka] > 0.0 && b.target[kb] > 0.0 {
                edges.push((ka, kb));
            }
        }
        let supply: Vec<f64> = left.iter().map(|&k| a.target[k]).collect();
        let demand: Vec<f64> = right.iter().map(|&k| b.target[k]).collect();
        let total_a: f64 = supply.iter().sum();
        let total_b: f64 = demand.iter().sum();
        if (total_a - total_b).abs() > FLOW_TOLERANCE {
            return Some(format!(
                "targets disagree on the shared axes {shared:?}: {total_a} vs {total_b}"
            ));
        }
        let idx_edges: Vec<(usize, usize)> = edges
            .iter()
            .map(|(ka, kb)| {
                (
                    left.iter().position(|k| k == ka).unwrap(),
                    right.iter().position(|k| k == kb).unwrap(),
                )
            })
            .collect();
        let flow = max_flow_bipartite(&supply, &demand, &idx_edges);
        if total_a - flow > FLOW_TOLERANCE {
            return Some(format!(
                "no coupling of the targets on axes {:?} and {:?} fits the reference support \
                 (shared block {block}: mass {total_a}, transportable {flow})",
                a.axes, b.axes
            ));
        }
    }
    None
}

/// Edmonds-Karp on source -> left -> right -> sink with unbounded middle edges.
fn max_flow_bipartite(supply: &[f64], demand: &[f64], edges: &[(usize, usize)]) -> f64 {
    let (nl, nr) = (supply.len(), demand.len());
    let n = nl + nr + 2;
    let (s, t) = (nl + nr, nl + nr + 1);
    let mut cap = vec![vec![0.0f64; n]; n];
    for (i, &v) in supply.iter().enumerate() {
        cap[s][i] = v;
    }
    for (k, &v) in demand.iter().enumerate() {
        cap[nl + k][t] = v;
    }
    for &(i, k) in edges {
        cap[i][nl + k] = f64::INFINITY;
    }
    let mut total = 0.0;
    loop {
        let mut parent = vec![usize::MAX; n];
        parent[s] = s;
        let mut queue = std::collections::VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if parent[v] == usize::MAX && cap[u][v] > 1e-15 {
                    parent[v] = u;
                    queue.push_back(v);
                }
            }
        }
        if parent[t] == usize::MAX {
            return total;
        }
        let mut push = f64::INFINITY;
        let mut v = t;
        while v != s {
            let u = parent[v];
            push = push.min(cap[u][v]);
            v = u;
        }
        let mut v = t;
        while v != s {
            let u = parent[v];
            cap[u][v] -= push;
            cap[v][u] += push;
            v = u;
        }
        total += push;
    }
}

/// One candidate subset in a bracket problem.
#[derive(Clone, Debug)]
pub(crate) struct BracketTerm {
    pub y_axes: Vec<usize>,
    /// Subtracted from `H_pi(Y_S | X)` inside the bracket.
    pub shift: f64,
}

/// `min_pi D(pi || r) + 1/2 [min_t (H_pi(Y_t | X) - shift_t)]^+` over `pi`
/// whose marginal on `group_axis` equals `group_target`.
pub(crate) struct BracketProblem<'a> {
    pub reference: &'a [f64],
    pub shape: &'a [usize],
    pub group_axis: usize,
    pub group_target: &'a [f64],
    pub x_axes: Vec<usize>,
    pub terms: Vec<BracketTerm>,
}

pub(crate) struct BracketSolution {
    pub value: f64,
    /// Divergence part `min D` alone (the bracket dropped).
    pub divergence_only: f64,
    /// Index of the attaining term; `None` if infeasible.
    pub term: Option<usize>,
    pub argmin: Option<Vec<f64>>,
    pub diag: SolverDiag,
}

const INNER_TOLERANCE: f64 = 1e-14;
const INNER_MAX_ITERS: u64 = 100_000;
const BISECTION_STEPS: u32 = 60;

struct TermMaps {
    group: Vec<usize>,
    x: Vec<usize>,
    x_len: usize,
    xy: Vec<usize>,
    xy_len: usize,
}

impl BracketProblem<'_> {
    pub fn solve(&self) -> BracketSolution {
        let (group_map, groups) = projection_map(self.shape, &[self.group_axis]);
        let mut r_group = vec![0.0; groups];
        for (w, &g) in self.reference.iter().zip(&group_map) {
            r_group[g] += w;
        }
        if let Some(g) = (0..groups).find(|&g| self.group_target[g] > 0.0 && r_group[g] <= 0.0) {
            return BracketSolution {
                value: f64::INFINITY,
                divergence_only: f64::INFINITY,
                term: None,
                argmin: None,
                diag: SolverDiag {
                    infeasible: Some(format!(
                        "target charges symbol {g} of axis {} where the reference has no mass",
                        self.group_axis
                    )),
                    ..Default::default()
                },
            };
        }
        // Closed-form minimizer of D alone: rescale r within each group.
        let base: Vec<f64> = self
            .reference
            .iter()
            .zip(&group_map)
            .map(|(&w, &g)| if r_group[g] > 0.0 { w * self.group_target[g] / r_group[g] } else { 0.0 })
            .collect();
        let divergence_only = kl_slices(&base, self.reference);

        let (x_map, x_len) = projection_map(self.shape, &self.x_axes);
        let results: Vec<(f64, Vec<f64>, SolverDiag)> = self
            .terms
            .par_iter()
            .map(|term| {
                let mut xy_axes = self.x_axes.clone();
                xy_axes.extend_from_slice(&term.y_axes);
                let (xy, xy_len) = projection_map(self.shape, &xy_axes);
                let maps = TermMaps {
                    group: group_map.clone(),
                    x: x_map.clone(),
                    x_len,
                    xy,
                    xy_len,
                };
                self.solve_term(&maps, term.shift, &base, divergence_only)
            })
            .collect();
        // Deterministic reduction: smallest value, ties to the lowest index.
        let mut best = 0;
        for (k, r) in results.iter().enumerate() {
            if r.0 < results[best].0 {
                best = k;
            }
        }
        let (value, argmin, diag) = results.into_iter().nth(best).expect("at least one term");
        BracketSolution {
            value,
            divergence_only,
            term: Some(best),
            argmin: Some(argmin),
            diag,
        }
    }

    fn solve_term(&self, maps: &TermMaps, shift: f64, base: &[f64], d0: f64) -> (f64, Vec<f64>, SolverDiag) {
        let mut iterations = 0u64;
        let g0 = cond_entropy(base, maps) - shift;
        if g0 <= 0.0 {
            return (d0, base.to_vec(), SolverDiag::default());
        }
        let (pi1, it) = self.inner(maps, 0.5, base);
        iterations += it;
        let g1 = cond_entropy(&pi1, maps) - shift;
        let d1 = kl_slices(&pi1, self.reference);
        if g1 >= 0.0 {
            return (
                d1 + 0.5 * g1,
                pi1,
                SolverDiag {
                    iterations,
                    ..Default::default()
                },
            );
        }
        // The optimum sits where the bracket vanishes along the lambda path.
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut pi = base.to_vec();
        let mut lambda = 0.5;
        for _ in 0..BISECTION_STEPS {
            lambda = 0.5 * (lo + hi);
            let (next, it) = self.inner(maps, 0.5 * lambda, &pi);
            iterations += it;
            pi = next;
            if cond_entropy(&pi, maps) - shift > 0.0 {
                lo = lambda;
            } else {
                hi = lambda;
            }
        }
        let d = kl_slices(&pi, self.reference);
        let g = cond_entropy(&pi, maps) - shift;
        let primal = d + 0.5 * g.max(0.0);
        let dual = d + 0.5 * lambda * g;
        (
            primal,
            pi,
            SolverDiag {
                iterations,
                gap: (primal - dual).max(0.0),
                ..Default::default()
            },
        )
    }

    /// Minimizes `D(pi || r) + c H_pi(Y_S | X)` on the group-constrained set.
    fn inner(&self, maps: &TermMaps, c: f64, start: &[f64]) -> (Vec<f64>, u64) {
        let mut pi = start.to_vec();
        let mut next = vec![0.0; pi.len()];
        let groups = self.group_target.len();
        for it in 1..=INNER_MAX_ITERS {
            let (mx, mxy) = marginals(&pi, maps);
            let mut mass = vec![0.0; groups];
            for cell in 0..pi.len() {
                let r = self.reference[cell];
                let q = mxy[maps.xy[cell]];
                next[cell] = if r > 0.0 && q > 0.0 {
                    r * (q / mx[maps.x[cell]]).powf(c)
                } else {
                    0.0
                };
                mass[maps.group[cell]] += next[cell];
            }
            let mut change: f64 = 0.0;
            for cell in 0..pi.len() {
                let g = maps.group[cell];
                let v = if mass[g] > 0.0 { next[cell] * self.group_target[g] / mass[g] } else { 0.0 };
                change = change.max((v - pi[cell]).abs());
                pi[cell] = v;
            }
            if change < INNER_TOLERANCE {
                return (pi, it);
            }
        }
        (pi, INNER_MAX_ITERS)
    }
}

fn marginals(pi: &[f64], maps: &TermMaps) -> (Vec<f64>, Vec<f64>) {
    let mut mx = vec![0.0; maps.x_len];
    let mut mxy = vec![0.0; maps.xy_len];
    for (cell, &w) in pi.iter().enumerate() {
        mx[maps.x[cell]] += w;
        mxy[maps.xy[cell]] += w;
    }
    (mx, mxy)
}

fn cond_entropy(pi: &[f64], maps: &TermMaps) -> f64 {
    let (mx, mxy) = marginals(pi, maps);
    crate::prob::shannon(&mxy) - crate::prob::shannon(&mx)
}
