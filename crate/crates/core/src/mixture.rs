//! Best randomized mixtures over a set of payoff vectors.
//!
//! Mixing deterministic policies with weights `α` yields the weighted sum
//! of their payoff vectors, so the max-min value of a frontier is
//!
//! ```text
//! max_α min_i Σ_j α_j x_{j,i}
//! ```
//!
//! which is the value of a zero-sum matrix game between the agent (rows are
//! points) and the adversary (columns are environments). It is solved with
//! a dense simplex on the adversary's side after shifting every entry to be
//! at least 1; the agent's weights are read off the final reduced costs.
//! Pivoting follows Bland's rule, so the returned solution is a basic one
//! and uses at most `n` points.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PayoffVector, PolicyTree, Pomdp};
use crate::scalar::{Scalar, DEFAULT_TOLERANCE};

/// Pivot tolerance in float mode.
const PIVOT_EPS: f64 = 1e-12;

/// A probability distribution over payoff vectors (and their policies).
#[derive(Debug, Clone, PartialEq)]
pub struct Mixture<N> {
    pub components: Vec<(N, PayoffVector<N>)>,
}

impl<N: Scalar> Mixture<N> {
    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// `Σ_j α_j x_j`.
    pub fn payoff(&self) -> Result<Vec<N>> {
        let mut acc: Option<Vec<N>> = None;
        for (w, p) in &self.components {
            let vals = p.values()?;
            acc = Some(match acc {
                None => vals.into_iter().map(|v| w.clone() * v).collect(),
                Some(a) => a
                    .into_iter()
                    .zip(vals)
                    .map(|(x, v)| x + w.clone() * v)
                    .collect(),
            });
        }
        acc.ok_or(Error::EmptyFrontier)
    }

    /// Smallest coordinate of the mixed payoff.
    pub fn guarantee(&self) -> Result<N> {
        Ok(min_of(&self.payoff()?))
    }
}

/// Optimal value of a set of payoff vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueResult<N> {
    pub value: N,
    pub mixture: Mixture<N>,
    /// The mixed payoff vector `Σ_j α_j x_j`.
    pub guarantees: Vec<N>,
    /// An optimal adversary distribution over environments; every point
    /// pays at most `value` against it.
    pub adversary: Vec<N>,
}

fn min_of<N: Scalar>(v: &[N]) -> N {
    let mut it = v.iter();
    let first = it.next().cloned().unwrap_or_else(N::zero);
    it.fold(first, |m, x| if *x < m { x.clone() } else { m })
}

fn matrix<N: Scalar>(points: &[PayoffVector<N>]) -> Result<Vec<Vec<N>>> {
    if points.is_empty() {
        return Err(Error::EmptyFrontier);
    }
    let rows = points
        .iter()
        .map(PayoffVector::values)
        .collect::<Result<Vec<_>>>()?;
    let n = rows[0].len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::MismatchedBotPattern);
    }
    Ok(rows)
}

/// Solves the game; returns `(value, α, q)`.
fn solve_game<N: Scalar>(x: &[Vec<N>]) -> (N, Vec<N>, Vec<N>) {
    let m = x.len();
    let n = x[0].len();
    let low = x
        .iter()
        .flat_map(|r| r.iter())
        .fold(x[0][0].clone(), |a, b| if *b < a { b.clone() } else { a });
    let shift = N::one() - low.clone();

    // row j: Σ_i x'_{j,i} z_i + slack_j = 1
    let width = n + m + 1;
    let rhs = n + m;
    let mut t: Vec<Vec<N>> = (0..m)
        .map(|j| {
            let mut row = vec![N::zero(); width];
            for i in 0..n {
                row[i] = x[j][i].clone() + shift.clone();
            }
            row[n + j] = N::one();
            row[rhs] = N::one();
            row
        })
        .collect();
    let mut obj = vec![N::zero(); width];
    for c in obj.iter_mut().take(n) {
        *c = -N::one();
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    loop {
        let Some(enter) = (0..n + m).find(|&c| (-obj[c].clone()).positive(PIVOT_EPS)) else {
            break;
        };
        let mut leave: Option<usize> = None;
        for r in 0..m {
            if !t[r][enter].positive(PIVOT_EPS) {
                continue;
            }
            leave = match leave {
                None => Some(r),
                Some(l) => {
                    let lhs = t[r][rhs].clone() * t[l][enter].clone();
                    let cur = t[l][rhs].clone() * t[r][enter].clone();
                    if lhs < cur || (lhs == cur && basis[r] < basis[l]) {
                        Some(r)
                    } else {
                        Some(l)
                    }
                }
            };
        }
        // every entering column has a positive entry: z columns are all
        // positive, and a slack column only re-enters after its row pivoted
        let l = leave.expect("game LP is bounded");
        let pivot = t[l][enter].clone();
        for c in 0..width {
            t[l][c] = t[l][c].clone() / pivot.clone();
        }
        for r in 0..m {
            if r == l || t[r][enter].is_zero() {
                continue;
            }
            let f = t[r][enter].clone();
            for c in 0..width {
                let d = f.clone() * t[l][c].clone();
                t[r][c] = t[r][c].clone() - d;
            }
        }
        if !obj[enter].is_zero() {
            let f = obj[enter].clone();
            for c in 0..width {
                let d = f.clone() * t[l][c].clone();
                obj[c] = obj[c].clone() - d;
            }
        }
        basis[l] = enter;
    }

    let total = obj[rhs].clone();
    let scale = N::one() / total;
    let clamp = |v: N| if v.positive(PIVOT_EPS) { v } else { N::zero() };
    let alpha: Vec<N> = (0..m)
        .map(|j| clamp(obj[n + j].clone() * scale.clone()))
        .collect();
    let mut q = vec![N::zero(); n];
    for (r, &b) in basis.iter().enumerate() {
        if b < n {
            q[b] = clamp(t[r][rhs].clone() * scale.clone());
        }
    }
    (scale - shift, alpha, q)
}

/// Max-min value over all mixtures of `points`, with an optimal mixture.
///
/// In float mode the reported value is the guarantee of the normalized
/// mixture, which avoids the cancellation in undoing the entry shift.
pub fn max_min_value<N: Scalar>(points: &[PayoffVector<N>]) -> Result<ValueResult<N>> {
    let x = matrix(points)?;
    let (value, alpha, adversary) = solve_game(&x);
    let mut components: Vec<(N, PayoffVector<N>)> = alpha
        .into_iter()
        .zip(points)
        .filter(|(w, _)| !w.is_zero())
        .map(|(w, p)| (w, p.clone()))
        .collect();
    if !N::EXACT {
        let total = components
            .iter()
            .fold(N::zero(), |acc, (w, _)| acc + w.clone());
        for (w, _) in components.iter_mut() {
            *w = w.clone() / total.clone();
        }
    }
    let mixture = Mixture { components };
    let guarantees = mixture.payoff()?;
    let value = if N::EXACT { value } else { min_of(&guarantees) };
    Ok(ValueResult {
        value,
        mixture,
        guarantees,
        adversary,
    })
}

/// Best guarantee of a single point: `max_j min_i x_{j,i}`, with the index
/// of the first point attaining it.
pub fn best_deterministic<N: Scalar>(points: &[PayoffVector<N>]) -> Result<(N, usize)> {
    let x = matrix(points)?;
    let mut best: Option<(N, usize)> = None;
    for (j, row) in x.iter().enumerate() {
        let v = min_of(row);
        if best.as_ref().map_or(true, |(b, _)| v > *b) {
            best = Some((v, j));
        }
    }
    best.ok_or(Error::EmptyFrontier)
}

/// Whether the max-min value of `points` is at least `lambda`.
///
/// In float mode the answer is `value ≥ λ − ε/2` (or `− 1e-9` without `ε`);
/// it is only meaningful when `|value − λ| ≥ ε`.
pub fn threshold_decide<N: Scalar>(
    points: &[PayoffVector<N>],
    lambda: &N,
    epsilon: Option<f64>,
) -> Result<bool> {
    let v = max_min_value(points)?.value;
    let tol = epsilon.map_or(DEFAULT_TOLERANCE, |e| e / 2.0);
    Ok(v.at_least(lambda, tol))
}

/// A mixture over at most `n` points whose guarantee is no worse.
///
/// Identical points are merged first; if more than `n` remain, the game is
/// re-solved over them, which yields a basic solution.
pub fn reduce_support<N: Scalar>(mix: &Mixture<N>) -> Result<Mixture<N>> {
    if mix.is_empty() {
        return Err(Error::EmptyFrontier);
    }
    let mut merged: Vec<(N, PayoffVector<N>)> = Vec::new();
    for (w, p) in &mix.components {
        let vals = p.values()?;
        match merged
            .iter_mut()
            .find(|(_, q)| q.values().map(|v| v == vals).unwrap_or(false))
        {
            Some((mw, _)) => *mw = mw.clone() + w.clone(),
            None => merged.push((w.clone(), p.clone())),
        }
    }
    let n = merged[0].1.len();
    if merged.len() <= n {
        return Ok(Mixture { components: merged });
    }
    let points: Vec<PayoffVector<N>> = merged.into_iter().map(|(_, p)| p).collect();
    Ok(max_min_value(&points)?.mixture)
}

/// One deterministic component of a mixed policy document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyComponent {
    pub weight: String,
    pub decisions: Vec<Decision>,
}

/// The action played after `history`, which alternates action and
/// observation names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub history: Vec<String>,
    pub action: String,
}

/// A randomized policy: sample one component by weight, then follow it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedPolicy {
    pub components: Vec<PolicyComponent>,
}

/// Writes `mix` as a mixed-policy document over the names of `p`.
pub fn assemble_policy<N: Scalar>(mix: &Mixture<N>, p: &Pomdp) -> Result<MixedPolicy> {
    let components = mix
        .components
        .iter()
        .map(|(w, point)| {
            let tree: &Arc<PolicyTree> = point.policy.as_ref().ok_or(Error::MissingPolicyAnnotation)?;
            Ok(PolicyComponent {
                weight: w.render(),
                decisions: tree
                    .decisions(p)
                    .into_iter()
                    .map(|(history, action)| Decision { history, action })
                    .collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MixedPolicy { components })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::fork_example;
    use crate::frontier::{build_frontier, FrontierConfig};
    use crate::scalar::{parse_rational, Rational};

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn pts(rows: &[&[&str]]) -> Vec<PayoffVector<Rational>> {
        rows.iter()
            .map(|r| PayoffVector::from_values(r.iter().map(|s| q(s)).collect()))
            .collect()
    }

    fn fork_points() -> Vec<PayoffVector<Rational>> {
        let m = fork_example();
        build_frontier(&m, &m.initial_multibelief(), 1, &FrontierConfig::default())
            .unwrap()
            .into_points()
    }

    #[test]
    fn fork_value_is_three_quarters() {
        let pts = fork_points();
        let r = max_min_value(&pts).unwrap();
        assert_eq!(r.value, q("3/4"));
        let weights: Vec<_> = r.mixture.components.iter().map(|(w, p)| (w.clone(), p.values().unwrap())).collect();
        assert_eq!(
            weights,
            vec![
                (q("1/2"), vec![q("0.9"), q("0.6")]),
                (q("1/2"), vec![q("0.6"), q("0.9")]),
            ]
        );
        assert_eq!(r.guarantees, vec![q("3/4"), q("3/4")]);
        assert_eq!(best_deterministic(&pts).unwrap(), (q("0.6"), 2));
    }

    #[test]
    fn trivial_sets() {
        let r = max_min_value(&pts(&[&["3", "5"]])).unwrap();
        assert_eq!(r.value, q("3"));
        assert_eq!(r.mixture.components[0].0, q("1"));
        let r = max_min_value(&pts(&[&["1", "0"], &["0", "1"]])).unwrap();
        assert_eq!(r.value, q("1/2"));
        assert!(matches!(max_min_value::<Rational>(&[]), Err(Error::EmptyFrontier)));
        let bot = vec![PayoffVector::new(vec![None, Some(q("1"))])];
        assert!(matches!(max_min_value(&bot), Err(Error::BotCoordinate)));
    }

    #[test]
    fn negative_entries_shift_correctly() {
        let r = max_min_value(&pts(&[&["-3", "1"], &["1", "-3"]])).unwrap();
        assert_eq!(r.value, q("-1"));
        let r = max_min_value(&pts(&[&["-5", "-7"]])).unwrap();
        assert_eq!(r.value, q("-7"));
    }

    #[test]
    fn float_mode_agrees() {
        let m = fork_example();
        let f = build_frontier(&m, &m.initial_multibelief::<f64>(), 1, &FrontierConfig::default()).unwrap();
        let r = max_min_value(f.points()).unwrap();
        assert!((r.value - 0.75).abs() < 1e-9);
        let total: f64 = r.mixture.components.iter().map(|(w, _)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn thresholds() {
        let pts = fork_points();
        assert!(threshold_decide(&pts, &q("0.75"), None).unwrap());
        assert!(!threshold_decide(&pts, &q("0.76"), None).unwrap());
        assert!(threshold_decide(&pts, &q("-100"), None).unwrap());
        let m = fork_example();
        let f = build_frontier(&m, &m.initial_multibelief::<f64>(), 1, &FrontierConfig::default()).unwrap();
        assert!(threshold_decide(f.points(), &0.75, Some(0.01)).unwrap());
        assert!(!threshold_decide(f.points(), &0.76, Some(0.01)).unwrap());
    }

    #[test]
    fn support_reduction() {
        let third = q("1/3");
        let p = pts(&[&["1", "0"], &["0", "1"], &["0.5", "0.5"]]);
        let mix = Mixture {
            components: p.iter().map(|x| (third.clone(), x.clone())).collect(),
        };
        let red = reduce_support(&mix).unwrap();
        assert!(red.len() <= 2);
        assert!(red.guarantee().unwrap() >= q("1/2"));

        let same = pts(&[&["2", "3"], &["2", "3"], &["2", "3"]]);
        let mix = Mixture {
            components: same.into_iter().map(|x| (third.clone(), x)).collect(),
        };
        let red = reduce_support(&mix).unwrap();
        assert_eq!(red.len(), 1);
        assert_eq!(red.components[0].0, q("1"));

        let opt = max_min_value(&fork_points()).unwrap().mixture;
        assert_eq!(reduce_support(&opt).unwrap(), opt);
    }

    #[test]
    fn fork_policy_document() {
        let m = fork_example();
        let mix = max_min_value(&fork_points()).unwrap().mixture;
        let doc = assemble_policy(&mix, m.pomdp()).unwrap();
        assert_eq!(doc.components.len(), 2);
        assert_eq!(doc.components[0].weight, "1/2");
        assert_eq!(
            doc.components[0].decisions,
            vec![Decision {
                history: vec![],
                action: "c".into()
            }]
        );
        assert_eq!(doc.components[1].decisions[0].action, "d");

        let single = Mixture {
            components: vec![mix.components[0].clone()],
        };
        assert_eq!(assemble_policy(&single, m.pomdp()).unwrap().components.len(), 1);

        let mut stripped = mix.clone();
        stripped.components[0].1.policy = None;
        assert!(matches!(
            assemble_policy(&stripped, m.pomdp()),
            Err(Error::MissingPolicyAnnotation)
        ));
    }
}
