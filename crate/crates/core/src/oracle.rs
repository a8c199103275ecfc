//! Brute-force ground truth.
//!
//! The root posterior is computed directly from the tree structure: for every
//! candidate root `u`, `Prob(u) * Aut(u) / M(u)` with `Prob(u) = prod_v p_{deg_u(v)}`,
//! normalised over `u`. Nothing here goes through the ratio shortcut used by
//! the estimator, so the two can be checked against each other.

use std::collections::HashMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;
use serde_json::{json, Value};

use crate::distribution::{Family, OffspringDistribution};
use crate::error::{Error, Result};
use crate::isomorphism::TreeAnalysis;
use crate::sampler::{build_rooted_tree, DegreeSequence};
use crate::tree::{FreeTree, RootedTree};

pub const MAX_ENUMERATION_SIZE: usize = 10;
pub const MAX_EXACT_POSTERIOR_SIZE: usize = 64;
pub const MAX_PLAIN_POSTERIOR_SIZE: usize = 200;

/// A probability held exactly or as a float.
#[derive(Debug, Clone, PartialEq)]
pub enum Probability {
    Exact(BigRational),
    Float(f64),
}

impl Probability {
    pub fn to_f64(&self) -> f64 {
        match self {
            Probability::Exact(r) => r.to_f64().unwrap_or(f64::NAN),
            Probability::Float(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&BigRational> {
        match self {
            Probability::Exact(r) => Some(r),
            Probability::Float(_) => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Probability::Exact(r) => r.is_zero(),
            Probability::Float(x) => *x == 0.0,
        }
    }

    /// `"a/b"` for exact values, a JSON number otherwise.
    pub fn to_json(&self) -> Value {
        match self {
            Probability::Exact(r) => Value::String(r.to_string()),
            Probability::Float(x) => json!(x),
        }
    }
}

impl Serialize for Probability {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    (x >> shift).to_f64().unwrap().ln() + shift as f64 * std::f64::consts::LN_2
}

struct RootTerms {
    tree_degrees: Vec<usize>,
    embedding: BigUint,
    multiplicity: usize,
}

fn root_terms(analysis: &mut TreeAnalysis<'_>, u: usize) -> RootTerms {
    let f = analysis.tree();
    let tree_degrees: Vec<usize> = (0..f.n()).map(|v| f.degree(v) - usize::from(v != u)).collect();
    RootTerms {
        embedding: analysis.embedding_count(u),
        multiplicity: analysis.multiplicity(u),
        tree_degrees,
    }
}

/// Normalised root posterior. Exact for rational-backed laws up to
/// [`MAX_EXACT_POSTERIOR_SIZE`] nodes, otherwise computed in log space; plain
/// values are refused beyond [`MAX_PLAIN_POSTERIOR_SIZE`] nodes.
pub fn root_posterior(f: &FreeTree, dist: &OffspringDistribution) -> Result<Vec<Probability>> {
    if dist.is_exact() && f.n() <= MAX_EXACT_POSTERIOR_SIZE {
        return root_posterior_exact(f, dist);
    }
    if f.n() > MAX_PLAIN_POSTERIOR_SIZE {
        return Err(Error::UnderflowRisk { n: f.n() });
    }
    Ok(root_posterior_log(f, dist)?.into_iter().map(Probability::Float).collect())
}

fn root_posterior_exact(f: &FreeTree, dist: &OffspringDistribution) -> Result<Vec<Probability>> {
    let pmf = dist.exact_pmf().expect("rational-backed");
    let p = |i: usize| pmf.get(i).cloned().unwrap_or_else(BigRational::zero);
    let mut analysis = TreeAnalysis::new(f);
    let mut weights = Vec::with_capacity(f.n());
    for u in 0..f.n() {
        let terms = root_terms(&mut analysis, u);
        let mut w = BigRational::from_integer(BigInt::from(terms.embedding))
            / BigRational::from_integer(BigInt::from(terms.multiplicity));
        for &d in &terms.tree_degrees {
            w *= p(d);
            if w.is_zero() {
                break;
            }
        }
        weights.push(w);
    }
    let total = weights.iter().fold(BigRational::zero(), |acc, w| acc + w);
    if total.is_zero() {
        return Err(Error::InfeasibleTree);
    }
    Ok(weights.into_iter().map(|w| Probability::Exact(w / &total)).collect())
}

/// Root posterior through `log Prob(u) + log Aut(u) - log M(u)` and log-sum-exp.
pub fn root_posterior_log(f: &FreeTree, dist: &OffspringDistribution) -> Result<Vec<f64>> {
    let mut analysis = TreeAnalysis::new(f);
    let mut logs = Vec::with_capacity(f.n());
    for u in 0..f.n() {
        let terms = root_terms(&mut analysis, u);
        let mut log_prob = 0.0;
        for &d in &terms.tree_degrees {
            let p = dist.p(d);
            if p == 0.0 {
                log_prob = f64::NEG_INFINITY;
                break;
            }
            log_prob += p.ln();
        }
        logs.push(log_prob + ln_biguint(&terms.embedding) - (terms.multiplicity as f64).ln());
    }
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::InfeasibleTree);
    }
    let scale: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    Ok(logs.iter().map(|l| (l - max).exp() / scale).collect())
}

/// Nodes attaining the largest posterior; float values tie within relative `tolerance`.
pub fn argmax_set(posterior: &[Probability], tolerance: f64) -> Vec<usize> {
    if posterior.iter().all(|p| p.as_exact().is_some()) {
        let max = posterior.iter().filter_map(Probability::as_exact).max().cloned();
        return (0..posterior.len()).filter(|&u| posterior[u].as_exact() == max.as_ref()).collect();
    }
    let values: Vec<f64> = posterior.iter().map(Probability::to_f64).collect();
    let max = values.iter().copied().fold(0.0, f64::max);
    (0..values.len()).filter(|&u| values[u] >= max * (1.0 - tolerance)).collect()
}

/// Posterior report JSON.
pub fn posterior_report(posterior: &[Probability], omega: &[usize], p_correct: &Probability) -> Value {
    let nodes: Vec<Value> = posterior
        .iter()
        .enumerate()
        .map(|(u, p)| json!({"id": u, "posterior": p.to_json()}))
        .collect();
    json!({ "nodes": nodes, "omega": omega, "p_correct": p_correct.to_json() })
}

/// One tree from the exhaustive enumeration.
#[derive(Debug, Clone)]
pub struct EnumeratedTree {
    pub tree: RootedTree,
    /// For k-ary families: per node, the child slots (out of `k`) its children occupy.
    pub slots: Option<Vec<Vec<usize>>>,
    pub probability: Probability,
}

/// Every conditional tree of size `n` with its probability. For binomial(k)
/// laws each plane tree is split into its positional k-ary trees (a node with
/// `i` children in one of `C(k, i)` slot patterns), which are equally likely.
pub fn enumerate_conditional_trees(dist: &OffspringDistribution, n: usize) -> Result<Vec<EnumeratedTree>> {
    if n > MAX_ENUMERATION_SIZE {
        return Err(Error::TooLarge { n, max: MAX_ENUMERATION_SIZE });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let support: Vec<usize> = (0..=dist.max_support().min(n - 1)).filter(|&i| dist.p(i) > 0.0).collect();
    let mut sequences = Vec::new();
    let mut current = Vec::with_capacity(n);
    lukasiewicz_words(n, &support, 1, &mut current, &mut sequences);

    let slot_k = match dist.family() {
        Family::Binomial { k } => Some(*k),
        _ => None,
    };
    let mut raw: Vec<RawEntry> = Vec::new();
    for seq in sequences {
        let tree = build_rooted_tree(&DegreeSequence::new(seq.clone()))?;
        let weight = sequence_weight(dist, &seq);
        match slot_k {
            None => raw.push((tree, None, weight)),
            Some(k) => {
                let patterns: Vec<Vec<Vec<usize>>> = seq.iter().map(|&d| combinations(k, d)).collect();
                let count: usize = patterns.iter().map(Vec::len).product();
                let share = match &weight {
                    Probability::Exact(w) => Probability::Exact(w / BigRational::from_integer(BigInt::from(count))),
                    Probability::Float(w) => Probability::Float(w / count as f64),
                };
                for assignment in cartesian(&patterns) {
                    raw.push((tree.clone(), Some(assignment), share.clone()));
                }
            }
        }
    }
    Ok(normalize(raw))
}

type RawEntry = (RootedTree, Option<Vec<Vec<usize>>>, Probability);

fn normalize(raw: Vec<RawEntry>) -> Vec<EnumeratedTree> {
    let exact = raw.iter().all(|(_, _, p)| p.as_exact().is_some());
    if exact {
        let total = raw.iter().fold(BigRational::zero(), |acc, (_, _, p)| acc + p.as_exact().unwrap());
        raw.into_iter()
            .map(|(tree, slots, p)| EnumeratedTree {
                tree,
                slots,
                probability: Probability::Exact(p.as_exact().unwrap() / &total),
            })
            .collect()
    } else {
        let total: f64 = raw.iter().map(|(_, _, p)| p.to_f64()).sum();
        raw.into_iter()
            .map(|(tree, slots, p)| EnumeratedTree { tree, slots, probability: Probability::Float(p.to_f64() / total) })
            .collect()
    }
}

fn sequence_weight(dist: &OffspringDistribution, seq: &[usize]) -> Probability {
    match dist.exact_pmf() {
        Some(_) => Probability::Exact(
            seq.iter().fold(BigRational::one(), |acc, &d| acc * dist.p_exact(d).unwrap()),
        ),
        None => Probability::Float(seq.iter().map(|&d| dist.p(d)).product()),
    }
}

// `open` = number of pending child slots (1 + sum of (xi - 1) so far).
fn lukasiewicz_words(n: usize, support: &[usize], open: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    let t = current.len();
    if t == n {
        if open == 0 {
            out.push(current.clone());
        }
        return;
    }
    for &d in support {
        let next = open + d - 1;
        let remaining = n - t - 1;
        let ok = if remaining == 0 { next == 0 } else { next >= 1 && next <= remaining };
        if ok {
            current.push(d);
            lukasiewicz_words(n, support, next, current, out);
            current.pop();
        }
    }
}

fn combinations(k: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, k: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for s in start..k {
            cur.push(s);
            go(s + 1, k, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, k, r, &mut Vec::with_capacity(r), &mut out);
    out
}

fn cartesian(choices: &[Vec<Vec<usize>>]) -> Vec<Vec<Vec<usize>>> {
    choices.iter().fold(vec![Vec::new()], |acc, options| {
        acc.into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(o.clone());
                    next
                })
            })
            .collect()
    })
}

/// Canonical form of a free tree: the smallest rooted form over all rootings.
pub fn free_tree_form(f: &FreeTree) -> String {
    let analysis = TreeAnalysis::new(f);
    (0..f.n()).map(|u| analysis.canonical_form(u)).min().unwrap_or_default()
}

/// Probability of each free-tree shape, keyed by [`free_tree_form`].
pub fn free_tree_marginal(entries: &[EnumeratedTree]) -> HashMap<String, Probability> {
    let mut out: HashMap<String, Probability> = HashMap::new();
    for e in entries {
        let key = free_tree_form(&e.tree.forget_root());
        let sum = match (out.remove(&key), &e.probability) {
            (None, p) => p.clone(),
            (Some(Probability::Exact(a)), Probability::Exact(b)) => Probability::Exact(a + b),
            (Some(a), b) => Probability::Float(a.to_f64() + b.to_f64()),
        };
        out.insert(key, sum);
    }
    out
}

/// `c(u)` agrees across all rootings.
pub fn check_lemma2(f: &FreeTree) -> bool {
    let mut analysis = TreeAnalysis::new(f);
    let first = analysis.invariant_c(0);
    (1..f.n()).all(|u| analysis.invariant_c(u) == first)
}

/// No node on a path `u - v - w` has strictly larger multiplicity than both ends.
pub fn check_valley(f: &FreeTree) -> bool {
    let m = TreeAnalysis::new(f).multiplicities();
    (0..f.n()).all(|v| {
        let nb = f.neighbors(v);
        nb.iter().enumerate().all(|(i, &u)| nb[i + 1..].iter().all(|&w| !(m[v] > m[u] && m[v] > m[w])))
    })
}

/// The smallest multiplicity is 1 or 2.
pub fn check_min_multiplicity(f: &FreeTree) -> bool {
    let min = TreeAnalysis::new(f).multiplicities().into_iter().min().unwrap_or(1);
    min == 1 || min == 2
}

/// Across every edge one multiplicity divides the other.
pub fn check_neighbor_divisibility(f: &FreeTree) -> bool {
    let m = TreeAnalysis::new(f).multiplicities();
    f.edges().into_iter().all(|(u, v)| m[u].is_multiple_of(m[v]) || m[v].is_multiple_of(m[u]))
}

/// Adjacent `u, v` are clones iff each side of the edge holds a clone of the
/// node on the other side.
pub fn check_clone_criterion(f: &FreeTree) -> bool {
    let analysis = TreeAnalysis::new(f);
    let side = |from: usize, blocked: usize| -> Vec<usize> {
        let mut seen = vec![false; f.n()];
        seen[blocked] = true;
        seen[from] = true;
        let mut stack = vec![from];
        let mut out = Vec::new();
        while let Some(x) = stack.pop() {
            out.push(x);
            for &y in f.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        out
    };
    f.edges().into_iter().all(|(u, v)| {
        let clone_of_u_beyond_v = side(v, u).into_iter().any(|x| analysis.clones(x, u));
        let clone_of_v_beyond_u = side(u, v).into_iter().any(|x| analysis.clones(x, v));
        analysis.clones(u, v) == (clone_of_u_beyond_v && clone_of_v_beyond_u)
    })
}

/// Orbit sizes add up to `n`.
pub fn check_orbit_partition(f: &FreeTree) -> bool {
    let analysis = TreeAnalysis::new(f);
    let orbits = analysis.orbits();
    orbits.iter().map(Vec::len).sum::<usize>() == f.n()
        && orbits.iter().all(|o| o.iter().all(|&u| analysis.multiplicity(u) == o.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> Probability {
        Probability::Exact(BigRational::new(n.into(), d.into()))
    }

    #[test]
    fn toy_posteriors() {
        let dist = OffspringDistribution::binomial(2).unwrap();
        assert_eq!(root_posterior(&FreeTree::path(4), &dist).unwrap(), vec![q(1, 3), q(1, 6), q(1, 6), q(1, 3)]);
        assert_eq!(root_posterior(&FreeTree::star(4), &dist).unwrap(), vec![q(0, 1), q(1, 3), q(1, 3), q(1, 3)]);
        assert_eq!(root_posterior(&FreeTree::path(1), &dist).unwrap(), vec![q(1, 1)]);
    }

    #[test]
    fn log_posterior_agrees_with_exact() {
        let dist = OffspringDistribution::binomial(3).unwrap();
        let tree = FreeTree::from_edges(8, &[(0, 1), (0, 2), (0, 3), (3, 4), (3, 5), (5, 6), (5, 7)]).unwrap();
        let exact = root_posterior(&tree, &dist).unwrap();
        let logs = root_posterior_log(&tree, &dist).unwrap();
        for (e, l) in exact.iter().zip(&logs) {
            assert!((e.to_f64() - l).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_size_limits() {
        let poisson = OffspringDistribution::poisson().unwrap();
        assert!(matches!(root_posterior(&FreeTree::path(201), &poisson), Err(Error::UnderflowRisk { n: 201 })));
        let logs = root_posterior_log(&FreeTree::path(400), &poisson).unwrap();
        assert!((logs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        // Cayley: every node equally likely.
        assert!(logs.iter().all(|p| (p - 1.0 / 400.0).abs() < 1e-12));
    }

    #[test]
    fn infeasible_posterior() {
        let full = OffspringDistribution::uniform_set(&[0, 2]).unwrap();
        assert!(matches!(root_posterior(&FreeTree::path(4), &full), Err(Error::InfeasibleTree)));
    }

    #[test]
    fn enumeration_binary_four() {
        let dist = OffspringDistribution::binomial(2).unwrap();
        let trees = enumerate_conditional_trees(&dist, 4).unwrap();
        assert_eq!(trees.len(), 14);
        assert!(trees.iter().all(|t| t.probability == q(1, 14)));
        let marginal = free_tree_marginal(&trees);
        assert_eq!(marginal[&free_tree_form(&FreeTree::path(4))], q(12, 14));
        assert_eq!(marginal[&free_tree_form(&FreeTree::star(4))], q(2, 14));
    }

    #[test]
    fn enumeration_edge_cases() {
        let full = OffspringDistribution::uniform_set(&[0, 2]).unwrap();
        assert!(enumerate_conditional_trees(&full, 4).unwrap().is_empty());
        assert_eq!(enumerate_conditional_trees(&full, 5).unwrap().len(), 2);
        let poisson = OffspringDistribution::poisson().unwrap();
        let single = enumerate_conditional_trees(&poisson, 1).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].probability, Probability::Float(1.0));
        assert!(matches!(enumerate_conditional_trees(&poisson, 11), Err(Error::TooLarge { n: 11, max: 10 })));
    }

    #[test]
    fn enumeration_counts_catalan_and_motzkin() {
        let geometric = OffspringDistribution::geometric().unwrap();
        let catalan = [1, 1, 2, 5, 14, 42, 132, 429];
        for (n, &c) in (1..=8).zip(&catalan) {
            let trees = enumerate_conditional_trees(&geometric, n).unwrap();
            assert_eq!(trees.len(), c);
            // Planted plane trees are uniform.
            assert!(trees.iter().all(|t| t.probability == q(1, c as i64)));
        }
        let motzkin = OffspringDistribution::uniform_set(&[0, 1, 2]).unwrap();
        let counts = [1, 1, 2, 4, 9, 21, 51];
        for (n, &c) in (1..=7).zip(&counts) {
            assert_eq!(enumerate_conditional_trees(&motzkin, n).unwrap().len(), c);
        }
        let ternary = OffspringDistribution::binomial(3).unwrap();
        // Ternary trees: C(3n, n) / (2n + 1).
        for (n, c) in [(1, 1), (2, 3), (3, 12), (4, 55), (5, 273)] {
            assert_eq!(enumerate_conditional_trees(&ternary, n).unwrap().len(), c);
        }
    }

    #[test]
    fn structural_checks_on_small_trees() {
        for f in [FreeTree::path(4), FreeTree::star(4), FreeTree::path(1), FreeTree::path(2)] {
            assert!(check_lemma2(&f));
            assert!(check_valley(&f));
            assert!(check_min_multiplicity(&f));
            assert!(check_neighbor_divisibility(&f));
            assert!(check_clone_criterion(&f));
            assert!(check_orbit_partition(&f));
        }
    }

    #[test]
    fn report_shape() {
        let dist = OffspringDistribution::binomial(2).unwrap();
        let post = root_posterior(&FreeTree::path(4), &dist).unwrap();
        let report = posterior_report(&post, &[0, 3], &q(1, 3));
        assert_eq!(report["nodes"][1]["posterior"], "1/6");
        assert_eq!(report["p_correct"], "1/3");
        assert_eq!(argmax_set(&post, 1e-9), vec![0, 3]);
    }
}
