//! Maximum-likelihood root estimation on a free tree.
//!
//! The likelihood that `u` is the root is proportional to `R_{deg*(u)}`, so the
//! estimator picks uniformly among nodes whose graph-degree attains the largest
//! ratio present in the tree. A node of special degree is the root with
//! certainty. Degrees whose ratios tie (within tolerance, or exactly for
//! rational-backed laws) all belong to the candidate set.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;
use serde::Serialize;

use crate::distribution::{OffspringDistribution, Ratio};
use crate::error::{Error, Result};
use crate::tree::FreeTree;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RootEstimate {
    /// The candidate set, sorted.
    pub candidate_set: Vec<usize>,
    pub chosen: usize,
    /// Largest ratio present; infinite on a special hit (and for a single node).
    pub max_ratio: Ratio,
    /// Probability that `chosen` is the true root given the free tree.
    pub conditional_correctness: f64,
    /// A node of special degree was found.
    pub special_hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidates {
    pub nodes: Vec<usize>,
    pub max_ratio: Ratio,
    /// Graph-degrees attaining the maximum.
    pub degrees: Vec<usize>,
    pub special_hit: bool,
}

/// Candidate set and the maximal ratio over graph-degrees present with positive mass.
pub fn candidates(f: &FreeTree, dist: &OffspringDistribution) -> Result<Candidates> {
    let n = f.n();
    if n == 1 {
        return Ok(Candidates { nodes: vec![0], max_ratio: Ratio::Infinite, degrees: vec![0], special_hit: false });
    }
    let mut present = vec![false; f.max_degree() + 1];
    let mut special_nodes = Vec::new();
    for v in 0..n {
        let d = f.degree(v);
        present[d] = true;
        if dist.is_special(d) {
            special_nodes.push(v);
        }
    }
    match special_nodes.len() {
        0 => {}
        1 => {
            let v = special_nodes[0];
            return Ok(Candidates {
                nodes: special_nodes,
                max_ratio: Ratio::Infinite,
                degrees: vec![f.degree(v)],
                special_hit: true,
            });
        }
        // A generated tree carries at most one special node.
        _ => return Err(Error::InfeasibleTree),
    }

    let mut best: Vec<usize> = Vec::new();
    for d in (1..present.len()).filter(|&d| present[d] && dist.p(d) > 0.0) {
        match best.first() {
            None => best.push(d),
            Some(&b) => match dist.ratio_cmp(d, b) {
                std::cmp::Ordering::Greater => best = vec![d],
                std::cmp::Ordering::Equal => best.push(d),
                std::cmp::Ordering::Less => {}
            },
        }
    }
    if best.is_empty() {
        return Err(Error::InfeasibleTree);
    }
    let max_ratio = best.iter().map(|&d| dist.ratio(d)).fold(Ratio::Finite(0.0), |a, b| {
        if b.value() > a.value() {
            b
        } else {
            a
        }
    });
    let nodes = (0..n).filter(|&v| best.contains(&f.degree(v))).collect();
    Ok(Candidates { nodes, max_ratio, degrees: best, special_hit: false })
}

/// `(Omega, M)`.
pub fn candidate_set(f: &FreeTree, dist: &OffspringDistribution) -> Result<(Vec<usize>, Ratio)> {
    let c = candidates(f, dist)?;
    Ok((c.nodes, c.max_ratio))
}

fn correctness_from(f: &FreeTree, dist: &OffspringDistribution, c: &Candidates) -> f64 {
    match c.max_ratio {
        Ratio::Infinite => 1.0,
        Ratio::Finite(m) => match f.weighted_sum_w(dist) {
            Ratio::Finite(w) => m / w,
            Ratio::Infinite => unreachable!("finite maximum implies no special node"),
        },
    }
}

/// `P{C | F_n}`: 1 on a special hit, otherwise `M / sum_v R_{deg*(v)}`.
pub fn conditional_correctness(f: &FreeTree, dist: &OffspringDistribution) -> Result<f64> {
    let c = candidates(f, dist)?;
    Ok(correctness_from(f, dist, &c))
}

/// Exact `P{C | F_n}` for rational-backed distributions.
pub fn conditional_correctness_exact(f: &FreeTree, dist: &OffspringDistribution) -> Result<Option<BigRational>> {
    if !dist.is_exact() {
        return Ok(None);
    }
    let c = candidates(f, dist)?;
    if c.special_hit || f.n() == 1 {
        return Ok(Some(BigRational::one()));
    }
    let m = match dist.ratio_exact(c.degrees[0]) {
        Some(Ratio::Finite(m)) => m,
        _ => return Err(Error::InfeasibleTree),
    };
    let mut w = BigRational::from_integer(BigInt::from(0));
    for v in 0..f.n() {
        match dist.ratio_exact(f.degree(v)) {
            Some(Ratio::Finite(r)) => w += r,
            _ => return Err(Error::InfeasibleTree),
        }
    }
    Ok(Some(m / w))
}

/// Chooses uniformly from the candidate set.
pub fn estimate_root<R: Rng + ?Sized>(f: &FreeTree, dist: &OffspringDistribution, rng: &mut R) -> Result<RootEstimate> {
    let c = candidates(f, dist)?;
    let conditional_correctness = correctness_from(f, dist, &c);
    let chosen = c.nodes[rng.random_range(0..c.nodes.len())];
    Ok(RootEstimate {
        candidate_set: c.nodes,
        chosen,
        max_ratio: c.max_ratio,
        conditional_correctness,
        special_hit: c.special_hit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn candidate_set_examples() {
        let binomial = OffspringDistribution::binomial(2).unwrap();
        assert_eq!(candidate_set(&FreeTree::star(4), &binomial).unwrap(), (vec![1, 2, 3], Ratio::Finite(2.0)));
        assert_eq!(candidate_set(&FreeTree::path(4), &binomial).unwrap(), (vec![0, 3], Ratio::Finite(2.0)));
        let full = OffspringDistribution::uniform_set(&[0, 2]).unwrap();
        assert_eq!(candidate_set(&FreeTree::path(3), &full).unwrap(), (vec![1], Ratio::Infinite));
    }

    #[test]
    fn correctness_examples() {
        let binomial = OffspringDistribution::binomial(2).unwrap();
        assert!((conditional_correctness(&FreeTree::path(4), &binomial).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(conditional_correctness_exact(&FreeTree::path(4), &binomial).unwrap(), Some(q(1, 3)));
        let poisson = OffspringDistribution::poisson().unwrap();
        for n in [2, 5, 12] {
            assert_eq!(conditional_correctness(&FreeTree::path(n), &poisson).unwrap(), 1.0 / n as f64);
            assert_eq!(conditional_correctness(&FreeTree::star(n), &poisson).unwrap(), 1.0 / n as f64);
        }
        assert_eq!(conditional_correctness_exact(&FreeTree::star(4), &poisson).unwrap(), None);
        let geometric = OffspringDistribution::geometric().unwrap();
        let star = FreeTree::star(6);
        assert_eq!(conditional_correctness(&star, &geometric).unwrap(), 5.0 / 10.0);
        assert_eq!(conditional_correctness_exact(&star, &geometric).unwrap(), Some(q(1, 2)));
    }

    #[test]
    fn ties_across_degrees_join_the_candidate_set() {
        let poisson = OffspringDistribution::poisson().unwrap();
        let tree = FreeTree::from_edges(5, &[(0, 1), (1, 2), (1, 3), (3, 4)]).unwrap();
        let c = candidates(&tree, &poisson).unwrap();
        assert_eq!(c.nodes, vec![0, 1, 2, 3, 4]);
        assert_eq!(c.degrees, vec![1, 2, 3]);
        // Motzkin: R_1 = 1 < R_2 = 2, so degree 3 (zero mass) and leaves are excluded.
        let motzkin = OffspringDistribution::uniform_set(&[0, 1, 2]).unwrap();
        assert_eq!(candidate_set(&tree, &motzkin).unwrap(), (vec![3], Ratio::Finite(2.0)));
    }

    #[test]
    fn single_node_is_certain() {
        let dist = OffspringDistribution::binomial(3).unwrap();
        let est = estimate_root(&FreeTree::path(1), &dist, &mut rng::seeded(0)).unwrap();
        assert_eq!(est.chosen, 0);
        assert_eq!(est.conditional_correctness, 1.0);
        assert_eq!(conditional_correctness_exact(&FreeTree::path(1), &dist).unwrap(), Some(q(1, 1)));
    }

    #[test]
    fn special_hit_is_certain() {
        let full = OffspringDistribution::uniform_set(&[0, 2]).unwrap();
        let est = estimate_root(&FreeTree::path(3), &full, &mut rng::seeded(3)).unwrap();
        assert_eq!(est.chosen, 1);
        assert!(est.special_hit);
        assert_eq!(est.conditional_correctness, 1.0);
    }

    #[test]
    fn infeasible_trees_are_errors() {
        // Two nodes of special degree 2.
        let full = OffspringDistribution::uniform_set(&[0, 2]).unwrap();
        assert!(matches!(candidate_set(&FreeTree::path(4), &full), Err(Error::InfeasibleTree)));
        // Leaves only have degree 1, and p_1 = 0 with no other degree present.
        assert!(matches!(candidate_set(&FreeTree::path(2), &full), Err(Error::InfeasibleTree)));
    }

    #[test]
    fn leaves_of_star_chosen_uniformly() {
        let binomial = OffspringDistribution::binomial(2).unwrap();
        let star = FreeTree::star(4);
        let mut rng = rng::seeded(11);
        let trials = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..trials {
            counts[estimate_root(&star, &binomial, &mut rng).unwrap().chosen] += 1;
        }
        assert_eq!(counts[0], 0);
        let sigma = (trials as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for &c in &counts[1..] {
            assert!((c as f64 - trials as f64 / 3.0).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }
}
