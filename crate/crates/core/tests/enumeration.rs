//! Sampler frequencies against exhaustive enumeration for small sizes.

use std::collections::HashMap;

use gwroot::oracle::{enumerate_conditional_trees, root_posterior, Probability};
use gwroot::{rng, OffspringDistribution, TreeSampler};
use num_traits::One;

const DRAWS: usize = 100_000;

fn plane_shape_probabilities(dist: &OffspringDistribution, n: usize) -> HashMap<Vec<usize>, f64> {
    let mut out: HashMap<Vec<usize>, f64> = HashMap::new();
    for entry in enumerate_conditional_trees(dist, n).unwrap() {
        *out.entry(entry.tree.degree_sequence().into_vec()).or_default() += entry.probability.to_f64();
    }
    out
}

fn check_against_enumeration(name: &str, dist: &OffspringDistribution, seed: u64) {
    let sampler = TreeSampler::new(dist);
    for n in 3..=6 {
        let expected = plane_shape_probabilities(dist, n);
        let total: f64 = expected.values().sum();
        assert!((total - 1.0).abs() < 1e-12, "{name} n={n}: probabilities sum to {total}");
        let mut r = rng::stream(seed, n as u64);
        let mut counts: HashMap<Vec<usize>, usize> = HashMap::new();
        for _ in 0..DRAWS {
            let tree = sampler.sample_conditional_tree(n, &mut r).unwrap();
            *counts.entry(tree.degree_sequence().into_vec()).or_default() += 1;
        }
        for shape in counts.keys() {
            assert!(expected.contains_key(shape), "{name} n={n}: sampled shape {shape:?} not enumerated");
        }
        for (shape, p) in &expected {
            let c = counts.get(shape).copied().unwrap_or(0) as f64;
            let sd = (DRAWS as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (c - DRAWS as f64 * p).abs() <= 4.0 * sd,
                "{name} n={n} shape {shape:?}: count {c}, expected {}",
                DRAWS as f64 * p
            );
        }
    }
}

#[test]
fn binary_trees_match_enumeration() {
    check_against_enumeration("binomial(2)", &OffspringDistribution::binomial(2).unwrap(), 1);
}

#[test]
fn ternary_trees_match_enumeration() {
    check_against_enumeration("binomial(3)", &OffspringDistribution::binomial(3).unwrap(), 2);
}

#[test]
fn planted_plane_trees_match_enumeration() {
    check_against_enumeration("geometric", &OffspringDistribution::geometric().unwrap(), 3);
}

#[test]
fn motzkin_trees_match_enumeration() {
    check_against_enumeration("motzkin", &OffspringDistribution::uniform_set(&[0, 1, 2]).unwrap(), 4);
}

#[test]
fn cayley_trees_match_enumeration() {
    check_against_enumeration("poisson", &OffspringDistribution::poisson().unwrap(), 5);
}

#[test]
fn toy_example_root_positions() {
    // Marginalising over the 14 binary trees on 4 nodes: the path occurs 12
    // times with an endpoint as root 8 times; the star occurs twice, never
    // rooted at its centre.
    let dist = OffspringDistribution::binomial(2).unwrap();
    let trees = enumerate_conditional_trees(&dist, 4).unwrap();
    let (mut path, mut path_end, mut star, mut star_centre) = (0, 0, 0, 0);
    for t in &trees {
        let f = t.tree.forget_root();
        let root_degree = f.degree(t.tree.root());
        if f.max_degree() == 3 {
            star += 1;
            star_centre += usize::from(root_degree == 3);
        } else {
            path += 1;
            path_end += usize::from(root_degree == 1);
        }
    }
    assert_eq!((path, path_end, star, star_centre), (12, 8, 2, 0));
}

#[test]
fn exact_posteriors_sum_to_one() {
    let dists = [
        OffspringDistribution::binomial(2).unwrap(),
        OffspringDistribution::geometric().unwrap(),
        OffspringDistribution::uniform_set(&[0, 1, 2]).unwrap(),
    ];
    for dist in &dists {
        for n in 1..=7 {
            for entry in enumerate_conditional_trees(dist, n).unwrap() {
                let posterior = root_posterior(&entry.tree.forget_root(), dist).unwrap();
                let total = posterior.iter().fold(num_rational::BigRational::from_integer(0.into()), |acc, p| match p {
                    Probability::Exact(r) => acc + r,
                    Probability::Float(_) => panic!("expected exact posterior"),
                });
                assert!(total.is_one());
            }
        }
    }
}

#[test]
fn posterior_matches_enumeration_frequencies() {
    // The endpoints' posterior mass on the 4-path equals the share of the
    // (equally likely) enumerated path trees that are rooted at an endpoint.
    let dist = OffspringDistribution::binomial(2).unwrap();
    let trees = enumerate_conditional_trees(&dist, 4).unwrap();
    let path_end = trees
        .iter()
        .filter(|t| {
            let f = t.tree.forget_root();
            f.max_degree() == 2 && f.degree(t.tree.root()) == 1
        })
        .count() as f64
        / 12.0;
    let posterior = root_posterior(&gwroot::FreeTree::path(4), &dist).unwrap();
    assert!((posterior[0].to_f64() + posterior[3].to_f64() - path_end).abs() < 1e-15);
}
