//! Named verification suites over corpora of sampled trees.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::distribution::OffspringDistribution;
use crate::error::{Error, Result};
use crate::estimator::{candidates, conditional_correctness, conditional_correctness_exact};
use crate::isomorphism::TreeAnalysis;
use crate::oracle::{self, argmax_set, Probability};
use crate::rng;
use crate::sampler::{build_rooted_tree, cycle_rotate, DegreeSequence, TreeSampler};
use crate::tree::{FreeTree, RootedTree};

pub const SUITES: &[&str] = &[
    "clones",
    "lemma2",
    "valley",
    "minmult",
    "divisibility",
    "rerooting",
    "oracle-equivalence",
    "cycle-lemma",
    "roundtrip",
];

pub const ORACLE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub cases: usize,
    pub failures: usize,
    pub passed: bool,
    /// Description of the first failing case, if any.
    pub first_failure: Option<String>,
}

impl SuiteReport {
    fn from_outcomes(suite: &str, outcomes: Vec<std::result::Result<(), String>>) -> Self {
        let failures: Vec<String> = outcomes.iter().filter_map(|o| o.as_ref().err().cloned()).collect();
        SuiteReport {
            suite: suite.to_string(),
            cases: outcomes.len(),
            failures: failures.len(),
            passed: failures.is_empty(),
            first_failure: failures.into_iter().next(),
        }
    }
}

/// Distributions used for the tree corpora.
pub fn corpus_distributions() -> Result<Vec<(&'static str, OffspringDistribution)>> {
    Ok(vec![
        ("binomial(k=2)", OffspringDistribution::binomial(2)?),
        ("poisson", OffspringDistribution::poisson()?),
        ("geometric", OffspringDistribution::geometric()?),
        ("uniform-set{0,1,2}", OffspringDistribution::uniform_set(&[0, 1, 2])?),
    ])
}

/// A sampled tree together with the index of the law that produced it.
#[derive(Debug, Clone)]
pub struct CorpusTree {
    pub dist_index: usize,
    pub tree: RootedTree,
}

/// `count` conditional trees, cycling through [`corpus_distributions`], sizes
/// uniform on `1..=max_n`. Tree `i` uses random stream `i` of `seed`.
pub fn sample_corpus(
    dists: &[(&str, OffspringDistribution)],
    count: usize,
    max_n: usize,
    seed: u64,
) -> Result<Vec<CorpusTree>> {
    if dists.is_empty() || max_n == 0 {
        return Err(Error::InvalidParams("corpus needs a distribution and max_n >= 1".into()));
    }
    let samplers: Vec<TreeSampler<'_>> = dists.iter().map(|(_, d)| TreeSampler::new(d)).collect();
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::stream(seed, i as u64);
            let dist_index = i % dists.len();
            let n = rng.random_range(1..=max_n);
            let tree = samplers[dist_index].sample_conditional_tree(n, &mut rng)?;
            Ok(CorpusTree { dist_index, tree })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VerifyOptions {
    pub seed: u64,
    /// Trees in the structural corpus.
    pub trees: usize,
    pub max_n: usize,
    /// Trees (and largest size) for the oracle comparison.
    pub oracle_trees: usize,
    pub oracle_max_n: usize,
    /// Random sequences for the cycle-lemma suite and their largest length.
    pub sequences: usize,
    pub sequence_max_n: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: 0,
            trees: 1000,
            max_n: 50,
            oracle_trees: 1000,
            oracle_max_n: 12,
            sequences: 10_000,
            sequence_max_n: 12,
        }
    }
}

/// Runs a named suite.
pub fn run_suite(name: &str, opts: &VerifyOptions) -> Result<SuiteReport> {
    let structural = |check: fn(&FreeTree) -> bool| -> Result<SuiteReport> {
        let dists = corpus_distributions()?;
        let corpus = sample_corpus(&dists, opts.trees, opts.max_n, opts.seed)?;
        let outcomes = corpus
            .par_iter()
            .enumerate()
            .map(|(i, t)| {
                let f = t.tree.forget_root();
                if check(&f) {
                    Ok(())
                } else {
                    Err(format!("tree {i} ({}, n = {}): {:?}", dists[t.dist_index].0, f.n(), f.edges()))
                }
            })
            .collect();
        Ok(SuiteReport::from_outcomes(name, outcomes))
    };
    match name {
        "clones" => structural(oracle::check_clone_criterion),
        "lemma2" => structural(oracle::check_lemma2),
        "valley" => structural(oracle::check_valley),
        "minmult" => structural(oracle::check_min_multiplicity),
        "divisibility" => structural(oracle::check_neighbor_divisibility),
        "rerooting" => structural(check_rerooting),
        "oracle-equivalence" => {
            let dists = corpus_distributions()?;
            let corpus = sample_corpus(&dists, opts.oracle_trees, opts.oracle_max_n, opts.seed)?;
            let outcomes = corpus
                .par_iter()
                .enumerate()
                .map(|(i, t)| {
                    let f = t.tree.forget_root();
                    oracle_agrees(&f, &dists[t.dist_index].1)
                        .map_err(|e| format!("tree {i}: {e}"))
                        .and_then(|ok| {
                            if ok {
                                Ok(())
                            } else {
                                Err(format!("tree {i} ({}): {:?}", dists[t.dist_index].0, f.edges()))
                            }
                        })
                })
                .collect();
            Ok(SuiteReport::from_outcomes(name, outcomes))
        }
        "cycle-lemma" => {
            let outcomes = (0..opts.sequences)
                .into_par_iter()
                .map(|i| {
                    let mut rng = rng::stream(opts.seed, i as u64);
                    let n = rng.random_range(1..=opts.sequence_max_n);
                    let seq = random_tree_sum_sequence(n, &mut rng);
                    check_cycle_lemma(&seq).map_err(|e| format!("sequence {:?}: {e}", seq.as_slice()))
                })
                .collect();
            Ok(SuiteReport::from_outcomes(name, outcomes))
        }
        "roundtrip" => {
            let dists = corpus_distributions()?;
            let corpus = sample_corpus(&dists, opts.trees, opts.max_n, opts.seed)?;
            let outcomes = corpus
                .par_iter()
                .enumerate()
                .map(|(i, t)| check_roundtrip(&t.tree).map_err(|e| format!("tree {i}: {e}")))
                .collect();
            Ok(SuiteReport::from_outcomes(name, outcomes))
        }
        other => Err(Error::Config(format!("unknown suite {other:?}; known suites: {}", SUITES.join(", ")))),
    }
}

/// The all-roots fast path and the per-root baseline induce the same canonical forms.
pub fn check_rerooting(f: &FreeTree) -> bool {
    let fast = TreeAnalysis::new(f);
    let slow = TreeAnalysis::new_baseline(f);
    (0..f.n()).all(|u| fast.canonical_form(u) == slow.canonical_form(u))
}

/// The posterior argmax is the candidate set and its value there is the
/// estimator's conditional correctness.
pub fn oracle_agrees(f: &FreeTree, dist: &OffspringDistribution) -> Result<bool> {
    let c = candidates(f, dist)?;
    let posterior = oracle::root_posterior(f, dist)?;
    let argmax = argmax_set(&posterior, ORACLE_TOLERANCE);
    if argmax != c.nodes {
        return Ok(false);
    }
    match conditional_correctness_exact(f, dist)? {
        Some(exact) => Ok(c.nodes.iter().all(|&u| posterior[u] == Probability::Exact(exact.clone()))),
        None => {
            let p = conditional_correctness(f, dist)?;
            Ok(c.nodes.iter().all(|&u| (posterior[u].to_f64() - p).abs() <= ORACLE_TOLERANCE))
        }
    }
}

/// `n` nonnegative integers summing to `n - 1`, each unit placed in a uniform slot.
pub fn random_tree_sum_sequence<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DegreeSequence {
    let mut xs = vec![0usize; n];
    for _ in 0..n.saturating_sub(1) {
        xs[rng.random_range(0..n)] += 1;
    }
    DegreeSequence::new(xs)
}

/// Exactly one cyclic rotation is a valid preorder sequence, and it is the one
/// found by [`cycle_rotate`].
pub fn check_cycle_lemma(seq: &DegreeSequence) -> std::result::Result<(), String> {
    let xs = seq.as_slice();
    let n = xs.len();
    let valid: Vec<usize> = (0..n)
        .filter(|&s| {
            let rotated: Vec<usize> = xs[s..].iter().chain(&xs[..s]).copied().collect();
            DegreeSequence::new(rotated).is_valid()
        })
        .collect();
    if valid.len() != 1 {
        return Err(format!("{} valid rotations", valid.len()));
    }
    let (rotated, offset) = cycle_rotate(seq).map_err(|e| e.to_string())?;
    if offset != valid[0] || !rotated.is_valid() {
        return Err(format!("cycle_rotate chose offset {offset}, expected {}", valid[0]));
    }
    Ok(())
}

/// Degree sequence and JSON encodings reproduce the tree.
pub fn check_roundtrip(tree: &RootedTree) -> std::result::Result<(), String> {
    let rebuilt = build_rooted_tree(&tree.degree_sequence()).map_err(|e| e.to_string())?;
    if &rebuilt != tree {
        return Err("degree sequence does not rebuild the tree".into());
    }
    let json = serde_json::to_string(&tree.to_json()).map_err(|e| e.to_string())?;
    let parsed = RootedTree::from_json(&serde_json::from_str(&json).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    if &parsed != tree {
        return Err("rooted JSON does not round-trip".into());
    }
    let free = tree.forget_root();
    let json = serde_json::to_string(&free.to_json()).map_err(|e| e.to_string())?;
    let parsed = FreeTree::from_json(&serde_json::from_str(&json).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    if parsed != free {
        return Err("free JSON does not round-trip".into());
    }
    Ok(())
}
