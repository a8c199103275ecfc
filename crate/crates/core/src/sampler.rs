//! Exact-size conditional Galton-Watson trees.
//!
//! `n` i.i.d. offspring counts are drawn and the batch is rejected unless they
//! sum to `n - 1`. The accepted sequence is then cyclically rotated into the
//! unique rotation whose Lukasiewicz walk stays positive before step `n`, and
//! decoded in preorder. The expected number of attempts grows like
//! `sigma * sqrt(2 pi n) / h`.

use std::collections::BTreeMap;

use rand::Rng;

use crate::distribution::OffspringDistribution;
use crate::error::{Error, Result};
use crate::tree::RootedTree;

/// Offspring counts `xi_1..xi_n` in preorder.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DegreeSequence(Vec<usize>);

impl DegreeSequence {
    pub fn new(degrees: Vec<usize>) -> Self {
        Self(degrees)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> usize {
        self.0.iter().sum()
    }

    /// Event A: the degrees sum to `n - 1`.
    pub fn has_tree_sum(&self) -> bool {
        !self.0.is_empty() && self.sum() == self.0.len() - 1
    }

    /// `1 + sum_{i <= t} (xi_i - 1) > 0` for all `t < n`, and the sum is `n - 1`.
    pub fn is_valid(&self) -> bool {
        if !self.has_tree_sum() {
            return false;
        }
        let mut walk: i64 = 1;
        for &d in &self.0[..self.0.len() - 1] {
            walk += d as i64 - 1;
            if walk <= 0 {
                return false;
            }
        }
        true
    }

    /// `i -> N_i`.
    pub fn census(&self) -> BTreeMap<usize, usize> {
        let mut census = BTreeMap::new();
        for &d in &self.0 {
            *census.entry(d).or_insert(0) += 1;
        }
        census
    }

    pub fn max(&self) -> usize {
        self.0.iter().copied().max().unwrap_or(0)
    }
}

/// Walker alias table consuming one 64-bit word per draw: the high half of
/// `x * len` picks the column and the low half is compared with the column's
/// threshold. Rejection sampling spends almost all of its time here.
#[derive(Debug, Clone)]
struct AliasTable {
    threshold: Vec<u64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(weights: &[f64]) -> Self {
        let len = weights.len();
        let total: f64 = weights.iter().sum();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * len as f64 / total).collect();
        let mut alias: Vec<u32> = (0..len as u32).collect();
        let mut threshold = vec![u64::MAX; len];
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..len).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            threshold[s] = to_fraction(scaled[s]);
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding and keep the full threshold.
        Self { threshold, alias }
    }

    /// One draw mapped through `values` (per column: alias value, own value).
    /// Indexing instead of branching lets the compiler emit a conditional move;
    /// the comparison is unpredictable by design.
    #[inline]
    fn sample_value<R: Rng + ?Sized>(&self, values: &[[usize; 2]], rng: &mut R) -> usize {
        let wide = u128::from(rng.next_u64()) * self.threshold.len() as u128;
        let column = (wide >> 64) as usize;
        let keep = (wide as u64) < self.threshold[column];
        values[column][usize::from(keep)]
    }
}

fn to_fraction(x: f64) -> u64 {
    if x >= 1.0 {
        u64::MAX
    } else {
        (x * 18_446_744_073_709_551_616.0) as u64
    }
}

/// Draws from a fixed offspring distribution.
pub struct TreeSampler<'a> {
    dist: &'a OffspringDistribution,
    alias: AliasTable,
    // Per column: [offspring count of the alias, offspring count of the column].
    values: Vec<[usize; 2]>,
}

impl<'a> TreeSampler<'a> {
    pub fn new(dist: &'a OffspringDistribution) -> Self {
        let support: Vec<usize> = (0..=dist.max_support()).filter(|&i| dist.p(i) > 0.0).collect();
        let weights: Vec<f64> = support.iter().map(|&i| dist.p(i)).collect();
        let alias = AliasTable::new(&weights);
        let values = (0..support.len()).map(|c| [support[alias.alias[c] as usize], support[c]]).collect();
        Self { dist, alias, values }
    }

    pub fn distribution(&self) -> &OffspringDistribution {
        self.dist
    }

    /// Default rejection budget: `max(1000, 1000 * sigma * sqrt(n))`.
    pub fn default_max_attempts(&self, n: usize) -> u64 {
        let scaled = (1000.0 * self.dist.std_dev() * (n as f64).sqrt()).ceil() as u64;
        scaled.max(1000)
    }

    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.alias.sample_value(&self.values, rng)
    }

    /// `n` draws conditioned on summing to `n - 1`; not yet rotated.
    pub fn sample_degree_sequence<R: Rng + ?Sized>(
        &self,
        n: usize,
        rng: &mut R,
        max_attempts: u64,
    ) -> Result<DegreeSequence> {
        self.dist.check_feasible(n)?;
        if n == 1 {
            return Ok(DegreeSequence(vec![0]));
        }
        let target = n - 1;
        let mut degrees = vec![0usize; n];
        'attempt: for _ in 0..max_attempts {
            let mut sum = 0usize;
            for slot in degrees.iter_mut() {
                let d = self.draw(rng);
                sum += d;
                if sum > target {
                    continue 'attempt;
                }
                *slot = d;
            }
            if sum == target {
                return Ok(DegreeSequence(degrees));
            }
        }
        Err(Error::AttemptsExhausted { attempts: max_attempts })
    }

    /// Sampled and rotated degree sequence, i.e. the preorder code of a conditional tree.
    pub fn sample_valid_sequence<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<DegreeSequence> {
        let raw = self.sample_degree_sequence(n, rng, self.default_max_attempts(n))?;
        Ok(cycle_rotate(&raw)?.0)
    }

    pub fn sample_conditional_tree<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<RootedTree> {
        build_rooted_tree(&self.sample_valid_sequence(n, rng)?)
    }
}

pub fn sample_degree_sequence<R: Rng + ?Sized>(
    dist: &OffspringDistribution,
    n: usize,
    rng: &mut R,
    max_attempts: u64,
) -> Result<DegreeSequence> {
    TreeSampler::new(dist).sample_degree_sequence(n, rng, max_attempts)
}

pub fn sample_conditional_tree<R: Rng + ?Sized>(
    dist: &OffspringDistribution,
    n: usize,
    rng: &mut R,
) -> Result<RootedTree> {
    TreeSampler::new(dist).sample_conditional_tree(n, rng)
}

/// Rotates a sum-`(n-1)` sequence into its unique valid rotation; returns the
/// rotated sequence and the offset it starts from in the input.
pub fn cycle_rotate(seq: &DegreeSequence) -> Result<(DegreeSequence, usize)> {
    if !seq.has_tree_sum() {
        return Err(Error::InvalidSequence(format!(
            "degrees sum to {}, expected {}",
            seq.sum(),
            seq.len().saturating_sub(1)
        )));
    }
    // Start right after the first time the walk reaches its minimum.
    let mut walk: i64 = 0;
    let mut min = i64::MAX;
    let mut offset = 0;
    for (t, &d) in seq.0.iter().enumerate() {
        walk += d as i64 - 1;
        if walk < min {
            min = walk;
            offset = t + 1;
        }
    }
    let offset = offset % seq.len();
    let mut rotated = Vec::with_capacity(seq.len());
    rotated.extend_from_slice(&seq.0[offset..]);
    rotated.extend_from_slice(&seq.0[..offset]);
    Ok((DegreeSequence(rotated), offset))
}

/// Decodes a valid preorder degree sequence; node `i` is the `i`-th in preorder.
pub fn build_rooted_tree(seq: &DegreeSequence) -> Result<RootedTree> {
    if !seq.is_valid() {
        return Err(Error::InvalidSequence(format!("{:?} is not a preorder degree sequence", seq.0)));
    }
    let n = seq.len();
    let mut children: Vec<Vec<usize>> = seq.0.iter().map(|&d| Vec::with_capacity(d)).collect();
    let mut open: Vec<usize> = Vec::new();
    for (i, &d) in seq.0.iter().enumerate() {
        if let Some(&p) = open.last() {
            children[p].push(i);
            if children[p].len() == seq.0[p] {
                open.pop();
            }
        }
        if d > 0 {
            open.push(i);
        }
    }
    debug_assert_eq!(children.iter().map(Vec::len).sum::<usize>(), n - 1);
    RootedTree::from_children(0, children)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    fn seq(v: &[usize]) -> DegreeSequence {
        DegreeSequence::new(v.to_vec())
    }

    #[test]
    fn alias_table_reproduces_weights() {
        let poisson = OffspringDistribution::poisson().unwrap();
        let weights: Vec<f64> = (0..=poisson.max_support()).map(|i| poisson.p(i)).collect();
        for w in [vec![0.5, 0.25, 0.125, 0.125], vec![1.0 / 3.0; 3], vec![0.9, 0.0, 0.1], weights] {
            let table = AliasTable::new(&w);
            let len = w.len() as f64;
            let mut implied = vec![0.0; w.len()];
            for (col, (&t, &a)) in table.threshold.iter().zip(&table.alias).enumerate() {
                let keep = t as f64 / 18_446_744_073_709_551_616.0;
                implied[col] += keep / len;
                implied[a as usize] += (1.0 - keep) / len;
            }
            for (p, q) in w.iter().zip(&implied) {
                assert!((p - q).abs() < 1e-12, "{w:?} -> {implied:?}");
            }
        }
        let w = [0.6, 0.3, 0.1];
        let table = AliasTable::new(&w);
        let mut rng = rng::seeded(17);
        let draws = 1_000_000;
        let identity: Vec<[usize; 2]> = (0..3).map(|c| [table.alias[c] as usize, c]).collect();
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            counts[table.sample_value(&identity, &mut rng)] += 1;
        }
        for (c, p) in counts.iter().zip(w) {
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
            assert!((*c as f64 - draws as f64 * p).abs() < 4.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn rotation_examples() {
        assert_eq!(cycle_rotate(&seq(&[0, 2, 0])).unwrap().0, seq(&[2, 0, 0]));
        assert_eq!(cycle_rotate(&seq(&[1, 1, 0])).unwrap(), (seq(&[1, 1, 0]), 0));
        assert_eq!(cycle_rotate(&seq(&[0, 1, 1])).unwrap().0, seq(&[1, 1, 0]));
        assert_eq!(cycle_rotate(&seq(&[0])).unwrap(), (seq(&[0]), 0));
        assert!(cycle_rotate(&seq(&[1, 1])).is_err());
    }

    #[test]
    fn decoding_examples() {
        let cherry = build_rooted_tree(&seq(&[2, 0, 0])).unwrap();
        assert_eq!(cherry.children(0), &[1, 2]);
        let chain = build_rooted_tree(&seq(&[1, 1, 0])).unwrap();
        assert_eq!(chain.children(0), &[1]);
        assert_eq!(chain.children(1), &[2]);
        let t = build_rooted_tree(&seq(&[2, 1, 0, 0])).unwrap();
        assert_eq!(t.children(0), &[1, 3]);
        assert_eq!(t.children(1), &[2]);
        assert!(matches!(build_rooted_tree(&seq(&[0, 2, 0])), Err(Error::InvalidSequence(_))));
        assert!(build_rooted_tree(&seq(&[0])).unwrap().n() == 1);
    }

    #[test]
    fn size_two_is_one_then_zero() {
        let dist = OffspringDistribution::binomial(2).unwrap();
        let sampler = TreeSampler::new(&dist);
        let mut rng = rng::seeded(1);
        for _ in 0..200 {
            let s = sampler.sample_degree_sequence(2, &mut rng, 10_000).unwrap();
            let mut sorted = s.into_vec();
            sorted.sort_unstable();
            assert_eq!(sorted, vec![0, 1]);
        }
    }

    #[test]
    fn size_three_multisets() {
        let dist = OffspringDistribution::binomial(2).unwrap();
        let sampler = TreeSampler::new(&dist);
        let mut rng = rng::seeded(2);
        for _ in 0..500 {
            let mut s = sampler.sample_degree_sequence(3, &mut rng, 10_000).unwrap().into_vec();
            s.sort_unstable();
            assert!(s == vec![0, 0, 2] || s == vec![0, 1, 1], "{s:?}");
        }
    }

    #[test]
    fn single_node() {
        let dist = OffspringDistribution::poisson().unwrap();
        let tree = sample_conditional_tree(&dist, 1, &mut rng::seeded(0)).unwrap();
        assert_eq!(tree.n(), 1);
    }

    #[test]
    fn infeasible_and_exhausted() {
        let full = OffspringDistribution::uniform_set(&[0, 2]).unwrap();
        assert!(matches!(
            sample_degree_sequence(&full, 4, &mut rng::seeded(0), 10),
            Err(Error::InfeasibleSize { .. })
        ));
        let dist = OffspringDistribution::binomial(2).unwrap();
        assert!(matches!(
            sample_degree_sequence(&dist, 500, &mut rng::seeded(0), 1),
            Err(Error::AttemptsExhausted { attempts: 1 })
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let dist = OffspringDistribution::geometric().unwrap();
        let a = sample_conditional_tree(&dist, 60, &mut rng::seeded(9)).unwrap();
        let b = sample_conditional_tree(&dist, 60, &mut rng::seeded(9)).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn exactly_one_rotation_is_valid(raw in prop::collection::vec(0usize..5, 1..12)) {
            // Force the sum to n - 1 by adjusting the tail.
            let n = raw.len();
            let mut degrees = raw;
            let mut excess = degrees.iter().sum::<usize>() as i64 - (n as i64 - 1);
            for d in degrees.iter_mut() {
                if excess > 0 {
                    let cut = (*d as i64).min(excess);
                    *d -= cut as usize;
                    excess -= cut;
                }
            }
            if excess < 0 {
                degrees[0] += (-excess) as usize;
            }
            let s = DegreeSequence::new(degrees.clone());
            prop_assert!(s.has_tree_sum());
            let valid: Vec<usize> = (0..n)
                .filter(|&k| {
                    let mut r = degrees[k..].to_vec();
                    r.extend_from_slice(&degrees[..k]);
                    DegreeSequence::new(r).is_valid()
                })
                .collect();
            prop_assert_eq!(valid.len(), 1);
            let (rotated, offset) = cycle_rotate(&s).unwrap();
            prop_assert_eq!(offset, valid[0]);
            prop_assert!(rotated.is_valid());
        }

        #[test]
        fn decode_encode_round_trip(seed in any::<u64>(), n in 1usize..80) {
            let dist = OffspringDistribution::geometric().unwrap();
            let s = TreeSampler::new(&dist).sample_valid_sequence(n, &mut rng::seeded(seed)).unwrap();
            let tree = build_rooted_tree(&s).unwrap();
            prop_assert_eq!(tree.degree_sequence(), s.clone());
            prop_assert_eq!(s.census().values().sum::<usize>(), n);
            prop_assert_eq!(s.sum(), n - 1);
        }
    }
}
