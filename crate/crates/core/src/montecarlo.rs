//! Monte Carlo campaigns: empirical correctness of the estimator against the
//! closed-form and limiting predictions, plus degree and `W` statistics.
//!
//! Trials are split into fixed-size chunks. Chunk `i` draws from ChaCha stream
//! `i` of the campaign seed, chunks run in parallel, and results are folded in
//! chunk order, so a report depends only on `(dist, n, trials, seed)`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::distribution::{self, Family, OffspringDistribution, Ratio};
use crate::error::{Error, Result};
use crate::estimator::estimate_root;
use crate::rng::{self, GwRng};
use crate::sampler::TreeSampler;

pub const CHUNK_SIZE: u64 = 1024;
const WILSON_Z: f64 = 1.959963984540054;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredictionKind {
    Exact,
    Asymptotic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub value: f64,
    pub kind: PredictionKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub dist: String,
    pub n: usize,
    pub trials: u64,
    pub empirical_correct: u64,
    pub empirical_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_conditional_correctness: f64,
    /// Extremes of the conditional correctness over the sampled trees.
    pub min_conditional_correctness: f64,
    pub max_conditional_correctness: f64,
    pub mean_max_degree: f64,
    /// Mean of `W/n` over trials without a special hit (`W` is infinite otherwise).
    pub mean_w_over_n: Option<f64>,
    pub mean_n_over_w: Option<f64>,
    pub special_hit_rate: f64,
    /// Trials with a special hit where the estimate was wrong. Always 0 for a correct estimator.
    pub special_hit_failures: u64,
    pub predicted: BTreeMap<String, Prediction>,
    pub seed: u64,
}

impl TrialReport {
    /// Binomial standard error of the empirical rate.
    pub fn standard_error(&self) -> f64 {
        (self.empirical_rate * (1.0 - self.empirical_rate) / self.trials as f64).sqrt()
    }

    /// Empirical rate and mean conditional correctness estimate the same
    /// quantity; true when they agree within `sigmas` standard errors.
    pub fn is_consistent(&self, sigmas: f64) -> bool {
        let se = self.standard_error().max(1.0 / self.trials as f64);
        (self.empirical_rate - self.mean_conditional_correctness).abs() <= sigmas * se
    }

    /// Whether the empirical rate is within `sigmas` standard errors of `p`,
    /// with the error taken at `p` itself.
    pub fn within_sigmas_of(&self, p: f64, sigmas: f64) -> bool {
        let se = (p * (1.0 - p) / self.trials as f64).sqrt();
        (self.empirical_rate - p).abs() <= sigmas * se
    }
}

/// 95% Wilson score interval.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = WILSON_Z * WILSON_Z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = WILSON_Z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Runs `trials` trials in chunks, returning the per-chunk results in order.
fn run_chunked<A, F>(trials: u64, seed: u64, work: F) -> Result<Vec<A>>
where
    A: Send,
    F: Fn(&mut GwRng, u64) -> Result<A> + Sync,
{
    let chunks = trials.div_ceil(CHUNK_SIZE);
    (0..chunks)
        .into_par_iter()
        .map(|i| {
            let count = CHUNK_SIZE.min(trials - i * CHUNK_SIZE);
            let mut rng = rng::stream(seed, i);
            work(&mut rng, count)
        })
        .collect()
}

struct TrialTotals {
    correct: u64,
    conditional: f64,
    min_conditional: f64,
    max_conditional: f64,
    max_degree: f64,
    w_over_n: f64,
    n_over_w: f64,
    finite_w: u64,
    special_hits: u64,
    special_failures: u64,
}

impl Default for TrialTotals {
    fn default() -> Self {
        TrialTotals {
            correct: 0,
            conditional: 0.0,
            min_conditional: f64::INFINITY,
            max_conditional: f64::NEG_INFINITY,
            max_degree: 0.0,
            w_over_n: 0.0,
            n_over_w: 0.0,
            finite_w: 0,
            special_hits: 0,
            special_failures: 0,
        }
    }
}

/// Samples trees, hides their roots and scores the estimator.
pub fn run_trials(dist: &OffspringDistribution, n: usize, trials: u64, seed: u64) -> Result<TrialReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    dist.check_feasible(n)?;
    let sampler = TreeSampler::new(dist);
    let chunks = run_chunked(trials, seed, |rng, count| {
        let mut t = TrialTotals::default();
        for _ in 0..count {
            let tree = sampler.sample_conditional_tree(n, rng)?;
            let free = tree.forget_root();
            let est = estimate_root(&free, dist, rng)?;
            let correct = est.chosen == tree.root();
            t.correct += u64::from(correct);
            t.conditional += est.conditional_correctness;
            t.min_conditional = t.min_conditional.min(est.conditional_correctness);
            t.max_conditional = t.max_conditional.max(est.conditional_correctness);
            t.max_degree += tree.max_degree() as f64;
            if est.special_hit {
                t.special_hits += 1;
                t.special_failures += u64::from(!correct);
            }
            if let Ratio::Finite(w) = free.weighted_sum_w(dist) {
                t.finite_w += 1;
                t.w_over_n += w / n as f64;
                t.n_over_w += n as f64 / w;
            }
        }
        Ok(t)
    })?;
    let mut total = TrialTotals::default();
    for c in chunks {
        total.correct += c.correct;
        total.conditional += c.conditional;
        total.min_conditional = total.min_conditional.min(c.min_conditional);
        total.max_conditional = total.max_conditional.max(c.max_conditional);
        total.max_degree += c.max_degree;
        total.w_over_n += c.w_over_n;
        total.n_over_w += c.n_over_w;
        total.finite_w += c.finite_w;
        total.special_hits += c.special_hits;
        total.special_failures += c.special_failures;
    }
    let tf = trials as f64;
    let (ci_low, ci_high) = wilson_interval(total.correct, trials);
    let finite_mean = |sum: f64| (total.finite_w > 0).then(|| sum / total.finite_w as f64);
    Ok(TrialReport {
        dist: dist.family().to_string(),
        n,
        trials,
        empirical_correct: total.correct,
        empirical_rate: total.correct as f64 / tf,
        ci_low,
        ci_high,
        mean_conditional_correctness: total.conditional / tf,
        min_conditional_correctness: total.min_conditional,
        max_conditional_correctness: total.max_conditional,
        mean_max_degree: total.max_degree / tf,
        mean_w_over_n: finite_mean(total.w_over_n),
        mean_n_over_w: finite_mean(total.n_over_w),
        special_hit_rate: total.special_hits as f64 / tf,
        special_hit_failures: total.special_failures,
        predicted: theory_prediction(dist, n),
        seed,
    })
}

/// Every applicable closed form or limit for `P{C}` at size `n`.
pub fn theory_prediction(dist: &OffspringDistribution, n: usize) -> BTreeMap<String, Prediction> {
    let mut out = BTreeMap::new();
    let nf = n as f64;
    let exact = |value| Prediction { value, kind: PredictionKind::Exact };
    let asymptotic = |value| Prediction { value, kind: PredictionKind::Asymptotic };
    match dist.family() {
        Family::Binomial { k } => {
            let k = *k as f64;
            out.insert("k_ary".into(), exact(k / ((k - 1.0) * nf + 2.0)));
        }
        Family::Poisson => {
            out.insert("cayley".into(), exact(1.0 / nf));
        }
        Family::Geometric if n >= 2 => {
            out.insert("planted_plane".into(), asymptotic(nf.log2() / (2.0 * (nf - 1.0))));
        }
        Family::UniformSet { values } if values == &[0, 1, 2] => {
            out.insert("motzkin".into(), asymptotic(2.0 / nf));
        }
        _ => {}
    }
    let special = dist.special_integers();
    if special.is_empty() {
        if let Some(sup) = dist.sup_ratio() {
            out.insert("generic".into(), asymptotic(sup / nf));
        }
    } else {
        let limit: f64 = special.iter().map(|&i| i as f64 * dist.p(i)).sum();
        out.insert("special_limit".into(), asymptotic(limit));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatisticReport {
    pub dist: String,
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    /// Mean of the largest number of children of any node.
    pub mean_max_degree: f64,
    pub mean_max_degree_over_log2n: f64,
    pub mean_w_over_n: Option<f64>,
    pub mean_n_over_w: Option<f64>,
    pub min_w_over_n: Option<f64>,
    pub max_w_over_n: Option<f64>,
    /// Mean of `N_i / n`, where `N_i` counts nodes with `i` children.
    pub degree_frequencies: Vec<f64>,
    /// Mean over trials of `max_i |N_i / n - p_i|`.
    pub mean_frequency_deviation: f64,
}

struct StatTotals {
    max_degree: f64,
    w_over_n: f64,
    n_over_w: f64,
    finite_w: u64,
    min_w: f64,
    max_w: f64,
    frequencies: Vec<f64>,
    deviation: f64,
}

impl Default for StatTotals {
    fn default() -> Self {
        StatTotals {
            max_degree: 0.0,
            w_over_n: 0.0,
            n_over_w: 0.0,
            finite_w: 0,
            min_w: f64::INFINITY,
            max_w: f64::NEG_INFINITY,
            frequencies: Vec::new(),
            deviation: 0.0,
        }
    }
}

fn add_into(acc: &mut Vec<f64>, other: &[f64]) {
    if acc.len() < other.len() {
        acc.resize(other.len(), 0.0);
    }
    for (a, b) in acc.iter_mut().zip(other) {
        *a += b;
    }
}

/// Empirical behaviour of the maximal degree, of `W`, and of degree frequencies.
pub fn statistic_suite(dist: &OffspringDistribution, n: usize, trials: u64, seed: u64) -> Result<StatisticReport> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be at least 1".into()));
    }
    dist.check_feasible(n)?;
    let sampler = TreeSampler::new(dist);
    let nf = n as f64;
    let chunks = run_chunked(trials, seed, |rng, count| {
        let mut t = StatTotals::default();
        for _ in 0..count {
            let tree = sampler.sample_conditional_tree(n, rng)?;
            t.max_degree += tree.max_degree() as f64;
            let mut counts = vec![0.0; tree.max_degree() + 1];
            for v in 0..n {
                counts[tree.degree(v)] += 1.0;
            }
            let freq: Vec<f64> = counts.iter().map(|c| c / nf).collect();
            let support = freq.len().max(dist.max_support() + 1);
            t.deviation += (0..support)
                .map(|i| (freq.get(i).copied().unwrap_or(0.0) - dist.p(i)).abs())
                .fold(0.0, f64::max);
            add_into(&mut t.frequencies, &freq);
            if let Ratio::Finite(w) = tree.forget_root().weighted_sum_w(dist) {
                let ratio = w / nf;
                t.finite_w += 1;
                t.w_over_n += ratio;
                t.n_over_w += nf / w;
                t.min_w = t.min_w.min(ratio);
                t.max_w = t.max_w.max(ratio);
            }
        }
        Ok(t)
    })?;
    let mut total = StatTotals::default();
    for c in chunks {
        total.max_degree += c.max_degree;
        total.w_over_n += c.w_over_n;
        total.n_over_w += c.n_over_w;
        total.finite_w += c.finite_w;
        total.min_w = total.min_w.min(c.min_w);
        total.max_w = total.max_w.max(c.max_w);
        total.deviation += c.deviation;
        add_into(&mut total.frequencies, &c.frequencies);
    }
    let tf = trials as f64;
    let any_w = total.finite_w > 0;
    let mean_max_degree = total.max_degree / tf;
    Ok(StatisticReport {
        dist: dist.family().to_string(),
        n,
        trials,
        seed,
        mean_max_degree,
        mean_max_degree_over_log2n: if n > 1 { mean_max_degree / nf.log2() } else { f64::NAN },
        mean_w_over_n: any_w.then(|| total.w_over_n / total.finite_w as f64),
        mean_n_over_w: any_w.then(|| total.n_over_w / total.finite_w as f64),
        min_w_over_n: any_w.then_some(total.min_w),
        max_w_over_n: any_w.then_some(total.max_w),
        degree_frequencies: total.frequencies.iter().map(|f| f / tf).collect(),
        mean_frequency_deviation: total.deviation / tf,
    })
}

/// One campaign entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignEntry {
    pub dist: Value,
    pub n: usize,
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub checks: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CampaignResult {
    #[serde(flatten)]
    pub report: TrialReport,
    pub checks: BTreeMap<String, bool>,
}

impl CampaignResult {
    pub fn passed(&self) -> bool {
        self.checks.values().all(|&ok| ok)
    }
}

/// Parses a campaign: either a list of entries or `{"runs": [...]}`.
pub fn parse_campaign(config: &Value) -> Result<Vec<CampaignEntry>> {
    let runs = match config {
        Value::Array(_) => config.clone(),
        Value::Object(map) => map
            .get("runs")
            .cloned()
            .ok_or_else(|| Error::Config("campaign object needs a \"runs\" list".into()))?,
        _ => return Err(Error::Config("campaign must be a list of runs".into())),
    };
    serde_json::from_value(runs).map_err(|e| Error::Config(format!("bad campaign entry: {e}")))
}

/// Evaluates a named check on a report.
///
/// * `consistency`: empirical rate and mean conditional correctness within 4 standard errors.
/// * `exact`: every exact prediction within 3 standard errors.
/// * `special`: no special hit ended in a wrong guess.
pub fn evaluate_check(report: &TrialReport, check: &str) -> Result<bool> {
    match check {
        "consistency" => Ok(report.is_consistent(4.0)),
        "exact" => Ok(report
            .predicted
            .values()
            .filter(|p| p.kind == PredictionKind::Exact)
            .all(|p| report.within_sigmas_of(p.value, 3.0))),
        "special" => Ok(report.special_hit_failures == 0),
        other => Err(Error::Config(format!("unknown check {other:?}"))),
    }
}

pub fn run_campaign(entries: &[CampaignEntry]) -> Result<Vec<CampaignResult>> {
    entries
        .iter()
        .map(|entry| {
            let dist = distribution::from_config(&entry.dist)?;
            let report = run_trials(&dist, entry.n, entry.trials, entry.seed)?;
            let checks = entry
                .checks
                .iter()
                .map(|c| Ok((c.clone(), evaluate_check(&report, c)?)))
                .collect::<Result<_>>()?;
            Ok(CampaignResult { report, checks })
        })
        .collect()
}

/// One JSON object per line.
pub fn to_json_lines<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

#[derive(Serialize)]
struct ReportCsvRow<'a> {
    dist: &'a str,
    n: usize,
    trials: u64,
    seed: u64,
    empirical_correct: u64,
    empirical_rate: f64,
    ci_low: f64,
    ci_high: f64,
    mean_conditional_correctness: f64,
    mean_max_degree: f64,
    mean_w_over_n: Option<f64>,
    mean_n_over_w: Option<f64>,
    special_hit_rate: f64,
    /// `name=value` pairs separated by `;`.
    predicted: String,
}

fn write_csv<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Plot-ready CSV summary of trial reports.
pub fn reports_csv(reports: &[TrialReport]) -> Result<String> {
    write_csv(reports.iter().map(|r| ReportCsvRow {
        dist: &r.dist,
        n: r.n,
        trials: r.trials,
        seed: r.seed,
        empirical_correct: r.empirical_correct,
        empirical_rate: r.empirical_rate,
        ci_low: r.ci_low,
        ci_high: r.ci_high,
        mean_conditional_correctness: r.mean_conditional_correctness,
        mean_max_degree: r.mean_max_degree,
        mean_w_over_n: r.mean_w_over_n,
        mean_n_over_w: r.mean_n_over_w,
        special_hit_rate: r.special_hit_rate,
        predicted: r.predicted.iter().map(|(k, p)| format!("{k}={}", p.value)).collect::<Vec<_>>().join(";"),
    }))
}

/// A row of the family comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub family: String,
    pub n: usize,
    pub trials: u64,
    pub empirical_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub mean_conditional_correctness: f64,
    pub predicted: f64,
    pub predicted_kind: PredictionKind,
}

/// The five classical families (binary, Cayley, Motzkin, planted plane, full
/// binary) at size `n`. Full binary trees need odd sizes, so `n + 1` is used
/// there when `n` is even.
pub fn table1(n: usize, trials: u64, seed: u64) -> Result<Vec<TableRow>> {
    let rows: [(&str, OffspringDistribution, usize, &str); 5] = [
        ("k-ary (k=2)", OffspringDistribution::binomial(2)?, n, "k_ary"),
        ("cayley", OffspringDistribution::poisson()?, n, "cayley"),
        ("motzkin", OffspringDistribution::uniform_set(&[0, 1, 2])?, n, "motzkin"),
        ("planted plane", OffspringDistribution::geometric()?, n, "planted_plane"),
        ("full binary", OffspringDistribution::uniform_set(&[0, 2])?, n | 1, "special_limit"),
    ];
    rows.into_iter()
        .enumerate()
        .map(|(i, (family, dist, size, key))| {
            let report = run_trials(&dist, size, trials, seed.wrapping_add(i as u64))?;
            let p = report.predicted.get(key).cloned().ok_or_else(|| {
                Error::InvalidParams(format!("no {key} prediction for {family} at n = {size}"))
            })?;
            Ok(TableRow {
                family: family.to_string(),
                n: size,
                trials,
                empirical_rate: report.empirical_rate,
                ci_low: report.ci_low,
                ci_high: report.ci_high,
                mean_conditional_correctness: report.mean_conditional_correctness,
                predicted: p.value,
                predicted_kind: p.kind,
            })
        })
        .collect()
}

pub fn table_csv(rows: &[TableRow]) -> Result<String> {
    write_csv(rows)
}
