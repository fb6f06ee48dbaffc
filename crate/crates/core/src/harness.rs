//! Experiment plumbing behind the `srlb` binary: instance verification
//! reports, slab-query benchmarks with CSV output, and the log-log fit of
//! node visits against `n`.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{
    eval_hyperplane, generate_hyperplanes, generate_points, integer_root, normalize_params, Instance,
};
use crate::incidence::{
    build_incidence_graph, build_incidence_graph_indexed, pair_coverage_parallel, richness_histogram, IncidenceGraph,
};
use crate::range::{slab_query_for, KdTree, SimplexQuery, DEFAULT_LEAF_CAPACITY};

/// Most slab queries benchmarked per instance; larger families are sampled.
pub const DEFAULT_SAMPLE_LIMIT: usize = 512;

/// Above this many point/hyperplane tests the incidence graph is built from
/// a coordinate index instead of a full scan.
pub const SCAN_LIMIT: u128 = 100_000_000;

/// Richness for a given `n` when none is requested: `s^(d-1)` with
/// `s = floor((n / 2d)^(1/d))`, i.e. `t ≈ (2d)^(-(d-1)/d) · n^(1-1/d)`.
/// The constant keeps `A ≥ 2` so the family has more than one direction.
pub fn auto_t(d: u32, n: u64) -> u64 {
    let s = integer_root(n / (2 * u64::from(d)), d).max(1);
    s.saturating_pow(d - 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TRule {
    Fixed(u64),
    Auto,
}

impl TRule {
    pub fn t_for(&self, d: u32, n: u64) -> u64 {
        match *self {
            TRule::Fixed(t) => t,
            TRule::Auto => auto_t(d, n),
        }
    }
}

impl FromStr for TRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "auto" {
            return Ok(TRule::Auto);
        }
        s.strip_prefix("fixed:")
            .and_then(|v| v.parse().ok())
            .map(TRule::Fixed)
            .ok_or_else(|| Error::Invalid(format!("t rule must be `auto` or `fixed:<t>`, got `{s}`")))
    }
}

impl fmt::Display for TRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TRule::Fixed(t) => write!(f, "fixed:{t}"),
            TRule::Auto => f.write_str("auto"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub d: u32,
    pub sizes: Vec<u64>,
    pub t_rule: TRule,
    pub seed: u64,
    pub leaf_capacity: usize,
    pub sample_limit: usize,
}

impl ExperimentPlan {
    pub fn new(d: u32, sizes: Vec<u64>, t_rule: TRule, seed: u64) -> Result<Self> {
        let plan = ExperimentPlan {
            d,
            sizes,
            t_rule,
            seed,
            leaf_capacity: DEFAULT_LEAF_CAPACITY,
            sample_limit: DEFAULT_SAMPLE_LIMIT,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.is_empty() {
            return Err(Error::Invalid("plan has no sizes".into()));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid("plan sizes must be strictly increasing".into()));
        }
        for &n in &self.sizes {
            normalize_params(self.d, n, self.t_rule.t_for(self.d, n))?;
        }
        Ok(())
    }
}

/// One benchmarked query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRow {
    pub n: u64,
    pub d: u32,
    pub query_id: u64,
    pub k: u64,
    pub nodes_visited: u64,
    pub leaves_scanned: u64,
    pub points_tested: u64,
}

/// Aggregate over all queries run on one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub n: u64,
    pub d: u32,
    pub t: u64,
    pub m: u64,
    pub queries: u64,
    pub mean_nodes_visited: f64,
    pub max_nodes_visited: u64,
    pub mean_points_tested: f64,
    pub min_k: u64,
    pub max_k: u64,
}

/// Runs one plan entry: slab queries for the family (sampled down to the
/// plan's limit) or, when given, a fixed query batch.
pub fn bench_size(
    plan: &ExperimentPlan,
    n_requested: u64,
    batch: Option<&[SimplexQuery]>,
) -> Result<(Vec<StatsRow>, SummaryRow)> {
    let params = normalize_params(plan.d, n_requested, plan.t_rule.t_for(plan.d, n_requested))?;
    let points = generate_points(&params);
    let tree = KdTree::build(&points, plan.leaf_capacity)?;
    let queries: Vec<(u64, SimplexQuery)> = match batch {
        Some(batch) => batch.iter().cloned().enumerate().map(|(i, q)| (i as u64, q)).collect(),
        None => {
            let family = generate_hyperplanes(&params);
            let mut ids: Vec<usize> = if family.len() > plan.sample_limit {
                let mut rng = ChaCha8Rng::seed_from_u64(plan.seed ^ params.n.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                rand::seq::index::sample(&mut rng, family.len(), plan.sample_limit).into_vec()
            } else {
                (0..family.len()).collect()
            };
            ids.sort_unstable();
            ids.into_iter()
                .map(|i| (i as u64, slab_query_for(&family[i])))
                .collect()
        }
    };
    let rows = queries
        .par_iter()
        .map(|(id, q)| {
            let (_, stats) = tree.query(q)?;
            Ok(StatsRow {
                n: params.n,
                d: params.d,
                query_id: *id,
                k: stats.points_reported,
                nodes_visited: stats.nodes_visited,
                leaves_scanned: stats.leaves_scanned,
                points_tested: stats.points_tested,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let count = rows.len().max(1) as f64;
    let summary = SummaryRow {
        n: params.n,
        d: params.d,
        t: params.t,
        m: params.m,
        queries: rows.len() as u64,
        mean_nodes_visited: rows.iter().map(|r| r.nodes_visited as f64).sum::<f64>() / count,
        max_nodes_visited: rows.iter().map(|r| r.nodes_visited).max().unwrap_or(0),
        mean_points_tested: rows.iter().map(|r| r.points_tested as f64).sum::<f64>() / count,
        min_k: rows.iter().map(|r| r.k).min().unwrap_or(0),
        max_k: rows.iter().map(|r| r.k).max().unwrap_or(0),
    };
    Ok((rows, summary))
}

/// Streams a full plan into the two CSV sinks, flushing after every size so
/// a failure leaves the completed sizes on disk.
pub fn run_bench<W1: Write, W2: Write>(
    plan: &ExperimentPlan,
    batch: Option<&[SimplexQuery]>,
    stats_out: &mut csv::Writer<W1>,
    summary_out: &mut csv::Writer<W2>,
) -> Result<Vec<SummaryRow>> {
    plan.validate()?;
    let mut summaries = Vec::with_capacity(plan.sizes.len());
    for &n in &plan.sizes {
        let (rows, summary) = bench_size(plan, n, batch)?;
        for row in &rows {
            stats_out.serialize(row)?;
        }
        summary_out.serialize(&summary)?;
        stats_out.flush()?;
        summary_out.flush()?;
        summaries.push(summary);
    }
    Ok(summaries)
}

/// A CSV writer whose output starts with a `# ...` provenance line.
pub fn csv_writer_with_banner<W: Write>(mut inner: W, banner: &str) -> Result<csv::Writer<W>> {
    writeln!(inner, "# {banner}")?;
    Ok(csv::Writer::from_writer(inner))
}

/// Least-squares fit of `log2 y` against `log2 x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

pub fn fit_power_law(samples: &[(f64, f64)]) -> Result<FitResult> {
    if samples.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "need at least 3 sizes for a fit, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0)) {
        return Err(Error::InsufficientData(
            "fit needs positive sizes and visit counts".into(),
        ));
    }
    let logs: Vec<(f64, f64)> = samples.iter().map(|&(x, y)| (x.log2(), y.log2())).collect();
    let count = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all sizes are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(FitResult {
        slope,
        intercept,
        r_squared,
        points_used: logs.len(),
    })
}

/// `(n, mean nodes visited)` per size from either a summary CSV or a
/// per-query stats CSV. Lines starting with `#` are skipped.
pub fn read_visit_series(path: impl AsRef<Path>) -> Result<Vec<(f64, f64)>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let headers = reader.headers()?.clone();
    let column = |name: &str| headers.iter().position(|h| h == name);
    let n_col = column("n").ok_or_else(|| Error::Invalid("CSV has no `n` column".into()))?;
    if let Some(mean_col) = column("mean_nodes_visited") {
        let mut series = Vec::new();
        for record in reader.records() {
            let record = record?;
            series.push((parse_field(&record, n_col)?, parse_field(&record, mean_col)?));
        }
        return Ok(series);
    }
    let visits_col = column("nodes_visited")
        .ok_or_else(|| Error::Invalid("CSV has neither `mean_nodes_visited` nor `nodes_visited`".into()))?;
    let mut groups: BTreeMap<u64, (f64, u64)> = BTreeMap::new();
    for record in reader.records() {
        let record = record?;
        let n = parse_field(&record, n_col)? as u64;
        let entry = groups.entry(n).or_insert((0.0, 0));
        entry.0 += parse_field(&record, visits_col)?;
        entry.1 += 1;
    }
    Ok(groups
        .into_iter()
        .map(|(n, (sum, c))| (n as f64, sum / c as f64))
        .collect())
}

fn parse_field(record: &csv::StringRecord, col: usize) -> Result<f64> {
    let raw = record.get(col).unwrap_or("");
    raw.trim()
        .parse()
        .map_err(|_| Error::Invalid(format!("cannot parse `{raw}` as a number")))
}

pub fn fit_csv(path: impl AsRef<Path>) -> Result<FitResult> {
    fit_power_law(&read_visit_series(path)?)
}

/// Outcome of checking an instance file against the construction's
/// guarantees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    /// Every hyperplane meets exactly `t` points.
    pub richness_exact: bool,
    pub max_pair_coverage: u64,
    /// `A^(d-2)`, the most hyperplanes allowed through two points.
    pub beta_bound: u64,
    pub k2beta_free: bool,
    /// Every listed hyperplane stays inside the grid's last axis.
    pub containment: bool,
    /// Exactly `m` hyperplanes, pairwise distinct, coefficients in range.
    pub family_exact: bool,
    /// The points are exactly the lattice, each once.
    pub grid_exact: bool,
    /// Present when the file carried its own adjacency: whether it agrees
    /// with the point/hyperplane geometry.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adjacency_consistent: Option<bool>,
    pub richness_histogram: BTreeMap<usize, usize>,
    pub witness: Option<(usize, usize)>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.richness_exact
            && self.k2beta_free
            && self.containment
            && self.family_exact
            && self.grid_exact
            && self.adjacency_consistent.unwrap_or(true)
    }
}

/// Incidence graph by full scan when that is affordable, otherwise through
/// the coordinate index. Both give the same graph.
pub fn incidence_graph_for(instance: &Instance) -> Result<IncidenceGraph> {
    let points = instance.points();
    let family = instance.hyperplanes();
    if (points.len() as u128) * (family.len() as u128) <= SCAN_LIMIT {
        build_incidence_graph(&points, &family)
    } else {
        build_incidence_graph_indexed(&points, &family)
    }
}

pub fn verify_instance(instance: &Instance, budget: u64) -> Result<VerifyReport> {
    let params = instance.params;
    params.validate()?;
    let points = instance.points();
    let family = instance.hyperplanes();
    let d = params.d as usize;

    let distinct: BTreeSet<_> = family.iter().collect();
    let family_exact = family.len() as u64 == params.m
        && distinct.len() == family.len()
        && family.iter().all(|h| {
            h.dim() == d
                && h.a.iter().all(|&a| (1..=params.a as i64).contains(&a))
                && (1..=params.b as i64).contains(&h.b)
        });

    let grid_exact = points.len() as u64 == params.n && {
        let lattice: BTreeSet<_> = generate_points(&params).into_iter().collect();
        let given: BTreeSet<_> = points.iter().cloned().collect();
        given == lattice
    };

    let corner_low = vec![1i64; d - 1];
    let corner_high = vec![params.s as i64; d - 1];
    let height = params.height() as i64;
    let mut containment = params.containment_lhs()? <= params.height();
    for h in &family {
        if h.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: h.dim(),
            });
        }
        // coefficients may be negative in a hand-edited file
        let values = [eval_hyperplane(h, &corner_low)?, eval_hyperplane(h, &corner_high)?];
        let spread = h.a.iter().all(|&a| a >= 0);
        if !spread || values.iter().any(|v| !(1..=height).contains(v)) {
            containment = false;
        }
    }

    let geometric = incidence_graph_for(instance)?;
    let (graph, adjacency_consistent) = match &instance.adjacency {
        Some(lists) => {
            let stored = IncidenceGraph::from_adjacency(points.len(), lists.clone())?;
            let consistent = stored == geometric;
            (stored, Some(consistent))
        }
        None => (geometric, None),
    };

    let histogram = richness_histogram(&graph);
    let richness_exact = histogram.len() == 1 && histogram.get(&(params.t as usize)) == Some(&(params.m as usize));
    let coverage = pair_coverage_parallel(&graph, budget)?;
    let beta_bound = params.pair_bound();
    Ok(VerifyReport {
        richness_exact,
        max_pair_coverage: coverage.max_common,
        beta_bound,
        k2beta_free: coverage.max_common <= beta_bound,
        containment,
        family_exact,
        grid_exact,
        adjacency_consistent,
        richness_histogram: histogram,
        witness: coverage.witness,
    })
}

/// Decimal rendering with `digits` significant digits; scientific outside
/// `[1e-4, 1e6)`.
pub fn format_significant(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-4..6).contains(&exp) {
        return format!("{:.*e}", digits - 1, x);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may have carried into a new leading digit (9.999995 -> 10.00000)
    let int_digits = s
        .trim_start_matches('-')
        .split('.')
        .next()
        .map_or(0, |p| p.trim_start_matches('0').len());
    if int_digits as i32 > exp + 1 && decimals > 0 {
        return format!("{x:.prec$}", prec = decimals - 1);
    }
    s
}
