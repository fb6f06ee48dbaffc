//! Incidence graph between points and hyperplanes, the exhaustive checks run
//! on it, and the space/query trade-off numbers derived from an instance.
//!
//! Nothing here consults the parametric generator: graphs are built with the
//! point-on-hyperplane predicate only, so they double as an oracle against
//! [`crate::geometry::incident_points`].

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{eval_hyperplane, incident, GridPoint, Hyperplane, InstanceParams};

/// Default work budget for [`pair_coverage`], in units of `Σ |list|²`.
pub const DEFAULT_PAIR_BUDGET: u64 = 1_000_000_000;

/// Bipartite point/hyperplane incidence graph, stored as one sorted list of
/// point indices per hyperplane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceGraph {
    point_count: usize,
    adjacency: Vec<Vec<usize>>,
}

impl IncidenceGraph {
    /// Builds a graph from explicit lists, rejecting unsorted, duplicated or
    /// out-of-range entries.
    pub fn from_adjacency(point_count: usize, adjacency: Vec<Vec<usize>>) -> Result<Self> {
        for (h, list) in adjacency.iter().enumerate() {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!("adjacency list {h} is not strictly increasing")));
            }
            if list.last().is_some_and(|&p| p >= point_count) {
                return Err(Error::Invalid(format!(
                    "adjacency list {h} references a point beyond {point_count}"
                )));
            }
        }
        Ok(IncidenceGraph { point_count, adjacency })
    }

    pub fn point_count(&self) -> usize {
        self.point_count
    }

    pub fn hyperplane_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn into_adjacency(self) -> Vec<Vec<usize>> {
        self.adjacency
    }

    pub fn incidence_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// Hyperplanes through each point, sorted.
    pub fn point_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.point_count];
        for (h, list) in self.adjacency.iter().enumerate() {
            for &p in list {
                lists[p].push(h);
            }
        }
        lists
    }
}

fn common_dimension(points: &[GridPoint], hyperplanes: &[Hyperplane]) -> Result<()> {
    let d = points
        .first()
        .map(GridPoint::dim)
        .or_else(|| hyperplanes.first().map(Hyperplane::dim));
    let Some(d) = d else { return Ok(()) };
    let dims = points
        .iter()
        .map(GridPoint::dim)
        .chain(hyperplanes.iter().map(Hyperplane::dim));
    for found in dims {
        if found != d {
            return Err(Error::DimensionMismatch { expected: d, found });
        }
    }
    Ok(())
}

/// Tests every (point, hyperplane) pair with the incidence predicate.
pub fn build_incidence_graph(points: &[GridPoint], hyperplanes: &[Hyperplane]) -> Result<IncidenceGraph> {
    common_dimension(points, hyperplanes)?;
    let adjacency = hyperplanes
        .par_iter()
        .map(|h| {
            let mut list = Vec::new();
            for (i, p) in points.iter().enumerate() {
                if incident(h, p)? {
                    list.push(i);
                }
            }
            Ok(list)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IncidenceGraph {
        point_count: points.len(),
        adjacency,
    })
}

/// Same graph as [`build_incidence_graph`], but groups the points by their
/// first `d - 1` coordinates so each hyperplane is evaluated once per
/// distinct base instead of once per point.
pub fn build_incidence_graph_indexed(points: &[GridPoint], hyperplanes: &[Hyperplane]) -> Result<IncidenceGraph> {
    common_dimension(points, hyperplanes)?;
    let mut by_base: BTreeMap<&[i64], HashMap<i64, Vec<usize>>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        by_base
            .entry(p.base())
            .or_default()
            .entry(p.last())
            .or_default()
            .push(i);
    }
    let adjacency = hyperplanes
        .par_iter()
        .map(|h| {
            let mut list = Vec::new();
            for (base, column) in &by_base {
                let x = eval_hyperplane(h, base)?;
                if let Some(ids) = column.get(&x) {
                    list.extend_from_slice(ids);
                }
            }
            list.sort_unstable();
            Ok(list)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IncidenceGraph {
        point_count: points.len(),
        adjacency,
    })
}

/// Richness value → number of hyperplanes with that richness.
pub fn richness_histogram(g: &IncidenceGraph) -> BTreeMap<usize, usize> {
    let mut hist = BTreeMap::new();
    for list in &g.adjacency {
        *hist.entry(list.len()).or_insert(0) += 1;
    }
    hist
}

/// Largest number of hyperplanes through a common pair of points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCoverage {
    pub max_common: u64,
    /// Lexicographically smallest pair attaining `max_common`; `None` when no
    /// hyperplane holds two points.
    pub witness: Option<(usize, usize)>,
}

fn pair_work(g: &IncidenceGraph) -> u128 {
    g.adjacency.iter().map(|l| (l.len() as u128).pow(2)).sum()
}

fn check_pair_budget(g: &IncidenceGraph, budget: u64) -> Result<()> {
    let required = pair_work(g);
    if required > u128::from(budget) {
        return Err(Error::InstanceTooLarge { required, budget });
    }
    Ok(())
}

/// Pair counts for every pair `(first, j)` with `j > first`, scanning the
/// incident pairs of each hyperplane through `first`. Returns the best
/// `(count, j)` with the smallest `j` among ties.
fn best_partner(
    g: &IncidenceGraph,
    point_lists: &[Vec<usize>],
    first: usize,
    counts: &mut [u32],
    touched: &mut Vec<usize>,
) -> Option<(u64, usize)> {
    for &h in &point_lists[first] {
        let list = &g.adjacency[h];
        let start = list.partition_point(|&p| p <= first);
        for &j in &list[start..] {
            if counts[j] == 0 {
                touched.push(j);
            }
            counts[j] += 1;
        }
    }
    let mut best: Option<(u64, usize)> = None;
    for &j in touched.iter() {
        let c = u64::from(counts[j]);
        if best.is_none_or(|(bc, bj)| c > bc || (c == bc && j < bj)) {
            best = Some((c, j));
        }
        counts[j] = 0;
    }
    touched.clear();
    best
}

fn better(a: (u64, usize, usize), b: (u64, usize, usize)) -> (u64, usize, usize) {
    // higher count wins, then the smaller pair
    if a.0 > b.0 || (a.0 == b.0 && (a.1, a.2) <= (b.1, b.2)) {
        a
    } else {
        b
    }
}

fn finish(best: Option<(u64, usize, usize)>) -> PairCoverage {
    match best {
        Some((max_common, i, j)) => PairCoverage {
            max_common,
            witness: Some((i, j)),
        },
        None => PairCoverage {
            max_common: 0,
            witness: None,
        },
    }
}

/// Maximum, over unordered point pairs, of the number of hyperplanes
/// incident to both. Costs `O(Σ |list|²)`; fails with
/// [`Error::InstanceTooLarge`] when that exceeds `budget`.
pub fn pair_coverage(g: &IncidenceGraph, budget: u64) -> Result<PairCoverage> {
    check_pair_budget(g, budget)?;
    let point_lists = g.point_lists();
    let mut counts = vec![0u32; g.point_count];
    let mut touched = Vec::new();
    let mut best = None;
    for first in 0..g.point_count {
        if let Some((c, j)) = best_partner(g, &point_lists, first, &mut counts, &mut touched) {
            let cand = (c, first, j);
            best = Some(best.map_or(cand, |b| better(b, cand)));
        }
    }
    Ok(finish(best))
}

/// [`pair_coverage`] with the points split across worker threads. Always
/// returns the same result as the sequential version.
pub fn pair_coverage_parallel(g: &IncidenceGraph, budget: u64) -> Result<PairCoverage> {
    check_pair_budget(g, budget)?;
    let point_lists = g.point_lists();
    let best = (0..g.point_count)
        .into_par_iter()
        .fold(
            || (vec![0u32; g.point_count], Vec::new(), None::<(u64, usize, usize)>),
            |(mut counts, mut touched, best), first| {
                let found = best_partner(g, &point_lists, first, &mut counts, &mut touched);
                let best = match (best, found) {
                    (b, None) => b,
                    (None, Some((c, j))) => Some((c, first, j)),
                    (Some(b), Some((c, j))) => Some(better(b, (c, first, j))),
                };
                (counts, touched, best)
            },
        )
        .map(|(_, _, best)| best)
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(a), Some(b)) => Some(better(a, b)),
            },
        );
    Ok(finish(best))
}

/// True iff no two points share more than `A^(d-2)` hyperplanes, i.e. the
/// incidence graph has no `K_{2,β}` with `β = A^(d-2) + 1`.
pub fn verify_no_k2beta(g: &IncidenceGraph, params: &InstanceParams, budget: u64) -> Result<bool> {
    Ok(pair_coverage_parallel(g, budget)?.max_common <= params.pair_bound())
}

/// A complete bipartite subgraph: every listed point lies on every listed
/// hyperplane.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Biclique {
    pub points: Vec<usize>,
    pub hyperplanes: Vec<usize>,
}

struct KabSearch<'a> {
    g: &'a IncidenceGraph,
    point_lists: Vec<Vec<usize>>,
    a: usize,
    b: usize,
    budget: u64,
    nodes: u64,
    counts: Vec<u32>,
}

impl KabSearch<'_> {
    fn visit(&mut self, chosen: &mut Vec<usize>, common: &[usize]) -> Result<Option<Biclique>> {
        self.nodes += 1;
        if self.nodes > self.budget {
            return Err(Error::BudgetExceeded(self.budget));
        }
        if chosen.len() == self.a {
            return Ok(Some(Biclique {
                points: chosen.clone(),
                hyperplanes: common[..self.b].to_vec(),
            }));
        }
        let floor = chosen.last().map_or(0, |&p| p + 1);
        let mut candidates = Vec::new();
        for &h in common {
            let list = &self.g.adjacency[h];
            let start = list.partition_point(|&p| p < floor);
            for &q in &list[start..] {
                self.counts[q] += 1;
                if self.counts[q] as usize == self.b {
                    candidates.push(q);
                }
            }
        }
        for &h in common {
            let list = &self.g.adjacency[h];
            let start = list.partition_point(|&p| p < floor);
            for &q in &list[start..] {
                self.counts[q] = 0;
            }
        }
        candidates.sort_unstable();
        for q in candidates {
            let next: Vec<usize> = intersect_sorted(common, &self.point_lists[q]);
            chosen.push(q);
            let found = self.visit(chosen, &next)?;
            chosen.pop();
            if found.is_some() {
                return Ok(found);
            }
        }
        Ok(None)
    }
}

fn intersect_sorted(x: &[usize], y: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < x.len() && j < y.len() {
        match x[i].cmp(&y[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(x[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Exhaustive search for `a` points lying together on `b` hyperplanes.
///
/// Points are added in increasing index order while tracking the
/// hyperplanes common to all of them; a branch dies as soon as fewer than
/// `b` remain. Each search-tree node counts against `budget`.
pub fn find_kab(g: &IncidenceGraph, a: usize, b: usize, budget: u64) -> Result<Option<Biclique>> {
    if a < 1 || b < 1 {
        return Err(Error::Invalid("biclique sides must be at least 1".into()));
    }
    if b > g.hyperplane_count() || a > g.point_count() {
        return Ok(None);
    }
    let mut search = KabSearch {
        g,
        point_lists: g.point_lists(),
        a,
        b,
        budget,
        nodes: 0,
        counts: vec![0; g.point_count],
    };
    let all: Vec<usize> = (0..g.hyperplane_count()).collect();
    search.visit(&mut Vec::with_capacity(a), &all)
}

/// Lower-bound figures for one instance, with `α = 2` and the framework's
/// `2^O(α)` factor taken as 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "BoundReportWire", try_from = "BoundReportWire")]
pub struct BoundReport {
    pub m: u64,
    pub t: u64,
    pub alpha: u64,
    /// `A^(d-2) + 1`.
    pub beta: u64,
    /// `m·t/β`, reduced.
    pub figure_of_merit: Ratio<u128>,
    /// `(d-1)/d`.
    pub exponent: Ratio<u64>,
}

#[derive(Serialize, Deserialize)]
struct Fraction<T> {
    num: T,
    den: T,
}

#[derive(Serialize, Deserialize)]
struct BoundReportWire {
    m: u64,
    t: u64,
    alpha: u64,
    beta: u64,
    figure_of_merit: Fraction<u128>,
    exponent: Fraction<u64>,
}

impl From<BoundReport> for BoundReportWire {
    fn from(r: BoundReport) -> Self {
        BoundReportWire {
            m: r.m,
            t: r.t,
            alpha: r.alpha,
            beta: r.beta,
            figure_of_merit: Fraction {
                num: *r.figure_of_merit.numer(),
                den: *r.figure_of_merit.denom(),
            },
            exponent: Fraction {
                num: *r.exponent.numer(),
                den: *r.exponent.denom(),
            },
        }
    }
}

impl TryFrom<BoundReportWire> for BoundReport {
    type Error = Error;

    fn try_from(w: BoundReportWire) -> Result<Self> {
        if w.figure_of_merit.den == 0 || w.exponent.den == 0 {
            return Err(Error::Invalid("zero denominator".into()));
        }
        Ok(BoundReport {
            m: w.m,
            t: w.t,
            alpha: w.alpha,
            beta: w.beta,
            figure_of_merit: Ratio::new(w.figure_of_merit.num, w.figure_of_merit.den),
            exponent: Ratio::new(w.exponent.num, w.exponent.den),
        })
    }
}

pub fn bound_report(params: &InstanceParams) -> BoundReport {
    let beta = params.pair_bound() + 1;
    BoundReport {
        m: params.m,
        t: params.t,
        alpha: 2,
        beta,
        figure_of_merit: Ratio::new(u128::from(params.m) * u128::from(params.t), u128::from(beta)),
        exponent: Ratio::new(u64::from(params.d) - 1, u64::from(params.d)),
    }
}

/// `(n² / space)^((d-1)/d)`: the query time forced on a structure of the
/// given size.
pub fn implied_query_bound(d: u32, n: u64, space: f64) -> f64 {
    let n = n as f64;
    let exponent = f64::from(d - 1) / f64::from(d);
    (n * n / space).powf(exponent)
}
