//! Simplex range reporting over integer points with a kd-tree.
//!
//! Queries are intersections of closed integer halfspaces. The traversal
//! classifies each node's bounding box against the constraints still in
//! play: boxes outside any constraint are pruned, boxes inside all of them
//! are reported wholesale, and only leaves reached while some constraint
//! still crosses them have their points tested one by one. [`QueryStats`]
//! records that work.

use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{GridPoint, Hyperplane};

pub const DEFAULT_LEAF_CAPACITY: usize = 4;

/// Most constraints a single query may carry.
pub const MAX_CONSTRAINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// `normal · x ≤ offset`
    Le,
    /// `normal · x ≥ offset`
    Ge,
}

/// Closed halfspace `normal · x (sense) offset`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawHalfspace")]
pub struct Halfspace {
    normal: Vec<i64>,
    offset: i64,
    sense: Sense,
}

#[derive(Deserialize)]
struct RawHalfspace {
    normal: Vec<i64>,
    offset: i64,
    sense: Sense,
}

impl TryFrom<RawHalfspace> for Halfspace {
    type Error = Error;

    fn try_from(raw: RawHalfspace) -> Result<Self> {
        Halfspace::new(raw.normal, raw.offset, raw.sense)
    }
}

fn dot(normal: &[i64], x: &[i64]) -> Result<i64> {
    normal.iter().zip(x).try_fold(0i64, |acc, (&a, &b)| {
        a.checked_mul(b)
            .and_then(|v| acc.checked_add(v))
            .ok_or(Error::ArithmeticOverflow("halfspace evaluation"))
    })
}

impl Halfspace {
    pub fn new(normal: Vec<i64>, offset: i64, sense: Sense) -> Result<Self> {
        if normal.iter().all(|&c| c == 0) {
            return Err(Error::Invalid("halfspace normal is the zero vector".into()));
        }
        Ok(Halfspace { normal, offset, sense })
    }

    pub fn le(normal: Vec<i64>, offset: i64) -> Result<Self> {
        Self::new(normal, offset, Sense::Le)
    }

    pub fn ge(normal: Vec<i64>, offset: i64) -> Result<Self> {
        Self::new(normal, offset, Sense::Ge)
    }

    pub fn normal(&self) -> &[i64] {
        &self.normal
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    fn satisfied_by(&self, value: i64) -> bool {
        match self.sense {
            Sense::Le => value <= self.offset,
            Sense::Ge => value >= self.offset,
        }
    }

    /// Exact membership test. `x` must have the halfspace's dimension.
    pub fn contains(&self, x: &[i64]) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: x.len(),
            });
        }
        Ok(self.satisfied_by(dot(&self.normal, x)?))
    }
}

/// Intersection of 1 to `d + 1` halfspaces in a common dimension `d`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawQuery")]
pub struct SimplexQuery {
    constraints: Vec<Halfspace>,
}

#[derive(Deserialize)]
struct RawQuery {
    constraints: Vec<Halfspace>,
}

impl TryFrom<RawQuery> for SimplexQuery {
    type Error = Error;

    fn try_from(raw: RawQuery) -> Result<Self> {
        SimplexQuery::new(raw.constraints)
    }
}

impl SimplexQuery {
    pub fn new(constraints: Vec<Halfspace>) -> Result<Self> {
        let Some(first) = constraints.first() else {
            return Err(Error::Invalid("query needs at least one halfspace".into()));
        };
        let d = first.dim();
        if let Some(h) = constraints.iter().find(|h| h.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: h.dim(),
            });
        }
        if constraints.len() > d + 1 || constraints.len() > MAX_CONSTRAINTS {
            return Err(Error::Invalid(format!(
                "{} halfspaces exceed the d + 1 = {} allowed for a simplex",
                constraints.len(),
                d + 1
            )));
        }
        Ok(SimplexQuery { constraints })
    }

    pub fn constraints(&self) -> &[Halfspace] {
        &self.constraints
    }

    pub fn dim(&self) -> usize {
        self.constraints[0].dim()
    }

    pub fn contains(&self, x: &[i64]) -> Result<bool> {
        for h in &self.constraints {
            if !h.contains(x)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Two closed halfspaces sharing the boundary `x_d - Σ a_i x_i = b`; on
/// integer points this selects exactly the points of `h`.
pub fn slab_query_for(h: &Hyperplane) -> SimplexQuery {
    let mut normal: Vec<i64> = h.a.iter().map(|&a| -a).collect();
    normal.push(1);
    let constraints = vec![
        Halfspace {
            normal: normal.clone(),
            offset: h.b,
            sense: Sense::Le,
        },
        Halfspace {
            normal,
            offset: h.b,
            sense: Sense::Ge,
        },
    ];
    SimplexQuery { constraints }
}

/// Axis-aligned integer box, inclusive on both ends.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub min: Vec<i64>,
    pub max: Vec<i64>,
}

impl BoundingBox {
    pub fn new(min: Vec<i64>, max: Vec<i64>) -> Result<Self> {
        if min.len() != max.len() {
            return Err(Error::DimensionMismatch {
                expected: min.len(),
                found: max.len(),
            });
        }
        if min.iter().zip(&max).any(|(lo, hi)| lo > hi) {
            return Err(Error::Invalid("bounding box has min > max".into()));
        }
        Ok(BoundingBox { min, max })
    }

    /// Smallest box around the given points.
    pub fn around<'a>(points: impl IntoIterator<Item = &'a [i64]>) -> Option<Self> {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let mut bbox = BoundingBox {
            min: first.to_vec(),
            max: first.to_vec(),
        };
        for p in iter {
            for (axis, &c) in p.iter().enumerate() {
                bbox.min[axis] = bbox.min[axis].min(c);
                bbox.max[axis] = bbox.max[axis].max(c);
            }
        }
        Some(bbox)
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Minimum and maximum of `normal · x` over the box.
    pub fn extent(&self, normal: &[i64]) -> Result<(i64, i64)> {
        if normal.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: normal.len(),
            });
        }
        let mut lo = 0i64;
        let mut hi = 0i64;
        for (axis, &c) in normal.iter().enumerate() {
            let (a, b) = if c >= 0 {
                (self.min[axis], self.max[axis])
            } else {
                (self.max[axis], self.min[axis])
            };
            let overflow = || Error::ArithmeticOverflow("box extent");
            lo = c.checked_mul(a).and_then(|v| lo.checked_add(v)).ok_or_else(overflow)?;
            hi = c.checked_mul(b).and_then(|v| hi.checked_add(v)).ok_or_else(overflow)?;
        }
        Ok((lo, hi))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoxClass {
    Inside,
    Outside,
    Crossing,
}

/// Where a box sits relative to a closed halfspace.
pub fn classify_box(bbox: &BoundingBox, h: &Halfspace) -> Result<BoxClass> {
    let (lo, hi) = bbox.extent(&h.normal)?;
    let (worst, best) = match h.sense {
        Sense::Le => (hi, lo),
        Sense::Ge => (lo, hi),
    };
    Ok(if h.satisfied_by(worst) {
        BoxClass::Inside
    } else if !h.satisfied_by(best) {
        BoxClass::Outside
    } else {
        BoxClass::Crossing
    })
}

/// Work done by one query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryStats {
    pub nodes_visited: u64,
    pub leaves_scanned: u64,
    pub points_reported: u64,
    pub points_tested: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NodeKind {
    Leaf,
    Internal {
        axis: usize,
        /// Last `(coordinate, point index)` key of the left subtree.
        split_value: i64,
        split_index: usize,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Node {
    /// Range of `KdTree::order` holding this subtree's points.
    start: usize,
    end: usize,
    bbox: BoundingBox,
    kind: NodeKind,
}

/// Static kd-tree with exact median splits and cycling split axes.
///
/// Every subtree owns a contiguous run of the stored point order, so a
/// subtree found inside the query is reported by copying that run.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    leaf_capacity: usize,
    /// Point coordinates in input order, flattened.
    coords: Vec<i64>,
    /// Input indices in stored (leaf) order.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// Builds the tree. Split ties on equal coordinates are broken by input
    /// index, so the result depends only on the input sequence.
    pub fn build(points: &[GridPoint], leaf_capacity: usize) -> Result<Self> {
        let Some(first) = points.first() else {
            return Err(Error::EmptyInput);
        };
        if leaf_capacity < 1 {
            return Err(Error::Invalid("leaf capacity must be at least 1".into()));
        }
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::Invalid("points must have at least one coordinate".into()));
        }
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in points {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.dim(),
                });
            }
            coords.extend_from_slice(&p.coords);
        }
        let mut tree = KdTree {
            dim,
            leaf_capacity,
            coords,
            order: (0..points.len()).collect(),
            nodes: Vec::with_capacity(2 * points.len() / leaf_capacity + 1),
        };
        tree.build_node(0, points.len(), 0);
        Ok(tree)
    }

    fn point(&self, index: usize) -> &[i64] {
        &self.coords[index * self.dim..(index + 1) * self.dim]
    }

    fn build_node(&mut self, start: usize, end: usize, depth: usize) -> usize {
        let bbox = BoundingBox::around(self.order[start..end].iter().map(|&i| self.point(i)))
            .expect("node ranges are non-empty");
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            bbox,
            kind: NodeKind::Leaf,
        });
        let count = end - start;
        if count <= self.leaf_capacity {
            return id;
        }
        let axis = depth % self.dim;
        let left_len = count.div_ceil(2);
        let (coords, dim) = (&self.coords, self.dim);
        let key = |i: usize| (coords[i * dim + axis], i);
        self.order[start..end].select_nth_unstable_by_key(left_len - 1, |&i| key(i));
        let split = self.order[start + left_len - 1];
        let (split_value, split_index) = key(split);
        let left = self.build_node(start, start + left_len, depth + 1);
        let right = self.build_node(start + left_len, end, depth + 1);
        self.nodes[id].kind = NodeKind::Internal {
            axis,
            split_value,
            split_index,
            left,
            right,
        };
        id
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_capacity
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Leaf).count()
    }

    /// Longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        fn walk(tree: &KdTree, id: usize) -> usize {
            match tree.nodes[id].kind {
                NodeKind::Leaf => 0,
                NodeKind::Internal { left, right, .. } => 1 + walk(tree, left).max(walk(tree, right)),
            }
        }
        walk(self, 0)
    }

    /// Bucket sizes of the leaves, left to right.
    pub fn leaf_sizes(&self) -> Vec<usize> {
        let mut sizes = Vec::new();
        let mut stack = vec![0];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            match node.kind {
                NodeKind::Leaf => sizes.push(node.end - node.start),
                NodeKind::Internal { left, right, .. } => {
                    stack.push(right);
                    stack.push(left);
                }
            }
        }
        sizes
    }

    /// Checks the structural invariants: leaf partition, box containment and
    /// split ordering. Used by tests.
    pub fn check_invariants(&self) -> Result<()> {
        let mut seen = vec![false; self.len()];
        for &i in &self.order {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Invalid(format!("point {i} stored twice")));
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Invalid("point missing from the tree".into()));
        }
        for node in &self.nodes {
            for &i in &self.order[node.start..node.end] {
                let p = self.point(i);
                let inside = (0..self.dim).all(|a| node.bbox.min[a] <= p[a] && p[a] <= node.bbox.max[a]);
                if !inside {
                    return Err(Error::Invalid(format!("point {i} outside its node box")));
                }
            }
            if let NodeKind::Internal {
                axis,
                split_value,
                split_index,
                left,
                right,
            } = node.kind
            {
                let split = (split_value, split_index);
                let l = &self.nodes[left];
                let r = &self.nodes[right];
                if l.start != node.start || l.end != r.start || r.end != node.end {
                    return Err(Error::Invalid("child ranges do not tile the parent".into()));
                }
                let key = |i: usize| (self.point(i)[axis], i);
                if self.order[l.start..l.end].iter().any(|&i| key(i) > split)
                    || self.order[r.start..r.end].iter().any(|&i| key(i) <= split)
                {
                    return Err(Error::Invalid("split ordering violated".into()));
                }
            } else if node.end - node.start > self.leaf_capacity {
                return Err(Error::Invalid("leaf over capacity".into()));
            }
        }
        Ok(())
    }

    /// Reports the input indices of all stored points inside `q`, each once,
    /// in stored order.
    pub fn query(&self, q: &SimplexQuery) -> Result<(Vec<usize>, QueryStats)> {
        if q.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: q.dim(),
            });
        }
        let constraints = q.constraints();
        let mut stats = QueryStats::default();
        let mut out = Vec::new();
        let all_active: u64 = if constraints.len() == 64 {
            u64::MAX
        } else {
            (1u64 << constraints.len()) - 1
        };
        let mut stack = vec![(0usize, all_active)];
        while let Some((id, mut active)) = stack.pop() {
            let node = &self.nodes[id];
            stats.nodes_visited += 1;
            let mut pruned = false;
            for (c, h) in constraints.iter().enumerate() {
                if active & (1 << c) == 0 {
                    continue;
                }
                match classify_box(&node.bbox, h)? {
                    BoxClass::Outside => {
                        pruned = true;
                        break;
                    }
                    BoxClass::Inside => active &= !(1 << c),
                    BoxClass::Crossing => {}
                }
            }
            if pruned {
                continue;
            }
            if active == 0 {
                out.extend_from_slice(&self.order[node.start..node.end]);
                continue;
            }
            match node.kind {
                NodeKind::Internal { left, right, .. } => {
                    stack.push((right, active));
                    stack.push((left, active));
                }
                NodeKind::Leaf => {
                    stats.leaves_scanned += 1;
                    'points: for &i in &self.order[node.start..node.end] {
                        stats.points_tested += 1;
                        let p = self.point(i);
                        for (c, h) in constraints.iter().enumerate() {
                            if active & (1 << c) != 0 && !h.satisfied_by(dot(&h.normal, p)?) {
                                continue 'points;
                            }
                        }
                        out.push(i);
                    }
                }
            }
        }
        stats.points_reported = out.len() as u64;
        Ok((out, stats))
    }
}

/// Linear scan reporting the indices of all points inside `q`.
pub fn brute_force_query(points: &[GridPoint], q: &SimplexQuery) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if q.contains(&p.coords)? {
            out.push(i);
        }
    }
    Ok(out)
}

/// A random query of 1 to `d + 1` halfspaces: normals drawn from
/// `[-coeff_bound, coeff_bound]^d` (nonzero), offsets uniform over the
/// range `normal · x` takes on `domain`.
pub fn random_simplex_query<R: Rng + ?Sized>(
    rng: &mut R,
    domain: &BoundingBox,
    coeff_bound: i64,
) -> Result<SimplexQuery> {
    let d = domain.dim();
    let bound = coeff_bound.max(1);
    let count = rng.gen_range(1..=d + 1);
    let mut constraints = Vec::with_capacity(count);
    while constraints.len() < count {
        let normal: Vec<i64> = (0..d).map(|_| rng.gen_range(-bound..=bound)).collect();
        if normal.iter().all(|&c| c == 0) {
            continue;
        }
        let (lo, hi) = domain.extent(&normal)?;
        let offset = rng.gen_range(lo..=hi);
        let sense = if rng.gen_bool(0.5) { Sense::Le } else { Sense::Ge };
        constraints.push(Halfspace { normal, offset, sense });
    }
    SimplexQuery::new(constraints)
}

/// Reads a JSON list of queries.
pub fn load_query_batch(path: impl AsRef<Path>) -> Result<Vec<SimplexQuery>> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

pub fn save_query_batch(path: impl AsRef<Path>, queries: &[SimplexQuery]) -> Result<()> {
    fs::write(path, serde_json::to_string(queries)?)?;
    Ok(())
}
