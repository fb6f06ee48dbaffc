//! The grid construction: an `s^(d-1) × n/t` integer lattice together with
//! the family of graph hyperplanes `x_d = b + Σ a_i x_i`, `a_i ∈ 1..=A`,
//! `b ∈ 1..=B`. Every hyperplane of the family meets the lattice in exactly
//! `t = s^(d-1)` points, and no `A^(d-2) + 1` of them share two points.
//!
//! All arithmetic is exact and checked. Coordinates are 1-based: the first
//! `d - 1` axes range over `1..=s`, the last over `1..=n/t`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest accepted point count. Keeps every intermediate product in `i64`.
pub const MAX_POINTS: u64 = 1 << 32;

/// Validated construction parameters.
///
/// Obtain these from [`normalize_params`]; values built by hand should be
/// checked with [`InstanceParams::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct InstanceParams {
    pub d: u32,
    pub s: u64,
    pub t: u64,
    pub n: u64,
    #[serde(rename = "A")]
    pub a: u64,
    #[serde(rename = "B")]
    pub b: u64,
    pub m: u64,
}

#[derive(Deserialize)]
struct RawParams {
    d: u32,
    s: u64,
    t: u64,
    n: u64,
    #[serde(rename = "A")]
    a: u64,
    #[serde(rename = "B")]
    b: u64,
    m: u64,
}

impl TryFrom<RawParams> for InstanceParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        let params = InstanceParams {
            d: raw.d,
            s: raw.s,
            t: raw.t,
            n: raw.n,
            a: raw.a,
            b: raw.b,
            m: raw.m,
        };
        params.validate()?;
        Ok(params)
    }
}

impl InstanceParams {
    /// Length of the last grid axis, `n / t`.
    pub fn height(&self) -> u64 {
        self.n / self.t
    }

    /// Largest `x_d` any family hyperplane reaches over the grid:
    /// `B + (d-1)·A·s`.
    pub fn containment_lhs(&self) -> Result<u64> {
        let reach = u64::from(self.d - 1)
            .checked_mul(self.a)
            .and_then(|v| v.checked_mul(self.s))
            .ok_or(Error::ArithmeticOverflow("containment bound"))?;
        self.b
            .checked_add(reach)
            .ok_or(Error::ArithmeticOverflow("containment bound"))
    }

    /// Most hyperplanes of the family that can pass through two distinct
    /// grid points, `A^(d-2)`.
    pub fn pair_bound(&self) -> u64 {
        // a ≤ n ≤ 2^32 and validate() guarantees a^(d-1) fits, so this fits too.
        self.a.pow(self.d - 2)
    }

    /// Checks every invariant of the construction.
    ///
    /// Containment failures, `A < 1` and `B < 1` are reported as
    /// [`Error::RangeTooTight`]; structural inconsistencies (wrong `t`, `m`,
    /// or `A`/`B` not matching their defining formulas) as [`Error::Invalid`].
    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::Invalid(format!("dimension must be at least 2, got {}", self.d)));
        }
        if self.s < 1 {
            return Err(Error::Invalid("grid side s must be at least 1".into()));
        }
        let t = checked_pow(self.s, self.d - 1).ok_or(Error::ArithmeticOverflow("s^(d-1)"))?;
        if t != self.t {
            return Err(Error::Invalid(format!("t = {} is not s^(d-1) = {}", self.t, t)));
        }
        if self.n == 0 || !self.n.is_multiple_of(self.t) {
            return Err(Error::Invalid(format!(
                "n = {} is not a positive multiple of t = {}",
                self.n, self.t
            )));
        }
        if self.n > MAX_POINTS {
            return Err(Error::ArithmeticOverflow("point count above 2^32"));
        }
        if self.a < 1 {
            return Err(Error::RangeTooTight(format!(
                "A = floor(n / (d·t^(d/(d-1)))) = 0 for n = {}, t = {}, d = {}",
                self.n, self.t, self.d
            )));
        }
        if self.b < 1 {
            return Err(Error::RangeTooTight(format!(
                "B = floor(n / (d·t)) = 0 for n = {}, t = {}, d = {}",
                self.n, self.t, self.d
            )));
        }
        let lhs = self.containment_lhs()?;
        if lhs > self.height() {
            return Err(Error::RangeTooTight(format!(
                "containment inequality B + (d-1)·A·s = {} exceeds n/t = {}",
                lhs,
                self.height()
            )));
        }
        let m = checked_pow(self.a, self.d - 1)
            .and_then(|v| v.checked_mul(self.b))
            .ok_or(Error::ArithmeticOverflow("m = A^(d-1)·B"))?;
        if m != self.m {
            return Err(Error::Invalid(format!("m = {} is not A^(d-1)·B = {}", self.m, m)));
        }
        let (a, b) = derived_ranges(self.d, self.s, self.t, self.n)?;
        if (a, b) != (self.a, self.b) {
            return Err(Error::Invalid(format!(
                "A = {}, B = {} do not match the construction formulas (expected {}, {})",
                self.a, self.b, a, b
            )));
        }
        Ok(())
    }
}

fn checked_pow(base: u64, exp: u32) -> Option<u64> {
    base.checked_pow(exp)
}

/// `floor(value^(1/k))`, exact.
pub(crate) fn integer_root(value: u64, k: u32) -> u64 {
    if k == 1 || value <= 1 {
        return value;
    }
    let mut r = (value as f64).powf(1.0 / f64::from(k)).round() as u64;
    while r > 0 && checked_pow(r, k).is_none_or(|p| p > value) {
        r -= 1;
    }
    while checked_pow(r + 1, k).is_some_and(|p| p <= value) {
        r += 1;
    }
    r
}

/// `A = floor(n / (d·s^d))` and `B = floor(n / (d·t))`.
fn derived_ranges(d: u32, s: u64, t: u64, n: u64) -> Result<(u64, u64)> {
    let dd = u64::from(d);
    let a = match checked_pow(s, d).and_then(|v| v.checked_mul(dd)) {
        Some(den) => n / den,
        // denominator beyond u64 while n fits: A is zero
        None => 0,
    };
    let b = match t.checked_mul(dd) {
        Some(den) => n / den,
        None => 0,
    };
    Ok((a, b))
}

/// Rounds a requested `(n, t)` down onto the construction's lattice and
/// derives `A`, `B` and `m`.
///
/// `t` becomes the largest perfect `(d-1)`-th power not above the request,
/// `n` the largest multiple of that `t` not above the request.
pub fn normalize_params(d: u32, n_requested: u64, t_requested: u64) -> Result<InstanceParams> {
    if d < 2 {
        return Err(Error::Invalid(format!("dimension must be at least 2, got {d}")));
    }
    if n_requested < 1 || t_requested < 1 {
        return Err(Error::Invalid("n and t must be at least 1".into()));
    }
    let s = integer_root(t_requested, d - 1);
    let t = checked_pow(s, d - 1).ok_or(Error::ArithmeticOverflow("s^(d-1)"))?;
    let n = (n_requested / t) * t;
    if n > MAX_POINTS {
        return Err(Error::ArithmeticOverflow("point count above 2^32"));
    }
    if n == 0 {
        return Err(Error::RangeTooTight(format!(
            "t = {t} exceeds the requested point count {n_requested}"
        )));
    }
    let (a, b) = derived_ranges(d, s, t, n)?;
    let mut params = InstanceParams { d, s, t, n, a, b, m: 0 };
    if a >= 1 && b >= 1 {
        params.m = checked_pow(a, d - 1)
            .and_then(|v| v.checked_mul(b))
            .ok_or(Error::ArithmeticOverflow("m = A^(d-1)·B"))?;
    }
    params.validate()?;
    Ok(params)
}

/// A lattice point of the grid.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GridPoint {
    pub coords: Vec<i64>,
}

impl GridPoint {
    pub fn new(coords: Vec<i64>) -> Self {
        GridPoint { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// The first `d - 1` coordinates.
    pub fn base(&self) -> &[i64] {
        &self.coords[..self.coords.len().saturating_sub(1)]
    }

    pub fn last(&self) -> i64 {
        *self.coords.last().expect("grid point has at least one coordinate")
    }
}

impl From<Vec<i64>> for GridPoint {
    fn from(coords: Vec<i64>) -> Self {
        GridPoint { coords }
    }
}

/// The graph hyperplane `x_d = b + Σ a_i x_i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Hyperplane {
    pub a: Vec<i64>,
    pub b: i64,
}

impl Hyperplane {
    pub fn new(a: Vec<i64>, b: i64) -> Self {
        Hyperplane { a, b }
    }

    /// Ambient dimension `d`.
    pub fn dim(&self) -> usize {
        self.a.len() + 1
    }
}

/// Iterates `{1..=s}^k` in row-major order (last coordinate fastest).
struct Odometer {
    limits: Vec<i64>,
    current: Vec<i64>,
    done: bool,
}

impl Odometer {
    fn new(limits: Vec<i64>) -> Self {
        let done = limits.iter().any(|&l| l < 1);
        let current = vec![1; limits.len()];
        Odometer { limits, current, done }
    }
}

impl Iterator for Odometer {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        if self.done {
            return None;
        }
        let out = self.current.clone();
        let mut axis = self.current.len();
        loop {
            if axis == 0 {
                self.done = true;
                break;
            }
            axis -= 1;
            if self.current[axis] < self.limits[axis] {
                self.current[axis] += 1;
                break;
            }
            self.current[axis] = 1;
        }
        Some(out)
    }
}

/// The full lattice `{1..s}^(d-1) × {1..n/t}`, last axis fastest.
pub fn generate_points(params: &InstanceParams) -> Vec<GridPoint> {
    let mut limits = vec![params.s as i64; params.d as usize - 1];
    limits.push(params.height() as i64);
    let mut points = Vec::with_capacity(params.n as usize);
    points.extend(Odometer::new(limits).map(GridPoint::new));
    points
}

/// Every `(a_1, …, a_{d-1}, b)` with `a_i ∈ 1..=A`, `b ∈ 1..=B`, in
/// lexicographic order.
pub fn generate_hyperplanes(params: &InstanceParams) -> Vec<Hyperplane> {
    let mut limits = vec![params.a as i64; params.d as usize - 1];
    limits.push(params.b as i64);
    let mut family = Vec::with_capacity(params.m as usize);
    family.extend(Odometer::new(limits).map(|mut coeffs| {
        let b = coeffs.pop().expect("d >= 2");
        Hyperplane { a: coeffs, b }
    }));
    family
}

/// `b + Σ a_i · base_i`.
pub fn eval_hyperplane(h: &Hyperplane, base: &[i64]) -> Result<i64> {
    if base.len() != h.a.len() {
        return Err(Error::DimensionMismatch {
            expected: h.a.len(),
            found: base.len(),
        });
    }
    h.a.iter().zip(base).try_fold(h.b, |acc, (&a, &x)| {
        a.checked_mul(x)
            .and_then(|v| acc.checked_add(v))
            .ok_or(Error::ArithmeticOverflow("hyperplane evaluation"))
    })
}

/// Whether `p` lies on `h`.
pub fn incident(h: &Hyperplane, p: &GridPoint) -> Result<bool> {
    if p.dim() != h.dim() {
        return Err(Error::DimensionMismatch {
            expected: h.dim(),
            found: p.dim(),
        });
    }
    Ok(eval_hyperplane(h, p.base())? == p.last())
}

/// The grid points on `h`, generated parametrically from the `s^(d-1)`
/// base tuples.
pub fn incident_points(h: &Hyperplane, params: &InstanceParams) -> Result<Vec<GridPoint>> {
    let d = params.d as usize;
    if h.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: h.dim(),
        });
    }
    let limit = params.height() as i64;
    let mut out = Vec::with_capacity(params.t as usize);
    for mut coords in Odometer::new(vec![params.s as i64; d - 1]) {
        let last = eval_hyperplane(h, &coords)?;
        coords.push(last);
        if !(1..=limit).contains(&last) {
            return Err(Error::PointEscapesGrid { coords, limit });
        }
        out.push(GridPoint::new(coords));
    }
    Ok(out)
}

/// On-disk instance: parameters plus optional explicit points, hyperplanes
/// and incidence adjacency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub params: InstanceParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<GridPoint>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hyperplanes: Option<Vec<Hyperplane>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<Vec<Vec<usize>>>,
}

impl Instance {
    /// Fully materialized instance (points and hyperplanes, no adjacency).
    pub fn generate(params: InstanceParams) -> Self {
        Instance {
            points: Some(generate_points(&params)),
            hyperplanes: Some(generate_hyperplanes(&params)),
            params,
            adjacency: None,
        }
    }

    pub fn params_only(params: InstanceParams) -> Self {
        Instance {
            params,
            points: None,
            hyperplanes: None,
            adjacency: None,
        }
    }

    /// Stored points, or the regenerated lattice when absent.
    pub fn points(&self) -> Vec<GridPoint> {
        self.points.clone().unwrap_or_else(|| generate_points(&self.params))
    }

    /// Stored hyperplanes, or the regenerated family when absent.
    pub fn hyperplanes(&self) -> Vec<Hyperplane> {
        self.hyperplanes
            .clone()
            .unwrap_or_else(|| generate_hyperplanes(&self.params))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
