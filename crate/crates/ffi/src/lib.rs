//! C ABI over `srlb`.
//!
//! Instances and kd-trees are opaque heap handles created by `*_new` /
//! `*_build` functions and released with the matching `*_free`. Every
//! fallible call returns an [`SrlbStatus`]; on failure a description is
//! available from [`srlb_last_error_message`] on the same thread.
//!
//! The header `include/srlb.h` is generated from this file by `build.rs`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use srlb::harness::{fit_power_law, verify_instance};
use srlb::range::{slab_query_for, Halfspace, KdTree, Sense, SimplexQuery};
use srlb::{bound_report, normalize_params, Error, GridPoint, Hyperplane, Instance, InstanceParams};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SrlbStatus {
    Ok = 0,
    RangeTooTight = 1,
    ArithmeticOverflow = 2,
    DimensionMismatch = 3,
    PointEscapesGrid = 4,
    InstanceTooLarge = 5,
    BudgetExceeded = 6,
    EmptyInput = 7,
    InsufficientData = 8,
    InvalidArgument = 9,
    NullPointer = 10,
    /// The caller's buffer is too small; the required length was written.
    BufferTooSmall = 11,
    Io = 12,
    Parse = 13,
    Panic = 14,
}

/// Construction parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SrlbParams {
    pub d: u32,
    pub s: u64,
    pub t: u64,
    pub n: u64,
    pub a: u64,
    pub b: u64,
    pub m: u64,
}

impl From<InstanceParams> for SrlbParams {
    fn from(p: InstanceParams) -> Self {
        SrlbParams {
            d: p.d,
            s: p.s,
            t: p.t,
            n: p.n,
            a: p.a,
            b: p.b,
            m: p.m,
        }
    }
}

/// Lower-bound figures; `figure_of_merit_num / figure_of_merit_den = m·t/β`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SrlbBoundReport {
    pub m: u64,
    pub t: u64,
    pub alpha: u64,
    pub beta: u64,
    pub figure_of_merit_num: u64,
    pub figure_of_merit_den: u64,
    pub exponent_num: u64,
    pub exponent_den: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SrlbVerifyReport {
    pub richness_exact: bool,
    pub max_pair_coverage: u64,
    pub beta_bound: u64,
    pub k2beta_free: bool,
    pub containment: bool,
    pub family_exact: bool,
    pub grid_exact: bool,
    pub passed: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SrlbQueryStats {
    pub nodes_visited: u64,
    pub leaves_scanned: u64,
    pub points_reported: u64,
    pub points_tested: u64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SrlbFitResult {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
}

/// Opaque instance handle.
pub struct SrlbInstance {
    instance: Instance,
    points: Vec<GridPoint>,
    hyperplanes: Vec<Hyperplane>,
}

impl SrlbInstance {
    fn new(instance: Instance) -> Self {
        SrlbInstance {
            points: instance.points(),
            hyperplanes: instance.hyperplanes(),
            instance,
        }
    }
}

/// Opaque kd-tree handle.
pub struct SrlbKdTree {
    tree: KdTree,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let message = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(message));
}

struct Failure(SrlbStatus, String);

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let status = match &err {
            Error::RangeTooTight(_) => SrlbStatus::RangeTooTight,
            Error::ArithmeticOverflow(_) => SrlbStatus::ArithmeticOverflow,
            Error::DimensionMismatch { .. } => SrlbStatus::DimensionMismatch,
            Error::PointEscapesGrid { .. } => SrlbStatus::PointEscapesGrid,
            Error::InstanceTooLarge { .. } => SrlbStatus::InstanceTooLarge,
            Error::BudgetExceeded(_) => SrlbStatus::BudgetExceeded,
            Error::EmptyInput => SrlbStatus::EmptyInput,
            Error::InsufficientData(_) => SrlbStatus::InsufficientData,
            Error::Invalid(_) => SrlbStatus::InvalidArgument,
            Error::Io(_) => SrlbStatus::Io,
            Error::Json(_) | Error::Csv(_) => SrlbStatus::Parse,
        };
        Failure(status, err.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(SrlbStatus::NullPointer, format!("{what} is null"))
}

fn invalid(message: impl Into<String>) -> Failure {
    Failure(SrlbStatus::InvalidArgument, message.into())
}

fn guard(body: impl FnOnce() -> Result<(), Failure>) -> SrlbStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => SrlbStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(_) => {
            set_last_error("panic inside srlb".into());
            SrlbStatus::Panic
        }
    }
}

unsafe fn out_ref<'a, T>(ptr: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    ptr.as_mut().ok_or_else(|| null(what))
}

unsafe fn in_ref<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref().ok_or_else(|| null(what))
}

/// Copies `items` into a caller buffer, or reports the length needed.
unsafe fn fill<T: Copy>(items: &[T], buf: *mut T, cap: usize, written: *mut usize) -> Result<(), Failure> {
    let written = out_ref(written, "length output")?;
    *written = items.len();
    if items.len() > cap {
        return Err(Failure(
            SrlbStatus::BufferTooSmall,
            format!("buffer holds {cap} elements, {} needed", items.len()),
        ));
    }
    if !items.is_empty() {
        if buf.is_null() {
            return Err(null("output buffer"));
        }
        ptr::copy_nonoverlapping(items.as_ptr(), buf, items.len());
    }
    Ok(())
}

/// Message describing the last failed call on this thread, or NULL. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn srlb_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Normalizes `(d, n, t)` onto the construction's lattice.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srlb_normalize_params(d: u32, n: u64, t: u64, out: *mut SrlbParams) -> SrlbStatus {
    guard(|| {
        let out = out_ref(out, "params output")?;
        *out = normalize_params(d, n, t)?.into();
        Ok(())
    })
}

/// Generates the instance for `(d, n, t)`.
///
/// # Safety
/// `out` must be valid for writes. The handle written there must be freed
/// with [`srlb_instance_free`].
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_new(d: u32, n: u64, t: u64, out: *mut *mut SrlbInstance) -> SrlbStatus {
    guard(|| {
        let out = out_ref(out, "instance output")?;
        let params = normalize_params(d, n, t)?;
        *out = Box::into_raw(Box::new(SrlbInstance::new(Instance::generate(params))));
        Ok(())
    })
}

/// Parses an instance document (`{params, points?, hyperplanes?, adjacency?}`).
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_from_json(json: *const c_char, out: *mut *mut SrlbInstance) -> SrlbStatus {
    guard(|| {
        let out = out_ref(out, "instance output")?;
        if json.is_null() {
            return Err(null("json"));
        }
        let text = CStr::from_ptr(json)
            .to_str()
            .map_err(|_| Failure(SrlbStatus::Parse, "instance JSON is not UTF-8".into()))?;
        *out = Box::into_raw(Box::new(SrlbInstance::new(Instance::from_json(text)?)));
        Ok(())
    })
}

/// Serializes an instance. The string must be released with
/// [`srlb_string_free`].
///
/// # Safety
/// `instance` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_to_json(instance: *const SrlbInstance, out: *mut *mut c_char) -> SrlbStatus {
    guard(|| {
        let instance = in_ref(instance, "instance")?;
        let out = out_ref(out, "string output")?;
        let text = instance.instance.to_json()?;
        *out = CString::new(text)
            .map_err(|_| invalid("JSON contains a NUL byte"))?
            .into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn srlb_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `instance` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_free(instance: *mut SrlbInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// # Safety
/// `instance` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_params(instance: *const SrlbInstance, out: *mut SrlbParams) -> SrlbStatus {
    guard(|| {
        let instance = in_ref(instance, "instance")?;
        *out_ref(out, "params output")? = instance.instance.params.into();
        Ok(())
    })
}

/// Number of points; 0 for a NULL handle.
///
/// # Safety
/// `instance` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_point_count(instance: *const SrlbInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.points.len())
}

/// Number of hyperplanes; 0 for a NULL handle.
///
/// # Safety
/// `instance` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_hyperplane_count(instance: *const SrlbInstance) -> usize {
    instance.as_ref().map_or(0, |i| i.hyperplanes.len())
}

/// Writes all point coordinates, row by row (`point_count · d` values).
/// On `BufferTooSmall`, `*written` holds the required length.
///
/// # Safety
/// `instance` must be a live handle, `buf` valid for `cap` writes, `written`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_points(
    instance: *const SrlbInstance,
    buf: *mut i64,
    cap: usize,
    written: *mut usize,
) -> SrlbStatus {
    guard(|| {
        let instance = in_ref(instance, "instance")?;
        let flat: Vec<i64> = instance.points.iter().flat_map(|p| p.coords.iter().copied()).collect();
        fill(&flat, buf, cap, written)
    })
}

/// Writes hyperplane `index` as `d` values: `a_1, …, a_{d-1}, b`.
///
/// # Safety
/// `instance` must be a live handle, `buf` valid for `cap` writes, `written`
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_hyperplane(
    instance: *const SrlbInstance,
    index: usize,
    buf: *mut i64,
    cap: usize,
    written: *mut usize,
) -> SrlbStatus {
    guard(|| {
        let instance = in_ref(instance, "instance")?;
        let h = instance
            .hyperplanes
            .get(index)
            .ok_or_else(|| invalid(format!("hyperplane index {index} out of range")))?;
        let mut coeffs = h.a.clone();
        coeffs.push(h.b);
        fill(&coeffs, buf, cap, written)
    })
}

/// Runs the full verification (exact richness, pair coverage, containment,
/// family and grid checks) with the given pair-coverage budget.
///
/// # Safety
/// `instance` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_verify(
    instance: *const SrlbInstance,
    budget: u64,
    out: *mut SrlbVerifyReport,
) -> SrlbStatus {
    guard(|| {
        let instance = in_ref(instance, "instance")?;
        let out = out_ref(out, "report output")?;
        let r = verify_instance(&instance.instance, budget)?;
        *out = SrlbVerifyReport {
            richness_exact: r.richness_exact,
            max_pair_coverage: r.max_pair_coverage,
            beta_bound: r.beta_bound,
            k2beta_free: r.k2beta_free,
            containment: r.containment,
            family_exact: r.family_exact,
            grid_exact: r.grid_exact,
            passed: r.passed(),
        };
        Ok(())
    })
}

/// Bound figures for an instance. Fails with `ArithmeticOverflow` when the
/// reduced figure of merit does not fit in 64 bits.
///
/// # Safety
/// `instance` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srlb_instance_bound_report(
    instance: *const SrlbInstance,
    out: *mut SrlbBoundReport,
) -> SrlbStatus {
    guard(|| {
        let instance = in_ref(instance, "instance")?;
        let out = out_ref(out, "report output")?;
        let r = bound_report(&instance.instance.params);
        let narrow =
            |v: u128| u64::try_from(v).map_err(|_| Failure::from(Error::ArithmeticOverflow("figure of merit")));
        *out = SrlbBoundReport {
            m: r.m,
            t: r.t,
            alpha: r.alpha,
            beta: r.beta,
            figure_of_merit_num: narrow(*r.figure_of_merit.numer())?,
            figure_of_merit_den: narrow(*r.figure_of_merit.denom())?,
            exponent_num: *r.exponent.numer(),
            exponent_den: *r.exponent.denom(),
        };
        Ok(())
    })
}

/// Builds a kd-tree over the instance's points.
///
/// # Safety
/// `instance` must be a live handle; `out` must be valid for writes. The
/// tree must be freed with [`srlb_kdtree_free`]; it does not borrow the
/// instance.
#[no_mangle]
pub unsafe extern "C" fn srlb_kdtree_build(
    instance: *const SrlbInstance,
    leaf_capacity: usize,
    out: *mut *mut SrlbKdTree,
) -> SrlbStatus {
    guard(|| {
        let instance = in_ref(instance, "instance")?;
        let out = out_ref(out, "tree output")?;
        let tree = KdTree::build(&instance.points, leaf_capacity)?;
        *out = Box::into_raw(Box::new(SrlbKdTree { tree }));
        Ok(())
    })
}

/// # Safety
/// `tree` must be NULL or a live handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn srlb_kdtree_free(tree: *mut SrlbKdTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

unsafe fn report(
    tree: &KdTree,
    query: &SimplexQuery,
    indices: *mut usize,
    cap: usize,
    written: *mut usize,
    stats: *mut SrlbQueryStats,
) -> Result<(), Failure> {
    let (found, s) = tree.query(query)?;
    if let Some(stats) = stats.as_mut() {
        *stats = SrlbQueryStats {
            nodes_visited: s.nodes_visited,
            leaves_scanned: s.leaves_scanned,
            points_reported: s.points_reported,
            points_tested: s.points_tested,
        };
    }
    fill(&found, indices, cap, written)
}

/// Reports the points inside the intersection of `count` closed halfspaces.
///
/// `normals` holds `count · d` coefficients, `offsets` and `senses` one
/// entry per halfspace (`sense` 0 for `≤`, 1 for `≥`). Indices refer to the
/// instance's point order. `stats` may be NULL; it is filled even when the
/// index buffer is too small.
///
/// # Safety
/// `tree` must be a live handle; the input arrays must hold the stated
/// number of elements; `indices` must be valid for `cap` writes and
/// `written` for one.
#[no_mangle]
pub unsafe extern "C" fn srlb_kdtree_query(
    tree: *const SrlbKdTree,
    normals: *const i64,
    offsets: *const i64,
    senses: *const i32,
    count: usize,
    indices: *mut usize,
    cap: usize,
    written: *mut usize,
    stats: *mut SrlbQueryStats,
) -> SrlbStatus {
    guard(|| {
        let tree = &in_ref(tree, "tree")?.tree;
        if count == 0 {
            return Err(invalid("query needs at least one halfspace"));
        }
        if normals.is_null() || offsets.is_null() || senses.is_null() {
            return Err(null("query array"));
        }
        let d = tree.dim();
        let normals = slice::from_raw_parts(normals, count * d);
        let offsets = slice::from_raw_parts(offsets, count);
        let senses = slice::from_raw_parts(senses, count);
        let constraints = (0..count)
            .map(|i| {
                let sense = match senses[i] {
                    0 => Sense::Le,
                    1 => Sense::Ge,
                    other => return Err(invalid(format!("unknown sense {other}"))),
                };
                Ok(Halfspace::new(normals[i * d..(i + 1) * d].to_vec(), offsets[i], sense)?)
            })
            .collect::<Result<Vec<_>, Failure>>()?;
        report(tree, &SimplexQuery::new(constraints)?, indices, cap, written, stats)
    })
}

/// Reports the points on hyperplane `index` of `instance` through its slab
/// query.
///
/// # Safety
/// Same as [`srlb_kdtree_query`]; `instance` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn srlb_kdtree_slab_query(
    tree: *const SrlbKdTree,
    instance: *const SrlbInstance,
    index: usize,
    indices: *mut usize,
    cap: usize,
    written: *mut usize,
    stats: *mut SrlbQueryStats,
) -> SrlbStatus {
    guard(|| {
        let tree = &in_ref(tree, "tree")?.tree;
        let instance = in_ref(instance, "instance")?;
        let h = instance
            .hyperplanes
            .get(index)
            .ok_or_else(|| invalid(format!("hyperplane index {index} out of range")))?;
        report(tree, &slab_query_for(h), indices, cap, written, stats)
    })
}

/// Least-squares slope of `log2 ys` against `log2 xs`.
///
/// # Safety
/// `xs` and `ys` must hold `len` values; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn srlb_fit_power_law(
    xs: *const f64,
    ys: *const f64,
    len: usize,
    out: *mut SrlbFitResult,
) -> SrlbStatus {
    guard(|| {
        let out = out_ref(out, "fit output")?;
        if len > 0 && (xs.is_null() || ys.is_null()) {
            return Err(null("sample array"));
        }
        let samples: Vec<(f64, f64)> = if len == 0 {
            Vec::new()
        } else {
            slice::from_raw_parts(xs, len)
                .iter()
                .copied()
                .zip(slice::from_raw_parts(ys, len).iter().copied())
                .collect()
        };
        let fit = fit_power_law(&samples)?;
        *out = SrlbFitResult {
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            points_used: fit.points_used,
        };
        Ok(())
    })
}
