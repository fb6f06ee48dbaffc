//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::BTreeMap;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use srlb::harness::{auto_t, format_significant, verify_instance};
use srlb::incidence::{find_kab, implied_query_bound, pair_coverage, DEFAULT_PAIR_BUDGET};
use srlb::range::{random_simplex_query, BoundingBox, DEFAULT_LEAF_CAPACITY};
use srlb::{
    brute_force_query, build_incidence_graph, normalize_params, richness_histogram, slab_query_for, verify_no_k2beta,
    Error, GridPoint, IncidenceGraph, Instance, InstanceParams, KdTree,
};

const SRLB: &str = env!("CARGO_BIN_EXE_srlb");
const RANDOM_QUERIES: usize = 1000;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn lib<T>(r: srlb::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

/// The (d, n) grid of criteria 1-3, 5 and 6, with auto `t`.
fn instances() -> Result<Vec<Instance>, String> {
    let mut out = Vec::new();
    for d in 2..=4u32 {
        for e in [10u32, 12, 14] {
            let n = 1u64 << e;
            out.push(Instance::generate(lib(normalize_params(d, n, auto_t(d, n)))?));
        }
    }
    Ok(out)
}

fn label(p: &InstanceParams) -> String {
    format!("(d={}, n={}, t={}, m={})", p.d, p.n, p.t, p.m)
}

fn graph(instance: &Instance) -> Result<IncidenceGraph, String> {
    lib(build_incidence_graph(&instance.points(), &instance.hyperplanes()))
}

fn richness(instances: &[Instance]) -> Outcome {
    for inst in instances {
        let p = &inst.params;
        let hist = richness_histogram(&graph(inst)?);
        let expected = BTreeMap::from([(p.t as usize, p.m as usize)]);
        ensure!(
            hist == expected,
            "{}: histogram {hist:?}, expected {expected:?}",
            label(p)
        );
    }
    Ok(format!("{} instances, histogram = {{t: m}}", instances.len()))
}

fn pair_bound(instances: &[Instance]) -> Outcome {
    let mut checked = 0;
    let mut attained = Vec::new();
    for inst in instances {
        let p = &inst.params;
        let cost = p.m as u128 * (p.t as u128).pow(2);
        if cost > DEFAULT_PAIR_BUDGET as u128 {
            continue;
        }
        let cov = lib(pair_coverage(&graph(inst)?, DEFAULT_PAIR_BUDGET))?;
        let bound = p.pair_bound();
        ensure!(
            cov.max_common <= bound,
            "{}: max_common {} > A^(d-2) = {bound}",
            label(p),
            cov.max_common
        );
        if p.d == 2 && p.t >= 2 {
            ensure!(
                cov.max_common == 1,
                "{}: d=2 max_common {} != 1",
                label(p),
                cov.max_common
            );
        }
        attained.push(format!("{}/{}", cov.max_common, bound));
        checked += 1;
    }
    ensure!(
        checked == instances.len(),
        "only {checked} of {} instances within budget",
        instances.len()
    );
    Ok(format!(
        "{checked} instances, max_common/A^(d-2): {}",
        attained.join(" ")
    ))
}

fn family_size(instances: &[Instance]) -> Outcome {
    for inst in instances {
        let p = &inst.params;
        let expected = p.a.pow(p.d - 1) * p.b;
        let got = inst.hyperplanes().len() as u64;
        ensure!(
            got == expected && p.m == expected,
            "{}: {got} hyperplanes, A^(d-1)·B = {expected}",
            label(p)
        );
    }
    Ok(format!("{} instances, |family| = A^(d-1)·B", instances.len()))
}

fn containment() -> Outcome {
    let (mut accepted, mut rejected, mut hand_built) = (0, 0, 0);
    for d in 2..=4u32 {
        for s in 1..=6u64 {
            let t = s.pow(d - 1);
            for h in 1..=64u64 {
                let n = h * t;
                let a = n / (d as u64 * s.pow(d));
                let b = n / (d as u64 * t);
                let holds = |a: u64, b: u64| b + (d as u64 - 1) * a * s <= h;
                match normalize_params(d, n, t) {
                    Ok(p) => {
                        ensure!(a >= 1 && b >= 1, "d={d} s={s} n/t={h}: accepted with A={a} B={b}");
                        ensure!(holds(p.a, p.b), "d={d} s={s} n/t={h}: accepted but containment fails");
                        accepted += 1;
                    }
                    Err(Error::RangeTooTight(_)) => {
                        ensure!(a == 0 || b == 0, "d={d} s={s} n/t={h}: rejected with A={a} B={b}");
                        rejected += 1;
                    }
                    Err(e) => return Err(format!("d={d} s={s} n/t={h}: unexpected error {e}")),
                }
                // every (A, B) that overshoots the last axis must be refused
                for ha in 1..=h {
                    for hb in 1..=h {
                        if holds(ha, hb) {
                            continue;
                        }
                        let params = InstanceParams {
                            d,
                            s,
                            t,
                            n,
                            a: ha,
                            b: hb,
                            m: ha.pow(d - 1) * hb,
                        };
                        ensure!(
                            matches!(params.validate(), Err(Error::RangeTooTight(_))),
                            "d={d} s={s} n/t={h} A={ha} B={hb}: violating set not rejected"
                        );
                        hand_built += 1;
                    }
                }
            }
        }
    }
    Ok(format!(
        "{accepted} accepted, {rejected} rejected by normalize_params; {hand_built} violating (A, B) rejected"
    ))
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

fn oracle(instances: &[Instance]) -> Outcome {
    let (mut slab_queries, mut random_queries) = (0, 0);
    for inst in instances {
        let p = &inst.params;
        let points = inst.points();
        let tree = lib(KdTree::build(&points, DEFAULT_LEAF_CAPACITY))?;
        for h in inst.hyperplanes() {
            let q = slab_query_for(&h);
            let got = sorted(lib(tree.query(&q))?.0);
            ensure!(
                got == sorted(lib(brute_force_query(&points, &q))?),
                "{}: slab {h:?} differs",
                label(p)
            );
            slab_queries += 1;
        }
        let domain = BoundingBox::around(points.iter().map(|g| g.coords.as_slice())).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(p.n ^ ((p.d as u64) << 40));
        for i in 0..RANDOM_QUERIES {
            let q = lib(random_simplex_query(&mut rng, &domain, p.a.max(2) as i64))?;
            let got = sorted(lib(tree.query(&q))?.0);
            ensure!(
                got == sorted(lib(brute_force_query(&points, &q))?),
                "{}: random query {i} differs: {q:?}",
                label(p)
            );
            random_queries += 1;
        }
    }
    Ok(format!(
        "{slab_queries} slab + {random_queries} random queries over {} instances",
        instances.len()
    ))
}

fn slab_sizes(instances: &[Instance]) -> Outcome {
    let mut queries = 0;
    for inst in instances {
        let p = &inst.params;
        let tree = lib(KdTree::build(&inst.points(), DEFAULT_LEAF_CAPACITY))?;
        for h in inst.hyperplanes() {
            let (found, stats) = lib(tree.query(&slab_query_for(&h)))?;
            ensure!(
                found.len() as u64 == p.t && stats.points_reported == p.t,
                "{}: slab {h:?} reported {} points",
                label(p),
                found.len()
            );
            queries += 1;
        }
    }
    let ts: Vec<u64> = instances.iter().map(|i| i.params.t).collect();
    Ok(format!("{queries} slab queries, k = t for t in {ts:?}"))
}

fn run_cli(args: &[&str]) -> Result<String, String> {
    let out = Command::new(SRLB).args(args).output().map_err(|e| e.to_string())?;
    ensure!(
        out.status.success(),
        "srlb {} exited with {}: {}",
        args.join(" "),
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn slope_for(dir: &Path, d: u32, exponents: std::ops::RangeInclusive<u32>) -> Result<f64, String> {
    let sizes: Vec<String> = exponents.map(|e| (1u64 << e).to_string()).collect();
    let out = dir.join(format!("bench_d{d}.csv"));
    let out_str = out.to_str().unwrap();
    run_cli(&[
        "bench",
        "-d",
        &d.to_string(),
        "--sizes",
        &sizes.join(","),
        "--seed",
        "7",
        "--out",
        out_str,
    ])?;
    let summary = dir.join(format!("bench_d{d}.summary.csv"));
    let fit: Value = serde_json::from_str(&run_cli(&["fit", summary.to_str().unwrap()])?).map_err(|e| e.to_string())?;
    fit["slope"].as_f64().ok_or_else(|| "fit output has no slope".into())
}

fn exponent_fit() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let s2 = slope_for(dir.path(), 2, 10..=18)?;
    let s3 = slope_for(dir.path(), 3, 12..=18)?;
    let (in2, in3) = ((s2 - 0.5).abs() <= 0.1, (s3 - 2.0 / 3.0).abs() <= 0.1);
    ensure!(in2, "d=2 slope {s2:.4} outside 0.5 ± 0.1");
    ensure!(in3, "d=3 slope {s3:.4} outside 2/3 ± 0.1");
    Ok(format!(
        "d=2 slope {s2:.4} (0.5 ± 0.1), d=3 slope {s3:.4} (0.667 ± 0.1)"
    ))
}

fn bound_calculator() -> Outcome {
    for (d, n, t, num, den) in [(2u32, 16u64, 2u64, 8u64, 1u64), (3, 96, 4, 512, 5)] {
        let out = run_cli(&[
            "bound",
            "-d",
            &d.to_string(),
            "-n",
            &n.to_string(),
            "-t",
            &t.to_string(),
        ])?;
        let report: Value = serde_json::from_str(out.lines().next().unwrap_or("")).map_err(|e| e.to_string())?;
        let fom = &report["figure_of_merit"];
        ensure!(
            fom["num"].as_u64() == Some(num) && fom["den"].as_u64() == Some(den),
            "d={d} n={n} t={t}: figure of merit {fom}, expected {num}/{den}"
        );
        let expected = format_significant((n as f64).powf((d - 1) as f64 / d as f64), 6);
        let line = format!(
            "implied_query_bound(n = {n}, S = {}) = {expected}",
            format_significant(n as f64, 6)
        );
        ensure!(
            out.lines().any(|l| l == line),
            "d={d} n={n}: missing line {line:?} in\n{out}"
        );
    }
    let mut identities = 0;
    for d in 2..=6u32 {
        for e in 4..=32u32 {
            let n = 1u64 << e;
            let lhs = format_significant(implied_query_bound(d, n, n as f64), 6);
            let rhs = format_significant((n as f64).powf((d - 1) as f64 / d as f64), 6);
            ensure!(lhs == rhs, "d={d} n={n}: (n²/n)^((d-1)/d) = {lhs}, n^((d-1)/d) = {rhs}");
            identities += 1;
        }
    }
    Ok(format!(
        "8 and 512/5 reproduced; identity holds to 6 digits for {identities} (d, n)"
    ))
}

fn falsifiability() -> Outcome {
    let budget = DEFAULT_PAIR_BUDGET;
    let small = lib(normalize_params(2, 16, 2))?;
    let mut notes = Vec::new();

    // moved point: (1, 2) lies on x2 = 1 + x1; push it off the grid
    let mut moved = Instance::generate(small);
    let points = moved.points.as_mut().unwrap();
    let idx = points.iter().position(|p| p.coords == [1, 2]).unwrap();
    points[idx] = GridPoint::new(vec![1, 9]);
    let report = lib(verify_instance(&moved, budget))?;
    ensure!(
        !report.richness_exact && !report.passed(),
        "moved point not detected: {report:?}"
    );
    notes.push("moved point -> richness_exact=false");

    // duplicated hyperplane, in the plane and in space
    let mut dup = Instance::generate(small);
    let family = dup.hyperplanes.as_mut().unwrap();
    family[1] = family[0].clone();
    let report = lib(verify_instance(&dup, budget))?;
    ensure!(
        !report.family_exact && !report.k2beta_free && report.max_pair_coverage == 2,
        "duplicated line not detected: {report:?}"
    );
    let mut dup3 = Instance::generate(lib(normalize_params(3, 96, 4))?);
    let family = dup3.hyperplanes.as_mut().unwrap();
    family[5] = family[0].clone();
    let report = lib(verify_instance(&dup3, budget))?;
    ensure!(
        !report.family_exact && !report.passed(),
        "duplicated plane not detected: {report:?}"
    );
    notes.push("duplicated hyperplane -> family_exact=false (k2beta_free=false for d=2)");

    // hand-built K_{2,5} against the d=3, n=96 parameters (beta = A + 1 = 5)
    let p3 = lib(normalize_params(3, 96, 4))?;
    let beta = p3.pair_bound() as usize + 1;
    let adjacency: Vec<Vec<usize>> = (0..beta).map(|j| vec![0, 1, 2 + j]).collect();
    let g = lib(IncidenceGraph::from_adjacency(p3.n as usize, adjacency.clone()))?;
    ensure!(
        !lib(verify_no_k2beta(&g, &p3, budget))?,
        "verify_no_k2beta accepted a K_(2,{beta})"
    );
    let found = lib(find_kab(&g, 2, beta, budget))?;
    ensure!(
        found.as_ref().is_some_and(|k| k.points == [0, 1]),
        "find_kab did not return the planted biclique: {found:?}"
    );
    let mut planted = Instance::params_only(p3);
    planted.adjacency = Some(adjacency);
    let report = lib(verify_instance(&planted, budget))?;
    ensure!(
        !report.k2beta_free && report.witness == Some((0, 1)) && report.adjacency_consistent == Some(false),
        "planted K_(2,{beta}) file not rejected: {report:?}"
    );
    notes.push("K_{2,beta} graph -> verify_no_k2beta=false, k2beta_free=false");

    // the unmodified instances still pass, so the faults are what trips them
    for params in [small, p3] {
        let report = lib(verify_instance(&Instance::generate(params), budget))?;
        ensure!(report.passed(), "clean instance {} fails: {report:?}", label(&params));
    }
    Ok(notes.join("; "))
}

fn guarded(f: impl FnOnce() -> Outcome) -> Outcome {
    panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    })
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results: Vec<(u32, &str, Outcome, f64)> = Vec::new();
    let mut record = |id, name, f: &mut dyn FnMut() -> Outcome| {
        let t0 = Instant::now();
        let outcome = guarded(f);
        let secs = t0.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d.as_str()),
            Err(d) => ("FAIL", d.as_str()),
        };
        println!("[{tag}] {id}. {name} ({secs:.2}s): {detail}");
        results.push((id, name, outcome, secs));
    };

    let grid = match instances() {
        Ok(grid) => grid,
        Err(e) => {
            println!("[FAIL] could not build the instance grid: {e}");
            return ExitCode::FAILURE;
        }
    };
    record(1, "construction validity: exact richness", &mut || richness(&grid));
    record(2, "pair coverage at most A^(d-2)", &mut || pair_bound(&grid));
    record(3, "family size A^(d-1)·B", &mut || family_size(&grid));
    record(4, "containment inequality, exhaustive", &mut containment);
    record(5, "kd-tree query equals brute-force oracle", &mut || oracle(&grid));
    record(6, "slab queries report exactly t points", &mut || slab_sizes(&grid));
    record(7, "query exponent reproduction via bench + fit", &mut exponent_fit);
    record(8, "bound calculator", &mut bound_calculator);
    record(9, "falsifiability fixtures", &mut falsifiability);

    let failed = results.iter().filter(|r| r.2.is_err()).count();
    println!(
        "{} of {} criteria passed in {:.1}s",
        results.len() - failed,
        results.len(),
        start.elapsed().as_secs_f64()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
