//! Acceptance suite: one PASS/FAIL line per criterion, each with its time
//! limit. Runs without the libtest harness so the lines appear in order.

use std::f64::consts::PI;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use serde_json::Value;
use torus_split::eigen::{decomposition_errors, symmetric_eigen, DEFAULT_TOLERANCE};
use torus_split::galerkin::assemble_galerkin;
use torus_split::lattice::{eigenspace, multiplicity, LatticeVector};
use torus_split::perturbation::{
    assemble_first_order, first_order_corrections, offdiagonal_after_rotation,
    second_order_corrections, split_matrix, DEFAULT_GAP_TOLERANCE,
};
use torus_split::PotentialSpec;

type Outcome = Result<String, String>;

/// Label, check, time limit in seconds.
type Criterion = (&'static str, fn() -> Outcome, u64);

fn run(args: &[&str]) -> (i32, Value) {
    let out = Command::new(env!("CARGO_BIN_EXE_torus-split"))
        .args(args)
        .output()
        .expect("binary runs");
    let code = out.status.code().unwrap_or(-1);
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, json)
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array()
        .map(|a| a.iter().filter_map(Value::as_f64).collect())
        .unwrap_or_default()
}

fn sorted(mut v: Vec<f64>) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    v
}

fn max_deviation(a: &[f64], b: &[f64]) -> Result<f64, String> {
    if a.len() != b.len() {
        return Err(format!("length {} vs {}", a.len(), b.len()));
    }
    Ok(a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs())))
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn brute_force_counts(n: usize, max: u64) -> Vec<u64> {
    let r = (max as f64).sqrt() as i64;
    let mut counts = vec![0u64; max as usize + 1];
    let mut k = vec![-r; n];
    loop {
        let s: i64 = k.iter().map(|c| c * c).sum();
        if s as u64 <= max {
            counts[s as usize] += 1;
        }
        let mut j = 0;
        while j < n && k[j] == r {
            k[j] = -r;
            j += 1;
        }
        if j == n {
            return counts;
        }
        k[j] += 1;
    }
}

fn ac1() -> Outcome {
    let table = [
        (325, 2, 24),
        (13, 2, 8),
        (125, 2, 16),
        (5, 3, 24),
        (9, 3, 30),
        (100, 3, 30),
        (1000, 3, 144),
        (6, 4, 96),
        (200, 4, 744),
        (2000, 4, 3744),
    ];
    for (lambda, n, expected) in table {
        let got = multiplicity(lambda, n).map_err(|e| e.to_string())?;
        ensure(got == expected, || {
            format!("m({lambda}, {n}) = {got}, expected {expected}")
        })?;
    }
    let brute = brute_force_counts(4, 200);
    for (lambda, &count) in brute.iter().enumerate() {
        let got = multiplicity(lambda as u64, 4).map_err(|e| e.to_string())?;
        ensure(got == count, || {
            format!("4D brute force at {lambda}: {count} vs {got}")
        })?;
    }
    Ok("10 table values, 4D brute force through 200".into())
}

fn ac2() -> Outcome {
    let (code, json) = run(&[
        "split", "--n", "1", "--lambda", "1", "--alpha", "1", "--format", "json",
    ]);
    ensure(code == 0, || format!("exit {code}"))?;
    let c = floats(&json["corrections"]);
    let e4 = (-4.0f64).exp();
    let dev = max_deviation(&c, &[-0.0183156, 0.0183156])?;
    ensure(dev <= 1e-6, || format!("corrections {c:?}"))?;
    let gap = json["min_gap"].as_f64().unwrap_or(f64::NAN);
    ensure((gap - 2.0 * e4).abs() <= 1e-10, || format!("gap {gap}"))?;
    Ok(format!(
        "corrections {:+.7} {:+.7}, gap {gap:.10}",
        c[0], c[1]
    ))
}

fn reference(name: &str, mode: &str) -> Result<Value, String> {
    let (code, json) = run(&[
        "reference",
        "--which",
        name,
        "--mode",
        mode,
        "--format",
        "json",
    ]);
    ensure(code == 0, || format!("reference {name} exit {code}"))?;
    Ok(json["matrices"][0].clone())
}

fn ac3() -> Outcome {
    let entry = reference("C", "definition")?;
    let values = sorted(floats(&entry["eigenvalues"]));
    let dev = max_deviation(&values, &sorted(vec![1.1093, 0.999665, 0.981684, 0.909346]))?;
    ensure(dev <= 1e-4, || format!("deviation {dev:e}"))?;
    Ok(format!("max deviation {dev:.2e}"))
}

fn ac4() -> Outcome {
    let (code, json) = run(&[
        "split",
        "--n",
        "2",
        "--lambda",
        "5",
        "--alpha",
        "1,2",
        "--diag",
        "one",
        "--gap-tol",
        "1e-9",
        "--format",
        "json",
    ]);
    ensure(code == 0, || format!("exit {code}"))?;
    let reported = [
        1.05993, 1.05966, 1.04165, 1.04125, 0.958717, 0.958321, 0.94037, 0.940099,
    ];
    let dev = max_deviation(&floats(&json["corrections"]), &sorted(reported.to_vec()))?;
    ensure(dev <= 1e-4, || format!("deviation {dev:e}"))?;
    let verdict = json["verdict"].as_str().unwrap_or("");
    ensure(verdict == "fully_split", || format!("verdict {verdict}"))?;
    Ok(format!("max deviation {dev:.2e}, fully_split"))
}

fn ac5() -> Outcome {
    let (code, f) = run(&[
        "split", "--n", "3", "--lambda", "1", "--alpha", "1,2,0", "--diag", "one", "--formal",
        "--format", "json",
    ]);
    ensure(code == 0, || format!("F exit {code}"))?;
    let f_reported = [2.44993, 0.999665, 0.981684, 0.948775, 0.619943, 0.0];
    let f_dev = max_deviation(&floats(&f["corrections"]), &sorted(f_reported.to_vec()))?;
    ensure(f_dev <= 1e-3, || format!("F deviation {f_dev:e}"))?;

    // three nearly equal branches: the split command reports exit 3
    let (code, g) = run(&[
        "split", "--n", "4", "--lambda", "1", "--alpha", "1,2,0,0", "--diag", "one", "--formal",
        "--format", "json",
    ]);
    ensure(code == 3, || format!("G exit {code}"))?;
    let g_values = floats(&g["corrections"]);
    let nonzero: Vec<f64> = g_values
        .iter()
        .copied()
        .filter(|v| v.abs() > 1e-6)
        .collect();
    let g_dev = max_deviation(
        &nonzero,
        &sorted(vec![4.37347, 0.999665, 0.981684, 0.955542, 0.689642]),
    )?;
    ensure(g_dev <= 1e-3, || format!("G deviation {g_dev:e}"))?;
    let verdict = g["verdict"].as_str().unwrap_or("");
    ensure(verdict == "partially_split", || {
        format!("G verdict {verdict}")
    })?;
    let zero_cluster = g["clusters"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|c| c.as_array())
        .find(|c| {
            c.iter()
                .filter_map(Value::as_u64)
                .all(|i| g_values[i as usize].abs() < 1e-9)
        })
        .map_or(0, |c| c.len());
    ensure(zero_cluster == 3, || {
        format!("zero cluster size {zero_cluster}")
    })?;

    let diff = reference("F", "diff")?;
    let flagged = diff["discrepancies"]
        .as_array()
        .into_iter()
        .flatten()
        .any(|d| d["printed"] == "e^9");
    ensure(flagged, || "F diff does not flag e^9".into())?;
    Ok(format!(
        "F {f_dev:.2e}, G {g_dev:.2e}, zero cluster 3, e^9 flagged"
    ))
}

fn ac6() -> Outcome {
    let fixture = reference("B", "fixture")?;
    let values = sorted(floats(&fixture["eigenvalues"]));
    let dev = max_deviation(&values, &[-0.00247875, 0.00247875])?;
    ensure(dev <= 1e-8, || format!("deviation {dev:e}"))?;
    let diff = reference("B", "diff")?;
    let six = (-6.0f64).exp();
    let thirty_six = (-36.0f64).exp();
    let flagged = diff["discrepancies"]
        .as_array()
        .into_iter()
        .flatten()
        .any(|d| {
            d["printed"] == "e^-6"
                && (d["printed_value"].as_f64().unwrap_or(0.0) - six).abs() < 1e-15
                && (d["definition_value"].as_f64().unwrap_or(0.0) - thirty_six).abs() < 1e-28
        });
    ensure(flagged, || "B diff does not flag e^-6 against e^-36".into())?;
    Ok(format!("max deviation {dev:.2e}, e^-6 vs e^-36 flagged"))
}

fn ac7() -> Outcome {
    let (code, s1) = run(&[
        "oracle",
        "--n",
        "1",
        "--lambda",
        "1",
        "--alpha",
        "1",
        "--eps",
        "1e-2,1e-3,1e-4",
        "--cutoff",
        "10",
        "--format",
        "json",
    ]);
    ensure(code == 0, || format!("S1 exit {code}"))?;
    let errors: Vec<f64> = s1["rows"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|r| r["error"].as_f64())
        .collect();
    ensure(errors.len() == 3, || format!("S1 rows {errors:?}"))?;
    // ratios recomputed from the reported errors, not taken from the report
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    ensure(ratios.iter().all(|r| (0.02..=0.5).contains(r)), || {
        format!("S1 ratios {ratios:?}")
    })?;

    let (code, t2) = run(&[
        "oracle", "--n", "2", "--lambda", "5", "--alpha", "1,2", "--eps", "1e-3", "--format",
        "json",
    ]);
    ensure(code == 0, || format!("T2 exit {code}"))?;
    let err = t2["rows"][0]["error"].as_f64().unwrap_or(f64::NAN);
    ensure(err <= 5e-3, || format!("T2 error {err:e}"))?;
    Ok(format!(
        "S1 ratios {:.4} {:.4}, T2 error {err:.2e}",
        ratios[0], ratios[1]
    ))
}

const SHELLS: [(usize, u64); 8] = [
    (1, 1),
    (1, 9),
    (2, 1),
    (2, 5),
    (2, 25),
    (3, 1),
    (3, 2),
    (4, 1),
];

fn shell_spec() -> impl Strategy<Value = (PotentialSpec, u64)> {
    (
        0..SHELLS.len(),
        prop::collection::vec(0.05f64..3.0, 4),
        any::<bool>(),
    )
        .prop_map(|(s, alpha, subtract)| {
            let (n, lambda0) = SHELLS[s];
            let spec = PotentialSpec::new(alpha[..n].to_vec())
                .unwrap()
                .with_subtract_constant(subtract);
            (spec, lambda0)
        })
}

fn property(
    name: &str,
    test: impl Fn((PotentialSpec, u64)) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let mut runner = TestRunner::new(Config {
        cases: 64,
        failure_persistence: None,
        ..Config::default()
    });
    runner
        .run(&shell_spec(), test)
        .map_err(|e| format!("{name}: {e}"))
}

/// `(2π)^{-n} ∫ V(x) cos(t·x) dx` on a 64ⁿ grid.
fn quadrature_coefficient(spec: &PotentialSpec, values: &[f64], t: &[i64]) -> f64 {
    let n = spec.n();
    let points = 64usize;
    let h = 2.0 * PI / points as f64;
    let mut total = 0.0;
    for (idx, v) in values.iter().enumerate() {
        let mut rest = idx;
        let mut phase = 0.0;
        for tj in t.iter().take(n) {
            phase += *tj as f64 * (rest % points) as f64 * h;
            rest /= points;
        }
        total += v * phase.cos();
    }
    total / values.len() as f64
}

fn ac8() -> Outcome {
    property("symmetry", |(spec, lambda0)| {
        let a = assemble_first_order(&spec, &eigenspace(lambda0, spec.n()).unwrap())
            .unwrap()
            .entries;
        prop_assert_eq!(&a, &a.transpose());
        Ok(())
    })?;
    property("eigensolver", |(spec, lambda0)| {
        let a = assemble_first_order(&spec, &eigenspace(lambda0, spec.n()).unwrap())
            .unwrap()
            .entries;
        let eig = symmetric_eigen(&a, DEFAULT_TOLERANCE).unwrap();
        let (res, orth) = decomposition_errors(&a, &eig);
        prop_assert!(
            res <= 1e-10 && orth <= 1e-10,
            "residual {res:e} orthogonality {orth:e}"
        );
        prop_assert!(offdiagonal_after_rotation(&a, &eig.vectors) <= 1e-10);
        Ok(())
    })?;
    property("diagonal convention", |(spec, lambda0)| {
        let r0 = first_order_corrections(
            &spec.clone().with_subtract_constant(true),
            lambda0,
            DEFAULT_GAP_TOLERANCE,
        )
        .unwrap();
        let r1 = first_order_corrections(
            &spec.with_subtract_constant(false),
            lambda0,
            DEFAULT_GAP_TOLERANCE,
        )
        .unwrap();
        prop_assert_eq!(r0.verdict(), r1.verdict());
        prop_assert_eq!(r0.clusters(), r1.clusters());
        if let (Some(g0), Some(g1)) = (r0.min_gap(), r1.min_gap()) {
            prop_assert!((g0 - g1).abs() <= 1e-12);
        }
        Ok(())
    })?;
    property("basis permutation", |(spec, lambda0)| {
        let basis = eigenspace(lambda0, spec.n()).unwrap();
        let order: Vec<usize> = (0..basis.multiplicity()).rev().collect();
        let a = split_matrix(
            assemble_first_order(&spec, &basis).unwrap(),
            DEFAULT_GAP_TOLERANCE,
        )
        .unwrap();
        let b = split_matrix(
            assemble_first_order(&spec, &basis.permuted(&order).unwrap()).unwrap(),
            DEFAULT_GAP_TOLERANCE,
        )
        .unwrap();
        for (x, y) in a.corrections.iter().zip(&b.corrections) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
        Ok(())
    })?;
    property("negation commutation", |(spec, lambda0)| {
        let basis = eigenspace(lambda0, spec.n()).unwrap();
        let a = assemble_first_order(&spec, &basis).unwrap().entries;
        let perm = basis.negation_permutation();
        let m = a.nrows();
        let p = DMatrix::from_fn(m, m, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
        prop_assert_eq!(&p * &a, &a * &p);
        Ok(())
    })?;

    let mut worst = 0.0f64;
    for alpha in [vec![1.0], vec![0.4], vec![1.0, 2.0], vec![0.3, 0.6]] {
        let spec = PotentialSpec::new(alpha)
            .unwrap()
            .with_subtract_constant(false);
        let n = spec.n();
        let nodes: Vec<Vec<f64>> = (0..64usize.pow(n as u32))
            .map(|mut idx| {
                (0..n)
                    .map(|_| {
                        let x = (idx % 64) as f64 * 2.0 * PI / 64.0;
                        idx /= 64;
                        x
                    })
                    .collect()
            })
            .collect();
        let values = spec.evaluate_many(&nodes).map_err(|e| e.to_string())?;
        let span = if n == 1 { 1 } else { 7 };
        for i in 0..7 * span {
            let t: Vec<i64> = [(i % 7) as i64 - 3, (i / 7) as i64 - 3][..n].to_vec();
            let formula = spec
                .fourier_coefficient(&LatticeVector::new(t.clone()).unwrap())
                .map_err(|e| e.to_string())?;
            worst = worst.max((formula - quadrature_coefficient(&spec, &values, &t)).abs());
        }
    }
    ensure(worst <= 1e-10, || format!("quadrature deviation {worst:e}"))?;
    Ok(format!(
        "5 properties x 64 cases, quadrature deviation {worst:.1e}"
    ))
}

fn ac9() -> Outcome {
    let spec = PotentialSpec::new(vec![1.0]).unwrap();
    let report =
        first_order_corrections(&spec, 1, DEFAULT_GAP_TOLERANCE).map_err(|e| e.to_string())?;
    let second = second_order_corrections(
        &spec,
        report.basis(),
        &report.branches(),
        10,
        DEFAULT_GAP_TOLERANCE,
    )
    .map_err(|e| e.to_string())?;
    let eps = [1e-2, 3e-3, 1e-3];
    let mut clusters = Vec::new();
    for &e in &eps {
        let op = assemble_galerkin(&spec, e, 10).map_err(|e| e.to_string())?;
        clusters.push(op.eigen_near(1.0, 2).map_err(|e| e.to_string())?);
    }
    let mut worst = 0.0f64;
    for i in 0..2 {
        // least-squares slope of the residual against ε²
        let (mut num, mut den) = (0.0, 0.0);
        for (e, c) in eps.iter().zip(&clusters) {
            num += e * e * (c[i] - 1.0 - e * report.corrections[i]);
            den += e.powi(4);
        }
        let fit = num / den;
        let rel = (fit - second.values[i]).abs() / second.values[i].abs();
        ensure(rel <= 0.05, || {
            format!("branch {i}: fit {fit} vs {}", second.values[i])
        })?;
        worst = worst.max(rel);
    }
    Ok(format!("max relative deviation {worst:.2e}"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("1 multiplicity regression", ac1, 30),
        ("2 circle pipeline", ac2, 1),
        ("3 two-torus ground shell", ac3, 1),
        ("4 two-torus shell five", ac4, 1),
        ("5 formal weights", ac5, 2),
        ("6 verbatim fixture", ac6, 1),
        ("7 oracle convergence", ac7, 30),
        ("8 invariant suites", ac8, 60),
        ("9 second-order cross-check", ac9, 10),
    ];
    let mut failed = 0;
    for (name, check, limit) in criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > Duration::from_secs(limit) => {
                Err(format!("took {elapsed:.2?}, limit {limit} s"))
            }
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS  AC{name}: {detail} ({elapsed:.2?})"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  AC{name}: {detail} ({elapsed:.2?})");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
