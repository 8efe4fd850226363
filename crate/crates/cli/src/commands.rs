use std::fmt::Write as _;
use std::io::Write as _;

use torus_split::fixtures::{self, ReferenceMatrix};
use torus_split::galerkin::{self, fan_plot_rows, ValidationOptions, MAX_BASIS};
use torus_split::lattice;
use torus_split::perturbation::{
    self, default_resolvent_cutoff, eigenvector_correction_coefficients, second_order_corrections,
    SplittingReport, Verdict,
};
use torus_split::PotentialSpec;

use crate::args::{
    LatticeArgs, Mode, OracleArgs, ReferenceArgs, ReportFormat, SpectrumArgs, SplitArgs,
    TextFormat, Which,
};
use crate::config::{self, Problem};
use crate::exit;
use crate::output::{self, csv_row, sig6, SCHEMA};
use crate::CliError;

type CmdResult = Result<u8, CliError>;

fn emit(text: &str) -> CmdResult {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(exit::OK)
}

fn tuple<T: std::fmt::Display>(v: &[T]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}

fn lattice_report(a: &LatticeArgs) -> Result<output::LatticeReport, CliError> {
    Ok(output::LatticeReport {
        schema: SCHEMA,
        lambda: a.lambda,
        n: a.n,
        multiplicity: lattice::multiplicity(a.lambda, a.n)?,
        representations: lattice::representations(a.lambda, a.n)?,
    })
}

pub fn multiplicity(a: &LatticeArgs) -> CmdResult {
    let r = lattice_report(a)?;
    match a.format {
        TextFormat::Json => emit(&output::json(&r)),
        TextFormat::Text => emit(&format!("{}\n", r.multiplicity)),
    }
}

pub fn representations(a: &LatticeArgs) -> CmdResult {
    let r = lattice_report(a)?;
    match a.format {
        TextFormat::Json => emit(&output::json(&r)),
        TextFormat::Text => {
            let mut s = String::new();
            for rep in &r.representations {
                writeln!(s, "{}", tuple(rep)).unwrap();
            }
            emit(&s)
        }
    }
}

pub fn spectrum(a: &SpectrumArgs) -> CmdResult {
    let levels = lattice::spectrum_up_to(a.max, a.n)?;
    match a.format {
        TextFormat::Json => emit(&output::json(&output::SpectrumReport {
            schema: SCHEMA,
            n: a.n,
            max: a.max,
            levels: levels
                .into_iter()
                .map(|(lambda, multiplicity)| output::Level {
                    lambda,
                    multiplicity,
                })
                .collect(),
        })),
        TextFormat::Text => {
            let mut s = String::new();
            for (l, m) in levels {
                writeln!(s, "{l}\t{m}").unwrap();
            }
            emit(&s)
        }
    }
}

fn potential_info(spec: &PotentialSpec) -> output::PotentialInfo {
    output::PotentialInfo {
        n: spec.n(),
        alpha: spec.alpha().to_vec(),
        subtract_constant: spec.subtract_constant(),
        formal: spec.is_formal(),
    }
}

fn formal_warnings(spec: &PotentialSpec) -> Vec<String> {
    if spec.is_formal() {
        vec![galerkin::FORMAL_WARNING.to_string()]
    } else {
        Vec::new()
    }
}

fn verdict_code(v: Verdict) -> u8 {
    if v == Verdict::FullySplit {
        exit::OK
    } else {
        exit::NOT_SPLIT
    }
}

fn second_order_section(
    problem: &Problem,
    report: &SplittingReport,
    cutoff: u32,
    warnings: &mut Vec<String>,
) -> Result<Option<output::SecondOrderReport>, CliError> {
    let isolated: Vec<usize> = report
        .clusters()
        .iter()
        .filter(|c| c.len() == 1)
        .map(|c| c[0])
        .collect();
    if isolated.len() < report.corrections.len() {
        warnings.push(format!(
            "second order skipped for clustered branches; computed for {} isolated branch(es)",
            isolated.len()
        ));
    }
    if isolated.is_empty() {
        return Ok(None);
    }
    let branches: Vec<Vec<f64>> = isolated.iter().map(|&i| report.branch(i)).collect();
    let second = second_order_corrections(
        &problem.spec,
        report.basis(),
        &branches,
        cutoff,
        problem.gap_tolerance,
    )?;
    let beta = if report.verdict() == Verdict::FullySplit {
        let corr = eigenvector_correction_coefficients(&problem.spec, report, cutoff)?;
        let m = corr.beta.nrows();
        Some(
            (0..m)
                .map(|j| corr.beta.row(j).iter().copied().collect())
                .collect(),
        )
    } else {
        None
    };
    Ok(Some(output::SecondOrderReport {
        cutoff,
        branches: isolated,
        values: second.values,
        tail_bound: second.tail_bound,
        beta,
    }))
}

pub fn split(a: &SplitArgs) -> CmdResult {
    let (problem, file) = config::resolve(&a.problem)?;
    let report = perturbation::first_order_corrections(
        &problem.spec,
        problem.lambda0,
        problem.gap_tolerance,
    )?;
    let code = verdict_code(report.verdict());

    if a.format == ReportFormat::Csv {
        let mut s = String::new();
        for row in report.matrix.rows() {
            writeln!(s, "{}", csv_row(&row)).unwrap();
        }
        emit(&s)?;
        return Ok(code);
    }

    let mut warnings = formal_warnings(&problem.spec);
    let second = if a.second_order {
        let cutoff = a
            .cutoff
            .or(file.cutoff())
            .unwrap_or_else(|| default_resolvent_cutoff(problem.lambda0));
        second_order_section(&problem, &report, cutoff, &mut warnings)?
    } else {
        None
    };

    let text = match a.format {
        ReportFormat::Json => output::json(&output::SplitReport {
            schema: SCHEMA,
            lambda0: problem.lambda0,
            potential: potential_info(&problem.spec),
            multiplicity: report.corrections.len(),
            basis: report
                .basis()
                .frequencies()
                .iter()
                .map(|k| k.coords().to_vec())
                .collect(),
            matrix: report.matrix.rows(),
            gap_tolerance: problem.gap_tolerance,
            corrections: report.corrections.clone(),
            min_gap: report.min_gap(),
            verdict: report.verdict().as_str(),
            clusters: report.clusters().to_vec(),
            eigenvectors: report.branches(),
            second_order: second,
            warnings,
        }),
        _ => pretty_split(&problem, &report, second.as_ref(), &warnings),
    };
    emit(&text)?;
    Ok(code)
}

fn pretty_split(
    problem: &Problem,
    report: &SplittingReport,
    second: Option<&output::SecondOrderReport>,
    warnings: &[String],
) -> String {
    let spec = &problem.spec;
    let mut s = String::new();
    writeln!(
        s,
        "lambda0 = {}  n = {}  multiplicity = {}",
        problem.lambda0,
        spec.n(),
        report.corrections.len()
    )
    .unwrap();
    writeln!(
        s,
        "alpha = {}  diagonal = {}",
        tuple(spec.alpha()),
        if spec.subtract_constant() {
            "zero"
        } else {
            "one"
        }
    )
    .unwrap();
    writeln!(s, "first-order corrections:").unwrap();
    for (i, c) in report.corrections.iter().enumerate() {
        write!(s, "  {i:>3}  {:>13}", sig6(*c)).unwrap();
        if let Some(so) = second {
            if let Some(p) = so.branches.iter().position(|&b| b == i) {
                write!(s, "  second order {:>13}", sig6(so.values[p])).unwrap();
            }
        }
        s.push('\n');
    }
    match report.min_gap() {
        Some(g) => writeln!(
            s,
            "min gap = {}  (tolerance {:e})",
            sig6(g),
            problem.gap_tolerance
        )
        .unwrap(),
        None => writeln!(s, "min gap = none (single branch)").unwrap(),
    }
    for c in report.clusters().iter().filter(|c| c.len() > 1) {
        writeln!(s, "cluster of {}: branches {:?}", c.len(), c).unwrap();
    }
    if let Some(so) = second {
        match so.tail_bound {
            Some(t) => {
                writeln!(s, "resolvent cutoff = {}  tail bound = {t:.3e}", so.cutoff).unwrap()
            }
            None => writeln!(s, "resolvent cutoff = {}  tail bound = none", so.cutoff).unwrap(),
        }
    }
    writeln!(s, "verdict: {}", report.verdict().as_str()).unwrap();
    for w in warnings {
        writeln!(s, "warning: {w}").unwrap();
    }
    s
}

/// Largest `R` with `(2R + 1)^n ≤ cap`.
fn largest_cutoff(n: usize, cap: usize) -> u32 {
    let mut r = 0u32;
    while (2 * (r as usize + 1) + 1)
        .checked_pow(n as u32)
        .is_some_and(|d| d <= cap)
    {
        r += 1;
    }
    r
}

pub fn oracle(a: &OracleArgs) -> CmdResult {
    let (problem, file) = config::resolve(&a.problem)?;
    let eps = a
        .eps
        .clone()
        .or_else(|| file.eps())
        .ok_or_else(|| CliError::usage("--eps is required"))?;
    let n = problem.spec.n();
    let cutoff = a.cutoff.or(file.cutoff()).unwrap_or_else(|| {
        default_resolvent_cutoff(problem.lambda0).min(largest_cutoff(n, MAX_BASIS))
    });
    let options = ValidationOptions {
        gap_tolerance: problem.gap_tolerance,
        check_cutoff: !a.no_cutoff_check,
    };
    let report =
        galerkin::validate_first_order(&problem.spec, problem.lambda0, &eps, cutoff, &options)?;

    let rows = fan_plot_rows(&report);
    let mut plot = String::from("epsilon,branch_index,eigenvalue\n");
    for (e, i, mu) in &rows {
        writeln!(plot, "{e:e},{i},{mu:e}").unwrap();
    }
    if let Some(path) = &a.plot_data {
        std::fs::write(path, &plot)
            .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))?;
    }

    let text = match a.format {
        ReportFormat::Csv => plot,
        ReportFormat::Json => output::json(&output::OracleReport {
            schema: SCHEMA,
            potential: potential_info(&problem.spec),
            validation: &report,
        }),
        ReportFormat::Pretty => {
            let mut s = String::new();
            writeln!(
                s,
                "lambda0 = {}  n = {}  alpha = {}  cutoff = {}",
                report.lambda0,
                n,
                tuple(problem.spec.alpha()),
                report.cutoff
            )
            .unwrap();
            let first: Vec<String> = report.first_order.iter().map(|v| sig6(*v)).collect();
            writeln!(s, "first order: {}", first.join(" ")).unwrap();
            writeln!(
                s,
                "{:>10}  {:>12}  scaled cluster (mu - lambda0) / eps",
                "epsilon", "max error"
            )
            .unwrap();
            for row in &report.rows {
                let scaled: Vec<String> = row.scaled.iter().map(|v| sig6(*v)).collect();
                writeln!(
                    s,
                    "{:>10.3e}  {:>12.4e}  {}",
                    row.epsilon,
                    row.error,
                    scaled.join(" ")
                )
                .unwrap();
            }
            let ratios: Vec<String> = report
                .ratios
                .iter()
                .map(|r| r.map_or("below floor".to_string(), |v| format!("{v:.4}")))
                .collect();
            if !ratios.is_empty() {
                writeln!(s, "error ratios: {}", ratios.join(", ")).unwrap();
            }
            writeln!(
                s,
                "trend: {}",
                if report.trend_ok { "ok" } else { "FAILED" }
            )
            .unwrap();
            if let Some(c) = &report.cutoff_check {
                writeln!(
                    s,
                    "cutoff {} -> {}: max change {:.3e} ({})",
                    c.cutoff,
                    c.extended_cutoff,
                    c.max_change,
                    if c.converged {
                        "converged"
                    } else {
                        "not converged"
                    }
                )
                .unwrap();
            }
            for w in &report.warnings {
                writeln!(s, "warning: {w}").unwrap();
            }
            s
        }
    };
    emit(&text)?;
    Ok(if report.trend_ok {
        exit::OK
    } else {
        exit::ORACLE
    })
}

fn selected(which: Which) -> Result<Vec<&'static ReferenceMatrix>, CliError> {
    let name = match which {
        Which::All => return Ok(fixtures::all().iter().collect()),
        Which::A => "A",
        Which::B => "B",
        Which::C => "C",
        Which::D => "D",
        Which::E => "E",
        Which::F => "F",
        Which::G => "G",
    };
    Ok(vec![fixtures::fixture(name)?])
}

fn max_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn reference_entry(
    m: &ReferenceMatrix,
    mode: Mode,
    gap_tolerance: f64,
) -> Result<output::ReferenceEntry, CliError> {
    let spec = m.spec();
    let mut entry = output::ReferenceEntry {
        name: m.name.to_string(),
        lambda0: m.lambda0,
        potential: potential_info(&spec),
        matrix: None,
        eigenvalues: None,
        reported: None,
        max_deviation: None,
        verdict: None,
        clusters: None,
        discrepancies: None,
        missing_rows: None,
    };
    let reported = m.reported_ascending();
    match mode {
        Mode::Fixture => {
            let matrix = m.repaired();
            let values = m.fixture_eigenvalues()?;
            entry.matrix = Some(
                (0..matrix.nrows())
                    .map(|i| matrix.row(i).iter().copied().collect())
                    .collect(),
            );
            entry.max_deviation = Some(max_deviation(&values, &reported));
            entry.eigenvalues = Some(values);
            entry.reported = Some(reported);
        }
        Mode::Definition => {
            let report = perturbation::split_matrix(m.definition()?, gap_tolerance)?;
            entry.matrix = Some(report.matrix.rows());
            entry.max_deviation = Some(max_deviation(&report.corrections, &reported));
            entry.verdict = Some(report.verdict().as_str());
            entry.clusters = Some(report.clusters().to_vec());
            entry.eigenvalues = Some(report.corrections);
            entry.reported = Some(reported);
        }
        Mode::Diff => {
            let diff = m.diff()?;
            entry.discrepancies = Some(diff.discrepancies);
            entry.missing_rows = Some(diff.missing_rows);
        }
    }
    Ok(entry)
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Fixture => "fixture",
        Mode::Definition => "definition",
        Mode::Diff => "diff",
    }
}

pub fn reference(a: &ReferenceArgs) -> CmdResult {
    let matrices = selected(a.which)?;
    let entries = matrices
        .iter()
        .map(|m| reference_entry(m, a.mode, perturbation::DEFAULT_GAP_TOLERANCE))
        .collect::<Result<Vec<_>, _>>()?;

    let text = match a.format {
        ReportFormat::Json => output::json(&output::ReferenceReport {
            schema: SCHEMA,
            mode: mode_name(a.mode),
            matrices: entries,
        }),
        ReportFormat::Csv => reference_csv(&entries, a.mode),
        ReportFormat::Pretty => reference_pretty(&entries, a.mode),
    };
    emit(&text)
}

fn reference_csv(entries: &[output::ReferenceEntry], mode: Mode) -> String {
    let mut s = String::new();
    if mode == Mode::Diff {
        s.push_str("name,row,col,printed,printed_value,definition_value\n");
        for e in entries {
            for d in e.discrepancies.iter().flatten() {
                writeln!(
                    s,
                    "{},{},{},{},{:e},{:e}",
                    e.name, d.row, d.col, d.printed, d.printed_value, d.definition_value
                )
                .unwrap();
            }
        }
    } else {
        s.push_str("name,index,eigenvalue,reported\n");
        for e in entries {
            let values = e.eigenvalues.as_deref().unwrap_or_default();
            let reported = e.reported.as_deref().unwrap_or_default();
            for (i, (v, r)) in values.iter().zip(reported).enumerate() {
                writeln!(s, "{},{i},{v:e},{r:e}", e.name).unwrap();
            }
        }
    }
    s
}

fn reference_pretty(entries: &[output::ReferenceEntry], mode: Mode) -> String {
    let mut s = String::new();
    for e in entries {
        writeln!(
            s,
            "{}: lambda0 = {}  n = {}  alpha = {}  diagonal = {}",
            e.name,
            e.lambda0,
            e.potential.n,
            tuple(&e.potential.alpha),
            if e.potential.subtract_constant {
                "zero"
            } else {
                "one"
            }
        )
        .unwrap();
        if mode == Mode::Diff {
            let discrepancies = e.discrepancies.as_deref().unwrap_or_default();
            let missing = e.missing_rows.as_deref().unwrap_or_default();
            if discrepancies.is_empty() && missing.is_empty() {
                writeln!(s, "  no discrepancies").unwrap();
            }
            for d in discrepancies {
                writeln!(
                    s,
                    "  ({}, {}): printed {} = {} but definition gives {}",
                    d.row,
                    d.col,
                    d.printed,
                    sig6(d.printed_value),
                    sig6(d.definition_value)
                )
                .unwrap();
            }
            for r in missing {
                writeln!(s, "  row {r} is not printed").unwrap();
            }
            continue;
        }
        writeln!(s, "  {:>3}  {:>13}  {:>13}", "i", "computed", "reported").unwrap();
        let values = e.eigenvalues.as_deref().unwrap_or_default();
        let reported = e.reported.as_deref().unwrap_or_default();
        for (i, (v, r)) in values.iter().zip(reported).enumerate() {
            writeln!(s, "  {i:>3}  {:>13}  {:>13}", sig6(*v), sig6(*r)).unwrap();
        }
        if let Some(d) = e.max_deviation {
            writeln!(s, "  max deviation {d:.3e}").unwrap();
        }
        if let (Some(v), Some(c)) = (e.verdict, &e.clusters) {
            writeln!(s, "  verdict: {v}").unwrap();
            for c in c.iter().filter(|c| c.len() > 1) {
                writeln!(s, "  cluster of {}: {:?}", c.len(), c).unwrap();
            }
        }
    }
    s
}
