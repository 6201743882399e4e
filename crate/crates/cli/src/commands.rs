use std::fs;
use std::io::Write;
use std::path::Path;

use serde_json::json;

use ctf_core::bounds::{analytic_bounds, optimal_bounds, oracle_inner_bounds, BoundOptions, BoundResult, BoundsError};
use ctf_core::consistency::{
    check_ctf_consistency, empirical_from_csv, proxy_conditional, proxy_markovian, proxy_preserve, CellBound,
    ConsistencyError, ProxyLog,
};
use ctf_core::datasets::{builtin, builtin_names, export, sample_labels, write_labels_csv, DatasetError};
use ctf_core::dsl::{parse_model, parse_query, render_errors};
use ctf_core::engine::{compare_models, conditional_ctf, observational, CtfQuery, Distribution};
use ctf_core::model::{CausalDiagram, Intervention};
use ctf_core::scalar::{format_human, format_ratio, format_sig6, parse_rational};
use ctf_core::{ExactScm, Rational, Scalar};

use crate::{BoundMethod, Cli, CliError, Command, ModelSource, ProxyKind};

type Result<T> = std::result::Result<T, CliError>;

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn load_file(path: &Path) -> Result<ExactScm> {
    let text = read_text(path)?;
    parse_model(&text).map_err(|errs| CliError::data(format!("{}:\n{}", path.display(), render_errors(&errs))))
}

fn dataset_error(e: DatasetError) -> CliError {
    match e {
        DatasetError::Io { .. } => CliError::io(e),
        DatasetError::Csv { ref source, .. } if source.is_io_error() => CliError::io(e),
        DatasetError::UnknownModel(_) => CliError::usage(format!("{e}; see `ctf models`")),
        e => CliError::data(e),
    }
}

fn consistency_error(e: ConsistencyError) -> CliError {
    match e {
        ConsistencyError::Io { .. } => CliError::io(e),
        ConsistencyError::Csv { ref source, .. } if source.is_io_error() => CliError::io(e),
        e => CliError::data(e),
    }
}

/// Model plus the diagram it comes with (built-in diagram or induced).
fn load(source: &ModelSource) -> Result<(ExactScm, CausalDiagram)> {
    match (&source.model, &source.builtin) {
        (Some(path), _) => {
            let scm = load_file(path)?;
            let g = scm.induce_diagram();
            Ok((scm, g))
        }
        (None, Some(name)) => {
            let m = builtin(name).map_err(dataset_error)?;
            Ok((m.scm, m.diagram))
        }
        (None, None) => Err(CliError::usage("give a model file with -m or a built-in with --builtin")),
    }
}

/// A file path, or a built-in name when no such file exists.
fn load_named(spec: &str) -> Result<ExactScm> {
    let path = Path::new(spec);
    if !path.exists() && builtin_names().contains(&spec) {
        return Ok(builtin(spec).map_err(dataset_error)?.scm);
    }
    load_file(path)
}

fn diagram_or(text: &Option<String>, default: CausalDiagram) -> Result<CausalDiagram> {
    match text {
        Some(t) => CausalDiagram::parse(t).map_err(|e| CliError::data(format!("diagram: {e}"))),
        None => Ok(default),
    }
}

fn query(text: &str) -> Result<CtfQuery> {
    parse_query(text).map_err(|e| CliError::data(format!("query: {e}")))
}

fn intervention(text: &str) -> Result<Intervention> {
    let mut pairs = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| CliError::usage(format!("expected X=x, got `{part}`")))?;
        let v: i64 = v.trim().parse().map_err(|_| CliError::usage(format!("`{v}` is not an integer")))?;
        pairs.push((k.trim().to_string(), v));
    }
    if pairs.is_empty() {
        return Err(CliError::usage("empty intervention"));
    }
    Ok(Intervention::from_pairs(pairs))
}

fn tolerance(name: &str, text: &str) -> Result<Rational> {
    let r = parse_rational(text).map_err(|e| CliError::usage(format!("--{name}: {e}")))?;
    if r < Rational::from_int(0) {
        return Err(CliError::usage(format!("--{name} must be non-negative")));
    }
    Ok(r)
}

fn reference_obs(scm: &ExactScm, csv: &Option<std::path::PathBuf>) -> Result<Distribution<Rational>> {
    match csv {
        Some(path) => empirical_from_csv(path).map_err(consistency_error),
        None => observational(scm, &scm.variable_names()).map_err(CliError::data),
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("values serialize"));
}

pub fn run(cli: Cli) -> Result<u8> {
    let json = cli.json;
    match cli.command {
        Command::Validate { file, builtin: name } => validate(file.as_deref(), name.as_deref(), json),
        Command::Query { source, query: q } => {
            let (scm, _) = load(&source)?;
            let q = query(&q)?;
            let v = conditional_ctf(&scm, &q).map_err(CliError::data)?;
            if json {
                print_json(&json!({
                    "query": q.to_string(),
                    "value": format_ratio(&v),
                    "decimal": v.to_f64_lossy(),
                }));
            } else {
                println!("{}", format_human(&v));
            }
            Ok(0)
        }
        Command::Bounds { source, query: q, diagram, obs, care, method, oracle, seed, no_project, starts } => {
            let (scm, g) = load(&source)?;
            let g = diagram_or(&diagram, g)?;
            let q = query(&q)?;
            if !care.is_empty() {
                let outside: Vec<&String> = q
                    .events
                    .iter()
                    .map(|e| &e.variable)
                    .chain(q.conditioning.iter().map(|(v, _)| v))
                    .filter(|v| !care.contains(v))
                    .collect();
                if let Some(v) = outside.first() {
                    return Err(CliError::usage(format!("query mentions `{v}`, which is not in the care set")));
                }
            }
            let p = reference_obs(&scm, &obs)?;
            let opts = BoundOptions { project: !no_project, starts, seed, ..BoundOptions::default() };
            let result = match method {
                BoundMethod::Analytic => analytic_bounds(&p, &g, &q),
                BoundMethod::Lp => optimal_bounds(&p, &g, &q, &opts),
                BoundMethod::Auto => match analytic_bounds(&p, &g, &q) {
                    Err(BoundsError::PatternMismatch(_)) => optimal_bounds(&p, &g, &q, &opts),
                    other => other,
                },
            }
            .map_err(CliError::data)?;
            let inner = match oracle {
                Some(n) => Some(oracle_inner_bounds(&p, &g, &q, n, seed).map_err(CliError::data)?),
                None => None,
            };
            print_bounds(&result, inner, &care, json);
            Ok(0)
        }
        Command::Compare { m1, m2, query: qs } => {
            let (a, b) = (load_named(&m1)?, load_named(&m2)?);
            let qs = qs.iter().map(|q| query(q)).collect::<Result<Vec<_>>>()?;
            let r = compare_models(&a, &b, &qs).map_err(CliError::data)?;
            if json {
                print_json(&r.to_json());
            } else {
                println!("observational distributions equal: {}", r.observational_equal);
                println!("induced diagrams equal: {}", r.diagrams_equal);
                println!("  {}: {}", a.name(), r.diagrams.0);
                println!("  {}: {}", b.name(), r.diagrams.1);
                for (q, x, y) in &r.queries {
                    println!("{q}: {} vs {}", format_human(x), format_human(y));
                }
                if r.witnesses_non_identifiability() {
                    println!("same observations, different counterfactuals: the queries are not identifiable");
                }
            }
            Ok(0)
        }
        Command::Sample { source, n, seed, output, proxy, intervention: x, diagram } => {
            let (scm, g) = load(&source)?;
            match proxy {
                None => {
                    let rows = sample_labels(&scm, n, seed);
                    let path = output.ok_or_else(|| CliError::usage("label sampling needs an output file (-o)"))?;
                    write_labels_csv(&scm, &rows, &path).map_err(dataset_error)?;
                    if json {
                        print_json(&json!({"output": path.display().to_string(), "records": n}));
                    }
                }
                Some(kind) => {
                    let x = intervention(x.as_deref().unwrap_or_default())?;
                    let p = observational(&scm, &scm.variable_names()).map_err(CliError::data)?;
                    let log = match kind {
                        ProxyKind::Conditional => proxy_conditional(&p, &x, n, seed),
                        ProxyKind::Preserve => proxy_preserve(&p, &x, n, seed),
                        ProxyKind::Markovian => {
                            let g = diagram_or(&diagram, g)?;
                            proxy_markovian(&p, &g, &x, n, seed).map(|(log, fit)| {
                                eprintln!("markovian fit: TV to the model's distribution = {}", format_human(&fit.tv));
                                for (v, ctx) in &fit.filled {
                                    eprintln!("  filled uniformly: P({v} | {ctx:?})");
                                }
                                log
                            })
                        }
                    }
                    .map_err(consistency_error)?;
                    write_output(output.as_deref(), &log.to_jsonl())?;
                }
            }
            Ok(0)
        }
        Command::Gen { builtin: name, n, seed, output } => {
            let m = builtin(&name).map_err(dataset_error)?;
            let rows = sample_labels(&m.scm, n, seed);
            let manifest = export(&m, &rows, &output).map_err(dataset_error)?;
            if json {
                print_json(&json!({"manifest": manifest.display().to_string(), "records": n, "images": m.renders}));
            } else {
                let what = if m.renders { "images and labels" } else { "labels" };
                println!("wrote {n} {what} to {}", manifest.display());
            }
            Ok(0)
        }
        Command::Check { log, source, obs, diagram, care, eps, delta } => {
            let (scm, g) = load(&source)?;
            let g = diagram_or(&diagram, g)?;
            let p = reference_obs(&scm, &obs)?;
            let care = if care.is_empty() { p.variables().to_vec() } else { care };
            let (eps, delta) = (tolerance("eps", &eps)?, tolerance("delta", &delta)?);
            let log = ProxyLog::read(&log).map_err(consistency_error)?;
            let report = check_ctf_consistency(&p, &log, &g, &care, &eps, &delta).map_err(consistency_error)?;
            if json {
                print_json(&report.to_json());
            } else {
                println!("verdict: {}", report.verdict);
                println!(
                    "observational fit: TV = {} (tolerance {}) {}",
                    format_human(&report.tv),
                    format_human(&report.epsilon),
                    if report.obs_fit { "ok" } else { "FAILED" }
                );
                for c in &report.cells {
                    let mark = match c.in_bound {
                        Some(true) => "ok",
                        Some(false) => "OUT",
                        None => "??",
                    };
                    let bound = match &c.bound {
                        CellBound::Computed { lower, upper, certified, method } => format!(
                            "[{}, {}] {method}{}",
                            format_sig6(lower.to_f64_lossy()),
                            format_sig6(upper.to_f64_lossy()),
                            if *certified { "" } else { ", uncertified" }
                        ),
                        CellBound::Failed(e) => format!("unavailable: {e}"),
                    };
                    println!(
                        "  {mark:>3} {:?} -> {:?}: {} ({}/{}) in {bound}",
                        c.factual,
                        c.counterfactual,
                        format_sig6(c.empirical.to_f64_lossy()),
                        c.count,
                        c.factual_count
                    );
                }
                for w in &report.unobserved {
                    println!("  not in log: {w:?}");
                }
            }
            Ok(report.verdict.exit_code() as u8)
        }
        Command::Models => {
            let mut rows = Vec::new();
            for name in builtin_names() {
                let m = builtin(name).map_err(CliError::internal)?;
                rows.push((name, m));
            }
            if json {
                let v: Vec<_> = rows
                    .iter()
                    .map(|(n, m)| json!({"name": n, "description": m.description, "diagram": m.diagram.to_string(), "images": m.renders}))
                    .collect();
                print_json(&json!(v));
            } else {
                for (n, m) in &rows {
                    println!("{n:<14} {}", m.description);
                    println!("{:<14} diagram: {}", "", m.diagram);
                }
            }
            Ok(0)
        }
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(CliError::io),
    }
}

fn validate(file: Option<&Path>, name: Option<&str>, json: bool) -> Result<u8> {
    let (label, parsed) = match (file, name) {
        (Some(path), _) => (path.display().to_string(), parse_model(&read_text(path)?)),
        (None, Some(n)) => {
            let m = builtin(n).map_err(dataset_error)?;
            (n.to_string(), parse_model(m.source))
        }
        (None, None) => return Err(CliError::usage("give a model file or --builtin NAME")),
    };
    match parsed {
        Ok(scm) => {
            let g = scm.induce_diagram();
            if json {
                print_json(&json!({
                    "valid": true,
                    "model": scm.name(),
                    "exogenous": scm.exogenous().iter().map(|f| f.name.clone()).collect::<Vec<_>>(),
                    "endogenous": scm.variable_names(),
                    "atoms": scm.atom_count(),
                    "diagram": g.to_string(),
                }));
            } else {
                println!(
                    "{label}: ok, model `{}` with {} exogenous factors, {} variables, {} exogenous atoms",
                    scm.name(),
                    scm.exogenous().len(),
                    scm.endogenous().len(),
                    scm.atom_count()
                );
                println!("induced diagram: {g}");
            }
            Ok(0)
        }
        Err(errs) => {
            if json {
                let list: Vec<_> = errs
                    .iter()
                    .map(|e| json!({"line": e.span.line, "column": e.span.column, "message": e.message, "expected": e.expected}))
                    .collect();
                print_json(&json!({"valid": false, "errors": list}));
                Err(CliError::data(format!("{label}: invalid model")))
            } else {
                Err(CliError::data(format!("{label}:\n{}", render_errors(&errs))))
            }
        }
    }
}

fn print_bounds(r: &BoundResult, oracle: Option<(f64, f64)>, care: &[String], json: bool) {
    if json {
        let mut v = r.to_json();
        if let Some((lo, hi)) = oracle {
            v["oracle"] = json!([lo, hi]);
        }
        if !care.is_empty() {
            v["care_set"] = json!(care);
        }
        print_json(&v);
        return;
    }
    println!("{}", r.query);
    println!("lower: {}", format_human(&r.lower));
    println!("upper: {}", format_human(&r.upper));
    println!("method: {}, {}", r.method, if r.certified { "certified" } else { "not certified (inner estimate)" });
    if let Some((lo, hi)) = oracle {
        println!("oracle inner bounds: [{}, {}]", format_sig6(lo), format_sig6(hi));
    }
}
