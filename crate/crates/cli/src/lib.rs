//! Command-line front end for `chebcrit`.
//!
//! Exit codes: `0` success, `1` usage or input error, `2` numerical failure
//! (non-convergence or a failed check) with all artifacts still written.

pub mod args;
pub mod config;
pub mod output;

use std::io::Write;

use anyhow::Result;
use chebcrit::pipeline::{parse_test_function, RateStudy};
use chebcrit::verify::{run_lemma_suite, SuiteConfig, CHECKS};
use chebcrit::{approximate, divergence_stats, rate_study, weakstar_demo, CheckResult, Status};
use clap::Parser;
use serde::Serialize;

use crate::args::{
    ApproximateArgs, Cli, Command, DivergenceArgs, Format, RateArgs, VerifyArgs, WeakstarArgs,
};
use crate::config::{describe_function, from_unit, load_function, parse_degrees, parse_list, Artifact, RunConfig};
use crate::output::{csv_table, json_document, Sink};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// A solve did not converge or a check failed; outputs were still written.
    NumericalFailure,
}

impl Outcome {
    pub fn code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::NumericalFailure => 2,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    match run(cli, stdout, stderr) {
        Ok(outcome) => outcome.code(),
        Err(e) if is_broken_pipe(&e) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e:#}");
            1
        }
    }
}

fn is_broken_pipe(e: &anyhow::Error) -> bool {
    e.chain()
        .filter_map(|c| c.downcast_ref::<std::io::Error>())
        .any(|io| io.kind() == std::io::ErrorKind::BrokenPipe)
}

pub fn run(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    match cli.command {
        Command::Approximate(a) => cmd_approximate(&a, stdout, stderr),
        Command::Rate(a) => cmd_rate(&a, stdout, stderr),
        Command::Verify(a) => cmd_verify(&a, stdout, stderr),
        Command::Weakstar(a) => cmd_weakstar(&a, stdout, stderr),
        Command::Divergence(a) => cmd_divergence(&a, stdout, stderr),
    }
}

fn outcome(ok: bool) -> Outcome {
    if ok {
        Outcome::Success
    } else {
        Outcome::NumericalFailure
    }
}

fn extension(format: Format) -> &'static str {
    match format {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

#[derive(Serialize)]
struct SampleRow {
    x: f64,
    f: f64,
    p: f64,
    error: f64,
}

pub fn cmd_approximate(args: &ApproximateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    let (f, interval) = load_function(&args.function)?;
    let degrees = parse_degrees(&args.degree.to_string())?;
    if args.samples < 2 {
        anyhow::bail!("--samples must be at least 2");
    }
    let mut config = RunConfig::new("approximate", &args.run, interval, degrees);
    config.function = Some(describe_function(&args.function));
    config.samples = Some(args.samples);
    let result = approximate(&f, args.degree, &config.approx_config()?)?;

    let artifact = Artifact {
        degree: result.n,
        function: config.function.clone().unwrap_or_default(),
        interval,
        cheb_coeffs: result.approximant.coeffs().to_vec(),
        derivative_roots: result
            .derivative_roots
            .roots()
            .iter()
            .map(|&t| from_unit(interval, t))
            .collect(),
        scale: result.scale_factor,
        anchor: result.anchor,
        sup_error: result.sup_error,
        converged: result.converged(),
        residual: result.solve.residual,
        iterations: result.solve.iterations,
        perturbation: result.solve.y.values().to_vec(),
        frozen_edge_groups: result.solve.frozen_edge_groups.clone(),
        config: config.clone(),
        seed: config.seed,
    };
    let rows: Vec<SampleRow> = (0..args.samples)
        .map(|i| {
            let t = -1.0 + 2.0 * i as f64 / (args.samples - 1) as f64;
            let (fx, px) = (f.eval(t), result.eval(t));
            SampleRow {
                x: from_unit(interval, t),
                f: fx,
                p: px,
                error: (px - fx).abs(),
            }
        })
        .collect();

    let mut sink = Sink::new(args.run.out.as_deref())?;
    if sink.to_dir() {
        sink.emit("approximant.json", &json_document(&artifact)?, stdout)?;
    }
    match config.format {
        Format::Csv => sink.emit("samples.csv", &csv_table(&config, &rows, &[])?, stdout)?,
        Format::Json if sink.to_dir() => sink.emit(
            "samples.json",
            &json_document(&Document { config: &config, body: SamplesBody { samples: &rows } })?,
            stdout,
        )?,
        Format::Json => sink.emit("approximant.json", &json_document(&artifact)?, stdout)?,
    }

    let check = result.critical_point_check();
    writeln!(
        stderr,
        "n={} sup_error={:.6e} (13/n={:.6e}) residual={:.3e} iterations={} converged={} frozen_groups={:?} max_matched_endpoint_residual={:.3e} critical_points={}",
        result.n,
        result.sup_error,
        13.0 / result.n as f64,
        result.solve.residual,
        result.solve.iterations,
        result.converged(),
        result.solve.frozen_edge_groups,
        result.max_matched_residual(),
        if check.passed() { "ok" } else { "FAILED" },
    )?;
    report_written(&sink, stderr)?;
    Ok(outcome(result.converged()))
}

#[derive(Serialize)]
struct SamplesBody<'a> {
    samples: &'a [SampleRow],
}

fn report_written(sink: &Sink, stderr: &mut dyn Write) -> Result<()> {
    if sink.to_dir() {
        for p in sink.written() {
            writeln!(stderr, "wrote {}", p.display())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RateCsvRow {
    n: usize,
    sup_error: f64,
    log_n: f64,
    log_error: f64,
    reference: f64,
    converged: bool,
    critical_points_ok: bool,
    max_matched_residual: f64,
}

fn gnuplot_script(study: &RateStudy) -> String {
    let mut s = String::new();
    s.push_str("# log sup error against log n with the least-squares line\n");
    s.push_str("$rate << EOD\n");
    for r in &study.rows {
        s.push_str(&format!("{} {} {}\n", r.log_n, r.log_error, (r.reference).ln()));
    }
    s.push_str("EOD\n");
    s.push_str("set xlabel \"log n\"\nset ylabel \"log sup |P - f|\"\nset key bottom left\nset grid\n");
    match &study.fit {
        Some(fit) => {
            s.push_str(&format!("a = {}\nb = {}\n", fit.slope, fit.intercept));
            s.push_str(
                "plot $rate using 1:2 with points pt 7 title \"sup error\", \\\n     a*x + b with lines title sprintf(\"fit %.4f t + %.4f\", a, b), \\\n     $rate using 1:3 with lines dt 2 title \"0.280169/n\"\n",
            );
        }
        None => s.push_str(
            "plot $rate using 1:2 with points pt 7 title \"sup error\", \\\n     $rate using 1:3 with lines dt 2 title \"0.280169/n\"\n",
        ),
    }
    s
}

pub fn cmd_rate(args: &RateArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    let (f, interval) = load_function(&args.function)?;
    let degrees = parse_degrees(&args.degrees)?;
    let mut config = RunConfig::new("rate", &args.run, interval, degrees.clone());
    config.function = Some(describe_function(&args.function));
    let study = rate_study(&f, &degrees, &config.approx_config()?)?;

    let mut trailer = Vec::new();
    if let Some(fit) = &study.fit {
        trailer.push(format!("fit_slope={}", fit.slope));
        trailer.push(format!("fit_intercept={}", fit.intercept));
    }
    if let Some(note) = &study.note {
        trailer.push(format!("note={note}"));
    }
    let mut sink = Sink::new(args.run.out.as_deref())?;
    let name = format!("rate.{}", extension(config.format));
    match config.format {
        Format::Csv => {
            let rows: Vec<RateCsvRow> = study
                .rows
                .iter()
                .map(|r| RateCsvRow {
                    n: r.n,
                    sup_error: r.sup_error,
                    log_n: r.log_n,
                    log_error: r.log_error,
                    reference: r.reference,
                    converged: r.converged,
                    critical_points_ok: r.critical_points_ok,
                    max_matched_residual: r.max_matched_residual,
                })
                .collect();
            sink.emit(&name, &csv_table(&config, &rows, &trailer)?, stdout)?;
        }
        Format::Json => sink.emit(&name, &json_document(&Document { config: &config, body: &study })?, stdout)?,
    }
    if args.gnuplot {
        sink.emit("rate.gp", &gnuplot_script(&study), stdout)?;
    }

    for r in &study.rows {
        writeln!(
            stderr,
            "n={} sup_error={:.6e} converged={} critical_points={}",
            r.n,
            r.sup_error,
            r.converged,
            if r.critical_points_ok { "ok" } else { "FAILED" }
        )?;
    }
    match &study.fit {
        Some(fit) => writeln!(stderr, "fit: log error = {:.4} log n + {:.4}", fit.slope, fit.intercept)?,
        None => writeln!(stderr, "fit: none")?,
    }
    if let Some(note) = &study.note {
        writeln!(stderr, "note: {note}")?;
    }
    report_written(&sink, stderr)?;
    Ok(outcome(study.rows.iter().all(|r| r.converged && r.critical_points_ok)))
}

#[derive(Serialize)]
struct CheckRow<'a> {
    id: &'a str,
    n: String,
    status: Status,
    observed: f64,
    bound: f64,
    seed: String,
    detail: &'a str,
}

fn check_row(c: &CheckResult) -> CheckRow<'_> {
    CheckRow {
        id: &c.id,
        n: c.n.map(|n| n.to_string()).unwrap_or_default(),
        status: c.status,
        observed: c.observed,
        bound: c.bound,
        seed: c.seed.map(|s| s.to_string()).unwrap_or_default(),
        detail: &c.detail,
    }
}

#[derive(Serialize)]
struct VerifyBody<'a> {
    suite: &'a SuiteConfig,
    results: &'a [CheckResult],
}

pub fn cmd_verify(args: &VerifyArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    if args.list {
        for (id, description) in CHECKS {
            writeln!(stdout, "{id:<24} {description}")?;
        }
        return Ok(Outcome::Success);
    }
    let n_list = parse_list::<usize>(&args.degrees, "degree")?;
    let suite = SuiteConfig {
        seed: args.seed,
        t_cap: args.t_cap,
        four_point_epsilon: args.epsilon,
        only: args.only.clone(),
        ..SuiteConfig::default()
    };
    let results = run_lemma_suite(&n_list, &suite)?;
    let config = RunConfig {
        command: "verify".into(),
        function: None,
        interval: [-1.0, 1.0],
        degrees: n_list,
        solve: chebcrit::SolveConfig {
            t_cap: args.t_cap,
            ..Default::default()
        },
        level: chebcrit::ApproxConfig::default().level,
        format: args.format,
        seed: args.seed,
        tests: None,
        thresholds: None,
        only: args.only.clone(),
        epsilon: Some(args.epsilon),
        samples: None,
    };

    let mut sink = Sink::new(args.out.as_deref())?;
    let name = format!("verify.{}", extension(config.format));
    match config.format {
        Format::Csv => {
            let rows: Vec<CheckRow> = results.iter().map(check_row).collect();
            sink.emit(&name, &csv_table(&config, &rows, &[])?, stdout)?;
        }
        Format::Json => sink.emit(
            &name,
            &json_document(&Document { config: &config, body: VerifyBody { suite: &suite, results: &results } })?,
            stdout,
        )?,
    }
    let count = |s: Status| results.iter().filter(|r| r.status == s).count();
    for r in results.iter().filter(|r| r.status == Status::Fail) {
        writeln!(
            stderr,
            "FAIL {} n={} observed={:.6e} bound={:.6e}: {}",
            r.id,
            r.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into()),
            r.observed,
            r.bound,
            r.detail
        )?;
    }
    writeln!(
        stderr,
        "checks: {} passed, {} failed, {} skipped",
        count(Status::Pass),
        count(Status::Fail),
        count(Status::Skip)
    )?;
    report_written(&sink, stderr)?;
    Ok(outcome(count(Status::Fail) == 0))
}

#[derive(Serialize)]
struct DegreeRow {
    n: usize,
    sup_ratio: f64,
    converged: bool,
}

pub fn cmd_weakstar(args: &WeakstarArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    let (f, interval) = load_function(&args.function)?;
    let degrees = parse_degrees(&args.degrees)?;
    let tokens = parse_list::<String>(&args.tests, "test function")?;
    let tests = tokens
        .iter()
        .map(|t| parse_test_function(t))
        .collect::<chebcrit::Result<Vec<_>>>()?;
    let mut config = RunConfig::new("weakstar", &args.run, interval, degrees.clone());
    config.function = Some(describe_function(&args.function));
    config.tests = Some(tokens);
    let study = weakstar_demo(&f, &degrees, &tests, &config.approx_config()?)?;

    let mut sink = Sink::new(args.run.out.as_deref())?;
    match config.format {
        Format::Csv => {
            let trailer = [format!("empirical_c={}", study.empirical_c)];
            sink.emit("weakstar.csv", &csv_table(&config, &study.rows, &trailer)?, stdout)?;
            let rows: Vec<DegreeRow> = study
                .degrees
                .iter()
                .map(|&(n, sup_ratio, converged)| DegreeRow { n, sup_ratio, converged })
                .collect();
            sink.emit("weakstar_degrees.csv", &csv_table(&config, &rows, &trailer)?, stdout)?;
        }
        Format::Json => sink.emit(
            "weakstar.json",
            &json_document(&Document { config: &config, body: &study })?,
            stdout,
        )?,
    }
    for r in &study.rows {
        writeln!(
            stderr,
            "n={} g={} pairing={:.9e} exact={:.9e} error={:.3e}",
            r.n, r.test, r.pairing, r.exact, r.error
        )?;
    }
    writeln!(stderr, "empirical sup-norm ratio C = {:.4}", study.empirical_c)?;
    for &(n, _, converged) in study.degrees.iter().filter(|d| !d.2) {
        writeln!(stderr, "warning: n={n} converged={converged}")?;
    }
    report_written(&sink, stderr)?;
    Ok(Outcome::Success)
}

pub fn cmd_divergence(args: &DivergenceArgs, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<Outcome> {
    let (f, interval) = load_function(&args.function)?;
    let degrees = parse_degrees(&args.degrees)?;
    let thresholds = parse_list::<f64>(&args.thresholds, "threshold")?;
    let mut config = RunConfig::new("divergence", &args.run, interval, degrees.clone());
    config.function = Some(describe_function(&args.function));
    config.thresholds = Some(thresholds.clone());
    let study = divergence_stats(&f, &degrees, &thresholds, &config.approx_config()?)?;

    let trailer: Vec<String> = study
        .perturbations
        .iter()
        .map(|(n, norm, converged)| format!("n={n} perturbation_norm={norm} converged={converged}"))
        .collect();
    let mut sink = Sink::new(args.run.out.as_deref())?;
    match config.format {
        Format::Csv => {
            sink.emit("divergence_levels.csv", &csv_table(&config, &study.levels, &trailer)?, stdout)?;
            sink.emit(
                "divergence_densities.csv",
                &csv_table(&config, &study.densities, &trailer)?,
                stdout,
            )?;
        }
        Format::Json => sink.emit(
            "divergence.json",
            &json_document(&Document { config: &config, body: &study })?,
            stdout,
        )?,
    }
    for r in &study.levels {
        writeln!(
            stderr,
            "n={} tau={} measure={:.6} unperturbed={:.6} limit={:.6}",
            r.n, r.tau, r.measure, r.unperturbed, r.limit
        )?;
    }
    for line in &trailer {
        writeln!(stderr, "{line}")?;
    }
    report_written(&sink, stderr)?;
    Ok(Outcome::Success)
}
