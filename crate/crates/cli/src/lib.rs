//! `slogistic`: command-line front end for the stochastic logistic map
//! experiments.

pub mod args;
pub mod config;
pub mod error;
pub mod render;

use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use logistic_rds::analytic::{classify_regime, cycle_mean};
use logistic_rds::experiments::{
    self, comparison_preconditions, distribution_evolution, flipflop_preconditions, flipflop_sweep,
    lemma_preconditions, lemma_suite, run_comparison, sign_stability, ComparisonConfig, LambdaGrid,
    LemmaConfig, Scale, Snapshot, BIFURCATION_INITIALS, BIFURCATION_ITERATIONS, BIFURCATION_STEP,
    DEFAULT_H_VALUES, EVOLUTION_CHECKPOINTS, EVOLUTION_PARTICLES, LEMMA_PARTICLES,
};
use logistic_rds::measure::{McConfig, DEFAULT_BINS, MIN_CONVERGED_GENERATIONS};
use logistic_rds::{Error, Histogram, ParameterDistribution, DEFAULT_SEED};
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{
    BifurcationArgs, Cli, Command, Common, CompareArgs, EvolveArgs, FlipflopArgs, Format, Kind,
    ScaleArg, VerifyArgs, OUT_DIR_ENV,
};
use crate::config::{load_config, Resolver};
use crate::error::{precondition, CliError};
use crate::render::{bifurcation_markers, render_svg, Marker, Plot, Style};

/// Parses `argv`, runs the subcommand and returns the exit status.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("slogistic: {}", first.trim_start_matches("error: "));
            return 2;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("slogistic: error: {}", e.to_string().replace('\n', " "));
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Bifurcation(a) => bifurcation(a),
        Command::Evolve(a) => evolve(a),
        Command::Compare(a) => compare(a),
        Command::Verify(a) => verify(a),
        Command::Flipflop(a) => flipflop(a),
    }
}

/// Seed, output directory and formats after merging flags, file and defaults.
struct Output {
    seed: u64,
    dir: PathBuf,
    formats: Vec<Format>,
}

fn resolver(common: &Common) -> Result<Resolver, CliError> {
    let file = common.config.as_deref().map(load_config).transpose()?;
    Ok(Resolver::new(file))
}

fn output(
    r: &mut Resolver,
    common: &Common,
    default_formats: &[Format],
) -> Result<Output, CliError> {
    let seed = r.value("seed", common.seed, DEFAULT_SEED)?;
    let dir = r
        .optional("out_dir", common.out_dir.clone())?
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let mut formats = r.choices("format", common.format.clone(), default_formats.to_vec())?;
    formats.dedup();
    Ok(Output { seed, dir, formats })
}

/// Creates the directory if needed and proves it writable.
fn check_out_dir(dir: &Path) -> Result<(), CliError> {
    let unwritable = |e: std::io::Error| {
        CliError::Usage(format!(
            "output directory {} is not writable: {e}",
            dir.display()
        ))
    };
    fs::create_dir_all(dir).map_err(unwritable)?;
    let probe = dir.join(format!(".slogistic-probe-{}", std::process::id()));
    fs::write(&probe, b"").map_err(unwritable)?;
    fs::remove_file(&probe).map_err(unwritable)
}

fn violated(check: &'static str, source: Error) -> CliError {
    CliError::Precondition { check, source }
}

fn artifact_stem(subcommand: &str, lambda_bar: &str, delta: &str, seed: u64) -> String {
    format!("{subcommand}-{lambda_bar}-{delta}-{seed}")
}

fn write_artifact(
    out: &Output,
    stem: &str,
    format: Format,
    bytes: &[u8],
) -> Result<String, CliError> {
    let path = out.dir.join(format!("{stem}.{}", format.ext()));
    fs::write(&path, bytes)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path.display().to_string())
}

fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("reports serialize");
    bytes.push(b'\n');
    bytes
}

fn print_json(value: &Value) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(&to_json(value))?;
    Ok(())
}

fn svg_bytes(plot: Plot<'_>, style: &Style) -> Result<Vec<u8>, CliError> {
    render_svg(plot, style)
        .map(String::into_bytes)
        .map_err(|e| CliError::Runtime(e.to_string()))
}

fn comparison_config(
    r: &mut Resolver,
    scale: Option<ScaleArg>,
    particles: Option<usize>,
    generations: Option<u64>,
    window: Option<u64>,
    seed: u64,
) -> Result<ComparisonConfig, CliError> {
    let scale = match r.choice("scale", scale, ScaleArg::Desk)? {
        ScaleArg::Desk => Scale::Desk,
        ScaleArg::Paper => Scale::Paper,
    };
    let base = ComparisonConfig::for_scale(scale, seed);
    Ok(ComparisonConfig {
        particles: r.value("particles", particles, base.particles)?,
        generations: r.value("generations", generations, base.generations)?,
        window: r.value("window", window, base.window)?,
        seed,
    })
}

/// Deterministic reference drawn on histograms, when the window sits in a
/// periodic regime.
fn cycle_marker(dist: &ParameterDistribution) -> Option<Marker> {
    let period = classify_regime(dist.lower(), dist.upper()).ok()?.period()?;
    let mean = cycle_mean(dist.lambda_bar(), period).ok()?;
    let label = match period {
        1 => "x*(λ̄)".to_string(),
        2 => "(λ̄+1)/(2λ̄)".to_string(),
        k => format!("period-{k} cycle mean"),
    };
    Some(Marker {
        x: mean,
        label,
        color: "#e76f51",
    })
}

fn mean_marker(mean: f64) -> Marker {
    Marker {
        x: mean,
        label: "stochastic mean".into(),
        color: "#1d3557",
    }
}

fn bifurcation(a: BifurcationArgs) -> Result<(), CliError> {
    let mut r = resolver(&a.common)?;
    let kind = r.choice("kind", a.kind, Kind::Deterministic)?;
    let from = r.value("from", a.from, 0.0)?;
    let to = r.value("to", a.to, 4.0)?;
    let step = r.value("step", a.step, BIFURCATION_STEP)?;
    let delta = r.value("delta", a.delta, 0.1)?;
    let initials = r.value("initials", a.initials, BIFURCATION_INITIALS)?;
    let iterations = r.value("iterations", a.iterations, BIFURCATION_ITERATIONS)?;
    let out = output(&mut r, &a.common, &[Format::Csv])?;
    r.finish("bifurcation")?;

    let grid = LambdaGrid::new(from, to, step)
        .map_err(precondition("grid: finite, from <= to, step > 0"))?;
    if initials == 0 {
        return Err(violated(
            "at least one initial state per column",
            Error::Size("--initials must be >= 1".into()),
        ));
    }
    let delta = match kind {
        Kind::Deterministic => {
            if from < 0.0 || to > 4.0 {
                return Err(violated(
                    "grid inside [0, 4]",
                    Error::Domain(format!("grid [{from}, {to}] leaves [0, 4]")),
                ));
            }
            0.0
        }
        Kind::Stochastic => {
            let check = "every window [λ̄ - Δλ, λ̄ + Δλ] inside [0, 4]";
            ParameterDistribution::uniform(from, delta).map_err(precondition(check))?;
            ParameterDistribution::uniform(to, delta).map_err(precondition(check))?;
            delta
        }
    };
    check_out_dir(&out.dir)?;

    let data = match kind {
        Kind::Deterministic => {
            experiments::deterministic_bifurcation(grid, initials, iterations, out.seed)?
        }
        Kind::Stochastic => {
            experiments::stochastic_bifurcation(grid, delta, initials, iterations, out.seed)?
        }
    };
    let stem = artifact_stem(
        "bifurcation",
        &format!("{from}_{to}"),
        &delta.to_string(),
        out.seed,
    );
    let mut artifacts = Vec::new();
    for &f in &out.formats {
        let bytes = match f {
            Format::Csv => {
                let mut buf = Vec::new();
                data.write_csv(&mut buf)?;
                buf
            }
            Format::Json => to_json(&data),
            Format::Svg => {
                let title = match kind {
                    Kind::Deterministic => "Deterministic bifurcation diagram".to_string(),
                    Kind::Stochastic => format!("Stochastic bifurcation diagram, Δλ = {delta}"),
                };
                let style = Style {
                    title,
                    x_label: "λ̄".into(),
                    y_label: format!("x after {iterations} iterations"),
                    markers: bifurcation_markers(),
                };
                svg_bytes(Plot::Bifurcation(&data), &style)?
            }
        };
        artifacts.push(write_artifact(&out, &stem, f, &bytes)?);
    }
    print_json(&json!({
        "kind": data.kind,
        "grid": data.grid,
        "delta_lambda": data.delta_lambda,
        "initials": initials,
        "iterations": iterations,
        "seed": out.seed,
        "columns": data.rows.len(),
        "artifacts": artifacts,
    }))
}

fn evolution_csv(snaps: &[Snapshot]) -> Vec<u8> {
    let mut out = String::from("generation,bin_lo,bin_hi,count,density\n");
    for s in snaps {
        let h: &Histogram = &s.histogram;
        for i in 0..h.bins() {
            let (lo, hi) = h.bin(i);
            out.push_str(&format!(
                "{},{lo:?},{hi:?},{},{:?}\n",
                s.generation,
                h.counts()[i],
                h.density(i)
            ));
        }
    }
    out.into_bytes()
}

fn evolve(a: EvolveArgs) -> Result<(), CliError> {
    let mut r = resolver(&a.common)?;
    let lambda_bar = r.value("lambda_bar", a.lambda_bar, 1.508)?;
    let delta = r.value("delta", a.delta, 0.024)?;
    let particles = r.value("particles", a.particles, EVOLUTION_PARTICLES)?;
    let checkpoints = r.list("checkpoints", a.checkpoints, EVOLUTION_CHECKPOINTS.to_vec())?;
    let bins = r.value("bins", a.bins, DEFAULT_BINS)?;
    let out = output(&mut r, &a.common, &[Format::Csv])?;
    r.finish("evolve")?;

    let dist = ParameterDistribution::uniform(lambda_bar, delta).map_err(precondition(
        "parameter law: Δλ >= 0 and [λ̄ - Δλ, λ̄ + Δλ] inside [0, 4]",
    ))?;
    if particles == 0 || bins == 0 {
        return Err(violated(
            "at least one particle and one bin",
            Error::Size(format!("got {particles} particles, {bins} bins")),
        ));
    }
    if checkpoints.is_empty() || checkpoints.windows(2).any(|w| w[1] <= w[0]) {
        return Err(violated(
            "checkpoints non-empty and strictly ascending",
            Error::Domain(format!("got {checkpoints:?}")),
        ));
    }
    check_out_dir(&out.dir)?;

    let snaps = distribution_evolution(&dist, particles, &checkpoints, bins, out.seed)?;
    let stem = artifact_stem(
        "evolve",
        &lambda_bar.to_string(),
        &delta.to_string(),
        out.seed,
    );
    let last = snaps.last().expect("checkpoints are non-empty");
    let mut artifacts = Vec::new();
    for &f in &out.formats {
        let bytes = match f {
            Format::Csv => evolution_csv(&snaps),
            Format::Json => to_json(&json!({
                "lambda_bar": lambda_bar,
                "delta_lambda": delta,
                "particles": particles,
                "seed": out.seed,
                "snapshots": snaps,
            })),
            Format::Svg => {
                let mut markers = vec![mean_marker(last.moments.mean)];
                markers.extend(cycle_marker(&dist));
                let style = Style {
                    title: format!(
                        "λ̄ = {lambda_bar}, Δλ = {delta}, generation {} ({particles} particles)",
                        last.generation
                    ),
                    x_label: "x".into(),
                    y_label: "density".into(),
                    markers,
                };
                svg_bytes(Plot::Histogram(&last.histogram), &style)?
            }
        };
        artifacts.push(write_artifact(&out, &stem, f, &bytes)?);
    }
    let summary: Vec<Value> = snaps
        .iter()
        .map(|s| json!({"generation": s.generation, "moments": s.moments}))
        .collect();
    print_json(&json!({
        "lambda_bar": lambda_bar,
        "delta_lambda": delta,
        "particles": particles,
        "seed": out.seed,
        "snapshots": summary,
        "artifacts": artifacts,
    }))
}

fn compare(a: CompareArgs) -> Result<(), CliError> {
    let mut r = resolver(&a.common)?;
    let lambda_bar = r.value("lambda_bar", a.lambda_bar, 3.208)?;
    let delta = r.value("delta", a.delta, 0.024)?;
    let out = output(&mut r, &a.common, &[Format::Json])?;
    let cfg = comparison_config(
        &mut r,
        a.scale,
        a.particles,
        a.generations,
        a.window,
        out.seed,
    )?;
    r.finish("compare")?;

    let (dist, _, _) = comparison_preconditions(lambda_bar, delta, &cfg).map_err(precondition(
        "window strictly inside one periodic regime, particles >= 1, window a multiple of the period and <= generations",
    ))?;
    check_out_dir(&out.dir)?;

    let (report, ensemble) = run_comparison(lambda_bar, delta, &cfg)?;
    let stem = artifact_stem(
        "compare",
        &lambda_bar.to_string(),
        &delta.to_string(),
        out.seed,
    );
    for &f in &out.formats {
        let bytes = match f {
            Format::Json => to_json(&report),
            Format::Csv => {
                let mut buf = Vec::new();
                ensemble.write_csv(&mut buf)?;
                buf
            }
            Format::Svg => {
                let h = Histogram::from_samples(DEFAULT_BINS, ensemble.particles())?;
                let mut markers = vec![mean_marker(report.stochastic_mean)];
                markers.extend(cycle_marker(&dist));
                let style = Style {
                    title: format!(
                        "λ̄ = {lambda_bar}, Δλ = {delta}, generation {} ({} particles)",
                        ensemble.generation(),
                        ensemble.len()
                    ),
                    x_label: "x".into(),
                    y_label: "density".into(),
                    markers,
                };
                svg_bytes(Plot::Histogram(&h), &style)?
            }
        };
        write_artifact(&out, &stem, f, &bytes)?;
    }
    print_json(&serde_json::to_value(&report).expect("reports serialize"))
}

fn verify(a: VerifyArgs) -> Result<(), CliError> {
    let mut r = resolver(&a.common)?;
    let lambda_bar = r.value("lambda_bar", a.lambda_bar, 3.208)?;
    let delta = r.value("delta", a.delta, 0.024)?;
    let particles = r.value("particles", a.particles, LEMMA_PARTICLES)?;
    let generations = r.value("generations", a.generations, MIN_CONVERGED_GENERATIONS)?;
    let h_values = r.list("h_values", a.h_values, DEFAULT_H_VALUES.to_vec())?;
    let epsilon = r.value("epsilon", a.epsilon, 1e-6)?;
    let out = output(&mut r, &a.common, &[Format::Json])?;
    r.finish("verify")?;

    let cfg = LemmaConfig {
        mc: McConfig {
            particles,
            generations,
            seed: out.seed,
            ..McConfig::default()
        },
        h_values,
        epsilon,
    };
    lemma_preconditions(lambda_bar, delta, &cfg).map_err(precondition(
        "window inside (3, 1+√6), particles >= 1, epsilon >= 0, at least two decreasing half-widths in the regime",
    ))?;
    check_out_dir(&out.dir)?;

    let report = lemma_suite(lambda_bar, delta, &cfg)?;
    let mut value = serde_json::to_value(&report).expect("reports serialize");
    value["all_passed"] = Value::Bool(report.all_passed());
    let stem = artifact_stem(
        "verify",
        &lambda_bar.to_string(),
        &delta.to_string(),
        out.seed,
    );
    for &f in &out.formats {
        let bytes = match f {
            Format::Json => to_json(&value),
            Format::Csv => {
                let mut s = String::from("check,passed\n");
                for (name, passed) in report.summary() {
                    s.push_str(&format!("{name},{passed}\n"));
                }
                s.into_bytes()
            }
            Format::Svg => {
                let iv = report.support.intervals;
                let dist = ParameterDistribution::uniform(lambda_bar, delta)?;
                let e = logistic_rds::measure::converged_ensemble(&dist, &cfg.mc)?;
                let h = Histogram::from_samples(DEFAULT_BINS, e.particles())?;
                let edge = |x: f64, label: &str| Marker {
                    x,
                    label: label.to_string(),
                    color: "#2a9d8f",
                };
                let style = Style {
                    title: format!(
                        "Support of the invariant measure, λ̄ = {lambda_bar}, Δλ = {delta}"
                    ),
                    x_label: "x".into(),
                    y_label: "density".into(),
                    markers: vec![
                        edge(iv.p_lo, "x_p,min"),
                        edge(iv.p_hi, "x_p,max"),
                        edge(iv.q_lo, "x_q,min"),
                        edge(iv.q_hi, "x_q,max"),
                    ],
                };
                svg_bytes(Plot::Histogram(&h), &style)?
            }
        };
        write_artifact(&out, &stem, f, &bytes)?;
    }
    print_json(&value)
}

fn flipflop(a: FlipflopArgs) -> Result<(), CliError> {
    let mut r = resolver(&a.common)?;
    let rho = r.list("rho", a.rho, vec![1, 2, 3])?;
    let deltas = r.list("delta", a.delta, vec![0.024])?;
    let out = output(&mut r, &a.common, &[Format::Json])?;
    let cfg = comparison_config(
        &mut r,
        a.scale,
        a.particles,
        a.generations,
        a.window,
        out.seed,
    )?;
    r.finish("flipflop")?;

    if out.formats.contains(&Format::Svg) {
        return Err(violated(
            "formats supported by flipflop: csv, json",
            Error::Domain("flipflop has no figure".into()),
        ));
    }
    flipflop_preconditions(&rho, &deltas, &cfg).map_err(precondition(
        "rho in 0..=6, half-widths > 0, particles >= 1, 2^max(rho) <= window <= generations",
    ))?;
    check_out_dir(&out.dir)?;

    let rows = flipflop_sweep(&rho, &deltas, &cfg)?;
    let stability: Vec<Value> = sign_stability(&rows)
        .into_iter()
        .map(|(rho, stable)| json!({"rho": rho, "stable": stable}))
        .collect();
    let value = json!({
        "particles": cfg.particles,
        "generations": cfg.generations,
        "window": cfg.window,
        "seed": cfg.seed,
        "rows": rows,
        "sign_stability": stability,
    });
    let join = |items: Vec<String>| items.join("_");
    let stem = artifact_stem(
        "flipflop",
        &join(rho.iter().map(|r| format!("rho{r}")).collect()),
        &join(deltas.iter().map(|d| d.to_string()).collect()),
        out.seed,
    );
    for &f in &out.formats {
        let bytes = match f {
            Format::Json => to_json(&value),
            Format::Csv => {
                let mut s = String::from(
                    "delta_lambda,rho,period,lambda_bar,deterministic_mean,stochastic_mean,stochastic_se,\
                     difference,z_score,sign,conjectured_sign,exploratory\n",
                );
                for row in &rows {
                    s.push_str(&format!(
                        "{:?},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{},{},{}\n",
                        row.delta_lambda,
                        row.rho,
                        row.period,
                        row.lambda_bar,
                        row.deterministic_mean,
                        row.stochastic_mean,
                        row.stochastic_se,
                        row.difference,
                        row.z_score,
                        row.sign,
                        row.conjectured_sign,
                        row.exploratory
                    ));
                }
                s.into_bytes()
            }
            Format::Svg => unreachable!("rejected before computing"),
        };
        write_artifact(&out, &stem, f, &bytes)?;
    }
    print_json(&value)
}
