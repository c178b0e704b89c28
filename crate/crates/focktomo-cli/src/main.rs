//! Command-line front end: scenario simulation, trace-pipeline processing,
//! tomography, reporting and the self-check suite.
//!
//! Exit codes: 0 success, 2 domain error (including unheraldable scenarios
//! and self-test failures), 3 input/parse error. Every JSON written embeds
//! the resolved configuration and seed.

use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};
use focktomo::analysis::{
    bootstrap_multi, refine_radial_minimum, wigner_grid, wigner_point, Statistic,
};
use focktomo::error::{Error, Result};
use focktomo::fock::{DensityMatrix, FockCutoff};
use focktomo::herald::{conditional_signal_state, HeraldScenario};
use focktomo::homodyne::{
    quadrature_csv_string, read_quadrature_csv, sample_quadratures, PhasePolicy,
};
use focktomo::pipeline::{
    calibrate_shot_noise, classify_pnr, extract_quadratures, read_events_jsonl, HeraldFilter,
    ShotNoiseCalibration, ThresholdConfig,
};
use focktomo::tomography::{mle_reconstruct, MleConfig};

#[derive(Parser)]
#[command(name = "focktomo", version, about = "Heralded Fock-state simulation and homodyne tomography toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate heralded homodyne data from a scenario config.
    Simulate {
        /// Scenario JSON: {"r", "eta_i", "eta_s", "herald_n", "n_max", "label"?}.
        #[arg(long)]
        config: PathBuf,
        /// Number of quadrature records.
        #[arg(long, default_value_t = 10_000)]
        count: usize,
        /// Fixed LO phase in radians; omitted = uniform-random per record.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Classify, veto and extract quadratures from a trace-event file.
    Pipeline {
        /// JSON-lines trace events, one trigger per line.
        #[arg(long)]
        events: PathBuf,
        /// Thresholds JSON: {"v1", "v2"} in volts.
        #[arg(long)]
        config: PathBuf,
        /// Calibration JSON {"mean_v", "sigma_v"}; exclusive with --cal-self.
        #[arg(long, conflicts_with = "cal_self")]
        cal_file: Option<PathBuf>,
        /// Calibrate from the corpus's own zero-class slots.
        #[arg(long)]
        cal_self: bool,
        /// Afterpulse veto lookback in slots.
        #[arg(long, default_value_t = 2)]
        window: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Maximum-likelihood reconstruction from a quadrature CSV.
    Tomo {
        #[arg(long)]
        csv: PathBuf,
        /// Fock cutoff n_max of the reconstruction.
        #[arg(long)]
        cutoff: usize,
        #[arg(long, default_value_t = 2000)]
        max_iters: usize,
        /// Per-sample log-likelihood stopping tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Keep phase-dependent projectors (default is phase-insensitive).
        #[arg(long)]
        full_phase: bool,
        /// Optional quadrature bin width.
        #[arg(long)]
        bin_width: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Photon-number table, Wigner grid and optional bootstrap errors.
    Report {
        /// Density-matrix JSON ({"dim", "re", "im"}).
        #[arg(long)]
        rho: PathBuf,
        /// Quadrature CSV for bootstrap error bars.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        /// Reconstruction cutoff for bootstrap replicates (default: from ρ).
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 5.0)]
        grid_half_range: f64,
        #[arg(long, default_value_t = 201)]
        grid_resolution: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Bootstrap confidence interval for one statistic.
    Bootstrap {
        #[arg(long)]
        csv: PathBuf,
        /// "p:<n>" for P(n) or "w:<x>,<p>" for a Wigner point.
        #[arg(long)]
        statistic: String,
        #[arg(long, default_value_t = 100)]
        replicates: usize,
        /// Reconstruction cutoff n_max.
        #[arg(long)]
        cutoff: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run the built-in acceptance suite and print one line per criterion.
    Selftest,
}

fn main() {
    let matches = match Cli::command().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            // Help and version are not errors; anything else is bad input.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 3,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(3);
        }
    };
    if let Err(e) = run(cli.command) {
        eprintln!("error: {e}");
        std::process::exit(match e {
            Error::Domain(_) | Error::Unheraldable(_) => 2,
            Error::Parse { .. } | Error::Io(_) => 3,
        });
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Simulate { config, count, theta, seed, out } => {
            cmd_simulate(&config, count, theta, seed, &out)
        }
        Command::Pipeline { events, config, cal_file, cal_self, window, seed, out } => {
            cmd_pipeline(&events, &config, cal_file.as_deref(), cal_self, window, seed, &out)
        }
        Command::Tomo { csv, cutoff, max_iters, tol, full_phase, bin_width, seed, out } => {
            cmd_tomo(&csv, cutoff, max_iters, tol, full_phase, bin_width, seed, &out)
        }
        Command::Report {
            rho,
            dataset,
            replicates,
            cutoff,
            seed,
            grid_half_range,
            grid_resolution,
            out,
        } => cmd_report(
            &rho,
            dataset.as_deref(),
            replicates,
            cutoff,
            seed,
            grid_half_range,
            grid_resolution,
            &out,
        ),
        Command::Bootstrap { csv, statistic, replicates, cutoff, seed, out } => {
            cmd_bootstrap(&csv, &statistic, replicates, cutoff, seed, &out)
        }
        Command::Selftest => cmd_selftest(),
    }
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::parse(None, format!("cannot read {}: {e}", path.display())))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path)?;
    f.write_all(bytes)?;
    Ok(path)
}

/// Attach the resolved config and seed to a JSON object.
fn with_config(
    mut value: serde_json::Value,
    config: serde_json::Value,
    seed: u64,
) -> serde_json::Value {
    let obj = value.as_object_mut().expect("output JSON is an object");
    obj.insert("config".into(), config);
    obj.insert("seed".into(), serde_json::json!(seed));
    value
}

fn cmd_simulate(
    config: &Path,
    count: usize,
    theta: Option<f64>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let scenario: HeraldScenario = serde_json::from_str(&read_text(config)?)
        .map_err(|e| Error::parse(None, format!("bad scenario JSON: {e}")))?;
    let (truth, probability) = conditional_signal_state(&scenario)?;
    let policy = match theta {
        Some(t) => PhasePolicy::Fixed(t),
        None => PhasePolicy::UniformRandom,
    };
    let records = sample_quadratures(&truth, count, policy, scenario.herald_n() as u32, seed);

    let resolved = serde_json::json!({
        "command": "simulate",
        "scenario": scenario,
        "count": count,
        "theta": theta,
    });
    write_file(out, "quadratures.csv", quadrature_csv_string(&records).as_bytes())?;
    let truth_json = with_config(truth.to_json_value(), resolved.clone(), seed);
    write_file(out, "truth.json", focktomo::jsonfmt::to_file_string(&truth_json)?.as_bytes())?;
    let report = with_config(
        serde_json::json!({
            "herald_probability": probability,
            "records": records.len(),
            "mean_photon": truth.mean_photon(),
        }),
        resolved,
        seed,
    );
    write_file(out, "simulate_report.json", focktomo::jsonfmt::to_file_string(&report)?.as_bytes())?;
    println!("herald probability: {probability:.6e}");
    println!("wrote {} records to {}", records.len(), out.join("quadratures.csv").display());
    Ok(())
}

fn cmd_pipeline(
    events_path: &Path,
    config: &Path,
    cal_file: Option<&Path>,
    cal_self: bool,
    window: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let thresholds: ThresholdConfig = serde_json::from_str(&read_text(config)?)
        .map_err(|e| Error::parse(None, format!("bad thresholds JSON: {e}")))?;
    let file = fs::File::open(events_path)
        .map_err(|e| Error::parse(None, format!("cannot read {}: {e}", events_path.display())))?;
    let events = read_events_jsonl(BufReader::new(file))?;
    if events.is_empty() {
        return Err(Error::parse(None, format!("{} contains no events", events_path.display())));
    }

    let cal = match (cal_file, cal_self) {
        (Some(path), _) => ShotNoiseCalibration::from_json_str(&read_text(path)?)?,
        (None, true) => {
            let vacuum: Vec<f64> = events
                .iter()
                .flat_map(|e| {
                    e.slots
                        .iter()
                        .filter(|s| classify_pnr(s.snspd_peak, &thresholds) == 0)
                        .map(|s| s.hd_value)
                })
                .collect();
            calibrate_shot_noise(&vacuum)?
        }
        (None, false) => {
            return Err(Error::domain("provide --cal-file <json> or --cal-self"));
        }
    };

    let resolved = serde_json::json!({
        "command": "pipeline",
        "events": events_path.display().to_string(),
        "thresholds": thresholds,
        "calibration": cal,
        "window": window,
    });

    let mut counts = serde_json::Map::new();
    let mut kept2 = 0usize;
    let mut vetoed = 0usize;
    let mut truncated = 0usize;
    for herald_n in 0u8..=2 {
        let filter = HeraldFilter { herald_n, veto_window: window };
        let extraction = extract_quadratures(&events, &cal, &thresholds, &filter);
        if herald_n == 2 {
            kept2 = extraction.records.len();
            vetoed = extraction.vetoed;
            truncated = extraction.truncated_history;
        }
        counts.insert(format!("h{herald_n}"), serde_json::json!(extraction.records.len()));
        write_file(
            out,
            &format!("quadratures_h{herald_n}.csv"),
            quadrature_csv_string(&extraction.records).as_bytes(),
        )?;
    }

    let cal_json = with_config(
        serde_json::to_value(cal).expect("calibration is serializable"),
        resolved.clone(),
        seed,
    );
    write_file(out, "calibration.json", focktomo::jsonfmt::to_file_string(&cal_json)?.as_bytes())?;
    let report = with_config(
        serde_json::json!({
            "events_in": events.len(),
            "kept": kept2,
            "vetoed": vetoed,
            "truncated_history": truncated,
            "records": counts,
        }),
        resolved,
        seed,
    );
    write_file(out, "pipeline_report.json", focktomo::jsonfmt::to_file_string(&report)?.as_bytes())?;
    println!("events: {}, kept two-photon heralds: {kept2}, vetoed: {vetoed}", events.len());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_tomo(
    csv: &Path,
    cutoff: usize,
    max_iters: usize,
    tol: f64,
    full_phase: bool,
    bin_width: Option<f64>,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let file = fs::File::open(csv)
        .map_err(|e| Error::parse(None, format!("cannot read {}: {e}", csv.display())))?;
    let records = read_quadrature_csv(BufReader::new(file))?;
    let cfg = MleConfig {
        cutoff: FockCutoff::new(cutoff),
        max_iterations: max_iters,
        log_likelihood_tolerance: tol,
        phase_insensitive: !full_phase,
        x_binning: bin_width,
    };
    let result = mle_reconstruct(&records, &cfg)?;

    let resolved = serde_json::json!({
        "command": "tomo",
        "csv": csv.display().to_string(),
        "mle": cfg,
        "records": records.len(),
    });
    let rho_json = with_config(result.rho.to_json_value(), resolved.clone(), seed);
    write_file(out, "rho.json", focktomo::jsonfmt::to_file_string(&rho_json)?.as_bytes())?;
    let report = with_config(
        serde_json::json!({
            "iterations": result.iterations_used,
            "log_likelihood": result.final_log_likelihood,
            "converged": result.converged,
        }),
        resolved,
        seed,
    );
    write_file(out, "tomo_report.json", focktomo::jsonfmt::to_file_string(&report)?.as_bytes())?;
    println!(
        "reconstruction: {} iterations, converged = {}, wrote {}",
        result.iterations_used,
        result.converged,
        out.join("rho.json").display()
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    rho_path: &Path,
    dataset: Option<&Path>,
    replicates: usize,
    cutoff: Option<usize>,
    seed: u64,
    grid_half_range: f64,
    grid_resolution: usize,
    out: &Path,
) -> Result<()> {
    let rho = DensityMatrix::from_json_str(&read_text(rho_path)?)?;
    let resolved = serde_json::json!({
        "command": "report",
        "rho": rho_path.display().to_string(),
        "dataset": dataset.map(|p| p.display().to_string()),
        "replicates": replicates,
        "grid_half_range": grid_half_range,
        "grid_resolution": grid_resolution,
    });

    // Bootstrap error bars for P(0..4) and the origin Wigner value when a
    // dataset is supplied; all statistics share one set of replicates.
    let statistics: Vec<Statistic> = (0..5)
        .map(Statistic::PhotonProb)
        .chain([Statistic::WignerAt { x: 0.0, p: 0.0 }])
        .collect();
    let reports = match dataset {
        Some(path) => {
            let file = fs::File::open(path)
                .map_err(|e| Error::parse(None, format!("cannot read {}: {e}", path.display())))?;
            let records = read_quadrature_csv(BufReader::new(file))?;
            let cfg = MleConfig::new(FockCutoff::new(cutoff.unwrap_or(rho.dim() - 1)));
            Some(bootstrap_multi(&records, &statistics, &cfg, replicates, seed, Default::default())?)
        }
        None => None,
    };

    let diag = rho.diagonal();
    let mut table = Vec::new();
    for n in 0..5 {
        let p = diag.get(n).copied().unwrap_or(0.0);
        match &reports {
            Some(reps) => {
                table.push(format!("P({n}) = {:.1} ± {:.1} %", 100.0 * p, 100.0 * reps[n].std_dev))
            }
            None => table.push(format!("P({n}) = {:.1} %", 100.0 * p)),
        }
    }
    println!("photon-number distribution: {}", table.join(" | "));

    let w0 = wigner_point(&rho, 0.0, 0.0);
    match &reports {
        Some(reps) => println!("W(0,0) = {w0:.5} ± {:.5}", reps[5].std_dev),
        None => println!("W(0,0) = {w0:.5}"),
    }

    let grid = wigner_grid(
        &rho,
        (-grid_half_range, grid_half_range),
        (-grid_half_range, grid_half_range),
        grid_resolution,
    )?;
    println!(
        "Wigner minimum: {:.5} at (x, p) = ({:.3}, {:.3})",
        grid.min_value, grid.min_x, grid.min_p
    );
    if rho.is_diagonal(1e-10) {
        let radius = (grid.min_x * grid.min_x + grid.min_p * grid.min_p).sqrt();
        let step = grid.x_axis[1] - grid.x_axis[0];
        let (s, w) = refine_radial_minimum(&rho, (radius - step).max(0.0), radius + step);
        println!("radial refinement: minimum {w:.5} on the ring |alpha| = {s:.4}");
    }

    write_file(out, "wigner_grid.csv", grid.to_csv_string().as_bytes())?;
    let sidecar = with_config(
        serde_json::json!({
            "min_value": grid.min_value,
            "min_x": grid.min_x,
            "min_p": grid.min_p,
        }),
        resolved.clone(),
        seed,
    );
    write_file(out, "wigner_grid.json", focktomo::jsonfmt::to_file_string(&sidecar)?.as_bytes())?;
    if let Some(reps) = &reports {
        let boot = with_config(serde_json::json!({ "bootstrap": reps }), resolved, seed);
        write_file(out, "report_bootstrap.json", focktomo::jsonfmt::to_file_string(&boot)?.as_bytes())?;
    }
    Ok(())
}

fn parse_statistic(text: &str) -> Result<Statistic> {
    if let Some(n) = text.strip_prefix("p:") {
        let n: usize = n
            .parse()
            .map_err(|e| Error::parse(None, format!("bad photon index in '{text}': {e}")))?;
        return Ok(Statistic::PhotonProb(n));
    }
    if let Some(body) = text.strip_prefix("w:") {
        let parts: Vec<&str> = body.split(',').collect();
        if parts.len() == 2 {
            let x: f64 = parts[0]
                .parse()
                .map_err(|e| Error::parse(None, format!("bad x in '{text}': {e}")))?;
            let p: f64 = parts[1]
                .parse()
                .map_err(|e| Error::parse(None, format!("bad p in '{text}': {e}")))?;
            return Ok(Statistic::WignerAt { x, p });
        }
    }
    Err(Error::parse(None, format!("statistic '{text}' is not 'p:<n>' or 'w:<x>,<p>'")))
}

fn cmd_bootstrap(
    csv: &Path,
    statistic: &str,
    replicates: usize,
    cutoff: usize,
    seed: u64,
    out: &Path,
) -> Result<()> {
    let stat = parse_statistic(statistic)?;
    let file = fs::File::open(csv)
        .map_err(|e| Error::parse(None, format!("cannot read {}: {e}", csv.display())))?;
    let records = read_quadrature_csv(BufReader::new(file))?;
    let cfg = MleConfig::new(FockCutoff::new(cutoff));
    let report = focktomo::analysis::bootstrap(&records, stat, &cfg, replicates, seed)?;

    let resolved = serde_json::json!({
        "command": "bootstrap",
        "csv": csv.display().to_string(),
        "statistic": statistic,
        "replicates": replicates,
        "mle": cfg,
    });
    let value = with_config(
        serde_json::to_value(&report).expect("report is serializable"),
        resolved,
        seed,
    );
    write_file(out, "bootstrap_report.json", focktomo::jsonfmt::to_file_string(&value)?.as_bytes())?;
    println!(
        "{}: point {:.6}, sd {:.6}, 95% interval [{:.6}, {:.6}]",
        report.statistic,
        report.point_estimate,
        report.std_dev,
        report.percentile_low,
        report.percentile_high
    );
    Ok(())
}

fn cmd_selftest() -> Result<()> {
    let outcomes = focktomo::acceptance::run_all();
    let mut failures = 0;
    for outcome in &outcomes {
        println!("{}", outcome.line());
        if !outcome.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        return Err(Error::domain(format!(
            "{failures} of {} acceptance criteria failed",
            outcomes.len()
        )));
    }
    println!("all {} acceptance criteria passed", outcomes.len());
    Ok(())
}
