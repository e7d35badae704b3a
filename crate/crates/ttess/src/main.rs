//! Batch front-end: configure a model and chain from a TOML file, run it,
//! and emit renders, traces and verification reports.
//!
//! Exit codes: 0 success, 1 usage/configuration/IO error, 2 a verification
//! check exceeded its tolerance, 3 verification ran but convergence
//! preconditions could not be established (verdict unknown).

use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use ttess::config::RunConfig;
use ttess::geom::Line;
use ttess::lines::LinePattern;
use ttess::models::is_hereditary;
use ttess::monitor::{
    angle_histogram, angles_csv, lorenz_csv, lorenz_curve, lorenz_reference_curve, render_svg,
    segment_survival, segment_survival_strict, survival_csv, trace_csv, write_file, TraceRecord,
};
use ttess::ops::UpdateKind;
use ttess::sampler::{
    check_convergence_conditions, conditional_uniformity_test, verify_gnz_flip, verify_gnz_split,
    ChainState, GnzOptions, GnzReport, Verdict,
};
use ttess::tess::{
    parse_snapshots, parse_tessellation, serialize_tessellation, snapshot_block, TTessellation,
};

#[derive(Parser)]
#[command(
    name = "ttess",
    version,
    about = "Gibbs random T-tessellation simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a chain from the empty tessellation and write artifacts.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config iteration count.
        #[arg(long)]
        iterations: Option<u64>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Number of independent chains (seeds seed..seed+n-1).
        #[arg(long, default_value_t = 1)]
        replicates: u32,
    },
    /// Numerical verification: GNZ identities, conditional uniformity,
    /// convergence preconditions.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a serialized state file as SVG.
    Render {
        #[arg(long)]
        state: PathBuf,
        /// Output path (defaults to the state path with extension .svg).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Color internal segments by blocking status.
        #[arg(long)]
        color_segments: bool,
    },
    /// Summary statistics (Lorenz, angles, survival) from a snapshot stream.
    Stats {
        #[arg(long)]
        snapshots: PathBuf,
        /// Output directory (defaults to the snapshot file's directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest survival lag, in iterations.
        #[arg(long)]
        max_lag: Option<u64>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("TTESS_LOG")).init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Simulate {
            config,
            seed,
            iterations,
            out,
            replicates,
        } => cmd_simulate(&config, seed, iterations, out, replicates),
        Cmd::Verify { config, seed, out } => cmd_verify(&config, seed, out),
        Cmd::Render {
            state,
            out,
            color_segments,
        } => cmd_render(&state, out, color_segments),
        Cmd::Stats {
            snapshots,
            out,
            max_lag,
        } => cmd_stats(&snapshots, out, max_lag),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

type AnyError = Box<dyn std::error::Error + Send + Sync>;

fn cmd_simulate(
    config: &Path,
    seed: Option<u64>,
    iterations: Option<u64>,
    out: Option<PathBuf>,
    replicates: u32,
) -> Result<ExitCode, AnyError> {
    let mut cfg = RunConfig::from_path(config)?;
    if let Some(s) = seed {
        cfg.chain.seed = s;
    }
    if let Some(n) = iterations {
        cfg.chain.iterations = n;
    }
    if let Some(dir) = out {
        cfg.output.dir = dir.display().to_string();
    }
    let replicates = replicates.max(1);
    if replicates == 1 {
        run_replicate(&cfg, cfg.chain.seed, Path::new(&cfg.output.dir))?;
    } else {
        std::thread::scope(|scope| -> Result<(), AnyError> {
            let mut handles = Vec::new();
            for r in 0..replicates {
                let cfg = &cfg;
                handles.push(scope.spawn(move || {
                    let dir = PathBuf::from(&cfg.output.dir).join(format!("rep{r:02}"));
                    run_replicate(cfg, cfg.chain.seed + r as u64, &dir)
                }));
            }
            for h in handles {
                h.join().expect("replicate thread")?;
            }
            Ok(())
        })?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run_replicate(cfg: &RunConfig, seed: u64, dir: &Path) -> Result<(), AnyError> {
    let domain = cfg.build_domain()?;
    let model = cfg.build_model()?;
    let proposals = cfg.build_proposals()?;
    let t0 = TTessellation::new_empty(domain)?;
    let mut chain = ChainState::new(t0, &*model, proposals, seed);

    let mut records: Vec<TraceRecord<f64>> = Vec::new();
    let mut snapshots = String::new();
    let trace_period = cfg.output.trace_period;
    // Snapshots are the subsampled states retained after burn-in.
    let snapshot_period = cfg.output.snapshot_period.unwrap_or(cfg.chain.subsample);
    let burn_in = cfg.chain.burn_in;
    let svg_period = cfg.output.svg_period;
    let color = cfg.output.color_segments;
    if trace_period > 0 {
        records.push(TraceRecord {
            iteration: 0,
            energy: chain.energy(),
            acc_split: 0.0,
            acc_merge: 0.0,
            acc_flip: 0.0,
        });
    }
    if snapshot_period > 0 && burn_in == 0 {
        snapshots.push_str(&snapshot_block(0, chain.tessellation()));
    }
    let mut svg_jobs: Vec<(u64, String)> = Vec::new();
    chain.run_with(cfg.chain.iterations, |chain, _outcome| {
        let it = chain.iteration();
        if trace_period > 0 && it % trace_period == 0 {
            let c = chain.counters();
            records.push(TraceRecord {
                iteration: it,
                energy: chain.energy(),
                acc_split: c.acceptance_rate(UpdateKind::Split),
                acc_merge: c.acceptance_rate(UpdateKind::Merge),
                acc_flip: c.acceptance_rate(UpdateKind::Flip),
            });
        }
        if snapshot_period > 0 && it >= burn_in && it % snapshot_period == 0 {
            snapshots.push_str(&snapshot_block(it, chain.tessellation()));
        }
        if svg_period > 0 && it % svg_period == 0 {
            svg_jobs.push((it, render_svg(chain.tessellation(), color)));
        }
    });

    if trace_period > 0 {
        write_file(&dir.join("trace.csv"), &trace_csv(&records))?;
    }
    if snapshot_period > 0 {
        write_file(&dir.join("snapshots.tess"), &snapshots)?;
    }
    for (it, svg) in svg_jobs {
        write_file(&dir.join(format!("state_{it:09}.svg")), &svg)?;
    }
    write_file(
        &dir.join("final.tess"),
        &serialize_tessellation(chain.tessellation()),
    )?;
    write_file(
        &dir.join("final.svg"),
        &render_svg(chain.tessellation(), color),
    )?;

    let c = chain.counters();
    let counts = chain.tessellation().counts();
    log::info!(
        "seed {seed}: {} iterations, {} internal segments, acceptance split {:.3} merge {:.3} flip {:.3}",
        chain.iteration(),
        counts.internal_segments,
        c.acceptance_rate(UpdateKind::Split),
        c.acceptance_rate(UpdateKind::Merge),
        c.acceptance_rate(UpdateKind::Flip),
    );
    println!(
        "simulate: wrote {} (energy {:.4}, {} cells, acceptance s/m/f {:.3}/{:.3}/{:.3})",
        dir.display(),
        chain.energy(),
        counts.cells,
        c.acceptance_rate(UpdateKind::Split),
        c.acceptance_rate(UpdateKind::Merge),
        c.acceptance_rate(UpdateKind::Flip),
    );
    Ok(())
}

fn gnz_line<S: ttess::real::Real>(name: &str, report: &GnzReport<S>, sigma: S) -> (bool, String) {
    let ok = report.consistent(sigma);
    let line = format!(
        "{} {name} ({}): lhs {:.6} (se {:.2e}) vs rhs {:.6} (se {:.2e}), n={}",
        if ok { "PASS" } else { "FAIL" },
        report.test_functional,
        report.lhs_estimate,
        report.lhs_se,
        report.rhs_estimate,
        report.rhs_se,
        report.n_states
    );
    (ok, line)
}

fn cmd_verify(
    config: &Path,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<ExitCode, AnyError> {
    let mut cfg = RunConfig::from_path(config)?;
    if let Some(s) = seed {
        cfg.chain.seed = s;
    }
    if let Some(dir) = out {
        cfg.output.dir = dir.display().to_string();
    }
    let domain = cfg.build_domain()?;
    let model = cfg.build_model()?;
    let proposals = cfg.build_proposals()?;
    let seed = cfg.chain.seed;
    let mut lines: Vec<String> = Vec::new();
    let mut failed = false;

    let convergence = check_convergence_conditions(&*model, &proposals);
    lines.push(format!("model: {}", model.name()));
    lines.push(convergence.to_string());

    let mut unknown = convergence.verdict == Verdict::Unknown;
    if is_hereditary(&*model) {
        let opts = GnzOptions {
            n_states: cfg.verify.gnz_states,
            subsample_period: cfg.verify.gnz_subsample,
            burn_in: cfg.verify.gnz_burn_in,
            split_draws: cfg.verify.gnz_split_draws,
            batches: 32,
        };
        let sigma = cfg.verify.tolerance_sigma;
        let split_report =
            verify_gnz_split(&domain, &&*model, "phi = 1", |_, _| 1.0, &opts, seed)?;
        let (ok, line) = gnz_line("gnz-split", &split_report, sigma);
        failed |= !ok;
        lines.push(line);
        let flip_report = verify_gnz_flip(
            &domain,
            &&*model,
            "phi = added edge length",
            |f, _| f.added_length,
            &opts,
            seed + 1,
        )?;
        let (ok, line) = gnz_line("gnz-flip", &flip_report, sigma);
        failed |= !ok;
        lines.push(line);
    } else {
        unknown = true;
        lines.push("SKIP gnz identities: model is not hereditary".into());
    }

    // Conditional uniformity on a fixed pair of crossing lines, scaled to
    // the domain.
    let pattern = two_crossing_lines(&domain)?;
    let report = conditional_uniformity_test(
        &pattern,
        cfg.verify.uniformity_retained,
        cfg.verify.uniformity_subsample,
        5,
        seed + 2,
    )?;
    let ok = report.p_value > cfg.verify.p_threshold;
    failed |= !ok;
    lines.push(format!(
        "{} conditional-uniformity: chi2 {:.3} (dof {}), p {:.4}, counts {:?}",
        if ok { "PASS" } else { "FAIL" },
        report.chi_square,
        report.dof,
        report.p_value,
        report.counts
    ));

    let text = lines.join("\n");
    println!("{text}");
    write_file(
        &Path::new(&cfg.output.dir).join("verify.txt"),
        &(text + "\n"),
    )?;
    Ok(if failed {
        ExitCode::from(2)
    } else if unknown {
        ExitCode::from(3)
    } else {
        ExitCode::SUCCESS
    })
}

fn two_crossing_lines(domain: &ttess::geom::Polygon<f64>) -> Result<LinePattern<f64>, AnyError> {
    // Two lines crossing near the centroid. Offsets stay well below the
    // inradius bound area/perimeter, so both lines hit any convex domain.
    let c = domain.centroid();
    let safe = (domain.area() / domain.perimeter()).min(0.05 * domain.diameter());
    let l1 = Line::new(
        std::f64::consts::FRAC_PI_2,
        Line::new(std::f64::consts::FRAC_PI_2, 0.0).normal().dot(c) + 0.4 * safe,
    );
    let l2 = Line::new(0.1, Line::new(0.1, 0.0).normal().dot(c) - 0.25 * safe);
    Ok(LinePattern::new(domain.clone(), vec![l1, l2])?)
}

fn cmd_render(state: &Path, out: Option<PathBuf>, color: bool) -> Result<ExitCode, AnyError> {
    let text =
        std::fs::read_to_string(state).map_err(|e| format!("reading {}: {e}", state.display()))?;
    let t: TTessellation<f64> = parse_tessellation(&text)?;
    let svg = render_svg(&t, color);
    let out = out.unwrap_or_else(|| state.with_extension("svg"));
    write_file(&out, &svg)?;
    println!("render: wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_stats(
    snapshots: &Path,
    out: Option<PathBuf>,
    max_lag: Option<u64>,
) -> Result<ExitCode, AnyError> {
    let text = std::fs::read_to_string(snapshots)
        .map_err(|e| format!("reading {}: {e}", snapshots.display()))?;
    let states: Vec<(u64, TTessellation<f64>)> = parse_snapshots(&text)?;
    if states.is_empty() {
        return Err("snapshot stream is empty".into());
    }
    let dir = out.unwrap_or_else(|| {
        snapshots
            .parent()
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
    });

    let mut areas: Vec<f64> = Vec::new();
    let mut angles: Vec<f64> = Vec::new();
    for (_, t) in &states {
        areas.extend(t.cell_areas());
        angles.extend(t.vertex_angles());
    }
    write_file(&dir.join("lorenz.csv"), &lorenz_csv(&lorenz_curve(&areas)?))?;
    write_file(
        &dir.join("angles.csv"),
        &angles_csv(&angle_histogram(&angles, 32)?),
    )?;

    write_file(
        &dir.join("lorenz_reference.csv"),
        &lorenz_csv(&lorenz_reference_curve::<f64>(100)),
    )?;

    if states.len() >= 2 {
        let spacing = states[1].0.saturating_sub(states[0].0).max(1);
        let patterns: Vec<_> = states.iter().map(|(_, t)| t.line_pattern()).collect();
        let max_lag_snaps = match max_lag {
            Some(m) => ((m / spacing) as usize).min(patterns.len() - 1),
            None => patterns.len() - 1,
        };
        let lags: Vec<usize> = (0..=max_lag_snaps).collect();
        // survival.csv tracks supporting-line identity (flips keep a line
        // alive); survival_strict.csv requires the whole segment unchanged.
        let mut curve = segment_survival(&patterns, &lags)?;
        curve.lags = curve.lags.iter().map(|l| l * spacing as usize).collect();
        write_file(&dir.join("survival.csv"), &survival_csv(&curve))?;
        let tessellations: Vec<_> = states.iter().map(|(_, t)| t.clone()).collect();
        let mut strict = segment_survival_strict(&tessellations, &lags)?;
        strict.lags = strict.lags.iter().map(|l| l * spacing as usize).collect();
        write_file(&dir.join("survival_strict.csv"), &survival_csv(&strict))?;
    }
    println!("stats: wrote {}", dir.display());
    Ok(ExitCode::SUCCESS)
}
