//! `nu-entangle` command line.
//!
//! Every subcommand writes one JSON document or one CSV table to stdout or `--output`.
//! Floats are printed in their shortest round-trip form, so identical flags and seed give
//! byte-identical output.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::bell::{self, BellTimes, GridScanSpec, TimeSlot};
use crate::error::Error;
use crate::optimizer::{self, LocalSearchConfig, OptimizerConfig};
use crate::oscillation::{
    coincidence_table, osc_probability, tribimaximal_matrix, Flavor, MixingMatrix,
    OscillationParams, Side,
};
use crate::qkd::{self, EveConfig, QkdConfig};
use crate::sampling::substream;
use crate::source::{self, EnergySampler, SourceConfig};

pub const THREADS_ENV: &str = "NU_ENTANGLE_THREADS";

const ENERGY_NOTE: &str = "\
Energy note: the working energy defaults to 0.107 GeV (E just above the muon production \
threshold). The quoted optimal detector distances (2418 km, 241.72 km, 0.42 km, 752.28 km) \
are reproduced with E = 0.106 GeV; pass --energy-gev 0.106 to recover them.
Physics defaults: dm2_21 = 8e-5 eV^2, dm2_32 = 2.4e-3 eV^2, tri-bimaximal mixing; \
times are in s = L/2E units (phase = 1e5 * dm2 * s).";

#[derive(Debug, Parser)]
#[command(
    name = "nu-entangle",
    version,
    about = "Entangled neutrino pairs: oscillation, Bell tests and key distribution"
)]
#[command(arg_required_else_help = true, after_help = ENERGY_NOTE)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// JSON run configuration; flags override its values
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Write the artifact here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub output: Option<PathBuf>,
    /// Output format (default depends on the subcommand)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Random seed for stochastic subcommands
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Solar mass splitting dm2_21 in eV^2 [default: 8e-5]
    #[arg(long = "dm2-21", global = true, value_name = "EV2")]
    pub dm2_21: Option<f64>,
    /// Atmospheric mass splitting dm2_32 in eV^2 [default: 2.4e-3]
    #[arg(long = "dm2-32", global = true, value_name = "EV2")]
    pub dm2_32: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Single-particle transition probability P(from -> to) after s
    #[command(after_help = ENERGY_NOTE)]
    OscProb(OscProbArgs),
    /// 3x3 joint flavor probabilities at (t_l, t_r)
    #[command(after_help = ENERGY_NOTE)]
    Table(TableArgs),
    /// CH value and Hardy ratio at four detection times
    #[command(after_help = ENERGY_NOTE)]
    BellEval(BellEvalArgs),
    /// Grid of the Hardy ratio over two of the four times (CSV: axis1,axis2,h,defined)
    #[command(after_help = ENERGY_NOTE)]
    BellScan(BellScanArgs),
    /// Multistart search for the largest Hardy ratio
    #[command(after_help = ENERGY_NOTE)]
    BellOptimize(BellOptimizeArgs),
    /// nu_tau contamination at a detector, or its minimum over a range
    #[command(after_help = ENERGY_NOTE)]
    Contamination(ContaminationArgs),
    /// Convert between s and distance in km
    #[command(after_help = ENERGY_NOTE)]
    Convert(ConvertArgs),
    /// Draw pair energies from the tau-decay spectrum (CSV: e_mean,eps)
    #[command(after_help = ENERGY_NOTE)]
    SourceSample(SourceSampleArgs),
    /// Hardy ratio averaged over an energy band at fixed detector distances
    #[command(after_help = ENERGY_NOTE)]
    Smear(SmearArgs),
    /// Monte Carlo of the flavor key distribution, optionally with an eavesdropper
    #[command(after_help = ENERGY_NOTE)]
    QkdRun(QkdRunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OscProbArgs {
    #[arg(long, default_value = "e")]
    pub from: Flavor,
    #[arg(long, default_value = "mu")]
    pub to: Flavor,
    #[arg(long)]
    pub s: f64,
}

#[derive(Debug, Clone, Args)]
pub struct TableArgs {
    #[arg(long)]
    pub tl: f64,
    #[arg(long)]
    pub tr: f64,
}

#[derive(Debug, Clone, Args)]
pub struct BellEvalArgs {
    /// t_l1,t_l2,t_r1,t_r2
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.579497,0.0579214,0.0001,0.180264"
    )]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScanPreset {
    /// l2 x r1 over [0, 0.25]^2
    Near,
    /// l1 x r2 over [0, 0.6] x [0, 0.3]
    Far,
}

#[derive(Debug, Clone, Args)]
pub struct BellScanArgs {
    #[arg(long, value_enum, default_value = "near")]
    pub preset: ScanPreset,
    /// Two time slots to vary, e.g. l2,r1 (overrides the preset)
    #[arg(long, value_delimiter = ',')]
    pub vary: Option<Vec<TimeSlot>>,
    /// lo,hi of the first axis
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub range1: Option<Vec<f64>>,
    /// lo,hi of the second axis
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub range2: Option<Vec<f64>>,
    /// Points per axis
    #[arg(long, default_value_t = bell::DEFAULT_SCAN_RESOLUTION)]
    pub resolution: usize,
    /// Points on the second axis [default: same as --resolution]
    #[arg(long)]
    pub resolution2: Option<usize>,
    /// Values of the two fixed times, given as all four t_l1,t_l2,t_r1,t_r2
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.579497,0.0579214,0.0001,0.180264"
    )]
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct BellOptimizeArgs {
    #[arg(long, default_value_t = 256)]
    pub n_starts: usize,
    /// Smallest admissible Hardy denominator
    #[arg(long, default_value_t = 0.1)]
    pub den_min: f64,
    /// Lower bound for all four times
    #[arg(long, default_value_t = 1e-5)]
    pub lo: f64,
    /// Upper bound for all four times
    #[arg(long, default_value_t = 0.6)]
    pub hi: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Initial simplex edge as a fraction of the box width
    #[arg(long, default_value_t = 0.05)]
    pub initial_step: f64,
    /// Include every start's best value in the output
    #[arg(long)]
    pub starts: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ContaminationArgs {
    /// Side of the fixed detector
    #[arg(long, default_value = "left")]
    pub side: Side,
    /// [default: 0.579497 for left, 0.180264 for right]
    #[arg(long)]
    pub fixed_time: Option<f64>,
    /// [default: e for left, mu for right]
    #[arg(long)]
    pub fixed_flavor: Option<Flavor>,
    /// Evaluate at a single time instead of searching
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.03")]
    pub range: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct ConvertArgs {
    /// s value to convert to km
    #[arg(
        long,
        conflicts_with = "distance_km",
        required_unless_present = "distance_km"
    )]
    pub s: Option<f64>,
    /// distance in km to convert to s
    #[arg(long)]
    pub distance_km: Option<f64>,
    #[arg(long, default_value_t = source::WORKING_ENERGY_GEV)]
    pub energy_gev: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SourceSampleArgs {
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    /// [default: 1.77686]
    #[arg(long)]
    pub m_tau: Option<f64>,
    /// [default: 0.10566]
    #[arg(long)]
    pub m_mu: Option<f64>,
    /// [default: 0.095]
    #[arg(long)]
    pub e_min: Option<f64>,
    /// [default: 0.12]
    #[arg(long)]
    pub e_max: Option<f64>,
    /// [default: 0.005]
    #[arg(long)]
    pub eps_halfwidth: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SmearArgs {
    /// Detector times t_l1,t_l2,t_r1,t_r2, converted to distances at --energy-gev
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.579497,0.0579214,0.0001,0.180264"
    )]
    pub times: Vec<f64>,
    /// Detector distances in km (overrides --times)
    #[arg(long, value_delimiter = ',')]
    pub distances: Option<Vec<f64>>,
    /// Band centre
    #[arg(long, default_value_t = source::WORKING_ENERGY_GEV)]
    pub energy_gev: f64,
    /// Relative band widths dE/E
    #[arg(long, value_delimiter = ',', default_value = "0,0.005,0.01,0.02,0.05")]
    pub spreads: Vec<f64>,
    /// Quadrature nodes (odd)
    #[arg(long, default_value_t = source::DEFAULT_QUADRATURE_POINTS)]
    pub points: usize,
}

#[derive(Debug, Clone, Args)]
pub struct QkdRunArgs {
    #[arg(long, default_value_t = 0.15)]
    pub t1: f64,
    #[arg(long, default_value_t = 0.45)]
    pub t2: f64,
    #[arg(long, default_value_t = 100_000)]
    pub n_pairs: u64,
    #[arg(long, default_value_t = 1.0)]
    pub efficiency: f64,
    /// Intercept both particles at this time (enables the eavesdropper)
    #[arg(long)]
    pub eve_te: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub alarm_threshold: u64,
    #[arg(long, default_value_t = 0.5)]
    pub baseline1_fraction: f64,
    /// Also write per-pair events as CSV here
    #[arg(long, value_name = "PATH")]
    pub events_csv: Option<PathBuf>,
}

/// JSON configuration file; every section is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub physics: OscillationParams,
    pub source: SourceConfig,
    pub output: OutputConfig,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Domain(#[from] Error),
    #[error("{0}")]
    Io(#[from] io::Error),
    #[error("config: {0}")]
    Config(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Parses an argument list (including the program name).
pub fn parse<I, T>(args: I) -> Result<Cli, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    Cli::try_parse_from(args)
}

struct Context {
    params: OscillationParams,
    mixing: MixingMatrix,
    source: SourceConfig,
    output: Option<PathBuf>,
    format: Option<Format>,
    seed: u64,
}

fn load_context(global: &GlobalArgs) -> Result<Context, CliError> {
    let file = match &global.config {
        Some(path) => serde_json::from_reader(io::BufReader::new(File::open(path)?))?,
        None => RunConfig::default(),
    };
    let mut params = file.physics;
    if let Some(v) = global.dm2_21 {
        params.dm2_21 = v;
    }
    if let Some(v) = global.dm2_32 {
        params.dm2_32 = v;
    }
    params.validate()?;
    Ok(Context {
        params,
        mixing: tribimaximal_matrix(),
        source: file.source,
        output: global.output.clone().or(file.output.path),
        format: global.format.or(file.output.format),
        seed: global.seed.or(file.seed).unwrap_or(0x5eed_2007),
    })
}

fn open_output(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(ctx: &Context, value: &T) -> Result<(), CliError> {
    let mut out = open_output(ctx.output.as_deref())?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn format_or(ctx: &Context, default: Format, csv_ok: bool) -> Result<Format, CliError> {
    let f = ctx.format.unwrap_or(default);
    if f == Format::Csv && !csv_ok {
        return Err(CliError::Usage(
            "this subcommand only supports --format json".into(),
        ));
    }
    Ok(f)
}

fn times_arg(v: &[f64]) -> Result<BellTimes, CliError> {
    let arr: [f64; 4] = v
        .try_into()
        .map_err(|_| CliError::Usage("--times expects four comma-separated values".into()))?;
    Ok(BellTimes::new(arr[0], arr[1], arr[2], arr[3])?)
}

fn pair_arg(v: &[f64], flag: &str) -> Result<(f64, f64), CliError> {
    match v {
        [a, b] => Ok((*a, *b)),
        _ => Err(CliError::Usage(format!(
            "{flag} expects two comma-separated values"
        ))),
    }
}

/// Runs a parsed command.
pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let ctx = load_context(&cli.global)?;
    let (p, m) = (&ctx.params, &ctx.mixing);
    match &cli.command {
        Command::OscProb(a) => {
            format_or(&ctx, Format::Json, false)?;
            let prob = osc_probability(a.from, a.to, a.s, p, m);
            write_json(
                &ctx,
                &json!({ "from": a.from, "to": a.to, "s": a.s, "probability": prob }),
            )
        }
        Command::Table(a) => {
            let table = coincidence_table(a.tl, a.tr, p, m);
            match format_or(&ctx, Format::Json, true)? {
                Format::Json => write_json(&ctx, &table),
                Format::Csv => {
                    let mut out = open_output(ctx.output.as_deref())?;
                    writeln!(out, "left,right,probability")?;
                    for l in Flavor::ALL {
                        for r in Flavor::ALL {
                            writeln!(out, "{l},{r},{}", table.get(l, r))?;
                        }
                    }
                    out.flush()?;
                    Ok(())
                }
            }
        }
        Command::BellEval(a) => {
            format_or(&ctx, Format::Json, false)?;
            let bt = times_arg(&a.times)?;
            let result = bell::evaluate(&bt, p, m);
            write_json(
                &ctx,
                &json!({ "times": bt, "result": result, "violation": result.violates() }),
            )?;
            result.into_defined()?;
            Ok(())
        }
        Command::BellScan(a) => {
            let mut spec = match a.preset {
                ScanPreset::Near => GridScanSpec::near_site(),
                ScanPreset::Far => GridScanSpec::far_site(),
            };
            spec.base = times_arg(&a.times)?;
            if let Some(v) = &a.vary {
                match v.as_slice() {
                    [a1, a2] => spec.axes = (*a1, *a2),
                    _ => return Err(CliError::Usage("--vary expects two time slots".into())),
                }
            }
            if let Some(r) = &a.range1 {
                spec.range1 = pair_arg(r, "--range1")?;
            }
            if let Some(r) = &a.range2 {
                spec.range2 = pair_arg(r, "--range2")?;
            }
            spec.resolution = (a.resolution, a.resolution2.unwrap_or(a.resolution));
            let scan = bell::scan_h(&spec, p, m)?;
            match format_or(&ctx, Format::Csv, true)? {
                Format::Csv => {
                    let mut out = open_output(ctx.output.as_deref())?;
                    scan.write_csv(&mut out)?;
                    out.flush()?;
                    Ok(())
                }
                Format::Json => write_json(
                    &ctx,
                    &json!({
                        "spec": scan.spec,
                        "cells": scan.cells.len(),
                        "violating_cells": scan.violating_cells(),
                        "max": scan.max,
                        "argmax": scan.argmax,
                    }),
                ),
            }
        }
        Command::BellOptimize(a) => {
            format_or(&ctx, Format::Json, false)?;
            let cfg = OptimizerConfig {
                bounds: [(a.lo, a.hi); 4],
                den_min: a.den_min,
                n_starts: a.n_starts,
                seed: ctx.seed,
                local: LocalSearchConfig {
                    max_iter: a.max_iter,
                    tol: a.tol,
                    initial_step: a.initial_step,
                },
            };
            let mut res = optimizer::maximize_h(&cfg, p, m)?;
            if !a.starts {
                res.starts.clear();
            }
            write_json(&ctx, &json!({ "config": cfg, "result": res }))
        }
        Command::Contamination(a) => {
            format_or(&ctx, Format::Json, false)?;
            let (default_time, default_flavor) = match a.side {
                Side::Left => (BellTimes::REFERENCE_OPTIMUM.t_l1, Flavor::E),
                Side::Right => (BellTimes::REFERENCE_OPTIMUM.t_r2, Flavor::Mu),
            };
            let fixed_time = a.fixed_time.unwrap_or(default_time);
            let fixed_flavor = a.fixed_flavor.unwrap_or(default_flavor);
            match a.t {
                Some(t) => {
                    let v = bell::tau_contamination(a.side, fixed_time, fixed_flavor, t, p, m);
                    write_json(
                        &ctx,
                        &json!({
                            "side": a.side, "fixed_time": fixed_time, "fixed_flavor": fixed_flavor,
                            "t": t, "probability": v,
                        }),
                    )
                }
                None => {
                    let range = pair_arg(&a.range, "--range")?;
                    let (t, v) = bell::find_contamination_minimum(
                        a.side,
                        fixed_time,
                        fixed_flavor,
                        range,
                        p,
                        m,
                    )?;
                    write_json(
                        &ctx,
                        &json!({
                            "side": a.side, "fixed_time": fixed_time, "fixed_flavor": fixed_flavor,
                            "range": range, "t_min": t, "probability": v,
                        }),
                    )
                }
            }
        }
        Command::Convert(a) => {
            format_or(&ctx, Format::Json, false)?;
            match (a.s, a.distance_km) {
                (Some(s), None) => write_json(
                    &ctx,
                    &json!({
                        "s": s, "energy_gev": a.energy_gev, "distance_km": source::s_to_distance(s, a.energy_gev),
                    }),
                ),
                (None, Some(l)) => write_json(
                    &ctx,
                    &json!({
                        "distance_km": l, "energy_gev": a.energy_gev, "s": source::distance_to_s(l, a.energy_gev)?,
                    }),
                ),
                _ => Err(CliError::Usage(
                    "give exactly one of --s and --distance-km".into(),
                )),
            }
        }
        Command::SourceSample(a) => {
            let mut cfg = ctx.source;
            if let Some(v) = a.m_tau {
                cfg.m_tau = v;
            }
            if let Some(v) = a.m_mu {
                cfg.m_mu = v;
            }
            if let Some(v) = a.e_min {
                cfg.e_window.0 = v;
            }
            if let Some(v) = a.e_max {
                cfg.e_window.1 = v;
            }
            if let Some(v) = a.eps_halfwidth {
                cfg.eps_halfwidth = v;
            }
            let sampler = EnergySampler::new(&cfg)?;
            let mut rng = substream(ctx.seed, 0);
            let samples: Vec<_> = (0..a.n).map(|_| sampler.sample(&mut rng)).collect();
            match format_or(&ctx, Format::Csv, true)? {
                Format::Csv => {
                    let mut out = open_output(ctx.output.as_deref())?;
                    writeln!(out, "e_mean,eps")?;
                    for s in &samples {
                        writeln!(out, "{},{}", s.e_mean, s.eps)?;
                    }
                    out.flush()?;
                    Ok(())
                }
                Format::Json => write_json(&ctx, &json!({ "config": cfg, "samples": samples })),
            }
        }
        Command::Smear(a) => {
            format_or(&ctx, Format::Json, false)?;
            let distances: [f64; 4] = match &a.distances {
                Some(d) => d
                    .as_slice()
                    .try_into()
                    .map_err(|_| CliError::Usage("--distances expects four values".into()))?,
                None => source::times_to_distances(&times_arg(&a.times)?, a.energy_gev),
            };
            let mut curve = Vec::with_capacity(a.spreads.len());
            let mut first_undefined = None;
            for &spread in &a.spreads {
                let terms = source::smeared_terms(distances, a.energy_gev, spread, a.points, p, m)?;
                let r = bell::BellResult::from_terms(terms);
                if r.h.is_none() && first_undefined.is_none() {
                    first_undefined = Some(r);
                }
                curve.push(json!({ "spread": spread, "result": r }));
            }
            write_json(
                &ctx,
                &json!({
                    "distances_km": distances, "energy_gev": a.energy_gev, "points": a.points, "curve": curve,
                }),
            )?;
            match first_undefined {
                Some(r) => Err(Error::NonPositiveDenominator(Box::new(r)).into()),
                None => Ok(()),
            }
        }
        Command::QkdRun(a) => {
            format_or(&ctx, Format::Json, false)?;
            let cfg = QkdConfig {
                t1: a.t1,
                t2: a.t2,
                n_pairs: a.n_pairs,
                efficiency: a.efficiency,
                eve: a.eve_te.map(|t_e| EveConfig { t_e }),
                seed: ctx.seed,
                alarm_threshold: a.alarm_threshold,
                baseline1_fraction: a.baseline1_fraction,
            };
            let events = qkd::simulate_events(&cfg, p, m)?;
            let report = qkd::summarize(&cfg, &events);
            if let Some(path) = &a.events_csv {
                let mut out = BufWriter::new(File::create(path)?);
                qkd::write_events_csv(&events, &mut out)?;
                out.flush()?;
            }
            let expected = cfg
                .eve
                .map(|eve| [cfg.t1, cfg.t2].map(|tb| qkd::eve_same_flavor_prob(eve.t_e, tb, p, m)));
            let period = qkd::same_flavor_zero_period(p, m, qkd::DEFAULT_PERIOD_CUTOFF);
            let mut value = serde_json::to_value(&report)?;
            if let Some(obj) = value.as_object_mut() {
                obj.insert("expected_same_flavor_rate".into(), json!(expected));
                obj.insert("same_flavor_zero_period".into(), json!(period));
            }
            write_json(&ctx, &value)
        }
    }
}

/// Caps the worker pool from `NU_ENTANGLE_THREADS` (unset or 0 leaves the default).
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| {
        CliError::Usage(format!(
            "{THREADS_ENV} must be a nonnegative integer, got `{raw}`"
        ))
    })?;
    if n > 0 {
        // fails only if a pool already exists, which leaves the earlier setting in force
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bell_eval_times() {
        let cli = parse([
            "nu-entangle",
            "bell-eval",
            "--times",
            "0.579497,0.0579214,0.0001,0.180264",
        ])
        .unwrap();
        match cli.command {
            Command::BellEval(a) => {
                assert_eq!(times_arg(&a.times).unwrap(), BellTimes::REFERENCE_OPTIMUM);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn convert_command() {
        let cli = parse([
            "nu-entangle",
            "convert",
            "--s",
            "0.0001",
            "--energy-gev",
            "0.106",
        ])
        .unwrap();
        match cli.command {
            Command::Convert(a) => {
                assert_eq!(a.s, Some(0.0001));
                assert_eq!(a.energy_gev, 0.106);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn convert_default_energy() {
        let cli = parse(["nu-entangle", "convert", "--distance-km", "10"]).unwrap();
        let Command::Convert(a) = cli.command else {
            panic!()
        };
        assert_eq!(a.energy_gev, 0.107);
    }

    #[test]
    fn empty_args_is_usage_error() {
        let err = parse(["nu-entangle"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let text = err.render().to_string();
        assert!(text.contains("bell-eval") && text.contains("qkd-run"));
    }

    #[test]
    fn unknown_flag_rejected() {
        let err = parse(["nu-entangle", "table", "--tl", "0", "--tr", "0", "--bogus"]).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.render().to_string().contains("--bogus"));
    }

    #[test]
    fn convert_needs_exactly_one_input() {
        assert!(parse(["nu-entangle", "convert"]).is_err());
        assert!(parse(["nu-entangle", "convert", "--s", "1", "--distance-km", "2"]).is_err());
    }

    #[test]
    fn run_config_rejects_unknown_sections() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"physics": {"dm2_21": 7e-5}}"#).is_ok());
        assert!(serde_json::from_str::<RunConfig>(r#"{"nonsense": 1}"#).is_err());
    }
}
