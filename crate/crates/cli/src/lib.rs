//! Command-line workflows over the resonator toolkit: impedance lookup,
//! design synthesis, chip simulation, trace fitting, and power-sweep
//! analysis.
//!
//! Exit codes: 0 success, 2 validation error, 3 infeasible design or
//! missing resonance, 4 i/o error.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use sirkit::constants::dbm_to_watts;
use sirkit::cpw::{cpw_params, CpwCrossSection, GeometryError, SubstrateSpec};
use sirkit::fit::{fit_notch, fit_results_csv, photon_number, power_sweep, FitRecord};
use sirkit::manifest::{
    DesignManifest, FeedlineSpec, ManifestError, ResonatorEntry, ResonatorKind, SegmentEntry,
};
use sirkit::math::linspace;
use sirkit::network::{
    half_power_linewidth, s21_sweep, NetworkError, TappedResonator, Termination,
};
use sirkit::sir::{
    shortening_percent, synthesize_design, CorrectionCap, CorrectionPoint, DesignTarget,
    SirError, SplitPolicy,
};
use sirkit::touchstone::{export_touchstone, read_trace_file};
use sirkit::trace::{S21Trace, TraceError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug)]
enum CliError {
    Validation(String),
    Infeasible(String),
    Io(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Io(_) => EXIT_IO,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Infeasible(m) | CliError::Io(m) => m,
        }
    }
}

impl From<GeometryError> for CliError {
    fn from(e: GeometryError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<SirError> for CliError {
    fn from(e: SirError) -> Self {
        match e {
            SirError::Infeasible(_) => CliError::Infeasible(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        match e {
            ManifestError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<TraceError> for CliError {
    fn from(e: TraceError) -> Self {
        match e {
            TraceError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<NetworkError> for CliError {
    fn from(e: NetworkError) -> Self {
        match e {
            NetworkError::InvalidSpec(_) => CliError::Validation(e.to_string()),
            NetworkError::Trace(t) => t.into(),
            _ => CliError::Infeasible(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

#[derive(Parser)]
#[command(
    name = "sirkit",
    version,
    about = "Design, simulate, and analyze coplanar-waveguide resonators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Line parameters of a CPW cross section
    Impedance(ImpedanceArgs),
    /// Synthesize resonator lengths and write a design manifest
    Design(DesignArgs),
    /// Simulate the feedline transmission of a design manifest
    Simulate(SimulateArgs),
    /// Fit resonance parameters from trace files
    Fit(FitArgs),
    /// Analyze a power sweep directory into a Q_i vs photon-number table
    Sweep(SweepArgs),
}

#[derive(clap::Args)]
struct ImpedanceArgs {
    /// Center conductor width, um
    #[arg(long)]
    w: f64,
    /// Gap to the ground planes, um
    #[arg(long)]
    g: f64,
    /// Substrate relative permittivity
    #[arg(long, default_value_t = 10.0)]
    er: f64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TerminationArg {
    /// Shorted far end (quarter-wave type)
    Short,
    /// Open far end (half-wave type, uniform designs only)
    Open,
}

#[derive(clap::Args)]
struct DesignArgs {
    /// Target fundamental frequencies, Hz (comma separated)
    #[arg(long, value_delimiter = ',', required = true)]
    f0: Vec<f64>,
    /// Explicit impedance ratio Z_open/Z_short; defaults to the ratio of
    /// the two section geometries
    #[arg(long)]
    ratio: Option<f64>,
    /// Open-end (coupled) section center width, um
    #[arg(long, default_value_t = 20.0)]
    low_w: f64,
    /// Open-end (coupled) section gap, um
    #[arg(long, default_value_t = 10.0)]
    low_g: f64,
    /// Shorted-section center width, um
    #[arg(long, default_value_t = 4.0)]
    high_w: f64,
    /// Shorted-section gap, um
    #[arg(long, default_value_t = 18.0)]
    high_g: f64,
    /// Substrate relative permittivity
    #[arg(long, default_value_t = 10.0)]
    er: f64,
    /// Coupling capacitance to the feedline, fF
    #[arg(long, default_value_t = 0.8)]
    coupling_cap_ff: f64,
    /// Open-end fringing capacitance, fF
    #[arg(long, default_value_t = 0.0)]
    open_end_cap_ff: f64,
    /// Design uniform resonators (single section, low-* geometry)
    #[arg(long)]
    uir: bool,
    #[arg(long, value_enum, default_value_t = TerminationArg::Short)]
    termination: TerminationArg,
    /// Write the manifest here instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TraceFormat {
    Csv,
    Touchstone,
    Both,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Design manifest to simulate
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory for traces
    #[arg(long)]
    out_dir: PathBuf,
    /// Chip sweep lower edge, Hz (default: 2% below the lowest resonance)
    #[arg(long)]
    f_min: Option<f64>,
    /// Chip sweep upper edge, Hz (default: 2% above the highest resonance)
    #[arg(long)]
    f_max: Option<f64>,
    /// Points in the coarse chip grid (dense windows are added around each
    /// resonance)
    #[arg(long, default_value_t = 4001)]
    points: usize,
    /// Also write one zoomed trace per resonator
    #[arg(long)]
    per_resonator: bool,
    #[arg(long, value_enum, default_value_t = TraceFormat::Csv)]
    format: TraceFormat,
}

#[derive(clap::Args)]
struct FitArgs {
    /// Results CSV path
    #[arg(long)]
    out: PathBuf,
    /// Line attenuation between source and chip, dB; enables the
    /// photon-number column for traces tagged with a source power
    #[arg(long)]
    attenuation_db: Option<f64>,
    /// Trace files (.csv, .s1p, .s2p)
    #[arg(required = true)]
    traces: Vec<PathBuf>,
}

#[derive(clap::Args)]
struct SweepArgs {
    /// Line attenuation between source and chip, dB
    #[arg(long)]
    attenuation_db: f64,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
    /// Directory of power-tagged trace files
    dir: PathBuf,
}

/// Parses arguments and runs a command; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Impedance(a) => cmd_impedance(&a),
        Command::Design(a) => cmd_design(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Fit(a) => cmd_fit(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message());
            e.code()
        }
    }
}

fn cmd_impedance(args: &ImpedanceArgs) -> Result<(), CliError> {
    let xs = CpwCrossSection::new(args.w, args.g)?;
    let sub = SubstrateSpec::new(args.er)?;
    let lp = cpw_params(&xs, &sub)?;
    println!("w = {} um, g = {} um, eps_r = {}", args.w, args.g, args.er);
    println!("k = {:.6}", xs.modulus());
    println!("eps_eff = {}", lp.eps_eff);
    println!("z0 = {:.4} ohm", lp.z0_ohm);
    println!("v_ph = {:.6e} m/s", lp.phase_velocity_m_per_s);
    Ok(())
}

fn design_corrections(args: &DesignArgs) -> Vec<CorrectionCap> {
    let mut caps = Vec::new();
    if args.coupling_cap_ff > 0.0 {
        caps.push(CorrectionCap {
            capacitance_ff: args.coupling_cap_ff,
            at: CorrectionPoint::OpenEnd,
        });
    }
    if args.open_end_cap_ff > 0.0 {
        caps.push(CorrectionCap {
            capacitance_ff: args.open_end_cap_ff,
            at: CorrectionPoint::OpenEnd,
        });
    }
    caps
}

fn cmd_design(args: &DesignArgs) -> Result<(), CliError> {
    let sub = SubstrateSpec::new(args.er)?;
    let low_xs = CpwCrossSection::new(args.low_w, args.low_g)?;
    let low = cpw_params(&low_xs, &sub)?;
    let mut manifest = DesignManifest::new(sub, FeedlineSpec::default());
    let termination = match args.termination {
        TerminationArg::Short => Termination::Short,
        TerminationArg::Open => Termination::Open,
    };
    let caps = design_corrections(args);

    if args.uir {
        for (i, &f0) in args.f0.iter().enumerate() {
            if !(f0 > 0.0) {
                return Err(CliError::Validation(format!(
                    "f0 must be positive (got {f0})"
                )));
            }
            let theta = match termination {
                Termination::Short => std::f64::consts::FRAC_PI_2,
                Termination::Open => std::f64::consts::PI,
            };
            let mut length = sirkit::sir::physical_length_um(theta, f0, &low);
            for cap in &caps {
                length -=
                    sirkit::sir::length_correction_um(cap.capacitance_ff, low.z0_ohm, f0, &low)?;
            }
            if length <= 0.0 {
                return Err(CliError::Infeasible(format!(
                    "corrections exceed the resonator length at {f0:e} Hz"
                )));
            }
            let name = format!("UIR{}", i + 1);
            println!(
                "{name}: f0 = {:.4} GHz, UIR ({}), length = {length:.2} um, shortening = 0.0%",
                f0 / 1e9,
                match termination {
                    Termination::Short => "quarter-wave",
                    Termination::Open => "half-wave",
                },
            );
            manifest.resonators.push(ResonatorEntry {
                name,
                kind: ResonatorKind::Uir,
                termination,
                segments: vec![SegmentEntry {
                    center_width_um: args.low_w,
                    gap_um: args.low_g,
                    length_um: length,
                }],
                coupling_cap_ff: Some(args.coupling_cap_ff),
                internal_q: None,
                target_f0_hz: Some(f0),
                impedance_ratio: None,
                rounded_step: false,
            });
        }
    } else {
        if termination == Termination::Open {
            return Err(CliError::Infeasible(
                "open-both-ends stepped designs are not supported; use --uir".into(),
            ));
        }
        let high_xs = CpwCrossSection::new(args.high_w, args.high_g)?;
        let high = cpw_params(&high_xs, &sub)?;
        let geometric_ratio = low.z0_ohm / high.z0_ohm;
        let r = args.ratio.unwrap_or(geometric_ratio);
        if let Some(explicit) = args.ratio {
            if (explicit - geometric_ratio).abs() / geometric_ratio > 1e-3 {
                eprintln!(
                    "warning: explicit ratio {explicit} differs from the geometric ratio \
                     {geometric_ratio:.4}; the built resonator follows the geometry and will \
                     resonate off-target accordingly"
                );
            }
        }
        if r >= 1.0 {
            eprintln!(
                "warning: impedance ratio {r:.4} >= 1 gives no shortening over a uniform \
                 quarter-wave resonator"
            );
        }
        let shortening = shortening_percent(r)?;
        for (i, &f0) in args.f0.iter().enumerate() {
            let target = DesignTarget {
                fundamental_frequency_hz: f0,
                split: SplitPolicy::EqualTheta,
                termination: sirkit::sir::Termination::ShortedOneEnd,
            };
            let design = synthesize_design(&target, r, (low, high), &caps)?;
            let name = format!("SIR{}", i + 1);
            let label = if (r - 1.0).abs() < 1e-12 { " (UIR)" } else { "" };
            println!(
                "{name}: f0 = {:.4} GHz, R = {r:.4}{label}, theta = {:.4} rad, shortening = \
                 {shortening:.1}% vs quarter-wave UIR, lengths = {:.2} + {:.2} um (open + short)",
                f0 / 1e9,
                design.theta1_rad + design.theta2_rad,
                design.open_segment.1,
                design.short_segment.1,
            );
            manifest.resonators.push(ResonatorEntry {
                name,
                kind: ResonatorKind::Sir,
                termination,
                segments: vec![
                    SegmentEntry {
                        center_width_um: args.low_w,
                        gap_um: args.low_g,
                        length_um: design.open_segment.1,
                    },
                    SegmentEntry {
                        center_width_um: args.high_w,
                        gap_um: args.high_g,
                        length_um: design.short_segment.1,
                    },
                ],
                coupling_cap_ff: Some(args.coupling_cap_ff),
                internal_q: None,
                target_f0_hz: Some(f0),
                impedance_ratio: Some(r),
                rounded_step: false,
            });
        }
    }

    manifest.validate()?;
    match &args.out {
        Some(path) => {
            manifest.write(path)?;
            println!("wrote {}", path.display());
        }
        None => print!("{}", manifest.to_json_string()),
    }
    Ok(())
}

struct SimulatedResonator {
    name: String,
    tap: TappedResonator,
    f_center_hz: f64,
    fwhm_hz: f64,
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let manifest = DesignManifest::read(&args.manifest)?;
    let feed = manifest.feedline_params()?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| io_err(&args.out_dir, e))?;

    let mut resonators = Vec::new();
    for (i, entry) in manifest.resonators.iter().enumerate() {
        let spec = entry.resonator_spec(&manifest.substrate)?;
        let (f_center, fwhm) = half_power_linewidth(&feed, &spec, manifest.tap_position_um(i))?;
        println!(
            "{}: f_r = {:.6} GHz, fwhm = {:.3} kHz, Q_L ~ {:.3e}",
            entry.name,
            f_center / 1e9,
            fwhm / 1e3,
            f_center / fwhm
        );
        resonators.push(SimulatedResonator {
            name: entry.name.clone(),
            tap: TappedResonator {
                spec,
                tap_position_um: manifest.tap_position_um(i),
            },
            f_center_hz: f_center,
            fwhm_hz: fwhm,
        });
    }

    // Flag overlapping 3-dB windows.
    let mut by_f: Vec<&SimulatedResonator> = resonators.iter().collect();
    by_f.sort_by(|a, b| a.f_center_hz.total_cmp(&b.f_center_hz));
    for pair in by_f.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a.f_center_hz + 1.5 * a.fwhm_hz >= b.f_center_hz - 1.5 * b.fwhm_hz {
            eprintln!(
                "warning: 3-dB windows of {} and {} overlap near {:.6} GHz",
                a.name,
                b.name,
                0.5 * (a.f_center_hz + b.f_center_hz) / 1e9
            );
        }
    }

    // Coarse chip grid plus a dense window around every resonance.
    let (lo, hi) = if resonators.is_empty() {
        (args.f_min.unwrap_or(4e9), args.f_max.unwrap_or(8e9))
    } else {
        let min = by_f.first().unwrap().f_center_hz;
        let max = by_f.last().unwrap().f_center_hz;
        (args.f_min.unwrap_or(0.98 * min), args.f_max.unwrap_or(1.02 * max))
    };
    if !(hi > lo) {
        return Err(CliError::Validation(format!(
            "empty sweep band [{lo:e}, {hi:e}]"
        )));
    }
    let mut grid = linspace(lo, hi, args.points.max(2));
    for r in &resonators {
        grid.extend(linspace(
            r.f_center_hz - 20.0 * r.fwhm_hz,
            r.f_center_hz + 20.0 * r.fwhm_hz,
            801,
        ));
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid.retain(|f| *f >= lo && *f <= hi);

    let taps: Vec<TappedResonator> = resonators.iter().map(|r| r.tap.clone()).collect();
    let chip = s21_sweep(&feed, &taps, &grid)?;
    write_trace(&chip, &args.out_dir.join("chip"), args.format)?;

    if args.per_resonator {
        for r in &resonators {
            let zoom_grid = linspace(
                r.f_center_hz - 10.0 * r.fwhm_hz,
                r.f_center_hz + 10.0 * r.fwhm_hz,
                1601,
            );
            let zoom = s21_sweep(&feed, &taps, &zoom_grid)?;
            write_trace(&zoom, &args.out_dir.join(&r.name), args.format)?;
        }
    }
    println!(
        "wrote chip trace ({} points) to {}",
        chip.len(),
        args.out_dir.display()
    );
    Ok(())
}

fn write_trace(trace: &S21Trace, base: &Path, format: TraceFormat) -> Result<(), CliError> {
    if matches!(format, TraceFormat::Csv | TraceFormat::Both) {
        trace.write_csv(base.with_extension("csv"))?;
    }
    if matches!(format, TraceFormat::Touchstone | TraceFormat::Both) {
        export_touchstone(trace, base.with_extension("s2p"))?;
    }
    Ok(())
}

fn trace_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let mut records = Vec::new();
    let mut warnings = 0usize;
    for path in &args.traces {
        let trace = read_trace_file(path)?;
        match fit_notch(&trace) {
            Ok(fit) => {
                let photon = match (trace.incident_power_dbm, args.attenuation_db) {
                    (Some(source_dbm), Some(att)) => photon_number(
                        dbm_to_watts(source_dbm - att),
                        fit.q_loaded,
                        fit.q_internal,
                        1,
                        fit.f_r_hz,
                    )
                    .ok(),
                    _ => None,
                };
                records.push(FitRecord {
                    trace_id: trace_id(path),
                    fit,
                    photon_number: photon,
                });
            }
            Err(e) => {
                eprintln!("warning: {}: {e}", path.display());
                warnings += 1;
            }
        }
    }
    std::fs::write(&args.out, fit_results_csv(&records)).map_err(|e| io_err(&args.out, e))?;
    println!(
        "fitted {} of {} traces ({warnings} warnings), results in {}",
        records.len(),
        args.traces.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(&args.dir)
        .map_err(|e| io_err(&args.dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            matches!(
                p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref(),
                Some("csv") | Some("s1p") | Some("s2p")
            )
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Validation(format!(
            "no trace files (.csv/.s1p/.s2p) in {}",
            args.dir.display()
        )));
    }

    let mut traces = Vec::new();
    let mut names = Vec::new();
    for path in &paths {
        match read_trace_file(path) {
            Ok(t) => {
                traces.push(t);
                names.push(trace_id(path));
            }
            Err(e) => eprintln!("warning: skipping {}: {e}", path.display()),
        }
    }

    let report = power_sweep(&traces, args.attenuation_db);
    for failure in &report.failures {
        eprintln!(
            "warning: {} skipped: {}",
            names[failure.index], failure.reason
        );
    }

    let mut out = String::from(
        "photon_number,q_internal,q_loaded,q_coupling_mag,f_r_hz,chip_power_dbm,trace_id\n",
    );
    for p in &report.points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.photon_number,
            p.fit.q_internal,
            p.fit.q_loaded,
            p.fit.q_coupling_mag,
            p.fit.f_r_hz,
            p.incident_power_dbm,
            names[p.trace_index],
        );
    }
    std::fs::write(&args.out, out).map_err(|e| io_err(&args.out, e))?;
    println!(
        "analyzed {} of {} traces ({} skipped), results in {}",
        report.points.len(),
        traces.len(),
        report.failures.len(),
        args.out.display()
    );
    Ok(())
}
