use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nvrf_core::concentrators::{cpw_alpha_ref, cpw_field_map, loop_alpha_ref, loop_field_map};
use nvrf_core::config::{parse_config, Config};
use nvrf_core::fmt::sci;
use nvrf_core::model::{magnetic_from_power, BeamGeometry, PlLaw, ProtocolKind};
use nvrf_core::probe::{avg_alpha_pow, optimize_probe, SearchGrid};
use nvrf_core::report::run_report;
use nvrf_core::scaling::{
    evaluate_at, exponent_csv, sweep_sensitivity, verify_scaling, ScalingGeometry, SweepSpec, VerifySettings,
    ZetaMode,
};
use nvrf_core::NvError;

#[derive(Parser)]
#[command(name = "nvrf", version, about = "Power sensitivity of NV-diamond broadband RF detectors")]
struct Cli {
    /// Worker threads for sweeps and searches (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Source {
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Named parameter preset; a config file given alongside is applied on top.
    #[arg(long)]
    preset: Option<String>,
    /// Output directory, overriding `out.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Geometry {
    Cpw,
    Loop,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Beam {
    Parallel,
    Perpendicular,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Protocol {
    Slope,
    Variance,
}

impl From<Protocol> for ProtocolKind {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::Slope => ProtocolKind::Slope,
            Protocol::Variance => ProtocolKind::Variance,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sensitivity of the configured probe.
    Eval {
        #[command(flatten)]
        source: Source,
        /// Average the field over a sampled map instead of using the
        /// reference field.
        #[arg(long)]
        field_map: bool,
        /// Include waveguide return conductors in the field map.
        #[arg(long)]
        returns: bool,
    },
    /// Sensitivity against concentrator size.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value = "cpw")]
        geometry: Geometry,
        #[arg(long, value_enum, default_value = "parallel")]
        beam: Beam,
        /// Laser powers in W (default: `optics.p_laser`).
        #[arg(long, value_delimiter = ',')]
        lasers: Vec<f64>,
    },
    /// Grid search for the best normalised probe dimensions.
    Optimize {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value = "cpw")]
        geometry: Geometry,
        /// Protocol (default: `protocol.kind`).
        #[arg(long, value_enum)]
        protocol: Option<Protocol>,
        #[arg(long)]
        returns: bool,
    },
    /// Fit asymptotic exponents and compare them with the scaling tables.
    Scaling {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value = "cpw")]
        geometry: Geometry,
        /// Waveguide beam direction; both when omitted.
        #[arg(long, value_enum)]
        beam: Option<Beam>,
    },
    /// Full report bundle: JSON plus figure and exponent CSVs.
    Report {
        #[command(flatten)]
        source: Source,
    },
    /// Write a sampled field map as CSV.
    ExportMap {
        #[command(flatten)]
        source: Source,
        #[arg(long, value_enum, default_value = "cpw")]
        geometry: Geometry,
        #[arg(long)]
        returns: bool,
    },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Model(NvError),
    Io(PathBuf, std::io::Error),
}

impl From<NvError> for CliError {
    fn from(e: NvError) -> Self {
        CliError::Model(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn load(source: &Source) -> CliResult<(Config, PathBuf)> {
    let text = match &source.config {
        Some(path) => Some(std::fs::read_to_string(path).map_err(|e| CliError::Io(path.clone(), e))?),
        None => None,
    };
    let cfg = match (&source.preset, text) {
        (Some(name), text) => {
            let base = Config::preset(name).ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?;
            match text {
                Some(t) => base.overlay(&t)?,
                None => base,
            }
        }
        (None, Some(t)) => parse_config(&t)?,
        (None, None) => return Err(CliError::Usage("give --config FILE or --preset NAME".into())),
    };
    let out = source.out.clone().unwrap_or_else(|| PathBuf::from(&cfg.out_dir));
    Ok((cfg, out))
}

fn write(dir: &Path, name: &str, contents: &str) -> CliResult<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(path.clone(), e))?;
    Ok(path)
}

fn scaling_geometry(geometry: Geometry, beam: Beam) -> ScalingGeometry {
    match (geometry, beam) {
        (Geometry::Loop, _) => ScalingGeometry::Loop,
        (Geometry::Cpw, Beam::Parallel) => ScalingGeometry::CpwParallel,
        (Geometry::Cpw, Beam::Perpendicular) => ScalingGeometry::CpwPerpendicular,
    }
}

fn eval(source: &Source, field_map: bool, returns: bool) -> CliResult<()> {
    let (cfg, _) = load(source)?;
    let model = cfg.model()?;
    let geometry = ScalingGeometry::from_beam(cfg.beam);
    let constants = cfg.constants(geometry);
    let (size, alpha_ref) = match cfg.beam {
        BeamGeometry::LoopAxial => (cfg.loop_r, loop_alpha_ref(&cfg.loop_geometry()?)),
        _ => (cfg.cpw_w, cpw_alpha_ref(&cfg.cpw()?)),
    };
    let result = if let (BeamGeometry::LoopAxial, Some(_)) = (cfg.beam, cfg.t_fixed) {
        // a fixed thickness is not a size-relative region, evaluate it directly
        let region = cfg.region()?;
        let map = loop_field_map(&cfg.loop_geometry()?, &cfg.grid)?;
        let avg = avg_alpha_pow(&map, &region, model.protocol.kind.kappa())?;
        model.evaluate(avg, region.volume(), &region.footprint(cfg.beam)?, PlLaw::Saturation)?
    } else {
        let zeta = if field_map {
            ZetaMode::FieldMap {
                grid: cfg.grid,
                include_returns: returns,
            }
        } else {
            ZetaMode::default()
        };
        evaluate_at(&model, geometry, &constants, &zeta, PlLaw::Saturation, size, cfg.p_laser)?
    };
    let b = magnetic_from_power(&result, alpha_ref)?;
    println!(
        "eta = {} {} (protocol {}, beam {}, regime {})",
        sci(result.eta),
        result.unit.label(),
        cfg.protocol.name(),
        cfg.beam.name(),
        result.regime.map_or("unknown", |r| r.name())
    );
    println!("field sensitivity = {} {}", sci(b.value), b.unit.label());
    Ok(())
}

fn sweep(source: &Source, geometry: Geometry, beam: Beam, lasers: &[f64]) -> CliResult<()> {
    let (cfg, out) = load(source)?;
    let g = scaling_geometry(geometry, beam);
    let spec = SweepSpec {
        geometry: g,
        min: cfg.sweep_min,
        max: cfg.sweep_max,
        points: cfg.sweep_points,
        model: cfg.model()?,
        p_lasers: if lasers.is_empty() { vec![cfg.p_laser] } else { lasers.to_vec() },
        constants: cfg.constants(g),
        zeta_mode: ZetaMode::default(),
        pl_law: PlLaw::Saturation,
    };
    let table = sweep_sensitivity(&spec)?;
    let failed = table.rows.iter().filter(|r| r.error.is_some()).count();
    let name = format!("sweep_{}_{}_{}.csv", g.concentrator(), g.beam_name(), cfg.protocol.name());
    let path = write(&out, &name, &table.to_csv())?;
    println!("wrote {} ({} rows, {failed} failed points)", path.display(), table.rows.len());
    Ok(())
}

fn optimize(source: &Source, geometry: Geometry, protocol: Option<Protocol>, returns: bool) -> CliResult<()> {
    let (cfg, out) = load(source)?;
    let protocol = protocol.map_or(cfg.protocol, ProtocolKind::from);
    let map = match geometry {
        Geometry::Cpw => cpw_field_map(&cfg.cpw()?, &cfg.grid, returns)?,
        Geometry::Loop => loop_field_map(&cfg.loop_geometry()?, &cfg.grid)?,
    };
    let r = optimize_probe(&map, protocol, cfg.noise.kappa(), &SearchGrid::default_for(&map))?;
    let name = format!(
        "optimize_{}_{}.csv",
        if geometry == Geometry::Cpw { "cpw" } else { "loop" },
        protocol.name()
    );
    let path = write(&out, &name, &r.trace_csv())?;
    println!(
        "optimum c1 = {:.2}, c2 = {:.2}, zeta = {}, volume = {} m^3 ({} candidates skipped)",
        r.c1_opt,
        r.c2_opt,
        sci(r.zeta),
        sci(r.volume),
        r.rejected
    );
    println!(
        "1% plateau c1 in [{:.2}, {:.2}], c2 in [{:.2}, {:.2}]",
        r.plateau.c1.0, r.plateau.c1.1, r.plateau.c2.0, r.plateau.c2.1
    );
    println!("wrote {}", path.display());
    Ok(())
}

fn scaling(source: &Source, geometry: Geometry, beam: Option<Beam>) -> CliResult<()> {
    let (cfg, out) = load(source)?;
    let geometries: Vec<ScalingGeometry> = match (geometry, beam) {
        (Geometry::Loop, _) => vec![ScalingGeometry::Loop],
        (Geometry::Cpw, Some(b)) => vec![scaling_geometry(geometry, b)],
        (Geometry::Cpw, None) => vec![ScalingGeometry::CpwParallel, ScalingGeometry::CpwPerpendicular],
    };
    let records = verify_scaling(&cfg.model()?, &cfg.constants(geometries[0]), &geometries, &VerifySettings::default())?;
    let passed = records.iter().filter(|r| r.pass).count();
    let name = format!(
        "exponents_{}.csv",
        geometries.iter().map(|g| g.beam_name()).collect::<Vec<_>>().join("_")
    );
    let path = write(&out, &name, &exponent_csv(&records))?;
    println!("wrote {} ({passed}/{} cells agree)", path.display(), records.len());
    Ok(())
}

fn report(source: &Source) -> CliResult<()> {
    let (cfg, out) = load(source)?;
    let bundle = run_report(&cfg)?;
    let written = bundle.write_to(&out).map_err(|e| CliError::Io(out.clone(), e))?;
    for path in written {
        println!("wrote {}", path.display());
    }
    println!(
        "eta_slope = {} {}, eta_var = {} {}, tables {}",
        sci(bundle.section4.eta_slope.value),
        bundle.section4.eta_slope.unit,
        sci(bundle.section4.eta_var.value),
        bundle.section4.eta_var.unit,
        if bundle.tables_pass { "all pass" } else { "have failures" }
    );
    Ok(())
}

fn export_map(source: &Source, geometry: Geometry, returns: bool) -> CliResult<()> {
    let (cfg, out) = load(source)?;
    let (map, name) = match geometry {
        Geometry::Cpw => (cpw_field_map(&cfg.cpw()?, &cfg.grid, returns)?, "map_cpw.csv"),
        Geometry::Loop => (loop_field_map(&cfg.loop_geometry()?, &cfg.grid)?, "map_loop.csv"),
    };
    let path = write(&out, name, &map.to_csv())?;
    println!("wrote {} ({}x{} nodes, {} masked)", path.display(), map.nx, map.nz, map.masked_count());
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match &cli.command {
        Command::Eval {
            source,
            field_map,
            returns,
        } => eval(source, *field_map, *returns),
        Command::Sweep {
            source,
            geometry,
            beam,
            lasers,
        } => sweep(source, *geometry, *beam, lasers),
        Command::Optimize {
            source,
            geometry,
            protocol,
            returns,
        } => optimize(source, *geometry, *protocol, *returns),
        Command::Scaling { source, geometry, beam } => scaling(source, *geometry, *beam),
        Command::Report { source } => report(source),
        Command::ExportMap {
            source,
            geometry,
            returns,
        } => export_map(source, *geometry, *returns),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| run(cli)),
            Err(e) => Err(CliError::Usage(format!("--threads: {e}"))),
        },
        None => run(cli),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
