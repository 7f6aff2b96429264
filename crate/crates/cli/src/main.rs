use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bubble_core::config::RunConfig;
use bubble_core::field::{evaluate_dominant, write_csv, BubbleModel, FieldRequest, TimeGrid, DECOMPOSITION_SIGNS};
use bubble_core::geometry::{load_mesh, make_ellipsoid, make_icosphere, MeshFormat};
use bubble_core::potentials::{shape_factors, QuadratureConfig};
use bubble_core::tuner::{tune, FreeParameter, ProbeWindow, TuningProblem};
use bubble_core::validation::{run_suite, Suite};
use bubble_core::{Error, SurfaceMesh, Vec3};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "bubble",
    version,
    about = "Dominant pressure field near a resonating micro-bubble"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    Icosphere,
    Ellipsoid,
}

#[derive(Subcommand)]
enum Command {
    /// Build or convert a closed triangle mesh and write it as OFF.
    Mesh {
        #[arg(long, conflicts_with = "input")]
        shape: Option<Shape>,
        #[arg(long = "in")]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        subdiv: u32,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Semi-axes a,b,c for the ellipsoid.
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Shape factors of a reference mesh.
    Factors {
        #[arg(long)]
        mesh: PathBuf,
    },
    /// Dominant scattered field on a set of points and a time grid.
    Field {
        #[arg(long)]
        config: PathBuf,
        /// CSV of x,y,z rows; a non-numeric first line is treated as a header.
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        t0: f64,
        #[arg(long)]
        t1: f64,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        decompose: bool,
        /// Multiplies the pulse amplitude from the config.
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Find k_c_bar or delta giving a target peak pressure at standoff delta^q.
    Tune {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        target: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, value_parser = ["k_c_bar", "delta"])]
        free: String,
        #[arg(long)]
        lo: f64,
        #[arg(long)]
        hi: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Probe direction from z.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        direction: Option<Vec<f64>>,
        /// Probe window length; defaults to four pulse lengths.
        #[arg(long)]
        duration: Option<f64>,
        /// Probe window step; defaults to T_p / 200.
        #[arg(long)]
        dt: Option<f64>,
    },
    /// Run an oracle suite and print the reports as JSON.
    Validate {
        #[arg(long, default_value = "all", value_parser = ["all", "geometry", "ode", "identities"])]
        suite: String,
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        mesh_levels: Vec<u32>,
    },
}

enum Failure {
    Usage(String),
    Core(Error),
    Failed(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

type CliResult = Result<(), Failure>;

fn io_err(path: &Path, source: std::io::Error) -> Failure {
    Failure::Core(Error::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CliResult {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn mesh_summary(mesh: &SurfaceMesh) -> serde_json::Value {
    json!({
        "vertices": mesh.num_vertices(),
        "edges": mesh.num_edges(),
        "faces": mesh.num_faces(),
        "euler_characteristic": mesh.euler_characteristic(),
        "area": mesh.area(),
        "volume": mesh.volume(),
    })
}

fn read_mesh(path: &Path) -> Result<SurfaceMesh, Failure> {
    let format = MeshFormat::from_path(path).ok_or_else(|| {
        Failure::Usage(format!(
            "cannot infer mesh format from {}; use .off or .obj",
            path.display()
        ))
    })?;
    Ok(load_mesh(path, format)?)
}

fn cmd_mesh(
    shape: Option<Shape>,
    input: Option<PathBuf>,
    subdiv: u32,
    radius: f64,
    radii: Option<Vec<f64>>,
    out: &Path,
) -> CliResult {
    let mesh = match (shape, input) {
        (Some(Shape::Icosphere), None) => make_icosphere(radius, subdiv)?,
        (Some(Shape::Ellipsoid), None) => {
            let r = radii
                .filter(|r| r.len() == 3)
                .ok_or_else(|| Failure::Usage("--shape ellipsoid needs --radii a,b,c".into()))?;
            make_ellipsoid([r[0], r[1], r[2]], subdiv)?
        }
        (None, Some(path)) => read_mesh(&path)?,
        _ => return Err(Failure::Usage("give exactly one of --shape or --in".into())),
    };
    write_file(out, mesh.to_off_string().as_bytes())?;
    println!("{}", mesh_summary(&mesh));
    Ok(())
}

fn cmd_factors(path: &Path) -> CliResult {
    let mesh = read_mesh(path)?;
    let factors = shape_factors(&mesh, &QuadratureConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&factors).map_err(Error::from)?);
    Ok(())
}

fn parse_points(path: &Path) -> Result<Vec<Vec3>, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        let nums: Option<Vec<f64>> = cols.iter().map(|c| c.parse::<f64>().ok()).collect();
        match nums {
            Some(v) if v.len() == 3 && v.iter().all(|c| c.is_finite()) => points.push(Vec3::new(v[0], v[1], v[2])),
            None if points.is_empty() && i == 0 => continue,
            _ => {
                return Err(Failure::Core(Error::Parse {
                    line: i + 1,
                    msg: format!("expected x,y,z in {}", path.display()),
                }))
            }
        }
    }
    if points.is_empty() {
        return Err(Failure::Core(Error::InvalidParameter(format!(
            "no points in {}",
            path.display()
        ))));
    }
    Ok(points)
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().map(|s| s.to_os_string()).unwrap_or_default();
    name.push(".meta.json");
    out.with_file_name(name)
}

#[allow(clippy::too_many_arguments)]
fn cmd_field(
    config: &Path,
    points: &Path,
    t0: f64,
    t1: f64,
    dt: f64,
    decompose: bool,
    amplitude: f64,
    out: &Path,
) -> CliResult {
    let cfg = RunConfig::load(config)?;
    let points = parse_points(points)?;
    let times = TimeGrid::new(t0, t1, dt)?;
    if !amplitude.is_finite() {
        return Err(Failure::Usage("--amplitude must be finite".into()));
    }
    let reference = cfg.mesh.build()?;
    let pulse = cfg.incident().with_amplitude_scaled(amplitude);
    let model = BubbleModel::new(cfg.spec(), &reference, pulse, &cfg.quadrature)?;
    let request = FieldRequest {
        points: points.clone(),
        times,
        want_decomposition: decompose,
    };
    let samples = evaluate_dominant(&model, &request)?;

    let mut csv = Vec::new();
    write_csv(&samples, &mut csv).map_err(|e| io_err(out, e))?;
    let q_profile: Vec<serde_json::Value> = points
        .iter()
        .map(|x| {
            Ok(json!({
                "point": [x.x, x.y, x.z],
                "Q": model.q(x)?,
                "sphere_equivalent": 1.0 / (x - model.spec.z).norm(),
            }))
        })
        .collect::<Result<_, Error>>()?;
    let meta = json!({
        "tool": "bubble",
        "versions": {"bubble-cli": env!("CARGO_PKG_VERSION"), "bubble-core": bubble_core::VERSION},
        "config": cfg,
        "amplitude_factor": amplitude,
        "time_grid": times,
        "points": points.len(),
        "decomposition": decompose,
        "sign_pair": DECOMPOSITION_SIGNS,
        "constants": model.constants,
        "shape_factors": {
            "A_dB": model.factors.a_db,
            "area_B": model.factors.area_b,
            "vol_B": model.factors.vol_b,
        },
        "omega_exact": model.constants.omega_exact(),
        "Q": q_profile,
    });
    let meta = serde_json::to_string_pretty(&meta).map_err(Error::from)?;
    write_file(out, &csv)?;
    write_file(&sidecar_path(out), meta.as_bytes())?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_tune(
    config: &Path,
    target: f64,
    q: f64,
    free: &str,
    lo: f64,
    hi: f64,
    tol: f64,
    direction: Option<Vec<f64>>,
    duration: Option<f64>,
    dt: Option<f64>,
) -> CliResult {
    let cfg = RunConfig::load(config)?;
    let free: FreeParameter = free.parse()?;
    let pulse = cfg.incident();
    let mut probe = ProbeWindow::for_pulse(&pulse)?;
    if let Some(d) = direction {
        if d.len() != 3 {
            return Err(Failure::Usage("--direction needs x,y,z".into()));
        }
        probe.direction = Vec3::new(d[0], d[1], d[2]);
    }
    if let Some(d) = duration {
        probe.duration = d;
    }
    if let Some(d) = dt {
        probe.dt = d;
    }
    let problem = TuningProblem {
        target_peak: target,
        standoff_q: q,
        free_parameter: free,
        bounds: (lo, hi),
        fixed: cfg.spec(),
        pulse,
        tolerance: tol,
        probe,
    };
    problem.validate()?;
    let reference = cfg.mesh.build()?;
    let factors = shape_factors(&reference, &cfg.quadrature)?;
    let result = tune(&problem, &reference, &factors)?;
    println!("{}", serde_json::to_string_pretty(&result).map_err(Error::from)?);
    Ok(())
}

fn cmd_validate(suite: &str, levels: &[u32]) -> CliResult {
    let suite: Suite = suite.parse()?;
    if levels.is_empty() {
        return Err(Failure::Usage("--mesh-levels needs at least one level".into()));
    }
    let reports = run_suite(suite, levels, &QuadratureConfig::default())?;
    println!("{}", serde_json::to_string_pretty(&reports).map_err(Error::from)?);
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Failed(format!(
            "{} report(s) failed: {}",
            failed.len(),
            failed.join(", ")
        )))
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::NoBracket { .. } | Error::Numerical(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Mesh {
            shape,
            input,
            subdiv,
            radius,
            radii,
            out,
        } => cmd_mesh(shape, input, subdiv, radius, radii, &out),
        Command::Factors { mesh } => cmd_factors(&mesh),
        Command::Field {
            config,
            points,
            t0,
            t1,
            dt,
            decompose,
            amplitude,
            out,
        } => cmd_field(&config, &points, t0, t1, dt, decompose, amplitude, &out),
        Command::Tune {
            config,
            target,
            q,
            free,
            lo,
            hi,
            tol,
            direction,
            duration,
            dt,
        } => cmd_tune(&config, target, q, &free, lo, hi, tol, direction, duration, dt),
        Command::Validate { suite, mesh_levels } => cmd_validate(&suite, &mesh_levels),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Core(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Failed(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
