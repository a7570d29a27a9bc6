//! The three subcommands: `parameterize`, `check`, `metrics`.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use sdmce_core::io::{self, MeshFormat, UvFormat};
use sdmce_core::mesh::{diagnose, TriMesh};
use sdmce_core::optimizer::NcgConfig;
use sdmce_core::pipeline::{self, DeltaRule, MuMode, PipelineError, RunConfig};
use sdmce_core::tuning::{write_history_csv, BoundaryInit};
use sdmce_core::util::fnv1a_hex;
use sdmce_core::{ObjectiveVariant, QualityReport, SchurMode};

use crate::exit;
use crate::svg::{render_svg, SvgOptions};

#[derive(Args, Debug, Clone)]
pub struct ParameterizeArgs {
    /// Input mesh file(s), OBJ or OFF.
    #[arg(long, required = true, num_args = 1..)]
    pub input: Vec<PathBuf>,
    /// Parameterized mesh output (.obj with vt records, or .csv). With
    /// several inputs this is a directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// JSON quality report (with the run manifest embedded).
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// SVG rendering of the layout.
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// CSV iteration trace of the final solve.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// CSV history of the penalty tuning probes.
    #[arg(long)]
    pub history: Option<PathBuf>,
    /// Penalty weight: `auto` for adaptive tuning, or a fixed value.
    #[arg(long, default_value = "auto")]
    pub mu: String,
    /// Objective variant: `pi` subtracts the true disk area, `area` the
    /// polygon estimate.
    #[arg(long, default_value = "pi")]
    pub variant: String,
    /// Initial boundary: `equal`, `arc:RHO`, or `random[:SEED]`.
    #[arg(long, default_value = "equal")]
    pub init: String,
    /// Gate accuracy of the adaptive tuner.
    #[arg(long, default_value_t = 1e-4)]
    pub tau: f64,
    /// Schur complement strategy: `explicit` or `implicit`.
    #[arg(long, default_value = "explicit")]
    pub schur: String,
    /// Skip folding repair.
    #[arg(long)]
    pub no_repair: bool,
    /// Seed for `--init random` when the init spec carries none.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Parallelize over independent inputs.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    /// Optimizer iteration cap.
    #[arg(long)]
    pub max_iterations: Option<usize>,
    /// Optimizer projected-gradient tolerance.
    #[arg(long)]
    pub gradient_tolerance: Option<f64>,
    /// Hinge increment rule during boundary repair: `interior`
    /// (|boundary|/|interior|) or `faces` (|boundary|/|faces|).
    #[arg(long, default_value = "interior")]
    pub delta_rule: String,
}

#[derive(Args, Debug, Clone)]
pub struct CheckArgs {
    /// Input mesh file, OBJ or OFF.
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct MetricsArgs {
    /// Input mesh file, OBJ or OFF.
    #[arg(long)]
    pub input: PathBuf,
    /// Existing parameterization: OBJ with per-vertex vt records, or a CSV
    /// of `index,u,v` rows. Defaults to the input itself (OBJ with vt).
    #[arg(long)]
    pub uv: Option<PathBuf>,
    /// Where to write the JSON report; stdout when absent.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

/// Everything needed to reproduce a run, embedded in the JSON report.
#[derive(Debug, Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    input: String,
    input_fnv1a: String,
    mu: String,
    variant: String,
    init: String,
    tau: f64,
    schur: String,
    repair: bool,
    seed: u64,
    max_iterations: usize,
    gradient_tolerance: f64,
    delta_rule: String,
}

#[derive(Debug, Serialize)]
struct ReportDocument<'a> {
    manifest: &'a Manifest,
    mu: f64,
    repair_stalled: bool,
    solve_seconds: f64,
    report: &'a QualityReport,
}

fn mesh_format(path: &Path) -> MeshFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("off") => MeshFormat::Off,
        _ => MeshFormat::Obj,
    }
}

fn parse_mu(s: &str) -> Result<MuMode, String> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(MuMode::Auto);
    }
    let v: f64 = s.parse().map_err(|_| format!("bad --mu '{s}'"))?;
    if v < 0.0 {
        return Err(format!("--mu must be nonnegative, got {v}"));
    }
    Ok(MuMode::Fixed(v))
}

fn parse_variant(s: &str) -> Result<ObjectiveVariant, String> {
    match s {
        "pi" => Ok(ObjectiveVariant::SubtractTrueArea),
        "area" => Ok(ObjectiveVariant::SubtractPolygonArea),
        other => Err(format!("bad --variant '{other}' (expected pi|area)")),
    }
}

fn parse_init(s: &str, default_seed: u64) -> Result<BoundaryInit, String> {
    if s == "equal" {
        return Ok(BoundaryInit::EqualAngles);
    }
    if let Some(rho) = s.strip_prefix("arc:") {
        let rho: f64 = rho.parse().map_err(|_| format!("bad --init '{s}'"))?;
        return Ok(BoundaryInit::ScaledArc { rho });
    }
    if s == "random" {
        return Ok(BoundaryInit::RandomOrder { seed: default_seed });
    }
    if let Some(seed) = s.strip_prefix("random:") {
        let seed: u64 = seed.parse().map_err(|_| format!("bad --init '{s}'"))?;
        return Ok(BoundaryInit::RandomOrder { seed });
    }
    Err(format!(
        "bad --init '{s}' (expected equal | arc:RHO | random[:SEED])"
    ))
}

fn parse_schur(s: &str) -> Result<SchurMode, String> {
    match s {
        "explicit" => Ok(SchurMode::Explicit),
        "implicit" => Ok(SchurMode::Implicit),
        other => Err(format!(
            "bad --schur '{other}' (expected explicit|implicit)"
        )),
    }
}

fn parse_delta_rule(s: &str) -> Result<DeltaRule, String> {
    match s {
        "interior" => Ok(DeltaRule::BoundaryOverInterior),
        "faces" => Ok(DeltaRule::BoundaryOverFaces),
        other => Err(format!(
            "bad --delta-rule '{other}' (expected interior|faces)"
        )),
    }
}

fn build_config(args: &ParameterizeArgs) -> Result<RunConfig, String> {
    let mut ncg = NcgConfig::default();
    if let Some(m) = args.max_iterations {
        ncg.max_iterations = m;
    }
    if let Some(g) = args.gradient_tolerance {
        ncg.gradient_tolerance = g;
    }
    Ok(RunConfig {
        mu: parse_mu(&args.mu)?,
        variant: parse_variant(&args.variant)?,
        init: parse_init(&args.init, args.seed)?,
        tau: args.tau,
        ncg,
        schur_mode: parse_schur(&args.schur)?,
        repair: !args.no_repair,
        delta_rule: parse_delta_rule(&args.delta_rule)?,
    })
}

/// Resolves an output location: used directly for a single input, treated
/// as a directory (created on demand) for several.
fn resolve_out(
    base: &Option<PathBuf>,
    input: &Path,
    multi: bool,
    suffix: &str,
) -> Result<Option<PathBuf>, std::io::Error> {
    let Some(base) = base else {
        return Ok(None);
    };
    if !multi {
        return Ok(Some(base.clone()));
    }
    fs::create_dir_all(base)?;
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("mesh");
    Ok(Some(base.join(format!("{stem}{suffix}"))))
}

fn run_one(args: &ParameterizeArgs, input: &Path, multi: bool) -> i32 {
    let config = match build_config(args) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return exit::BAD_INPUT;
        }
    };
    let bytes = match fs::read(input) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", input.display());
            return exit::IO;
        }
    };
    let mesh = match io::load_mesh(bytes.as_slice(), mesh_format(input)) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", input.display());
            return exit::BAD_INPUT;
        }
    };
    let result = match pipeline::run(&mesh, &config) {
        Ok(r) => r,
        Err(PipelineError::Laplacian(e)) => {
            eprintln!("error: {}: {e}", input.display());
            return exit::BAD_INPUT;
        }
        Err(e) => {
            eprintln!("error: {}: {e}", input.display());
            return exit::SOLVER;
        }
    };

    let manifest = Manifest {
        tool: "sdmce",
        version: env!("CARGO_PKG_VERSION"),
        input: input.display().to_string(),
        input_fnv1a: fnv1a_hex(&bytes),
        mu: args.mu.clone(),
        variant: args.variant.clone(),
        init: args.init.clone(),
        tau: args.tau,
        schur: args.schur.clone(),
        repair: !args.no_repair,
        seed: args.seed,
        max_iterations: config.ncg.max_iterations,
        gradient_tolerance: config.ncg.gradient_tolerance,
        delta_rule: args.delta_rule.clone(),
    };

    let io_result = (|| -> Result<(), std::io::Error> {
        if let Some(path) = resolve_out(&args.output, input, multi, ".uv.obj")? {
            let format = match path.extension().and_then(|e| e.to_str()) {
                Some(ext) if ext.eq_ignore_ascii_case("csv") => UvFormat::Csv,
                _ => UvFormat::ObjVt,
            };
            let file = fs::File::create(&path)?;
            io::write_parameterized(&mesh, &result.embedding.points, file, format)
                .map_err(|e| std::io::Error::other(e.to_string()))?;
        }
        if let Some(path) = resolve_out(&args.report, input, multi, ".report.json")? {
            let doc = ReportDocument {
                manifest: &manifest,
                mu: result.mu,
                repair_stalled: result.repair_stalled,
                solve_seconds: result.solve_seconds,
                report: &result.report,
            };
            fs::write(&path, serde_json::to_string_pretty(&doc)?)?;
        }
        if let Some(path) = resolve_out(&args.svg, input, multi, ".svg")? {
            fs::write(
                &path,
                render_svg(&mesh, &result.embedding.points, &SvgOptions::default()),
            )?;
        }
        if let Some(path) = resolve_out(&args.trace, input, multi, ".trace.csv")? {
            let file = fs::File::create(&path)?;
            result.trace.write_csv(file)?;
        }
        if let Some(path) = resolve_out(&args.history, input, multi, ".history.csv")? {
            let file = fs::File::create(&path)?;
            write_history_csv(result.tune_history.as_deref().unwrap_or(&[]), file)?;
        }
        Ok(())
    })();
    if let Err(e) = io_result {
        eprintln!("error: writing outputs for {}: {e}", input.display());
        return exit::IO;
    }

    println!(
        "{}: mu = {}, E_C = {:.6e}, eps_A = {:.6e}, mean angle error = {:.6e}, foldings = {}{}",
        input.display(),
        result.mu,
        result.report.e_cd,
        result.report.eps_a_signed,
        result.report.angle_error_mean,
        result.report.folding.total(),
        if result.repair_stalled {
            " (repair stalled)"
        } else {
            ""
        }
    );
    if result.repair_stalled {
        exit::RESIDUAL_FOLDINGS
    } else {
        exit::OK
    }
}

/// Full pipeline over one or more inputs; with `--jobs > 1`, independent
/// inputs run on separate threads. Returns the worst exit code.
pub fn cmd_parameterize(args: &ParameterizeArgs) -> i32 {
    let multi = args.input.len() > 1;
    if !multi || args.jobs <= 1 {
        return args
            .input
            .iter()
            .map(|input| run_one(args, input, multi))
            .max()
            .unwrap_or(exit::BAD_INPUT);
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let worst = std::sync::atomic::AtomicI32::new(exit::OK);
    std::thread::scope(|scope| {
        for _ in 0..args.jobs.min(args.input.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                let Some(input) = args.input.get(i) else {
                    break;
                };
                let code = run_one(args, input, true);
                worst.fetch_max(code, std::sync::atomic::Ordering::Relaxed);
            });
        }
    });
    worst.into_inner()
}

/// Prints mesh diagnostics as JSON; exit 0 only for a clean disk.
pub fn cmd_check(args: &CheckArgs) -> i32 {
    let bytes = match fs::read(&args.input) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.input.display());
            return exit::IO;
        }
    };
    let (vertices, faces) = match io::load_raw(bytes.as_slice(), mesh_format(&args.input)) {
        Ok(parts) => parts,
        Err(e) => {
            eprintln!("error: {}: {e}", args.input.display());
            return exit::BAD_INPUT;
        }
    };
    let diagnostics = diagnose(&vertices, &faces);
    println!(
        "{}",
        serde_json::to_string_pretty(&diagnostics).expect("diagnostics serialize")
    );
    if diagnostics.is_disk {
        exit::OK
    } else {
        exit::BAD_INPUT
    }
}

/// Audits an existing parameterization: loads the mesh and its UVs, then
/// emits the full quality report without solving.
pub fn cmd_metrics(args: &MetricsArgs) -> i32 {
    let bytes = match fs::read(&args.input) {
        Ok(b) => b,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.input.display());
            return exit::IO;
        }
    };
    let mesh = match io::load_mesh(bytes.as_slice(), mesh_format(&args.input)) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {}: {e}", args.input.display());
            return exit::BAD_INPUT;
        }
    };
    let uv_path = args.uv.as_ref().unwrap_or(&args.input);
    let uv = match load_uvs(uv_path, &mesh) {
        Ok(uv) => uv,
        Err(msg) => {
            eprintln!("error: {}: {msg}", uv_path.display());
            return exit::BAD_INPUT;
        }
    };
    let report = match pipeline::audit(&mesh, &uv) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return exit::BAD_INPUT;
        }
    };
    let json = serde_json::to_string_pretty(&report).expect("report serializes");
    match &args.report {
        Some(path) => {
            if let Err(e) = fs::write(path, json) {
                eprintln!("error: writing {}: {e}", path.display());
                return exit::IO;
            }
        }
        None => println!("{json}"),
    }
    exit::OK
}

fn load_uvs(path: &Path, mesh: &TriMesh) -> Result<Vec<sdmce_core::util::P2>, String> {
    let bytes = fs::read(path).map_err(|e| e.to_string())?;
    let is_csv = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        io::load_uv_csv(bytes.as_slice(), mesh.vertex_count()).map_err(|e| e.to_string())
    } else {
        let data = io::parse_obj(bytes.as_slice()).map_err(|e| e.to_string())?;
        if data.vertices.len() != mesh.vertex_count() {
            return Err(format!(
                "UV mesh has {} vertices, input has {}",
                data.vertices.len(),
                mesh.vertex_count()
            ));
        }
        data.vertex_uvs().map_err(|e| e.to_string())
    }
}
