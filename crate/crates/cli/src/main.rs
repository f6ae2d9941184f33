//! Command-line front end: analyze / stratify / trace / span / cartan.
//!
//! Exit codes: 0 success, 2 input error, 3 certificate or verdict failure,
//! 4 resolution error (grid too coarse for the requested search).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

use nullitylab::generators::{chain_to_boundary, ChainParams};
use nullitylab::geometry;
use nullitylab::nullity::{stratify, NullityField};
use nullitylab::span::{confinement_report, ReportParams};
use nullitylab::sweep::cartan_sweep;
use nullitylab::{DomainGrid, Error as LabError, ImmersionSpec, SampledGrid};

const EXIT_INPUT: u8 = 2;
const EXIT_CERTIFICATE: u8 = 3;
const EXIT_RESOLUTION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "nullitylab",
    version,
    about = "Strain, curvature, relative-nullity and span diagnostics for isometric \
             immersions of the flat unit disk"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Strain field, curvature summaries, flatness residuals and the
    /// isometry certificate
    Analyze(CommonArgs),
    /// Relative-nullity index, strata and discrete-interior labels per node
    Stratify(CommonArgs),
    /// Trace a generator chain from a seed point to the disk boundary
    Trace(TraceArgs),
    /// Span estimate, enclosing radius and the confinement verdict
    Span(SpanArgs),
    /// Seeded sweep checking the kernel lower bound on curvature forms
    Cartan(CartanArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyName {
    Plane,
    ScaledPlane,
    Cylinder,
    Cone,
    BentFlap,
    ConfinementTorus,
    SphereChart,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
    Both,
}

#[derive(Args)]
struct CommonArgs {
    /// Built-in immersion family
    #[arg(long, value_enum)]
    family: Option<FamilyName>,

    /// Sampled-grid JSON file (alternative to --family)
    #[arg(long)]
    grid: Option<PathBuf>,

    /// Grid resolution (odd, >= 21)
    #[arg(long, default_value_t = 101)]
    resolution: usize,

    /// Strain threshold for the isometry certificate
    #[arg(long, default_value_t = 1e-6)]
    tol_isometry: f64,

    /// Relative singular-value threshold for rank decisions
    #[arg(long, default_value_t = 1e-6)]
    tol_rank: f64,

    /// Jump budget schedule, comma separated, strictly decreasing
    #[arg(long, default_value = "0.05")]
    epsilon: String,

    /// RNG seed for property sweeps
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,

    #[arg(long, value_enum, default_value_t = OutputFormat::Both)]
    format: OutputFormat,

    /// Domain dimension (plane / confinement-torus)
    #[arg(long, default_value_t = 2)]
    m: usize,

    /// Ambient dimension override (plane / confinement-torus)
    #[arg(long)]
    ambient_dim: Option<usize>,

    /// Scale factor (scaled-plane)
    #[arg(long, default_value_t = 2.0)]
    scale: f64,

    /// Cylinder radius
    #[arg(long, default_value_t = 0.25)]
    radius: f64,

    /// Cylinder axis angle (radians from +x1)
    #[arg(long, default_value_t = 0.0)]
    axis_angle: f64,

    /// Cone apex offset along -x1
    #[arg(long, default_value_t = 0.3)]
    apex_offset: f64,

    /// Cone opening (1/n for integer n >= 2)
    #[arg(long, default_value_t = 0.5)]
    opening: f64,

    /// Peak flap curvature (bent-flap)
    #[arg(long, default_value_t = 4.0)]
    kappa_max: f64,

    /// Flap curvature ramp length (bent-flap)
    #[arg(long, default_value_t = 0.5)]
    ramp: f64,

    /// Shell radius (confinement-torus)
    #[arg(long, default_value_t = 0.1)]
    shell_radius: f64,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Seed point, comma separated (defaults to the disk center)
    #[arg(long)]
    start: Option<String>,

    /// Reference direction for the first kernel pick (defaults to +x1)
    #[arg(long)]
    direction: Option<String>,

    /// Certificate constant for the chain defect bound (> 1)
    #[arg(long, default_value_t = 2.0)]
    c1: f64,
}

#[derive(Args)]
struct SpanArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Evaluate every node pair instead of boundary+center sampling
    #[arg(long)]
    full_pairwise: bool,

    /// Certificate constant for the chain defect bound (> 1)
    #[arg(long, default_value_t = 2.0)]
    c1: f64,
}

#[derive(Args)]
struct CartanArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Number of curvature forms to sample
    #[arg(long, default_value_t = 1000)]
    count: usize,
}

fn main() -> ExitCode {
    env_logger::init();
    if let Ok(threads) = std::env::var("NULLITYLAB_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<LabError>() {
        Some(LabError::Resolution(_)) => EXIT_RESOLUTION,
        Some(LabError::Certification(_)) => EXIT_CERTIFICATE,
        _ => EXIT_INPUT,
    }
}

fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Analyze(args) => cmd_analyze(&args),
        Command::Stratify(args) => cmd_stratify(&args),
        Command::Trace(args) => cmd_trace(&args),
        Command::Span(args) => cmd_span(&args),
        Command::Cartan(args) => cmd_cartan(&args),
    }
}

// ----- configuration helpers -----

fn validate_common(args: &CommonArgs) -> anyhow::Result<Vec<f64>> {
    if args.resolution < 21 || args.resolution % 2 == 0 {
        bail!("resolution must be odd and >= 21, got {}", args.resolution);
    }
    if args.tol_isometry <= 0.0 || args.tol_rank <= 0.0 {
        bail!("tolerances must be positive");
    }
    let epsilons: Vec<f64> = args
        .epsilon
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad epsilon '{s}': {e}")))
        .collect::<anyhow::Result<_>>()?;
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e.is_finite() && e > 0.0)) {
        bail!("epsilon schedule must be positive");
    }
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        bail!("epsilon schedule must be strictly decreasing");
    }
    Ok(epsilons)
}

fn build_spec(args: &CommonArgs) -> anyhow::Result<ImmersionSpec> {
    match (&args.family, &args.grid) {
        (Some(family), None) => {
            let m = args.m;
            let spec = match family {
                FamilyName::Plane => ImmersionSpec::plane(m, args.ambient_dim.unwrap_or(m + 1)),
                FamilyName::ScaledPlane => {
                    ImmersionSpec::scaled_plane(m, args.ambient_dim.unwrap_or(m + 1), args.scale)
                }
                FamilyName::Cylinder => ImmersionSpec::cylinder(args.radius, args.axis_angle),
                FamilyName::Cone => ImmersionSpec::cone(args.apex_offset, args.opening),
                FamilyName::BentFlap => ImmersionSpec::bent_flap_disk(args.kappa_max, args.ramp),
                FamilyName::ConfinementTorus => ImmersionSpec::confinement_torus_in(
                    m,
                    args.ambient_dim.unwrap_or(2 * m),
                    args.shell_radius,
                ),
                FamilyName::SphereChart => Ok(ImmersionSpec::sphere_chart()),
            }?;
            Ok(spec)
        }
        (None, Some(path)) => {
            let samples = SampledGrid::read_file(path)
                .with_context(|| format!("reading sampled grid {}", path.display()))?;
            Ok(ImmersionSpec::from_samples(samples))
        }
        _ => bail!("give exactly one of --family or --grid"),
    }
}

fn parse_point(text: &str, m: usize) -> anyhow::Result<DVector<f64>> {
    let coords: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad coordinate '{s}': {e}")))
        .collect::<anyhow::Result<_>>()?;
    if coords.len() != m {
        bail!("expected {m} coordinates, got {}", coords.len());
    }
    Ok(DVector::from_vec(coords))
}

fn write_out(dir: &Path, name: &str, content: &str) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn wants_json(format: OutputFormat) -> bool {
    matches!(format, OutputFormat::Json | OutputFormat::Both)
}

fn wants_csv(format: OutputFormat) -> bool {
    matches!(format, OutputFormat::Csv | OutputFormat::Both)
}

fn field_csv(grid: &DomainGrid, rows: &[(usize, f64)]) -> String {
    let mut out = String::new();
    for i in 0..grid.dim() {
        out.push_str(&format!("x_{},", i + 1));
    }
    out.push_str("value\n");
    for &(flat, value) in rows {
        for v in grid.point(flat).iter() {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{value}\n"));
    }
    out
}

fn build_field(spec: &ImmersionSpec, args: &CommonArgs) -> anyhow::Result<NullityField> {
    let grid = DomainGrid::new(spec.domain_dim(), args.resolution)?;
    Ok(stratify(spec, &grid, args.tol_rank)?)
}

// ----- analyze -----

#[derive(Serialize)]
struct CurvatureSummary {
    schema_version: u32,
    family: String,
    m: usize,
    d: usize,
    resolution: usize,
    analyzed_nodes: usize,
    max_strain: f64,
    max_gauss_residual: f64,
    max_codazzi_residual: f64,
    codazzi_step: f64,
    max_curvature_component: f64,
    max_tangential_hessian: f64,
}

#[derive(Serialize)]
struct IsometryCertificate {
    schema_version: u32,
    family: String,
    resolution: usize,
    tol_isometry: f64,
    max_strain: f64,
    certified: bool,
    verdict: String,
}

fn cmd_analyze(args: &CommonArgs) -> anyhow::Result<u8> {
    validate_common(args)?;
    let spec = build_spec(args)?;
    let grid = DomainGrid::new(spec.domain_dim(), args.resolution)?;
    let h = grid.spacing();

    struct NodeDiag {
        flat: usize,
        strain: f64,
        gauss: f64,
        codazzi: Option<f64>,
        curvature: f64,
        tangential: f64,
    }

    use rayon::prelude::*;
    let nodes: Vec<Option<NodeDiag>> = grid
        .masked_indices()
        .into_par_iter()
        .map(|flat| -> anyhow::Result<Option<NodeDiag>> {
            let x = grid.point(flat);
            if spec.excluded(&x) {
                return Ok(None);
            }
            let jet = match spec.jet(&x) {
                Ok(jet) => jet,
                Err(LabError::Margin { .. }) => return Ok(None),
                Err(e) => return Err(e.into()),
            };
            let strain = geometry::strain_from_jet(&jet).max_abs();
            let frame = geometry::normal_frame_from_jet(&jet)?;
            let form = geometry::second_form_from_jet(&jet, &frame)?;
            let gauss = geometry::gauss_residual(&form);
            let codazzi = match geometry::codazzi_residual(&spec, &x, h) {
                Ok(r) => Some(r.residual),
                Err(LabError::Margin { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            Ok(Some(NodeDiag {
                flat,
                strain,
                gauss,
                codazzi,
                curvature: form.max_component(),
                tangential: form.tangential_max(),
            }))
        })
        .collect::<anyhow::Result<_>>()?;
    let nodes: Vec<NodeDiag> = nodes.into_iter().flatten().collect();
    if nodes.is_empty() {
        bail!("no analyzable nodes at this resolution");
    }

    let max_strain = nodes.iter().map(|n| n.strain).fold(0.0f64, f64::max);
    let max_gauss = nodes.iter().map(|n| n.gauss).fold(0.0f64, f64::max);
    let max_codazzi = nodes.iter().filter_map(|n| n.codazzi).fold(0.0f64, f64::max);
    let max_curvature = nodes.iter().map(|n| n.curvature).fold(0.0f64, f64::max);
    let max_tangential = nodes.iter().map(|n| n.tangential).fold(0.0f64, f64::max);
    let certified = max_strain <= args.tol_isometry;

    if wants_csv(args.format) {
        let strain_rows: Vec<(usize, f64)> = nodes.iter().map(|n| (n.flat, n.strain)).collect();
        write_out(&args.out_dir, "strain_field.csv", &field_csv(&grid, &strain_rows))?;
        let gauss_rows: Vec<(usize, f64)> = nodes.iter().map(|n| (n.flat, n.gauss)).collect();
        write_out(&args.out_dir, "gauss_residual_field.csv", &field_csv(&grid, &gauss_rows))?;
        let codazzi_rows: Vec<(usize, f64)> = nodes
            .iter()
            .filter_map(|n| n.codazzi.map(|c| (n.flat, c)))
            .collect();
        write_out(
            &args.out_dir,
            "codazzi_residual_field.csv",
            &field_csv(&grid, &codazzi_rows),
        )?;
    }
    if wants_json(args.format) {
        let summary = CurvatureSummary {
            schema_version: 1,
            family: spec.family_id().to_string(),
            m: spec.domain_dim(),
            d: spec.ambient_dim(),
            resolution: args.resolution,
            analyzed_nodes: nodes.len(),
            max_strain,
            max_gauss_residual: max_gauss,
            max_codazzi_residual: max_codazzi,
            codazzi_step: h,
            max_curvature_component: max_curvature,
            max_tangential_hessian: max_tangential,
        };
        write_out(
            &args.out_dir,
            "sff_summary.json",
            &serde_json::to_string_pretty(&summary)?,
        )?;
        let certificate = IsometryCertificate {
            schema_version: 1,
            family: spec.family_id().to_string(),
            resolution: args.resolution,
            tol_isometry: args.tol_isometry,
            max_strain,
            certified,
            verdict: if certified { "PASS".into() } else { "FAIL".into() },
        };
        write_out(
            &args.out_dir,
            "isometry_certificate.json",
            &serde_json::to_string_pretty(&certificate)?,
        )?;
    }

    println!(
        "certificate {} (max strain {max_strain:.3e}, tol {:.0e})",
        if certified { "PASS" } else { "FAIL" },
        args.tol_isometry
    );
    Ok(if certified { 0 } else { EXIT_CERTIFICATE })
}

// ----- stratify -----

fn cmd_stratify(args: &CommonArgs) -> anyhow::Result<u8> {
    validate_common(args)?;
    let spec = build_spec(args)?;
    let field = build_field(&spec, args)?;
    if wants_csv(args.format) {
        write_out(&args.out_dir, "nullity_field.csv", &field.to_csv())?;
    }
    if wants_json(args.format) {
        write_out(
            &args.out_dir,
            "nullity_summary.json",
            &field.summary_json(spec.family_id(), spec.ambient_dim()),
        )?;
    }
    println!(
        "index sequence {:?}, open coverage {:.4}",
        field.index_sequence(),
        field.open_coverage()
    );
    Ok(0)
}

// ----- trace -----

#[derive(Serialize)]
struct TraceSummary {
    schema_version: u32,
    family: String,
    epsilons: Vec<f64>,
    measured_defects: Vec<f64>,
    defect_bounds: Vec<f64>,
    segments: Vec<usize>,
}

fn cmd_trace(args: &TraceArgs) -> anyhow::Result<u8> {
    let epsilons = validate_common(&args.common)?;
    let spec = build_spec(&args.common)?;
    let m = spec.domain_dim();
    let start = match &args.start {
        Some(text) => parse_point(text, m)?,
        None => DVector::zeros(m),
    };
    let reference = args
        .direction
        .as_ref()
        .map(|text| parse_point(text, m))
        .transpose()?;
    let field = build_field(&spec, &args.common)?;
    let params = ChainParams {
        c1: args.c1,
        rank_tau: args.common.tol_rank,
        initial_reference: reference,
        ..ChainParams::default()
    };

    let mut summary = TraceSummary {
        schema_version: 1,
        family: spec.family_id().to_string(),
        epsilons: epsilons.clone(),
        measured_defects: Vec::new(),
        defect_bounds: Vec::new(),
        segments: Vec::new(),
    };
    for (i, &epsilon) in epsilons.iter().enumerate() {
        let chain = chain_to_boundary(&spec, &start, epsilon, &field, &params)?;
        summary.measured_defects.push(chain.measured_defect);
        summary.defect_bounds.push(chain.defect_bound);
        summary.segments.push(chain.segments.len());
        let stem = if epsilons.len() == 1 {
            "chain".to_string()
        } else {
            format!("chain_{i}")
        };
        if wants_json(args.common.format) {
            write_out(
                &args.common.out_dir,
                &format!("{stem}.json"),
                &chain.to_json(spec.family_id()),
            )?;
        }
        if wants_csv(args.common.format) {
            write_out(
                &args.common.out_dir,
                &format!("{stem}_polyline.csv"),
                &chain.polyline_csv(&spec)?,
            )?;
        }
        println!(
            "epsilon {epsilon}: {} segment(s), defect {:.3e} <= bound {:.3e}",
            chain.segments.len(),
            chain.measured_defect,
            chain.defect_bound
        );
    }
    if wants_json(args.common.format) {
        write_out(
            &args.common.out_dir,
            "trace_summary.json",
            &serde_json::to_string_pretty(&summary)?,
        )?;
    }
    Ok(0)
}

// ----- span -----

fn cmd_span(args: &SpanArgs) -> anyhow::Result<u8> {
    let epsilons = validate_common(&args.common)?;
    let spec = build_spec(&args.common)?;
    let field = build_field(&spec, &args.common)?;
    let params = ReportParams {
        epsilon: epsilons[0],
        chain: ChainParams {
            c1: args.c1,
            rank_tau: args.common.tol_rank,
            ..ChainParams::default()
        },
        full_pairwise: args.full_pairwise,
    };
    let report = confinement_report(&spec, &field, &params)?;
    if wants_json(args.common.format) {
        write_out(&args.common.out_dir, "confinement_report.json", &report.to_json())?;
        write_out(&args.common.out_dir, "confinement_report.txt", &report.to_text())?;
    }
    print!("{}", report.to_text());
    Ok(if report.isometry_certified { 0 } else { EXIT_CERTIFICATE })
}

// ----- cartan -----

fn cmd_cartan(args: &CartanArgs) -> anyhow::Result<u8> {
    validate_common(&args.common)?;
    let outcome = cartan_sweep(args.count, args.common.seed, args.common.tol_rank)?;
    if wants_json(args.common.format) {
        write_out(&args.common.out_dir, "cartan_summary.json", &outcome.to_json())?;
    }
    println!(
        "{} forms: {} violations, max null residual {:.3e}, min slack {}",
        outcome.forms_checked,
        outcome.bound_violations,
        outcome.max_null_residual,
        outcome.min_slack
    );
    Ok(if outcome.passed() { 0 } else { EXIT_CERTIFICATE })
}
