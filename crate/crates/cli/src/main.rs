mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::json;

use twomap::expansion::{default_certificate, expand_point, InteriorCertificate};
use twomap::hull::{self, HullVertex};
use twomap::membership::{
    certify_out, decide_point, DecideOptions, MembershipVerdict, NonMembershipCertificate, ScanCase, StartSet,
};
use twomap::render::{self, Method, RasterConfig, Viewport};
use twomap::uniqueness::classify::{classify_beta, classify_mixed_equal, classify_rational};
use twomap::uniqueness::{certify_uniqueness, SearchBounds, UniquenessCertificate};
use twomap::{Case, Error, SystemSpec, Vec2, TAU};

const EXIT_NEGATIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "twomap", version, about = "Attractors of the two-map systems v -> Mv - u, v -> Mv + u")]
struct Cli {
    /// Flat TOML file of flag values; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Worker threads for scan, render and the uniqueness search (0 = all cores).
    #[arg(long, global = true, env = "TWOMAP_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rasterise the attractor to PGM or PNG.
    Render(RenderArgs),
    /// Convex hull vertices.
    Hull(HullArgs),
    /// Interior certificate around the origin.
    InteriorCert(InteriorArgs),
    /// Digit expansion of a point near the origin.
    Expand(ExpandArgs),
    /// Decide whether a point lies in the attractor.
    Decide(DecideArgs),
    /// Interior verdicts over a parameter grid.
    Scan(ScanArgs),
    /// Search for a uniqueness certificate.
    Uniqueness(UniquenessArgs),
    /// Size class of the set of uniqueness.
    Classify(ClassifyArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum CaseArg {
    Positive,
    Mixed,
    Jordan,
    Complex,
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Angle {
    p: i64,
    q: i64,
}

fn parse_angle(s: &str) -> Result<Angle, String> {
    let (p, q) = s.split_once('/').ok_or_else(|| format!("angle `{s}` is not of the form p/q"))?;
    let p = p.trim().parse().map_err(|_| format!("bad numerator in `{s}`"))?;
    let q = q.trim().parse().map_err(|_| format!("bad denominator in `{s}`"))?;
    Ok(Angle { p, q })
}

fn parse_rect(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad number `{t}`")))
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|_| format!("`{s}` needs four comma separated numbers"))
}

/// `x0,x1` alone stands for the square `x0,x1,x0,x1`.
fn parse_scan_rect(s: &str) -> Result<[f64; 4], String> {
    match s.split(',').count() {
        2 => parse_rect(&format!("{s},{s}")),
        _ => parse_rect(s).map_err(|e| e.replace("four", "two or four")),
    }
}

#[derive(Args, Debug, Clone)]
struct SpecArgs {
    #[arg(long, value_enum)]
    case: Option<CaseArg>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    nu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    re: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    im: Option<f64>,
    /// Modulus of κ, used with --angle.
    #[arg(long)]
    rho: Option<f64>,
    /// Argument of κ as a fraction p/q of a full turn.
    #[arg(long, value_parser = parse_angle)]
    angle: Option<Angle>,
}

fn need(v: Option<f64>, flag: &str) -> Result<f64, String> {
    v.ok_or_else(|| format!("missing --{flag}"))
}

impl SpecArgs {
    fn rational(&self) -> Option<(f64, Angle)> {
        Some((self.rho?, self.angle?))
    }

    fn spec(&self) -> Result<SystemSpec, String> {
        if let Some((rho, a)) = self.rational() {
            if !matches!(self.case, None | Some(CaseArg::Complex)) {
                return Err("--rho/--angle describe a complex system".into());
            }
            return SystemSpec::complex_polar(rho, a.p, a.q).map_err(|e| e.to_string());
        }
        let case = self.case.ok_or("missing --case (or --rho with --angle)")?;
        let spec = match case {
            CaseArg::Positive => SystemSpec::positive_real(need(self.lambda, "lambda")?, need(self.mu, "mu")?),
            CaseArg::Mixed => SystemSpec::mixed_real(need(self.lambda, "lambda")?, need(self.mu, "mu")?),
            CaseArg::Jordan => SystemSpec::jordan(need(self.nu, "nu")?),
            CaseArg::Complex => SystemSpec::complex(need(self.re, "re")?, need(self.im, "im")?),
        };
        spec.map_err(|e| e.to_string())
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Chaos,
    Subdivision,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 512)]
    size: usize,
    #[arg(long, value_enum, default_value = "chaos")]
    method: MethodArg,
    #[arg(long, default_value_t = 1_000_000)]
    iterations: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    burn_in: u64,
    /// Maximum cylinder depth for subdivision.
    #[arg(long, default_value_t = 18)]
    depth: usize,
    /// x0,x1,y0,y1
    #[arg(long, value_parser = parse_rect)]
    viewport: Option<[f64; 4]>,
    /// Output path; `.png` writes PNG, anything else PGM.
    #[arg(long)]
    out: PathBuf,
    /// Also write a PNG with the uniqueness language drawn in red.
    #[arg(long)]
    overlay_out: Option<PathBuf>,
    /// Uniqueness certificate for the overlay (searched for when absent).
    #[arg(long)]
    overlay_cert: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum HullFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct HullArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    #[arg(long, value_enum, default_value = "json")]
    format: HullFormat,
    /// Direction budget for the irrational complex hull.
    #[arg(long)]
    directions: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InteriorArgs {
    #[command(flatten)]
    spec: SpecArgs,
    /// Re-check a certificate file instead of computing one.
    #[arg(long, value_name = "FILE")]
    verify: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExpandArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, allow_hyphen_values = true)]
    x: f64,
    #[arg(long, allow_hyphen_values = true)]
    y: f64,
    #[arg(long, default_value_t = 400)]
    steps: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum StartArg {
    Hull,
    Analytic,
}

#[derive(Args, Debug)]
struct DecideArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    y: Option<f64>,
    #[arg(long, default_value_t = 24)]
    max_depth: usize,
    #[arg(long, value_enum, default_value = "hull")]
    start: StartArg,
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,
    #[arg(long)]
    node_budget: Option<usize>,
    /// Write the non-membership certificate here when the answer is Out.
    #[arg(long)]
    certificate_out: Option<PathBuf>,
    /// Re-check a non-membership certificate file.
    #[arg(long, value_name = "FILE")]
    verify: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScanCaseArg {
    Mixed,
    Jordan,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ScanFormat {
    Csv,
    Json,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, value_enum, default_value = "mixed")]
    case: ScanCaseArg,
    /// x0,x1,y0,y1, or x0,x1 for a square (the y range is ignored for jordan)
    #[arg(long, value_parser = parse_scan_rect, default_value = "0.2,0.99,0.2,0.99")]
    rect: [f64; 4],
    #[arg(long, default_value_t = 32)]
    resolution: usize,
    #[arg(long, default_value_t = 24)]
    max_depth: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: ScanFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum TextFormat {
    Json,
    Text,
}

#[derive(Args, Debug)]
struct UniquenessArgs {
    #[command(flatten)]
    spec: SpecArgs,
    #[arg(long)]
    max_l: Option<usize>,
    #[arg(long)]
    max_k: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    max_refine: Option<usize>,
    #[arg(long)]
    node_budget: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: TextFormat,
    #[arg(long, value_name = "FILE")]
    verify: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ClassifyArgs {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long, value_parser = parse_angle)]
    angle: Option<Angle>,
    /// Equal-eigenvalue mixed system diag(-λ, λ).
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Result of a subcommand: an exit status or an error message.
type Outcome = Result<u8, String>;

fn err(e: Error) -> String {
    e.to_string()
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), String> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => {
            let mut so = std::io::stdout().lock();
            so.write_all(text.as_bytes()).map_err(|e| e.to_string())
        }
    }
}

fn emit_json(out: Option<&Path>, value: &impl serde::Serialize) -> Result<(), String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| e.to_string())?;
    s.push('\n');
    emit(out, &s)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn run_render(a: &RenderArgs) -> Outcome {
    let spec = a.spec.spec()?;
    let method = match a.method {
        MethodArg::Chaos => Method::ChaosGame {
            iterations: a.iterations,
            seed: a.seed,
            burn_in: a.burn_in,
        },
        MethodArg::Subdivision => Method::Subdivision { depth: a.depth },
    };
    let config = RasterConfig {
        width: a.size,
        height: a.size,
        viewport: a.viewport.map(|[x0, x1, y0, y1]| Viewport { x0, x1, y0, y1 }),
        method,
    };
    let raster = render::render_attractor(&spec, &config).map_err(err)?;
    let is_png = a.out.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        raster.write_png(&a.out).map_err(err)?;
    } else {
        raster.write_pgm(&a.out).map_err(|e| format!("{}: {e}", a.out.display()))?;
    }
    if let Some(path) = &a.overlay_out {
        let cert: UniquenessCertificate = match &a.overlay_cert {
            Some(p) => read_json(p)?,
            None => certify_uniqueness(&spec, &SearchBounds::default()).map_err(err)?,
        };
        let config = RasterConfig {
            viewport: Some(raster.viewport),
            ..config.clone()
        };
        let overlay = render::render_overlay_uniqueness(&spec, &cert, &config).map_err(err)?;
        render::write_overlay_png(&raster, &overlay, path).map_err(err)?;
    }
    emit_json(
        None,
        &json!({
            "out": a.out,
            "width": raster.width,
            "height": raster.height,
            "occupied": raster.occupied(),
            "viewport": raster.viewport,
        }),
    )?;
    Ok(0)
}

fn run_hull(a: &HullArgs) -> Outcome {
    let spec = a.spec.spec()?;
    let vertices: Option<Vec<HullVertex>> = if let Some((rho, q)) = a.spec.rational() {
        Some(hull::hull_complex_rational_vertices(rho, q.p, q.q).map_err(err)?)
    } else {
        match spec.case() {
            Case::MixedReal { lambda, mu } if (lambda - mu).abs() <= TAU => {
                Some(hull::hull_mixed_equal_vertices(lambda).map_err(err)?)
            }
            Case::MixedReal { lambda, mu } if lambda < mu => {
                Some(hull::hull_mixed_real_vertices(lambda, mu, a.eps).map_err(err)?)
            }
            Case::Jordan { nu } if nu > 0.0 => Some(hull::hull_jordan_vertices(nu, a.eps).map_err(err)?),
            _ => None,
        }
    };
    let points: Vec<(Vec2, Option<String>)> = match vertices {
        Some(vs) => vs.iter().map(|v| (v.point, Some(v.address.to_string()))).collect(),
        None => {
            let poly = match (spec.case(), a.directions, spec.kappa()) {
                (Case::Complex { .. }, Some(n), Some(kappa)) => {
                    hull::hull_complex_irrational(kappa, a.eps, n).map_err(err)?
                }
                _ => hull::hull_of(&spec, a.eps),
            };
            poly.vertices.iter().map(|v| (*v, None)).collect()
        }
    };
    match a.format {
        HullFormat::Csv => {
            let mut s = String::from("x,y,address\n");
            for (p, addr) in &points {
                s.push_str(&format!("{:.17e},{:.17e},{}\n", p.x, p.y, addr.as_deref().unwrap_or("")));
            }
            emit(a.out.as_deref(), &s)?;
        }
        HullFormat::Json => {
            let vs: Vec<_> = points
                .iter()
                .map(|(p, addr)| json!({ "x": p.x, "y": p.y, "address": addr }))
                .collect();
            emit_json(a.out.as_deref(), &json!({ "system": spec, "vertices": vs }))?;
        }
    }
    Ok(0)
}

fn run_interior(a: &InteriorArgs) -> Outcome {
    if let Some(path) = &a.verify {
        let cert: InteriorCertificate = read_json(path)?;
        cert.verify().map_err(err)?;
        emit_json(
            a.out.as_deref(),
            &json!({ "verified": true, "system": cert.spec, "delta": cert.delta }),
        )?;
        return Ok(0);
    }
    let spec = a.spec.spec()?;
    let cert = default_certificate(&spec).map_err(err)?;
    emit_json(a.out.as_deref(), &cert)?;
    Ok(0)
}

fn run_expand(a: &ExpandArgs) -> Outcome {
    let spec = a.spec.spec()?;
    let cert = default_certificate(&spec).map_err(err)?;
    let run = expand_point(&cert, Vec2::new(a.x, a.y), a.steps).map_err(err)?;
    emit_json(a.out.as_deref(), &run)?;
    Ok(0)
}

fn verdict_status(v: &MembershipVerdict) -> u8 {
    match v {
        MembershipVerdict::In { .. } => 0,
        MembershipVerdict::Out { .. } => EXIT_NEGATIVE,
        MembershipVerdict::Unknown { .. } => 1,
    }
}

fn run_decide(a: &DecideArgs) -> Outcome {
    if let Some(path) = &a.verify {
        let cert: NonMembershipCertificate = read_json(path)?;
        cert.verify().map_err(err)?;
        emit_json(
            a.out.as_deref(),
            &json!({
                "verified": true,
                "system": cert.spec,
                "point": cert.point,
                "min_separation": cert.min_separation,
                "frontier_size": cert.frontier.len(),
            }),
        )?;
        return Ok(0);
    }
    let spec = a.spec.spec()?;
    let point = Vec2::new(need(a.x, "x")?, need(a.y, "y")?);
    let mut opts = DecideOptions {
        max_depth: a.max_depth,
        start: match a.start {
            StartArg::Hull => StartSet::Hull,
            StartArg::Analytic => StartSet::Analytic,
        },
        tolerance: a.tolerance,
        ..DecideOptions::default()
    };
    if let Some(n) = a.node_budget {
        opts.node_budget = n;
    }
    let verdict = match &a.certificate_out {
        Some(path) => match certify_out(&spec, point, &opts) {
            Some(cert) => {
                emit_json(Some(path), &cert)?;
                MembershipVerdict::Out {
                    depth: cert.depth,
                    min_separation: cert.min_separation,
                }
            }
            None => decide_point(&spec, point, &opts),
        },
        None => decide_point(&spec, point, &opts),
    };
    emit_json(a.out.as_deref(), &verdict)?;
    Ok(verdict_status(&verdict))
}

fn run_scan(a: &ScanArgs) -> Outcome {
    let case = match a.case {
        ScanCaseArg::Mixed => ScanCase::MixedReal,
        ScanCaseArg::Jordan => ScanCase::Jordan,
    };
    let scan = twomap::membership::scan_region(case, a.rect, a.resolution, a.max_depth).map_err(err)?;
    match a.format {
        ScanFormat::Csv => emit(a.out.as_deref(), &scan.to_csv())?,
        ScanFormat::Json => emit_json(a.out.as_deref(), &scan)?,
    }
    Ok(0)
}

fn run_uniqueness(a: &UniquenessArgs) -> Outcome {
    let show = |cert: &UniquenessCertificate| match a.format {
        TextFormat::Json => emit_json(a.out.as_deref(), cert),
        TextFormat::Text => emit(a.out.as_deref(), &cert.report()),
    };
    if let Some(path) = &a.verify {
        let cert: UniquenessCertificate = read_json(path)?;
        cert.verify().map_err(err)?;
        match a.format {
            TextFormat::Json => emit_json(
                a.out.as_deref(),
                &json!({ "verified": true, "system": cert.spec, "entropy": cert.entropy }),
            )?,
            TextFormat::Text => emit(a.out.as_deref(), &format!("verified\n{}", cert.report()))?,
        }
        return Ok(0);
    }
    let spec = a.spec.spec()?;
    let d = SearchBounds::default();
    let limits = SearchBounds {
        max_l: a.max_l.unwrap_or(d.max_l),
        max_k: a.max_k.unwrap_or(d.max_k),
        window: a.window.unwrap_or(d.window),
        max_refine: a.max_refine.unwrap_or(d.max_refine),
        node_budget: a.node_budget.unwrap_or(d.node_budget),
    };
    match certify_uniqueness(&spec, &limits) {
        Ok(cert) => {
            show(&cert)?;
            Ok(0)
        }
        Err(Error::SearchExhausted) => {
            eprintln!("twomap: {}", Error::SearchExhausted);
            Ok(EXIT_NEGATIVE)
        }
        Err(e) => Err(err(e)),
    }
}

fn run_classify(a: &ClassifyArgs) -> Outcome {
    let out = a.out.as_deref();
    match (a.rho, a.angle, a.lambda, a.beta) {
        (Some(rho), Some(q), None, None) => emit_json(out, &classify_rational(rho, q.p, q.q).map_err(err)?)?,
        (None, None, Some(l), None) => emit_json(out, &classify_mixed_equal(l).map_err(err)?)?,
        (None, None, None, Some(beta)) => {
            let (class, boundary) = classify_beta(beta).map_err(err)?;
            emit_json(out, &json!({ "beta": beta, "class": class, "boundary": boundary }))?
        }
        _ => return Err("classify takes exactly one of --rho with --angle, --lambda, or --beta".into()),
    }
    Ok(0)
}

fn command() -> clap::Command {
    let cmd = Cli::command().args_override_self(true);
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    names
        .iter()
        .fold(cmd, |c, n| c.mut_subcommand(n, |s| s.args_override_self(true)))
}

fn usage_error(msg: &str) -> ExitCode {
    eprintln!("twomap: {msg}");
    ExitCode::from(EXIT_USAGE)
}

fn main() -> ExitCode {
    let mut args: Vec<String> = std::env::args().collect();
    let cmd = command();
    let config = match config::take_config_flag(&mut args) {
        Ok(c) => c,
        Err(e) => return usage_error(&e),
    };
    if let Some(path) = config {
        let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
        let spliced = config::load_tokens(Path::new(&path)).and_then(|t| config::splice(&mut args, &names, t));
        if let Err(e) = spliced {
            return usage_error(&e);
        }
    }
    let matches = match cmd.try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => return usage_error(&e.to_string()),
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            return usage_error(&e.to_string());
        }
    }
    let outcome = match &cli.command {
        Command::Render(a) => run_render(a),
        Command::Hull(a) => run_hull(a),
        Command::InteriorCert(a) => run_interior(a),
        Command::Expand(a) => run_expand(a),
        Command::Decide(a) => run_decide(a),
        Command::Scan(a) => run_scan(a),
        Command::Uniqueness(a) => run_uniqueness(a),
        Command::Classify(a) => run_classify(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(msg) => {
            eprintln!("twomap: {msg}");
            ExitCode::FAILURE
        }
    }
}
