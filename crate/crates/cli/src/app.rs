use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use theta_bidiff::bidiff::{
    difference_correction, eta_correction, gunning_table, sigma_correction, v00_kernel, CorrectionMatrix,
};
use theta_bidiff::fay::{period_check, trisecant_residual, TrisecantConfig};
use theta_bidiff::locus::{refine, ScanGrid};
use theta_bidiff::sot::{gram_matrix_g1, sot_jet, sot_value};
use theta_bidiff::theta::{theta_char_jet_planned, theta_char_value_planned, theta_jet_planned, truncation_radius};
use theta_bidiff::{Characteristic, Error, PeriodMatrix};

use crate::args;
use crate::config::{OutputFormat, RunConfig};
use crate::output::{complex, emit, matrix, to_json, vector, Meta};
use crate::sampling::{named_rng, random_point};
use crate::scan_file::run_scan;
use crate::verify::verify_all;

#[derive(Debug, Parser)]
#[command(name = "theta-bidiff", version, about = "Theta functions and bidifferential corrections")]
pub struct Cli {
    /// Run configuration (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Theta functions with characteristics.
    #[command(subcommand)]
    Theta(ThetaCmd),
    /// Second-order theta functions.
    #[command(subcommand)]
    Sot(SotCmd),
    /// Correction matrices and related identities.
    #[command(subcommand)]
    Bidiff(BidiffCmd),
    /// Genus-one coincidence locus.
    #[command(subcommand)]
    Locus(LocusCmd),
    /// Genus-one trisecant and bidifferential checks.
    #[command(subcommand)]
    Fay(FayCmd),
    /// Run every check and report.
    Verify,
}

#[derive(Debug, Args)]
pub struct TauArg {
    /// Period matrix: {"g", "re", "im"}.
    #[arg(long, value_name = "FILE")]
    pub tau: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum ThetaCmd {
    Eval {
        #[command(flatten)]
        tau: TauArg,
        /// Point as "re,im;re,im;...".
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// Characteristic as "a_1 .. a_g,b_1 .. b_g", e.g. "1/2,1/2".
        #[arg(long = "char", allow_hyphen_values = true)]
        characteristic: Option<String>,
        /// Characteristic from a JSON file.
        #[arg(long = "char-file", value_name = "FILE", conflicts_with = "characteristic")]
        characteristic_file: Option<PathBuf>,
        /// Include gradient and Hessian.
        #[arg(long)]
        jet: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum SotCmd {
    Eval {
        #[command(flatten)]
        tau: TauArg,
        /// Index as "0,1/2,...".
        #[arg(long)]
        u: String,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long)]
        jet: bool,
    },
    Gram {
        #[command(flatten)]
        tau: TauArg,
        /// Quadrature points per direction.
        #[arg(long, default_value_t = 128)]
        n: usize,
    },
}

#[derive(Debug, Subcommand)]
pub enum BidiffCmd {
    Sigma(TauArg),
    Eta(TauArg),
    Diff(TauArg),
    V00 {
        #[command(flatten)]
        tau: TauArg,
        #[arg(long, default_value_t = 1e-8)]
        rank_tol: f64,
    },
    Gunning(TauArg),
}

#[derive(Debug, Subcommand)]
pub enum LocusCmd {
    Scan {
        /// "xmin,xmax,ymin,ymax".
        #[arg(long, allow_hyphen_values = true)]
        window: String,
        /// "nx,ny".
        #[arg(long)]
        grid: String,
        /// Keep rows already present in the output file.
        #[arg(long)]
        resume: bool,
        /// Rows computed between file updates.
        #[arg(long, default_value_t = 8)]
        block_rows: usize,
    },
    Refine {
        /// Starting point "x,y".
        #[arg(long, allow_hyphen_values = true)]
        seed: String,
        #[arg(long, default_value_t = 50)]
        max_iter: usize,
        #[arg(long, default_value_t = 1.0)]
        damping: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum FayCmd {
    Residual {
        #[command(flatten)]
        tau: TauArg,
        /// Overrides the configured seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 100)]
        count: usize,
    },
    Periods {
        #[command(flatten)]
        tau: TauArg,
        /// Pole "re,im".
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        /// Base point of both paths, "re,im".
        #[arg(long, allow_hyphen_values = true)]
        base: Option<String>,
        #[arg(long, default_value_t = 128)]
        n_quad: usize,
    },
}

/// Failure of one invocation.
#[derive(Debug)]
pub enum Failure {
    /// Bad arguments or input files; exit status 2.
    Usage(String),
    /// A numerical routine refused; exit status 1.
    Numeric(Error),
    /// Output could not be written, or `verify` found failures; exit status 1.
    Other(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Numeric(_) | Failure::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Numeric(e) => write!(f, "{}: {e}", e.name()),
            Failure::Other(m) => f.write_str(m),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Numeric(e)
    }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn read_text(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_tau(arg: &TauArg) -> Result<PeriodMatrix, Failure> {
    let text = read_text(&arg.tau)?;
    PeriodMatrix::from_json(&text)
        .map_err(|e| usage(format!("{}: invalid period matrix ({}): {e}", arg.tau.display(), e.name())))
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    let cfg = match path {
        Some(p) => RunConfig::from_json(&read_text(p)?).map_err(|e| usage(format!("{}: {e}", p.display())))?,
        None => RunConfig::default(),
    };
    cfg.with_env().map_err(usage)
}

/// Entry point shared by the binary and the tests; returns the exit status.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("theta-bidiff: {f}");
            f.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli.config.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Failure::Other(format!("thread pool: {e}")))?;
    let out = cli.out.as_deref();
    let doc = pool.install(|| dispatch(&cli.command, &cfg, out))?;
    if let Some(doc) = doc {
        emit(out, &doc).map_err(|e| Failure::Other(format!("writing output: {e}")))?;
    }
    Ok(())
}

#[derive(Serialize)]
struct ThetaOut {
    value: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    gradient: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    hessian: Option<Vec<Vec<[f64; 2]>>>,
    eps: f64,
    radius: f64,
    meta: Meta,
}

#[derive(Serialize)]
struct MatrixOut {
    kind: String,
    matrix: Vec<Vec<[f64; 2]>>,
    max_norm: f64,
    meta: Meta,
}

fn correction_out(m: &CorrectionMatrix, meta: Meta) -> String {
    to_json(&MatrixOut {
        kind: format!("{:?}", m.kind).to_lowercase(),
        matrix: matrix(&m.entries),
        max_norm: m.max_norm(),
        meta,
    })
}

/// Truncation radius of the plain series at the origin, used as the
/// metadata lattice bound for commands that evaluate many series.
fn origin_radius(tau: &PeriodMatrix, cfg: &RunConfig) -> Result<f64, Failure> {
    let zero = vec![Complex64::new(0.0, 0.0); tau.g()];
    Ok(truncation_radius(tau, &zero, cfg.eps_jet, 2, cfg.lattice_cap)?.radius)
}

fn dispatch(cmd: &Command, cfg: &RunConfig, out: Option<&Path>) -> Result<Option<String>, Failure> {
    let prec = cfg.precision();
    match cmd {
        Command::Theta(ThetaCmd::Eval { tau, z, characteristic, characteristic_file, jet }) => {
            let tau = load_tau(tau)?;
            let z = args::parse_z_list(z).map_err(usage)?;
            if z.len() != tau.g() {
                return Err(usage(format!("z has {} coordinates but g = {}", z.len(), tau.g())));
            }
            let ch = match (characteristic, characteristic_file) {
                (Some(s), _) => args::parse_characteristic(s).map_err(usage)?,
                (None, Some(p)) => Characteristic::from_json(&read_text(p)?).map_err(usage)?,
                (None, None) => Characteristic::zero(tau.g()),
            };
            if ch.g() != tau.g() {
                return Err(usage(format!("characteristic has genus {} but g = {}", ch.g(), tau.g())));
            }
            let doc = if *jet {
                let (j, plan) = if characteristic.is_none() && characteristic_file.is_none() {
                    theta_jet_planned(&z, &tau, &prec)?
                } else {
                    theta_char_jet_planned(&ch, &z, &tau, &prec)?
                };
                ThetaOut {
                    value: complex(j.value),
                    gradient: Some(vector(&j.gradient)),
                    hessian: Some(matrix(&j.hessian)),
                    eps: cfg.eps_jet,
                    radius: plan.radius,
                    meta: Meta::new(cfg, plan.radius),
                }
            } else {
                let (v, plan) = theta_char_value_planned(&ch, &z, &tau, &prec)?;
                ThetaOut {
                    value: complex(v),
                    gradient: None,
                    hessian: None,
                    eps: cfg.eps_value,
                    radius: plan.radius,
                    meta: Meta::new(cfg, plan.radius),
                }
            };
            Ok(Some(to_json(&doc)))
        }
        Command::Sot(SotCmd::Eval { tau, u, z, jet }) => {
            let tau = load_tau(tau)?;
            let u = args::parse_u(u).map_err(usage)?;
            let z = args::parse_z_list(z).map_err(usage)?;
            if z.len() != tau.g() || u.g() != tau.g() {
                return Err(usage(format!("u and z must both have g = {} entries", tau.g())));
            }
            // theta_u(z; tau) = theta[u, 0](2 z; 2 tau)
            let radius = truncation_radius(&tau.scaled(2.0)?, &z.iter().map(|v| v * 2.0).collect::<Vec<_>>(), cfg.eps_jet, 2, cfg.lattice_cap)?.radius;
            #[derive(Serialize)]
            struct SotOut {
                u: String,
                value: [f64; 2],
                #[serde(skip_serializing_if = "Option::is_none")]
                gradient: Option<Vec<[f64; 2]>>,
                #[serde(skip_serializing_if = "Option::is_none")]
                hessian: Option<Vec<Vec<[f64; 2]>>>,
                meta: Meta,
            }
            let doc = if *jet {
                let j = sot_jet(&u, &z, &tau, &prec)?;
                SotOut {
                    u: u.to_string(),
                    value: complex(j.value),
                    gradient: Some(vector(&j.gradient)),
                    hessian: Some(matrix(&j.hessian)),
                    meta: Meta::new(cfg, radius),
                }
            } else {
                SotOut {
                    u: u.to_string(),
                    value: complex(sot_value(&u, &z, &tau, &prec)?),
                    gradient: None,
                    hessian: None,
                    meta: Meta::new(cfg, radius),
                }
            };
            Ok(Some(to_json(&doc)))
        }
        Command::Sot(SotCmd::Gram { tau, n }) => {
            let tau = load_tau(tau)?;
            if *n < 2 {
                return Err(usage("--n must be at least 2"));
            }
            let m = gram_matrix_g1(&tau, *n, &prec)?;
            #[derive(Serialize)]
            struct GramOut {
                n: usize,
                gram: Vec<Vec<[f64; 2]>>,
                meta: Meta,
            }
            let doc = GramOut { n: *n, gram: matrix(&m), meta: Meta::new(cfg, origin_radius(&tau, cfg)?) };
            Ok(Some(to_json(&doc)))
        }
        Command::Bidiff(cmd) => bidiff(cmd, cfg),
        Command::Locus(LocusCmd::Scan { window, grid, resume, block_rows }) => {
            let [x0, x1, y0, y1] = args::parse_window(window).map_err(usage)?;
            let (nx, ny) = args::parse_grid(grid).map_err(usage)?;
            let grid = ScanGrid::new(x0, x1, y0, y1, nx, ny).map_err(usage)?;
            let path = out.ok_or_else(|| usage("locus scan needs --out FILE"))?;
            let m = grid.lattice_bound(cfg.eps_value)?;
            let meta = Meta::new(cfg, m as f64);
            let summary = run_scan(path, &grid, &meta, m, *resume, *block_rows).map_err(|e| {
                if e.contains("settings") || e.contains("header") || e.contains("grid") {
                    usage(e)
                } else {
                    Failure::Other(e)
                }
            })?;
            // the CSV went to --out; the summary goes to stdout
            emit(None, &to_json(&summary)).map_err(|e| Failure::Other(e.to_string()))?;
            Ok(None)
        }
        Command::Locus(LocusCmd::Refine { seed, max_iter, damping }) => {
            let v = args::parse_reals(seed, 2).map_err(usage)?;
            if v[1] <= 0.0 {
                return Err(usage("the seed needs y > 0"));
            }
            let r = refine(v[0], v[1], cfg.eps_value, *max_iter, *damping)?;
            #[derive(Serialize)]
            struct RefineOut {
                x: f64,
                y: f64,
                res: f64,
                iters: usize,
                meta: Meta,
            }
            let m = theta_bidiff::locus::w_truncation(r.sample.y, cfg.eps_value, theta_bidiff::locus::DEFAULT_W_CAP)?;
            let doc = RefineOut { x: r.sample.x, y: r.sample.y, res: r.sample.res, iters: r.iters, meta: Meta::new(cfg, m as f64) };
            Ok(Some(to_json(&doc)))
        }
        Command::Fay(FayCmd::Residual { tau, seed, count }) => {
            let tau = load_tau(tau)?;
            let seed = seed.unwrap_or(cfg.seed);
            let mut rng = named_rng(seed, "fay.residual");
            let mut max: f64 = 0.0;
            let mut sum = 0.0;
            for _ in 0..*count {
                let c = TrisecantConfig::new(
                    tau.clone(),
                    random_point(&mut rng),
                    (random_point(&mut rng), random_point(&mut rng)),
                    (random_point(&mut rng), random_point(&mut rng)),
                )?;
                let r = trisecant_residual(&c, &prec)?;
                max = max.max(r);
                sum += r;
            }
            #[derive(Serialize)]
            struct FayOut {
                count: usize,
                max_residual: f64,
                mean_residual: f64,
                meta: Meta,
            }
            let mut meta = Meta::new(cfg, origin_radius(&tau, cfg)?);
            meta.seed = seed;
            let mean = if *count == 0 { 0.0 } else { sum / *count as f64 };
            Ok(Some(to_json(&FayOut { count: *count, max_residual: max, mean_residual: mean, meta })))
        }
        Command::Fay(FayCmd::Periods { tau, p, base, n_quad }) => {
            let tau = load_tau(tau)?;
            let p = args::parse_complex(p).map_err(usage)?;
            let base = base.as_deref().map(args::parse_complex).transpose().map_err(usage)?;
            let rep = period_check(&tau, p, base, *n_quad, &prec)?;
            #[derive(Serialize)]
            struct PeriodsOut {
                #[serde(flatten)]
                report: theta_bidiff::fay::PeriodReport,
                n_quad: usize,
                meta: Meta,
            }
            Ok(Some(to_json(&PeriodsOut { report: rep, n_quad: *n_quad, meta: Meta::new(cfg, origin_radius(&tau, cfg)?) })))
        }
        Command::Verify => {
            let report = verify_all(cfg);
            let doc = match cfg.output_format {
                OutputFormat::Json => to_json(&report),
                OutputFormat::Csv => report.to_csv(),
            };
            emit(out, &doc).map_err(|e| Failure::Other(format!("writing output: {e}")))?;
            if report.all_passed() {
                Ok(None)
            } else {
                Err(Failure::Other(format!("{} of {} checks failed", report.failed, report.checks.len())))
            }
        }
    }
}

fn bidiff(cmd: &BidiffCmd, cfg: &RunConfig) -> Result<Option<String>, Failure> {
    let prec = cfg.precision();
    let doc = match cmd {
        BidiffCmd::Sigma(t) => {
            let tau = load_tau(t)?;
            correction_out(&sigma_correction(&tau, &prec)?, Meta::new(cfg, origin_radius(&tau, cfg)?))
        }
        BidiffCmd::Eta(t) => {
            let tau = load_tau(t)?;
            correction_out(&eta_correction(&tau), Meta::new(cfg, origin_radius(&tau, cfg)?))
        }
        BidiffCmd::Diff(t) => {
            let tau = load_tau(t)?;
            correction_out(&difference_correction(&tau, &prec)?, Meta::new(cfg, origin_radius(&tau, cfg)?))
        }
        BidiffCmd::V00 { tau, rank_tol } => {
            let tau = load_tau(tau)?;
            if !(*rank_tol > 0.0 && *rank_tol < 1.0) {
                return Err(usage("--rank-tol must lie in (0, 1)"));
            }
            let rep = v00_kernel(&tau, &prec, *rank_tol)?;
            #[derive(Serialize)]
            struct V00Out {
                dimension: usize,
                rank: usize,
                singular_values: Vec<f64>,
                rank_tol: f64,
                meta: Meta,
            }
            to_json(&V00Out {
                dimension: rep.dimension,
                rank: rep.rank,
                singular_values: rep.singular_values,
                rank_tol: *rank_tol,
                meta: Meta::new(cfg, origin_radius(&tau, cfg)?),
            })
        }
        BidiffCmd::Gunning(t) => {
            let tau = load_tau(t)?;
            let rows = gunning_table(&tau, &prec)?;
            let mut doc = Meta::new(cfg, origin_radius(&tau, cfg)?).csv_lines();
            doc.push_str("a,b,parity,residual\n");
            for r in rows {
                let half = |v: &[f64]| v.iter().map(|x| format!("{}/2", (2.0 * x).round() as i64)).collect::<Vec<_>>().join(" ");
                doc.push_str(&format!(
                    "{},{},{},{:?}\n",
                    half(r.characteristic.a()),
                    half(r.characteristic.b()),
                    r.parity,
                    r.residual
                ));
            }
            doc
        }
    };
    Ok(Some(doc))
}
