//! Command-line front end.
//!
//! Exit status: 0 on success, 1 when an input fails parsing, schema or class
//! validation, 2 on a numerical failure.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::io::{self as jio, BandedJson, Document};
use crate::linalg::{self, CMat};
use crate::measure::{validate_measure, MatrixMeasure};
use crate::spectral::{inverse_spectral_map, spectral_map, structure_violations, BandedHermitian};
use crate::toda::{self, DEFAULT_DT};
use crate::tridiag::{block_lanczos, equivalence_check, householder_blocktridiag};
use crate::{block_shape, random, Tolerances};

#[derive(Debug, Parser)]
#[command(name = "bandspec", version, about = "Spectral theory of banded Hermitian matrices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Input JSON file, or `-` for standard input.
    pub input: PathBuf,
    /// Write the result here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Relative rank tolerance.
    #[arg(long, default_value_t = linalg::DEFAULT_RANK_TOL)]
    pub tol: f64,
    /// Relative distance below which support points are merged.
    #[arg(long, default_value_t = 1e-9)]
    pub merge_tol: f64,
}

impl Common {
    fn tolerances(&self) -> Tolerances {
        Tolerances { rank: self.tol, merge: self.merge_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Qr,
    Spectral,
    Rk4,
    Compare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnOff {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Kind {
    Matrix,
    Measure,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a matrix against the banded class or a measure against the measure class.
    Validate {
        #[command(flatten)]
        common: Common,
        /// Block size for dense input.
        #[arg(long)]
        k: Option<usize>,
        /// Expected size N for a measure (defaults to the sum of weight ranks).
        #[arg(long = "size")]
        size: Option<usize>,
    },
    /// Spectral measure of a banded matrix.
    Spectral {
        #[command(flatten)]
        common: Common,
    },
    /// Banded matrix of a measure.
    Inverse {
        #[command(flatten)]
        common: Common,
    },
    /// Errors of the two compositions of the spectral map and its inverse.
    Roundtrip {
        #[command(flatten)]
        common: Common,
    },
    /// Block Lanczos from the first k unit vectors.
    Lanczos {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<usize>,
        /// Full reorthogonalization.
        #[arg(long, value_enum, default_value_t = OnOff::On)]
        reorth: OnOff,
        /// Maximum number of block steps (default ⌈N/k⌉).
        #[arg(long)]
        steps: Option<usize>,
    },
    /// Householder reduction to block tridiagonal form.
    Householder {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Compare block Lanczos and Householder on the same matrix.
    Equivalence {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: Option<usize>,
    },
    /// Toda flow trajectory as JSON lines.
    Toda {
        #[command(flatten)]
        common: Common,
        /// Final time.
        #[arg(long, allow_hyphen_values = true)]
        t: f64,
        /// RK4 step.
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = Method::Qr)]
        method: Method,
        /// Number of equally spaced output times in (0, t].
        #[arg(long, default_value_t = 1)]
        samples: usize,
        /// Also write the trajectory as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Write a seeded random matrix or measure.
    Generate {
        #[arg(long, value_enum, default_value_t = Kind::Matrix)]
        kind: Kind,
        #[arg(long)]
        k: usize,
        /// Matrix size N.
        #[arg(long = "size")]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rescale a matrix to this spectral norm.
        #[arg(long)]
        norm: Option<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_validation() || matches!(e, Error::NotPsd(_)) {
        1
    } else {
        2
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s).map_err(|e| Error::Parse(format!("stdin: {e}")))?;
        Ok(s)
    } else {
        fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }
}

fn emit(output: &Option<PathBuf>, out: &mut dyn Write, text: &str) -> Result<()> {
    let mut body = text.to_string();
    if !body.ends_with('\n') {
        body.push('\n');
    }
    match output {
        Some(p) => fs::write(p, body).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display()))),
        None => out.write_all(body.as_bytes()).map_err(|e| Error::InvalidArgument(format!("stdout: {e}"))),
    }
}

fn load(common: &Common) -> Result<Document> {
    jio::parse_document(&read_input(&common.input)?, &common.tolerances())
}

fn load_banded(common: &Common) -> Result<BandedHermitian> {
    match load(common)? {
        Document::Banded(j) => Ok(j),
        Document::Dense { k, matrix } => crate::spectral::validate_banded(&matrix, k, &common.tolerances()),
        Document::Measure(_) => Err(Error::Schema("expected a matrix, got a measure".into())),
    }
}

fn load_measure(common: &Common) -> Result<MatrixMeasure> {
    match load(common)? {
        Document::Measure(m) => Ok(m),
        _ => Err(Error::Schema("expected a measure, got a matrix".into())),
    }
}

/// Any matrix input as a dense Hermitian matrix with its block size.
fn load_dense(common: &Common, k: Option<usize>) -> Result<(CMat, usize)> {
    let (m, file_k) = match load(common)? {
        Document::Banded(j) => (j.to_dense(), j.k()),
        Document::Dense { k, matrix } => (matrix, k),
        Document::Measure(_) => return Err(Error::Schema("expected a matrix, got a measure".into())),
    };
    let k = k.unwrap_or(file_k);
    if k == 0 || k > m.nrows() {
        return Err(Error::InvalidArgument(format!("block size k = {k} must satisfy 1 ≤ k ≤ N = {}", m.nrows())));
    }
    Ok((m, k))
}

#[derive(Serialize)]
struct MatrixReport {
    kind: &'static str,
    k: usize,
    #[serde(rename = "N")]
    n_total: usize,
    hermitian_defect: f64,
    valid: bool,
    violations: Vec<crate::spectral::Violation>,
}

/// Runs a parsed command, writing results to `out` when no output path is given.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    match &cli.command {
        Command::Validate { common, k, size } => {
            let tol = common.tolerances();
            match load(common)? {
                Document::Measure(mu) => {
                    let n_total = size.unwrap_or_else(|| mu.rank_sum());
                    let rep = validate_measure(&mu, k.unwrap_or(mu.k()), n_total, &tol);
                    let member = rep.member;
                    emit(&common.output, out, &jio::to_json_string(&json!({ "kind": "measure", "report": rep })))?;
                    Ok(if member { 0 } else { 1 })
                }
                doc => {
                    let (m, file_k) = match doc {
                        Document::Banded(j) => (j.to_dense(), j.k()),
                        Document::Dense { k, matrix } => (matrix, k),
                        Document::Measure(_) => unreachable!(),
                    };
                    let k = k.unwrap_or(file_k);
                    let defect = linalg::hermitian_defect(&m);
                    let violations = structure_violations(&m, k, &tol);
                    let valid = violations.is_empty() && defect <= linalg::HERMITIAN_TOL;
                    let rep = MatrixReport {
                        kind: "matrix",
                        k,
                        n_total: m.nrows(),
                        hermitian_defect: defect,
                        valid,
                        violations,
                    };
                    emit(&common.output, out, &jio::to_json_string(&rep))?;
                    Ok(if valid { 0 } else { 1 })
                }
            }
        }
        Command::Spectral { common } => {
            let j = load_banded(common)?;
            let mu = spectral_map(&j, &common.tolerances())?;
            emit(&common.output, out, &jio::measure_to_json(&mu))?;
            Ok(0)
        }
        Command::Inverse { common } => {
            let mu = load_measure(common)?;
            let j = inverse_spectral_map(&mu, &common.tolerances())?;
            emit(&common.output, out, &jio::banded_to_json(&j))?;
            Ok(0)
        }
        Command::Roundtrip { common } => {
            let tol = common.tolerances();
            let report = match load(common)? {
                Document::Measure(mu) => {
                    let j = inverse_spectral_map(&mu, &tol)?;
                    let mu2 = spectral_map(&j, &tol)?;
                    let j2 = inverse_spectral_map(&mu2, &tol)?;
                    json!({
                        "input": "measure",
                        "max_atom_error": mu2.weight_distance(&mu, 1e-8 * range_scale(&mu)),
                        "max_block_error": j2.block_distance(&j),
                    })
                }
                Document::Banded(j) => matrix_roundtrip(&j, &tol)?,
                Document::Dense { k, matrix } => matrix_roundtrip(&crate::spectral::validate_banded(&matrix, k, &tol)?, &tol)?,
            };
            emit(&common.output, out, &jio::to_json_string(&report))?;
            Ok(0)
        }
        Command::Lanczos { common, k, reorth, steps } => {
            let (m, k) = load_dense(common, *k)?;
            let (n, _) = block_shape(m.nrows(), k);
            let res = block_lanczos(&m, &linalg::leading_identity(m.nrows(), k), steps.unwrap_or(n), *reorth == OnOff::On, &common.tolerances())?;
            let basis = res.basis_matrix();
            let ortho = linalg::frob(&(basis.adjoint() * &basis - CMat::identity(basis.ncols(), basis.ncols())));
            let report = json!({
                "k": k,
                "N": m.nrows(),
                "steps": res.steps,
                "completed": res.completed,
                "orthogonality_error": ortho,
                "A": res.a.iter().map(jio::matrix_to_json).collect::<Vec<_>>(),
                "B": res.b.iter().map(jio::matrix_to_json).collect::<Vec<_>>(),
            });
            emit(&common.output, out, &jio::to_json_string(&report))?;
            Ok(0)
        }
        Command::Householder { common, k } => {
            let (m, k) = load_dense(common, *k)?;
            let j = householder_blocktridiag(&m, k)?;
            emit(&common.output, out, &jio::banded_to_json(&j))?;
            Ok(0)
        }
        Command::Equivalence { common, k } => {
            let (m, k) = load_dense(common, *k)?;
            match equivalence_check(&m, k, &common.tolerances()) {
                Ok(rep) => {
                    let agree = rep.agree;
                    emit(&common.output, out, &jio::to_json_string(&json!({ "comparable": true, "report": rep })))?;
                    Ok(if agree { 0 } else { 2 })
                }
                Err(Error::Incomparable(steps)) => {
                    let rep = json!({ "comparable": false, "lanczos_steps": steps, "N": m.nrows(), "k": k });
                    emit(&common.output, out, &jio::to_json_string(&rep))?;
                    Ok(0)
                }
                Err(e) => Err(e),
            }
        }
        Command::Toda { common, t, dt, method, samples, csv } => run_toda(common, *t, *dt, *method, *samples, csv, out),
        Command::Generate { kind, k, size, seed, norm, output } => {
            if *k == 0 || *size < *k {
                return Err(Error::InvalidArgument(format!("need 1 ≤ k ≤ N, got k = {k}, N = {size}")));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let text = match kind {
                Kind::Matrix => {
                    let j = match norm {
                        Some(c) => random::random_banded_with_norm(*k, *size, *c, &mut rng),
                        None => random::random_banded(*k, *size, &mut rng),
                    };
                    jio::banded_to_json(&j)
                }
                Kind::Measure => jio::measure_to_json(&random::random_measure(*k, *size, &mut rng)),
            };
            emit(output, out, &text)?;
            Ok(0)
        }
    }
}

fn range_scale(mu: &MatrixMeasure) -> f64 {
    let p = mu.points();
    match (p.first(), p.last()) {
        (Some(a), Some(b)) => (b - a).max(a.abs()).max(b.abs()).max(1.0),
        _ => 1.0,
    }
}

fn matrix_roundtrip(j: &BandedHermitian, tol: &Tolerances) -> Result<serde_json::Value> {
    let mu = spectral_map(j, tol)?;
    let j2 = inverse_spectral_map(&mu, tol)?;
    let mu2 = spectral_map(&j2, tol)?;
    Ok(json!({
        "input": "matrix",
        "max_block_error": j2.block_distance(j),
        "max_atom_error": mu2.weight_distance(&mu, 1e-8 * range_scale(&mu)),
    }))
}

fn run_toda(
    common: &Common,
    t_end: f64,
    dt: f64,
    method: Method,
    samples: usize,
    csv: &Option<PathBuf>,
    out: &mut dyn Write,
) -> Result<i32> {
    let tol = common.tolerances();
    let x0 = load_banded(common)?;
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be positive".into()));
    }
    let dense0 = x0.to_dense();
    let methods: Vec<Method> = match method {
        Method::Compare => vec![Method::Qr, Method::Spectral, Method::Rk4],
        m => vec![m],
    };
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for s in 1..=samples {
        let t = t_end * s as f64 / samples as f64;
        let mut dense_at = Vec::new();
        for &m in &methods {
            let (name, j) = match m {
                Method::Qr => ("qr", toda::toda_qr_flow(&x0, t, &tol)?.x_t),
                Method::Spectral => ("spectral", toda::toda_spectral_flow(&x0, t, &tol)?),
                Method::Rk4 => {
                    let d = toda::toda_rk4_oracle(&x0, t, dt)?;
                    ("rk4", banded_view(&d, &x0))
                }
                Method::Compare => unreachable!(),
            };
            let dense = j.to_dense();
            let drift = toda::eigenvalue_drift(&dense0, &dense)?;
            lines.push(jio::to_json_string(&jio::TrajectoryLine {
                t,
                x: BandedJson::from(&j),
                eig_drift: drift,
                method: name.to_string(),
            }));
            rows.push((t, name.to_string(), drift, j));
            dense_at.push(dense);
        }
        if method == Method::Compare {
            let d = |a: usize, b: usize| linalg::frob(&(&dense_at[a] - &dense_at[b]));
            lines.push(jio::to_json_string(&json!({
                "t": t,
                "method": "compare",
                "qr_vs_spectral": d(0, 1),
                "qr_vs_rk4": d(0, 2),
                "spectral_vs_rk4": d(1, 2),
            })));
        }
    }
    emit(&common.output, out, &lines.join("\n"))?;
    if let Some(p) = csv {
        fs::write(p, jio::trajectory_csv(&rows)).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?;
    }
    Ok(0)
}

/// Blocks of a dense matrix laid out like `like`, without class checks.
fn banded_view(d: &CMat, like: &BandedHermitian) -> BandedHermitian {
    let k = like.k();
    let a = like
        .a()
        .iter()
        .enumerate()
        .map(|(j, blk)| d.view((j * k, j * k), blk.shape()).into_owned())
        .collect();
    let b = like
        .b()
        .iter()
        .enumerate()
        .map(|(j, blk)| d.view(((j + 1) * k, j * k), blk.shape()).into_owned())
        .collect();
    BandedHermitian::from_blocks_unchecked(k, like.size(), a, b).expect("same layout")
}

/// Parses arguments, runs the command and returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
