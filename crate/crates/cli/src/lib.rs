//! Command-line front end for the `unistochastic` library.
//!
//! Results go to standard output (or `--output`) as JSON or a plain-text
//! summary. Failures go to standard error as `{"error": {"kind", "message"}}`.
//! Exit codes: 0 on success, including negative verdicts; 1 on invalid
//! input; 2 on numerical failure.

pub mod schema;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use unistochastic::sampling::{random_bistochastic, random_stochastic};
use unistochastic::{
    build_sigma, certify_orthostochastic, certify_unistochastic, classify, context_transform, gleason_determinant,
    haar_random_unitary, probability_matrix, projector_frame, reconstruct_all, reverse_matrix, run_sequence,
    sample_haar_unitary, shared_modalities, spin_coupling_contexts, svd, unitarity_defect, CertOptions, Certificate,
    Error, Execution, Modality,
};

use crate::schema::{ContextDoc, ContextsDoc, MatrixDoc};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "unistoch", version, about = "Unistochastic matrices, Born-rule contexts and measurement simulation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Input JSON document.
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Optimizer restarts for certification.
    #[arg(long, global = true, default_value_t = 32)]
    pub restarts: usize,
    /// Unitarity-defect tolerance for certification.
    #[arg(long, global = true, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Monte-Carlo trials.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CertifyKind {
    Unistochastic,
    Orthostochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RandomKind {
    Unitary,
    Stochastic,
    Bistochastic,
    ContextPair,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deepest certified class of a stochastic matrix.
    Classify,
    /// SVD report for a stochastic matrix and phases.
    Decompose,
    /// Unistochastic or orthostochastic certificate.
    Certify {
        #[arg(long, value_enum, default_value_t = CertifyKind::Unistochastic)]
        kind: CertifyKind,
    },
    /// Born probability matrix and transform between two contexts.
    Born,
    /// Monte-Carlo measurement sequence.
    Simulate,
    /// Two spin-1/2 uncoupled and coupled bases.
    SpinDemo,
    /// Random unitary, stochastic or bistochastic matrix, or context pair.
    Random {
        #[arg(value_enum)]
        kind: RandomKind,
        #[arg(long, default_value_t = 3)]
        n: usize,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

impl Failure {
    fn invalid(kind: &'static str, message: impl Into<String>) -> Self {
        Self { kind, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        if self.kind == "numerical" {
            EXIT_NUMERICAL
        } else {
            EXIT_INVALID
        }
    }

    fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind, "message": self.message } })
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let kind = if e.is_validation() { "validation" } else { "numerical" };
        Self { kind, message: e.to_string() }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

/// Result of a command: the JSON document and its text rendering.
struct Report {
    json: Value,
    text: String,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let failure = Failure::invalid("usage", e.to_string().trim_end());
            let _ = writeln!(stderr, "{}", failure.to_json());
            return EXIT_INVALID;
        }
    };
    match execute(&cli).and_then(|report| emit(&cli.common, report, stdout)) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            let _ = writeln!(stderr, "{}", failure.to_json());
            failure.exit_code()
        }
    }
}

fn emit(common: &Common, report: Report, stdout: &mut dyn Write) -> CmdResult<()> {
    let mut body = match common.format {
        Format::Json => serde_json::to_string_pretty(&report.json).expect("JSON values serialize"),
        Format::Text => report.text.trim_end().to_string(),
    };
    body.push('\n');
    match &common.output {
        Some(path) => std::fs::write(path, body)
            .map_err(|e| Failure::invalid("io", format!("cannot write {}: {e}", path.display()))),
        None => stdout
            .write_all(body.as_bytes())
            .map_err(|e| Failure::invalid("io", format!("cannot write output: {e}"))),
    }
}

fn execute(cli: &Cli) -> CmdResult<Report> {
    let c = &cli.common;
    match &cli.command {
        Command::Classify => cmd_classify(c),
        Command::Decompose => cmd_decompose(c),
        Command::Certify { kind } => cmd_certify(c, *kind),
        Command::Born => cmd_born(c),
        Command::Simulate => cmd_simulate(c),
        Command::SpinDemo => cmd_spin_demo(c),
        Command::Random { kind, n } => cmd_random(c, *kind, *n),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: Option<&Path>) -> CmdResult<T> {
    let path = path.ok_or_else(|| Failure::invalid("usage", "--input is required for this command"))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid("io", format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::invalid("parse", format!("{}: {e}", path.display())))
}

fn cert_options(c: &Common) -> CmdResult<CertOptions> {
    let opts = CertOptions { restarts: c.restarts, certify_tolerance: c.tolerance, seed: c.seed, ..Default::default() };
    opts.validate()?;
    Ok(opts)
}

fn certificate_text(cert: &Certificate) -> String {
    let mut s = format!("verdict: {:?}\ndefect: {:e}\nrestarts used: {}\n", cert.verdict, cert.defect, cert.restarts_used);
    if let Some(w) = &cert.witness {
        let _ = writeln!(s, "witness: {w}");
    }
    if let Some(phases) = &cert.phases {
        let _ = writeln!(s, "phases: {:?}", phases.rows());
    }
    s
}

/// Certificate JSON, with `n` so the phases can be paired with the matrix.
fn certificate_json(cert: &Certificate, n: usize) -> Value {
    let mut v = to_value(cert);
    v["n"] = json!(n);
    v
}

fn cmd_classify(c: &Common) -> CmdResult<Report> {
    let doc: MatrixDoc = read_json(c.input.as_deref())?;
    let (p, _) = doc.resolve()?;
    let result = classify(&p, &cert_options(c)?)?;
    let mut text = format!("class: {:?}\ninconclusive: {}\n", result.class, result.inconclusive);
    if let Some(cert) = &result.certificate {
        text.push_str(&certificate_text(cert));
    }
    let json = json!({
        "n": p.n(),
        "class": result.class,
        "inconclusive": result.inconclusive,
        "certificate": result.certificate.as_ref().map(|cert| certificate_json(cert, p.n())),
    });
    Ok(Report { json, text })
}

fn cmd_decompose(c: &Common) -> CmdResult<Report> {
    let doc: MatrixDoc = read_json(c.input.as_deref())?;
    let (p, phases) = doc.resolve()?;
    let sigma = build_sigma(&p, &phases)?;
    let triple = svd(&sigma)?;
    let frame = projector_frame(&triple)?;
    let rebuilt = reconstruct_all(&frame, &triple.r)?;
    let reconstruction_error = (0..p.n())
        .flat_map(|i| (0..p.n()).map(move |j| (i, j)))
        .map(|(i, j)| (rebuilt[i][j] - p.get(i, j)).abs())
        .fold(0.0, f64::max);
    let residuals = frame.normalization_residuals(&triple.r);
    let det = gleason_determinant(&triple.u);
    let json = json!({
        "n": p.n(),
        "singular_values": triple.r.values(),
        "trace_r_squared": triple.r.trace_squared(),
        "distance_from_identity": triple.r.distance_from_identity(),
        "normalization_residuals": residuals,
        "gleason_determinant": det,
        "reconstruction_error": reconstruction_error,
        "unitarity_defect": unitarity_defect(&sigma),
        "phases": phases,
    });
    let text = format!(
        "singular values: {:?}\ntrace(R^2): {}\nmax |r - 1|: {:e}\nnormalization residuals: {:?}\ngleason determinant: {:e}\nreconstruction error: {:e}\n",
        triple.r.values(),
        triple.r.trace_squared(),
        triple.r.distance_from_identity(),
        residuals,
        det,
        reconstruction_error
    );
    Ok(Report { json, text })
}

fn cmd_certify(c: &Common, kind: CertifyKind) -> CmdResult<Report> {
    let doc: MatrixDoc = read_json(c.input.as_deref())?;
    let (p, _) = doc.resolve()?;
    let opts = cert_options(c)?;
    let cert = match kind {
        CertifyKind::Unistochastic => certify_unistochastic(&p, &opts)?,
        CertifyKind::Orthostochastic => certify_orthostochastic(&p, &opts)?,
    };
    Ok(Report { json: certificate_json(&cert, p.n()), text: certificate_text(&cert) })
}

fn cmd_born(c: &Common) -> CmdResult<Report> {
    let doc: ContextsDoc = read_json(c.input.as_deref())?;
    let contexts = doc.resolve()?;
    let [cu, cv] = contexts.as_slice() else {
        return Err(Failure::invalid("validation", format!("born needs exactly 2 contexts, found {}", contexts.len())));
    };
    let p = probability_matrix(cu, cv)?;
    let transpose_residual = reverse_matrix(cu, cv)?.max_abs_diff(&p.transpose()?);
    let transform = context_transform(cu, cv)?;
    let cert = certify_unistochastic(&p, &cert_options(c)?)?;
    let json = json!({
        "from_context": cu.id(),
        "to_context": cv.id(),
        "probability_matrix": MatrixDoc::real(&p),
        "transpose_residual": transpose_residual,
        "transform": MatrixDoc::complex(transform.s.matrix()),
        "certificate": certificate_json(&cert, p.n()),
    });
    let mut text = format!("probability matrix ({} -> {}):\n", cu.id(), cv.id());
    for row in p.rows() {
        let _ = writeln!(text, "  {row:?}");
    }
    let _ = writeln!(text, "transpose residual: {transpose_residual:e}");
    text.push_str(&certificate_text(&cert));
    Ok(Report { json, text })
}

fn cmd_simulate(c: &Common) -> CmdResult<Report> {
    let doc: ContextsDoc = read_json(c.input.as_deref())?;
    let contexts = doc.resolve()?;
    let (first, rest) = contexts
        .split_first()
        .ok_or_else(|| Failure::invalid("validation", "simulate needs at least one context"))?;
    let initial: Modality = first.modality(doc.initial_index)?;
    let report = run_sequence(&initial, rest, c.trials, c.seed, Execution::default())?;
    let mut text = format!(
        "trials: {}\ninitial: {}[{}]\nmax deviation: {:e}\nrepeat violations: {}\n",
        report.trials, report.initial_context, report.initial_index, report.max_deviation, report.repeat_violations
    );
    for step in &report.steps {
        let _ = writeln!(text, "{}: frequencies {:?} predicted {:?}", step.context_id, step.frequencies, step.predicted);
    }
    Ok(Report { json: to_value(&report), text })
}

fn cmd_spin_demo(c: &Common) -> CmdResult<Report> {
    let (uncoupled, coupled) = spin_coupling_contexts();
    let p = probability_matrix(&uncoupled, &coupled)?;
    let shared = shared_modalities(&uncoupled, &coupled, 1e-9)?;
    let symmetric = p.max_abs_diff(&p.transpose()?) == 0.0;

    let mut runs = Vec::new();
    let mut worst = 0.0f64;
    let mut within = true;
    for i in 0..uncoupled.dim() {
        let report = run_sequence(
            &uncoupled.modality(i)?,
            std::slice::from_ref(&coupled),
            c.trials,
            c.seed.wrapping_add(i as u64),
            Execution::default(),
        )?;
        let step = &report.steps[0];
        for (f, q) in step.frequencies.iter().zip(&step.predicted) {
            worst = worst.max((f - q).abs());
            within &= (f - q).abs() <= 4.0 * (q * (1.0 - q) / c.trials as f64).sqrt() + 1e-3;
        }
        runs.push(json!({ "initial": uncoupled.labels()[i], "frequencies": step.frequencies }));
    }
    let json = json!({
        "uncoupled": ContextDoc::of_context(&uncoupled),
        "coupled": ContextDoc::of_context(&coupled),
        "probability_matrix": MatrixDoc::real(&p),
        "symmetric": symmetric,
        "shared_modalities": shared,
        "frequency_check": {
            "trials": c.trials,
            "seed": c.seed,
            "runs": runs,
            "max_deviation": worst,
            "within_tolerance": within,
        },
    });
    let mut text = String::from("uncoupled -> coupled probability matrix:\n");
    for row in p.rows() {
        let _ = writeln!(text, "  {row:?}");
    }
    let _ = writeln!(text, "symmetric: {symmetric}\nshared modalities: {shared:?}");
    let _ = writeln!(text, "{} trials per modality, max deviation {worst:e}, within tolerance: {within}", c.trials);
    Ok(Report { json, text })
}

fn cmd_random(c: &Common, kind: RandomKind, n: usize) -> CmdResult<Report> {
    if n == 0 {
        return Err(Failure::invalid("validation", "n must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let json = match kind {
        RandomKind::Unitary => {
            let u = haar_random_unitary(n, c.seed)?;
            to_value(&MatrixDoc::complex(u.matrix()))
        }
        RandomKind::Stochastic => to_value(&MatrixDoc::real(&random_stochastic(n, &mut rng)?)),
        RandomKind::Bistochastic => to_value(&MatrixDoc::real(&random_bistochastic(n, &mut rng)?)),
        RandomKind::ContextPair => {
            let contexts: Vec<ContextDoc> = ["a", "b"]
                .iter()
                .map(|id| -> CmdResult<ContextDoc> {
                    let u = sample_haar_unitary(n, &mut rng)?;
                    let rays = (0..n).map(|j| u.matrix().column(j).iter().copied().collect()).collect();
                    Ok(ContextDoc::from_rays(id, rays, Vec::new()))
                })
                .collect::<CmdResult<_>>()?;
            to_value(&ContextsDoc { contexts, initial_index: 0 })
        }
    };
    let text = serde_json::to_string(&json).expect("JSON values serialize");
    Ok(Report { json, text })
}
