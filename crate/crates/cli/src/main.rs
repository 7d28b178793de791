//! `pptcanon`: command-line front end for PPT checks, canonical-form
//! decomposition, instance generation and ensemble verification.
//!
//! Every command prints exactly one JSON document on stdout. Diagnostics go to
//! stderr. Exit codes: 0 success or pass, 1 verified negative, 2 input or usage
//! error, 3 the input does not meet the decomposition preconditions.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pptcanon_core::canonical::{Tolerances, WitnessMode};
use pptcanon_core::decompose::{decompose_detailed, verify_ensemble, DecomposeOptions};
use pptcanon_core::gen::{
    gen_canonical_state, gen_npt_control, gen_paper_example, Example, ExampleIiiVariant, GenSpec,
    PureKind,
};
use pptcanon_core::io::{
    load_ensemble, load_state, save_ensemble, save_state, to_json, write_json, CanonicalFile,
    DiagnosticsFile, PptReportFile,
};
use pptcanon_core::ppt::ppt_report;
use pptcanon_core::tensor::{c64, CVector, TripartiteDims};
use pptcanon_core::Error;
use serde_json::{json, Value};

#[derive(Parser, Debug)]
#[command(
    name = "pptcanon",
    version,
    about = "Canonical form and separability of rank-N PPT states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report the minimum eigenvalue of every partial transpose.
    CheckPpt {
        file: PathBuf,
        /// PSD threshold; defaults to 1e-9 times the trace.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Build and certify a separable decomposition.
    Decompose {
        file: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, value_enum, default_value_t = WitnessArg::Search)]
        witness: WitnessArg,
        /// Random product pairs tried by `--witness search`.
        #[arg(long, default_value_t = 256)]
        samples: usize,
        /// Witness vector on A for `--witness explicit`, as a JSON array of [re, im] pairs.
        #[arg(long)]
        ea: Option<String>,
        /// Witness vector on B for `--witness explicit`.
        #[arg(long)]
        fb: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a test state to a file.
    Generate {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, num_args = 3, value_names = ["K", "M", "N"])]
        dims: Option<Vec<usize>>,
        /// Off-diagonal entry for example-ii.
        #[arg(long, allow_negative_numbers = true)]
        a: Option<f64>,
        #[arg(long, value_enum)]
        variant: Option<VariantArg>,
        /// White-noise fraction for npt.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, value_enum)]
        pure: Option<PureArg>,
        #[arg(long)]
        seed: Option<u64>,
        /// Generator scale for canonical.
        #[arg(long)]
        scale: Option<f64>,
        /// Condition number cap of the filter for canonical.
        #[arg(long)]
        cond_cap: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare an ensemble against a state.
    Verify {
        state: PathBuf,
        ensemble: PathBuf,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum WitnessArg {
    Corner,
    Search,
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Canonical,
    ExampleI,
    ExampleIi,
    ExampleIii,
    Npt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Corrected,
    Literal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PureArg {
    Random,
    Ghz,
}

struct Failure {
    code: u8,
    message: String,
    payload: Option<Value>,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
            payload: None,
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        Failure::usage(err.to_string())
    }
}

type CmdResult = Result<(u8, Value), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::CheckPpt { file, tol } => check_ppt(&file, tol),
        Command::Decompose {
            file,
            tol,
            witness,
            samples,
            ea,
            fb,
            seed,
            out,
        } => decompose_cmd(
            &file,
            tol,
            witness,
            samples,
            ea.as_deref(),
            fb.as_deref(),
            seed,
            out.as_deref(),
        ),
        Command::Generate {
            kind,
            dims,
            a,
            variant,
            noise,
            pure,
            seed,
            scale,
            cond_cap,
            out,
        } => {
            let flags = GenFlags {
                dims,
                a,
                variant,
                noise,
                pure,
                seed,
                scale,
                cond_cap,
            };
            generate(kind, &flags, &out)
        }
        Command::Verify {
            state,
            ensemble,
            tol,
        } => verify(&state, &ensemble, tol),
    };
    match outcome {
        Ok((code, value)) => {
            print!("{}", to_json(&value));
            ExitCode::from(code)
        }
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            if let Some(payload) = failure.payload {
                print!("{}", to_json(&payload));
            }
            ExitCode::from(failure.code)
        }
    }
}

fn check_ppt(file: &Path, tol: Option<f64>) -> CmdResult {
    let state = load_state(file, false)?;
    let report = ppt_report(&state, tol)?;
    let code = if report.overall_ppt { 0 } else { 1 };
    let value =
        serde_json::to_value(PptReportFile::from_report(&report)).expect("report serializes");
    Ok((code, value))
}

fn parse_vector(text: &str, flag: &str) -> Result<CVector, Failure> {
    let pairs: Vec<[f64; 2]> = serde_json::from_str(text).map_err(|e| {
        Failure::usage(format!(
            "--{flag}: expected a JSON array of [re, im] pairs ({e})"
        ))
    })?;
    if pairs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Failure::usage(format!("--{flag}: entries must be finite")));
    }
    Ok(CVector::from_iterator(
        pairs.len(),
        pairs.iter().map(|p| c64(p[0], p[1])),
    ))
}

#[allow(clippy::too_many_arguments)]
fn decompose_cmd(
    file: &Path,
    tol: f64,
    witness: WitnessArg,
    samples: usize,
    ea: Option<&str>,
    fb: Option<&str>,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::usage("--tol must be positive"));
    }
    let witness = match (witness, ea, fb) {
        (WitnessArg::Explicit, Some(ea), Some(fb)) => WitnessMode::Explicit {
            ea: parse_vector(ea, "ea")?,
            fb: parse_vector(fb, "fb")?,
        },
        (WitnessArg::Explicit, _, _) => {
            return Err(Failure::usage(
                "--witness explicit needs both --ea and --fb",
            ))
        }
        (_, None, None) => match witness {
            WitnessArg::Corner => WitnessMode::Corner,
            _ => WitnessMode::Search { samples, seed },
        },
        _ => {
            return Err(Failure::usage(
                "--ea and --fb are only valid with --witness explicit",
            ))
        }
    };
    let state = load_state(file, false)?;
    let opts = DecomposeOptions {
        tol: Tolerances::with_tol(tol),
        witness,
        seed,
    };
    let dec = match decompose_detailed(&state, &opts) {
        Ok(dec) => dec,
        Err(err) if err.is_precondition_failure() => {
            let payload = json!({
                "status": "precondition_failure",
                "error": err.kind(),
                "message": err.to_string(),
            });
            return Err(Failure {
                code: 3,
                message: err.to_string(),
                payload: Some(payload),
            });
        }
        Err(err) => return Err(err.into()),
    };
    if let Some(path) = out {
        save_ensemble(path, &dec.ensemble)?;
    }
    let weights: Vec<f64> = dec.ensemble.terms.iter().map(|t| t.p).collect();
    let summary = json!({
        "status": "certified",
        "terms": dec.ensemble.terms.len(),
        "weights": weights,
        "residual": dec.residual,
        "weight_sum": dec.ensemble.weight_sum(),
        "diagnostics": DiagnosticsFile::from(&dec.diagnostics),
        "out": out.map(|p| p.display().to_string()),
    });
    Ok((0, summary))
}

struct GenFlags {
    dims: Option<Vec<usize>>,
    a: Option<f64>,
    variant: Option<VariantArg>,
    noise: Option<f64>,
    pure: Option<PureArg>,
    seed: Option<u64>,
    scale: Option<f64>,
    cond_cap: Option<f64>,
}

impl GenFlags {
    fn present(&self) -> Vec<&'static str> {
        let mut names = Vec::new();
        let flags = [
            ("dims", self.dims.is_some()),
            ("a", self.a.is_some()),
            ("variant", self.variant.is_some()),
            ("noise", self.noise.is_some()),
            ("pure", self.pure.is_some()),
            ("seed", self.seed.is_some()),
            ("scale", self.scale.is_some()),
            ("cond-cap", self.cond_cap.is_some()),
        ];
        for (name, set) in flags {
            if set {
                names.push(name);
            }
        }
        names
    }
}

fn allowed_flags(kind: KindArg) -> &'static [&'static str] {
    match kind {
        KindArg::Canonical => &["dims", "seed", "scale", "cond-cap"],
        KindArg::ExampleI => &["dims"],
        KindArg::ExampleIi => &["a"],
        KindArg::ExampleIii => &["variant"],
        KindArg::Npt => &["dims", "noise", "pure", "seed"],
    }
}

fn kind_name(kind: KindArg) -> &'static str {
    match kind {
        KindArg::Canonical => "canonical",
        KindArg::ExampleI => "example-i",
        KindArg::ExampleIi => "example-ii",
        KindArg::ExampleIii => "example-iii",
        KindArg::Npt => "npt",
    }
}

fn require_dims(flags: &GenFlags) -> Result<TripartiteDims, Failure> {
    match flags.dims.as_deref() {
        Some(&[k, m, n]) => Ok(TripartiteDims::new(k, m, n)?),
        _ => Err(Failure::usage("--dims K M N is required for this kind")),
    }
}

/// `state.json` gets the sibling `state.truth.json`.
fn truth_path(out: &Path) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.truth.json"))
}

fn generate(kind: KindArg, flags: &GenFlags, out: &Path) -> CmdResult {
    let allowed = allowed_flags(kind);
    if let Some(bad) = flags.present().into_iter().find(|f| !allowed.contains(f)) {
        return Err(Failure::usage(format!(
            "--{bad} does not apply to --kind {}",
            kind_name(kind)
        )));
    }
    let mut meta = BTreeMap::new();
    meta.insert("kind".to_string(), kind_name(kind).to_string());
    let mut truth = None;
    let state = match kind {
        KindArg::Canonical => {
            let dims = require_dims(flags)?;
            let seed = flags.seed.unwrap_or(0);
            let mut spec = GenSpec::new(dims, seed);
            if let Some(scale) = flags.scale {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Failure::usage("--scale must be positive"));
                }
                spec.generator_scale = scale;
            }
            if let Some(cap) = flags.cond_cap {
                if !(cap >= 1.0 && cap.is_finite()) {
                    return Err(Failure::usage("--cond-cap must be at least 1"));
                }
                spec.f_condition_cap = cap;
            }
            meta.insert("seed".into(), seed.to_string());
            meta.insert("scale".into(), spec.generator_scale.to_string());
            meta.insert("cond_cap".into(), spec.f_condition_cap.to_string());
            let inst = gen_canonical_state(&spec)?;
            truth = Some(CanonicalFile::from_form(&inst.form));
            inst.state
        }
        KindArg::ExampleI => gen_paper_example(&Example::I(require_dims(flags)?))?,
        KindArg::ExampleIi => {
            let a = flags
                .a
                .ok_or_else(|| Failure::usage("--a is required for example-ii"))?;
            meta.insert("a".into(), a.to_string());
            gen_paper_example(&Example::II(a))?
        }
        KindArg::ExampleIii => {
            let variant = match flags.variant.unwrap_or(VariantArg::Corrected) {
                VariantArg::Corrected => ExampleIiiVariant::Corrected,
                VariantArg::Literal => ExampleIiiVariant::Literal,
            };
            meta.insert("variant".into(), format!("{variant:?}").to_lowercase());
            gen_paper_example(&Example::III(variant))?
        }
        KindArg::Npt => {
            let dims = require_dims(flags)?;
            let noise = flags.noise.unwrap_or(0.0);
            let seed = flags.seed.unwrap_or(0);
            let pure = match flags.pure.unwrap_or(PureArg::Random) {
                PureArg::Random => PureKind::Random,
                PureArg::Ghz => PureKind::Ghz,
            };
            meta.insert("noise".into(), noise.to_string());
            meta.insert("seed".into(), seed.to_string());
            meta.insert("pure".into(), format!("{pure:?}").to_lowercase());
            gen_npt_control(dims, noise, pure, seed)?
        }
    };
    save_state(out, &state, Some(meta))?;
    let truth_out = match truth {
        Some(file) => {
            let path = truth_path(out);
            write_json(&path, &file)?;
            Some(path.display().to_string())
        }
        None => None,
    };
    let summary = json!({
        "kind": kind_name(kind),
        "dims": state.dims().as_array(),
        "out": out.display().to_string(),
        "truth": truth_out,
    });
    Ok((0, summary))
}

fn verify(state_path: &Path, ens_path: &Path, tol: f64) -> CmdResult {
    let state = load_state(state_path, false)?;
    let ens = load_ensemble(ens_path)?;
    let check = verify_ensemble(&state, &ens, tol)?;
    let code = if check.pass { 0 } else { 1 };
    Ok((
        code,
        json!({ "residual": check.residual, "pass": check.pass, "violations": check.violations }),
    ))
}
