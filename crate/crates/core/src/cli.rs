//! Command-line front end.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::cones::{con1_radius, con2_floor, r0};
use crate::discrimination::{
    delta_defect, overlap_closed_form, overlap_half_form_eps, DiscriminationInstance,
};
use crate::error::Error;
use crate::herm::{eigenvalues, weyl_bell_basis, Dims, HermMat};
use crate::metrics::{epsilon_of_r, r_of_epsilon};
use crate::report::ClaimReport;
use crate::tol::TOL;
use crate::verify::{run_all, run_claim, ClaimParams, Profile};

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "pseslab", version, about = "Numerical laboratory for PSES cones and state discrimination")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one claim or all claims and emit reports.
    Verify(VerifyArgs),
    /// Build the two-state discrimination instance and print its statistics.
    DemoDiscrimination(DemoArgs),
    /// Print the threshold constants for a local dimension.
    Constants(ConstantsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileArg {
    Quick,
    Full,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Quick => Profile::Quick,
            ProfileArg::Full => Profile::Full,
        }
    }
}

#[derive(Debug, Args)]
pub struct RParams {
    #[arg(long, conflicts_with = "epsilon")]
    pub r: Option<f64>,
    /// Target distance; converted with r = ε²/(2(4−ε²)).
    #[arg(long)]
    pub epsilon: Option<f64>,
}

impl RParams {
    fn resolve(&self) -> Result<Option<f64>, Error> {
        match (self.r, self.epsilon) {
            (Some(r), _) => Ok(Some(r)),
            (None, Some(e)) => r_of_epsilon(e).map(Some),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, required_unless_present = "all", conflicts_with = "all")]
    pub claim: Option<String>,
    #[arg(long)]
    pub all: bool,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    pub dloc: u32,
    #[command(flatten)]
    pub r: RParams,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: Option<u64>,
    /// Master seed; the flag wins over PSESLAB_SEED, which wins over 0.
    #[arg(long, env = "PSESLAB_SEED", default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = TOL, value_parser = parse_tol)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = ProfileArg::Quick)]
    pub profile: ProfileArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DemoArgs {
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u32).range(2..))]
    pub dloc: u32,
    #[command(flatten)]
    pub r: RParams,
    /// Write the effects and states as JSON to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 2)]
    pub dloc: u32,
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let t: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if t > 0.0 && t < 1.0 {
        Ok(t)
    } else {
        Err(format!("{t} not in (0, 1)"))
    }
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidDims(_)
            | Error::ParameterOutOfRange { .. }
            | Error::UnknownClaim { .. }
            | Error::MalformedParam { .. }
    )
}

fn fail(e: &Error) -> u8 {
    eprintln!("error: {e}");
    if is_usage_error(e) {
        EXIT_USAGE
    } else {
        EXIT_FAIL
    }
}

/// Parse arguments and run; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let res = match &cli.command {
        Command::Verify(a) => cmd_verify(a),
        Command::DemoDiscrimination(a) => cmd_demo_discrimination(a),
        Command::Constants(a) => cmd_constants(a),
    };
    res.unwrap_or_else(|e| fail(&e))
}

fn sink(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Error> {
    Ok(match out {
        Some(p) => Box::new(File::create(p).map_err(|e| Error::MalformedParam {
            name: "out".into(),
            reason: e.to_string(),
        })?),
        None => Box::new(io::stdout().lock()),
    })
}

fn io_err(e: impl std::fmt::Display) -> Error {
    Error::MalformedParam {
        name: "out".into(),
        reason: e.to_string(),
    }
}

pub fn cmd_verify(a: &VerifyArgs) -> Result<u8, Error> {
    let dims = Dims::new(a.dloc as usize)?;
    let params = ClaimParams {
        r: a.r.resolve()?,
        trials: a.trials.map(|t| t as usize),
        tol: a.tol,
        profile: a.profile.into(),
    };
    let (reports, single) = match &a.claim {
        Some(id) => (vec![run_claim(id, dims, &params, a.seed)?], true),
        None => (run_all(dims, a.seed, &params)?, false),
    };
    let mut w = sink(&a.out)?;
    write_reports(&mut w, &reports, a.format, single)?;
    w.flush().map_err(io_err)?;
    Ok(if reports.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_FAIL
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    claim_id: &'a str,
    d_loc: usize,
    #[serde(rename = "D")]
    d_total: usize,
    params: String,
    seed: u64,
    trials: u64,
    max_violation: f64,
    pass: bool,
    notes: String,
    wall_time_s: f64,
    tool_version: &'a str,
}

/// Emit reports: a JSON object for one claim, an array otherwise; CSV with a
/// header row; or a human summary.
pub fn write_reports(
    w: &mut dyn Write,
    reports: &[ClaimReport],
    format: Format,
    single: bool,
) -> Result<(), Error> {
    match format {
        Format::Json => {
            let s = if single {
                serde_json::to_string_pretty(&reports[0])
            } else {
                serde_json::to_string_pretty(reports)
            }
            .map_err(io_err)?;
            writeln!(w, "{s}").map_err(io_err)?;
        }
        Format::Csv => {
            let mut cw = csv::Writer::from_writer(w);
            for r in reports {
                let params = r
                    .params
                    .iter()
                    .map(|(k, v)| format!("{k}={v}"))
                    .collect::<Vec<_>>()
                    .join(";");
                cw.serialize(CsvRow {
                    claim_id: &r.claim_id,
                    d_loc: r.dims.d_loc(),
                    d_total: r.dims.total(),
                    params,
                    seed: r.seed,
                    trials: r.trials,
                    max_violation: r.max_violation,
                    pass: r.pass,
                    notes: r.notes.join(" | "),
                    wall_time_s: r.wall_time_s,
                    tool_version: &r.tool_version,
                })
                .map_err(io_err)?;
            }
            cw.flush().map_err(io_err)?;
        }
        Format::Text => {
            for r in reports {
                writeln!(
                    w,
                    "{:<20} {}  d_loc={} seed={} trials={} max_violation={:.3e} ({:.2}s)",
                    r.claim_id,
                    if r.pass { "PASS" } else { "FAIL" },
                    r.dims.d_loc(),
                    r.seed,
                    r.trials,
                    r.max_violation,
                    r.wall_time_s
                )
                .map_err(io_err)?;
                for n in &r.notes {
                    writeln!(w, "    {n}").map_err(io_err)?;
                }
            }
        }
    }
    Ok(())
}

fn fmt_spectrum(x: &HermMat) -> Result<String, Error> {
    Ok(eigenvalues(x)?
        .iter()
        .map(|v| format!("{:.7}", if v.abs() < 5e-13 { 0.0 } else { *v }))
        .collect::<Vec<_>>()
        .join(", "))
}

#[derive(Serialize)]
struct MatrixDump {
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

impl From<&HermMat> for MatrixDump {
    fn from(x: &HermMat) -> Self {
        let m = x.matrix();
        let rows = |f: fn(&crate::herm::C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(&m[(i, j)])).collect())
                .collect()
        };
        MatrixDump {
            re: rows(|c| c.re),
            im: rows(|c| c.im),
        }
    }
}

#[derive(Serialize)]
struct DemoDump {
    d_loc: usize,
    r: f64,
    epsilon: f64,
    overlap: f64,
    effects: Vec<MatrixDump>,
    states: Vec<MatrixDump>,
}

pub fn cmd_demo_discrimination(a: &DemoArgs) -> Result<u8, Error> {
    let dims = Dims::new(a.dloc as usize)?;
    let Some(r) = a.r.resolve()? else {
        return Err(Error::MalformedParam {
            name: "r".into(),
            reason: "one of --r or --epsilon is required".into(),
        });
    };
    if !(r > 0.0 && r <= r0(dims) + 1e-12) {
        return Err(Error::ParameterOutOfRange {
            name: "r",
            value: r,
            lo: 0.0,
            hi: r0(dims),
        });
    }
    let inst = DiscriminationInstance::new(r, weyl_bell_basis(dims))?;
    let eps = inst.epsilon;
    let mut out = io::stdout().lock();
    let mut p = |s: String| writeln!(out, "{s}").map_err(io_err);
    p(format!("d_loc = {}, D = {}", dims.d_loc(), dims.total()))?;
    p(format!("r = {r:.7}, epsilon_r = {eps:.7}, r_0 = {:.7}", r0(dims)))?;
    for (k, m) in inst.measurement.effects.iter().enumerate() {
        p(format!("M{} spectrum: [{}]", k + 1, fmt_spectrum(m)?))?;
    }
    p(format!("overlap Tr rho1 rho2 = {:.7}", inst.overlap))?;
    p(format!(
        "  4r(r+1)/(2r+1)^2 = {:.7}",
        overlap_closed_form(r)
    ))?;
    p(format!(
        "  eps^2(8-eps^2)/32 = {:.7} (half of the overlap)",
        overlap_half_form_eps(eps)
    ))?;
    let stats = inst.statistics();
    p("statistics Tr rho_i M_j:".into())?;
    for (i, row) in stats.iter().enumerate() {
        p(format!(
            "  rho{}: {}",
            i + 1,
            row.iter()
                .map(|v| format!("{:.12}", if v.abs() < 5e-13 { 0.0 } else { *v }))
                .collect::<Vec<_>>()
                .join("  ")
        ))?;
    }
    p(format!("  max |Tr rho_i M_j - delta_ij| = {:.3e}", delta_defect(&stats)))?;
    let sv = inst.state_verdicts()?;
    let ev = inst.effect_verdicts()?;
    for (k, v) in sv.iter().enumerate() {
        p(format!("rho{} in K_r^(0)*: {:?}", k + 1, v.status))?;
    }
    for (k, v) in ev.iter().enumerate() {
        p(format!("M{} in NPM_r*: {:?}", k + 1, v.status))?;
    }
    if let Some(path) = &a.out {
        let dump = DemoDump {
            d_loc: dims.d_loc(),
            r,
            epsilon: eps,
            overlap: inst.overlap,
            effects: inst.measurement.effects.iter().map(Into::into).collect(),
            states: [&inst.states.rho1, &inst.states.rho2]
                .into_iter()
                .map(Into::into)
                .collect(),
        };
        let f = File::create(path).map_err(io_err)?;
        serde_json::to_writer_pretty(f, &dump).map_err(io_err)?;
    }
    let ok = sv.iter().chain(ev.iter()).all(|v| v.is_certified_inside())
        && delta_defect(&stats) <= 1e-10;
    Ok(if ok { EXIT_OK } else { EXIT_FAIL })
}

pub fn cmd_constants(a: &ConstantsArgs) -> Result<u8, Error> {
    let dims = Dims::new(a.dloc as usize)?;
    let r = r0(dims);
    println!("d_loc = {}, D = {}", dims.d_loc(), dims.total());
    println!("r_0 = (sqrt(2D) - 2)/4 = {r:.7}");
    println!("epsilon_r0 = 2 sqrt(2 r_0/(2 r_0 + 1)) = {:.7}", epsilon_of_r(r)?);
    println!("con1 radius (sqrt(D) - 1)/2 = {:.7}", con1_radius(dims));
    println!(
        "con2 floor -2(r + 1/2)^2 + D/4 (= {:.7} at r_0)",
        con2_floor(r, dims) + 0.0
    );
    Ok(EXIT_OK)
}
