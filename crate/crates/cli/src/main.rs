//! `qgf`: validate couplings, scan transmission curves, check and design
//! flat-passband filters.
//!
//! Exit codes: 0 ok, 1 parse error, 2 invalid coupling or infeasible design,
//! 3 flat-band check failed, 4 unsupported layout.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use qgf::config::{load_design_spec, ConfigError, CouplingFile};
use qgf::coupling::{check_selfadjoint_tol, st_to_general, LineConfig, STCoupling};
use qgf::design::{design_flat, maximal_coupling, DesignCase, DesignSpec, SVariant};
use qgf::flatband::{check_flat_tol, partition_of, r3_diagonality_check};
use qgf::optimize::optimize_passband;
use qgf::probe::{probe_lindep_impossibility, probe_r1_impossibility};
use qgf::scattering::{energy_grid, sweep, Spacing};
use qgf::{Error, Tolerances};

#[derive(Parser)]
#[command(name = "qgf", version, about = "Scattering and flat-passband filters on quantum star graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a coupling file describes a self-adjoint vertex coupling.
    Validate(CouplingArg),
    /// Write P(E) and related quantities on an energy grid as CSV.
    Scan(ScanArgs),
    /// Evaluate the flat-band conditions and print the report as JSON.
    Check(CheckArgs),
    /// Construct a flat-passband coupling and write it as a coupling file.
    Design(DesignArgs),
    /// Randomized check that rank-one / linearly dependent couplings cannot filter.
    Probe(ProbeArgs),
    /// Maximize the passband value over the norm parameters.
    Optimize(OptimizeArgs),
}

#[derive(Args)]
struct CouplingArg {
    /// Coupling file (JSON).
    #[arg(value_name = "FILE", required_unless_present = "coupling")]
    file: Option<PathBuf>,
    #[arg(long, value_name = "FILE", conflicts_with = "file")]
    coupling: Option<PathBuf>,
}

impl CouplingArg {
    fn path(&self) -> &Path {
        self.file.as_deref().or(self.coupling.as_deref()).expect("clap enforces one of the two")
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SpacingArg {
    Linear,
    Log,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    coupling: CouplingArg,
    /// Lowest energy; defaults to 0.002 times the largest controller potential.
    #[arg(long)]
    emin: Option<f64>,
    /// Highest energy; defaults to 5 times the largest controller potential.
    #[arg(long)]
    emax: Option<f64>,
    #[arg(long, default_value_t = 500)]
    points: usize,
    #[arg(long, value_enum, default_value = "linear")]
    spacing: SpacingArg,
    /// Output CSV; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Accepted for interface uniformity; the scan is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    coupling: CouplingArg,
    /// Also write the report to this file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DesignArgs {
    /// Build the maximal filter instead of a general design.
    #[arg(long, conflicts_with_all = ["case", "spec"])]
    maximal: bool,
    /// `re` or `re,im`; must have modulus one.
    #[arg(long, default_value = "1", value_parser = parse_complex, allow_hyphen_values = true)]
    alpha: Complex64,
    #[arg(long, value_enum, default_value = "zero")]
    variant: VariantArg,
    /// Scale of S.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    s: f64,
    #[arg(long, default_value = "S_zero", value_parser = parse_case)]
    case: Option<DesignCase>,
    /// Read the `design` block of a JSON file instead of the flags below.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// |v1|²; v1 is spread evenly over the controllers.
    #[arg(long, default_value_t = 0.5)]
    v1sq: f64,
    /// v2 = lambda v1; `re` or `re,im`.
    #[arg(long, default_value = "1", value_parser = parse_complex, allow_hyphen_values = true)]
    lambda: Complex64,
    /// |w1|²; w1 is spread evenly over the drains. Only a starting hint
    /// unless --w2-phase is given.
    #[arg(long, default_value_t = 1.0)]
    w1sq: f64,
    /// Phase of the part of w2 orthogonal to w1 (needs two or more drains).
    #[arg(long, allow_hyphen_values = true)]
    w2_phase: Option<f64>,
    #[arg(long, default_value_t = 1)]
    controllers: usize,
    #[arg(long, default_value_t = 1)]
    drains: usize,
    /// Controller potential written to the file.
    #[arg(long = "V", default_value_t = 1.0)]
    potential: f64,
    /// Output coupling file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Zero,
    Plus,
    MinusUpper,
    MinusLower,
}

impl From<VariantArg> for SVariant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Zero => SVariant::Zero,
            VariantArg::Plus => SVariant::Plus,
            VariantArg::MinusUpper => SVariant::MinusUpper,
            VariantArg::MinusLower => SVariant::MinusLower,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Layout {
    R1,
    Lindep,
}

#[derive(Args)]
struct ProbeArgs {
    #[arg(long, value_enum)]
    layout: Layout,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the full report as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    #[arg(long, default_value_t = 50)]
    density: usize,
    #[arg(long, default_value_t = 3)]
    refine: usize,
    /// Accepted for interface uniformity; the search is deterministic.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got `{s}`")),
    }
}

fn parse_case(s: &str) -> Result<DesignCase, String> {
    s.parse()
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnsupportedLayout(_) | Error::ConfigMismatch(_) => 4,
        Error::NotFlat(_) => 3,
        _ => 2,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::new(exit_code(&e), e.to_string())
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Invalid(inner) => inner.into(),
            other => Failure::new(1, other.to_string()),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::new(1, format!("IoError: {}: {e}", path.display()))
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_failure(path, e)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::new(1, e.to_string())),
    }
}

fn load(arg: &CouplingArg, tol: &Tolerances) -> Result<(STCoupling, LineConfig), Failure> {
    let file = CouplingFile::load(arg.path()).map_err(|e| match e {
        ConfigError::Io(io) => io_failure(arg.path(), io),
        other => other.into(),
    })?;
    Ok(file.build_tol(tol)?)
}

fn cmd_validate(arg: &CouplingArg, tol: &Tolerances) -> Result<(), Failure> {
    let (st, lines) = load(arg, tol)?;
    let sa = check_selfadjoint_tol(&st_to_general(&st)?, tol);
    if !sa.self_adjoint {
        return Err(Failure::new(
            2,
            format!("NotSelfAdjoint: rank(A|B) = {} of {}, |AB* - BA*| = {:e}", sa.rank, st.n, sa.commutator_residual),
        ));
    }
    println!(
        "valid: n = {}, r = {}, {} controllers, {} drains, rank(A|B) = {}, |AB* - BA*| = {:e}",
        st.n,
        st.r,
        lines.controllers().len(),
        lines.drains().len(),
        sa.rank,
        sa.commutator_residual
    );
    Ok(())
}

fn fmt_f(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else {
        format!("{x:.16e}")
    }
}

fn cmd_scan(args: &ScanArgs, tol: &Tolerances) -> Result<(), Failure> {
    let (st, lines) = load(&args.coupling, tol)?;
    let v_max = lines.max_potential().unwrap_or(1.0);
    let emin = args.emin.unwrap_or(0.002 * v_max);
    let emax = args.emax.unwrap_or(5.0 * v_max);
    if !(emin > 0.0) || !(emax > emin) || args.points < 2 {
        return Err(Failure::new(1, format!("invalid grid: need 0 < emin < emax and points >= 2 (got {emin}, {emax}, {})", args.points)));
    }
    let spacing = match args.spacing {
        SpacingArg::Linear => Spacing::Linear,
        SpacingArg::Log => Spacing::Log,
    };
    let grid = energy_grid(emin, emax, args.points, spacing);
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let csv_err = |e: csv::Error| Failure::new(1, e.to_string());
    w.write_record(["E", "P", "re_t", "im_t", "refl2", "flux"]).map_err(csv_err)?;
    for (e, sample) in grid.iter().zip(sweep(&st, &lines, &grid)) {
        let row = match sample {
            Ok(s) => [s.energy, s.p, s.t.re, s.t.im, s.r_refl.norm_sqr(), s.flux()],
            Err(err) => {
                eprintln!("warning: E = {}: {err}", fmt_f(*e));
                [*e, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN]
            }
        };
        w.write_record(row.map(fmt_f)).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::new(1, e.to_string()))?;
    write_output(args.out.as_deref(), &String::from_utf8(bytes).expect("ASCII output"))
}

fn cmd_check(args: &CheckArgs, tol: &Tolerances) -> Result<(), Failure> {
    let (st, lines) = load(&args.coupling, tol)?;
    let (partition, s, _) = match partition_of(&st, &lines) {
        Ok(x) => x,
        Err(e @ Error::UnsupportedLayout(_)) => {
            if st.r >= 3 && lines.input() == 0 && lines.output() == 1 {
                let t1 = st.t.rows(0, 2).into_owned();
                let t2 = st.t.rows(2, st.r - 2).into_owned();
                if let Ok((diagonal, off)) = r3_diagonality_check(&t1, &t2) {
                    println!("r3_diagonality: {{\"diagonal\": {diagonal}, \"off_diagonal\": {off:e}}}");
                }
            }
            return Err(e.into());
        }
        Err(e) => return Err(e.into()),
    };
    let report = check_flat_tol(&partition, &s, tol);
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    print!("{text}");
    if let Some(out) = &args.out {
        std::fs::write(out, &text).map_err(|e| io_failure(out, e))?;
    }
    if report.verdict {
        Ok(())
    } else {
        Err(Failure::new(3, format!("not flat: first failing condition `{}`", report.first_failure(tol.flat).unwrap_or("case"))))
    }
}

fn spread(total_sq: f64, k: usize) -> Vec<Complex64> {
    vec![Complex64::new((total_sq / k as f64).sqrt(), 0.0); k]
}

fn cmd_design(args: &DesignArgs) -> Result<(), Failure> {
    let file = if args.maximal {
        let (st, lines) =
            maximal_coupling(args.alpha, args.controllers, args.drains, args.s, args.variant.into(), args.potential)?;
        CouplingFile::from_coupling(&st, &lines)
    } else {
        let spec = match &args.spec {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
                load_design_spec(&text)?
            }
            None => {
                if args.controllers == 0 || args.drains == 0 {
                    return Err(Failure::new(2, "Infeasible: need at least one controller and one drain"));
                }
                DesignSpec {
                    case: args.case.unwrap_or(DesignCase::SZero),
                    v1: spread(args.v1sq, args.controllers),
                    lambda: args.lambda,
                    w1: spread(args.w1sq, args.drains),
                    w2_phase: args.w2_phase,
                    s: args.s,
                }
            }
        };
        let design = design_flat(&spec)?;
        CouplingFile::from_coupling(&design.coupling, &design.lines(args.potential)?).with_design(spec)
    };
    write_output(args.out.as_deref(), &file.to_json())
}

fn cmd_probe(args: &ProbeArgs) -> Result<(), Failure> {
    if args.samples == 0 {
        return Err(Failure::new(1, "samples must be >= 1"));
    }
    let report = match args.layout {
        Layout::R1 => probe_r1_impossibility(args.samples, args.seed),
        Layout::Lindep => probe_lindep_impossibility(args.samples, args.seed),
    };
    println!(
        "{}: {} samples (seed {}), {} violations; min P(1e6) over coupled samples {:e}",
        report.layout, report.samples, report.seed, report.violations, report.min_limit_p
    );
    if let Some(out) = &args.out {
        let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        std::fs::write(out, text).map_err(|e| io_failure(out, e))?;
    }
    Ok(())
}

fn cmd_optimize(args: &OptimizeArgs) -> Result<(), Failure> {
    let r = optimize_passband(args.density, args.refine);
    println!(
        "F* = {:.9} at (x, y, z, u) = ({:.6}, {:.6}, {:.6}, {:.6}), at_boundary = {}, constraint residual = {:e}",
        r.f_value,
        r.x,
        r.y,
        r.z,
        r.u,
        r.at_boundary,
        r.constraint_residual()
    );
    if let Some(out) = &args.out {
        let text = serde_json::to_string_pretty(&r).expect("result serializes") + "\n";
        std::fs::write(out, text).map_err(|e| io_failure(out, e))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = Tolerances::from_env().map_err(|e| Failure::new(1, format!("QGF_TOL: {e}"))).and_then(|tol| {
        match &cli.command {
            Command::Validate(a) => cmd_validate(a, &tol),
            Command::Scan(a) => cmd_scan(a, &tol),
            Command::Check(a) => cmd_check(a, &tol),
            Command::Design(a) => cmd_design(a),
            Command::Probe(a) => cmd_probe(a),
            Command::Optimize(a) => cmd_optimize(a),
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
