//! Command-line front end.
//!
//! [`run`] parses an argument vector, executes one subcommand and returns the
//! exit code with the report destined for standard output. Diagnostics and
//! progress go to standard error.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use kazhdan::certificates::{build_certificate, measured_angle_matrix, AngleMatrix};
use kazhdan::coxeter::{catalogued_system, coxeter_report, kazhdan_witness, table_rows, CoxeterSystem};
use kazhdan::groups::{kac_moody_certificate, steinberg_certificate, Graph};
use kazhdan::provenance::Provenance;
use kazhdan::subspaces::{multi_angle, Arrangement};
use kazhdan::walks::{empirical_gap_with_progress, harmonic2_check, so_gap, Variant, WalkGroup, WalkSpec};
use kazhdan::Error;
use serde_json::{Map, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CERTIFICATE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

/// Column order of Coxeter reports in CSV output.
pub const COXETER_COLUMNS: [&str; 7] =
    ["type", "rank", "coxeter_number", "lambda_min", "M", "kazhdan_constant", "spectral_gap"];

#[derive(Parser, Debug)]
#[command(name = "kazhdan", version, about = "Friedrichs angles, angle certificates and spectral gaps")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Multi-subspace angle of an arrangement file.
    Angle {
        #[arg(long)]
        input: PathBuf,
    },
    /// Check the positive-definiteness certificate of an ε-matrix file.
    Certify {
        #[arg(long)]
        eps: PathBuf,
    },
    /// Spectral report for a Coxeter system.
    Coxeter(CoxeterArgs),
    /// The Kazhdan-constant table for all ten Coxeter families.
    Table1 {
        /// Rank used for the A, B and D rows.
        #[arg(long, default_value_t = 4)]
        rank: u32,
        /// m used for the I2 row.
        #[arg(long, default_value_t = 5)]
        m: u32,
    },
    /// Cyclic certificate with ε = p^(-1/2) on an n-cycle.
    Steinberg {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: u32,
    },
    /// Certificate with ε = p^(-1/2) on the edges of a graph file.
    Kacmoody {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        p: u32,
    },
    /// Power-iteration gap of a random walk against its certificate.
    Walk(WalkArgs),
    /// Gap bound for the circle walk on SO(n+1).
    So {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "a")]
        variant: String,
        #[arg(long)]
        check_harmonic: bool,
    },
}

#[derive(Args, Debug)]
struct CoxeterArgs {
    /// A, B, D, E6, E7, E8, F4, H3, H4 or I2.
    #[arg(long = "type", requires = "rank", conflicts_with = "m")]
    kind: Option<String>,
    /// Rank; for I2 this is m.
    #[arg(long)]
    rank: Option<u32>,
    /// Custom Coxeter matrix file, {"m": [[...]]}.
    #[arg(long, required_unless_present = "kind")]
    m: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum GroupKind {
    Sl,
    Sym,
    Dihedral,
    Heisenberg,
    Coxeter,
}

#[derive(Args, Debug)]
struct WalkArgs {
    #[arg(long, value_enum)]
    group: GroupKind,
    /// Matrix size for sl, degree for sym, m for dihedral.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<u32>,
    /// Coxeter type, with --rank, for the coxeter group.
    #[arg(long = "type")]
    kind: Option<String>,
    #[arg(long)]
    rank: Option<u32>,
    #[arg(long = "set", default_value = "a")]
    set: String,
    #[arg(long, default_value_t = 5000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
}

/// A flat report: named values, each optionally tagged with its provenance.
struct Report {
    fields: Vec<(String, Value, Option<Provenance>)>,
}

impl Report {
    fn new() -> Self {
        Report { fields: Vec::new() }
    }

    fn put(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.push((key.into(), value.into(), None));
        self
    }

    fn num(&mut self, key: &str, value: impl Into<Value>, p: Provenance) -> &mut Self {
        self.fields.push((key.into(), value.into(), Some(p)));
        self
    }

    fn to_json(&self) -> Value {
        let mut obj = Map::new();
        let mut prov = Map::new();
        for (k, v, p) in &self.fields {
            obj.insert(k.clone(), v.clone());
            if let Some(p) = p {
                prov.insert(k.clone(), Value::from(p.as_str()));
            }
        }
        obj.insert("provenance".into(), Value::Object(prov));
        Value::Object(obj)
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.fields.iter().find(|f| f.0 == key).map(|f| &f.1)
    }
}

fn csv_cell(v: &Value) -> String {
    let raw = match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    };
    if raw.contains([',', '"', '\n']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw
    }
}

fn render(reports: &[Report], format: Format, columns: Option<&[&str]>, single: bool) -> String {
    match format {
        Format::Json => {
            let values: Vec<Value> = reports.iter().map(Report::to_json).collect();
            let v = if single { values.into_iter().next().unwrap_or(Value::Null) } else { Value::Array(values) };
            serde_json::to_string_pretty(&v).expect("serializable") + "\n"
        }
        Format::Csv => {
            let cols: Vec<String> = match columns {
                Some(c) => c.iter().map(|s| s.to_string()).collect(),
                None => reports.first().map(|r| r.fields.iter().map(|f| f.0.clone()).collect()).unwrap_or_default(),
            };
            let mut out = cols.join(",") + "\n";
            for r in reports {
                let row: Vec<String> = cols.iter().map(|c| r.get(c).map(csv_cell).unwrap_or_default()).collect();
                out += &(row.join(",") + "\n");
            }
            out
        }
        Format::Text => {
            let mut out = String::new();
            for (i, r) in reports.iter().enumerate() {
                if i > 0 {
                    out.push('\n');
                }
                for (k, v, p) in &r.fields {
                    let value = match v {
                        Value::String(s) => s.clone(),
                        other => other.to_string(),
                    };
                    match p {
                        Some(p) => out += &format!("{k}: {value} ({})\n", p.as_str()),
                        None => out += &format!("{k}: {value}\n"),
                    }
                }
            }
            out
        }
    }
}

struct Outcome {
    code: i32,
    reports: Vec<Report>,
    columns: Option<&'static [&'static str]>,
    single: bool,
}

impl Outcome {
    fn one(code: i32, report: Report) -> Self {
        Outcome { code, reports: vec![report], columns: None, single: true }
    }
}

fn read(path: &Path) -> Result<String, Error> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Certificate(_) => EXIT_CERTIFICATE,
        Error::Input(_) | Error::CapExceeded { .. } => EXIT_INPUT,
    }
}

/// Parses `argv` (program name first), runs the subcommand, and returns the
/// exit code and standard-output text.
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => (EXIT_OK, e.to_string()),
                _ => {
                    eprint!("{e}");
                    (EXIT_INPUT, String::new())
                }
            };
        }
    };
    match execute(&cli.command) {
        Ok(out) => {
            let text = render(&out.reports, cli.format, out.columns, out.single);
            (out.code, text)
        }
        Err(e) => {
            eprintln!("error: {e}");
            (exit_code(&e), String::new())
        }
    }
}

fn execute(cmd: &Command) -> Result<Outcome, Error> {
    use Provenance::*;
    match cmd {
        Command::Angle { input } => {
            let arr = Arrangement::from_json(&read(input)?)?;
            let res = multi_angle(&arr)?;
            let eps = measured_angle_matrix(&arr)?;
            let mut r = Report::new();
            r.put("subspaces", arr.len())
                .put("dim", arr.ambient_dim())
                .put("names", arr.names().to_vec())
                .num("angle_rad", res.angle, Measured)
                .num("cosine", res.cosine, Measured)
                .num("spectrum_top", res.spectrum_top, Measured)
                .num("intersection_dim", res.intersection_dim, Measured)
                .num("pairwise_cosines", eps.rows(), Measured);
            Ok(Outcome::one(EXIT_OK, r))
        }
        Command::Certify { eps } => {
            let eps = AngleMatrix::from_json(&read(eps)?)?;
            let cert = build_certificate(&eps)?;
            let mut r = Report::new();
            r.put("n", eps.n())
                .put("status", cert.status.as_str())
                .num("lambda_min", cert.lambda_min, Measured)
                .num("angle_lower_bound_rad", cert.angle_lower_bound, Certificate)
                .num("cosine_upper_bound", cert.cosine_upper_bound(eps.n()), Certificate)
                .num("M", cert.m, Measured);
            let code = if cert.is_pd() { EXIT_OK } else { EXIT_CERTIFICATE };
            Ok(Outcome::one(code, r))
        }
        Command::Coxeter(args) => {
            let sys = match (&args.kind, args.rank, &args.m) {
                (Some(t), Some(n), _) => catalogued_system(t, n)?,
                (None, _, Some(path)) => CoxeterSystem::from_json(&read(path)?)?,
                _ => return Err(Error::Input("give --type with --rank, or --m".into())),
            };
            let mut r = coxeter_fields(&sys)?;
            let (_, eps0) = kazhdan_witness(&sys)?;
            r.num("witness_displacement", eps0, Measured);
            Ok(Outcome { columns: Some(&COXETER_COLUMNS), ..Outcome::one(EXIT_OK, r) })
        }
        Command::Table1 { rank, m } => {
            let reports = table_rows(*rank, *m)?.iter().map(coxeter_fields).collect::<Result<Vec<_>, _>>()?;
            Ok(Outcome { code: EXIT_OK, reports, columns: Some(&COXETER_COLUMNS), single: false })
        }
        Command::Steinberg { n, p } => {
            let s = steinberg_certificate(*n, *p)?;
            let mut r = Report::new();
            r.put("n", s.n)
                .put("p", s.p)
                .num("epsilon", s.epsilon, ClosedForm)
                .put("status", s.certificate.status.as_str())
                .num("lambda_min", s.certificate.lambda_min, Measured)
                .num("expected_lambda_min", s.expected_lambda_min, ClosedForm)
                .num("eigenvector_residual", s.eigenvector_residual, Measured)
                .num("kazhdan_bound", s.kazhdan_bound, Certificate)
                .num("kazhdan_floor", s.kazhdan_floor, ClosedForm);
            Ok(Outcome::one(if s.certificate.is_pd() { EXIT_OK } else { EXIT_CERTIFICATE }, r))
        }
        Command::Kacmoody { graph, p } => {
            let g = Graph::from_json(&read(graph)?)?;
            let k = kac_moody_certificate(&g, *p)?;
            let mut r = Report::new();
            r.put("vertices", k.vertices)
                .put("p", k.p)
                .num("epsilon", k.epsilon, ClosedForm)
                .put("status", k.certificate.status.as_str())
                .num("lambda_min", k.certificate.lambda_min, Measured)
                .put("regular_degree", k.regular_degree)
                .num("expected_lambda_min", k.expected_lambda_min, ClosedForm)
                .num("angle_lower_bound_rad", k.certificate.angle_lower_bound, Certificate);
            Ok(Outcome::one(if k.certificate.is_pd() { EXIT_OK } else { EXIT_CERTIFICATE }, r))
        }
        Command::Walk(args) => walk(args),
        Command::So { n, variant, check_harmonic } => {
            let variant: Variant = variant.parse()?;
            let g = so_gap(*n, variant)?;
            let mut r = Report::new();
            r.put("n", g.n).num("delta", g.delta, ClosedForm).num("maslen", g.maslen, ClosedForm);
            let mut code = EXIT_OK;
            if *check_harmonic {
                let h = harmonic2_check(*n)?;
                r.put("harmonic_dimension", h.dimension)
                    .num("harmonic_gap", h.gap, Measured)
                    .num("harmonic_invariant_vectors", h.invariant_vectors, Measured);
                if (h.gap - g.delta).abs() > 1e-9 {
                    code = EXIT_CERTIFICATE;
                }
            }
            Ok(Outcome::one(code, r))
        }
    }
}

fn coxeter_fields(sys: &CoxeterSystem) -> Result<Report, Error> {
    use Provenance::*;
    let rep = coxeter_report(sys)?;
    let mut r = Report::new();
    let h_prov = if sys.coxeter_number().is_some() { ClosedForm } else { Measured };
    r.put("type", rep.type_label.clone())
        .put("rank", rep.rank)
        .num("coxeter_number", rep.h, h_prov)
        .num("lambda_min", rep.lambda_min, Measured)
        .num("M", rep.m, Measured)
        .num("kazhdan_constant", rep.kazhdan, Measured)
        .num("spectral_gap", rep.spectral_gap, Measured);
    if let Some(m) = sys.closed_form_m() {
        r.num("M_closed_form", m, ClosedForm);
    }
    Ok(r)
}

fn walk(args: &WalkArgs) -> Result<Outcome, Error> {
    use Provenance::*;
    let need = |v: Option<usize>, name: &str| v.ok_or_else(|| Error::Input(format!("--{name} is required")));
    let group = match args.group {
        GroupKind::Sl => WalkGroup::Sl { n: need(args.n, "n")?, p: need(args.p.map(|p| p as usize), "p")? as u32 },
        GroupKind::Sym => WalkGroup::Symmetric(need(args.n, "n")?),
        GroupKind::Dihedral => WalkGroup::Dihedral(need(args.n, "n")?),
        GroupKind::Heisenberg => WalkGroup::Heisenberg(need(args.p.map(|p| p as usize), "p")? as u32),
        GroupKind::Coxeter => {
            let kind = args.kind.as_deref().ok_or_else(|| Error::Input("--type is required".into()))?;
            WalkGroup::Coxeter(catalogued_system(kind, need(args.rank.map(|r| r as usize), "rank")? as u32)?)
        }
    };
    let spec = WalkSpec {
        group,
        variant: args.set.parse()?,
        seed: args.seed,
        max_iters: args.iters,
        tolerance: args.tol,
    };
    eprintln!("walk: enumerating group");
    let est = empirical_gap_with_progress(&spec, |k, gap, res| {
        eprintln!("walk: iteration {k}, gap {gap:.9}, residual {res:.2e}");
    })?;
    eprintln!("walk: done after {} iterations", est.iterations);
    let mut r = Report::new();
    r.num("certificate", est.certificate, Certificate)
        .num("certificate_floor", est.certificate_floor, ClosedForm)
        .num("empirical", est.empirical, Measured)
        .num("residual", est.residual, Measured)
        .num("relaxation_time", est.relaxation_time, Measured)
        .num("mixing_time_bound", est.mixing_time_bound, Certificate)
        .put("seed", est.seed)
        .put("iterations", est.iterations)
        .put("converged", est.converged)
        .put("order", est.order)
        .put("flagged", est.flagged);
    Ok(Outcome::one(if est.flagged { EXIT_CERTIFICATE } else { EXIT_OK }, r))
}
