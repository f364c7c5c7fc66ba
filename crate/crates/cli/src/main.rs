//! `coiso`: index computations and rigidity experiments from the command line.
//!
//! Exit codes: 0 success, 1 malformed input, 2 degenerate endpoint (the
//! mean index is still reported), 3 an experiment check failed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use coiso_core::index::{self, IndexResult};
use coiso_core::lab::{self, ExperimentReport};
use coiso_core::maslov::{self, FramedLeafLoop, LeafLoopFile};
use coiso_core::models::CoisotropicModel;
use coiso_core::symplectic::SymplecticPath;
use coiso_core::{Error, Tolerances};

#[derive(Parser)]
#[command(name = "coiso", version, about = "Conley-Zehnder, mean and coisotropic Maslov indices")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    #[command(flatten)]
    tol: TolArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

/// Overrides for the numerical tolerances of the index computations.
#[derive(Args)]
struct TolArgs {
    #[arg(long, global = true)]
    tol_sympl: Option<f64>,
    #[arg(long, global = true)]
    tol_pairing: Option<f64>,
    #[arg(long, global = true)]
    tol_eig: Option<f64>,
    #[arg(long, global = true)]
    tol_cross: Option<f64>,
    #[arg(long, global = true)]
    tol_form: Option<f64>,
}

impl TolArgs {
    fn resolve(&self) -> Result<Tolerances, Failure> {
        let mut t = Tolerances::default();
        let fields = [
            (self.tol_sympl, &mut t.sympl),
            (self.tol_pairing, &mut t.pairing),
            (self.tol_eig, &mut t.eig),
            (self.tol_cross, &mut t.cross),
            (self.tol_form, &mut t.form),
        ];
        for (v, slot) in fields {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Failure::input("bad_parameters", format!("tolerance {v} must be positive")));
                }
                *slot = v;
            }
        }
        Ok(t)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Mean index and Conley-Zehnder index of a sympath-v1 file.
    Index {
        #[arg(long)]
        path: PathBuf,
    },
    /// Coisotropic Maslov index, area and length of a loop class.
    Maslov {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated class vector, e.g. `1,0` or `=-1,2`.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required_unless_present = "loop_file")]
        class: Vec<i64>,
        /// A leafloop-v1 file instead of a class.
        #[arg(long = "loop", conflicts_with = "class")]
        loop_file: Option<PathBuf>,
    },
    /// Run an experiment and write a rigidity-report-v1 document.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Experiment {
    Lemma33,
    Prop31,
    Prop32,
    Lemma35,
    Theorem,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    which: Experiment,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, env = "COISO_SEED", default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    class: Vec<i64>,
    #[arg(long, default_value_t = 1e-2)]
    perturb_scale: f64,
    /// Closed geodesics up to this length (prop31).
    #[arg(long, default_value_t = 10.0)]
    length_cutoff: f64,
    /// Neighbourhood parameter `r` (lemma35); defaults to `0.75·R`.
    #[arg(long)]
    r: Option<f64>,
    /// Values of `C` (lemma35); defaults to `e(U) + 0.5`.
    #[arg(long = "C", value_delimiter = ',')]
    c_values: Vec<f64>,
    /// Values of `ε` (lemma35).
    #[arg(long, value_delimiter = ',', default_value = "0.01")]
    eps: Vec<f64>,
    /// Report destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write plot-ready CSV to this file.
    #[arg(long)]
    emit_plot_data: Option<PathBuf>,
}

/// An error reported as `{"error": kind, "message": ...}`.
struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl Failure {
    fn input(kind: &str, message: impl Into<String>) -> Self {
        Self {
            code: 1,
            kind: kind.into(),
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::DegenerateEndpoint) { 2 } else { 1 };
        Self {
            code,
            kind: e.kind().into(),
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))
}

fn write(path: &Path, s: &str) -> Result<(), Failure> {
    fs::write(path, s).map_err(|e| Failure::input("io", format!("{}: {e}", path.display())))
}

fn load_model(path: Option<&Path>) -> Result<CoisotropicModel, Failure> {
    let path = path.ok_or_else(|| Failure::input("bad_parameters", "this experiment needs --model"))?;
    Ok(CoisotropicModel::from_json(&read(path)?)?)
}

/// Output of a successful command: text for standard output and exit code.
type Done = (String, u8);

fn cmd_index(path: &Path, tol: &Tolerances, format: Format) -> Result<Done, Failure> {
    let p = SymplecticPath::from_json(&read(path)?, tol)?;
    let r: IndexResult = index::index_report_with(&p, tol)?;
    let code = if r.degenerate_endpoint { 2 } else { 0 };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&r).expect("index result"),
        Format::Csv => {
            let cz = r.cz_index.map(|c| c.to_string()).unwrap_or_default();
            let mut s = format!("mean_index,cz,degenerate_endpoint\n{:.12},{cz},{}\n", r.mean_index, r.degenerate_endpoint);
            s.push_str("crossing_t,signature\n");
            for c in &r.crossings {
                let _ = writeln!(s, "{:.12},{}", c.t, c.signature);
            }
            s
        }
    };
    Ok((text, code))
}

fn cmd_maslov(model: &Path, class: &[i64], loop_file: Option<&Path>, format: Format) -> Result<Done, Failure> {
    let m = CoisotropicModel::from_json(&read(model)?)?;
    let r = match loop_file {
        None => maslov::class_index(&m, class)?,
        Some(f) => {
            let file: LeafLoopFile =
                serde_json::from_str(&read(f)?).map_err(|e| Failure::input("format", e.to_string()))?;
            let lp: FramedLeafLoop = file.into_loop(&m)?;
            maslov::ClassIndex {
                class: lp.homotopy_class.clone(),
                mu: maslov::maslov_index(&lp, &m)?,
                area: m.loop_area(&lp)?,
                length: m.class_length(&lp.homotopy_class)?,
            }
        }
    };
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&r).expect("class index"),
        Format::Csv => {
            let c: Vec<String> = r.class.iter().map(|x| x.to_string()).collect();
            format!("class,mu,area,length\n\"{}\",{:.12},{:.12},{:.12}\n", c.join(" "), r.mu, r.area, r.length)
        }
    };
    Ok((text, 0))
}

fn report_csv(rep: &ExperimentReport) -> String {
    let mut s = String::from("check,pass,detail\n");
    for c in &rep.checks {
        let detail = c.detail.to_string().replace('"', "\"\"");
        let _ = writeln!(s, "{},{},\"{detail}\"", c.name, c.pass);
    }
    s
}

/// `class_mu` series from a report's candidate table.
fn candidate_plot_data(rep: &ExperimentReport) -> String {
    let mut s = String::from("series,x,y\n");
    if let Some(Value::Array(rows)) = rep.data.get("candidates") {
        for row in rows {
            let class: Vec<String> = row["class"]
                .as_array()
                .map(|a| a.iter().map(|v| v.to_string()).collect())
                .unwrap_or_default();
            let _ = writeln!(s, "class_mu,\"({})\",{}", class.join(" "), row["mu"]);
            let _ = writeln!(s, "class_area,\"({})\",{}", class.join(" "), row["area"]);
        }
    }
    s
}

fn cmd_experiment(a: &ExperimentArgs, format: Format) -> Result<Done, Failure> {
    let mut plot = None;
    let mut rep = match a.which {
        Experiment::Lemma33 => {
            let n = a.n.ok_or_else(|| Failure::input("bad_parameters", "lemma33 needs --n"))?;
            let k = a.k.ok_or_else(|| Failure::input("bad_parameters", "lemma33 needs --k"))?;
            lab::lemma33_report(n, k, a.trials, a.perturb_scale, a.seed)?
        }
        Experiment::Prop31 => {
            let m = load_model(a.model.as_deref())?;
            lab::prop31_report(&m, a.length_cutoff, 1e-6)?
        }
        Experiment::Prop32 => {
            let m = load_model(a.model.as_deref())?;
            let class = if a.class.is_empty() {
                m.closed_geodesics(10.0)
                    .first()
                    .map(|g| g.homotopy_class.clone())
                    .ok_or_else(|| Failure::input("bad_parameters", "model has no closed geodesic of length ≤ 10"))?
            } else {
                a.class.clone()
            };
            lab::prop32_report(&m, &class, a.trials, a.perturb_scale, a.seed)?
        }
        Experiment::Lemma35 => {
            let m = load_model(a.model.as_deref())?;
            let r = a.r.unwrap_or(0.75 * m.big_r);
            let e_u = lab::neighbourhood_energy(&m, r);
            let cs = if a.c_values.is_empty() { vec![e_u + 0.5] } else { a.c_values.clone() };
            let rep = lab::lemma35_band_check(&m, r, &cs, &a.eps)?;
            if a.emit_plot_data.is_some() {
                let profile = lab::build_profile(cs[0], a.eps[0], r, m.big_r, e_u)?;
                plot = Some(lab::plot_data_csv(&lab::orbit_catalog(&profile, &m)?));
            }
            rep
        }
        Experiment::Theorem => {
            let m = load_model(a.model.as_deref())?;
            lab::theorem_bounds_check(&m, a.delta)?
        }
    };
    if rep.seed.is_none() {
        rep.seed = Some(a.seed);
    }
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    rep.timestamp = Some(format!("{secs}"));
    if let Some(path) = &a.emit_plot_data {
        write(path, &plot.unwrap_or_else(|| candidate_plot_data(&rep)))?;
    }
    let text = match format {
        Format::Json => rep.to_json(),
        Format::Csv => report_csv(&rep),
    };
    let code = if rep.pass { 0 } else { 3 };
    match &a.out {
        Some(path) => {
            write(path, &text)?;
            Ok((json!({"report": path, "pass": rep.pass}).to_string(), code))
        }
        None => Ok((text, code)),
    }
}

fn run(cli: &Cli) -> Result<Done, Failure> {
    let tol = cli.tol.resolve()?;
    match &cli.command {
        Command::Index { path } => cmd_index(path, &tol, cli.format),
        Command::Maslov { model, class, loop_file } => cmd_maslov(model, class, loop_file.as_deref(), cli.format),
        Command::Experiment(a) => cmd_experiment(a, cli.format),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{e}");
            println!("{}", json!({"error": "usage", "message": e.kind().to_string()}));
            return ExitCode::from(1);
        }
    };
    match run(&cli) {
        Ok((text, code)) => {
            println!("{}", text.trim_end());
            ExitCode::from(code)
        }
        Err(f) => {
            println!("{}", json!({"error": f.kind, "message": f.message}));
            ExitCode::from(f.code)
        }
    }
}
