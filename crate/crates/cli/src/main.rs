use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use enomr::coeff::{validate_reference_tables, write_coeff_csv};
use enomr::config::{parse_mesh_list, parse_number, parse_positive, ConfigFile};
use enomr::harness::{
    run_convergence_ladder, run_experiment, timing_comparison, write_convergence_csv,
    write_manifest, write_timing_csv, ConvergenceRow, ExperimentConfig, Precision, Problem,
    RunOutput, StepRule,
};
use enomr::physics::sound_speed;
use enomr::reconstruct::ReconstructionScheme;
use enomr::solver::{write_csv_1d, write_csv_2d, Grid};
use enomr::{DoubleDouble, Error, Real};

#[derive(Parser, Debug)]
#[command(name = "enomr", version, about = "High-order ENO-MR and WENO-AO finite difference solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Regenerate every candidate's coefficients and compare with the reference tables.
    ValidateCoeffs(Common),
    /// Run a smooth problem on a list of meshes and report errors and orders.
    Convergence(Common),
    /// Run a one-dimensional preset and write the final profile.
    Run1d(Common),
    /// Run a two-dimensional preset and write the final field.
    Run2d(Common),
    /// Compare the per-step cost of several schemes on one preset.
    Timing(Common),
}

#[derive(Args, Debug, Default, Clone)]
struct Common {
    /// Config file of key = value lines; command-line flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name (alias of --problem).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    scheme: Option<String>,
    /// Comma-separated scheme list for timing.
    #[arg(long)]
    schemes: Option<String>,
    /// double or extended.
    #[arg(long)]
    precision: Option<String>,
    #[arg(long)]
    cfl: Option<String>,
    /// Inverse spacing 1/h along every axis.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    nx: Option<String>,
    #[arg(long)]
    ny: Option<String>,
    #[arg(long)]
    tend: Option<String>,
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Comma-separated meshes, each 1/h (`100`, `1/100` or `0.01`).
    #[arg(long)]
    meshes: Option<String>,
    /// Stop after this many steps.
    #[arg(long)]
    max_steps: Option<String>,
    /// Steps per timing sample.
    #[arg(long)]
    steps: Option<String>,
    /// Timing repetitions; the median is reported.
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (falls back to ENOMR_THREADS).
    #[arg(long)]
    threads: Option<String>,
    /// Treat precision-floor rows as failures.
    #[arg(long)]
    strict: bool,
}

/// Failure reported as one line `error[<category>]: <message>`.
#[derive(Debug)]
struct Failure {
    category: &'static str,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Failure {
            category: "config",
            message: message.into(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self.category {
            "config" => 2,
            "runtime-nan" => 3,
            "precision-floor" => 4,
            "coefficients" => 5,
            _ => 1,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            category: e.category(),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            category: "io",
            message: e.to_string(),
        }
    }
}

type CliResult<T> = Result<T, Failure>;

/// Flags merged with the config file: `[section]` for the subcommand
/// overrides the top level, and flags override both.
struct Settings {
    values: BTreeMap<String, String>,
    strict: bool,
}

const KEYS: [&str; 18] = [
    "preset", "problem", "scheme", "schemes", "precision", "cfl", "n", "nx", "ny", "tend",
    "lambda", "alpha", "meshes", "max-steps", "steps", "reps", "out", "threads",
];

impl Settings {
    fn gather(c: &Common, section: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        let mut strict = c.strict;
        if let Some(path) = &c.config {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::config(format!("cannot read {}: {e}", path.display())))?;
            let file = ConfigFile::parse(&text).map_err(Error::from)?;
            for sec in ["", section] {
                for (k, v) in file.entries(sec) {
                    let k = k.replace('_', "-");
                    if k == "strict" {
                        strict |= matches!(v, "true" | "1" | "yes");
                    } else if KEYS.contains(&k.as_str()) {
                        values.insert(k, v.to_string());
                    } else {
                        return Err(Failure::config(format!("unknown config key '{k}'")));
                    }
                }
            }
        }
        let flags = [
            ("preset", &c.preset),
            ("problem", &c.problem),
            ("scheme", &c.scheme),
            ("schemes", &c.schemes),
            ("precision", &c.precision),
            ("cfl", &c.cfl),
            ("n", &c.n),
            ("nx", &c.nx),
            ("ny", &c.ny),
            ("tend", &c.tend),
            ("lambda", &c.lambda),
            ("alpha", &c.alpha),
            ("meshes", &c.meshes),
            ("max-steps", &c.max_steps),
            ("steps", &c.steps),
            ("reps", &c.reps),
            ("threads", &c.threads),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v.clone());
            }
        }
        if let Some(out) = &c.out {
            values.insert("out".into(), out.display().to_string());
        }
        Ok(Settings { values, strict })
    }

    fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn number(&self, key: &str) -> CliResult<Option<f64>> {
        self.get(key)
            .map(|v| parse_number(v).map_err(|e| Failure::config(format!("--{key}: {e}"))))
            .transpose()
    }

    fn positive(&self, key: &str) -> CliResult<Option<f64>> {
        self.get(key)
            .map(|v| parse_positive(v).map_err(|e| Failure::config(format!("--{key}: {e}"))))
            .transpose()
    }

    fn count(&self, key: &str) -> CliResult<Option<usize>> {
        self.get(key)
            .map(|v| match v.trim().parse::<usize>() {
                Ok(k) if k > 0 => Ok(k),
                _ => Err(Failure::config(format!("--{key}: expected a positive integer, got '{v}'"))),
            })
            .transpose()
    }

    fn out_dir(&self) -> PathBuf {
        PathBuf::from(self.get("out").unwrap_or("out"))
    }

    fn precision(&self) -> CliResult<Precision> {
        match self.get("precision") {
            None => Ok(Precision::Double),
            Some(p) => p.parse().map_err(|e: enomr::config::ParseError| Failure::config(e.message)),
        }
    }

    fn scheme(&self) -> CliResult<ReconstructionScheme> {
        self.get("scheme")
            .unwrap_or("eno-mr5")
            .parse()
            .map_err(|e: enomr::config::ParseError| Failure::config(e.message))
    }

    fn problem(&self, default: &str) -> CliResult<Problem> {
        let name = self.get("preset").or(self.get("problem")).unwrap_or(default);
        let lambda = self.positive("lambda")?.unwrap_or(1.0);
        let alpha = match self.number("alpha")? {
            None => 3,
            Some(a) if a.fract() == 0.0 && a >= 1.0 => a as u32,
            Some(a) => return Err(Failure::config(format!("--alpha must be a whole number, got {a}"))),
        };
        Ok(Problem::from_name(name, lambda, alpha)?)
    }

    /// Experiment configuration for the run commands.
    fn experiment(&self, default_problem: &str) -> CliResult<ExperimentConfig> {
        let problem = self.problem(default_problem)?;
        let mut cfg = ExperimentConfig::preset(problem, self.scheme()?);
        cfg.precision = self.precision()?;
        if let Some(n) = self.count("n")? {
            cfg.resolution = [n, n];
        }
        if let Some(n) = self.count("nx")? {
            cfg.resolution[0] = n;
        }
        if let Some(n) = self.count("ny")? {
            cfg.resolution[1] = n;
        }
        if let Some(t) = self.positive("tend")? {
            cfg.t_end = t;
        }
        if let Some(c) = self.positive("cfl")? {
            if matches!(cfg.step, StepRule::Cfl(_)) {
                cfg.step = StepRule::Cfl(c);
            }
        } else if matches!(cfg.step, StepRule::Cfl(_)) {
            cfg.step = StepRule::Cfl(0.3);
        }
        cfg.max_steps = self.count("max-steps")?;
        Ok(cfg)
    }
}

fn configure_threads(settings: &Settings) -> CliResult<usize> {
    let env = std::env::var("ENOMR_THREADS").ok();
    let requested = match settings.get("threads").or(env.as_deref()) {
        None => None,
        Some(v) => match v.trim().parse::<usize>() {
            Ok(k) if k > 0 => Some(k),
            _ => return Err(Failure::config(format!("thread count must be a positive integer, got '{v}'"))),
        },
    };
    if let Some(k) = requested {
        // A second call in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(rayon::current_num_threads())
}

fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// Writes the manifest, marking the run incomplete when it failed.
fn finish(
    dir: &Path,
    command: &str,
    mut entries: Vec<(String, String)>,
    threads: usize,
    result: CliResult<()>,
) -> CliResult<()> {
    entries.insert(0, ("command".into(), command.into()));
    entries.push(("threads".into(), threads.to_string()));
    match &result {
        Ok(()) => entries.push(("status".into(), "complete".into())),
        Err(f) => {
            entries.push(("status".into(), "incomplete".into()));
            entries.push(("error".into(), format!("{}: {}", f.category, f.message)));
        }
    }
    let mut w = create(dir, "manifest.txt")?;
    write_manifest(&mut w, &entries)?;
    w.flush()?;
    result
}

fn run(cli: Cli) -> CliResult<()> {
    let (name, common) = match &cli.command {
        Command::ValidateCoeffs(c) => ("validate-coeffs", c),
        Command::Convergence(c) => ("convergence", c),
        Command::Run1d(c) => ("run1d", c),
        Command::Run2d(c) => ("run2d", c),
        Command::Timing(c) => ("timing", c),
    };
    let settings = Settings::gather(common, name)?;
    let threads = configure_threads(&settings)?;
    let dir = settings.out_dir();
    fs::create_dir_all(&dir)?;
    match cli.command {
        Command::ValidateCoeffs(_) => {
            let result = validate_coeffs(&dir);
            finish(&dir, name, Vec::new(), threads, result)
        }
        Command::Convergence(_) => {
            let cfg = settings.experiment("sin-alpha")?;
            let meshes = match settings.get("meshes") {
                Some(m) => parse_mesh_list(m).map_err(|e| Failure::config(format!("--meshes: {e}")))?,
                None => vec![cfg.resolution[0], 2 * cfg.resolution[0], 4 * cfg.resolution[0]],
            };
            let mut entries = cfg.describe();
            entries.retain(|(k, _)| k != "resolution");
            entries.push((
                "meshes".into(),
                meshes.iter().map(|k| format!("1/{k}")).collect::<Vec<_>>().join(","),
            ));
            let result = convergence(&cfg, &meshes, &dir, settings.strict);
            finish(&dir, name, entries, threads, result)
        }
        Command::Run1d(_) | Command::Run2d(_) => {
            let dims = if name == "run1d" { 1 } else { 2 };
            let cfg = settings.experiment(if dims == 1 { "lax" } else { "rp1" })?;
            if cfg.problem.model().dims() != dims {
                return Err(Failure::config(format!(
                    "preset '{}' is not {dims}D; use run{}d",
                    cfg.problem.name(),
                    cfg.problem.model().dims()
                )));
            }
            let entries = cfg.describe();
            let result = run_preset(&cfg, &dir);
            finish(&dir, name, entries, threads, result.map(|_| ()))
        }
        Command::Timing(_) => {
            let mut cfg = settings.experiment("rp1")?;
            if settings.get("n").is_none() && settings.get("nx").is_none() {
                cfg.resolution = [100, 100];
            }
            let schemes = match settings.get("schemes") {
                Some(list) => list
                    .split(',')
                    .map(|s| s.parse().map_err(|e: enomr::config::ParseError| Failure::config(e.message)))
                    .collect::<CliResult<Vec<ReconstructionScheme>>>()?,
                None => ReconstructionScheme::all().to_vec(),
            };
            let steps = settings.count("steps")?.unwrap_or(3);
            let reps = settings.count("reps")?.unwrap_or(3);
            let mut entries = cfg.describe();
            entries.retain(|(k, _)| k != "scheme");
            entries.push((
                "schemes".into(),
                schemes.iter().map(|s| s.name()).collect::<Vec<_>>().join(","),
            ));
            entries.push(("steps".into(), steps.to_string()));
            entries.push(("reps".into(), reps.to_string()));
            let result = (|| -> CliResult<()> {
                let rows = timing_comparison(&schemes, &cfg, steps, reps)?;
                let mut w = create(&dir, "timing.csv")?;
                write_timing_csv(&mut w, &rows)?;
                w.flush()?;
                for r in &rows {
                    println!("{:<12} {:>12.6e} s/step  {:>6.3}", r.scheme, r.seconds_per_step, r.normalized);
                }
                Ok(())
            })();
            finish(&dir, name, entries, threads, result)
        }
    }
}

fn validate_coeffs(dir: &Path) -> CliResult<()> {
    let report = validate_reference_tables()?;
    let mut w = create(dir, "coefficients.csv")?;
    write_coeff_csv(&mut w)?;
    w.flush()?;
    print!("{report}");
    if !report.mismatches.is_empty() {
        return Err(Failure {
            category: "coefficients",
            message: format!("{} coefficient mismatches", report.mismatches.len()),
        });
    }
    Ok(())
}

fn convergence(cfg: &ExperimentConfig, meshes: &[usize], dir: &Path, strict: bool) -> CliResult<()> {
    let rows: Vec<ConvergenceRow> = match cfg.precision {
        Precision::Double => run_convergence_ladder::<f64>(cfg, meshes)?,
        Precision::Extended => run_convergence_ladder::<DoubleDouble>(cfg, meshes)?,
    };
    let mut w = create(dir, "convergence.csv")?;
    write_convergence_csv(&mut w, &rows)?;
    w.flush()?;
    for r in &rows {
        let order = r.order_l1.map_or_else(|| "-".to_string(), |o| format!("{o:.2}"));
        let note = if r.at_precision_floor { "  (precision floor)" } else { "" };
        println!("h=1/{:<6} L1={:.3e}  order={}{}", r.inv_h, r.l1, order, note);
    }
    let floored = rows.iter().filter(|r| r.at_precision_floor).count();
    if floored > 0 {
        let msg = format!("{floored} row(s) reached the {} precision floor", cfg.precision);
        if strict {
            return Err(Failure {
                category: "precision-floor",
                message: msg,
            });
        }
        eprintln!("warning[precision-floor]: {msg}");
    }
    Ok(())
}

fn run_preset(cfg: &ExperimentConfig, dir: &Path) -> CliResult<()> {
    match cfg.precision {
        Precision::Double => write_run(cfg, &run_experiment::<f64>(cfg)?, dir),
        Precision::Extended => write_run(cfg, &run_experiment::<DoubleDouble>(cfg)?, dir),
    }
}

/// Converts conserved nodes to `(rho, velocities..., p)` for output.
fn primitive<T: Real>(field: &[T], nv: usize, gamma: f64) -> Vec<T> {
    let g = T::from_f64(gamma);
    let mut out = Vec::with_capacity(field.len());
    for c in field.chunks_exact(nv) {
        let (_, p) = sound_speed(c, g);
        out.push(c[0]);
        for m in &c[1..nv - 1] {
            out.push(*m / c[0]);
        }
        out.push(p);
    }
    out
}

fn write_run<T: Real>(cfg: &ExperimentConfig, out: &RunOutput<T>, dir: &Path) -> CliResult<()> {
    let model = cfg.problem.model();
    let grid: &Grid = &out.grid;
    let (values, names): (Vec<T>, &[&str]) = match model.gamma() {
        Some(g) if out.nv == 3 => (primitive(out.field(), 3, g), &["rho", "u", "p"]),
        Some(g) => (primitive(out.field(), 4, g), &["rho", "u", "v", "p"]),
        None => (out.field().to_vec(), &["u"]),
    };
    if model.gamma().is_some() {
        let np = values.chunks_exact(out.nv).position(|c| !(c[0] > T::zero() && c[out.nv - 1] > T::zero()));
        if let Some(k) = np {
            return Err(Failure {
                category: "runtime-nan",
                message: format!("non-physical state at node {k} at the end of the run"),
            });
        }
    }
    let file = if grid.dims == 1 { "profile.csv" } else { "field.csv" };
    let mut w = create(dir, file)?;
    if grid.dims == 1 {
        write_csv_1d(&mut w, grid, out.nv, &values, names)?;
    } else {
        write_csv_2d(&mut w, grid, out.nv, &values, names)?;
    }
    w.flush()?;
    println!(
        "{} with {}: {} steps to t = {}",
        cfg.problem.name(),
        cfg.scheme.name(),
        out.stats.steps,
        out.stats.t_final
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.category, f.message);
            ExitCode::from(f.exit_code())
        }
    }
}
