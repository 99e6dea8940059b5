//! `heisenspec run | list | validate`: config-driven experiment runner.
//!
//! Every failure prints one line `error[<tag>]: <reason>` on stderr and exits with the
//! code of its class (see `Kind`).

pub mod experiments;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use heisenspec::io::{format_f64, Config};

use experiments::{prepare, Experiment, Report, EXPERIMENTS};

/// Error classes and their exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    ChecksFailed,
    Usage,
    Config,
    UnknownExperiment,
    InvalidParameter,
    Resolution,
    Io,
    Numerical,
}

impl Kind {
    pub fn code(self) -> i32 {
        match self {
            Kind::ChecksFailed => 1,
            Kind::Usage => 2,
            Kind::Config => 3,
            Kind::UnknownExperiment => 4,
            Kind::InvalidParameter => 5,
            Kind::Resolution => 6,
            Kind::Io => 7,
            Kind::Numerical => 8,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Kind::ChecksFailed => "checks_failed",
            Kind::Usage => "usage",
            Kind::Config => "config",
            Kind::UnknownExperiment => "unknown_experiment",
            Kind::InvalidParameter => "invalid_parameter",
            Kind::Resolution => "resolution",
            Kind::Io => "io",
            Kind::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub kind: Kind,
    pub message: String,
}

impl Failure {
    fn new(kind: Kind, message: impl Into<String>) -> Self {
        Self {
            kind,
            message: message.into(),
        }
    }

    /// The one-line reason printed on stderr.
    pub fn line(&self) -> String {
        let msg: Vec<&str> = self.message.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        format!("error[{}]: {}", self.kind.tag(), msg.join("; "))
    }
}

impl From<heisenspec::Error> for Failure {
    fn from(e: heisenspec::Error) -> Self {
        use heisenspec::Error as E;
        let kind = match &e {
            E::DimensionMismatch { .. } | E::InvalidParameter { .. } | E::GridMismatch(_) => Kind::InvalidParameter,
            E::SupportOverflow { .. }
            | E::StencilOutOfBounds { .. }
            | E::UnderResolved { .. }
            | E::UnstableStep { .. }
            | E::TooLarge(_) => Kind::Resolution,
            E::NonSymmetric(_) | E::NoConvergence(_) => Kind::Numerical,
            E::Config(_) => Kind::Config,
            E::Io(_) => Kind::Io,
        };
        Failure::new(kind, e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(Kind::Io, e.to_string())
    }
}

#[derive(Parser)]
#[command(name = "heisenspec", version, about = "Nonlocal diffusion on the Heisenberg group: experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment named in a config file
    Run { config: PathBuf },
    /// List the available experiments
    List,
    /// Resolve and check a config file without running it
    Validate { config: PathBuf },
}

/// A parsed config with its experiment ready to run.
pub struct Prepared {
    pub name: String,
    pub config: Config,
    pub experiment: Box<dyn Experiment>,
    pub threads: usize,
}

pub fn prepare_text(text: &str) -> Result<Prepared, Failure> {
    finish_prepare(Config::parse(text)?)
}

pub fn prepare_file(path: &Path) -> Result<Prepared, Failure> {
    finish_prepare(Config::load(path)?)
}

fn finish_prepare(config: Config) -> Result<Prepared, Failure> {
    let name = config.require_str("experiment")?;
    if !EXPERIMENTS.iter().any(|(e, _)| *e == name) {
        let known: Vec<&str> = EXPERIMENTS.iter().map(|(e, _)| *e).collect();
        return Err(Failure::new(
            Kind::UnknownExperiment,
            format!("unknown experiment '{name}'; expected one of {}", known.join(", ")),
        ));
    }
    // the library is sequential, so results do not depend on this; it is kept for provenance
    let threads = config.get_usize("threads", 1)?;
    if threads == 0 {
        return Err(Failure::new(Kind::InvalidParameter, "invalid parameter threads: must be at least 1"));
    }
    let experiment = prepare(&name, &config)?;
    let unused = config.unused_keys();
    if !unused.is_empty() {
        return Err(Failure::new(
            Kind::Config,
            format!("unknown keys for experiment '{name}': {}", unused.join(", ")),
        ));
    }
    Ok(Prepared {
        name,
        config,
        experiment,
        threads,
    })
}

/// Result of a completed run.
pub struct RunOutcome {
    pub dir: PathBuf,
    pub report: Report,
    pub elapsed: f64,
}

/// Creates `<root>/<experiment>/<timestamp>`, adding a suffix if the name is taken.
fn claim_dir(root: &Path, name: &str) -> Result<PathBuf, Failure> {
    let parent = root.join(name);
    fs::create_dir_all(&parent).map_err(|e| Failure::new(Kind::Io, format!("{}: {e}", parent.display())))?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ").to_string();
    for i in 0.. {
        let dir = if i == 0 {
            parent.join(&stamp)
        } else {
            parent.join(format!("{stamp}-{i}"))
        };
        match fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Failure::new(Kind::Io, format!("{}: {e}", dir.display()))),
        }
    }
    unreachable!()
}

fn write_results(path: &Path, report: &Report) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::new(Kind::Io, format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(&report.header).map_err(io)?;
    for row in &report.rows {
        w.write_record(row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// summary.txt: header lines, then one `check` line per check and one `note` line per note.
pub fn summary_text(name: &str, report: &Report, elapsed: f64) -> String {
    let failed = report.checks.iter().filter(|c| !c.pass).count();
    let mut s = String::new();
    let _ = writeln!(s, "experiment = {name}");
    let _ = writeln!(s, "status = {}", if failed == 0 { "pass" } else { "fail" });
    let _ = writeln!(s, "checks = {}", report.checks.len());
    let _ = writeln!(s, "failed = {failed}");
    let _ = writeln!(s, "elapsed_s = {elapsed:.3}");
    for c in &report.checks {
        let crit = c.criterion.map_or("-".to_string(), |n| n.to_string());
        let _ = writeln!(
            s,
            "check name={} criterion={crit} value={} bound={} result={}",
            c.name,
            format_f64(c.value),
            c.bound,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    for n in &report.notes {
        let _ = writeln!(s, "note {n}");
    }
    s
}

/// Runs a prepared experiment and writes inputs.echo, results.csv and summary.txt.
pub fn run_prepared(p: Prepared, root: &Path) -> Result<RunOutcome, Failure> {
    let dir = claim_dir(root, &p.name)?;
    fs::write(dir.join("inputs.echo"), p.config.echo())?;
    let t0 = Instant::now();
    let report = match p.experiment.execute() {
        Ok(r) => r,
        Err(e) => {
            let f = Failure::from(e);
            fs::write(
                dir.join("summary.txt"),
                format!("experiment = {}\nstatus = error\nerror = {}\n", p.name, f.line()),
            )?;
            return Err(f);
        }
    };
    let elapsed = t0.elapsed().as_secs_f64();
    write_results(&dir.join("results.csv"), &report)?;
    fs::write(dir.join("summary.txt"), summary_text(&p.name, &report, elapsed))?;
    Ok(RunOutcome { dir, report, elapsed })
}

/// Entry point of the binary; `HEISENSPEC_OUT` overrides the output root `outputs`.
pub fn run_cli(args: Vec<OsString>) -> i32 {
    let root = std::env::var_os("HEISENSPEC_OUT").map_or_else(|| PathBuf::from("outputs"), PathBuf::from);
    run_cli_with(args, &root)
}

pub fn run_cli_with(args: Vec<OsString>, root: &Path) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            return report_failure(&Failure::new(Kind::Usage, first));
        }
    };
    match cli.command {
        Command::List => {
            for (name, about) in EXPERIMENTS {
                println!("{name}\t{about}");
            }
            0
        }
        Command::Validate { config } => match prepare_file(&config) {
            Ok(p) => {
                print!("{}", p.config.echo());
                println!("valid experiment={}", p.name);
                0
            }
            Err(f) => report_failure(&f),
        },
        Command::Run { config } => match prepare_file(&config).and_then(|p| run_prepared(p, root)) {
            Ok(out) => {
                let failed: Vec<&str> =
                    out.report.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
                println!(
                    "status={} checks={} dir={}",
                    if failed.is_empty() { "pass" } else { "fail" },
                    out.report.checks.len(),
                    out.dir.display()
                );
                if failed.is_empty() {
                    0
                } else {
                    report_failure(&Failure::new(
                        Kind::ChecksFailed,
                        format!("{} of {} checks failed: {}", failed.len(), out.report.checks.len(), failed.join(", ")),
                    ))
                }
            }
            Err(f) => report_failure(&f),
        },
    }
}

fn report_failure(f: &Failure) -> i32 {
    eprintln!("{}", f.line());
    f.kind.code()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(v: &[&str]) -> Vec<OsString> {
        std::iter::once("heisenspec").chain(v.iter().copied()).map(OsString::from).collect()
    }

    fn config_file(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("run.cfg");
        fs::write(&p, text).unwrap();
        p
    }

    fn kind_of(text: &str) -> Kind {
        match prepare_text(text) {
            Ok(_) => panic!("config accepted: {text}"),
            Err(f) => f.kind,
        }
    }

    #[test]
    fn exit_codes_are_distinct() {
        let kinds = [
            Kind::ChecksFailed,
            Kind::Usage,
            Kind::Config,
            Kind::UnknownExperiment,
            Kind::InvalidParameter,
            Kind::Resolution,
            Kind::Io,
            Kind::Numerical,
        ];
        let mut codes: Vec<i32> = kinds.iter().map(|k| k.code()).collect();
        codes.sort();
        codes.dedup();
        assert_eq!(codes.len(), kinds.len());
        assert!(codes.iter().all(|c| *c != 0));
    }

    #[test]
    fn usage_list_and_help() {
        let tmp = tempfile::tempdir().unwrap();
        assert_eq!(run_cli_with(args(&[]), tmp.path()), 2);
        assert_eq!(run_cli_with(args(&["frobnicate"]), tmp.path()), 2);
        assert_eq!(run_cli_with(args(&["run"]), tmp.path()), 2);
        assert_eq!(run_cli_with(args(&["--help"]), tmp.path()), 0);
        assert_eq!(run_cli_with(args(&["list"]), tmp.path()), 0);
    }

    #[test]
    fn unknown_experiment() {
        let f = prepare_text("experiment = heat-death\n").err().unwrap();
        assert_eq!(f.kind, Kind::UnknownExperiment);
        assert!(f.line().starts_with("error[unknown_experiment]: unknown experiment 'heat-death'"));
        assert!(!f.line().contains('\n'));
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config_file(tmp.path(), "experiment = heat-death\n");
        assert_eq!(run_cli_with(args(&["run", cfg.to_str().unwrap()]), tmp.path()), 4);
    }

    #[test]
    fn config_errors() {
        assert_eq!(kind_of("experiment eigen\n"), Kind::Config);
        assert_eq!(kind_of("n = 1\n"), Kind::Config);
        assert_eq!(kind_of("experiment = eigen\nexperiment = eigen\n"), Kind::Config);
        assert_eq!(kind_of("experiment = eigen\nlattice.hh = 0.5\n"), Kind::Config);
        // keys of another experiment are unknown here
        assert_eq!(kind_of("experiment = eigen\neps = 0.4, 0.2\n"), Kind::Config);
        let tmp = tempfile::tempdir().unwrap();
        let missing = tmp.path().join("nope.cfg");
        assert_eq!(run_cli_with(args(&["validate", missing.to_str().unwrap()]), tmp.path()), 7);
        let f = prepare_file(&missing).err().unwrap();
        assert_eq!(f.kind, Kind::Io);
    }

    #[test]
    fn invalid_parameters() {
        assert_eq!(kind_of("experiment = eigen\nlattice.h = -0.5\n"), Kind::InvalidParameter);
        assert_eq!(kind_of("experiment = eigen\nlattice.h = half\n"), Kind::InvalidParameter);
        assert_eq!(kind_of("experiment = eigen\nn = 2\n"), Kind::InvalidParameter);
        assert_eq!(kind_of("experiment = eigen\nthreads = 0\n"), Kind::InvalidParameter);
        assert_eq!(kind_of("experiment = cauchy-decay\nfit.points = 3\n"), Kind::InvalidParameter);
        assert_eq!(kind_of("experiment = consistency\neps = 0.1, 0.2\n"), Kind::InvalidParameter);
        assert_eq!(kind_of("experiment = dirichlet-decay\nscheme = leapfrog\n"), Kind::InvalidParameter);
        assert_eq!(kind_of("experiment = plancherel\ngrid.richardson = maybe\n"), Kind::InvalidParameter);
    }

    #[test]
    fn resolution_violations() {
        let f = prepare_text("experiment = consistency\nlattice.cells = 4\n").err().unwrap();
        assert_eq!(f.kind, Kind::Resolution);
        assert!(f.line().starts_with("error[resolution]: under-resolved"), "{}", f.line());
        assert_eq!(kind_of("experiment = eps-convergence\nlattice.cells = 3\n"), Kind::Resolution);
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config_file(tmp.path(), "experiment = consistency\nlattice.cells = 4\n");
        assert_eq!(run_cli_with(args(&["validate", cfg.to_str().unwrap()]), tmp.path()), 6);
    }

    #[test]
    fn validate_echoes_defaults_without_writing() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config_file(tmp.path(), "experiment = plancherel\nthreads = 2\n");
        let out = tmp.path().join("out");
        assert_eq!(run_cli_with(args(&["validate", cfg.to_str().unwrap()]), &out), 0);
        assert!(!out.exists());
        let p = prepare_file(&cfg).unwrap();
        let echo = p.config.echo();
        for line in ["grid.k_max = 1000", "grid.n_lambda = 400", "profile.nr = 256", "threads = 2", "n = 1"] {
            assert!(echo.contains(line), "{line} missing from\n{echo}");
        }
    }

    #[test]
    fn eigen_runs_are_bitwise_reproducible() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = config_file(tmp.path(), "experiment = eigen\n");
        let out = tmp.path().join("out");
        let a = run_prepared(prepare_file(&cfg).unwrap(), &out).unwrap();
        assert!(a.report.passed(), "{:?}", a.report.checks);
        assert_eq!(run_cli_with(args(&["run", cfg.to_str().unwrap()]), &out), 0);
        let runs: Vec<PathBuf> = fs::read_dir(out.join("eigen"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        assert_eq!(runs.len(), 2);
        let csvs: Vec<Vec<u8>> = runs.iter().map(|d| fs::read(d.join("results.csv")).unwrap()).collect();
        assert_eq!(csvs[0], csvs[1]);
        for d in &runs {
            let echo = fs::read_to_string(d.join("inputs.echo")).unwrap();
            assert!(echo.contains("experiment = eigen") && echo.contains("lattice.h = 0.5"));
            let summary = fs::read_to_string(d.join("summary.txt")).unwrap();
            assert!(summary.contains("status = pass"));
            assert!(summary.lines().filter(|l| l.starts_with("check ")).all(|l| l.ends_with("result=PASS")));
        }
    }

    #[test]
    fn summary_marks_failed_checks() {
        let report = Report {
            checks: vec![experiments::Check::at_most("x", Some(1), 2.0, 1.0)],
            ..Default::default()
        };
        assert!(!report.passed());
        let s = summary_text("eigen", &report, 0.0);
        assert!(s.contains("status = fail"));
        assert!(s.contains("check name=x criterion=1 value=2.0 bound=<=1e0 result=FAIL"));
    }
}
