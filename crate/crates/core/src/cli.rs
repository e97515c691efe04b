//! The `sync-lab` command line.
//!
//! Exit codes: 0 verdict pass, 1 verdict fail, 2 usage or config error,
//! 3 numerical failure. Every error prints one line to stderr:
//! `error kind=<kind> key=<key> msg="<message>"`.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::experiments::{
    load_config_str, load_sweep_str, run, run_sweep, threads_from_env, Experiment, ExperimentReport,
};
use crate::integrate::Trajectory;
use crate::observables::{diameter, order_parameter};
use crate::reconstruct::determinability_threshold;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "sync-lab", version, about = "Inertial Kuramoto simulation and certification lab")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args, Clone)]
struct Common {
    /// Scenario config (JSON)
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Output directory for report.json and CSV files
    #[arg(long, short, default_value = ".")]
    out: PathBuf,
    /// Override a config key, e.g. `--set inertia_m=0.25` or `--set knobs.t0=0.3`
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Print every check
    #[arg(long, short, action = clap::ArgAction::Count)]
    verbose: u8,
    /// Check C¹ bounds from t = 0 as well
    #[arg(long)]
    strict: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate one scenario and write its trajectory
    Simulate(Common),
    /// m-sweep against the first-order limit (or the identical-frequency comparison)
    Compare(Common),
    /// Reconstruct velocities from (Θ(t₀), Ω⁰)
    Reconstruct(Common),
    /// Threshold T*(κ, m); with a config, the counterexample pipeline
    Determinability {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        m: Option<f64>,
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Synchronization certificate for one scenario
    Certify(Common),
    /// Majority-cluster criterion
    Cluster(Common),
    /// Several scenarios from one file, run concurrently
    Sweep(Common),
    /// Order-parameter window probe (informational)
    Probe(Common),
}

fn kind(e: &Error) -> &'static str {
    match e {
        Error::Invalid { .. } => "invalid",
        Error::Range { .. } => "range",
        Error::Precondition(_) => "precondition",
        Error::Integration { .. } => "integration",
        Error::NonConvergence { .. } => "non_convergence",
        Error::Bracket { .. } => "bracket",
    }
}

fn diagnostic(kind: &str, key: &str, msg: &str) {
    let msg = msg.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ");
    eprintln!("error kind={kind} key={key} msg=\"{msg}\"");
}

fn fail(e: &Error) -> i32 {
    diagnostic(kind(e), e.key().unwrap_or("-"), &e.to_string());
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

/// `x` with 9 significant digits; non-finite values print as inf / nan.
pub fn format_sig9(x: f64) -> String {
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0.00000000".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        format!("{:.*}", (8 - mag).max(0) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

/// Header `t,theta_1..,omega_1..,R,D_theta,D_omega`, one row per grid point, 17 significant digits.
pub fn write_trajectory_csv(traj: &Trajectory, path: &Path) -> io::Result<()> {
    let n = traj.params().n();
    let mut w = BufWriter::new(File::create(path)?);
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("theta_{i}")));
    header.extend((1..=n).map(|i| format!("omega_{i}")));
    header.extend(["R", "D_theta", "D_omega"].map(String::from));
    writeln!(w, "{}", header.join(","))?;
    for s in traj.states() {
        let mut row = Vec::with_capacity(2 * n + 4);
        row.push(s.t);
        row.extend(&s.theta);
        row.extend(&s.omega);
        row.push(order_parameter(&s.theta));
        row.push(diameter(&s.theta));
        row.push(diameter(&s.omega));
        let line: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()
}

/// Reads a file written by [`write_trajectory_csv`]: (header, rows).
pub fn read_trajectory_csv(path: &Path) -> io::Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = BufReader::new(File::open(path)?).lines();
    let header: Vec<String> = match lines.next() {
        Some(h) => h?.split(',').map(String::from).collect(),
        None => return Err(io::Error::new(io::ErrorKind::InvalidData, "empty file")),
    };
    let mut rows = Vec::new();
    for line in lines {
        let row = line?
            .split(',')
            .map(|v| v.parse::<f64>().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)))
            .collect::<io::Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "row length differs from header"));
        }
        rows.push(row);
    }
    Ok((header, rows))
}

fn write_outputs(rep: &ExperimentReport, out: &Path) -> io::Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let path = out.join("report.json");
    let text = serde_json::to_string_pretty(rep).map_err(io::Error::other)?;
    std::fs::write(&path, text + "\n")?;
    for (stem, traj) in &rep.trajectories {
        write_trajectory_csv(traj, &out.join(format!("{stem}.csv")))?;
    }
    for (j, child) in rep.children.iter().enumerate() {
        for (stem, traj) in &child.trajectories {
            write_trajectory_csv(traj, &out.join(format!("scenario{j}_{stem}.csv")))?;
        }
    }
    Ok(path)
}

fn config_text(common: &Common) -> Result<String, Error> {
    match &common.config {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| Error::invalid("config", format!("cannot read {}: {e}", p.display()))),
        None if common.overrides.is_empty() => Err(Error::invalid("config", "give --config or --set overrides")),
        None => Ok("{}".into()),
    }
}

fn execute(experiment: Option<Experiment>, common: &Common) -> Result<ExperimentReport, Error> {
    let text = config_text(common)?;
    let mut overrides = common.overrides.clone();
    if common.strict {
        overrides.push("knobs.strict=true".into());
    }
    let mut rep = match experiment {
        None => {
            let sweep = load_sweep_str(&text, &overrides)?;
            run_sweep(&sweep, threads_from_env()?)?
        }
        Some(exp) => {
            let cfg = load_config_str(&text, &overrides)?;
            let exp = match (exp, cfg.experiment) {
                (Experiment::TikhonovSweep, Some(Experiment::IdenticalComparison)) => Experiment::IdenticalComparison,
                _ => exp,
            };
            run(exp, &cfg)?
        }
    };
    rep.overrides = overrides;
    Ok(rep)
}

/// Parses `argv` (program name first), runs the subcommand and returns the exit code.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return EXIT_PASS;
            }
            let msg = e.to_string();
            diagnostic("usage", "-", msg.lines().next().unwrap_or("bad arguments"));
            return EXIT_USAGE;
        }
    };
    let (experiment, common) = match &cli.command {
        Command::Simulate(c) => (Some(Experiment::Simulate), c.clone()),
        Command::Compare(c) => (Some(Experiment::TikhonovSweep), c.clone()),
        Command::Reconstruct(c) => (Some(Experiment::Reconstruction), c.clone()),
        Command::Certify(c) => (Some(Experiment::SyncCertification), c.clone()),
        Command::Cluster(c) => (Some(Experiment::Cluster), c.clone()),
        Command::Probe(c) => (Some(Experiment::ConjectureProbe), c.clone()),
        Command::Sweep(c) => (None, c.clone()),
        Command::Determinability { common, m, kappa } => {
            if common.config.is_none() && common.overrides.is_empty() {
                let (Some(m), Some(kappa)) = (m, kappa) else {
                    diagnostic("usage", "-", "determinability needs --m and --kappa, or --config");
                    return EXIT_USAGE;
                };
                return match determinability_threshold(*kappa, *m) {
                    Ok(t) => {
                        println!("threshold {}", format_sig9(t));
                        EXIT_PASS
                    }
                    Err(e) => fail(&e),
                };
            }
            let mut c = common.clone();
            c.overrides.extend(m.map(|v| format!("inertia_m={v}")));
            c.overrides.extend(kappa.map(|v| format!("coupling_kappa={v}")));
            (Some(Experiment::Determinability), c)
        }
    };
    let rep = match execute(experiment, &common) {
        Ok(r) => r,
        Err(e) => return fail(&e),
    };
    let path = match write_outputs(&rep, &common.out) {
        Ok(p) => p,
        Err(e) => {
            diagnostic("io", "out", &e.to_string());
            return EXIT_USAGE;
        }
    };
    if common.verbose > 0 {
        for c in &rep.checks {
            println!("{} {} margin={:e}", if c.pass { "pass" } else { "FAIL" }, c.name, c.margin);
        }
    }
    println!(
        "{} verdict={} report={}",
        rep.experiment,
        if rep.verdict { "pass" } else { "fail" },
        path.display()
    );
    if rep.verdict {
        EXIT_PASS
    } else {
        EXIT_FAIL
    }
}
