//! Command-line front end: parse inputs, run one subcommand against the
//! library, emit a machine JSON report on stdout (or `--out`) and, with
//! `--table`, human tables on stderr.
//!
//! Exit codes: 0 success, 1 domain failures (a partition that does not
//! lump, a guard refusal, a matrix the spectral route cannot handle),
//! 2 I/O and input-format failures.

mod report;
mod tables;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lumpchain::discovery::DiscoveryConfig;
use lumpchain::io::{blocks_string, parse_matrix, parse_partition};
use lumpchain::{discovery, empirics, oracle, Error, Partition, StochasticMatrix};
use sha2::{Digest, Sha256};

use report::{
    CheckResults, ErrorReport, OracleResults, QuotientTestReport, ReduceResults, ReportConfig,
    RunReport, SimulateResults,
};

#[derive(Parser)]
#[command(
    name = "lumpchain",
    version,
    about = "Check, reduce and discover strong lumpings of finite Markov chains",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Transition matrix file: text rows or a JSON array of arrays.
    #[arg(short = 'm', long = "matrix", value_name = "FILE")]
    matrix: PathBuf,
    /// Entry-range and row-sum tolerance when validating the matrix.
    #[arg(long, default_value_t = 1e-9)]
    tol_validate: f64,
    /// Largest aggregated-row spread a lumping may show.
    #[arg(long, default_value_t = 1e-9)]
    tol_lump: f64,
    /// Residual bound for the eigendecomposition.
    #[arg(long, default_value_t = 1e-10)]
    tol_eig: f64,
    /// Distance under which eigenvalues share one eigenspace group.
    #[arg(long, default_value_t = 1e-8)]
    tol_group: f64,
    /// Distance under which eigenvector elements count as identical.
    #[arg(long, default_value_t = 1e-7)]
    tol_element: f64,
    /// Identity blend weight applied when the spectrum is rank-deficient.
    #[arg(long, default_value_t = 0.5)]
    zeta: f64,
    /// Refuse exhaustive scans beyond this many partitions.
    #[arg(long, default_value_t = 1_000_000)]
    guard: u64,
    /// Cap on the candidate partition lattice.
    #[arg(long, default_value_t = 100_000)]
    max_candidates: usize,
    /// Cap on merge patterns probed per degenerate eigenspace.
    #[arg(long, default_value_t = 10_000)]
    max_rotation_patterns: usize,
    /// Emit the JSON report on stdout (the default).
    #[arg(long)]
    json: bool,
    /// Also render human tables on stderr.
    #[arg(long)]
    table: bool,
    /// Write the JSON report to this file instead of stdout.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Test whether a partition lumps the chain.
    Check {
        #[command(flatten)]
        common: Common,
        /// Partition: blocks `{1,2}{3}`, labels `0 0 1`, JSON, or a file.
        #[arg(short = 'p', long = "partition", value_name = "PART")]
        partition: String,
    },
    /// Reduce the chain over a valid lumping.
    Reduce {
        #[command(flatten)]
        common: Common,
        #[arg(short = 'p', long = "partition", value_name = "PART")]
        partition: String,
    },
    /// Discover all lumpings from the eigenvector structure.
    Discover {
        #[command(flatten)]
        common: Common,
    },
    /// Enumerate all lumpings by exhaustive partition scan.
    Oracle {
        #[command(flatten)]
        common: Common,
    },
    /// Sample a trajectory; optionally test a partition's quotient.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Starting state, 1-based.
        #[arg(long, default_value_t = 1)]
        x0: usize,
        /// Trajectory length.
        #[arg(short = 'T', long, default_value_t = 10_000)]
        steps: usize,
        /// Seed for the ChaCha8 generator.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Partition whose quotient sequence is tested for memory.
        #[arg(short = 'p', long = "partition", value_name = "PART")]
        partition: Option<String>,
        /// Write the sampled states, one 1-based index per line.
        #[arg(long, value_name = "FILE")]
        traj_out: Option<PathBuf>,
    },
}

struct Failure {
    code: u8,
    kind: String,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        let (code, kind) = match &e {
            Error::Parse { .. }
            | Error::NotSquare { .. }
            | Error::NegativeEntry { .. }
            | Error::EntryAboveOne { .. }
            | Error::RowSumViolation { .. }
            | Error::DimensionMismatch { .. }
            | Error::NegativeProbability { .. }
            | Error::DistributionSumViolation { .. }
            | Error::StateOutOfRange { .. } => (2u8, "invalid_input"),
            Error::NotLumpable { .. } => (1, "not_lumpable"),
            Error::GuardExceeded { .. } => (1, "guard_exceeded"),
            Error::NotDiagonalizable { .. } => (1, "not_diagonalizable"),
            Error::EigenFailure => (1, "eigen_failure"),
            Error::ZetaOutOfRange { .. } => (1, "zeta_out_of_range"),
            Error::CandidateOverflow { .. } => (1, "candidate_overflow"),
            Error::BellOverflow { .. } => (1, "bell_overflow"),
            Error::InsufficientData { .. } => (1, "insufficient_data"),
        };
        Failure {
            code,
            kind: kind.to_string(),
            message: e.to_string(),
        }
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure {
        code: 2,
        kind: "io".to_string(),
        message: format!("{}: {e}", path.display()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (common, command_name) = match &cli.command {
        Command::Check { common, .. } => (common.clone(), "check"),
        Command::Reduce { common, .. } => (common.clone(), "reduce"),
        Command::Discover { common } => (common.clone(), "discover"),
        Command::Oracle { common } => (common.clone(), "oracle"),
        Command::Simulate { common, .. } => (common.clone(), "simulate"),
    };
    match run(&cli.command, &common, command_name) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let error = serde_json::json!({
                "command": command_name,
                "error": ErrorReport { kind: f.kind, message: f.message.clone() },
            });
            println!("{}", serde_json::to_string_pretty(&error).expect("serializable"));
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn worker_threads() -> usize {
    match std::env::var("LUMPCHAIN_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(0) | Err(_) => 1,
            Ok(k) => k,
        },
        // sequential by default: inputs small enough for the oracle are
        // cheap, and the config echo stays machine-independent
        Err(_) => 1,
    }
}

fn load_matrix(common: &Common) -> Result<(StochasticMatrix<f64>, String), Failure> {
    let bytes = fs::read(&common.matrix).map_err(|e| io_failure(&common.matrix, e))?;
    let digest = format!("sha256:{:x}", Sha256::digest(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| Failure {
        code: 2,
        kind: "invalid_input".to_string(),
        message: format!("{}: not valid UTF-8", common.matrix.display()),
    })?;
    let p = parse_matrix(&text, common.tol_validate)?;
    Ok((p, digest))
}

fn load_partition(spec: &str, n: usize) -> Result<Partition, Failure> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| io_failure(path, e))?;
        Ok(parse_partition(&text, n)?)
    } else {
        Ok(parse_partition(spec, n)?)
    }
}

fn discovery_config(common: &Common) -> DiscoveryConfig<f64> {
    DiscoveryConfig {
        element_tol: common.tol_element,
        group_tol: common.tol_group,
        spectral_tol: common.tol_eig,
        zeta: common.zeta,
        max_rotation_patterns: common.max_rotation_patterns,
        max_candidates: common.max_candidates,
        ..DiscoveryConfig::default()
    }
}

fn report_config(common: &Common, threads: usize) -> ReportConfig {
    ReportConfig {
        tol_validate: common.tol_validate,
        tol_lump: common.tol_lump,
        tol_eig: common.tol_eig,
        tol_group: common.tol_group,
        tol_element: common.tol_element,
        zeta: common.zeta,
        guard: common.guard,
        max_candidates: common.max_candidates,
        max_rotation_patterns: common.max_rotation_patterns,
        threads,
    }
}

fn emit(common: &Common, report: &RunReport) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    match &common.out {
        Some(path) => fs::write(path, json + "\n").map_err(|e| io_failure(path, e))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn run(command: &Command, common: &Common, name: &str) -> Result<(), Failure> {
    // the blend weight is validated up front so a bad flag fails even on
    // inputs whose spectrum never triggers the blend
    if !(0.0..1.0).contains(&common.zeta) {
        return Err(Error::ZetaOutOfRange { zeta: common.zeta }.into());
    }
    let threads = worker_threads();
    let (p, input_digest) = load_matrix(common)?;
    let mut warnings: Vec<String> = Vec::new();

    let results: serde_json::Value = match command {
        Command::Check { partition, .. } => {
            let q = load_partition(partition, p.n())?;
            let max_deviation = p.lump_deviation(&q)?;
            let r = CheckResults {
                partition: blocks_string(&q),
                blocks: q.lumps().iter().map(|l| l.iter().map(|i| i + 1).collect()).collect(),
                lumps: q.num_lumps(),
                lumpable: max_deviation <= common.tol_lump,
                max_deviation,
            };
            if common.table {
                tables::check(&r);
            }
            serde_json::to_value(&r).expect("serializable")
        }
        Command::Reduce { partition, .. } => {
            let q = load_partition(partition, p.n())?;
            let red = p.reduce(&q, common.tol_lump)?;
            let m = red.matrix.n();
            let a = red.matrix.as_array();
            let r = ReduceResults {
                partition: blocks_string(&q),
                blocks: q.lumps().iter().map(|l| l.iter().map(|i| i + 1).collect()).collect(),
                lumps: m,
                max_deviation: red.deviation,
                commutation_residual: red.commutation_residual(&p),
                matrix: (0..m).map(|i| (0..m).map(|j| a[(i, j)]).collect()).collect(),
            };
            if common.table {
                tables::reduce(&r);
            }
            serde_json::to_value(&r).expect("serializable")
        }
        Command::Discover { .. } => {
            let cfg = discovery_config(common);
            let r = match discovery::discover(&p, &cfg, common.tol_lump) {
                Ok(d) => {
                    if let Some(zeta) = d.perturbation {
                        warnings.push(format!("identity blend applied (zeta = {zeta})"));
                    }
                    if d.degenerate_spectrum {
                        warnings.push(
                            "degenerate spectrum: discovery may be incomplete beyond the probed patterns"
                                .to_string(),
                        );
                    }
                    if d.truncated {
                        warnings.push(
                            "candidate generation hit a cap; results may be incomplete".to_string(),
                        );
                    }
                    report::discover_results(&d)
                }
                // a defective matrix defeats the spectral route; small
                // state spaces fall back to the exhaustive scan
                Err(Error::NotDiagonalizable { condition }) => {
                    let bell = oracle::bell_number(p.n())?;
                    if bell > common.guard as u128 {
                        return Err(Error::NotDiagonalizable { condition }.into());
                    }
                    let found =
                        oracle::brute_force_lumpings(&p, common.tol_lump, common.guard as u128, threads)?;
                    warnings.push(format!(
                        "eigenvector matrix numerically singular (condition estimate {condition:.3e}); lumpings enumerated exhaustively"
                    ));
                    let lumpings = found
                        .iter()
                        .map(|q| {
                            let dev = p.lump_deviation(q).expect("dimensions match");
                            report::plain_lumping_report(q, dev)
                        })
                        .collect::<Vec<_>>();
                    report::DiscoverResults {
                        diagonalizable: false,
                        eigenvalues: None,
                        perturbation: None,
                        degenerate_spectrum: true,
                        truncated: false,
                        candidates_examined: bell as usize,
                        count: lumpings.len(),
                        lumpings,
                    }
                }
                Err(e) => return Err(e.into()),
            };
            if common.table {
                tables::discover(&r);
            }
            serde_json::to_value(&r).expect("serializable")
        }
        Command::Oracle { .. } => {
            let bell = oracle::bell_number(p.n())?;
            let found =
                oracle::brute_force_lumpings(&p, common.tol_lump, common.guard as u128, threads)?;
            let lumpings = found
                .iter()
                .map(|q| {
                    let dev = p.lump_deviation(q).expect("dimensions match");
                    report::plain_lumping_report(q, dev)
                })
                .collect::<Vec<_>>();
            let r = OracleResults {
                bell: bell as u64,
                count: lumpings.len(),
                lumpings,
            };
            if common.table {
                tables::oracle(&r);
            }
            serde_json::to_value(&r).expect("serializable")
        }
        Command::Simulate {
            x0,
            steps,
            seed,
            partition,
            traj_out,
            ..
        } => {
            if *x0 == 0 {
                return Err(Error::StateOutOfRange { state: 0, n: p.n() }.into());
            }
            let traj = empirics::simulate(&p, x0 - 1, *steps, *seed)?;
            let mut visits = vec![0u64; p.n()];
            for &x in &traj.states {
                visits[x] += 1;
            }
            let trajectory_file = match traj_out {
                Some(path) => {
                    let mut body = String::with_capacity(traj.states.len() * 3);
                    for &x in &traj.states {
                        body.push_str(&(x + 1).to_string());
                        body.push('\n');
                    }
                    fs::write(path, body).map_err(|e| io_failure(path, e))?;
                    Some(path.display().to_string())
                }
                None => None,
            };
            let quotient_test = match partition {
                Some(spec) => {
                    let q = load_partition(spec, p.n())?;
                    let t = empirics::markov_quotient_statistic(&traj, &q)?;
                    warnings.push(
                        "quotient test is diagnostic; the membership-matrix check is the arbiter"
                            .to_string(),
                    );
                    Some(QuotientTestReport {
                        partition: blocks_string(&q),
                        statistic: t.statistic,
                        dof: t.dof,
                        p_value: t.p_value,
                        diagnostic: true,
                    })
                }
                None => None,
            };
            let r = SimulateResults {
                x0: *x0,
                steps: *steps,
                seed: *seed,
                rng: "chacha8".to_string(),
                visits,
                trajectory_file,
                quotient_test,
            };
            if common.table {
                tables::simulate(&r);
            }
            serde_json::to_value(&r).expect("serializable")
        }
    };

    let report = RunReport {
        command: name.to_string(),
        input_digest,
        config: report_config(common, threads),
        results,
        warnings,
    };
    emit(common, &report)
}
