//! Command-line front end: witness search, a-posteriori validation, batch
//! experiments, and state inspection.
//!
//! Exit codes: 0 success, 2 argument/input parse errors, 3 solver failure.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use oew::experiments::{self, Manifest, RunConfig};
use oew::io::{self, fmt_full, CsvWriter};
use oew::linalg::{self, DimsSpec};
use oew::partition::parse_structure;
use oew::sdp::SolveOptions;
use oew::states::{
    ghz_state, horodecki_state, random_density_matrix, shifts_upb_state, DensityMatrix,
    RngStream, StreamLabel,
};
use oew::validation::{chernoff_sample_count, empirical_violation, ppt_check};
use oew::witness::{find_witness, theoretical_sample_count, FindOptions};
use oew::{Error, Result};

#[derive(Parser)]
#[command(name = "oew", version, about = "Optimal entanglement witnesses via sampled SDP relaxation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Base RNG seed; all randomness derives from it deterministically
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Solver feasibility tolerance
    #[arg(long, global = true)]
    tol_feas: Option<f64>,
    /// Solver duality-gap tolerance
    #[arg(long, global = true)]
    tol_gap: Option<f64>,
    /// Worker threads for independent tasks (values never depend on this)
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    /// Output file (witness/report JSON or experiment CSV)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Emit errors as JSON on stderr
    #[arg(long, global = true)]
    json_errors: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a witness for a state under a separability structure
    Find {
        /// State: horodecki:A | ghz | shifts-upb | random:SEED | file:PATH
        #[arg(long)]
        state: String,
        /// Party dimensions, e.g. 3,3 (checked against the state)
        #[arg(long)]
        dims: Option<String>,
        /// Structure: full | m-sep:M | blocks like "1|2,3" (optional "!K" frees block K)
        #[arg(long, default_value = "full")]
        structure: String,
        /// Product-vector constraints per partition
        #[arg(long)]
        samples: usize,
    },
    /// Estimate a witness file's constraint-violation rate on fresh samples
    Validate {
        /// Witness JSON produced by `find`
        #[arg(long)]
        witness: PathBuf,
        /// Fresh trials (default: Chernoff count for eps=beta=0.01)
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Batch benchmark runs emitting CSV + reproducibility manifest
    Experiment {
        #[command(subcommand)]
        which: ExperimentCmd,
    },
    /// State inspection
    State {
        #[command(subcommand)]
        which: StateCmd,
    },
}

#[derive(Subcommand)]
enum ExperimentCmd {
    /// Scan the 3x3 bound entangled family
    Horodecki {
        /// Grid as START:END:STEP (inclusive)
        #[arg(long, default_value = "0.0:1.0:0.1")]
        grid: String,
        #[arg(long, default_value_t = 1200)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        validation_trials: u64,
    },
    /// Classify random states against the PPT oracle over a sample-count grid
    RandomPpt {
        /// Dimension specs separated by ';', e.g. "2,2;2,3"
        #[arg(long, default_value = "2,2;2,3")]
        dims: String,
        /// Random states per dimension spec
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Comma-separated sample counts
        #[arg(long, default_value = "100,200,300,500,700")]
        samples: String,
    },
    /// The Shifts-UPB complement state across its bipartite and tripartite cuts
    ShiftsUpb {
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 26_492)]
        validation_trials: u64,
    },
    /// GHZ state vs biseparable (2-separable) products
    Ghz {
        #[arg(long, default_value_t = 2000)]
        samples: usize,
        #[arg(long, default_value_t = 100_000)]
        validation_trials: u64,
    },
}

#[derive(Subcommand)]
enum StateCmd {
    /// Print dims, trace, purity, rank, min eigenvalue, and per-party PPT
    Show {
        /// State name (same grammar as `find --state`)
        #[arg(long)]
        name: String,
        /// Party dimensions for random/file states
        #[arg(long)]
        dims: Option<String>,
        /// Also dump the matrix
        #[arg(long)]
        matrix: bool,
    },
}

/// 6 significant digits for terminal output; files always get full precision.
fn fmt6(x: f64) -> String {
    format!("{x:.5e}")
}

fn parse_dims(text: &str) -> Result<DimsSpec> {
    let dims: Vec<usize> = text
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad dimension {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    DimsSpec::new(dims)
}

fn parse_grid(text: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("grid {text:?} is not START:END:STEP")));
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|p| p.parse::<f64>().map_err(|e| Error::Parse(format!("bad grid number {p:?}: {e}"))))
        .collect::<Result<_>>()?;
    let (start, end, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || end < start {
        return Err(Error::Parse(format!("grid {text:?} must have START <= END and STEP > 0")));
    }
    let n = ((end - start) / step).round() as usize;
    Ok((0..=n).map(|i| (start + i as f64 * step).min(end)).collect())
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| Error::Parse(format!("bad count {t:?}: {e}"))))
        .collect()
}

/// State grammar: `horodecki:A` (or `horodecki(A)`), `ghz`, `shifts-upb`,
/// `random:SEED` (party dims from --dims), and `file:PATH`.
fn parse_state(spec: &str, dims: Option<&DimsSpec>, threads_seed: u64) -> Result<DensityMatrix> {
    let normalized = spec.trim().trim_end_matches(')').replace(['(', ','], ":");
    let mut parts = normalized.splitn(2, ':');
    let head = parts.next().unwrap_or("");
    let rest = parts.next();
    let rho = match head {
        "horodecki" => {
            let a: f64 = rest
                .ok_or_else(|| Error::Parse("horodecki needs a parameter, e.g. horodecki:0.5".into()))?
                .parse()
                .map_err(|e| Error::Parse(format!("bad horodecki parameter: {e}")))?;
            horodecki_state(a)?
        }
        "ghz" => ghz_state(),
        "shifts-upb" => shifts_upb_state(),
        "random" => {
            let dims = dims
                .ok_or_else(|| Error::Parse("random states need --dims".into()))?
                .clone();
            let seed: u64 = match rest {
                Some(s) => s
                    .parse()
                    .map_err(|e| Error::Parse(format!("bad random seed: {e}")))?,
                None => threads_seed,
            };
            let mut rng = RngStream::new(seed, StreamLabel::StateGen);
            random_density_matrix(&dims, &mut rng)
        }
        "file" => {
            let path = rest.ok_or_else(|| Error::Parse("file needs a path, e.g. file:rho.json".into()))?;
            io::read_state(Path::new(path))?
        }
        other => return Err(Error::Parse(format!("unknown state {other:?}"))),
    };
    if let Some(d) = dims {
        if d != rho.dims() {
            return Err(Error::Parse(format!(
                "--dims {d} does not match the state's dimensions {}",
                rho.dims()
            )));
        }
    }
    Ok(rho)
}

fn solver_options(cli: &Cli) -> SolveOptions {
    let mut opts = SolveOptions::default();
    if let Some(t) = cli.tol_feas {
        opts.tol_feas = t;
    }
    if let Some(t) = cli.tol_gap {
        opts.tol_gap = t;
    }
    opts
}

fn run_config(cli: &Cli) -> RunConfig {
    RunConfig { seed: cli.seed, threads: cli.threads.max(1), solver: solver_options(cli) }
}

fn cmd_find(cli: &Cli, state: &str, dims: Option<&str>, structure: &str, samples: usize) -> Result<()> {
    let dims_spec = dims.map(parse_dims).transpose()?;
    let rho = parse_state(state, dims_spec.as_ref(), cli.seed)?;
    let structure = parse_structure(rho.dims(), structure)?;
    let opts = FindOptions {
        n_samples: samples,
        seed: cli.seed,
        task: 0,
        solver: solver_options(cli),
    };
    let result = find_witness(&rho, &structure, &opts)?;
    let d = rho.dim();
    println!("structure      {}", structure.grammar());
    println!("samples N      {} per partition ({} partitions)", samples, structure.partitions.len());
    println!("objective      {}", fmt6(result.objective));
    println!("trace          {}", fmt6(result.trace()));
    println!("worst block    {}", fmt6(result.sampled_min_eig));
    println!("scenario bounds for this dimension (D = {d}):");
    for (eps, beta) in [(0.1, 0.1), (0.05, 0.05), (0.01, 0.01)] {
        let n = theoretical_sample_count(d, eps, beta)?;
        println!("  eps={eps:<5} beta={beta:<5} N>={n}");
    }
    println!("implied eps*beta at N used: {}", fmt6(result.eps_beta_product));
    if let Some(out) = &cli.out {
        io::write_witness(out, &result)?;
        println!("witness written to {}", out.display());
    }
    Ok(())
}

fn cmd_validate(cli: &Cli, witness_path: &Path, trials: Option<u64>) -> Result<()> {
    let file = io::read_witness(witness_path)?;
    let dims = file.dims_spec()?;
    let witness = file.witness_matrix()?;
    let structure = file.structure()?;
    let trials = match trials {
        Some(t) => t,
        None => chernoff_sample_count(0.01, 0.01)?,
    };
    let mut rng = RngStream::new(cli.seed, StreamLabel::Validation);
    let report = empirical_violation(&witness, &dims, &structure, trials, &mut rng)?;
    println!("context        eps=0.01 beta=0.01 N={} trials={trials}", file.n_samples);
    println!("violations     {} / {}", report.n_violations, report.n_trials);
    println!("V_emp          {}", fmt6(report.violation_rate));
    println!("lambda_min     {}", fmt6(report.worst_eigenvalue));
    if let Some(out) = &cli.out {
        io::write_json(out, &report)?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn manifest_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    csv.with_file_name(name)
}

fn write_manifest(csv: &Path, manifest: &Manifest) -> Result<()> {
    let path = manifest_path(csv);
    io::write_json(&path, manifest)?;
    println!("manifest written to {}", path.display());
    Ok(())
}

fn base_manifest(cli: &Cli, experiment: &str, samples: Vec<usize>, validation_trials: u64) -> Manifest {
    let solver = solver_options(cli);
    Manifest {
        experiment: experiment.to_string(),
        seed: cli.seed,
        samples,
        validation_trials,
        grid: None,
        dims: None,
        count: None,
        tol_feas: solver.tol_feas,
        tol_gap: solver.tol_gap,
        threads: cli.threads.max(1),
        wall_time_s: 0.0,
    }
}

fn cmd_experiment(cli: &Cli, which: &ExperimentCmd) -> Result<()> {
    let config = run_config(cli);
    let start = Instant::now();
    match which {
        ExperimentCmd::Horodecki { grid, samples, validation_trials } => {
            let grid = parse_grid(grid)?;
            let csv_path = cli.out.clone().unwrap_or_else(|| PathBuf::from("horodecki.csv"));
            let rows = experiments::run_horodecki(&grid, *samples, *validation_trials, &config)?;
            let mut csv = CsvWriter::create(&csv_path, &["a", "objective", "V_emp", "lambda_min"])?;
            for row in &rows {
                csv.row(&[
                    fmt_full(row.a),
                    fmt_full(row.objective),
                    fmt_full(row.v_emp),
                    fmt_full(row.lambda_min),
                ])?;
                println!(
                    "a={:<4} objective={} V_emp={} lambda_min={}",
                    row.a,
                    fmt6(row.objective),
                    fmt6(row.v_emp),
                    fmt6(row.lambda_min)
                );
            }
            let mut manifest = base_manifest(cli, "horodecki", vec![*samples], *validation_trials);
            manifest.grid = Some(grid);
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            write_manifest(&csv_path, &manifest)?;
        }
        ExperimentCmd::RandomPpt { dims, count, samples } => {
            let dims_list: Vec<DimsSpec> =
                dims.split(';').map(parse_dims).collect::<Result<_>>()?;
            let n_grid = parse_usize_list(samples)?;
            let csv_path = cli.out.clone().unwrap_or_else(|| PathBuf::from("random_ppt.csv"));
            let rows = experiments::run_random_ppt(&dims_list, *count, &n_grid, &config)?;
            let mut csv =
                CsvWriter::create(&csv_path, &["dims", "N", "trials", "errors", "error_rate"])?;
            for row in &rows {
                let dims_text = row
                    .dims
                    .iter()
                    .map(|d| d.to_string())
                    .collect::<Vec<_>>()
                    .join("x");
                csv.row(&[
                    dims_text.clone(),
                    row.n_samples.to_string(),
                    row.trials.to_string(),
                    row.errors.to_string(),
                    fmt_full(row.error_rate),
                ])?;
                println!(
                    "dims={dims_text} N={:<5} errors={}/{} rate={}",
                    row.n_samples,
                    row.errors,
                    row.trials,
                    fmt6(row.error_rate)
                );
            }
            let mut manifest = base_manifest(cli, "random-ppt", n_grid, 0);
            manifest.dims = Some(dims_list.iter().map(|d| d.dims().to_vec()).collect());
            manifest.count = Some(*count);
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            write_manifest(&csv_path, &manifest)?;
        }
        ExperimentCmd::ShiftsUpb { samples, validation_trials } => {
            let csv_path = cli.out.clone().unwrap_or_else(|| PathBuf::from("shifts_upb.csv"));
            let rows = experiments::run_shifts_upb(*samples, *validation_trials, &config)?;
            let mut csv =
                CsvWriter::create(&csv_path, &["partition", "objective", "V_emp", "lambda_min"])?;
            for row in &rows {
                csv.row(&[
                    row.partition.clone(),
                    fmt_full(row.objective),
                    fmt_full(row.v_emp),
                    fmt_full(row.lambda_min),
                ])?;
                println!(
                    "{:<6} objective={} V_emp={} lambda_min={}",
                    row.partition,
                    fmt6(row.objective),
                    fmt6(row.v_emp),
                    fmt6(row.lambda_min)
                );
            }
            let mut manifest = base_manifest(cli, "shifts-upb", vec![*samples], *validation_trials);
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            write_manifest(&csv_path, &manifest)?;
        }
        ExperimentCmd::Ghz { samples, validation_trials } => {
            let csv_path = cli.out.clone().unwrap_or_else(|| PathBuf::from("ghz.csv"));
            let witness_path = csv_path.with_extension("witness.json");
            let outcome = experiments::run_ghz(*samples, *validation_trials, &config)?;
            io::write_witness(&witness_path, &outcome.witness)?;
            let row = outcome.row();
            let mut csv = CsvWriter::create(
                &csv_path,
                &["objective", "V_emp", "lambda_min", "witness_file"],
            )?;
            csv.row(&[
                fmt_full(row.objective),
                fmt_full(row.v_emp),
                fmt_full(row.lambda_min),
                witness_path.display().to_string(),
            ])?;
            println!(
                "objective={} V_emp={} lambda_min={}",
                fmt6(row.objective),
                fmt6(row.v_emp),
                fmt6(row.lambda_min)
            );
            println!("witness written to {}", witness_path.display());
            let mut manifest = base_manifest(cli, "ghz", vec![*samples], *validation_trials);
            manifest.wall_time_s = start.elapsed().as_secs_f64();
            write_manifest(&csv_path, &manifest)?;
        }
    }
    Ok(())
}

fn cmd_state_show(cli: &Cli, name: &str, dims: Option<&str>, dump_matrix: bool) -> Result<()> {
    let dims_spec = dims.map(parse_dims).transpose()?;
    let rho = parse_state(name, dims_spec.as_ref(), cli.seed)?;
    let (eigs, _) = linalg::eig_hermitian(rho.matrix())?;
    println!("dims           {}", rho.dims());
    println!("trace          {}", fmt6(rho.matrix().trace().re));
    println!("purity         {}", fmt6(rho.purity()));
    println!("rank           {}", rho.rank(1e-9)?);
    println!("min eigenvalue {}", fmt6(eigs[0]));
    let d = rho.dims().dims();
    // PPT is a full separability test only in these two dimensions
    let authoritative = d == [2, 2] || d == [2, 3] || d == [3, 2];
    let report = ppt_check(&rho, 1e-10)?;
    for (party, min_eig) in report.min_eigs.iter().enumerate() {
        let verdict = if *min_eig >= -1e-10 { "PPT" } else { "NPT" };
        let scope = if authoritative { "" } else { " (necessary-only)" };
        println!("party {}        {verdict}{scope}, min eig {}", party + 1, fmt6(*min_eig));
    }
    if dump_matrix {
        println!("{:?}", rho.matrix());
    }
    if let Some(out) = &cli.out {
        io::write_state(out, &rho)?;
        println!("state written to {}", out.display());
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Find { state, dims, structure, samples } => {
            cmd_find(cli, state, dims.as_deref(), structure, *samples)
        }
        Command::Validate { witness, trials } => cmd_validate(cli, witness, *trials),
        Command::Experiment { which } => cmd_experiment(cli, which),
        Command::State { which } => match which {
            StateCmd::Show { name, dims, matrix } => {
                cmd_state_show(cli, name, dims.as_deref(), *matrix)
            }
        },
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Solver(_) => 3,
        Error::Io(_) => 1,
        _ => 2,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(&cli) {
        let code = exit_code(&err);
        if cli.json_errors {
            let payload = serde_json::json!({ "error": err.to_string(), "exit_code": code });
            eprintln!("{payload}");
        } else {
            eprintln!("error: {err}");
        }
        std::process::exit(code);
    }
}
