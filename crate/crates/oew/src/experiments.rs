//! Batched benchmark runs: a bound entangled family scan, a random-state
//! accuracy benchmark against the PPT oracle, the Shifts-UPB complement
//! across bipartite cuts, and the GHZ biseparability witness.
//!
//! Each grid point / random state is an independent task with its own RNG
//! substream derived from `(seed, task index)`, so results are bit-identical
//! regardless of thread count and fully determined by the manifest.

use serde::Serialize;

use crate::linalg::DimsSpec;
use crate::partition::{
    full_separability_structure, m_separability_structure, parse_structure,
};
use crate::sdp::SolveOptions;
use crate::states::{
    ghz_state, horodecki_state, random_density_matrix, shifts_upb_state, DensityMatrix,
    RngStream, StreamLabel,
};
use crate::validation::{classify, empirical_violation, ppt_check, ValidationReport, Verdict};
use crate::witness::{find_witness, FindOptions, WitnessResult};
use crate::Result;

/// Runs `n` tasks, possibly across threads, and returns results in task
/// order. Thread count never affects values, only wall time.
pub fn parallel_tasks<T, F>(n: usize, threads: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let threads = threads.max(1).min(n.max(1));
    if threads == 1 {
        return (0..n).map(f).collect();
    }
    let mut collected: Vec<(usize, Result<T>)> = Vec::with_capacity(n);
    std::thread::scope(|scope| {
        let f = &f;
        let handles: Vec<_> = (0..threads)
            .map(|t| {
                scope.spawn(move || {
                    (t..n).step_by(threads).map(|i| (i, f(i))).collect::<Vec<_>>()
                })
            })
            .collect();
        for handle in handles {
            collected.extend(handle.join().expect("worker thread panicked"));
        }
    });
    collected.sort_by_key(|&(i, _)| i);
    collected.into_iter().map(|(_, r)| r).collect()
}

/// Common knobs shared by all experiment runners.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub seed: u64,
    pub threads: usize,
    pub solver: SolveOptions,
}

impl RunConfig {
    pub fn new(seed: u64) -> Self {
        Self { seed, threads: 1, solver: SolveOptions::default() }
    }
}

/// One grid point of the bound-entangled family scan.
#[derive(Clone, Debug, Serialize)]
pub struct HorodeckiRow {
    pub a: f64,
    pub objective: f64,
    pub v_emp: f64,
    pub lambda_min: f64,
}

/// Scans the 3x3 bound entangled family over `grid`, finding a witness with
/// `n_samples` constraints per point and validating it with fresh draws.
pub fn run_horodecki(
    grid: &[f64],
    n_samples: usize,
    validation_trials: u64,
    config: &RunConfig,
) -> Result<Vec<HorodeckiRow>> {
    parallel_tasks(grid.len(), config.threads, |i| {
        let a = grid[i];
        let rho = horodecki_state(a)?;
        let structure = full_separability_structure(rho.dims())?;
        let opts = FindOptions {
            n_samples,
            seed: config.seed,
            task: i as u32,
            solver: config.solver.clone(),
        };
        let result = find_witness(&rho, &structure, &opts)?;
        let mut rng = RngStream::task(config.seed, StreamLabel::Validation, i as u32);
        let report =
            empirical_violation(&result.witness, rho.dims(), &structure, validation_trials, &mut rng)?;
        Ok(HorodeckiRow {
            a,
            objective: result.objective,
            v_emp: report.violation_rate,
            lambda_min: report.worst_eigenvalue,
        })
    })
}

/// One (dims, N) bucket of the random-state benchmark.
#[derive(Clone, Debug, Serialize)]
pub struct RandomPptRow {
    pub dims: Vec<usize>,
    pub n_samples: usize,
    pub trials: usize,
    pub errors: usize,
    pub error_rate: f64,
}

/// Classifies `count` Hilbert-Schmidt random states per dimension spec at
/// each sample count in `n_grid`, scoring against the PPT criterion (exact
/// ground truth for 2x2 and 2x3). The same `count` states are reused across
/// the N grid so error rates are comparable along it.
pub fn run_random_ppt(
    dims_list: &[DimsSpec],
    count: usize,
    n_grid: &[usize],
    config: &RunConfig,
) -> Result<Vec<RandomPptRow>> {
    let mut rows = Vec::with_capacity(dims_list.len() * n_grid.len());
    for (d_idx, dims) in dims_list.iter().enumerate() {
        let states: Vec<DensityMatrix> = (0..count)
            .map(|t| {
                let mut rng =
                    RngStream::task(config.seed, StreamLabel::StateGen, (d_idx * count + t) as u32);
                random_density_matrix(dims, &mut rng)
            })
            .collect();
        let is_ppt: Vec<bool> = states
            .iter()
            .map(|rho| ppt_check(rho, 1e-10).map(|r| r.is_ppt))
            .collect::<Result<_>>()?;
        let structure = full_separability_structure(dims)?;
        for (n_idx, &n) in n_grid.iter().enumerate() {
            let mistakes = parallel_tasks(count, config.threads, |t| {
                let task = ((d_idx * n_grid.len() + n_idx) * count + t) as u32;
                let opts = FindOptions {
                    n_samples: n,
                    seed: config.seed,
                    task,
                    solver: config.solver.clone(),
                };
                let c = classify(&states[t], &structure, &opts)?;
                let detected = c.verdict == Verdict::Entangled;
                // PPT is exact here: entangled iff NPT
                Ok(detected == is_ppt[t])
            })?;
            let errors = mistakes.iter().filter(|&&e| e).count();
            rows.push(RandomPptRow {
                dims: dims.dims().to_vec(),
                n_samples: n,
                trials: count,
                errors,
                error_rate: errors as f64 / count.max(1) as f64,
            });
        }
    }
    Ok(rows)
}

/// One partition row of a multi-cut table.
#[derive(Clone, Debug, Serialize)]
pub struct PartitionRow {
    pub partition: String,
    pub objective: f64,
    pub v_emp: f64,
    pub lambda_min: f64,
}

/// The four cuts of the Shifts-UPB table, each computed independently.
pub const SHIFTS_CUTS: [(&str, &str); 4] =
    [("A-BC", "1|2,3"), ("B-AC", "2|1,3"), ("C-AB", "3|1,2"), ("A-B-C", "full")];

/// Runs the Shifts-UPB complement state against its three bipartite cuts and
/// the fully-separable structure; only the last can detect its entanglement.
pub fn run_shifts_upb(
    n_samples: usize,
    validation_trials: u64,
    config: &RunConfig,
) -> Result<Vec<PartitionRow>> {
    let rho = shifts_upb_state();
    let dims = rho.dims().clone();
    parallel_tasks(SHIFTS_CUTS.len(), config.threads, |i| {
        let (label, grammar) = SHIFTS_CUTS[i];
        let structure = parse_structure(&dims, grammar)?;
        let opts = FindOptions {
            n_samples,
            seed: config.seed,
            task: i as u32,
            solver: config.solver.clone(),
        };
        let result = find_witness(&rho, &structure, &opts)?;
        let mut rng = RngStream::task(config.seed, StreamLabel::Validation, i as u32);
        let report =
            empirical_violation(&result.witness, &dims, &structure, validation_trials, &mut rng)?;
        Ok(PartitionRow {
            partition: label.to_string(),
            objective: result.objective,
            v_emp: report.violation_rate,
            lambda_min: report.worst_eigenvalue,
        })
    })
}

/// Result of the GHZ biseparability run: the found witness plus its
/// fresh-sample certification.
#[derive(Debug)]
pub struct GhzOutcome {
    pub witness: WitnessResult,
    pub validation: ValidationReport,
}

impl GhzOutcome {
    pub fn row(&self) -> PartitionRow {
        PartitionRow {
            partition: self.witness.structure.grammar(),
            objective: self.witness.objective,
            v_emp: self.validation.violation_rate,
            lambda_min: self.validation.worst_eigenvalue,
        }
    }
}

/// Searches for a witness separating the GHZ state from all biseparable
/// (2-separable) states.
pub fn run_ghz(
    n_samples: usize,
    validation_trials: u64,
    config: &RunConfig,
) -> Result<GhzOutcome> {
    let rho = ghz_state();
    let structure = m_separability_structure(rho.dims(), 2)?;
    let opts = FindOptions {
        n_samples,
        seed: config.seed,
        task: 0,
        solver: config.solver.clone(),
    };
    let witness = find_witness(&rho, &structure, &opts)?;
    let mut rng = RngStream::new(config.seed, StreamLabel::Validation);
    let validation =
        empirical_violation(&witness.witness, rho.dims(), &structure, validation_trials, &mut rng)?;
    Ok(GhzOutcome { witness, validation })
}

/// Reproducibility record written next to every experiment CSV: re-running
/// with these fields regenerates the CSV byte-for-byte.
#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub seed: u64,
    pub samples: Vec<usize>,
    pub validation_trials: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    pub tol_feas: f64,
    pub tol_gap: f64,
    pub threads: usize,
    pub wall_time_s: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_count_does_not_change_results() {
        let grid = [0.3, 0.6];
        let serial = run_horodecki(&grid, 60, 400, &RunConfig::new(2)).unwrap();
        let mut threaded_cfg = RunConfig::new(2);
        threaded_cfg.threads = 3;
        let threaded = run_horodecki(&grid, 60, 400, &threaded_cfg).unwrap();
        for (a, b) in serial.iter().zip(&threaded) {
            assert_eq!(a.objective.to_bits(), b.objective.to_bits());
            assert_eq!(a.v_emp.to_bits(), b.v_emp.to_bits());
            assert_eq!(a.lambda_min.to_bits(), b.lambda_min.to_bits());
        }
    }

    #[test]
    fn parallel_tasks_preserves_order_and_errors() {
        let out = parallel_tasks(7, 3, |i| Ok(i * i)).unwrap();
        assert_eq!(out, vec![0, 1, 4, 9, 16, 25, 36]);
        let err = parallel_tasks(4, 2, |i| {
            if i == 2 {
                Err(crate::Error::Domain("boom".into()))
            } else {
                Ok(i)
            }
        });
        assert!(err.is_err());
    }

    #[test]
    fn random_ppt_shapes_and_rates() {
        let dims = vec![DimsSpec::new(vec![2, 2]).unwrap()];
        let rows = run_random_ppt(&dims, 4, &[40, 80], &RunConfig::new(9)).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.trials, 4);
            assert!(row.errors <= 4);
            assert!((row.error_rate - row.errors as f64 / 4.0).abs() < 1e-15);
        }
    }

    #[test]
    fn shifts_rows_are_labeled() {
        let rows = run_shifts_upb(300, 100, &RunConfig::new(5)).unwrap();
        let labels: Vec<&str> = rows.iter().map(|r| r.partition.as_str()).collect();
        assert_eq!(labels, vec!["A-BC", "B-AC", "C-AB", "A-B-C"]);
    }

    #[test]
    fn ghz_outcome_is_negative() {
        let outcome = run_ghz(300, 500, &RunConfig::new(3)).unwrap();
        assert!(outcome.witness.objective < 0.0);
        assert_eq!(outcome.row().partition, outcome.witness.structure.grammar());
    }
}
