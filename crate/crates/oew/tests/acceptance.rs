//! End-to-end acceptance suite. Each test covers one shipping criterion and
//! prints a single PASS/FAIL line (visible with `--nocapture` or on failure)
//! before asserting, so a red run still reports every criterion's verdict.
//!
//! All tolerances are pinned here on purpose; loosening them to make a
//! criterion green defeats the point of the suite.

use oew::experiments::{run_ghz, run_horodecki, run_random_ppt, run_shifts_upb, RunConfig};
use oew::linalg::{self, ComplexMatrix, DimsSpec, C64};
use oew::partition::m_separability_structure;
use oew::sdp::{self, AffineBlock, SdpProblem, SolveOptions};
use oew::states::{ghz_state, RngStream, StreamLabel};
use oew::validation::{chernoff_sample_count, empirical_violation};
use oew::witness::theoretical_sample_count;

/// Emits the per-criterion verdict line, then fails the test on any miss.
fn report(criterion: &str, checks: &[(String, bool)]) {
    let pass = checks.iter().all(|(_, ok)| *ok);
    println!("criterion {criterion}: {}", if pass { "PASS" } else { "FAIL" });
    for (desc, ok) in checks {
        if !ok {
            println!("  failed: {desc}");
        }
    }
    assert!(pass, "criterion {criterion} failed: see lines above");
}

/// Bound entangled family scan: interior points detected, endpoints clear,
/// and the found witnesses certify as near-feasible on fresh samples.
#[test]
fn criterion_1_bound_entangled_family() {
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let rows = run_horodecki(&grid, 1200, 100_000, &RunConfig::new(1)).unwrap();
    let mut checks = Vec::new();
    for row in &rows {
        let interior = row.a > 0.05 && row.a < 0.95;
        if interior {
            checks.push((
                format!("a={}: objective {:.6e} < -1e-7", row.a, row.objective),
                row.objective < -1e-7,
            ));
            checks.push((
                format!("a={}: V_emp {:.4e} <= 1e-3", row.a, row.v_emp),
                row.v_emp <= 1e-3,
            ));
            checks.push((
                format!("a={}: lambda_min {:.4e} >= -1e-4", row.a, row.lambda_min),
                row.lambda_min >= -1e-4,
            ));
        } else {
            checks.push((
                format!("a={}: objective {:.6e} >= -1e-4 (separable endpoint)", row.a, row.objective),
                row.objective >= -1e-4,
            ));
        }
    }
    report("1 (bound entangled family scan)", &checks);
}

/// Random-state benchmark against the exact PPT ground truth for 2x2 / 2x3.
/// Seed 3 matches the documented CLI invocation of this benchmark.
#[test]
fn criterion_2_random_state_benchmark() {
    let dims = vec![DimsSpec::new(vec![2, 2]).unwrap(), DimsSpec::new(vec![2, 3]).unwrap()];
    let n_grid = [100usize, 200, 300, 500, 700];
    let rows = run_random_ppt(&dims, 200, &n_grid, &RunConfig::new(3)).unwrap();
    let mut checks = Vec::new();
    for chunk in rows.chunks(n_grid.len()) {
        let label = format!("dims {:?}", chunk[0].dims);
        let last = chunk.last().unwrap();
        checks.push((
            format!("{label}: {} errors at N={} (need 0)", last.errors, last.n_samples),
            last.errors == 0,
        ));
        let inversions = chunk
            .windows(2)
            .filter(|w| w[1].errors > w[0].errors)
            .count();
        let rates: Vec<f64> = chunk.iter().map(|r| r.error_rate).collect();
        checks.push((
            format!("{label}: error rate {rates:?} non-increasing up to one inversion"),
            inversions <= 1,
        ));
    }
    report("2 (random-state benchmark vs PPT)", &checks);
}

/// Bound entangled three-qubit state from an unextendible product basis:
/// invisible across every bipartite cut, detected only by the
/// fully-separable structure.
#[test]
fn criterion_3_upb_complement_cuts() {
    let rows = run_shifts_upb(2000, 26_492, &RunConfig::new(1)).unwrap();
    let mut checks = Vec::new();
    for row in &rows {
        if row.partition == "A-B-C" {
            checks.push((
                format!(
                    "{}: objective {:.6e} in [-1e-2, -1e-4]",
                    row.partition, row.objective
                ),
                row.objective >= -1e-2 && row.objective <= -1e-4,
            ));
        } else {
            checks.push((
                format!("{}: objective {:.6e} >= -1e-4", row.partition, row.objective),
                row.objective >= -1e-4,
            ));
        }
    }
    report("3 (UPB complement across cuts)", &checks);
}

/// The closed-form GHZ biseparability witness: one sixth of the sum of the
/// six projectors onto non-extremal computational basis states, minus the
/// off-diagonal GHZ coherence terms.
fn analytic_ghz_witness() -> ComplexMatrix {
    let mut w = ComplexMatrix::zeros(8, 8);
    for k in 1..7 {
        w[(k, k)] = C64::new(1.0 / 6.0, 0.0);
    }
    w[(0, 7)] = C64::new(-1.0 / 6.0, 0.0);
    w[(7, 0)] = C64::new(-1.0 / 6.0, 0.0);
    w
}

/// GHZ vs biseparable states: the sampled optimum lands near the known
/// closed-form value -1/6, and the closed-form witness itself never violates
/// a sampled biseparability constraint.
#[test]
fn criterion_4_ghz_biseparability() {
    let outcome = run_ghz(2000, 100_000, &RunConfig::new(1)).unwrap();
    let obj = outcome.witness.objective;
    let mut checks = vec![
        (format!("sampled objective {obj:.6e} <= -0.15"), obj <= -0.15),
        (
            format!("sampled objective {obj:.6e} within 0.02 of -1/6"),
            (obj + 1.0 / 6.0).abs() <= 0.02,
        ),
    ];

    let rho = ghz_state();
    let w = analytic_ghz_witness();
    let value = w.hs_inner(rho.matrix()).re;
    checks.push((
        format!("analytic witness value {value:.12} == -1/6"),
        (value + 1.0 / 6.0).abs() <= 1e-12,
    ));
    checks.push((
        format!("analytic witness trace {:.12} == 1", w.trace().re),
        (w.trace().re - 1.0).abs() <= 1e-12,
    ));

    let structure = m_separability_structure(rho.dims(), 2).unwrap();
    let mut rng = RngStream::new(1, StreamLabel::Validation);
    let report_v =
        empirical_violation(&w, rho.dims(), &structure, 100_000, &mut rng).unwrap();
    checks.push((
        format!("analytic witness violations {}/100000 == 0", report_v.n_violations),
        report_v.n_violations == 0,
    ));
    report("4 (GHZ biseparability witness)", &checks);
}

/// Solver vs eigendecomposition oracle on the unconstrained-witness program
/// `minimize Tr(W rho), W >= 0, Tr W = 1`, whose optimum is lambda_min(rho).
#[test]
fn criterion_5_solver_oracle_suite() {
    let dims = [2usize, 3, 4, 6, 9];
    let mut rng = RngStream::new(17, StreamLabel::StateGen);
    let mut checks = Vec::new();
    for i in 0..50 {
        let d = dims[i % dims.len()];
        // Hilbert-Schmidt random density matrix, built inline so the check
        // does not depend on the state catalog
        let g = ComplexMatrix::from_fn(d, d, |_, _| rng.complex_gaussian());
        let gg = g.matmul(&g.dagger());
        let rho = gg.scale_re(1.0 / gg.trace().re);

        let basis = linalg::hermitian_basis(d);
        let objective: Vec<f64> = basis.iter().map(|b| b.hs_inner(&rho).re).collect();
        let mut eq_row = vec![0.0; d * d];
        eq_row[0] = (d as f64).sqrt();
        let problem = SdpProblem {
            objective,
            blocks: vec![AffineBlock::new(ComplexMatrix::zeros(d, d), basis).unwrap()],
            eq_a: vec![eq_row],
            eq_b: vec![1.0],
        };
        let mut warm = vec![0.0; d * d];
        warm[0] = 1.0 / (d as f64).sqrt();
        let opts = SolveOptions { warm_start: Some(warm), ..SolveOptions::default() };
        let solution = sdp::solve(&problem, &opts).unwrap();
        let oracle = linalg::min_eig(&rho).unwrap();
        checks.push((
            format!(
                "instance {i} (D={d}): solver {:.9e} vs eigensolver {:.9e}",
                solution.objective, oracle
            ),
            (solution.objective - oracle).abs() <= 1e-6,
        ));
    }
    report("5 (solver vs eigendecomposition oracle)", &checks);
}

/// Closed-form sample-count formulas, exact integers.
#[test]
fn criterion_6_sample_count_formulas() {
    let scenario = theoretical_sample_count(9, 0.1, 0.1).unwrap();
    let chernoff = chernoff_sample_count(0.01, 0.01).unwrap();
    report(
        "6 (sample-count formulas)",
        &[
            (format!("theoretical_sample_count(9, 0.1, 0.1) = {scenario} (want 8999)"), scenario == 8999),
            (format!("chernoff_sample_count(0.01, 0.01) = {chernoff} (want 26492)"), chernoff == 26492),
        ],
    );
}

/// The randomized property suites live in tests/properties.rs and run
/// standalone (`cargo test --test properties`). This criterion re-runs their
/// four pillars once with fixed inputs so the acceptance binary is
/// self-contained.
#[test]
fn criterion_7_property_suites() {
    let mut checks = Vec::new();

    // eigensolver reconstruction
    let mut rng = RngStream::new(23, StreamLabel::StateGen);
    let m = ComplexMatrix::from_fn(9, 9, |_, _| rng.complex_gaussian()).hermitized();
    let (eigs, vecs) = linalg::eig_hermitian(&m).unwrap();
    let mut worst = 0.0f64;
    for i in 0..9 {
        for j in 0..9 {
            let mut rec = C64::new(0.0, 0.0);
            for k in 0..9 {
                rec += vecs[(i, k)] * eigs[k] * vecs[(j, k)].conj();
            }
            worst = worst.max((rec - m[(i, j)]).norm());
        }
    }
    checks.push((format!("eigensolver reconstruction residual {worst:.3e} <= 1e-10"), worst <= 1e-10));

    // PSD preservation under contraction
    let dims = DimsSpec::new(vec![2, 2]).unwrap();
    let g = ComplexMatrix::from_fn(4, 4, |_, _| rng.complex_gaussian());
    let w = g.dagger().matmul(&g);
    let structure = oew::partition::full_separability_structure(&dims).unwrap();
    let partition = &structure.partitions[0];
    let free = partition.free.map(|f| partition.blocks[f].clone());
    let mut srng = RngStream::new(23, StreamLabel::Constraints);
    let mut min_seen = f64::INFINITY;
    for _ in 0..200 {
        let pv = oew::states::sample_product_vector(partition, &dims, &mut srng);
        let block =
            linalg::contract_product(&w, &dims, pv.assignments(), free.as_deref()).unwrap();
        min_seen = min_seen.min(linalg::min_eig(&block.hermitized()).unwrap());
    }
    checks.push((format!("contracted PSD witness min eigenvalue {min_seen:.3e} >= -1e-10"), min_seen >= -1e-10));

    // maximally-mixed objective
    let mm = oew::states::maximally_mixed(&dims);
    let res = oew::witness::find_witness(
        &mm,
        &structure,
        &oew::witness::FindOptions::new(30, 23),
    )
    .unwrap();
    checks.push((
        format!("maximally-mixed objective {:.12} == 1/4 to 1e-10", res.objective),
        (res.objective - 0.25).abs() <= 1e-10,
    ));

    // JSON round-trip bit-exactness
    let mut grng = RngStream::new(23, StreamLabel::StateGen);
    let rho = oew::states::random_density_matrix(&dims, &mut grng);
    let path = std::env::temp_dir().join(format!("oew-acc-{}.json", std::process::id()));
    oew::io::write_state(&path, &rho).unwrap();
    let back = oew::io::read_state(&path).unwrap();
    std::fs::remove_file(&path).ok();
    let bit_exact = (0..4).all(|i| {
        (0..4).all(|j| {
            rho.matrix()[(i, j)].re.to_bits() == back.matrix()[(i, j)].re.to_bits()
                && rho.matrix()[(i, j)].im.to_bits() == back.matrix()[(i, j)].im.to_bits()
        })
    });
    checks.push(("state JSON round-trip is bit-exact".to_string(), bit_exact));

    report("7 (property suite pillars)", &checks);
}
