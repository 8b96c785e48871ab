//! A-posteriori validation of candidate witnesses.
//!
//! A sampled program only enforces positivity on the product vectors it saw.
//! This module estimates how often a *fresh* product vector still violates
//! the block constraint, sizes that estimate with a Chernoff bound, and
//! combines objective and violation estimate into an entanglement verdict.

use serde::{Deserialize, Serialize};

use crate::linalg::{self, ComplexMatrix, DimsSpec};
use crate::partition::PartitionStructure;
use crate::states::{sample_product_vector, DensityMatrix, RngStream, StreamLabel};
use crate::witness::{find_witness, FindOptions, WitnessResult};
use crate::{Error, Result};

/// Eigenvalues above this are not counted as constraint violations; guards
/// against flagging solver-tolerance-level negativity as a real violation.
pub const VIOLATION_EIG_TOL: f64 = 1e-9;

/// Objectives below `-OBJECTIVE_TOL` count as genuinely negative.
pub const OBJECTIVE_TOL: f64 = 1e-6;

/// Empirical violation rates at or below this pass the certification gate.
pub const VIOLATION_RATE_TOL: f64 = 0.01;

/// Two-sided Chernoff/Hoeffding sample size `ceil(ln(2/beta) / (2 eps^2))`
/// so the empirical violation rate is within `eps` of the true rate with
/// probability at least `1 - beta`.
pub fn chernoff_sample_count(eps: f64, beta: f64) -> Result<u64> {
    if !(eps > 0.0 && eps <= 1.0) || !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::Domain(format!("eps={eps}, beta={beta} outside (0, 1]")));
    }
    Ok(((2.0 / beta).ln() / (2.0 * eps * eps)).ceil() as u64)
}

/// Result of a fresh-sample violation estimate.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_trials: u64,
    pub n_violations: u64,
    /// `n_violations / n_trials`
    pub violation_rate: f64,
    /// Most negative block eigenvalue seen over all trials (0 if none were
    /// negative).
    pub worst_eigenvalue: f64,
    pub seed: u64,
}

/// Estimates the violation rate of `witness` by drawing `n_trials` fresh
/// product vectors from `rng`, which must carry the [`StreamLabel::Validation`]
/// label so validation draws can never overlap the constraint-sampling
/// stream. With multiple partitions the trials are assigned round-robin so
/// every partition gets an even share.
pub fn empirical_violation(
    witness: &ComplexMatrix,
    dims: &DimsSpec,
    structure: &PartitionStructure,
    n_trials: u64,
    rng: &mut RngStream,
) -> Result<ValidationReport> {
    if structure.dims != *dims {
        return Err(Error::Shape(format!(
            "structure dims {} do not match witness dims {dims}",
            structure.dims
        )));
    }
    dims.check_matrix(witness)?;
    if structure.partitions.is_empty() {
        return Err(Error::Partition("no partitions to validate against".into()));
    }
    if rng.label() != StreamLabel::Validation {
        return Err(Error::Domain(format!(
            "validation requires a Validation-labeled stream, got {:?}",
            rng.label()
        )));
    }
    let mut n_violations = 0u64;
    let mut worst = 0.0f64;
    for trial in 0..n_trials {
        let partition = &structure.partitions[(trial as usize) % structure.partitions.len()];
        let free = partition.free.map(|f| partition.blocks[f].clone());
        let pv = sample_product_vector(partition, dims, rng);
        let block = linalg::contract_product(witness, dims, pv.assignments(), free.as_deref())?;
        let lam = linalg::min_eig(&block.hermitized())?;
        if lam < -VIOLATION_EIG_TOL {
            n_violations += 1;
            worst = worst.min(lam);
        }
    }
    let violation_rate =
        if n_trials == 0 { 0.0 } else { n_violations as f64 / n_trials as f64 };
    Ok(ValidationReport {
        n_trials,
        n_violations,
        violation_rate,
        worst_eigenvalue: worst,
        seed: rng.seed(),
    })
}

/// Positive-partial-transpose check: min eigenvalue of the partial transpose
/// per party. A state is NPT (hence entangled) if any of them is negative.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PptReport {
    /// min eigenvalue of the partial transpose with respect to each party
    pub min_eigs: Vec<f64>,
    pub is_ppt: bool,
}

pub fn ppt_check(rho: &DensityMatrix, tol: f64) -> Result<PptReport> {
    let mut min_eigs = Vec::with_capacity(rho.dims().n_parties());
    for party in 0..rho.dims().n_parties() {
        let pt = linalg::partial_transpose(rho.matrix(), rho.dims(), party)?;
        min_eigs.push(linalg::min_eig(&pt.hermitized())?);
    }
    let is_ppt = min_eigs.iter().all(|&l| l >= -tol);
    Ok(PptReport { min_eigs, is_ppt })
}

/// Classification outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    /// Negative objective and a certified low violation rate.
    Entangled,
    /// No negative objective was found, or the candidate witness failed
    /// certification; says nothing about the state.
    NotDetected,
}

/// Full classification record: the witness search plus its certification.
#[derive(Clone, Debug)]
pub struct Classification {
    pub verdict: Verdict,
    pub witness: WitnessResult,
    pub validation: ValidationReport,
}

/// Searches for a witness and certifies it: the verdict is `Entangled` only
/// if the objective is below `-1e-6` *and* the fresh-sample violation rate at
/// the Chernoff-sized trial count for `(eps, beta) = (0.01, 0.01)` stays at
/// or below 1%.
pub fn classify(
    rho: &DensityMatrix,
    structure: &PartitionStructure,
    opts: &FindOptions,
) -> Result<Classification> {
    let witness = find_witness(rho, structure, opts)?;
    let n_trials = chernoff_sample_count(0.01, 0.01)?;
    let mut rng = RngStream::task(opts.seed, StreamLabel::Validation, opts.task);
    let validation =
        empirical_violation(&witness.witness, rho.dims(), structure, n_trials, &mut rng)?;
    let verdict = if witness.objective < -OBJECTIVE_TOL
        && validation.violation_rate <= VIOLATION_RATE_TOL
    {
        Verdict::Entangled
    } else {
        Verdict::NotDetected
    };
    Ok(Classification { verdict, witness, validation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::partition::full_separability_structure;
    use crate::states::{ghz_state, horodecki_state, maximally_mixed};

    #[test]
    fn chernoff_formula() {
        assert_eq!(chernoff_sample_count(0.01, 0.01).unwrap(), 26492);
        assert_eq!(chernoff_sample_count(0.1, 0.05).unwrap(), 185);
        assert!(chernoff_sample_count(0.0, 0.5).is_err());
    }

    #[test]
    fn identity_witness_never_violates() {
        let dims = DimsSpec::new(vec![3, 3]).unwrap();
        let w = ComplexMatrix::identity(9).scale_re(1.0 / 9.0);
        let structure = full_separability_structure(&dims).unwrap();
        let mut rng = RngStream::new(7, StreamLabel::Validation);
        let report = empirical_violation(&w, &dims, &structure, 2000, &mut rng).unwrap();
        assert_eq!(report.n_violations, 0);
        assert_eq!(report.violation_rate, 0.0);
        assert_eq!(report.worst_eigenvalue, 0.0);
    }

    #[test]
    fn negative_witness_always_violates() {
        let dims = DimsSpec::new(vec![2, 2]).unwrap();
        let w = ComplexMatrix::identity(4).scale_re(-0.25);
        let structure = full_separability_structure(&dims).unwrap();
        let mut rng = RngStream::new(7, StreamLabel::Validation);
        let report = empirical_violation(&w, &dims, &structure, 500, &mut rng).unwrap();
        assert_eq!(report.n_violations, 500);
        assert!((report.violation_rate - 1.0).abs() < 1e-15);
        assert!((report.worst_eigenvalue + 0.25).abs() <= 1e-12);
    }

    #[test]
    fn validation_is_reproducible() {
        let dims = DimsSpec::new(vec![2, 2]).unwrap();
        // swap witness: positive on products, eigenvalue -1/2 on singlets
        let mut w = ComplexMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                w[(2 * i + j, 2 * j + i)] = C64::new(0.25, 0.0);
            }
        }
        let structure = full_separability_structure(&dims).unwrap();
        let mut r1 = RngStream::new(42, StreamLabel::Validation);
        let mut r2 = RngStream::new(42, StreamLabel::Validation);
        let a = empirical_violation(&w, &dims, &structure, 3000, &mut r1).unwrap();
        let b = empirical_violation(&w, &dims, &structure, 3000, &mut r2).unwrap();
        assert_eq!(a.n_violations, b.n_violations);
        assert_eq!(a.worst_eigenvalue.to_bits(), b.worst_eigenvalue.to_bits());
        // swap contracts to |v|^2/4 * I-like PSD blocks on every product
        assert_eq!(a.n_violations, 0);
    }

    #[test]
    fn rejects_constraint_stream() {
        // independence discipline: the constraint-sampling stream must never
        // be reused for validation
        let dims = DimsSpec::new(vec![2, 2]).unwrap();
        let w = ComplexMatrix::identity(4).scale_re(0.25);
        let structure = full_separability_structure(&dims).unwrap();
        let mut rng = RngStream::new(7, StreamLabel::Constraints);
        assert!(empirical_violation(&w, &dims, &structure, 10, &mut rng).is_err());
    }

    #[test]
    fn ppt_flags_ghz_and_clears_mixed() {
        let ghz = ghz_state();
        let report = ppt_check(&ghz, 1e-9).unwrap();
        assert!(!report.is_ppt);
        assert!(report.min_eigs.iter().any(|&l| l < -0.4));

        let mm = maximally_mixed(ghz.dims());
        assert!(ppt_check(&mm, 1e-9).unwrap().is_ppt);

        // the bound entangled family is PPT everywhere
        let rho = horodecki_state(0.5).unwrap();
        assert!(ppt_check(&rho, 1e-9).unwrap().is_ppt);
    }

    #[test]
    fn classify_maximally_mixed_not_detected() {
        let dims = DimsSpec::new(vec![2, 2]).unwrap();
        let rho = maximally_mixed(&dims);
        let structure = full_separability_structure(&dims).unwrap();
        let c = classify(&rho, &structure, &FindOptions::new(40, 5)).unwrap();
        assert_eq!(c.verdict, Verdict::NotDetected);
        assert!((c.witness.objective - 0.25).abs() <= 1e-8);
    }
}
