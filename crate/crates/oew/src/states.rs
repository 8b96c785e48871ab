//! State catalog, reproducible random streams, and uniform sampling of pure
//! product vectors.
//!
//! Sampling note: the positivity constraint a witness must satisfy is
//! homogeneous of degree 2 in each product-vector factor, so only directions
//! matter and we draw Haar-uniform unit vectors (normalized standard complex
//! Gaussians).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::linalg::{self, ComplexMatrix, DimsSpec, C64};
use crate::partition::Partition;
use crate::{Error, Result};

/// Purpose tag for an RNG substream. Streams with different labels never
/// overlap, so e.g. changing the constraint sample count N does not perturb
/// validation draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamLabel {
    Constraints,
    Validation,
    StateGen,
    Other(u16),
}

impl StreamLabel {
    fn code(self) -> u64 {
        match self {
            StreamLabel::Constraints => 1,
            StreamLabel::Validation => 2,
            StreamLabel::StateGen => 3,
            StreamLabel::Other(k) => 16 + k as u64,
        }
    }
}

/// Counter-based random stream: a ChaCha generator keyed by the 64-bit seed,
/// with the stream id split by purpose label and task index. Identical
/// (seed, label, task) always reproduces the same sequence bit-exactly.
pub struct RngStream {
    rng: ChaCha12Rng,
    seed: u64,
    label: StreamLabel,
}

impl RngStream {
    pub fn new(seed: u64, label: StreamLabel) -> Self {
        Self::task(seed, label, 0)
    }

    /// Substream for an independent task (grid point, random state, ...).
    pub fn task(seed: u64, label: StreamLabel, task: u32) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut rng = ChaCha12Rng::from_seed(key);
        rng.set_stream((label.code() << 32) | task as u64);
        Self { rng, seed, label }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> StreamLabel {
        self.label
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    /// Standard complex Gaussian (independent N(0,1) real and imaginary parts).
    pub fn complex_gaussian(&mut self) -> C64 {
        Complex64::new(self.standard_normal(), self.standard_normal())
    }

    pub fn gen_range_usize(&mut self, upper: usize) -> usize {
        self.rng.gen_range(0..upper)
    }
}

/// Haar-uniform unit vector on the sphere of `C^d`.
pub fn sample_unit_vector(d: usize, rng: &mut RngStream) -> Vec<C64> {
    assert!(d >= 1);
    loop {
        let v: Vec<C64> = (0..d).map(|_| rng.complex_gaussian()).collect();
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm > 1e-150 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// One unit vector per contracted block of a partition.
#[derive(Clone, Debug)]
pub struct ProductVector {
    /// (parties of the block, unit vector on the block's joint space)
    pub blocks: Vec<(Vec<usize>, Vec<C64>)>,
}

impl ProductVector {
    pub fn assignments(&self) -> &[(Vec<usize>, Vec<C64>)] {
        &self.blocks
    }
}

/// Draws an independent uniform unit vector for every non-free block.
pub fn sample_product_vector(
    partition: &Partition,
    dims: &DimsSpec,
    rng: &mut RngStream,
) -> ProductVector {
    let blocks = partition
        .blocks
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != partition.free)
        .map(|(_, parties)| {
            let d: usize = parties.iter().map(|&p| dims.dim_of(p)).product();
            (parties.clone(), sample_unit_vector(d, rng))
        })
        .collect();
    ProductVector { blocks }
}

/// Density matrix: Hermitian, positive semidefinite, unit trace, annotated
/// with its party dimensions.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    dims: DimsSpec,
}

impl DensityMatrix {
    /// Validates the invariants (Hermitian to 1e-12 relative, unit trace to
    /// 1e-12, smallest eigenvalue >= -1e-10).
    pub fn new(matrix: ComplexMatrix, dims: DimsSpec) -> Result<Self> {
        dims.check_matrix(&matrix)?;
        if !matrix.is_hermitian(1e-12) {
            return Err(Error::NotHermitian {
                residual: matrix.hermiticity_residual(),
                tol: 1e-12 * matrix.max_abs(),
            });
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > 1e-12 || tr.im.abs() > 1e-12 {
            return Err(Error::Domain(format!("trace {tr} != 1")));
        }
        if linalg::min_eig(&matrix)? < -1e-10 {
            return Err(Error::Domain("matrix is not positive semidefinite".into()));
        }
        Ok(Self { matrix, dims })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dims(&self) -> &DimsSpec {
        &self.dims
    }

    pub fn dim(&self) -> usize {
        self.dims.total()
    }

    pub fn purity(&self) -> f64 {
        self.matrix.hs_inner(&self.matrix).re
    }

    /// Numerical rank at the given eigenvalue cutoff.
    pub fn rank(&self, tol: f64) -> Result<usize> {
        let (evals, _) = linalg::eig_hermitian(&self.matrix)?;
        Ok(evals.iter().filter(|&&e| e > tol).count())
    }
}

/// Hilbert-Schmidt random density matrix: `rho = G G† / Tr(G G†)` with `G`
/// a square matrix of independent standard complex Gaussians.
pub fn random_density_matrix(dims: &DimsSpec, rng: &mut RngStream) -> DensityMatrix {
    let d = dims.total();
    assert!(d >= 2);
    let g = ComplexMatrix::from_fn(d, d, |_, _| rng.complex_gaussian());
    let gg = g.matmul(&g.dagger());
    let tr = gg.trace().re;
    let rho = gg.scale_re(1.0 / tr).hermitized();
    DensityMatrix::new(rho, dims.clone()).expect("Wishart construction is a density matrix")
}

/// The 3x3 bound entangled family; `a` in `[0, 1]`, normalization `1/(8a+1)`.
pub fn horodecki_state(a: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Domain(format!("horodecki parameter a={a} outside [0,1]")));
    }
    let norm = 1.0 / (8.0 * a + 1.0);
    let mut m = ComplexMatrix::zeros(9, 9);
    let re = |x: f64| C64::new(x, 0.0);
    for i in 0..6 {
        m[(i, i)] = re(a);
    }
    m[(7, 7)] = re(a);
    m[(6, 6)] = re((1.0 + a) / 2.0);
    m[(8, 8)] = re((1.0 + a) / 2.0);
    let c = (1.0 - a * a).sqrt() / 2.0;
    m[(6, 8)] = re(c);
    m[(8, 6)] = re(c);
    // |00><11| + |00><22| + |11><22| coherences and their conjugates
    for (i, j) in [(0, 4), (0, 8), (4, 8)] {
        m[(i, j)] = re(a);
        m[(j, i)] = re(a);
    }
    DensityMatrix::new(m.scale_re(norm), DimsSpec::new(vec![3, 3])?)
}

/// Projector onto `(|000> + |111>)/sqrt(2)`.
pub fn ghz_state() -> DensityMatrix {
    let mut v = vec![C64::new(0.0, 0.0); 8];
    let amp = 1.0 / 2f64.sqrt();
    v[0] = C64::new(amp, 0.0);
    v[7] = C64::new(amp, 0.0);
    let rho = ComplexMatrix::outer(&v, &v);
    DensityMatrix::new(rho, DimsSpec::new(vec![2, 2, 2]).unwrap()).unwrap()
}

/// The four members of the Shifts unextendible product basis, as vectors in
/// `C^8`: `{|0,1,+>, |1,+,0>, |+,0,1>, |-,-,->}` with `|±> = (|0>±|1>)/sqrt(2)`.
pub fn shifts_upb_members() -> Vec<Vec<C64>> {
    let zero = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let one = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
    let amp = 1.0 / 2f64.sqrt();
    let plus = vec![C64::new(amp, 0.0), C64::new(amp, 0.0)];
    let minus = vec![C64::new(amp, 0.0), C64::new(-amp, 0.0)];
    vec![
        linalg::kron_vec(&linalg::kron_vec(&zero, &one), &plus),
        linalg::kron_vec(&linalg::kron_vec(&one, &plus), &zero),
        linalg::kron_vec(&linalg::kron_vec(&plus, &zero), &one),
        linalg::kron_vec(&linalg::kron_vec(&minus, &minus), &minus),
    ]
}

/// Normalized projector onto the orthogonal complement of the Shifts UPB:
/// `rho = (I_8 - sum_i |psi_i><psi_i|) / 4`.
pub fn shifts_upb_state() -> DensityMatrix {
    let mut m = ComplexMatrix::identity(8);
    for psi in shifts_upb_members() {
        m.axpy(C64::new(-1.0, 0.0), &ComplexMatrix::outer(&psi, &psi));
    }
    let rho = m.scale_re(0.25).hermitized();
    DensityMatrix::new(rho, DimsSpec::new(vec![2, 2, 2]).unwrap()).unwrap()
}

/// Maximally mixed state `I/D`.
pub fn maximally_mixed(dims: &DimsSpec) -> DensityMatrix {
    let d = dims.total();
    DensityMatrix::new(ComplexMatrix::identity(d).scale_re(1.0 / d as f64), dims.clone()).unwrap()
}
