//! Dense complex linear algebra with multipartite index arithmetic.
//!
//! Everything here operates on small square matrices (dimension at most a few
//! hundred): Kronecker products, partial transpose and partial trace over
//! tensor factors, contraction of a witness against product vectors, a cyclic
//! Jacobi eigensolver for Hermitian matrices, and an orthonormal Hermitian
//! basis used to parameterize matrix variables with real coordinates.
//!
//! Index convention: party 1 is the most significant tensor factor, i.e. the
//! row index of an n-party operator is `sum_k i_k * prod_{l>k} d_l`. Tests
//! assert this once (`kron` of basis projectors) and everything else relies
//! on it.

use num_complex::Complex64;

use crate::{Error, Result};

pub type C64 = Complex64;

/// Relative tolerance for Hermiticity checks.
pub const HERMITIAN_RTOL: f64 = 1e-12;

/// Dense square-or-rectangular complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl std::fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Builds a matrix from nested rows; rows must all have the same length.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Self { rows: r, cols: c, data: rows.iter().flatten().copied().collect() })
    }

    /// Real diagonal matrix.
    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Self::zeros(entries.len(), entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m[(i, i)] = C64::new(e, 0.0);
        }
        m
    }

    /// Rank-one projector-style outer product `v w†`.
    pub fn outer(v: &[C64], w: &[C64]) -> Self {
        Self::from_fn(v.len(), w.len(), |i, j| v[i] * w[j].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[C64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|z| z.conj()).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// In-place `self += s * other`.
    pub fn axpy(&mut self, s: C64, other: &Self) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let src = other.row(k);
                let dst = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn trace(&self) -> C64 {
        assert!(self.is_square());
        (0..self.rows).map(|i| self[(i, i)]).sum()
    }

    /// Hilbert-Schmidt inner product `Tr(self† other)`.
    pub fn hs_inner(&self, other: &Self) -> C64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| a.conj() * b).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |M[i][j] - conj(M[j][i])|`.
    pub fn hermiticity_residual(&self) -> f64 {
        assert!(self.is_square());
        let mut r = 0.0f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    pub fn is_hermitian(&self, rtol: f64) -> bool {
        self.is_square() && self.hermiticity_residual() <= rtol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// `(M + M†)/2`; absorbs roundoff before eigendecompositions.
    pub fn hermitized(&self) -> Self {
        assert!(self.is_square());
        Self::from_fn(self.rows, self.cols, |i, j| (self[(i, j)] + self[(j, i)].conj()) * 0.5)
    }
}

impl std::ops::Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for ComplexMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Ordered list of party dimensions; annotates matrices living on a tensor
/// product of single-party spaces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DimsSpec {
    dims: Vec<usize>,
}

impl DimsSpec {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() || dims.iter().any(|&d| d < 1) {
            return Err(Error::Domain(format!("invalid party dimensions {dims:?}")));
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn n_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn total(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn dim_of(&self, party: usize) -> usize {
        self.dims[party]
    }

    /// Decomposes a flat index into per-party digits, party 0 most significant.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        for (k, &d) in self.dims.iter().enumerate().rev() {
            out[k] = index % d;
            index /= d;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        digits.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| acc * d + i)
    }

    pub fn check_matrix(&self, m: &ComplexMatrix) -> Result<()> {
        if !m.is_square() || m.rows() != self.total() {
            return Err(Error::Shape(format!(
                "matrix is {}x{}, dims {:?} require {}x{}",
                m.rows(),
                m.cols(),
                self.dims,
                self.total(),
                self.total()
            )));
        }
        Ok(())
    }
}

impl std::fmt::Display for DimsSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let strs: Vec<String> = self.dims.iter().map(|d| d.to_string()).collect();
        write!(f, "{}", strs.join(","))
    }
}

/// Kronecker product; entry `((i*rB+k),(j*cB+l)) = A[i][j] * B[k][l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ra, ca, rb, cb) = (a.rows(), a.cols(), b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ra * rb, ca * cb);
    for i in 0..ra {
        for j in 0..ca {
            let aij = a[(i, j)];
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..rb {
                for l in 0..cb {
                    out[(i * rb + k, j * cb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Kronecker product of column vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    let mut out = Vec::with_capacity(a.len() * b.len());
    for &x in a {
        for &y in b {
            out.push(x * y);
        }
    }
    out
}

/// Transposes the indices of one party, leaving all others untouched.
pub fn partial_transpose(m: &ComplexMatrix, dims: &DimsSpec, party: usize) -> Result<ComplexMatrix> {
    dims.check_matrix(m)?;
    if party >= dims.n_parties() {
        return Err(Error::Domain(format!("party {party} out of range")));
    }
    let total = dims.total();
    let mut out = ComplexMatrix::zeros(total, total);
    for t in 0..total {
        let mut td = dims.digits(t);
        for u in 0..total {
            let mut ud = dims.digits(u);
            std::mem::swap(&mut td[party], &mut ud[party]);
            let (tp, up) = (dims.index_of(&td), dims.index_of(&ud));
            std::mem::swap(&mut td[party], &mut ud[party]);
            out[(tp, up)] = m[(t, u)];
        }
    }
    Ok(out)
}

/// Traces out the given parties, returning the reduced matrix and the dims of
/// the kept parties.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: &DimsSpec,
    traced: &[usize],
) -> Result<(ComplexMatrix, DimsSpec)> {
    dims.check_matrix(m)?;
    let n = dims.n_parties();
    if traced.iter().any(|&p| p >= n) {
        return Err(Error::Domain("traced party out of range".into()));
    }
    let kept: Vec<usize> = (0..n).filter(|p| !traced.contains(p)).collect();
    if kept.is_empty() {
        return Err(Error::Domain("cannot trace out every party".into()));
    }
    let kept_dims = DimsSpec::new(kept.iter().map(|&p| dims.dim_of(p)).collect())?;
    let b = kept_dims.total();
    let mut out = ComplexMatrix::zeros(b, b);
    let total = dims.total();
    for t in 0..total {
        let td = dims.digits(t);
        let i = kept_dims.index_of(&kept.iter().map(|&p| td[p]).collect::<Vec<_>>());
        for u in 0..total {
            let ud = dims.digits(u);
            if traced.iter().any(|&p| td[p] != ud[p]) {
                continue;
            }
            let j = kept_dims.index_of(&kept.iter().map(|&p| ud[p]).collect::<Vec<_>>());
            out[(i, j)] += m[(t, u)];
        }
    }
    Ok((out, kept_dims))
}

/// Precomputed contraction of a multipartite operator against fixed vectors
/// on every block of parties except an optional free block.
///
/// For a free block of joint dimension `b` the contraction of `W` is the
/// `b x b` matrix `M[i][j] = <v ⊗ e_i | W | v ⊗ e_j>` with the correct index
/// interleaving for non-contiguous blocks (no permutation matrices are ever
/// materialized). With no free block the result is the 1x1 scalar `<v|W|v>`.
pub struct Contractor {
    free_dim: usize,
    // groups[f] = full-space indices mapping to free index f, with the
    // product-vector amplitude carried by each.
    groups: Vec<Vec<(usize, C64)>>,
}

impl Contractor {
    pub fn new(
        dims: &DimsSpec,
        assignments: &[(Vec<usize>, Vec<C64>)],
        free_block: Option<&[usize]>,
    ) -> Result<Self> {
        let n = dims.n_parties();
        let mut owner = vec![None; n];
        for (bi, (parties, vector)) in assignments.iter().enumerate() {
            let mut block_dim = 1;
            for &p in parties {
                if p >= n {
                    return Err(Error::Partition(format!("party {p} out of range")));
                }
                if owner[p].is_some() {
                    return Err(Error::Partition(format!("party {p} appears in two blocks")));
                }
                owner[p] = Some(bi);
                block_dim *= dims.dim_of(p);
            }
            if vector.len() != block_dim {
                return Err(Error::Shape(format!(
                    "block {parties:?} needs a vector of dimension {block_dim}, got {}",
                    vector.len()
                )));
            }
        }
        let free: Vec<usize> = match free_block {
            Some(parties) => {
                for &p in parties {
                    if p >= n {
                        return Err(Error::Partition(format!("party {p} out of range")));
                    }
                    if owner[p].is_some() {
                        return Err(Error::Partition(format!(
                            "party {p} is both contracted and free"
                        )));
                    }
                    owner[p] = Some(usize::MAX);
                }
                parties.to_vec()
            }
            None => Vec::new(),
        };
        if let Some(p) = (0..n).find(|&p| owner[p].is_none()) {
            return Err(Error::MissingAssignment(format!("party {p} has no block")));
        }

        let free_dim: usize = free.iter().map(|&p| dims.dim_of(p)).product();
        let mut groups = vec![Vec::new(); free_dim];
        for t in 0..dims.total() {
            let td = dims.digits(t);
            // free-block multi-index in ascending party order
            let f = free.iter().fold(0, |acc, &p| acc * dims.dim_of(p) + td[p]);
            let mut amp = C64::new(1.0, 0.0);
            for (parties, vector) in assignments {
                let idx = parties.iter().fold(0, |acc, &p| acc * dims.dim_of(p) + td[p]);
                amp *= vector[idx];
            }
            groups[f].push((t, amp));
        }
        Ok(Self { free_dim, groups })
    }

    pub fn free_dim(&self) -> usize {
        self.free_dim
    }

    pub fn contract(&self, w: &ComplexMatrix) -> ComplexMatrix {
        let b = self.free_dim;
        let mut out = ComplexMatrix::zeros(b, b);
        for i in 0..b {
            for j in 0..b {
                let mut acc = C64::new(0.0, 0.0);
                for &(t, at) in &self.groups[i] {
                    let row = w.row(t);
                    let mut inner = C64::new(0.0, 0.0);
                    for &(u, au) in &self.groups[j] {
                        inner += row[u] * au;
                    }
                    acc += at.conj() * inner;
                }
                out[(i, j)] = acc;
            }
        }
        out
    }
}

/// One-shot contraction; see [`Contractor`].
pub fn contract_product(
    w: &ComplexMatrix,
    dims: &DimsSpec,
    assignments: &[(Vec<usize>, Vec<C64>)],
    free_block: Option<&[usize]>,
) -> Result<ComplexMatrix> {
    dims.check_matrix(w)?;
    Ok(Contractor::new(dims, assignments, free_block)?.contract(w))
}

const JACOBI_MAX_SWEEPS: usize = 100;

/// Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the unitary matrix whose
/// columns are the matching eigenvectors. The input is symmetrized before
/// the sweeps; inputs whose Hermiticity residual exceeds the relative
/// tolerance are rejected.
pub fn eig_hermitian(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    if !m.is_square() {
        return Err(Error::Shape(format!("eig of {}x{} matrix", m.rows(), m.cols())));
    }
    let scale = m.max_abs();
    let residual = m.hermiticity_residual();
    if residual > HERMITIAN_RTOL * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian { residual, tol: HERMITIAN_RTOL * scale });
    }
    let n = m.rows();
    let mut a = m.hermitized();
    let mut v = ComplexMatrix::identity(n);
    if n <= 1 {
        return Ok(((0..n).map(|i| a[(i, i)].re).collect(), v));
    }
    let scale = scale.max(f64::MIN_POSITIVE);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                if r <= 1e-18 * scale {
                    continue;
                }
                // Phase that makes the (p,q) entry real, then a standard real
                // rotation chosen to zero it.
                let u = apq / r;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let theta = (aqq - app) / (2.0 * r);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let su = u * s; // s * e^{i phi}
                let cu = u * c; // c * e^{i phi}

                // A <- J† A J with J[p][p]=c, J[p][q]=s, J[q][p]=-s*conj(u),
                // J[q][q]=c*conj(u).
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * su.conj();
                    a[(k, q)] = akp * s + akq * cu.conj();
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * su;
                    a[(q, k)] = apk * s + aqk * cu;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * su.conj();
                    v[(k, q)] = vkp * s + vkq * cu.conj();
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.partial_cmp(&a[(j, j)].re).unwrap());
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    Ok((eigenvalues, vectors))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eig(m: &ComplexMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.0[0])
}

/// Orthonormal basis of the real space of Hermitian `D x D` matrices under
/// the Hilbert-Schmidt inner product; `D^2` elements, the first is `I/sqrt(D)`.
pub fn hermitian_basis(d: usize) -> Vec<ComplexMatrix> {
    assert!(d >= 1);
    let mut basis = Vec::with_capacity(d * d);
    basis.push(ComplexMatrix::identity(d).scale_re(1.0 / (d as f64).sqrt()));
    // traceless diagonal (generalized Gell-Mann)
    for k in 1..d {
        let norm = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let mut m = ComplexMatrix::zeros(d, d);
        for j in 0..k {
            m[(j, j)] = C64::new(norm, 0.0);
        }
        m[(k, k)] = C64::new(-(k as f64) * norm, 0.0);
        basis.push(m);
    }
    let inv_sqrt2 = 1.0 / 2f64.sqrt();
    for p in 0..d {
        for q in (p + 1)..d {
            let mut x = ComplexMatrix::zeros(d, d);
            x[(p, q)] = C64::new(inv_sqrt2, 0.0);
            x[(q, p)] = C64::new(inv_sqrt2, 0.0);
            basis.push(x);
            let mut y = ComplexMatrix::zeros(d, d);
            y[(p, q)] = C64::new(0.0, -inv_sqrt2);
            y[(q, p)] = C64::new(0.0, inv_sqrt2);
            basis.push(y);
        }
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pauli_x() -> ComplexMatrix {
        ComplexMatrix::from_rows(&[
            vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)],
            vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)],
        ])
        .unwrap()
    }

    fn pauli_z() -> ComplexMatrix {
        ComplexMatrix::diag(&[1.0, -1.0])
    }

    fn random_hermitian(n: usize, seed: u64) -> ComplexMatrix {
        // splitmix64-driven entries; good enough for deterministic tests
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) as f64 / u64::MAX as f64) - 0.5
        };
        let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        g.add(&g.dagger()).scale_re(0.5)
    }

    fn random_psd(n: usize, seed: u64) -> ComplexMatrix {
        let mut state = seed;
        let mut next = move || {
            state = state.wrapping_add(0x9e3779b97f4a7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
            ((z ^ (z >> 31)) as f64 / u64::MAX as f64) - 0.5
        };
        let g = ComplexMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        g.matmul(&g.dagger())
    }

    #[test]
    fn kron_identities() {
        let i2 = ComplexMatrix::identity(2);
        assert_eq!(kron(&i2, &i2), ComplexMatrix::identity(4));
        let a = ComplexMatrix::diag(&[1.0, 2.0]);
        let b = ComplexMatrix::diag(&[3.0, 4.0]);
        assert_eq!(kron(&a, &b), ComplexMatrix::diag(&[3.0, 4.0, 6.0, 8.0]));
    }

    #[test]
    fn kron_against_index_formula() {
        // brute-force double loop over all 16 entries
        let a = pauli_x();
        let b = pauli_z();
        let k = kron(&a, &b);
        for i in 0..2 {
            for j in 0..2 {
                for p in 0..2 {
                    for q in 0..2 {
                        let expected = a[(i, j)] * b[(p, q)];
                        assert_eq!(k[(2 * i + p, 2 * j + q)], expected);
                    }
                }
            }
        }
    }

    #[test]
    fn kron_associativity() {
        let a = random_hermitian(2, 1);
        let b = random_hermitian(3, 2);
        let c = random_hermitian(2, 3);
        let lhs = kron(&kron(&a, &b), &c);
        let rhs = kron(&a, &kron(&b, &c));
        assert!(lhs.sub(&rhs).max_abs() <= 1e-14);
    }

    #[test]
    fn index_convention_party_one_most_significant() {
        // |i>_1 ⊗ |j>_2 lands at row i*d2 + j
        let e1 = ComplexMatrix::from_rows(&[vec![C64::new(0.0, 0.0)], vec![C64::new(1.0, 0.0)]])
            .unwrap(); // |1> in C^2
        let e0 = ComplexMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0)],
            vec![C64::new(0.0, 0.0)],
            vec![C64::new(0.0, 0.0)],
        ])
        .unwrap(); // |0> in C^3
        let v = kron(&e1, &e0);
        assert_eq!(v[(3, 0)], C64::new(1.0, 0.0)); // 1*3 + 0
        let dims = DimsSpec::new(vec![2, 3]).unwrap();
        assert_eq!(dims.index_of(&[1, 0]), 3);
        assert_eq!(dims.digits(3), vec![1, 0]);
    }

    fn bell_phi_plus() -> (ComplexMatrix, DimsSpec) {
        let dims = DimsSpec::new(vec![2, 2]).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); 4];
        v[0] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        v[3] = C64::new(1.0 / 2f64.sqrt(), 0.0);
        (ComplexMatrix::outer(&v, &v), dims)
    }

    #[test]
    fn partial_transpose_bell_min_eig() {
        let (rho, dims) = bell_phi_plus();
        let pt = partial_transpose(&rho, &dims, 1).unwrap();
        // oracle: full eigendecomposition of the 4x4 result
        let (evals, _) = eig_hermitian(&pt).unwrap();
        assert!((evals[0] + 0.5).abs() <= 1e-12);
        assert!((min_eig(&pt).unwrap() + 0.5).abs() <= 1e-12);
    }

    #[test]
    fn partial_transpose_involution_and_trace() {
        let dims = DimsSpec::new(vec![2, 3]).unwrap();
        let m = random_hermitian(6, 7);
        for party in 0..2 {
            let pt = partial_transpose(&m, &dims, party).unwrap();
            let back = partial_transpose(&pt, &dims, party).unwrap();
            assert!(back.sub(&m).max_abs() == 0.0);
            assert!((pt.trace() - m.trace()).norm() <= 1e-14);
            assert!(pt.is_hermitian(1e-12));
        }
    }

    #[test]
    fn partial_transpose_shape_error() {
        let dims = DimsSpec::new(vec![2, 2]).unwrap();
        let m = ComplexMatrix::identity(5);
        assert!(matches!(partial_transpose(&m, &dims, 0), Err(Error::Shape(_))));
    }

    #[test]
    fn partial_trace_bell_is_maximally_mixed() {
        let (rho, dims) = bell_phi_plus();
        let (red, kd) = partial_trace(&rho, &dims, &[1]).unwrap();
        assert_eq!(kd.total(), 2);
        assert!(red.sub(&ComplexMatrix::identity(2).scale_re(0.5)).max_abs() <= 1e-14);
    }

    #[test]
    fn contract_basis_vector_selection() {
        // W = |00><00| on dims (2,2)
        let dims = DimsSpec::new(vec![2, 2]).unwrap();
        let mut v = vec![C64::new(0.0, 0.0); 4];
        v[0] = C64::new(1.0, 0.0);
        let w = ComplexMatrix::outer(&v, &v);
        let e0 = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        let e1 = vec![C64::new(0.0, 0.0), C64::new(1.0, 0.0)];
        let m = contract_product(&w, &dims, &[(vec![0], e0)], Some(&[1])).unwrap();
        let mut p0 = ComplexMatrix::zeros(2, 2);
        p0[(0, 0)] = C64::new(1.0, 0.0);
        assert!(m.sub(&p0).max_abs() <= 1e-15);
        let z = contract_product(&w, &dims, &[(vec![0], e1)], Some(&[1])).unwrap();
        assert!(z.max_abs() <= 1e-15);
    }

    #[test]
    fn contract_identity_gives_identity() {
        let dims = DimsSpec::new(vec![2, 3]).unwrap();
        let w = ComplexMatrix::identity(6);
        let s = 0.6f64;
        let v = vec![C64::new(s, 0.0), C64::new(0.0, (1.0 - s * s).sqrt())];
        let m = contract_product(&w, &dims, &[(vec![0], v)], Some(&[1])).unwrap();
        assert!(m.sub(&ComplexMatrix::identity(3)).max_abs() <= 1e-14);
    }

    #[test]
    fn contract_noncontiguous_free_block() {
        // dims (2,2,2), contract party 2 (middle), free parties {1,3}.
        // Check against brute-force kron expansion with interleaving.
        let dims = DimsSpec::new(vec![2, 2, 2]).unwrap();
        let w = random_hermitian(8, 42);
        let v = vec![C64::new(0.8, 0.0), C64::new(0.0, 0.6)];
        let m = contract_product(&w, &dims, &[(vec![1], v.clone())], Some(&[0, 2])).unwrap();
        assert!(m.is_hermitian(1e-12));
        for i in 0..4 {
            for j in 0..4 {
                // free multi-index (i0, i2) with party 0 more significant
                let (i0, i2) = (i / 2, i % 2);
                let (j0, j2) = (j / 2, j % 2);
                let mut expected = C64::new(0.0, 0.0);
                for a in 0..2 {
                    for b in 0..2 {
                        let t = dims.index_of(&[i0, a, i2]);
                        let u = dims.index_of(&[j0, b, j2]);
                        expected += v[a].conj() * w[(t, u)] * v[b];
                    }
                }
                assert!((m[(i, j)] - expected).norm() <= 1e-13);
            }
        }
    }

    #[test]
    fn contract_linearity() {
        let dims = DimsSpec::new(vec![2, 2]).unwrap();
        let w1 = random_hermitian(4, 5);
        let w2 = random_hermitian(4, 6);
        let v = vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let assignments = vec![(vec![0usize], v)];
        let c = Contractor::new(&dims, &assignments, Some(&[1])).unwrap();
        let combo = w1.scale_re(0.3).add(&w2.scale_re(-1.7));
        let lhs = c.contract(&combo);
        let rhs = c.contract(&w1).scale_re(0.3).add(&c.contract(&w2).scale_re(-1.7));
        assert!(lhs.sub(&rhs).max_abs() <= 1e-12);
    }

    #[test]
    fn contract_preserves_psd() {
        let dims = DimsSpec::new(vec![2, 3]).unwrap();
        for seed in 0..5u64 {
            let w = random_psd(6, 100 + seed);
            let s = (0.2 + 0.1 * seed as f64).min(0.9);
            let v = vec![C64::new(s, 0.0), C64::new((1.0 - s * s).sqrt(), 0.0)];
            let m = contract_product(&w, &dims, &[(vec![0], v)], Some(&[1])).unwrap();
            assert!(min_eig(&m).unwrap() >= -1e-10);
        }
    }

    #[test]
    fn contract_error_paths() {
        let dims = DimsSpec::new(vec![2, 2]).unwrap();
        let w = ComplexMatrix::identity(4);
        let v2 = vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
        // missing assignment for party 1
        assert!(matches!(
            contract_product(&w, &dims, &[(vec![0], v2.clone())], None),
            Err(Error::MissingAssignment(_))
        ));
        // party in two blocks
        assert!(matches!(
            contract_product(
                &w,
                &dims,
                &[(vec![0], v2.clone()), (vec![0], v2.clone())],
                Some(&[1])
            ),
            Err(Error::Partition(_))
        ));
        // wrong vector dimension
        let v3 = vec![C64::new(1.0, 0.0); 3];
        assert!(matches!(
            contract_product(&w, &dims, &[(vec![0], v3)], Some(&[1])),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn eig_diagonal_and_pauli() {
        let (evals, _) = eig_hermitian(&ComplexMatrix::diag(&[3.0, 1.0, 2.0])).unwrap();
        assert_eq!(evals, vec![1.0, 2.0, 3.0]);
        let (evals, _) = eig_hermitian(&pauli_x()).unwrap();
        assert!((evals[0] + 1.0).abs() <= 1e-14);
        assert!((evals[1] - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn eig_reconstruction_residuals() {
        for seed in 0..4u64 {
            let m = random_hermitian(9, 10 + seed);
            let (evals, v) = eig_hermitian(&m).unwrap();
            let scale = m.max_abs().max(1.0);
            // reconstruction residual
            let lam = ComplexMatrix::diag(&evals);
            let rec = v.matmul(&lam).matmul(&v.dagger());
            assert!(rec.sub(&m).max_abs() <= 1e-10 * scale);
            // orthonormality
            let gram = v.dagger().matmul(&v);
            assert!(gram.sub(&ComplexMatrix::identity(9)).max_abs() <= 1e-10);
            // eigenvalue sum equals trace
            let sum: f64 = evals.iter().sum();
            assert!((sum - m.trace().re).abs() <= 1e-10 * scale);
            // ascending order
            assert!(evals.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(2);
        m[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(eig_hermitian(&m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn min_eig_identity() {
        assert!((min_eig(&ComplexMatrix::identity(3)).unwrap() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn hermitian_basis_orthonormal() {
        for d in [1usize, 2, 3] {
            let basis = hermitian_basis(d);
            assert_eq!(basis.len(), d * d);
            // first element is I/sqrt(D)
            let expected = ComplexMatrix::identity(d).scale_re(1.0 / (d as f64).sqrt());
            assert!(basis[0].sub(&expected).max_abs() <= 1e-15);
            for (i, a) in basis.iter().enumerate() {
                assert!(a.is_hermitian(1e-12));
                for (j, b) in basis.iter().enumerate() {
                    let inner = a.hs_inner(b);
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((inner.re - expected).abs() <= 1e-14 && inner.im.abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn hermitian_basis_spans() {
        // expand-and-reconstruct oracle for D=3
        let basis = hermitian_basis(3);
        let m = random_hermitian(3, 77);
        let mut rec = ComplexMatrix::zeros(3, 3);
        for b in &basis {
            let coeff = b.hs_inner(&m).re;
            rec.axpy(C64::new(coeff, 0.0), b);
        }
        assert!(rec.sub(&m).max_abs() <= 1e-13);
    }
}
