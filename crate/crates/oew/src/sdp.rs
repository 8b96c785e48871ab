//! Small dense semidefinite programs: minimize a linear objective over real
//! variables subject to many small Hermitian LMI blocks, each affine in the
//! variables, plus linear equality constraints.
//!
//! Algorithm: equality constraints are eliminated up front (`x = x0 + Z y`
//! with `A x0 = b`, `A Z = 0`) so the iteration is unconstrained. Phase 1
//! finds a strictly feasible point with a logarithmic-barrier method on an
//! auxiliary slack `s` over `F(x) + s I >= 0`, leaving as soon as
//! `s < -tol_feas`; witness programs instead pass an analytic interior point
//! through `warm_start`. Phase 2 is a primal-dual interior-point iteration
//! (HKM direction) maintaining a dual block matrix `Z` per LMI block; a pure
//! log-barrier path-following phase 2 needs O(block count) Newton steps per
//! stage on these programs, which is far too slow with thousands of sampled
//! blocks.
//!
//! The termination certificate is the complementarity gap `<Z, F(x)>`
//! together with a vanishing dual residual.

use num_complex::Complex64;

use crate::linalg::{self, ComplexMatrix, C64};
use crate::{Error, Result};

/// Affine map from `x in R^m` to a Hermitian block `F0 + sum_i x_i F_i`.
#[derive(Clone, Debug)]
pub struct AffineBlock {
    dim: usize,
    f0: ComplexMatrix,
    coeffs: Vec<ComplexMatrix>,
}

impl AffineBlock {
    pub fn new(f0: ComplexMatrix, coeffs: Vec<ComplexMatrix>) -> Result<Self> {
        if !f0.is_square() {
            return Err(Error::Shape("block constant term must be square".into()));
        }
        let dim = f0.rows();
        for c in &coeffs {
            if c.rows() != dim || c.cols() != dim {
                return Err(Error::Shape("block coefficient dimension mismatch".into()));
            }
        }
        Ok(Self { dim, f0, coeffs })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_vars(&self) -> usize {
        self.coeffs.len()
    }

    pub fn eval(&self, x: &[f64]) -> ComplexMatrix {
        assert_eq!(x.len(), self.coeffs.len());
        let mut m = self.f0.clone();
        for (c, &xi) in self.coeffs.iter().zip(x) {
            if xi != 0.0 {
                m.axpy(C64::new(xi, 0.0), c);
            }
        }
        m
    }
}

/// minimize `c . x` subject to every block PSD and `A x = b`.
#[derive(Clone, Debug)]
pub struct SdpProblem {
    pub objective: Vec<f64>,
    pub blocks: Vec<AffineBlock>,
    pub eq_a: Vec<Vec<f64>>,
    pub eq_b: Vec<f64>,
}

impl SdpProblem {
    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn total_block_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim()).sum()
    }

    fn validate(&self) -> Result<()> {
        let m = self.n_vars();
        if self.blocks.iter().any(|b| b.n_vars() != m) {
            return Err(Error::Shape("block variable count mismatch".into()));
        }
        if self.eq_a.len() != self.eq_b.len() || self.eq_a.iter().any(|r| r.len() != m) {
            return Err(Error::Shape("equality constraint shape mismatch".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    /// The objective decreases without bound over the feasible set (for
    /// sampled witness programs: too few sampled constraints to bound it).
    Unbounded,
    MaxIterations,
    NumericalTrouble,
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub tol_feas: f64,
    pub tol_gap: f64,
    /// Iteration budget: Newton steps per phase-1 centering stage, and total
    /// primal-dual iterations in phase 2.
    pub max_iter: usize,
    /// Strictly feasible point satisfying the equalities; skips phase 1.
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol_feas: 1e-8, tol_gap: 1e-7, max_iter: 200, warm_start: None }
    }
}

#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: SolveStatus,
    /// Smallest block eigenvalue at `x`, re-verified by an independent
    /// eigendecomposition rather than solver internals.
    pub worst_block_min_eig: f64,
    pub eq_residual: f64,
    pub newton_iterations: usize,
    /// Complementarity gap `<Z, F(x)>` against the dual iterate at
    /// termination.
    pub duality_gap_bound: f64,
}

const BARRIER_T0: f64 = 1.0;
const BARRIER_MU: f64 = 10.0;
const NEWTON_DECREMENT_TOL: f64 = 1e-10;
const CENTERED_DECREMENT_MAX: f64 = 1e-2;
const ARMIJO: f64 = 0.25;
const MIN_STEP: f64 = 1e-13;

/// Solves the program. Infeasibility, iteration exhaustion, and numerical
/// failure are reported in the status, never silently.
pub fn solve(problem: &SdpProblem, opts: &SolveOptions) -> Result<SdpSolution> {
    problem.validate()?;
    let m = problem.n_vars();

    let elim = match eliminate_equalities(&problem.eq_a, &problem.eq_b, m) {
        Some(e) => e,
        None => return Ok(failed_solution(problem, vec![0.0; m], SolveStatus::Infeasible, 0)),
    };

    if problem.blocks.is_empty() {
        // no barrier; the program is a bare LP over an affine set and is
        // unbounded unless the reduced objective vanishes
        return Ok(failed_solution(problem, elim.x0.clone(), SolveStatus::NumericalTrouble, 0));
    }

    let reduced = ReducedProblem::build(problem, &elim);
    let mut iters_used = 0usize;

    // starting interior point
    let mut y = match opts.warm_start.as_ref().and_then(|x| elim.project(x)) {
        Some(y) if reduced.strictly_feasible(&y) => y,
        _ => match phase_one(&reduced, opts, &mut iters_used) {
            PhaseOne::Feasible(y) => y,
            PhaseOne::Infeasible => {
                return Ok(failed_solution(problem, elim.x0.clone(), SolveStatus::Infeasible, iters_used))
            }
            PhaseOne::Failed(status) => {
                return Ok(failed_solution(problem, elim.x0.clone(), status, iters_used))
            }
        },
    };

    // phase 2: primal-dual interior-point iteration
    let (status, gap) = hkm_phase2(&reduced, &mut y, opts, &mut iters_used);

    let x = elim.expand(&y);
    let mut sol = finish(problem, x, status, iters_used)?;
    sol.duality_gap_bound = gap;
    if sol.status == SolveStatus::Optimal
        && (sol.worst_block_min_eig < -opts.tol_feas || sol.eq_residual > 1e-9)
    {
        sol.status = SolveStatus::NumericalTrouble;
    }
    Ok(sol)
}

fn failed_solution(
    problem: &SdpProblem,
    x: Vec<f64>,
    status: SolveStatus,
    iters: usize,
) -> SdpSolution {
    let objective = dot(&problem.objective, &x);
    SdpSolution {
        x,
        objective,
        status,
        worst_block_min_eig: f64::NEG_INFINITY,
        eq_residual: f64::INFINITY,
        newton_iterations: iters,
        duality_gap_bound: f64::INFINITY,
    }
}

fn finish(
    problem: &SdpProblem,
    x: Vec<f64>,
    status: SolveStatus,
    iters: usize,
) -> Result<SdpSolution> {
    let mut worst = f64::INFINITY;
    for block in &problem.blocks {
        let f = block.eval(&x).hermitized();
        worst = worst.min(linalg::min_eig(&f)?);
    }
    let mut eq_res = 0.0f64;
    for (row, &rhs) in problem.eq_a.iter().zip(&problem.eq_b) {
        eq_res += (dot(row, &x) - rhs).powi(2);
    }
    Ok(SdpSolution {
        objective: dot(&problem.objective, &x),
        x,
        status,
        worst_block_min_eig: worst,
        eq_residual: eq_res.sqrt(),
        newton_iterations: iters,
        duality_gap_bound: f64::NAN,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// equality elimination

struct Elimination {
    x0: Vec<f64>,
    /// columns of the null-space basis; `selector[j] = Some(i)` when column j
    /// is the standard basis vector e_i (fast path used by witness programs).
    z_cols: Vec<Vec<f64>>,
    selector: Vec<Option<usize>>,
}

impl Elimination {
    fn n_reduced(&self) -> usize {
        self.z_cols.len()
    }

    fn expand(&self, y: &[f64]) -> Vec<f64> {
        let mut x = self.x0.clone();
        for (col, &yj) in self.z_cols.iter().zip(y) {
            for (xi, &zij) in x.iter_mut().zip(col) {
                *xi += yj * zij;
            }
        }
        x
    }

    /// Least-squares recovery of reduced coordinates for a point expected to
    /// satisfy the equalities; returns None if the recovery is inconsistent.
    fn project(&self, x: &[f64]) -> Option<Vec<f64>> {
        if x.len() != self.x0.len() {
            return None;
        }
        let k = self.n_reduced();
        let diff: Vec<f64> = x.iter().zip(&self.x0).map(|(a, b)| a - b).collect();
        // normal equations (Z^T Z) y = Z^T diff
        let mut gram = vec![0.0; k * k];
        let mut rhs = vec![0.0; k];
        for i in 0..k {
            rhs[i] = dot(&self.z_cols[i], &diff);
            for j in i..k {
                let v = dot(&self.z_cols[i], &self.z_cols[j]);
                gram[i * k + j] = v;
                gram[j * k + i] = v;
            }
        }
        let y = solve_sym(&mut gram, &rhs, k)?;
        // confirm the expansion actually reproduces x
        let back = self.expand(&y);
        let err: f64 = back.iter().zip(x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale: f64 = x.iter().map(|v| v.abs()).fold(1.0, f64::max);
        (err <= 1e-8 * scale).then_some(y)
    }
}

/// Gauss-Jordan elimination of `A x = b`; returns None when inconsistent.
fn eliminate_equalities(a: &[Vec<f64>], b: &[f64], m: usize) -> Option<Elimination> {
    let n_eq = a.len();
    if n_eq == 0 {
        return Some(Elimination {
            x0: vec![0.0; m],
            z_cols: (0..m)
                .map(|i| {
                    let mut c = vec![0.0; m];
                    c[i] = 1.0;
                    c
                })
                .collect(),
            selector: (0..m).map(Some).collect(),
        });
    }
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let scale = aug
        .iter()
        .flat_map(|r| r.iter().map(|v| v.abs()))
        .fold(1.0f64, f64::max);
    let tol = 1e-12 * scale;

    let mut pivot_cols = Vec::new();
    let mut row = 0usize;
    for col in 0..m {
        let Some(best) = (row..n_eq).max_by(|&i, &j| {
            aug[i][col].abs().partial_cmp(&aug[j][col].abs()).unwrap()
        }) else {
            break;
        };
        if aug[best][col].abs() <= tol {
            continue;
        }
        aug.swap(row, best);
        let p = aug[row][col];
        for v in aug[row].iter_mut() {
            *v /= p;
        }
        for r in 0..n_eq {
            if r != row && aug[r][col].abs() > 0.0 {
                let f = aug[r][col];
                for c in 0..=m {
                    let sub = f * aug[row][c];
                    aug[r][c] -= sub;
                }
            }
        }
        pivot_cols.push(col);
        row += 1;
        if row == n_eq {
            break;
        }
    }
    // inconsistent system: zero row with nonzero rhs
    for r in row..n_eq {
        if aug[r][m].abs() > tol && aug[r][..m].iter().all(|v| v.abs() <= tol) {
            return None;
        }
    }

    let mut x0 = vec![0.0; m];
    for (r, &pc) in pivot_cols.iter().enumerate() {
        x0[pc] = aug[r][m];
    }
    let free_cols: Vec<usize> = (0..m).filter(|c| !pivot_cols.contains(c)).collect();
    let mut z_cols = Vec::with_capacity(free_cols.len());
    let mut selector = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut col = vec![0.0; m];
        col[fc] = 1.0;
        let mut pure = true;
        for (r, &pc) in pivot_cols.iter().enumerate() {
            col[pc] = -aug[r][fc];
            if aug[r][fc].abs() > tol {
                pure = false;
            }
        }
        selector.push(pure.then_some(fc));
        z_cols.push(col);
    }
    Some(Elimination { x0, z_cols, selector })
}

/// Dense symmetric positive-definite solve via Cholesky; the matrix is
/// consumed. Returns None when the factorization breaks down.
fn solve_sym(h: &mut [f64], g: &[f64], n: usize) -> Option<Vec<f64>> {
    // in-place lower Cholesky
    for j in 0..n {
        let mut d = h[j * n + j];
        for k in 0..j {
            d -= h[j * n + k] * h[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        h[j * n + j] = d;
        for i in (j + 1)..n {
            let mut v = h[i * n + j];
            for k in 0..j {
                v -= h[i * n + k] * h[j * n + k];
            }
            h[i * n + j] = v / d;
        }
    }
    // forward then backward substitution
    let mut x = g.to_vec();
    for i in 0..n {
        for k in 0..i {
            x[i] -= h[i * n + k] * x[k];
        }
        x[i] /= h[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            x[i] -= h[k * n + i] * x[k];
        }
        x[i] /= h[i * n + i];
    }
    Some(x)
}

// ---------------------------------------------------------------------------
// reduced problem and barrier machinery

/// One LMI block with its affine map rewritten in reduced coordinates,
/// stored flat for the inner loops.
struct ReducedBlock {
    b: usize,
    g0: Vec<C64>,
    /// k-th coefficient at `coeffs[k*b*b ..][..b*b]`
    coeffs: Vec<C64>,
}

struct ReducedProblem {
    k: usize,
    objective: Vec<f64>,
    blocks: Vec<ReducedBlock>,
}

impl ReducedProblem {
    fn build(problem: &SdpProblem, elim: &Elimination) -> Self {
        let k = elim.n_reduced();
        let objective: Vec<f64> =
            elim.z_cols.iter().map(|col| dot(col, &problem.objective)).collect();
        let blocks = problem
            .blocks
            .iter()
            .map(|block| {
                let b = block.dim();
                let bb = b * b;
                let mut g0 = block.f0.hermitized().as_slice().to_vec();
                for (i, &xi) in elim.x0.iter().enumerate() {
                    if xi != 0.0 {
                        axpy_c(&mut g0, xi, block.coeffs[i].as_slice());
                    }
                }
                let mut coeffs = vec![Complex64::new(0.0, 0.0); k * bb];
                for (j, col) in elim.z_cols.iter().enumerate() {
                    let dst = &mut coeffs[j * bb..(j + 1) * bb];
                    if let Some(i) = elim.selector[j] {
                        dst.copy_from_slice(block.coeffs[i].as_slice());
                    } else {
                        for (i, &zij) in col.iter().enumerate() {
                            if zij != 0.0 {
                                axpy_c(dst, zij, block.coeffs[i].as_slice());
                            }
                        }
                    }
                }
                ReducedBlock { b, g0, coeffs }
            })
            .collect();
        Self { k, objective, blocks }
    }

    fn objective_value(&self, y: &[f64]) -> f64 {
        dot(&self.objective, y)
    }

    fn strictly_feasible(&self, y: &[f64]) -> bool {
        let mut scratch = Scratch::new(self.max_block_dim());
        self.blocks.iter().all(|blk| {
            assemble(blk, y, &mut scratch.mat);
            chol_in_place(&mut scratch.mat, blk.b)
        })
    }

    fn max_block_dim(&self) -> usize {
        self.blocks.iter().map(|b| b.b).max().unwrap_or(1)
    }

    /// Barrier objective `t c.y - sum_k log det F_k(y)`; None outside the
    /// domain.
    fn barrier_value(&self, t: f64, y: &[f64], scratch: &mut Scratch) -> Option<f64> {
        let mut f = t * self.objective_value(y);
        for blk in &self.blocks {
            assemble(blk, y, &mut scratch.mat);
            if !chol_in_place(&mut scratch.mat, blk.b) {
                return None;
            }
            for i in 0..blk.b {
                f -= 2.0 * scratch.mat[i * blk.b + i].re.ln();
            }
        }
        Some(f)
    }

    /// Gradient and Hessian of the barrier objective at an interior point.
    fn derivatives(
        &self,
        t: f64,
        y: &[f64],
        grad: &mut [f64],
        hess: &mut [f64],
        scratch: &mut Scratch,
    ) -> bool {
        let k = self.k;
        for (g, &c) in grad.iter_mut().zip(&self.objective) {
            *g = t * c;
        }
        hess.fill(0.0);
        for blk in &self.blocks {
            let b = blk.b;
            let bb = b * b;
            assemble(blk, y, &mut scratch.mat);
            if !chol_in_place(&mut scratch.mat, b) {
                return false;
            }
            invert_lower(&scratch.mat, &mut scratch.linv, b);
            // rows[i] = real coordinates of L^{-1} F_i L^{-†}
            for i in 0..k {
                let fi = &blk.coeffs[i * bb..(i + 1) * bb];
                sandwich(&scratch.linv, fi, &mut scratch.tmp, &mut scratch.et, b);
                let mut tr = 0.0;
                for d in 0..b {
                    tr += scratch.et[d * b + d].re;
                }
                grad[i] -= tr;
                realify(&scratch.et, b, &mut scratch.rows[i * bb..(i + 1) * bb]);
            }
            // H += rows rows^T (upper triangle)
            for i in 0..k {
                let ri = &scratch.rows[i * bb..(i + 1) * bb];
                let hrow = &mut hess[i * k..(i + 1) * k];
                for j in i..k {
                    let rj = &scratch.rows[j * bb..(j + 1) * bb];
                    let mut acc = 0.0;
                    for (a, b) in ri.iter().zip(rj) {
                        acc += a * b;
                    }
                    hrow[j] += acc;
                }
            }
        }
        for i in 0..k {
            for j in 0..i {
                hess[i * k + j] = hess[j * k + i];
            }
        }
        true
    }
}

struct Scratch {
    mat: Vec<C64>,
    linv: Vec<C64>,
    tmp: Vec<C64>,
    et: Vec<C64>,
    rows: Vec<f64>,
}

impl Scratch {
    fn new(b_max: usize) -> Self {
        Self {
            mat: vec![Complex64::new(0.0, 0.0); b_max * b_max],
            linv: vec![Complex64::new(0.0, 0.0); b_max * b_max],
            tmp: vec![Complex64::new(0.0, 0.0); b_max * b_max],
            et: vec![Complex64::new(0.0, 0.0); b_max * b_max],
            rows: Vec::new(),
        }
    }

    fn with_rows(b_max: usize, k: usize) -> Self {
        let mut s = Self::new(b_max);
        s.rows = vec![0.0; k * b_max * b_max];
        s
    }
}

fn axpy_c(dst: &mut [C64], s: f64, src: &[C64]) {
    for (d, &v) in dst.iter_mut().zip(src) {
        *d += v * s;
    }
}

fn assemble(blk: &ReducedBlock, y: &[f64], out: &mut [C64]) {
    let bb = blk.b * blk.b;
    out[..bb].copy_from_slice(&blk.g0);
    for (j, &yj) in y.iter().enumerate() {
        if yj != 0.0 {
            axpy_c(&mut out[..bb], yj, &blk.coeffs[j * bb..(j + 1) * bb]);
        }
    }
}

/// In-place complex Cholesky `M = L L†` on the lower triangle; false when
/// the matrix is not positive definite.
fn chol_in_place(m: &mut [C64], b: usize) -> bool {
    for j in 0..b {
        let mut d = m[j * b + j].re;
        for k in 0..j {
            d -= m[j * b + k].norm_sqr();
        }
        if !(d > 0.0) {
            return false;
        }
        let d = d.sqrt();
        m[j * b + j] = Complex64::new(d, 0.0);
        for i in (j + 1)..b {
            let mut v = m[i * b + j];
            for k in 0..j {
                v -= m[i * b + k] * m[j * b + k].conj();
            }
            m[i * b + j] = v / d;
        }
    }
    true
}

/// Inverse of a lower-triangular factor (only the lower triangle of `l` is
/// read).
fn invert_lower(l: &[C64], out: &mut [C64], b: usize) {
    for v in out[..b * b].iter_mut() {
        *v = Complex64::new(0.0, 0.0);
    }
    for j in 0..b {
        out[j * b + j] = Complex64::new(1.0 / l[j * b + j].re, 0.0);
        for i in (j + 1)..b {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in j..i {
                acc += l[i * b + k] * out[k * b + j];
            }
            out[i * b + j] = -acc / l[i * b + i].re;
        }
    }
}

/// `et = linv * f * linv†` for Hermitian `f` (linv lower triangular).
fn sandwich(linv: &[C64], f: &[C64], tmp: &mut [C64], et: &mut [C64], b: usize) {
    // tmp = linv * f ; linv[i][k] nonzero only for k <= i
    for i in 0..b {
        for j in 0..b {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=i {
                acc += linv[i * b + k] * f[k * b + j];
            }
            tmp[i * b + j] = acc;
        }
    }
    // et = tmp * linv† ; (linv†)[k][j] = conj(linv[j][k]), nonzero for k <= j
    for i in 0..b {
        for j in 0..b {
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..=j {
                acc += tmp[i * b + k] * linv[j * b + k].conj();
            }
            et[i * b + j] = acc;
        }
    }
}

/// Real coordinates of a Hermitian matrix in an orthonormal layout, so that
/// `Tr(A B) = realify(A) . realify(B)`.
fn realify(et: &[C64], b: usize, out: &mut [f64]) {
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut idx = 0;
    for i in 0..b {
        out[idx] = et[i * b + i].re;
        idx += 1;
    }
    for i in 0..b {
        for j in (i + 1)..b {
            let z = et[i * b + j];
            out[idx] = sqrt2 * z.re;
            out[idx + 1] = sqrt2 * z.im;
            idx += 2;
        }
    }
}

enum CenterOutcome {
    Centered,
    /// The early-stop predicate fired after an accepted step (phase 1 uses
    /// this to leave as soon as the slack is strictly negative, which is
    /// essential because its extended program may be unbounded below).
    EarlyStop,
    IterationsExhausted,
    Stuck,
}

/// Damped Newton minimization of the barrier objective at fixed `t`.
/// `budget` bounds the steps of this centering stage alone.
fn newton_center(
    problem: &ReducedProblem,
    t: f64,
    y: &mut Vec<f64>,
    budget: usize,
    iters_used: &mut usize,
    early_stop: Option<&dyn Fn(&[f64]) -> bool>,
) -> CenterOutcome {
    let k = problem.k;
    let b_max = problem.max_block_dim();
    let mut scratch = Scratch::with_rows(b_max, k);
    let mut grad = vec![0.0; k];
    let mut hess = vec![0.0; k * k];
    let mut hess_work = vec![0.0; k * k];
    let mut steps = 0usize;

    loop {
        if steps >= budget {
            return CenterOutcome::IterationsExhausted;
        }
        if !problem.derivatives(t, y, &mut grad, &mut hess, &mut scratch) {
            return CenterOutcome::Stuck;
        }
        // Newton direction, with an escalating ridge if the Hessian loses
        // definiteness to roundoff
        let mut ridge = 0.0f64;
        let trace: f64 = (0..k).map(|i| hess[i * k + i]).sum::<f64>().max(1e-300);
        let dir = loop {
            hess_work.copy_from_slice(&hess);
            if ridge > 0.0 {
                for i in 0..k {
                    hess_work[i * k + i] += ridge;
                }
            }
            let neg_grad: Vec<f64> = grad.iter().map(|g| -g).collect();
            match solve_sym(&mut hess_work, &neg_grad, k) {
                Some(d) => break Some(d),
                None => {
                    ridge = if ridge == 0.0 { 1e-14 * trace / k as f64 } else { ridge * 100.0 };
                    if ridge > trace {
                        break None;
                    }
                }
            }
        };
        let Some(mut dir) = dir else {
            return CenterOutcome::Stuck;
        };

        // a near-singular Hessian (rank-deficient phase-1 programs) can emit
        // astronomically long directions along its null space; progress along
        // them is linear, so capping the length loses nothing
        let dir_norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
        let cap = 1e3 * (1.0 + y.iter().map(|v| v * v).sum::<f64>().sqrt());
        if dir_norm > cap {
            let scale = cap / dir_norm;
            for d in dir.iter_mut() {
                *d *= scale;
            }
        }

        let gd = dot(&grad, &dir);
        let decrement_sq = -gd;
        let f0 = match problem.barrier_value(t, y, &mut scratch) {
            Some(f) => f,
            None => return CenterOutcome::Stuck,
        };
        // scale-aware stopping: rounding noise in a barrier value of
        // magnitude |f0| bounds the achievable decrement, and a decrement
        // of lambda^2 <= 1e-2 already certifies the m/t gap bound
        let tol = (NEWTON_DECREMENT_TOL * (1.0 + f0.abs())).min(CENTERED_DECREMENT_MAX);
        if decrement_sq <= tol {
            return CenterOutcome::Centered;
        }
        let mut alpha = 1.0f64;
        let mut trial: Vec<f64> = y.clone();
        loop {
            for ((t, &yi), &di) in trial.iter_mut().zip(y.iter()).zip(&dir) {
                *t = yi + alpha * di;
            }
            match problem.barrier_value(t, &trial, &mut scratch) {
                Some(f) if f <= f0 + ARMIJO * alpha * gd => break,
                _ => {
                    alpha *= 0.5;
                    if alpha < MIN_STEP {
                        // cannot make progress; accept the point as centered
                        // when the decrement is already small, else give up
                        return if decrement_sq <= CENTERED_DECREMENT_MAX {
                            CenterOutcome::Centered
                        } else {
                            CenterOutcome::Stuck
                        };
                    }
                }
            }
        }
        *y = trial;
        *iters_used += 1;
        steps += 1;
        if let Some(stop) = early_stop {
            if stop(y) {
                return CenterOutcome::EarlyStop;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// phase 2: primal-dual interior point

/// `out = a * b` for dense `b x b` complex matrices stored flat.
fn mul_into(a: &[C64], rhs: &[C64], out: &mut [C64], b: usize) {
    for i in 0..b {
        for j in 0..b {
            let mut acc = Complex64::new(0.0, 0.0);
            for p in 0..b {
                acc += a[i * b + p] * rhs[p * b + j];
            }
            out[i * b + j] = acc;
        }
    }
}

/// Replaces `m` with its Hermitian part `(m + m†) / 2`.
fn hermitize_flat(m: &mut [C64], b: usize) {
    for i in 0..b {
        m[i * b + i] = Complex64::new(m[i * b + i].re, 0.0);
        for j in (i + 1)..b {
            let v = (m[i * b + j] + m[j * b + i].conj()) * 0.5;
            m[i * b + j] = v;
            m[j * b + i] = v.conj();
        }
    }
}

/// `Re <A, B> = Re Tr(A† B)` for flat matrices (real for Hermitian pairs).
fn re_inner(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

fn min_eig_flat(m: &[C64], b: usize) -> Option<f64> {
    let mat = ComplexMatrix::from_fn(b, b, |i, j| m[i * b + j]).hermitized();
    linalg::min_eig(&mat).ok()
}

/// Largest `alpha <= 1` keeping `M + alpha * delta` positive definite, given
/// the inverse Cholesky factor of `M`; a 1% back-off from the exact boundary.
fn step_to_boundary(
    linv: &[C64],
    delta: &[C64],
    tmp: &mut [C64],
    et: &mut [C64],
    b: usize,
) -> Option<f64> {
    sandwich(linv, delta, tmp, et, b);
    let lam = min_eig_flat(et, b)?;
    Some(if lam < -1e-14 { (0.99 / -lam).min(1.0) } else { 1.0 })
}

/// Primal-dual path following with the HKM search direction.
///
/// Maintains a strictly feasible primal point `y` (every block
/// `S = G(y) > 0`) and a positive definite dual block matrix `Z` per LMI
/// block, and drives the complementarity gap `<Z, S>` and the dual equality
/// residual to zero together. Each iteration linearizes
/// `Z S = sigma * mu * I` in `(dy, dZ)`, eliminates `dZ`, and solves the
/// resulting Schur complement `M[j2][j] = Re Tr(G_j2 Z G_j S^{-1})`
/// (symmetrized) for `dy`; separate primal and dual step lengths stop 1%
/// short of the positive-definite boundary. Converges in a few dozen
/// iterations independent of the number of blocks, unlike pure barrier
/// path-following whose per-stage Newton count grows with the total block
/// dimension.
fn hkm_phase2(
    reduced: &ReducedProblem,
    y: &mut Vec<f64>,
    opts: &SolveOptions,
    iters_used: &mut usize,
) -> (SolveStatus, f64) {
    let k = reduced.k;
    let m_total: f64 = reduced.blocks.iter().map(|b| b.b as f64).sum();
    if k == 0 {
        return (SolveStatus::Optimal, 0.0);
    }
    let b_max = reduced.max_block_dim();
    let c_scale = reduced.objective.iter().fold(1.0f64, |a, &v| a.max(v.abs()));

    // realified coefficients per block, fixed across iterations, for the
    // Schur-complement inner products
    let gr: Vec<Vec<f64>> = reduced
        .blocks
        .iter()
        .map(|blk| {
            let bb = blk.b * blk.b;
            let mut rows = vec![0.0; k * bb];
            for j in 0..k {
                realify(&blk.coeffs[j * bb..(j + 1) * bb], blk.b, &mut rows[j * bb..(j + 1) * bb]);
            }
            rows
        })
        .collect();

    let zero_block = |blk: &ReducedBlock| vec![Complex64::new(0.0, 0.0); blk.b * blk.b];
    let mut z: Vec<Vec<C64>> = reduced
        .blocks
        .iter()
        .map(|blk| {
            let mut m = zero_block(blk);
            for d in 0..blk.b {
                m[d * blk.b + d] = Complex64::new(1.0, 0.0);
            }
            m
        })
        .collect();
    let mut s_store: Vec<Vec<C64>> = reduced.blocks.iter().map(zero_block).collect();
    let mut linv_store = s_store.clone();
    let mut sinv_store = s_store.clone();
    let mut ds_store = s_store.clone();
    let mut dz_store = s_store.clone();

    let mut t1 = vec![Complex64::new(0.0, 0.0); b_max * b_max];
    let mut t2 = t1.clone();
    let mut t3 = t1.clone();
    let mut hxr = vec![0.0; b_max * b_max];
    let mut m_mat = vec![0.0; k * k];
    let mut m_work = vec![0.0; k * k];
    let mut s_vec = vec![0.0; k];
    let mut rhs = vec![0.0; k];
    let mut alpha_prev = 1.0f64;
    let mut gap = f64::INFINITY;
    let obj0 = reduced.objective_value(y);

    for _ in 0..opts.max_iter {
        // factor every block at the current primal point
        for (bi, blk) in reduced.blocks.iter().enumerate() {
            let b = blk.b;
            let bb = b * b;
            assemble(blk, y, &mut s_store[bi]);
            t1[..bb].copy_from_slice(&s_store[bi]);
            if !chol_in_place(&mut t1, b) {
                return (SolveStatus::NumericalTrouble, gap);
            }
            invert_lower(&t1, &mut linv_store[bi], b);
            // S^{-1} = linv† linv
            let (linv, sinv) = (&linv_store[bi], &mut sinv_store[bi]);
            for i in 0..b {
                for j in 0..b {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for p in i.max(j)..b {
                        acc += linv[p * b + i].conj() * linv[p * b + j];
                    }
                    sinv[i * b + j] = acc;
                }
            }
        }

        gap = 0.0;
        for (bi, _) in reduced.blocks.iter().enumerate() {
            gap += re_inner(&z[bi], &s_store[bi]);
        }
        let obj = reduced.objective_value(y);
        if !gap.is_finite() || !obj.is_finite() {
            return (SolveStatus::NumericalTrouble, gap);
        }
        // feasibility is maintained exactly, so a diverging objective means
        // the program is unbounded below (dual infeasible)
        if obj < -1e10 * (1.0 + obj0.abs()) {
            return (SolveStatus::Unbounded, gap);
        }
        let mut rd_max = 0.0f64;
        for j in 0..k {
            let mut zg = 0.0;
            for (bi, blk) in reduced.blocks.iter().enumerate() {
                let bb = blk.b * blk.b;
                zg += re_inner(&z[bi], &blk.coeffs[j * bb..(j + 1) * bb]);
            }
            rd_max = rd_max.max((reduced.objective[j] - zg).abs());
        }
        if gap <= opts.tol_gap * obj.abs().max(1.0) && rd_max <= 1e-7 * c_scale {
            return (SolveStatus::Optimal, gap);
        }

        let mu = gap / m_total;
        // centering weight: aggressive after long steps, cautious after
        // blocked ones
        let sigma = (1.0 - alpha_prev).powi(2).clamp(0.05, 0.8);

        // Schur complement M and the trace vector s_j = <S^{-1}, G_j>
        m_mat.fill(0.0);
        s_vec.fill(0.0);
        for (bi, blk) in reduced.blocks.iter().enumerate() {
            let b = blk.b;
            let bb = b * b;
            let sinv = &sinv_store[bi];
            let zb = &z[bi];
            let grb = &gr[bi];
            for j in 0..k {
                let gj = &blk.coeffs[j * bb..(j + 1) * bb];
                s_vec[j] += re_inner(sinv, gj);
                // X = Hsym(Z G_j S^{-1})
                mul_into(zb, gj, &mut t1, b);
                mul_into(&t1, sinv, &mut t2, b);
                hermitize_flat(&mut t2, b);
                realify(&t2, b, &mut hxr[..bb]);
                for j2 in 0..k {
                    let g2 = &grb[j2 * bb..(j2 + 1) * bb];
                    let mut acc = 0.0;
                    for (u, v) in g2.iter().zip(&hxr[..bb]) {
                        acc += u * v;
                    }
                    m_mat[j2 * k + j] += acc;
                }
            }
        }
        for i in 0..k {
            for j in (i + 1)..k {
                let v = 0.5 * (m_mat[i * k + j] + m_mat[j * k + i]);
                m_mat[i * k + j] = v;
                m_mat[j * k + i] = v;
            }
        }
        for j in 0..k {
            rhs[j] = sigma * mu * s_vec[j] - reduced.objective[j];
        }

        // solve M dy = rhs with an escalating ridge against roundoff
        let trace: f64 = (0..k).map(|i| m_mat[i * k + i]).sum::<f64>().max(1e-300);
        let mut ridge = 0.0f64;
        let dy = loop {
            m_work.copy_from_slice(&m_mat);
            if ridge > 0.0 {
                for i in 0..k {
                    m_work[i * k + i] += ridge;
                }
            }
            match solve_sym(&mut m_work, &rhs, k) {
                Some(d) => break d,
                None => {
                    ridge = if ridge == 0.0 { 1e-14 * trace / k as f64 } else { ridge * 100.0 };
                    if ridge > trace {
                        return (SolveStatus::NumericalTrouble, gap);
                    }
                }
            }
        };

        // dZ per block and the largest steps keeping S and Z definite
        let mut alpha_p = 1.0f64;
        let mut alpha_d = 1.0f64;
        for (bi, blk) in reduced.blocks.iter().enumerate() {
            let b = blk.b;
            let bb = b * b;
            let ds = &mut ds_store[bi];
            ds.fill(Complex64::new(0.0, 0.0));
            for (j, &dj) in dy.iter().enumerate() {
                if dj != 0.0 {
                    axpy_c(ds, dj, &blk.coeffs[j * bb..(j + 1) * bb]);
                }
            }
            // dZ = sigma mu S^{-1} - Z - Hsym(Z dS S^{-1})
            mul_into(&z[bi], ds, &mut t1, b);
            mul_into(&t1, &sinv_store[bi], &mut t2, b);
            hermitize_flat(&mut t2, b);
            let dz = &mut dz_store[bi];
            for idx in 0..bb {
                dz[idx] = sinv_store[bi][idx] * (sigma * mu) - z[bi][idx] - t2[idx];
            }
            let Some(ap) = step_to_boundary(&linv_store[bi], ds, &mut t1, &mut t2, b) else {
                return (SolveStatus::NumericalTrouble, gap);
            };
            alpha_p = alpha_p.min(ap);
            // dual blocks of inactive constraints shrink toward zero and can
            // lose numerical definiteness; the factor is only used for the
            // step length, so jitter the diagonal until it factors
            let z_diag_max =
                (0..b).map(|d| z[bi][d * b + d].re).fold(1e-300f64, f64::max);
            let mut jitter = 0.0f64;
            loop {
                t1[..bb].copy_from_slice(&z[bi]);
                if jitter > 0.0 {
                    for d in 0..b {
                        t1[d * b + d] += jitter;
                    }
                }
                if chol_in_place(&mut t1, b) {
                    break;
                }
                jitter = if jitter == 0.0 { 1e-15 * z_diag_max } else { jitter * 100.0 };
                if jitter > z_diag_max {
                    return (SolveStatus::NumericalTrouble, gap);
                }
            }
            invert_lower(&t1, &mut t3, b);
            let Some(ad) = step_to_boundary(&t3, dz, &mut t1, &mut t2, b) else {
                return (SolveStatus::NumericalTrouble, gap);
            };
            alpha_d = alpha_d.min(ad);
        }

        for (yj, &dj) in y.iter_mut().zip(&dy) {
            *yj += alpha_p * dj;
        }
        for (bi, blk) in reduced.blocks.iter().enumerate() {
            axpy_c(&mut z[bi], alpha_d, &dz_store[bi]);
            hermitize_flat(&mut z[bi], blk.b);
        }
        alpha_prev = alpha_p.min(alpha_d);
        *iters_used += 1;
    }
    (SolveStatus::MaxIterations, gap)
}

enum PhaseOne {
    Feasible(Vec<f64>),
    Infeasible,
    Failed(SolveStatus),
}

/// Minimizes an auxiliary slack `s` over `F(y) + s I >= 0`; declares strict
/// feasibility as soon as `s < -tol_feas` on the central path.
fn phase_one(reduced: &ReducedProblem, opts: &SolveOptions, iters_used: &mut usize) -> PhaseOne {
    let k = reduced.k;
    // extended problem over (y, s)
    let blocks: Vec<ReducedBlock> = reduced
        .blocks
        .iter()
        .map(|blk| {
            let b = blk.b;
            let bb = b * b;
            let mut coeffs = blk.coeffs.clone();
            coeffs.resize((k + 1) * bb, Complex64::new(0.0, 0.0));
            for d in 0..b {
                coeffs[k * bb + d * b + d] = Complex64::new(1.0, 0.0);
            }
            ReducedBlock { b, g0: blk.g0.clone(), coeffs }
        })
        .collect();
    let mut objective = vec![0.0; k + 1];
    objective[k] = 1.0;
    let ext = ReducedProblem { k: k + 1, objective, blocks };

    // s0 makes every block comfortably positive definite
    let mut s0 = 1.0f64;
    for blk in &reduced.blocks {
        let b = blk.b;
        let m = ComplexMatrix::from_fn(b, b, |i, j| blk.g0[i * b + j]).hermitized();
        if let Ok(lam) = linalg::min_eig(&m) {
            s0 = s0.max(1.0 - lam);
        } else {
            return PhaseOne::Failed(SolveStatus::NumericalTrouble);
        }
    }
    let mut y = vec![0.0; k + 1];
    y[k] = s0;

    let m_total: f64 = reduced.blocks.iter().map(|b| b.b as f64).sum();
    let mut t = BARRIER_T0;
    // leave as soon as the slack is strictly negative: the extended program
    // can be unbounded below, in which case centering would never terminate
    let stop = |y: &[f64]| y[k] < -opts.tol_feas;
    loop {
        let outcome = newton_center(&ext, t, &mut y, opts.max_iter, iters_used, Some(&stop));
        let s = y[k];
        if s < -opts.tol_feas {
            let point = y[..k].to_vec();
            if reduced.strictly_feasible(&point) {
                return PhaseOne::Feasible(point);
            }
            return PhaseOne::Failed(SolveStatus::NumericalTrouble);
        }
        match outcome {
            CenterOutcome::Centered => {}
            CenterOutcome::EarlyStop => unreachable!("early stop implies s < -tol_feas"),
            CenterOutcome::IterationsExhausted => {
                return PhaseOne::Failed(SolveStatus::MaxIterations)
            }
            CenterOutcome::Stuck => return PhaseOne::Failed(SolveStatus::NumericalTrouble),
        }
        if m_total / t <= opts.tol_gap * s.abs().max(1.0) {
            // converged without ever reaching s < -tol_feas
            return PhaseOne::Infeasible;
        }
        t *= BARRIER_MU;
    }
}
