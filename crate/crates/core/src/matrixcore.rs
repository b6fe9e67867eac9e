//! Dense complex linear algebra for qudit registers.
//!
//! Qudit `1` is the most significant digit: basis state `|i_1 ... i_n>` sits at
//! index `sum_k i_k d^(n-k)`. Operators acting on a few neighbouring qudits are
//! applied in place on the amplitude buffer instead of materialising
//! `1 ⊗ U ⊗ 1`.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub use num_complex::Complex64 as C64;

pub type ComplexMatrix = DMatrix<C64>;

/// Invariant tolerance for constructed objects (unitarity, normalisation).
pub const INVARIANT_TOL: f64 = 1e-12;
/// Tolerance for verification residuals.
pub const VERIFY_TOL: f64 = 1e-10;
/// Largest condition number accepted when sampling SL(d, C).
pub const MAX_SL_CONDITION: f64 = 100.0;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Frobenius norm of `U^† U - 1`.
pub fn unitarity_residual(m: &ComplexMatrix) -> f64 {
    let mut g = m.ad_mul(m);
    for i in 0..g.nrows() {
        g[(i, i)] -= ONE;
    }
    g.norm()
}

/// A square matrix with `U^† U = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix(ComplexMatrix);

impl UnitaryMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(m, INVARIANT_TOL)
    }

    pub fn with_tolerance(m: ComplexMatrix, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Domain(format!(
                "unitary must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let residual = unitarity_residual(&m);
        if residual >= tol {
            return Err(Error::Domain(format!(
                "matrix is not unitary: residual {residual:e} >= {tol:e}"
            )));
        }
        Ok(Self(m))
    }

    /// Wraps `m` without checking; callers vouch for unitarity.
    pub(crate) fn new_unchecked(m: ComplexMatrix) -> Self {
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

impl Deref for UnitaryMatrix {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

/// A pure state. Normalised on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    /// Wraps amplitudes that must already have unit norm.
    pub fn new(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() >= INVARIANT_TOL {
            return Err(Error::Domain(format!("state norm is {norm}, expected 1")));
        }
        Ok(Self(amplitudes))
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(amplitudes: DVector<C64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::Degenerate(format!(
                "cannot normalise vector of norm {norm}"
            )));
        }
        Ok(Self(amplitudes / C64::from(norm)))
    }

    /// Wraps amplitudes produced by a norm-preserving map, or by a
    /// non-unitary one before renormalisation.
    pub(crate) fn from_raw(amplitudes: DVector<C64>) -> Self {
        Self(amplitudes)
    }

    /// Computational basis state `e_index` in dimension `dim`.
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::from_element(dim, ZERO);
        v[index] = ONE;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<C64> {
        self.0
    }

    /// `self ⊗ other`.
    pub fn tensor(&self, other: &StateVector) -> StateVector {
        StateVector(self.0.kronecker(&other.0))
    }

    /// Tensor product of `factors` in order.
    pub fn product(factors: &[StateVector]) -> Result<StateVector> {
        let (first, rest) = factors
            .split_first()
            .ok_or_else(|| Error::Domain("empty product state".into()))?;
        Ok(rest.iter().fold(first.clone(), |acc, f| acc.tensor(f)))
    }

    /// Uniformly random pure state (normalised complex Gaussian vector).
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
        let v = DVector::from_fn(dim, |_, _| complex_gaussian(rng));
        let norm = v.norm();
        StateVector(v / C64::from(norm))
    }
}

impl Deref for StateVector {
    type Target = DVector<C64>;

    fn deref(&self) -> &DVector<C64> {
        &self.0
    }
}

/// A Hermitian, positive, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(ComplexMatrix);

impl DensityMatrix {
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Domain("density matrix must be square".into()));
        }
        let hermiticity = (&m - m.adjoint()).norm();
        if hermiticity >= INVARIANT_TOL {
            return Err(Error::Domain(format!(
                "density matrix not Hermitian: {hermiticity:e}"
            )));
        }
        let trace = m.trace();
        if (trace - ONE).norm() >= INVARIANT_TOL {
            return Err(Error::Domain(format!("density matrix trace is {trace}")));
        }
        let min_eig = min_hermitian_eigenvalue(&m);
        if min_eig < -VERIFY_TOL {
            return Err(Error::Domain(format!(
                "density matrix has eigenvalue {min_eig:e}"
            )));
        }
        Ok(Self(m))
    }

    /// `|psi><psi|`.
    pub fn pure(psi: &StateVector) -> Self {
        Self(psi.0.clone() * psi.0.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_inner(self) -> ComplexMatrix {
        self.0
    }
}

impl Deref for DensityMatrix {
    type Target = ComplexMatrix;

    fn deref(&self) -> &ComplexMatrix {
        &self.0
    }
}

pub fn min_hermitian_eigenvalue(m: &ComplexMatrix) -> f64 {
    let h = (m + m.adjoint()) * C64::from(0.5);
    h.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Kronecker product `a ⊗ b`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

/// `w^{⊗n}` as a dense matrix.
pub fn collective_error(w: &ComplexMatrix, n: usize) -> Result<ComplexMatrix> {
    if !w.is_square() {
        return Err(Error::Domain("single-qudit error must be square".into()));
    }
    if n == 0 {
        return Err(Error::Domain("collective error needs n >= 1".into()));
    }
    Ok((1..n).fold(w.clone(), |acc, _| kron(&acc, w)))
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub(crate) fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Deterministic RNG for a seed.
pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Per-item seed derived from a master seed (splitmix64 finaliser), so
/// results do not depend on execution order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(index.wrapping_mul(0xbf58_476d_1ce4_e5b9));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn check_group_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(())
}

/// Haar-random element of SU(d) drawn from `rng`.
pub fn haar_special_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<UnitaryMatrix> {
    check_group_dim(d)?;
    let qr = ginibre(d, d, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for (j, mut col) in q.column_iter_mut().enumerate() {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 {
            rjj / rjj.norm()
        } else {
            ONE
        };
        col *= phase;
    }
    let det = q.determinant();
    q *= det.powf(-1.0 / d as f64);
    UnitaryMatrix::new(q)
}

/// Haar-random element of SU(d), deterministic in `seed`.
pub fn random_special_unitary(d: usize, seed: u64) -> Result<UnitaryMatrix> {
    haar_special_unitary(d, &mut rng_from_seed(seed))
}

/// Determinant-normalised Ginibre sample in SL(d, C), resampled until its
/// condition number is at most [`MAX_SL_CONDITION`].
pub fn sampled_special_linear<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<ComplexMatrix> {
    check_group_dim(d)?;
    loop {
        let g = ginibre(d, d, rng);
        if condition_number(&g) > MAX_SL_CONDITION {
            continue;
        }
        let det = g.determinant();
        if det.norm() == 0.0 {
            continue;
        }
        return Ok(g * det.powf(-1.0 / d as f64));
    }
}

pub fn random_special_linear(d: usize, seed: u64) -> Result<ComplexMatrix> {
    sampled_special_linear(d, &mut rng_from_seed(seed))
}

/// Singular values in descending order.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn condition_number(m: &ComplexMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&max), Some(&min)) if min > 0.0 => max / min,
        _ => f64::INFINITY,
    }
}

/// Unitary factor `U` of the polar decomposition `m = U P`.
pub fn polar_unitary_factor(m: &ComplexMatrix) -> Result<UnitaryMatrix> {
    if !m.is_square() {
        return Err(Error::Domain(
            "polar decomposition needs a square matrix".into(),
        ));
    }
    let svd = m.clone().svd(true, true);
    let s = &svd.singular_values;
    let max = s.max();
    let min = s.min();
    if max.is_nan() || max <= 0.0 || min <= 1e-10 * max {
        return Err(Error::Degenerate(format!(
            "rank-deficient input to polar decomposition (singular values {min:e}..{max:e})"
        )));
    }
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let unitary = u * v_t;
    Ok(UnitaryMatrix::new_unchecked(unitary))
}

/// `exp(i h)` for Hermitian `h`.
pub fn expi_hermitian(h: &ComplexMatrix) -> ComplexMatrix {
    let eig = h.clone().symmetric_eigen();
    let phases = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)),
    );
    let v = &eig.eigenvectors;
    v * ComplexMatrix::from_diagonal(&phases) * v.adjoint()
}

fn check_register(len: usize, d: usize, n: usize) -> Result<()> {
    let expected = d.checked_pow(n as u32);
    if expected != Some(len) {
        return Err(Error::Domain(format!(
            "buffer of length {len} is not a register of {n} qudits of dimension {d}"
        )));
    }
    Ok(())
}

/// Applies `op` (dimension `d^width`) to qudits `start..start+width` of an
/// `n`-qudit amplitude buffer, in place.
pub fn apply_block(
    data: &mut [C64],
    d: usize,
    n: usize,
    start: usize,
    width: usize,
    op: &ComplexMatrix,
) -> Result<()> {
    check_register(data.len(), d, n)?;
    if start + width > n {
        return Err(Error::Domain(format!(
            "qudits {start}..{} out of range for {n} qudits",
            start + width
        )));
    }
    let block = d.pow(width as u32);
    if op.nrows() != block || op.ncols() != block {
        return Err(Error::Domain(format!(
            "operator is {}x{}, expected {block}x{block}",
            op.nrows(),
            op.ncols()
        )));
    }
    let stride = d.pow((n - start - width) as u32);
    let outer = data.len() / (block * stride);
    let mut gathered = vec![ZERO; block];
    for o in 0..outer {
        let base = o * block * stride;
        for inner in 0..stride {
            for (a, g) in gathered.iter_mut().enumerate() {
                *g = data[base + a * stride + inner];
            }
            for r in 0..block {
                let mut acc = ZERO;
                for (c, g) in gathered.iter().enumerate() {
                    acc += op[(r, c)] * g;
                }
                data[base + r * stride + inner] = acc;
            }
        }
    }
    Ok(())
}

/// Applies `w^{⊗n}` to an `n`-qudit buffer, one qudit at a time.
pub fn apply_collective(data: &mut [C64], n: usize, w: &ComplexMatrix) -> Result<()> {
    let d = w.nrows();
    for slot in 0..n {
        apply_block(data, d, n, slot, 1, w)?;
    }
    Ok(())
}

/// `w^{⊗n} m`, acting column by column.
pub fn collective_times(w: &ComplexMatrix, n: usize, m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let mut out = m.clone();
    let rows = out.nrows();
    for col in out.as_mut_slice().chunks_mut(rows) {
        apply_collective(col, n, w)?;
    }
    Ok(out)
}

/// Partial trace of `rho` over the tensor slots not listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let layout = SlotLayout::new(dims, keep, rho.dim())?;
    let mut out = ComplexMatrix::zeros(layout.kept_dim, layout.kept_dim);
    for group in &layout.groups {
        for &(ki, i) in group {
            for &(kj, j) in group {
                out[(ki, kj)] += rho[(i, j)];
            }
        }
    }
    Ok(DensityMatrix(out))
}

/// Reduced state of `psi` on the slots in `keep`; equal to
/// `partial_trace(|psi><psi|)` without forming the full projector.
pub fn reduced_density(psi: &StateVector, dims: &[usize], keep: &[usize]) -> Result<DensityMatrix> {
    let layout = SlotLayout::new(dims, keep, psi.dim())?;
    let mut out = ComplexMatrix::zeros(layout.kept_dim, layout.kept_dim);
    for group in &layout.groups {
        for &(ki, i) in group {
            for &(kj, j) in group {
                out[(ki, kj)] += psi[i] * psi[j].conj();
            }
        }
    }
    Ok(DensityMatrix(out))
}

/// Full indices grouped by their traced-out digits, each tagged with its
/// kept-subsystem index.
struct SlotLayout {
    kept_dim: usize,
    groups: Vec<Vec<(usize, usize)>>,
}

impl SlotLayout {
    fn new(dims: &[usize], keep: &[usize], total: usize) -> Result<Self> {
        if dims.iter().product::<usize>() != total {
            return Err(Error::Domain(format!(
                "slot dimensions {dims:?} do not multiply to {total}"
            )));
        }
        if keep.is_empty() {
            return Err(Error::Domain(
                "partial trace must keep at least one slot".into(),
            ));
        }
        let mut kept = vec![false; dims.len()];
        for &k in keep {
            if k >= dims.len() || kept[k] {
                return Err(Error::Domain(format!("invalid kept slots {keep:?}")));
            }
            kept[k] = true;
        }
        let kept_dim: usize = (0..dims.len())
            .filter(|&s| kept[s])
            .map(|s| dims[s])
            .product();
        let traced_dim = total / kept_dim;
        let mut groups = vec![Vec::with_capacity(kept_dim); traced_dim];
        for i in 0..total {
            let (mut rem, mut k, mut t) = (i, 0, 0);
            let mut k_scale = 1;
            let mut t_scale = 1;
            for s in (0..dims.len()).rev() {
                let digit = rem % dims[s];
                rem /= dims[s];
                if kept[s] {
                    k += digit * k_scale;
                    k_scale *= dims[s];
                } else {
                    t += digit * t_scale;
                    t_scale *= dims[s];
                }
            }
            groups[t].push((k, i));
        }
        Ok(Self { kept_dim, groups })
    }
}

/// `<psi| rho |psi>`, clamped to `[0, 1]`.
pub fn fidelity(rho: &DensityMatrix, psi: &StateVector) -> Result<f64> {
    if rho.dim() != psi.dim() {
        return Err(Error::Domain(format!(
            "density matrix is {0}x{0} but state has dimension {1}",
            rho.dim(),
            psi.dim()
        )));
    }
    let value = (psi.adjoint() * rho.matrix() * psi.amplitudes())[(0, 0)].re;
    Ok(value.clamp(0.0, 1.0))
}

/// Extends the orthonormal columns of `b` to a full unitary whose leading
/// columns are exactly `b`. Uses one Householder reflector per column.
pub fn complete_to_unitary(b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (n, m) = b.shape();
    if m > n {
        return Err(Error::Domain(format!(
            "cannot complete {m} columns in dimension {n}"
        )));
    }
    let mut a = b.clone();
    let mut reflectors: Vec<DVector<C64>> = Vec::with_capacity(m);
    for k in 0..m {
        let x = a.view((k, k), (n - k, 1)).column(0).into_owned();
        let xnorm = x.norm();
        if xnorm < 0.5 {
            return Err(Error::Degenerate(format!(
                "column {k} is not orthonormal to its predecessors"
            )));
        }
        let phase = if x[0].norm() > 0.0 {
            x[0] / x[0].norm()
        } else {
            ONE
        };
        let mut v = x;
        v[0] += phase * xnorm;
        let vnorm2 = v.norm_squared();
        // H = 1 - 2 v v^† / |v|^2 on rows k..
        let mut tail = a.view_mut((k, k), (n - k, m - k));
        let proj = v.adjoint() * &tail;
        tail -= &v * proj * C64::from(2.0 / vnorm2);
        reflectors.push(v);
    }
    let mut q = identity(n);
    for (k, v) in reflectors.iter().enumerate().rev() {
        let vnorm2 = v.norm_squared();
        let mut rows = q.view_mut((k, 0), (n - k, n));
        let proj = v.adjoint() * &rows;
        rows -= v * proj * C64::from(2.0 / vnorm2);
    }
    q.view_mut((0, 0), (n, m)).copy_from(b);
    Ok(q)
}
