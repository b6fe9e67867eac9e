//! Construction and verification of the encoder `U_E` on `d + 1` qudits.
//!
//! The `(d+1)`-fold tensor power contains `d` copies of the fundamental
//! irrep, one per standard tableau of shape `(2, 1^(d-1))`. Each copy is cut
//! out with a Young symmetrizer, made orthogonal to the copies before it, and
//! then aligned so that every copy carries `W` in the same basis. The aligned
//! copies fill the first `d^2` columns of `U_E` (column `i*d + j` is weight
//! vector `j` of copy `i`), so that
//!
//! ```text
//! U_E^† W^{⊗(d+1)} U_E = (1_d ⊗ W) ⊕ O(W).
//! ```

use std::fmt;

use nalgebra::DVector;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrixcore::{
    collective_times, complete_to_unitary, derive_seed, haar_special_unitary, identity,
    polar_unitary_factor, random_special_unitary, rng_from_seed, unitarity_residual, ComplexMatrix,
    UnitaryMatrix, C64, INVARIANT_TOL,
};
use crate::young::{
    enumerate_standard_tableaux, frobenius_multiplicity, fundamental_equivalent_shape,
    syt_count_hook_length, StandardTableau,
};

/// Default cap on dense complex entries (`2^26`, about 1 GiB).
pub const DEFAULT_MEMORY_CAP: u128 = 1 << 26;

/// Number of Haar samples used to fit each intertwiner.
const ALIGNMENT_SAMPLES: usize = 3;
/// Largest tolerated deviation of a fitted intertwiner from a scaled isometry.
const ALIGNMENT_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Column layout of an encoder: column `i*d + j` holds weight vector `j` of
/// fundamental copy `i`; columns from `d^2` on complete the unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnLayout {
    MultiplicityMajor,
}

/// How an encoder was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Symmetrizer,
    Reference,
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Generator::Symmetrizer => f.write_str("symmetrizer"),
            Generator::Reference => f.write_str("reference"),
        }
    }
}

/// The encoder `U_E` for qudit dimension `d`.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderSpec {
    pub d: usize,
    pub u_e: UnitaryMatrix,
    pub column_layout: ColumnLayout,
    pub generator: Generator,
}

impl EncoderSpec {
    /// Wraps a matrix as an encoder after checking its size and unitarity.
    pub fn new(d: usize, u_e: ComplexMatrix, generator: Generator) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let dim = encoder_dim(d);
        if u_e.nrows() != dim || u_e.ncols() != dim {
            return Err(Error::Domain(format!(
                "encoder for d = {d} must be {dim}x{dim}, got {}x{}",
                u_e.nrows(),
                u_e.ncols()
            )));
        }
        Ok(Self {
            d,
            u_e: UnitaryMatrix::new(u_e)?,
            column_layout: ColumnLayout::MultiplicityMajor,
            generator,
        })
    }

    /// Number of physical qudits the encoder acts on.
    pub fn width(&self) -> usize {
        self.d + 1
    }

    /// `d^(d+1)`.
    pub fn dim(&self) -> usize {
        self.u_e.dim()
    }

    /// Size of the noiseless block, `d^2`.
    pub fn block(&self) -> usize {
        self.d * self.d
    }

    /// The `d^2` columns spanning the noiseless subsystem.
    pub fn subsystem_columns(&self) -> ComplexMatrix {
        self.u_e.columns(0, self.block()).into_owned()
    }
}

/// Outcome of one block-structure check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockReport {
    pub residual_ns: f64,
    pub residual_offdiag: f64,
    #[serde(skip)]
    pub w_used: ComplexMatrix,
    pub passed: bool,
}

/// `d^(d+1)`.
pub fn encoder_dim(d: usize) -> usize {
    d.pow(d as u32 + 1)
}

/// Index of basis state `|digits>` in a register of dimension `d` per qudit.
fn index_of(digits: &[usize], d: usize) -> usize {
    digits.iter().fold(0, |acc, &x| acc * d + x)
}

fn digits_of(mut index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut digits = vec![0; n];
    for slot in (0..n).rev() {
        digits[slot] = index % d;
        index /= d;
    }
    digits
}

/// All permutations of `items` with their signs.
fn signed_permutations(items: &[usize]) -> Vec<(Vec<usize>, i8)> {
    if items.len() <= 1 {
        return vec![(items.to_vec(), 1)];
    }
    let mut out = Vec::new();
    for (k, &first) in items.iter().enumerate() {
        let rest: Vec<usize> = items
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, &x)| x)
            .collect();
        // moving element k to the front takes k transpositions
        let sign = if k % 2 == 0 { 1 } else { -1 };
        for (mut perm, s) in signed_permutations(&rest) {
            perm.insert(0, first);
            out.push((perm, sign * s));
        }
    }
    out
}

/// Permutations of tensor positions generated by independent permutations of
/// each block of labels; labels are 1-based tensor positions. Each entry maps
/// position `a` to `image[a]`.
fn block_permutations(blocks: &[Vec<usize>], n: usize) -> Vec<(Vec<usize>, i8)> {
    let mut acc: Vec<(Vec<usize>, i8)> = vec![((0..n).collect(), 1)];
    for block in blocks {
        let positions: Vec<usize> = block.iter().map(|l| l - 1).collect();
        let perms = signed_permutations(&positions);
        acc = acc
            .iter()
            .flat_map(|(base, s0)| {
                let positions = &positions;
                perms.iter().map(move |(perm, s1)| {
                    let mut image = base.clone();
                    for (from, to) in positions.iter().zip(perm) {
                        image[*from] = *to;
                    }
                    (image, s0 * s1)
                })
            })
            .collect();
    }
    acc
}

/// The Young symmetrizer of a tableau acting on `(C^d)^{⊗n}` by permuting
/// tensor factors: `c * R * C`, where `C` antisymmetrizes each column, `R`
/// symmetrizes each row and `c = f / n!` makes it idempotent.
#[derive(Debug, Clone)]
pub struct YoungSymmetrizer {
    d: usize,
    n: usize,
    /// Basis-index maps of the `R * C` terms with their signs.
    terms: Vec<(Vec<usize>, f64)>,
    scale: f64,
}

impl YoungSymmetrizer {
    pub fn new(tableau: &StandardTableau, d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        let n = tableau.num_boxes();
        let dim = d.pow(n as u32);
        let rows = block_permutations(tableau.rows(), n);
        let cols = block_permutations(&tableau.columns(), n);

        let index_map = |image: &[usize]| -> Vec<usize> {
            (0..dim)
                .map(|x| {
                    let digits = digits_of(x, d, n);
                    let mut moved = vec![0; n];
                    for (a, &target) in image.iter().enumerate() {
                        moved[target] = digits[a];
                    }
                    index_of(&moved, d)
                })
                .collect()
        };
        let row_maps: Vec<Vec<usize>> = rows.iter().map(|(img, _)| index_map(img)).collect();
        let col_maps: Vec<(Vec<usize>, i8)> =
            cols.iter().map(|(img, s)| (index_map(img), *s)).collect();

        let mut terms = Vec::with_capacity(row_maps.len() * col_maps.len());
        for row in &row_maps {
            for (col, sign) in &col_maps {
                let composed: Vec<usize> = col.iter().map(|&y| row[y]).collect();
                terms.push((composed, f64::from(*sign)));
            }
        }

        let f = syt_count_hook_length(tableau.shape())
            .to_f64()
            .unwrap_or(f64::NAN);
        let n_fact: f64 = (1..=n).map(|k| k as f64).product();
        Ok(Self {
            d,
            n,
            terms,
            scale: f / n_fact,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.n as u32)
    }

    pub fn apply(&self, v: &[C64]) -> DVector<C64> {
        let mut out = DVector::from_element(v.len(), ZERO);
        for (map, sign) in &self.terms {
            for (x, &amp) in v.iter().enumerate() {
                out[map[x]] += amp * *sign;
            }
        }
        out * C64::from(self.scale)
    }

    pub fn apply_matrix(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let mut out = m.clone();
        for (j, col) in m.column_iter().enumerate() {
            let img = self.apply(col.as_slice());
            out.set_column(j, &img);
        }
        out
    }

    /// Image of basis state `e_x`.
    fn apply_basis(&self, x: usize) -> DVector<C64> {
        let mut out = DVector::from_element(self.dim(), ZERO);
        for (map, sign) in &self.terms {
            out[map[x]] += C64::from(*sign * self.scale);
        }
        out
    }

    pub fn to_matrix(&self) -> ComplexMatrix {
        let dim = self.dim();
        let mut m = ComplexMatrix::zeros(dim, dim);
        for x in 0..dim {
            m.set_column(x, &self.apply_basis(x));
        }
        m
    }
}

/// Dense Young symmetrizer for a tableau on `d + 1` boxes.
pub fn young_symmetrizer_projector(t: &StandardTableau, d: usize) -> Result<ComplexMatrix> {
    if t.num_boxes() != d + 1 {
        return Err(Error::Domain(format!(
            "tableau {t} has {} boxes, expected {}",
            t.num_boxes(),
            d + 1
        )));
    }
    Ok(YoungSymmetrizer::new(t, d)?.to_matrix())
}

/// Basis states of weight `j` inside the fundamental-equivalent irrep: one
/// qudit in each level plus an extra one in level `j`.
fn weight_class(d: usize, j: usize) -> Vec<usize> {
    let n = d + 1;
    (0..d.pow(n as u32))
        .filter(|&x| {
            let mut occ = vec![0usize; d];
            for digit in digits_of(x, d, n) {
                occ[digit] += 1;
            }
            occ.iter()
                .enumerate()
                .all(|(a, &c)| c == if a == j { 2 } else { 1 })
        })
        .collect()
}

/// Rotates `v` so that its largest-magnitude entry (first one, up to
/// rounding) is real and positive.
fn fix_phase(v: &mut DVector<C64>) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)) {
        let phase = z.conj() / z.norm();
        *v *= phase;
    }
}

fn fix_matrix_phase(m: &mut ComplexMatrix) {
    let max = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // column-major scan; ties resolve to the first entry
    if let Some(z) = m.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).copied() {
        *m *= z.conj() / z.norm();
    }
}

/// The `d` copies of the fundamental irrep inside `(C^d)^{⊗(d+1)}`, one per
/// standard tableau of shape `(2, 1^(d-1))` in reading-word order.
///
/// Copy `i` is the range of the tableau's Young symmetrizer with copies
/// `0..i` projected out. Within a copy, column `j` is the weight vector with
/// an extra qudit in level `j`, so column 0 is the highest-weight state.
pub fn isotypic_fundamental_basis(d: usize) -> Result<Vec<ComplexMatrix>> {
    let shape = fundamental_equivalent_shape(d)?;
    let tableaux = enumerate_standard_tableaux(&shape);
    let expected = frobenius_multiplicity(&shape, d)?;
    if num_bigint::BigUint::from(tableaux.len()) != expected {
        return Err(Error::Internal(format!(
            "{} tableaux but Frobenius multiplicity {expected}",
            tableaux.len()
        )));
    }
    let dim = encoder_dim(d);
    let classes: Vec<Vec<usize>> = (0..d).map(|j| weight_class(d, j)).collect();

    let mut copies: Vec<ComplexMatrix> = Vec::with_capacity(d);
    for (i, tableau) in tableaux.iter().enumerate() {
        let sym = YoungSymmetrizer::new(tableau, d)?;
        let mut basis = ComplexMatrix::zeros(dim, d);
        for (j, class) in classes.iter().enumerate() {
            // the image of a weight-j state is a weight-j vector in the range
            let mut best = class
                .iter()
                .map(|&x| sym.apply_basis(x))
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .ok_or_else(|| Error::Internal("empty weight class".into()))?;
            for _ in 0..2 {
                for prev in &copies {
                    let p = prev.column(j);
                    let overlap = p.dotc(&best);
                    best -= p * overlap;
                }
            }
            let norm = best.norm();
            if norm < 1e-8 {
                return Err(Error::Internal(format!(
                    "copy {i} ({tableau}) has no weight-{j} vector outside earlier copies"
                )));
            }
            best /= C64::from(norm);
            fix_phase(&mut best);
            basis.set_column(j, &best);
        }
        copies.push(basis);
    }
    Ok(copies)
}

/// `B^† W^{⊗n} B`: the action of `w` on the span of `basis`.
pub fn restricted_action(
    basis: &ComplexMatrix,
    w: &ComplexMatrix,
    n: usize,
) -> Result<ComplexMatrix> {
    Ok(basis.ad_mul(&collective_times(w, n, basis)?))
}

/// Unitary `T` with `source(W) T = T target(W)` for every sampled pair,
/// normalised so its largest entry is real positive.
fn fit_intertwiner(
    source: &[ComplexMatrix],
    target: &[ComplexMatrix],
    copy: usize,
) -> Result<UnitaryMatrix> {
    let d = source[0].nrows();
    let eye = identity(d);
    let mut system = ComplexMatrix::zeros(source.len() * d * d, d * d);
    for (s, (a, b)) in source.iter().zip(target).enumerate() {
        // column-major vec: vec(A T) = (1 ⊗ A) vec T, vec(T B) = (B^T ⊗ 1) vec T
        let block = eye.kronecker(a) - b.transpose().kronecker(&eye);
        system
            .view_mut((s * d * d, 0), (d * d, d * d))
            .copy_from(&block);
    }
    let svd = system.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Internal("SVD without V".into()))?;
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| svd.singular_values[x].total_cmp(&svd.singular_values[y]));
    let null = order[0];
    let gap = svd.singular_values[order[1]];
    if gap < 1e-6 {
        return Err(Error::AlignmentFailure {
            copy,
            residual: gap,
        });
    }
    let vec = v_t.row(null).adjoint();
    let mut t = ComplexMatrix::from_column_slice(d, d, vec.as_slice());
    let gram = t.ad_mul(&t);
    let scale = (d as f64 / gram.trace().re).sqrt();
    t *= C64::from(scale);
    let mut isometry = t.ad_mul(&t);
    for k in 0..d {
        isometry[(k, k)] -= C64::from(1.0);
    }
    let residual = isometry.norm() + svd.singular_values[null];
    if residual > ALIGNMENT_TOL {
        return Err(Error::AlignmentFailure { copy, residual });
    }
    let mut u = polar_unitary_factor(&t)?.into_inner();
    fix_matrix_phase(&mut u);
    Ok(UnitaryMatrix::new_unchecked(u))
}

/// Rotates each copy so that `W^{⊗(d+1)}` restricted to it, in its basis,
/// equals `W` itself. Intertwiners are fitted on [`ALIGNMENT_SAMPLES`] Haar
/// samples drawn from `seed`; copy 0 is matched to the defining
/// representation and every other copy to aligned copy 0.
pub fn align_copies(copies: &[ComplexMatrix], d: usize, seed: u64) -> Result<Vec<ComplexMatrix>> {
    if copies.len() != d
        || copies
            .iter()
            .any(|c| c.ncols() != d || c.nrows() != encoder_dim(d))
    {
        return Err(Error::Domain(format!(
            "expected {d} copies of {} x {d} bases",
            encoder_dim(d)
        )));
    }
    let n = d + 1;
    let mut rng = rng_from_seed(seed);
    let samples: Vec<ComplexMatrix> = (0..ALIGNMENT_SAMPLES)
        .map(|_| haar_special_unitary(d, &mut rng).map(UnitaryMatrix::into_inner))
        .collect::<Result<_>>()?;

    let action = |basis: &ComplexMatrix| -> Result<Vec<ComplexMatrix>> {
        samples
            .iter()
            .map(|w| restricted_action(basis, w, n))
            .collect()
    };

    let mut aligned = Vec::with_capacity(d);
    let mut target = samples.clone();
    for (i, basis) in copies.iter().enumerate() {
        let t = fit_intertwiner(&action(basis)?, &target, i)?;
        let rotated = basis * t.matrix();
        if i == 0 {
            target = action(&rotated)?;
        }
        aligned.push(rotated);
    }
    Ok(aligned)
}

fn check_memory(d: usize, cap: u128) -> Result<()> {
    let dim = encoder_dim(d) as u128;
    let entries = dim * dim;
    if entries > cap {
        return Err(Error::Resource {
            what: format!("encoder for d = {d}"),
            entries,
            cap,
        });
    }
    Ok(())
}

fn assemble(d: usize, copies: &[ComplexMatrix], generator: Generator) -> Result<EncoderSpec> {
    let dim = encoder_dim(d);
    let mut b = ComplexMatrix::zeros(dim, d * d);
    for (i, copy) in copies.iter().enumerate() {
        b.columns_mut(i * d, d).copy_from(copy);
    }
    let u = complete_to_unitary(&b)?;
    let residual = unitarity_residual(&u);
    if residual >= INVARIANT_TOL {
        return Err(Error::Internal(format!(
            "assembled encoder is not unitary: residual {residual:e}"
        )));
    }
    Ok(EncoderSpec {
        d,
        u_e: UnitaryMatrix::new_unchecked(u),
        column_layout: ColumnLayout::MultiplicityMajor,
        generator,
    })
}

/// Builds `U_E` for dimension `d`; `seed` drives the alignment samples.
pub fn build_encoder(d: usize, seed: u64) -> Result<EncoderSpec> {
    build_encoder_with_cap(d, seed, DEFAULT_MEMORY_CAP)
}

pub fn build_encoder_with_cap(d: usize, seed: u64, cap: u128) -> Result<EncoderSpec> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    check_memory(d, cap)?;
    let copies = isotypic_fundamental_basis(d)?;
    let aligned = align_copies(&copies, d, seed)?;
    assemble(d, &aligned, Generator::Symmetrizer)
}

/// Same construction with the alignment step skipped. The copies then carry
/// `W` in unrelated bases; used as a negative control.
pub fn build_unaligned_encoder(d: usize) -> Result<EncoderSpec> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    check_memory(d, DEFAULT_MEMORY_CAP)?;
    let copies = isotypic_fundamental_basis(d)?;
    assemble(d, &copies, Generator::Symmetrizer)
}

/// The exact 8x8 qubit encoder with columns
/// `[-(ud+du)u + 2uud]/√6, [(ud+du)d - 2ddu]/√6, (ud-du)u/√2, (ud-du)d/√2,
/// uuu, (uud+udu+duu)/√3, (ddu+dud+udd)/√3, ddd`.
pub fn reference_encoder_d2() -> EncoderSpec {
    // basis indices with u = 0, d = 1, first qubit most significant
    const UUU: usize = 0b000;
    const UUD: usize = 0b001;
    const UDU: usize = 0b010;
    const UDD: usize = 0b011;
    const DUU: usize = 0b100;
    const DUD: usize = 0b101;
    const DDU: usize = 0b110;
    const DDD: usize = 0b111;

    let s6 = 1.0 / 6f64.sqrt();
    let s2 = 1.0 / 2f64.sqrt();
    let s3 = 1.0 / 3f64.sqrt();
    let columns: [&[(usize, f64)]; 8] = [
        &[(UDU, -s6), (DUU, -s6), (UUD, 2.0 * s6)],
        &[(UDD, s6), (DUD, s6), (DDU, -2.0 * s6)],
        &[(UDU, s2), (DUU, -s2)],
        &[(UDD, s2), (DUD, -s2)],
        &[(UUU, 1.0)],
        &[(UUD, s3), (UDU, s3), (DUU, s3)],
        &[(DDU, s3), (DUD, s3), (UDD, s3)],
        &[(DDD, 1.0)],
    ];
    let mut m = ComplexMatrix::zeros(8, 8);
    for (col, entries) in columns.iter().enumerate() {
        for &(row, value) in entries.iter() {
            m[(row, col)] = C64::from(value);
        }
    }
    EncoderSpec {
        d: 2,
        u_e: UnitaryMatrix::new_unchecked(m),
        column_layout: ColumnLayout::MultiplicityMajor,
        generator: Generator::Reference,
    }
}

/// The spin-3/2 generators `(J_x, J_y, J_z)` normalised like the Pauli
/// matrices, `J_z = diag(3, 1, -1, -3)`.
pub fn spin_three_half_generators() -> [ComplexMatrix; 3] {
    let r3 = 3f64.sqrt();
    let real = |v: [f64; 16]| ComplexMatrix::from_row_iterator(4, 4, v.into_iter().map(C64::from));
    let jx = real([
        0.0, r3, 0.0, 0.0, //
        r3, 0.0, 2.0, 0.0, //
        0.0, 2.0, 0.0, r3, //
        0.0, 0.0, r3, 0.0,
    ]);
    let jy = real([
        0.0, -r3, 0.0, 0.0, //
        r3, 0.0, -2.0, 0.0, //
        0.0, 2.0, 0.0, -r3, //
        0.0, 0.0, r3, 0.0,
    ]) * C64::i();
    let jz = real([
        3.0, 0.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, 0.0, //
        0.0, 0.0, -1.0, 0.0, //
        0.0, 0.0, 0.0, -3.0,
    ]);
    [jx, jy, jz]
}

/// Pauli matrices `(σ_x, σ_y, σ_z)`.
pub fn pauli_matrices() -> [ComplexMatrix; 3] {
    let o = C64::from(0.0);
    let l = C64::from(1.0);
    let i = C64::i();
    [
        ComplexMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        ComplexMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        ComplexMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

fn check_error_dim(enc: &EncoderSpec, w: &ComplexMatrix) -> Result<()> {
    if w.nrows() != enc.d || w.ncols() != enc.d {
        return Err(Error::Domain(format!(
            "error operator is {}x{}, encoder expects {}x{}",
            w.nrows(),
            w.ncols(),
            enc.d,
            enc.d
        )));
    }
    Ok(())
}

/// The full reduced error `U_E^† W^{⊗(d+1)} U_E`.
pub fn reduced_error(enc: &EncoderSpec, w: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_error_dim(enc, w)?;
    Ok(enc.u_e.ad_mul(&collective_times(w, enc.width(), &enc.u_e)?))
}

/// Block of the reduced error acting on the completion columns.
pub fn residual_block(enc: &EncoderSpec, w: &ComplexMatrix) -> Result<ComplexMatrix> {
    let m = reduced_error(enc, w)?;
    let b = enc.block();
    let rest = enc.dim() - b;
    Ok(m.view((b, b), (rest, rest)).into_owned())
}

/// Checks `U_E^† W^{⊗(d+1)} U_E = (1_d ⊗ W) ⊕ O`. Only the first `d^2` rows
/// and columns of the reduced error are formed.
pub fn verify_block_structure(
    enc: &EncoderSpec,
    w: &ComplexMatrix,
    tol: f64,
) -> Result<BlockReport> {
    check_error_dim(enc, w)?;
    let n = enc.width();
    let b = enc.block();
    let rest = enc.dim() - b;
    let top = enc.subsystem_columns();

    // M[.., 0..b] = U^† (W^{⊗n} U[.., 0..b])
    let left = enc.u_e.ad_mul(&collective_times(w, n, &top)?);
    // M[0..b, ..] = (W^{†⊗n} U[.., 0..b])^† U
    let upper = collective_times(&w.adjoint(), n, &top)?.ad_mul(&enc.u_e);

    let expected = identity(enc.d).kronecker(w);
    let residual_ns = (left.view((0, 0), (b, b)) - expected).norm();
    let residual_offdiag =
        upper.view((0, b), (b, rest)).norm() + left.view((b, 0), (rest, b)).norm();
    Ok(BlockReport {
        residual_ns,
        residual_offdiag,
        w_used: w.clone(),
        passed: residual_ns < tol && residual_offdiag < tol,
    })
}

/// Runs [`verify_block_structure`] on `trials` Haar samples; sample `t` uses
/// seed `derive_seed(seed, t)`. Reports come back in trial order.
pub fn verify_haar_samples(
    enc: &EncoderSpec,
    trials: usize,
    seed: u64,
    tol: f64,
) -> Result<Vec<BlockReport>> {
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let w = random_special_unitary(enc.d, derive_seed(seed, t as u64))?;
            verify_block_structure(enc, &w, tol)
        })
        .collect()
}

/// Orthogonal projector onto the span of orthonormal columns.
pub fn span_projector(columns: &ComplexMatrix) -> ComplexMatrix {
    columns * columns.adjoint()
}

/// Random SU(2) element `exp(i r·σ)` with `|r| <= max_norm`.
pub fn exp_pauli<R: Rng + ?Sized>(rng: &mut R, max_norm: f64) -> ([f64; 3], ComplexMatrix) {
    let r = loop {
        let r: [f64; 3] = [
            rng.random_range(-max_norm..max_norm),
            rng.random_range(-max_norm..max_norm),
            rng.random_range(-max_norm..max_norm),
        ];
        if r.iter().map(|x| x * x).sum::<f64>().sqrt() <= max_norm {
            break r;
        }
    };
    let [sx, sy, sz] = pauli_matrices();
    let h = sx * C64::from(r[0]) + sy * C64::from(r[1]) + sz * C64::from(r[2]);
    (r, crate::matrixcore::expi_hermitian(&h))
}
