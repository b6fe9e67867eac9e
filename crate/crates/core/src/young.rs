//! Young diagrams, standard tableaux and the exact counting formulas built on
//! them. Everything here uses exact integer arithmetic.

use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// A partition shape, row lengths listed top to bottom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct YoungDiagram {
    rows: Vec<usize>,
}

impl YoungDiagram {
    pub fn new(rows: Vec<usize>) -> Result<Self> {
        let ok = rows.iter().all(|&r| r >= 1) && rows.windows(2).all(|w| w[0] >= w[1]);
        if !ok {
            return Err(Error::InvalidShape(rows));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn num_boxes(&self) -> usize {
        self.rows.iter().sum()
    }

    /// Length of column `c` (0-indexed).
    pub fn column_len(&self, c: usize) -> usize {
        self.rows.iter().take_while(|&&r| r > c).count()
    }

    /// Cells `(row, col)` in row-reading order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(r, &len)| (0..len).map(move |c| (r, c)))
    }

    /// Hook length of cell `(r, c)`: arm + leg + 1.
    pub fn hook(&self, r: usize, c: usize) -> usize {
        let arm = self.rows[r] - c - 1;
        let leg = self.column_len(c) - r - 1;
        arm + leg + 1
    }

    /// Row lengths padded with zeros to `len` entries.
    fn padded(&self, len: usize) -> Vec<usize> {
        let mut v = self.rows.clone();
        v.resize(len.max(v.len()), 0);
        v
    }
}

impl fmt::Display for YoungDiagram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.rows.iter().map(|r| r.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// A standard filling of a [`YoungDiagram`] with labels `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StandardTableau {
    shape: YoungDiagram,
    filling: Vec<Vec<usize>>,
}

impl StandardTableau {
    /// Builds a tableau from its rows of labels, checking that labels are a
    /// permutation of `1..=n` increasing along rows and down columns.
    pub fn new(filling: Vec<Vec<usize>>) -> Result<Self> {
        let shape = YoungDiagram::new(filling.iter().map(Vec::len).collect())?;
        let n = shape.num_boxes();
        let mut seen = vec![false; n + 1];
        for &label in filling.iter().flatten() {
            if label == 0 || label > n || seen[label] {
                return Err(Error::Domain(format!(
                    "tableau labels must be a permutation of 1..={n}, got {filling:?}"
                )));
            }
            seen[label] = true;
        }
        let t = Self { shape, filling };
        if !t.is_standard() {
            return Err(Error::Domain(format!(
                "tableau {:?} is not standard",
                t.filling
            )));
        }
        Ok(t)
    }

    fn is_standard(&self) -> bool {
        let rows_ok = self
            .filling
            .iter()
            .all(|r| r.windows(2).all(|w| w[0] < w[1]));
        let cols_ok = self
            .filling
            .windows(2)
            .all(|w| w[1].iter().zip(&w[0]).all(|(below, above)| above < below));
        rows_ok && cols_ok
    }

    pub fn shape(&self) -> &YoungDiagram {
        &self.shape
    }

    pub fn num_boxes(&self) -> usize {
        self.shape.num_boxes()
    }

    /// Labels row by row.
    pub fn rows(&self) -> &[Vec<usize>] {
        &self.filling
    }

    /// Labels column by column.
    pub fn columns(&self) -> Vec<Vec<usize>> {
        let width = self.shape.rows().first().copied().unwrap_or(0);
        (0..width)
            .map(|c| {
                self.filling
                    .iter()
                    .take_while(|row| row.len() > c)
                    .map(|row| row[c])
                    .collect()
            })
            .collect()
    }

    /// Labels read left to right, top to bottom.
    pub fn reading_word(&self) -> Vec<usize> {
        self.filling.iter().flatten().copied().collect()
    }
}

impl fmt::Display for StandardTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self
            .filling
            .iter()
            .map(|r| r.iter().map(|l| l.to_string()).collect::<String>())
            .collect();
        write!(f, "{{{}}}", rows.join("/"))
    }
}

/// The shape `(2, 1^(d-1))`: `d` rows, `d + 1` boxes. Under SU(d) its irrep is
/// equivalent to the fundamental one.
pub fn fundamental_equivalent_shape(d: usize) -> Result<YoungDiagram> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    let mut rows = vec![1; d];
    rows[0] = 2;
    YoungDiagram::new(rows)
}

/// All standard tableaux of `shape`, sorted lexicographically by reading word.
pub fn enumerate_standard_tableaux(shape: &YoungDiagram) -> Vec<StandardTableau> {
    fn place(
        label: usize,
        n: usize,
        target: &[usize],
        partial: &mut Vec<Vec<usize>>,
        out: &mut Vec<Vec<Vec<usize>>>,
    ) {
        if label > n {
            out.push(partial.clone());
            return;
        }
        for r in 0..target.len() {
            let len = partial[r].len();
            let fits_row = len < target[r];
            let fits_col = r == 0 || partial[r - 1].len() > len;
            if fits_row && fits_col {
                partial[r].push(label);
                place(label + 1, n, target, partial, out);
                partial[r].pop();
            }
        }
    }

    let mut fillings = Vec::new();
    let mut partial = vec![Vec::new(); shape.num_rows()];
    place(
        1,
        shape.num_boxes(),
        shape.rows(),
        &mut partial,
        &mut fillings,
    );

    let mut tableaux: Vec<StandardTableau> = fillings
        .into_iter()
        .map(|filling| StandardTableau {
            shape: shape.clone(),
            filling,
        })
        .collect();
    tableaux.sort_by_key(StandardTableau::reading_word);
    tableaux
}

fn factorial(n: usize) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, k| acc * BigUint::from(k))
}

/// Number of standard tableaux, `n! / prod(hooks)`.
pub fn syt_count_hook_length(shape: &YoungDiagram) -> BigUint {
    let hooks = shape.cells().fold(BigUint::one(), |acc, (r, c)| {
        acc * BigUint::from(shape.hook(r, c))
    });
    factorial(shape.num_boxes()) / hooks
}

/// Multiplicity of the SU(d) irrep `shape` in the `(d+1)`-fold tensor power,
/// via the Frobenius formula
/// `(d+1)! * prod_{i<j}(v_i - v_j + j - i) / prod_i (v_i + d - i)!`
/// with rows zero-padded to length `d`.
pub fn frobenius_multiplicity(shape: &YoungDiagram, d: usize) -> Result<BigUint> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    if shape.num_boxes() != d + 1 {
        return Err(Error::Domain(format!(
            "Frobenius formula needs {} boxes for d = {d}, shape {shape} has {}",
            d + 1,
            shape.num_boxes()
        )));
    }
    if shape.num_rows() > d {
        return Err(Error::Domain(format!(
            "shape {shape} has more than {d} rows"
        )));
    }
    let nu = shape.padded(d);

    let mut numerator = factorial(d + 1);
    for i in 0..d {
        for j in i + 1..d {
            // nu is weakly decreasing so every factor is >= j - i > 0
            numerator *= BigUint::from(nu[i] - nu[j] + j - i);
        }
    }
    let denominator = nu.iter().enumerate().fold(BigUint::one(), |acc, (i, &v)| {
        acc * factorial(v + d - 1 - i)
    });

    if !(&numerator % &denominator).is_zero() {
        return Err(Error::Internal(format!(
            "Frobenius quotient {numerator}/{denominator} is not integral"
        )));
    }
    Ok(numerator / denominator)
}

/// Dimension of the SU(d) irrep labelled by `shape`, by the hook-content
/// formula `prod (d + c) / prod h`. Shapes with more than `d` rows give zero.
pub fn sud_irrep_dimension(shape: &YoungDiagram, d: usize) -> BigUint {
    if shape.num_rows() > d {
        return BigUint::zero();
    }
    let (num, den) = shape
        .cells()
        .fold((BigUint::one(), BigUint::one()), |(num, den), (r, c)| {
            // d + c - r >= 1 whenever r < d
            (
                num * BigUint::from(d + c - r),
                den * BigUint::from(shape.hook(r, c)),
            )
        });
    num / den
}

/// All partitions of `n`, in reverse lexicographic order (`(n)` first).
pub fn partitions(n: usize) -> Vec<YoungDiagram> {
    fn go(remaining: usize, max: usize, current: &mut Vec<usize>, out: &mut Vec<YoungDiagram>) {
        if remaining == 0 {
            out.push(YoungDiagram {
                rows: current.clone(),
            });
            return;
        }
        for part in (1..=remaining.min(max)).rev() {
            current.push(part);
            go(remaining - part, part, current, out);
            current.pop();
        }
    }
    let mut out = Vec::new();
    if n > 0 {
        go(n, n, &mut Vec::new(), &mut out);
    }
    out
}
