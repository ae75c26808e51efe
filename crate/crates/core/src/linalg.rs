//! Exact dense linear algebra over the rationals and Gaussian rationals:
//! rank, nullspace, span membership, and subspace intersection.
//!
//! Gaussian elimination with exact pivoting; there is no tolerance parameter
//! in this module. Pivot rows are chosen by a cheap heuristic (simplest
//! nonzero entry, sparsest row) to limit coefficient growth.

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Row-major dense matrix of exact scalars.
#[derive(Clone, PartialEq, Eq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Scalar>,
}

impl DenseMatrix {
    pub fn zero(rows: usize, cols: usize) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![Scalar::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = DenseMatrix::zero(n, n);
        for i in 0..n {
            m.set(i, i, Scalar::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Scalar>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        DenseMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Builds the matrix whose columns are the given vectors.
    pub fn from_cols(cols: &[Vec<Scalar>], ambient: usize) -> Self {
        let mut m = DenseMatrix::zero(ambient, cols.len());
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), ambient, "column length mismatch");
            for (i, v) in col.iter().enumerate() {
                m.set(i, j, v.clone());
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Scalar {
        &self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Scalar) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[Scalar] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut t = DenseMatrix::zero(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.set(c, r, self.get(r, c).clone());
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &[Scalar]) -> Result<Vec<Scalar>, LinalgError> {
        if v.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        let mut out = vec![Scalar::zero(); self.rows];
        for r in 0..self.rows {
            let row = self.row(r);
            let mut acc = Scalar::zero();
            for (a, b) in row.iter().zip(v) {
                if !a.is_zero() && !b.is_zero() {
                    acc += &(a * b);
                }
            }
            out[r] = acc;
        }
        Ok(out)
    }

    /// Exact rank.
    pub fn rank(&self) -> usize {
        Reduced::compute(self).rank
    }

    /// Basis of the exact nullspace. Each returned vector `v` satisfies
    /// `self * v = 0` exactly and the count equals `cols - rank`.
    pub fn nullspace(&self) -> Vec<Vec<Scalar>> {
        Reduced::compute(self).nullspace()
    }

    pub fn rank_and_nullspace(&self) -> (usize, Vec<Vec<Scalar>>) {
        let red = Reduced::compute(self);
        (red.rank, red.nullspace())
    }
}

impl std::fmt::Debug for DenseMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "DenseMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let entries: Vec<String> = self.row(r).iter().map(|s| s.to_string_exact()).collect();
            writeln!(f, "  [{}]", entries.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Reduced row echelon form together with its pivot columns.
struct Reduced {
    rows: Vec<Vec<Scalar>>,
    cols: usize,
    rank: usize,
    pivot_cols: Vec<usize>,
}

impl Reduced {
    fn compute(m: &DenseMatrix) -> Reduced {
        let mut rows: Vec<Vec<Scalar>> = (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
        let cols = m.cols();
        let mut pivot_cols = Vec::new();
        let mut pivot_row = 0usize;

        for col in 0..cols {
            if pivot_row == rows.len() {
                break;
            }
            // Pick the simplest nonzero candidate in this column: prefer
            // entries of low complexity, break ties by row sparsity.
            let mut best: Option<(usize, usize, usize)> = None;
            for (r, row) in rows.iter().enumerate().skip(pivot_row) {
                let entry = &row[col];
                if entry.is_zero() {
                    continue;
                }
                let cx = entry.complexity();
                if let Some((bc, _, _)) = best {
                    if cx >= bc {
                        continue;
                    }
                }
                let nnz = row.iter().filter(|s| !s.is_zero()).count();
                match best {
                    Some((bc, bn, _)) if (cx, nnz) >= (bc, bn) => {}
                    _ => best = Some((cx, nnz, r)),
                }
                if cx == 0 && nnz <= 2 {
                    break;
                }
            }
            let Some((_, _, r)) = best else { continue };
            rows.swap(pivot_row, r);

            let inv = rows[pivot_row][col].recip();
            if !inv.is_one() {
                for k in col..cols {
                    if !rows[pivot_row][k].is_zero() {
                        rows[pivot_row][k] *= &inv;
                    }
                }
            }
            let (above, rest) = rows.split_at_mut(pivot_row);
            let (pivot_slice, below) = rest.split_at_mut(1);
            let pivot = &pivot_slice[0];
            for row in above.iter_mut().chain(below.iter_mut()) {
                let factor = row[col].clone();
                if factor.is_zero() {
                    continue;
                }
                for k in col..cols {
                    if !pivot[k].is_zero() {
                        let delta = &factor * &pivot[k];
                        row[k] -= &delta;
                    }
                }
            }
            pivot_cols.push(col);
            pivot_row += 1;
        }

        Reduced {
            rows,
            cols,
            rank: pivot_cols.len(),
            pivot_cols,
        }
    }

    fn nullspace(&self) -> Vec<Vec<Scalar>> {
        let mut basis = Vec::with_capacity(self.cols - self.rank);
        let mut is_pivot = vec![false; self.cols];
        for &c in &self.pivot_cols {
            is_pivot[c] = true;
        }
        for free in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v = vec![Scalar::zero(); self.cols];
            v[free] = Scalar::one();
            for (i, &pc) in self.pivot_cols.iter().enumerate() {
                v[pc] = -&self.rows[i][free];
            }
            basis.push(v);
        }
        basis
    }
}

/// True iff `v` is an exact linear combination of `basis`.
pub fn span_contains(basis: &[Vec<Scalar>], v: &[Scalar]) -> Result<bool, LinalgError> {
    for b in basis {
        if b.len() != v.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: v.len(),
                got: b.len(),
            });
        }
    }
    if basis.is_empty() {
        return Ok(v.iter().all(Scalar::is_zero));
    }
    let ambient = v.len();
    let m = DenseMatrix::from_cols(basis, ambient);
    let r = m.rank();
    let mut cols: Vec<Vec<Scalar>> = basis.to_vec();
    cols.push(v.to_vec());
    let augmented = DenseMatrix::from_cols(&cols, ambient);
    Ok(augmented.rank() == r)
}

/// Basis of the exact intersection of two subspaces given by bases in a
/// common ambient space.
pub fn intersect_subspaces(
    b1: &[Vec<Scalar>],
    b2: &[Vec<Scalar>],
) -> Result<Vec<Vec<Scalar>>, LinalgError> {
    let ambient = b1
        .first()
        .or_else(|| b2.first())
        .map_or(0, |v| v.len());
    for v in b1.iter().chain(b2.iter()) {
        if v.len() != ambient {
            return Err(LinalgError::DimensionMismatch {
                expected: ambient,
                got: v.len(),
            });
        }
    }
    if b1.is_empty() || b2.is_empty() {
        return Ok(Vec::new());
    }
    // Null vectors (x, y) of [B1 | B2] satisfy B1 x = -B2 y; the vectors
    // B1 x then form a basis of the intersection when B1, B2 are bases.
    let mut cols: Vec<Vec<Scalar>> = b1.to_vec();
    cols.extend(b2.iter().cloned());
    let stacked = DenseMatrix::from_cols(&cols, ambient);
    let null = stacked.nullspace();
    let m1 = DenseMatrix::from_cols(b1, ambient);
    let mut vecs = Vec::with_capacity(null.len());
    for nv in &null {
        let x = &nv[..b1.len()];
        vecs.push(m1.mul_vec(x).expect("consistent dimensions"));
    }
    Ok(reduce_to_basis(&vecs))
}

/// Extracts a basis (in reduced echelon form) from a spanning set.
pub fn reduce_to_basis(vectors: &[Vec<Scalar>]) -> Vec<Vec<Scalar>> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let m = DenseMatrix::from_rows(vectors.to_vec());
    let red = Reduced::compute(&m);
    red.rows.into_iter().take(red.rank).collect()
}

/// Solves `A x = b` exactly; `None` when inconsistent. When the solution is
/// not unique an arbitrary representative is returned.
pub fn solve(a: &DenseMatrix, b: &[Scalar]) -> Result<Option<Vec<Scalar>>, LinalgError> {
    if b.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: a.rows(),
            got: b.len(),
        });
    }
    let mut aug = DenseMatrix::zero(a.rows(), a.cols() + 1);
    for r in 0..a.rows() {
        for c in 0..a.cols() {
            aug.set(r, c, a.get(r, c).clone());
        }
        aug.set(r, a.cols(), b[r].clone());
    }
    let red = Reduced::compute(&aug);
    if red.pivot_cols.contains(&a.cols()) {
        return Ok(None);
    }
    let mut x = vec![Scalar::zero(); a.cols()];
    for (i, &pc) in red.pivot_cols.iter().enumerate() {
        x[pc] = red.rows[i][a.cols()].clone();
    }
    Ok(Some(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{random_scalar, Rat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn s(n: i64) -> Scalar {
        Scalar::from_int(n)
    }

    /// Independent rank oracle: largest k with a nonzero k-by-k minor,
    /// determinants by cofactor expansion. Only viable for small matrices.
    fn rank_by_minors(m: &DenseMatrix) -> usize {
        fn det(m: &DenseMatrix, rows: &[usize], cols: &[usize]) -> Scalar {
            if rows.len() == 1 {
                return m.get(rows[0], cols[0]).clone();
            }
            let mut acc = Scalar::zero();
            let mut sign = Scalar::one();
            for (k, &c) in cols.iter().enumerate() {
                let sub_cols: Vec<usize> = cols
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != k)
                    .map(|(_, &cc)| cc)
                    .collect();
                let minor = det(m, &rows[1..], &sub_cols);
                acc += &(&(&sign * m.get(rows[0], c)) * &minor);
                sign = -sign;
            }
            acc
        }

        fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
            let mut out = Vec::new();
            let mut cur = Vec::new();
            fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if cur.len() == k {
                    out.push(cur.clone());
                    return;
                }
                for i in start..n {
                    cur.push(i);
                    rec(i + 1, n, k, cur, out);
                    cur.pop();
                }
            }
            rec(0, n, k, &mut cur, &mut out);
            out
        }

        for k in (1..=m.rows().min(m.cols())).rev() {
            for rows in subsets(m.rows(), k) {
                for cols in subsets(m.cols(), k) {
                    if !det(m, &rows, &cols).is_zero() {
                        return k;
                    }
                }
            }
        }
        0
    }

    #[test]
    fn rank_trivial_cases() {
        assert_eq!(DenseMatrix::zero(3, 3).rank(), 0);
        assert_eq!(DenseMatrix::identity(3).rank(), 3);
    }

    #[test]
    fn rank_matches_minor_expansion_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..12 {
            let complex = trial % 3 == 2;
            let n = 3 + trial % 4;
            let mut m = DenseMatrix::zero(n, n);
            for r in 0..n {
                for c in 0..n {
                    m.set(r, c, random_scalar(&mut rng, complex));
                }
            }
            // Mix in rank-deficient instances by zeroing a row sometimes.
            if trial % 4 == 1 {
                for c in 0..n {
                    m.set(n - 1, c, Scalar::zero());
                }
            }
            assert_eq!(m.rank(), rank_by_minors(&m), "trial {trial}");
        }
    }

    #[test]
    fn rank_equals_transpose_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..8 {
            let mut m = DenseMatrix::zero(4, 6);
            for r in 0..4 {
                for c in 0..6 {
                    m.set(r, c, random_scalar(&mut rng, false));
                }
            }
            assert_eq!(m.rank(), m.transpose().rank());
        }
    }

    #[test]
    fn nullspace_identity_is_empty() {
        assert!(DenseMatrix::identity(4).nullspace().is_empty());
    }

    #[test]
    fn nullspace_of_row_sum() {
        let m = DenseMatrix::from_rows(vec![vec![s(1), s(1)]]);
        let null = m.nullspace();
        assert_eq!(null.len(), 1);
        // Forced by dimension: the kernel is spanned by (1, -1).
        let v = &null[0];
        assert_eq!(&v[0] * &s(-1), v[1].clone());
    }

    #[test]
    fn nullspace_remultiplies_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for trial in 0..10 {
            let rows = 3 + trial % 3;
            let cols = 5 + trial % 3;
            let complex = trial % 2 == 1;
            let mut m = DenseMatrix::zero(rows, cols);
            for r in 0..rows {
                for c in 0..cols {
                    m.set(r, c, random_scalar(&mut rng, complex));
                }
            }
            let (rank, null) = m.rank_and_nullspace();
            assert_eq!(rank + null.len(), cols);
            for v in &null {
                let prod = m.mul_vec(v).unwrap();
                assert!(prod.iter().all(Scalar::is_zero));
            }
        }
    }

    #[test]
    fn span_membership() {
        let e1 = vec![s(1), s(0), s(0)];
        let e2 = vec![s(0), s(1), s(0)];
        let triple = vec![s(3), s(0), s(0)];
        assert!(span_contains(std::slice::from_ref(&e1), &triple).unwrap());
        assert!(!span_contains(std::slice::from_ref(&e1), &e2).unwrap());
        assert!(span_contains(&[], &[s(0), s(0)]).unwrap());
        assert!(!span_contains(&[], &[s(1), s(0)]).unwrap());
        assert!(matches!(
            span_contains(&[e1], &[s(1), s(0)]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn intersection_idempotent_and_transverse() {
        let e1 = vec![s(1), s(0)];
        let e2 = vec![s(0), s(1)];
        let same = intersect_subspaces(std::slice::from_ref(&e1), std::slice::from_ref(&e1)).unwrap();
        assert_eq!(same.len(), 1);
        assert!(span_contains(&same, &e1).unwrap());
        let transverse =
            intersect_subspaces(std::slice::from_ref(&e1), std::slice::from_ref(&e2)).unwrap();
        assert!(transverse.is_empty());
    }

    #[test]
    fn intersection_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dim = 5;
        let rand_basis = |rng: &mut ChaCha8Rng, k: usize| -> Vec<Vec<Scalar>> {
            let vecs: Vec<Vec<Scalar>> = (0..k)
                .map(|_| (0..dim).map(|_| random_scalar(rng, false)).collect())
                .collect();
            reduce_to_basis(&vecs)
        };
        for _ in 0..6 {
            let b1 = rand_basis(&mut rng, 3);
            let b2 = rand_basis(&mut rng, 3);
            let i12 = intersect_subspaces(&b1, &b2).unwrap();
            let i21 = intersect_subspaces(&b2, &b1).unwrap();
            assert_eq!(i12.len(), i21.len());
            for v in &i12 {
                assert!(span_contains(&i21, v).unwrap());
                assert!(span_contains(&b1, v).unwrap());
                assert!(span_contains(&b2, v).unwrap());
            }
        }
    }

    #[test]
    fn solve_consistent_and_inconsistent() {
        let a = DenseMatrix::from_rows(vec![vec![s(1), s(2)], vec![s(2), s(4)]]);
        let sol = solve(&a, &[s(3), s(6)]).unwrap().unwrap();
        let back = a.mul_vec(&sol).unwrap();
        assert_eq!(back, vec![s(3), s(6)]);
        assert!(solve(&a, &[s(3), s(7)]).unwrap().is_none());
    }

    #[test]
    fn gaussian_rational_elimination() {
        let i = Scalar::i();
        let m = DenseMatrix::from_rows(vec![
            vec![Scalar::one(), i.clone()],
            vec![i.clone(), -Scalar::one()],
        ]);
        // Second row is i times the first.
        assert_eq!(m.rank(), 1);
        let null = m.nullspace();
        assert_eq!(null.len(), 1);
        let prod = m.mul_vec(&null[0]).unwrap();
        assert!(prod.iter().all(Scalar::is_zero));
        let _ = Rat::zero();
    }
}
