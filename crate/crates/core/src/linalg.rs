//! Small dense Hermitian helpers shared by the rate, surrogate and solver code.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};
use num_complex::Complex64;

/// Dense complex matrix.
pub type CMat = DMatrix<Complex64>;

/// Relative eigenvalue threshold used for pseudo-inverses and pseudo-determinants.
pub const PINV_REL_TOL: f64 = 1e-10;

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> CMat {
    CMat::from_row_iterator(rows, cols, data.iter().map(|&x| Complex64::new(x, 0.0)))
}

pub fn scalar(x: f64) -> CMat {
    CMat::from_element(1, 1, Complex64::new(x, 0.0))
}

/// `(m + m†) / 2`.
pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn real_trace(m: &CMat) -> f64 {
    m.trace().re
}

/// Eigenvalues of the Hermitian part of `m`, ascending.
pub fn eigenvalues(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(hermitize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Smallest eigenvalue; `+inf` for an empty matrix.
pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigenvalues(m).first().copied().unwrap_or(f64::INFINITY)
}

/// Natural log-determinant through Cholesky. `None` if `m` is not positive definite.
pub fn ln_det_pd(m: &CMat) -> Option<f64> {
    if m.nrows() == 0 {
        return Some(0.0);
    }
    let chol = cholesky_pd(m)?;
    let l = chol.l_dirty();
    Some(2.0 * (0..m.nrows()).map(|i| l[(i, i)].re.ln()).sum::<f64>())
}

/// Cholesky factor of the Hermitian part of `m`, `None` unless it is
/// numerically positive definite.
///
/// The complex factorization takes a complex square root of each pivot, so
/// a negative pivot carrying a round-off imaginary part yields a diagonal
/// entry with a tiny positive real part instead of a failure. Such entries
/// are rejected here.
pub fn cholesky_pd(m: &CMat) -> Option<Cholesky<Complex64, Dyn>> {
    let chol = hermitize(m).cholesky()?;
    let l = chol.l_dirty();
    let ok = (0..m.nrows()).all(|i| {
        let d = l[(i, i)];
        d.re > 0.0 && d.re.is_finite() && d.im.abs() <= 1e-3 * d.re
    });
    ok.then_some(chol)
}

/// Natural log-determinant of a Hermitian PSD matrix from its eigenvalues;
/// `-inf` when any eigenvalue is non-positive.
pub fn ln_det_psd(m: &CMat) -> f64 {
    if let Some(v) = ln_det_pd(m) {
        return v;
    }
    let mut acc = 0.0;
    for ev in eigenvalues(m) {
        if ev <= 0.0 {
            return f64::NEG_INFINITY;
        }
        acc += ev.ln();
    }
    acc
}

/// Natural log pseudo-determinant: sum of logs of eigenvalues above
/// `rel_tol * max(1, largest eigenvalue)`.
pub fn ln_pseudo_det(m: &CMat, rel_tol: f64) -> f64 {
    let ev = eigenvalues(m);
    let Some(&top) = ev.last() else {
        return 0.0;
    };
    let cut = rel_tol * top.max(1.0);
    ev.iter().filter(|&&e| e > cut).map(|e| e.ln()).sum()
}

/// Moore-Penrose pseudo-inverse of a Hermitian matrix with eigenvalues below
/// `rel_tol * largest` treated as zero.
pub fn pinv_hermitian(m: &CMat, rel_tol: f64) -> CMat {
    let n = m.nrows();
    if n == 0 {
        return zeros(0, 0);
    }
    let eig = SymmetricEigen::new(hermitize(m));
    let top = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
    let cut = rel_tol * top;
    let mut out = zeros(n, n);
    for (j, &ev) in eig.eigenvalues.iter().enumerate() {
        if top > 0.0 && ev > cut {
            let u = eig.eigenvectors.column(j);
            out += (u * u.adjoint()).scale(1.0 / ev);
        }
    }
    hermitize(&out)
}

/// Inverse of a positive definite Hermitian matrix, `None` if Cholesky fails.
pub fn inverse_pd(m: &CMat) -> Option<CMat> {
    if m.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    let chol = cholesky_pd(m)?;
    Some(hermitize(&chol.inverse()))
}

/// Principal submatrix on the given indices (in the given order).
pub fn principal(m: &CMat, idx: &[usize]) -> CMat {
    CMat::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
}

/// Rectangular selection `m[rows, cols]`.
pub fn select(m: &CMat, rows: &[usize], cols: &[usize]) -> CMat {
    CMat::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Conditional covariance `M[keep,keep] − M[keep,given] M[given,given]⁺ M[given,keep]`.
pub fn schur_complement(m: &CMat, keep: &[usize], given: &[usize]) -> CMat {
    let kk = principal(m, keep);
    if given.is_empty() {
        return kk;
    }
    let kg = select(m, keep, given);
    let gg = principal(m, given);
    let pinv = pinv_hermitian(&gg, PINV_REL_TOL);
    hermitize(&(kk - &kg * pinv * kg.adjoint()))
}

/// Block matrix from a row-major grid of blocks; every row of blocks must
/// agree in height and every column in width.
pub fn block(grid: &[Vec<CMat>]) -> CMat {
    let heights: Vec<usize> = grid.iter().map(|row| row[0].nrows()).collect();
    let widths: Vec<usize> = grid[0].iter().map(|b| b.ncols()).collect();
    let mut out = zeros(heights.iter().sum(), widths.iter().sum());
    let mut r0 = 0;
    for (bi, row) in grid.iter().enumerate() {
        let mut c0 = 0;
        for (bj, blk) in row.iter().enumerate() {
            debug_assert_eq!(blk.nrows(), heights[bi]);
            debug_assert_eq!(blk.ncols(), widths[bj]);
            out.view_mut((r0, c0), (blk.nrows(), blk.ncols()))
                .copy_from(blk);
            c0 += widths[bj];
        }
        r0 += heights[bi];
    }
    out
}

/// Block-diagonal matrix of `copies` repetitions of `m`.
pub fn block_diag_repeat(m: &CMat, copies: usize) -> CMat {
    let n = m.nrows();
    let mut out = zeros(n * copies, n * copies);
    for c in 0..copies {
        out.view_mut((c * n, c * n), (n, n)).copy_from(m);
    }
    out
}

/// Vertical stack of equally wide blocks.
pub fn vstack(blocks: &[CMat], cols: usize) -> CMat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = zeros(rows, cols);
    let mut r0 = 0;
    for b in blocks {
        out.view_mut((r0, 0), (b.nrows(), cols)).copy_from(b);
        r0 += b.nrows();
    }
    out
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Real symmetric positive definite solve with a small ridge fallback.
pub fn solve_spd(h: &DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    if let Some(ch) = h.clone().cholesky() {
        let x = ch.solve(rhs);
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    let scale = (0..h.nrows())
        .fold(0.0_f64, |a, i| a.max(h[(i, i)].abs()))
        .max(1e-300);
    let mut ridge = 1e-12 * scale;
    for _ in 0..8 {
        let mut reg = h.clone();
        for i in 0..h.nrows() {
            reg[(i, i)] += ridge;
        }
        if let Some(ch) = reg.cholesky() {
            let x = ch.solve(rhs);
            if x.iter().all(|v| v.is_finite()) {
                return Some(x);
            }
        }
        ridge *= 100.0;
    }
    None
}
