//! Dense row-major matrices and the symmetric eigensolver behind subspace
//! estimation.
//!
//! The eigensolver reduces the matrix to tridiagonal form with Householder
//! reflections and then diagonalises it with the implicit QL algorithm. Both
//! stages are deterministic, so repeated calls on the same input produce
//! bit-identical eigenpairs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for accepting a matrix as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;
/// Maximum deviation of `B·Bᵀ` from the identity for a basis to count as orthonormal.
pub const ORTHONORMAL_TOLERANCE: f64 = 1e-8;
/// Eigenvalues below this (relative to `max(1, λ_max)`) are treated as zero.
pub const RANK_TOLERANCE: f64 = 1e-12;
/// QL sweeps allowed per eigenvalue before giving up.
pub const MAX_QL_ITERATIONS: usize = 64;
/// Residual bound `‖Mv − λv‖ ≤ RESIDUAL_TOLERANCE · ‖M‖` checked on every returned pair.
pub const RESIDUAL_TOLERANCE: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "non-finite entry at ({}, {})",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let n = values.len();
        let mut m = Self::zeros(n, n);
        for (i, v) in values.iter().enumerate() {
            m.data[i * n + i] = *v;
        }
        m
    }

    /// Builds a matrix from equal-length rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != cols {
                return Err(Error::Shape(format!(
                    "row {i} has length {}, expected {cols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::new(rows.len(), cols, data)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t.data[c * self.rows + r] = self.data[r * self.cols + c];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if self.cols != other.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let b_row = &other.data[k * other.cols..(k + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(b_row) {
                    *o += a * b;
                }
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} matrix by vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows).map(|r| dot(self.row(r), v)).collect())
    }

    /// `self · selfᵀ`, exploiting symmetry of the result.
    pub fn gram(&self) -> Matrix {
        let n = self.rows;
        let mut g = Self::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = dot(self.row(i), self.row(j));
                g.data[i * n + j] = v;
                g.data[j * n + i] = v;
            }
        }
        g
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::Shape(format!(
                "cannot subtract {}x{} and {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    /// Largest `|m_ij − m_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows.min(self.cols) {
            for j in (i + 1)..self.rows.min(self.cols) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Top eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// `dim × k`; column `j` pairs with `eigenvalues[j]`.
    pub eigenvectors: Matrix,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.eigenvectors.column(j)
    }

    /// Eigenvectors as rows, i.e. a `k × dim` basis.
    pub fn basis_rows(&self) -> Matrix {
        self.eigenvectors.transpose()
    }
}

/// Top-`k` eigenpairs of a symmetric matrix.
pub fn sym_eigen(m: &Matrix, k: usize) -> Result<EigenResult> {
    if !m.is_square() {
        return Err(Error::Shape(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    if k == 0 || k > n {
        return Err(Error::Argument(format!("k = {k} outside 1..={n}")));
    }
    let scale = m.max_abs();
    let asym = m.asymmetry();
    if asym > SYMMETRY_TOLERANCE * scale.max(f64::MIN_POSITIVE) && asym > 0.0 {
        return Err(Error::Shape(format!(
            "matrix is not symmetric: max |m_ij - m_ji| = {asym:e}"
        )));
    }
    let full = decompose(m)?;
    let out = truncate(full, k);
    check_residuals(m, &out)?;
    Ok(out)
}

/// Eigenpairs of the covariance `(1/N)·XᵀX` computed from the `N × N` Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct GramEigen {
    /// Only pairs with a nonzero eigenvalue; may hold fewer than requested.
    pub result: EigenResult,
    pub requested: usize,
    pub rank_deficient: bool,
    /// Every eigenvalue of the Gram matrix (scaled by `1/N`), descending.
    /// These are also the nonzero eigenvalues of the covariance.
    pub spectrum: Vec<f64>,
}

/// Top-`k` eigenpairs of `(1/N)·XᵀX` for already-centered rows `X` (`N × D`).
///
/// Works on the `N × N` matrix `X·Xᵀ/N`, so the cost is independent of `D`.
/// Each Gram eigenvector `u` with eigenvalue `λ > 0` maps to the unit
/// covariance eigenvector `Xᵀu / √(Nλ)`.
pub fn gram_eigen(centered_rows: &Matrix, k: usize) -> Result<GramEigen> {
    let n = centered_rows.rows();
    let d = centered_rows.cols();
    if k == 0 || k > n.min(d) {
        return Err(Error::Argument(format!(
            "k = {k} outside 1..={} for {n}x{d} data",
            n.min(d)
        )));
    }
    let gram = centered_rows.gram().scale(1.0 / n as f64);
    let full = decompose(&gram)?;
    let spectrum = full.eigenvalues.clone();
    let cutoff = rank_cutoff(&spectrum);

    let mut values = Vec::with_capacity(k);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    for j in 0..k {
        let lambda = full.eigenvalues[j];
        if lambda <= cutoff {
            break;
        }
        let u = full.eigenvectors.column(j);
        let mut v = vec![0.0; d];
        for (i, ui) in u.iter().enumerate() {
            for (vc, xc) in v.iter_mut().zip(centered_rows.row(i)) {
                *vc += ui * xc;
            }
        }
        let len = norm(&v);
        v.iter_mut().for_each(|x| *x /= len);
        canonical_sign(&mut v);
        values.push(lambda);
        vectors.push(v);
    }
    let achieved = values.len();
    let mut eigenvectors = Matrix::zeros(d, achieved);
    for (j, v) in vectors.iter().enumerate() {
        for (r, x) in v.iter().enumerate() {
            eigenvectors.set(r, j, *x);
        }
    }
    Ok(GramEigen {
        result: EigenResult {
            eigenvalues: values,
            eigenvectors,
        },
        requested: k,
        rank_deficient: achieved < k,
        spectrum,
    })
}

/// Threshold below which an eigenvalue of this spectrum counts as zero.
pub fn rank_cutoff(spectrum: &[f64]) -> f64 {
    let top = spectrum.iter().fold(0.0f64, |m, v| m.max(*v));
    RANK_TOLERANCE * top.max(1.0)
}

/// Orthogonal projector `BᵀB` onto the row span of an orthonormal `K × D` basis.
pub fn projector_from_basis(basis: &Matrix) -> Result<Matrix> {
    let dev = orthonormality_deviation(basis);
    if dev > ORTHONORMAL_TOLERANCE {
        return Err(Error::Argument(format!(
            "basis rows are not orthonormal: max |B·Bᵀ - I| = {dev:e}"
        )));
    }
    basis.transpose().matmul(basis)
}

/// `max |B·Bᵀ − I|` over all entries.
pub fn orthonormality_deviation(basis: &Matrix) -> f64 {
    let g = basis.gram();
    let mut worst = 0.0f64;
    for i in 0..g.rows() {
        for j in 0..g.cols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g.get(i, j) - target).abs());
        }
    }
    worst
}

/// Re-orthonormalises rows with two passes of modified Gram-Schmidt.
///
/// Used to restore a basis after lossy storage; fails if a row has no
/// component outside the span of the earlier rows.
pub fn orthonormalize_rows(m: &Matrix) -> Result<Matrix> {
    let mut rows: Vec<Vec<f64>> = (0..m.rows()).map(|r| m.row(r).to_vec()).collect();
    for _ in 0..2 {
        for i in 0..rows.len() {
            for j in 0..i {
                let (head, tail) = rows.split_at_mut(i);
                let p = dot(&tail[0], &head[j]);
                for (x, y) in tail[0].iter_mut().zip(&head[j]) {
                    *x -= p * y;
                }
            }
            let len = norm(&rows[i]);
            if len < 1e-6 {
                return Err(Error::Argument(format!(
                    "row {i} is linearly dependent on earlier rows"
                )));
            }
            rows[i].iter_mut().for_each(|x| *x /= len);
        }
    }
    Matrix::from_rows(&rows)
}

/// Largest principal angle (radians) between the row spans of two
/// orthonormal bases of equal rank.
///
/// Computed from the sine, `‖A − A·Bᵀ·B‖₂`, which stays accurate for tiny angles.
pub fn max_principal_angle(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.cols() != b.cols() || a.rows() != b.rows() {
        return Err(Error::Shape(format!(
            "principal angles need equal shapes, got {}x{} and {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if a.rows() == 0 {
        return Ok(0.0);
    }
    let coeffs = a.matmul(&b.transpose())?;
    let residual = a.sub(&coeffs.matmul(b)?)?;
    let g = residual.gram();
    let top = decompose(&g)?.eigenvalues[0].max(0.0);
    Ok(top.sqrt().min(1.0).asin())
}

// Full decomposition, eigenvalues descending, canonical signs and tie order.
fn decompose(m: &Matrix) -> Result<EigenResult> {
    let n = m.rows();
    if n == 0 {
        return Ok(EigenResult {
            eigenvalues: vec![],
            eigenvectors: Matrix::zeros(0, 0),
        });
    }
    // symmetrise so that the solver sees an exactly symmetric input
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = 0.5 * (m.get(i, j) + m.get(j, i));
        }
    }
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];
    tridiagonalize(&mut v, &mut d, &mut e);
    diagonalize(&mut v, &mut d, &mut e)?;

    let mut pairs: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|j| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i][j]).collect();
            canonical_sign(&mut col);
            (d[j], col)
        })
        .collect();
    let scale = d.iter().fold(1.0f64, |s, x| s.max(x.abs()));
    let tie = 1e-12 * scale;
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    // within a block of (numerically) equal eigenvalues, order by leading coordinate
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (pairs[end - 1].0 - pairs[end].0).abs() <= tie {
            end += 1;
        }
        if end - start > 1 {
            pairs[start..end].sort_by_key(|p| leading_index(&p.1));
        }
        start = end;
    }

    let mut eigenvectors = Matrix::zeros(n, n);
    let mut eigenvalues = Vec::with_capacity(n);
    for (j, (val, vec)) in pairs.into_iter().enumerate() {
        eigenvalues.push(val);
        for (i, x) in vec.into_iter().enumerate() {
            eigenvectors.set(i, j, x);
        }
    }
    Ok(EigenResult {
        eigenvalues,
        eigenvectors,
    })
}

fn truncate(full: EigenResult, k: usize) -> EigenResult {
    let n = full.eigenvectors.rows();
    let mut vecs = Matrix::zeros(n, k);
    for i in 0..n {
        for j in 0..k {
            vecs.set(i, j, full.eigenvectors.get(i, j));
        }
    }
    EigenResult {
        eigenvalues: full.eigenvalues[..k].to_vec(),
        eigenvectors: vecs,
    }
}

fn check_residuals(m: &Matrix, eig: &EigenResult) -> Result<()> {
    let bound = RESIDUAL_TOLERANCE * m.frobenius_norm().max(f64::MIN_POSITIVE);
    for j in 0..eig.len() {
        let v = eig.vector(j);
        let mv = m.mul_vec(&v)?;
        let r: f64 = mv
            .iter()
            .zip(&v)
            .map(|(a, b)| {
                let d = a - eig.eigenvalues[j] * b;
                d * d
            })
            .sum::<f64>()
            .sqrt();
        if r > bound {
            return Err(Error::Convergence {
                index: j,
                iterations: MAX_QL_ITERATIONS,
            });
        }
    }
    Ok(())
}

fn leading_index(v: &[f64]) -> usize {
    v.iter().position(|x| x.abs() > 1e-12).unwrap_or(v.len())
}

/// Flips `v` so that its first nonzero entry is positive.
fn canonical_sign(v: &mut [f64]) {
    if let Some(i) = v.iter().position(|x| x.abs() > 1e-12) {
        if v[i] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

// Householder reduction to tridiagonal form. On exit `v` holds the
// accumulated orthogonal transform, `d` the diagonal and `e[1..]` the
// subdiagonal.
fn tridiagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) {
    let n = d.len();
    d.copy_from_slice(&v[n - 1]);

    for i in (1..n).rev() {
        let scale: f64 = d[..i].iter().map(|x| x.abs()).sum();
        let mut h = 0.0;
        if scale == 0.0 {
            e[i] = d[i - 1];
            for j in 0..i {
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
                v[j][i] = 0.0;
            }
        } else {
            for dk in d[..i].iter_mut() {
                *dk /= scale;
                h += *dk * *dk;
            }
            let mut f = d[i - 1];
            let mut g = h.sqrt();
            if f > 0.0 {
                g = -g;
            }
            e[i] = scale * g;
            h -= f * g;
            d[i - 1] = f - g;
            e[..i].iter_mut().for_each(|x| *x = 0.0);

            for j in 0..i {
                f = d[j];
                v[j][i] = f;
                g = e[j] + v[j][j] * f;
                for k in (j + 1)..i {
                    g += v[k][j] * d[k];
                    e[k] += v[k][j] * f;
                }
                e[j] = g;
            }
            f = 0.0;
            for j in 0..i {
                e[j] /= h;
                f += e[j] * d[j];
            }
            let hh = f / (h + h);
            for j in 0..i {
                e[j] -= hh * d[j];
            }
            for j in 0..i {
                f = d[j];
                g = e[j];
                for k in j..i {
                    v[k][j] -= f * e[k] + g * d[k];
                }
                d[j] = v[i - 1][j];
                v[i][j] = 0.0;
            }
        }
        d[i] = h;
    }

    for i in 0..n - 1 {
        v[n - 1][i] = v[i][i];
        v[i][i] = 1.0;
        let h = d[i + 1];
        if h != 0.0 {
            for k in 0..=i {
                d[k] = v[k][i + 1] / h;
            }
            for j in 0..=i {
                let mut g = 0.0;
                for k in 0..=i {
                    g += v[k][i + 1] * v[k][j];
                }
                for k in 0..=i {
                    v[k][j] -= g * d[k];
                }
            }
        }
        for row in v.iter_mut().take(i + 1) {
            row[i + 1] = 0.0;
        }
    }
    for j in 0..n {
        d[j] = v[n - 1][j];
        v[n - 1][j] = 0.0;
    }
    v[n - 1][n - 1] = 1.0;
    e[0] = 0.0;
}

// Implicit QL on the tridiagonal matrix, accumulating rotations into `v`.
fn diagonalize(v: &mut [Vec<f64>], d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    let mut f = 0.0;
    let mut tst1 = 0.0f64;
    let eps = f64::EPSILON;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                if iter > MAX_QL_ITERATIONS {
                    return Err(Error::Convergence {
                        index: l,
                        iterations: MAX_QL_ITERATIONS,
                    });
                }
                let mut g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;

                p = d[m];
                let mut c = 1.0;
                let mut c2 = c;
                let mut c3 = c;
                let el1 = e[l + 1];
                let mut s = 0.0;
                let mut s2 = 0.0;
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    for row in v.iter_mut() {
                        h = row[i + 1];
                        row[i + 1] = s * row[i] + c * h;
                        row[i] = c * row[i] - s * h;
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 {
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    Ok(())
}
