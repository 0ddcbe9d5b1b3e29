//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{CksvarError, Result};

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Thin SVD with singular values in decreasing order.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: Mat,
    pub s: Vec<f64>,
    pub v_t: Mat,
}

/// SVD whose reconstruction error is checked; nalgebra's default stopping rule can stop early
/// when a singular value is near zero, so tighter tolerances and the transpose are tried in turn.
pub fn svd(a: &Mat) -> Svd {
    let (m, n) = a.shape();
    let k = m.min(n);
    if k == 0 {
        return Svd { u: Mat::zeros(m, 0), s: Vec::new(), v_t: Mat::zeros(0, n) };
    }
    let scale = max_abs(a);
    let tol = 64.0 * f64::EPSILON * scale * (m.max(n) as f64);
    let mut best: Option<(f64, Svd)> = None;
    for eps in [f64::EPSILON, 1e-20, 1e-26, 1e-32] {
        for transpose in [false, true] {
            let target = if transpose { a.transpose() } else { a.clone() };
            let Some(d) = target.try_svd(true, true, eps, 20_000) else { continue };
            let (u, v_t) = (d.u.unwrap(), d.v_t.unwrap());
            let (u, v_t) = if transpose { (v_t.transpose(), u.transpose()) } else { (u, v_t) };
            let mut idx: Vec<usize> = (0..k).collect();
            idx.sort_by(|&i, &j| d.singular_values[j].total_cmp(&d.singular_values[i]));
            let out = Svd {
                u: Mat::from_fn(m, k, |i, j| u[(i, idx[j])]),
                s: idx.iter().map(|&i| d.singular_values[i]).collect(),
                v_t: Mat::from_fn(k, n, |i, j| v_t[(idx[i], j)]),
            };
            let err = max_abs(&(&out.u * Mat::from_diagonal(&Vector::from_vec(out.s.clone())) * &out.v_t - a));
            if err <= tol {
                return out;
            }
            if best.as_ref().map_or(true, |(e, _)| err < *e) {
                best = Some((err, out));
            }
        }
    }
    best.expect("at least one SVD attempt converges").1
}

pub fn singular_values(a: &Mat) -> Vec<f64> {
    svd(a).s
}

pub fn max_singular(a: &Mat) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Number of singular values strictly above `threshold`.
pub fn rank_above(a: &Mat, threshold: f64) -> usize {
    singular_values(a).iter().filter(|&&s| s > threshold).count()
}

/// Numerical rank relative to the largest singular value.
pub fn rank(a: &Mat, rel_tol: f64) -> usize {
    let s = singular_values(a);
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&v| v > rel_tol * smax).count(),
        _ => 0,
    }
}

pub fn spectral_norm(a: &Mat) -> f64 {
    max_singular(a)
}

/// Eigenvalues from a real Schur form with a bounded iteration count.
pub fn eigenvalues(a: &Mat) -> Vec<Complex<f64>> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    let scale = max_abs(a);
    if scale == 0.0 {
        return vec![Complex::new(0.0, 0.0); n];
    }
    if let Some(s) = Schur::try_new(a.clone(), f64::EPSILON, 5000) {
        return quasi_triangular_eigenvalues(&s.unpack().1);
    }
    // A fixed orthogonal similarity usually breaks the QR cycle that stalled the first attempt.
    let v = Vector::from_fn(n, |i, _| 1.0 + (i as f64 + 1.0).sqrt());
    let h = Mat::identity(n, n) - (&v * v.transpose()) * (2.0 / v.norm_squared());
    let b = &h * a * &h;
    if let Some(s) = Schur::try_new(b, f64::EPSILON, 50_000) {
        return quasi_triangular_eigenvalues(&s.unpack().1);
    }
    let nudged = a + &h * (1e-14 * scale);
    match Schur::try_new(nudged, f64::EPSILON, 50_000) {
        Some(s) => quasi_triangular_eigenvalues(&s.unpack().1),
        None => vec![Complex::new(f64::NAN, f64::NAN); n],
    }
}

fn quasi_triangular_eigenvalues(t: &Mat) -> Vec<Complex<f64>> {
    let n = t.nrows();
    let mut out = Vec::with_capacity(n);
    let mut i = 0;
    while i < n {
        if i + 1 < n && t[(i + 1, i)] != 0.0 {
            let (a, b, c, d) = (t[(i, i)], t[(i, i + 1)], t[(i + 1, i)], t[(i + 1, i + 1)]);
            let tr = 0.5 * (a + d);
            let disc = 0.25 * (a - d) * (a - d) + b * c;
            if disc >= 0.0 {
                let s = disc.sqrt();
                out.push(Complex::new(tr + s, 0.0));
                out.push(Complex::new(tr - s, 0.0));
            } else {
                let s = (-disc).sqrt();
                out.push(Complex::new(tr, s));
                out.push(Complex::new(tr, -s));
            }
            i += 2;
        } else {
            out.push(Complex::new(t[(i, i)], 0.0));
            i += 1;
        }
    }
    out
}

pub fn spectral_radius(a: &Mat) -> f64 {
    eigenvalues(a).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Orthonormal basis of the column space, keeping directions with singular value above `threshold`.
pub fn column_basis(a: &Mat, threshold: f64) -> Mat {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Mat::zeros(a.nrows(), 0);
    }
    let d = svd(a);
    let keep = d.s.iter().filter(|&&s| s > threshold).count();
    d.u.columns(0, keep).into_owned()
}

/// Distance from `v` to the column space of `a` (directions above `threshold`).
pub fn span_residual(a: &Mat, v: &Vector, threshold: f64) -> f64 {
    let u = column_basis(a, threshold);
    if u.ncols() == 0 {
        return v.norm();
    }
    (v - &u * (u.transpose() * v)).norm()
}

/// Orthonormal basis for the orthogonal complement of the column space of `a`.
pub fn orthocomplement(a: &Mat) -> Result<Mat> {
    let m = a.nrows();
    let n = a.ncols();
    if n == 0 {
        return Ok(Mat::identity(m, m));
    }
    if n > m || rank(a, 1e-10) < n {
        return Err(CksvarError::RankDeficient);
    }
    if n == m {
        return Ok(Mat::zeros(m, 0));
    }
    let u = column_basis(a, 0.0);
    let proj = Mat::identity(m, m) - &u * u.transpose();
    let eig = SymmetricEigen::new(proj);
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).unwrap());
    let mut out = Mat::zeros(m, m - n);
    for (col, &i) in idx.iter().take(m - n).enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        if v[v.iamax()] < 0.0 {
            v = -v;
        }
        out.set_column(col, &v);
    }
    Ok(out)
}

/// Inverse guarded by a condition-number threshold.
pub fn inverse_checked(a: &Mat, max_cond: f64) -> Option<Mat> {
    if a.nrows() != a.ncols() {
        return None;
    }
    if a.nrows() == 0 {
        return Some(Mat::zeros(0, 0));
    }
    let s = singular_values(a);
    let smax = s[0];
    let smin = *s.last().unwrap();
    if smin <= 0.0 || smax / smin > max_cond {
        return None;
    }
    a.clone().lu().try_inverse()
}

pub fn inverse(a: &Mat) -> Result<Mat> {
    inverse_checked(a, 1e14).ok_or_else(|| CksvarError::Assumption("singular matrix".into()))
}

pub fn determinant(a: &Mat) -> f64 {
    if a.nrows() == 0 {
        return 1.0;
    }
    a.determinant()
}

pub fn cholesky(a: &Mat) -> Result<Mat> {
    if a.nrows() != a.ncols() {
        return Err(CksvarError::Dimension("covariance must be square".into()));
    }
    let asym = (a - a.transpose()).abs().max();
    if asym > 1e-10 * (1.0 + a.abs().max()) {
        return Err(CksvarError::NotPositiveDefinite("not symmetric".into()));
    }
    nalgebra::Cholesky::new(a.clone())
        .map(|c| c.l())
        .ok_or_else(|| CksvarError::NotPositiveDefinite("Cholesky factorization failed".into()))
}

pub fn hstack(blocks: &[&Mat]) -> Mat {
    let rows = blocks.first().map(|b| b.nrows()).unwrap_or(0);
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut j = 0;
    for b in blocks {
        out.view_mut((0, j), (rows, b.ncols())).copy_from(*b);
        j += b.ncols();
    }
    out
}

pub fn vstack(blocks: &[&Mat]) -> Mat {
    let cols = blocks.first().map(|b| b.ncols()).unwrap_or(0);
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut i = 0;
    for b in blocks {
        out.view_mut((i, 0), (b.nrows(), cols)).copy_from(*b);
        i += b.nrows();
    }
    out
}

pub fn col(v: &Vector) -> Mat {
    Mat::from_column_slice(v.len(), 1, v.as_slice())
}

pub fn e1(n: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[0] = 1.0;
    v
}

pub fn max_abs(a: &Mat) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn rows(a: &Mat) -> Vec<Vec<f64>> {
    (0..a.nrows()).map(|i| a.row(i).iter().copied().collect()).collect()
}

pub fn from_rows(rows: &[Vec<f64>], ncols: usize) -> Result<Mat> {
    if let Some(bad) = rows.iter().position(|r| r.len() != ncols) {
        return Err(CksvarError::Parse(format!(
            "ragged matrix: row {} has {} entries, expected {}",
            bad,
            rows[bad].len(),
            ncols
        )));
    }
    Ok(Mat::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}
