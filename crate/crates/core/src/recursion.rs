//! Short-memory recursions for the equilibrium errors and differences in cases (i) and (ii).

use crate::companion::{build_f_pair_tol, stacked_case2};
use crate::error::{CksvarError, Result};
use crate::linalg::{Mat, Vector};
use crate::model::{split, Regime};
use crate::simulate::Path;
use crate::vecm::{kink_geometry_tol, projection_case1_tol, stacked_linear, VecmForm, DEFAULT_RANK_TOL};

/// State of the case-(i) recursion and the quantities it reconstructs, for t = 0..=n.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseOneTrace {
    pub zeta: Vec<Vector>,
    pub delta: Vec<f64>,
    /// δ_t ȳ_t, which should equal y_t⁻.
    pub y_minus: Vec<f64>,
    /// 𝛃⁺ᵀ𝐳_t computed from the levels.
    pub xi_direct: Vec<Vector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseTwoTrace {
    pub xi: Vec<Vector>,
    pub delta: Vec<f64>,
    /// 𝛃(y_t)ᵀ𝐳_t computed from the levels.
    pub xi_direct: Vec<Vector>,
}

fn check_path(vecm: &VecmForm, path: &Path) -> Result<()> {
    if !vecm.canonical {
        return Err(CksvarError::InvalidParameter("recursions require the canonical form".into()));
    }
    if path.p() != vecm.p {
        return Err(CksvarError::Dimension("path and model dimensions differ".into()));
    }
    if path.b != 0.0 {
        return Err(CksvarError::InvalidParameter("path must be simulated with a zero threshold".into()));
    }
    Ok(())
}

/// z_t, with presample values before the first one repeated as needed.
fn z_padded(path: &Path, t: i64) -> Vector {
    let first = -(path.presample() as i64) + 1;
    path.z(t.max(first))
}

/// Stack (z_t, z_{t−1}, …, z_{t−k+1}).
fn stacked_levels(path: &Path, t: i64, k: usize) -> Vector {
    let p = path.p();
    let mut v = Vector::zeros(k * p);
    for j in 0..k {
        v.rows_mut(j * p, p).copy_from(&z_padded(path, t - j as i64));
    }
    v
}

/// Stack (z_t, z*_{t−1}, …, z*_{t−k+1}) with z* = (y⁺, y⁻, x).
fn stacked_star(path: &Path, t: i64, k: usize) -> Vector {
    let p = path.p();
    let mut v = Vector::zeros(p + (k - 1) * (p + 1));
    v.rows_mut(0, p).copy_from(&z_padded(path, t));
    for j in 1..k {
        let z = z_padded(path, t - j as i64);
        let (yp, ym) = split(z[0]);
        let o = p + (j - 1) * (p + 1);
        v[o] = yp;
        v[o + 1] = ym;
        for i in 1..p {
            v[o + 1 + i] = z[i];
        }
    }
    v
}

fn innovation(path: &Path, t: i64) -> Vector {
    path.innovations.column((t - 1) as usize).into_owned()
}

pub fn short_memory_case1(vecm: &VecmForm, path: &Path) -> Result<CaseOneTrace> {
    check_path(vecm, path)?;
    let one = projection_case1_tol(vecm, DEFAULT_RANK_TOL)?;
    let (f0, f1) = build_f_pair_tol(vecm, DEFAULT_RANK_TOL)?;
    let p = vecm.p;
    let k = vecm.k;
    let (_, bt) = stacked_linear(&one.factor.alpha, &one.factor.beta, &vecm.gamma_plus);
    let n1 = bt.nrows();
    let b1p = bt.columns(0, p).into_owned();
    let dim = n1 + k;
    let eps_of = |u: &Vector| {
        let mut e = Vector::zeros(dim);
        e.rows_mut(0, n1).copy_from(&(&b1p * u));
        e[n1] = u[0];
        e
    };
    let mu = eps_of(&vecm.c);
    let y_minus_at = |t: i64| split(z_padded(path, t)[0]).1;

    let mut zeta0 = Vector::zeros(dim);
    zeta0.rows_mut(0, n1).copy_from(&(&bt * stacked_levels(path, 0, k)));
    zeta0[n1] = y_minus_at(0);
    for j in 1..k {
        zeta0[n1 + j] = y_minus_at(-(j as i64));
    }
    let mut zeta = vec![zeta0];
    let mut delta = vec![1.0];
    let mut y_minus = vec![y_minus_at(0)];
    let mut xi_direct = vec![&bt * stacked_levels(path, 0, k)];
    for t in 1..=path.n as i64 {
        let d = *delta.last().unwrap();
        let f = &f0 + (&f1 - &f0) * d;
        let next = &mu + f * zeta.last().unwrap() + eps_of(&innovation(path, t));
        let ybar = next[n1];
        let y_plus_prev = split(path.y_at(t - 1)).0;
        let dt = if y_plus_prev + ybar < 0.0 { (y_plus_prev + ybar) / ybar } else { 0.0 };
        delta.push(dt);
        y_minus.push(dt * ybar);
        xi_direct.push(&bt * stacked_levels(path, t, k));
        zeta.push(next);
    }
    Ok(CaseOneTrace { zeta, delta, y_minus, xi_direct })
}

pub fn short_memory_case2(vecm: &VecmForm, path: &Path) -> Result<CaseTwoTrace> {
    check_path(vecm, path)?;
    let geo = kink_geometry_tol(vecm, DEFAULT_RANK_TOL)?;
    let p = vecm.p;
    let k = vecm.k;
    let gammas: Vec<Mat> = (1..k).map(|i| vecm.gamma_full(i)).collect();
    let (alpha, bt_plus) = stacked_case2(&geo.alpha, geo.beta(Regime::Plus), &gammas, Regime::Plus);
    let (_, bt_minus) = stacked_case2(&geo.alpha, geo.beta(Regime::Minus), &gammas, Regime::Minus);
    let bt = |y: f64| if Regime::of(y) == Regime::Plus { &bt_plus } else { &bt_minus };
    let nz = alpha.nrows();
    let nxi = alpha.ncols();
    let lift = |v: &Vector| {
        let mut out = Vector::zeros(nz);
        out.rows_mut(0, p).copy_from(v);
        out
    };
    let c = lift(&vecm.c);
    let id = Mat::identity(nxi, nxi);

    let xi0 = bt(path.y_at(0)) * stacked_star(path, 0, k);
    let mut xi = vec![xi0.clone()];
    let mut delta = vec![0.0];
    let mut xi_direct = vec![xi0];
    for t in 1..=path.n as i64 {
        let (y0, y1) = (path.y_at(t - 1), path.y_at(t));
        let dt = if Regime::of(y0) != Regime::of(y1) { y1 / (y1 - y0) } else { 0.0 };
        let bbar_t = bt(y0) * (1.0 - dt) + bt(y1) * dt;
        let next = &bbar_t * &c + (&id + &bbar_t * &alpha) * xi.last().unwrap() + &bbar_t * lift(&innovation(path, t));
        delta.push(dt);
        xi_direct.push(bt(y1) * stacked_star(path, t, k));
        xi.push(next);
    }
    Ok(CaseTwoTrace { xi, delta, xi_direct })
}
