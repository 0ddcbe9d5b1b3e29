//! Random model generators for property and acceptance tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::companion::verify_assumptions_with_budget;
use crate::error::{CksvarError, Result};
use crate::linalg::{self, Mat, Vector};
use crate::model::{CksvarModel, Regime};
use crate::vecm::{classify_case, vecm_decompose, CaseId, VecmForm, DEFAULT_RANK_TOL};

const MAX_TRIES: usize = 500;
const CHECK_DEPTH: usize = 10;
const CHECK_BUDGET: usize = 50_000;

pub fn uniform_mat(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Mat {
    Mat::from_fn(rows, cols, |_, _| rng.gen_range(-scale..scale))
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::from_fn(n, |_, _| rng.gen_range(-scale..scale))
}

pub fn random_pd(rng: &mut ChaCha8Rng, p: usize) -> Mat {
    let l = uniform_mat(rng, p, p, 0.5);
    &l * l.transpose() + Mat::identity(p, p) * 0.5
}

/// A structural model that satisfies both coherence and the sign normalisation, with small lag coefficients.
pub fn random_coherent_model(rng: &mut ChaCha8Rng, p: usize, k: usize) -> CksvarModel {
    let xx = Mat::identity(p - 1, p - 1) + uniform_mat(rng, p - 1, p - 1, 0.3);
    let yx = uniform_vec(rng, p - 1, 0.8);
    let xy_plus = uniform_vec(rng, p - 1, 0.8);
    let xy_minus = uniform_vec(rng, p - 1, 0.8);
    let w = linalg::inverse(&xx).expect("diagonally dominant").transpose() * &yx;
    let mut phi0_plus = Vector::zeros(p);
    let mut phi0_minus = Vector::zeros(p);
    phi0_plus[0] = w.dot(&xy_plus) + rng.gen_range(0.5..1.5);
    phi0_minus[0] = w.dot(&xy_minus) + rng.gen_range(0.5..1.5);
    phi0_plus.rows_mut(1, p - 1).copy_from(&xy_plus);
    phi0_minus.rows_mut(1, p - 1).copy_from(&xy_minus);
    let mut phi0_x = Mat::zeros(p, p - 1);
    phi0_x.row_mut(0).copy_from(&yx.transpose());
    phi0_x.rows_mut(1, p - 1).copy_from(&xx);
    let a = 0.3 / ((p + 1) * k) as f64;
    CksvarModel {
        p,
        k,
        b: 0.0,
        c: uniform_vec(rng, p, 0.2),
        phi0_plus,
        phi0_minus,
        phi0_x,
        phi_plus: (0..k).map(|_| uniform_vec(rng, p, a)).collect(),
        phi_minus: (0..k).map(|_| uniform_vec(rng, p, a)).collect(),
        phi_x: (0..k).map(|_| uniform_mat(rng, p, p - 1, a)).collect(),
        sigma: random_pd(rng, p),
    }
}

/// α with βᵀα = −a·I for a random a in (0.2, 0.8).
fn error_correction(rng: &mut ChaCha8Rng, beta: &Mat) -> Mat {
    let r = beta.ncols();
    if r == 0 {
        return Mat::zeros(beta.nrows(), 0);
    }
    let a = rng.gen_range(0.2..0.8);
    let btb = beta.transpose() * beta;
    -(beta * linalg::inverse(&btb).expect("full column rank")) * a
}

fn small_gammas(rng: &mut ChaCha8Rng, p: usize, k: usize) -> Vec<Mat> {
    let s = 0.15 / (p * k) as f64;
    (1..k).map(|_| uniform_mat(rng, p, p + 1, s)).collect()
}

fn accepted(model: &CksvarModel, want: CaseId) -> bool {
    let Ok(v) = vecm_decompose(model) else { return false };
    let Ok(cls) = classify_case(&v, DEFAULT_RANK_TOL) else { return false };
    if cls.case_id != want || cls.mirrored {
        return false;
    }
    verify_assumptions_with_budget(model, DEFAULT_RANK_TOL, CHECK_DEPTH, CHECK_BUDGET).all_ok()
}

/// A canonical case-(i) model passing every assumption check.
pub fn random_case_one(rng: &mut ChaCha8Rng, p: usize, k: usize) -> Result<CksvarModel> {
    for _ in 0..MAX_TRIES {
        let r = if p == 1 { 0 } else { rng.gen_range(0..p) };
        let beta = uniform_mat(rng, p, r, 1.0);
        let alpha = error_correction(rng, &beta);
        let pi = &alpha * beta.transpose();
        let pi_plus = pi.column(0).into_owned();
        let pi_x = pi.columns(1, p - 1).into_owned();
        let gammas = small_gammas(rng, p, k);
        let d = uniform_vec(rng, p, 0.6);
        let sigma = random_pd(rng, p);
        let build = |d: &Vector| {
            VecmForm::compose_canonical(&pi_plus, &(&pi_plus + d), &pi_x, &gammas, Vector::zeros(p), sigma.clone())
        };
        let Ok(m) = build(&d) else { continue };
        if accepted(&m, CaseId::RegulatedCoint) {
            return Ok(m);
        }
        let Ok(m) = build(&-d) else { continue };
        if accepted(&m, CaseId::RegulatedCoint) {
            return Ok(m);
        }
    }
    Err(CksvarError::InvalidParameter("no case (i) model found within the retry budget".into()))
}

/// A canonical case-(ii) model with distinct regimes passing every assumption check.
pub fn random_case_two(rng: &mut ChaCha8Rng, p: usize, k: usize) -> Result<CksvarModel> {
    if p == 1 && k == 1 {
        return Err(CksvarError::InvalidParameter("case (ii) with p = 1 needs k >= 2".into()));
    }
    for _ in 0..MAX_TRIES {
        let r = if p == 1 { 0 } else { rng.gen_range(1..p) };
        let beta_x = uniform_mat(rng, p - 1, r, 1.0);
        let theta_plus = uniform_vec(rng, p - 1, 1.0);
        let theta_minus = &theta_plus + uniform_vec(rng, p - 1, 0.5);
        let beta_of = |theta: &Vector| {
            let mut b = Mat::zeros(p, r);
            b.row_mut(0).copy_from(&(beta_x.transpose() * theta).transpose());
            b.rows_mut(1, p - 1).copy_from(&beta_x);
            b
        };
        let bp = beta_of(&theta_plus);
        let bm = beta_of(&theta_minus);
        let alpha = error_correction(rng, &bp);
        let pp = &alpha * bp.transpose();
        let pm = &alpha * bm.transpose();
        let gammas = small_gammas(rng, p, k);
        let Ok(m) = VecmForm::compose_canonical(
            &pp.column(0).into_owned(),
            &pm.column(0).into_owned(),
            &pp.columns(1, p - 1).into_owned(),
            &gammas,
            Vector::zeros(p),
            random_pd(rng, p),
        ) else {
            continue;
        };
        if m.is_linear(1e-9) {
            continue;
        }
        if accepted(&m, CaseId::KinkedCoint) {
            return Ok(m);
        }
    }
    Err(CksvarError::InvalidParameter("no case (ii) model found within the retry budget".into()))
}

pub fn regimes_differ(m: &CksvarModel) -> bool {
    (0..m.k).any(|i| m.lag_block(i + 1, Regime::Plus) != m.lag_block(i + 1, Regime::Minus))
}
