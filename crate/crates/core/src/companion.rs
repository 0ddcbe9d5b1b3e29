//! Companion matrices, autoregressive roots and the regularity conditions of each case.

use nalgebra::Complex;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CksvarError, Result};
use crate::jsr::{self, CompanionSet, JsrEstimate};
use crate::linalg::{self, Mat, Vector};
use crate::model::{to_canonical, CksvarModel, Regime};
use crate::vecm::{
    classify_case, kink_geometry_tol, projection_case1_tol, vecm_decompose, CaseClassification, CaseId,
    VecmForm,
};

pub const UNIT_ROOT_WINDOW: f64 = 1e-6;

/// Roots of det Φ±(λ) = det(Φ₀± − Σ Φᵢ± λⁱ), as reciprocals of the nonzero companion eigenvalues.
pub fn det_poly_roots(model: &CksvarModel, regime: Regime) -> Result<Vec<Complex<f64>>> {
    model.check()?;
    let p = model.p;
    let k = model.k;
    let phi0_inv = linalg::inverse(&model.lag_block(0, regime))?;
    let mut comp = Mat::zeros(k * p, k * p);
    for i in 1..=k {
        let a = &phi0_inv * model.lag_block(i, regime);
        comp.view_mut((0, (i - 1) * p), (p, p)).copy_from(&a);
    }
    for i in 0..(k - 1) * p {
        comp[(p + i, i)] = 1.0;
    }
    let scale = 1.0 + linalg::max_abs(&comp);
    let mut roots: Vec<Complex<f64>> = linalg::eigenvalues(&comp)
        .into_iter()
        .filter(|z| z.norm() > 1e-12 * scale)
        .map(|z| Complex::new(1.0, 0.0) / z)
        .collect();
    roots.sort_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap());
    Ok(roots)
}

pub fn is_unit_root(z: &Complex<f64>) -> bool {
    (z - Complex::new(1.0, 0.0)).norm() < UNIT_ROOT_WINDOW
}

/// Lag columns φᵢ± (i = 1..=k) of the canonical form.
fn lag_columns(vecm: &VecmForm, regime: Regime) -> Vec<Vector> {
    vecm.lag_matrices(regime).iter().skip(1).map(|m| m.column(0).into_owned()).collect()
}

/// F_δ for case (i); the state stacks (𝛏⁺, ỹ, y⁻ lags) and has dimension p(k−1)+r+k.
pub fn build_f(vecm: &VecmForm, delta: f64) -> Result<Mat> {
    build_f_tol(vecm, delta, crate::vecm::DEFAULT_RANK_TOL)
}

pub fn build_f_tol(vecm: &VecmForm, delta: f64, tol: f64) -> Result<Mat> {
    let (f0, f1) = build_f_pair_tol(vecm, tol)?;
    Ok(&f0 + (&f1 - &f0) * delta)
}

/// (F₀, F₁).
pub fn build_f_pair(vecm: &VecmForm) -> Result<(Mat, Mat)> {
    build_f_pair_tol(vecm, crate::vecm::DEFAULT_RANK_TOL)
}

pub fn build_f_pair_tol(vecm: &VecmForm, tol: f64) -> Result<(Mat, Mat)> {
    let one = projection_case1_tol(vecm, tol)?;
    let p = vecm.p;
    let k = vecm.k;
    let r = one.factor.rank();
    let (a, bt) = crate::vecm::stacked_linear(&one.factor.alpha, &one.factor.beta, &vecm.gamma_plus);
    let n1 = p * (k - 1) + r;
    let dim = n1 + k;
    let lp = lag_columns(vecm, Regime::Plus);
    let lm = lag_columns(vecm, Regime::Minus);
    let diff: Vec<Vector> = lm.iter().zip(&lp).map(|(m, p)| m - p).collect();
    let b1p = bt.columns(0, p).into_owned();
    let a_row0 = a.row(0).into_owned();
    let build = |delta: f64| {
        let mut f = Mat::zeros(dim, dim);
        let top = Mat::identity(n1, n1) + &bt * &a;
        f.view_mut((0, 0), (n1, n1)).copy_from(&top);
        let c1 = &b1p * &diff[0] * delta;
        f.view_mut((0, n1), (n1, 1)).copy_from(&c1);
        for (j, d) in diff.iter().enumerate().skip(1) {
            let col = &b1p * d;
            f.view_mut((0, n1 + j), (n1, 1)).copy_from(&col);
        }
        for j in 0..n1 {
            f[(n1, j)] = a_row0[j];
        }
        f[(n1, n1)] = (1.0 + diff[0][0]) * delta;
        for (j, d) in diff.iter().enumerate().skip(1) {
            f[(n1, n1 + j)] = d[0];
        }
        f[(n1 + 1, n1)] = delta;
        for i in 0..k.saturating_sub(2) {
            f[(n1 + 2 + i, n1 + 1 + i)] = 1.0;
        }
        f
    };
    Ok((build(0.0), build(1.0)))
}

/// Number of short-run blocks that are not identically zero in either regime.
fn effective_lags(vecm: &VecmForm) -> usize {
    let mut m = vecm.k - 1;
    while m > 0 && linalg::max_abs(&vecm.gamma_plus[m - 1]) == 0.0 && linalg::max_abs(&vecm.gamma_minus[m - 1]) == 0.0 {
        m -= 1;
    }
    m
}

/// S(y): maps z = (y, x) to (y⁺, y⁻, x) for a given sign of y.
pub fn s_matrix(p: usize, regime: Regime) -> Mat {
    let mut s = Mat::zeros(p + 1, p);
    match regime {
        Regime::Plus => s[(0, 0)] = 1.0,
        Regime::Minus => s[(1, 0)] = 1.0,
    }
    for j in 1..p {
        s[(j + 1, j)] = 1.0;
    }
    s
}

/// 𝛂 and 𝛃(y)ᵀ for case (ii) with `m` short-run blocks.
pub fn stacked_case2(alpha: &Mat, beta: &Mat, gamma_full: &[Mat], regime: Regime) -> (Mat, Mat) {
    let p = alpha.nrows();
    let r = alpha.ncols();
    let m = gamma_full.len();
    let q = p + 1;
    let ncol = r + m * q;
    let nrow = p + m * q;
    let mut a = Mat::zeros(nrow, ncol);
    let mut bt = Mat::zeros(ncol, nrow);
    a.view_mut((0, 0), (p, r)).copy_from(alpha);
    bt.view_mut((0, 0), (r, p)).copy_from(&beta.transpose());
    let s = s_matrix(p, regime);
    for (i, g) in gamma_full.iter().enumerate() {
        let c0 = r + i * q;
        a.view_mut((0, c0), (p, q)).copy_from(g);
        let rows_start = p + i * q;
        for d in 0..q {
            a[(rows_start + d, c0 + d)] = 1.0;
            bt[(c0 + d, rows_start + d)] = -1.0;
        }
        if i == 0 {
            bt.view_mut((c0, 0), (q, p)).copy_from(&s);
        } else {
            let prev = p + (i - 1) * q;
            for d in 0..q {
                bt[(c0 + d, prev + d)] = 1.0;
            }
        }
    }
    (a, bt)
}

/// {I + 𝛃(+1)ᵀ𝛂, I + 𝛃(−1)ᵀ𝛂}, dropping trailing short-run blocks that vanish in both regimes.
pub fn build_case2_set(vecm: &VecmForm) -> Result<CompanionSet> {
    build_case2_set_tol(vecm, crate::vecm::DEFAULT_RANK_TOL)
}

pub fn build_case2_set_tol(vecm: &VecmForm, tol: f64) -> Result<CompanionSet> {
    let geo = kink_geometry_tol(vecm, tol)?;
    let m = effective_lags(vecm);
    let gammas: Vec<Mat> = (1..=m).map(|i| vecm.gamma_full(i)).collect();
    let mut mats = Vec::with_capacity(2);
    for regime in [Regime::Plus, Regime::Minus] {
        let (a, bt) = stacked_case2(&geo.alpha, geo.beta(regime), &gammas, regime);
        let n = bt.nrows();
        mats.push(Mat::identity(n, n) + bt * a);
    }
    CompanionSet::new(mats, vec!["I+beta(+1)'alpha".into(), "I+beta(-1)'alpha".into()])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub value: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    pub cvar_roots_ok: bool,
    pub roots_plus: Vec<Complex<f64>>,
    pub roots_minus: Vec<Complex<f64>>,
    pub q_plus: usize,
    pub q_minus: usize,
    pub rank_ok: bool,
    pub deterministic_ok: bool,
    pub classification: Option<CaseClassification>,
    pub case_specific: Vec<CheckResult>,
    pub jsr: Option<JsrEstimate>,
    pub messages: Vec<String>,
}

impl AssumptionReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.case_specific.iter().find(|c| c.name == name)
    }

    pub fn all_ok(&self) -> bool {
        self.cvar_roots_ok
            && self.rank_ok
            && self.deterministic_ok
            && self.classification.is_some()
            && self.case_specific.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Value {
        let roots = |rs: &[Complex<f64>]| rs.iter().map(|z| json!([z.re, z.im])).collect::<Vec<_>>();
        json!({
            "all_ok": self.all_ok(),
            "cvar_roots_ok": self.cvar_roots_ok,
            "roots_plus": roots(&self.roots_plus),
            "roots_minus": roots(&self.roots_minus),
            "q_plus": self.q_plus,
            "q_minus": self.q_minus,
            "rank_ok": self.rank_ok,
            "deterministic_ok": self.deterministic_ok,
            "classification": self.classification.as_ref().map(CaseClassification::to_json),
            "case_specific": self.case_specific,
            "jsr": self.jsr,
            "messages": self.messages,
        })
    }
}

fn empty_report(message: String) -> AssumptionReport {
    AssumptionReport {
        cvar_roots_ok: false,
        roots_plus: Vec::new(),
        roots_minus: Vec::new(),
        q_plus: 0,
        q_minus: 0,
        rank_ok: false,
        deterministic_ok: false,
        classification: None,
        case_specific: Vec::new(),
        jsr: None,
        messages: vec![message],
    }
}

fn roots_ok(roots: &[Complex<f64>], messages: &mut Vec<String>, label: &str) -> (bool, usize) {
    let mut ok = true;
    let mut q = 0;
    for z in roots {
        if is_unit_root(z) {
            q += 1;
        } else if z.norm() <= 1.0 + UNIT_ROOT_WINDOW {
            ok = false;
            messages.push(format!("CVAR.1: root {:.6}{:+.6}i of det Phi{label}(lambda) is not outside the unit circle", z.re, z.im));
        }
    }
    (ok, q)
}

/// Runs every check that applies to the model, on its canonical form.
pub fn verify_assumptions(model: &CksvarModel, tol: f64, depth: usize) -> AssumptionReport {
    verify_assumptions_with_budget(model, tol, depth, jsr::DEFAULT_BUDGET)
}

pub fn verify_assumptions_with_budget(model: &CksvarModel, tol: f64, depth: usize, budget: usize) -> AssumptionReport {
    let canon = match to_canonical(model) {
        Ok(c) => c,
        Err(e) => return empty_report(format!("canonical transform failed: {e}")),
    };
    let cm = &canon.model;
    let mut messages = Vec::new();
    let (roots_plus, roots_minus) = match (det_poly_roots(cm, Regime::Plus), det_poly_roots(cm, Regime::Minus)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return empty_report(format!("root computation failed: {e}")),
    };
    let (ok_p, q_plus) = roots_ok(&roots_plus, &mut messages, "+");
    let (ok_m, q_minus) = roots_ok(&roots_minus, &mut messages, "-");
    let vecm = match vecm_decompose(cm) {
        Ok(v) => v,
        Err(e) => return empty_report(format!("error-correction form failed: {e}")),
    };
    let cls = match classify_case(&vecm, tol) {
        Ok(c) => c,
        Err(e) => return empty_report(format!("classification failed: {e}")),
    };
    let p = cm.p;
    let rank_ok = q_plus + cls.r_plus == p && q_minus + cls.r_minus == p;
    if !rank_ok {
        messages.push(format!(
            "CVAR.2: unit-root counts ({q_plus}, {q_minus}) do not match p minus ranks ({}, {})",
            p - cls.r_plus,
            p - cls.r_minus
        ));
    }
    let thr = cls.threshold.max(tol * vecm.c.norm());
    let c_norm = vecm.c.norm();
    let deterministic_ok = c_norm == 0.0
        || (linalg::span_residual(&vecm.pi(Regime::Plus), &vecm.c, cls.threshold) <= thr
            && linalg::span_residual(&vecm.pi(Regime::Minus), &vecm.c, cls.threshold) <= thr);
    if !deterministic_ok {
        messages.push("CVAR.3: intercept is not in the intersection of the column spaces of Pi+ and Pi-".into());
    }
    let mut case_specific = Vec::new();
    let mut jsr_est = None;
    match cls.table_case {
        Some(CaseId::RegulatedCoint) => {
            let target = if cls.mirrored {
                messages.push("case (i) holds after replacing y by -y; checks run on the mirrored model".into());
                vecm_decompose(&cm.mirror())
            } else {
                Ok(vecm.clone())
            };
            match target.and_then(|v| projection_case1_tol(&v, tol).map(|one| (v, one))) {
                Ok((v, one)) => {
                    match build_f_pair_tol(&v, tol)
                        .and_then(|(f0, f1)| CompanionSet::new(vec![f0, f1], vec!["F0".into(), "F1".into()]))
                        .and_then(|set| jsr::jsr_bounds_with_budget(&set, depth, budget))
                    {
                        Ok(est) => {
                            case_specific.push(CheckResult {
                                name: "CO(i).2 JSR".into(),
                                passed: est.certified_lt_one,
                                value: Some(est.upper),
                                detail: format!("JSR in [{:.6}, {:.6}] at depth {}", est.lower, est.upper, est.depth),
                            });
                            jsr_est = Some(est);
                        }
                        Err(e) => case_specific.push(failed("CO(i).2 JSR", e)),
                    }
                    case_specific.push(CheckResult {
                        name: "CO(i).3 kappa1<0".into(),
                        passed: one.kappa1 < 0.0,
                        value: Some(one.kappa1),
                        detail: format!("kappa1 = {:.6}", one.kappa1),
                    });
                }
                Err(e) => {
                    case_specific.push(failed("CO(i).2 JSR", e.clone()));
                    case_specific.push(failed("CO(i).3 kappa1<0", e));
                }
            }
        }
        Some(CaseId::KinkedCoint) => {
            match kink_geometry_tol(&vecm, tol) {
                Ok(geo) => case_specific.push(CheckResult {
                    name: "CO(ii).3 det-sign".into(),
                    passed: true,
                    value: Some(geo.mu),
                    detail: format!("determinants {:.6} and {:.6}, mu = {:.6}", geo.det_plus, geo.det_minus, geo.mu),
                }),
                Err(e) => case_specific.push(failed("CO(ii).3 det-sign", e)),
            }
            match build_case2_set_tol(&vecm, tol).and_then(|set| jsr::jsr_bounds_with_budget(&set, depth, budget)) {
                Ok(est) => {
                    case_specific.push(CheckResult {
                        name: "CO(ii).2 JSR".into(),
                        passed: est.certified_lt_one,
                        value: Some(est.upper),
                        detail: format!("JSR in [{:.6}, {:.6}] at depth {}", est.lower, est.upper, est.depth),
                    });
                    jsr_est = Some(est);
                }
                Err(e) => case_specific.push(failed("CO(ii).2 JSR", e)),
            }
        }
        Some(CaseId::LinearInNonlinearVecm) => {
            messages.push("case (iii) detected: no case-specific regularity conditions are checked".into());
        }
        _ => messages.push(format!("no cointegration case applies: {}", cls.diagnostics.join("; "))),
    }
    AssumptionReport {
        cvar_roots_ok: ok_p && ok_m,
        roots_plus,
        roots_minus,
        q_plus,
        q_minus,
        rank_ok,
        deterministic_ok,
        classification: Some(cls),
        case_specific,
        jsr: jsr_est,
        messages,
    }
}

fn failed(name: &str, e: CksvarError) -> CheckResult {
    CheckResult { name: name.into(), passed: false, value: None, detail: e.to_string() }
}
