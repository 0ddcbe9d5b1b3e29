//! Error-correction form, case classification, reduced-rank factorizations and projections.

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CksvarError, Result};
use crate::linalg::{self, Mat, Vector};
use crate::model::{CksvarModel, Regime};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Γᵢ± are indexed from lag 1 at position 0; k is at least 2.
#[derive(Debug, Clone, PartialEq)]
pub struct VecmForm {
    pub p: usize,
    pub k: usize,
    pub phi0_plus: Mat,
    pub phi0_minus: Mat,
    pub pi_plus: Vector,
    pub pi_minus: Vector,
    pub pi_x: Mat,
    pub gamma_plus: Vec<Mat>,
    pub gamma_minus: Vec<Mat>,
    pub c: Vector,
    pub sigma: Mat,
    pub canonical: bool,
}

pub fn vecm_decompose(model: &CksvarModel) -> Result<VecmForm> {
    model.check()?;
    if model.b != 0.0 {
        return Err(CksvarError::InvalidParameter("threshold must be recentred to zero first".into()));
    }
    let m = model.padded_to(2);
    let p = m.p;
    let sum_lags = |from: usize, regime: Regime| {
        (from..=m.k).fold(Mat::zeros(p, p), |acc, i| acc + m.lag_block(i, regime))
    };
    let pi_p = sum_lags(1, Regime::Plus) - m.lag_block(0, Regime::Plus);
    let pi_m = sum_lags(1, Regime::Minus) - m.lag_block(0, Regime::Minus);
    let gammas = |regime| (1..m.k).map(|i| -sum_lags(i + 1, regime)).collect::<Vec<_>>();
    Ok(VecmForm {
        p,
        k: m.k,
        phi0_plus: m.lag_block(0, Regime::Plus),
        phi0_minus: m.lag_block(0, Regime::Minus),
        pi_plus: pi_p.column(0).into_owned(),
        pi_minus: pi_m.column(0).into_owned(),
        pi_x: pi_p.columns(1, p - 1).into_owned(),
        gamma_plus: gammas(Regime::Plus),
        gamma_minus: gammas(Regime::Minus),
        c: m.c.clone(),
        sigma: m.sigma.clone(),
        canonical: m.is_canonical(),
    })
}

impl VecmForm {
    /// Π± = [π±, Πˣ].
    pub fn pi(&self, regime: Regime) -> Mat {
        let col = match regime {
            Regime::Plus => &self.pi_plus,
            Regime::Minus => &self.pi_minus,
        };
        linalg::hstack(&[&linalg::col(col), &self.pi_x])
    }

    /// Γᵢ± for i = 1..k−1.
    pub fn gamma(&self, i: usize, regime: Regime) -> &Mat {
        match regime {
            Regime::Plus => &self.gamma_plus[i - 1],
            Regime::Minus => &self.gamma_minus[i - 1],
        }
    }

    /// [γᵢ⁺, γᵢ⁻, Γᵢˣ].
    pub fn gamma_full(&self, i: usize) -> Mat {
        let gp = &self.gamma_plus[i - 1];
        let gm = &self.gamma_minus[i - 1];
        let p = self.p;
        linalg::hstack(&[&gp.columns(0, 1).into_owned(), &gm.columns(0, 1).into_owned(), &gp.columns(1, p - 1).into_owned()])
    }

    pub fn phi0(&self, regime: Regime) -> &Mat {
        match regime {
            Regime::Plus => &self.phi0_plus,
            Regime::Minus => &self.phi0_minus,
        }
    }

    /// Γ±(1) = Φ₀± − Σ Γᵢ±.
    pub fn gamma_at_one(&self, regime: Regime) -> Mat {
        (1..self.k).fold(self.phi0(regime).clone(), |acc, i| acc - self.gamma(i, regime))
    }

    /// Lag matrices Φᵢ± (i = 0..=k) rebuilt from Π± and Γᵢ±.
    pub fn lag_matrices(&self, regime: Regime) -> Vec<Mat> {
        let k = self.k;
        let phi0 = self.phi0(regime).clone();
        let g = |i: usize| {
            if i == 0 || i >= k {
                Mat::zeros(self.p, self.p)
            } else {
                self.gamma(i, regime).clone()
            }
        };
        let mut out = vec![phi0.clone()];
        out.push(&phi0 + self.pi(regime) + g(1));
        for i in 2..=k {
            out.push(g(i) - g(i - 1));
        }
        out
    }

    pub fn is_linear(&self, tol: f64) -> bool {
        let close = |a: &Mat, b: &Mat| linalg::max_abs(&(a - b)) <= tol * (1.0 + linalg::max_abs(a).max(linalg::max_abs(b)));
        close(&self.phi0_plus, &self.phi0_minus)
            && close(&self.pi(Regime::Plus), &self.pi(Regime::Minus))
            && (1..self.k).all(|i| close(self.gamma(i, Regime::Plus), self.gamma(i, Regime::Minus)))
    }

    /// Canonical model with the given long-run and short-run coefficients.
    /// `gamma_full[i]` is [γ⁺, γ⁻, Γˣ] for lag i + 1.
    pub fn compose_canonical(
        pi_plus: &Vector,
        pi_minus: &Vector,
        pi_x: &Mat,
        gamma_full: &[Mat],
        c: Vector,
        sigma: Mat,
    ) -> Result<CksvarModel> {
        let p = pi_plus.len();
        let k = gamma_full.len() + 1;
        let reg = |regime: Regime| {
            let pi_col = if regime == Regime::Plus { pi_plus } else { pi_minus };
            let pi = linalg::hstack(&[&linalg::col(pi_col), pi_x]);
            let g = |i: usize| -> Mat {
                if i == 0 || i >= k {
                    return Mat::zeros(p, p);
                }
                let gf = &gamma_full[i - 1];
                let j = if regime == Regime::Plus { 0 } else { 1 };
                linalg::hstack(&[&gf.columns(j, 1).into_owned(), &gf.columns(2, p - 1).into_owned()])
            };
            let mut lags = vec![Mat::identity(p, p) + pi + g(1)];
            for i in 2..=k {
                lags.push(g(i) - g(i - 1));
            }
            lags
        };
        let lp = reg(Regime::Plus);
        let lm = reg(Regime::Minus);
        CksvarModel::canonical(
            c,
            lp.iter().map(|m| m.column(0).into_owned()).collect(),
            lm.iter().map(|m| m.column(0).into_owned()).collect(),
            lp.iter().map(|m| m.columns(1, p - 1).into_owned()).collect(),
            sigma,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseId {
    RegulatedCoint,
    KinkedCoint,
    LinearInNonlinearVecm,
    Linear,
    Unsupported,
}

impl CaseId {
    pub fn label(self) -> &'static str {
        match self {
            CaseId::RegulatedCoint => "case (i): regulated cointegration",
            CaseId::KinkedCoint => "case (ii): kinked cointegration",
            CaseId::LinearInNonlinearVecm => "case (iii): linear cointegration in a nonlinear VECM",
            CaseId::Linear => "linear",
            CaseId::Unsupported => "unsupported",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Factorization {
    pub alpha: Mat,
    pub beta: Mat,
    pub alpha_perp: Mat,
    pub beta_perp: Mat,
}

impl Factorization {
    pub fn rank(&self) -> usize {
        self.alpha.ncols()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "alpha": linalg::rows(&self.alpha),
            "beta": linalg::rows(&self.beta),
            "alpha_perp": linalg::rows(&self.alpha_perp),
            "beta_perp": linalg::rows(&self.beta_perp),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseClassification {
    pub case_id: CaseId,
    /// Table row matched by the ranks, ignoring whether the coefficients coincide.
    pub table_case: Option<CaseId>,
    /// The ranks match case (i) after replacing y by −y.
    pub mirrored: bool,
    pub linear: bool,
    pub r_plus: usize,
    pub r_minus: usize,
    pub rank_pi_x: usize,
    pub r: Option<usize>,
    pub pi_plus_in_span: bool,
    pub pi_minus_in_span: bool,
    pub tolerance_used: f64,
    /// Absolute singular-value threshold derived from the tolerance.
    pub threshold: f64,
    pub factor_plus: Option<Factorization>,
    pub factor_minus: Option<Factorization>,
    pub diagnostics: Vec<String>,
}

impl CaseClassification {
    pub fn to_json(&self) -> Value {
        json!({
            "case": self.case_id,
            "label": self.case_id.label(),
            "table_case": self.table_case,
            "mirrored": self.mirrored,
            "linear": self.linear,
            "r_plus": self.r_plus,
            "r_minus": self.r_minus,
            "rank_pi_x": self.rank_pi_x,
            "r": self.r,
            "pi_plus_in_span": self.pi_plus_in_span,
            "pi_minus_in_span": self.pi_minus_in_span,
            "tolerance_used": self.tolerance_used,
            "factor_plus": self.factor_plus.as_ref().map(Factorization::to_json),
            "factor_minus": self.factor_minus.as_ref().map(Factorization::to_json),
            "diagnostics": self.diagnostics,
        })
    }

    pub fn is_case_one(&self) -> bool {
        self.case_id == CaseId::RegulatedCoint && !self.mirrored
    }

    /// Case (ii), including linear models whose ranks match case (ii).
    pub fn is_case_two(&self) -> bool {
        self.table_case == Some(CaseId::KinkedCoint)
    }
}

pub fn classify_case(vecm: &VecmForm, tol: f64) -> Result<CaseClassification> {
    if !(tol > 0.0) {
        return Err(CksvarError::InvalidParameter("tolerance must be positive".into()));
    }
    let pp = vecm.pi(Regime::Plus);
    let pm = vecm.pi(Regime::Minus);
    let scale = linalg::max_singular(&pp).max(linalg::max_singular(&pm));
    let thr = tol * scale;
    let (r_plus, r_minus, rank_pi_x, pi_plus_in_span, pi_minus_in_span) = if scale == 0.0 {
        (0, 0, 0, true, true)
    } else {
        (
            linalg::rank_above(&pp, thr),
            linalg::rank_above(&pm, thr),
            linalg::rank_above(&vecm.pi_x, thr),
            linalg::span_residual(&vecm.pi_x, &vecm.pi_plus, thr) <= thr,
            linalg::span_residual(&vecm.pi_x, &vecm.pi_minus, thr) <= thr,
        )
    };
    let p = vecm.p;
    let linear = vecm.is_linear(tol);
    let mut diagnostics = Vec::new();
    let mut mirrored = false;
    let (table_case, r) = if r_plus == p && r_minus == p {
        diagnostics.push("both long-run matrices have full rank: stationary, no cointegration analysis".into());
        (None, None)
    } else if r_minus == r_plus + 1 && rank_pi_x == r_plus && pi_plus_in_span && !pi_minus_in_span {
        (Some(CaseId::RegulatedCoint), Some(r_plus))
    } else if r_plus == r_minus + 1 && rank_pi_x == r_minus && pi_minus_in_span && !pi_plus_in_span {
        mirrored = true;
        diagnostics.push("case (i) after relabelling y as -y; mirror the model to analyse it".into());
        (Some(CaseId::RegulatedCoint), Some(r_minus))
    } else if r_plus == r_minus && rank_pi_x == r_plus && pi_plus_in_span && pi_minus_in_span {
        (Some(CaseId::KinkedCoint), Some(r_plus))
    } else if r_plus == r_minus && r_plus >= 1 && rank_pi_x + 1 == r_plus && !pi_plus_in_span && !pi_minus_in_span {
        (Some(CaseId::LinearInNonlinearVecm), Some(r_plus))
    } else {
        diagnostics.push(format!(
            "rank configuration r+={r_plus}, r-={r_minus}, rank Pi_x={rank_pi_x}, pi+ in span={pi_plus_in_span}, pi- in span={pi_minus_in_span} matches no case"
        ));
        (None, None)
    };
    let case_id = match (table_case, linear) {
        (None, _) => CaseId::Unsupported,
        (Some(_), true) => CaseId::Linear,
        (Some(c), false) => c,
    };
    let (factor_plus, factor_minus) = if table_case.is_some() {
        (
            Some(factorize_with_threshold(&pp, r_plus, thr)?),
            Some(factorize_with_threshold(&pm, r_minus, thr)?),
        )
    } else {
        (None, None)
    };
    Ok(CaseClassification {
        case_id,
        table_case,
        mirrored,
        linear,
        r_plus,
        r_minus,
        rank_pi_x,
        r,
        pi_plus_in_span,
        pi_minus_in_span,
        tolerance_used: tol,
        threshold: thr,
        factor_plus,
        factor_minus,
        diagnostics,
    })
}

pub fn factorize_pi(pi: &Mat, r: usize) -> Result<Factorization> {
    factorize_with_threshold(pi, r, DEFAULT_RANK_TOL * linalg::max_singular(pi))
}

/// Π = αβᵀ with β normalized to the identity on r pivot rows.
pub fn factorize_with_threshold(pi: &Mat, r: usize, threshold: f64) -> Result<Factorization> {
    let (m, n) = pi.shape();
    let found = if linalg::max_singular(pi) == 0.0 { 0 } else { linalg::rank_above(pi, threshold) };
    if found != r {
        return Err(CksvarError::RankMismatch { expected: r, found });
    }
    if r == 0 {
        return Ok(Factorization {
            alpha: Mat::zeros(m, 0),
            beta: Mat::zeros(n, 0),
            alpha_perp: Mat::identity(m, m),
            beta_perp: Mat::identity(n, n),
        });
    }
    let d = linalg::svd(pi);
    let alpha0 = Mat::from_fn(m, r, |i, j| d.u[(i, j)] * d.s[j]);
    let beta0 = Mat::from_fn(n, r, |i, j| d.v_t[(j, i)]);

    let pivots = pivot_rows(&beta0);
    let block = Mat::from_fn(r, r, |i, j| beta0[(pivots[i], j)]);
    let mut beta = &beta0 * linalg::inverse(&block)?;
    for (i, &row) in pivots.iter().enumerate() {
        for j in 0..r {
            beta[(row, j)] = if i == j { 1.0 } else { 0.0 };
        }
    }
    let alpha = alpha0 * block.transpose();
    Ok(Factorization {
        alpha_perp: linalg::orthocomplement(&alpha)?,
        beta_perp: linalg::orthocomplement(&beta)?,
        alpha,
        beta,
    })
}

/// Row pivots from Gauss–Jordan elimination with partial pivoting.
fn pivot_rows(b: &Mat) -> Vec<usize> {
    let mut w = b.clone();
    let mut used = vec![false; w.nrows()];
    let mut pivots = Vec::with_capacity(w.ncols());
    for j in 0..w.ncols() {
        let mut best = None;
        for i in 0..w.nrows() {
            if used[i] {
                continue;
            }
            if best.map_or(true, |b: usize| w[(i, j)].abs() > w[(b, j)].abs() + 1e-12) {
                best = Some(i);
            }
        }
        let i = best.expect("full column rank");
        used[i] = true;
        pivots.push(i);
        let piv = w[(i, j)];
        for l in 0..w.ncols() {
            if l != j {
                let f = w[(i, l)] / piv;
                for row in 0..w.nrows() {
                    w[(row, l)] -= f * w[(row, j)];
                }
            }
        }
    }
    pivots
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignContext {
    Plus,
    Minus,
    CaseOnePlus,
}

/// Complementary projections on the stacked state, plus the upper-left p×p block of the trend projection.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectionPair {
    pub p_beta_perp: Mat,
    pub p_alpha: Mat,
    pub block: Mat,
    pub sign_context: SignContext,
}

/// 𝛂 and 𝛃ᵀ for a linear error-correction system.
pub fn stacked_linear(alpha: &Mat, beta: &Mat, gammas: &[Mat]) -> (Mat, Mat) {
    let p = alpha.nrows();
    let r = alpha.ncols();
    let k = gammas.len() + 1;
    let ncol = p * (k - 1) + r;
    let mut a = Mat::zeros(k * p, ncol);
    let mut bt = Mat::zeros(ncol, k * p);
    a.view_mut((0, 0), (p, r)).copy_from(alpha);
    bt.view_mut((0, 0), (r, p)).copy_from(&beta.transpose());
    for (m, g) in gammas.iter().enumerate() {
        let c0 = r + m * p;
        a.view_mut((0, c0), (p, p)).copy_from(g);
        for d in 0..p {
            a[((m + 1) * p + d, c0 + d)] = 1.0;
            bt[(c0 + d, m * p + d)] = 1.0;
            bt[(c0 + d, (m + 1) * p + d)] = -1.0;
        }
    }
    (a, bt)
}

/// Projections for a linear error-correction system with Φ₀ = I.
pub fn linear_projections(f: &Factorization, gammas: &[Mat], ctx: SignContext) -> Result<ProjectionPair> {
    let p = f.alpha.nrows();
    let k = gammas.len() + 1;
    let (a, bt) = stacked_linear(&f.alpha, &f.beta, gammas);
    let mut a_perp_t = Mat::zeros(f.alpha_perp.ncols(), k * p);
    let mut b_perp_t = Mat::zeros(f.beta_perp.ncols(), k * p);
    let apt = f.alpha_perp.transpose();
    let bpt = f.beta_perp.transpose();
    a_perp_t.view_mut((0, 0), apt.shape()).copy_from(&apt);
    for j in 0..k {
        b_perp_t.view_mut((0, j * p), bpt.shape()).copy_from(&bpt);
        if j >= 1 {
            a_perp_t.view_mut((0, j * p), apt.shape()).copy_from(&(-&apt * &gammas[j - 1]));
        }
    }
    let ab = &a_perp_t * b_perp_t.transpose();
    let ab_inv = linalg::inverse_checked(&ab, 1e12)
        .ok_or_else(|| CksvarError::Assumption("alpha_perp' Gamma(1) beta_perp is singular".into()))?;
    let p_beta_perp = b_perp_t.transpose() * ab_inv * &a_perp_t;
    let ba_inv = linalg::inverse_checked(&(&bt * &a), 1e12)
        .ok_or_else(|| CksvarError::Assumption("stacked beta' alpha is singular".into()))?;
    let p_alpha = &a * ba_inv * &bt;
    let block = p_beta_perp.view((0, 0), (p, p)).into_owned();
    Ok(ProjectionPair { p_beta_perp, p_alpha, block, sign_context: ctx })
}

/// β⊥[α⊥ᵀ Γ β⊥]⁻¹α⊥ᵀ.
pub fn trend_projection(alpha_perp: &Mat, gamma_one: &Mat, beta_perp: &Mat) -> Result<Mat> {
    let m = alpha_perp.transpose() * gamma_one * beta_perp;
    let inv = linalg::inverse_checked(&m, 1e12)
        .ok_or_else(|| CksvarError::Assumption("alpha_perp' Gamma(1) beta_perp is singular".into()))?;
    Ok(beta_perp * inv * alpha_perp.transpose())
}

fn require_canonical(vecm: &VecmForm) -> Result<()> {
    if vecm.canonical {
        Ok(())
    } else {
        Err(CksvarError::InvalidParameter("representation objects require the canonical form".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseOne {
    pub classification: CaseClassification,
    pub factor: Factorization,
    pub projections: ProjectionPair,
    pub kappa: Vector,
    pub kappa1: f64,
    pub gamma_one: Mat,
}

impl CaseOne {
    pub fn p_beta_perp(&self) -> &Mat {
        &self.projections.block
    }
}

pub fn projection_case1(vecm: &VecmForm) -> Result<CaseOne> {
    projection_case1_tol(vecm, DEFAULT_RANK_TOL)
}

pub fn projection_case1_tol(vecm: &VecmForm, tol: f64) -> Result<CaseOne> {
    require_canonical(vecm)?;
    let cls = classify_case(vecm, tol)?;
    if !cls.is_case_one() {
        return Err(CksvarError::WrongCase(format!("expected case (i), found {}", cls.case_id.label())));
    }
    let factor = cls.factor_plus.clone().unwrap();
    let projections = linear_projections(&factor, &vecm.gamma_plus, SignContext::CaseOnePlus)?;
    let gamma_one = vecm.gamma_at_one(Regime::Plus);
    let kappa = &projections.block * &vecm.pi_minus;
    let kappa1 = kappa[0];
    Ok(CaseOne { classification: cls, factor, projections, kappa, kappa1, gamma_one })
}

#[derive(Debug, Clone, PartialEq)]
pub struct KinkGeometry {
    pub classification: CaseClassification,
    pub alpha: Mat,
    pub alpha_perp: Mat,
    pub beta_x: Mat,
    pub beta_x_perp: Mat,
    pub theta_plus: Vector,
    pub theta_minus: Vector,
    pub beta_plus: Mat,
    pub beta_minus: Mat,
    pub beta_perp_plus: Mat,
    pub beta_perp_minus: Mat,
    pub gamma_one_plus: Mat,
    pub gamma_one_minus: Mat,
    pub p_plus: Mat,
    pub p_minus: Mat,
    pub det_plus: f64,
    pub det_minus: f64,
    pub vartheta: Vector,
    pub mu: f64,
}

impl KinkGeometry {
    pub fn h(&self, y: f64) -> f64 {
        if y >= 0.0 {
            1.0
        } else {
            self.mu
        }
    }

    pub fn p_beta_perp(&self, regime: Regime) -> &Mat {
        match regime {
            Regime::Plus => &self.p_plus,
            Regime::Minus => &self.p_minus,
        }
    }

    pub fn beta(&self, regime: Regime) -> &Mat {
        match regime {
            Regime::Plus => &self.beta_plus,
            Regime::Minus => &self.beta_minus,
        }
    }

    pub fn beta_perp(&self, regime: Regime) -> &Mat {
        match regime {
            Regime::Plus => &self.beta_perp_plus,
            Regime::Minus => &self.beta_perp_minus,
        }
    }

    pub fn gamma_one(&self, regime: Regime) -> &Mat {
        match regime {
            Regime::Plus => &self.gamma_one_plus,
            Regime::Minus => &self.gamma_one_minus,
        }
    }

    /// g(y, u) = P_{β⊥}(y) u.
    pub fn g(&self, y: f64, u: &Vector) -> Vector {
        self.p_beta_perp(Regime::of(y)) * u
    }

    pub fn to_json(&self) -> Value {
        json!({
            "theta_plus": self.theta_plus.as_slice(),
            "theta_minus": self.theta_minus.as_slice(),
            "beta_plus": linalg::rows(&self.beta_plus),
            "beta_minus": linalg::rows(&self.beta_minus),
            "vartheta": self.vartheta.as_slice(),
            "mu": self.mu,
            "det_plus": self.det_plus,
            "det_minus": self.det_minus,
        })
    }
}

pub fn kink_geometry(vecm: &VecmForm) -> Result<KinkGeometry> {
    kink_geometry_tol(vecm, DEFAULT_RANK_TOL)
}

pub fn kink_geometry_tol(vecm: &VecmForm, tol: f64) -> Result<KinkGeometry> {
    require_canonical(vecm)?;
    let cls = classify_case(vecm, tol)?;
    if !cls.is_case_two() {
        return Err(CksvarError::WrongCase(format!("expected case (ii), found {}", cls.case_id.label())));
    }
    let p = vecm.p;
    let r = cls.r.unwrap();
    let fx = factorize_with_threshold(&vecm.pi_x, r, cls.threshold)?;
    let (alpha, beta_x) = (fx.alpha.clone(), fx.beta.clone());
    let theta = |pi: &Vector| -> Result<Vector> {
        if r == 0 {
            return Ok(Vector::zeros(p - 1));
        }
        let ata = linalg::inverse(&(alpha.transpose() * &alpha))?;
        let btb = linalg::inverse(&(beta_x.transpose() * &beta_x))?;
        Ok(&beta_x * btb * ata * alpha.transpose() * pi)
    };
    let theta_plus = theta(&vecm.pi_plus)?;
    let theta_minus = theta(&vecm.pi_minus)?;
    let beta_of = |th: &Vector| {
        let top = linalg::col(&(beta_x.transpose() * th)).transpose();
        linalg::vstack(&[&top, &beta_x])
    };
    let beta_perp_of = |th: &Vector| {
        let q = p - r;
        let mut m = Mat::zeros(p, q);
        m[(0, 0)] = 1.0;
        for i in 0..p - 1 {
            m[(i + 1, 0)] = -th[i];
            for j in 1..q {
                m[(i + 1, j)] = fx.beta_perp[(i, j - 1)];
            }
        }
        m
    };
    let beta_perp_plus = beta_perp_of(&theta_plus);
    let beta_perp_minus = beta_perp_of(&theta_minus);
    let gamma_one_plus = vecm.gamma_at_one(Regime::Plus);
    let gamma_one_minus = vecm.gamma_at_one(Regime::Minus);
    let mp = fx.alpha_perp.transpose() * &gamma_one_plus * &beta_perp_plus;
    let mm = fx.alpha_perp.transpose() * &gamma_one_minus * &beta_perp_minus;
    let det_plus = linalg::determinant(&mp);
    let det_minus = linalg::determinant(&mm);
    if det_plus == 0.0 || det_minus == 0.0 || det_plus.signum() != det_minus.signum() {
        return Err(CksvarError::Assumption(format!(
            "CO(ii).3: determinant signs differ or vanish ({det_plus}, {det_minus})"
        )));
    }
    let p_plus = trend_projection(&fx.alpha_perp, &gamma_one_plus, &beta_perp_plus)?;
    let p_minus = trend_projection(&fx.alpha_perp, &gamma_one_minus, &beta_perp_minus)?;
    let vartheta = p_plus.row(0).transpose();
    let mu = det_plus / det_minus;
    let gap = (p_minus.row(0).transpose() - &vartheta * mu).norm();
    if gap > 1e-8 * (1.0 + p_minus.row(0).norm()) {
        return Err(CksvarError::Assumption(format!("rank-one perturbation identity fails by {gap:e}")));
    }
    Ok(KinkGeometry {
        classification: cls,
        beta_plus: beta_of(&theta_plus),
        beta_minus: beta_of(&theta_minus),
        alpha,
        alpha_perp: fx.alpha_perp,
        beta_x,
        beta_x_perp: fx.beta_perp,
        theta_plus,
        theta_minus,
        beta_perp_plus,
        beta_perp_minus,
        gamma_one_plus,
        gamma_one_minus,
        p_plus,
        p_minus,
        det_plus,
        det_minus,
        vartheta,
        mu,
    })
}
