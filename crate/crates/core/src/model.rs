//! Model parameterization, coherence checks and the canonical transform.

use serde::{Deserialize, Serialize};

use crate::error::{CksvarError, Result};
use crate::linalg::{self, Mat, Vector};

/// Condition-number ceiling for inverting the x-block of Φ₀.
pub const XX_MAX_COND: f64 = 1e10;

/// Regime selector for sign-dependent objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    Plus,
    Minus,
}

impl Regime {
    /// Ties at zero go to the positive regime.
    pub fn of(y: f64) -> Regime {
        if y >= 0.0 {
            Regime::Plus
        } else {
            Regime::Minus
        }
    }

    pub fn sign(self) -> f64 {
        match self {
            Regime::Plus => 1.0,
            Regime::Minus => -1.0,
        }
    }
}

pub fn split(y: f64) -> (f64, f64) {
    split_at(y, 0.0)
}

pub fn split_at(y: f64, b: f64) -> (f64, f64) {
    if y >= b {
        (y, b)
    } else {
        (b, y)
    }
}

/// `phi0_*` are the contemporaneous columns; lag `i` lives at index `i - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CksvarModel {
    pub p: usize,
    pub k: usize,
    pub b: f64,
    pub c: Vector,
    pub phi0_plus: Vector,
    pub phi0_minus: Vector,
    pub phi0_x: Mat,
    pub phi_plus: Vec<Vector>,
    pub phi_minus: Vec<Vector>,
    pub phi_x: Vec<Mat>,
    pub sigma: Mat,
}

impl CksvarModel {
    /// Canonical model with Φ₀ = I*.
    pub fn canonical(
        c: Vector,
        phi_plus: Vec<Vector>,
        phi_minus: Vec<Vector>,
        phi_x: Vec<Mat>,
        sigma: Mat,
    ) -> Result<Self> {
        let p = c.len();
        let (phi0_plus, phi0_minus, phi0_x) = canonical_phi0(p);
        let m = CksvarModel {
            p,
            k: phi_plus.len(),
            b: 0.0,
            c,
            phi0_plus,
            phi0_minus,
            phi0_x,
            phi_plus,
            phi_minus,
            phi_x,
            sigma,
        };
        m.check()?;
        Ok(m)
    }

    pub fn check(&self) -> Result<()> {
        let p = self.p;
        let dim = |what: &str| Err(CksvarError::Dimension(what.to_string()));
        if p == 0 || self.k == 0 {
            return dim("p and k must be at least 1");
        }
        if self.c.len() != p || self.phi0_plus.len() != p || self.phi0_minus.len() != p {
            return dim("c and phi0 columns must have length p");
        }
        if self.phi0_x.shape() != (p, p - 1) {
            return dim("phi0_x must be p x (p-1)");
        }
        if self.phi_plus.len() != self.k || self.phi_minus.len() != self.k || self.phi_x.len() != self.k {
            return dim("lag lists must have k entries");
        }
        for i in 0..self.k {
            if self.phi_plus[i].len() != p || self.phi_minus[i].len() != p {
                return dim("lag columns must have length p");
            }
            if self.phi_x[i].shape() != (p, p - 1) {
                return dim("lag x-blocks must be p x (p-1)");
            }
        }
        if self.sigma.shape() != (p, p) {
            return dim("sigma must be p x p");
        }
        if !self.b.is_finite() {
            return Err(CksvarError::InvalidParameter("threshold must be finite".into()));
        }
        linalg::cholesky(&self.sigma)?;
        Ok(())
    }

    /// [φᵢ±, Φᵢˣ] for i = 0..=k.
    pub fn lag_block(&self, i: usize, regime: Regime) -> Mat {
        let (col, x) = self.lag_parts(i, regime);
        linalg::hstack(&[&linalg::col(col), x])
    }

    /// [φᵢ⁺, φᵢ⁻, Φᵢˣ] for i = 0..=k.
    pub fn lag_full(&self, i: usize) -> Mat {
        let (pl, x) = self.lag_parts(i, Regime::Plus);
        let (mi, _) = self.lag_parts(i, Regime::Minus);
        linalg::hstack(&[&linalg::col(pl), &linalg::col(mi), x])
    }

    fn lag_parts(&self, i: usize, regime: Regime) -> (&Vector, &Mat) {
        let col = match (i, regime) {
            (0, Regime::Plus) => &self.phi0_plus,
            (0, Regime::Minus) => &self.phi0_minus,
            (_, Regime::Plus) => &self.phi_plus[i - 1],
            (_, Regime::Minus) => &self.phi_minus[i - 1],
        };
        let x = if i == 0 { &self.phi0_x } else { &self.phi_x[i - 1] };
        (col, x)
    }

    pub fn is_canonical(&self) -> bool {
        let (pl, mi, x) = canonical_phi0(self.p);
        let close = |a: &Mat, b: &Mat| linalg::max_abs(&(a - b)) <= 1e-14;
        close(&linalg::col(&self.phi0_plus), &linalg::col(&pl))
            && close(&linalg::col(&self.phi0_minus), &linalg::col(&mi))
            && close(&self.phi0_x, &x)
    }

    /// Every coefficient on y⁺ equals the one on y⁻.
    pub fn is_linear(&self, tol: f64) -> bool {
        (0..=self.k).all(|i| {
            let (a, _) = self.lag_parts(i, Regime::Plus);
            let (b, _) = self.lag_parts(i, Regime::Minus);
            (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
        })
    }

    /// Same model with lag order raised to `k` by zero lags.
    pub fn padded_to(&self, k: usize) -> CksvarModel {
        let mut m = self.clone();
        while m.k < k {
            m.phi_plus.push(Vector::zeros(m.p));
            m.phi_minus.push(Vector::zeros(m.p));
            m.phi_x.push(Mat::zeros(m.p, m.p - 1));
            m.k += 1;
        }
        m
    }

    /// φ±(1) = φ₀± − Σ φᵢ±.
    pub fn phi_at_one(&self, regime: Regime) -> Vector {
        let mut v = self.lag_parts(0, regime).0.clone();
        for i in 1..=self.k {
            v -= self.lag_parts(i, regime).0;
        }
        v
    }

    /// The model for (−y, x): y⁺ and y⁻ swap roles, first equation negated.
    pub fn mirror(&self) -> CksvarModel {
        let mut d = Mat::identity(self.p, self.p);
        d[(0, 0)] = -1.0;
        let flip = |v: &Vector| -(&d * v);
        CksvarModel {
            p: self.p,
            k: self.k,
            b: -self.b,
            c: &d * &self.c,
            phi0_plus: flip(&self.phi0_minus),
            phi0_minus: flip(&self.phi0_plus),
            phi0_x: &d * &self.phi0_x,
            phi_plus: self.phi_minus.iter().map(flip).collect(),
            phi_minus: self.phi_plus.iter().map(flip).collect(),
            phi_x: self.phi_x.iter().map(|m| &d * m).collect(),
            sigma: &d * &self.sigma * &d,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text).map_err(|e| CksvarError::Parse(e.to_string()))?;
        f.into_model()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelFile::from_model(self)).expect("model serializes")
    }
}

pub fn canonical_phi0(p: usize) -> (Vector, Vector, Mat) {
    let e = linalg::e1(p);
    let mut x = Mat::zeros(p, p - 1);
    for j in 0..p - 1 {
        x[(j + 1, j)] = 1.0;
    }
    (e.clone(), e, x)
}

/// Row-major text layout of a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub p: usize,
    pub k: usize,
    #[serde(default)]
    pub b: f64,
    pub c: Vec<f64>,
    pub phi0_plus: Vec<f64>,
    pub phi0_minus: Vec<f64>,
    pub phi0_x: Vec<Vec<f64>>,
    pub phi_plus: Vec<Vec<f64>>,
    pub phi_minus: Vec<Vec<f64>>,
    pub phi_x: Vec<Vec<Vec<f64>>>,
    pub sigma: Vec<Vec<f64>>,
}

impl ModelFile {
    pub fn from_model(m: &CksvarModel) -> Self {
        let v = |x: &Vector| x.iter().copied().collect::<Vec<_>>();
        ModelFile {
            p: m.p,
            k: m.k,
            b: m.b,
            c: v(&m.c),
            phi0_plus: v(&m.phi0_plus),
            phi0_minus: v(&m.phi0_minus),
            phi0_x: linalg::rows(&m.phi0_x),
            phi_plus: m.phi_plus.iter().map(v).collect(),
            phi_minus: m.phi_minus.iter().map(v).collect(),
            phi_x: m.phi_x.iter().map(linalg::rows).collect(),
            sigma: linalg::rows(&m.sigma),
        }
    }

    pub fn into_model(self) -> Result<CksvarModel> {
        let p = self.p;
        if p == 0 || self.k == 0 {
            return Err(CksvarError::Dimension("p and k must be at least 1".into()));
        }
        let vecp = |name: &str, v: &[f64]| -> Result<Vector> {
            if v.len() != p {
                return Err(CksvarError::Parse(format!("{name} has length {}, expected {p}", v.len())));
            }
            Ok(Vector::from_column_slice(v))
        };
        let matp = |name: &str, rows: &[Vec<f64>], cols: usize| -> Result<Mat> {
            if rows.len() != p {
                return Err(CksvarError::Parse(format!("{name} has {} rows, expected {p}", rows.len())));
            }
            linalg::from_rows(rows, cols).map_err(|e| CksvarError::Parse(format!("{name}: {e}")))
        };
        let lags = |name: &str, n: usize| -> Result<()> {
            if n != self.k {
                return Err(CksvarError::Parse(format!("{name} has {n} lags, expected {}", self.k)));
            }
            Ok(())
        };
        lags("phi_plus", self.phi_plus.len())?;
        lags("phi_minus", self.phi_minus.len())?;
        lags("phi_x", self.phi_x.len())?;
        let m = CksvarModel {
            p,
            k: self.k,
            b: self.b,
            c: vecp("c", &self.c)?,
            phi0_plus: vecp("phi0_plus", &self.phi0_plus)?,
            phi0_minus: vecp("phi0_minus", &self.phi0_minus)?,
            phi0_x: matp("phi0_x", &self.phi0_x, p - 1)?,
            phi_plus: self.phi_plus.iter().map(|v| vecp("phi_plus", v)).collect::<Result<_>>()?,
            phi_minus: self.phi_minus.iter().map(|v| vecp("phi_minus", v)).collect::<Result<_>>()?,
            phi_x: self.phi_x.iter().map(|r| matp("phi_x", r, p - 1)).collect::<Result<_>>()?,
            sigma: matp("sigma", &self.sigma, p)?,
        };
        m.check()?;
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DgpReport {
    pub coherent: bool,
    pub wlog_signs_ok: bool,
    pub det_plus: f64,
    pub det_minus: f64,
    pub phi_tilde_plus: Option<f64>,
    pub phi_tilde_minus: Option<f64>,
    pub messages: Vec<String>,
}

impl DgpReport {
    pub fn ok(&self) -> bool {
        self.coherent && self.wlog_signs_ok
    }
}

struct Phi0Parts {
    yy_plus: f64,
    yy_minus: f64,
    yx: Vector,
    xy_plus: Vector,
    xy_minus: Vector,
    xx: Mat,
}

fn phi0_parts(m: &CksvarModel) -> Phi0Parts {
    let p = m.p;
    Phi0Parts {
        yy_plus: m.phi0_plus[0],
        yy_minus: m.phi0_minus[0],
        yx: m.phi0_x.row(0).transpose(),
        xy_plus: m.phi0_plus.rows(1, p - 1).into_owned(),
        xy_minus: m.phi0_minus.rows(1, p - 1).into_owned(),
        xx: m.phi0_x.rows(1, p - 1).into_owned(),
    }
}

pub fn validate_dgp(m: &CksvarModel) -> Result<DgpReport> {
    m.check()?;
    let mut messages = Vec::new();
    let det_plus = linalg::determinant(&m.lag_block(0, Regime::Plus));
    let det_minus = linalg::determinant(&m.lag_block(0, Regime::Minus));
    let coherent = det_plus != 0.0 && det_minus != 0.0 && det_plus.signum() == det_minus.signum();
    if !coherent {
        messages.push(format!(
            "DGP.2: sign(det Phi0+) = {} and sign(det Phi0-) = {} must agree and be nonzero",
            det_plus.signum(),
            det_minus.signum()
        ));
    }
    let parts = phi0_parts(m);
    let (mut phi_tilde_plus, mut phi_tilde_minus) = (None, None);
    let wlog_signs_ok = match linalg::inverse_checked(&parts.xx, XX_MAX_COND) {
        None => {
            messages.push("DGP.3: Phi0_xx is singular or too ill-conditioned to invert".into());
            false
        }
        Some(xx_inv) => {
            let w = xx_inv.transpose() * &parts.yx;
            let tp = parts.yy_plus - w.dot(&parts.xy_plus);
            let tm = parts.yy_minus - w.dot(&parts.xy_minus);
            phi_tilde_plus = Some(tp);
            phi_tilde_minus = Some(tm);
            if tp > 0.0 && tm > 0.0 {
                true
            } else {
                messages.push(format!(
                    "DGP.3: reduced coefficients on y+ and y- must both be positive, got {tp} and {tm}"
                ));
                false
            }
        }
    };
    Ok(DgpReport {
        coherent,
        wlog_signs_ok,
        det_plus,
        det_minus,
        phi_tilde_plus,
        phi_tilde_minus,
        messages,
    })
}

/// Recentres the threshold at zero.
pub fn threshold_shift(m: &CksvarModel) -> CksvarModel {
    if m.b == 0.0 {
        return m.clone();
    }
    let mut out = m.clone();
    out.c = &m.c - (m.phi_at_one(Regime::Plus) + m.phi_at_one(Regime::Minus)) * m.b;
    out.b = 0.0;
    out
}

/// Canonical form together with the maps linking it to the structural form.
#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalModel {
    pub model: CksvarModel,
    /// Acts on (y⁺, y⁻, x); its inverse produces the canonical (ỹ⁺, ỹ⁻, x̃).
    pub p_mat: Mat,
    pub p_inv: Mat,
    pub q: Mat,
    /// The structural model after recentring the threshold.
    pub source: CksvarModel,
    /// Threshold of the model before recentring.
    pub original_b: f64,
}

pub fn to_canonical(model: &CksvarModel) -> Result<CanonicalModel> {
    let report = validate_dgp(model)?;
    if !report.coherent {
        return Err(CksvarError::Dgp { check: "DGP.2".into(), message: report.messages.join("; ") });
    }
    if !report.wlog_signs_ok {
        return Err(CksvarError::Dgp { check: "DGP.3".into(), message: report.messages.join("; ") });
    }
    let src = threshold_shift(model);
    let p = src.p;
    let parts = phi0_parts(&src);
    let xx_inv = linalg::inverse_checked(&parts.xx, XX_MAX_COND).expect("checked above");
    let w = xx_inv.transpose() * &parts.yx;

    let mut p_inv = Mat::zeros(p + 1, p + 1);
    p_inv[(0, 0)] = report.phi_tilde_plus.unwrap();
    p_inv[(1, 1)] = report.phi_tilde_minus.unwrap();
    for i in 0..p - 1 {
        p_inv[(i + 2, 0)] = parts.xy_plus[i];
        p_inv[(i + 2, 1)] = parts.xy_minus[i];
        for j in 0..p - 1 {
            p_inv[(i + 2, j + 2)] = parts.xx[(i, j)];
        }
    }
    let p_mat = linalg::inverse(&p_inv)?;
    let mut q = Mat::identity(p, p);
    for j in 0..p - 1 {
        q[(0, j + 1)] = -w[j];
    }

    let mut phi_plus = Vec::with_capacity(src.k);
    let mut phi_minus = Vec::with_capacity(src.k);
    let mut phi_x = Vec::with_capacity(src.k);
    for i in 1..=src.k {
        let t = &q * src.lag_full(i) * &p_mat;
        phi_plus.push(t.column(0).into_owned());
        phi_minus.push(t.column(1).into_owned());
        phi_x.push(t.columns(2, p - 1).into_owned());
    }
    let sigma = &q * &src.sigma * q.transpose();
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let canonical = CksvarModel::canonical(&q * &src.c, phi_plus, phi_minus, phi_x, sigma)?;
    Ok(CanonicalModel { model: canonical, p_mat, p_inv, q, source: src, original_b: model.b })
}

impl CanonicalModel {
    /// Structural state (y, x), measured from the recentred threshold, to canonical (ỹ, x̃).
    pub fn to_canonical_state(&self, z: &[f64]) -> Vec<f64> {
        let p = self.model.p;
        let (yp, ym) = split(z[0]);
        let mut s = Vector::zeros(p + 1);
        s[0] = yp;
        s[1] = ym;
        for j in 1..p {
            s[j + 1] = z[j];
        }
        let w = &self.p_inv * s;
        let mut out = vec![w[0] + w[1]];
        out.extend(w.iter().skip(2));
        out
    }

    /// Canonical state (ỹ, x̃) back to structural (y, x).
    pub fn to_structural_state(&self, zt: &[f64]) -> Vec<f64> {
        let p = self.model.p;
        let (yp, ym) = split(zt[0]);
        let mut s = Vector::zeros(p + 1);
        s[0] = yp;
        s[1] = ym;
        for j in 1..p {
            s[j + 1] = zt[j];
        }
        let w = &self.p_mat * s;
        let mut out = vec![w[0] + w[1]];
        out.extend(w.iter().skip(2));
        out
    }

    /// P± mapping canonical z̃ to structural z within one regime.
    pub fn regime_map(&self, regime: Regime) -> Mat {
        let p = self.model.p;
        let keep = match regime {
            Regime::Plus => 0,
            Regime::Minus => 1,
        };
        let mut sel = Mat::zeros(p, p + 1);
        sel[(0, 0)] = 1.0;
        sel[(0, 1)] = 1.0;
        for j in 1..p {
            sel[(j, j + 1)] = 1.0;
        }
        let mut emb = Mat::zeros(p + 1, p);
        emb[(keep, 0)] = 1.0;
        for j in 1..p {
            emb[(j + 1, j)] = 1.0;
        }
        sel * &self.p_mat * emb
    }

    /// A projection acting on canonical innovations, re-expressed for structural innovations.
    pub fn structural_projection(&self, canonical: &Mat, regime: Regime) -> Mat {
        self.regime_map(regime) * canonical * &self.q
    }

    /// Maps canonical coefficients back through P⁻¹ and Q⁻¹.
    pub fn recover_structural(&self) -> Result<CksvarModel> {
        let q_inv = linalg::inverse(&self.q)?;
        let p = self.model.p;
        let mut out = self.source.clone();
        let lag0 = &q_inv * self.model.lag_full(0) * &self.p_inv;
        out.phi0_plus = lag0.column(0).into_owned();
        out.phi0_minus = lag0.column(1).into_owned();
        out.phi0_x = lag0.columns(2, p - 1).into_owned();
        for i in 1..=self.model.k {
            let t = &q_inv * self.model.lag_full(i) * &self.p_inv;
            out.phi_plus[i - 1] = t.column(0).into_owned();
            out.phi_minus[i - 1] = t.column(1).into_owned();
            out.phi_x[i - 1] = t.columns(2, p - 1).into_owned();
        }
        out.c = &q_inv * &self.model.c;
        out.sigma = &q_inv * &self.model.sigma * q_inv.transpose();
        Ok(out)
    }
}
