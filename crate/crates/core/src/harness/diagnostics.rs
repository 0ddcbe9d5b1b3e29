//! Scaling diagnostics for equilibrium errors and the I*(0) components.

use serde::Serialize;

use crate::error::{CksvarError, Result};
use crate::linalg::{Mat, Vector};
use crate::model::Regime;
use crate::simulate::Path;
use crate::vecm::{classify_case, VecmForm, DEFAULT_RANK_TOL};

pub const DEFAULT_RESIDUAL_THRESHOLD: f64 = 0.05;
pub const GROWTH_RATIO_LIMIT: f64 = 1.75;

/// Cointegrating vectors of a case-(i) or case-(ii) model, in the coordinates of the model given.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    pub beta_plus: Mat,
    /// Absent in case (i), where β⁺ᵀz_t is the equilibrium error on the whole path.
    pub beta_minus: Option<Mat>,
}

impl Equilibrium {
    pub fn of(vecm: &VecmForm) -> Result<Self> {
        let cls = classify_case(vecm, DEFAULT_RANK_TOL)?;
        let plus = cls.factor_plus.as_ref().map(|f| f.beta.clone());
        let minus = cls.factor_minus.as_ref().map(|f| f.beta.clone());
        if cls.is_case_one() {
            Ok(Equilibrium { beta_plus: plus.expect("case (i) has a plus factorization"), beta_minus: None })
        } else if cls.is_case_two() {
            Ok(Equilibrium { beta_plus: plus.expect("case (ii) has both factorizations"), beta_minus: minus })
        } else {
            Err(CksvarError::WrongCase(format!("residual checks need case (i) or (ii), found {}", cls.case_id.label())))
        }
    }

    pub fn rank(&self) -> usize {
        self.beta_plus.ncols()
    }

    pub fn beta(&self, y: f64) -> &Mat {
        match (&self.beta_minus, Regime::of(y)) {
            (Some(bm), Regime::Minus) => bm,
            _ => &self.beta_plus,
        }
    }

    pub fn xi(&self, z: &Vector) -> Vector {
        self.beta(z[0]).transpose() * z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub label: String,
    /// max |residual| · n^{−1/2} over the points included.
    pub scaled_max: f64,
    /// Running maximum at n over running maximum at n/4.
    pub growth_ratio: f64,
    pub points: usize,
    pub i_star_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub n: usize,
    pub threshold: f64,
    pub rows: Vec<ResidualRow>,
}

impl ResidualReport {
    pub fn row(&self, label: &str) -> Option<&ResidualRow> {
        self.rows.iter().find(|r| r.label == label)
    }
}

fn residual_row(label: &str, path: &Path, beta: &Mat, keep: impl Fn(f64) -> bool, threshold: f64) -> ResidualRow {
    let n = path.n;
    let quarter = (n / 4).max(1);
    let (mut early, mut full, mut points) = (0.0_f64, 0.0_f64, 0);
    for t in 1..=n {
        let mut z = path.z(t as i64);
        z[0] -= path.b;
        if !keep(z[0]) {
            continue;
        }
        points += 1;
        let v = (beta.transpose() * &z).amax();
        full = full.max(v);
        if t <= quarter {
            early = early.max(v);
        }
    }
    let scaled_max = full / (n as f64).sqrt();
    let growth_ratio = if early > 0.0 { full / early } else if full == 0.0 { 1.0 } else { f64::INFINITY };
    ResidualRow {
        label: label.to_string(),
        scaled_max,
        growth_ratio,
        points,
        i_star_zero: scaled_max < threshold && growth_ratio < GROWTH_RATIO_LIMIT,
    }
}

/// Per-regime equilibrium errors of a path simulated from the model behind `vecm`, scaled by n^{−1/2}.
pub fn residual_check(vecm: &VecmForm, path: &Path, threshold: f64) -> Result<ResidualReport> {
    if path.p() != vecm.p {
        return Err(CksvarError::Dimension("path and model dimensions differ".into()));
    }
    let eq = Equilibrium::of(vecm)?;
    let pos = |y: f64| y >= 0.0;
    let neg = |y: f64| y <= 0.0;
    let mut rows = Vec::new();
    match &eq.beta_minus {
        None => rows.push(residual_row("beta_plus", path, &eq.beta_plus, |_| true, threshold)),
        Some(bm) => {
            let bp = &eq.beta_plus;
            rows.push(residual_row("beta_plus on Z+", path, bp, pos, threshold));
            rows.push(residual_row("beta_minus on Z-", path, bm, neg, threshold));
            rows.push(residual_row("beta_plus on Z-", path, bp, neg, threshold));
            rows.push(residual_row("beta_minus on Z+", path, bm, pos, threshold));
        }
    }
    Ok(ResidualReport { n: path.n, threshold, rows })
}
