//! Brownian motions on a grid and the nonlinear transforms that make up the limit processes.

use serde::Serialize;

use crate::error::{CksvarError, Result};
use crate::linalg::{self, Mat, Vector};
use crate::model::{CanonicalModel, Regime};
use crate::simulate::{rng_for, standard_normals};
use crate::vecm::{kink_geometry_tol, projection_case1_tol, VecmForm, DEFAULT_RANK_TOL};

pub const DEFAULT_GRID: usize = 2048;
pub const TREND_SPACE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct BrownianGrid {
    pub lambda: Vec<f64>,
    /// q×(m+1) values, one column per grid point.
    pub w: Mat,
    pub variance: Mat,
    pub seed: u64,
}

impl BrownianGrid {
    pub fn m(&self) -> usize {
        self.lambda.len() - 1
    }
}

pub fn uniform_grid(m: usize) -> Vec<f64> {
    (0..=m).map(|j| j as f64 / m as f64).collect()
}

pub fn brownian_grid(variance: &Mat, m: usize, seed: u64, w0: Option<&Vector>) -> Result<BrownianGrid> {
    brownian_grid_stream(variance, m, seed, 0, w0)
}

pub fn brownian_grid_stream(variance: &Mat, m: usize, seed: u64, stream: u64, w0: Option<&Vector>) -> Result<BrownianGrid> {
    if m == 0 {
        return Err(CksvarError::InvalidParameter("grid must have at least one step".into()));
    }
    let l = linalg::cholesky(variance)?;
    let q = variance.nrows();
    let mut rng = rng_for(seed, stream);
    let inc = l * standard_normals(&mut rng, q, m) * (1.0 / m as f64).sqrt();
    let mut w = Mat::zeros(q, m + 1);
    if let Some(v) = w0 {
        if v.len() != q {
            return Err(CksvarError::Dimension("initial value has the wrong length".into()));
        }
        w.set_column(0, v);
    }
    for j in 0..m {
        let next = w.column(j) + inc.column(j);
        w.set_column(j + 1, &next);
    }
    Ok(BrownianGrid { lambda: uniform_grid(m), w, variance: variance.clone(), seed })
}

pub fn censor(w: &[f64]) -> Vec<f64> {
    w.iter().map(|&v| v.max(0.0)).collect()
}

/// V(λ) = W(λ) + sup_{λ′≤λ}[−W(λ′)]₊ by a running maximum.
pub fn regulate(w: &[f64]) -> Vec<f64> {
    let mut run = 0.0_f64;
    w.iter()
        .map(|&v| {
            run = run.max(-v);
            v + run
        })
        .collect()
}

/// Running value of sup_{λ′≤λ}[−W(λ′)]₊.
pub fn regulator(w: &[f64]) -> Vec<f64> {
    let mut run = 0.0_f64;
    w.iter()
        .map(|&v| {
            run = run.max(-v);
            run
        })
        .collect()
}

/// Checks the two conditions on a sign-dependent loading and returns μ with e₁ᵀG(+1) = μ e₁ᵀG(−1).
pub fn kink_ratio(g_plus: &Mat, g_minus: &Mat) -> Result<f64> {
    if g_plus.shape() != g_minus.shape() || g_plus.nrows() == 0 {
        return Err(CksvarError::Dimension("both loadings must have the same non-empty shape".into()));
    }
    let h = g_plus.row(0).transpose();
    let g = g_minus.row(0).transpose();
    let scale = 1.0 + linalg::max_abs(g_plus).max(linalg::max_abs(g_minus));
    let mu = if h.norm() == 0.0 && g.norm() == 0.0 {
        1.0
    } else if g.norm() == 0.0 {
        return Err(CksvarError::Discontinuous("first row of G(-1) vanishes while that of G(+1) does not".into()));
    } else {
        h.dot(&g) / g.norm_squared()
    };
    if !(mu > 0.0) || (&h - &g * mu).norm() > 1e-8 * scale {
        return Err(CksvarError::Discontinuous("first rows of G(+1) and G(-1) are not positively proportional".into()));
    }
    if h.norm() > 0.0 {
        let hyper = linalg::orthocomplement(&linalg::col(&h))?;
        let gap = (g_plus - g_minus) * hyper;
        if linalg::max_abs(&gap) > 1e-8 * scale {
            return Err(CksvarError::Discontinuous(format!(
                "G(+1)w and G(-1)w differ by {:e} on the switching hyperplane",
                linalg::max_abs(&gap)
            )));
        }
    }
    Ok(mu)
}

/// V(λ) = G[hᵀW(λ)]W(λ), with h the first row of G(+1).
pub fn kink(w: &Mat, g_plus: &Mat, g_minus: &Mat) -> Result<Mat> {
    kink_ratio(g_plus, g_minus)?;
    if w.nrows() != g_plus.ncols() {
        return Err(CksvarError::Dimension("loading and process dimensions differ".into()));
    }
    let h = g_plus.row(0).transpose();
    let mut out = Mat::zeros(g_plus.nrows(), w.ncols());
    for j in 0..w.ncols() {
        let col = w.column(j);
        let g = if h.dot(&col) >= 0.0 { g_plus } else { g_minus };
        out.set_column(j, &(g * col));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    RegulatedCaseI,
    KinkedCaseIi,
    Raw,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LimitPath {
    pub lambda: Vec<f64>,
    pub y: Vec<f64>,
    pub x: Mat,
    pub kind: LimitKind,
    /// e₁ᵀP_{β⊥⁺}U₀ in case (i), ϑᵀU₀ in case (ii).
    pub driver: Vec<f64>,
}

impl LimitPath {
    pub fn z(&self, j: usize) -> Vector {
        let p = self.x.nrows() + 1;
        let mut v = Vector::zeros(p);
        v[0] = self.y[j];
        for i in 1..p {
            v[i] = self.x[(i - 1, j)];
        }
        v
    }

    /// The same process expressed in structural coordinates.
    pub fn to_structural(&self, canon: &CanonicalModel) -> LimitPath {
        let mut y = Vec::with_capacity(self.y.len());
        let mut x = Mat::zeros(self.x.nrows(), self.y.len());
        for j in 0..self.y.len() {
            let s = canon.to_structural_state(self.z(j).as_slice());
            y.push(s[0]);
            for i in 1..s.len() {
                x[(i - 1, j)] = s[i];
            }
        }
        LimitPath { lambda: self.lambda.clone(), y, x, kind: self.kind, driver: self.driver.clone() }
    }
}

/// Whether z lies in ℳ⁺ ∪ ℳ⁻; z with first entry zero is tested against both halves.
pub fn in_trend_space(vecm: &VecmForm, z0: &Vector) -> Result<()> {
    if z0.len() != vecm.p {
        return Err(CksvarError::Dimension("initial value has the wrong length".into()));
    }
    let resid = |regime: Regime| {
        let pi = vecm.pi(regime);
        (&pi * z0).norm() / (1.0 + linalg::max_singular(&pi) * z0.norm())
    };
    let r = if z0[0] > 0.0 {
        resid(Regime::Plus)
    } else if z0[0] < 0.0 {
        resid(Regime::Minus)
    } else {
        resid(Regime::Plus).min(resid(Regime::Minus))
    };
    if r > TREND_SPACE_TOL {
        return Err(CksvarError::NotInTrendSpace { residual: r });
    }
    Ok(())
}

fn check_grid(vecm: &VecmForm, u: &BrownianGrid) -> Result<()> {
    if u.w.nrows() != vecm.p {
        return Err(CksvarError::Dimension("Brownian motion must have p components".into()));
    }
    Ok(())
}

/// Z = P_{β⊥⁺}U₀ + κ₁⁻¹κ sup[−e₁ᵀP_{β⊥⁺}U₀]₊ with U₀ = Γ⁺(1)𝒵₀ + U.
pub fn limit_case1(vecm: &VecmForm, z0: &Vector, u: &BrownianGrid) -> Result<LimitPath> {
    check_grid(vecm, u)?;
    in_trend_space(vecm, z0)?;
    let one = projection_case1_tol(vecm, DEFAULT_RANK_TOL)?;
    let shift = &one.gamma_one * z0;
    let mut u0 = u.w.clone();
    for mut col in u0.column_iter_mut() {
        col += &shift;
    }
    let base = one.p_beta_perp() * &u0;
    let driver: Vec<f64> = base.row(0).iter().copied().collect();
    let reg = regulator(&driver);
    let load = &one.kappa / one.kappa1;
    let mut z = base;
    for (j, r) in reg.iter().enumerate() {
        let mut col = z.column_mut(j);
        col.axpy(*r, &load, 1.0);
    }
    let p = vecm.p;
    Ok(LimitPath {
        lambda: u.lambda.clone(),
        y: z.row(0).iter().copied().collect(),
        x: z.rows(1, p - 1).into_owned(),
        kind: LimitKind::RegulatedCaseI,
        driver,
    })
}

/// Z = P_{β⊥}[ϑᵀU₀]U₀ with U₀ = Γ(1;𝒴₀)𝒵₀ + U.
pub fn limit_case2(vecm: &VecmForm, z0: &Vector, u: &BrownianGrid) -> Result<LimitPath> {
    check_grid(vecm, u)?;
    in_trend_space(vecm, z0)?;
    let geo = kink_geometry_tol(vecm, DEFAULT_RANK_TOL)?;
    let shift = geo.gamma_one(Regime::of(z0[0])) * z0;
    let p = vecm.p;
    let m1 = u.w.ncols();
    let mut y = Vec::with_capacity(m1);
    let mut x = Mat::zeros(p - 1, m1);
    let mut driver = Vec::with_capacity(m1);
    for j in 0..m1 {
        let u0 = u.w.column(j) + &shift;
        let s = geo.vartheta.dot(&u0);
        let z = geo.p_beta_perp(Regime::of(s)) * &u0;
        let via_h = geo.h(s) * s;
        if (via_h - z[0]).abs() > 1e-9 * (1.0 + z[0].abs()) {
            return Err(CksvarError::Assumption(format!("first coordinate disagrees with h(s)s at grid point {j}")));
        }
        y.push(z[0]);
        for i in 1..p {
            x[(i - 1, j)] = z[i];
        }
        driver.push(s);
    }
    Ok(LimitPath { lambda: u.lambda.clone(), y, x, kind: LimitKind::KinkedCaseIi, driver })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CksvarModel;
    use crate::vecm::vecm_decompose;
    use approx::assert_relative_eq;

    #[test]
    fn censor_and_regulate_small() {
        assert_eq!(censor(&[0.0, -1.0, 0.5]), vec![0.0, 0.0, 0.5]);
        assert_eq!(regulate(&[0.0, -1.0, 0.5]), vec![0.0, 0.0, 1.5]);
        assert_eq!(censor(&[-1.0, -2.0]), vec![0.0, 0.0]);
        assert_eq!(regulate(&[0.0, 1.0, 2.0]), vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn grid_endpoints() {
        let g = brownian_grid(&Mat::identity(1, 1), 1, 3, None).unwrap();
        assert_eq!(g.lambda, vec![0.0, 1.0]);
        assert_eq!(g.w[(0, 0)], 0.0);
        assert!(brownian_grid(&Mat::zeros(1, 1), 4, 3, None).is_err());
    }

    #[test]
    fn scalar_kink_doubles_positive_part() {
        let w = Mat::from_row_slice(1, 3, &[-1.0, 0.5, 2.0]);
        let v = kink(&w, &Mat::from_element(1, 1, 2.0), &Mat::from_element(1, 1, 1.0)).unwrap();
        assert_eq!(v, Mat::from_row_slice(1, 3, &[-1.0, 1.0, 4.0]));
        let same = kink(&w, &Mat::identity(1, 1), &Mat::identity(1, 1)).unwrap();
        assert_eq!(same, w);
    }

    #[test]
    fn discontinuous_kink_rejected() {
        let gp = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let gm = Mat::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        assert!(matches!(kink_ratio(&gp, &gm), Err(CksvarError::Discontinuous(_))));
        let neg = Mat::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, 1.0]);
        assert!(kink_ratio(&gp, &neg).is_err());
    }

    #[test]
    fn univariate_regulated_limit() {
        let m = CksvarModel::canonical(
            Vector::zeros(1),
            vec![Vector::from_element(1, 1.0)],
            vec![Vector::from_element(1, 0.5)],
            vec![Mat::zeros(1, 0)],
            Mat::identity(1, 1),
        )
        .unwrap();
        let v = vecm_decompose(&m).unwrap();
        let u = brownian_grid(&Mat::identity(1, 1), 256, 1, None).unwrap();
        let lp = limit_case1(&v, &Vector::zeros(1), &u).unwrap();
        let want = regulate(u.w.row(0).iter().copied().collect::<Vec<_>>().as_slice());
        for j in 0..=256 {
            assert_relative_eq!(lp.y[j], want[j], epsilon = 1e-14);
            assert!(lp.y[j] >= 0.0);
        }
        assert!(matches!(limit_case1(&v, &Vector::from_element(1, -1.0), &u), Err(CksvarError::NotInTrendSpace { .. })));
    }
}
