//! Innovation generation, path simulation and path scaling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CksvarError, Result};
use crate::linalg::{self, Mat, Vector};
use crate::model::{split_at, validate_dgp, CksvarModel};

pub const DEFAULT_MA_LENGTH: usize = 50;
const BRANCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationKind {
    IidGaussian,
    MaInfinityTruncated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnovationSpec {
    pub kind: InnovationKind,
    pub sigma: Mat,
    pub ma_weights: Vec<f64>,
    pub seed: u64,
}

impl InnovationSpec {
    pub fn iid(sigma: Mat, seed: u64) -> Self {
        InnovationSpec { kind: InnovationKind::IidGaussian, sigma, ma_weights: Vec::new(), seed }
    }

    pub fn ma(sigma: Mat, weights: Vec<f64>, seed: u64) -> Self {
        InnovationSpec { kind: InnovationKind::MaInfinityTruncated, sigma, ma_weights: weights, seed }
    }

    /// Geometric weights ρ⁰, ρ¹, … truncated at `len` terms.
    pub fn geometric_weights(rho: f64, len: usize) -> Vec<f64> {
        (0..len).map(|i| rho.powi(i as i32)).collect()
    }
}

/// Random stream for replication `stream` of a run seeded with `seed`.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn standard_normals(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Mat {
    Mat::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Innovations u₁, …, uₙ as columns of a p×n matrix.
pub fn gen_innovations(spec: &InnovationSpec, n: usize) -> Result<Mat> {
    gen_innovations_stream(spec, n, 0)
}

pub fn gen_innovations_stream(spec: &InnovationSpec, n: usize, stream: u64) -> Result<Mat> {
    if n == 0 {
        return Err(CksvarError::InvalidParameter("n must be at least 1".into()));
    }
    let l = linalg::cholesky(&spec.sigma)?;
    let p = spec.sigma.nrows();
    let mut rng = rng_for(spec.seed, stream);
    let w = match spec.kind {
        InnovationKind::IidGaussian => standard_normals(&mut rng, p, n),
        InnovationKind::MaInfinityTruncated => {
            let theta = &spec.ma_weights;
            if theta.is_empty() || theta.iter().any(|v| !v.is_finite()) {
                return Err(CksvarError::InvalidParameter("moving-average weights must be finite and non-empty".into()));
            }
            let lead = theta.len() - 1;
            let eta = standard_normals(&mut rng, p, n + lead);
            let mut w = Mat::zeros(p, n);
            for t in 0..n {
                for (i, th) in theta.iter().enumerate() {
                    let col = eta.column(t + lead - i);
                    let mut out = w.column_mut(t);
                    out.axpy(*th, &col, 1.0);
                }
            }
            w
        }
    };
    Ok(l * w)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Zeros,
    /// p×k matrix of presample values, earliest first.
    Values(Mat),
    /// Every presample value equals √n·ζ.
    Diffuse(Vector),
}

/// A simulated trajectory for t = 1..n with k presample values for t = −k+1..0.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub n: usize,
    pub b: f64,
    pub y: Vec<f64>,
    pub x: Mat,
    pub y_plus: Vec<f64>,
    pub y_minus: Vec<f64>,
    pub initial: Mat,
    pub innovations: Mat,
}

impl Path {
    pub fn p(&self) -> usize {
        self.initial.nrows()
    }

    pub fn presample(&self) -> usize {
        self.initial.ncols()
    }

    /// z_t = (y_t, x_t) for t from −k+1 to n.
    pub fn z(&self, t: i64) -> Vector {
        let k = self.presample() as i64;
        assert!(t > -k && t <= self.n as i64, "time index {t} outside the path");
        if t <= 0 {
            self.initial.column((t + k - 1) as usize).into_owned()
        } else {
            let i = (t - 1) as usize;
            let mut v = Vector::zeros(self.p());
            v[0] = self.y[i];
            for j in 1..self.p() {
                v[j] = self.x[(j - 1, i)];
            }
            v
        }
    }

    pub fn y_at(&self, t: i64) -> f64 {
        self.z(t)[0]
    }
}

fn presample(model: &CksvarModel, n: usize, init: &Init) -> Result<Mat> {
    let p = model.p;
    let k = model.k;
    match init {
        Init::Zeros => Ok(Mat::zeros(p, k)),
        Init::Values(m) => {
            if m.nrows() != p || m.ncols() != k {
                return Err(CksvarError::Dimension(format!("initial values must be {p} x {k}")));
            }
            Ok(m.clone())
        }
        Init::Diffuse(zeta) => {
            if zeta.len() != p {
                return Err(CksvarError::Dimension("diffuse initial direction must have length p".into()));
            }
            let v = zeta * (n as f64).sqrt();
            Ok(Mat::from_fn(p, k, |i, _| v[i]))
        }
    }
}

pub fn simulate(model: &CksvarModel, n: usize, spec: &InnovationSpec, init: &Init) -> Result<Path> {
    simulate_stream(model, n, spec, init, 0)
}

pub fn simulate_stream(model: &CksvarModel, n: usize, spec: &InnovationSpec, init: &Init, stream: u64) -> Result<Path> {
    if spec.sigma.shape() != (model.p, model.p) {
        return Err(CksvarError::Dimension("innovation variance must be p x p".into()));
    }
    let u = gen_innovations_stream(spec, n, stream)?;
    simulate_with_innovations(model, &u, init)
}

/// Runs the recursion with the supplied innovations (columns are u₁, …, uₙ).
pub fn simulate_with_innovations(model: &CksvarModel, u: &Mat, init: &Init) -> Result<Path> {
    model.check()?;
    let p = model.p;
    let k = model.k;
    let n = u.ncols();
    if u.nrows() != p {
        return Err(CksvarError::Dimension("innovations must have p rows".into()));
    }
    if n == 0 {
        return Err(CksvarError::InvalidParameter("n must be at least 1".into()));
    }
    let direct = model.is_canonical() && model.b == 0.0;
    if !direct {
        let rep = validate_dgp(model)?;
        if !rep.coherent {
            return Err(CksvarError::Dgp { check: "DGP.2".into(), message: rep.messages.join("; ") });
        }
    }
    let initial = presample(model, n, init)?;
    let b = model.b;
    let lags: Vec<Mat> = (1..=k).map(|i| model.lag_full(i)).collect();
    let a_plus = model.lag_block(0, crate::model::Regime::Plus);
    let a_minus = model.lag_block(0, crate::model::Regime::Minus);
    let lu_plus = a_plus.clone().lu();
    let lu_minus = a_minus.clone().lu();

    // s-states (y⁺, y⁻, x), earliest presample first.
    let mut states: Vec<Vector> = Vec::with_capacity(k + n);
    for j in 0..k {
        states.push(s_state(&initial.column(j).into_owned(), b));
    }
    let mut y = Vec::with_capacity(n);
    let mut x = Mat::zeros(p - 1, n);
    let mut y_plus = Vec::with_capacity(n);
    let mut y_minus = Vec::with_capacity(n);
    for t in 0..n {
        let mut rhs = &model.c + u.column(t);
        for (i, lag) in lags.iter().enumerate() {
            rhs += lag * &states[k + t - 1 - i];
        }
        let z = if direct {
            rhs
        } else {
            solve_branches(&rhs, model, &lu_plus, &lu_minus, b).map_err(|message| CksvarError::Coherence { t: t + 1, message })?
        };
        let s = s_state(&z, b);
        y.push(z[0]);
        y_plus.push(s[0]);
        y_minus.push(s[1]);
        for j in 1..p {
            x[(j - 1, t)] = z[j];
        }
        states.push(s);
    }
    Ok(Path { n, b, y, x, y_plus, y_minus, initial, innovations: u.clone() })
}

fn s_state(z: &Vector, b: f64) -> Vector {
    let p = z.len();
    let (yp, ym) = split_at(z[0], b);
    let mut s = Vector::zeros(p + 1);
    s[0] = yp;
    s[1] = ym;
    for j in 1..p {
        s[j + 1] = z[j];
    }
    s
}

type Lu = nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>;

/// Solves Φ₀⁺y⁺ + Φ₀⁻y⁻ + Φ₀ˣx = rhs by trying both sign branches.
fn solve_branches(rhs: &Vector, model: &CksvarModel, lu_plus: &Lu, lu_minus: &Lu, b: f64) -> std::result::Result<Vector, String> {
    let plus = lu_plus.solve(&(rhs - &model.phi0_minus * b));
    let minus = lu_minus.solve(&(rhs - &model.phi0_plus * b));
    let ok = |z: Option<Vector>, upper: bool| {
        z.filter(|z| {
            let tol = BRANCH_TOL * (1.0 + z[0].abs() + b.abs());
            if upper {
                z[0] >= b - tol
            } else {
                z[0] <= b + tol
            }
        })
    };
    match (ok(plus, true), ok(minus, false)) {
        (Some(zp), Some(zm)) => {
            if (&zp - &zm).norm() <= 1e-9 * (1.0 + zp.norm()) {
                Ok(zp)
            } else {
                Err("both regime branches give distinct consistent solutions".into())
            }
        }
        (Some(zp), None) => Ok(zp),
        (None, Some(zm)) => Ok(zm),
        (None, None) => Err("no regime branch gives a sign-consistent solution".into()),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScaledPath {
    pub lambda: Vec<f64>,
    /// p×(m+1) values of n^{−1/2} z_{⌊nλ⌋}.
    pub z: Mat,
}

pub fn scale_path(path: &Path, grid_points: usize) -> Result<ScaledPath> {
    if grid_points == 0 || grid_points > path.n {
        return Err(CksvarError::InvalidParameter("grid size must be between 1 and n".into()));
    }
    let n = path.n;
    let scale = 1.0 / (n as f64).sqrt();
    let lambda: Vec<f64> = (0..=grid_points).map(|j| j as f64 / grid_points as f64).collect();
    let mut z = Mat::zeros(path.p(), grid_points + 1);
    for j in 0..=grid_points {
        let t = (j * n) / grid_points;
        z.set_column(j, &(path.z(t as i64) * scale));
    }
    Ok(ScaledPath { lambda, z })
}
