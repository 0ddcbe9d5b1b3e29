//! Monte Carlo comparison of scaled sample paths against simulated limit processes.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::companion::verify_assumptions;
use crate::error::{CksvarError, Result};
use crate::harness::diagnostics::Equilibrium;
use crate::harness::stats::{ks_two_sample, median};
use crate::jsr::DEFAULT_DEPTH;
use crate::limit::{brownian_grid_stream, limit_case1, limit_case2, LimitPath, DEFAULT_GRID};
use crate::linalg::Vector;
use crate::model::{split, to_canonical, CanonicalModel, CksvarModel};
use crate::simulate::{simulate_stream, InnovationSpec, Init};
use crate::vecm::{classify_case, vecm_decompose, VecmForm, DEFAULT_RANK_TOL};

const LIMIT_SEED_SALT: u64 = 0x6c69_6d69_7470_6174;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    TerminalValue,
    PathSup,
    OccupationFractionNegative,
    SupAbsYMinus,
}

impl Functional {
    pub const ALL: [Functional; 4] = [
        Functional::TerminalValue,
        Functional::PathSup,
        Functional::OccupationFractionNegative,
        Functional::SupAbsYMinus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Functional::TerminalValue => "terminal_value",
            Functional::PathSup => "path_sup",
            Functional::OccupationFractionNegative => "occupation_fraction_negative",
            Functional::SupAbsYMinus => "sup_abs_y_minus",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| CksvarError::Parse(format!("unknown functional {s}")))
    }

    /// Evaluates on y_1..y_n after multiplying by `scale`.
    pub fn eval(self, y: &[f64], scale: f64) -> f64 {
        match self {
            Functional::TerminalValue => y.last().copied().unwrap_or(0.0) * scale,
            Functional::PathSup => y.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)) * scale,
            Functional::OccupationFractionNegative => y.iter().filter(|&&v| v < 0.0).count() as f64 / y.len() as f64,
            Functional::SupAbsYMinus => y.iter().fold(0.0_f64, |m, &v| m.max(-v)) * scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectedCase {
    CaseI,
    CaseIi,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSpec {
    pub model: CksvarModel,
    pub expect: Option<ExpectedCase>,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub functionals: Vec<Functional>,
    pub seed: u64,
    pub grid: usize,
    pub limit_reps: usize,
    pub ks_tol: f64,
}

impl McSpec {
    pub fn new(model: CksvarModel, n_list: Vec<usize>, reps: usize, seed: u64) -> Self {
        McSpec {
            model,
            expect: None,
            n_list,
            reps,
            functionals: Functional::ALL.to_vec(),
            seed,
            grid: DEFAULT_GRID,
            limit_reps: 10 * reps,
            ks_tol: 0.05,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() || self.n_list.windows(2).any(|w| w[0] >= w[1]) || self.n_list[0] == 0 {
            return Err(CksvarError::InvalidParameter("n_list must be non-empty, positive and increasing".into()));
        }
        if self.reps < 100 {
            return Err(CksvarError::InvalidParameter("reps must be at least 100".into()));
        }
        if self.grid == 0 || self.limit_reps == 0 || self.functionals.is_empty() {
            return Err(CksvarError::InvalidParameter("grid, limit_reps and functionals must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KsRow {
    pub n: usize,
    pub functional: Functional,
    pub ks: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthRow {
    pub n_from: usize,
    pub n_to: usize,
    /// sqrt(n_to / n_from), the ratio expected of an I*(1) component.
    pub integrated_ratio: f64,
    pub median_y_plus: f64,
    pub median_y_minus: f64,
    pub median_xi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub case: ExpectedCase,
    pub reps: usize,
    pub limit_reps: usize,
    pub grid: usize,
    pub seed: u64,
    pub ks: Vec<KsRow>,
    pub growth: Vec<GrowthRow>,
    pub warnings: Vec<String>,
    pub pass: bool,
    pub model_seconds: f64,
    pub limit_seconds: f64,
    /// Functional samples at the largest n, sorted.
    pub model_samples: BTreeMap<Functional, Vec<f64>>,
    pub limit_samples: BTreeMap<Functional, Vec<f64>>,
}

/// Running maxima of |y⁺|, |y⁻| and |ξ| at each requested sample size.
#[derive(Debug, Clone)]
struct RepStats {
    values: Vec<Vec<f64>>,
    sup_plus: Vec<f64>,
    sup_minus: Vec<f64>,
    sup_xi: Vec<f64>,
}

struct Setup {
    canon: CanonicalModel,
    vecm: VecmForm,
    case: ExpectedCase,
    eq: Equilibrium,
}

fn setup(model: &CksvarModel) -> Result<Setup> {
    let canon = to_canonical(model)?;
    let vecm = vecm_decompose(&canon.model)?;
    let cls = classify_case(&vecm, DEFAULT_RANK_TOL)?;
    let case = if cls.is_case_one() {
        ExpectedCase::CaseI
    } else if cls.is_case_two() {
        ExpectedCase::CaseIi
    } else {
        return Err(CksvarError::WrongCase(format!("Monte Carlo needs case (i) or (ii), found {}", cls.case_id.label())));
    };
    let eq = Equilibrium::of(&vecm_decompose(&canon.source)?)?;
    Ok(Setup { canon, vecm, case, eq })
}

fn sample_rep(s: &Setup, n_list: &[usize], functionals: &[Functional], seed: u64, rep: u64) -> Result<RepStats> {
    let model = &s.canon.source;
    let n_max = *n_list.last().unwrap();
    let path = simulate_stream(model, n_max, &InnovationSpec::iid(model.sigma.clone(), seed), &Init::Zeros, rep)?;
    let y: Vec<f64> = path.y.iter().map(|v| v - path.b).collect();
    let mut stats = RepStats { values: Vec::new(), sup_plus: Vec::new(), sup_minus: Vec::new(), sup_xi: Vec::new() };
    let (mut sp, mut sm, mut sx) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut next = 0;
    for t in 1..=n_max {
        let yt = y[t - 1];
        let (a, b) = split(yt);
        sp = sp.max(a.abs());
        sm = sm.max(b.abs());
        if s.eq.rank() > 0 {
            let mut z = path.z(t as i64);
            z[0] = yt;
            sx = sx.max(s.eq.xi(&z).amax());
        }
        if t == n_list[next] {
            let scale = 1.0 / (t as f64).sqrt();
            stats.values.push(functionals.iter().map(|f| f.eval(&y[..t], scale)).collect());
            stats.sup_plus.push(sp);
            stats.sup_minus.push(sm);
            stats.sup_xi.push(sx);
            next += 1;
        }
    }
    Ok(stats)
}

fn build_limit(s: &Setup, grid: usize, seed: u64, rep: u64, z0: Option<&Vector>) -> Result<LimitPath> {
    let u = brownian_grid_stream(&s.canon.model.sigma, grid, seed ^ LIMIT_SEED_SALT, rep, None)?;
    let z0 = match z0 {
        None => Vector::zeros(s.vecm.p),
        Some(z) => {
            if z.len() != s.vecm.p {
                return Err(CksvarError::Dimension(format!("z0 must have length {}", s.vecm.p)));
            }
            Vector::from_vec(s.canon.to_canonical_state(z.as_slice()))
        }
    };
    let lp = match s.case {
        ExpectedCase::CaseI => limit_case1(&s.vecm, &z0, &u)?,
        ExpectedCase::CaseIi => limit_case2(&s.vecm, &z0, &u)?,
    };
    Ok(lp.to_structural(&s.canon))
}

fn sample_limit(s: &Setup, grid: usize, functionals: &[Functional], seed: u64, rep: u64) -> Result<Vec<f64>> {
    let lp = build_limit(s, grid, seed, rep, None)?;
    Ok(functionals.iter().map(|f| f.eval(&lp.y[1..], 1.0)).collect())
}

/// One draw of the limit process of a case-(i) or case-(ii) model, in structural coordinates.
/// `z0` is the scaled initial value (y, x) and must lie in the common-trend space.
pub fn limit_path(model: &CksvarModel, grid: usize, seed: u64, z0: Option<&Vector>, expect: Option<ExpectedCase>) -> Result<(ExpectedCase, LimitPath)> {
    let s = setup(model)?;
    if let Some(e) = expect {
        if e != s.case {
            return Err(CksvarError::WrongCase(format!("expected {e:?}, model is {:?}", s.case)));
        }
    }
    Ok((s.case, build_limit(&s, grid, seed, 0, z0)?))
}

fn growth_rows(n_list: &[usize], stats: &[RepStats], with_xi: bool) -> Vec<GrowthRow> {
    let ratio = |a: f64, b: f64| if a > 0.0 { b / a } else if b == 0.0 { 1.0 } else { f64::INFINITY };
    (0..n_list.len().saturating_sub(1))
        .map(|i| {
            let col = |f: &dyn Fn(&RepStats) -> &Vec<f64>| {
                let r: Vec<f64> = stats.iter().map(|s| ratio(f(s)[i], f(s)[i + 1])).collect();
                median(&r)
            };
            GrowthRow {
                n_from: n_list[i],
                n_to: n_list[i + 1],
                integrated_ratio: (n_list[i + 1] as f64 / n_list[i] as f64).sqrt(),
                median_y_plus: col(&|s| &s.sup_plus),
                median_y_minus: col(&|s| &s.sup_minus),
                median_xi: with_xi.then(|| col(&|s| &s.sup_xi)),
            }
        })
        .collect()
}

pub fn run_mc(spec: &McSpec) -> Result<McReport> {
    spec.validate()?;
    let s = setup(&spec.model)?;
    if let Some(e) = spec.expect {
        if e != s.case {
            return Err(CksvarError::WrongCase(format!("expected {e:?}, model is {:?}", s.case)));
        }
    }
    let mut warnings = Vec::new();
    let rep = verify_assumptions(&spec.model, DEFAULT_RANK_TOL, DEFAULT_DEPTH);
    if !rep.all_ok() {
        let failed: Vec<&str> = rep.case_specific.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        warnings.push(format!("assumption checks did not all pass: {}", failed.join(", ")));
    }
    warnings.push("KS tolerances are engineering choices; no convergence rate is available".into());

    let start = Instant::now();
    let stats: Vec<RepStats> = (0..spec.reps as u64)
        .into_par_iter()
        .map(|r| sample_rep(&s, &spec.n_list, &spec.functionals, spec.seed, r))
        .collect::<Result<_>>()?;
    let model_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let limit: Vec<Vec<f64>> = (0..spec.limit_reps as u64)
        .into_par_iter()
        .map(|r| sample_limit(&s, spec.grid, &spec.functionals, spec.seed, r))
        .collect::<Result<_>>()?;
    let limit_seconds = start.elapsed().as_secs_f64();

    let column = |rows: &[Vec<f64>], j: usize| {
        let mut v: Vec<f64> = rows.iter().map(|r| r[j]).collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    };
    let limit_cols: Vec<Vec<f64>> = (0..spec.functionals.len()).map(|j| column(&limit, j)).collect();
    let mut ks = Vec::new();
    let mut model_samples = BTreeMap::new();
    for (i, &n) in spec.n_list.iter().enumerate() {
        let at_n: Vec<Vec<f64>> = stats.iter().map(|st| st.values[i].clone()).collect();
        for (j, &f) in spec.functionals.iter().enumerate() {
            let sample = column(&at_n, j);
            let d = ks_two_sample(&sample, &limit_cols[j]);
            ks.push(KsRow { n, functional: f, ks: d, tolerance: spec.ks_tol, pass: d < spec.ks_tol });
            if i + 1 == spec.n_list.len() {
                model_samples.insert(f, sample);
            }
        }
    }
    let limit_samples = spec.functionals.iter().copied().zip(limit_cols).collect();
    let last = *spec.n_list.last().unwrap();
    let pass = ks.iter().filter(|r| r.n == last).all(|r| r.pass);
    Ok(McReport {
        case: s.case,
        reps: spec.reps,
        limit_reps: spec.limit_reps,
        grid: spec.grid,
        seed: spec.seed,
        growth: growth_rows(&spec.n_list, &stats, s.eq.rank() > 0),
        ks,
        warnings,
        pass,
        model_seconds,
        limit_seconds,
        model_samples,
        limit_samples,
    })
}

/// Medians over replications of sup-growth ratios between n and factor·n on the same path.
pub fn growth_diagnostics(model: &CksvarModel, n: usize, factor: usize, reps: usize, seed: u64) -> Result<GrowthRow> {
    if n == 0 || factor < 2 || reps == 0 {
        return Err(CksvarError::InvalidParameter("need n > 0, factor >= 2 and reps > 0".into()));
    }
    let s = setup(model)?;
    let n_list = [n, factor * n];
    let stats: Vec<RepStats> = (0..reps as u64)
        .into_par_iter()
        .map(|r| sample_rep(&s, &n_list, &[], seed, r))
        .collect::<Result<_>>()?;
    Ok(growth_rows(&n_list, &stats, s.eq.rank() > 0).remove(0))
}

/// Limit functional samples alone, for self-consistency checks of the limit sampler.
pub fn limit_samples(model: &CksvarModel, grid: usize, reps: usize, functionals: &[Functional], seed: u64) -> Result<Vec<Vec<f64>>> {
    let s = setup(model)?;
    (0..reps as u64).into_par_iter().map(|r| sample_limit(&s, grid, functionals, seed, r)).collect()
}
