//! Joint spectral radius bounds by product enumeration.

use nalgebra::Schur;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{CksvarError, Result};
use crate::linalg::{self, Mat};

pub const DEFAULT_DEPTH: usize = 12;
pub const DEFAULT_BUDGET: usize = 1_000_000;
/// Smallest graded scaling, which bounds the condition number of a similarity basis by its inverse.
const MIN_SCALE: f64 = 1e-8;
/// Relative allowance added to norm-based upper bounds for rounding in products and SVDs.
pub const UPPER_ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CompanionSet {
    pub matrices: Vec<Mat>,
    pub labels: Vec<String>,
}

impl CompanionSet {
    pub fn new(matrices: Vec<Mat>, labels: Vec<String>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(CksvarError::EmptySet);
        }
        let d = matrices[0].nrows();
        if matrices.iter().any(|m| m.nrows() != d || m.ncols() != d) {
            return Err(CksvarError::Dimension("set matrices must be square of equal size".into()));
        }
        if labels.len() != matrices.len() {
            return Err(CksvarError::Dimension("one label per matrix".into()));
        }
        Ok(CompanionSet { matrices, labels })
    }

    pub fn unlabeled(matrices: Vec<Mat>) -> Result<Self> {
        let labels = (0..matrices.len()).map(|i| format!("A{i}")).collect();
        Self::new(matrices, labels)
    }

    pub fn dim(&self) -> usize {
        self.matrices[0].nrows()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsrEstimate {
    pub lower: f64,
    pub upper: f64,
    pub depth: usize,
    pub certified_lt_one: bool,
    pub products: usize,
    pub budget_exhausted: bool,
}

pub fn jsr_bounds(set: &CompanionSet, depth: usize) -> Result<JsrEstimate> {
    jsr_bounds_with_budget(set, depth, DEFAULT_BUDGET)
}

/// Lower bound from spectral radii of products, upper bound from spectral norms of products
/// in a few similarity-transformed coordinates. Each coordinate system gets an equal share of
/// the budget, so results at depth d+1 refine those at depth d.
pub fn jsr_bounds_with_budget(set: &CompanionSet, depth: usize, budget: usize) -> Result<JsrEstimate> {
    if depth == 0 {
        return Err(CksvarError::InvalidParameter("depth must be at least 1".into()));
    }
    let bases = similarity_bases(set);
    let share = (budget / bases.len()).max(set.matrices.len());
    let mut est = JsrEstimate {
        lower: 0.0,
        upper: f64::INFINITY,
        depth,
        certified_lt_one: false,
        products: 0,
        budget_exhausted: false,
    };
    for (t, t_inv) in &bases {
        let mats: Vec<Mat> = set.matrices.iter().map(|a| t_inv * a * t).collect();
        let run = enumerate(&mats, depth, share);
        est.lower = est.lower.max(run.lower);
        est.upper = est.upper.min(run.upper);
        est.products += run.products;
        est.budget_exhausted |= run.budget_exhausted;
    }
    est.upper = est.upper.max(est.lower);
    est.certified_lt_one = est.upper < 1.0;
    Ok(est)
}

struct Run {
    lower: f64,
    upper: f64,
    products: usize,
    budget_exhausted: bool,
}

fn enumerate(mats: &[Mat], depth: usize, budget: usize) -> Run {
    let mut lower = 0.0_f64;
    let mut upper = f64::INFINITY;
    let mut products = 0;
    let mut frontier: Vec<Mat> = Vec::new();
    for t in 1..=depth {
        let mut level: Vec<Mat> = if t == 1 {
            mats.to_vec()
        } else {
            frontier.par_iter().flat_map_iter(|b| mats.iter().map(move |a| a * b)).collect()
        };
        if level.is_empty() {
            break;
        }
        let complete = products + level.len() <= budget;
        if !complete {
            level.truncate(budget.saturating_sub(products));
        }
        products += level.len();
        let inv_t = 1.0 / t as f64;
        let stats: Vec<(f64, f64)> = level
            .par_iter()
            .map(|b| (linalg::spectral_radius(b).powf(inv_t), linalg::spectral_norm(b).powf(inv_t)))
            .collect();
        lower = stats.iter().fold(lower, |m, s| m.max(s.0));
        if !complete {
            return Run { lower, upper, products, budget_exhausted: true };
        }
        let level_max = stats.iter().fold(0.0_f64, |m, s| m.max(s.1)) * (1.0 + UPPER_ROUNDING);
        upper = upper.min(level_max);
        frontier = level
            .into_iter()
            .zip(stats)
            .filter(|(_, s)| s.1 > lower)
            .map(|(b, _)| b)
            .collect();
        if frontier.is_empty() {
            upper = upper.min(lower * (1.0 + UPPER_ROUNDING));
            break;
        }
    }
    Run { lower, upper, products, budget_exhausted: false }
}

/// Identity plus real-Schur coordinates of the set average with graded scalings. Each 2×2 block
/// with eigenvalues a ± ib is brought to the normal form [[a, b], [-b, a]].
fn similarity_bases(set: &CompanionSet) -> Vec<(Mat, Mat)> {
    let d = set.dim();
    let mut out = vec![(Mat::identity(d, d), Mat::identity(d, d))];
    if d < 2 {
        return out;
    }
    let avg = set.matrices.iter().fold(Mat::zeros(d, d), |acc, m| acc + m) / set.matrices.len() as f64;
    let Some(schur) = Schur::try_new(avg, f64::EPSILON, 10_000) else {
        return out;
    };
    let (q, tri) = schur.unpack();
    let mut level = vec![0usize; d];
    let mut block = Mat::identity(d, d);
    let mut block_inv = Mat::identity(d, d);
    let mut i = 0;
    let mut l = 0;
    while i < d {
        level[i] = l;
        if i + 1 < d && tri[(i + 1, i)].abs() > 1e-14 * (1.0 + tri[(i, i)].abs()) {
            level[i + 1] = l;
            let (p, qq, r, s) = (tri[(i, i)], tri[(i, i + 1)], tri[(i + 1, i)], tri[(i + 1, i + 1)]);
            let a = 0.5 * (p + s);
            let b2 = -0.25 * (p - s).powi(2) - qq * r;
            if b2 > 0.0 && qq != 0.0 {
                let b = b2.sqrt();
                let sb = nalgebra::Matrix2::new(qq, 0.0, a - p, b);
                let norm = sb.norm();
                let sb = sb / norm;
                if let Some(sb_inv) = sb.try_inverse() {
                    for (r0, c0) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        block[(i + r0, i + c0)] = sb[(r0, c0)];
                        block_inv[(i + r0, i + c0)] = sb_inv[(r0, c0)];
                    }
                }
            }
            i += 2;
        } else {
            i += 1;
        }
        l += 1;
    }
    let top = *level.iter().max().unwrap() as f64;
    for s in [1.0_f64, 0.1, 1e-3, 1e-6] {
        if s < 1.0 && s.powf(top) < MIN_SCALE {
            continue;
        }
        let scale = nalgebra::DVector::from_iterator(d, level.iter().map(|&e| s.powi(e as i32)));
        let inv = scale.map(|x| 1.0 / x);
        let t = &q * &block * Mat::from_diagonal(&scale);
        let t_inv = Mat::from_diagonal(&inv) * &block_inv * q.transpose();
        if linalg::max_abs(&(&t_inv * &t - Mat::identity(d, d))) <= 1e-12 {
            out.push((t, t_inv));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn scalar_singleton() {
        let set = CompanionSet::unlabeled(vec![Mat::from_element(1, 1, 0.5)]).unwrap();
        let e = jsr_bounds(&set, 5).unwrap();
        assert_relative_eq!(e.lower, 0.5, epsilon = 1e-14);
        assert_relative_eq!(e.upper, 0.5, epsilon = 1e-11);
        assert!(e.certified_lt_one);
    }

    #[test]
    fn jordan_singleton() {
        let a = Mat::from_row_slice(2, 2, &[0.9, 1.0, 0.0, 0.9]);
        let e = jsr_bounds(&CompanionSet::unlabeled(vec![a]).unwrap(), 30).unwrap();
        assert!((e.lower - 0.9).abs() < 1e-3);
        assert!((e.upper - 0.9).abs() < 1e-3);
    }

    #[test]
    fn golden_pair() {
        let a0 = Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let a1 = Mat::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let e = jsr_bounds(&CompanionSet::unlabeled(vec![a0, a1]).unwrap(), 8).unwrap();
        assert!(e.lower >= 1.618 - 1e-3);
        assert!(!e.certified_lt_one);
    }

    #[test]
    fn empty_set_rejected() {
        assert_eq!(CompanionSet::unlabeled(vec![]), Err(CksvarError::EmptySet));
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let a0 = Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let a1 = Mat::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let e = jsr_bounds_with_budget(&CompanionSet::unlabeled(vec![a0, a1]).unwrap(), 30, 1000).unwrap();
        assert!(e.budget_exhausted);
        assert!(e.lower <= e.upper);
    }
}
