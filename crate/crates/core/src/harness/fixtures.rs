//! Built-in example models with their documented parameter ranges.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{CksvarError, Result};
use crate::linalg::{Mat, Vector};
use crate::model::CksvarModel;

pub type Params = BTreeMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
    pub range: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExampleFixture {
    pub name: &'static str,
    pub description: &'static str,
    pub params: Vec<ParamInfo>,
}

const fn param(name: &'static str, default: f64, range: &'static str) -> ParamInfo {
    ParamInfo { name, default, range }
}

pub fn fixtures() -> Vec<ExampleFixture> {
    vec![
        ExampleFixture {
            name: "natrate_1a",
            description: "interest rate and inflation with an AR(1) natural rate",
            params: vec![
                param("chi", 0.0, "[0,1)"),
                param("psi", 1.0, "(-1,1]"),
                param("gamma", 1.5, "(0,inf)"),
                param("theta", -0.5, "(-inf,0)"),
                param("mu", 0.5, "[0,1]"),
            ],
        },
        ExampleFixture {
            name: "infltarget_1b",
            description: "interest rate and inflation with a drifting inflation target",
            params: vec![
                param("delta", -0.2, "(-1,0]"),
                param("mu", 0.5, "[0,1]"),
                param("gamma", 1.5, "(1,inf)"),
                param("theta", -0.5, "(-inf,0)"),
            ],
        },
        ExampleFixture {
            name: "univariate_tobit",
            description: "univariate dynamic Tobit with one lag",
            params: vec![
                param("phi_plus", 1.0, "real"),
                param("phi_minus", 0.5, "real"),
                param("c", 0.0, "real"),
                param("sigma", 1.0, "(0,inf)"),
            ],
        },
    ]
}

pub fn fixture(name: &str) -> Result<ExampleFixture> {
    fixtures()
        .into_iter()
        .find(|f| f.name == name)
        .ok_or_else(|| CksvarError::InvalidParameter(format!("unknown example {name}")))
}

fn resolve(fx: &ExampleFixture, given: &Params) -> Result<Params> {
    for key in given.keys() {
        if !fx.params.iter().any(|p| p.name == key) {
            return Err(CksvarError::InvalidParameter(format!("{} has no parameter {key}", fx.name)));
        }
    }
    Ok(fx.params.iter().map(|p| (p.name.to_string(), *given.get(p.name).unwrap_or(&p.default))).collect())
}

fn require(ok: bool, constraint: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(CksvarError::InvalidParameter(format!("parameter out of range: {constraint}")))
    }
}

pub fn build_example(name: &str, given: &Params) -> Result<CksvarModel> {
    let fx = fixture(name)?;
    let v = resolve(&fx, given)?;
    let g = |k: &str| v[k];
    let model = match name {
        "natrate_1a" => {
            let (chi, psi, gamma, theta, mu) = (g("chi"), g("psi"), g("gamma"), g("theta"), g("mu"));
            require((0.0..1.0).contains(&chi), "chi in [0,1)")?;
            require(psi > -1.0 && psi <= 1.0, "psi in (-1,1]")?;
            require(gamma > 0.0, "gamma > 0")?;
            require(theta < 0.0, "theta < 0")?;
            require((0.0..=1.0).contains(&mu), "mu in [0,1]")?;
            CksvarModel {
                p: 2,
                k: 1,
                b: 0.0,
                c: Vector::zeros(2),
                phi0_plus: Vector::from_vec(vec![1.0, 0.0]),
                phi0_minus: Vector::from_vec(vec![1.0, theta * (1.0 - mu)]),
                phi0_x: Mat::from_column_slice(2, 1, &[-gamma, 1.0 - theta * gamma]),
                phi_plus: vec![Vector::from_vec(vec![psi, 0.0])],
                phi_minus: vec![Vector::from_vec(vec![psi, 0.0])],
                phi_x: vec![Mat::from_column_slice(2, 1, &[-psi * gamma, chi])],
                sigma: Mat::identity(2, 2),
            }
        }
        "infltarget_1b" => {
            let (delta, mu, gamma, theta) = (g("delta"), g("mu"), g("gamma"), g("theta"));
            require(delta > -1.0 && delta <= 0.0, "delta in (-1,0]")?;
            require((0.0..=1.0).contains(&mu), "mu in [0,1]")?;
            require(gamma > 1.0, "gamma > 1")?;
            require(theta < 0.0, "theta < 0")?;
            let phi1 = 1.0 - theta * gamma;
            let phimu = (1.0 - mu * theta * gamma) - theta * (1.0 - mu);
            CksvarModel {
                p: 2,
                k: 1,
                b: 0.0,
                c: Vector::zeros(2),
                phi0_plus: Vector::from_vec(vec![-1.0, phi1]),
                phi0_minus: Vector::from_vec(vec![-1.0, phimu]),
                phi0_x: Mat::from_column_slice(2, 1, &[gamma, -phi1]),
                phi_plus: vec![Vector::from_vec(vec![delta - 1.0, 0.0])],
                phi_minus: vec![Vector::from_vec(vec![delta - 1.0, 0.0])],
                phi_x: vec![Mat::from_column_slice(2, 1, &[gamma - delta, 0.0])],
                sigma: Mat::identity(2, 2) * (gamma - 1.0).powi(2),
            }
        }
        "univariate_tobit" => {
            let sigma = g("sigma");
            require(sigma > 0.0, "sigma > 0")?;
            CksvarModel::canonical(
                Vector::from_element(1, g("c")),
                vec![Vector::from_element(1, g("phi_plus"))],
                vec![Vector::from_element(1, g("phi_minus"))],
                vec![Mat::zeros(1, 0)],
                Mat::from_element(1, 1, sigma * sigma),
            )?
        }
        _ => unreachable!(),
    };
    model.check()?;
    Ok(model)
}

pub fn params(pairs: &[(&str, f64)]) -> Params {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{to_canonical, validate_dgp};
    use crate::vecm::{classify_case, vecm_decompose, CaseId, DEFAULT_RANK_TOL};

    fn case_of(m: &CksvarModel) -> CaseId {
        classify_case(&vecm_decompose(m).unwrap(), DEFAULT_RANK_TOL).unwrap().case_id
    }

    #[test]
    fn defaults_pass_dgp() {
        for fx in fixtures() {
            let m = build_example(fx.name, &Params::new()).unwrap();
            assert!(validate_dgp(&m).unwrap().ok(), "{}", fx.name);
        }
    }

    #[test]
    fn out_of_range_names_constraint() {
        let e = build_example("infltarget_1b", &params(&[("gamma", 0.9)])).unwrap_err();
        assert!(e.to_string().contains("gamma > 1"));
        assert!(build_example("natrate_1a", &params(&[("nope", 1.0)])).is_err());
        assert!(build_example("unknown", &Params::new()).is_err());
    }

    #[test]
    fn natrate_without_persistence_is_linear_in_canonical_form() {
        let m = build_example("natrate_1a", &params(&[("chi", 0.0), ("psi", 1.0), ("mu", 1.0)])).unwrap();
        let cm = to_canonical(&m).unwrap().model;
        assert!(cm.is_linear(1e-12));
    }

    #[test]
    fn example_cases() {
        assert_eq!(case_of(&build_example("infltarget_1b", &Params::new()).unwrap()), CaseId::RegulatedCoint);
        assert_eq!(case_of(&build_example("univariate_tobit", &Params::new()).unwrap()), CaseId::RegulatedCoint);
        let kinked = build_example("infltarget_1b", &params(&[("delta", 0.0)])).unwrap();
        assert_eq!(case_of(&kinked), CaseId::KinkedCoint);
    }
}
