use std::io::Write;
use std::time::Instant;

use cksvar::harness::fixtures::{build_example, params, Params};
use cksvar::harness::random::{random_case_one, random_case_two, random_coherent_model, uniform_mat, uniform_vec};
use cksvar::harness::stats::{half_normal_cdf, ks_one_sample, median};
use cksvar::harness::{growth_diagnostics, run_mc, ExpectedCase, Functional, McSpec};
use cksvar::jsr::{jsr_bounds, jsr_bounds_with_budget, CompanionSet};
use cksvar::limit::{brownian_grid_stream, limit_case2};
use cksvar::linalg::{self, Mat, Vector};
use cksvar::model::{split, to_canonical, Regime};
use cksvar::recursion::{short_memory_case1, short_memory_case2};
use cksvar::simulate::{rng_for, simulate, simulate_stream, simulate_with_innovations, InnovationSpec, Init};
use cksvar::vecm::{classify_case, factorize_pi, linear_projections, vecm_decompose, CaseId, SignContext, DEFAULT_RANK_TOL};
use rand::Rng;
use rayon::prelude::*;

/// Written past the test harness capture so every line shows up in the test log.
fn report(name: &str, pass: bool, detail: &str, start: Instant) {
    let status = if pass { "PASS" } else { "FAIL" };
    let line = format!("acceptance {status} {name}: {detail} ({:.2}s)\n", start.elapsed().as_secs_f64());
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
}

#[test]
fn canonical_path_equivalence() {
    let start = Instant::now();
    let mut rng = rng_for(101, 0);
    let mut worst = 0.0_f64;
    for i in 0..50 {
        let p = 2 + i % 3;
        let k = 1 + i % 3;
        let m = random_coherent_model(&mut rng, p, k);
        let cm = to_canonical(&m).unwrap();
        let sp = simulate(&m, 1000, &InnovationSpec::iid(m.sigma.clone(), 500 + i as u64), &Init::Zeros).unwrap();
        let cu = &cm.q * &sp.innovations;
        let cp = simulate_with_innovations(&cm.model, &cu, &Init::Zeros).unwrap();
        for t in 1..=1000 {
            let mapped = cm.to_canonical_state(sp.z(t).as_slice());
            let direct = cp.z(t);
            for j in 0..p {
                worst = worst.max((mapped[j] - direct[j]).abs());
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst < 1e-9 && secs < 10.0;
    report("canonical path equivalence", pass, &format!("50 models, max deviation {worst:.3e} (tol 1e-9)"), start);
    assert!(pass);
}

#[test]
fn natural_rate_canonical_form() {
    let start = Instant::now();
    let (chi, psi, g, th, mu) = (0.3, 0.9, 1.5, -0.5, 0.5);
    let m = build_example("natrate_1a", &params(&[("chi", chi), ("psi", psi), ("gamma", g), ("theta", th), ("mu", mu)])).unwrap();
    let cm = to_canonical(&m).unwrap();
    let k1 = 1.0 / (1.0 - th * g);
    let kmu = 1.0 / (1.0 - mu * th * g);
    let tau = g * th * (1.0 - mu) * k1;
    let want_lag = Mat::from_row_slice(
        2,
        3,
        &[psi, psi - chi * tau * kmu, g * (chi * k1 - psi) * k1, 0.0, -chi * th * (1.0 - mu) * kmu, chi * k1],
    );
    let want_p = Mat::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 1.0 + tau, 0.0, 0.0, th * (1.0 - mu), 1.0 - th * g]);
    let want_q = Mat::from_row_slice(2, 2, &[1.0, g * k1, 0.0, 1.0]);
    let want_sigma = &want_q * want_q.transpose();
    let err = [
        linalg::max_abs(&(cm.model.lag_full(1) - want_lag)),
        linalg::max_abs(&(&cm.p_inv - want_p)),
        linalg::max_abs(&(&cm.q - want_q)),
        linalg::max_abs(&(&cm.model.sigma - want_sigma)),
    ]
    .into_iter()
    .fold(0.0_f64, f64::max);
    let secs = start.elapsed().as_secs_f64();
    let pass = err < 1e-12 && cm.model.is_canonical() && secs < 1.0;
    report("natural-rate canonical form", pass, &format!("max entry error {err:.3e} (tol 1e-12)"), start);
    assert!(pass);
}

#[test]
fn short_memory_recursions() {
    let start = Instant::now();
    let n = 10_000;
    let mut rng = rng_for(303, 0);
    let mut worst_minus = 0.0_f64;
    let mut worst_xi = 0.0_f64;
    for i in 0..20 {
        let p = 1 + i % 3;
        let k = 1 + (i / 3) % 2;
        let m = random_case_one(&mut rng, p, k).unwrap();
        let path = simulate(&m, n, &InnovationSpec::iid(m.sigma.clone(), 700 + i as u64), &Init::Zeros).unwrap();
        let tr = short_memory_case1(&vecm_decompose(&m).unwrap(), &path).unwrap();
        for t in 1..=n {
            let exact = path.y_minus[t - 1];
            worst_minus = worst_minus.max((tr.y_minus[t] - exact).abs() / (f64::EPSILON * (1.0 + exact.abs())));
        }
    }
    for i in 0..20 {
        let p = 1 + i % 3;
        let k = if p == 1 { 2 } else { 1 + (i / 3) % 2 };
        let m = random_case_two(&mut rng, p, k).unwrap();
        let path = simulate(&m, n, &InnovationSpec::iid(m.sigma.clone(), 900 + i as u64), &Init::Zeros).unwrap();
        let tr = short_memory_case2(&vecm_decompose(&m).unwrap(), &path).unwrap();
        for t in 0..=n {
            worst_xi = worst_xi.max((&tr.xi[t] - &tr.xi_direct[t]).amax());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_minus <= 1e4 && worst_xi < 1e-8 && secs < 30.0;
    report(
        "short-memory recursion oracles",
        pass,
        &format!(
            "negative part within {worst_minus:.1} ulps relative (tol 1e4), xi max error {worst_xi:.3e} (tol 1e-8)"
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn projection_identities() {
    let start = Instant::now();
    let mut rng = rng_for(404, 0);
    let mut worst_proj = 0.0_f64;
    for i in 0..200 {
        let p = 2 + i % 4;
        let r = 1 + i % (p - 1);
        let k = 1 + i % 3;
        let pi = uniform_mat(&mut rng, p, r, 1.0) * uniform_mat(&mut rng, p, r, 1.0).transpose();
        let f = factorize_pi(&pi, r).unwrap();
        let gammas: Vec<Mat> = (1..k).map(|_| uniform_mat(&mut rng, p, p, 0.3)).collect();
        let pp = linear_projections(&f, &gammas, SignContext::Plus).unwrap();
        let d = pp.p_beta_perp.nrows();
        let sum = &pp.p_beta_perp + &pp.p_alpha - Mat::identity(d, d);
        let idem_b = &pp.p_beta_perp * &pp.p_beta_perp - &pp.p_beta_perp;
        let idem_a = &pp.p_alpha * &pp.p_alpha - &pp.p_alpha;
        worst_proj = [worst_proj, sum.amax(), idem_b.amax(), idem_a.amax()].into_iter().fold(0.0, f64::max);
    }
    let mut worst_rk1 = 0.0_f64;
    let mut min_mu = f64::INFINITY;
    let mut done = 0;
    while done < 200 {
        let n = rng.gen_range(2..6);
        let mm = n + rng.gen_range(0..3);
        let a = uniform_mat(&mut rng, mm, n, 1.0);
        let b2 = uniform_mat(&mut rng, mm, n, 1.0);
        let c = uniform_vec(&mut rng, mm, 1.0);
        let d = uniform_vec(&mut rng, n, 1.0);
        let b1 = &b2 + &c * d.transpose();
        let m1 = a.transpose() * &b1;
        let m2 = a.transpose() * &b2;
        let (det1, det2) = (m1.determinant(), m2.determinant());
        if det1 * det2 <= 0.0 || det1.abs() < 1e-2 || det2.abs() < 1e-2 {
            continue;
        }
        done += 1;
        let i1 = m1.try_inverse().unwrap();
        let i2 = m2.try_inverse().unwrap();
        let l1 = d.transpose() * &i1;
        let l2 = d.transpose() * &i2;
        let mu = det2 / det1;
        min_mu = min_mu.min(mu);
        let gap_i = (&l1 - &l2 * mu).amax() / (1.0 + l1.amax());
        let mut v = uniform_vec(&mut rng, n, 1.0);
        let l1v = l1.transpose();
        v -= &l1v * (l1v.dot(&v) / l1v.norm_squared());
        let gap_ii = (&i1 * &v - &i2 * &v).amax() / (1.0 + (&i1 * &v).amax());
        worst_rk1 = worst_rk1.max(gap_i).max(gap_ii);
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst_proj < 1e-10 && worst_rk1 < 1e-8 && min_mu > 0.0;
    report(
        "projection identities",
        pass,
        &format!("complementarity and idempotency {worst_proj:.3e} (tol 1e-10), rank-one perturbation {worst_rk1:.3e} (tol 1e-8), min mu {min_mu:.3e} ({secs:.1}s)"),
        start,
    );
    assert!(pass);
}

#[test]
fn jsr_engine() {
    let start = Instant::now();
    let mut rng = rng_for(505, 0);
    let mut singles = vec![
        Mat::from_row_slice(2, 2, &[0.9, 1.0, 0.0, 0.9]),
        Mat::from_row_slice(2, 2, &[0.0, -0.7, 0.7, 0.0]),
        Mat::from_element(1, 1, -1.3),
    ];
    for _ in 0..5 {
        singles.push(uniform_mat(&mut rng, 3, 3, 0.6));
    }
    let mut worst_single = 0.0_f64;
    for a in &singles {
        let rho = linalg::spectral_radius(a);
        let e = jsr_bounds(&CompanionSet::unlabeled(vec![a.clone()]).unwrap(), 30).unwrap();
        worst_single = worst_single.max((e.lower - rho).abs()).max((e.upper - rho).abs());
    }
    let a0 = Mat::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
    let a1 = Mat::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
    let golden = CompanionSet::unlabeled(vec![a0, a1]).unwrap();
    let timed = Instant::now();
    let g = jsr_bounds_with_budget(&golden, 30, 1_000_000).unwrap();
    let golden_secs = timed.elapsed().as_secs_f64();
    let pair = CompanionSet::unlabeled(vec![uniform_mat(&mut rng, 3, 3, 0.5), uniform_mat(&mut rng, 3, 3, 0.5)]).unwrap();
    let mut monotone = true;
    for set in [&golden, &pair] {
        let mut prev: Option<(f64, f64)> = None;
        for depth in 1..=12 {
            let e = jsr_bounds(set, depth).unwrap();
            if let Some((lo, up)) = prev {
                monotone &= e.lower >= lo && e.upper <= up;
            }
            monotone &= e.lower <= e.upper;
            prev = Some((e.lower, e.upper));
        }
    }
    let pass = worst_single < 1e-3 && g.lower >= 1.618 - 1e-3 && !g.certified_lt_one && monotone && golden_secs < 60.0;
    report(
        "joint spectral radius engine",
        pass,
        &format!(
            "singleton error {worst_single:.3e} (tol 1e-3), golden lower {:.6}, certified {}, monotone {monotone}, budget 1e6 run {golden_secs:.1}s",
            g.lower, g.certified_lt_one
        ),
        start,
    );
    assert!(pass);
}

#[test]
fn tobit_regulated_limit() {
    let start = Instant::now();
    let m = build_example("univariate_tobit", &Params::new()).unwrap();
    let (n, reps) = (20_000, 2000);
    let spec = InnovationSpec::iid(m.sigma.clone(), 606);
    let draws: Vec<(f64, f64)> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let path = simulate_stream(&m, n, &spec, &Init::Zeros, r).unwrap();
            let scale = 1.0 / (n as f64).sqrt();
            let terminal = split(path.y[n - 1]).0 * scale;
            let sup_minus = path.y_minus.iter().fold(0.0_f64, |a, v| a.max(v.abs())) * scale;
            (terminal, sup_minus)
        })
        .collect();
    let terminal: Vec<f64> = draws.iter().map(|d| d.0).collect();
    let sup_minus: Vec<f64> = draws.iter().map(|d| d.1).collect();
    // one lag, so the short-run polynomial at one is 1 and the limit variance is sigma^2
    let ks = ks_one_sample(&terminal, |x| half_normal_cdf(x, 1.0));
    let med = median(&sup_minus);
    let secs = start.elapsed().as_secs_f64();
    let pass = ks < 0.05 && med < 0.05 && secs < 300.0;
    report(
        "censored Tobit regulated limit",
        pass,
        &format!("KS vs half-normal {ks:.4} (tol 0.05), median scaled sup of negative part {med:.4} (tol 0.05)"),
        start,
    );
    assert!(pass);
}

#[test]
fn kinked_limit_distribution() {
    let start = Instant::now();
    let m = build_example("infltarget_1b", &params(&[("delta", 0.0), ("mu", 0.5)])).unwrap();
    let mut spec = McSpec::new(m.clone(), vec![20_000], 500, 707);
    spec.expect = Some(ExpectedCase::CaseIi);
    spec.functionals = vec![Functional::TerminalValue, Functional::OccupationFractionNegative];
    spec.limit_reps = 20_000;
    spec.ks_tol = 0.06;
    let rep = run_mc(&spec).unwrap();

    let cm = to_canonical(&m).unwrap();
    let vecm = vecm_decompose(&cm.model).unwrap();
    let z0 = Vector::zeros(2);
    let sgn = |v: f64| if v > 0.0 { 1 } else if v < 0.0 { -1 } else { 0 };
    let (agree, total) = (0..500u64)
        .into_par_iter()
        .map(|r| {
            let u = brownian_grid_stream(&cm.model.sigma, 2048, 708, r, None).unwrap();
            let lp = limit_case2(&vecm, &z0, &u).unwrap();
            let a = lp.y.iter().zip(&lp.driver).filter(|(y, d)| sgn(**y) == sgn(**d)).count();
            (a, lp.y.len())
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let coherence = agree as f64 / total as f64;
    let ks: Vec<String> = rep.ks.iter().map(|r| format!("{} {:.4}", r.functional.name(), r.ks)).collect();
    let secs = start.elapsed().as_secs_f64();
    let pass = rep.pass && coherence >= 0.99 && secs < 600.0;
    report(
        "kinked limit distribution",
        pass,
        &format!("KS {} (tol 0.06), sign coherence {:.4} (min 0.99)", ks.join(", "), coherence),
        start,
    );
    assert!(pass);
}

#[test]
fn growth_diagnostics_case_one() {
    let start = Instant::now();
    let fixtures = [("infltarget_1b", Params::new()), ("univariate_tobit", Params::new())];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, (name, p)) in fixtures.iter().enumerate() {
        let m = build_example(name, p).unwrap();
        let g = growth_diagnostics(&m, 5000, 4, 200, 808 + i as u64).unwrap();
        pass &= g.median_y_minus < 2.0 && (1.5..=2.8).contains(&g.median_y_plus);
        parts.push(format!("{name} y- {:.3} y+ {:.3}", g.median_y_minus, g.median_y_plus));
    }
    pass &= start.elapsed().as_secs_f64() < 120.0;
    report(
        "growth diagnostics",
        pass,
        &format!("{} (y- below 2, y+ in [1.5, 2.8])", parts.join("; ")),
        start,
    );
    assert!(pass);
}

#[test]
fn classification_of_examples() {
    let start = Instant::now();
    let classify = |name: &str, p: &[(&str, f64)]| {
        let m = build_example(name, &params(p)).unwrap();
        classify_case(&vecm_decompose(&m).unwrap(), DEFAULT_RANK_TOL).unwrap()
    };
    let mut pass = true;
    pass &= classify("infltarget_1b", &[("delta", -0.2), ("mu", 0.5)]).case_id == CaseId::RegulatedCoint;
    pass &= classify("infltarget_1b", &[("delta", 0.0), ("mu", 0.5)]).case_id == CaseId::KinkedCoint;
    pass &= classify("infltarget_1b", &[("delta", -0.2), ("mu", 1.0)]).case_id == CaseId::Linear;
    pass &= classify("infltarget_1b", &[("delta", 0.0), ("mu", 1.0)]).case_id == CaseId::Linear;
    let (g, th, mu) = (1.5, -0.5, 0.5);
    let nat = classify("natrate_1a", &[("chi", 0.0), ("psi", 1.0), ("gamma", g), ("theta", th), ("mu", mu)]);
    pass &= nat.case_id == CaseId::KinkedCoint;
    let tau = g * th * (1.0 - mu) / (1.0 - th * g);
    let normalized = |regime: Regime| {
        let f = if regime == Regime::Plus { nat.factor_plus.as_ref() } else { nat.factor_minus.as_ref() };
        let b = &f.unwrap().beta;
        b[(0, 0)] / b[(1, 0)]
    };
    let err_plus = normalized(Regime::Plus).abs();
    let err_minus = (normalized(Regime::Minus) - tau / g).abs();
    pass &= err_plus < 1e-10 && err_minus < 1e-10;
    pass &= start.elapsed().as_secs_f64() < 1.0;
    report(
        "classification of examples",
        pass,
        &format!("cointegrating vector errors {err_plus:.3e} and {err_minus:.3e} (tol 1e-10)"),
        start,
    );
    assert!(pass);
}
