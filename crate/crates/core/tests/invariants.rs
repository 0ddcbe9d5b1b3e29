use cksvar::companion::{build_f_pair, verify_assumptions_with_budget};
use cksvar::harness::random::{random_case_one, random_coherent_model, random_pd, uniform_mat, uniform_vec};
use cksvar::harness::stats::{ks_critical, ks_two_sample, mean};
use cksvar::harness::mc::limit_samples;
use cksvar::harness::{build_example, params, Functional, Params};
use cksvar::linalg::{self, Mat, Vector};
use cksvar::model::{to_canonical, CksvarModel, Regime};
use cksvar::simulate::{rng_for, simulate_stream, InnovationSpec, Init};
use cksvar::vecm::{
    classify_case, projection_case1, stacked_linear, trend_projection, vecm_decompose, CaseId, Factorization, VecmForm,
    DEFAULT_RANK_TOL,
};
use rand_chacha::ChaCha8Rng;

const DEPTH: usize = 10;
const BUDGET: usize = 50_000;

fn loading(rng: &mut ChaCha8Rng, beta: &Mat) -> Mat {
    let a = 0.5 + uniform_vec(rng, 1, 0.3)[0];
    let btb = beta.transpose() * beta;
    -(beta * linalg::inverse(&btb).unwrap()) * a
}

/// Lag terms [γ⁺, γ⁻, Γˣ] of a canonical model, equal across regimes when `linear`.
fn gammas(rng: &mut ChaCha8Rng, p: usize, k: usize, linear: bool) -> Vec<Mat> {
    (1..k)
        .map(|_| {
            let mut g = uniform_mat(rng, p, p + 1, 0.15 / (p * k) as f64);
            if linear {
                let c = g.column(0).into_owned();
                g.set_column(1, &c);
            }
            g
        })
        .collect()
}

/// A canonical candidate with case-(i) ranks that has not been screened by any assumption check.
fn case_one_candidate(rng: &mut ChaCha8Rng, p: usize, k: usize) -> Option<CksvarModel> {
    let r = if p == 1 { 0 } else { 1 + (uniform_vec(rng, 1, 1.0)[0].abs() * (p - 1) as f64) as usize % (p - 1) };
    let beta = uniform_mat(rng, p, r, 1.0);
    let pi = if r == 0 { Mat::zeros(p, p) } else { loading(rng, &beta) * beta.transpose() };
    let pi_plus = pi.column(0).into_owned();
    let d = uniform_vec(rng, p, 0.6);
    VecmForm::compose_canonical(
        &pi_plus,
        &(&pi_plus + d),
        &pi.columns(1, p - 1).into_owned(),
        &gammas(rng, p, k, false),
        Vector::zeros(p),
        random_pd(rng, p),
    )
    .ok()
}

#[test]
fn kappa_one_is_negative_when_k_or_p_is_one() {
    let mut rng = rng_for(808, 0);
    let mut checked = 0;
    let mut tries = 0;
    while checked < 50 {
        tries += 1;
        assert!(tries < 20_000, "only {checked} qualifying models found");
        let (p, k) = if tries % 2 == 0 { (1, 1 + tries % 3) } else { (2 + tries % 2, 1) };
        let Some(m) = case_one_candidate(&mut rng, p, k) else { continue };
        let v = vecm_decompose(&m).unwrap();
        let Ok(cls) = classify_case(&v, DEFAULT_RANK_TOL) else { continue };
        if !cls.is_case_one() {
            continue;
        }
        let rep = verify_assumptions_with_budget(&m, DEFAULT_RANK_TOL, DEPTH, BUDGET);
        let jsr_ok = rep.check("CO(i).2 JSR").is_some_and(|c| c.passed);
        if !(rep.cvar_roots_ok && rep.rank_ok && jsr_ok) {
            continue;
        }
        let kappa1 = projection_case1(&v).unwrap().kappa1;
        assert!(kappa1 < 0.0, "kappa1 = {kappa1} for p = {p}, k = {k}");
        checked += 1;
    }
}

#[test]
fn certified_case_one_has_stable_extreme_companions() {
    let mut rng = rng_for(809, 0);
    for i in 0..30 {
        let m = random_case_one(&mut rng, 1 + i % 3, 1 + (i / 3) % 2).unwrap();
        let rep = verify_assumptions_with_budget(&m, DEFAULT_RANK_TOL, DEPTH, BUDGET);
        assert!(rep.check("CO(i).2 JSR").unwrap().passed);
        let (f0, f1) = build_f_pair(&vecm_decompose(&m).unwrap()).unwrap();
        assert!(linalg::spectral_radius(&f0) < 1.0);
        assert!(linalg::spectral_radius(&f1) < 1.0);
    }
}

#[test]
fn linear_cointegration_has_stable_error_correction() {
    let mut rng = rng_for(810, 0);
    let mut checked = 0;
    let mut tries = 0;
    while checked < 40 {
        tries += 1;
        assert!(tries < 5_000);
        let p = 2 + tries % 2;
        let k = 1 + (tries / 2) % 2;
        let r = 1 + tries % (p - 1);
        let beta = uniform_mat(&mut rng, p, r, 1.0);
        let alpha = loading(&mut rng, &beta);
        let pi = &alpha * beta.transpose();
        let pi_y = pi.column(0).into_owned();
        let g = gammas(&mut rng, p, k, true);
        let m = VecmForm::compose_canonical(&pi_y, &pi_y, &pi.columns(1, p - 1).into_owned(), &g, Vector::zeros(p), random_pd(&mut rng, p))
            .unwrap();
        let rep = verify_assumptions_with_budget(&m, DEFAULT_RANK_TOL, DEPTH, BUDGET);
        if !(rep.cvar_roots_ok && rep.rank_ok) {
            continue;
        }
        let v = vecm_decompose(&m).unwrap();
        let cls = classify_case(&v, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(cls.case_id, CaseId::Linear);
        let f: Factorization = cls.factor_plus.unwrap();
        let lin: Vec<Mat> = (1..k).map(|i| v.gamma(i, Regime::Plus).clone()).collect();
        let (a, bt) = stacked_linear(&f.alpha, &f.beta, &lin);
        let n = bt.nrows();
        let step = Mat::identity(n, n) + &bt * &a;
        assert!(linalg::spectral_radius(&step) < 1.0, "I + b'a has radius {}", linalg::spectral_radius(&step));
        assert!(trend_projection(&f.alpha_perp, &v.gamma_at_one(Regime::Plus), &f.beta_perp).is_ok());
        checked += 1;
    }
}

#[test]
fn canonical_transform_fixes_contemporaneous_determinants() {
    let mut rng = rng_for(811, 0);
    for i in 0..100 {
        let m = random_coherent_model(&mut rng, 1 + i % 3, 1 + i % 2);
        let cm = to_canonical(&m).unwrap().model;
        for regime in [Regime::Plus, Regime::Minus] {
            assert!((linalg::determinant(&cm.lag_block(0, regime)) - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn limit_sampler_agrees_with_itself() {
    let m = build_example("infltarget_1b", &params(&[("delta", 0.0)])).unwrap();
    let f = [Functional::TerminalValue, Functional::OccupationFractionNegative];
    let (half, runs) = (300, 40u64);
    let crit = ks_critical(half, half, 0.01);
    let mut passed = 0;
    for run in 0..runs {
        let draws = limit_samples(&m, 256, 2 * half, &f, 1000 + run).unwrap();
        let ok = (0..f.len()).all(|j| {
            let col: Vec<f64> = draws.iter().map(|d| d[j]).collect();
            ks_two_sample(&col[..half], &col[half..]) < crit
        });
        passed += ok as u64;
    }
    assert!(passed * 100 >= 95 * runs, "{passed} of {runs} runs within the 1% critical value");
}

fn mean_negative_share(m: &CksvarModel, n: usize, reps: u64) -> f64 {
    let spec = InnovationSpec::iid(m.sigma.clone(), 77);
    let shares: Vec<f64> = (0..reps)
        .map(|r| {
            let path = simulate_stream(m, n, &spec, &Init::Zeros, r).unwrap();
            path.y.iter().filter(|&&y| y < path.b).count() as f64 / n as f64
        })
        .collect();
    mean(&shares)
}

#[test]
fn case_one_spends_little_time_below_the_threshold() {
    for name in ["infltarget_1b", "univariate_tobit"] {
        let m = build_example(name, &Params::new()).unwrap();
        let share = mean_negative_share(&m, 100_000, 10);
        assert!(share < 0.10, "{name}: {share}");
    }
    let kinked = build_example("infltarget_1b", &params(&[("delta", 0.0)])).unwrap();
    let short = mean_negative_share(&kinked, 10_000, 10);
    let long = mean_negative_share(&kinked, 100_000, 10);
    assert!(long > 0.10 && long > 0.5 * short, "case (ii) shares {short} then {long}");
}
