//! Acceptance gate: one test per shipped guarantee, each printing a single
//! PASS/FAIL line (visible with `cargo test -- --nocapture`).

use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use parsplit::calculus::check_identity_suite;
use parsplit::coupled::{step, IterationConfig, Site, SolverState};
use parsplit::imaging::{degrade, io, psnr, ssim, Psf};
use parsplit::linop::LinearMap;
use parsplit::parsum::{ParallelSumProblem, Term};
use parsplit::prox::{dual_prox_step, ProxFunction, SmoothTerm};
use parsplit::restore::{restore, RestoreParams};
use parsplit::vecmath;
use parsplit::{selftest, Error};

fn verdict(name: &str, pass: bool, detail: &str) {
    println!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "{name}: {detail}");
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn asset(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("assets")
        .join(name)
}

/// Resolvent-calculus identities on seeded random SPD instances.
#[test]
fn resolvent_calculus_identities() {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for dim in 2..=4 {
        for seed in 0..10 {
            let report = check_identity_suite(seed, dim).expect("identity suite");
            worst = worst.max(report.max_discrepancy());
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        "resolvent calculus identities",
        worst <= 1e-8 && elapsed < 1.0,
        &format!("max discrepancy {worst:.3e} (<= 1e-8), {elapsed:.2}s (< 1s)"),
    );
}

/// Adjoint inner-product identity for every imaging operator.
#[test]
fn imaging_adjoint_identities() {
    let start = Instant::now();
    let report = selftest::adjoint_suite(&[]).expect("adjoint suite");
    let elapsed = start.elapsed().as_secs_f64();
    let worst = report
        .checks
        .iter()
        .map(|c| c.discrepancy)
        .fold(0.0, f64::max);
    verdict(
        "imaging adjoint identities",
        report.all_passed() && elapsed < 5.0,
        &format!("max relative defect {worst:.3e} (<= 1e-10), {elapsed:.2}s (< 5s)"),
    );
}

/// Firm nonexpansiveness, subgradient characterization, and the Moreau
/// identity across the prox catalog.
#[test]
fn prox_catalog_properties() {
    let report = selftest::prox_suite().expect("prox suite");
    let worst = report
        .checks
        .iter()
        .map(|c| c.discrepancy / c.threshold)
        .fold(0.0, f64::max);
    verdict(
        "prox catalog properties",
        report.all_passed(),
        &format!("worst check at {worst:.3e} of its threshold"),
    );
}

// ---------------------------------------------------------------------------
// Hand-written specialized recursion vs the reduced generic engine.

struct HandState {
    x: Vec<f64>,
    y: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
}

/// One step of the specialized recursion, written exactly as the closed-form
/// update reads (resolvent of the base block, per-term dual updates through
/// both coupling operators, then the corrections).
fn handwritten_step(p: &ParallelSumProblem, st: &HandState, gamma: f64) -> HandState {
    let r = p.terms.len();
    // s_{1,1} = x - γ(Cx + Σ L_k* v_k)
    let mut forward = p.smooth.gradient(&st.x);
    for (k, t) in p.terms.iter().enumerate() {
        vecmath::axpy(&mut forward, 1.0, &t.l.adjoint(&st.v[k]).unwrap());
    }
    let mut s11 = st.x.clone();
    vecmath::axpy(&mut s11, -gamma, &forward);
    // p_{1,1} = J_{γA}(s_{1,1} + γz)
    let mut arg = s11.clone();
    vecmath::axpy(&mut arg, gamma, &p.z);
    let p11 = p.f.prox(&arg, gamma);

    let mut p1k = Vec::with_capacity(r);
    let mut p2k = Vec::with_capacity(r);
    let mut p2kr = Vec::with_capacity(r);
    let mut v_next = Vec::with_capacity(r);
    let mut w_next = Vec::with_capacity(r);
    for (k, t) in p.terms.iter().enumerate() {
        // p_{1,k+1} = y_k + γ(L_k* v_k - M_k* w_k)
        let mut pk = st.y[k].clone();
        vecmath::axpy(&mut pk, gamma, &t.l.adjoint(&st.v[k]).unwrap());
        vecmath::axpy(&mut pk, -gamma, &t.m.adjoint(&st.w[k]).unwrap());
        // s_{2,k} = v_k + γ L_k (x - y_k)
        let mut s2 = st.v[k].clone();
        vecmath::axpy(
            &mut s2,
            gamma,
            &t.l.apply(&vecmath::sub(&st.x, &st.y[k])).unwrap(),
        );
        // p_{2,k} = s_{2,k} - γ J_{γ⁻¹B_k}(γ⁻¹ s_{2,k})
        let p2 = dual_prox_step(&s2, gamma, &t.g);
        // q_{2,k} = p_{2,k} + γ L_k (p_{1,1} - p_{1,k+1})
        let mut q2 = p2.clone();
        vecmath::axpy(
            &mut q2,
            gamma,
            &t.l.apply(&vecmath::sub(&p11, &pk)).unwrap(),
        );
        // v_{k,+} = v_k - s_{2,k} + q_{2,k}
        let mut v = st.v[k].clone();
        vecmath::axpy(&mut v, -1.0, &s2);
        vecmath::axpy(&mut v, 1.0, &q2);
        // s_{2,k+r} = w_k + γ M_k y_k
        let mut s2r = st.w[k].clone();
        vecmath::axpy(&mut s2r, gamma, &t.m.apply(&st.y[k]).unwrap());
        // p_{2,k+r} = s_{2,k+r} - γ J_{γ⁻¹D_k}(γ⁻¹ s_{2,k+r})
        let p2r = dual_prox_step(&s2r, gamma, &t.h);
        // q_{2,k+r} = p_{2,k+r} + γ M_k p_{1,k+1}
        let mut q2r = p2r.clone();
        vecmath::axpy(&mut q2r, gamma, &t.m.apply(&pk).unwrap());
        // w_{k,+} = w_k - s_{2,k+r} + q_{2,k+r}
        let mut w = st.w[k].clone();
        vecmath::axpy(&mut w, -1.0, &s2r);
        vecmath::axpy(&mut w, 1.0, &q2r);
        p1k.push(pk);
        p2k.push(p2);
        p2kr.push(p2r);
        v_next.push(v);
        w_next.push(w);
    }
    // q_{1,1} = p_{1,1} - γ(C p_{1,1} + Σ L_k* p_{2,k})
    let mut forward = p.smooth.gradient(&p11);
    for (k, t) in p.terms.iter().enumerate() {
        vecmath::axpy(&mut forward, 1.0, &t.l.adjoint(&p2k[k]).unwrap());
    }
    let mut q11 = p11.clone();
    vecmath::axpy(&mut q11, -gamma, &forward);
    // x_+ = x - s_{1,1} + q_{1,1}
    let mut x = st.x.clone();
    vecmath::axpy(&mut x, -1.0, &s11);
    vecmath::axpy(&mut x, 1.0, &q11);
    // y_{k,+} = y_k - p_{1,k+1} + q_{1,k+1},
    // q_{1,k+1} = p_{1,k+1} + γ(L_k* p_{2,k} - M_k* p_{2,k+r})
    let mut y_next = Vec::with_capacity(r);
    for (k, t) in p.terms.iter().enumerate() {
        let mut q1k = p1k[k].clone();
        vecmath::axpy(&mut q1k, gamma, &t.l.adjoint(&p2k[k]).unwrap());
        vecmath::axpy(&mut q1k, -gamma, &t.m.adjoint(&p2kr[k]).unwrap());
        let mut y = st.y[k].clone();
        vecmath::axpy(&mut y, -1.0, &p1k[k]);
        vecmath::axpy(&mut y, 1.0, &q1k);
        y_next.push(y);
    }
    HandState {
        x,
        y: y_next,
        v: v_next,
        w: w_next,
    }
}

fn random_problem(rng: &mut ChaCha8Rng, dim: usize, r: usize) -> ParallelSumProblem {
    let diag: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.2..1.5)).collect();
    let lip = diag.iter().cloned().fold(0.0, f64::max);
    let smooth = SmoothTerm::new(dim, lip, {
        let diag = diag.clone();
        move |x: &[f64]| x.iter().zip(&diag).map(|(v, d)| v * d).collect()
    });
    let mut terms = Vec::with_capacity(r);
    for k in 0..r {
        let gdim = 2 + k;
        let kdim = 4 - k;
        let l_entries: Vec<f64> = (0..gdim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let m_entries: Vec<f64> = (0..kdim * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        terms.push(
            Term::new(
                ProxFunction::l1(gdim, 0.4 + 0.2 * k as f64),
                ProxFunction::box_indicator(kdim, -0.5, 0.5).unwrap(),
                LinearMap::from_dense(gdim, dim, &l_entries, "L"),
                LinearMap::from_dense(kdim, dim, &m_entries, "M"),
            )
            .unwrap(),
        );
    }
    ParallelSumProblem {
        dim,
        z: random_vec(rng, dim),
        f: ProxFunction::l1(dim, 0.3),
        smooth,
        terms,
    }
}

/// The specialized three-sweep recursion and the reduced generic engine
/// take identical steps.
#[test]
fn specialized_recursion_matches_reduced_engine() {
    let dim = 3;
    let mut worst = 0.0f64;
    for r in 1..=3usize {
        for seed in 0..10u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(0x9000 + 37 * seed + r as u64);
            let p = random_problem(&mut rng, dim, r);
            let coupled = p.reduce(seed).expect("reduce");
            let epsilon = 1e-3;
            let gamma = (1.0 - epsilon) / coupled.beta().expect("beta") * 0.9;

            let x = random_vec(&mut rng, dim);
            let y: Vec<Vec<f64>> = (0..r).map(|_| random_vec(&mut rng, dim)).collect();
            let v: Vec<Vec<f64>> = p
                .terms
                .iter()
                .map(|t| random_vec(&mut rng, t.l.out_dim()))
                .collect();
            let w: Vec<Vec<f64>> = p
                .terms
                .iter()
                .map(|t| random_vec(&mut rng, t.m.out_dim()))
                .collect();

            let mut engine_state = SolverState::zeros(&coupled);
            engine_state.x[0] = x.clone();
            for k in 0..r {
                engine_state.x[k + 1] = y[k].clone();
                engine_state.v[k] = v[k].clone();
                engine_state.v[k + r] = w[k].clone();
            }
            let next = step(&coupled, &engine_state, gamma, epsilon, None).expect("step");
            let hand = handwritten_step(&p, &HandState { x, y, v, w }, gamma);

            let mut diff = vecmath::sub(&next.x[0], &hand.x)
                .iter()
                .fold(0.0f64, |a, &b| a.max(b.abs()));
            for k in 0..r {
                for (a, b) in [
                    (&next.x[k + 1], &hand.y[k]),
                    (&next.v[k], &hand.v[k]),
                    (&next.v[k + r], &hand.w[k]),
                ] {
                    diff = diff.max(
                        vecmath::sub(a, b)
                            .iter()
                            .fold(0.0f64, |m, &d| m.max(d.abs())),
                    );
                }
            }
            worst = worst.max(diff);
        }
    }
    verdict(
        "specialized recursion matches reduced engine",
        worst <= 1e-14,
        &format!("max per-entry step difference {worst:.3e} (<= 1e-14)"),
    );
}

fn soft(b: &[f64], w: f64) -> Vec<f64> {
    b.iter()
        .map(|&v| v.signum() * (v.abs() - w).max(0.0))
        .collect()
}

fn lasso_problem(b: &[f64], weight: f64) -> ParallelSumProblem {
    let dim = b.len();
    ParallelSumProblem {
        dim,
        z: b.to_vec(),
        f: ProxFunction::l1(dim, weight),
        smooth: SmoothTerm::new(dim, 1.0, |x: &[f64]| x.to_vec()),
        terms: vec![],
    }
}

/// Problems with closed-form solutions converge to them.
#[test]
fn closed_form_limits() {
    // soft-threshold limit of `min ½||x - b||² + w||x||₁`
    let b = vec![3.0, -0.4, 1.2, 0.05, -2.5];
    let weight = 0.5;
    let p = lasso_problem(&b, weight);
    // midpoint of the admissible interval: the boundary step leaves almost
    // no relaxation and converges far slower
    let config = IterationConfig {
        gamma: Some(0.5),
        max_iter: 2000,
        rtol: 0.0,
        ..IterationConfig::default()
    };
    let (sol, _, stats) = p.solve_min(&config, 0).expect("lasso");
    let lasso_err = vecmath::sub(&sol.x, &soft(&b, weight))
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()));

    // clamp limit of box-constrained diagonal least squares
    let diag = [0.5, 1.0, 1.2, 1.4];
    let data = [2.0, -1.0, 0.6, 8.0];
    let dim = diag.len();
    let p2 = ParallelSumProblem {
        dim,
        z: vec![0.0; dim],
        f: ProxFunction::box_indicator(dim, 0.0, 1.0).unwrap(),
        smooth: SmoothTerm::new(dim, diag.iter().fold(0.0f64, |a, &d| a.max(d * d)), {
            move |x: &[f64]| {
                (0..dim)
                    .map(|i| diag[i] * (diag[i] * x[i] - data[i]))
                    .collect()
            }
        }),
        terms: vec![],
    };
    let config2 = IterationConfig {
        gamma: Some(0.25),
        max_iter: 5000,
        rtol: 0.0,
        ..IterationConfig::default()
    };
    let (sol2, _, _) = p2.solve_min(&config2, 0).expect("box ls");
    let clamp: Vec<f64> = (0..dim)
        .map(|i| (data[i] / diag[i]).clamp(0.0, 1.0))
        .collect();
    let ls_err = vecmath::sub(&sol2.x, &clamp)
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()));

    verdict(
        "closed-form limits",
        lasso_err <= 1e-6 && ls_err <= 1e-6,
        &format!(
            "soft-threshold error {lasso_err:.3e} in {} iters, box-LS clamp error {ls_err:.3e} (both <= 1e-6)",
            stats.iterations
        ),
    );
}

/// Constructed stationary points are fixed points of the iteration.
#[test]
fn stationary_points_are_fixed() {
    let report = selftest::fixed_point_invariance().expect("fixed point suite");
    let worst = report
        .checks
        .iter()
        .map(|c| c.discrepancy)
        .fold(0.0, f64::max);
    verdict(
        "stationary points are fixed",
        report.all_passed(),
        &format!("max drift over 5 admissible step sizes {worst:.3e} (<= 1e-12)"),
    );
}

/// Summable injected perturbations (norm 1/(n+1)² at every inexact update)
/// do not move the limit.
#[test]
fn summable_perturbations_keep_the_limit() {
    // lasso routed through a coupling term so every injection site is live
    let b = vec![1.5, -0.8, 0.3, 2.2];
    let dim = b.len();
    let make = || ParallelSumProblem {
        dim,
        z: b.clone(),
        f: ProxFunction::zero(dim),
        smooth: SmoothTerm::new(dim, 1.0, |x: &[f64]| x.to_vec()),
        terms: vec![Term::new(
            ProxFunction::l1(dim, 0.5),
            ProxFunction::zero_indicator(dim),
            LinearMap::identity(dim),
            LinearMap::identity(dim),
        )
        .unwrap()
        .with_norms(1.0, 1.0)],
    };
    let config = IterationConfig {
        max_iter: 4000,
        rtol: 0.0,
        ..IterationConfig::default()
    };
    let (exact, _) = make().solve_inclusion(&config, 0, None).expect("exact run");

    let mut site_rng = ChaCha8Rng::seed_from_u64(0xE77);
    let mut injector = |_site: Site, n: usize, len: usize| {
        let mut dir: Vec<f64> = (0..len).map(|_| site_rng.gen_range(-1.0..1.0)).collect();
        let norm = vecmath::dot(&dir, &dir).sqrt().max(1e-30);
        let target = 1.0 / ((n + 1) as f64).powi(2);
        vecmath::scale_in_place(&mut dir, target / norm);
        Some(dir)
    };
    let (perturbed, _) = make()
        .solve_inclusion(&config, 0, Some(&mut injector))
        .expect("perturbed run");

    let diff = vecmath::sub(&exact.x, &perturbed.x)
        .iter()
        .fold(0.0f64, |a, &v| a.max(v.abs()));
    verdict(
        "summable perturbations keep the limit",
        diff <= 1e-4,
        &format!("limit difference {diff:.3e} (<= 1e-4)"),
    );
}

/// Step sizes outside `[ε, (1-ε)/β]` are rejected; the endpoints pass.
#[test]
fn step_size_gate() {
    let p = lasso_problem(&[1.0, -2.0], 0.3);
    let coupled = p.reduce(0).expect("reduce");
    let beta = coupled.beta().expect("beta");
    let epsilon = 1e-3;
    let hi = (1.0 - epsilon) / beta;
    let state = SolverState::zeros(&coupled);

    let reject_lo = step(&coupled, &state, epsilon * 0.5, epsilon, None);
    let reject_hi = step(&coupled, &state, hi * 1.01, epsilon, None);
    let accept_lo = step(&coupled, &state, epsilon, epsilon, None);
    let accept_hi = step(&coupled, &state, hi, epsilon, None);

    let rejected = matches!(reject_lo, Err(Error::StepSize { .. }))
        && matches!(reject_hi, Err(Error::StepSize { .. }));
    let accepted = accept_lo.is_ok() && accept_hi.is_ok();
    verdict(
        "step size gate",
        rejected && accepted,
        &format!("rejects outside [{epsilon:.1e}, {hi:.4}], accepts both endpoints"),
    );
}

/// Small-image restoration: quality strictly improves on a deterministic
/// degradation within the iteration and time budget.
#[test]
fn small_image_restoration_quality() {
    let start = Instant::now();
    let truth = io::read_pgm(asset("piecewise64.pgm")).expect("asset");
    let psf = Psf::motion(7).expect("psf");
    let (degraded, _sigma) = degrade(&truth, &psf, 45.0, 1).expect("degrade");
    let params = RestoreParams {
        psf,
        max_iter: 500,
        rtol: 0.0,
        ..RestoreParams::default()
    };
    let out = restore(&degraded, &params).expect("restore");
    let elapsed = start.elapsed().as_secs_f64();

    let (p0, p1) = (
        psnr(&truth, &degraded).expect("psnr"),
        psnr(&truth, &out.image).expect("psnr"),
    );
    let (s0, s1) = (
        ssim(&truth, &degraded).expect("ssim"),
        ssim(&truth, &out.image).expect("ssim"),
    );
    verdict(
        "small image restoration quality",
        p1 >= p0 + 1.0 && s1 > s0 && elapsed < 60.0,
        &format!(
            "psnr {p0:.2} -> {p1:.2} dB (needs +1.0), ssim {s0:.3} -> {s1:.3}, {elapsed:.1}s (< 60s)"
        ),
    );
}

/// Benchmark restoration at 256x256: large quality gain on the bundled
/// natural test image, with achieved values recorded for regression
/// tracking and a fixed-seed reproducibility check.
#[test]
fn benchmark_restoration_quality() {
    let truth = io::read_pgm(asset("natural256.pgm")).expect("asset");
    let psf = Psf::motion(21).expect("psf");
    let (degraded, _sigma) = degrade(&truth, &psf, 45.0, 1).expect("degrade");
    let params = RestoreParams {
        psf: psf.clone(),
        max_iter: 1000,
        rtol: 0.0,
        ..RestoreParams::default()
    };
    let out = restore(&degraded, &params).expect("restore");

    let (p0, p1) = (
        psnr(&truth, &degraded).expect("psnr"),
        psnr(&truth, &out.image).expect("psnr"),
    );
    let (s0, s1) = (
        ssim(&truth, &degraded).expect("ssim"),
        ssim(&truth, &out.image).expect("ssim"),
    );

    // record achieved values next to the test binary for regression tracking
    let record = format!(
        "{{\n  \"degraded\": {{ \"psnr_db\": {p0:.4}, \"ssim\": {s0:.4} }},\n  \"restored\": {{ \"psnr_db\": {p1:.4}, \"ssim\": {s1:.4} }},\n  \"iterations\": {}\n}}\n",
        out.stats.iterations
    );
    let record_path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../target/benchmark-restoration-metrics.json");
    std::fs::write(&record_path, record).expect("write metrics record");

    // fixed seed => bitwise-identical pipeline; check on a short rerun
    let short = RestoreParams {
        max_iter: 25,
        ..params.clone()
    };
    let a = restore(&degraded, &short).expect("rerun a");
    let b = restore(&degraded, &short).expect("rerun b");
    let rerun_gap = (psnr(&truth, &a.image).unwrap() - psnr(&truth, &b.image).unwrap()).abs();

    verdict(
        "benchmark restoration quality",
        p1 >= p0 + 3.0 && s1 >= s0 + 0.1 && rerun_gap <= 0.05,
        &format!(
            "psnr {p0:.2} -> {p1:.2} dB (needs +3), ssim {s0:.3} -> {s1:.3} (needs +0.1), rerun gap {rerun_gap:.2e} dB (<= 0.05)"
        ),
    );
}

/// Rescaling every coupling operator to unit norm (with the compensating
/// argument scaling folded into its function) leaves the limit unchanged.
#[test]
fn operator_normalization_invariance() {
    let b = vec![2.0, -1.2, 0.7];
    let dim = b.len();
    let l = LinearMap::from_dense(
        dim,
        dim,
        &[2.0, 0.3, 0.0, -0.4, 1.5, 0.2, 0.1, 0.0, 2.5],
        "L",
    );
    let m = LinearMap::scaling(dim, 3.0);
    let g = ProxFunction::l1(dim, 0.5);
    let h = ProxFunction::zero_indicator(dim);

    let raw = ParallelSumProblem {
        dim,
        z: b.clone(),
        f: ProxFunction::zero(dim),
        smooth: SmoothTerm::new(dim, 1.0, |x: &[f64]| x.to_vec()),
        terms: vec![Term::new(g.clone(), h.clone(), l.clone(), m.clone()).unwrap()],
    };
    let table = raw.norm_table(0).expect("norms");
    let (rho_l, rho_m) = table[0];
    let normalized = ParallelSumProblem {
        dim,
        z: b.clone(),
        f: ProxFunction::zero(dim),
        smooth: SmoothTerm::new(dim, 1.0, |x: &[f64]| x.to_vec()),
        terms: vec![Term::new(
            ProxFunction::scaled(&g, rho_l).unwrap(),
            ProxFunction::scaled(&h, rho_m).unwrap(),
            l.scaled(1.0 / rho_l),
            m.scaled(1.0 / rho_m),
        )
        .unwrap()
        .with_norms(1.0, 1.0)],
    };

    let config = IterationConfig {
        max_iter: 60_000,
        rtol: 1e-13,
        ..IterationConfig::default()
    };
    let (x_raw, _, _) = raw.solve_min(&config, 0).expect("raw solve");
    let (x_nrm, _, _) = normalized.solve_min(&config, 0).expect("normalized solve");
    let diff = vecmath::dist(&x_raw.x, &x_nrm.x);
    verdict(
        "operator normalization invariance",
        diff <= 1e-6,
        &format!("primal limit moved by {diff:.3e} (<= 1e-6)"),
    );
}
