//! The battery behind the `selftest` subcommand: operator-calculus
//! identities, adjoint checks on the imaging operators, proximity-operator
//! properties, a closed-form convergence run, and fixed-point invariance
//! of the iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::check_identity_suite;
use crate::coupled::{step, CoupledProblem, IterationConfig, SolverState};
use crate::error::Result;
use crate::imaging::{blur_map, d2_map, tv_map, wavelet::wavelet_map, Psf};
use crate::linop::LinearMap;
use crate::parsum::{ParallelSumProblem, Term};
use crate::prox::{prox_l1, ProxFunction, SmoothTerm};
use crate::vecmath;

/// One named check with its worst observed discrepancy and threshold.
#[derive(Debug, Clone)]
pub struct Check {
    pub name: String,
    pub discrepancy: f64,
    pub threshold: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.discrepancy.is_finite() && self.discrepancy <= self.threshold
    }
}

/// Full report; printable and summarizable into an exit code.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub checks: Vec<Check>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn push(&mut self, name: impl Into<String>, discrepancy: f64, threshold: f64) {
        self.checks.push(Check {
            name: name.into(),
            discrepancy,
            threshold,
        });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<44} max discrepancy {:>10.3e} (tolerance {:.0e})\n",
                if c.passed() { "PASS" } else { "FAIL" },
                c.name,
                c.discrepancy,
                c.threshold
            ));
        }
        let status = if self.all_passed() { "ok" } else { "FAILED" };
        out.push_str(&format!(
            "{} checks, {} failed: {status}\n",
            self.checks.len(),
            self.checks.iter().filter(|c| !c.passed()).count()
        ));
        out
    }

    /// First failing check, if any.
    pub fn first_failure(&self) -> Option<&Check> {
        self.checks.iter().find(|c| !c.passed())
    }
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Operator-calculus identities on seeded random strongly positive
/// instances, dimensions 2..4, 10 seeds each.
pub fn identity_suite() -> Result<Report> {
    let mut report = Report::default();
    for dim in 2..=4usize {
        let mut worst = 0.0f64;
        for seed in 0..10u64 {
            let r = check_identity_suite(seed, dim)?;
            worst = worst.max(r.max_discrepancy());
        }
        report.push(
            format!("operator calculus identities (dim {dim})"),
            worst,
            1e-8,
        );
    }
    Ok(report)
}

/// Worst relative adjoint defect of `l` over seeded probes.
pub fn adjoint_defect(l: &LinearMap, probes: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..probes {
        let x = random_vec(&mut rng, l.in_dim());
        let u = random_vec(&mut rng, l.out_dim());
        let lhs = vecmath::dot(&l.apply(&x)?, &u);
        let rhs = vecmath::dot(&x, &l.adjoint(&u)?);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0));
    }
    Ok(worst)
}

/// Adjoint identities for the imaging operators at 32x32, plus any extra
/// operators supplied by the caller (used by the corrupted-adjoint
/// fixture).
pub fn adjoint_suite(extra: &[LinearMap]) -> Result<Report> {
    let mut report = Report::default();
    let (w, h) = (32usize, 32usize);
    let ops = vec![
        tv_map(w, h)?,
        d2_map(w, h)?,
        blur_map(&Psf::motion(7)?, w, h)?,
        wavelet_map(2, w, h)?,
    ];
    for l in ops.iter().chain(extra) {
        report.push(
            format!("adjoint identity: {}", l.tag()),
            adjoint_defect(l, 100, 0xADu64)?,
            1e-10,
        );
    }
    Ok(report)
}

type ConjProx = Box<dyn Fn(&[f64], f64) -> Vec<f64>>;
type DomainProj = Box<dyn Fn(&[f64]) -> Vec<f64>>;

/// Firm nonexpansiveness, the subgradient characterization of the prox,
/// and the Moreau identity over the prox catalog, the latter against
/// independent closed-form conjugate proxes.
pub fn prox_suite() -> Result<Report> {
    let mut report = Report::default();
    let dim = 6usize;
    // each entry pairs a catalog prox with a hand-derived prox of its
    // Fenchel conjugate ((u, t) -> prox_{t f*}(u)) and a projection of
    // arbitrary points onto dom f (so function values stay finite in the
    // subgradient check)
    let catalog: Vec<(&str, ProxFunction, ConjProx, DomainProj)> = vec![
        (
            "box [0,1]",
            ProxFunction::box_indicator(dim, 0.0, 1.0)?,
            // conjugate of the indicator is the support function
            // u -> max(0, u); its prox shrinks positive parts by t
            Box::new(|u: &[f64], t: f64| {
                u.iter()
                    .map(|&v| {
                        if v > t {
                            v - t
                        } else if v < 0.0 {
                            v
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }),
            Box::new(|u: &[f64]| u.iter().map(|&v| v.clamp(0.0, 1.0)).collect()),
        ),
        (
            "l1 (w = 0.7)",
            ProxFunction::l1(dim, 0.7),
            // conjugate is the indicator of the sup-norm ball of radius w
            Box::new(|u: &[f64], _t: f64| u.iter().map(|&v| v.clamp(-0.7, 0.7)).collect()),
            Box::new(|u: &[f64]| u.to_vec()),
        ),
        (
            "group l1,2 (w = 1.3)",
            ProxFunction::group_l12(3, 2, 1.3),
            // conjugate is the indicator of per-group Euclidean balls
            Box::new(|u: &[f64], _t: f64| {
                let (rows, cols, w) = (3usize, 2usize, 1.3f64);
                let mut out = u.to_vec();
                for i in 0..rows {
                    let norm: f64 = (0..cols)
                        .map(|j| u[i + j * rows].powi(2))
                        .sum::<f64>()
                        .sqrt();
                    if norm > w {
                        for j in 0..cols {
                            out[i + j * rows] *= w / norm;
                        }
                    }
                }
                out
            }),
            Box::new(|u: &[f64]| u.to_vec()),
        ),
        (
            "zero indicator",
            ProxFunction::zero_indicator(dim),
            // conjugate of the indicator of {0} is the zero function
            Box::new(|u: &[f64], _t: f64| u.to_vec()),
            Box::new(|u: &[f64]| vec![0.0; u.len()]),
        ),
        (
            "zero function",
            ProxFunction::zero(dim),
            // conjugate of 0 is the indicator of {0}
            Box::new(|u: &[f64], _t: f64| vec![0.0; u.len()]),
            Box::new(|u: &[f64]| u.to_vec()),
        ),
    ];
    for (name, phi, conj, dom) in &catalog {
        let mut rng = ChaCha8Rng::seed_from_u64(0xF1);
        let mut firm = 0.0f64;
        let mut subgrad = 0.0f64;
        let mut moreau = 0.0f64;
        for _ in 0..100 {
            let x = random_vec(&mut rng, dim);
            let y = random_vec(&mut rng, dim);
            let gamma = rng.gen_range(0.1..3.0);
            let px = phi.prox(&x, gamma);
            let py = phi.prox(&y, gamma);
            // firm nonexpansiveness: ||px - py||^2 <= <px - py, x - y>
            let d = vecmath::sub(&px, &py);
            let defect = vecmath::dot(&d, &d) - vecmath::dot(&d, &vecmath::sub(&x, &y));
            firm = firm.max(defect);
            // subgradient characterization: (x - px)/γ lies in the
            // subdifferential at px, i.e. for every y in the domain
            // f(y) >= f(px) + <(x - px)/γ, y - px>
            let yd = dom(&y);
            let (fp, fy) = (
                phi.value(&px).expect("catalog entries carry values"),
                phi.value(&yd).expect("catalog entries carry values"),
            );
            let slope = vecmath::dot(&vecmath::sub(&x, &px), &vecmath::sub(&yd, &px)) / gamma;
            subgrad = subgrad.max(fp + slope - fy);
            // Moreau: prox_{γf}(x) + γ prox_{γ⁻¹f*}(x/γ) = x
            let dual = conj(&vecmath::scale(&x, 1.0 / gamma), 1.0 / gamma);
            let recon = vecmath::add(&px, &vecmath::scale(&dual, gamma));
            moreau = moreau.max(vecmath::dist(&recon, &x));
        }
        report.push(format!("firm nonexpansiveness: {name}"), firm, 1e-9);
        report.push(
            format!("subgradient characterization: {name}"),
            subgrad,
            1e-9,
        );
        report.push(format!("Moreau identity: {name}"), moreau, 1e-12);
    }
    Ok(report)
}

/// Lasso run against the componentwise soft-threshold solution.
pub fn lasso_convergence() -> Result<Report> {
    let b = vec![3.0, -0.2, 1.0];
    let p = ParallelSumProblem {
        dim: 3,
        z: b.clone(),
        f: ProxFunction::zero(3),
        smooth: SmoothTerm::new(3, 1.0, |x| x.to_vec()),
        terms: vec![Term::new(
            ProxFunction::l1(3, 1.0),
            ProxFunction::zero_indicator(3),
            LinearMap::identity(3),
            LinearMap::identity(3),
        )?
        .with_norms(1.0, 1.0)],
    };
    let (sol, _) = p.solve_inclusion(
        &IterationConfig {
            max_iter: 2000,
            rtol: 0.0,
            ..Default::default()
        },
        5,
        None,
    )?;
    let expect = prox_l1(&b, 1.0);
    let mut report = Report::default();
    report.push(
        "lasso convergence to soft threshold",
        vecmath::norm_inf(&vecmath::sub(&sol.x, &expect)),
        1e-6,
    );
    report.push("lasso stationarity residual", sol.kkt_residual, 1e-5);
    Ok(report)
}

/// A coupled problem built around a known stationary point: the iteration
/// must leave it invariant for several admissible step sizes.
pub fn fixed_point_invariance() -> Result<Report> {
    // linear single-valued blocks: A = aI, C = cI, B = bI, coupling L;
    // pick x̄, set v̄ = B(Lx̄) and z = Ax̄ + Cx̄ + L*v̄
    let (a, b, c) = (0.8, 1.4, 0.6);
    let l = LinearMap::from_dense(2, 2, &[1.0, 0.5, -0.25, 2.0], "L");
    let x_bar = vec![0.3, -1.1];
    let lx = l.apply(&x_bar)?;
    let v_bar = vecmath::scale(&lx, b);
    let mut z = vecmath::scale(&x_bar, a + c);
    vecmath::axpy(&mut z, 1.0, &l.adjoint(&v_bar)?);

    let mut problem = CoupledProblem {
        primal_dims: vec![2],
        dual_dims: vec![2],
        resolvents: vec![ProxFunction::linear_resolvent(2, a)],
        smooth: vec![SmoothTerm::new(2, c, move |x| vecmath::scale(x, c))],
        duals: vec![ProxFunction::linear_resolvent(2, b)], // resolvent family of B
        coupling: vec![vec![Some(l)]],
        shifts: vec![z],
        lambda: 0.0,
    };
    problem.estimate_lambda(17)?;
    let beta = problem.beta()?;
    let eps = 1e-3;
    let hi = (1.0 - eps) / beta;
    let state = SolverState {
        x: vec![x_bar.clone()],
        v: vec![v_bar.clone()],
        n: 0,
        last_primal_change: f64::INFINITY,
        last_dual_change: f64::INFINITY,
    };
    let mut worst = 0.0f64;
    for k in 0..5 {
        let gamma = eps + (hi - eps) * k as f64 / 4.0;
        let next = step(&problem, &state, gamma, eps, None)?;
        worst = worst.max(vecmath::dist(&next.x[0], &x_bar));
        worst = worst.max(vecmath::dist(&next.v[0], &v_bar));
    }
    let mut report = Report::default();
    report.push("fixed-point invariance of the iteration", worst, 1e-12);
    Ok(report)
}

/// All suites concatenated.
pub fn run_all() -> Result<Report> {
    let mut report = Report::default();
    for part in [
        identity_suite()?,
        adjoint_suite(&[])?,
        prox_suite()?,
        lasso_convergence()?,
        fixed_point_invariance()?,
    ] {
        report.checks.extend(part.checks);
    }
    Ok(report)
}
