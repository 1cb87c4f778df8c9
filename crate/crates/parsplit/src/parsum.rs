//! Structured monotone inclusions with parallel-sum regularization terms,
//! reduced onto the generic coupled engine.
//!
//! The model couples one variable `x` with `r` terms, each built from a
//! set-valued `B_k` seen through `L_k` and a set-valued `D_k` seen through
//! `M_k`, combined by a parallel sum:
//!
//! ```text
//! find x with  z ∈ A x + Σ_k ((L_k* ∘ B_k ∘ L_k) □ (M_k* ∘ D_k ∘ M_k)) x + C x
//! ```
//!
//! The reduction introduces one auxiliary primal block `y_k` (same space as
//! `x`) per term and two dual blocks per term, with the coupling grid
//!
//! ```text
//! row k     : [ L_k, 0, …, -L_k, …, 0 ]      (dual space of B_k)
//! row k + r : [ 0,   0, …,  M_k, …, 0 ]      (dual space of D_k)
//! ```
//!
//! so that a stationary point yields witnesses `v_k`, `w_k` with
//! `L_k* v_k = M_k* w_k`, `v_k ∈ B_k(L_k x - L_k y_k)` and
//! `w_k ∈ D_k(M_k y_k)` — the certificate that the parallel sum has been
//! split exactly.

use crate::coupled::{
    solve, CoupledProblem, ErrorInjector, IterationConfig, SolveStats, SolverState,
};
use crate::error::{Error, Result};
use crate::linop::{estimate_norm_default, LinearMap};
use crate::prox::{ProxFunction, SmoothTerm};
use crate::vecmath;

/// One parallel-sum term `(L* ∘ B ∘ L) □ (M* ∘ D ∘ M)`.
pub struct Term {
    /// Resolvent family of `B` (on the output space of `l`).
    pub g: ProxFunction,
    /// Resolvent family of `D` (on the output space of `m`).
    pub h: ProxFunction,
    pub l: LinearMap,
    pub m: LinearMap,
    /// Optional certified upper bound on the operator norm of `l`,
    /// bypassing power iteration.
    pub l_norm: Option<f64>,
    /// Same for `m`.
    pub m_norm: Option<f64>,
}

impl Term {
    pub fn new(g: ProxFunction, h: ProxFunction, l: LinearMap, m: LinearMap) -> Result<Self> {
        if l.in_dim() != m.in_dim() {
            return Err(Error::InvalidArgument(format!(
                "term: L maps from dim {}, M from dim {}",
                l.in_dim(),
                m.in_dim()
            )));
        }
        if g.dim() != l.out_dim() || h.dim() != m.out_dim() {
            return Err(Error::InvalidArgument(format!(
                "term: B acts on dim {} but L maps into {}; D acts on {} but M maps into {}",
                g.dim(),
                l.out_dim(),
                h.dim(),
                m.out_dim()
            )));
        }
        Ok(Self {
            g,
            h,
            l,
            m,
            l_norm: None,
            m_norm: None,
        })
    }

    pub fn with_norms(mut self, l_norm: f64, m_norm: f64) -> Self {
        self.l_norm = Some(l_norm);
        self.m_norm = Some(m_norm);
        self
    }
}

/// The structured inclusion data: `A` (via its resolvent family), a smooth
/// `C`, a shift `z`, and the parallel-sum terms.
pub struct ParallelSumProblem {
    pub dim: usize,
    pub z: Vec<f64>,
    /// Resolvent family of `A`.
    pub f: ProxFunction,
    /// Lipschitz monotone `C` (zero allowed when terms are present).
    pub smooth: SmoothTerm,
    pub terms: Vec<Term>,
}

/// Per-term operator-norm upper bounds `(‖L_k‖, ‖M_k‖)`.
pub type NormTable = Vec<(f64, f64)>;

/// Solution with the dual witnesses produced by the reduction.
#[derive(Debug, Clone)]
pub struct PrimalDualSolution {
    pub x: Vec<f64>,
    /// Auxiliary splitting points `y_k` (one per term, same space as `x`).
    pub y: Vec<Vec<f64>>,
    /// Dual witnesses `v_k ∈ B_k(L_k x - L_k y_k)`.
    pub v: Vec<Vec<f64>>,
    /// Dual witnesses `w_k ∈ D_k(M_k y_k)`.
    pub w: Vec<Vec<f64>>,
    /// Max-norm over the stationarity conditions, measured through
    /// resolvent distances at unit step.
    pub kkt_residual: f64,
}

impl ParallelSumProblem {
    pub fn validate(&self) -> Result<()> {
        if self.z.len() != self.dim || self.f.dim() != self.dim || self.smooth.dim() != self.dim {
            return Err(Error::InvalidArgument(
                "parallel-sum problem: base block dims".into(),
            ));
        }
        for (k, t) in self.terms.iter().enumerate() {
            if t.l.in_dim() != self.dim {
                return Err(Error::InvalidArgument(format!(
                    "parallel-sum problem: term {k} maps from dim {}",
                    t.l.in_dim()
                )));
            }
        }
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.terms.len()
    }

    /// Upper bounds on each `‖L_k‖` and `‖M_k‖`, from the overrides when
    /// present and from seeded power iteration otherwise.
    pub fn norm_table(&self, seed: u64) -> Result<NormTable> {
        let mut table = Vec::with_capacity(self.terms.len());
        for (k, t) in self.terms.iter().enumerate() {
            let ln = match t.l_norm {
                Some(n) => n,
                None => estimate_norm_default(&t.l, seed.wrapping_add(2 * k as u64))?.upper_bound,
            };
            let mn = match t.m_norm {
                Some(n) => n,
                None => {
                    estimate_norm_default(&t.m, seed.wrapping_add(2 * k as u64 + 1))?.upper_bound
                }
            };
            table.push((ln, mn));
        }
        Ok(table)
    }

    /// Squared-norm bound of the stacked coupling operator of the
    /// reduction: `Σ_k ‖L_k‖² + max_k (‖L_k‖² + ‖M_k‖²)`.
    pub fn lambda_from(table: &NormTable) -> f64 {
        let sum: f64 = table.iter().map(|(l, _)| l * l).sum();
        let max = table.iter().map(|(l, m)| l * l + m * m).fold(0.0, f64::max);
        sum + max
    }

    /// `β = μ + sqrt(Σ ‖L_k‖² + max (‖L_k‖² + ‖M_k‖²))`; the admissible
    /// step interval is `[ε, (1-ε)/β]`.
    pub fn beta_bound(&self, seed: u64) -> Result<f64> {
        let lambda = Self::lambda_from(&self.norm_table(seed)?);
        let beta = self.smooth.lipschitz + lambda.sqrt();
        if beta <= 0.0 {
            return Err(Error::Degenerate(
                "beta = 0: no coupling terms and no smooth part".into(),
            ));
        }
        Ok(beta)
    }

    /// Builds the `(r+1)`-primal / `2r`-dual coupled problem.  The engine's
    /// `lambda` is set from the same norm table as [`Self::beta_bound`], so
    /// both agree on the step-size interval.
    pub fn reduce(&self, seed: u64) -> Result<CoupledProblem> {
        self.validate()?;
        let r = self.r();
        let n = self.dim;
        let table = self.norm_table(seed)?;

        let mut primal_dims = vec![n];
        let mut resolvents = vec![self.f.clone()];
        let mut smooth = vec![self.smooth.clone()];
        let mut shifts = vec![self.z.clone()];
        for _ in 0..r {
            primal_dims.push(n);
            resolvents.push(ProxFunction::zero(n));
            smooth.push(SmoothTerm::zero(n));
            shifts.push(vec![0.0; n]);
        }

        let mut dual_dims = Vec::with_capacity(2 * r);
        let mut duals = Vec::with_capacity(2 * r);
        for t in &self.terms {
            dual_dims.push(t.l.out_dim());
            duals.push(t.g.clone());
        }
        for t in &self.terms {
            dual_dims.push(t.m.out_dim());
            duals.push(t.h.clone());
        }

        let mut coupling: Vec<Vec<Option<LinearMap>>> = Vec::with_capacity(2 * r);
        for (k, t) in self.terms.iter().enumerate() {
            let mut row: Vec<Option<LinearMap>> = (0..=r).map(|_| None).collect();
            row[0] = Some(t.l.clone());
            row[k + 1] = Some(t.l.negated());
            coupling.push(row);
        }
        for (k, t) in self.terms.iter().enumerate() {
            let mut row: Vec<Option<LinearMap>> = (0..=r).map(|_| None).collect();
            row[k + 1] = Some(t.m.clone());
            coupling.push(row);
        }

        Ok(CoupledProblem {
            primal_dims,
            dual_dims,
            resolvents,
            smooth,
            duals,
            coupling,
            shifts,
            lambda: Self::lambda_from(&table),
        })
    }

    /// Max residual over the stationarity system, each condition measured
    /// as a resolvent distance at unit step:
    /// `z - Σ L_k* v_k - C x ∈ A x`, and per term `L_k* v_k = M_k* w_k`,
    /// `v_k ∈ B_k(L_k x - L_k y_k)`, `w_k ∈ D_k(M_k y_k)`.
    pub fn kkt_residual(&self, sol: &PrimalDualSolution) -> Result<f64> {
        let mut u = self.z.clone();
        for (t, v) in self.terms.iter().zip(&sol.v) {
            vecmath::axpy(&mut u, -1.0, &t.l.adjoint(v)?);
        }
        if !self.smooth.is_zero() {
            vecmath::axpy(&mut u, -1.0, &self.smooth.gradient(&sol.x));
        }
        // u ∈ A x  ⟺  x = J_A(x + u)
        let mut arg = sol.x.clone();
        vecmath::axpy(&mut arg, 1.0, &u);
        let mut worst = vecmath::dist(&sol.x, &self.f.prox(&arg, 1.0));

        for (k, t) in self.terms.iter().enumerate() {
            let lv = t.l.adjoint(&sol.v[k])?;
            let mw = t.m.adjoint(&sol.w[k])?;
            worst = worst.max(vecmath::dist(&lv, &mw));

            let mut xy = sol.x.clone();
            vecmath::axpy(&mut xy, -1.0, &sol.y[k]);
            let t_b = t.l.apply(&xy)?;
            let mut arg = t_b.clone();
            vecmath::axpy(&mut arg, 1.0, &sol.v[k]);
            worst = worst.max(vecmath::dist(&t_b, &t.g.prox(&arg, 1.0)));

            let t_d = t.m.apply(&sol.y[k])?;
            let mut arg = t_d.clone();
            vecmath::axpy(&mut arg, 1.0, &sol.w[k]);
            worst = worst.max(vecmath::dist(&t_d, &t.h.prox(&arg, 1.0)));
        }
        Ok(worst)
    }

    /// Objective value of the variational interpretation
    /// `f(x) - ⟨z, x⟩ + ℓ(x) + Σ_k [ g_k(L_k(x - y_k)) + h_k(M_k y_k) ]`,
    /// available when every function carries a value closure.
    pub fn objective(&self, x: &[f64], y: &[Vec<f64>]) -> Option<f64> {
        let mut total = self.f.value(x)? - vecmath::dot(&self.z, x);
        if let Some(v) = self.smooth.value(x) {
            total += v;
        } else if !self.smooth.is_zero() {
            return None;
        }
        for (k, t) in self.terms.iter().enumerate() {
            let mut xy = x.to_vec();
            vecmath::axpy(&mut xy, -1.0, &y[k]);
            total += t.g.value(&t.l.apply(&xy).ok()?)?;
            total += t.h.value(&t.m.apply(&y[k]).ok()?)?;
        }
        Some(total)
    }

    fn extract(&self, state: &SolverState) -> PrimalDualSolution {
        let r = self.r();
        PrimalDualSolution {
            x: state.x[0].clone(),
            y: state.x[1..=r].to_vec(),
            v: state.v[..r].to_vec(),
            w: state.v[r..].to_vec(),
            kkt_residual: f64::NAN,
        }
    }

    /// Reduces, iterates from zero, and returns the solution with its
    /// stationarity residual.
    pub fn solve_inclusion(
        &self,
        config: &IterationConfig,
        seed: u64,
        injector: Option<&mut ErrorInjector<'_>>,
    ) -> Result<(PrimalDualSolution, SolveStats)> {
        self.solve_inclusion_from(config, seed, injector, None)
    }

    /// [`Self::solve_inclusion`] with an optional warm start: when given,
    /// `x0` seeds the main primal block and every auxiliary block, which
    /// cuts iterations substantially when a good guess (e.g. the observed
    /// image in a restoration run) is available. Duals start at zero.
    pub fn solve_inclusion_from(
        &self,
        config: &IterationConfig,
        seed: u64,
        injector: Option<&mut ErrorInjector<'_>>,
        x0: Option<&[f64]>,
    ) -> Result<(PrimalDualSolution, SolveStats)> {
        let coupled = self.reduce(seed)?;
        let mut start = SolverState::zeros(&coupled);
        if let Some(x0) = x0 {
            if x0.len() != self.dim {
                return Err(Error::DimensionMismatch {
                    tag: "warm start".into(),
                    expected: self.dim,
                    got: x0.len(),
                });
            }
            for block in start.x.iter_mut() {
                block.copy_from_slice(x0);
            }
        }
        let objective = |state: &SolverState| -> f64 {
            let sol = self.extract(state);
            self.objective(&sol.x, &sol.y).unwrap_or(f64::NAN)
        };
        let obj_ref: Option<&dyn Fn(&SolverState) -> f64> = if config.record_trace {
            Some(&objective)
        } else {
            None
        };
        let (state, stats) = solve(&coupled, config, start, injector, obj_ref)?;
        let mut sol = self.extract(&state);
        sol.kkt_residual = self.kkt_residual(&sol)?;
        Ok((sol, stats))
    }

    /// [`Self::solve_inclusion`] for minimization problems: returns the
    /// objective value at the solution alongside.
    pub fn solve_min(
        &self,
        config: &IterationConfig,
        seed: u64,
    ) -> Result<(PrimalDualSolution, Option<f64>, SolveStats)> {
        let (sol, stats) = self.solve_inclusion(config, seed, None)?;
        let obj = self.objective(&sol.x, &sol.y);
        Ok((sol, obj, stats))
    }
}
