//! Linear operators with explicit adjoints, plus operator-norm estimation.
//!
//! Every operator used by the solvers (finite differences, blur, wavelet
//! frames, coupling blocks) is a [`LinearMap`]: a pair of pure closures for
//! the forward and adjoint actions between fixed-dimensional spaces.
//! Composition and stacking are done by wrapper maps; matrices are only
//! materialized in test oracles and in the monotone-calculus module.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::vecmath;

type VecFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A bounded linear operator between finite-dimensional Euclidean spaces.
///
/// Immutable after construction; the forward and adjoint closures must be
/// pure, and the adjoint must satisfy `<Lx, u> = <x, L*u>`.
#[derive(Clone)]
pub struct LinearMap {
    in_dim: usize,
    out_dim: usize,
    tag: String,
    fwd: VecFn,
    adj: VecFn,
}

impl std::fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearMap")
            .field("tag", &self.tag)
            .field("in_dim", &self.in_dim)
            .field("out_dim", &self.out_dim)
            .finish()
    }
}

impl LinearMap {
    pub fn new<F, G>(in_dim: usize, out_dim: usize, tag: impl Into<String>, fwd: F, adj: G) -> Self
    where
        F: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            in_dim,
            out_dim,
            tag: tag.into(),
            fwd: Arc::new(fwd),
            adj: Arc::new(adj),
        }
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// Forward action `Lx`.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.in_dim {
            return Err(Error::DimensionMismatch {
                tag: self.tag.clone(),
                expected: self.in_dim,
                got: x.len(),
            });
        }
        Ok((self.fwd)(x))
    }

    /// Adjoint action `L*u`.
    pub fn adjoint(&self, u: &[f64]) -> Result<Vec<f64>> {
        if u.len() != self.out_dim {
            return Err(Error::DimensionMismatch {
                tag: self.tag.clone(),
                expected: self.out_dim,
                got: u.len(),
            });
        }
        Ok((self.adj)(u))
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, dim, "identity", |x| x.to_vec(), |u| u.to_vec())
    }

    pub fn zero(in_dim: usize, out_dim: usize) -> Self {
        Self::new(
            in_dim,
            out_dim,
            "zero",
            move |_| vec![0.0; out_dim],
            move |_| vec![0.0; in_dim],
        )
    }

    /// `alpha * Id`.
    pub fn scaling(dim: usize, alpha: f64) -> Self {
        Self::new(
            dim,
            dim,
            format!("scaling({alpha})"),
            move |x| vecmath::scale(x, alpha),
            move |u| vecmath::scale(u, alpha),
        )
    }

    /// Dense matrix wrapper (row-major `rows x cols`), used by oracles and
    /// small test instances.
    pub fn from_dense(rows: usize, cols: usize, entries: &[f64], tag: impl Into<String>) -> Self {
        assert_eq!(entries.len(), rows * cols);
        let a: Arc<[f64]> = entries.into();
        let at = a.clone();
        Self::new(
            cols,
            rows,
            tag,
            move |x| {
                (0..rows)
                    .map(|i| vecmath::dot(&a[i * cols..(i + 1) * cols], x))
                    .collect()
            },
            move |u| {
                let mut out = vec![0.0; cols];
                for i in 0..rows {
                    vecmath::axpy(&mut out, u[i], &at[i * cols..(i + 1) * cols]);
                }
                out
            },
        )
    }

    /// `self ∘ inner`: applies `inner` first.
    pub fn compose(&self, inner: &LinearMap) -> Self {
        assert_eq!(self.in_dim, inner.out_dim, "composition dims");
        let f1 = inner.fwd.clone();
        let f2 = self.fwd.clone();
        let a1 = inner.adj.clone();
        let a2 = self.adj.clone();
        Self {
            in_dim: inner.in_dim,
            out_dim: self.out_dim,
            tag: format!("{}∘{}", self.tag, inner.tag),
            fwd: Arc::new(move |x| f2(&f1(x))),
            adj: Arc::new(move |u| a1(&a2(u))),
        }
    }

    /// Row stack `(L1; L2; ...)`: forward concatenates outputs, adjoint sums
    /// the blockwise adjoints.
    pub fn stack(parts: Vec<LinearMap>) -> Self {
        assert!(!parts.is_empty());
        let in_dim = parts[0].in_dim;
        assert!(parts.iter().all(|p| p.in_dim == in_dim), "stack dims");
        let out_dim: usize = parts.iter().map(|p| p.out_dim).sum();
        let tag = format!(
            "stack({})",
            parts
                .iter()
                .map(|p| p.tag.as_str())
                .collect::<Vec<_>>()
                .join(";")
        );
        let parts = Arc::new(parts);
        let parts2 = parts.clone();
        Self {
            in_dim,
            out_dim,
            tag,
            fwd: Arc::new(move |x| {
                let mut out = Vec::with_capacity(out_dim);
                for p in parts.iter() {
                    out.extend((p.fwd)(x));
                }
                out
            }),
            adj: Arc::new(move |u| {
                let mut out = vec![0.0; in_dim];
                let mut off = 0;
                for p in parts2.iter() {
                    let block = (p.adj)(&u[off..off + p.out_dim]);
                    vecmath::axpy(&mut out, 1.0, &block);
                    off += p.out_dim;
                }
                out
            }),
        }
    }

    /// `alpha * L`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let f = self.fwd.clone();
        let a = self.adj.clone();
        Self {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            tag: format!("{}*{}", alpha, self.tag),
            fwd: Arc::new(move |x| vecmath::scale(&f(x), alpha)),
            adj: Arc::new(move |u| vecmath::scale(&a(u), alpha)),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }
}

/// Outcome of a spectral-norm estimation run.
#[derive(Debug, Clone, Copy)]
pub struct NormEstimate {
    /// Power-iteration estimate of `‖L‖`.
    pub value: f64,
    /// Inflated bound used wherever the step-size condition needs a
    /// certified `‖L‖`; always `>= value`.
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Safety inflation applied to the raw power-iteration value.
const NORM_INFLATION: f64 = 1.01;

/// Estimates `‖L‖` by power iteration on `L* ∘ L` from a seeded random
/// start.  `upper_bound` is `value` inflated by 1% so the solvers can use it
/// in the step-size condition despite estimation error.
pub fn estimate_norm(l: &LinearMap, tol: f64, max_iter: usize, seed: u64) -> Result<NormEstimate> {
    if l.in_dim == 0 {
        return Err(Error::InvalidArgument("estimate_norm: in_dim = 0".into()));
    }
    if tol <= 0.0 || max_iter < 1 {
        return Err(Error::InvalidArgument(
            "estimate_norm: need tol > 0 and max_iter >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x: Vec<f64> = (0..l.in_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n0 = vecmath::norm(&x);
    if n0 == 0.0 {
        x[0] = 1.0;
    } else {
        x.iter_mut().for_each(|v| *v /= n0);
    }

    let mut lambda = 0.0_f64;
    let mut converged = false;
    let mut iterations = 0;
    for it in 1..=max_iter {
        iterations = it;
        let y = l.adjoint(&l.apply(&x)?)?;
        let lambda_new = vecmath::dot(&x, &y); // Rayleigh quotient, x unit
        let ynorm = vecmath::norm(&y);
        if ynorm == 0.0 {
            // y in the kernel of L*L: for a zero map this is exact
            lambda = lambda_new.max(0.0);
            converged = true;
            break;
        }
        let rel = (lambda_new - lambda).abs() / lambda_new.abs().max(1e-300);
        lambda = lambda_new;
        x = vecmath::scale(&y, 1.0 / ynorm);
        if it > 1 && rel < tol {
            converged = true;
            break;
        }
    }
    let value = lambda.max(0.0).sqrt();
    Ok(NormEstimate {
        value,
        upper_bound: value * NORM_INFLATION,
        iterations,
        converged,
    })
}

/// Default estimation parameters used by the problem builders.
pub fn estimate_norm_default(l: &LinearMap, seed: u64) -> Result<NormEstimate> {
    estimate_norm(l, 1e-6, 1000, seed)
}
