//! Proximity operators, resolvent families, and smooth terms.
//!
//! A [`ProxFunction`] stores the map `(x, gamma) -> prox_{gamma f}(x)`,
//! which doubles as the resolvent family `J_{gamma A}` of a maximally
//! monotone operator.  The catalog below covers everything the restoration
//! model needs: box indicator, (weighted) l1, row-wise l1/l2 norm, the {0}
//! indicator, and scaled variants.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linop::LinearMap;
use crate::vecmath;

type ProxFn = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A convex function represented by its prox evaluation and an optional
/// value evaluation (`+inf` encodes indicator infeasibility).
#[derive(Clone)]
pub struct ProxFunction {
    dim: usize,
    tag: String,
    prox: ProxFn,
    value: Option<ValueFn>,
}

impl std::fmt::Debug for ProxFunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProxFunction")
            .field("tag", &self.tag)
            .field("dim", &self.dim)
            .finish()
    }
}

/// Indicator membership slack used when evaluating indicator values at
/// solver iterates, which can sit a rounding error outside the set.
const INDICATOR_TOL: f64 = 1e-9;

impl ProxFunction {
    pub fn new<F>(dim: usize, tag: impl Into<String>, prox: F) -> Self
    where
        F: Fn(&[f64], f64) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            tag: tag.into(),
            prox: Arc::new(prox),
            value: None,
        }
    }

    pub fn with_value<V>(mut self, value: V) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.value = Some(Arc::new(value));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    /// `prox_{gamma f}(x)`, equivalently the resolvent `J_{gamma A}(x)`.
    pub fn prox(&self, x: &[f64], gamma: f64) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim, "{}: prox dim", self.tag);
        (self.prox)(x, gamma)
    }

    pub fn value(&self, x: &[f64]) -> Option<f64> {
        self.value.as_ref().map(|v| v(x))
    }

    pub fn has_value(&self) -> bool {
        self.value.is_some()
    }

    /// f = 0: the prox is the identity (resolvent of the zero operator).
    pub fn zero(dim: usize) -> Self {
        Self::new(dim, "zero", |x, _| x.to_vec()).with_value(|_| 0.0)
    }

    /// Indicator of the hypercube `[lo, hi]^dim`.
    pub fn box_indicator(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if lo > hi {
            return Err(Error::InvalidArgument(format!(
                "box indicator: lo {lo} > hi {hi}"
            )));
        }
        Ok(Self::new(dim, format!("box[{lo},{hi}]"), move |x, _| {
            prox_box(x, lo, hi).expect("bounds validated")
        })
        .with_value(move |x| {
            let inside = x
                .iter()
                .all(|&v| v >= lo - INDICATOR_TOL && v <= hi + INDICATOR_TOL);
            if inside {
                0.0
            } else {
                f64::INFINITY
            }
        }))
    }

    /// `weight * ||.||_1`.
    pub fn l1(dim: usize, weight: f64) -> Self {
        Self::new(dim, format!("{weight}*l1"), move |x, gamma| {
            prox_l1(x, gamma * weight)
        })
        .with_value(move |x| weight * x.iter().map(|v| v.abs()).sum::<f64>())
    }

    /// `weight * ||.||_{1,2}` over an `rows x cols` matrix stored as `cols`
    /// stacked length-`rows` blocks (row `i` sits at indices `i + j*rows`).
    pub fn group_l12(rows: usize, cols: usize, weight: f64) -> Self {
        Self::new(rows * cols, format!("{weight}*l12"), move |x, gamma| {
            prox_group_l12(x, rows, gamma * weight)
        })
        .with_value(move |x| {
            let mut total = 0.0;
            for i in 0..rows {
                let mut s = 0.0;
                for j in 0..cols {
                    let v = x[i + j * rows];
                    s += v * v;
                }
                total += s.sqrt();
            }
            weight * total
        })
    }

    /// Indicator of `{0}`.
    pub fn zero_indicator(dim: usize) -> Self {
        Self::new(dim, "ind{0}", |x, gamma| prox_zero_indicator(x, gamma)).with_value(|x| {
            if vecmath::norm_inf(x) <= INDICATOR_TOL {
                0.0
            } else {
                f64::INFINITY
            }
        })
    }

    /// Indicator of the singleton `{c}`: the resolvent is the constant map.
    pub fn constant_resolvent(c: Vec<f64>) -> Self {
        let dim = c.len();
        Self::new(dim, "ind{c}", move |_, _| c.clone())
    }

    /// Resolvent family of the linear operator `A = a*Id` (`a >= 0`):
    /// `J_{gamma A}(x) = x / (1 + gamma a)`.
    pub fn linear_resolvent(dim: usize, a: f64) -> Self {
        Self::new(dim, format!("linear({a})"), move |x, gamma| {
            vecmath::scale(x, 1.0 / (1.0 + gamma * a))
        })
    }

    /// Resolvent family of a dense symmetric PSD linear operator `A`:
    /// `J_{gamma A}(x) = (I + gamma A)^{-1} x`.  Test-oracle helper.
    pub fn dense_linear_resolvent(matrix: nalgebra::DMatrix<f64>) -> Self {
        let dim = matrix.nrows();
        assert_eq!(matrix.ncols(), dim);
        Self::new(dim, "dense-linear", move |x, gamma| {
            let m = nalgebra::DMatrix::identity(dim, dim) + &matrix * gamma;
            let rhs = nalgebra::DVector::from_column_slice(x);
            let sol = m
                .lu()
                .solve(&rhs)
                .expect("I + gamma*A invertible for PSD A");
            sol.as_slice().to_vec()
        })
    }

    /// Prox of `x -> f(rho x)` implemented via the scaling identity
    /// `prox(x, gamma) = rho^{-1} prox_{rho^2 f}(rho x, gamma)`.
    pub fn scaled(phi: &ProxFunction, rho: f64) -> Result<Self> {
        if rho <= 0.0 {
            return Err(Error::InvalidArgument(
                "prox scaling: rho must be > 0".into(),
            ));
        }
        let inner = phi.clone();
        let value = phi.value.clone();
        Ok(Self {
            dim: phi.dim,
            tag: format!("{}(ρ={rho}·)", phi.tag),
            prox: Arc::new(move |x, gamma| prox_scaled(&inner, rho, x, gamma)),
            value: value.map(|v| {
                let v: ValueFn = Arc::new(move |x: &[f64]| v(&vecmath::scale(x, rho)));
                v
            }),
        })
    }
}

/// Componentwise projection onto `[lo, hi]` (prox of the box indicator,
/// independent of gamma).
pub fn prox_box(x: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if lo > hi {
        return Err(Error::InvalidArgument(format!(
            "prox_box: lo {lo} > hi {hi}"
        )));
    }
    Ok(x.iter().map(|&v| v.clamp(lo, hi)).collect())
}

/// Componentwise soft-thresholding at level `gamma`.
pub fn prox_l1(x: &[f64], gamma: f64) -> Vec<f64> {
    x.iter()
        .map(|&v| v.signum() * (v.abs() - gamma).max(0.0))
        .collect()
}

/// Block soft-thresholding of each row of an `rows x (len/rows)` matrix
/// stored column-block-wise: row `i` is `(x[i], x[i+rows], ...)`.
/// Rows with norm `<= gamma` collapse to zero.
pub fn prox_group_l12(x: &[f64], rows: usize, gamma: f64) -> Vec<f64> {
    let cols = x.len() / rows;
    debug_assert_eq!(rows * cols, x.len());
    let mut out = vec![0.0; x.len()];
    for i in 0..rows {
        let mut s = 0.0;
        for j in 0..cols {
            let v = x[i + j * rows];
            s += v * v;
        }
        let n = s.sqrt();
        if n > gamma {
            let f = 1.0 - gamma / n;
            for j in 0..cols {
                out[i + j * rows] = f * x[i + j * rows];
            }
        }
    }
    out
}

/// Projection onto `{0}`.
pub fn prox_zero_indicator(x: &[f64], _gamma: f64) -> Vec<f64> {
    vec![0.0; x.len()]
}

/// Prox of `x -> phi(rho x)`: `rho^{-1} prox_{gamma rho^2 phi}(rho x)`.
pub fn prox_scaled(phi: &ProxFunction, rho: f64, x: &[f64], gamma: f64) -> Vec<f64> {
    let p = phi.prox(&vecmath::scale(x, rho), gamma * rho * rho);
    vecmath::scale(&p, 1.0 / rho)
}

/// The dual prox step `s - gamma * prox_{g/gamma}(s/gamma)` appearing in the
/// iterations; by the Moreau decomposition this equals `prox_{gamma g*}(s)`.
pub fn dual_prox_step(s: &[f64], gamma: f64, g: &ProxFunction) -> Vec<f64> {
    let inner = g.prox(&vecmath::scale(s, 1.0 / gamma), 1.0 / gamma);
    let mut out = s.to_vec();
    vecmath::axpy(&mut out, -gamma, &inner);
    out
}

/// Gradient of `x -> 0.5 ||Tx - y||^2`, namely `T*(Tx - y)`.
pub fn quadratic_data_gradient(t: &LinearMap, y: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let mut r = t.apply(x)?;
    if r.len() != y.len() {
        return Err(Error::DimensionMismatch {
            tag: t.tag().to_string(),
            expected: r.len(),
            got: y.len(),
        });
    }
    vecmath::axpy(&mut r, -1.0, y);
    t.adjoint(&r)
}

type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// A differentiable convex term with Lipschitz gradient.
#[derive(Clone)]
pub struct SmoothTerm {
    dim: usize,
    gradient: GradFn,
    /// Lipschitz constant of the gradient.
    pub lipschitz: f64,
    value: Option<ValueFn>,
}

impl std::fmt::Debug for SmoothTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SmoothTerm")
            .field("dim", &self.dim)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl SmoothTerm {
    pub fn new<G>(dim: usize, lipschitz: f64, gradient: G) -> Self
    where
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        Self {
            dim,
            gradient: Arc::new(gradient),
            lipschitz,
            value: None,
        }
    }

    pub fn with_value<V>(mut self, value: V) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        self.value = Some(Arc::new(value));
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim);
        (self.gradient)(x)
    }

    pub fn value(&self, x: &[f64]) -> Option<f64> {
        self.value.as_ref().map(|v| v(x))
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, 0.0, move |_| vec![0.0; dim]).with_value(|_| 0.0)
    }

    pub fn is_zero(&self) -> bool {
        self.lipschitz == 0.0
    }

    /// `0.5 ||Tx - y||^2` with `lipschitz = t_norm_upper^2`.
    pub fn quadratic_data(t: LinearMap, y: Vec<f64>, t_norm_upper: f64) -> Self {
        assert_eq!(t.out_dim(), y.len());
        let dim = t.in_dim();
        let tv = t.clone();
        let yv = y.clone();
        Self::new(dim, t_norm_upper * t_norm_upper, move |x| {
            quadratic_data_gradient(&t, &y, x).expect("dims validated at construction")
        })
        .with_value(move |x| {
            let r = vecmath::sub(&tv.apply(x).expect("dims validated"), &yv);
            0.5 * vecmath::dot(&r, &r)
        })
    }
}
