//! JSON problem documents: a small registry of built-in proximity
//! operators and linear maps, assembled into a [`ParallelSumProblem`].
//! The format is documented in `docs/problem-schema.md`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{blur_map, d2_map, tv_map, wavelet::wavelet_map, Psf};
use crate::linop::{estimate_norm_default, LinearMap};
use crate::parsum::{ParallelSumProblem, Term};
use crate::prox::{ProxFunction, SmoothTerm};

/// Top-level problem document.  `dim = width * height`; operators that
/// need a grid take their geometry from here.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemDoc {
    pub width: usize,
    pub height: usize,
    /// Primal shift; defaults to zero.
    #[serde(default)]
    pub z: Option<Vec<f64>>,
    /// The un-composed term `A` (prox registry entry).
    pub f: ProxSpec,
    /// Optional smooth data-fit term.
    #[serde(default)]
    pub smooth: Option<SmoothSpec>,
    #[serde(default)]
    pub terms: Vec<TermSpec>,
    /// Seed for operator-norm estimation during assembly.
    #[serde(default)]
    pub seed: u64,
}

/// One parallel-sum term: `(g ∘ L) □ (h ∘ M)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermSpec {
    pub g: ProxSpec,
    pub h: ProxSpec,
    pub l: OpSpec,
    pub m: OpSpec,
}

/// Registry of built-in proximity operators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProxSpec {
    /// `f = 0` (prox is the identity).
    Zero,
    /// Indicator of the origin.
    ZeroIndicator,
    /// Indicator of the box `[lo, hi]^n`.
    Box { lo: f64, hi: f64 },
    /// Weighted `l1` norm.
    L1 { weight: f64 },
    /// Weighted `l1,2` norm over per-pixel channel groups; the channel
    /// count is inferred from the dimension it is instantiated at.
    GroupL12 { weight: f64 },
}

impl ProxSpec {
    /// Instantiates at dimension `dim`; `pixels` is the per-channel group
    /// length used by `group_l12`.
    pub fn build(&self, dim: usize, pixels: usize) -> Result<ProxFunction> {
        match self {
            ProxSpec::Zero => Ok(ProxFunction::zero(dim)),
            ProxSpec::ZeroIndicator => Ok(ProxFunction::zero_indicator(dim)),
            ProxSpec::Box { lo, hi } => ProxFunction::box_indicator(dim, *lo, *hi),
            ProxSpec::L1 { weight } => Ok(ProxFunction::l1(dim, *weight)),
            ProxSpec::GroupL12 { weight } => {
                if pixels == 0 || dim % pixels != 0 {
                    return Err(Error::InvalidArgument(format!(
                        "group_l12: dim {dim} not a multiple of group length {pixels}"
                    )));
                }
                Ok(ProxFunction::group_l12(pixels, dim / pixels, *weight))
            }
        }
    }
}

/// Registry of built-in linear maps on a `width x height` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OpSpec {
    Identity,
    Zero,
    Scaling { factor: f64 },
    Tv,
    D2,
    Wavelet { levels: usize },
    Blur { psf: String },
}

impl OpSpec {
    pub fn build(&self, width: usize, height: usize) -> Result<LinearMap> {
        let n = width * height;
        match self {
            OpSpec::Identity => Ok(LinearMap::identity(n)),
            OpSpec::Zero => Ok(LinearMap::zero(n, n)),
            OpSpec::Scaling { factor } => Ok(LinearMap::scaling(n, *factor)),
            OpSpec::Tv => tv_map(width, height),
            OpSpec::D2 => d2_map(width, height),
            OpSpec::Wavelet { levels } => wavelet_map(*levels, width, height),
            OpSpec::Blur { psf } => blur_map(&Psf::parse(psf)?, width, height),
        }
    }
}

/// Smooth data-fit registry.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SmoothSpec {
    /// `ℓ(x) = ½‖T x − data‖²` with `T` from the operator registry.
    QuadraticData { op: OpSpec, data: Vec<f64> },
}

/// Assembles the document into a solvable problem.
pub fn build_problem(doc: &ProblemDoc) -> Result<ParallelSumProblem> {
    let n = doc.width * doc.height;
    if n == 0 {
        return Err(Error::InvalidArgument("problem: empty grid".into()));
    }
    let z = match &doc.z {
        Some(z) if z.len() == n => z.clone(),
        Some(z) => {
            return Err(Error::DimensionMismatch {
                tag: "problem.z".into(),
                expected: n,
                got: z.len(),
            })
        }
        None => vec![0.0; n],
    };
    let f = doc.f.build(n, n)?;
    let smooth = match &doc.smooth {
        None => SmoothTerm::zero(n),
        Some(SmoothSpec::QuadraticData { op, data }) => {
            if data.len() != n {
                return Err(Error::DimensionMismatch {
                    tag: "smooth.data".into(),
                    expected: n,
                    got: data.len(),
                });
            }
            let t = op.build(doc.width, doc.height)?;
            let bound = estimate_norm_default(&t, doc.seed)?.upper_bound;
            SmoothTerm::quadratic_data(t, data.clone(), bound)
        }
    };
    let mut terms = Vec::with_capacity(doc.terms.len());
    for spec in &doc.terms {
        let l = spec.l.build(doc.width, doc.height)?;
        let m = spec.m.build(doc.width, doc.height)?;
        let g = spec.g.build(l.out_dim(), n)?;
        let h = spec.h.build(m.out_dim(), n)?;
        terms.push(Term::new(g, h, l, m)?);
    }
    let p = ParallelSumProblem {
        dim: n,
        z,
        f,
        smooth,
        terms,
    };
    p.validate()?;
    Ok(p)
}

/// Parses the JSON text and assembles the problem.
pub fn problem_from_json(text: &str) -> Result<ParallelSumProblem> {
    let doc: ProblemDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("problem json: {e}")))?;
    build_problem(&doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled::IterationConfig;
    use crate::prox::prox_l1;
    use crate::vecmath;

    #[test]
    fn lasso_document_round_trips_and_solves() {
        let text = r#"{
            "width": 3, "height": 1,
            "z": [3.0, -0.2, 1.0],
            "f": {"kind": "zero"},
            "terms": [
                {"g": {"kind": "l1", "weight": 1.0},
                 "h": {"kind": "zero_indicator"},
                 "l": {"kind": "identity"},
                 "m": {"kind": "identity"}}
            ]
        }"#;
        let p = problem_from_json(text).unwrap();
        assert_eq!(p.dim, 3);
        assert_eq!(p.r(), 1);
        // add the smooth part programmatically: z ∈ x + ∂‖x‖₁ as in the
        // library-level lasso test
        let mut p = p;
        p.smooth = SmoothTerm::new(3, 1.0, |x| x.to_vec());
        let (sol, _) = p
            .solve_inclusion(
                &IterationConfig {
                    max_iter: 4000,
                    rtol: 1e-12,
                    ..Default::default()
                },
                1,
                None,
            )
            .unwrap();
        assert!(vecmath::dist(&sol.x, &prox_l1(&[3.0, -0.2, 1.0], 1.0)) < 1e-6);
    }

    #[test]
    fn quadratic_data_document() {
        let text = r#"{
            "width": 2, "height": 2,
            "f": {"kind": "box", "lo": 0.0, "hi": 1.0},
            "smooth": {"kind": "quadratic_data",
                       "op": {"kind": "identity"},
                       "data": [0.2, -0.5, 0.7, 1.4]},
            "terms": []
        }"#;
        let p = problem_from_json(text).unwrap();
        assert!(p.smooth.lipschitz >= 1.0);
        // box-constrained least squares with T = Id: solution clamps data
        let (sol, _) = p
            .solve_inclusion(
                &IterationConfig {
                    max_iter: 2000,
                    rtol: 1e-12,
                    ..Default::default()
                },
                2,
                None,
            )
            .unwrap();
        let expect: Vec<f64> = [0.2f64, -0.5, 0.7, 1.4]
            .iter()
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        assert!(vecmath::dist(&sol.x, &expect) < 1e-6, "x = {:?}", sol.x);
    }

    #[test]
    fn imaging_registry_builds() {
        let text = r#"{
            "width": 16, "height": 16,
            "f": {"kind": "box", "lo": 0.0, "hi": 1.0},
            "terms": [
                {"g": {"kind": "group_l12", "weight": 0.01},
                 "h": {"kind": "group_l12", "weight": 0.01},
                 "l": {"kind": "tv"},
                 "m": {"kind": "d2"}},
                {"g": {"kind": "l1", "weight": 0.01},
                 "h": {"kind": "zero_indicator"},
                 "l": {"kind": "wavelet", "levels": 1},
                 "m": {"kind": "identity"}}
            ]
        }"#;
        let p = problem_from_json(text).unwrap();
        assert_eq!(p.r(), 2);
        assert_eq!(p.terms[0].l.out_dim(), 2 * 256);
        assert_eq!(p.terms[0].m.out_dim(), 3 * 256);
        p.reduce(1).unwrap().validate().unwrap();
    }

    #[test]
    fn bad_documents_are_rejected() {
        assert!(problem_from_json("{").is_err());
        // z of the wrong length
        let text = r#"{
            "width": 2, "height": 2, "z": [1.0],
            "f": {"kind": "zero"}, "terms": []
        }"#;
        assert!(problem_from_json(text).is_err());
        // unknown registry entry
        let text = r#"{
            "width": 2, "height": 2,
            "f": {"kind": "huber"}, "terms": []
        }"#;
        assert!(problem_from_json(text).is_err());
    }
}
