//! Catalog of built-in fields and coefficient families.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::gl::{MatrixField, RadialConformal, SampledMatrixField};
use crate::harmonic::{HomogeneousMode, ModeSum, SymmetricFn, VectorModes};
use crate::io::{coefficients_from_table, field_from_table, Table};
use crate::minimal::branched::{BranchedExample, HolomorphicSquare, TwoValuedFn, TwoValuedSample};
use crate::twoval::field::TwoValuedField;
use crate::twoval::value::TwoValue;

use super::config::SourceSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BuiltinKind {
    /// Closed-form symmetric two-valued harmonic function.
    Symmetric,
    /// Two-valued graph evaluated pointwise.
    Graph,
    /// Coefficient matrix field.
    Coefficients,
}

impl BuiltinKind {
    pub fn label(&self) -> &'static str {
        match self {
            Self::Symmetric => "symmetric field",
            Self::Graph => "two-valued graph",
            Self::Coefficients => "coefficients",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamInfo {
    pub name: &'static str,
    pub default: f64,
    pub doc: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinInfo {
    pub name: &'static str,
    pub kind: BuiltinKind,
    pub summary: &'static str,
    pub params: &'static [ParamInfo],
}

const fn p(name: &'static str, default: f64, doc: &'static str) -> ParamInfo {
    ParamInfo { name, default, doc }
}

pub const CATALOG: [BuiltinInfo; 6] = [
    BuiltinInfo {
        name: "mode",
        kind: BuiltinKind::Symmetric,
        summary: "{±r^{m/2}(a cos(mθ/2) + b sin(mθ/2))}",
        params: &[
            p("m", 3.0, "odd mode index"),
            p("a", 0.0, "cosine coefficient"),
            p("b", 1.0, "sine coefficient"),
        ],
    },
    BuiltinInfo {
        name: "superposition",
        kind: BuiltinKind::Symmetric,
        summary: "mode(3,0,1) + eps·mode(5,1,0), or `draws` random sums of odd modes up to max_m",
        params: &[
            p("eps", 0.3, "weight of the degree-5/2 term"),
            p("draws", 0.0, "number of random sums; 0 selects the fixed example"),
            p("max_m", 9.0, "highest odd mode in random sums"),
        ],
    },
    BuiltinInfo {
        name: "canonical_branch",
        kind: BuiltinKind::Graph,
        summary: "the variety w² = z³ as the graph {±z^{3/2}}",
        params: &[],
    },
    BuiltinInfo {
        name: "rotated_branch",
        kind: BuiltinKind::Graph,
        summary: "w² = z³ rotated in the (x₁, w₁) plane and regraphed",
        params: &[p("angle", 0.1, "rotation angle in radians")],
    },
    BuiltinInfo {
        name: "holomorphic_square",
        kind: BuiltinKind::Graph,
        summary: "z ↦ z² taken twice",
        params: &[],
    },
    BuiltinInfo {
        name: "radial_conformal_coeffs",
        kind: BuiltinKind::Coefficients,
        summary: "(1 + eps r) I; a mode field is replaced by the exact weighted solution with its angular data",
        params: &[p("eps", 0.1, "radial slope of μ")],
    },
];

pub fn list_builtins() -> &'static [BuiltinInfo] {
    &CATALOG
}

pub fn find_builtin(name: &str) -> Result<&'static BuiltinInfo> {
    CATALOG.iter().find(|b| b.name == name).ok_or_else(|| {
        let names: Vec<&str> = CATALOG.iter().map(|b| b.name).collect();
        Error::InvalidInput(format!("unknown builtin `{name}`; known: {}", names.join(", ")))
    })
}

/// Parameter values with defaults filled in; unknown names are rejected.
fn resolve(spec: &SourceSpec, info: &BuiltinInfo) -> Result<Vec<f64>> {
    if let Some(k) = spec
        .params
        .keys()
        .find(|k| !info.params.iter().any(|p| p.name == k.as_str()))
    {
        return Err(Error::InvalidInput(format!(
            "builtin `{}` has no parameter `{k}`",
            info.name
        )));
    }
    Ok(info
        .params
        .iter()
        .map(|p| spec.params.get(p.name).copied().unwrap_or(p.default))
        .collect())
}

fn as_count(v: f64, what: &str) -> Result<usize> {
    if v < 0.0 || v.fract() != 0.0 || !v.is_finite() {
        return Err(Error::InvalidInput(format!(
            "{what} must be a non-negative integer, got {v}"
        )));
    }
    Ok(v as usize)
}

fn as_odd(v: f64, what: &str) -> Result<u32> {
    let n = as_count(v, what)?;
    if n % 2 == 0 {
        return Err(Error::InvalidInput(format!("{what} must be odd, got {n}")));
    }
    Ok(n as u32)
}

/// `{±φ}` of a closed-form symmetric field viewed as a two-valued graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricGraph(pub VectorModes);

impl TwoValuedFn for SymmetricGraph {
    fn k(&self) -> usize {
        self.0.k()
    }

    fn sample(&self, x: [f64; 2]) -> Result<TwoValuedSample> {
        let (v, g) = self.0.eval(x);
        Ok(TwoValuedSample {
            values: TwoValue::symmetric(v),
            grads: TwoValue::symmetric(g),
        })
    }
}

/// A resolved field source.
#[derive(Clone)]
pub struct Field {
    pub label: String,
    /// Closed-form symmetric representatives; random families hold several.
    pub modes: Vec<VectorModes>,
    pub graph: Option<Arc<dyn TwoValuedFn>>,
    pub sampled: Option<TwoValuedField>,
}

impl std::fmt::Debug for Field {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Field")
            .field("label", &self.label)
            .field("modes", &self.modes.len())
            .field("graph", &self.graph.is_some())
            .field("sampled", &self.sampled.is_some())
            .finish()
    }
}

fn scalar(terms: Vec<HomogeneousMode>) -> VectorModes {
    VectorModes {
        components: vec![ModeSum::new(terms)],
    }
}

fn from_modes(label: String, modes: Vec<VectorModes>) -> Field {
    let graph = modes
        .first()
        .map(|m| Arc::new(SymmetricGraph(m.clone())) as Arc<dyn TwoValuedFn>);
    Field {
        label,
        modes,
        graph,
        sampled: None,
    }
}

pub fn build_field(spec: &SourceSpec, rng: &mut ChaCha8Rng) -> Result<Field> {
    if let Some(path) = &spec.csv {
        let t = Table::read_path(path)?;
        return Ok(Field {
            label: format!("csv:{}", path.display()),
            modes: Vec::new(),
            graph: None,
            sampled: Some(field_from_table(&t)?),
        });
    }
    let name = spec
        .builtin
        .as_deref()
        .ok_or(Error::InvalidInput("field needs a source".into()))?;
    let info = find_builtin(name)?;
    let v = resolve(spec, info)?;
    match name {
        "mode" => {
            let m = as_odd(v[0], "mode index m")?;
            let label = format!("mode({m},{},{})", v[1], v[2]);
            Ok(from_modes(
                label,
                vec![scalar(vec![HomogeneousMode { m, a: v[1], b: v[2] }])],
            ))
        }
        "superposition" => {
            let draws = as_count(v[1], "draws")?;
            if draws == 0 {
                let terms = vec![
                    HomogeneousMode { m: 3, a: 0.0, b: 1.0 },
                    HomogeneousMode { m: 5, a: v[0], b: 0.0 },
                ];
                return Ok(from_modes(format!("superposition(eps={})", v[0]), vec![scalar(terms)]));
            }
            let max_m = as_odd(v[2], "max_m")?;
            let family = (0..draws)
                .map(|_| {
                    let terms = (1..=max_m)
                        .step_by(2)
                        .map(|m| HomogeneousMode {
                            m,
                            a: rng.gen_range(-1.0..1.0),
                            b: rng.gen_range(-1.0..1.0),
                        })
                        .collect();
                    scalar(terms)
                })
                .collect();
            Ok(from_modes(
                format!("superposition(draws={draws},max_m={max_m})"),
                family,
            ))
        }
        "canonical_branch" => Ok(Field {
            label: name.into(),
            modes: vec![VectorModes::canonical_branch()],
            graph: Some(Arc::new(BranchedExample::identity())),
            sampled: None,
        }),
        "rotated_branch" => Ok(Field {
            label: format!("rotated_branch(angle={})", v[0]),
            modes: Vec::new(),
            graph: Some(Arc::new(BranchedExample::rotated(v[0])?)),
            sampled: None,
        }),
        "holomorphic_square" => Ok(Field {
            label: name.into(),
            modes: Vec::new(),
            graph: Some(Arc::new(HolomorphicSquare)),
            sampled: None,
        }),
        _ => Err(Error::InvalidInput(format!(
            "builtin `{name}` is a {}, not a field",
            info.kind.label()
        ))),
    }
}

#[derive(Clone)]
pub struct Coefficients {
    pub label: String,
    pub field: Arc<dyn MatrixField>,
    /// Slope of `μ = 1 + ε r` for the radial family.
    pub eps: Option<f64>,
}

impl std::fmt::Debug for Coefficients {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Coefficients")
            .field("label", &self.label)
            .field("eps", &self.eps)
            .finish()
    }
}

pub fn build_coefficients(spec: &SourceSpec) -> Result<Coefficients> {
    if let Some(path) = &spec.csv {
        let t = Table::read_path(path)?;
        let field: SampledMatrixField = coefficients_from_table(&t)?;
        return Ok(Coefficients {
            label: format!("csv:{}", path.display()),
            field: Arc::new(field),
            eps: None,
        });
    }
    let name = spec
        .builtin
        .as_deref()
        .ok_or(Error::InvalidInput("coefficients need a source".into()))?;
    let info = find_builtin(name)?;
    if info.kind != BuiltinKind::Coefficients {
        return Err(Error::InvalidInput(format!(
            "builtin `{name}` is a {}, not coefficients",
            info.kind.label()
        )));
    }
    let v = resolve(spec, info)?;
    Ok(Coefficients {
        label: format!("{name}(eps={})", v[0]),
        field: Arc::new(RadialConformal { eps: v[0] }),
        eps: Some(v[0]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn catalog_names_are_stable() {
        let names: Vec<&str> = list_builtins().iter().map(|b| b.name).collect();
        assert_eq!(
            names,
            [
                "mode",
                "superposition",
                "canonical_branch",
                "rotated_branch",
                "holomorphic_square",
                "radial_conformal_coeffs"
            ]
        );
    }

    #[test]
    fn every_field_builtin_resolves_at_defaults() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for b in list_builtins() {
            let spec = SourceSpec::builtin(b.name);
            match b.kind {
                BuiltinKind::Coefficients => {
                    build_coefficients(&spec).unwrap();
                    assert!(build_field(&spec, &mut rng).is_err());
                }
                _ => {
                    let f = build_field(&spec, &mut rng).unwrap();
                    assert!(f.graph.is_some(), "{}", b.name);
                }
            }
        }
    }

    #[test]
    fn bad_parameters_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let bad = [
            SourceSpec::builtin("mode").with("m", 2.0),
            SourceSpec::builtin("mode").with("k", 1.0),
            SourceSpec::builtin("nope"),
            SourceSpec::builtin("superposition").with("draws", 1.5),
        ];
        for s in bad {
            assert!(build_field(&s, &mut rng).is_err(), "{s:?}");
        }
    }

    #[test]
    fn random_family_is_seeded() {
        let spec = SourceSpec::builtin("superposition").with("draws", 3.0);
        let a = build_field(&spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = build_field(&spec, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let c = build_field(&spec, &mut ChaCha8Rng::seed_from_u64(8)).unwrap();
        assert_eq!(a.modes, b.modes);
        assert_ne!(a.modes, c.modes);
        assert_eq!(a.modes.len(), 3);
        assert_eq!(a.modes[0].components[0].terms.len(), 5);
    }
}
