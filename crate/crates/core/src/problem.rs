//! Problem files.
//!
//! ```json
//! {"dimension": 2,
//!  "objective": [{"exponents": [2, 0], "coeff": 1}, {"exponents": [0, 2], "coeff": "1/3"}],
//!  "box": {"lower": [-1, -1], "upper": [1, 1]},
//!  "constraints_poly": [[{"exponents": [1, 0], "coeff": 1}]],
//!  "constraints_linear": {"A": [[1, 1]], "b": [1]}}
//! ```
//!
//! Polynomial constraints mean `g(x) ≤ 0`. String coefficients are read
//! exactly in rational mode; so are plain JSON numbers, via their decimal
//! text. Optional keys: `name`, `degree`, `epsilon` (suggested
//! branch-and-bound tolerance), `known_optimum`, `lyapunov`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bnb::Constraints;
use crate::error::{Error, Result};
use crate::poly::{BoxDomain, Degree, MultiIndex, Polynomial};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffSpec {
    Number(serde_json::Number),
    Text(String),
}

impl CoeffSpec {
    pub fn parse<S: Scalar>(&self) -> Result<S> {
        let text = match self {
            CoeffSpec::Number(n) => n.to_string(),
            CoeffSpec::Text(s) => s.clone(),
        };
        S::parse_str(&text).ok_or_else(|| Error::Parse(format!("bad coefficient {text:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub exponents: Vec<u32>,
    pub coeff: CoeffSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSpec {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExpectedVerdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpec {
    /// Right-hand sides of `dx/dt = f(x)`, one term list per state.
    pub field: Vec<Vec<TermSpec>>,
    /// A derivative transcribed from elsewhere, kept only for cross-checking.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub printed_vdot: Option<Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_verdict: Option<ExpectedVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub dimension: usize,
    pub objective: Vec<TermSpec>,
    #[serde(rename = "box")]
    pub domain: BoxSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints_poly: Vec<Vec<TermSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraints_linear: Option<LinearSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degree: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub known_optimum: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lyapunov: Option<LyapunovSpec>,
}

/// A parsed problem over the scalar field `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem<S> {
    pub name: String,
    pub objective: Polynomial<S>,
    pub domain: BoxDomain,
    pub constraints: Constraints<S>,
    pub degree: Option<Degree>,
    pub epsilon: Option<f64>,
    pub known_optimum: Option<f64>,
    pub field: Option<Vec<Polynomial<S>>>,
    pub printed_vdot: Option<Polynomial<S>>,
    pub expected_verdict: Option<ExpectedVerdict>,
}

pub fn polynomial_from_terms<S: Scalar>(dim: usize, terms: &[TermSpec]) -> Result<Polynomial<S>> {
    let parsed = terms
        .iter()
        .map(|t| Ok((t.exponents.clone(), t.coeff.parse::<S>()?)))
        .collect::<Result<Vec<_>>>()?;
    Polynomial::from_terms(dim, parsed)
}

/// Term list in exponent order, coefficients rendered exactly.
pub fn terms_from_polynomial<S: Scalar>(p: &Polynomial<S>) -> Vec<TermSpec> {
    p.terms()
        .map(|(idx, c)| TermSpec {
            exponents: idx.0.clone(),
            coeff: CoeffSpec::Text(c.render_exact()),
        })
        .collect()
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn build<S: Scalar>(&self) -> Result<Problem<S>> {
        let n = self.dimension;
        let objective = polynomial_from_terms::<S>(n, &self.objective)?;
        if self.domain.lower.len() != n || self.domain.upper.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: if self.domain.lower.len() != n {
                    self.domain.lower.len()
                } else {
                    self.domain.upper.len()
                },
            });
        }
        let domain = BoxDomain::new(self.domain.lower.clone(), self.domain.upper.clone())?;
        let poly = self
            .constraints_poly
            .iter()
            .map(|g| polynomial_from_terms::<S>(n, g))
            .collect::<Result<Vec<_>>>()?;
        let linear = match &self.constraints_linear {
            None => None,
            Some(l) => {
                if l.a.len() != l.b.len() {
                    return Err(Error::DimensionMismatch {
                        expected: l.a.len(),
                        got: l.b.len(),
                    });
                }
                if let Some(row) = l.a.iter().find(|r| r.len() != n) {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: row.len(),
                    });
                }
                Some((l.a.clone(), l.b.clone()))
            }
        };
        let degree = match &self.degree {
            None => None,
            Some(d) => {
                if d.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: d.len(),
                    });
                }
                let d = MultiIndex(d.clone());
                let need = poly
                    .iter()
                    .fold(objective.support_degree(), |acc, g| acc.join(&g.support_degree()));
                if !need.le(&d) {
                    return Err(Error::DegreeTooSmall {
                        requested: d.0,
                        required: need.0,
                    });
                }
                Some(d)
            }
        };
        let (field, printed_vdot, expected_verdict) = match &self.lyapunov {
            None => (None, None, None),
            Some(l) => {
                if l.field.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        got: l.field.len(),
                    });
                }
                let f = l
                    .field
                    .iter()
                    .map(|t| polynomial_from_terms::<S>(n, t))
                    .collect::<Result<Vec<_>>>()?;
                let printed = l
                    .printed_vdot
                    .as_ref()
                    .map(|t| polynomial_from_terms::<S>(n, t))
                    .transpose()?;
                (Some(f), printed, l.expected_verdict)
            }
        };
        Ok(Problem {
            name: self.name.clone().unwrap_or_else(|| "problem".to_string()),
            objective,
            domain,
            constraints: Constraints { poly, linear },
            degree,
            epsilon: self.epsilon,
            known_optimum: self.known_optimum,
            field,
            printed_vdot,
            expected_verdict,
        })
    }
}

impl<S: Scalar> Problem<S> {
    /// The Bernstein degree to use: the declared one, else the componentwise
    /// maximum over objective and constraints.
    pub fn effective_degree(&self) -> Degree {
        self.degree.clone().unwrap_or_else(|| {
            self.constraints
                .poly
                .iter()
                .fold(self.objective.support_degree(), |acc, g| acc.join(&g.support_degree()))
        })
    }
}
