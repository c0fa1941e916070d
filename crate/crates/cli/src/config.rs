//! Run configuration: table documents, grids, function specs and hashing.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use lbt_core::profiles::{cf1, FamilyRegistry, ProfileTriple, TableParams};
use lbt_core::radon::BoundaryFunction;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

fn two_pi() -> f64 {
    2.0 * PI
}

fn one() -> f64 {
    1.0
}

/// JSON table document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableDoc {
    pub family: String,
    /// Registered family name, required when `family` is `"custom"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub nu0: f64,
    pub nu1: f64,
    pub nu3: f64,
    #[serde(default = "two_pi")]
    pub omega1: f64,
    #[serde(default = "two_pi")]
    pub omega2: f64,
    #[serde(rename = "N", default = "one")]
    pub n: f64,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
}

impl TableDoc {
    pub fn cf1() -> Self {
        let p = *cf1().params();
        TableDoc {
            family: "trig".into(),
            name: None,
            nu0: p.nu0,
            nu1: p.nu1,
            nu3: p.nu3,
            omega1: p.omega1,
            omega2: p.omega2,
            n: p.n,
            params: BTreeMap::new(),
        }
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn params(&self) -> TableParams {
        TableParams { nu0: self.nu0, nu1: self.nu1, nu3: self.nu3, omega1: self.omega1, omega2: self.omega2, n: self.n }
    }

    pub fn build(&self) -> Result<ProfileTriple, CliError> {
        let name = match (self.family.as_str(), &self.name) {
            ("trig", None) => "trig",
            ("trig", Some(_)) => return Err(CliError::Config("`name` is only used with family \"custom\"".into())),
            ("custom", Some(n)) => n.as_str(),
            ("custom", None) => return Err(CliError::Config("family \"custom\" needs a `name`".into())),
            (f, _) => return Err(CliError::Config(format!("unknown family {f:?}"))),
        };
        FamilyRegistry::default()
            .build(name, &self.params(), &self.params)
            .map_err(|e| CliError::Config(e.to_string()))
    }
}

/// An inclusive uniform grid `a:b:n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Grid {
    pub a: f64,
    pub b: f64,
    pub n: usize,
}

impl Grid {
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Config(format!("grid {s:?} is not of the form a:b:n"));
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else { return Err(bad()) };
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        if n == 0 || !a.is_finite() || !b.is_finite() {
            return Err(CliError::Config(format!("grid {s:?} is empty or non-finite")));
        }
        Ok(Grid { a, b, n })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.a];
        }
        let h = (self.b - self.a) / (self.n - 1) as f64;
        (0..self.n).map(|i| if i + 1 == self.n { self.b } else { self.a + h * i as f64 }).collect()
    }
}

/// A boundary function named on the command line.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum FunctionSpec {
    Const(f64),
    /// Terms `(j, l, c)` of `Σ c cos(4πjθ₁/ω₁) cos(4πlθ₂/ω₂)`.
    Trig(Vec<(u32, u32, f64)>),
}

impl FunctionSpec {
    /// `const:c` or `trig:j,l,c;j,l,c;...`.
    pub fn parse(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Config(format!("function {s:?}: {why}"));
        let (kind, body) = s.split_once(':').ok_or_else(|| bad("expected const:c or trig:j,l,c;..."))?;
        match kind {
            "const" => {
                let c: f64 = body.trim().parse().map_err(|_| bad("bad constant"))?;
                if !c.is_finite() {
                    return Err(bad("non-finite constant"));
                }
                Ok(FunctionSpec::Const(c))
            }
            "trig" => {
                let mut terms = Vec::new();
                for term in body.split(';').filter(|t| !t.trim().is_empty()) {
                    let f: Vec<&str> = term.split(',').map(str::trim).collect();
                    let [j, l, c] = f.as_slice() else { return Err(bad("each term is j,l,c")) };
                    let j = j.parse().map_err(|_| bad("bad index"))?;
                    let l = l.parse().map_err(|_| bad("bad index"))?;
                    let c: f64 = c.parse().map_err(|_| bad("bad coefficient"))?;
                    if !c.is_finite() {
                        return Err(bad("non-finite coefficient"));
                    }
                    terms.push((j, l, c));
                }
                if terms.is_empty() {
                    return Err(bad("no terms"));
                }
                Ok(FunctionSpec::Trig(terms))
            }
            _ => Err(bad("unknown kind")),
        }
    }

    pub fn build(&self, p: &TableParams) -> BoundaryFunction {
        match self {
            FunctionSpec::Const(c) => BoundaryFunction::constant(*c),
            FunctionSpec::Trig(terms) => BoundaryFunction::trig(p, terms),
        }
    }
}

/// Everything that determines the output of a run.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub table: TableDoc,
    pub k1: Option<Grid>,
    pub k2: Option<Grid>,
    pub tol: f64,
    pub seed: u64,
    pub bounces: usize,
    pub starts: usize,
    pub order: usize,
    pub degree: usize,
    pub function: FunctionSpec,
    pub pqn: (i64, i64, i64),
}

impl RunConfig {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(Grid::parse("0:1:3").unwrap().values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(Grid::parse("-0.5:2:1").unwrap().values(), vec![-0.5]);
        assert!(Grid::parse("0:1:0").is_err());
        assert!(Grid::parse("0:1").is_err());
    }

    #[test]
    fn functions() {
        assert_eq!(FunctionSpec::parse("const:2").unwrap(), FunctionSpec::Const(2.0));
        assert_eq!(
            FunctionSpec::parse("trig:1,0,0.5;0,2,1").unwrap(),
            FunctionSpec::Trig(vec![(1, 0, 0.5), (0, 2, 1.0)])
        );
        assert!(FunctionSpec::parse("trig:").is_err());
        assert!(FunctionSpec::parse("sin:1").is_err());
    }

    #[test]
    fn table_documents() {
        let d: TableDoc = serde_json::from_str(r#"{"family":"trig","nu0":2,"nu1":1,"nu3":-1,"N":1}"#).unwrap();
        assert_eq!(d, TableDoc::cf1());
        let q: TableDoc = serde_json::from_str(
            r#"{"family":"custom","name":"quartic","nu0":2.5,"nu1":1,"nu3":-0.8,"params":{"beta":0.25}}"#,
        )
        .unwrap();
        assert!(q.build().is_ok());
        assert!(serde_json::from_str::<TableDoc>(r#"{"family":"trig","nu0":2,"nu1":1,"nu3":-1,"bogus":1}"#).is_err());
    }
}
