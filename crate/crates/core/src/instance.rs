//! Problem data: `min f(x) s.t. h_i(x) = 0, g_j(x) >= 0`, and its JSON file form.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::polyring::TermEntry;
use crate::polyring::Polynomial;

/// A polynomial optimization problem.
#[derive(Clone, Debug, PartialEq)]
pub struct PopInstance {
    nvars: usize,
    pub f: Polynomial,
    pub h: Vec<Polynomial>,
    pub g: Vec<Polynomial>,
}

impl PopInstance {
    pub fn new(f: Polynomial, h: Vec<Polynomial>, g: Vec<Polynomial>) -> Result<Self> {
        let nvars = f.nvars();
        for p in h.iter().chain(&g) {
            if p.nvars() != nvars {
                return Err(Error::DimensionMismatch {
                    expected: nvars,
                    got: p.nvars(),
                });
            }
        }
        Ok(PopInstance { nvars, f, h, g })
    }

    pub fn unconstrained(f: Polynomial) -> Self {
        PopInstance {
            nvars: f.nvars(),
            f,
            h: Vec::new(),
            g: Vec::new(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    /// Largest degree among `f`, `h_i`, `g_j`.
    pub fn max_degree(&self) -> u32 {
        std::iter::once(&self.f)
            .chain(&self.h)
            .chain(&self.g)
            .map(Polynomial::degree_or_zero)
            .max()
            .unwrap_or(0)
    }

    /// Largest constraint violation at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self.h.iter().map(|h| h.eval(x).abs());
        let ineq = self.g.iter().map(|g| (-g.eval(x)).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    /// Multiplies every polynomial by `c`.
    pub fn scaled(&self, c: f64) -> PopInstance {
        PopInstance {
            nvars: self.nvars,
            f: self.f.scale(c),
            h: self.h.iter().map(|p| p.scale(c)).collect(),
            g: self.g.iter().map(|p| p.scale(c)).collect(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Known global minimum value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub minimizers: Vec<Vec<f64>>,
    /// Constant `R` of a redundant ball constraint `R - |x|^2 >= 0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ball_r: Option<f64>,
}

/// On-disk JSON form of a [`PopInstance`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub nvars: usize,
    #[serde(default)]
    pub variables: Vec<String>,
    pub objective: Vec<TermEntry>,
    #[serde(default)]
    pub equalities: Vec<Vec<TermEntry>>,
    #[serde(default)]
    pub inequalities: Vec<Vec<TermEntry>>,
    #[serde(default)]
    pub metadata: InstanceMetadata,
}

fn from_entries(nvars: usize, entries: &[TermEntry], what: &str) -> Result<Polynomial> {
    if entries.iter().any(|e| !e.coeff.is_finite()) {
        return Err(Error::Parse(format!("{what}: non-finite coefficient")));
    }
    Polynomial::from_entries(nvars, entries).map_err(|e| Error::Parse(format!("{what}: {e}")))
}

impl InstanceFile {
    pub fn from_instance(inst: &PopInstance, metadata: InstanceMetadata) -> Self {
        InstanceFile {
            nvars: inst.nvars(),
            variables: (1..=inst.nvars()).map(|i| format!("x{i}")).collect(),
            objective: inst.f.to_entries(),
            equalities: inst.h.iter().map(Polynomial::to_entries).collect(),
            inequalities: inst.g.iter().map(Polynomial::to_entries).collect(),
            metadata,
        }
    }

    pub fn to_instance(&self) -> Result<PopInstance> {
        if self.nvars == 0 {
            return Err(Error::Parse("nvars must be positive".into()));
        }
        if !self.variables.is_empty() && self.variables.len() != self.nvars {
            return Err(Error::Parse(format!(
                "{} variable names given for {} variables",
                self.variables.len(),
                self.nvars
            )));
        }
        let f = from_entries(self.nvars, &self.objective, "objective")?;
        let h = self
            .equalities
            .iter()
            .enumerate()
            .map(|(i, e)| from_entries(self.nvars, e, &format!("equality {}", i + 1)))
            .collect::<Result<Vec<_>>>()?;
        let g = self
            .inequalities
            .iter()
            .enumerate()
            .map(|(j, e)| from_entries(self.nvars, e, &format!("inequality {}", j + 1)))
            .collect::<Result<Vec<_>>>()?;
        PopInstance::new(f, h, g)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.to_instance()?;
        Ok(file)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance file serializes")
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::{ball_polynomial, motzkin};

    #[test]
    fn parse_print_parse() {
        let inst = PopInstance::new(
            motzkin(),
            vec![crate::polyring::parse_polynomial("x1 + x2 - 0.1", 3).unwrap()],
            vec![ball_polynomial(3, 1.0)],
        )
        .unwrap();
        let meta = InstanceMetadata {
            f_min: Some(0.0),
            ..Default::default()
        };
        let file = InstanceFile::from_instance(&inst, meta);
        let text = file.to_json();
        let again = InstanceFile::parse(&text).unwrap();
        assert_eq!(again, file);
        assert_eq!(again.to_json(), text);
        assert_eq!(again.to_instance().unwrap(), inst);
    }

    #[test]
    fn rejects_bad_exponent_length() {
        let text = r#"{"nvars": 2, "objective": [{"coeff": 1.0, "exponents": [1]}]}"#;
        assert!(matches!(InstanceFile::parse(text), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_malformed_json() {
        assert!(matches!(InstanceFile::parse("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn mixed_nvars_rejected() {
        let f = Polynomial::var(2, 0);
        let g = Polynomial::var(3, 0);
        assert!(PopInstance::new(f, vec![], vec![g]).is_err());
    }
}
