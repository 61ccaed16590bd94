use std::fmt;

use serde::{Deserialize, Serialize};

/// Structural law checked by one of the validators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axiom {
    UnitEndpoints,
    InverseEndpoints,
    CompositionDomain,
    CompositionEndpoints,
    LeftUnit,
    RightUnit,
    LeftInverse,
    RightInverse,
    Associativity,
    HaarPositivity,
    HaarNormalization,
    HaarInvariance,
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Axiom::UnitEndpoints => "unit endpoints",
            Axiom::InverseEndpoints => "inverse endpoints",
            Axiom::CompositionDomain => "composition domain",
            Axiom::CompositionEndpoints => "composition endpoints",
            Axiom::LeftUnit => "left unit law",
            Axiom::RightUnit => "right unit law",
            Axiom::LeftInverse => "left inverse law",
            Axiom::RightInverse => "right inverse law",
            Axiom::Associativity => "associativity",
            Axiom::HaarPositivity => "haar positivity",
            Axiom::HaarNormalization => "haar normalization",
            Axiom::HaarInvariance => "haar left invariance",
        };
        f.write_str(name)
    }
}

/// A single failed law together with the ids that witness the failure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub axiom: Axiom,
    pub witness: Vec<usize>,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violated at {:?}: {}", self.axiom, self.witness, self.detail)
    }
}

/// Collected violations. Empty iff every checked law holds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, axiom: Axiom, witness: Vec<usize>, detail: impl Into<String>) {
        self.violations.push(Violation { axiom, witness, detail: detail.into() });
    }

    pub fn cites(&self, axiom: Axiom) -> bool {
        self.violations.iter().any(|v| v.axiom == axiom)
    }

    pub fn first(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return f.write_str("all checks passed");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}
