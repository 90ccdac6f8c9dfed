use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Binary class of a patch. `Mass` is the positive class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Label {
    Mass,
    NonMass,
}

impl Label {
    pub fn is_positive(self) -> bool {
        self == Label::Mass
    }

    /// `+1` for mass, `-1` for non-mass.
    pub fn sign(self) -> f64 {
        match self {
            Label::Mass => 1.0,
            Label::NonMass => -1.0,
        }
    }

    pub fn from_sign(v: f64) -> Self {
        if v > 0.0 {
            Label::Mass
        } else {
            Label::NonMass
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Mass => "mass",
            Label::NonMass => "non-mass",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mass" => Ok(Label::Mass),
            "non-mass" => Ok(Label::NonMass),
            other => Err(Error::format(format!("unknown label `{other}`"))),
        }
    }
}

/// Counts of (positive, negative) labels.
pub fn class_counts(labels: &[Label]) -> (usize, usize) {
    let pos = labels.iter().filter(|l| l.is_positive()).count();
    (pos, labels.len() - pos)
}
