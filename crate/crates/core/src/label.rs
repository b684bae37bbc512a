use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Recording class. `Grinding` is the positive class in every metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    NoGrinding,
    Grinding,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NoGrinding, Label::Grinding];

    /// Class index used by the classifier: no_grinding = 0, grinding = 1.
    pub fn index(self) -> usize {
        match self {
            Label::NoGrinding => 0,
            Label::Grinding => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NoGrinding => "no_grinding",
            Label::Grinding => "grinding",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "no_grinding" => Ok(Label::NoGrinding),
            "grinding" => Ok(Label::Grinding),
            other => Err(format!(
                "unknown label `{other}` (expected grinding or no_grinding)"
            )),
        }
    }
}
