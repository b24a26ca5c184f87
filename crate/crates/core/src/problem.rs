use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dd::Mode;
use crate::{Error, Result};

/// The two combinatorial problems the engine bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// Maximum independent set (cardinality).
    Misp,
    /// Maximum weighted cut.
    Mcp,
}

/// Which side of the optimum is being bounded. Both problems maximize, so
/// upper bounds come from relaxed diagrams and lower bounds from restricted
/// ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    Ub,
    Lb,
}

impl Sense {
    pub fn mode(self, width: usize) -> Mode {
        match self {
            Sense::Ub => Mode::Relaxed(width),
            Sense::Lb => Mode::Restricted(width),
        }
    }
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Problem::Misp => "misp",
            Problem::Mcp => "mcp",
        })
    }
}

impl FromStr for Problem {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "misp" => Ok(Problem::Misp),
            "mcp" | "maxcut" => Ok(Problem::Mcp),
            _ => Err(Error::InvalidConfig(format!("unknown problem {s:?}"))),
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Ub => "ub",
            Sense::Lb => "lb",
        })
    }
}

impl FromStr for Sense {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ub" | "upper" => Ok(Sense::Ub),
            "lb" | "lower" => Ok(Sense::Lb),
            _ => Err(Error::InvalidConfig(format!("unknown sense {s:?}"))),
        }
    }
}
