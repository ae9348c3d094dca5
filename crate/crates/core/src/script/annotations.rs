//! Port manifests from comment annotations.
//!
//! ```text
//! # @av in length : i64
//! # @av out wave : f64 [1]
//! # @av param decay : f64
//! # @av stateful
//! ```
//!
//! The leader is `#` for Python, `//` for C++ and `!` for Fortran. The
//! optional bracket holds the rank (0 when omitted). Any other comment line
//! mentioning `@av` is rejected so typos do not silently drop a port.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::ScriptError;
use crate::graph::{PortSpec, PortType, Signature};
use crate::tensor::DType;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    Python,
    Cpp,
    Fortran,
}

impl Language {
    pub fn leader(self) -> &'static str {
        match self {
            Language::Python => "#",
            Language::Cpp => "//",
            Language::Fortran => "!",
        }
    }

    pub fn from_path(path: &Path) -> Option<Self> {
        let ext = path.extension()?.to_str()?.to_ascii_lowercase();
        match ext.as_str() {
            "py" => Some(Language::Python),
            "cpp" | "cc" | "cxx" | "hpp" | "h" => Some(Language::Cpp),
            "f" | "f90" | "f95" | "f03" | "for" => Some(Language::Fortran),
            _ => None,
        }
    }
}

impl FromStr for Language {
    type Err = ScriptError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "python" | "py" => Ok(Language::Python),
            "cpp" | "c++" => Ok(Language::Cpp),
            "fortran" => Ok(Language::Fortran),
            _ => Err(ScriptError::UnknownLanguage(s.to_string())),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::Python => "python",
            Language::Cpp => "cpp",
            Language::Fortran => "fortran",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PortDirection {
    In,
    Out,
    Param,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortDecl {
    pub direction: PortDirection,
    pub name: String,
    pub dtype: DType,
    pub rank: usize,
}

impl PortDecl {
    pub fn port_type(&self) -> PortType {
        PortType::new(self.dtype, self.rank)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub name: String,
    pub language: Language,
    pub ports: Vec<PortDecl>,
    #[serde(default)]
    pub stateful: bool,
}

impl Manifest {
    pub fn ports(&self, direction: PortDirection) -> impl Iterator<Item = &PortDecl> {
        self.ports.iter().filter(move |p| p.direction == direction)
    }

    pub fn inputs(&self) -> Vec<&PortDecl> {
        self.ports(PortDirection::In).collect()
    }

    pub fn outputs(&self) -> Vec<&PortDecl> {
        self.ports(PortDirection::Out).collect()
    }

    pub fn params(&self) -> Vec<&PortDecl> {
        self.ports(PortDirection::Param).collect()
    }

    pub fn signature(&self) -> Signature {
        let specs = |d| self.ports(d).map(|p| PortSpec::new(p.name.clone(), p.port_type())).collect();
        Signature::new(specs(PortDirection::In), specs(PortDirection::Out))
    }

    /// Whether two manifests describe the same interface (names of the
    /// scripts may differ).
    pub fn same_interface(&self, other: &Manifest) -> bool {
        self.ports == other.ports && self.stateful == other.stateful
    }
}

static PORT_LINE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^@av\s+(in|out|param)\s+([A-Za-z_]\w*)\s*:\s*(i64|f64)\s*(?:\[\s*(\d+)\s*\])?\s*$").unwrap()
});
static STATEFUL_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^@av\s+stateful\s*$").unwrap());

pub fn parse_annotations(source: &str, language: Language, name: &str) -> Result<Manifest, ScriptError> {
    let leader = language.leader();
    let mut ports: Vec<PortDecl> = Vec::new();
    let mut seen = HashSet::new();
    let mut stateful = false;
    for (i, raw) in source.lines().enumerate() {
        let line_no = i + 1;
        let Some(body) = raw.trim_start().strip_prefix(leader) else {
            continue;
        };
        let body = body.trim();
        if !body.starts_with("@av") {
            continue;
        }
        if STATEFUL_LINE.is_match(body) {
            stateful = true;
            continue;
        }
        let caps = PORT_LINE.captures(body).ok_or_else(|| ScriptError::BadAnnotation {
            line: line_no,
            text: raw.trim().to_string(),
        })?;
        let direction = match &caps[1] {
            "in" => PortDirection::In,
            "out" => PortDirection::Out,
            _ => PortDirection::Param,
        };
        let port_name = caps[2].to_string();
        if !seen.insert(port_name.clone()) {
            return Err(ScriptError::DuplicatePort {
                name: port_name,
                line: line_no,
            });
        }
        let rank = match caps.get(4) {
            Some(m) => m.as_str().parse().map_err(|_| ScriptError::BadAnnotation {
                line: line_no,
                text: raw.trim().to_string(),
            })?,
            None => 0,
        };
        ports.push(PortDecl {
            direction,
            name: port_name,
            dtype: caps[3].parse().expect("regex admits only known dtypes"),
            rank,
        });
    }
    if !ports.iter().any(|p| p.direction == PortDirection::Out) {
        return Err(ScriptError::NoOutputs);
    }
    Ok(Manifest {
        name: name.to_string(),
        language,
        ports,
        stateful,
    })
}
