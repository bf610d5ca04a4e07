use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Scene class of a window or frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Changed,
    NotChanged,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Changed, Label::NotChanged];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Changed => "changed",
            Label::NotChanged => "not_changed",
        }
    }

    /// Row/column position in confusion matrices.
    pub fn index(self) -> usize {
        match self {
            Label::Changed => 0,
            Label::NotChanged => 1,
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
        match s.trim() {
            "changed" => Ok(Label::Changed),
            "not_changed" => Ok(Label::NotChanged),
            other => Err(Error::Data(format!(
                "unknown label {other:?}, expected changed or not_changed"
            ))),
        }
    }
}
