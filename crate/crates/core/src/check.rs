//! Named pass/fail outcomes shared by catalog validation and the reports.

use serde::Serialize;

use crate::error::GeomError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    /// Precondition of the check not met; neither pass nor fail.
    Skip,
    Fail,
    /// The computation behind the check raised a numeric error.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Check {
    /// Passes when `measured <= tolerance`; NaN fails.
    pub fn at_most(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            status: if measured <= tolerance { Status::Pass } else { Status::Fail },
            measured: Some(measured),
            tolerance: Some(tolerance),
            detail: None,
        }
    }

    /// Passes when `measured > bound`.
    pub fn above(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Self {
            status: if measured > bound { Status::Pass } else { Status::Fail },
            ..Self::at_most(name, measured, bound)
        }
    }

    pub fn flag(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            measured: None,
            tolerance: None,
            detail: Some(detail.into()),
        }
    }

    pub fn skip(name: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: Status::Skip,
            measured: None,
            tolerance: None,
            detail: Some(reason.into()),
        }
    }

    /// Inapplicability becomes a skip, anything else an error.
    pub fn from_error(name: impl Into<String>, err: &GeomError) -> Self {
        let status = match err {
            GeomError::Inapplicable(_) => Status::Skip,
            _ => Status::Error,
        };
        Self {
            name: name.into(),
            status,
            measured: None,
            tolerance: None,
            detail: Some(err.to_string()),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = Some(detail.into());
        self
    }

    pub fn passed(&self) -> bool {
        matches!(self.status, Status::Pass | Status::Skip)
    }
}

/// Worst status of a set of checks.
pub fn overall(checks: &[Check]) -> Status {
    checks
        .iter()
        .map(|c| c.status)
        .filter(|s| *s != Status::Skip)
        .max()
        .unwrap_or(Status::Pass)
}
