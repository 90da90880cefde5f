use serde::Serialize;

/// Where a reported number comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Evaluated from an explicit formula.
    ClosedForm,
    /// Computed numerically from concrete data (eigen-solve, enumeration, iteration).
    Measured,
    /// A guaranteed bound, not a point value.
    Certificate,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed_form",
            Provenance::Measured => "measured",
            Provenance::Certificate => "certificate",
        }
    }
}
