use serde::{Deserialize, Serialize};

/// Outcome of an exhaustive (or explicitly partial) exact check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub claim: String,
    pub range: String,
    pub pass: bool,
    pub worst_witness: Option<Witness>,
    /// `false` when the range was sampled rather than scanned completely.
    #[serde(default = "exhaustive_default")]
    pub exhaustive: bool,
    #[serde(default)]
    pub checked: u64,
}

fn exhaustive_default() -> bool {
    true
}

/// The point of the scanned range closest to violating the claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub at: String,
    /// Claim-specific margin; a value on the wrong side of 1 means failure.
    pub ratio: f64,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate serializes")
    }
}
