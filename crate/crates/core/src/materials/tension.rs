use serde::{Deserialize, Serialize};

/// Membrane tension-field state.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TensionState {
    Taut,
    Wrinkled,
    Slack,
}

/// Classifies a membrane point from sorted principal stresses `s₁ ≥ s₂` and
/// strains `e₁ ≥ e₂`: taut if `s₂ > 0`, slack if `e₁ ≤ 0`, wrinkled otherwise.
pub fn classify_tension(stress: (f64, f64), strain: (f64, f64)) -> TensionState {
    debug_assert!(stress.0 >= stress.1 && strain.0 >= strain.1, "inputs must be sorted");
    if stress.1 > 0.0 {
        TensionState::Taut
    } else if strain.0 <= 0.0 {
        TensionState::Slack
    } else {
        TensionState::Wrinkled
    }
}
