//! Locale-independent number formatting for CSV and JSON outputs.

/// Scientific notation with 9 significant digits, e.g. `1.75000000e-20`.
pub fn sci(x: f64) -> String {
    format!("{x:.8e}")
}

/// Rounds to 9 significant digits (the value [`sci`] would print).
pub fn round_sig9(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    sci(x).parse().unwrap_or(x)
}
