//! Shared text formatting for CSV outputs.

/// Formats a value with 17 significant digits so it round-trips exactly.
pub fn fmt_value(v: f64) -> String {
    if v == 0.0 {
        // normalise -0.0 so identical fields print identically
        return "0".to_string();
    }
    format!("{v:.16e}")
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_value).unwrap_or_default()
}
