//! Text formatting shared by every CSV writer.

/// Scientific notation with 17 significant digits; round-trips any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
