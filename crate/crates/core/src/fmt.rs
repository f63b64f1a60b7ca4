//! Number formatting shared by every text output.

/// Formatting rule recorded in result metadata.
pub const FLOAT_FORMAT_RULE: &str = "shortest round-trip decimal (Rust f64 Display)";

/// Shortest decimal representation that parses back to the same `f64`.
pub fn float(x: f64) -> String {
    if x == 0.0 {
        // normalise -0
        "0".to_string()
    } else {
        format!("{x}")
    }
}
