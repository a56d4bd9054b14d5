//! TSV assembly and number formatting for report files.

/// Scientific notation with three significant digits, e.g. `4.97e0`,
/// `-1.07e0`, `1.24e-1`.
pub fn fmt_sci(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    format!("{x:.2e}")
}

/// UTF-8 TSV with LF line endings and a header row.
pub fn tsv(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&headers.join("\t"));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), headers.len());
        out.push_str(&row.join("\t"));
        out.push('\n');
    }
    out
}
