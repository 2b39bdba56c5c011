//! Deterministic number formatting and CSV assembly.

/// Shortest decimal that round-trips to the same `f64`.
///
/// Plain notation in `[1e-4, 1e15)`, exponent notation elsewhere; both are
/// exact round trips, so equal values always print identically.
pub fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let a = v.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// Header plus rows, comma separated, LF line endings.
pub struct Csv {
    text: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Self {
            text,
            columns: header.len(),
        }
    }

    pub fn row(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.columns, "CSV row width");
        let cells: Vec<String> = values.iter().map(|v| fmt_num(*v)).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    /// Row whose leading cells are text.
    pub fn mixed_row(&mut self, labels: &[&str], values: &[f64]) {
        assert_eq!(labels.len() + values.len(), self.columns, "CSV row width");
        let mut cells: Vec<String> = labels.iter().map(|s| s.to_string()).collect();
        cells.extend(values.iter().map(|v| fmt_num(*v)));
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    /// Row of preformatted cells.
    pub fn text_row(&mut self, cells: &[String]) {
        assert_eq!(cells.len(), self.columns, "CSV row width");
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}
