//! JSON helpers: matrices are written row-major with 17 significant digits.

use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::value::RawValue;

use super::Failure;
use crate::bochner::SecondFundamentalForm;

fn number(v: f64) -> String {
    if v == 0.0 {
        // keeps -0.0 out of reports
        "0.0000000000000000e0".to_string()
    } else {
        format!("{v:.16e}")
    }
}

pub(crate) fn matrix_text(m: &DMatrix<f64>) -> String {
    let rows: Vec<String> = (0..m.nrows())
        .map(|i| {
            let cols: Vec<String> = (0..m.ncols()).map(|j| number(m[(i, j)])).collect();
            format!("[{}]", cols.join(", "))
        })
        .collect();
    format!("[{}]", rows.join(", "))
}

pub(crate) fn beta_json(beta: &SecondFundamentalForm) -> Box<RawValue> {
    let ops: Vec<String> = beta.operators().iter().map(|a| matrix_text(a.matrix())).collect();
    RawValue::from_string(format!("[{}]", ops.join(", "))).expect("matrix text is valid JSON")
}

pub(crate) fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(value)
        .map(|mut s| {
            s.push('\n');
            s
        })
        .map_err(|e| Failure::other(format!("cannot serialize report: {e}")))
}

/// Parses JSON input, reporting the position of syntax errors.
pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> Result<T, Failure> {
    serde_json::from_str(text).map_err(|e| {
        Failure::input(format!(
            "malformed {what} at line {}, column {}: {e}",
            e.line(),
            e.column()
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        let m = DMatrix::from_row_slice(2, 2, &[0.1, -1.0 / 3.0, -0.0, 2.0]);
        let text = matrix_text(&m);
        let back: Vec<Vec<f64>> = serde_json::from_str(&text).unwrap();
        assert_eq!(back[0][0], 0.1);
        assert_eq!(back[0][1], -1.0 / 3.0);
        assert!(text.contains("1.0000000000000001e-1"));
        assert!(!text.contains("-0.0"));
    }
}
