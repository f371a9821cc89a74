//! Data-stream emitters.
//!
//! CSV uses `.` as the decimal separator and 17 significant digits, enough
//! for every double to round-trip; JSON goes through serde with shortest
//! round-trip number formatting. Both are byte-deterministic for a given
//! payload.

use crate::error::{Error, Result};
use serde::Serialize;

/// A double rendered with 17 significant digits in scientific notation.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Assemble a CSV document from a header and rows of pre-rendered cells.
pub fn csv_document(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut doc = String::new();
    doc.push_str(&header.join(","));
    doc.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        doc.push_str(&row.join(","));
        doc.push('\n');
    }
    doc
}

/// Pretty-printed JSON document with a trailing newline.
pub fn json_document<T: Serialize>(value: &T) -> Result<String> {
    let mut doc = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Degenerate(format!("serialization failed: {e}")))?;
    doc.push('\n');
    Ok(doc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_render_with_seventeen_significant_digits() {
        assert_eq!(fmt_f64(1.0), "1.0000000000000000e0");
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
        let third = 1.0f64 / 3.0;
        let rendered = fmt_f64(third);
        assert_eq!(rendered.parse::<f64>().unwrap(), third);
    }

    #[test]
    fn csv_layout_is_header_then_rows() {
        let doc = csv_document(
            &["a", "b"],
            &[vec!["1".into(), "2".into()], vec!["3".into(), "4".into()]],
        );
        assert_eq!(doc, "a,b\n1,2\n3,4\n");
    }

    #[test]
    fn json_document_ends_with_newline() {
        #[derive(Serialize)]
        struct Tiny {
            x: f64,
        }
        let doc = json_document(&Tiny { x: 0.5 }).unwrap();
        assert!(doc.starts_with('{'));
        assert!(doc.ends_with("}\n"));
    }
}
