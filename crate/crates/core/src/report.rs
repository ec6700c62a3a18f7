//! CSV and JSON emission for diagnostics. Output is locale-independent:
//! `.` decimals, `,` separators, LF line endings, UTF-8.

use serde::Serialize;

use crate::diagnostics::{ClusteredCoords, JsMatrix};
use crate::error::{Error, Result};

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner()
        .map_err(|e| Error::Validation(format!("csv encoding failed: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv encoding failed: {e}"))
}

/// `content,style,replicate,c1..cK`, one row per sample.
pub fn coords_csv(cc: &ClusteredCoords) -> Result<Vec<u8>> {
    let mut w = writer();
    let mut header = vec!["content".to_string(), "style".into(), "replicate".into()];
    header.extend((1..=cc.k()).map(|i| format!("c{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for (i, c) in cc.coords().iter().enumerate() {
        let mut row = vec![
            cc.content_of(i).to_string(),
            cc.style_of(i).to_string(),
            cc.replicate_of(i).to_string(),
        ];
        row.extend(c.iter().map(|v| v.to_string()));
        w.write_record(&row).map_err(csv_err)?;
    }
    finish(w)
}

/// Square table with a header row and a leading column of style labels.
pub fn js_matrix_csv(m: &JsMatrix) -> Result<Vec<u8>> {
    let mut w = writer();
    let mut header = vec!["style".to_string()];
    header.extend(m.labels.iter().cloned());
    w.write_record(&header).map_err(csv_err)?;
    for (label, row) in m.labels.iter().zip(&m.values) {
        let mut rec = vec![label.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err)?;
    }
    finish(w)
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::Validation(format!("json encoding failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coords_layout() {
        let cc = ClusteredCoords::from_labeled(
            vec![vec![0.5, -1.0], vec![1e-7, 2.0]],
            &["Chinese, Sichuan", "Thai"],
            &["chicken", "beef"],
        )
        .unwrap();
        let text = String::from_utf8(coords_csv(&cc).unwrap()).unwrap();
        assert_eq!(
            text,
            "content,style,replicate,c1,c2\nchicken,\"Chinese, Sichuan\",0,0.5,-1\nbeef,Thai,0,0.0000001,2\n"
        );
    }

    #[test]
    fn js_layout() {
        let m = JsMatrix {
            labels: vec!["A".into(), "B".into()],
            values: vec![vec![0.0, 0.25], vec![0.25, 0.0]],
            bins: 32,
            smoothing: 1e-9,
            histogram_dims: 2,
        };
        let text = String::from_utf8(js_matrix_csv(&m).unwrap()).unwrap();
        assert_eq!(text, "style,A,B\nA,0,0.25\nB,0.25,0\n");
    }
}
