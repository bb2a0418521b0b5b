//! JSON encoding of sweep reports: one document, floats at 17 significant
//! digits so that parsing restores every value bit for bit.

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::conjecture::ConjectureReport;
use crate::error::{RabiError, Result};

/// Pretty formatter that prints every float as `d.dddddddddddddddde±x`.
pub struct FixedDigits<'a> {
    inner: PrettyFormatter<'a>,
}

impl Default for FixedDigits<'_> {
    fn default() -> Self {
        Self { inner: PrettyFormatter::with_indent(b"  ") }
    }
}

/// 17 significant digits in scientific notation.
pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_f64(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Serializes any value with [`FixedDigits`]; trailing newline included.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedDigits::default());
    value.serialize(&mut ser).map_err(|e| RabiError::InvalidInput(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn report_serialize(report: &ConjectureReport) -> Result<Vec<u8>> {
    to_json_bytes(report)
}

fn byte_offset(bytes: &[u8], line: usize, column: usize) -> usize {
    let line_start: usize = bytes.split(|&b| b == b'\n').take(line.saturating_sub(1)).map(|l| l.len() + 1).sum();
    (line_start + column.saturating_sub(1)).min(bytes.len())
}

pub fn report_parse(bytes: &[u8]) -> Result<ConjectureReport> {
    serde_json::from_slice(bytes).map_err(|e| {
        let (line, column) = (e.line(), e.column());
        RabiError::Parse { line, column, offset: byte_offset(bytes, line, column), message: e.to_string() }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conjecture::{sweep, PointStatus, SweepConfig};

    fn small_report() -> ConjectureReport {
        sweep(&SweepConfig::new(vec![0.4, 1.1], vec![0.3], 3)).unwrap()
    }

    #[test]
    fn round_trip_is_lossless() {
        let r = small_report();
        let bytes = report_serialize(&r).unwrap();
        let back = report_parse(&bytes).unwrap();
        assert_eq!(back, r);
        assert_eq!(report_serialize(&back).unwrap(), bytes);
        let text = String::from_utf8(bytes).unwrap();
        for key in ["\"config\"", "\"points\"", "\"summary\"", "\"version\"", "\"censuses\"", "\"zeros\""] {
            assert!(text.contains(key), "{key}");
        }
        assert!(text.contains("\"status\": \"OK\""));
    }

    #[test]
    fn floats_use_seventeen_digits() {
        assert_eq!(format_f64(0.7), "6.9999999999999996e-1");
        assert_eq!(format_f64(-2.0), "-2.0000000000000000e0");
        let v: f64 = "6.9999999999999996e-1".parse().unwrap();
        assert_eq!(v, 0.7);
    }

    #[test]
    fn truncated_input_names_offset() {
        let bytes = report_serialize(&small_report()).unwrap();
        let cut = &bytes[..bytes.len() / 2];
        match report_parse(cut) {
            Err(RabiError::Parse { offset, line, .. }) => {
                assert!(line > 1);
                assert!(offset <= cut.len() && offset > cut.len() / 2);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn errored_point_survives_round_trip() {
        let mut r = small_report();
        let p = &mut r.points[1];
        p.status = PointStatus::Errored;
        p.error = Some("NonConvergence after 2000 terms".into());
        p.censuses.clear();
        p.exceptional.clear();
        p.predicate = None;
        let back = report_parse(&report_serialize(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.points[1].error.as_deref(), Some("NonConvergence after 2000 terms"));
    }
}
