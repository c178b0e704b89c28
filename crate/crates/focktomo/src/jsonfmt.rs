//! JSON serialization with full-precision floats.
//!
//! Report and matrix files are consumed by external tools and compared
//! byte-for-byte in reproducibility checks, so every f64 is written in a fixed
//! scientific format with 17 significant digits (exact round-trip).

use std::io;

use serde::Serialize;
use serde_json::ser::{Formatter, Serializer};

use crate::error::{Error, Result};

struct FullPrecision;

impl Formatter for FullPrecision {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        debug_assert!(value.is_finite(), "non-finite value in JSON output");
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W>(&mut self, writer: &mut W, value: f32) -> io::Result<()>
    where
        W: ?Sized + io::Write,
    {
        debug_assert!(value.is_finite(), "non-finite value in JSON output");
        write!(writer, "{value:.8e}")
    }
}

/// Serialize to a JSON string with full-precision floats.
pub fn to_string<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = Serializer::with_formatter(&mut buf, FullPrecision);
    value
        .serialize(&mut ser)
        .map_err(|e| Error::domain(format!("JSON serialization failed: {e}")))?;
    String::from_utf8(buf).map_err(|e| Error::domain(format!("non-UTF8 JSON output: {e}")))
}

/// Same as [`to_string`] but with a trailing newline, for file output.
pub fn to_file_string<T: Serialize>(value: &T) -> Result<String> {
    Ok(to_string(value)? + "\n")
}
