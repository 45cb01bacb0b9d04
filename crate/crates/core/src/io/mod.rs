//! Configuration, report emission and subcommand orchestration.
//!
//! Every float written to JSON or CSV uses 17 significant digits in
//! scientific notation.

mod config;
mod run;

pub use config::{
    parse_config, BlobSpec, DomainChoice, FieldInit, RingSpec, RunConfig, TracerSpec, VerifyConfig,
    CHECKS, DEFAULT_QUAD_ORDER, HARD_CHECKS,
};
pub use run::{default_samples, map_diag_rows, run, Command, MapDiagRow, MAP_DIAG_TOL};

use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::ser::{CompactFormatter, Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::numerics::fmt_sci;

/// JSON formatter that prints floats with [`fmt_sci`] and delegates layout.
struct SciFormatter<F>(F);

macro_rules! delegate {
    ($($name:ident $(, $arg:ident: $ty:ty)*);* $(;)?) => {
        $(
            fn $name<W: ?Sized + Write>(&mut self, w: &mut W $(, $arg: $ty)*) -> std::io::Result<()> {
                self.0.$name(w $(, $arg)*)
            }
        )*
    };
}

impl<F: Formatter> Formatter for SciFormatter<F> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(fmt_sci(value).as_bytes())
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate! {
        begin_array;
        end_array;
        begin_array_value, first: bool;
        end_array_value;
        begin_object;
        end_object;
        begin_object_key, first: bool;
        end_object_key;
        begin_object_value;
        end_object_value;
    }
}

fn to_json_with<F: Formatter, T: Serialize>(value: &T, fmt: F) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, SciFormatter(fmt));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

/// Indented JSON with full-precision floats.
pub fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    to_json_with(value, PrettyFormatter::with_indent(b"  "))
}

/// Single-line JSON with full-precision floats.
pub fn to_json_compact<T: Serialize>(value: &T) -> Result<String> {
    to_json_with(value, CompactFormatter)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = to_json_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
