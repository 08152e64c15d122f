//! Field formatting shared by the delimited-text writers and readers.

use crate::error::{Error, Result};

/// Shortest decimal representation that parses back to the same `f64`;
/// empty for missing.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn opt_field(s: &str, ctx: &impl Fn() -> String) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::format(format!("{}: bad number '{s}'", ctx())))
}

pub fn req_field(s: &str, ctx: &impl Fn() -> String) -> Result<f64> {
    opt_field(s, ctx)?.ok_or_else(|| Error::format(format!("{}: missing required value", ctx())))
}

/// Writes `contents` to `path` through a temporary sibling and a rename, so
/// readers never observe a partially written file.
pub fn write_atomic(path: &std::path::Path, contents: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp~");
    std::fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}
