//! Plain-text ELBO diagnostics: one `index elbo delta` record per
//! iteration (delta is `NA` on the first), then `stop <reason>`.

use std::fmt::Write as _;
use std::path::Path;

use crate::gmm::ElboTrace;
use crate::{Error, Result};

pub fn format_diagnostics(trace: &ElboTrace) -> String {
    let mut out = String::new();
    for (i, v) in trace.values.iter().enumerate() {
        match i.checked_sub(1).and_then(|j| trace.deltas.get(j)) {
            Some(d) => writeln!(out, "{} {v:.16e} {d:.16e}", i + 1),
            None => writeln!(out, "{} {v:.16e} NA", i + 1),
        }
        .expect("writing to a String");
    }
    writeln!(out, "stop {}", trace.stopped_because.as_str()).expect("writing to a String");
    out
}

pub fn write_diagnostics(trace: &ElboTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_diagnostics(trace)).map_err(|e| Error::io(path, e))
}
