//! File output for finished runs.
//!
//! CSV: one `<prefix>_<variant>_<observable>.csv` per series with header
//! `lambda_t,<observable>`, one `<prefix>_<variant>_wigner_t<time>.csv` per
//! grid in long form `x,p,w`, and `<prefix>_manifest.json`. JSON: the whole
//! [`RunOutput`] in `<prefix>.json`. Floats use Rust's shortest round-trip
//! formatting, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::RunOutput;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Validation(format!("unknown output format `{other}` (csv or json)"))),
        }
    }
}

/// Writes `out` under `prefix` and returns the files written, in order.
pub fn emit(out: &RunOutput, prefix: &Path, format: Format) -> Result<Vec<PathBuf>> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut written = Vec::new();
    match format {
        Format::Json => {
            let path = with_suffix(prefix, ".json");
            write(&path, to_json(out)?)?;
            written.push(path);
        }
        Format::Csv => {
            for rec in &out.series {
                let path = with_suffix(prefix, &format!("_{}_{}.csv", rec.variant, rec.observable.name()));
                let mut text = format!("lambda_t,{}\n", rec.observable.name());
                for (t, v) in rec.series.times.iter().zip(&rec.series.values) {
                    writeln!(text, "{t:?},{v:?}").expect("writing to a String");
                }
                write(&path, text)?;
                written.push(path);
            }
            for rec in &out.wigner {
                let path = with_suffix(prefix, &format!("_{}_wigner_t{:?}.csv", rec.variant, rec.time));
                let g = &rec.grid;
                let mut text = String::from("x,p,w\n");
                for i in 0..g.grid.nx {
                    for j in 0..g.grid.np {
                        writeln!(text, "{:?},{:?},{:?}", g.grid.x(i), g.grid.p(j), g.value(i, j))
                            .expect("writing to a String");
                    }
                }
                write(&path, text)?;
                written.push(path);
            }
            let path = with_suffix(prefix, "_manifest.json");
            let text = serde_json::to_string_pretty(&out.manifest).map_err(|e| Error::Config(e.to_string()))?;
            write(&path, text + "\n")?;
            written.push(path);
        }
    }
    Ok(written)
}

pub(crate) fn to_json(out: &RunOutput) -> Result<String> {
    serde_json::to_string_pretty(out)
        .map(|s| s + "\n")
        .map_err(|e| Error::Config(e.to_string()))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, text: String) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}
