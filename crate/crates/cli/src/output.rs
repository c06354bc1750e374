//! Output files, number formatting and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::Value;
use sha2::{Digest, Sha256};

/// Formats a float with 17 significant digits, which round-trips exactly.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Pretty JSON whose floats carry 17 significant digits.
struct FullPrecision<'a>(PrettyFormatter<'a>);

impl Formatter for FullPrecision<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        w.write_all(num(v).as_bytes())
    }
    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, v: f32) -> io::Result<()> {
        self.write_f64(w, v as f64)
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes to pretty JSON with full-precision floats and a final newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("JSON serialization of plain data");
    out.push(b'\n');
    out
}

/// A CSV table held in memory.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &[String]) -> Self {
        Self {
            text: header.join(",") + "\n",
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.text.into_bytes()
    }
}

/// Column names `prefix0, prefix1, ...`.
pub fn coord_columns(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Files produced by a subcommand, in write order.
#[derive(Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn digests(&self) -> BTreeMap<String, String> {
        self.files.iter().map(|(n, b)| (n.clone(), sha256_hex(b))).collect()
    }
}

/// Where a run writes its files.
///
/// A directory holds `manifest.json`, `result.json` and CSV files. A path
/// ending in `.json` names the result file itself; the manifest and CSV files
/// then go next to it with the same stem.
#[derive(Debug, Clone)]
pub struct OutputLayout {
    dir: PathBuf,
    stem: Option<String>,
}

impl OutputLayout {
    pub fn new(out: &Path) -> Self {
        if out.extension().is_some_and(|e| e == "json") {
            let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
            let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned());
            Self { dir, stem }
        } else {
            Self {
                dir: out.to_path_buf(),
                stem: None,
            }
        }
    }

    /// Path of a logical output name such as `result.json` or `exits.csv`.
    pub fn path(&self, name: &str) -> PathBuf {
        match &self.stem {
            None => self.dir.join(name),
            Some(stem) if name == "result.json" => self.dir.join(format!("{stem}.json")),
            Some(stem) if name == "manifest.json" => self.dir.join(format!("{stem}.manifest.json")),
            Some(stem) => self.dir.join(format!("{stem}.{name}")),
        }
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> io::Result<()> {
        if !self.dir.as_os_str().is_empty() {
            fs::create_dir_all(&self.dir)?;
        }
        fs::write(self.path(name), bytes)
    }
}

/// Record of one run, sufficient to reproduce its outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Fully resolved configuration with inputs inlined.
    pub config: Value,
    pub seed: Option<u64>,
    pub threads: usize,
    pub started: String,
    pub finished: String,
    pub status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    /// SHA-256 of each output file, keyed by logical name.
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay: Option<ReplayCheck>,
}

/// Digest comparison written by `replay`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplayCheck {
    pub source: String,
    pub identical: bool,
    pub mismatched: Vec<String>,
}
