use std::fs;
use std::path::{Path, PathBuf};

use ergoscope_core::report::{format_float, CsvTable};
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};
use serde_json::{json, Value};

use crate::CliError;

/// Output directory plus the metadata stamped on every file.
#[derive(Debug, Clone)]
pub struct Output {
    dir: PathBuf,
    metadata: Vec<(String, String)>,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn new(dir: &Path, command: &str, config_hash: &str, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Output {
            dir: dir.to_path_buf(),
            metadata: vec![
                ("command".into(), command.into()),
                ("config_hash".into(), config_hash.into()),
                ("seed".into(), seed.to_string()),
                ("version".into(), env!("CARGO_PKG_VERSION").into()),
            ],
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn into_written(self) -> Vec<PathBuf> {
        self.written
    }

    pub fn csv(&mut self, name: &str, table: &CsvTable, extra: &[(&str, String)]) -> Result<PathBuf, CliError> {
        let mut meta = self.metadata.clone();
        meta.extend(extra.iter().map(|(k, v)| (k.to_string(), v.clone())));
        let path = self.dir.join(name);
        fs::write(&path, table.to_string_with(&meta))?;
        self.written.push(path.clone());
        Ok(path)
    }

    /// Writes `{"metadata": {...}, "<key>": body}` with stable key order.
    pub fn json<T: Serialize>(
        &mut self,
        name: &str,
        key: &str,
        body: &T,
        extra: &[(&str, Value)],
    ) -> Result<PathBuf, CliError> {
        let mut meta = serde_json::Map::new();
        for (k, v) in &self.metadata {
            meta.insert(k.clone(), json!(v));
        }
        for (k, v) in extra {
            meta.insert(k.to_string(), v.clone());
        }
        let mut doc = serde_json::Map::new();
        doc.insert("metadata".into(), Value::Object(meta));
        doc.insert(
            key.into(),
            serde_json::to_value(body).map_err(|e| CliError::Validation(format!("serializing {name}: {e}")))?,
        );
        let text = to_fixed_json(&Value::Object(doc));
        let path = self.dir.join(name);
        fs::write(&path, text + "\n")?;
        self.written.push(path.clone());
        Ok(path)
    }
}

/// Pretty JSON with every float at 17 significant digits. serde_json maps
/// non-finite floats to `null` before the formatter sees them.
struct FixedFloats(PrettyFormatter<'static>);

impl Formatter for FixedFloats {
    fn write_f64<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f64) -> std::io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }
    fn write_f32<W: ?Sized + std::io::Write>(&mut self, w: &mut W, value: f32) -> std::io::Result<()> {
        self.write_f64(w, value as f64)
    }
    fn begin_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + std::io::Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn to_fixed_json(value: &Value) -> String {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, FixedFloats(PrettyFormatter::new()));
    value.serialize(&mut ser).expect("JSON value serializes");
    String::from_utf8(buf).expect("serde_json writes UTF-8")
}
