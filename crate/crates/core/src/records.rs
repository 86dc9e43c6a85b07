//! Line-delimited JSON records.
//!
//! Every line is one object carrying `schema_version` and `record` next to the
//! record's own fields. Readers stream line by line and report malformed
//! lines individually instead of aborting.

use std::io::{BufRead, Write};
use std::marker::PhantomData;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::consensus::{ConsensusCluster, PassSet};
use crate::error::{Error, Result};
use crate::eval::GroundTruth;
use crate::gates::{PseudoLabel, ReasonCode, Variant};
use crate::geometry::ImageDims;
use crate::pipeline::Round;
use crate::tiling::TileSpec;

pub const SCHEMA_VERSION: u32 = 1;

/// A type that can be stored as one line.
pub trait Record: Serialize + DeserializeOwned {
    const KIND: &'static str;

    /// Semantic checks beyond what deserialization enforces.
    fn check(&self) -> Result<()> {
        Ok(())
    }
}

impl Record for PassSet {
    const KIND: &'static str = "pass_set";

    fn check(&self) -> Result<()> {
        self.validate()
    }
}

impl Record for TileSpec {
    const KIND: &'static str = "tile";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthRecord {
    pub image_id: String,
    pub dims: ImageDims,
    pub objects: Vec<GroundTruth>,
}

impl Record for GroundTruthRecord {
    const KIND: &'static str = "ground_truth";

    fn check(&self) -> Result<()> {
        if self.objects.iter().any(|g| g.class_id == 0) {
            return Err(Error::Schema("ground-truth class ids start at 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PseudoLabelRecord {
    pub image_id: String,
    pub round: Round,
    pub variant: Variant,
    pub label: PseudoLabel,
}

impl Record for PseudoLabelRecord {
    const KIND: &'static str = "pseudo_label";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterRecord {
    pub image_id: String,
    pub cluster: ConsensusCluster,
}

impl Record for ClusterRecord {
    const KIND: &'static str = "cluster";
}

/// Why a detection, or an unreadable input line, produced no output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RejectionRecord {
    pub image_id: Option<String>,
    pub pass_index: Option<usize>,
    pub detection_index: Option<usize>,
    /// 1-based input line, for schema-invalid records.
    pub line: Option<usize>,
    pub reason: ReasonCode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl Record for RejectionRecord {
    const KIND: &'static str = "rejection";
}

pub fn to_line<T: Record>(record: &T) -> Result<String> {
    let Value::Object(fields) = serde_json::to_value(record)? else {
        return Err(Error::Schema(format!("{} does not serialize to an object", T::KIND)));
    };
    let mut out = Map::new();
    out.insert("schema_version".into(), SCHEMA_VERSION.into());
    out.insert("record".into(), T::KIND.into());
    for (k, v) in fields {
        if out.contains_key(&k) {
            return Err(Error::Schema(format!("field {k} collides with the envelope")));
        }
        out.insert(k, v);
    }
    Ok(serde_json::to_string(&Value::Object(out))?)
}

pub fn from_line<T: Record>(line: &str) -> Result<T> {
    let Value::Object(mut fields) = serde_json::from_str::<Value>(line)? else {
        return Err(Error::Schema("record is not an object".into()));
    };
    match fields.remove("schema_version") {
        Some(v) if v.as_u64() == Some(SCHEMA_VERSION as u64) => {}
        Some(v) => return Err(Error::Schema(format!("unsupported schema_version {v}"))),
        None => return Err(Error::Schema("missing schema_version".into())),
    }
    match fields.remove("record") {
        Some(Value::String(k)) if k == T::KIND => {}
        Some(k) => return Err(Error::Schema(format!("expected record {}, found {k}", T::KIND))),
        None => return Err(Error::Schema("missing record type".into())),
    }
    let record: T = serde_json::from_value(Value::Object(fields))?;
    record.check()?;
    Ok(record)
}

pub struct RecordWriter<W: Write> {
    inner: W,
    written: usize,
}

impl<W: Write> RecordWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, written: 0 }
    }

    pub fn write<T: Record>(&mut self, record: &T) -> Result<()> {
        let line = to_line(record)?;
        self.inner.write_all(line.as_bytes())?;
        self.inner.write_all(b"\n")?;
        self.written += 1;
        Ok(())
    }

    pub fn written(&self) -> usize {
        self.written
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner.flush()?;
        Ok(self.inner)
    }
}

/// A line that failed to parse or validate.
#[derive(Debug)]
pub struct BadLine {
    pub line: usize,
    pub error: Error,
}

/// Streams records of one kind; blank lines are skipped.
pub struct RecordReader<R, T> {
    lines: std::io::Lines<R>,
    line_no: usize,
    _kind: PhantomData<T>,
}

impl<R: BufRead, T: Record> RecordReader<R, T> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            _kind: PhantomData,
        }
    }
}

impl<R: BufRead, T: Record> Iterator for RecordReader<R, T> {
    type Item = std::result::Result<T, BadLine>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(BadLine {
                        line: self.line_no,
                        error: e.into(),
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(from_line(&line).map_err(|error| BadLine {
                line: self.line_no,
                error,
            }));
        }
    }
}

/// Reads every record, collecting bad lines separately.
pub fn read_all<R: BufRead, T: Record>(reader: R) -> (Vec<T>, Vec<BadLine>) {
    let mut good = Vec::new();
    let mut bad = Vec::new();
    for item in RecordReader::<R, T>::new(reader) {
        match item {
            Ok(r) => good.push(r),
            Err(b) => bad.push(b),
        }
    }
    (good, bad)
}
