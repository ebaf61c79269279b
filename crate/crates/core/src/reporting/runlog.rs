//! Line-delimited JSON run logs.
//!
//! The first line is `{"run": <configuration>}`; every further line is one
//! [`EvaluationRecord`]. Floats are written in shortest round-trip form and
//! parsed back exactly, so a log survives `parse(to_string(log))` bit for
//! bit.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::evolution::EvaluationRecord;

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    run: Value,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunLog {
    pub header: Option<Value>,
    pub records: Vec<EvaluationRecord>,
}

impl RunLog {
    pub fn new(header: Option<Value>, records: Vec<EvaluationRecord>) -> Self {
        Self { header, records }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut log = RunLog::default();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let value: Value = serde_json::from_str(line).map_err(|e| Error::RunLog {
                line: line_no,
                message: e.to_string(),
            })?;
            if let Some(run) = value.get("run") {
                if log.header.is_some() || !log.records.is_empty() {
                    return Err(Error::RunLog {
                        line: line_no,
                        message: "header must be the first line".into(),
                    });
                }
                log.header = Some(run.clone());
                continue;
            }
            let rec: EvaluationRecord = serde_json::from_value(value).map_err(|e| Error::RunLog {
                line: line_no,
                message: e.to_string(),
            })?;
            log.records.push(rec);
        }
        Ok(log)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        if let Some(run) = &self.header {
            out.push_str(&serde_json::to_string(&Header { run: run.clone() })?);
            out.push('\n');
        }
        for rec in &self.records {
            out.push_str(&serde_json::to_string(rec)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn ok_records(&self) -> Vec<&EvaluationRecord> {
        self.records.iter().filter(|r| r.is_ok()).collect()
    }
}

/// Appends records to a log file as they arrive.
pub struct RunLogWriter {
    out: BufWriter<File>,
}

impl RunLogWriter {
    pub fn create(path: impl AsRef<Path>, run: &impl Serialize) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        let header = Header {
            run: serde_json::to_value(run)?,
        };
        serde_json::to_writer(&mut out, &header)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(Self { out })
    }

    pub fn append(&mut self, rec: &EvaluationRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, rec)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }
}
