use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::TemplateKind;

/// One request/response pair, accepted or not.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub period: usize,
    pub agent: Option<usize>,
    pub kind: TemplateKind,
    pub backend: String,
    pub latency_ms: f64,
    pub accepted: bool,
    pub reason: Option<String>,
    pub raw: String,
}

/// Append-only JSON-lines audit file.
pub struct AuditLog {
    out: Mutex<BufWriter<File>>,
}

impl AuditLog {
    pub fn create(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self {
            out: Mutex::new(BufWriter::new(file)),
        })
    }

    pub fn append(&self, record: &AuditRecord) {
        let mut out = self.out.lock().expect("audit lock");
        let line = serde_json::to_string(record).expect("audit record serializes");
        if let Err(e) = writeln!(out, "{line}") {
            log::error!("audit log write failed: {e}");
        }
    }

    pub fn flush(&self) -> std::io::Result<()> {
        self.out.lock().expect("audit lock").flush()
    }
}

impl Drop for AuditLog {
    fn drop(&mut self) {
        let _ = self.flush();
    }
}
