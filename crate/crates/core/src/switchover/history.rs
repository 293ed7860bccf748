//! Append-only suggestion history, one JSON object per state transition.

use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExecutionReport, SuggestionId, SuggestionState};
use crate::chain::ChainId;
use crate::selection::RankingResult;
use crate::time::{DateRange, Timestamp};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub seq: u64,
    pub at: Timestamp,
    pub suggestion: SuggestionId,
    pub from: ChainId,
    pub to: ChainId,
    pub state: SuggestionState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transfer_range: Option<DateRange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<ExecutionReport>,
    /// The ranking that triggered the suggestion; only on the first entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<RankingResult>,
}

/// History kept in memory and, optionally, appended to a file.
#[derive(Debug, Default)]
pub struct HistoryLog {
    path: Option<PathBuf>,
    out: Option<BufWriter<File>>,
    entries: Vec<HistoryEntry>,
}

impl HistoryLog {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens `path` for appending, creating it if needed.
    pub fn open(path: &Path) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(HistoryLog {
            path: Some(path.to_path_buf()),
            out: Some(BufWriter::new(file)),
            entries: Vec::new(),
        })
    }

    /// Creates `path`, replacing any earlier content.
    pub fn create(path: &Path) -> io::Result<Self> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let file = File::create(path)?;
        Ok(HistoryLog {
            path: Some(path.to_path_buf()),
            out: Some(BufWriter::new(file)),
            entries: Vec::new(),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn append(&mut self, entry: HistoryEntry) -> io::Result<()> {
        if let Some(out) = self.out.as_mut() {
            serde_json::to_writer(&mut *out, &entry)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
        self.entries.push(entry);
        Ok(())
    }

    pub fn entries(&self) -> &[HistoryEntry] {
        &self.entries
    }

    pub fn read(path: &Path) -> io::Result<Vec<HistoryEntry>> {
        let reader = BufReader::new(File::open(path)?);
        reader
            .lines()
            .filter(|l| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
            .map(|l| {
                let l = l?;
                serde_json::from_str(&l).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
            })
            .collect()
    }
}
