//! Append-only event log on disk, one JSON document per line.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use multiballot_core::board::BoardEvent;

pub const LOG_FILE: &str = "events.jsonl";

/// Where an injected crash interrupts an append.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CrashPoint {
    BeforeWrite,
    /// Half of the line reaches the disk.
    MidWrite,
    AfterWriteBeforeAck,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("log i/o: {0}")]
    Io(#[from] io::Error),
    #[error("log line {line} is corrupt: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("simulated crash at {0:?}")]
    Crashed(CrashPoint),
}

#[derive(Debug)]
pub struct LogStore {
    path: PathBuf,
    file: File,
    crash: Option<CrashPoint>,
}

/// What recovery found besides the events themselves.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Recovery {
    pub torn_bytes: u64,
}

impl LogStore {
    /// Opens (or creates) the log in `dir`. A partially written last line is
    /// cut off; any other unparsable line is an error.
    pub fn open(dir: &Path) -> Result<(Self, Vec<BoardEvent>, Recovery), StoreError> {
        fs::create_dir_all(dir)?;
        let path = dir.join(LOG_FILE);
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(&path)?;
        let mut bytes = Vec::new();
        file.read_to_end(&mut bytes)?;

        let mut events = Vec::new();
        let mut good = 0usize;
        let mut rest = &bytes[..];
        let mut line_no = 0;
        while let Some(nl) = rest.iter().position(|b| *b == b'\n') {
            line_no += 1;
            let line = &rest[..nl];
            let ev: BoardEvent = serde_json::from_slice(line).map_err(|e| StoreError::Corrupt {
                line: line_no,
                reason: e.to_string(),
            })?;
            events.push(ev);
            good += nl + 1;
            rest = &rest[nl + 1..];
        }
        let torn = (bytes.len() - good) as u64;
        if torn > 0 {
            file.set_len(good as u64)?;
            file.sync_all()?;
        }
        file.seek(SeekFrom::End(0))?;
        Ok((
            LogStore { path, file, crash: None },
            events,
            Recovery { torn_bytes: torn },
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Arms a crash for the next append.
    pub fn inject_crash(&mut self, point: CrashPoint) {
        self.crash = Some(point);
    }

    /// Durably appends one event. Returns only after the data is synced.
    pub fn append(&mut self, event: &BoardEvent) -> Result<(), StoreError> {
        let mut line = serde_json::to_vec(event).expect("events serialize");
        line.push(b'\n');
        match self.crash.take() {
            None => {
                self.file.write_all(&line)?;
                self.file.sync_data()?;
                Ok(())
            }
            Some(CrashPoint::BeforeWrite) => Err(StoreError::Crashed(CrashPoint::BeforeWrite)),
            Some(CrashPoint::MidWrite) => {
                self.file.write_all(&line[..line.len() / 2])?;
                self.file.sync_data()?;
                Err(StoreError::Crashed(CrashPoint::MidWrite))
            }
            Some(CrashPoint::AfterWriteBeforeAck) => {
                self.file.write_all(&line)?;
                self.file.sync_data()?;
                Err(StoreError::Crashed(CrashPoint::AfterWriteBeforeAck))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use multiballot_core::board::{Board, BoardConfig, Envelope, Message};
    use multiballot_core::auth::AuthKeypair;
    use multiballot_core::ids::TallierId;
    use multiballot_core::TestGroup;

    fn genesis_event() -> BoardEvent {
        let k = AuthKeypair::from_seed([7; 32]);
        let cfg = BoardConfig {
            group: "schnorr-test".into(),
            talliers: vec![(TallierId::new("T1"), k.public())],
            roll: k.public(),
            hc: k.public(),
        };
        let b = Board::<TestGroup>::new();
        b.next_event(&Envelope::new(&Message::<TestGroup>::Genesis(cfg)))
    }

    #[test]
    fn torn_tail_is_truncated() {
        let dir = tempfile::tempdir().unwrap();
        let ev = genesis_event();
        {
            let (mut s, evs, _) = LogStore::open(dir.path()).unwrap();
            assert!(evs.is_empty());
            s.append(&ev).unwrap();
            s.inject_crash(CrashPoint::MidWrite);
            assert!(s.append(&ev).is_err());
        }
        let (_, evs, rec) = LogStore::open(dir.path()).unwrap();
        assert_eq!(evs, vec![ev]);
        assert!(rec.torn_bytes > 0);
        let (_, _, rec) = LogStore::open(dir.path()).unwrap();
        assert_eq!(rec.torn_bytes, 0);
    }

    #[test]
    fn corrupt_middle_line_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(LOG_FILE), b"{not json}\n").unwrap();
        assert!(matches!(LogStore::open(dir.path()), Err(StoreError::Corrupt { line: 1, .. })));
    }
}
