use std::path::Path;
use std::sync::{Condvar, Mutex, RwLock};
use std::time::{Duration, Instant};

use multiballot_core::board::{BallotChain, Board, BoardConfig, BoardEvent, BoardState, Envelope, Message};
use multiballot_core::codec::Digest;
use multiballot_core::group::Group;
use multiballot_core::ids::{CollectionId, VoterId};
use serde::{Deserialize, Serialize};

use crate::store::{CrashPoint, LogStore, Recovery, StoreError};

/// Longest a single events request may block.
pub const MAX_WAIT: Duration = Duration::from_secs(30);

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("recorded log does not replay: event {index}: {reason}")]
    Replay { index: u64, reason: String },
    #[error("log is empty and no genesis configuration was given")]
    NoGenesis,
    #[error("genesis configuration is for group {0}")]
    WrongGroup(String),
    #[error("service stopped after a failed append; restart it")]
    Halted,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SubmitResponse {
    Accepted { index: u64, head: Digest },
    Rejected { code: String, message: String, head: Digest },
}

impl SubmitResponse {
    pub fn is_accepted(&self) -> bool {
        matches!(self, SubmitResponse::Accepted { .. })
    }

    pub fn code(&self) -> Option<&str> {
        match self {
            SubmitResponse::Accepted { .. } => None,
            SubmitResponse::Rejected { code, .. } => Some(code),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Snapshot<G: Group> {
    pub head: Digest,
    pub height: u64,
    pub state: BoardState<G>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct ChainDocument<G: Group> {
    pub head: Digest,
    pub collection: CollectionId,
    pub voter: VoterId,
    pub chain: BallotChain<G>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventsPage {
    pub head: Digest,
    pub height: u64,
    pub from: u64,
    pub events: Vec<BoardEvent>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub group: String,
    pub head: Digest,
    pub height: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{code}: {message}")]
pub struct ReadError {
    pub code: String,
    pub message: String,
}

impl ReadError {
    fn new(code: &str, message: impl Into<String>) -> Self {
        ReadError {
            code: code.into(),
            message: message.into(),
        }
    }
}

struct Writer {
    store: LogStore,
    halted: bool,
}

/// A board behind a durable log. Writes go through one appender; reads take
/// a shared lock and therefore always see a whole committed state.
pub struct BoardService<G: Group> {
    board: RwLock<Board<G>>,
    writer: Mutex<Writer>,
    height: Mutex<u64>,
    grown: Condvar,
    recovery: Recovery,
}

impl<G: Group> BoardService<G> {
    /// Recovers the log in `dir`, replaying it through the state machine.
    /// An empty log is started with `genesis`.
    pub fn open(dir: &Path, genesis: Option<BoardConfig>) -> Result<Self, ServiceError> {
        let (store, events, recovery) = LogStore::open(dir)?;
        let board = Board::<G>::replay(&events).map_err(|(index, e)| ServiceError::Replay {
            index,
            reason: e.to_string(),
        })?;
        let height = board.state().height;
        let svc = BoardService {
            board: RwLock::new(board),
            writer: Mutex::new(Writer { store, halted: false }),
            height: Mutex::new(height),
            grown: Condvar::new(),
            recovery,
        };
        if height == 0 {
            let cfg = genesis.ok_or(ServiceError::NoGenesis)?;
            if cfg.group != G::NAME {
                return Err(ServiceError::WrongGroup(cfg.group));
            }
            let r = svc.submit(&Envelope::new(&Message::<G>::Genesis(cfg)))?;
            if let SubmitResponse::Rejected { message, .. } = r {
                return Err(ServiceError::Replay { index: 0, reason: message });
            }
        }
        Ok(svc)
    }

    pub fn recovery(&self) -> &Recovery {
        &self.recovery
    }

    /// Arms a crash for the next append; the service halts once it fires.
    pub fn inject_crash(&self, point: CrashPoint) {
        self.writer.lock().unwrap().store.inject_crash(point);
    }

    /// Validates, appends durably, then applies. A rejection leaves the log
    /// untouched. An `Err` means the outcome of this call is unknown and the
    /// service refuses further writes.
    pub fn submit(&self, envelope: &Envelope) -> Result<SubmitResponse, ServiceError> {
        let mut w = self.writer.lock().unwrap();
        if w.halted {
            return Err(ServiceError::Halted);
        }
        // Only the writer mutates the board, so the state cannot move
        // between check and commit.
        let (prepared, event) = {
            let board = self.board.read().unwrap();
            match board.check(envelope) {
                Ok(p) => (p, board.next_event(envelope)),
                Err(e) => {
                    return Ok(SubmitResponse::Rejected {
                        code: e.code().into(),
                        message: e.to_string(),
                        head: board.head(),
                    })
                }
            }
        };
        if let Err(e) = w.store.append(&event) {
            w.halted = true;
            return Err(e.into());
        }
        let mut board = self.board.write().unwrap();
        let ev = board.commit(prepared);
        debug_assert_eq!(ev.digest, event.digest);
        let resp = SubmitResponse::Accepted {
            index: event.index,
            head: event.digest,
        };
        drop(board);
        *self.height.lock().unwrap() = event.index + 1;
        self.grown.notify_all();
        Ok(resp)
    }

    pub fn snapshot(&self) -> Snapshot<G> {
        let board = self.board.read().unwrap();
        Snapshot {
            head: board.head(),
            height: board.state().height,
            state: board.state().clone(),
        }
    }

    pub fn chain(&self, collection: &CollectionId, voter: &VoterId) -> Result<ChainDocument<G>, ReadError> {
        let board = self.board.read().unwrap();
        let state = board.state();
        if !state.collections.contains_key(collection) {
            return Err(ReadError::new("UNKNOWN_COLLECTION", format!("unknown collection {collection}")));
        }
        if !state.voters.contains_key(voter) {
            return Err(ReadError::new("UNKNOWN_VOTER", format!("unknown voter {voter}")));
        }
        let chain = state.chain(voter, collection).ok_or_else(|| {
            ReadError::new("NO_BALLOT", format!("{voter} holds no ballot in {collection}"))
        })?;
        Ok(ChainDocument {
            head: board.head(),
            collection: collection.clone(),
            voter: voter.clone(),
            chain: chain.clone(),
        })
    }

    /// Events from index `from` on. With a nonzero `wait`, blocks until at
    /// least one such event exists or the wait runs out.
    pub fn events(&self, from: u64, wait: Duration) -> EventsPage {
        let wait = wait.min(MAX_WAIT);
        if !wait.is_zero() {
            let deadline = Instant::now() + wait;
            let mut h = self.height.lock().unwrap();
            while *h <= from {
                let left = deadline.saturating_duration_since(Instant::now());
                if left.is_zero() {
                    break;
                }
                h = self.grown.wait_timeout(h, left).unwrap().0;
            }
        }
        let board = self.board.read().unwrap();
        let start = (from as usize).min(board.events().len());
        EventsPage {
            head: board.head(),
            height: board.state().height,
            from,
            events: board.events()[start..].to_vec(),
        }
    }

    pub fn health(&self) -> Health {
        // Lock order is writer then board, as in submit.
        let halted = self.writer.lock().map(|w| w.halted).unwrap_or(true);
        let board = self.board.read().unwrap();
        Health {
            status: if halted { "halted" } else { "ok" }.into(),
            group: G::NAME.into(),
            head: board.head(),
            height: board.state().height,
        }
    }
}
