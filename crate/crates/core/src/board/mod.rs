//! The bulletin board: a deterministic state machine over a hash-chained
//! log of signed messages.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::auth::AuthPublicKey;
use crate::codec::{hash_canonical, hash_parts, to_canonical, Digest};
use crate::elgamal::PublicKey;
use crate::group::Group;
use crate::ids::{CollectionId, TallierId, VoterId};
use crate::tally::{PublicShare, TallyResult};
use crate::zkp::{BallotKeys, CipherPair, EncPairProof, ProofContext, TransitionProof};

mod apply;
mod message;
mod replay;

pub use apply::{init_ballots, ChainAction, Effect, Prepared};
pub use message::{
    BoardConfig, CloseCollection, Envelope, Message, MessageKind, OpenCollection, Origin, RegisterVoter,
    Signature, SignerId, UpdateEntry, UpdateSet, WhitelistMutation, WhitelistOp, PROTOCOL_VERSION,
};
pub use replay::{audit_replay, verify_chain, AuditReplay, ChainFault, ReplayFinding};

const EVENT_DOMAIN: &str = "multiballot/v1/event";
const ENTRY_DOMAIN: &str = "multiballot/v1/entry";
const STATE_DOMAIN: &str = "multiballot/v1/state";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BoardError {
    #[error("bad signature: {0}")]
    BadSignature(String),
    #[error("audit key already registered for {0}")]
    DuplicateRegistration(VoterId),
    #[error("missing co-signature of tallier {0}")]
    MissingTallierSignature(TallierId),
    #[error("collection {0} already exists")]
    DuplicateCollection(CollectionId),
    #[error("unknown collection {0}")]
    UnknownCollection(CollectionId),
    #[error("unknown voter {0}")]
    UnknownVoter(VoterId),
    #[error("update does not cover exactly the eligible collections (missing {missing:?}, extra {extra:?})")]
    IncompleteCover {
        missing: Vec<CollectionId>,
        extra: Vec<CollectionId>,
    },
    #[error("proof for entry {index} of {voter} in {collection} does not verify")]
    InvalidProof {
        collection: CollectionId,
        voter: VoterId,
        index: u64,
    },
    #[error("update built against {got}, head is {head}")]
    StaleSnapshot { head: Digest, got: Digest },
    #[error("ballot of {voter} in {collection} is frozen")]
    FrozenChain { collection: CollectionId, voter: VoterId },
    #[error("collection {0} is closed")]
    CollectionClosed(CollectionId),
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u16),
    #[error("ballot of {voter} in {collection} already exists")]
    ChainExists { collection: CollectionId, voter: VoterId },
    #[error("{voter} is not on the whitelist of {collection}")]
    NotWhitelisted { collection: CollectionId, voter: VoterId },
    #[error("{voter} is already on the whitelist of {collection}")]
    AlreadyWhitelisted { collection: CollectionId, voter: VoterId },
    #[error("{0} has no open eligible collection")]
    NothingToUpdate(VoterId),
    #[error("invalid tally: {0}")]
    InvalidTally(String),
    #[error("invalid key shares: {0}")]
    InvalidShares(String),
    #[error("board already initialized")]
    AlreadyInitialized,
    #[error("board not initialized")]
    NotInitialized,
}

impl BoardError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            BoardError::BadSignature(_) => "BAD_SIGNATURE",
            BoardError::DuplicateRegistration(_) => "DUPLICATE_REGISTRATION",
            BoardError::MissingTallierSignature(_) => "MISSING_TALLIER_SIGNATURE",
            BoardError::DuplicateCollection(_) => "DUPLICATE_COLLECTION",
            BoardError::UnknownCollection(_) => "UNKNOWN_COLLECTION",
            BoardError::UnknownVoter(_) => "UNKNOWN_VOTER",
            BoardError::IncompleteCover { .. } => "INCOMPLETE_COVER",
            BoardError::InvalidProof { .. } => "INVALID_PROOF",
            BoardError::StaleSnapshot { .. } => "STALE_SNAPSHOT",
            BoardError::FrozenChain { .. } => "FROZEN_CHAIN",
            BoardError::CollectionClosed(_) => "COLLECTION_CLOSED",
            BoardError::Malformed(_) => "MALFORMED",
            BoardError::UnsupportedVersion(_) => "UNSUPPORTED_VERSION",
            BoardError::ChainExists { .. } => "CHAIN_EXISTS",
            BoardError::NotWhitelisted { .. } => "NOT_WHITELISTED",
            BoardError::AlreadyWhitelisted { .. } => "ALREADY_WHITELISTED",
            BoardError::NothingToUpdate(_) => "NOTHING_TO_UPDATE",
            BoardError::InvalidTally(_) => "INVALID_TALLY",
            BoardError::InvalidShares(_) => "INVALID_SHARES",
            BoardError::AlreadyInitialized => "ALREADY_INITIALIZED",
            BoardError::NotInitialized => "NOT_INITIALIZED",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollectionStatus {
    Open,
    Closed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Collection<G: Group> {
    pub id: CollectionId,
    pub title: String,
    pub public_key: PublicKey<G>,
    pub shares: Vec<PublicShare<G>>,
    pub status: CollectionStatus,
    pub opened_at: u64,
    pub closed_at: Option<u64>,
}

impl<G: Group> Collection<G> {
    pub fn is_open(&self) -> bool {
        self.status == CollectionStatus::Open
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct AuditKey<G: Group> {
    pub key: PublicKey<G>,
    pub registered_at: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VoterRecord<G: Group> {
    pub id: VoterId,
    pub auth_key: AuthPublicKey,
    /// Append-only; the last key is active.
    pub audit_keys: Vec<AuditKey<G>>,
}

impl<G: Group> VoterRecord<G> {
    pub fn active_epoch(&self) -> u32 {
        (self.audit_keys.len() - 1) as u32
    }

    pub fn active_key(&self) -> &PublicKey<G> {
        &self.audit_keys[self.audit_keys.len() - 1].key
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhitelistChange {
    pub op: WhitelistOp,
    pub voter: VoterId,
    pub event: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Whitelist {
    pub members: BTreeSet<VoterId>,
    pub history: Vec<WhitelistChange>,
}

impl Whitelist {
    /// Membership recomputed from the mutation history.
    pub fn replayed_members(&self) -> BTreeSet<VoterId> {
        let mut set = BTreeSet::new();
        for ch in &self.history {
            match ch.op {
                WhitelistOp::Add => set.insert(ch.voter.clone()),
                WhitelistOp::Remove => set.remove(&ch.voter),
            };
        }
        set
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum EntryProof<G: Group> {
    Initial(EncPairProof<G>),
    Transition(TransitionProof<G>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BallotEntry<G: Group> {
    pub pair: CipherPair<G>,
    pub proof: EntryProof<G>,
    pub origin: Origin,
    /// Index into the voter's audit-key history.
    pub key_epoch: u32,
    /// Board head the proof was bound to.
    pub epoch: Digest,
    pub event: u64,
}

impl<G: Group> BallotEntry<G> {
    pub fn digest(&self) -> Digest {
        hash_canonical(ENTRY_DOMAIN, self)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BallotChain<G: Group> {
    pub entries: Vec<BallotEntry<G>>,
    pub frozen: bool,
}

impl<G: Group> BallotChain<G> {
    pub fn last(&self) -> &BallotEntry<G> {
        self.entries.last().expect("chains start with an initial entry")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PublishedTally<G: Group> {
    pub event: u64,
    pub result: TallyResult<G>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardEvent {
    pub index: u64,
    pub prev: Digest,
    pub digest: Digest,
    pub envelope: Envelope,
}

pub fn event_digest(prev: &Digest, index: u64, envelope: &Envelope) -> Digest {
    hash_parts(EVENT_DOMAIN, &[&prev.0, &index.to_be_bytes(), &to_canonical(envelope)])
}

/// Materialized view of the log. Reads and client logic work on this.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BoardState<G: Group> {
    pub config: Option<BoardConfig>,
    pub collections: BTreeMap<CollectionId, Collection<G>>,
    pub voters: BTreeMap<VoterId, VoterRecord<G>>,
    pub whitelists: BTreeMap<CollectionId, Whitelist>,
    pub chains: BTreeMap<CollectionId, BTreeMap<VoterId, BallotChain<G>>>,
    pub tallies: Vec<PublishedTally<G>>,
    pub head: Digest,
    pub height: u64,
}

impl<G: Group> Default for BoardState<G> {
    fn default() -> Self {
        BoardState {
            config: None,
            collections: BTreeMap::new(),
            voters: BTreeMap::new(),
            whitelists: BTreeMap::new(),
            chains: BTreeMap::new(),
            tallies: Vec::new(),
            head: Digest::ZERO,
            height: 0,
        }
    }
}

impl<G: Group> BoardState<G> {
    /// Hash of the canonical encoding; equal iff the states are bit-identical.
    pub fn digest(&self) -> Digest {
        hash_canonical(STATE_DOMAIN, self)
    }

    pub fn chain(&self, voter: &VoterId, collection: &CollectionId) -> Option<&BallotChain<G>> {
        self.chains.get(collection)?.get(voter)
    }

    pub fn is_whitelisted(&self, voter: &VoterId, collection: &CollectionId) -> bool {
        self.whitelists
            .get(collection)
            .is_some_and(|w| w.members.contains(voter))
    }

    /// Collections an update by `voter` must cover: open, whitelisted and
    /// with a non-frozen chain.
    pub fn required_cover(&self, voter: &VoterId) -> Vec<CollectionId> {
        self.collections
            .values()
            .filter(|c| c.is_open())
            .filter(|c| self.chain(voter, &c.id).is_some_and(|ch| !ch.frozen))
            .map(|c| c.id.clone())
            .collect()
    }

    /// Key pair used for `voter`'s ciphertexts in `collection` under the
    /// given audit-key epoch.
    pub fn ballot_keys(&self, voter: &VoterId, collection: &CollectionId, key_epoch: u32) -> Option<BallotKeys<G>> {
        let record = self.voters.get(voter)?;
        let audit = record.audit_keys.get(key_epoch as usize)?;
        Some(BallotKeys {
            tallier: self.collections.get(collection)?.public_key,
            voter: audit.key,
        })
    }

    /// Context for the next entry appended to a chain at board head `epoch`.
    pub fn next_context(&self, voter: &VoterId, collection: &CollectionId, epoch: Digest) -> Option<ProofContext> {
        let chain = self.chain(voter, collection)?;
        Some(ProofContext {
            collection: collection.clone(),
            voter: voter.clone(),
            entry_index: chain.entries.len() as u64,
            prev_entry: chain.last().digest(),
            epoch,
        })
    }

    /// All voters with a chain in `collection`, frozen ones included.
    pub fn ballot_holders(&self, collection: &CollectionId) -> Vec<VoterId> {
        self.chains
            .get(collection)
            .map(|m| m.keys().cloned().collect())
            .unwrap_or_default()
    }

    pub fn entry_count(&self) -> usize {
        self.chains
            .values()
            .flat_map(|m| m.values())
            .map(|c| c.entries.len())
            .sum()
    }
}

/// Board state plus the event log it was folded from.
#[derive(Clone, Debug)]
pub struct Board<G: Group> {
    state: BoardState<G>,
    events: Vec<BoardEvent>,
}

impl<G: Group> Default for Board<G> {
    fn default() -> Self {
        Board {
            state: BoardState::default(),
            events: Vec::new(),
        }
    }
}

impl<G: Group> Board<G> {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fresh board whose first event is the signed-off configuration.
    pub fn with_genesis(config: BoardConfig) -> Result<Self, BoardError> {
        let mut b = Self::new();
        b.submit(&Envelope::new(&Message::<G>::Genesis(config)))?;
        Ok(b)
    }

    pub fn state(&self) -> &BoardState<G> {
        &self.state
    }

    pub fn events(&self) -> &[BoardEvent] {
        &self.events
    }

    pub fn head(&self) -> Digest {
        self.state.head
    }

    /// Validates without mutating.
    pub fn check(&self, envelope: &Envelope) -> Result<Prepared<G>, BoardError> {
        apply::check(&self.state, envelope)
    }

    /// The event `envelope` would become if committed now.
    pub fn next_event(&self, envelope: &Envelope) -> BoardEvent {
        let index = self.state.height;
        let prev = self.state.head;
        BoardEvent {
            index,
            prev,
            digest: event_digest(&prev, index, envelope),
            envelope: envelope.clone(),
        }
    }

    /// Appends a validated message; returns the new event.
    pub fn commit(&mut self, prepared: Prepared<G>) -> &BoardEvent {
        let event = self.next_event(&prepared.envelope);
        self.push(prepared, event);
        self.events.last().expect("just pushed")
    }

    pub fn submit(&mut self, envelope: &Envelope) -> Result<&BoardEvent, BoardError> {
        let prepared = self.check(envelope)?;
        Ok(self.commit(prepared))
    }

    fn push(&mut self, prepared: Prepared<G>, event: BoardEvent) {
        let index = self.state.height;
        apply::commit(&mut self.state, prepared.effect, index);
        self.state.head = event.digest;
        self.state.height += 1;
        self.events.push(event);
    }

    /// Rebuilds a board from its log, failing on the first invalid event.
    pub fn replay(events: &[BoardEvent]) -> Result<Self, (u64, BoardError)> {
        let mut b = Self::new();
        for ev in events {
            if ev.index != b.state.height || ev.prev != b.state.head {
                return Err((ev.index, BoardError::Malformed("event out of sequence".into())));
            }
            if event_digest(&ev.prev, ev.index, &ev.envelope) != ev.digest {
                return Err((ev.index, BoardError::Malformed("event digest mismatch".into())));
            }
            b.submit(&ev.envelope).map_err(|e| (ev.index, e))?;
        }
        Ok(b)
    }

    pub(crate) fn push_recorded(&mut self, prepared: Option<Prepared<G>>, event: BoardEvent) {
        match prepared {
            Some(p) => self.push(p, event),
            None => {
                self.state.head = event.digest;
                self.state.height += 1;
                self.events.push(event);
            }
        }
    }
}
