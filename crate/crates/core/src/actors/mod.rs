//! Client-side logic of the participation and audit devices, the electoral
//! roll and the hybrid channel.

use std::collections::{BTreeMap, BTreeSet};

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::auth::AuthKeypair;
use crate::board::{
    audit_replay, verify_chain, BoardEvent, BoardState, Envelope, Message, Origin, ReplayFinding, SignerId,
    WhitelistMutation, WhitelistOp,
};
use crate::codec::{hash_parts, Digest};
use crate::group::Group;
use crate::ids::{CollectionId, VoterId};
use crate::tally::HcEvidence;

mod sealed;
mod voter;

pub use sealed::{SealError, SealedBox};
pub use voter::{
    build_update, individual_verify, participate, AuditOutcome, CollectionAudit, ParticipationStatus,
    VoterSecrets,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ActorError {
    #[error("unknown voter {0}")]
    UnknownVoter(VoterId),
    #[error("collection {0} is not open for this voter")]
    NotEligible(CollectionId),
    #[error("{0} has no open eligible collection")]
    NothingToUpdate(VoterId),
}

impl ActorError {
    pub fn code(&self) -> &'static str {
        match self {
            ActorError::UnknownVoter(_) => "UNKNOWN_VOTER",
            ActorError::NotEligible(_) => "NOT_ELIGIBLE",
            ActorError::NothingToUpdate(_) => "NOTHING_TO_UPDATE",
        }
    }
}

/// Runs the participation protocol on a voter's behalf from paper
/// signatures, and emits evidence for the talliers.
pub fn hc_submit<G: Group, R: RngCore + CryptoRng + ?Sized>(
    hc: &AuthKeypair,
    state: &BoardState<G>,
    voter: &VoterId,
    choices: &BTreeSet<CollectionId>,
    paper: &[u8],
    rng: &mut R,
) -> Result<(Envelope, Vec<HcEvidence>), ActorError> {
    let update = build_update(state, voter, choices, Origin::Hc, rng)?;
    let blob = hash_parts("multiballot/v1/hc-evidence", &[voter.as_str().as_bytes(), paper]);
    let evidence = choices
        .iter()
        .map(|c| HcEvidence {
            voter: voter.clone(),
            collection: c.clone(),
            entry_index: state.chain(voter, c).map_or(0, |ch| ch.entries.len() as u64),
            blob,
        })
        .collect();
    let envelope = Envelope::new(&Message::UpdateSet(update)).sign(SignerId::Hc, hc);
    Ok((envelope, evidence))
}

pub fn roll_mutate<G: Group>(roll: &AuthKeypair, collection: &CollectionId, op: WhitelistOp, voter: &VoterId) -> Envelope {
    Envelope::new(&Message::<G>::Whitelist(WhitelistMutation {
        collection: collection.clone(),
        op,
        voter: voter.clone(),
    }))
    .sign(SignerId::Roll, roll)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Finding {
    MissingGenesis,
    Log(ReplayFinding),
    /// The snapshot is not what the log folds to.
    StateMismatch { snapshot: Digest, replayed: Digest },
    ChainProof {
        collection: CollectionId,
        voter: VoterId,
        index: u64,
        reason: String,
    },
    WhitelistHistory { collection: CollectionId },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniversalReport {
    pub head: Digest,
    pub events: u64,
    pub entries: u64,
    pub findings: Vec<Finding>,
}

impl UniversalReport {
    pub fn ok(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Anyone's check of the whole board: hash chain, every signature, cover
/// rule, proof and tally in the log, and that `snapshot` is exactly what the
/// log folds to. If it is not, the snapshot's own chains are checked too so
/// the faulty position is reported.
pub fn universal_verify<G: Group>(snapshot: &BoardState<G>, events: &[BoardEvent]) -> UniversalReport {
    let replay = audit_replay::<G>(events);
    let replayed = replay.board.state();
    let mut findings: Vec<Finding> = replay.findings.into_iter().map(Finding::Log).collect();
    if replayed.config.is_none() {
        findings.push(Finding::MissingGenesis);
    }
    let (snap_digest, replay_digest) = (snapshot.digest(), replayed.digest());
    if snap_digest != replay_digest {
        findings.push(Finding::StateMismatch {
            snapshot: snap_digest,
            replayed: replay_digest,
        });
        for (collection, chains) in &snapshot.chains {
            for voter in chains.keys() {
                if let Err(f) = verify_chain(snapshot, voter, collection) {
                    findings.push(Finding::ChainProof {
                        collection: collection.clone(),
                        voter: voter.clone(),
                        index: f.index,
                        reason: f.reason,
                    });
                }
            }
        }
        for (collection, wl) in &snapshot.whitelists {
            if wl.members != wl.replayed_members() {
                findings.push(Finding::WhitelistHistory {
                    collection: collection.clone(),
                });
            }
        }
    }
    UniversalReport {
        head: replayed.head,
        events: events.len() as u64,
        entries: replayed.entry_count() as u64,
        findings,
    }
}

/// Checks only the log.
pub fn verify_log<G: Group>(events: &[BoardEvent]) -> UniversalReport {
    let replay = audit_replay::<G>(events);
    let state = replay.board.state().clone();
    universal_verify(&state, events)
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum WhitelistFinding {
    Unexpected { collection: CollectionId, voter: VoterId },
    Missing { collection: CollectionId, voter: VoterId },
}

/// Compares the published whitelists with a public eligibility register.
pub fn audit_whitelists<G: Group>(
    state: &BoardState<G>,
    reference: &BTreeMap<CollectionId, BTreeSet<VoterId>>,
) -> Vec<WhitelistFinding> {
    let empty = BTreeSet::new();
    let mut out = Vec::new();
    for (collection, wl) in &state.whitelists {
        let expected = reference.get(collection).unwrap_or(&empty);
        for v in wl.members.difference(expected) {
            out.push(WhitelistFinding::Unexpected {
                collection: collection.clone(),
                voter: v.clone(),
            });
        }
        for v in expected.difference(&wl.members) {
            out.push(WhitelistFinding::Missing {
                collection: collection.clone(),
                voter: v.clone(),
            });
        }
    }
    out
}
