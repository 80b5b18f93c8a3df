use serde::{Deserialize, Serialize};

use super::apply::initial_context;
use super::*;
use crate::zkp::{verify_enc_pair, verify_transition};

/// Problems found while re-validating a recorded log.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReplayFinding {
    OutOfSequence { index: u64 },
    DigestMismatch { index: u64 },
    Rejected { index: u64, code: String, message: String },
}

pub struct AuditReplay<G: Group> {
    pub board: Board<G>,
    pub findings: Vec<ReplayFinding>,
}

/// Replays every event, recording instead of stopping at invalid ones.
/// Rejected events leave the state untouched but still advance the head to
/// their recorded digest, so the rest of the log can be checked.
pub fn audit_replay<G: Group>(events: &[BoardEvent]) -> AuditReplay<G> {
    let mut board = Board::<G>::new();
    let mut findings = Vec::new();
    for ev in events {
        let height = board.state().height;
        if ev.index != height || ev.prev != board.head() {
            findings.push(ReplayFinding::OutOfSequence { index: height });
        }
        if event_digest(&ev.prev, ev.index, &ev.envelope) != ev.digest {
            findings.push(ReplayFinding::DigestMismatch { index: height });
        }
        match board.check(&ev.envelope) {
            Ok(p) => board.push_recorded(Some(p), ev.clone()),
            Err(e) => {
                findings.push(ReplayFinding::Rejected {
                    index: height,
                    code: e.code().to_string(),
                    message: e.to_string(),
                });
                board.push_recorded(None, ev.clone());
            }
        }
    }
    AuditReplay { board, findings }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainFault {
    pub index: u64,
    pub reason: String,
}

fn fault(index: usize, reason: &str) -> ChainFault {
    ChainFault {
        index: index as u64,
        reason: reason.to_string(),
    }
}

/// Checks that a chain is a consistent sequence of proofs back to its
/// initial entry, using only public data in `state`.
pub fn verify_chain<G: Group>(
    state: &BoardState<G>,
    voter: &VoterId,
    collection: &CollectionId,
) -> Result<(), ChainFault> {
    let chain = state
        .chain(voter, collection)
        .ok_or_else(|| fault(0, "no such chain"))?;
    let mut prev: Option<&BallotEntry<G>> = None;
    for (i, entry) in chain.entries.iter().enumerate() {
        let keys = state
            .ballot_keys(voter, collection, entry.key_epoch)
            .ok_or_else(|| fault(i, "unknown key epoch"))?;
        let ok = match (prev, &entry.proof) {
            (None, EntryProof::Initial(p)) => {
                let ctx = initial_context(voter, collection, entry.epoch);
                entry.pair == CipherPair::trivial_zero() && verify_enc_pair(&keys, &entry.pair, 0, p, &ctx)
            }
            (Some(before), EntryProof::Transition(p)) => {
                let ctx = ProofContext {
                    collection: collection.clone(),
                    voter: voter.clone(),
                    entry_index: i as u64,
                    prev_entry: before.digest(),
                    epoch: entry.epoch,
                };
                verify_transition(&keys, &before.pair, &entry.pair, p, &ctx)
            }
            _ => return Err(fault(i, "wrong proof kind for position")),
        };
        if !ok {
            return Err(fault(i, "proof does not verify"));
        }
        prev = Some(entry);
    }
    Ok(())
}
