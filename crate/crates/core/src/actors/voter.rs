use std::collections::{BTreeMap, BTreeSet};

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::ActorError;
use crate::auth::AuthKeypair;
use crate::board::{
    verify_chain, BallotChain, BoardState, ChainFault, Envelope, Message, Origin, RegisterVoter, SignerId,
    UpdateEntry, UpdateSet,
};
use crate::codec::Digest;
use crate::elgamal::{keygen, SecretKey};
use crate::group::Group;
use crate::ids::{CollectionId, VoterId};
use crate::zkp::{carry_pair, prove_transition, sign_pair, Branch};

/// What a voter keeps locally: the authentication key and the audit
/// secret keys in registration order. A lost key is `None`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct VoterSecrets<G: Group> {
    pub voter: VoterId,
    pub auth: AuthKeypair,
    pub audit_keys: Vec<Option<SecretKey<G>>>,
}

impl<G: Group> VoterSecrets<G> {
    pub fn generate<R: RngCore + CryptoRng + ?Sized>(voter: VoterId, rng: &mut R) -> Self {
        let auth = AuthKeypair::generate(rng);
        let (sk, _) = keygen::<G, R>(rng);
        VoterSecrets {
            voter,
            auth,
            audit_keys: vec![Some(sk)],
        }
    }

    fn announce(&self) -> Envelope {
        let sk = self
            .audit_keys
            .last()
            .and_then(|k| k.as_ref())
            .expect("active key is present right after generation");
        Envelope::new(&Message::RegisterVoter(RegisterVoter {
            voter: self.voter.clone(),
            auth_key: self.auth.public(),
            audit_key: sk.public_key(),
        }))
        .sign(SignerId::Voter(self.voter.clone()), &self.auth)
    }

    /// Registration message for the current audit key.
    pub fn register(&self) -> Envelope {
        self.announce()
    }

    /// New audit key; with `lose_old` the previous keys are forgotten.
    pub fn rotate<R: RngCore + CryptoRng + ?Sized>(&mut self, lose_old: bool, rng: &mut R) -> Envelope {
        if lose_old {
            self.audit_keys.iter_mut().for_each(|k| *k = None);
        }
        let (sk, _) = keygen::<G, R>(rng);
        self.audit_keys.push(Some(sk));
        self.announce()
    }

    /// Signs an update set as this voter.
    pub fn sign_update(&self, update: &UpdateSet<G>) -> Envelope {
        Envelope::new(&Message::UpdateSet(update.clone())).sign(SignerId::Voter(self.voter.clone()), &self.auth)
    }
}

/// A Sign entry for every collection in `choices`, a Carry entry for every
/// other collection the voter must cover. Needs only public data, so the
/// hybrid channel uses it too.
pub fn build_update<G: Group, R: RngCore + CryptoRng + ?Sized>(
    state: &BoardState<G>,
    voter: &VoterId,
    choices: &BTreeSet<CollectionId>,
    origin: Origin,
    rng: &mut R,
) -> Result<UpdateSet<G>, ActorError> {
    let record = state
        .voters
        .get(voter)
        .ok_or_else(|| ActorError::UnknownVoter(voter.clone()))?;
    let cover = state.required_cover(voter);
    if cover.is_empty() {
        return Err(ActorError::NothingToUpdate(voter.clone()));
    }
    if let Some(c) = choices.iter().find(|c| !cover.contains(c)) {
        return Err(ActorError::NotEligible(c.clone()));
    }
    let key_epoch = record.active_epoch();
    let epoch = state.head;
    let mut entries = Vec::with_capacity(cover.len());
    for collection in cover {
        let keys = state
            .ballot_keys(voter, &collection, key_epoch)
            .expect("cover only lists existing collections");
        let ctx = state.next_context(voter, &collection, epoch).expect("cover implies a chain");
        let prev = state.chain(voter, &collection).expect("cover implies a chain").last().pair;
        let (branch, (pair, witness)) = if choices.contains(&collection) {
            (Branch::Sign, sign_pair(&keys, rng))
        } else {
            (Branch::Carry, carry_pair(&keys, &prev, rng))
        };
        let proof = prove_transition(&keys, &prev, &pair, branch, &witness, &ctx, rng).expect("honest witness");
        entries.push(UpdateEntry {
            collection,
            pair,
            proof,
        });
    }
    Ok(UpdateSet {
        voter: voter.clone(),
        epoch,
        origin,
        entries,
    })
}

/// Builds and signs a participation in one step.
pub fn participate<G: Group, R: RngCore + CryptoRng + ?Sized>(
    secrets: &VoterSecrets<G>,
    state: &BoardState<G>,
    choices: &BTreeSet<CollectionId>,
    rng: &mut R,
) -> Result<Envelope, ActorError> {
    let update = build_update(state, &secrets.voter, choices, Origin::Voter, rng)?;
    Ok(secrets.sign_update(&update))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParticipationStatus {
    Signed,
    NotSigned,
    UnverifiableButUnchangedSinceRotation,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollectionAudit {
    pub status: ParticipationStatus,
    pub chain_valid: bool,
    pub fault: Option<ChainFault>,
    /// Number of entries posted by the hybrid channel.
    pub hc_entries: u32,
    pub frozen: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditOutcome {
    pub voter: VoterId,
    pub head: Digest,
    /// Board's audit-key history agrees with the keys held locally.
    pub keys_match: bool,
    pub collections: BTreeMap<CollectionId, CollectionAudit>,
}

impl AuditOutcome {
    pub fn signed(&self) -> BTreeSet<CollectionId> {
        self.collections
            .iter()
            .filter(|(_, a)| a.status == ParticipationStatus::Signed)
            .map(|(c, _)| c.clone())
            .collect()
    }

    /// Any invalid chain or foreign key on the board.
    pub fn alarm(&self) -> bool {
        !self.keys_match || self.collections.values().any(|a| !a.chain_valid)
    }
}

/// What the audit device shows: per collection, whether the last entry
/// encrypts 1 under the voter's own key.
pub fn individual_verify<G: Group>(secrets: &VoterSecrets<G>, state: &BoardState<G>) -> AuditOutcome {
    let voter = &secrets.voter;
    let keys_match = state.voters.get(voter).is_some_and(|rec| {
        rec.audit_keys.len() == secrets.audit_keys.len()
            && rec
                .audit_keys
                .iter()
                .zip(&secrets.audit_keys)
                .all(|(public, mine)| mine.as_ref().is_none_or(|sk| sk.public_key() == public.key))
    });
    let mut collections = BTreeMap::new();
    for (collection, chains) in &state.chains {
        let Some(chain) = chains.get(voter) else {
            continue;
        };
        let fault = verify_chain(state, voter, collection).err();
        collections.insert(
            collection.clone(),
            CollectionAudit {
                status: chain_status(secrets, chain),
                chain_valid: fault.is_none(),
                fault,
                hc_entries: chain.entries.iter().filter(|e| e.origin == Origin::Hc).count() as u32,
                frozen: chain.frozen,
            },
        );
    }
    AuditOutcome {
        voter: voter.clone(),
        head: state.head,
        keys_match,
        collections,
    }
}

/// Decrypts the last `c_v`. An entry carried over a key rotation decodes
/// under neither key; a Sign under the newer key would have decoded, so the
/// plaintext is that of the last entry under an earlier key.
fn chain_status<G: Group>(secrets: &VoterSecrets<G>, chain: &BallotChain<G>) -> ParticipationStatus {
    let mut i = chain.entries.len() - 1;
    loop {
        let entry = &chain.entries[i];
        let Some(Some(sk)) = secrets.audit_keys.get(entry.key_epoch as usize) else {
            return ParticipationStatus::UnverifiableButUnchangedSinceRotation;
        };
        match sk.decrypt(&entry.pair.voter, 1) {
            Ok(1) => return ParticipationStatus::Signed,
            Ok(_) => return ParticipationStatus::NotSigned,
            Err(_) => match chain.entries[..i].iter().rposition(|e| e.key_epoch < entry.key_epoch) {
                Some(j) => i = j,
                None => return ParticipationStatus::UnverifiableButUnchangedSinceRotation,
            },
        }
    }
}
