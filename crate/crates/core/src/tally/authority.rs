use std::collections::{BTreeMap, BTreeSet};

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use super::*;
use crate::auth::{AuthKeypair, AuthPublicKey};
use crate::board::{BoardState, CloseCollection, Envelope, Message, OpenCollection, Origin, SignerId};
use crate::codec::Digest;
use crate::ids::VoterId;

/// A published, publicly checkable tally of one collection.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TallyResult<G: Group> {
    pub collection: CollectionId,
    pub epoch: Digest,
    /// Exactly the voters whose last entries were aggregated, sorted.
    pub voters: Vec<VoterId>,
    /// False when `voters` is the default set (every ballot holder).
    pub subset: bool,
    pub aggregate: Ciphertext<G>,
    pub count: u64,
    pub partials: Vec<PartialDecryption<G>>,
}

/// Sum of the last `c_t` over `subset`, or over every ballot holder of the
/// collection (frozen chains included) when no subset is given.
pub fn aggregate_last_entries<G: Group>(
    state: &BoardState<G>,
    collection: &CollectionId,
    subset: Option<&[VoterId]>,
) -> Result<(Vec<VoterId>, Ciphertext<G>), TallyError> {
    let chains = state
        .chains
        .get(collection)
        .ok_or_else(|| TallyError::UnknownCollection(collection.clone()))?;
    let voters: Vec<VoterId> = match subset {
        None => chains.keys().cloned().collect(),
        Some(s) => {
            let set: BTreeSet<_> = s.iter().cloned().collect();
            if let Some(v) = set.iter().find(|v| !chains.contains_key(*v)) {
                return Err(TallyError::NotOnWhitelist(v.clone()));
            }
            set.into_iter().collect()
        }
    };
    let aggregate = Ciphertext::sum(voters.iter().map(|v| &chains[v].last().pair.tallier));
    Ok((voters, aggregate))
}

/// Ties a paper signature handed to the hybrid channel to the board entry
/// it should have produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HcEvidence {
    pub voter: VoterId,
    pub collection: CollectionId,
    pub entry_index: u64,
    pub blob: Digest,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AuditCheck {
    PerVoter { voter: VoterId, collection: CollectionId },
    Aggregate { collection: CollectionId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditOutcomeKind {
    Pass,
    Fail,
    Malformed,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditItem {
    pub check: AuditCheck,
    pub outcome: AuditOutcomeKind,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditReport {
    pub items: Vec<AuditItem>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.outcome == AuditOutcomeKind::Pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditItem> {
        self.items.iter().filter(|i| i.outcome != AuditOutcomeKind::Pass)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecryptionPurpose {
    Tally,
    PerVoter(VoterId),
    Aggregate,
}

/// Every ciphertext the talliers jointly decrypted, in order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DecryptionRecord<G: Group> {
    pub collection: CollectionId,
    pub ciphertext: Ciphertext<G>,
    pub purpose: DecryptionPurpose,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Tallier<G: Group> {
    pub id: TallierId,
    pub auth: AuthKeypair,
    pub shares: BTreeMap<CollectionId, TallierShare<G>>,
}

/// The tallier group. Each member keeps its own shares; any decryption
/// needs a part from every one of them.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Talliers<G: Group> {
    pub members: Vec<Tallier<G>>,
    #[serde(default)]
    pub decryptions: Vec<DecryptionRecord<G>>,
}

impl<G: Group> Talliers<G> {
    pub fn new<R: RngCore + CryptoRng + ?Sized>(ids: &[TallierId], rng: &mut R) -> Self {
        Talliers {
            members: ids
                .iter()
                .map(|id| Tallier {
                    id: id.clone(),
                    auth: AuthKeypair::generate(rng),
                    shares: BTreeMap::new(),
                })
                .collect(),
            decryptions: Vec::new(),
        }
    }

    pub fn roster(&self) -> Vec<(TallierId, AuthPublicKey)> {
        self.members.iter().map(|m| (m.id.clone(), m.auth.public())).collect()
    }

    fn ids(&self) -> Vec<TallierId> {
        self.members.iter().map(|m| m.id.clone()).collect()
    }

    /// Signature of every member.
    pub fn co_sign(&self, mut envelope: Envelope) -> Envelope {
        for m in &self.members {
            envelope = envelope.sign(SignerId::Tallier(m.id.clone()), &m.auth);
        }
        envelope
    }

    /// Runs key generation for a new collection and returns the co-signed
    /// open message.
    pub fn open_collection<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        collection: &CollectionId,
        title: &str,
        rng: &mut R,
    ) -> Result<Envelope, TallyError> {
        let (_, shares) = dkg::<G, R>(collection, &self.ids(), rng)?;
        let publics = shares.iter().map(|s| s.public.clone()).collect();
        for (m, s) in self.members.iter_mut().zip(shares) {
            m.shares.insert(collection.clone(), s);
        }
        Ok(self.co_sign(Envelope::new(&Message::<G>::OpenCollection(OpenCollection {
            collection: collection.clone(),
            title: title.to_string(),
            shares: publics,
        }))))
    }

    pub fn close_collection(&self, collection: &CollectionId) -> Envelope {
        self.co_sign(Envelope::new(&Message::<G>::CloseCollection(CloseCollection {
            collection: collection.clone(),
        })))
    }

    /// Signed by the first member; any one tallier may publish.
    pub fn publish(&self, result: &TallyResult<G>) -> Envelope {
        let first = &self.members[0];
        Envelope::new(&Message::TallyResult(result.clone())).sign(SignerId::Tallier(first.id.clone()), &first.auth)
    }

    pub fn partials<R: RngCore + CryptoRng + ?Sized>(
        &self,
        collection: &CollectionId,
        c: &Ciphertext<G>,
        rng: &mut R,
    ) -> Result<Vec<PartialDecryption<G>>, TallyError> {
        self.members
            .iter()
            .map(|m| {
                m.shares
                    .get(collection)
                    .map(|s| partial_decrypt(s, c, rng))
                    .ok_or_else(|| TallyError::MissingShare(m.id.clone()))
            })
            .collect()
    }

    /// Joint decryption; every call is logged in `decryptions`.
    pub fn decrypt<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        state: &BoardState<G>,
        collection: &CollectionId,
        c: &Ciphertext<G>,
        bound: u64,
        purpose: DecryptionPurpose,
        rng: &mut R,
    ) -> Result<(u64, Vec<PartialDecryption<G>>), TallyError> {
        let roster = &state
            .collections
            .get(collection)
            .ok_or_else(|| TallyError::UnknownCollection(collection.clone()))?
            .shares;
        self.decryptions.push(DecryptionRecord {
            collection: collection.clone(),
            ciphertext: *c,
            purpose,
        });
        let parts = self.partials(collection, c, rng)?;
        let m = combine(c, &parts, roster, bound)?;
        Ok((m, parts))
    }

    pub fn tally<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        state: &BoardState<G>,
        collection: &CollectionId,
        subset: Option<&[VoterId]>,
        rng: &mut R,
    ) -> Result<TallyResult<G>, TallyError> {
        let (voters, aggregate) = aggregate_last_entries(state, collection, subset)?;
        let (count, partials) = self.decrypt(
            state,
            collection,
            &aggregate,
            voters.len() as u64,
            DecryptionPurpose::Tally,
            rng,
        )?;
        Ok(TallyResult {
            collection: collection.clone(),
            epoch: state.head,
            voters,
            subset: subset.is_some(),
            aggregate,
            count,
            partials,
        })
    }

    /// Evidenced voters: their last `c_t` must decrypt to 1. Everything
    /// else the hybrid channel posted: per collection, the sum of its
    /// entries minus the sum of their predecessors must decrypt to 0.
    pub fn hc_audit<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        state: &BoardState<G>,
        evidence: &[HcEvidence],
        rng: &mut R,
    ) -> AuditReport {
        let mut items = Vec::new();
        let mut evidenced: BTreeSet<(CollectionId, VoterId)> = BTreeSet::new();
        let mut by_pair: BTreeMap<(CollectionId, VoterId), Vec<&HcEvidence>> = BTreeMap::new();
        for e in evidence {
            by_pair.entry((e.collection.clone(), e.voter.clone())).or_default().push(e);
        }
        for ((collection, voter), evs) in by_pair {
            let check = AuditCheck::PerVoter {
                voter: voter.clone(),
                collection: collection.clone(),
            };
            let Some(chain) = state.chain(&voter, &collection) else {
                items.push(AuditItem {
                    check,
                    outcome: AuditOutcomeKind::Malformed,
                    detail: "no ballot for this voter".into(),
                });
                continue;
            };
            let misref = evs.iter().find(|e| {
                chain
                    .entries
                    .get(e.entry_index as usize)
                    .is_some_and(|entry| entry.origin != Origin::Hc)
            });
            if let Some(e) = misref {
                items.push(AuditItem {
                    check,
                    outcome: AuditOutcomeKind::Malformed,
                    detail: format!("entry {} was not posted by the hybrid channel", e.entry_index),
                });
                continue;
            }
            evidenced.insert((collection.clone(), voter.clone()));
            let last = chain.last().pair.tallier;
            let decrypted = self.decrypt(state, &collection, &last, 1, DecryptionPurpose::PerVoter(voter), rng);
            items.push(match decrypted {
                Ok((1, _)) => AuditItem {
                    check,
                    outcome: AuditOutcomeKind::Pass,
                    detail: String::new(),
                },
                Ok((m, _)) => AuditItem {
                    check,
                    outcome: AuditOutcomeKind::Fail,
                    detail: format!("last entry encrypts {m}"),
                },
                Err(e) => AuditItem {
                    check,
                    outcome: AuditOutcomeKind::Fail,
                    detail: e.to_string(),
                },
            });
        }

        for (collection, chains) in &state.chains {
            let mut posted = Vec::new();
            let mut before = Vec::new();
            for (voter, chain) in chains {
                if evidenced.contains(&(collection.clone(), voter.clone())) {
                    continue;
                }
                for (i, entry) in chain.entries.iter().enumerate().skip(1) {
                    if entry.origin == Origin::Hc {
                        posted.push(&entry.pair.tallier);
                        before.push(&chain.entries[i - 1].pair.tallier);
                    }
                }
            }
            if posted.is_empty() {
                continue;
            }
            let n = posted.len() as u64;
            let diff = Ciphertext::sum(posted).sub(&Ciphertext::sum(before));
            let check = AuditCheck::Aggregate {
                collection: collection.clone(),
            };
            items.push(match self.decrypt(state, collection, &diff, n, DecryptionPurpose::Aggregate, rng) {
                Ok((0, _)) => AuditItem {
                    check,
                    outcome: AuditOutcomeKind::Pass,
                    detail: String::new(),
                },
                Ok((m, _)) => AuditItem {
                    check,
                    outcome: AuditOutcomeKind::Fail,
                    detail: format!("{m} participations without evidence"),
                },
                Err(e) => AuditItem {
                    check,
                    outcome: AuditOutcomeKind::Fail,
                    detail: e.to_string(),
                },
            });
        }
        AuditReport { items }
    }
}
