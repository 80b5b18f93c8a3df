use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::codec::hash_canonical;
use num_traits::Zero;
use crate::tally::{aggregate_last_entries, assemble_public_key, combine_to_element};
use crate::zkp::{prove_enc_pair, verify_transition, EntryWitness};

const INITIAL_NONCE_DOMAIN: &str = "multiballot/v1/initial-nonce";

/// A validated message together with everything needed to apply it.
#[derive(Clone, Debug)]
pub struct Prepared<G: Group> {
    pub envelope: Envelope,
    pub effect: Effect<G>,
}

#[derive(Clone, Debug)]
pub enum Effect<G: Group> {
    Genesis(BoardConfig),
    Register {
        voter: VoterId,
        auth_key: AuthPublicKey,
        audit_key: PublicKey<G>,
        initial: Vec<(CollectionId, BallotEntry<G>)>,
    },
    Open(Collection<G>),
    Close(CollectionId),
    Whitelist {
        mutation: WhitelistMutation,
        chain: ChainAction<G>,
    },
    Update {
        voter: VoterId,
        entries: Vec<(CollectionId, BallotEntry<G>)>,
    },
    Tally(TallyResult<G>),
}

#[derive(Clone, Debug)]
pub enum ChainAction<G: Group> {
    None,
    Freeze,
    Unfreeze,
    Init(BallotEntry<G>),
}

fn require(envelope: &Envelope, signer: SignerId, key: &AuthPublicKey) -> Result<(), BoardError> {
    match envelope.check_signer(&signer, key) {
        Some(true) => Ok(()),
        Some(false) => Err(BoardError::BadSignature(format!("invalid signature by {signer:?}"))),
        None => Err(BoardError::BadSignature(format!("no signature by {signer:?}"))),
    }
}

fn require_all_talliers(envelope: &Envelope, config: &BoardConfig) -> Result<(), BoardError> {
    for (id, key) in &config.talliers {
        match envelope.check_signer(&SignerId::Tallier(id.clone()), key) {
            Some(true) => {}
            Some(false) => return Err(BoardError::BadSignature(format!("invalid signature by tallier {id}"))),
            None => return Err(BoardError::MissingTallierSignature(id.clone())),
        }
    }
    Ok(())
}

/// Entry 0: `((1,1),(1,1))` with a proof whose nonces derive from its
/// context, so every replica computes the same bytes.
pub(crate) fn initial_entry<G: Group>(
    state: &BoardState<G>,
    voter: &VoterId,
    collection: &Collection<G>,
    audit_key: &PublicKey<G>,
    key_epoch: u32,
) -> BallotEntry<G> {
    let keys = BallotKeys {
        tallier: collection.public_key,
        voter: *audit_key,
    };
    let ctx = initial_context(voter, &collection.id, state.head);
    let mut rng = ChaCha20Rng::from_seed(hash_canonical(INITIAL_NONCE_DOMAIN, &ctx).0);
    let zero = EntryWitness {
        tallier: G::Scalar::zero(),
        voter: G::Scalar::zero(),
    };
    let proof = prove_enc_pair(&keys, 0, &zero, &ctx, &mut rng).expect("0 is encodable");
    BallotEntry {
        pair: CipherPair::trivial_zero(),
        proof: EntryProof::Initial(proof),
        origin: Origin::Board,
        key_epoch,
        epoch: state.head,
        event: state.height,
    }
}

pub(crate) fn initial_context(voter: &VoterId, collection: &CollectionId, epoch: Digest) -> ProofContext {
    ProofContext {
        collection: collection.clone(),
        voter: voter.clone(),
        entry_index: 0,
        prev_entry: Digest::ZERO,
        epoch,
    }
}

pub(crate) fn check<G: Group>(state: &BoardState<G>, envelope: &Envelope) -> Result<Prepared<G>, BoardError> {
    if envelope.version != PROTOCOL_VERSION {
        return Err(BoardError::UnsupportedVersion(envelope.version));
    }
    let message: Message<G> = envelope
        .decode()
        .map_err(|e| BoardError::Malformed(e.to_string()))?;
    let effect = match (&state.config, message) {
        (None, Message::Genesis(cfg)) => check_genesis::<G>(cfg)?,
        (Some(_), Message::Genesis(_)) => return Err(BoardError::AlreadyInitialized),
        (None, _) => return Err(BoardError::NotInitialized),
        (Some(_), Message::RegisterVoter(m)) => check_register(state, envelope, m)?,
        (Some(cfg), Message::OpenCollection(m)) => check_open(state, cfg, envelope, m)?,
        (Some(cfg), Message::CloseCollection(m)) => {
            let c = state
                .collections
                .get(&m.collection)
                .ok_or_else(|| BoardError::UnknownCollection(m.collection.clone()))?;
            require_all_talliers(envelope, cfg)?;
            if !c.is_open() {
                return Err(BoardError::CollectionClosed(m.collection));
            }
            Effect::Close(m.collection)
        }
        (Some(cfg), Message::Whitelist(m)) => check_whitelist(state, cfg, envelope, m)?,
        (Some(cfg), Message::UpdateSet(m)) => check_update(state, cfg, envelope, m)?,
        (Some(cfg), Message::TallyResult(m)) => check_tally(state, cfg, envelope, m)?,
    };
    Ok(Prepared {
        envelope: envelope.clone(),
        effect,
    })
}

fn check_genesis<G: Group>(cfg: BoardConfig) -> Result<Effect<G>, BoardError> {
    if cfg.group != G::NAME {
        return Err(BoardError::Malformed(format!(
            "board runs {}, genesis names {}",
            G::NAME,
            cfg.group
        )));
    }
    if cfg.talliers.is_empty() {
        return Err(BoardError::Malformed("no talliers".into()));
    }
    let ids: BTreeSet<_> = cfg.talliers.iter().map(|(t, _)| t).collect();
    if ids.len() != cfg.talliers.len() {
        return Err(BoardError::Malformed("duplicate tallier id".into()));
    }
    Ok(Effect::Genesis(cfg))
}

fn check_register<G: Group>(
    state: &BoardState<G>,
    envelope: &Envelope,
    m: RegisterVoter<G>,
) -> Result<Effect<G>, BoardError> {
    if m.audit_key.0 == G::identity() {
        return Err(BoardError::Malformed("audit key is the identity".into()));
    }
    let signer = SignerId::Voter(m.voter.clone());
    let mut initial = Vec::new();
    match state.voters.get(&m.voter) {
        Some(record) => {
            if record.auth_key != m.auth_key {
                return Err(BoardError::BadSignature("rotation must keep the authentication key".into()));
            }
            require(envelope, signer, &record.auth_key)?;
            if record.audit_keys.iter().any(|k| k.key == m.audit_key) {
                return Err(BoardError::DuplicateRegistration(m.voter));
            }
        }
        None => {
            require(envelope, signer, &m.auth_key)?;
            for c in state.collections.values().filter(|c| c.is_open()) {
                if state.is_whitelisted(&m.voter, &c.id) && state.chain(&m.voter, &c.id).is_none() {
                    initial.push((c.id.clone(), initial_entry(state, &m.voter, c, &m.audit_key, 0)));
                }
            }
        }
    }
    Ok(Effect::Register {
        voter: m.voter,
        auth_key: m.auth_key,
        audit_key: m.audit_key,
        initial,
    })
}

fn check_open<G: Group>(
    state: &BoardState<G>,
    cfg: &BoardConfig,
    envelope: &Envelope,
    m: OpenCollection<G>,
) -> Result<Effect<G>, BoardError> {
    if state.collections.contains_key(&m.collection) {
        return Err(BoardError::DuplicateCollection(m.collection));
    }
    require_all_talliers(envelope, cfg)?;
    let roster: BTreeSet<_> = cfg.talliers.iter().map(|(t, _)| t).collect();
    let offered: BTreeSet<_> = m.shares.iter().map(|s| &s.tallier).collect();
    if roster != offered || m.shares.len() != roster.len() {
        return Err(BoardError::InvalidShares("shares do not match the tallier roster".into()));
    }
    let public_key =
        assemble_public_key(&m.collection, &m.shares).map_err(|e| BoardError::InvalidShares(e.to_string()))?;
    Ok(Effect::Open(Collection {
        id: m.collection,
        title: m.title,
        public_key,
        shares: m.shares,
        status: CollectionStatus::Open,
        opened_at: state.height,
        closed_at: None,
    }))
}

fn check_whitelist<G: Group>(
    state: &BoardState<G>,
    cfg: &BoardConfig,
    envelope: &Envelope,
    m: WhitelistMutation,
) -> Result<Effect<G>, BoardError> {
    require(envelope, SignerId::Roll, &cfg.roll)?;
    let collection = state
        .collections
        .get(&m.collection)
        .ok_or_else(|| BoardError::UnknownCollection(m.collection.clone()))?;
    if !collection.is_open() {
        return Err(BoardError::CollectionClosed(m.collection));
    }
    let member = state.is_whitelisted(&m.voter, &m.collection);
    let chain = state.chain(&m.voter, &m.collection);
    let action = match m.op {
        WhitelistOp::Add => {
            if member {
                return Err(BoardError::AlreadyWhitelisted {
                    collection: m.collection,
                    voter: m.voter,
                });
            }
            match (chain, state.voters.get(&m.voter)) {
                (Some(_), _) => ChainAction::Unfreeze,
                (None, Some(rec)) => ChainAction::Init(initial_entry(
                    state,
                    &m.voter,
                    collection,
                    rec.active_key(),
                    rec.active_epoch(),
                )),
                // Initial ballots follow once the voter registers.
                (None, None) => ChainAction::None,
            }
        }
        WhitelistOp::Remove => {
            if !member {
                return Err(BoardError::NotWhitelisted {
                    collection: m.collection,
                    voter: m.voter,
                });
            }
            if chain.is_some() {
                ChainAction::Freeze
            } else {
                ChainAction::None
            }
        }
    };
    Ok(Effect::Whitelist { mutation: m, chain: action })
}

fn check_update<G: Group>(
    state: &BoardState<G>,
    cfg: &BoardConfig,
    envelope: &Envelope,
    m: UpdateSet<G>,
) -> Result<Effect<G>, BoardError> {
    let record = state
        .voters
        .get(&m.voter)
        .ok_or_else(|| BoardError::UnknownVoter(m.voter.clone()))?;
    match m.origin {
        Origin::Voter => require(envelope, SignerId::Voter(m.voter.clone()), &record.auth_key)?,
        Origin::Hc => require(envelope, SignerId::Hc, &cfg.hc)?,
        Origin::Board => return Err(BoardError::Malformed("updates cannot claim board origin".into())),
    }
    if m.epoch != state.head {
        return Err(BoardError::StaleSnapshot {
            head: state.head,
            got: m.epoch,
        });
    }

    let mut seen = BTreeSet::new();
    for e in &m.entries {
        if !seen.insert(&e.collection) {
            return Err(BoardError::Malformed(format!("collection {} listed twice", e.collection)));
        }
        let c = state
            .collections
            .get(&e.collection)
            .ok_or_else(|| BoardError::UnknownCollection(e.collection.clone()))?;
        if !c.is_open() {
            return Err(BoardError::CollectionClosed(e.collection.clone()));
        }
        match state.chain(&m.voter, &e.collection) {
            None => {
                return Err(BoardError::NotWhitelisted {
                    collection: e.collection.clone(),
                    voter: m.voter.clone(),
                })
            }
            Some(ch) if ch.frozen => {
                return Err(BoardError::FrozenChain {
                    collection: e.collection.clone(),
                    voter: m.voter.clone(),
                })
            }
            Some(_) => {}
        }
    }
    let required: BTreeSet<_> = state.required_cover(&m.voter).into_iter().collect();
    if required.is_empty() {
        return Err(BoardError::NothingToUpdate(m.voter));
    }
    let missing: Vec<_> = required.iter().filter(|c| !seen.contains(c)).cloned().collect();
    if !missing.is_empty() {
        return Err(BoardError::IncompleteCover {
            missing,
            extra: Vec::new(),
        });
    }

    let key_epoch = record.active_epoch();
    let mut entries = Vec::with_capacity(m.entries.len());
    for e in m.entries {
        let chain = state.chain(&m.voter, &e.collection).expect("checked above");
        let keys = state
            .ballot_keys(&m.voter, &e.collection, key_epoch)
            .expect("voter and collection exist");
        let ctx = state
            .next_context(&m.voter, &e.collection, m.epoch)
            .expect("chain exists");
        if !verify_transition(&keys, &chain.last().pair, &e.pair, &e.proof, &ctx) {
            return Err(BoardError::InvalidProof {
                collection: e.collection,
                voter: m.voter,
                index: ctx.entry_index,
            });
        }
        entries.push((
            e.collection,
            BallotEntry {
                pair: e.pair,
                proof: EntryProof::Transition(e.proof),
                origin: m.origin,
                key_epoch,
                epoch: m.epoch,
                event: state.height,
            },
        ));
    }
    Ok(Effect::Update { voter: m.voter, entries })
}

fn check_tally<G: Group>(
    state: &BoardState<G>,
    cfg: &BoardConfig,
    envelope: &Envelope,
    m: TallyResult<G>,
) -> Result<Effect<G>, BoardError> {
    let signed = cfg
        .talliers
        .iter()
        .any(|(id, key)| envelope.check_signer(&SignerId::Tallier(id.clone()), key) == Some(true));
    if !signed {
        return Err(BoardError::BadSignature("tally result needs a tallier signature".into()));
    }
    let collection = state
        .collections
        .get(&m.collection)
        .ok_or_else(|| BoardError::UnknownCollection(m.collection.clone()))?;
    if m.epoch != state.head {
        return Err(BoardError::StaleSnapshot {
            head: state.head,
            got: m.epoch,
        });
    }
    let subset = m.subset.then_some(m.voters.as_slice());
    let (voters, aggregate) =
        aggregate_last_entries(state, &m.collection, subset).map_err(|e| BoardError::InvalidTally(e.to_string()))?;
    if voters != m.voters {
        return Err(BoardError::InvalidTally("voter set differs from the board".into()));
    }
    if aggregate != m.aggregate {
        return Err(BoardError::InvalidTally("aggregate differs from the board".into()));
    }
    let plain = combine_to_element(&m.aggregate, &m.partials, &collection.shares)
        .map_err(|e| BoardError::InvalidTally(e.to_string()))?;
    if crate::dlog::dlog_decode::<G>(&plain, voters.len() as u64) != Ok(m.count) {
        return Err(BoardError::InvalidTally("count does not match the decryption".into()));
    }
    Ok(Effect::Tally(m))
}

pub(crate) fn commit<G: Group>(state: &mut BoardState<G>, effect: Effect<G>, event: u64) {
    match effect {
        Effect::Genesis(cfg) => state.config = Some(cfg),
        Effect::Register {
            voter,
            auth_key,
            audit_key,
            initial,
        } => {
            let record = state.voters.entry(voter.clone()).or_insert_with(|| VoterRecord {
                id: voter.clone(),
                auth_key,
                audit_keys: Vec::new(),
            });
            record.audit_keys.push(AuditKey {
                key: audit_key,
                registered_at: event,
            });
            for (c, entry) in initial {
                state.chains.entry(c).or_default().insert(
                    voter.clone(),
                    BallotChain {
                        entries: vec![entry],
                        frozen: false,
                    },
                );
            }
        }
        Effect::Open(c) => {
            state.whitelists.insert(c.id.clone(), Whitelist::default());
            state.chains.insert(c.id.clone(), Default::default());
            state.collections.insert(c.id.clone(), c);
        }
        Effect::Close(id) => {
            let c = state.collections.get_mut(&id).expect("validated");
            c.status = CollectionStatus::Closed;
            c.closed_at = Some(event);
        }
        Effect::Whitelist { mutation, chain } => {
            let wl = state.whitelists.entry(mutation.collection.clone()).or_default();
            match mutation.op {
                WhitelistOp::Add => wl.members.insert(mutation.voter.clone()),
                WhitelistOp::Remove => wl.members.remove(&mutation.voter),
            };
            wl.history.push(WhitelistChange {
                op: mutation.op,
                voter: mutation.voter.clone(),
                event,
            });
            let chains = state.chains.entry(mutation.collection).or_default();
            match chain {
                ChainAction::None => {}
                ChainAction::Freeze => chains.get_mut(&mutation.voter).expect("validated").frozen = true,
                ChainAction::Unfreeze => chains.get_mut(&mutation.voter).expect("validated").frozen = false,
                ChainAction::Init(entry) => {
                    chains.insert(
                        mutation.voter,
                        BallotChain {
                            entries: vec![entry],
                            frozen: false,
                        },
                    );
                }
            }
        }
        Effect::Update { voter, entries } => {
            for (c, entry) in entries {
                state
                    .chains
                    .get_mut(&c)
                    .and_then(|m| m.get_mut(&voter))
                    .expect("validated")
                    .entries
                    .push(entry);
            }
        }
        Effect::Tally(result) => state.tallies.push(PublishedTally { event, result }),
    }
}

/// Creates the initial ballots for `voter` in `collections` directly. The
/// same rule runs implicitly on registration and whitelist additions.
pub fn init_ballots<G: Group>(
    state: &mut BoardState<G>,
    voter: &VoterId,
    collections: &[CollectionId],
) -> Result<(), BoardError> {
    let record = state
        .voters
        .get(voter)
        .ok_or_else(|| BoardError::UnknownVoter(voter.clone()))?;
    let mut created = Vec::new();
    for id in collections {
        let c = state
            .collections
            .get(id)
            .ok_or_else(|| BoardError::UnknownCollection(id.clone()))?;
        if !state.is_whitelisted(voter, id) {
            return Err(BoardError::NotWhitelisted {
                collection: id.clone(),
                voter: voter.clone(),
            });
        }
        if state.chain(voter, id).is_some() {
            return Err(BoardError::ChainExists {
                collection: id.clone(),
                voter: voter.clone(),
            });
        }
        created.push((
            id.clone(),
            initial_entry(state, voter, c, record.active_key(), record.active_epoch()),
        ));
    }
    for (id, entry) in created {
        state.chains.entry(id).or_default().insert(
            voter.clone(),
            BallotChain {
                entries: vec![entry],
                frozen: false,
            },
        );
    }
    Ok(())
}
