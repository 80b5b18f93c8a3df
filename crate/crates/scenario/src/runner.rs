use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Duration;

use multiballot_core::actors::{
    audit_whitelists, hc_submit, individual_verify, participate, roll_mutate, universal_verify, verify_log,
    ActorError, ParticipationStatus, VoterSecrets,
};
use multiballot_core::auth::AuthKeypair;
use multiballot_core::board::{event_digest, Board, BoardConfig, BoardEvent, BoardState, Envelope, WhitelistOp};
use multiballot_core::codec::Digest;
use multiballot_core::group::Group;
use multiballot_core::ids::{CollectionId, TallierId, VoterId};
use multiballot_core::tally::{DecryptionRecord, HcEvidence, TallyError, Talliers};
use multiballot_core::{Ristretto255, TestGroup};
use multiballot_service::{BoardApi, ChainDocument, ClientError, EventsPage, Health, ReadError, Snapshot, SubmitResponse};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::oracle::{oracle_state, oracle_tally};
use crate::privacy::allowed_hc_decryptions;
use crate::scenario::{Action, Adversary, Auditor, Event, GroupChoice, Scenario, Side};

/// In-memory board behind the public API.
pub struct LocalBoard<G: Group>(RefCell<Board<G>>);

impl<G: Group> LocalBoard<G> {
    pub fn new(config: BoardConfig) -> Self {
        LocalBoard(RefCell::new(Board::with_genesis(config).expect("valid genesis")))
    }

    pub fn into_inner(self) -> Board<G> {
        self.0.into_inner()
    }
}

impl<G: Group> BoardApi<G> for LocalBoard<G> {
    fn submit(&self, envelope: &Envelope) -> Result<SubmitResponse, ClientError> {
        let mut b = self.0.borrow_mut();
        Ok(match b.submit(envelope) {
            Ok(ev) => SubmitResponse::Accepted {
                index: ev.index,
                head: ev.digest,
            },
            Err(e) => SubmitResponse::Rejected {
                code: e.code().into(),
                message: e.to_string(),
                head: b.head(),
            },
        })
    }

    fn snapshot(&self) -> Result<Snapshot<G>, ClientError> {
        let b = self.0.borrow();
        Ok(Snapshot {
            head: b.head(),
            height: b.state().height,
            state: b.state().clone(),
        })
    }

    fn chain(&self, collection: &CollectionId, voter: &VoterId) -> Result<ChainDocument<G>, ClientError> {
        let b = self.0.borrow();
        let chain = b.state().chain(voter, collection).ok_or_else(|| {
            ClientError::Read(ReadError {
                code: "NO_BALLOT".into(),
                message: format!("{voter} holds no ballot in {collection}"),
            })
        })?;
        Ok(ChainDocument {
            head: b.head(),
            collection: collection.clone(),
            voter: voter.clone(),
            chain: chain.clone(),
        })
    }

    fn events(&self, from: u64, _wait: Duration) -> Result<EventsPage, ClientError> {
        let b = self.0.borrow();
        let start = (from as usize).min(b.events().len());
        Ok(EventsPage {
            head: b.head(),
            height: b.state().height,
            from,
            events: b.events()[start..].to_vec(),
        })
    }

    fn health(&self) -> Result<Health, ClientError> {
        let b = self.0.borrow();
        Ok(Health {
            status: "ok".into(),
            group: G::NAME.into(),
            head: b.head(),
            height: b.state().height,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("board: {0}")]
    Client(#[from] ClientError),
    #[error("talliers: {0}")]
    Tally(#[from] TallyError),
    #[error("actor: {0}")]
    Actor(#[from] ActorError),
    #[error("remote board runs group {remote}, scenario wants {wanted}")]
    GroupMismatch { remote: String, wanted: String },
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub pass: bool,
    pub findings: Vec<String>,
}

impl Check {
    fn from(findings: Vec<String>) -> Self {
        Check {
            pass: findings.is_empty(),
            findings,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TallyRecord {
    /// `None` for the final tally after the script.
    pub time: Option<u64>,
    pub collection: CollectionId,
    pub protocol: u64,
    pub oracle: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub seed: u64,
    pub group: GroupChoice,
    pub head: Digest,
    pub events: u64,
    pub entries: u64,
    pub stale_retries: u64,
    pub checks: BTreeMap<String, Check>,
    pub tallies: Vec<TallyRecord>,
    /// Adversary → auditor → whether the auditor raised a finding.
    pub detection: BTreeMap<String, BTreeMap<String, bool>>,
    /// Auditors that fired in a run without adversaries.
    pub false_positives: Vec<String>,
    /// Scripted actions that had no effect, with the reason.
    pub skipped: Vec<String>,
    pub ok: bool,
}

impl Verdict {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verdicts serialize")
    }

    pub fn fired(&self, auditor: Auditor) -> bool {
        let name = match auditor {
            Auditor::Individual => "individual_audits",
            Auditor::Universal => "universal_verify",
            Auditor::HcAudit => "hc_audit",
            Auditor::Whitelist => "whitelist_audit",
            Auditor::Oracle => "oracle_tallies",
        };
        self.checks.get(name).is_some_and(|c| !c.pass)
    }
}

/// Verdict plus the public artifacts of the run.
pub struct Run<G: Group> {
    pub verdict: Verdict,
    pub state: BoardState<G>,
    pub events: Vec<BoardEvent>,
    /// Decryptions performed by the final hybrid-channel audit.
    pub hc_decryptions: Vec<DecryptionRecord<G>>,
}

struct Keys<G: Group> {
    rng: ChaCha20Rng,
    talliers: Talliers<G>,
    roll: AuthKeypair,
    hc: AuthKeypair,
}

fn keys<G: Group>(s: &Scenario) -> Keys<G> {
    let mut rng = ChaCha20Rng::seed_from_u64(s.seed);
    let ids: Vec<_> = (1..=s.talliers).map(|i| TallierId::new(format!("T{i}"))).collect();
    let talliers = Talliers::new(&ids, &mut rng);
    let roll = AuthKeypair::generate(&mut rng);
    let hc = AuthKeypair::generate(&mut rng);
    Keys {
        rng,
        talliers,
        roll,
        hc,
    }
}

/// The configuration a board must be started with to run `s` remotely.
pub fn genesis_for(s: &Scenario) -> BoardConfig {
    fn cfg<G: Group>(s: &Scenario) -> BoardConfig {
        let k = keys::<G>(s);
        BoardConfig {
            group: G::NAME.into(),
            talliers: k.talliers.roster(),
            roll: k.roll.public(),
            hc: k.hc.public(),
        }
    }
    match s.group {
        GroupChoice::Ristretto255 => cfg::<Ristretto255>(s),
        GroupChoice::SchnorrTest => cfg::<TestGroup>(s),
    }
}

/// Runs `s` on a fresh in-process board.
pub fn run(s: &Scenario) -> Result<Verdict, RunError> {
    match s.group {
        GroupChoice::Ristretto255 => run_local::<Ristretto255>(s).map(|r| r.verdict),
        GroupChoice::SchnorrTest => run_local::<TestGroup>(s).map(|r| r.verdict),
    }
}

pub fn run_local<G: Group>(s: &Scenario) -> Result<Run<G>, RunError> {
    let board = LocalBoard::<G>::new(genesis_for(s));
    execute(s, &board)
}

/// Privacy maps become a final round of participations on the chosen side.
pub fn materialize(s: &Scenario, side: Option<Side>) -> Scenario {
    let mut out = s.clone();
    let Some(p) = out.privacy.take() else { return out };
    let Some(side) = side else { return out };
    let t = s.horizon() + 1;
    for v in p.voters() {
        out.steps.push(crate::scenario::Step {
            time: t,
            action: Action::Participate {
                sign: p.choices(side, &v),
                voter: v,
            },
        });
    }
    out
}

/// Runs `s` against `api`, which must have been started from
/// [`genesis_for`].
pub fn execute<G: Group>(s: &Scenario, api: &dyn BoardApi<G>) -> Result<Run<G>, RunError> {
    let health = api.health()?;
    if health.group != G::NAME {
        return Err(RunError::GroupMismatch {
            remote: health.group,
            wanted: G::NAME.into(),
        });
    }
    let k = keys::<G>(s);
    let mut r = Runner {
        s,
        api,
        rng: k.rng,
        talliers: k.talliers,
        roll: k.roll,
        hc: k.hc,
        voters: BTreeMap::new(),
        evidence: Vec::new(),
        hc_expected: BTreeMap::new(),
        tallies: Vec::new(),
        unexpected: Vec::new(),
        universal: Vec::new(),
        individual: Vec::new(),
        stale_retries: 0,
        skipped: Vec::new(),
    };
    let timeline = s.timeline();
    let mut i = 0;
    while i < timeline.len() {
        let (t, ev) = &timeline[i];
        if s.race {
            if let Event::Action(Action::Participate { .. }) = ev {
                let mut batch = vec![];
                while let Some((t2, Event::Action(Action::Participate { voter, sign }))) = timeline.get(i) {
                    if t2 != t {
                        break;
                    }
                    batch.push((voter.clone(), sign.clone()));
                    i += 1;
                }
                r.participate_batch(*t, &batch)?;
                continue;
            }
        }
        r.event(*t, ev)?;
        i += 1;
    }
    r.finish()
}

struct Runner<'a, G: Group> {
    s: &'a Scenario,
    api: &'a dyn BoardApi<G>,
    rng: ChaCha20Rng,
    talliers: Talliers<G>,
    roll: AuthKeypair,
    hc: AuthKeypair,
    voters: BTreeMap<VoterId, VoterSecrets<G>>,
    evidence: Vec<HcEvidence>,
    /// HC entries each voter asked for, per ballot.
    hc_expected: BTreeMap<(CollectionId, VoterId), u32>,
    tallies: Vec<TallyRecord>,
    unexpected: Vec<String>,
    universal: Vec<String>,
    individual: Vec<String>,
    stale_retries: u64,
    skipped: Vec<String>,
}

impl<G: Group> Runner<'_, G> {
    fn state(&self) -> Result<BoardState<G>, RunError> {
        Ok(self.api.snapshot()?.state)
    }

    /// Submits; an honest submission that is refused is a finding.
    fn submit(&mut self, env: &Envelope, what: impl FnOnce() -> String, honest: bool) -> Result<SubmitResponse, RunError> {
        let r = self.api.submit(env)?;
        if honest {
            if let SubmitResponse::Rejected { code, message, .. } = &r {
                self.unexpected.push(format!("{}: {code} {message}", what()));
            }
        }
        Ok(r)
    }

    fn skip(&mut self, t: u64, what: String) {
        self.skipped.push(format!("t={t}: {what}"));
    }

    fn event(&mut self, t: u64, ev: &Event) -> Result<(), RunError> {
        match ev {
            Event::Open(c) => {
                let title = self.s.collection(c).map(|x| x.title.clone()).unwrap_or_default();
                let title = if title.is_empty() { c.to_string() } else { title };
                let env = self.talliers.open_collection(c, &title, &mut self.rng)?;
                self.submit(&env, || format!("open {c}"), true)?;
            }
            Event::Close(c) => {
                let env = self.talliers.close_collection(c);
                self.submit(&env, || format!("close {c}"), true)?;
            }
            Event::Register(v) => {
                let secrets = VoterSecrets::generate(v.clone(), &mut self.rng);
                let r = self.submit(&secrets.register(), || format!("register {v}"), true)?;
                if r.is_accepted() {
                    self.voters.insert(v.clone(), secrets);
                }
            }
            Event::Roll { op, voter, collection } | Event::Action(Action::Roll { op, voter, collection }) => {
                let env = roll_mutate::<G>(&self.roll, collection, (*op).into(), voter);
                if let Some(code) = self.api.submit(&env)?.code() {
                    self.skip(t, format!("roll {op:?} {voter} in {collection}: {code}"));
                }
            }
            Event::Action(Action::Participate { voter, sign }) => self.participate(t, voter, sign)?,
            Event::Action(Action::Rotate { voter, lose_old }) => {
                let Some(secrets) = self.voters.get_mut(voter) else {
                    self.skip(t, format!("rotate {voter}: not registered"));
                    return Ok(());
                };
                let env = secrets.rotate(*lose_old, &mut self.rng);
                self.submit(&env, || format!("rotate {voter}"), true)?;
            }
            Event::Action(Action::Hc { voter, sign }) => self.hc_honest(t, voter, sign)?,
            Event::Action(Action::Tally { collection }) | Event::Tally(collection) => {
                self.tally(Some(t), collection)?;
            }
            Event::Action(Action::Audit { voter }) => {
                let state = self.state()?;
                let intended = oracle_state(self.s, t).intended(voter);
                self.audit(&state, voter, &intended);
            }
            Event::Attack(a) => self.attack(t, a)?,
        }
        Ok(())
    }

    fn pd_choices(&self, voter: &VoterId, sign: &[CollectionId]) -> BTreeSet<CollectionId> {
        let mut choices: BTreeSet<_> = sign.iter().cloned().collect();
        for a in &self.s.adversaries {
            match a {
                Adversary::PdDropsSign { voter: v, collection } if v == voter => {
                    choices.remove(collection);
                }
                Adversary::PdStuffsSign { voter: v, collection } if v == voter => {
                    choices.insert(collection.clone());
                }
                _ => {}
            }
        }
        choices
    }

    /// Builds the voter's update on `state`; `None` if there is nothing to
    /// cover.
    fn build(&mut self, state: &BoardState<G>, voter: &VoterId, sign: &[CollectionId]) -> Result<Option<Envelope>, RunError> {
        let cover: BTreeSet<_> = state.required_cover(voter).into_iter().collect();
        if cover.is_empty() {
            return Ok(None);
        }
        let choices: BTreeSet<_> = self.pd_choices(voter, sign).intersection(&cover).cloned().collect();
        Ok(Some(participate(&self.voters[voter], state, &choices, &mut self.rng)?))
    }

    fn participate(&mut self, t: u64, voter: &VoterId, sign: &[CollectionId]) -> Result<(), RunError> {
        if !self.voters.contains_key(voter) {
            self.skip(t, format!("participate {voter}: not registered"));
            return Ok(());
        }
        loop {
            let state = self.state()?;
            let Some(env) = self.build(&state, voter, sign)? else {
                self.skip(t, format!("participate {voter}: no open ballot"));
                return Ok(());
            };
            match self.api.submit(&env)? {
                SubmitResponse::Rejected { code, .. } if code == "STALE_SNAPSHOT" => self.stale_retries += 1,
                r => {
                    if let SubmitResponse::Rejected { code, message, .. } = r {
                        self.unexpected.push(format!("participate {voter}: {code} {message}"));
                    }
                    return Ok(());
                }
            }
        }
    }

    /// All updates built on one snapshot; the losers of the race rebuild.
    fn participate_batch(&mut self, t: u64, batch: &[(VoterId, Vec<CollectionId>)]) -> Result<(), RunError> {
        let state = self.state()?;
        let mut built = vec![];
        for (voter, sign) in batch {
            if !self.voters.contains_key(voter) {
                self.skip(t, format!("participate {voter}: not registered"));
                continue;
            }
            match self.build(&state, voter, sign)? {
                Some(env) => built.push((voter, sign, env)),
                None => self.skip(t, format!("participate {voter}: no open ballot")),
            }
        }
        for (voter, sign, env) in built {
            match self.api.submit(&env)? {
                SubmitResponse::Accepted { .. } => {}
                SubmitResponse::Rejected { code, .. } if code == "STALE_SNAPSHOT" => {
                    self.stale_retries += 1;
                    self.participate(t, voter, sign)?;
                }
                SubmitResponse::Rejected { code, message, .. } => {
                    self.unexpected.push(format!("participate {voter}: {code} {message}"))
                }
            }
        }
        Ok(())
    }

    fn hc_honest(&mut self, t: u64, voter: &VoterId, sign: &[CollectionId]) -> Result<(), RunError> {
        let state = self.state()?;
        let cover: BTreeSet<_> = state.required_cover(voter).into_iter().collect();
        if cover.is_empty() {
            self.skip(t, format!("hc for {voter}: no open ballot"));
            return Ok(());
        }
        let choices: BTreeSet<_> = sign.iter().filter(|c| cover.contains(c)).cloned().collect();
        let paper = format!("paper/{voter}/{t}");
        let (env, ev) = hc_submit(&self.hc, &state, voter, &choices, paper.as_bytes(), &mut self.rng)?;
        if self.submit(&env, || format!("hc for {voter}"), true)?.is_accepted() {
            self.evidence.extend(ev);
            for c in cover {
                *self.hc_expected.entry((c, voter.clone())).or_default() += 1;
            }
        }
        Ok(())
    }

    fn attack(&mut self, t: u64, a: &Adversary) -> Result<(), RunError> {
        match a {
            Adversary::HcStuffs { voter, collection, .. } | Adversary::HcDrops { voter, collection, .. } => {
                let state = self.state()?;
                if !state.required_cover(voter).contains(collection) {
                    self.skip(t, format!("{}: {voter} has no open ballot in {collection}", a.label()));
                    return Ok(());
                }
                let choices = BTreeSet::from([collection.clone()]);
                let paper = format!("paper/{voter}/{t}");
                let (env, ev) = hc_submit(&self.hc, &state, voter, &choices, paper.as_bytes(), &mut self.rng)?;
                if matches!(a, Adversary::HcStuffs { .. }) {
                    self.api.submit(&env)?;
                } else {
                    self.evidence.extend(ev);
                }
            }
            Adversary::RollStuffs { voter, collection, .. } => {
                let env = roll_mutate::<G>(&self.roll, collection, WhitelistOp::Add, voter);
                self.api.submit(&env)?;
                let ghost = VoterSecrets::<G>::generate(voter.clone(), &mut self.rng);
                self.api.submit(&ghost.register())?;
                let state = self.state()?;
                let choices = BTreeSet::from([collection.clone()]);
                if let Ok(env) = participate(&ghost, &state, &choices, &mut self.rng) {
                    self.api.submit(&env)?;
                }
            }
            Adversary::ForgedTally { collection, .. } => {
                let state = self.state()?;
                if !state.collections.contains_key(collection) {
                    self.skip(t, format!("forged tally: {collection} not open yet"));
                    return Ok(());
                }
                let mut forged = self.talliers.tally(&state, collection, None, &mut self.rng)?;
                forged.count += 1;
                if let Some(p) = forged.partials.first_mut() {
                    p.factor = G::combine(&p.factor, &G::generator());
                }
                let env = self.talliers.publish(&forged);
                if let SubmitResponse::Rejected { code, .. } = self.api.submit(&env)? {
                    self.universal.push(format!("board refused forged tally for {collection}: {code}"));
                }
                // The same message as a corrupt board would have logged it.
                let mut events = self.api.events(0, Duration::ZERO)?.events;
                let prev = events.last().map_or(Digest::ZERO, |e| e.digest);
                let index = events.len() as u64;
                events.push(BoardEvent {
                    index,
                    prev,
                    digest: event_digest(&prev, index, &env),
                    envelope: env,
                });
                let report = verify_log::<G>(&events);
                if !report.ok() {
                    self.universal
                        .push(format!("log with forged tally for {collection}: {} findings", report.findings.len()));
                }
            }
            Adversary::PdDropsSign { .. } | Adversary::PdStuffsSign { .. } => {}
        }
        Ok(())
    }

    fn tally(&mut self, time: Option<u64>, collection: &CollectionId) -> Result<(), RunError> {
        let state = self.state()?;
        if !state.collections.contains_key(collection) {
            self.skip(time.unwrap_or(u64::MAX), format!("tally {collection}: not open yet"));
            return Ok(());
        }
        let result = self.talliers.tally(&state, collection, None, &mut self.rng)?;
        let env = self.talliers.publish(&result);
        self.submit(&env, || format!("publish tally of {collection}"), true)?;
        self.tallies.push(TallyRecord {
            time,
            collection: collection.clone(),
            protocol: result.count,
            oracle: oracle_tally(self.s, collection, time.unwrap_or(u64::MAX)),
        });
        Ok(())
    }

    /// The voter's audit device against what the voter knows they did.
    fn audit(&mut self, state: &BoardState<G>, voter: &VoterId, intended: &BTreeSet<CollectionId>) {
        let Some(secrets) = self.voters.get(voter) else { return };
        let out = individual_verify(secrets, state);
        if !out.keys_match {
            self.individual.push(format!("{voter}: audit keys on the board are not mine"));
        }
        for (c, a) in &out.collections {
            if !a.chain_valid {
                self.individual.push(format!("{voter}/{c}: invalid chain {:?}", a.fault));
            }
            match (a.status, intended.contains(c)) {
                (ParticipationStatus::Signed, false) => {
                    self.individual.push(format!("{voter}/{c}: shows Signed, never signed"))
                }
                (ParticipationStatus::NotSigned, true) => {
                    self.individual.push(format!("{voter}/{c}: signed, shows NotSigned"))
                }
                _ => {}
            }
            let asked = self.hc_expected.get(&(c.clone(), voter.clone())).copied().unwrap_or(0);
            if a.hc_entries > asked {
                self.individual
                    .push(format!("{voter}/{c}: {} hybrid-channel entries, asked for {asked}", a.hc_entries));
            }
        }
    }

    fn finish(mut self) -> Result<Run<G>, RunError> {
        let s = self.s;
        let state = self.state()?;
        let collections: Vec<CollectionId> = state.collections.keys().cloned().collect();
        for c in &collections {
            self.tally(None, c)?;
        }
        let state = self.state()?;
        let events = self.api.events(0, Duration::ZERO)?.events;
        let fin = oracle_state(s, u64::MAX);
        let mut checks = BTreeMap::new();

        checks.insert("honest_submissions".to_string(), Check::from(std::mem::take(&mut self.unexpected)));

        let oracle: Vec<String> = self
            .tallies
            .iter()
            .filter(|r| r.protocol != r.oracle)
            .map(|r| format!("{} at {:?}: protocol {} oracle {}", r.collection, r.time, r.protocol, r.oracle))
            .collect();
        checks.insert("oracle_tallies".into(), Check::from(oracle));

        let mut monotone = vec![];
        let mut last: BTreeMap<&CollectionId, u64> = BTreeMap::new();
        for r in &self.tallies {
            let prev = last.insert(&r.collection, r.protocol).unwrap_or(0);
            if r.protocol < prev {
                monotone.push(format!("{} fell from {prev} to {}", r.collection, r.protocol));
            }
        }
        checks.insert("monotone_tallies".into(), Check::from(monotone));

        // Single-voter tallies of repeat signers, a handful per run.
        let mut idem = vec![];
        let repeat: Vec<_> = fin.sign_counts.iter().filter(|(_, n)| **n > 1).map(|(k, _)| k.clone()).take(4).collect();
        for (c, v) in repeat {
            if state.chain(&v, &c).is_none() {
                continue;
            }
            let r = self.talliers.tally(&state, &c, Some(std::slice::from_ref(&v)), &mut self.rng)?;
            if r.count != 1 {
                idem.push(format!("{v} in {c} contributes {}", r.count));
            }
        }
        checks.insert("idempotent_resign".into(), Check::from(idem));

        let voters: Vec<VoterId> = s.voters.iter().map(|v| v.id.clone()).collect();
        for v in &voters {
            let intended = fin.intended(v);
            self.audit(&state, v, &intended);
        }
        checks.insert("individual_audits".into(), Check::from(std::mem::take(&mut self.individual)));

        let report = universal_verify(&state, &events);
        let mut universal = std::mem::take(&mut self.universal);
        universal.extend(report.findings.iter().map(|f| format!("{f:?}")));
        checks.insert("universal_verify".into(), Check::from(universal));
        let mut replay = vec![];
        if report.head != state.head {
            replay.push(format!("replayed head {} differs from {}", report.head, state.head));
        }
        checks.insert("replay_determinism".into(), Check::from(replay));

        self.talliers.decryptions.clear();
        let hc = self.talliers.hc_audit(&state, &self.evidence, &mut self.rng);
        let hc_decryptions = std::mem::take(&mut self.talliers.decryptions);
        checks.insert(
            "hc_audit".into(),
            Check::from(hc.failures().map(|i| format!("{:?} {:?}: {}", i.check, i.outcome, i.detail)).collect()),
        );
        let allowed = allowed_hc_decryptions(&state, &self.evidence);
        let extra: Vec<String> = hc_decryptions
            .iter()
            .filter(|d| !allowed.contains(&d.ciphertext))
            .map(|d| format!("decrypted {:?} in {}", d.purpose, d.collection))
            .collect();
        checks.insert("hc_audit_decryptions".into(), Check::from(extra));

        let wl: Vec<String> = audit_whitelists(&state, &fin.members)
            .iter()
            .map(|f| format!("{f:?}"))
            .collect();
        checks.insert("whitelist_audit".into(), Check::from(wl));

        let mut verdict = Verdict {
            name: s.name.clone(),
            seed: s.seed,
            group: s.group,
            head: state.head,
            events: events.len() as u64,
            entries: state.entry_count() as u64,
            stale_retries: self.stale_retries,
            checks,
            tallies: self.tallies,
            detection: BTreeMap::new(),
            false_positives: vec![],
            skipped: self.skipped,
            ok: false,
        };
        let fired: BTreeMap<String, bool> = Auditor::ALL
            .iter()
            .map(|a| (a.label().to_string(), verdict.fired(*a)))
            .collect();
        for a in &s.adversaries {
            verdict.detection.insert(a.label().to_string(), fired.clone());
        }
        verdict.ok = if s.adversaries.is_empty() {
            verdict.false_positives = fired.iter().filter(|(_, f)| **f).map(|(a, _)| a.clone()).collect();
            verdict.checks.values().all(|c| c.pass)
        } else {
            s.adversaries.iter().all(|a| a.designated().iter().all(|d| verdict.fired(*d)))
        };
        Ok(Run {
            verdict,
            state,
            events,
            hc_decryptions,
        })
    }
}
