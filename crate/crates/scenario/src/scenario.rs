//! Declarative scenario files. Time is logical: integer steps, no clock.
//!
//! Within one time step events happen in this order: collections open,
//! voters register, eligibility changes, script steps in file order,
//! adversary actions, tallies, collections close.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use multiballot_core::board::WhitelistOp;
use multiballot_core::ids::{CollectionId, VoterId};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GroupChoice {
    #[serde(rename = "ristretto255")]
    Ristretto255,
    #[serde(rename = "schnorr-test")]
    SchnorrTest,
}

impl fmt::Display for GroupChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupChoice::Ristretto255 => "ristretto255",
            GroupChoice::SchnorrTest => "schnorr-test",
        })
    }
}

fn default_group() -> GroupChoice {
    GroupChoice::Ristretto255
}

fn default_talliers() -> usize {
    2
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    pub seed: u64,
    #[serde(default = "default_group")]
    pub group: GroupChoice,
    #[serde(default = "default_talliers")]
    pub talliers: usize,
    /// Build same-time participations against one snapshot so that all but
    /// the first go stale and are retried.
    #[serde(default)]
    pub race: bool,
    #[serde(default)]
    pub collections: Vec<CollectionSpec>,
    #[serde(default)]
    pub voters: Vec<VoterSpec>,
    #[serde(default)]
    pub steps: Vec<Step>,
    #[serde(default)]
    pub adversaries: Vec<Adversary>,
    #[serde(default)]
    pub privacy: Option<PrivacySpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionSpec {
    pub id: CollectionId,
    #[serde(default)]
    pub title: String,
    pub open: u64,
    #[serde(default)]
    pub close: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VoterSpec {
    pub id: VoterId,
    #[serde(default)]
    pub register: u64,
    #[serde(default)]
    pub eligible: Vec<Eligibility>,
}

/// The roll adds the voter at `from` and removes them at `until`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Eligibility {
    pub collection: CollectionId,
    pub from: u64,
    #[serde(default)]
    pub until: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Step {
    pub time: u64,
    #[serde(flatten)]
    pub action: Action,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Action {
    Participate {
        voter: VoterId,
        #[serde(default)]
        sign: Vec<CollectionId>,
    },
    Rotate {
        voter: VoterId,
        #[serde(default)]
        lose_old: bool,
    },
    Roll {
        op: RollOp,
        voter: VoterId,
        collection: CollectionId,
    },
    /// Paper signatures handed to the hybrid channel.
    Hc {
        voter: VoterId,
        sign: Vec<CollectionId>,
    },
    Tally {
        collection: CollectionId,
    },
    Audit {
        voter: VoterId,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RollOp {
    Add,
    Remove,
}

impl From<RollOp> for WhitelistOp {
    fn from(op: RollOp) -> Self {
        match op {
            RollOp::Add => WhitelistOp::Add,
            RollOp::Remove => WhitelistOp::Remove,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Adversary {
    /// The voter's participation device turns every Sign for `collection`
    /// into a Carry.
    PdDropsSign { voter: VoterId, collection: CollectionId },
    /// The participation device adds a Sign for `collection` to every
    /// update of the voter.
    PdStuffsSign { voter: VoterId, collection: CollectionId },
    /// The hybrid channel posts a Sign it holds no paper for.
    HcStuffs {
        voter: VoterId,
        collection: CollectionId,
        time: u64,
    },
    /// The hybrid channel takes a paper signature and never posts it.
    HcDrops {
        voter: VoterId,
        collection: CollectionId,
        time: u64,
    },
    /// The roll whitelists a voter outside the eligibility register, who
    /// then signs.
    RollStuffs {
        voter: VoterId,
        collection: CollectionId,
        time: u64,
    },
    /// The talliers publish count + 1 with a doctored partial decryption.
    ForgedTally { collection: CollectionId, time: u64 },
}

impl Adversary {
    pub fn label(&self) -> &'static str {
        match self {
            Adversary::PdDropsSign { .. } => "pd_drops_sign",
            Adversary::PdStuffsSign { .. } => "pd_stuffs_sign",
            Adversary::HcStuffs { .. } => "hc_stuffs",
            Adversary::HcDrops { .. } => "hc_drops",
            Adversary::RollStuffs { .. } => "roll_stuffs",
            Adversary::ForgedTally { .. } => "forged_tally",
        }
    }

    /// Auditors expected to catch this adversary.
    pub fn designated(&self) -> &'static [Auditor] {
        match self {
            Adversary::PdDropsSign { .. } | Adversary::PdStuffsSign { .. } => &[Auditor::Individual],
            Adversary::HcStuffs { .. } | Adversary::HcDrops { .. } => &[Auditor::HcAudit],
            Adversary::RollStuffs { .. } => &[Auditor::Whitelist],
            Adversary::ForgedTally { .. } => &[Auditor::Universal],
        }
    }

    pub const ALL_LABELS: [&'static str; 6] = [
        "pd_drops_sign",
        "pd_stuffs_sign",
        "hc_stuffs",
        "hc_drops",
        "roll_stuffs",
        "forged_tally",
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Auditor {
    /// Each voter's audit device against the voter's own intentions.
    Individual,
    /// Log replay, signatures, proofs and published tallies.
    Universal,
    /// Tallier audit of hybrid-channel submissions.
    HcAudit,
    /// Published whitelists against the eligibility register.
    Whitelist,
    /// Protocol tallies against the plaintext oracle.
    Oracle,
}

impl Auditor {
    pub const ALL: [Auditor; 5] = [
        Auditor::Individual,
        Auditor::Universal,
        Auditor::HcAudit,
        Auditor::Whitelist,
        Auditor::Oracle,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Auditor::Individual => "individual",
            Auditor::Universal => "universal",
            Auditor::HcAudit => "hc_audit",
            Auditor::Whitelist => "whitelist",
            Auditor::Oracle => "oracle",
        }
    }
}

/// Two assignments of signers to collections with equal per-collection
/// counts. After the script, every voter named in either map submits once,
/// signing what their map assigns.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrivacySpec {
    pub f: BTreeMap<CollectionId, BTreeSet<VoterId>>,
    pub g: BTreeMap<CollectionId, BTreeSet<VoterId>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    F,
    G,
}

impl PrivacySpec {
    pub fn voters(&self) -> BTreeSet<VoterId> {
        self.f.values().chain(self.g.values()).flatten().cloned().collect()
    }

    pub fn choices(&self, side: Side, voter: &VoterId) -> Vec<CollectionId> {
        let map = match side {
            Side::F => &self.f,
            Side::G => &self.g,
        };
        map.iter()
            .filter(|(_, vs)| vs.contains(voter))
            .map(|(c, _)| c.clone())
            .collect()
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum ScenarioError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{location}: {reason}")]
    Invalid { location: String, reason: String },
}

fn invalid(location: impl Into<String>, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::Invalid {
        location: location.into(),
        reason: reason.into(),
    }
}

/// One thing that happens at a point of logical time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Event {
    Open(CollectionId),
    Register(VoterId),
    Roll {
        op: RollOp,
        voter: VoterId,
        collection: CollectionId,
    },
    Action(Action),
    Attack(Adversary),
    Tally(CollectionId),
    Close(CollectionId),
}

impl Event {
    fn phase(&self) -> u8 {
        match self {
            Event::Open(_) => 0,
            Event::Register(_) => 1,
            Event::Roll { .. } => 2,
            Event::Action(Action::Roll { .. }) => 2,
            Event::Action(Action::Tally { .. }) => 5,
            Event::Action(_) => 3,
            Event::Attack(Adversary::ForgedTally { .. }) => 5,
            Event::Attack(_) => 4,
            Event::Tally(_) => 5,
            Event::Close(_) => 6,
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenarios serialize")
    }

    /// Last time any event happens.
    pub fn horizon(&self) -> u64 {
        self.timeline().last().map_or(0, |(t, _)| *t)
    }

    pub fn collection(&self, id: &CollectionId) -> Option<&CollectionSpec> {
        self.collections.iter().find(|c| &c.id == id)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.talliers == 0 {
            return Err(invalid("talliers", "at least one tallier is required"));
        }
        let mut cols = BTreeSet::new();
        for (i, c) in self.collections.iter().enumerate() {
            if !cols.insert(&c.id) {
                return Err(invalid(format!("collections[{i}].id"), format!("duplicate collection {}", c.id)));
            }
            if c.close.is_some_and(|t| t < c.open) {
                return Err(invalid(format!("collections[{i}].close"), "closes before it opens"));
            }
        }
        let mut voters = BTreeSet::new();
        for (i, v) in self.voters.iter().enumerate() {
            if !voters.insert(&v.id) {
                return Err(invalid(format!("voters[{i}].id"), format!("duplicate voter {}", v.id)));
            }
            for (j, e) in v.eligible.iter().enumerate() {
                let at = format!("voters[{i}].eligible[{j}]");
                if !cols.contains(&e.collection) {
                    return Err(invalid(at, format!("unknown collection {}", e.collection)));
                }
                if e.until.is_some_and(|u| u <= e.from) {
                    return Err(invalid(at, "eligibility ends before it starts"));
                }
            }
        }
        let col = |at: String, c: &CollectionId| {
            if cols.contains(c) {
                Ok(())
            } else {
                Err(invalid(at, format!("unknown collection {c}")))
            }
        };
        let voter = |at: String, v: &VoterId| {
            if voters.contains(v) {
                Ok(())
            } else {
                Err(invalid(at, format!("unknown voter {v}")))
            }
        };
        for (i, s) in self.steps.iter().enumerate() {
            let at = format!("steps[{i}]");
            match &s.action {
                Action::Participate { voter: v, sign } | Action::Hc { voter: v, sign } => {
                    voter(format!("{at}.voter"), v)?;
                    for c in sign {
                        col(format!("{at}.sign"), c)?;
                    }
                }
                Action::Rotate { voter: v, .. } | Action::Audit { voter: v } => voter(format!("{at}.voter"), v)?,
                Action::Roll { voter: _, collection, .. } => col(format!("{at}.collection"), collection)?,
                Action::Tally { collection } => col(format!("{at}.collection"), collection)?,
            }
        }
        for (i, a) in self.adversaries.iter().enumerate() {
            let at = format!("adversaries[{i}]");
            match a {
                Adversary::PdDropsSign { voter: v, collection }
                | Adversary::PdStuffsSign { voter: v, collection }
                | Adversary::HcStuffs { voter: v, collection, .. }
                | Adversary::HcDrops { voter: v, collection, .. } => {
                    voter(format!("{at}.voter"), v)?;
                    col(format!("{at}.collection"), collection)?;
                }
                Adversary::RollStuffs { voter: v, collection, .. } => {
                    if voters.contains(v) {
                        return Err(invalid(format!("{at}.voter"), "stuffed voter must not be in the register"));
                    }
                    col(format!("{at}.collection"), collection)?;
                }
                Adversary::ForgedTally { collection, .. } => col(format!("{at}.collection"), collection)?,
            }
        }
        if let Some(p) = &self.privacy {
            for (side, map) in [("f", &p.f), ("g", &p.g)] {
                for (c, vs) in map {
                    col(format!("privacy.{side}"), c)?;
                    for v in vs {
                        voter(format!("privacy.{side}.{c}"), v)?;
                    }
                }
            }
            let keys: BTreeSet<_> = p.f.keys().chain(p.g.keys()).collect();
            for c in keys {
                let nf = p.f.get(c).map_or(0, |s| s.len());
                let ng = p.g.get(c).map_or(0, |s| s.len());
                if nf != ng {
                    return Err(invalid(
                        format!("privacy.{c}"),
                        format!("f assigns {nf} signers, g assigns {ng}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Every event in execution order.
    pub fn timeline(&self) -> Vec<(u64, Event)> {
        let mut out: Vec<(u64, Event)> = Vec::new();
        for c in &self.collections {
            out.push((c.open, Event::Open(c.id.clone())));
            if let Some(t) = c.close {
                out.push((t, Event::Close(c.id.clone())));
            }
        }
        for v in &self.voters {
            out.push((v.register, Event::Register(v.id.clone())));
            for e in &v.eligible {
                out.push((
                    e.from,
                    Event::Roll {
                        op: RollOp::Add,
                        voter: v.id.clone(),
                        collection: e.collection.clone(),
                    },
                ));
                if let Some(u) = e.until {
                    out.push((
                        u,
                        Event::Roll {
                            op: RollOp::Remove,
                            voter: v.id.clone(),
                            collection: e.collection.clone(),
                        },
                    ));
                }
            }
        }
        for s in &self.steps {
            out.push((s.time, Event::Action(s.action.clone())));
        }
        for a in &self.adversaries {
            match a {
                Adversary::HcStuffs { time, .. }
                | Adversary::HcDrops { time, .. }
                | Adversary::RollStuffs { time, .. }
                | Adversary::ForgedTally { time, .. } => out.push((*time, Event::Attack(a.clone()))),
                Adversary::PdDropsSign { .. } | Adversary::PdStuffsSign { .. } => {}
            }
        }
        // Stable: equal keys keep declaration order.
        out.sort_by_key(|(t, e)| (*t, e.phase()));
        out
    }
}
