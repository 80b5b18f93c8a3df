//! Falsifiable privacy screens: equal tallies and equal public transcript
//! shapes for two assignments of signers, and the set of ciphertexts the
//! hybrid-channel audit may decrypt.

use std::collections::{BTreeMap, BTreeSet};

use multiballot_core::board::{BoardEvent, BoardState, Origin};
use multiballot_core::codec::to_canonical;
use multiballot_core::elgamal::Ciphertext;
use multiballot_core::group::Group;
use multiballot_core::ids::{CollectionId, VoterId};
use multiballot_core::tally::HcEvidence;
use multiballot_core::{Ristretto255, TestGroup};
use serde::{Deserialize, Serialize};

use crate::runner::{materialize, run_local, RunError, TallyRecord, Verdict};
use crate::scenario::{GroupChoice, Scenario, Side};

/// Ciphertexts an honest hybrid-channel audit needs: the last tallier
/// ciphertext of every properly evidenced ballot and, per collection, the
/// difference over all other hybrid-channel entries.
pub fn allowed_hc_decryptions<G: Group>(state: &BoardState<G>, evidence: &[HcEvidence]) -> Vec<Ciphertext<G>> {
    let mut out = vec![];
    let mut evidenced = BTreeSet::new();
    let pairs: BTreeSet<(CollectionId, VoterId)> =
        evidence.iter().map(|e| (e.collection.clone(), e.voter.clone())).collect();
    for (c, v) in pairs {
        let Some(chain) = state.chain(&v, &c) else { continue };
        let misref = evidence
            .iter()
            .filter(|e| e.collection == c && e.voter == v)
            .any(|e| chain.entries.get(e.entry_index as usize).is_some_and(|x| x.origin != Origin::Hc));
        if !misref {
            out.push(chain.last().pair.tallier);
            evidenced.insert((c, v));
        }
    }
    for (c, chains) in &state.chains {
        let mut posted = vec![];
        let mut before = vec![];
        for (v, chain) in chains {
            if evidenced.contains(&(c.clone(), v.clone())) {
                continue;
            }
            for w in chain.entries.windows(2) {
                if w[1].origin == Origin::Hc {
                    posted.push(w[1].pair.tallier);
                    before.push(w[0].pair.tallier);
                }
            }
        }
        if !posted.is_empty() {
            out.push(Ciphertext::sum(&posted).sub(&Ciphertext::sum(&before)));
        }
    }
    out
}

/// Everything an observer learns about a run except ciphertext values.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptShape {
    /// Kind, payload length and signer of every event.
    pub events: Vec<(String, usize, Vec<String>)>,
    /// Per ballot: entry count, encoded entry sizes and origins.
    pub chains: BTreeMap<(CollectionId, VoterId), Vec<(usize, Origin)>>,
}

pub fn transcript_shape<G: Group>(state: &BoardState<G>, events: &[BoardEvent]) -> TranscriptShape {
    let events = events
        .iter()
        .map(|e| {
            (
                format!("{:?}", e.envelope.kind),
                e.envelope.payload.len(),
                e.envelope.signatures.iter().map(|s| format!("{:?}", s.signer)).collect(),
            )
        })
        .collect();
    let mut chains = BTreeMap::new();
    for (c, m) in &state.chains {
        for (v, chain) in m {
            let shape = chain
                .entries
                .iter()
                .map(|e| (to_canonical(&(&e.pair, &e.proof)).len(), e.origin))
                .collect();
            chains.insert((c.clone(), v.clone()), shape);
        }
    }
    TranscriptShape { events, chains }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivacyReport {
    pub tallies_equal: bool,
    pub transcripts_equal: bool,
    pub f_tallies: Vec<TallyRecord>,
    pub g_tallies: Vec<TallyRecord>,
    pub f: Verdict,
    pub g: Verdict,
}

impl PrivacyReport {
    pub fn ok(&self) -> bool {
        self.tallies_equal && self.transcripts_equal && self.f.ok && self.g.ok
    }
}

/// Runs the scenario once per side of its privacy maps with the same seed.
pub fn run_privacy_pair(s: &Scenario) -> Result<PrivacyReport, RunError> {
    match s.group {
        GroupChoice::Ristretto255 => pair::<Ristretto255>(s),
        GroupChoice::SchnorrTest => pair::<TestGroup>(s),
    }
}

fn pair<G: Group>(s: &Scenario) -> Result<PrivacyReport, RunError> {
    let f = run_local::<G>(&materialize(s, Some(Side::F)))?;
    let g = run_local::<G>(&materialize(s, Some(Side::G)))?;
    let counts = |v: &Verdict| v.tallies.iter().map(|t| (t.collection.clone(), t.time, t.protocol)).collect::<Vec<_>>();
    Ok(PrivacyReport {
        tallies_equal: counts(&f.verdict) == counts(&g.verdict),
        transcripts_equal: transcript_shape(&f.state, &f.events) == transcript_shape(&g.state, &g.events),
        f_tallies: f.verdict.tallies.clone(),
        g_tallies: g.verdict.tallies.clone(),
        f: f.verdict,
        g: g.verdict,
    })
}
