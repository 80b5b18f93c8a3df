//! Plaintext ground truth. Walks the scenario timeline with plain sets and
//! never touches a ciphertext.

use std::collections::{BTreeMap, BTreeSet};

use multiballot_core::ids::{CollectionId, VoterId};

use crate::scenario::{Action, Adversary, Event, RollOp, Scenario};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OracleState {
    pub open: BTreeSet<CollectionId>,
    pub registered: BTreeSet<VoterId>,
    /// Eligibility register as the honest roll keeps it.
    pub members: BTreeMap<CollectionId, BTreeSet<VoterId>>,
    /// Voters who intended to sign, by collection.
    pub signed: BTreeMap<CollectionId, BTreeSet<VoterId>>,
    /// How often each voter intended to sign each collection.
    pub sign_counts: BTreeMap<(CollectionId, VoterId), u32>,
}

impl OracleState {
    fn eligible(&self, v: &VoterId, c: &CollectionId) -> bool {
        self.open.contains(c) && self.registered.contains(v) && self.members.get(c).is_some_and(|m| m.contains(v))
    }

    fn sign(&mut self, v: &VoterId, c: &CollectionId) {
        if self.eligible(v, c) {
            self.signed.entry(c.clone()).or_default().insert(v.clone());
            *self.sign_counts.entry((c.clone(), v.clone())).or_default() += 1;
        }
    }

    fn roll(&mut self, op: RollOp, v: &VoterId, c: &CollectionId) {
        if !self.open.contains(c) {
            return;
        }
        let m = self.members.entry(c.clone()).or_default();
        match op {
            RollOp::Add => m.insert(v.clone()),
            RollOp::Remove => m.remove(v),
        };
    }

    pub fn intended(&self, v: &VoterId) -> BTreeSet<CollectionId> {
        self.signed
            .iter()
            .filter(|(_, vs)| vs.contains(v))
            .map(|(c, _)| c.clone())
            .collect()
    }
}

/// The intended world after every event up to and including `time`.
/// Attacks other than a dropped paper signature do not change intentions.
pub fn oracle_state(s: &Scenario, time: u64) -> OracleState {
    let mut st = OracleState::default();
    for (t, ev) in s.timeline() {
        if t > time {
            break;
        }
        match ev {
            Event::Open(c) => {
                st.open.insert(c);
            }
            Event::Close(c) => {
                st.open.remove(&c);
            }
            Event::Register(v) => {
                st.registered.insert(v);
            }
            Event::Roll { op, voter, collection } | Event::Action(Action::Roll { op, voter, collection }) => {
                st.roll(op, &voter, &collection)
            }
            Event::Action(Action::Participate { voter, sign }) | Event::Action(Action::Hc { voter, sign }) => {
                for c in &sign {
                    st.sign(&voter, c);
                }
            }
            Event::Attack(Adversary::HcDrops { voter, collection, .. }) => st.sign(&voter, &collection),
            _ => {}
        }
    }
    st
}

/// Distinct eligible voters who signed `collection` by `time`.
pub fn oracle_tally(s: &Scenario, collection: &CollectionId, time: u64) -> u64 {
    oracle_state(s, time).signed.get(collection).map_or(0, |v| v.len() as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{CollectionSpec, Eligibility, GroupChoice, Step, VoterSpec};

    fn cid(s: &str) -> CollectionId {
        CollectionId::new(s)
    }

    fn vid(s: &str) -> VoterId {
        VoterId::new(s)
    }

    fn base(voters: &[&str]) -> Scenario {
        Scenario {
            name: String::new(),
            seed: 0,
            group: GroupChoice::Ristretto255,
            talliers: 1,
            race: false,
            collections: vec![CollectionSpec {
                id: cid("C1"),
                title: String::new(),
                open: 0,
                close: Some(9),
            }],
            voters: voters
                .iter()
                .map(|v| VoterSpec {
                    id: vid(v),
                    register: 0,
                    eligible: vec![Eligibility {
                        collection: cid("C1"),
                        from: 0,
                        until: None,
                    }],
                })
                .collect(),
            steps: vec![],
            adversaries: vec![],
            privacy: None,
        }
    }

    fn sign(time: u64, v: &str) -> Step {
        Step {
            time,
            action: Action::Participate {
                voter: vid(v),
                sign: vec![cid("C1")],
            },
        }
    }

    #[test]
    fn two_of_three() {
        let mut s = base(&["a", "b", "c"]);
        s.steps = vec![sign(1, "a"), sign(2, "c")];
        assert_eq!(oracle_tally(&s, &cid("C1"), 0), 0);
        assert_eq!(oracle_tally(&s, &cid("C1"), 1), 1);
        assert_eq!(oracle_tally(&s, &cid("C1"), 5), 2);
    }

    #[test]
    fn removed_signer_still_counts_and_later_signs_do_not() {
        let mut s = base(&["a", "b"]);
        s.voters[0].eligible[0].until = Some(3);
        s.voters[1].eligible[0].until = Some(3);
        s.steps = vec![sign(1, "a"), sign(4, "b")];
        assert_eq!(oracle_tally(&s, &cid("C1"), 9), 1);
    }

    #[test]
    fn resigning_counts_once() {
        let mut s = base(&["a"]);
        s.steps = vec![sign(1, "a"), sign(2, "a")];
        let st = oracle_state(&s, 9);
        assert_eq!(st.signed[&cid("C1")].len(), 1);
        assert_eq!(st.sign_counts[&(cid("C1"), vid("a"))], 2);
    }

    #[test]
    fn closed_or_unregistered_does_not_count() {
        let mut s = base(&["a", "b"]);
        s.voters[1].register = 5;
        s.steps = vec![sign(10, "a"), sign(2, "b"), sign(6, "b")];
        assert_eq!(oracle_state(&s, 20).signed[&cid("C1")], BTreeSet::from([vid("b")]));
    }
}
