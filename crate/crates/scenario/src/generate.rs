//! Seeded random scenarios.

use std::collections::{BTreeMap, BTreeSet};

use multiballot_core::ids::{CollectionId, VoterId};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::scenario::{
    Action, Adversary, CollectionSpec, Eligibility, GroupChoice, PrivacySpec, RollOp, Scenario, Step, VoterSpec,
};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenParams {
    pub max_voters: usize,
    pub max_collections: usize,
    pub horizon: u64,
    pub group: GroupChoice,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_voters: 50,
            max_collections: 8,
            horizon: 10,
            group: GroupChoice::Ristretto255,
        }
    }
}

fn cid(i: usize) -> CollectionId {
    CollectionId::new(format!("C{}", i + 1))
}

fn vid(i: usize) -> VoterId {
    VoterId::new(format!("v{i:02}"))
}

fn subset<R: Rng>(rng: &mut R, items: &[CollectionId], p: f64) -> Vec<CollectionId> {
    items.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

/// Honest scenario with staggered open/close times, late and revoked
/// eligibility, re-admissions, key rotations, hybrid-channel submissions,
/// interim tallies and audits.
pub fn random_scenario(seed: u64, p: &GenParams) -> Scenario {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x5ce7_a210);
    let n_c = rng.gen_range(1..=p.max_collections.max(1));
    let n_v = rng.gen_range(2.min(p.max_voters)..=p.max_voters.max(2));
    let h = p.horizon.max(4);

    let collections: Vec<CollectionSpec> = (0..n_c)
        .map(|i| {
            let open = rng.gen_range(0..=h / 3);
            let close = rng.gen_bool(0.5).then(|| rng.gen_range(open + 2..=h + 1));
            CollectionSpec {
                id: cid(i),
                title: format!("Initiative {}", i + 1),
                open,
                close,
            }
        })
        .collect();
    let ids: Vec<CollectionId> = collections.iter().map(|c| c.id.clone()).collect();

    let mut steps = vec![];
    let voters: Vec<VoterSpec> = (0..n_v)
        .map(|i| {
            let register = rng.gen_range(0..=h / 2);
            let mut eligible = vec![];
            for c in &collections {
                if !rng.gen_bool(0.85) {
                    continue;
                }
                let from = c.open + rng.gen_range(0..=2);
                if c.close.is_some_and(|t| from > t) {
                    continue;
                }
                let until = rng.gen_bool(0.15).then(|| from + rng.gen_range(1..=4));
                if let Some(u) = until {
                    if rng.gen_bool(0.3) {
                        steps.push(Step {
                            time: u + 1,
                            action: Action::Roll {
                                op: RollOp::Add,
                                voter: vid(i),
                                collection: c.id.clone(),
                            },
                        });
                    }
                }
                eligible.push(Eligibility {
                    collection: c.id.clone(),
                    from,
                    until,
                });
            }
            VoterSpec {
                id: vid(i),
                register,
                eligible,
            }
        })
        .collect();

    for t in 1..=h {
        for i in 0..n_v {
            let x: f64 = rng.gen();
            let action = if x < 0.25 {
                Action::Participate {
                    voter: vid(i),
                    sign: subset(&mut rng, &ids, 0.35),
                }
            } else if x < 0.27 {
                Action::Hc {
                    voter: vid(i),
                    sign: subset(&mut rng, &ids, 0.5),
                }
            } else if x < 0.29 {
                Action::Rotate {
                    voter: vid(i),
                    lose_old: rng.gen_bool(0.5),
                }
            } else if x < 0.30 {
                Action::Audit { voter: vid(i) }
            } else {
                continue;
            };
            steps.push(Step { time: t, action });
        }
        if rng.gen_bool(0.4) {
            steps.push(Step {
                time: t,
                action: Action::Tally {
                    collection: ids.choose(&mut rng).unwrap().clone(),
                },
            });
        }
    }
    steps.sort_by_key(|s| s.time);
    Scenario {
        name: format!("random-{seed}"),
        seed,
        group: p.group,
        talliers: rng.gen_range(1..=3),
        race: rng.gen_bool(0.25),
        collections,
        voters,
        steps,
        adversaries: vec![],
        privacy: None,
    }
}

/// Small scenario with three voters and two collections: every kind of
/// honest action, and `adversary` (if any) placed so that it changes the
/// outcome. `v0` never signs `C1` honestly.
pub fn detection_scenario(seed: u64, adversary: Option<&str>) -> Scenario {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0xde7e_c7ed);
    let ids = [cid(0), cid(1)];
    let voters: Vec<VoterSpec> = (0..3)
        .map(|i| VoterSpec {
            id: vid(i),
            register: 0,
            eligible: ids
                .iter()
                .map(|c| Eligibility {
                    collection: c.clone(),
                    from: 0,
                    until: None,
                })
                .collect(),
        })
        .collect();
    let c2 = vec![cid(1)];
    let mut steps = vec![];
    // v0: signs C2 directly or through the hybrid channel, never C1.
    let v0_sign = if adversary == Some("pd_drops_sign") {
        vec![cid(0)]
    } else {
        c2.clone()
    };
    steps.push(Step {
        time: 1,
        action: Action::Participate {
            voter: vid(0),
            sign: v0_sign,
        },
    });
    for i in 1..3 {
        let sign = subset(&mut rng, &ids, 0.5);
        let action = if rng.gen_bool(0.3) {
            Action::Hc { voter: vid(i), sign }
        } else {
            Action::Participate { voter: vid(i), sign }
        };
        steps.push(Step { time: 1, action });
    }
    if rng.gen_bool(0.3) {
        steps.push(Step {
            time: 2,
            action: Action::Rotate {
                voter: vid(rng.gen_range(1..3)),
                lose_old: rng.gen_bool(0.5),
            },
        });
    }
    steps.push(Step {
        time: 2,
        action: Action::Tally { collection: cid(0) },
    });
    for i in 0..3 {
        let sign = if i == 0 { vec![] } else { subset(&mut rng, &ids, 0.5) };
        if rng.gen_bool(0.5) {
            steps.push(Step {
                time: 3,
                action: Action::Participate { voter: vid(i), sign },
            });
        }
    }
    let adversaries = match adversary {
        None => vec![],
        Some("pd_drops_sign") => vec![Adversary::PdDropsSign {
            voter: vid(0),
            collection: cid(0),
        }],
        Some("pd_stuffs_sign") => vec![Adversary::PdStuffsSign {
            voter: vid(0),
            collection: cid(0),
        }],
        Some("hc_stuffs") => vec![Adversary::HcStuffs {
            voter: vid(0),
            collection: cid(0),
            time: 2,
        }],
        Some("hc_drops") => vec![Adversary::HcDrops {
            voter: vid(0),
            collection: cid(0),
            time: 2,
        }],
        Some("roll_stuffs") => vec![Adversary::RollStuffs {
            voter: VoterId::new("ghost"),
            collection: cid(0),
            time: 2,
        }],
        Some("forged_tally") => vec![Adversary::ForgedTally {
            collection: cid(0),
            time: 3,
        }],
        Some(other) => panic!("unknown adversary {other}"),
    };
    Scenario {
        name: format!("detection-{}-{seed}", adversary.unwrap_or("honest")),
        seed,
        group: GroupChoice::Ristretto255,
        talliers: 2,
        race: false,
        collections: ids
            .iter()
            .map(|c| CollectionSpec {
                id: c.clone(),
                title: String::new(),
                open: 0,
                close: None,
            })
            .collect(),
        voters,
        steps,
        adversaries,
        privacy: None,
    }
}

/// A scenario with privacy maps: `f` and `g` assign the same number of
/// signers to each collection but different voters.
pub fn privacy_scenario(seed: u64, voters: usize, collections: usize) -> Scenario {
    let mut rng = ChaCha20Rng::seed_from_u64(seed ^ 0x9e1f);
    let mut s = random_scenario(
        seed,
        &GenParams {
            max_voters: voters,
            max_collections: collections,
            horizon: 4,
            group: GroupChoice::Ristretto255,
        },
    );
    // Everybody eligible everywhere for the whole run, nobody revoked.
    let horizon = s.horizon();
    for c in &mut s.collections {
        c.open = 0;
        c.close = None;
    }
    for v in &mut s.voters {
        v.register = 0;
        v.eligible = s
            .collections
            .iter()
            .map(|c| Eligibility {
                collection: c.id.clone(),
                from: 0,
                until: None,
            })
            .collect();
    }
    // Signatures are irrevocable, so the mapped voters must not have acted
    // before: the first half of the roll keeps its script, the rest only
    // take part through f or g.
    let fresh: Vec<VoterId> = s.voters.iter().skip(s.voters.len() / 2).map(|v| v.id.clone()).collect();
    s.steps.retain(|st| st.time <= horizon && !matches!(st.action, Action::Roll { .. }));
    s.steps.retain(|st| !step_voter(&st.action).is_some_and(|v| fresh.contains(v)));
    let all = fresh;
    let mut f = BTreeMap::new();
    let mut g = BTreeMap::new();
    for c in &s.collections {
        let k = rng.gen_range(0..=all.len());
        let pick = |rng: &mut ChaCha20Rng| -> BTreeSet<VoterId> { all.choose_multiple(rng, k).cloned().collect() };
        f.insert(c.id.clone(), pick(&mut rng));
        g.insert(c.id.clone(), pick(&mut rng));
    }
    s.name = format!("privacy-{seed}");
    s.privacy = Some(PrivacySpec { f, g });
    s
}

fn step_voter(a: &Action) -> Option<&VoterId> {
    match a {
        Action::Participate { voter, .. }
        | Action::Rotate { voter, .. }
        | Action::Roll { voter, .. }
        | Action::Hc { voter, .. }
        | Action::Audit { voter } => Some(voter),
        Action::Tally { .. } => None,
    }
}
