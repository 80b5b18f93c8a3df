mod common;

use common::*;
use multiballot_core::actors::{build_update, VoterSecrets};
use multiballot_core::board::{
    audit_replay, init_ballots, Board, BoardError, Envelope, Message, MessageKind, Origin, SignerId, UpdateSet,
    WhitelistOp,
};
use multiballot_core::codec::{from_canonical, to_canonical};
use multiballot_core::elgamal::Ciphertext;
use multiballot_core::group::{Ristretto255, SchnorrElement, TestGroup};
use multiballot_core::zkp::CipherPair;
use proptest::prelude::*;

type W = World<Ristretto255>;

#[test]
fn registration_and_rotation() {
    let mut w = W::new(2, 1);
    w.register("alice");
    assert_eq!(w.board.state().voters[&vid("alice")].audit_keys.len(), 1);

    // Re-announcing the same key is refused.
    let again = w.voters[&vid("alice")].register();
    assert_eq!(w.submit(&again).unwrap_err().code(), "DUPLICATE_REGISTRATION");

    let mut s = w.voters[&vid("alice")].clone();
    let env = s.rotate(false, &mut w.rng);
    w.submit(&env).unwrap();
    w.voters.insert(vid("alice"), s);
    let rec = &w.board.state().voters[&vid("alice")];
    assert_eq!(rec.audit_keys.len(), 2);
    assert_eq!(rec.active_epoch(), 1);
}

#[test]
fn bad_signature_leaves_log_unchanged() {
    let mut w = W::new(1, 2);
    let s = VoterSecrets::<Ristretto255>::generate(vid("bob"), &mut w.rng);
    let other = VoterSecrets::<Ristretto255>::generate(vid("eve"), &mut w.rng);
    let mut env = s.register();
    env.signatures[0].signature = other.auth.sign(&env.signed_bytes());
    let before = w.board.events().len();
    assert_eq!(w.submit(&env).unwrap_err().code(), "BAD_SIGNATURE");
    assert_eq!(w.board.events().len(), before);

    // Someone else claiming an existing id.
    w.submit(&s.register()).unwrap();
    let hijack = VoterSecrets::<Ristretto255>::generate(vid("bob"), &mut w.rng);
    assert_eq!(w.submit(&hijack.register()).unwrap_err().code(), "BAD_SIGNATURE");
}

#[test]
fn collection_open_and_close_rules() {
    let mut w = W::new(2, 3);
    w.open("C1");
    assert!(w.board.state().collections[&cid("C1")].is_open());

    let mut env = w.talliers.open_collection(&cid("C2"), "x", &mut w.rng).unwrap();
    env.signatures.pop();
    assert_eq!(w.submit(&env).unwrap_err().code(), "MISSING_TALLIER_SIGNATURE");

    w.close("C1");
    let reopen = w.talliers.open_collection(&cid("C1"), "again", &mut w.rng).unwrap();
    assert_eq!(w.submit(&reopen).unwrap_err().code(), "DUPLICATE_COLLECTION");
    let close_again = w.talliers.close_collection(&cid("C1"));
    assert_eq!(w.submit(&close_again).unwrap_err().code(), "COLLECTION_CLOSED");
}

#[test]
fn initial_ballot_is_trivial_and_replicas_agree() {
    let mut w = World::<TestGroup>::new(2, 4);
    w.populate(&["C1"], &["v"]);
    let chain = w.board.state().chain(&vid("v"), &cid("C1")).unwrap();
    assert_eq!(chain.entries.len(), 1);
    let one = SchnorrElement::<23, 11>::new(1).unwrap();
    let trivial = Ciphertext::<TestGroup> { a: one, b: one };
    assert_eq!(chain.entries[0].pair, CipherPair { tallier: trivial, voter: trivial });
    assert_eq!(chain.entries[0].origin, Origin::Board);

    let a = Board::<TestGroup>::replay(w.board.events()).unwrap();
    let b = Board::<TestGroup>::replay(w.board.events()).unwrap();
    assert_eq!(
        to_canonical(&a.state().chain(&vid("v"), &cid("C1")).unwrap().entries[0]),
        to_canonical(&chain.entries[0])
    );
    assert_eq!(a.state().digest(), b.state().digest());
    assert_eq!(a.state().digest(), w.board.state().digest());
}

#[test]
fn init_ballots_preconditions() {
    let mut w = W::new(1, 5);
    w.populate(&["C1"], &["v"]);
    let mut state = w.board.state().clone();
    assert_eq!(
        init_ballots(&mut state, &vid("ghost"), &[cid("C1")]).unwrap_err().code(),
        "UNKNOWN_VOTER"
    );
    assert_eq!(init_ballots(&mut state, &vid("v"), &[cid("C1")]).unwrap_err().code(), "CHAIN_EXISTS");
}

#[test]
fn whitelist_before_registration_defers_initial_ballot() {
    let mut w = W::new(1, 6);
    w.open("C1");
    w.add("C1", "late");
    assert!(w.board.state().chain(&vid("late"), &cid("C1")).is_none());
    w.register("late");
    assert_eq!(w.board.state().chain(&vid("late"), &cid("C1")).unwrap().entries.len(), 1);
}

#[test]
fn update_appends_one_entry_per_collection() {
    let mut w = W::new(2, 7);
    w.populate(&["C1", "C2", "C3"], &["v"]);
    w.participate("v", &["C2"]).unwrap();
    for c in ["C1", "C2", "C3"] {
        assert_eq!(w.board.state().chain(&vid("v"), &cid(c)).unwrap().entries.len(), 2);
    }
    let audit = w.audit("v");
    assert_eq!(audit.signed(), set(&["C2"]));
    assert_eq!(w.last_plaintext("v", "C1"), 0);
    assert_eq!(w.last_plaintext("v", "C2"), 1);
}

#[test]
fn incomplete_cover_is_atomic() {
    let mut w = W::new(1, 8);
    w.populate(&["C1", "C2", "C3"], &["v"]);
    let s = w.voters[&vid("v")].clone();
    let mut u = build_update(w.board.state(), &vid("v"), &set(&["C1"]), Origin::Voter, &mut w.rng).unwrap();
    u.entries.retain(|e| e.collection != cid("C3"));
    let before = w.board.state().digest();
    let err = w.submit(&s.sign_update(&u)).unwrap_err();
    assert_eq!(err.code(), "INCOMPLETE_COVER");
    assert_eq!(w.board.state().digest(), before);

    let mut dup = build_update(w.board.state(), &vid("v"), &set(&[]), Origin::Voter, &mut w.rng).unwrap();
    dup.entries.push(dup.entries[0].clone());
    assert_eq!(w.submit(&s.sign_update(&dup)).unwrap_err().code(), "MALFORMED");
}

#[test]
fn stale_snapshot_race() {
    let mut w = W::new(1, 9);
    w.populate(&["C1"], &["a", "b"]);
    let ea = w.participation("a", &["C1"]);
    let eb = w.participation("b", &[]);
    w.submit(&ea).unwrap();
    match w.submit(&eb) {
        Err(BoardError::StaleSnapshot { head, .. }) => assert_eq!(head, w.board.head()),
        other => panic!("expected stale snapshot, got {other:?}"),
    }
    // Rebuild against the new head.
    w.participate("b", &[]).unwrap();
}

#[test]
fn empty_participation_is_valid() {
    let mut w = W::new(1, 10);
    w.populate(&["C1", "C2"], &["v"]);
    w.participate("v", &[]).unwrap();
    assert!(w.audit("v").signed().is_empty());
}

#[test]
fn removal_freezes_and_readd_unfreezes() {
    let mut w = W::new(1, 11);
    w.populate(&["C1", "C2"], &["v"]);
    w.participate("v", &["C1"]).unwrap();
    w.mutate("C1", WhitelistOp::Remove, "v").unwrap();
    assert!(w.board.state().chain(&vid("v"), &cid("C1")).unwrap().frozen);

    // A stale client still covering C1 is refused; the frozen chain counts.
    let s = w.voters[&vid("v")].clone();
    let mut u = build_update(w.board.state(), &vid("v"), &set(&[]), Origin::Voter, &mut w.rng).unwrap();
    assert_eq!(u.entries.len(), 1);
    let extra = {
        let mut w2 = W::new(1, 11);
        w2.populate(&["C1", "C2"], &["v"]);
        build_update(w2.board.state(), &vid("v"), &set(&[]), Origin::Voter, &mut w2.rng).unwrap().entries
    };
    u.entries.insert(0, extra[0].clone());
    assert_eq!(w.submit(&s.sign_update(&u)).unwrap_err().code(), "FROZEN_CHAIN");
    w.participate("v", &[]).unwrap();
    assert_eq!(w.tally("C1"), 1);

    w.add("C1", "v");
    let chain = w.board.state().chain(&vid("v"), &cid("C1")).unwrap();
    assert!(!chain.frozen);
    assert_eq!(chain.entries.len(), 2);
    w.participate("v", &[]).unwrap();
    assert_eq!(w.board.state().chain(&vid("v"), &cid("C1")).unwrap().entries.len(), 3);
    assert_eq!(w.audit("v").signed(), set(&["C1"]));
}

#[test]
fn whitelist_mutation_errors() {
    let mut w = W::new(1, 12);
    w.populate(&["C1"], &["v"]);
    assert_eq!(w.mutate("C9", WhitelistOp::Add, "v").unwrap_err().code(), "UNKNOWN_COLLECTION");
    assert_eq!(w.mutate("C1", WhitelistOp::Add, "v").unwrap_err().code(), "ALREADY_WHITELISTED");
    assert_eq!(w.mutate("C1", WhitelistOp::Remove, "x").unwrap_err().code(), "NOT_WHITELISTED");
    let forged = Envelope::new(&Message::<Ristretto255>::Whitelist(
        multiballot_core::board::WhitelistMutation {
            collection: cid("C1"),
            op: WhitelistOp::Add,
            voter: vid("x"),
        },
    ))
    .sign(SignerId::Roll, &w.hc);
    assert_eq!(w.submit(&forged).unwrap_err().code(), "BAD_SIGNATURE");
}

#[test]
fn close_removes_collection_from_cover() {
    let mut w = W::new(2, 13);
    w.populate(&["C1", "C2"], &["v"]);
    let stale_shape = build_update(w.board.state(), &vid("v"), &set(&[]), Origin::Voter, &mut w.rng).unwrap();
    w.close("C2");
    let s = w.voters[&vid("v")].clone();
    let mut u = stale_shape.clone();
    u.epoch = w.board.head();
    assert_eq!(w.submit(&s.sign_update(&u)).unwrap_err().code(), "COLLECTION_CLOSED");
    w.participate("v", &["C1"]).unwrap();
    assert_eq!(w.board.state().chain(&vid("v"), &cid("C2")).unwrap().entries.len(), 1);
}

#[test]
fn update_with_no_open_collection_is_refused() {
    let mut w = W::new(1, 14);
    w.populate(&["C1"], &["v"]);
    w.close("C1");
    let u = UpdateSet::<Ristretto255> {
        voter: vid("v"),
        epoch: w.board.head(),
        origin: Origin::Voter,
        entries: vec![],
    };
    let env = w.voters[&vid("v")].sign_update(&u);
    assert_eq!(w.submit(&env).unwrap_err().code(), "NOTHING_TO_UPDATE");
}

#[test]
fn hc_updates_are_marked() {
    let mut w = W::new(1, 15);
    w.populate(&["C1", "C2"], &["v"]);
    let (env, ev) = multiballot_core::actors::hc_submit(
        &w.hc,
        w.board.state(),
        &vid("v"),
        &set(&["C1"]),
        b"scan-0001",
        &mut w.rng,
    )
    .unwrap();
    w.submit(&env).unwrap();
    assert_eq!(ev.len(), 1);
    assert_eq!(ev[0].entry_index, 1);
    let audit = w.audit("v");
    assert_eq!(audit.signed(), set(&["C1"]));
    assert_eq!(audit.collections[&cid("C1")].hc_entries, 1);

    // HC for a voter who is not on any whitelist.
    w.register("outsider");
    let r = multiballot_core::actors::hc_submit(
        &w.hc,
        w.board.state(),
        &vid("outsider"),
        &set(&[]),
        b"",
        &mut w.rng,
    );
    assert!(r.is_err());
    let u = UpdateSet::<Ristretto255> {
        voter: vid("outsider"),
        epoch: w.board.head(),
        origin: Origin::Hc,
        entries: build_update(w.board.state(), &vid("v"), &set(&[]), Origin::Hc, &mut w.rng)
            .unwrap()
            .entries,
    };
    let env = Envelope::new(&Message::UpdateSet(u)).sign(SignerId::Hc, &w.hc);
    assert_eq!(w.submit(&env).unwrap_err().code(), "NOT_WHITELISTED");
}

#[test]
fn tampered_tally_is_rejected() {
    let mut w = W::new(2, 16);
    w.populate(&["C1"], &["a", "b", "c"]);
    w.participate("a", &["C1"]).unwrap();
    w.participate("b", &["C1"]).unwrap();
    let state = w.board.state().clone();
    let result = w.talliers.tally(&state, &cid("C1"), None, &mut w.rng).unwrap();
    assert_eq!(result.count, 2);

    let mut bad = result.clone();
    bad.partials[1].proof.response = bad.partials[0].proof.response;
    assert_eq!(w.submit(&w.talliers.publish(&bad)).unwrap_err().code(), "INVALID_TALLY");
    let mut inflated = result.clone();
    inflated.count = 3;
    assert_eq!(w.submit(&w.talliers.publish(&inflated)).unwrap_err().code(), "INVALID_TALLY");
    w.submit(&w.talliers.publish(&result)).unwrap();
    assert_eq!(w.board.state().tallies.len(), 1);
    // Needs the current head.
    assert_eq!(w.submit(&w.talliers.publish(&result)).unwrap_err().code(), "STALE_SNAPSHOT");
}

#[test]
fn malformed_and_unsupported_envelopes() {
    let mut w = W::new(1, 17);
    let env = Envelope {
        version: 1,
        kind: MessageKind::UpdateSet,
        payload: vec![1, 2, 3],
        signatures: vec![],
    };
    let before = w.board.events().len();
    assert_eq!(w.submit(&env).unwrap_err().code(), "MALFORMED");
    let mut v2 = w.talliers.close_collection(&cid("C1"));
    v2.version = 2;
    assert_eq!(w.submit(&v2).unwrap_err().code(), "UNSUPPORTED_VERSION");
    assert_eq!(w.board.events().len(), before);
    let genesis = w.board.events()[0].envelope.clone();
    assert_eq!(w.submit(&genesis).unwrap_err().code(), "ALREADY_INITIALIZED");
    let mut fresh = Board::<Ristretto255>::new();
    assert_eq!(
        fresh.submit(&w.talliers.close_collection(&cid("C1"))).unwrap_err().code(),
        "NOT_INITIALIZED"
    );
}

#[test]
fn every_message_type_round_trips() {
    let mut w = W::new(2, 18);
    w.populate(&["C1", "C2"], &["v"]);
    w.participate("v", &["C2"]).unwrap();
    w.mutate("C2", WhitelistOp::Remove, "v").unwrap();
    let state = w.board.state().clone();
    let t = w.talliers.tally(&state, &cid("C1"), None, &mut w.rng).unwrap();
    w.submit(&w.talliers.publish(&t)).unwrap();
    w.close("C1");
    let mut kinds = std::collections::BTreeSet::new();
    for ev in w.board.events() {
        let json = serde_json::to_string(ev).unwrap();
        let back: multiballot_core::board::BoardEvent = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, ev);
        let bin = to_canonical(ev);
        assert_eq!(&from_canonical::<multiballot_core::board::BoardEvent>(&bin).unwrap(), ev);
        let msg: Message<Ristretto255> = ev.envelope.decode().unwrap();
        assert_eq!(msg.payload(), ev.envelope.payload);
        kinds.insert(format!("{:?}", ev.envelope.kind));
    }
    assert_eq!(kinds.len(), 7);
    let json = serde_json::to_string(w.board.state()).unwrap();
    let back: multiballot_core::board::BoardState<Ristretto255> = serde_json::from_str(&json).unwrap();
    assert_eq!(back.digest(), w.board.state().digest());
}

#[test]
fn audit_replay_of_honest_log_is_clean() {
    let mut w = W::new(2, 19);
    w.populate(&["C1", "C2"], &["a", "b"]);
    w.participate("a", &["C1", "C2"]).unwrap();
    let r = audit_replay::<Ristretto255>(w.board.events());
    assert!(r.findings.is_empty());
    assert_eq!(r.board.head(), w.board.head());
}

#[derive(Clone, Debug)]
enum Step {
    Participate { voter: usize, sign: Vec<bool> },
    Remove { voter: usize, collection: usize },
    Add { voter: usize, collection: usize },
}

fn steps() -> impl Strategy<Value = Vec<Step>> {
    let step = prop_oneof![
        4 => (0..3usize, proptest::collection::vec(any::<bool>(), 3))
            .prop_map(|(voter, sign)| Step::Participate { voter, sign }),
        1 => (0..3usize, 0..3usize).prop_map(|(voter, collection)| Step::Remove { voter, collection }),
        1 => (0..3usize, 0..3usize).prop_map(|(voter, collection)| Step::Add { voter, collection }),
    ];
    proptest::collection::vec(step, 1..12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Once a chain's tallier ciphertext decrypts to 1 it stays 1, and every
    /// accepted update grows each covered chain by exactly one entry.
    #[test]
    fn irrevocable_and_one_entry_per_update(script in steps(), seed in any::<u64>()) {
        let voters = ["v0", "v1", "v2"];
        let cols = ["C0", "C1", "C2"];
        let mut w = World::<TestGroup>::new(2, seed);
        w.populate(&cols, &voters);
        let mut was_one = std::collections::BTreeSet::new();
        for step in script {
            match step {
                Step::Participate { voter, sign } => {
                    let v = voters[voter];
                    let cover = w.board.state().required_cover(&vid(v));
                    let chosen: Vec<&str> = cols
                        .iter()
                        .zip(&sign)
                        .filter(|(c, s)| **s && cover.contains(&cid(c)))
                        .map(|(c, _)| *c)
                        .collect();
                    if cover.is_empty() {
                        continue;
                    }
                    let lens: Vec<usize> = cols.iter()
                        .map(|c| w.board.state().chain(&vid(v), &cid(c)).unwrap().entries.len())
                        .collect();
                    w.participate(v, &chosen).unwrap();
                    for (i, c) in cols.iter().enumerate() {
                        let now = w.board.state().chain(&vid(v), &cid(c)).unwrap().entries.len();
                        let grew = cover.contains(&cid(c));
                        prop_assert_eq!(now, lens[i] + grew as usize);
                    }
                }
                Step::Remove { voter, collection } => {
                    let _ = w.mutate(cols[collection], WhitelistOp::Remove, voters[voter]);
                }
                Step::Add { voter, collection } => {
                    let _ = w.mutate(cols[collection], WhitelistOp::Add, voters[voter]);
                }
            }
            for v in voters {
                for c in cols {
                    let m = w.last_plaintext(v, c);
                    if was_one.contains(&(v, c)) {
                        prop_assert_eq!(m, 1);
                    }
                    if m == 1 {
                        was_one.insert((v, c));
                    }
                }
            }
        }
        let replay = Board::<TestGroup>::replay(w.board.events()).unwrap();
        prop_assert_eq!(replay.state().digest(), w.board.state().digest());
    }
}
