mod common;

use common::*;
use multiballot_core::actors::{
    build_update, individual_verify, universal_verify, verify_log, Finding, ParticipationStatus, SealedBox,
    VoterSecrets,
};
use multiballot_core::board::{
    event_digest, BoardEvent, Envelope, Message, Origin, ReplayFinding, WhitelistMutation, WhitelistOp,
};
use multiballot_core::group::{Group, Ristretto255, TestGroup};
use proptest::prelude::*;

type W = World<Ristretto255>;

#[test]
fn build_update_shapes() {
    let mut w = W::new(1, 1);
    w.populate(&["C1", "C2", "C3"], &["v"]);
    let state = w.board.state().clone();
    let u = build_update(&state, &vid("v"), &set(&["C2"]), Origin::Voter, &mut w.rng).unwrap();
    assert_eq!(u.entries.len(), 3);
    assert_eq!(u.epoch, state.head);
    let u = build_update(&state, &vid("v"), &set(&["C1", "C3"]), Origin::Voter, &mut w.rng).unwrap();
    let env = w.voters[&vid("v")].sign_update(&u);
    w.submit(&env).unwrap();
    assert_eq!(w.audit("v").signed(), set(&["C1", "C3"]));
    assert!(build_update(&state, &vid("v"), &set(&["C9"]), Origin::Voter, &mut w.rng).is_err());
    assert!(build_update(&state, &vid("nobody"), &set(&[]), Origin::Voter, &mut w.rng).is_err());
}

#[test]
fn audit_matches_intent() {
    let mut w = W::new(2, 2);
    w.populate(&["C1", "C2", "C3"], &["v"]);
    w.participate("v", &["C2"]).unwrap();
    let a = w.audit("v");
    assert!(!a.alarm());
    assert_eq!(a.collections[&cid("C1")].status, ParticipationStatus::NotSigned);
    assert_eq!(a.collections[&cid("C2")].status, ParticipationStatus::Signed);
    assert_eq!(a.collections[&cid("C3")].status, ParticipationStatus::NotSigned);
}

fn rotate(w: &mut W, v: &str, lose_old: bool) {
    let mut s = w.voters[&vid(v)].clone();
    let env = s.rotate(lose_old, &mut w.rng);
    w.submit(&env).unwrap();
    w.voters.insert(vid(v), s);
}

#[test]
fn rotation_falls_back_to_previous_key() {
    let mut w = W::new(1, 3);
    w.populate(&["C1", "C2"], &["v"]);
    w.participate("v", &["C1"]).unwrap();
    rotate(&mut w, "v", false);
    w.participate("v", &[]).unwrap();
    w.participate("v", &[]).unwrap();
    let a = w.audit("v");
    assert_eq!(a.collections[&cid("C1")].status, ParticipationStatus::Signed);
    assert_eq!(a.collections[&cid("C2")].status, ParticipationStatus::NotSigned);
    assert!(!a.alarm());

    // A signature under the new key decodes directly.
    w.participate("v", &["C2"]).unwrap();
    assert_eq!(w.audit("v").signed(), set(&["C1", "C2"]));

    // Two rotations deep.
    rotate(&mut w, "v", false);
    w.participate("v", &[]).unwrap();
    assert_eq!(w.audit("v").signed(), set(&["C1", "C2"]));
}

#[test]
fn lost_key_degrades_status() {
    let mut w = W::new(1, 4);
    w.populate(&["C1", "C2"], &["v"]);
    w.participate("v", &["C1"]).unwrap();
    rotate(&mut w, "v", true);
    w.participate("v", &[]).unwrap();
    let a = w.audit("v");
    for c in ["C1", "C2"] {
        assert_eq!(
            a.collections[&cid(c)].status,
            ParticipationStatus::UnverifiableButUnchangedSinceRotation
        );
        assert!(a.collections[&cid(c)].chain_valid);
    }
    w.participate("v", &["C2"]).unwrap();
    assert_eq!(w.audit("v").collections[&cid("C2")].status, ParticipationStatus::Signed);
}

#[test]
fn audit_detects_device_misbehaviour() {
    let mut w = W::new(1, 5);
    w.populate(&["C1", "C2"], &["v"]);
    // The device was asked to sign C1 but signs C2 instead.
    w.participate("v", &["C2"]).unwrap();
    let intent = set(&["C1"]);
    assert_ne!(w.audit("v").signed(), intent);
}

#[test]
fn foreign_audit_key_raises_alarm() {
    let mut w = W::new(1, 6);
    w.populate(&["C1"], &["v"]);
    let mut other = VoterSecrets::<Ristretto255>::generate(vid("v"), &mut w.rng);
    other.auth = w.voters[&vid("v")].auth.clone();
    assert!(individual_verify(&other, w.board.state()).alarm());
}

#[test]
fn universal_verify_honest_run_is_clean() {
    let mut w = W::new(2, 7);
    w.populate(&["C1", "C2"], &["a", "b"]);
    w.participate("a", &["C1"]).unwrap();
    w.participate("b", &["C2"]).unwrap();
    let state = w.board.state().clone();
    let t = w.talliers.tally(&state, &cid("C1"), None, &mut w.rng).unwrap();
    w.submit(&w.talliers.publish(&t)).unwrap();
    let report = universal_verify(w.board.state(), w.board.events());
    assert!(report.ok(), "{report:?}");
    assert_eq!(report.head, w.board.head());
}

#[test]
fn universal_verify_locates_a_forged_entry() {
    let mut w = W::new(1, 8);
    w.populate(&["C1", "C2"], &["a", "b"]);
    w.participate("a", &["C1"]).unwrap();
    w.participate("a", &[]).unwrap();
    let mut forged = w.board.state().clone();
    let entry = &mut forged
        .chains
        .get_mut(&cid("C2"))
        .unwrap()
        .get_mut(&vid("a"))
        .unwrap()
        .entries[1];
    entry.pair.tallier.b = Ristretto255::combine(&entry.pair.tallier.b, &Ristretto255::generator());
    let report = universal_verify(&forged, w.board.events());
    assert!(report.findings.iter().any(|f| matches!(f, Finding::StateMismatch { .. })));
    let chain_faults: Vec<_> = report
        .findings
        .iter()
        .filter_map(|f| match f {
            Finding::ChainProof {
                collection,
                voter,
                index,
                ..
            } => Some((collection.clone(), voter.clone(), *index)),
            _ => None,
        })
        .collect();
    assert_eq!(chain_faults, vec![(cid("C2"), vid("a"), 1)]);
}

/// Re-chains a log after replacing one event, as a forger with no keys
/// would have to.
fn rechain(events: &mut [BoardEvent]) {
    let mut prev = events[0].prev;
    for (i, ev) in events.iter_mut().enumerate() {
        ev.index = i as u64;
        ev.prev = prev;
        ev.digest = event_digest(&ev.prev, ev.index, &ev.envelope);
        prev = ev.digest;
    }
}

#[test]
fn universal_verify_flags_unauthorized_whitelist_add() {
    let mut w = W::new(1, 9);
    w.populate(&["C1"], &["a"]);
    w.register("mallory");
    let mut events = w.board.events().to_vec();
    let unsigned = Envelope::new(&Message::<Ristretto255>::Whitelist(WhitelistMutation {
        collection: cid("C1"),
        op: WhitelistOp::Add,
        voter: vid("mallory"),
    }));
    let n = events.len() as u64;
    events.push(BoardEvent {
        index: n,
        prev: w.board.head(),
        digest: event_digest(&w.board.head(), n, &unsigned),
        envelope: unsigned,
    });
    let report = verify_log::<Ristretto255>(&events);
    assert!(report.findings.iter().any(|f| matches!(
        f,
        Finding::Log(ReplayFinding::Rejected { code, index, .. }) if code == "BAD_SIGNATURE" && *index == n
    )));
}

#[test]
fn universal_verify_detects_tampered_log() {
    let mut w = W::new(1, 10);
    w.populate(&["C1"], &["a"]);
    w.participate("a", &["C1"]).unwrap();
    let mut events = w.board.events().to_vec();
    let last = events.len() - 1;
    events[last].envelope.payload[40] ^= 1;
    let report = verify_log::<Ristretto255>(&events);
    assert!(report
        .findings
        .iter()
        .any(|f| matches!(f, Finding::Log(ReplayFinding::DigestMismatch { .. }))));
    rechain(&mut events);
    let report = verify_log::<Ristretto255>(&events);
    assert!(!report.ok());
}

#[test]
fn whitelist_audit_against_register() {
    let mut w = W::new(1, 11);
    w.populate(&["C1"], &["a", "b"]);
    let reference = std::collections::BTreeMap::from([(cid("C1"), [vid("a")].into_iter().collect())]);
    let findings = multiballot_core::actors::audit_whitelists(w.board.state(), &reference);
    assert_eq!(
        findings,
        vec![multiballot_core::actors::WhitelistFinding::Unexpected {
            collection: cid("C1"),
            voter: vid("b")
        }]
    );
}

#[test]
fn sealed_secrets_round_trip() {
    let mut w = W::new(1, 12);
    w.populate(&["C1"], &["v"]);
    let s = &w.voters[&vid("v")];
    let json = serde_json::to_vec(s).unwrap();
    let sealed = SealedBox::seal_with_rounds(&json, "correct horse", 1000, &mut w.rng);
    let text = serde_json::to_string(&sealed).unwrap();
    let opened: SealedBox = serde_json::from_str(&text).unwrap();
    let back: VoterSecrets<Ristretto255> = serde_json::from_slice(&opened.open("correct horse").unwrap()).unwrap();
    assert_eq!(individual_verify(&back, w.board.state()), w.audit("v"));
    assert!(opened.open("wrong").is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    /// Whatever the client builds against a snapshot is accepted against it.
    #[test]
    fn built_updates_are_accepted(
        picks in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 4), 1..6),
        seed in any::<u64>(),
    ) {
        let cols = ["C1", "C2", "C3", "C4"];
        let mut w = World::<TestGroup>::new(2, seed);
        w.populate(&cols, &["v"]);
        let mut intent = std::collections::BTreeSet::new();
        for p in picks {
            let chosen: Vec<&str> = cols.iter().zip(&p).filter(|(_, s)| **s).map(|(c, _)| *c).collect();
            w.participate("v", &chosen).unwrap();
            intent.extend(chosen.iter().map(|c| cid(c)));
            let a = w.audit("v");
            prop_assert!(!a.alarm());
            prop_assert_eq!(a.signed(), intent.clone());
        }
    }
}
