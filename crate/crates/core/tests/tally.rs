mod common;

use std::collections::BTreeSet;

use common::*;
use multiballot_core::actors::hc_submit;
use multiballot_core::board::{Origin, WhitelistOp};
use multiballot_core::elgamal::Ciphertext;
use multiballot_core::group::{Group, Ristretto255};
use multiballot_core::ids::VoterId;
use multiballot_core::tally::{
    aggregate_last_entries, combine_to_element, verify_partial, AuditCheck, AuditOutcomeKind, DecryptionPurpose,
    HcEvidence,
};
use proptest::prelude::*;

type W = World<Ristretto255>;

#[test]
fn tally_counts_last_entries() {
    let mut w = W::new(3, 1);
    w.populate(&["C1"], &["a", "b", "c"]);
    w.participate("a", &["C1"]).unwrap();
    w.participate("b", &["C1"]).unwrap();
    w.participate("c", &[]).unwrap();
    assert_eq!(w.tally("C1"), 2);

    let state = w.board.state().clone();
    let empty = w.talliers.tally(&state, &cid("C1"), Some(&[]), &mut w.rng).unwrap();
    assert_eq!(empty.count, 0);
    assert_eq!(empty.aggregate, Ciphertext::trivial_zero());

    let stranger = [vid("zed")];
    assert!(w.talliers.tally(&state, &cid("C1"), Some(&stranger), &mut w.rng).is_err());
    assert!(w.talliers.tally(&state, &cid("C9"), None, &mut w.rng).is_err());
}

#[test]
fn resigning_counts_once_and_removed_voters_still_count() {
    let mut w = W::new(2, 2);
    w.populate(&["C1"], &["a", "b"]);
    w.participate("a", &["C1"]).unwrap();
    w.participate("a", &["C1"]).unwrap();
    assert_eq!(w.tally("C1"), 1);
    w.participate("b", &["C1"]).unwrap();
    w.mutate("C1", WhitelistOp::Remove, "b").unwrap();
    assert_eq!(w.tally("C1"), 2);
}

#[test]
fn third_party_can_check_a_published_tally() {
    let mut w = W::new(3, 3);
    w.populate(&["C1"], &["a", "b"]);
    w.participate("a", &["C1"]).unwrap();
    let state = w.board.state().clone();
    let r = w.talliers.tally(&state, &cid("C1"), None, &mut w.rng).unwrap();
    w.submit(&w.talliers.publish(&r)).unwrap();

    let public = w.board.state();
    let published = &public.tallies[0].result;
    let (voters, agg) = aggregate_last_entries(&state, &cid("C1"), None).unwrap();
    assert_eq!(voters, published.voters);
    assert_eq!(agg, published.aggregate);
    let roster = &public.collections[&cid("C1")].shares;
    for (share, part) in roster.iter().zip(&published.partials) {
        assert!(verify_partial(share, &published.aggregate, part));
    }
    for i in 0..published.partials.len() {
        let mut t = published.partials.clone();
        t[i].factor = Ristretto255::combine(&t[i].factor, &Ristretto255::generator());
        assert!(combine_to_element(&published.aggregate, &t, roster).is_err());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn partition_tallies_sum_to_full_tally(
        signs in proptest::collection::vec(any::<bool>(), 6),
        parts in proptest::collection::vec(0..3usize, 6),
        seed in any::<u64>(),
    ) {
        let names: Vec<String> = (0..6).map(|i| format!("v{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let mut w = W::new(2, seed);
        w.populate(&["C1"], &refs);
        for (v, s) in refs.iter().zip(&signs) {
            let sign: &[&str] = if *s { &["C1"] } else { &[] };
            w.participate(v, sign).unwrap();
        }
        let full = w.tally("C1");
        prop_assert_eq!(full, signs.iter().filter(|s| **s).count() as u64);
        let state = w.board.state().clone();
        let mut sum = 0;
        for p in 0..3 {
            let subset: Vec<VoterId> = refs.iter().zip(&parts).filter(|(_, q)| **q == p).map(|(v, _)| vid(v)).collect();
            sum += w.talliers.tally(&state, &cid("C1"), Some(&subset), &mut w.rng).unwrap().count;
        }
        prop_assert_eq!(sum, full);
    }
}

fn hc_world() -> W {
    let mut w = W::new(2, 10);
    w.populate(&["C1", "C2"], &["honest", "stuffed", "dropped", "plain"]);
    w
}

#[test]
fn hc_audit_passes_honest_channel() {
    let mut w = hc_world();
    let (env, ev) = hc_submit(&w.hc, w.board.state(), &vid("honest"), &set(&["C1"]), b"p1", &mut w.rng).unwrap();
    w.submit(&env).unwrap();
    w.participate("plain", &["C2"]).unwrap();
    let state = w.board.state().clone();
    let report = w.talliers.hc_audit(&state, &ev, &mut w.rng);
    assert!(report.passed(), "{report:?}");
    assert!(report
        .items
        .iter()
        .any(|i| matches!(&i.check, AuditCheck::PerVoter { voter, .. } if voter == &vid("honest"))));
}

#[test]
fn hc_audit_flags_stuffing_and_dropping() {
    let mut w = hc_world();
    let (env, mut ev) = hc_submit(&w.hc, w.board.state(), &vid("honest"), &set(&["C1"]), b"p1", &mut w.rng).unwrap();
    w.submit(&env).unwrap();
    // Stuffed: posted without a paper signature, evidence withheld.
    let (env, _) = hc_submit(&w.hc, w.board.state(), &vid("stuffed"), &set(&["C2"]), b"", &mut w.rng).unwrap();
    w.submit(&env).unwrap();
    // Dropped: evidence exists, nothing posted.
    let (_, dropped) = hc_submit(&w.hc, w.board.state(), &vid("dropped"), &set(&["C1"]), b"p3", &mut w.rng).unwrap();
    ev.extend(dropped);

    let state = w.board.state().clone();
    let report = w.talliers.hc_audit(&state, &ev, &mut w.rng);
    let failed: BTreeSet<_> = report.failures().map(|i| i.check.clone()).collect();
    assert_eq!(
        failed,
        BTreeSet::from([
            AuditCheck::PerVoter {
                voter: vid("dropped"),
                collection: cid("C1")
            },
            AuditCheck::Aggregate { collection: cid("C2") },
        ])
    );
}

#[test]
fn evidence_for_a_voter_entry_is_malformed() {
    let mut w = hc_world();
    w.participate("plain", &["C1"]).unwrap();
    let state = w.board.state().clone();
    let ev = [HcEvidence {
        voter: vid("plain"),
        collection: cid("C1"),
        entry_index: 1,
        blob: Default::default(),
    }];
    let report = w.talliers.hc_audit(&state, &ev, &mut w.rng);
    assert_eq!(report.items.len(), 1);
    assert_eq!(report.items[0].outcome, AuditOutcomeKind::Malformed);
    assert_eq!(state.chain(&vid("plain"), &cid("C1")).unwrap().last().origin, Origin::Voter);
}

#[test]
fn hc_audit_decrypts_only_evidenced_last_entries_and_aggregates() {
    let mut w = hc_world();
    w.participate("plain", &["C1"]).unwrap();
    let (env, ev) = hc_submit(&w.hc, w.board.state(), &vid("honest"), &set(&["C1"]), b"p", &mut w.rng).unwrap();
    w.submit(&env).unwrap();
    let (env, _) = hc_submit(&w.hc, w.board.state(), &vid("stuffed"), &set(&["C1"]), b"", &mut w.rng).unwrap();
    w.submit(&env).unwrap();
    w.participate("honest", &["C2"]).unwrap();

    let state = w.board.state().clone();
    w.talliers.decryptions.clear();
    w.talliers.hc_audit(&state, &ev, &mut w.rng);

    let mut allowed = vec![state.chain(&vid("honest"), &cid("C1")).unwrap().last().pair.tallier];
    for c in ["C1", "C2"] {
        let mut posted = vec![];
        let mut before = vec![];
        for (v, chain) in &state.chains[&cid(c)] {
            if c == "C1" && v == &vid("honest") {
                continue;
            }
            for i in 1..chain.entries.len() {
                if chain.entries[i].origin == Origin::Hc {
                    posted.push(chain.entries[i].pair.tallier);
                    before.push(chain.entries[i - 1].pair.tallier);
                }
            }
        }
        if !posted.is_empty() {
            allowed.push(Ciphertext::sum(&posted).sub(&Ciphertext::sum(&before)));
        }
    }
    let seen: Vec<_> = w.talliers.decryptions.iter().map(|d| d.ciphertext).collect();
    assert_eq!(seen.len(), allowed.len());
    for c in &seen {
        assert!(allowed.contains(c));
    }
    // Nothing of the plain voter's ballot was decrypted.
    let plain_last = state.chain(&vid("plain"), &cid("C1")).unwrap().last().pair.tallier;
    assert!(!seen.contains(&plain_last));
    assert!(w
        .talliers
        .decryptions
        .iter()
        .all(|d| !matches!(d.purpose, DecryptionPurpose::Tally)));
}
