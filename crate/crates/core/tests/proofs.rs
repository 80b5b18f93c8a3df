use multiballot_core::codec::Digest;
use multiballot_core::elgamal::{keygen, PublicKey};
use multiballot_core::group::{Group, Ristretto255, ScalarField, SchnorrScalar, TestGroup};
use multiballot_core::ids::{CollectionId, VoterId};
use multiballot_core::sigma::Dleq;
use multiballot_core::zkp::{
    carry_pair, encrypt_pair, prove_transition, sign_pair, verify_transition, BallotKeys, Branch, CipherPair,
    EntryWitness, ProofContext,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn ctx(i: u64) -> ProofContext {
    ProofContext {
        collection: CollectionId::new("C1"),
        voter: VoterId::new("v"),
        entry_index: i,
        prev_entry: Digest([1; 32]),
        epoch: Digest([2; 32]),
    }
}

fn keys<G: Group>(rng: &mut ChaCha20Rng) -> BallotKeys<G> {
    BallotKeys {
        tallier: keygen::<G, _>(rng).1,
        voter: keygen::<G, _>(rng).1,
    }
}

fn complete<G: Group>(seed: u64, prev_m: u64, sign: bool) -> bool {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let k = keys::<G>(&mut rng);
    let w = EntryWitness {
        tallier: G::Scalar::random(&mut rng),
        voter: G::Scalar::random(&mut rng),
    };
    let prev = encrypt_pair(&k, prev_m, &w).unwrap();
    let (next, wit, branch) = if sign {
        let (n, w) = sign_pair(&k, &mut rng);
        (n, w, Branch::Sign)
    } else {
        let (n, w) = carry_pair(&k, &prev, &mut rng);
        (n, w, Branch::Carry)
    };
    let proof = prove_transition(&k, &prev, &next, branch, &wit, &ctx(3), &mut rng).unwrap();
    verify_transition(&k, &prev, &next, &proof, &ctx(3))
}

proptest! {
    #[test]
    fn completeness_test_group(seed in any::<u64>(), m in 0..2u64, sign in any::<bool>()) {
        prop_assert!(complete::<TestGroup>(seed, m, sign));
    }

    #[test]
    fn completeness_ristretto(seed in any::<u64>(), m in 0..2u64, sign in any::<bool>()) {
        prop_assert!(complete::<Ristretto255>(seed, m, sign));
    }

    #[test]
    fn every_context_field_is_bound(seed in any::<u64>(), sign in any::<bool>()) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let k = keys::<Ristretto255>(&mut rng);
        let prev = CipherPair::trivial_zero();
        let (next, w, b) = if sign {
            let (n, w) = sign_pair(&k, &mut rng);
            (n, w, Branch::Sign)
        } else {
            let (n, w) = carry_pair(&k, &prev, &mut rng);
            (n, w, Branch::Carry)
        };
        let c = ctx(1);
        let proof = prove_transition(&k, &prev, &next, b, &w, &c, &mut rng).unwrap();
        let mut variants = vec![];
        let mut v = c.clone(); v.collection = CollectionId::new("C2"); variants.push(v);
        let mut v = c.clone(); v.voter = VoterId::new("w"); variants.push(v);
        let mut v = c.clone(); v.entry_index += 1; variants.push(v);
        let mut v = c.clone(); v.prev_entry.0[31] ^= 1; variants.push(v);
        let mut v = c.clone(); v.epoch.0[0] ^= 0x80; variants.push(v);
        for v in variants {
            prop_assert!(!verify_transition(&k, &prev, &next, &proof, &v));
        }
    }
}

/// In the order-11 group, with the previous pair encrypting 1 and the next
/// pair encrypting 0, neither disjunct has a witness, for any randomness of
/// either pair and any keys.
#[test]
fn no_witness_for_one_to_zero_transition() {
    let s = |v: u64| SchnorrScalar::<11>::new(v);
    let g = TestGroup::generator();
    for (xt, xv) in [(3u64, 5u64), (1, 1), (7, 2), (10, 4)] {
        let k = BallotKeys::<TestGroup> {
            tallier: PublicKey(TestGroup::pow_gen(&s(xt))),
            voter: PublicKey(TestGroup::pow_gen(&s(xv))),
        };
        let mut checked = 0u64;
        for r1 in 0..11 {
            for r2 in 0..11 {
                let prev = encrypt_pair(&k, 1, &EntryWitness { tallier: s(r1), voter: s(r2) }).unwrap();
                for s1 in 0..11 {
                    for s2 in 0..11 {
                        let next = encrypt_pair(&k, 0, &EntryWitness { tallier: s(s1), voter: s(s2) }).unwrap();
                        let one = encrypt_pair(&k, 1, &EntryWitness { tallier: s(0), voter: s(0) }).unwrap();
                        for (base, label) in [(one, "sign"), (prev, "carry")] {
                            let qt = next.tallier.sub(&base.tallier);
                            let qv = next.voter.sub(&base.voter);
                            let dt = Dleq::<TestGroup>::new(g, k.tallier.0, qt.a, qt.b);
                            let dv = Dleq::<TestGroup>::new(g, k.voter.0, qv.a, qv.b);
                            let t_ok = (0..11).any(|w| dt.holds_for(&s(w)));
                            let v_ok = (0..11).any(|w| dv.holds_for(&s(w)));
                            assert!(!(t_ok && v_ok), "{label} witness exists");
                            checked += 1;
                        }
                    }
                }
            }
        }
        assert_eq!(checked, 2 * 11u64.pow(4));
    }
}

#[test]
fn branches_are_byte_identical_in_shape() {
    let mut rng = ChaCha20Rng::seed_from_u64(9);
    let k = keys::<Ristretto255>(&mut rng);
    let prev = CipherPair::trivial_zero();
    let (n1, w1) = sign_pair(&k, &mut rng);
    let (n2, w2) = carry_pair(&k, &prev, &mut rng);
    let p1 = prove_transition(&k, &prev, &n1, Branch::Sign, &w1, &ctx(1), &mut rng).unwrap();
    let p2 = prove_transition(&k, &prev, &n2, Branch::Carry, &w2, &ctx(1), &mut rng).unwrap();
    assert_eq!(p1.to_bytes().len(), p2.to_bytes().len());
    assert_eq!(
        multiballot_core::codec::to_canonical(&n1).len(),
        multiballot_core::codec::to_canonical(&n2).len()
    );
    // Declaring the wrong branch is refused.
    assert!(prove_transition(&k, &prev, &n1, Branch::Carry, &w1, &ctx(1), &mut rng).is_err());
}
