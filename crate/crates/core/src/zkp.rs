//! Non-interactive proofs about ballot entries.
//!
//! An entry is a pair of ciphertexts `(c_t, c_v)`: one under the talliers'
//! collection key and one under the voter's audit key. Two statements are
//! proven about entries:
//!
//! * [`EncPairProof`]: both ciphertexts encrypt the same public `m`.
//! * [`TransitionProof`]: relative to the previous entry, either both new
//!   ciphertexts are fresh encryptions of 1 ([`Branch::Sign`]) or both are
//!   re-randomizations of the previous pair ([`Branch::Carry`]).
//!
//! Each statement reduces to an AND of two Chaum–Pedersen equality proofs
//! on the quotient `new ⊘ base`; the transition proof composes two such
//! ANDs with the usual challenge-splitting OR. Challenges are SHA-256 over
//! the group parameters, keys, ciphertexts, [`ProofContext`] and
//! commitments, reduced mod q.

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::codec::{from_canonical, hash_parts, to_canonical, Digest};
use crate::elgamal::{Ciphertext, PublicKey};
use crate::group::{encode_small, Group, ScalarField};
use crate::ids::{CollectionId, VoterId};
use crate::sigma::Dleq;

pub const ENC_PAIR_DOMAIN: &str = "multiballot/v1/enc-pair";
pub const TRANSITION_DOMAIN: &str = "multiballot/v1/transition";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ZkpError {
    #[error("witness does not satisfy the {0:?} branch")]
    WitnessMismatch(Branch),
}

/// Binds a proof to its position on the board.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProofContext {
    pub collection: CollectionId,
    pub voter: VoterId,
    pub entry_index: u64,
    pub prev_entry: Digest,
    pub epoch: Digest,
}

/// `(pk_t, pk_v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BallotKeys<G: Group> {
    pub tallier: PublicKey<G>,
    pub voter: PublicKey<G>,
}

/// `(c_t, c_v)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct CipherPair<G: Group> {
    pub tallier: Ciphertext<G>,
    pub voter: Ciphertext<G>,
}

impl<G: Group> CipherPair<G> {
    pub fn trivial_zero() -> Self {
        CipherPair {
            tallier: Ciphertext::trivial_zero(),
            voter: Ciphertext::trivial_zero(),
        }
    }

    /// Zero-randomness encryption of `m` under any key: `(1, g^m)`.
    fn trivial(m: u64) -> Self {
        let c = Ciphertext {
            a: G::identity(),
            b: encode_small::<G>(m),
        };
        CipherPair { tallier: c, voter: c }
    }

    fn quotient(&self, base: &Self) -> Self {
        CipherPair {
            tallier: self.tallier.sub(&base.tallier),
            voter: self.voter.sub(&base.voter),
        }
    }
}

/// Randomness used for the tallier and voter ciphertext of one entry.
#[derive(Clone, Copy, Debug)]
pub struct EntryWitness<G: Group> {
    pub tallier: G::Scalar,
    pub voter: G::Scalar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Branch {
    /// Both ciphertexts are fresh encryptions of 1.
    Sign,
    /// Both ciphertexts re-randomize the previous entry.
    Carry,
}

impl Branch {
    fn index(self) -> usize {
        match self {
            Branch::Sign => 0,
            Branch::Carry => 1,
        }
    }
}

/// Both `new ⊘ base` ciphertexts encrypt 0, i.e. each is `(g^r, pk^r)`.
fn zero_dleqs<G: Group>(keys: &BallotKeys<G>, quotient: &CipherPair<G>) -> [Dleq<G>; 2] {
    let g = G::generator();
    [
        Dleq::new(g, keys.tallier.0, quotient.tallier.a, quotient.tallier.b),
        Dleq::new(g, keys.voter.0, quotient.voter.a, quotient.voter.b),
    ]
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct EncPairProof<G: Group> {
    pub commitments: [G::Element; 4],
    pub challenge: G::Scalar,
    pub responses: [G::Scalar; 2],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct BranchTranscript<G: Group> {
    pub commitments: [G::Element; 4],
    pub challenge: G::Scalar,
    pub responses: [G::Scalar; 2],
}

/// Disjunctive proof; `branches[0]` is the Sign branch, `branches[1]` Carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TransitionProof<G: Group> {
    pub branches: [BranchTranscript<G>; 2],
}

impl<G: Group> TransitionProof<G> {
    pub fn to_bytes(&self) -> Vec<u8> {
        to_canonical(self)
    }

    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        from_canonical(bytes).ok()
    }
}

fn challenge<G: Group>(
    domain: &str,
    keys: &BallotKeys<G>,
    statement: &[&CipherPair<G>],
    ctx: &ProofContext,
    commitments: &[G::Element],
) -> G::Scalar {
    let params = to_canonical(&G::params());
    let keys = to_canonical(keys);
    let statement = to_canonical(statement);
    let ctx = to_canonical(ctx);
    let commitments = to_canonical(commitments);
    let d = hash_parts(domain, &[&params, &keys, &statement, &ctx, &commitments]);
    G::Scalar::from_digest(&d.0)
}

fn join<T: Copy>(a: [T; 2], b: [T; 2]) -> [T; 4] {
    [a[0], a[1], b[0], b[1]]
}

fn split<T: Copy>(c: &[T; 4]) -> ([T; 2], [T; 2]) {
    ([c[0], c[1]], [c[2], c[3]])
}

/// `(Enc(pk_t, m, r_t), Enc(pk_v, m, r_v))`.
pub fn encrypt_pair<G: Group>(
    keys: &BallotKeys<G>,
    m: u64,
    witness: &EntryWitness<G>,
) -> Result<CipherPair<G>, crate::elgamal::CryptoError> {
    Ok(CipherPair {
        tallier: keys.tallier.encrypt(m, &witness.tallier)?,
        voter: keys.voter.encrypt(m, &witness.voter)?,
    })
}

/// Proves that `encrypt_pair(keys, m, witness)` encrypts `m` twice.
pub fn prove_enc_pair<G: Group, R: RngCore + CryptoRng + ?Sized>(
    keys: &BallotKeys<G>,
    m: u64,
    witness: &EntryWitness<G>,
    ctx: &ProofContext,
    rng: &mut R,
) -> Result<EncPairProof<G>, crate::elgamal::CryptoError> {
    let pair = encrypt_pair(keys, m, witness)?;
    let [dt, dv] = zero_dleqs(keys, &pair.quotient(&CipherPair::trivial(m)));
    let kt = G::Scalar::random(rng);
    let kv = G::Scalar::random(rng);
    let commitments = join(dt.commit(&kt), dv.commit(&kv));
    let e = challenge(ENC_PAIR_DOMAIN, keys, &[&pair], ctx, &commitments);
    Ok(EncPairProof {
        commitments,
        challenge: e,
        responses: [
            Dleq::<G>::respond(&kt, &e, &witness.tallier),
            Dleq::<G>::respond(&kv, &e, &witness.voter),
        ],
    })
}

pub fn verify_enc_pair<G: Group>(
    keys: &BallotKeys<G>,
    pair: &CipherPair<G>,
    m: u64,
    proof: &EncPairProof<G>,
    ctx: &ProofContext,
) -> bool {
    if G::small_order().is_some_and(|q| m >= q) {
        return false;
    }
    let e = challenge(ENC_PAIR_DOMAIN, keys, &[pair], ctx, &proof.commitments);
    if e != proof.challenge {
        return false;
    }
    let [dt, dv] = zero_dleqs(keys, &pair.quotient(&CipherPair::trivial(m)));
    let (ct, cv) = split(&proof.commitments);
    dt.check(&ct, &e, &proof.responses[0]) && dv.check(&cv, &e, &proof.responses[1])
}

/// Fresh encryptions of 1 for the Sign branch.
pub fn sign_pair<G: Group, R: RngCore + CryptoRng + ?Sized>(
    keys: &BallotKeys<G>,
    rng: &mut R,
) -> (CipherPair<G>, EntryWitness<G>) {
    let w = EntryWitness {
        tallier: G::Scalar::random(rng),
        voter: G::Scalar::random(rng),
    };
    let pair = encrypt_pair(keys, 1, &w).expect("1 is always encodable");
    (pair, w)
}

/// Re-randomization of `prev` for the Carry branch.
pub fn carry_pair<G: Group, R: RngCore + CryptoRng + ?Sized>(
    keys: &BallotKeys<G>,
    prev: &CipherPair<G>,
    rng: &mut R,
) -> (CipherPair<G>, EntryWitness<G>) {
    let w = EntryWitness {
        tallier: G::Scalar::random(rng),
        voter: G::Scalar::random(rng),
    };
    let pair = CipherPair {
        tallier: keys.tallier.rerand(&prev.tallier, &w.tallier),
        voter: keys.voter.rerand(&prev.voter, &w.voter),
    };
    (pair, w)
}

/// The two AND-statements of the disjunction, in branch order.
fn branch_statements<G: Group>(
    keys: &BallotKeys<G>,
    prev: &CipherPair<G>,
    next: &CipherPair<G>,
) -> [[Dleq<G>; 2]; 2] {
    [
        zero_dleqs(keys, &next.quotient(&CipherPair::trivial(1))),
        zero_dleqs(keys, &next.quotient(prev)),
    ]
}

fn simulate_branch<G: Group, R: RngCore + CryptoRng + ?Sized>(
    statement: &[Dleq<G>; 2],
    e: G::Scalar,
    rng: &mut R,
) -> BranchTranscript<G> {
    let responses = [G::Scalar::random(rng), G::Scalar::random(rng)];
    BranchTranscript {
        commitments: join(
            statement[0].simulate(&e, &responses[0]),
            statement[1].simulate(&e, &responses[1]),
        ),
        challenge: e,
        responses,
    }
}

fn all_commitments<G: Group>(branches: &[BranchTranscript<G>; 2]) -> Vec<G::Element> {
    branches.iter().flat_map(|b| b.commitments).collect()
}

/// Proves the disjunction for `prev -> next`, where `witness` satisfies the
/// declared `branch`. The other branch is simulated.
#[allow(clippy::too_many_arguments)]
pub fn prove_transition<G: Group, R: RngCore + CryptoRng + ?Sized>(
    keys: &BallotKeys<G>,
    prev: &CipherPair<G>,
    next: &CipherPair<G>,
    branch: Branch,
    witness: &EntryWitness<G>,
    ctx: &ProofContext,
    rng: &mut R,
) -> Result<TransitionProof<G>, ZkpError> {
    let statements = branch_statements(keys, prev, next);
    let real = branch.index();
    let [dt, dv] = &statements[real];
    if !dt.holds_for(&witness.tallier) || !dv.holds_for(&witness.voter) {
        return Err(ZkpError::WitnessMismatch(branch));
    }

    let fake_e = G::Scalar::random(rng);
    let fake = simulate_branch(&statements[1 - real], fake_e, rng);
    let kt = G::Scalar::random(rng);
    let kv = G::Scalar::random(rng);
    let real_commitments = join(dt.commit(&kt), dv.commit(&kv));

    let mut branches = [fake; 2];
    branches[real].commitments = real_commitments;
    let e = challenge(TRANSITION_DOMAIN, keys, &[prev, next], ctx, &all_commitments(&branches));
    let real_e = e - fake_e;
    branches[real] = BranchTranscript {
        commitments: real_commitments,
        challenge: real_e,
        responses: [
            Dleq::<G>::respond(&kt, &real_e, &witness.tallier),
            Dleq::<G>::respond(&kv, &real_e, &witness.voter),
        ],
    };
    Ok(TransitionProof { branches })
}

fn check_branches<G: Group>(
    keys: &BallotKeys<G>,
    prev: &CipherPair<G>,
    next: &CipherPair<G>,
    proof: &TransitionProof<G>,
    global: &G::Scalar,
) -> bool {
    let [b0, b1] = &proof.branches;
    if b0.challenge + b1.challenge != *global {
        return false;
    }
    let statements = branch_statements(keys, prev, next);
    let mut items = Vec::with_capacity(4);
    // The global challenge already hashes statement and commitments.
    let mut seed = global.to_bytes();
    for (st, b) in statements.iter().zip(&proof.branches) {
        let (ct, cv) = split(&b.commitments);
        items.push((st[0], ct, b.challenge, b.responses[0]));
        items.push((st[1], cv, b.challenge, b.responses[1]));
        seed.extend(b.challenge.to_bytes());
        seed.extend(b.responses.iter().flat_map(|r| r.to_bytes()));
    }
    Dleq::check_all(&items, &seed)
}

/// Accepts iff the disjunction holds for exactly these ciphertexts, keys
/// and context.
pub fn verify_transition<G: Group>(
    keys: &BallotKeys<G>,
    prev: &CipherPair<G>,
    next: &CipherPair<G>,
    proof: &TransitionProof<G>,
    ctx: &ProofContext,
) -> bool {
    let e = challenge(TRANSITION_DOMAIN, keys, &[prev, next], ctx, &all_commitments(&proof.branches));
    check_branches(keys, prev, next, proof, &e)
}

/// [`verify_transition`] over a serialized proof; malformed bytes reject.
pub fn verify_transition_encoded<G: Group>(
    keys: &BallotKeys<G>,
    prev: &CipherPair<G>,
    next: &CipherPair<G>,
    proof: &[u8],
    ctx: &ProofContext,
) -> bool {
    TransitionProof::from_bytes(proof).is_some_and(|p| verify_transition(keys, prev, next, &p, ctx))
}

/// Honest-verifier simulator: a transcript for the public statement alone,
/// together with the challenge it was programmed against. Test harness only.
pub fn simulate_transition<G: Group, R: RngCore + CryptoRng + ?Sized>(
    keys: &BallotKeys<G>,
    prev: &CipherPair<G>,
    next: &CipherPair<G>,
    rng: &mut R,
) -> (TransitionProof<G>, G::Scalar) {
    let statements = branch_statements(keys, prev, next);
    let e0 = G::Scalar::random(rng);
    let e1 = G::Scalar::random(rng);
    let branches = [
        simulate_branch(&statements[0], e0, rng),
        simulate_branch(&statements[1], e1, rng),
    ];
    (TransitionProof { branches }, e0 + e1)
}

/// Branch equations against a programmed global challenge instead of the
/// Fiat–Shamir hash.
pub fn verify_transition_programmed<G: Group>(
    keys: &BallotKeys<G>,
    prev: &CipherPair<G>,
    next: &CipherPair<G>,
    proof: &TransitionProof<G>,
    programmed: &G::Scalar,
) -> bool {
    check_branches(keys, prev, next, proof, programmed)
}
