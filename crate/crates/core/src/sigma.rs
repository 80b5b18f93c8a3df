//! Equality-of-discrete-logs (Chaum–Pedersen) sigma protocol building
//! blocks. The Fiat–Shamir wrapping lives with each statement type.

use crate::codec::hash_parts;
use crate::group::{Group, ScalarField};

/// Statement, commitment, challenge and response of one transcript.
pub type DleqCheck<G> = (Dleq<G>, [<G as Group>::Element; 2], <G as Group>::Scalar, <G as Group>::Scalar);

/// `u = base1^x` and `w = base2^x` for a common witness `x`.
#[derive(Clone, Copy, Debug)]
pub struct Dleq<G: Group> {
    pub base1: G::Element,
    pub base2: G::Element,
    pub image1: G::Element,
    pub image2: G::Element,
}

impl<G: Group> Dleq<G> {
    pub fn new(base1: G::Element, base2: G::Element, image1: G::Element, image2: G::Element) -> Self {
        Dleq {
            base1,
            base2,
            image1,
            image2,
        }
    }

    /// First prover message for nonce `k`.
    pub fn commit(&self, k: &G::Scalar) -> [G::Element; 2] {
        [G::pow(&self.base1, k), G::pow(&self.base2, k)]
    }

    /// `s = k + e·x`.
    pub fn respond(k: &G::Scalar, challenge: &G::Scalar, witness: &G::Scalar) -> G::Scalar {
        *k + *challenge * *witness
    }

    /// Commitments that make `(challenge, response)` accept, computed
    /// backwards without a witness.
    pub fn simulate(&self, challenge: &G::Scalar, response: &G::Scalar) -> [G::Element; 2] {
        let neg = -*challenge;
        [
            G::pow2(&self.base1, response, &self.image1, &neg),
            G::pow2(&self.base2, response, &self.image2, &neg),
        ]
    }

    /// `base1^s == t1 · image1^e` and `base2^s == t2 · image2^e`.
    pub fn check(&self, commitment: &[G::Element; 2], challenge: &G::Scalar, response: &G::Scalar) -> bool {
        self.simulate(challenge, response) == *commitment
    }

    /// Checks every `(statement, commitment, challenge, response)` at once
    /// through a random linear combination with weights derived from
    /// `seed`. The seed must already bind all statements and commitments.
    /// Groups with a 64-bit order fall back to one check per equation,
    /// since small weights would let a bad equation cancel out.
    pub fn check_all(items: &[DleqCheck<G>], seed: &[u8]) -> bool {
        if G::small_order().is_some() {
            return items.iter().all(|(st, t, e, s)| st.check(t, e, s));
        }
        let mut scalars = Vec::with_capacity(items.len() * 6);
        let mut bases = Vec::with_capacity(items.len() * 6);
        for (i, (st, t, e, s)) in items.iter().enumerate() {
            for (j, (base, image)) in [(st.base1, st.image1), (st.base2, st.image2)].into_iter().enumerate() {
                let idx = ((2 * i + j) as u64).to_be_bytes();
                let w = G::Scalar::from_digest(&hash_parts("multiballot/v1/dleq-batch", &[seed, &idx]).0);
                let we = w * *e;
                scalars.extend([w * *s, -we, -w]);
                bases.extend([base, image, t[j]]);
            }
        }
        G::multi_pow(&scalars, &bases) == G::identity()
    }

    pub fn holds_for(&self, witness: &G::Scalar) -> bool {
        G::pow(&self.base1, witness) == self.image1 && G::pow(&self.base2, witness) == self.image2
    }
}
