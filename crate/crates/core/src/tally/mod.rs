//! n-of-n distributed key generation and verifiable distributed decryption.
//!
//! Each tallier holds an additive share `x_i` of the collection secret key;
//! the collection key is `pk_t = Π g^{x_i}`. Decryption of `(a, b)` needs a
//! factor `a^{x_i}` from every tallier, each accompanied by a proof that
//! `log_g y_i = log_a a^{x_i}`.

use std::collections::BTreeSet;

use rand_core::{CryptoRng, RngCore};
use serde::{Deserialize, Serialize};

use crate::codec::{hash_parts, to_canonical};
use crate::dlog::dlog_decode;
use crate::elgamal::{Ciphertext, CryptoError, PublicKey};
use crate::group::{Group, ScalarField};
use crate::ids::{CollectionId, TallierId};
use crate::sigma::Dleq;

mod authority;

pub use authority::{
    aggregate_last_entries, AuditCheck, AuditItem, AuditOutcomeKind, AuditReport, DecryptionPurpose,
    DecryptionRecord, HcEvidence, Tallier, Talliers, TallyResult,
};

const POSSESSION_DOMAIN: &str = "multiballot/v1/share-possession";
const PARTIAL_DOMAIN: &str = "multiballot/v1/partial-decryption";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TallyError {
    #[error("duplicate tallier id {0}")]
    DuplicateTallier(TallierId),
    #[error("possession proof of tallier {0} does not verify")]
    InvalidPossessionProof(TallierId),
    #[error("no partial decryption from tallier {0}")]
    MissingShare(TallierId),
    #[error("partial decryption proof of tallier {0} does not verify")]
    InvalidPartProof(TallierId),
    #[error("partial decryption from unknown tallier {0}")]
    UnknownTallier(TallierId),
    #[error("at least one tallier is required")]
    NoTalliers,
    #[error("unknown collection {0}")]
    UnknownCollection(CollectionId),
    #[error("voter {0} has no ballot in this collection")]
    NotOnWhitelist(crate::ids::VoterId),
    #[error(transparent)]
    Decode(#[from] CryptoError),
}

impl TallyError {
    pub fn code(&self) -> &'static str {
        match self {
            TallyError::DuplicateTallier(_) => "DUPLICATE_TALLIER",
            TallyError::InvalidPossessionProof(_) => "INVALID_POSSESSION_PROOF",
            TallyError::MissingShare(_) => "MISSING_SHARE",
            TallyError::InvalidPartProof(_) => "INVALID_PART_PROOF",
            TallyError::UnknownTallier(_) => "UNKNOWN_TALLIER",
            TallyError::NoTalliers => "NO_TALLIERS",
            TallyError::UnknownCollection(_) => "UNKNOWN_COLLECTION",
            TallyError::NotOnWhitelist(_) => "NO_BALLOT",
            TallyError::Decode(_) => "DECODE",
        }
    }
}

/// Schnorr proof of knowledge of `x` with `y = g^x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct SchnorrProof<G: Group> {
    pub commitment: G::Element,
    pub response: G::Scalar,
}

/// The public half of a tallier's key share.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PublicShare<G: Group> {
    pub tallier: TallierId,
    pub key: G::Element,
    pub proof: SchnorrProof<G>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct TallierShare<G: Group> {
    pub collection: CollectionId,
    pub secret: G::Scalar,
    pub public: PublicShare<G>,
}

/// Proof that `factor = a^{x_i}` for the `x_i` behind `y_i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct DleqProof<G: Group> {
    pub commitments: [G::Element; 2],
    pub response: G::Scalar,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct PartialDecryption<G: Group> {
    pub tallier: TallierId,
    pub factor: G::Element,
    pub proof: DleqProof<G>,
}

fn possession_challenge<G: Group>(
    collection: &CollectionId,
    tallier: &TallierId,
    key: &G::Element,
    commitment: &G::Element,
) -> G::Scalar {
    let d = hash_parts(
        POSSESSION_DOMAIN,
        &[
            &to_canonical(&G::params()),
            collection.as_str().as_bytes(),
            tallier.as_str().as_bytes(),
            &G::encode(key),
            &G::encode(commitment),
        ],
    );
    G::Scalar::from_digest(&d.0)
}

fn partial_challenge<G: Group>(
    tallier: &TallierId,
    key: &G::Element,
    c: &Ciphertext<G>,
    factor: &G::Element,
    commitments: &[G::Element; 2],
) -> G::Scalar {
    let d = hash_parts(
        PARTIAL_DOMAIN,
        &[
            &to_canonical(&G::params()),
            tallier.as_str().as_bytes(),
            &G::encode(key),
            &c.encode(),
            &G::encode(factor),
            &to_canonical(commitments),
        ],
    );
    G::Scalar::from_digest(&d.0)
}

impl<G: Group> PublicShare<G> {
    pub fn verify(&self, collection: &CollectionId) -> bool {
        let e = possession_challenge::<G>(collection, &self.tallier, &self.key, &self.proof.commitment);
        // g^s == t · y^e
        G::pow2(&G::generator(), &self.proof.response, &self.key, &-e) == self.proof.commitment
    }
}

impl<G: Group> TallierShare<G> {
    /// Builds a share from a known secret, with a fresh possession proof.
    pub fn from_secret<R: RngCore + CryptoRng + ?Sized>(
        collection: &CollectionId,
        tallier: TallierId,
        secret: G::Scalar,
        rng: &mut R,
    ) -> Self {
        let key = G::pow_gen(&secret);
        let k = G::Scalar::random(rng);
        let commitment = G::pow_gen(&k);
        let e = possession_challenge::<G>(collection, &tallier, &key, &commitment);
        TallierShare {
            collection: collection.clone(),
            secret,
            public: PublicShare {
                tallier,
                key,
                proof: SchnorrProof {
                    commitment,
                    response: k + e * secret,
                },
            },
        }
    }
}

/// Verifies every possession proof and multiplies the public shares.
pub fn assemble_public_key<G: Group>(
    collection: &CollectionId,
    shares: &[PublicShare<G>],
) -> Result<PublicKey<G>, TallyError> {
    if shares.is_empty() {
        return Err(TallyError::NoTalliers);
    }
    let mut seen = BTreeSet::new();
    let mut pk = G::identity();
    for s in shares {
        if !seen.insert(&s.tallier) {
            return Err(TallyError::DuplicateTallier(s.tallier.clone()));
        }
        if !s.verify(collection) {
            return Err(TallyError::InvalidPossessionProof(s.tallier.clone()));
        }
        pk = G::combine(&pk, &s.key);
    }
    Ok(PublicKey(pk))
}

/// Runs key generation for `ids` with fresh secrets.
pub fn dkg<G: Group, R: RngCore + CryptoRng + ?Sized>(
    collection: &CollectionId,
    ids: &[TallierId],
    rng: &mut R,
) -> Result<(PublicKey<G>, Vec<TallierShare<G>>), TallyError> {
    let secrets: Vec<G::Scalar> = ids.iter().map(|_| G::Scalar::random_nonzero(rng)).collect();
    dkg_with_secrets(collection, ids, &secrets, rng)
}

/// Key generation where each tallier's secret share is given.
pub fn dkg_with_secrets<G: Group, R: RngCore + CryptoRng + ?Sized>(
    collection: &CollectionId,
    ids: &[TallierId],
    secrets: &[G::Scalar],
    rng: &mut R,
) -> Result<(PublicKey<G>, Vec<TallierShare<G>>), TallyError> {
    assert_eq!(ids.len(), secrets.len(), "one secret per tallier");
    let shares: Vec<TallierShare<G>> = ids
        .iter()
        .zip(secrets)
        .map(|(id, x)| TallierShare::from_secret(collection, id.clone(), *x, rng))
        .collect();
    let publics: Vec<PublicShare<G>> = shares.iter().map(|s| s.public.clone()).collect();
    let pk = assemble_public_key(collection, &publics)?;
    Ok((pk, shares))
}

pub fn partial_decrypt<G: Group, R: RngCore + CryptoRng + ?Sized>(
    share: &TallierShare<G>,
    c: &Ciphertext<G>,
    rng: &mut R,
) -> PartialDecryption<G> {
    let factor = G::pow(&c.a, &share.secret);
    let st = Dleq::<G>::new(G::generator(), c.a, share.public.key, factor);
    let k = G::Scalar::random(rng);
    let commitments = st.commit(&k);
    let e = partial_challenge(&share.public.tallier, &share.public.key, c, &factor, &commitments);
    PartialDecryption {
        tallier: share.public.tallier.clone(),
        factor,
        proof: DleqProof {
            commitments,
            response: Dleq::<G>::respond(&k, &e, &share.secret),
        },
    }
}

pub fn verify_partial<G: Group>(share: &PublicShare<G>, c: &Ciphertext<G>, part: &PartialDecryption<G>) -> bool {
    if part.tallier != share.tallier {
        return false;
    }
    let st = Dleq::<G>::new(G::generator(), c.a, share.key, part.factor);
    let e = partial_challenge(&share.tallier, &share.key, c, &part.factor, &part.proof.commitments);
    st.check(&part.proof.commitments, &e, &part.proof.response)
}

/// `g^m = b / Π factors`, after checking one verifying part per tallier.
pub fn combine_to_element<G: Group>(
    c: &Ciphertext<G>,
    parts: &[PartialDecryption<G>],
    roster: &[PublicShare<G>],
) -> Result<G::Element, TallyError> {
    if let Some(extra) = parts
        .iter()
        .find(|p| !roster.iter().any(|s| s.tallier == p.tallier))
    {
        return Err(TallyError::UnknownTallier(extra.tallier.clone()));
    }
    let mut denom = G::identity();
    for share in roster {
        let mut mine = parts.iter().filter(|p| p.tallier == share.tallier);
        let part = mine
            .next()
            .ok_or_else(|| TallyError::MissingShare(share.tallier.clone()))?;
        if mine.next().is_some() {
            return Err(TallyError::DuplicateTallier(share.tallier.clone()));
        }
        if !verify_partial(share, c, part) {
            return Err(TallyError::InvalidPartProof(share.tallier.clone()));
        }
        denom = G::combine(&denom, &part.factor);
    }
    Ok(G::divide(&c.b, &denom))
}

pub fn combine<G: Group>(
    c: &Ciphertext<G>,
    parts: &[PartialDecryption<G>],
    roster: &[PublicShare<G>],
    bound: u64,
) -> Result<u64, TallyError> {
    let e = combine_to_element(c, parts, roster)?;
    Ok(dlog_decode::<G>(&e, bound)?)
}
