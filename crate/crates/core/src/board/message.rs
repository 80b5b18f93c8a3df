use serde::{Deserialize, Serialize};

use crate::auth::{AuthKeypair, AuthPublicKey, AuthSignature};
use crate::codec::{from_canonical, hex_bytes, to_canonical, Digest};
use crate::elgamal::PublicKey;
use crate::group::Group;
use crate::ids::{CollectionId, TallierId, VoterId};
use crate::tally::{PublicShare, TallyResult};
use crate::zkp::{CipherPair, TransitionProof};

pub const PROTOCOL_VERSION: u16 = 1;
const ENVELOPE_DOMAIN: &[u8] = b"multiballot/v1/envelope";

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum SignerId {
    Voter(VoterId),
    Tallier(TallierId),
    Roll,
    Hc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MessageKind {
    Genesis,
    RegisterVoter,
    OpenCollection,
    CloseCollection,
    Whitelist,
    UpdateSet,
    TallyResult,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Signature {
    pub signer: SignerId,
    pub signature: AuthSignature,
}

/// Wire form of every board message: a canonical payload plus the
/// signatures over `version ‖ kind ‖ payload`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Envelope {
    pub version: u16,
    pub kind: MessageKind,
    #[serde(with = "hex_bytes")]
    pub payload: Vec<u8>,
    pub signatures: Vec<Signature>,
}

impl Envelope {
    pub fn new<G: Group>(message: &Message<G>) -> Self {
        Envelope {
            version: PROTOCOL_VERSION,
            kind: message.kind(),
            payload: message.payload(),
            signatures: Vec::new(),
        }
    }

    pub fn signed_bytes(&self) -> Vec<u8> {
        to_canonical(&(ENVELOPE_DOMAIN, self.version, self.kind, &self.payload))
    }

    pub fn sign(mut self, signer: SignerId, key: &AuthKeypair) -> Self {
        let signature = key.sign(&self.signed_bytes());
        self.signatures.push(Signature { signer, signature });
        self
    }

    /// `None` if no signature by `signer` is attached, otherwise whether
    /// it verifies under `key`.
    pub fn check_signer(&self, signer: &SignerId, key: &AuthPublicKey) -> Option<bool> {
        let bytes = self.signed_bytes();
        let mut found = None;
        for s in self.signatures.iter().filter(|s| &s.signer == signer) {
            if !key.verify(&bytes, &s.signature) {
                return Some(false);
            }
            found = Some(true);
        }
        found
    }

    pub fn decode<G: Group>(&self) -> Result<Message<G>, crate::codec::CodecError> {
        Message::decode(self.kind, &self.payload)
    }
}

/// Trust anchor: the first event of every board.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoardConfig {
    pub group: String,
    pub talliers: Vec<(TallierId, AuthPublicKey)>,
    pub roll: AuthPublicKey,
    pub hc: AuthPublicKey,
}

impl BoardConfig {
    pub fn tallier_key(&self, id: &TallierId) -> Option<&AuthPublicKey> {
        self.talliers.iter().find(|(t, _)| t == id).map(|(_, k)| k)
    }
}

/// Registration, or key rotation when the voter is already known.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct RegisterVoter<G: Group> {
    pub voter: VoterId,
    pub auth_key: AuthPublicKey,
    pub audit_key: PublicKey<G>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct OpenCollection<G: Group> {
    pub collection: CollectionId,
    pub title: String,
    pub shares: Vec<PublicShare<G>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CloseCollection {
    pub collection: CollectionId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum WhitelistOp {
    Add,
    Remove,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhitelistMutation {
    pub collection: CollectionId,
    pub op: WhitelistOp,
    pub voter: VoterId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Origin {
    Board,
    Voter,
    Hc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct UpdateEntry<G: Group> {
    pub collection: CollectionId,
    pub pair: CipherPair<G>,
    pub proof: TransitionProof<G>,
}

/// One new entry per covered collection, applied atomically.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct UpdateSet<G: Group> {
    pub voter: VoterId,
    pub epoch: Digest,
    pub origin: Origin,
    pub entries: Vec<UpdateEntry<G>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(bound = "")]
pub enum Message<G: Group> {
    Genesis(BoardConfig),
    RegisterVoter(RegisterVoter<G>),
    OpenCollection(OpenCollection<G>),
    CloseCollection(CloseCollection),
    Whitelist(WhitelistMutation),
    UpdateSet(UpdateSet<G>),
    TallyResult(TallyResult<G>),
}

impl<G: Group> Message<G> {
    pub fn kind(&self) -> MessageKind {
        match self {
            Message::Genesis(_) => MessageKind::Genesis,
            Message::RegisterVoter(_) => MessageKind::RegisterVoter,
            Message::OpenCollection(_) => MessageKind::OpenCollection,
            Message::CloseCollection(_) => MessageKind::CloseCollection,
            Message::Whitelist(_) => MessageKind::Whitelist,
            Message::UpdateSet(_) => MessageKind::UpdateSet,
            Message::TallyResult(_) => MessageKind::TallyResult,
        }
    }

    pub fn payload(&self) -> Vec<u8> {
        match self {
            Message::Genesis(m) => to_canonical(m),
            Message::RegisterVoter(m) => to_canonical(m),
            Message::OpenCollection(m) => to_canonical(m),
            Message::CloseCollection(m) => to_canonical(m),
            Message::Whitelist(m) => to_canonical(m),
            Message::UpdateSet(m) => to_canonical(m),
            Message::TallyResult(m) => to_canonical(m),
        }
    }

    pub fn decode(kind: MessageKind, payload: &[u8]) -> Result<Self, crate::codec::CodecError> {
        Ok(match kind {
            MessageKind::Genesis => Message::Genesis(from_canonical(payload)?),
            MessageKind::RegisterVoter => Message::RegisterVoter(from_canonical(payload)?),
            MessageKind::OpenCollection => Message::OpenCollection(from_canonical(payload)?),
            MessageKind::CloseCollection => Message::CloseCollection(from_canonical(payload)?),
            MessageKind::Whitelist => Message::Whitelist(from_canonical(payload)?),
            MessageKind::UpdateSet => Message::UpdateSet(from_canonical(payload)?),
            MessageKind::TallyResult => Message::TallyResult(from_canonical(payload)?),
        })
    }
}
