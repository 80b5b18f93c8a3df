//! Ballot chains, proofs, tallying and the bulletin-board state machine for
//! verifiable e-collecting.
//!
//! Everything is generic over a prime-order [`group::Group`]. The aliases
//! below fix the two shipped groups: Ristretto255 for real use and the
//! order-11 test group for exhaustive checks.

pub mod actors;
pub mod auth;
pub mod board;
pub mod codec;
pub mod dlog;
pub mod elgamal;
pub mod group;
pub mod ids;
pub mod sigma;
pub mod tally;
pub mod zkp;

pub use group::{Ristretto255, TestGroup};

pub type Board = board::Board<Ristretto255>;
pub type BoardState = board::BoardState<Ristretto255>;
pub type VoterSecrets = actors::VoterSecrets<Ristretto255>;
pub type Talliers = tally::Talliers<Ristretto255>;
pub type TransitionProof = zkp::TransitionProof<Ristretto255>;

pub type TestBoard = board::Board<TestGroup>;
pub type TestBoardState = board::BoardState<TestGroup>;
pub type TestVoterSecrets = actors::VoterSecrets<TestGroup>;
pub type TestTalliers = tally::Talliers<TestGroup>;
