//! Error-correction-code proof-of-work.
//!
//! Every block's puzzle is a Gallager LDPC parity-check matrix derived from the
//! parent hash. A miner hashes (header, nonce) into a bit vector and runs a
//! min-sum decoder against the matrix; the block is sealed once the decoder
//! lands on a codeword. Difficulty is the per-nonce decoding success
//! probability of the level's code parameters.
//!
//! Beyond the consensus path the crate carries a deterministic network
//! simulator and the exponential-fit and Anderson-Darling machinery used to
//! check that block generation times are exponentially distributed.

pub mod consensus;
pub mod decoder;
pub mod error;
pub mod hashvector;
pub mod ldpc;
pub mod simnet;
pub mod stats;

pub use consensus::{mine, seal_hash, verify_seal, BlockHeader, DifficultyLevel, DifficultyTable};
pub use decoder::{decode, estimate_success_probability, DecodeOutcome, Decoder, DecoderConfig};
pub use error::{Error, Result};
pub use hashvector::{hash_vector, keccak256, Digest256, Nonce};
pub use ldpc::{generate_pcm, is_codeword, syndrome, BitVector, LdpcParams, ParityCheckMatrix};
pub use simnet::{run_simulation, SimConfig, SimReport};
