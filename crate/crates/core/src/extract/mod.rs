//! Pure indicator extraction from file contents.

pub mod binary;
pub mod context;
pub mod ip;
pub mod payload;

pub use binary::{hash_binaries, sha256_bytes, sha256_file, unique_hashes, BinaryArtifact};
pub use context::IpContext;
pub use ip::{classify_addr, extract_ips, filter_public, FilterOutcome, IpCandidate, IpClass, ReviewEntry};
pub use payload::{extract_base64_payloads, extract_hex_payloads, EncodedPayload, Encoding, ExtractOptions};
