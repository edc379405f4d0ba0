//! Static analysis of CVE proof-of-concept repositories for malicious
//! indicators: IP callbacks, Trojanized executables and hex/base64-obfuscated
//! payloads, plus the corpus statistics and similarity analysis around them.

pub mod corpus;
pub mod error;
pub mod extract;
pub mod intel;
pub mod jsonl;
pub mod lang;
pub mod report;
pub mod similarity;
pub mod transport;
pub mod verdict;

pub use error::{Error, Result};
