//! Token-based code similarity between repositories and the significance
//! test used to compare score groups.

pub mod gst;
pub mod mwu;
pub mod pairwise;
pub mod tokenize;

pub use gst::{gst_similarity, gst_tiles, Tile};
pub use mwu::{mann_whitney_u, MwuResult, TestMethod, DEFAULT_EXACT_CAP};
pub use pairwise::{category, pairwise, scores_by_category, Aggregation, PairMode, PairOptions, Relation, SimilarityPair};
pub use tokenize::{family_of, tokenize, tokenize_str, Family, Token, TokenKind, TokenStream};
