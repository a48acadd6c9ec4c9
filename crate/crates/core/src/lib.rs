pub mod corpus;
pub mod dedup;
pub mod evalmetrics;
pub mod filter;
pub mod hash;
pub mod pipeline;
pub mod pregen;
pub mod vocab;
