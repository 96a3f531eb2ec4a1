//! Character-level language models and the contextual / pooled token
//! embeddings read from their hidden states.

mod lm;
mod pce;

pub use lm::{train_char_lm, CharLM, CharLmConfig, CharLmParams, CharLmReport, Direction, UNK};
pub use pce::{extract_cse, pce_embed, reset_memory, Aggregate, PceMemory, PoolOp};
