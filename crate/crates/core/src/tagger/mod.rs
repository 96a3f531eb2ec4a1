//! BiLSTM-CRF sequence tagger over stacked token embeddings.

mod bundle;
pub mod crf;
mod hpo;
mod model;
mod stack;
mod train;

pub use bundle::{emissions, sentences_of, TaggerModel};
pub use crf::{crf_nll, crf_nll_grad, log_partition, path_score, viterbi, CrfGrad, IMPOSSIBLE};
pub use hpo::{hpo, HpoResult, SearchMode, SearchSpace, TrialConfig, TrialRecord};
pub use model::{BiLayer, EncoderTrace, TaggerConfig, TaggerParams};
pub use stack::{stack_embed, BpeEmbedder, CseEmbedder, EmbeddingStack, PceEmbedder, StaticEmbedder, TokenEmbedder};
pub use train::{
    f1_on, simulate_schedule, train, AnnealScheduler, EpochRecord, ScheduleStep, TagSet, TrainConfig, TrainHistory,
    TrainOutcome,
};
