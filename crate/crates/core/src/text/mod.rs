pub mod metrics;
pub mod stance;
pub mod tags;

pub use metrics::{
    lexical_density, pos_by_comment, respondent_profiles, tokenize, type_token_ratio, word_frequencies,
    AnnotatedComment, AnnotatedToken, LexicalProfile, PosRow, Upos,
};
pub use stance::{stance_aggregate, Stance, StanceAnnotation, StanceObservation};
pub use tags::{classify_tags, image_tag_stats, Characteristic, TagCategoryProbs, TagStats};
