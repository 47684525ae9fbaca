//! News scheduling and generation, per-agent reasoning, and the two-tier
//! experience pool.

mod news;
mod pool;
mod reasoning;
mod scheduler;

pub use news::{make_long_news, make_short_news, NewsEvent};
pub use pool::{
    normalize_key, query_text, retrieve_top_k, top_k_by_reward, ExperienceEntry, ExperiencePools, PoolError,
    POOL_FILE_VERSION,
};
pub use reasoning::{reason_long, reason_short, PrivateObs, ReasoningRecord};
pub use scheduler::{classify_news_type, max_change, ChangeMode, NewsKind, RandomTrigger, SchedulerConfig};
