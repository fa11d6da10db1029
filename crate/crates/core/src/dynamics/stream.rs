use crate::datagen::rng::{mix_seed, tags};
use crate::datagen::{DataSource, Sample};

/// The one-pass sequence `z(0), z(1), …`; `z(k)` depends only on `(seed, k)`.
#[derive(Debug, Clone)]
pub struct DataStream {
    source: DataSource,
    key: u64,
}

impl DataStream {
    pub fn new(source: DataSource, seed: u64) -> Self {
        Self {
            source,
            key: mix_seed(seed, tags::DATA_STREAM),
        }
    }

    pub fn get(&self, k: u64) -> Sample {
        self.source.sample(self.key, k)
    }

    pub fn source(&self) -> &DataSource {
        &self.source
    }
}
