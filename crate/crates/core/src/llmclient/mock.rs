use async_trait::async_trait;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::wire::postprocess;
use super::{ClientError, CompletionBackend, CompletionRequest, CompletionResult};

/// Deterministic stand-in backend: each request draws its samples, with
/// replacement, from a fixture corpus using an RNG keyed by
/// `(seed, request.sequence)`.
#[derive(Debug, Clone)]
pub struct MockBackend {
    corpus: Vec<String>,
    seed: u64,
}

impl MockBackend {
    pub fn new(corpus: Vec<String>, seed: u64) -> Result<Self, ClientError> {
        if corpus.is_empty() {
            return Err(ClientError::EmptyCorpus);
        }
        Ok(MockBackend { corpus, seed })
    }

    /// One fixture completion per non-empty line.
    pub fn from_lines(text: &str, seed: u64) -> Result<Self, ClientError> {
        Self::new(
            text.lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_owned)
                .collect(),
            seed,
        )
    }

    fn rng_for(&self, sequence: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(sequence);
        rng
    }
}

#[async_trait]
impl CompletionBackend for MockBackend {
    async fn complete(&self, request: CompletionRequest<'_>) -> Result<Vec<CompletionResult>, ClientError> {
        request.params.validate()?;
        let mut rng = self.rng_for(request.sequence);
        Ok((0..request.params.samples_per_request)
            .map(|_| {
                let text = &self.corpus[rng.gen_range(0..self.corpus.len())];
                postprocess(request.prompt, text, Some("stop"), &request.params.stop, 0)
            })
            .collect())
    }

    fn describe(&self) -> String {
        format!("mock:seed={}:corpus={}", self.seed, self.corpus.len())
    }
}
