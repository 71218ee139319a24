//! Ranking schema items against task text.
//!
//! Two scoring modes: a pluggable embedding provider (cosine similarity),
//! and a deterministic lexical fallback (token-overlap F1) that keeps every
//! pipeline runnable offline. Candidate names are turned into text by
//! replacing dots and underscores with spaces. Ranking order is always
//! (score descending, name ascending), so equal inputs give equal outputs.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::{Arc, Condvar, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum RankError {
    #[error("no candidates to rank")]
    EmptyCandidates,
    #[error("embedding provider error: {0}")]
    Provider(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    Embedding,
    Lexical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredCandidate {
    pub name: String,
    pub score: f64,
    pub source: ScoreSource,
}

/// A fixed-dimension text embedder. Implementations must be deterministic
/// within a process run.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RankError>;
    fn dimension(&self) -> usize;
}

/// The scoring backend handed to `rank`/`topk`.
#[derive(Clone)]
pub enum Retriever {
    Lexical,
    Embedding(Arc<CachingProvider>),
}

impl Retriever {
    pub fn embedding(provider: Arc<dyn EmbeddingProvider>) -> Self {
        Retriever::Embedding(Arc::new(CachingProvider::new(provider, DEFAULT_CACHE_CAPACITY)))
    }
}

impl std::fmt::Debug for Retriever {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Retriever::Lexical => f.write_str("Retriever::Lexical"),
            Retriever::Embedding(_) => f.write_str("Retriever::Embedding"),
        }
    }
}

/// Candidate surface text used for scoring: separators become spaces.
pub fn candidate_text(name: &str) -> String {
    name.replace(['.', '_'], " ")
}

fn tokens(text: &str) -> BTreeSet<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Token-overlap F1 between two texts over their deduplicated token sets.
pub fn token_overlap_f1(query: &str, candidate: &str) -> f64 {
    let q = tokens(query);
    let c = tokens(candidate);
    if q.is_empty() || c.is_empty() {
        return 0.0;
    }
    let overlap = q.intersection(&c).count() as f64;
    if overlap == 0.0 {
        return 0.0;
    }
    let precision = overlap / c.len() as f64;
    let recall = overlap / q.len() as f64;
    2.0 * precision * recall / (precision + recall)
}

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| (*x as f64) * (*y as f64)).sum();
    let na: f64 = a.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Score every candidate against the query and sort by
/// (score descending, name ascending).
pub fn rank(
    query: &str,
    candidates: &[String],
    retriever: &Retriever,
) -> Result<Vec<ScoredCandidate>, RankError> {
    if candidates.is_empty() {
        return Err(RankError::EmptyCandidates);
    }
    let mut scored = match retriever {
        Retriever::Lexical => candidates
            .iter()
            .map(|name| ScoredCandidate {
                name: name.clone(),
                score: token_overlap_f1(query, &candidate_text(name)),
                source: ScoreSource::Lexical,
            })
            .collect::<Vec<_>>(),
        Retriever::Embedding(provider) => {
            let mut texts = Vec::with_capacity(candidates.len() + 1);
            texts.push(query.to_string());
            texts.extend(candidates.iter().map(|n| candidate_text(n)));
            let vectors = provider.embed_cached(&texts)?;
            let query_vec = &vectors[0];
            candidates
                .iter()
                .zip(&vectors[1..])
                .map(|(name, vec)| ScoredCandidate {
                    name: name.clone(),
                    score: cosine(query_vec, vec),
                    source: ScoreSource::Embedding,
                })
                .collect()
        }
    };
    scored.sort_by(|a, b| {
        b.score.total_cmp(&a.score).then_with(|| a.name.cmp(&b.name))
    });
    Ok(scored)
}

/// First `min(k, |candidates|)` names of `rank`, in rank order.
pub fn topk(
    query: &str,
    candidates: &[String],
    k: usize,
    retriever: &Retriever,
) -> Result<Vec<String>, RankError> {
    let ranked = rank(query, candidates, retriever)?;
    Ok(ranked.into_iter().take(k).map(|c| c.name).collect())
}

pub const DEFAULT_CACHE_CAPACITY: usize = 10_000;

/// Wraps a provider with a bounded LRU cache keyed by exact text. Writes are
/// serialized behind one lock; misses are fetched in a single batched call.
pub struct CachingProvider {
    inner: Arc<dyn EmbeddingProvider>,
    cache: Mutex<LruCache>,
}

impl CachingProvider {
    pub fn new(inner: Arc<dyn EmbeddingProvider>, capacity: usize) -> Self {
        CachingProvider { inner, cache: Mutex::new(LruCache::new(capacity)) }
    }

    pub fn embed_cached(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RankError> {
        let mut missing: Vec<String> = Vec::new();
        {
            let mut cache = self.cache.lock().unwrap();
            for text in texts {
                if cache.get(text).is_none() && !missing.contains(text) {
                    missing.push(text.clone());
                }
            }
        }
        if !missing.is_empty() {
            let fetched = self.inner.embed(&missing)?;
            if fetched.len() != missing.len() {
                return Err(RankError::Provider(format!(
                    "provider returned {} vectors for {} texts",
                    fetched.len(),
                    missing.len()
                )));
            }
            let mut cache = self.cache.lock().unwrap();
            for (text, vector) in missing.into_iter().zip(fetched) {
                cache.put(text, vector);
            }
        }
        let mut cache = self.cache.lock().unwrap();
        Ok(texts
            .iter()
            .map(|t| cache.get(t).expect("just inserted").clone())
            .collect())
    }
}

// Small LRU: map plus recency queue. Capacity is in entries; schema names
// repeat heavily so this stays effective even at modest sizes.
struct LruCache {
    capacity: usize,
    map: HashMap<String, Vec<f32>>,
    order: VecDeque<String>,
}

impl LruCache {
    fn new(capacity: usize) -> Self {
        LruCache { capacity: capacity.max(1), map: HashMap::new(), order: VecDeque::new() }
    }

    fn get(&mut self, key: &str) -> Option<&Vec<f32>> {
        if self.map.contains_key(key) {
            self.touch(key);
            self.map.get(key)
        } else {
            None
        }
    }

    fn put(&mut self, key: String, value: Vec<f32>) {
        if self.map.insert(key.clone(), value).is_none() {
            self.order.push_back(key);
            if self.map.len() > self.capacity {
                if let Some(evicted) = self.order.pop_front() {
                    self.map.remove(&evicted);
                }
            }
        } else {
            self.touch(&key);
        }
    }

    fn touch(&mut self, key: &str) {
        if let Some(idx) = self.order.iter().position(|k| k == key) {
            self.order.remove(idx);
            self.order.push_back(key.to_string());
        }
    }
}

/// Remote bi-encoder endpoint: POST `{"texts": [...]}`, response
/// `{"vectors": [[...], ...]}`. Concurrent calls are capped by a simple
/// semaphore.
pub struct RemoteProvider {
    endpoint: String,
    client: reqwest::blocking::Client,
    dimension: OnceLock<usize>,
    gate: Semaphore,
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: &'a [String],
}

#[derive(Deserialize)]
struct EmbedResponse {
    vectors: Vec<Vec<f32>>,
}

impl RemoteProvider {
    pub fn new(endpoint: impl Into<String>, max_in_flight: usize) -> Self {
        RemoteProvider {
            endpoint: endpoint.into(),
            client: reqwest::blocking::Client::new(),
            dimension: OnceLock::new(),
            gate: Semaphore::new(max_in_flight.max(1)),
        }
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RankError> {
        let _permit = self.gate.acquire();
        let response = self
            .client
            .post(&self.endpoint)
            .json(&EmbedRequest { texts })
            .send()
            .map_err(|e| RankError::Provider(e.to_string()))?
            .error_for_status()
            .map_err(|e| RankError::Provider(e.to_string()))?;
        let body: EmbedResponse =
            response.json().map_err(|e| RankError::Provider(e.to_string()))?;
        if body.vectors.len() != texts.len() {
            return Err(RankError::Provider(format!(
                "endpoint returned {} vectors for {} texts",
                body.vectors.len(),
                texts.len()
            )));
        }
        if let Some(first) = body.vectors.first() {
            let dim = *self.dimension.get_or_init(|| first.len());
            if body.vectors.iter().any(|v| v.len() != dim) {
                return Err(RankError::Provider("inconsistent vector dimensions".into()));
            }
        }
        Ok(body.vectors)
    }

    fn dimension(&self) -> usize {
        self.dimension.get().copied().unwrap_or(0)
    }
}

struct Semaphore {
    state: Mutex<usize>,
    signal: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(permits: usize) -> Self {
        Semaphore { state: Mutex::new(permits), signal: Condvar::new() }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut available = self.state.lock().unwrap();
        while *available == 0 {
            available = self.signal.wait(available).unwrap();
        }
        *available -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.state.lock().unwrap() += 1;
        self.0.signal.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn names(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn lexical_ranks_overlapping_name_first() {
        // Hand-computed: query tokens {olympic, games, mascot};
        // first candidate tokens {olympics, olympic, mascot, games}:
        // overlap 3, P = 3/4, R = 1, F1 = 6/7. Second candidate overlap 0.
        let ranked = rank(
            "olympic games mascot",
            &names(&["olympics.olympic_mascot.olympic_games", "type.object.name"]),
            &Retriever::Lexical,
        )
        .unwrap();
        assert_eq!(ranked[0].name, "olympics.olympic_mascot.olympic_games");
        assert!((ranked[0].score - 6.0 / 7.0).abs() < 1e-12);
        assert_eq!(ranked[1].score, 0.0);
    }

    #[test]
    fn single_candidate_comes_back_regardless_of_score() {
        let ranked =
            rank("anything", &names(&["unrelated.name.here"]), &Retriever::Lexical).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].name, "unrelated.name.here");
    }

    #[test]
    fn ties_break_alphabetically() {
        let ranked = rank("zzz", &names(&["b.b.b", "a.a.a", "c.c.c"]), &Retriever::Lexical).unwrap();
        let order: Vec<&str> = ranked.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(order, vec!["a.a.a", "b.b.b", "c.c.c"]);
    }

    #[test]
    fn topk_is_a_prefix_of_rank() {
        let candidates = names(&["food.dish.ingredients", "dining.cuisine.dishes", "a.b.c"]);
        let full: Vec<String> = rank("cuisine dishes", &candidates, &Retriever::Lexical)
            .unwrap()
            .into_iter()
            .map(|c| c.name)
            .collect();
        for k in 1..=4 {
            let top = topk("cuisine dishes", &candidates, k, &Retriever::Lexical).unwrap();
            assert_eq!(top.as_slice(), &full[..k.min(full.len())]);
        }
    }

    #[test]
    fn empty_candidates_is_an_error() {
        assert_eq!(rank("q", &[], &Retriever::Lexical), Err(RankError::EmptyCandidates));
    }

    // Deterministic toy embedder: counts of letter buckets.
    struct BucketProvider {
        calls: AtomicUsize,
    }

    impl EmbeddingProvider for BucketProvider {
        fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f32>>, RankError> {
            self.calls.fetch_add(texts.len(), Ordering::SeqCst);
            Ok(texts
                .iter()
                .map(|t| {
                    let mut v = vec![0.0f32; 8];
                    for b in t.bytes().filter(|b| b.is_ascii_alphanumeric()) {
                        v[(b % 8) as usize] += 1.0;
                    }
                    v
                })
                .collect())
        }

        fn dimension(&self) -> usize {
            8
        }
    }

    #[test]
    fn embedding_mode_scores_by_cosine_and_caches() {
        let provider = Arc::new(BucketProvider { calls: AtomicUsize::new(0) });
        let caching = Arc::new(CachingProvider::new(provider.clone(), 100));
        let retriever = Retriever::Embedding(caching);
        let candidates = names(&["alpha.beta", "gamma.delta"]);
        let first = rank("alpha beta", &candidates, &retriever).unwrap();
        assert_eq!(first[0].name, "alpha.beta");
        assert!(first.iter().all(|c| c.score.is_finite()));
        let calls_after_first = provider.calls.load(Ordering::SeqCst);
        let second = rank("alpha beta", &candidates, &retriever).unwrap();
        assert_eq!(first, second);
        assert_eq!(provider.calls.load(Ordering::SeqCst), calls_after_first);
    }

    #[test]
    fn lru_evicts_oldest_entry() {
        let mut cache = LruCache::new(2);
        cache.put("a".into(), vec![1.0]);
        cache.put("b".into(), vec![2.0]);
        cache.get("a");
        cache.put("c".into(), vec![3.0]);
        assert!(cache.get("b").is_none());
        assert!(cache.get("a").is_some());
        assert!(cache.get("c").is_some());
    }
}
