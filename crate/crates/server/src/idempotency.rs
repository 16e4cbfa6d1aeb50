//! Replay cache for mutating requests keyed by the client's request token.

use std::collections::{HashMap, VecDeque};

use axum::body::Bytes;
use axum::http::StatusCode;

const CAPACITY: usize = 4096;

#[derive(Debug, Clone)]
pub struct StoredResponse {
    pub status: StatusCode,
    pub body: Bytes,
}

#[derive(Debug, Default)]
pub struct TokenCache {
    entries: HashMap<String, StoredResponse>,
    order: VecDeque<String>,
}

impl TokenCache {
    pub fn get(&self, key: &str) -> Option<&StoredResponse> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: String, response: StoredResponse) {
        if self.entries.insert(key.clone(), response).is_none() {
            self.order.push_back(key);
        }
        while self.order.len() > CAPACITY {
            if let Some(old) = self.order.pop_front() {
                self.entries.remove(&old);
            }
        }
    }

    #[cfg(test)]
    fn len(&self) -> usize {
        self.entries.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evicts_oldest() {
        let mut cache = TokenCache::default();
        for i in 0..CAPACITY + 3 {
            cache.insert(
                format!("k{i}"),
                StoredResponse {
                    status: StatusCode::OK,
                    body: Bytes::new(),
                },
            );
        }
        assert_eq!(cache.len(), CAPACITY);
        assert!(cache.get("k0").is_none());
        assert!(cache.get(&format!("k{}", CAPACITY + 2)).is_some());
    }
}
