//! Static description of the delivery network: one root server behind N
//! edge caches, each with a storage budget and two capacitated links (the
//! local cache path and the backhaul root path), each link carrying a convex
//! congestion cost.

use crate::penalty::Penalty;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("cache {cache}: {field} = {value} must be positive and finite")]
    NonPositiveField {
        cache: usize,
        field: &'static str,
        value: f64,
    },
    #[error("network has no caches")]
    Empty,
}

/// One edge cache: storage budget `storage` (M), per-slot service capacity
/// of the cache link `cache_cap` (C^c) and of the root link `root_cap`
/// (C^r), and the congestion penalties charged on each path.
#[derive(Debug, Clone, PartialEq)]
pub struct CacheSpec {
    pub storage: f64,
    pub cache_cap: f64,
    pub root_cap: f64,
    pub cache_cost: Penalty,
    pub root_cost: Penalty,
}

/// The full network; cache index doubles as the cache id everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub caches: Vec<CacheSpec>,
}

impl NetworkConfig {
    pub fn new(caches: Vec<CacheSpec>) -> Self {
        NetworkConfig { caches }
    }

    pub fn cache_count(&self) -> usize {
        self.caches.len()
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.caches.is_empty() {
            return Err(NetworkError::Empty);
        }
        for (cache, spec) in self.caches.iter().enumerate() {
            for (field, value) in [
                ("storage", spec.storage),
                ("cache_cap", spec.cache_cap),
                ("root_cap", spec.root_cap),
            ] {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(NetworkError::NonPositiveField { cache, field, value });
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::PenaltyFamily;

    fn penalty(a: f64) -> Penalty {
        Penalty::new(PenaltyFamily::Quadratic { a, b: 0.0 }, 100.0).unwrap()
    }

    #[test]
    fn validation_flags_bad_fields() {
        let good = CacheSpec {
            storage: 10.0,
            cache_cap: 5.0,
            root_cap: 5.0,
            cache_cost: penalty(1.0),
            root_cost: penalty(10.0),
        };
        assert!(NetworkConfig::new(vec![good.clone()]).validate().is_ok());
        assert_eq!(NetworkConfig::new(vec![]).validate(), Err(NetworkError::Empty));
        let bad = CacheSpec { storage: 0.0, ..good };
        assert!(matches!(
            NetworkConfig::new(vec![bad]).validate(),
            Err(NetworkError::NonPositiveField { field: "storage", .. })
        ));
    }
}
