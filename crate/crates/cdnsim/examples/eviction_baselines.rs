//! The five classic caches on one shared Zipf request stream: plain
//! recency (lru), frequency (lfu), uniform random (rr), popularity-biased
//! random (prr), and the two-touch filter (2lru). Frequency-aware schemes
//! shine on stationary popularity; the two-touch filter pays one extra miss
//! per file to keep one-hit wonders out.

use cdnsim::baselines::{EvictionCache, EvictionPolicy};
use cdnsim::workload;

fn main() {
    let files = 500;
    let (catalog, p) = workload::zipf_catalog(files, 0.9, (0.5, 1.5), 42);
    let stream = workload::static_stream(&p, catalog.sizes(), 200.0, 300, 0, 43)
        .expect("valid rate");
    let storage = 0.05 * catalog.total_volume();
    let virtual_cap = EvictionCache::default_virtual_capacity(storage, 1.0);

    println!(
        "{} requests over {} files, cache fits ~5% of the catalog",
        stream.len(),
        files
    );
    println!("{:<6} {:>8} {:>8} {:>9}", "policy", "hits", "misses", "hit rate");

    for policy in [
        EvictionPolicy::Lru,
        EvictionPolicy::Lfu,
        EvictionPolicy::Rr,
        EvictionPolicy::Prr,
        EvictionPolicy::TwoLru,
    ] {
        let mut cache = EvictionCache::new(policy, storage, virtual_cap, 7);
        let mut hits = 0u64;
        let mut misses = 0u64;
        for event in &stream {
            if cache.on_request(event.file, catalog.sizes()).hit {
                hits += 1;
            } else {
                misses += 1;
            }
        }
        let rate = hits as f64 / (hits + misses) as f64;
        println!("{:<6} {hits:>8} {misses:>8} {rate:>9.3}", format!("{policy:?}").to_lowercase());
    }
}
