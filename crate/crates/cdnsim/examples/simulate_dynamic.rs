//! Pass-through caching under churning popularity: files are released over
//! time and fade, so yesterday's frequency counts mislead. The per-request
//! admission filter keyed on anticipated flows adapts; frequency-based
//! eviction clings to dead files. In this serving mode every admitted miss
//! crosses the backhaul, so backhaul cost equals rerouted volume exactly.

use cdnsim::simulator::{self, ExperimentConfig, InitialFill, PolicyId, Topology};
use cdnsim::penalty::{Penalty, PenaltyFamily};
use cdnsim::workload::{self, PopularityProfile};
use cdnsim::{CacheSpec, Catalog, NetworkConfig};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use std::error::Error;

fn main() -> Result<(), Box<dyn Error>> {
    let files = 800;
    let horizon = 150u64;
    let mut rng = StdRng::seed_from_u64(61);
    let catalog = Catalog::new((0..files).map(|_| rng.gen_range(0.5..1.5)).collect());
    let profiles: Vec<PopularityProfile> = (0..files)
        .map(|file| PopularityProfile {
            file,
            tau: rng.gen_range(0.0..0.8 * horizon as f64),
            requests: rng.gen_range(10..=40),
            omega: rng.gen_range(0.05..0.3),
        })
        .collect();
    let stream = workload::decay_stream(&profiles, catalog.sizes(), horizon as f64, 0, 62);
    let quad = |a: f64| Penalty::new(PenaltyFamily::Quadratic { a, b: 0.0 }, 1e9).unwrap();

    println!("{} files released over time, {} requests", files, stream.len());
    println!("{:<8} {:>10} {:>9} {:>14}", "policy", "rerouted", "hit rate", "admissions");

    for policy in [PolicyId::LeastXf, PolicyId::Lru, PolicyId::Lfu] {
        let config = ExperimentConfig {
            topology: Topology::Two,
            policy,
            network: NetworkConfig::new(vec![CacheSpec {
                storage: 0.02 * catalog.total_volume(),
                cache_cap: 150.0,
                root_cap: 300.0,
                cache_cost: quad(1.0),
                root_cost: quad(10.0),
            }]),
            mu: None,
            t_up_lambda: 1,
            t_up_v: 1,
            horizon,
            warmup: 30,
            seed: 1,
            initial_fill: InitialFill::Empty,
            miss_log_capacity: None,
            virtual_cache_capacity: None,
        };
        let out = simulator::run(&config, &catalog, &stream)?;
        let admissions: usize = out.events.iter().map(|e| e.admitted.len()).sum();
        let pass_through = out
            .metrics
            .iter()
            .all(|r| r.bbc.to_bits() == r.rdv.to_bits());
        assert!(pass_through, "pass-through mode: backhaul == rerouted volume");
        println!(
            "{:<8} {:>10.2} {:>9.3} {:>14}",
            policy.to_string(),
            out.summary.mean_rdv,
            out.summary.hit_rate,
            admissions
        );
    }

    println!();
    println!("the admission filter rejects files whose anticipated flow is");
    println!("below the cache's current worst incumbent, so stale releases");
    println!("stop displacing live ones.");
    Ok(())
}
