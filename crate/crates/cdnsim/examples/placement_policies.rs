//! The three periodic placement rules and the per-request admission filter,
//! all driven by the same anticipated-flow vector. Files are A..H; four
//! incumbents sit in a cache of capacity 10 and four candidates arrived as
//! misses since the last update.

use cdnsim::placement::{self, CacheState, MissLog};

const NAMES: [&str; 8] = ["A", "B", "C", "D", "E", "F", "G", "H"];

fn label(set: impl IntoIterator<Item = usize>) -> String {
    set.into_iter().map(|f| NAMES[f]).collect::<Vec<_>>().join(",")
}

fn main() {
    let sizes = [4.0, 2.0, 2.0, 2.0, 2.0, 1.0, 2.0, 1.0];
    let x = [10.0, 8.0, 6.0, 3.0, 7.0, 5.0, 4.0, 2.0];
    let capacity = 10.0;

    println!("anticipated flows per file:");
    for f in 0..8 {
        println!("  {} size {} x {}", NAMES[f], sizes[f], x[f]);
    }
    println!();

    // Greedy refill: ignore the incumbents, pack files by flow-per-volume.
    let target = placement::top_x(&x, &sizes, capacity);
    println!("greedy refill        -> {{{}}}", label(target));

    // Incumbents {A,B,C,D}; candidates E..H recorded as misses.
    let mut state = CacheState::new(capacity);
    for f in [0, 1, 2, 3] {
        state.insert(f, &sizes);
    }
    let mut log = MissLog::new(16);
    for f in [4, 5, 6, 7] {
        log.record(f, 0);
    }

    let least = placement::least_x(&state, &x, &log, &sizes);
    let evicted: Vec<usize> = state.stored().difference(&least).copied().collect();
    println!(
        "eviction-led update  -> {{{}}} (evicts {{{}}})",
        label(least.iter().copied()),
        label(evicted)
    );

    let th = placement::least_x_th(&state, &x, &log, &sizes);
    let evicted: Vec<usize> = state.stored().difference(&th).copied().collect();
    println!(
        "thresholded update   -> {{{}}} (evicts {{{}}})",
        label(th.iter().copied()),
        label(evicted)
    );
    println!("(thresholds damp churn: a candidate must beat the cheapest");
    println!(" incumbent, and evictions stop at the marginal file)");
    println!();

    // Per-request admission: the same flow vector gates each arriving miss.
    let mut state = CacheState::new(capacity);
    for f in [0, 1, 2, 3] {
        state.insert(f, &sizes);
    }
    for incoming in [7usize, 4] {
        let decision = placement::least_x_f(&mut state, &x, incoming, &sizes);
        println!(
            "request miss on {}: cached = {}, evicted = {{{}}}",
            NAMES[incoming],
            decision.cached,
            label(decision.evicted)
        );
    }
    println!("final contents       -> {{{}}}", label(state.stored().iter().copied()));
}
