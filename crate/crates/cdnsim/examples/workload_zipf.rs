//! Stationary workload generation: a rank-popularity catalog plus Poisson
//! arrivals. The example draws a large stream and compares observed request
//! shares with the target law.

use cdnsim::workload;
use std::collections::HashMap;

fn main() {
    let files = 100;
    let s = 1.0;
    let (catalog, p) = workload::zipf_catalog(files, s, (0.8, 1.2), 5);
    let stream = workload::static_stream(&p, catalog.sizes(), 5000.0, 200, 0, 6)
        .expect("valid rate");

    let mut counts: HashMap<usize, u64> = HashMap::new();
    for event in &stream {
        *counts.entry(event.file).or_insert(0) += 1;
    }
    let total = stream.len() as f64;

    println!("{} requests, exponent s = {s}", stream.len());
    println!("{:>4} {:>10} {:>10}", "rank", "target", "observed");
    for rank in 0..8 {
        let observed = *counts.get(&rank).unwrap_or(&0) as f64 / total;
        println!("{:>4} {:>10.5} {:>10.5}", rank, p[rank], observed);
    }

    // Slope of log(frequency) vs log(rank) over the head of the catalog
    // should sit near -s.
    let pts: Vec<(f64, f64)> = (0..20)
        .filter_map(|rank| {
            let c = *counts.get(&rank).unwrap_or(&0);
            (c > 0).then(|| (((rank + 1) as f64).ln(), (c as f64 / total).ln()))
        })
        .collect();
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|q| q.0).sum();
    let sy: f64 = pts.iter().map(|q| q.1).sum();
    let sxx: f64 = pts.iter().map(|q| q.0 * q.0).sum();
    let sxy: f64 = pts.iter().map(|q| q.0 * q.1).sum();
    let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    println!();
    println!("rank-frequency slope over the top 20: {slope:.3} (target {:.1})", -s);
}
