//! Decaying-popularity workloads: each file's requests arrive as a burst at
//! its release time whose intensity decays exponentially. The example
//! generates a stream from known profiles, fits fresh profiles back from
//! the raw events, and scales the fit up for stress testing.

use cdnsim::workload::{self, PopularityProfile};

fn main() {
    let truth = vec![
        PopularityProfile { file: 0, tau: 0.0, requests: 400, omega: 0.08 },
        PopularityProfile { file: 1, tau: 25.0, requests: 600, omega: 0.30 },
        PopularityProfile { file: 2, tau: 60.0, requests: 300, omega: 1.20 },
    ];
    let sizes = vec![1.0; truth.len()];
    let horizon = 120.0;
    let stream = workload::decay_stream(&truth, &sizes, horizon, 0, 314);

    // Coarse request timeline, one row per file.
    let buckets = 12usize;
    let width = horizon / buckets as f64;
    println!("requests per {width:.0}-slot bucket:");
    for file in 0..truth.len() {
        let mut row = vec![0u32; buckets];
        for e in stream.iter().filter(|e| e.file == file) {
            row[((e.time / width) as usize).min(buckets - 1)] += 1;
        }
        let cells: Vec<String> = row.iter().map(|c| format!("{c:>4}")).collect();
        println!("  file {file}: {}", cells.join(" "));
    }
    println!();

    // Recover the release time, volume, and decay rate from the raw events.
    let fitted = workload::fit_profiles(&stream, truth.len());
    println!(
        "{:>4} {:>12} {:>12} {:>10} {:>10}",
        "file", "tau (true)", "tau (fit)", "om (true)", "om (fit)"
    );
    for (t, f) in truth.iter().zip(&fitted) {
        println!(
            "{:>4} {:>12.2} {:>12.2} {:>10.3} {:>10.3}",
            t.file, t.tau, f.tau, t.omega, f.omega
        );
    }

    let up = workload::upscale(&fitted, 10);
    let before: u64 = fitted.iter().map(|p| p.requests).sum();
    let after: u64 = up.iter().map(|p| p.requests).sum();
    println!();
    println!("upscale x10 keeps shape, multiplies volume: {before} -> {after} requests");
}
