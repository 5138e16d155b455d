//! Tour of the four serving-cost families: evaluate each curve and its
//! marginal cost on a grid, then invert the marginal cost and check the
//! round trip. Run with `cargo run --example penalty_families`.

use cdnsim::penalty::{Penalty, PenaltyFamily};

fn main() {
    let families = [
        ("quadratic a=2", Penalty::new(PenaltyFamily::Quadratic { a: 2.0, b: 0.0 }, 10.0)),
        ("linquad w=0.5", Penalty::new(PenaltyFamily::LinearQuadratic { w: 0.5 }, 10.0)),
        ("kleinrock cap=4", Penalty::new(PenaltyFamily::Kleinrock { cap: 4.0 }, 3.6)),
        (
            "mm1 k=1 cap=5",
            Penalty::new(
                PenaltyFamily::Mm1Queue { k: 1.0, k0: 0.0, cap: 5.0, x_max: 4.25 },
                4.25,
            ),
        ),
    ];

    println!("{:<16} {:>6} {:>10} {:>10}", "family", "x", "h(x)", "h'(x)");
    for (name, penalty) in &families {
        let penalty = penalty.as_ref().expect("valid parameters");
        for x in [0.0, 1.0, 2.0, 3.0] {
            let h = penalty.eval(x).expect("x within domain");
            let d = penalty.deriv(x).expect("x within domain");
            println!("{name:<16} {x:>6.1} {h:>10.4} {d:>10.4}");
        }
        println!();
    }

    // The placement engine leans on h'⁻¹; show that it really inverts.
    println!("inverse marginal cost round trips (x -> h'(x) -> x):");
    for (name, penalty) in &families {
        let penalty = penalty.as_ref().expect("valid parameters");
        let x = 2.0;
        let g = penalty.deriv(x).expect("x within domain");
        let back = penalty.inv_deriv(g).expect("g above h'(0)");
        println!("  {name:<16} x = {x}, h'(x) = {g:.4}, h'^-1 = {back:.6}");
    }
}
