//! Per-link flow allocation: given one price per file and a volume budget,
//! the solver finds the flows maximizing total priced surplus. With slack
//! capacity every file gets its unconstrained optimum; when the budget
//! binds, a single nonnegative multiplier (the "water level") uniformly
//! discounts all prices until the allocation fits.

use cdnsim::penalty::{Penalty, PenaltyFamily};
use cdnsim::subproblem::{self, SubproblemInstance};

fn main() {
    let penalty =
        Penalty::new(PenaltyFamily::Quadratic { a: 1.0, b: 0.0 }, 1e6).expect("valid parameters");
    let prices = vec![3.0, 1.0, 0.5, -0.7];

    for capacity in [10.0, 2.0] {
        let inst = SubproblemInstance { prices: prices.clone(), capacity, penalty };
        let sol = subproblem::solve(&inst, 1e-9).expect("solvable instance");
        let residual = subproblem::verify_kkt(&inst, &sol);
        println!("capacity = {capacity}");
        println!("  prices     = {:?}", inst.prices);
        println!("  flows      = {:?}", sol.flows);
        println!("  multiplier = {:.6}  saturated = {}", sol.multiplier, sol.saturated);
        println!("  used       = {:.6}", sol.flows.iter().sum::<f64>());
        println!("  kkt residual = {residual:.2e}");
        println!();
    }

    // Negative prices never produce negative flows; files priced below the
    // water level are simply shut off.
    let inst = SubproblemInstance {
        prices: vec![-1.0, -2.0],
        capacity: 5.0,
        penalty,
    };
    let sol = subproblem::solve(&inst, 1e-9).expect("solvable instance");
    println!("all prices negative -> flows {:?}", sol.flows);
}
