// Taylor–Green decay on a 16³ grid with a certified potential closure and
// with a closure that violates the dissipation bound.

use sgs_closure::gfunc::PolynomialG;
use sgs_closure::les::{run, SimParams};
use sgs_closure::models::ClosureModel;

pub fn main() {
    let params = SimParams::default();
    let nu = params.nu;
    let certified = ClosureModel::polynomial_potential(PolynomialG { c0: 0.3 * nu, c1: 0.5 * nu, ..Default::default() });
    let violating = ClosureModel::polynomial_potential(PolynomialG::constant(2.0 * nu));

    for (label, model) in [("certified", certified), ("g = 2nu", violating)] {
        let out = run(&params, &model).expect("simulation");
        let first = out.budget.rows.first().unwrap();
        let last = out.budget.rows.last().unwrap();
        println!(
            "{label:>10}: {:?} after {} steps, E {:.4e} -> {:.4e}, min phi_sgs {:.3e}, max growth {:.2e}",
            out.status,
            out.steps_taken,
            first.energy,
            last.energy,
            out.budget.min_phi_sgs(),
            out.budget.max_relative_growth()
        );
    }
}
