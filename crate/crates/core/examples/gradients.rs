// Closed-form derivatives of the invariants against central differences, and
// the symmetry of the tangent map of closures with and without a potential.

use sgs_closure::calculus::{gradcheck, hessian_symmetry_check};
use sgs_closure::gfunc::{GFunction, PolynomialG};
use sgs_closure::models::{ClosureForm, ClosureModel, CoefficientFn, PotentialModel};
use sgs_closure::sampling::unit_states;

pub fn main() {
    let states = unit_states(500, 3);
    let report = gradcheck(&states, 1e-6).unwrap();
    for e in &report.entries {
        println!("d{}/dS: max relative error {:.2e}", e.invariant.name(), e.max_relative_error);
    }

    let g = PolynomialG { c0: 0.3, c1: 0.5, l3: 0.1, q44: 0.2, ..Default::default() };
    let potential = ClosureModel::polynomial_potential(g);
    let mut with_commutator = PotentialModel { g: GFunction::Polynomial(g) }.to_scaled();
    with_commutator.alpha[4] = CoefficientFn::Constant(0.1);
    let with_commutator = ClosureModel::new(ClosureForm::Scaled(with_commutator));

    for (label, model) in [("potential", &potential), ("potential + commutator", &with_commutator)] {
        let worst = states
            .iter()
            .take(50)
            .map(|(s, w)| hessian_symmetry_check(model, s, w, 1e-5).unwrap().asymmetry)
            .fold(0.0, f64::max);
        println!("{label}: tangent asymmetry {worst:.2e}");
    }
}
