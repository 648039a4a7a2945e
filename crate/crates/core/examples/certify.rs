// Positivity certificates for a few generators g and the resulting sign of
// the total dissipation on random states.

use sgs_closure::gfunc::{certify_positivity, GFunction, PolynomialG};
use sgs_closure::models::{total_dissipation, ClosureModel};
use sgs_closure::sampling::unit_states;

pub fn main() {
    let nu = 0.02;
    let v_star = 1.0 / 6f64.sqrt();
    let candidates = [
        ("constant nu/2", PolynomialG::constant(0.5 * nu)),
        ("linear in v1", PolynomialG { c0: 0.3 * nu, c1: 0.5 * nu, ..Default::default() }),
        ("convex in v3, v4", PolynomialG { c0: 0.2 * nu, l3: 0.1 * nu, q33: 0.2 * nu, q44: 0.1 * nu, ..Default::default() }),
        ("concave in v3", PolynomialG { c0: 0.2 * nu, q33: -0.1 * nu, ..Default::default() }),
        ("constant 2 nu", PolynomialG::constant(2.0 * nu)),
    ];
    let states = unit_states(2000, 4);
    for (label, g) in candidates {
        let cert = certify_positivity(&GFunction::Polynomial(g), nu, v_star, 5000, 5);
        let model = ClosureModel::polynomial_potential(g);
        let min_phi = states
            .iter()
            .map(|(s, w)| total_dissipation(&model, nu, s, w).unwrap())
            .fold(f64::INFINITY, f64::min);
        println!(
            "{label:>17}: certified {:<5} (convex {}, boundary max {:.4}), min total dissipation {min_phi:.3e}",
            cert.certified(),
            cert.convex_in_v3v4,
            cert.max_boundary_value
        );
    }
}
