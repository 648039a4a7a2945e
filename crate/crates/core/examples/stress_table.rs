// Evaluates a closure on a batch of states and writes the stress table as CSV.

use sgs_closure::gfunc::GFunction;
use sgs_closure::models::{evaluate_batch, write_stress_csv, ClosureModel};
use sgs_closure::sampling::unit_states;

pub fn main() {
    let nu = 0.02;
    // any smooth g(v1, v3, v4) with its partial derivatives
    let g = GFunction::custom("tanh", move |v1, v3, v4| {
        let t = (2.0 * v1).tanh();
        sgs_closure::gfunc::GValue {
            value: nu * (0.4 + 0.1 * t + 0.05 * v3 * v3 + 0.02 * v4),
            d_v1: nu * 0.2 * (1.0 - t * t),
            d_v3: nu * 0.1 * v3,
            d_v4: nu * 0.02,
        }
    });
    let model = ClosureModel::potential(g);
    let rows: Vec<_> = evaluate_batch(&model, nu, &unit_states(5, 6)).into_iter().collect::<Result<_, _>>().unwrap();
    let mut out = Vec::new();
    write_stress_csv(&mut out, &rows).unwrap();
    print!("{}", String::from_utf8(out).unwrap());
}
