// Invariants of a few named flows and of a random ensemble, and a brute-force
// search for the extreme values of v1.

use sgs_closure::config::state_preset;
use sgs_closure::invariants::{invariant_set, v1_extremal_scan, SingularityPolicy};
use sgs_closure::sampling::unit_states;
use sgs_closure::tensor::decompose;

pub fn main() {
    let policy = SingularityPolicy::default();
    for name in ["plane_shear", "pure_strain", "axisymmetric", "solid_rotation"] {
        let d = decompose(&state_preset(name).unwrap()).unwrap();
        match invariant_set(&d.s, &d.omega, &policy) {
            Ok(set) => println!("{name:>15}: |S| = {:.4}, {:?}", set.s_norm, set.scaled),
            Err(e) => println!("{name:>15}: {e}"),
        }
    }

    let states = unit_states(1000, 1);
    let v1_range = states
        .iter()
        .map(|(s, w)| invariant_set(s, w, &policy).unwrap().scaled.v1)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    println!("v1 over 1000 unit states: [{:.4}, {:.4}]", v1_range.0, v1_range.1);

    let scan = v1_extremal_scan(20_000, 2);
    println!("max |v1| = {:.12} at {:?}", scan.max_abs_v1, scan.argmax);
    for b in &scan.candidate_bounds {
        println!("  bound {:<14} = {:.12}: respected {}, attained {}", b.label, b.value, b.respected, b.attained);
    }
}
