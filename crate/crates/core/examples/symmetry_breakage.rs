// Equivariance of a scale-invariant closure under all five groups, and how
// much the filter-width based closures break the scaling group.

use sgs_closure::config::model_preset;
use sgs_closure::symmetry::{check_symmetries, GroupKind};
use sgs_closure::zoo::{breakage_report, DEFAULT_EPS_GRID};

pub fn main() {
    let scaled = model_preset("scaled", 0.02).unwrap().build().unwrap();
    let report = check_symmetries(&scaled, &GroupKind::ALL, 3, 60, 9, 1e-11);
    for g in &report.groups {
        println!("scaled / {:<14}: max defect {:.2e} (field {:.2e})", g.group.to_string(), g.state.max, g.field.max);
    }

    for name in ["smagorinsky", "lund_novikov", "kosovic", "rdh05"] {
        let model = model_preset(name, 0.02).unwrap().build().unwrap();
        let r = breakage_report(&model, &GroupKind::ALL, &DEFAULT_EPS_GRID, 60, 9, 1e-11);
        let broken: Vec<String> = r.broken.iter().map(|g| g.to_string()).collect();
        let scaling = r.groups.iter().find(|g| g.group == GroupKind::Scaling).unwrap();
        let per_eps: Vec<String> = scaling.per_eps.iter().map(|e| format!("{:+.2}:{:.3}", e.eps, e.state.max)).collect();
        println!("{name:>13}: broken {broken:?}; scaling defect by eps {}", per_eps.join(" "));
    }
}
