use approx::assert_abs_diff_eq;

use tjent::analysis::{ggm_column_deviations, ggm_scan, negativity_curve, select_model, FitModel};
use tjent::basis::{Boundary, ModelParams};
use tjent::eigensolver::{global_ground, SolverConfig};
use tjent::entanglement::SplitPolicy;

#[test]
fn quarter_filled_four_site_ggm_ignores_coupling() {
    let rows = ggm_scan::<f64>(4, Boundary::Periodic, &[2], &[0.5, 1.0, 2.0, 3.0, 4.0], SplitPolicy::Exhaustive, &SolverConfig::default()).unwrap();
    let spread = ggm_column_deviations(&rows)[0].2;
    assert!(spread <= 1e-3, "spread {spread}");
}

#[test]
fn two_site_ggm_is_one_half_for_all_couplings() {
    let rows = ggm_scan::<f64>(2, Boundary::Periodic, &[2], &[0.5, 1.0, 4.0], SplitPolicy::Exhaustive, &SolverConfig::default()).unwrap();
    for r in rows {
        assert_abs_diff_eq!(r.ggm, 0.5, epsilon = 1e-10);
        assert_eq!(r.density, 1.0);
    }
}

#[test]
fn two_electrons_on_thirty_sites() {
    let cfg = SolverConfig::default();
    let p = ModelParams::periodic(30, 2, 1.0).unwrap();
    let (basis, gs) = global_ground::<f64>(&p, &cfg).unwrap();
    assert_eq!(basis.dim(), 870);
    let c = negativity_curve(&p, &gs, &basis).unwrap();
    assert_eq!(c.points.len(), 15);
    // every point is populated and the curve decays overall
    assert!(c.points.iter().all(|p| p.1 > 0.0));
    assert!(c.points[0].1 > c.points[14].1);
    let steep = ModelParams::periodic(30, 2, 3.6).unwrap();
    let (basis, gs) = global_ground::<f64>(&steep, &cfg).unwrap();
    let c = negativity_curve(&steep, &gs, &basis).unwrap();
    assert_eq!(select_model(&c, c.full_range()).unwrap().best.model, FitModel::Exponential);
}
