//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.
//!
//! `TJENT_LONG=1` adds the N = 16 GGM scan.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tjent::analysis::{
    fidelity_scan, fit_exponential, fit_inverse_linear, freezing_metric, ggm_column_deviations, ggm_scan, negativity_curve,
    pooled_fit, select_model, steepest_increase, EntanglementCurve, FitModel, Series, DEFAULT_BE_FREEZE_THRESHOLD,
    DEFAULT_GGM_FREEZE_THRESHOLD,
};
use tjent::basis::{enumerate_sector, Boundary, ModelParams};
use tjent::eigensolver::{dense_ground, global_ground, lanczos_ground, SolverConfig};
use tjent::entanglement::{ggm, ggm_over_splits, log_negativity, negativity_on_side, spin_correlation, two_site_rdm, SplitPolicy};
use tjent::hamiltonian::build_hamiltonian;
use tjent::rvb::{covering_vector, enumerate_coverings, fidelity_with_span, rvb_fidelity, SparseVector};
use tjent::Result;

const ORACLE_TOL: f64 = 1e-8;
const EXACT_TOL: f64 = 1e-9;
const MIN_R_SQUARED: f64 = 0.99;
const REFERENCE_REL_TOL: f64 = 0.20;
const REFERENCE_A: f64 = 162.6;
const REFERENCE_B: f64 = 18.9;
const REFERENCE_C: f64 = 0.0236;
const REFERENCE_XI: f64 = 0.5225;
const MONOTONE_NOISE: f64 = 1e-6;
const RVB_RISE_CENTER: f64 = 2.3;
const RVB_RISE_HALF_WIDTH: f64 = 0.5;
const GGM_PEAK_DENSITY: f64 = 0.6;
const REGRESSION_TOL: f64 = 1e-8;
const FIT_ROUNDTRIP_TOL: f64 = 1e-10;
const FIDELITY_ORACLE_TOL: f64 = 1e-8;

const POLY_J: [f64; 4] = [0.5, 1.0, 1.5, 2.0];
const FROZEN_J: [f64; 7] = [0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0];
const THAWED_J: [f64; 3] = [3.0, 3.6, 4.0];
const GGM_J: [f64; 4] = [2.5, 3.0, 3.5, 4.0];

/// Fidelity on the grid `1.5, 1.6, ..., 4.0`, recorded from the first full run.
const RVB_PIN_N12: [f64; 26] = [
    0.7132573797116772, 0.7142195520042846, 0.7153178055474937, 0.7165731566101476,
    0.7180097408809275, 0.7196550684649663, 0.7215401705098766, 0.7236995547541857,
    0.7261708577577005, 0.7289940523743484, 0.7322100498815687, 0.7358585434718091,
    0.7399749964097038, 0.7445868085047562, 0.7497089114486412, 0.7553393276970535,
    0.7614555065001173, 0.7680123980115438, 0.7749431030244999, 0.7821624746138508,
    0.7895733373905818, 0.7970742803512552, 0.8045675686487257, 0.8119657806066723,
    0.8191962525126372, 0.8262030681859333,
];
const RVB_PIN_N16: [f64; 26] = [
    0.7101431268559217, 0.7106901495547091, 0.7113369324064703, 0.7121051967673063,
    0.7130219742523861, 0.7141208960344563, 0.7154436879463475, 0.7170417890095615,
    0.718977881440957, 0.7213268977280408, 0.7241757303313466, 0.7276204347217808,
    0.7317593401336623, 0.7366805593073081, 0.7424435770763421, 0.7490574652212195,
    0.7564623227637812, 0.7645232149641578, 0.7730434591559746, 0.7817956457038413,
    0.7905593572445766, 0.7991516559884704, 0.8074420153551615, 0.8153520625124471,
    0.8228459562589868, 0.829917773168507,
];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Result<Outcome> {
    Ok(Outcome { pass, detail: detail.into() })
}

fn rel_close(x: f64, target: f64, rel: f64) -> bool {
    ((x - target) / target).abs() <= rel
}

fn cfg() -> SolverConfig {
    SolverConfig::default()
}

fn chain_curve(n: usize, n_el: usize, j: f64) -> Result<EntanglementCurve<f64>> {
    let p = ModelParams::periodic(n, n_el, j)?;
    let (basis, gs) = global_ground::<f64>(&p, &cfg())?;
    negativity_curve(&p, &gs, &basis)
}

fn c1_oracle() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut sectors = 0usize;
    for n in 2..=8 {
        for boundary in [Boundary::Periodic, Boundary::Open] {
            for n_up in 0..=n {
                for n_dn in 0..=(n - n_up) {
                    for j in [0.5, 1.0, 2.0, 4.0] {
                        let p = ModelParams::new(n, n_up, n_dn, j, boundary)?;
                        let basis = enumerate_sector(&p)?;
                        let h = build_hamiltonian::<f64>(&p, &basis)?;
                        let dense = dense_ground(&h)?;
                        let lanczos = lanczos_ground(&h, &cfg())?;
                        worst = worst.max((dense.energy - lanczos.energy).abs());
                        sectors += 1;
                    }
                }
            }
        }
    }
    outcome(worst <= ORACLE_TOL, format!("{sectors} sector solves, max |E_lanczos - E_dense| = {worst:.3e}"))
}

fn c2_exact() -> Result<Outcome> {
    let mut fails = Vec::new();
    for j in [0.5, 1.0, 2.0, 4.0] {
        let p = ModelParams::periodic(2, 2, j)?;
        let (basis, gs) = global_ground::<f64>(&p, &cfg())?;
        let rdm = two_site_rdm(&gs, &basis, 0, 1)?;
        let checks = [
            ("E", gs.energy, -0.75 * j),
            ("log negativity", log_negativity(&rdm)?, 1.0),
            ("G", ggm(&gs, &basis, SplitPolicy::Exhaustive)?.value, 0.5),
            ("spin correlator", spin_correlation(&rdm), -0.75),
        ];
        for (name, got, want) in checks {
            if (got - want).abs() > EXACT_TOL {
                fails.push(format!("J/t={j} {name}={got} (want {want})"));
            }
        }
    }
    outcome(fails.is_empty(), if fails.is_empty() { "E=-3J/4, 1 ebit, G=0.5, -0.75 at J/t in {0.5,1,2,4}".into() } else { fails.join("; ") })
}

fn c3_polynomial() -> Result<Outcome> {
    let mut fits = Vec::new();
    let mut notes = Vec::new();
    let mut all_inverse = true;
    for j in POLY_J {
        let curve = chain_curve(30, 2, j)?;
        let sel = select_model(&curve, curve.full_range())?;
        let inv = fit_inverse_linear(&curve, curve.full_range())?;
        notes.push(format!("J/t={j}: {} R2={:.4}", sel.best.model, inv.r_squared));
        all_inverse &= sel.best.model == FitModel::InverseLinear && inv.r_squared >= MIN_R_SQUARED;
        fits.push(inv);
    }
    let pooled = pooled_fit(&fits)?;
    let (a, b) = pooled.mean;
    let params_ok = rel_close(a, REFERENCE_A, REFERENCE_REL_TOL) && rel_close(b, REFERENCE_B, REFERENCE_REL_TOL);
    notes.push(format!("pooled A={a:.4} B={b:.4} (target {REFERENCE_A}, {REFERENCE_B})"));
    outcome(all_inverse && params_ok, notes.join("; "))
}

fn c4_exponential() -> Result<Outcome> {
    let curve = chain_curve(30, 2, 3.6)?;
    let sel = select_model(&curve, curve.full_range())?;
    let exp = fit_exponential(&curve, curve.full_range())?;
    let (c, xi) = exp.params;
    let pass = sel.best.model == FitModel::Exponential && rel_close(c, REFERENCE_C, REFERENCE_REL_TOL) && rel_close(xi, REFERENCE_XI, REFERENCE_REL_TOL);
    outcome(
        pass,
        format!("selected {}, C={c:.4e} xi={xi:.4} R2={:.4} (target {REFERENCE_C}, {REFERENCE_XI})", sel.best.model, exp.r_squared),
    )
}

fn c5_freezing() -> Result<Outcome> {
    let family = |js: &[f64]| -> Result<Vec<Series<f64>>> {
        js.iter().map(|&j| Ok(Series::from_curve(format!("J/t={j}"), &chain_curve(30, 2, j)?))).collect()
    };
    let low = freezing_metric(&family(&FROZEN_J)?, DEFAULT_BE_FREEZE_THRESHOLD)?;
    let high = freezing_metric(&family(&THAWED_J)?, DEFAULT_BE_FREEZE_THRESHOLD)?;
    outcome(
        low.frozen && !high.frozen,
        format!(
            "J/t<=2 deviation {:.3e} (frozen={}), J/t>=3 deviation {:.3e} (frozen={}), threshold {:.0e}",
            low.max_deviation, low.frozen, high.max_deviation, high.frozen, DEFAULT_BE_FREEZE_THRESHOLD
        ),
    )
}

fn rvb_grid() -> Vec<f64> {
    (0..26).map(|k| 1.5 + 0.1 * k as f64).collect()
}

fn c6_rvb() -> Result<Outcome> {
    let grid = rvb_grid();
    let mut pass = true;
    let mut notes = Vec::new();
    for (n, pin) in [(12usize, &RVB_PIN_N12), (16, &RVB_PIN_N16)] {
        let scan = fidelity_scan::<f64>(n, Boundary::Periodic, 2, &grid, &cfg())?;
        let values: Vec<f64> = scan.iter().map(|p| p.result.fidelity).collect();
        let monotone = values.windows(2).all(|w| w[1] >= w[0] - MONOTONE_NOISE);
        let pts: Vec<(f64, f64)> = grid.iter().copied().zip(values.iter().copied()).collect();
        let rise = steepest_increase(&pts).unwrap_or(f64::NAN);
        let rise_ok = (rise - RVB_RISE_CENTER).abs() <= RVB_RISE_HALF_WIDTH;
        let drift = values.iter().zip(pin.iter()).map(|(v, p)| (v - p).abs()).fold(0.0, f64::max);
        let pinned = drift <= REGRESSION_TOL;
        pass &= monotone && rise_ok && pinned;
        notes.push(format!(
            "N={n}: F {:.6}..{:.6}, monotone={monotone}, steepest rise at J/t={rise:.2}, regression drift {drift:.1e}",
            values[0],
            values[values.len() - 1]
        ));
        if std::env::var_os("TJENT_PRINT_PINS").is_some() {
            eprintln!("N={n} pins: {values:?}");
        }
    }
    outcome(pass, notes.join("; "))
}

fn ggm_check(n: usize) -> Result<(bool, String)> {
    let electrons: Vec<usize> = (1..=n / 2).map(|k| 2 * k).collect();
    let rows = ggm_scan::<f64>(n, Boundary::Periodic, &electrons, &GGM_J, SplitPolicy::default_for(n), &cfg())?;
    let nearest = *electrons
        .iter()
        .min_by(|&&a, &&b| {
            let da = (a as f64 / n as f64 - GGM_PEAK_DENSITY).abs();
            let db = (b as f64 / n as f64 - GGM_PEAK_DENSITY).abs();
            da.partial_cmp(&db).unwrap()
        })
        .unwrap();
    let mut peaks = Vec::new();
    for j in GGM_J {
        let best = rows
            .iter()
            .filter(|r| r.j_over_t == j)
            .max_by(|a, b| a.ggm.partial_cmp(&b.ggm).unwrap())
            .unwrap();
        peaks.push(best.n_electrons);
    }
    let peak_ok = peaks.iter().all(|&e| e == nearest);
    let cols = ggm_column_deviations(&rows);
    let low_frozen = cols.iter().filter(|c| c.1 <= 0.5).all(|c| c.2 <= DEFAULT_GGM_FREEZE_THRESHOLD);
    let high_thawed = cols.iter().filter(|c| c.1 > 0.7).any(|c| c.2 > DEFAULT_GGM_FREEZE_THRESHOLD);
    let devs: Vec<String> = cols.iter().map(|c| format!("{:.3}:{:.1e}", c.1, c.2)).collect();
    let degenerate = rows.iter().filter(|r| r.degenerate).count();
    Ok((
        peak_ok && low_frozen && high_thawed,
        format!(
            "N={n}: argmax N_el per J/t {peaks:?} (want {nearest}); column spread [{}]; n_el<=0.5 frozen={low_frozen}, some n_el>0.7 thawed={high_thawed}; {degenerate} degenerate points",
            devs.join(" ")
        ),
    ))
}

fn c7_ggm() -> Result<Outcome> {
    let (mut pass, mut detail) = ggm_check(12)?;
    if std::env::var_os("TJENT_LONG").is_some() {
        let (p16, d16) = ggm_check(16)?;
        pass &= p16;
        detail = format!("{detail}; {d16}");
    }
    outcome(pass, detail)
}

fn c8_properties() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut fails = Vec::new();

    // RDM trace, PSD and partial-transpose side.
    for (n, n_el, j) in [(6, 2, 1.0), (6, 4, 3.0), (8, 4, 0.5), (7, 3, 2.0)] {
        let p = ModelParams::periodic(n, n_el, j)?;
        let (basis, gs) = global_ground::<f64>(&p, &cfg())?;
        for a in 0..n {
            for b in a + 1..n {
                let rdm = two_site_rdm(&gs, &basis, a, b)?;
                let min_ev = rdm.eigenvalues().into_iter().fold(f64::INFINITY, f64::min);
                if (rdm.trace() - 1.0).abs() > 1e-12 || min_ev < -1e-12 {
                    fails.push(format!("rdm N={n} ({a},{b})"));
                }
                let side = (negativity_on_side(&rdm, true)? - negativity_on_side(&rdm, false)?).abs();
                if side > 1e-12 {
                    fails.push(format!("pt side N={n} ({a},{b}) {side:.1e}"));
                }
            }
        }
        // GGM policy monotonicity.
        let small = ggm(&gs, &basis, SplitPolicy::Bounded { max_size: 1 })?.value;
        let mid = ggm(&gs, &basis, SplitPolicy::Bounded { max_size: 2 })?.value;
        let full = ggm(&gs, &basis, SplitPolicy::Exhaustive)?.value;
        if !(small <= mid + 1e-14 && mid <= full + 1e-14) {
            fails.push(format!("policy monotonicity N={n}"));
        }
        let all = SplitPolicy::Exhaustive.splits(n, Boundary::Periodic);
        if (ggm_over_splits(&gs, &basis, &all, SplitPolicy::Exhaustive)?.value - full).abs() > 0.0 {
            fails.push("ggm_over_splits".into());
        }
    }

    // RVB fidelity range, rescaling invariance and direct maximization.
    for (n, n_el) in [(4, 2), (6, 2), (6, 4), (8, 4)] {
        let p = ModelParams::periodic(n, n_el, 2.0)?;
        let (basis, gs) = global_ground::<f64>(&p, &cfg())?;
        let coverings = enumerate_coverings(n, n_el)?;
        let res = rvb_fidelity(&gs, &coverings, &basis)?;
        if !(0.0..=1.0 + 1e-12).contains(&res.fidelity) {
            fails.push(format!("fidelity range N={n}"));
        }
        let vecs: Vec<SparseVector<f64>> = coverings.iter().map(|c| covering_vector(c, &basis)).collect::<Result<_>>()?;
        let scaled: Vec<SparseVector<f64>> = vecs.iter().map(|v| v.scaled(rng.random_range(0.1..10.0))).collect();
        let rescaled = fidelity_with_span(&gs.amplitudes, &scaled)?.fidelity;
        if (rescaled - res.fidelity).abs() > 1e-10 {
            fails.push(format!("rescaling N={n}"));
        }
        let direct = direct_fidelity(&gs.amplitudes, &vecs, basis.dim());
        if (direct - res.fidelity).abs() > FIDELITY_ORACLE_TOL {
            fails.push(format!("direct maximization N={n}: {direct} vs {}", res.fidelity));
        }
    }

    // Fit round trips.
    for _ in 0..50 {
        let (a, b): (f64, f64) = (rng.random_range(0.5..200.0), rng.random_range(0.5..50.0));
        let (c, xi): (f64, f64) = (rng.random_range(1e-3..1.0), rng.random_range(0.3..5.0));
        let meta = || tjent::analysis::CurveMeta {
            n_sites: 30,
            n_electrons: 2,
            j_over_t: 1.0,
            convention: tjent::analysis::DistanceConvention::PeriodicMinimum,
        };
        let inv = EntanglementCurve::from_points((1..=15).map(|r| (r, 1.0 / (a * r as f64 + b))).collect(), meta())?;
        let exp = EntanglementCurve::from_points((1..=15).map(|r| (r, c * (-(r as f64) / xi).exp())).collect(), meta())?;
        let fi = fit_inverse_linear(&inv, inv.full_range())?.params;
        let fe = fit_exponential(&exp, exp.full_range())?.params;
        let rel = |x: f64, y: f64| ((x - y) / y).abs();
        if rel(fi.0, a).max(rel(fi.1, b)).max(rel(fe.0, c)).max(rel(fe.1, xi)) > FIT_ROUNDTRIP_TOL {
            fails.push(format!("fit round trip a={a} b={b} c={c} xi={xi}"));
            break;
        }
    }
    outcome(fails.is_empty(), if fails.is_empty() { "RDM, partial transpose, GGM policy, RVB fidelity and fit checks hold".into() } else { fails.join("; ") })
}

/// Best overlap of `ψ` with the covering span, taken as the norm of its
/// projection onto a Gram-Schmidt basis of the dense covering vectors.
fn direct_fidelity(psi: &[f64], vecs: &[SparseVector<f64>], dim: usize) -> f64 {
    let dense: Vec<Vec<f64>> = vecs.iter().map(|v| v.to_dense(dim)).collect();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in dense {
        let mut u = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let d: f64 = q.iter().zip(&u).map(|(a, b)| a * b).sum();
                u.iter_mut().zip(q).for_each(|(x, y)| *x -= d * y);
            }
        }
        let nrm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm > 1e-10 * scale {
            basis.push(u.iter().map(|x| x / nrm).collect());
        }
    }
    basis.iter().map(|q| q.iter().zip(psi).map(|(a, b)| a * b).sum::<f64>().powi(2)).sum::<f64>().sqrt()
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Result<Outcome>); 8] = [
        ("oracle equivalence", c1_oracle),
        ("two-site exact values", c2_exact),
        ("polynomial decay regime", c3_polynomial),
        ("exponential decay regime", c4_exponential),
        ("negativity freezing", c5_freezing),
        ("RVB fidelity rise", c6_rvb),
        ("GGM peak and freezing", c7_ggm),
        ("property suites", c8_properties),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (pass, detail) = match run() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} [{name}]: {} ({:.1}s) {detail}",
            k + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
