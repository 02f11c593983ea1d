use std::f64::consts::PI;

use approx::assert_relative_eq;
use kerrcat::campaign::{Campaign, CampaignOptions, RobustAngleModel, ROBUST_LINE_FLOOR};
use kerrcat::fidelity::{detuning_nodes, infidelity, simpson_average, GateEvaluator};
use kerrcat::linalg::{expm_hermitian, pauli, CMatrix, C64};
use kerrcat::optimizer::{grid_search, OptimizationRecord, ParamAxis, ParamSpace, INFEASIBLE_SCORE};
use kerrcat::propagator::PropagationOptions;
use kerrcat::pulse::{rotation_target, scheme_x, x_amplitude_seed};
use kerrcat::spectral::RobustLineCache;
use kerrcat::{Error, FockSpace, KerrCatParams};
use proptest::prelude::*;

fn space(dim: usize) -> FockSpace {
    FockSpace::new(dim).unwrap()
}

fn quick_options() -> CampaignOptions {
    CampaignOptions {
        samples: 1000,
        propagation: PropagationOptions::fixed(500),
        coarse_n: 11,
        refine_rounds: 1,
        ..CampaignOptions::default()
    }
}

#[test]
fn simpson_is_exact_on_constants_and_quadratics() {
    assert_relative_eq!(simpson_average(&[0.7; 11]).unwrap(), 0.7, epsilon = 1e-15);
    let dmax = 5e-3;
    let nodes = detuning_nodes(dmax, 11);
    let values: Vec<f64> = nodes.iter().map(|d| 3.0 * d * d + 2.0 * d + 1.0).collect();
    // (1/2Δ)∫(3Δ² + 2Δ + 1) = Δ² + 1
    assert_relative_eq!(simpson_average(&values).unwrap(), dmax * dmax + 1.0, epsilon = 1e-14);
    assert!(simpson_average(&[1.0, 2.0]).is_err());
    assert!(simpson_average(&[1.0, 2.0, 3.0, 4.0]).is_err());
}

#[test]
fn detuning_nodes_are_symmetric() {
    let nodes = detuning_nodes(5e-3, 11);
    assert_eq!(nodes.len(), 11);
    assert_eq!(nodes[0], -5e-3);
    assert_eq!(nodes[5], 0.0);
    assert_relative_eq!(nodes[10], 5e-3, epsilon = 1e-18);
}

#[test]
fn infidelity_reference_cases() {
    let x = rotation_target('X', PI / 2.0);
    assert!(infidelity(&x, &x).abs() < 1e-15);
    let phased = &x * C64::from_polar(1.0, 0.83);
    assert!(infidelity(&phased, &x).abs() < 1e-15);
    assert_eq!(infidelity(&CMatrix::zeros(2, 2), &x), 1.0);
    // Half the population leaked uniformly: |Tr|²/4 = 1/2.
    let half = &x * C64::from(0.5f64.sqrt());
    assert_relative_eq!(infidelity(&half, &x), 0.5, epsilon = 1e-15);
    // Orthogonal Paulis.
    assert_relative_eq!(infidelity(&pauli::z(), &pauli::x()), 1.0, epsilon = 1e-15);
}

#[test]
fn rotation_targets_are_the_usual_ones() {
    let y = rotation_target('Y', PI);
    assert!(infidelity(&y, &pauli::y()) < 1e-15);
    let z = rotation_target('Z', -PI / 2.0);
    // exp(iπZ/4) up to phase: diag(1, -i)·e^{iπ/4}
    let expected = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.0, -1.0)]));
    assert!(infidelity(&z, &expected) < 1e-15);
}

fn random_hermitian(v: &[f64]) -> CMatrix {
    let n = 4;
    let mut h = CMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        h[(i, i)] = C64::from(v[k]);
        k += 1;
        for j in i + 1..n {
            h[(i, j)] = C64::new(v[k], v[k + 1]);
            h[(j, i)] = h[(i, j)].conj();
            k += 2;
        }
    }
    h
}

proptest! {
    #[test]
    fn infidelity_of_projected_unitary_is_bounded(
        v in prop::collection::vec(-2.0f64..2.0, 16),
        t in 0.0f64..3.0,
        theta in 0.0f64..6.3,
    ) {
        let u = expm_hermitian(&random_hermitian(&v), t).unwrap();
        let block = u.view((0, 0), (2, 2)).into_owned();
        for axis in ['X', 'Y', 'Z'] {
            let i = infidelity(&block, &rotation_target(axis, theta));
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&i), "{i}");
        }
    }

    #[test]
    fn simpson_average_stays_within_sample_range(v in prop::collection::vec(0.0f64..1.0, 5..31)) {
        let n = if v.len() % 2 == 0 { v.len() - 1 } else { v.len() };
        let v = &v[..n];
        // Weights are positive, so the average is a convex combination.
        let avg = simpson_average(v).unwrap();
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(avg >= lo - 1e-12 && avg <= hi + 1e-12);
    }
}

#[test]
fn optimizer_finds_quadratic_minimum_within_resolution() {
    let space = ParamSpace::new(vec![ParamAxis::new("x", -1.0, 1.0), ParamAxis::new("y", 0.0, 2.0)]);
    let rec = grid_search(&space, |p| Ok((p[0] - 0.3).powi(2) + 2.0 * (p[1] - 1.37).powi(2))).unwrap();
    // Final lattice spacing: width / 5² / 20.
    assert!((rec.best_vector[0] - 0.3).abs() <= 2.0 / 25.0 / 20.0);
    assert!((rec.best_vector[1] - 1.37).abs() <= 2.0 / 25.0 / 20.0);
    assert!(rec.feasible);
    assert_eq!(rec.evaluations, 3 * 21 * 21);
    assert_eq!(rec.best_params["x"], rec.best_vector[0]);
}

#[test]
fn optimizer_skips_infeasible_points() {
    let space = ParamSpace::new(vec![ParamAxis::new("x", 0.0, 1.0)]).with_grid(11, 1);
    let rec = grid_search(&space, |p| {
        if p[0] < 0.5 {
            Err(Error::Infeasible("left half".into()))
        } else {
            Ok(p[0])
        }
    })
    .unwrap();
    assert_eq!(rec.best_vector, vec![0.5]);
    assert!(rec.trace.iter().any(|t| !t.feasible && t.value == INFEASIBLE_SCORE));

    let none = grid_search(&space, |_| Err(Error::Infeasible("nowhere".into()))).unwrap();
    assert!(!none.feasible);
}

#[test]
fn optimizer_rejects_bad_spaces() {
    let f = |_: &[f64]| Ok(0.0);
    assert!(grid_search(&ParamSpace::new(vec![]), f).is_err());
    assert!(grid_search(&ParamSpace::new(vec![ParamAxis::new("x", 1.0, 0.0)]), f).is_err());
    assert!(grid_search(&ParamSpace::new(vec![ParamAxis::new("x", 0.0, 1.0)]).with_grid(3, 0), f).is_err());
}

#[test]
fn optimization_record_round_trips_through_json() {
    let space = ParamSpace::new(vec![ParamAxis::new("x", 0.0, 1.0)]).with_grid(5, 1);
    let rec = grid_search(&space, |p| Ok((p[0] - 0.25).abs())).unwrap();
    let back: OptimizationRecord = serde_json::from_str(&rec.to_json()).unwrap();
    assert_eq!(back, rec);
}

#[test]
fn x_optimum_is_near_seed_and_reevaluates_identically() {
    let campaign = Campaign::new(2.0, space(40), quick_options()).unwrap();
    let opt = campaign.optimize_x(30.0).unwrap();
    let scale = opt.record.best_params["amplitude_scale"];
    assert!(scale > 0.8 && scale < 1.2, "optimum on the box edge: {scale}");
    assert!(opt.grid.average < 1e-3, "{}", opt.grid.average);

    // Rebuild from the stored amplitude and re-evaluate from scratch.
    let amp = opt.schedule.params["eps_x0"];
    assert_relative_eq!(amp, scale * x_amplitude_seed(30.0, 2.0), epsilon = 1e-15);
    let rebuilt = scheme_x(30.0, amp, 1000).unwrap();
    let params = KerrCatParams::from_alpha2(2.0).unwrap();
    let fresh = GateEvaluator::new(params, space(40), PropagationOptions::fixed(500)).unwrap();
    let grid = fresh.average_infidelity(&rebuilt, 5e-3, 11).unwrap();
    assert_eq!(grid.average, opt.grid.average);
    assert_eq!(grid.average, opt.record.best_avg_infidelity);
}

#[test]
fn robust_scheme_at_unit_cat_runs_out_of_angle() {
    let params = KerrCatParams::from_alpha2(1.0).unwrap();
    let cache = RobustLineCache::new(ROBUST_LINE_FLOOR, 1.0, 200, space(40)).unwrap();
    let model = RobustAngleModel::new(&params, &cache).unwrap();
    let feasible = |t: f64| (1..=40).any(|i| model.solve_dip(t, (0.05 + 0.01 * i as f64) * t, PI / 2.0).is_ok());
    assert!(feasible(19.0));
    // The smallest reachable angle grows with T; the cutoff sits near 22.
    assert!(!feasible(25.0));
    let campaign = Campaign::new(1.0, space(40), quick_options()).unwrap();
    assert!(matches!(campaign.optimize_z_robust(26.0, &cache), Err(Error::Infeasible(_))));
}
