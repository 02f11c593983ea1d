use kerrcat::fidelity::GateEvaluator;
use kerrcat::interp::{Pchip, UniformCubic};
use kerrcat::linalg::{commutator, frobenius, hermiticity_defect};
use kerrcat::propagator::{DetuningError, PropagationOptions, Propagator};
use kerrcat::pulse::{rotation_target, scheme_x, Envelope, EnvelopeKind, PulseSchedule, ScheduleChannel, SchemeTag};
use kerrcat::spectral::SectorSpectrum;
use kerrcat::{ChannelValues, FockSpace, HamiltonianAssembly, KerrCatParams};
use proptest::prelude::*;

fn space(dim: usize) -> FockSpace {
    FockSpace::new(dim).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn hamiltonian_is_hermitian_for_any_controls(
        a2 in 0.0f64..3.0,
        delta in -1.0f64..1.0,
        e2 in -1.0f64..1.0,
        ex in -0.5f64..0.5,
        ey in -0.5f64..0.5,
        dim in 8usize..30,
    ) {
        let params = KerrCatParams::from_alpha2(a2).unwrap();
        let h = HamiltonianAssembly::new(params, space(dim))
            .assemble(&ChannelValues { detuning: delta, eps2_mod: e2, eps_x: ex, eps_y: ey })
            .unwrap();
        prop_assert!(hermiticity_defect(&h) < 1e-13);
    }

    #[test]
    fn parity_is_conserved_without_single_photon_drives(
        a2 in 0.0f64..3.0,
        delta in -1.0f64..1.0,
        e2 in -1.0f64..1.0,
        dim in 8usize..30,
    ) {
        let s = space(dim);
        let params = KerrCatParams::from_alpha2(a2).unwrap();
        let assembly = HamiltonianAssembly::new(params, s);
        let h = assembly.assemble(&ChannelValues { detuning: delta, eps2_mod: e2, ..Default::default() }).unwrap();
        prop_assert!(frobenius(&commutator(&h, &s.parity())) < 1e-12);
        prop_assert!(assembly.parity_defect() < 1e-14);
    }

    #[test]
    fn single_photon_drive_breaks_parity(a2 in 0.5f64..3.0, ex in 0.01f64..0.5) {
        let s = space(20);
        let params = KerrCatParams::from_alpha2(a2).unwrap();
        let h = HamiltonianAssembly::new(params, s)
            .assemble(&ChannelValues { eps_x: ex, ..Default::default() })
            .unwrap();
        prop_assert!(frobenius(&commutator(&h, &s.parity())) > 1e-3);
    }

    #[test]
    fn gap_is_finite_and_non_negative_near_zero_detuning(a2 in 0.5f64..3.0, d in 0.0f64..1.0) {
        let params = KerrCatParams::from_alpha2(a2).unwrap();
        let s = SectorSpectrum::at(&params, d, space(40)).unwrap();
        // E₀₁ is defined as odd minus even; it stays >= 0 below the first crossing.
        if d < 0.3 {
            prop_assert!(s.gap() >= -1e-9);
        }
        prop_assert!(s.gap().is_finite() && s.gap_derivative_raw().is_finite());
    }

    #[test]
    fn pchip_passes_through_nodes_and_keeps_monotone_data_monotone(
        steps in prop::collection::vec(0.01f64..1.0, 3..20),
        rises in prop::collection::vec(0.0f64..2.0, 20),
        probe in 0.0f64..1.0,
    ) {
        let mut x = vec![0.0];
        for s in &steps {
            x.push(x.last().unwrap() + s);
        }
        let mut y = vec![0.0];
        for r in rises.iter().take(steps.len()) {
            y.push(y.last().unwrap() + r);
        }
        let p = Pchip::new(x.clone(), y.clone()).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            prop_assert!((p.eval(*xi) - yi).abs() < 1e-12);
        }
        let (lo, hi) = p.domain();
        let t0 = lo + probe * (hi - lo);
        let t1 = (t0 + 0.01 * (hi - lo)).min(hi);
        prop_assert!(p.eval(t1) >= p.eval(t0) - 1e-12);
        prop_assert!(p.eval(t0) >= y[0] - 1e-12 && p.eval(t0) <= y.last().unwrap() + 1e-12);
    }

    #[test]
    fn uniform_cubic_reproduces_interior_quadratics(
        c in prop::collection::vec(-2.0f64..2.0, 3),
        duration in 1.0f64..50.0,
        u in 0.15f64..0.85,
    ) {
        let n = 21;
        let q = |t: f64| c[0] + c[1] * t + c[2] * t * t;
        let values = (0..n).map(|k| q(duration * k as f64 / (n - 1) as f64)).collect();
        let interp = UniformCubic::new(duration, values);
        let t = u * duration;
        prop_assert!((interp.eval(t) - q(t)).abs() < 1e-9 * (1.0 + q(t).abs() + duration * duration));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn propagation_is_unitary_and_infidelity_bounded(
        a2 in 0.0f64..2.5,
        amp in 0.0f64..0.3,
        detuning in prop::collection::vec(-0.3f64..0.3, 5),
        shift in -1e-2f64..1e-2,
        duration in 5.0f64..30.0,
    ) {
        let params = KerrCatParams::from_alpha2(a2).unwrap();
        let s = space(24);
        let mut schedule = scheme_x(duration, amp, 200).unwrap();
        schedule.channels.insert(
            ScheduleChannel::Delta,
            Envelope::from_samples(duration, EnvelopeKind::Composite, detuning),
        );
        let prop = Propagator::new(params, s, PropagationOptions::fixed(150));
        let r = prop.propagate(&schedule, &DetuningError::Static(shift)).unwrap();
        prop_assert!(r.unitarity_defect < 1e-8, "{}", r.unitarity_defect);
        let eval = GateEvaluator::new(params, s, PropagationOptions::fixed(150)).unwrap();
        let i = eval.infidelity(&schedule, &DetuningError::Static(shift)).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&i), "{i}");
    }

    #[test]
    fn zero_schedule_only_adds_phases(a2 in 0.5f64..2.5, duration in 1.0f64..20.0) {
        let params = KerrCatParams::from_alpha2(a2).unwrap();
        let eval = GateEvaluator::new(params, space(30), PropagationOptions::fixed(100)).unwrap();
        let idle = PulseSchedule::new(duration, SchemeTag::Idle, rotation_target('Z', 0.0));
        let i = eval.infidelity(&idle, &DetuningError::Static(0.0)).unwrap();
        prop_assert!(i.abs() < 1e-10, "{i}");
    }
}
