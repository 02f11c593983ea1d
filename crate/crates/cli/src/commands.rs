use std::collections::BTreeMap;
use std::f64::consts::PI;

use kerrcat::campaign::{straight_line_seed, Campaign, CampaignOptions, RobustAngleModel, ROBUST_LINE_FLOOR};
use kerrcat::fidelity::{GateEvaluator, InfidelityGrid};
use kerrcat::noise::{
    filter_weight, frequency_grid, gap_trace, monte_carlo_infidelity, psd_table, spectral_average_infidelity,
    static_quadratic_coefficient,
};
use kerrcat::optimizer::OptimizationRecord;
use kerrcat::propagator::{adiabaticity_diagnostic, PropagationOptions};
use kerrcat::pulse::{
    scheme_kerr_gate, scheme_x, scheme_y_drag, scheme_z_robustline, scheme_z_straight, x_amplitude_seed,
    y_amplitude_seed, PulseSchedule,
};
use kerrcat::spectral::{energy_gap, gap_derivative, robust_line, robust_points, GapLandscape, RobustLineCache};
use kerrcat::table::{fmt_f64, Table};
use kerrcat::twoqubit::{
    amplitude_for_area, coupling_area, coupling_schedule, echo_xx, first_order_generator, iswap, makhlin_invariants,
    phase_distance, xx_rotation, EchoQubit, TwoModeSystem, TwoQubitModel,
};
use kerrcat::{Error, FockSpace, KerrCatParams};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{RunConfig, SchemeKind, SweepConfig};
use crate::error::CliError;
use crate::output::{cell, Output};

const ROBUST_CACHE_POINTS: usize = 200;
const ADIABATICITY_NODES: usize = 41;

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn space(dim: usize) -> Result<FockSpace, CliError> {
    FockSpace::new(dim).map_err(|e| CliError::Config(e.to_string()))
}

fn campaign_options(cfg: &RunConfig, steps: usize) -> CampaignOptions {
    CampaignOptions {
        delta_max: cfg.delta_max,
        nodes: cfg.nodes,
        samples: cfg.propagation.samples,
        propagation: PropagationOptions::fixed(steps),
        coarse_n: cfg.optimizer.coarse_n,
        refine_rounds: cfg.optimizer.refine_rounds,
    }
}

fn robust_cache(alpha2_hi: f64, space: FockSpace) -> Result<RobustLineCache, Error> {
    RobustLineCache::new(ROBUST_LINE_FLOOR, alpha2_hi.max(ROBUST_LINE_FLOOR + 0.1), ROBUST_CACHE_POINTS, space)
}

fn params_cell(params: &BTreeMap<String, f64>) -> String {
    params.iter().map(|(k, v)| format!("{k}={}", fmt_f64(*v))).collect::<Vec<_>>().join(";")
}

fn grid_json(grid: &InfidelityGrid) -> Value {
    json!({
        "duration": grid.duration,
        "deltas": grid.deltas,
        "infidelities": grid.infidelities,
        "average": grid.average,
        "max_unitarity_defect": grid.max_unitarity_defect,
    })
}

pub fn spectrum(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let sp = cfg.spectrum;
    let space = space(cfg.fock_dim)?;
    let alpha2 = linspace(sp.alpha2_min, sp.alpha2_max, sp.alpha2_points);
    let land = GapLandscape::compute(linspace(sp.delta_min, sp.delta_max, sp.delta_points), alpha2.clone(), space)?;
    out.csv("spectrum.csv", &land.table())?;
    let line = robust_line_table(&alpha2, space)?;
    out.csv("spectrum_robust_line.csv", &line)?;
    Ok(())
}

/// One row per cat size; cat sizes without a robust point become rows
/// with status `missing`.
fn robust_line_table(alpha2: &[f64], space: FockSpace) -> Result<Table, CliError> {
    let rows: Vec<Result<Vec<String>, Error>> = alpha2
        .par_iter()
        .map(|&a2| {
            let params = KerrCatParams::from_alpha2(a2)?;
            match robust_line(a2, space) {
                Ok(d) => {
                    let gap = energy_gap(&params, d, space)?;
                    let deriv = gap_derivative(&params, d, space)?;
                    let n_points = robust_points(a2, space)?.len() as f64;
                    let mut row: Vec<String> = [a2, d, gap, deriv, n_points].iter().map(|v| fmt_f64(*v)).collect();
                    row.push("ok".into());
                    Ok(row)
                }
                Err(Error::NoRobustPoint { .. }) => {
                    let mut row: Vec<String> = [a2, f64::NAN, f64::NAN, f64::NAN, 0.0].iter().map(|v| fmt_f64(*v)).collect();
                    row.push("missing".into());
                    Ok(row)
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut t = Table::new(&["alpha2", "delta_rob", "gap", "gap_deriv", "stationary_points", "status"]);
    for r in rows {
        t.push(r?);
    }
    Ok(t)
}

pub fn robust_line_cmd(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let rl = cfg.robust_line;
    let t = robust_line_table(&linspace(rl.alpha2_min, rl.alpha2_max, rl.points), space(cfg.fock_dim)?)?;
    out.csv("robust_line.csv", &t)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Ok,
    Infeasible,
    Failed,
}

impl Status {
    fn name(&self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Infeasible => "infeasible",
            Status::Failed => "failed",
        }
    }
}

/// One `(α², T)` point of a gate sweep.
struct GateReport {
    alpha2: f64,
    duration: f64,
    status: Status,
    message: String,
    record: Option<OptimizationRecord>,
    schedule: Option<PulseSchedule>,
    grid: Option<InfidelityGrid>,
    adiabaticity: f64,
}

impl GateReport {
    fn from_error(alpha2: f64, duration: f64, e: Error) -> Self {
        let status = match e {
            Error::Infeasible(_) | Error::NoRobustPoint { .. } => Status::Infeasible,
            _ => Status::Failed,
        };
        Self {
            alpha2,
            duration,
            status,
            message: e.to_string(),
            record: None,
            schedule: None,
            grid: None,
            adiabaticity: f64::NAN,
        }
    }
}

fn run_point(
    sweep: &SweepConfig,
    cfg: &RunConfig,
    space: FockSpace,
    cache: Option<&RobustLineCache>,
    alpha2: f64,
    duration: f64,
) -> Result<GateReport, Error> {
    let campaign = Campaign::new(alpha2, space, campaign_options(cfg, cfg.propagation.steps))?;
    let (record, schedule, grid) = match sweep.scheme {
        SchemeKind::X => {
            let o = campaign.optimize_x(duration)?;
            (Some(o.record), o.schedule, o.grid)
        }
        SchemeKind::Y => {
            let o = campaign.optimize_y(duration, sweep.drag, sweep.amplitude_bound)?;
            (Some(o.record), o.schedule, o.grid)
        }
        SchemeKind::ZRobust => {
            if alpha2 < 1.0 {
                return Err(Error::Infeasible(format!("robust-line Z gate needs alpha^2 >= 1, got {alpha2}")));
            }
            let cache = cache.ok_or_else(|| Error::Infeasible("no robust line tabulated".into()))?;
            let o = campaign.optimize_z_robust(duration, cache)?;
            (Some(o.record), o.schedule, o.grid)
        }
        SchemeKind::ZStraight => {
            let o = campaign.optimize_z_straight(duration)?;
            (Some(o.record), o.schedule, o.grid)
        }
        SchemeKind::Kerr => {
            let (s, g) = campaign.kerr_gate()?;
            (None, s, g)
        }
        SchemeKind::Idle => {
            let s = PulseSchedule::idle(duration);
            let g = campaign.evaluator().average_infidelity(&s, cfg.delta_max, cfg.nodes)?;
            (None, s, g)
        }
    };
    let adiabaticity = adiabaticity_diagnostic(&schedule, campaign.params(), space, ADIABATICITY_NODES)?;
    Ok(GateReport {
        alpha2,
        duration: schedule.duration,
        status: Status::Ok,
        message: String::new(),
        record,
        schedule: Some(schedule),
        grid: Some(grid),
        adiabaticity,
    })
}

fn point_name(label: &str, alpha2: f64, duration: f64) -> String {
    format!("{label}_a{}_T{}", fmt_f64(alpha2), fmt_f64(duration))
}

pub fn gate_sweep(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    if cfg.sweep.is_empty() {
        return Err(CliError::Config("gate-sweep needs at least one [[sweep]] entry".into()));
    }
    let space = space(cfg.fock_dim)?;
    let mut summary = Table::new(&[
        "label",
        "scheme",
        "alpha2",
        "duration",
        "status",
        "avg_infidelity",
        "max_infidelity",
        "max_unitarity_defect",
        "adiabaticity",
        "evaluations",
        "params",
        "message",
    ]);
    let mut traces = Table::new(&["label", "scheme", "alpha2", "duration", "delta", "infidelity"]);
    let mut records = Vec::new();
    let mut failed = 0usize;
    for sweep in &cfg.sweep {
        let cache = if sweep.scheme == SchemeKind::ZRobust {
            let hi = sweep.alpha2.iter().cloned().fold(0.0, f64::max);
            if hi >= 1.0 {
                Some(robust_cache(hi, space)?)
            } else {
                None
            }
        } else {
            None
        };
        let points: Vec<(f64, f64)> =
            sweep.alpha2.iter().flat_map(|&a| sweep.durations.iter().map(move |&t| (a, t))).collect();
        let reports: Vec<GateReport> = points
            .par_iter()
            .map(|&(a2, t)| {
                run_point(sweep, cfg, space, cache.as_ref(), a2, t).unwrap_or_else(|e| GateReport::from_error(a2, t, e))
            })
            .collect();
        for r in &reports {
            if r.status == Status::Failed {
                failed += 1;
                eprintln!("{} alpha2={} T={}: {}", sweep.label, r.alpha2, r.duration, r.message);
            }
            let (avg, max, defect) = match &r.grid {
                Some(g) => (g.average, g.max_infidelity(), g.max_unitarity_defect),
                None => (f64::NAN, f64::NAN, f64::NAN),
            };
            let params = r.schedule.as_ref().map(|s| params_cell(&s.params)).unwrap_or_default();
            let evaluations = r.record.as_ref().map(|rec| rec.evaluations).unwrap_or(0);
            let mut row = vec![cell(&sweep.label), sweep.scheme.name().into()];
            row.extend([r.alpha2, r.duration].iter().map(|v| fmt_f64(*v)));
            row.push(r.status.name().into());
            row.extend([avg, max, defect, r.adiabaticity].iter().map(|v| fmt_f64(*v)));
            row.push(evaluations.to_string());
            row.push(params);
            row.push(cell(&r.message));
            summary.push(row);
            if let Some(g) = &r.grid {
                for (d, v) in g.deltas.iter().zip(&g.infidelities) {
                    let mut row = vec![cell(&sweep.label), sweep.scheme.name().into()];
                    row.extend([r.alpha2, r.duration, *d, *v].iter().map(|x| fmt_f64(*x)));
                    traces.push(row);
                }
            }
            if sweep.write_schedules {
                if let Some(s) = &r.schedule {
                    out.csv(&format!("schedules/{}.csv", point_name(&sweep.label, r.alpha2, r.duration)), &s.table())?;
                }
            }
            records.push(json!({
                "label": sweep.label,
                "scheme": sweep.scheme.name(),
                "alpha2": r.alpha2,
                "duration": r.duration,
                "status": r.status.name(),
                "message": r.message,
                "schedule_params": r.schedule.as_ref().map(|s| s.params.clone()),
                "adiabaticity": if r.adiabaticity.is_finite() { json!(r.adiabaticity) } else { Value::Null },
                "optimization": r.record,
                "grid": r.grid.as_ref().map(grid_json),
            }));
        }
    }
    out.csv("gate_sweep.csv", &summary)?;
    out.csv("gate_traces.csv", &traces)?;
    out.json("gate_sweep.json", Value::Array(records))?;
    if failed > 0 {
        return Err(CliError::Check(format!("{failed} sweep point(s) failed numerically; see gate_sweep.csv")));
    }
    Ok(())
}

/// Schedule for the noise analysis: the optimized Z gate of the configured kind.
fn noise_schedule(cfg: &RunConfig, campaign: &Campaign, space: FockSpace) -> Result<PulseSchedule, Error> {
    let nc = &cfg.noise;
    Ok(match nc.scheme {
        SchemeKind::ZRobust => {
            let cache = robust_cache(nc.alpha2, space)?;
            campaign.optimize_z_robust(nc.duration, &cache)?.schedule
        }
        SchemeKind::ZStraight => campaign.optimize_z_straight(nc.duration)?.schedule,
        _ => campaign.kerr_gate()?.0,
    })
}

pub fn noise(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let model = cfg.noise_model()?;
    let space = space(cfg.fock_dim)?;
    let nc = &cfg.noise;
    let campaign = Campaign::new(nc.alpha2, space, campaign_options(cfg, cfg.propagation.steps))?;
    let schedule = noise_schedule(cfg, &campaign, space)?;
    let trace = gap_trace(&schedule, campaign.params(), space)?;
    let omegas = frequency_grid(schedule.duration);
    let filter = filter_weight(&trace, &omegas);
    let spectral = spectral_average_infidelity(&filter, &model)?;
    let evaluator: &GateEvaluator = campaign.evaluator();
    let baseline = evaluator.infidelity(&schedule, &0.0.into())?;
    let mc = monte_carlo_infidelity(evaluator, &schedule, &model, nc.realizations.max(2))?;
    let quadratic = static_quadratic_coefficient(evaluator, &schedule, 1e-3)?;

    out.csv("noise_filter.csv", &filter.table())?;
    out.csv("noise_psd.csv", &psd_table(&model, &omegas))?;
    let mut t = Table::new(&["realization", "infidelity"]);
    for (k, v) in mc.traces.iter().enumerate() {
        t.push(vec![k.to_string(), fmt_f64(*v)]);
    }
    out.csv("noise_traces.csv", &t)?;
    out.json(
        "noise_summary.json",
        json!({
            "scheme": nc.scheme.name(),
            "alpha2": nc.alpha2,
            "duration": schedule.duration,
            "schedule_params": schedule.params,
            "model": model,
            "filter_at_zero": filter.weights[0],
            "filter_max": filter.max_weight(),
            "static_quadratic_coefficient": quadratic,
            "spectral_infidelity": spectral.infidelity,
            "spectral_tail_fraction": spectral.tail_fraction,
            "spectral_coverage_warning": spectral.coverage_warning,
            "noiseless_infidelity": baseline,
            "monte_carlo_mean": mc.mean,
            "monte_carlo_std_error": mc.std_error,
            "monte_carlo_excess": mc.mean - baseline,
            "realizations": mc.traces.len(),
        }),
    )?;
    if spectral.coverage_warning {
        eprintln!("warning: {:.1}% of the spectral integral lies outside the frequency grid", 100.0 * spectral.tail_fraction);
    }
    Ok(())
}

fn matrix_json(m: &kerrcat::linalg::CMatrix) -> Value {
    let rows: Vec<Vec<[f64; 2]>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect();
    json!(rows)
}

pub fn twoqubit(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let tc = cfg.twoqubit;
    let model = TwoQubitModel::new(tc.alpha2_a, tc.alpha2_b, tc.phase)?;
    let (hxa, hya, hxb, hyb) = model.elements;
    let (s, c) = tc.phase.sin_cos();
    let mut coeffs = Table::new(&["term", "coefficient"]);
    for (name, v) in [
        ("xx", 0.5 * c * hxa * hxb),
        ("yy", 0.5 * c * hya * hyb),
        ("xy", -0.5 * s * hxa * hyb),
        ("yx", 0.5 * s * hya * hxb),
    ] {
        coeffs.push(vec![name.into(), fmt_f64(v)]);
    }
    out.csv("twoqubit_coefficients.csv", &coeffs)?;

    let samples = cfg.propagation.samples;
    let mut echoes = Vec::new();
    for (name, q) in [("A", EchoQubit::A), ("B", EchoQubit::B)] {
        let e = echo_xx(tc.theta, &model, q, tc.duration, samples)?;
        let (g1, g2) = makhlin_invariants(&e.unitary);
        echoes.push(json!({
            "echo_qubit": name,
            "distance": e.distance,
            "half_area": e.half_area,
            "half_amplitude": e.half_schedule.params.get("g0"),
            "makhlin_g1": [g1.re, g1.im],
            "makhlin_g2": g2,
            "unitary": matrix_json(&e.unitary),
        }));
    }
    let (tg1, tg2) = makhlin_invariants(&xx_rotation(tc.theta));
    let bare = TwoQubitModel::new(0.0, 0.0, 0.0)?;
    let iswap_distance = phase_distance(&bare.interaction_unitary(-PI / 2.0)?, &iswap());

    let full = if tc.mode_dim > 0 {
        let system = TwoModeSystem::new(&model, space(tc.mode_dim)?, 0.0, 0.0)?;
        let amplitude = amplitude_for_area(tc.duration, tc.check_area);
        let schedule = coupling_schedule(tc.duration, amplitude, samples, xx_rotation(0.0))?;
        let area = coupling_area(&schedule);
        let result = system.propagate(&schedule, tc.check_steps)?;
        let generator = first_order_generator(&result.projected, area);
        let expected = model.generator();
        let rel = (&generator - &expected).norm() / expected.norm();
        json!({
            "mode_dim": tc.mode_dim,
            "area": area,
            "projected_defect": result.projected_defect,
            "generator_relative_error": rel,
            "generator": matrix_json(&generator),
        })
    } else {
        Value::Null
    };

    out.json(
        "twoqubit.json",
        json!({
            "alpha2_a": tc.alpha2_a,
            "alpha2_b": tc.alpha2_b,
            "phase": tc.phase,
            "theta": tc.theta,
            "matrix_elements": { "hx_a": hxa, "hy_a": hya, "hx_b": hxb, "hy_b": hyb },
            "echo": echoes,
            "target_makhlin_g1": [tg1.re, tg1.im],
            "target_makhlin_g2": tg2,
            "bare_iswap_distance": iswap_distance,
            "full_model": full,
        }),
    )?;
    Ok(())
}

/// Unoptimized seed schedule of a sweep point, for convergence checks.
fn seed_schedule(
    scheme: SchemeKind,
    sweep: &SweepConfig,
    params: &KerrCatParams,
    space: FockSpace,
    duration: f64,
    samples: usize,
) -> Result<PulseSchedule, Error> {
    let a2 = params.alpha2();
    match scheme {
        SchemeKind::X => scheme_x(duration, x_amplitude_seed(duration, a2), samples),
        SchemeKind::Y => {
            scheme_y_drag(duration, y_amplitude_seed(duration, a2, 0.0, params.kerr), 0.0, params, sweep.drag, space, samples)
        }
        SchemeKind::ZRobust => {
            if a2 < 1.0 {
                return Err(Error::Infeasible(format!("robust-line Z gate needs alpha^2 >= 1, got {a2}")));
            }
            let cache = robust_cache(a2, space)?;
            let tau = 0.25 * duration;
            let ramp = RobustAngleModel::new(params, &cache)?.solve_dip(duration, tau, PI / 2.0)?;
            scheme_z_robustline(duration, tau, ramp, params, &cache, samples)
        }
        SchemeKind::ZStraight => {
            let seed = straight_line_seed(params, space, duration)?;
            scheme_z_straight(duration, seed.delta_max, seed.eps2_ramp0, params, samples)
        }
        SchemeKind::Kerr => Ok(scheme_kerr_gate(params, samples)),
        SchemeKind::Idle => Ok(PulseSchedule::idle(duration)),
    }
}

struct Drift {
    base: f64,
    dim_drift: f64,
    step_drift: f64,
    max_defect: f64,
}

fn measure_drift(
    cfg: &RunConfig,
    sweep: &SweepConfig,
    alpha2: f64,
    duration: f64,
) -> Result<Drift, Error> {
    let params = KerrCatParams::from_alpha2(alpha2)?;
    let dim = cfg.fock_dim;
    let steps = cfg.propagation.steps;
    let base_space = FockSpace::new(dim)?;
    let schedule = seed_schedule(sweep.scheme, sweep, &params, base_space, duration, cfg.propagation.samples)?;
    let variants = [(dim, steps), (2 * dim, steps), (dim, 2 * steps)];
    let grids: Vec<InfidelityGrid> = variants
        .par_iter()
        .map(|&(d, n)| {
            GateEvaluator::new(params, FockSpace::new(d)?, PropagationOptions::fixed(n))?
                .average_infidelity(&schedule, cfg.delta_max, cfg.nodes)
        })
        .collect::<Result<_, Error>>()?;
    Ok(Drift {
        base: grids[0].average,
        dim_drift: (grids[1].average - grids[0].average).abs(),
        step_drift: (grids[2].average - grids[0].average).abs(),
        max_defect: grids.iter().map(|g| g.max_unitarity_defect).fold(0.0, f64::max),
    })
}

pub fn convergence(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    if cfg.sweep.is_empty() {
        return Err(CliError::Config("convergence needs at least one [[sweep]] entry".into()));
    }
    let threshold = cfg.convergence.threshold;
    let mut t = Table::new(&[
        "label",
        "scheme",
        "alpha2",
        "duration",
        "fock_dim",
        "steps",
        "avg_infidelity",
        "dim_drift",
        "step_drift",
        "max_unitarity_defect",
        "status",
        "message",
    ]);
    let mut worst = 0.0f64;
    let mut flagged = 0usize;
    for sweep in &cfg.sweep {
        let points: Vec<(f64, f64)> = sweep
            .alpha2
            .iter()
            .flat_map(|&a| sweep.durations.iter().map(move |&d| (a, d)))
            .take(cfg.convergence.max_points)
            .collect();
        for (a2, dur) in points {
            let mut row = vec![cell(&sweep.label), sweep.scheme.name().into(), fmt_f64(a2), fmt_f64(dur)];
            row.push(cfg.fock_dim.to_string());
            row.push(cfg.propagation.steps.to_string());
            match measure_drift(cfg, sweep, a2, dur) {
                Ok(d) => {
                    let drift = d.dim_drift.max(d.step_drift);
                    worst = worst.max(drift);
                    let pass = drift < threshold;
                    if !pass {
                        flagged += 1;
                    }
                    row.extend([d.base, d.dim_drift, d.step_drift, d.max_defect].iter().map(|v| fmt_f64(*v)));
                    row.push(if pass { "pass" } else { "fail" }.into());
                    row.push(String::new());
                }
                Err(e @ Error::Infeasible(_)) => {
                    row.extend([f64::NAN; 4].iter().map(|v| fmt_f64(*v)));
                    row.push("skipped".into());
                    row.push(cell(&e.to_string()));
                }
                Err(e) => {
                    flagged += 1;
                    row.extend([f64::NAN; 4].iter().map(|v| fmt_f64(*v)));
                    row.push("fail".into());
                    row.push(cell(&e.to_string()));
                }
            }
            t.push(row);
        }
    }
    out.csv("convergence.csv", &t)?;
    out.json("convergence.json", json!({ "threshold": threshold, "max_drift": worst, "flagged": flagged }))?;
    if flagged > 0 {
        return Err(CliError::Check(format!("{flagged} point(s) drift above {threshold:e}; see convergence.csv")));
    }
    Ok(())
}
