//! End-to-end acceptance checks. Prints one verdict line per criterion and
//! exits nonzero if any criterion fails.

mod common;

use std::f64::consts::{E, PI, TAU};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use infodyn::hydro::{fisher_identities, variance_partition_residual};
use infodyn::states::{coherent_state, free_gaussian_at, gaussian_packet, ho_eigenstate};
use infodyn::thermo::ProductionTrend;
use infodyn::{
    evolve, info, InfoReport, Potential, RunOutput, ScenarioConfig, Scheme, Units, WaveFunction,
};
use num_complex::Complex64;

struct Verdict {
    id: &'static str,
    passed: bool,
    detail: String,
}

fn verdict(id: &'static str, passed: bool, detail: String) -> Verdict {
    Verdict { id, passed, detail }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn max_abs<'a>(values: impl IntoIterator<Item = &'a Option<f64>>) -> f64 {
    values
        .into_iter()
        .flatten()
        .fold(0.0, |m, v| m.max(v.abs()))
}

fn run_builtin(name: &str) -> RunOutput {
    run_config(ScenarioConfig::builtin(name).expect("built-in exists"))
}

fn run_config(cfg: ScenarioConfig) -> RunOutput {
    cfg.prepare()
        .expect("valid scenario")
        .run()
        .expect("scenario runs")
}

struct Runs {
    names: Vec<&'static str>,
    outputs: Vec<RunOutput>,
}

impl Runs {
    fn get(&self, name: &str) -> &RunOutput {
        let i = self
            .names
            .iter()
            .position(|n| *n == name)
            .expect("scenario was run");
        &self.outputs[i]
    }
}

fn entropic_sum_of_ground_state() -> Verdict {
    let start = Instant::now();
    let grid = common::default_grid();
    let wf = ho_eigenstate(0, 1.0, &grid, &Units::default()).unwrap();
    let r = InfoReport::of(&wf).unwrap();
    let elapsed = start.elapsed();
    let sum = r.s_q + r.s_p;
    let err = (sum - (1.0 + PI.ln())).abs();
    verdict(
        "1",
        err < 1e-6 && elapsed < Duration::from_secs(1),
        format!(
            "S_q + S_p = {sum:.9}, |error| {err:.2e}, {:.3} s",
            secs(elapsed)
        ),
    )
}

fn fisher_entropy_power_chain(reports: &[InfoReport], elapsed: Duration) -> Verdict {
    let worst = reports
        .iter()
        .flat_map(|r| {
            [
                r.slacks.fisher_vs_entropy_power,
                r.slacks.entropy_power_vs_variance,
            ]
        })
        .fold(f64::INFINITY, f64::min);
    verdict(
        "2",
        worst >= -1e-7 && elapsed < Duration::from_secs(30),
        format!(
            "{} states, min slack of F >= 2 pi e exp(-2 S_q) >= 1/var_x is {worst:.3e}, {:.2} s",
            reports.len(),
            secs(elapsed)
        ),
    )
}

fn sharpened_chain(reports: &[InfoReport]) -> Verdict {
    let equality = reports
        .iter()
        .map(|r| r.fisher_identity_residual.abs())
        .fold(0.0, f64::max);
    let slack = reports
        .iter()
        .flat_map(|r| [r.slacks.momentum_variance_vs_fisher, 4.0 * r.var_p_cl])
        .fold(f64::INFINITY, f64::min);
    verdict(
        "3",
        equality < 1e-6 && slack >= -1e-7,
        format!(
            "max |F - 4(var_p - var_p_cl)| {equality:.2e}, min slack of 4 var_p >= F {slack:.3e}"
        ),
    )
}

fn variance_partition(runs: &Runs, ensemble: &[WaveFunction]) -> Verdict {
    let units = Units::default();
    let scenario_worst = runs
        .outputs
        .iter()
        .flat_map(|o| o.rows.iter().map(|r| r.res_partition.abs()))
        .fold(0.0, f64::max);
    let ensemble_worst = ensemble
        .iter()
        .map(|wf| variance_partition_residual(wf, &units).abs())
        .fold(0.0, f64::max);
    verdict(
        "4",
        scenario_worst < 1e-6 && ensemble_worst < 1e-6,
        format!("max residual {scenario_worst:.2e} over scenarios, {ensemble_worst:.2e} over the ensemble"),
    )
}

fn quantum_potential_identity() -> Verdict {
    let units = Units::default();
    let wf = ho_eigenstate(0, 1.0, &common::default_grid(), &units).unwrap();
    let ids = fisher_identities(&wf, &units, f64::INFINITY).unwrap();
    let lhs = 0.5 * units.d * units.d * ids.fisher;
    let ok = (ids.mean_q + 0.25).abs() < 1e-8 && (lhs - 0.25).abs() < 1e-8;
    verdict(
        "5",
        ok,
        format!("<Q> = {:.12}, (D^2/2) F = {lhs:.12}", ids.mean_q),
    )
}

/// L² error of a split-step free packet at `t = 1` against the closed form.
fn free_packet_error(dt: f64) -> (f64, WaveFunction) {
    let units = Units::default();
    let grid = common::default_grid();
    let wf0 = gaussian_packet(0.0, 0.0, 0.5, &grid).unwrap();
    let steps = (1.0 / dt).round() as usize;
    let traj = evolve(
        &wf0,
        &Potential::Free {},
        dt,
        steps,
        steps,
        Scheme::SplitStep,
        &units,
    )
    .unwrap();
    let last = traj.snapshots.last().unwrap().clone();
    let exact = free_gaussian_at(1.0, 0.0, 0.0, 0.5, &grid, &units).unwrap();
    (last.l2_distance(&exact), last)
}

fn free_packet() -> Vec<Verdict> {
    let start = Instant::now();
    let (err, wf) = free_packet_error(1e-3);
    let (err_half, _) = free_packet_error(5e-4);
    let elapsed = start.elapsed();
    let r = InfoReport::of(&wf).unwrap();
    let s_exact = 0.5 * (TAU * E).ln();
    let ratio = err / err_half;
    let accuracy = err < 1e-6 && (r.var_x - 1.0).abs() < 1e-6 && (r.s_q - s_exact).abs() < 1e-6;
    let order = (3.0..=5.0).contains(&ratio);
    let main = verdict(
        "6",
        accuracy && order && elapsed < Duration::from_secs(10),
        format!(
            "var_x = {:.9}, S_q = {:.9}, L2 error {err:.2e} at dt = 1e-3 and {err_half:.2e} at dt = 5e-4 \
             (ratio {ratio:.2}, expected about 4), {:.2} s",
            r.var_x,
            r.s_q,
            secs(elapsed)
        ),
    );
    vec![main, coherent_order()]
}

/// Temporal order of the split-step scheme where it is not exact: a coherent
/// state in a harmonic well against its closed form at `t = 1`.
fn coherent_order() -> Verdict {
    let units = Units::default();
    let grid = common::default_grid();
    let pot = Potential::Harmonic { omega: 1.0 };
    let alpha = Complex64::new(1.0, 0.5);
    let wf0 = coherent_state(alpha, 1.0, &grid, &units).unwrap();
    let exact =
        coherent_state(alpha * Complex64::from_polar(1.0, -1.0), 1.0, &grid, &units).unwrap();
    let error = |dt: f64| {
        let steps = (1.0 / dt).round() as usize;
        let traj = evolve(&wf0, &pot, dt, steps, steps, Scheme::SplitStep, &units).unwrap();
        traj.snapshots.last().unwrap().distance_up_to_phase(&exact)
    };
    let (e1, e2) = (error(1e-2), error(5e-3));
    let ratio = e1 / e2;
    verdict(
        "6 (order, harmonic)",
        (3.0..=5.0).contains(&ratio),
        format!(
            "coherent-state error {e1:.2e} at dt = 1e-2, {e2:.2e} at dt = 5e-3 (ratio {ratio:.2})"
        ),
    )
}

fn energy_constancy(runs: &Runs) -> Verdict {
    let mut worst_identity = 0.0_f64;
    let mut worst_drift = 0.0_f64;
    let mut span = 0.0_f64;
    for (name, out) in runs.names.iter().zip(&runs.outputs) {
        let cfg = ScenarioConfig::builtin(name).unwrap();
        if !cfg.potential.is_static() {
            continue;
        }
        let e0 = out.rows[0].energy;
        for r in &out.rows {
            worst_identity = worst_identity.max(r.res_energy.abs());
            worst_drift = worst_drift.max(((r.energy - e0) / e0).abs());
        }
        span = span.max(out.rows.last().unwrap().t);
    }
    verdict(
        "7",
        worst_identity < 1e-6 && worst_drift < 1e-6 && span >= 10.0 - 1e-9,
        format!("max |H_hydro - E/m| {worst_identity:.2e}, max relative drift {worst_drift:.2e}, up to t = {span}"),
    )
}

fn second_law(runs: &Runs) -> Verdict {
    let mut min_production = f64::INFINITY;
    let mut worst_rate = 0.0_f64;
    let mut interval_ok = true;
    for out in &runs.outputs {
        interval_ok &= (out.ledger.interval - 1e-2).abs() < 1e-12;
        for r in &out.rows {
            min_production = min_production.min(r.s_int_rate);
        }
        worst_rate = worst_rate.max(max_abs(out.rows.iter().map(|r| &r.res_entropy_rate)));
    }
    verdict(
        "8",
        min_production >= 0.0 && worst_rate < 1e-3 && interval_ok,
        format!("min S_int_rate {min_production:.3e}, max |dS/dt + <uv>/D| {worst_rate:.2e} at snapshot interval 1e-2"),
    )
}

fn first_law_and_extremum(runs: &Runs) -> Verdict {
    let mut worst = 0.0_f64;
    for name in [
        "stationary_ground",
        "coherent_oscillation",
        "free_spreading",
    ] {
        let out = runs.get(name);
        worst = worst.max(max_abs(out.rows.iter().map(|r| &r.res_first_law)));
        worst = worst.max(max_abs(out.rows.iter().map(|r| &r.res_extremum)));
    }
    // the residuals come from centered differences, so doubling the snapshot
    // interval should quadruple them
    let scaled = |stride: usize| {
        let mut cfg = ScenarioConfig::builtin("coherent_oscillation").unwrap();
        cfg.evolution.t_final = 4.0;
        cfg.evolution.snapshot_stride = stride;
        let out = run_config(cfg);
        max_abs(out.rows.iter().map(|r| &r.res_first_law))
            .max(max_abs(out.rows.iter().map(|r| &r.res_extremum)))
    };
    let (fine, coarse) = (scaled(10), scaled(20));
    let ratio = coarse / fine;
    verdict(
        "9",
        worst < 1e-3 && (3.0..=5.0).contains(&ratio),
        format!(
            "max residual {worst:.2e} on nodeless scenarios; coherent residual {fine:.2e} at h = 1e-2, \
             {coarse:.2e} at h = 2e-2 (ratio {ratio:.2})"
        ),
    )
}

fn feedback(runs: &Runs) -> Verdict {
    let out = runs.get("coherent_oscillation");
    let fb = max_abs(out.rows.iter().map(|r| &r.res_feedback));
    let fe = max_abs(out.rows.iter().map(|r| &r.res_free_energy_speed));
    let pr = max_abs(out.rows.iter().map(|r| &r.res_production_speed));
    let samples = out.rows.iter().filter(|r| r.res_feedback.is_some()).count();
    let trend = out.probe.trend;
    verdict(
        "10",
        fb < 1e-2 && fe < 1e-2 && pr < 1e-2 && samples > 0 && trend == ProductionTrend::Oscillatory,
        format!(
            "max |feedback| {fb:.2e}, free-energy speed {fe:.2e}, production speed {pr:.2e} \
             over {samples} snapshots; production trend {trend}"
        ),
    )
}

fn stationary_ledger(runs: &Runs) -> Verdict {
    let out = runs.get("stationary_ground");
    let beta0 = out.ledger.params.beta0;
    let mut worst = 0.0_f64;
    for r in &out.ledger.rows {
        worst = worst
            .max(r.rates.internal.abs())
            .max(r.heat_rate.abs())
            .max((r.work_rate - 0.5 * beta0).abs());
        if let Some(f) = r.free_energy_rate {
            worst = worst.max((f - r.work_rate).abs());
        }
    }
    let rated = out
        .ledger
        .rows
        .iter()
        .filter(|r| r.free_energy_rate.is_some())
        .count();
    verdict(
        "11",
        worst < 1e-8 && rated > 0,
        format!(
            "max deviation {worst:.2e} over {} snapshots",
            out.ledger.rows.len()
        ),
    )
}

fn main() -> ExitCode {
    let grid = common::default_grid();
    let start = Instant::now();
    let ensemble = common::ensemble(&grid);
    let reports: Vec<InfoReport> = ensemble
        .iter()
        .map(|wf| info::InfoReport::of(wf).unwrap())
        .collect();
    let ensemble_time = start.elapsed();

    let names = infodyn::scenario::BUILTIN_NAMES.to_vec();
    let outputs = names.iter().map(|n| run_builtin(n)).collect();
    let runs = Runs { names, outputs };

    let mut verdicts = vec![
        entropic_sum_of_ground_state(),
        fisher_entropy_power_chain(&reports, ensemble_time),
        sharpened_chain(&reports),
        variance_partition(&runs, &ensemble),
        quantum_potential_identity(),
    ];
    verdicts.extend(free_packet());
    verdicts.extend([
        energy_constancy(&runs),
        second_law(&runs),
        first_law_and_extremum(&runs),
        feedback(&runs),
        stationary_ledger(&runs),
    ]);

    println!();
    for v in &verdicts {
        println!(
            "criterion {:<20} {}  {}",
            v.id,
            if v.passed { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    let failed = verdicts.iter().filter(|v| !v.passed).count();
    println!(
        "\nacceptance: {} passed, {failed} failed\n",
        verdicts.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
