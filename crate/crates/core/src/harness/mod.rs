//! Experiment configuration, runners and output formats.
//!
//! Every command writes `<out>/<command>.csv` and `<out>/<command>.json`
//! (plus a few companions) and is deterministic given its configuration.

mod config;
mod output;

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use serde_json::{json, Value};

pub use config::{parse_key_values, Command, DriverKind, ExperimentConfig, KEYS, MAX_GRID_K};
pub use output::{fmt_f64, Cell, Csv};

use crate::continuity::{discontinuous_drift_experiment, ExperimentSpec, ParticleMeasure};
use crate::error::Result;
use crate::fbm::{FbmSampler, FbmSpec};
use crate::flow::drift::{preset, ShiftedDrift, ZeroDrift};
use crate::flow::stack::{eta_preset, Shifted};
use crate::flow::{
    compose_lift, drift_stability, driver_stability, ito_residual, solve_flow, Drift,
};
use crate::rough_path::{chen_defect_of, path_holder, PathSamples, RoughPathGrid, TimeGrid};
use crate::sewing::cumulative_rough_integral;
use crate::stats::regression_slope;
use crate::tensor::TruncatedTensor;

/// Files written by a run and one-line summaries for the terminal.
#[derive(Debug, Clone, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// `X^j_t = ½(sin(3t + 0.7j) − sin(0.7j))`.
pub fn smooth_driver(grid: &TimeGrid, dim: usize) -> Result<PathSamples> {
    PathSamples::from_fn(grid, dim, |t| {
        (0..dim)
            .map(|j| 0.5 * ((3.0 * t + 0.7 * j as f64).sin() - (0.7 * j as f64).sin()))
            .collect()
    })
}

fn driver(cfg: &ExperimentConfig, grid: &TimeGrid, stream: u64) -> Result<PathSamples> {
    match cfg.driver {
        DriverKind::Fbm => {
            Ok(
                FbmSampler::new(FbmSpec::new(cfg.hurst, cfg.dim, grid.clone(), cfg.seed)?)?
                    .sample_stream(stream),
            )
        }
        DriverKind::Smooth if stream == 0 => smooth_driver(grid, cfg.dim),
        DriverKind::Smooth => PathSamples::from_fn(grid, cfg.dim, |t| vec![t; cfg.dim]),
    }
}

fn grid(cfg: &ExperimentConfig) -> Result<TimeGrid> {
    TimeGrid::dyadic(cfg.horizon, cfg.grid_k)
}

fn header(cfg: &ExperimentConfig) -> Value {
    json!({
        "command": cfg.command,
        "H": cfg.hurst,
        "d": cfg.dim,
        "gamma": cfg.gamma,
        "level": cfg.level(),
        "T": cfg.horizon,
        "grid_k": cfg.grid_k,
        "seed": cfg.seed,
        "driver": cfg.driver,
    })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

/// Validates `cfg` and runs its command.
pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let start = Instant::now();
    let (mut report, csv, mut out) = match cfg.command {
        Command::SampleFbm => sample_fbm(cfg)?,
        Command::Lift => lift(cfg)?,
        Command::Integrate => integrate(cfg)?,
        Command::Flow => flow(cfg)?,
        Command::ItoCheck => ito_check(cfg)?,
        Command::Stability => stability(cfg)?,
        Command::Continuity => continuity(cfg)?,
    };
    if cfg.timing {
        report["runtime"]["wall_seconds"] = json!(start.elapsed().as_secs_f64());
    }
    let name = cfg.command.as_str();
    out.files.push(output::write_text(
        &cfg.out,
        &format!("{name}.csv"),
        csv.as_str(),
    )?);
    out.files.push(output::write_json(
        &cfg.out,
        &format!("{name}.json"),
        &report,
    )?);
    Ok(out)
}

type Produced = (Value, Csv, RunOutcome);

fn sample_fbm(cfg: &ExperimentConfig) -> Result<Produced> {
    let g = grid(cfg)?;
    let sampler = FbmSampler::new(FbmSpec::new(cfg.hurst, cfg.dim, g.clone(), cfg.seed)?)?;
    let path = sampler.sample();
    let mut head = vec!["t".to_string()];
    head.extend((1..=cfg.dim).map(|j| format!("x{j}")));
    let mut csv = Csv::new(&head);
    for (n, &t) in g.nodes().iter().enumerate() {
        let mut row = vec![Cell::Num(t)];
        row.extend(path.point(n).iter().map(|v| Cell::Num(*v)));
        csv.row(row);
    }
    let holder = path_holder(&g, &path, cfg.gamma)?;
    let report = merge(
        header(cfg),
        json!({ "jitter": sampler.jitter(), "holder_seminorm": holder, "runtime": { "nodes": g.len() } }),
    );
    let summary = vec![format!(
        "sampled {} nodes, gamma-Hölder seminorm {}",
        g.len(),
        fmt_f64(holder)
    )];
    Ok((
        report,
        csv,
        RunOutcome {
            files: vec![],
            summary,
        },
    ))
}

fn lift(cfg: &ExperimentConfig) -> Result<Produced> {
    let g = grid(cfg)?;
    let path = driver(cfg, &g, 0)?;
    let p = cfg.level();
    let x = RoughPathGrid::lift_piecewise_linear(&g, &path, p)?;
    let mut from_origin: Vec<TruncatedTensor> = vec![TruncatedTensor::identity(cfg.dim, p)?];
    x.for_each_increment_from(0, |_, inc| from_origin.push(inc.clone()));
    let mut chen = 0.0_f64;
    for u in 1..g.len() {
        x.for_each_increment_from(u, |t, xut| {
            if let Ok(v) = chen_defect_of(&from_origin[t], &from_origin[u], xut) {
                chen = chen.max(v);
            }
        });
    }
    let symmetry = from_origin
        .iter()
        .map(crate::rough_path::symmetry_defect_of)
        .fold(0.0, f64::max);

    let mut head = vec!["t".to_string()];
    head.extend((1..=p).map(|k| format!("level{k}_norm")));
    let mut csv = Csv::new(&head);
    for (n, xt) in from_origin.iter().enumerate() {
        let mut row = vec![Cell::Num(g.node(n))];
        row.extend((1..=p).map(|k| Cell::Num(crate::tensor::norm(xt.level_data(k)))));
        csv.row(row);
    }
    let norms = x.level_holder_norms(cfg.gamma)?;
    let report = merge(
        header(cfg),
        json!({
            "chen_defect_max": chen,
            "symmetry_defect_max": symmetry,
            "level_holder_norms": norms,
            "runtime": { "nodes": g.len() },
        }),
    );
    let doc = output::write_text(&cfg.out, "lift-path.json", &x.to_json()?)?;
    let summary = vec![format!(
        "lifted to level {p}: Chen defect {}, symmetry defect {}",
        fmt_f64(chen),
        fmt_f64(symmetry)
    )];
    Ok((
        report,
        csv,
        RunOutcome {
            files: vec![doc],
            summary,
        },
    ))
}

fn integrate(cfg: &ExperimentConfig) -> Result<Produced> {
    let g = grid(cfg)?;
    let path = driver(cfg, &g, 0)?;
    let p = cfg.level();
    let x = Arc::new(RoughPathGrid::lift_piecewise_linear(&g, &path, p)?);
    let flow = solve_flow(
        &ZeroDrift { dim: cfg.dim },
        &g,
        &path,
        &[vec![0.0; cfg.dim]],
        1,
    )?;
    let eta = eta_preset(&cfg.eta, cfg.dim, p + 1)?;
    let grad = Shifted {
        inner: eta.as_ref(),
        shift: 1,
    };
    let y = compose_lift(&grad, &flow, &x, 0)?;
    let rough = cumulative_rough_integral(&y, cfg.gamma)?;
    let e0 = eta.value(path.point(0))[0];
    let mut csv = Csv::new(&["t", "rough_integral", "oracle", "difference"]);
    let mut worst = 0.0_f64;
    for (n, &t) in g.nodes().iter().enumerate() {
        let oracle = eta.value(path.point(n))[0] - e0;
        worst = worst.max((rough[n] - oracle).abs());
        csv.row(vec![
            t.into(),
            rough[n].into(),
            oracle.into(),
            (rough[n] - oracle).into(),
        ]);
    }
    let report = merge(
        header(cfg),
        json!({
            "eta": cfg.eta,
            "integral": rough[g.intervals()],
            "max_abs_difference": worst,
            "runtime": { "nodes": g.len() },
        }),
    );
    let summary = vec![format!(
        "∫Dη(X)dX vs η(X_t)−η(X_0): max difference {}",
        fmt_f64(worst)
    )];
    Ok((
        report,
        csv,
        RunOutcome {
            files: vec![],
            summary,
        },
    ))
}

fn flow(cfg: &ExperimentConfig) -> Result<Produced> {
    let g = grid(cfg)?;
    let path = driver(cfg, &g, 0)?;
    let b = preset(&cfg.drift, cfg.dim)?;
    let mu = ParticleMeasure::preset(&cfg.measure, cfg.dim, cfg.particles)?;
    let f = solve_flow(b.as_ref(), &g, &path, mu.points(), cfg.substeps)?;
    let csv = Csv::from_raw(f.to_csv());
    let report = merge(
        header(cfg),
        json!({
            "drift": cfg.drift,
            "measure": cfg.measure,
            "particles": f.particles(),
            "substeps": cfg.substeps,
            "runtime": { "fine_nodes": f.fine_grid().len(), "drift_evaluations": f.drift_evaluations() },
        }),
    );
    let summary = vec![format!(
        "solved {} particles on {} fine nodes",
        f.particles(),
        f.fine_grid().len()
    )];
    Ok((
        report,
        csv,
        RunOutcome {
            files: vec![],
            summary,
        },
    ))
}

fn ito_check(cfg: &ExperimentConfig) -> Result<Produced> {
    let k = cfg.grid_k;
    let finest = grid(cfg)?;
    let base = driver(cfg, &finest, 0)?;
    let b = preset(&cfg.drift, cfg.dim)?;
    let eta = eta_preset(&cfg.eta, cfg.dim, cfg.level() + 1)?;
    let mut csv = Csv::new(&["k", "N", "substeps", "residual"]);
    let mut rows = Vec::new();
    let mut evaluations = 0;
    for kk in [k - 4, k - 2, k] {
        let g = TimeGrid::dyadic(cfg.horizon, kk)?;
        let path = base.subsample(1 << (k - kk));
        let substeps = cfg.substeps << ((kk + 4 - k) / 2);
        let f = solve_flow(b.as_ref(), &g, &path, &[vec![0.0; cfg.dim]], substeps)?;
        let x = Arc::new(f.fine_driver_lift(cfg.level())?);
        let r = ito_residual(eta.as_ref(), &f, &x, cfg.gamma, 0, cfg.horizon)?.abs();
        evaluations += f.drift_evaluations();
        csv.row(vec![
            (kk as usize).into(),
            (1usize << kk).into(),
            substeps.into(),
            r.into(),
        ]);
        rows.push(json!({ "k": kk, "N": 1u64 << kk, "substeps": substeps, "residual": r }));
    }
    let res: Vec<f64> = rows
        .iter()
        .map(|r| r["residual"].as_f64().unwrap_or(f64::NAN))
        .collect();
    let decreasing = res.windows(2).all(|w| w[1] < w[0]);
    let ns: Vec<f64> = [k - 4, k - 2, k]
        .iter()
        .map(|kk| (1u64 << kk) as f64)
        .map(f64::ln)
        .collect();
    let order = -regression_slope(&ns, &res.iter().map(|r| r.ln()).collect::<Vec<_>>());
    let report = merge(
        header(cfg),
        json!({
            "drift": cfg.drift,
            "eta": cfg.eta,
            "base_substeps": cfg.substeps,
            "rows": rows,
            "strictly_decreasing": decreasing,
            "empirical_order": order,
            "runtime": { "drift_evaluations": evaluations },
        }),
    );
    let summary = vec![format!(
        "Itô residuals {res:?}, strictly decreasing: {decreasing}, order {order:.3}"
    )];
    Ok((
        report,
        csv,
        RunOutcome {
            files: vec![],
            summary,
        },
    ))
}

/// Driver perturbation scales of the stability sweep.
pub const STABILITY_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

fn stability(cfg: &ExperimentConfig) -> Result<Produced> {
    let g = grid(cfg)?;
    let x = driver(cfg, &g, 0)?;
    let z = driver(cfg, &g, 1)?;
    let b = preset(&cfg.drift, cfg.dim)?;
    let eta = eta_preset(&cfg.eta, cfg.dim, cfg.level() + 1)?;
    let f = Shifted {
        inner: eta.as_ref(),
        shift: 1,
    };
    let x0 = vec![0.0; cfg.dim];
    let mut csv = Csv::new(&[
        "eps",
        "flow_difference",
        "driver_difference",
        "flow_ratio",
        "lift_difference",
        "rho",
        "lift_ratio",
    ]);
    let mut rows = Vec::new();
    for eps in STABILITY_EPS {
        let xt = x.add_scaled(eps, &z)?;
        let r = driver_stability(b.as_ref(), &g, &x, &xt, &f, cfg.gamma, &x0, cfg.substeps)?;
        csv.row(vec![
            eps.into(),
            r.flow_difference.into(),
            r.driver_difference.into(),
            r.flow_ratio.into(),
            r.lift_difference.into(),
            r.rho.into(),
            r.lift_ratio.into(),
        ]);
        rows.push(json!({ "eps": eps, "report": r }));
    }
    let spread = |key: &str| -> f64 {
        let v: Vec<f64> = rows
            .iter()
            .filter_map(|r| r["report"][key].as_f64())
            .collect();
        v.iter().cloned().fold(f64::MIN, f64::max) / v.iter().cloned().fold(f64::MAX, f64::min)
    };
    let (flow_spread, lift_spread) = (spread("flow_ratio"), spread("lift_ratio"));

    let shifted: Vec<ShiftedDrift<Box<dyn Drift>>> = [1usize, 2, 4, 8, 16]
        .iter()
        .map(|n| {
            Ok(ShiftedDrift {
                inner: preset(&cfg.drift, cfg.dim)?,
                shift: vec![1.0 / *n as f64; cfg.dim],
            })
        })
        .collect::<Result<_>>()?;
    let refs: Vec<&dyn Drift> = shifted.iter().map(|d| d as &dyn Drift).collect();
    let drift_rows = drift_stability(&refs, b.as_ref(), &g, &x, &f, cfg.gamma, &x0, cfg.substeps)?;
    let mut dcsv = Csv::new(&[
        "n",
        "holder_distance",
        "sup_distance",
        "controlled_distance",
        "integral_difference",
    ]);
    for (r, n) in drift_rows.iter().zip([1usize, 2, 4, 8, 16]) {
        dcsv.row(vec![
            n.into(),
            r.holder_distance.into(),
            r.sup_distance.into(),
            r.controlled_distance.into(),
            r.integral_difference.into(),
        ]);
    }
    let dfile = output::write_text(&cfg.out, "stability-drift.csv", dcsv.as_str())?;
    let report = merge(
        header(cfg),
        json!({
            "drift": cfg.drift,
            "eta": cfg.eta,
            "rows": rows,
            "flow_ratio_spread": flow_spread,
            "lift_ratio_spread": lift_spread,
            "drift_rows": drift_rows,
            "runtime": { "flows": 2 * STABILITY_EPS.len() + 1 + drift_rows.len() },
        }),
    );
    let summary = vec![format!(
        "ratio spreads: flow {flow_spread:.4}, lift {lift_spread:.4}"
    )];
    Ok((
        report,
        csv,
        RunOutcome {
            files: vec![dfile],
            summary,
        },
    ))
}

fn continuity(cfg: &ExperimentConfig) -> Result<Produced> {
    let spec = ExperimentSpec {
        hurst: cfg.hurst,
        dim: cfg.dim,
        gamma: cfg.gamma,
        horizon: cfg.horizon,
        grid_k: cfg.grid_k,
        substeps: cfg.substeps,
        seed: cfg.seed,
        eps_ladder: cfg.eps_ladder.clone(),
        drift: cfg.drift.clone(),
        eta: cfg.eta.clone(),
        measure: ParticleMeasure::preset(&cfg.measure, cfg.dim, cfg.particles)?,
    };
    let r = discontinuous_drift_experiment(&spec)?;
    let mut csv = Csv::new(&[
        "eps",
        "pairing",
        "residual",
        "cauchy_increment",
        "equicontinuity_seminorm",
    ]);
    for (k, eps) in r.eps_ladder.iter().enumerate() {
        csv.row(vec![
            (*eps).into(),
            r.pairings[k].into(),
            r.residuals[k].into(),
            r.cauchy_increments.get(k).copied().into(),
            r.equicontinuity_seminorms[k].into(),
        ]);
    }
    let summary = vec![format!(
        "Cauchy increments decreasing: {}, equicontinuity max/min {:.4}",
        r.cauchy_decreasing(),
        r.equicontinuity_spread()
    )];
    let mut report = serde_json::to_value(&r)?;
    report["drift"] = json!(cfg.drift);
    report["eta"] = json!(cfg.eta);
    report["measure"] = json!(cfg.measure);
    report["cauchy_decreasing"] = json!(r.cauchy_decreasing());
    Ok((
        report,
        csv,
        RunOutcome {
            files: vec![],
            summary,
        },
    ))
}
