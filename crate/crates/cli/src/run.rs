use ixy_core::analysis::{
    find_exceptional_point, sweep_size_scaling, sweep_stationary_scaling, sweep_time_scaling, StationaryOptions,
    TimeGrids,
};
use ixy_core::oracle::{default_dense_step, dense_evolve_qfi, ExchangeSign};
use ixy_core::{build_blocks, classify_phase, dispersion, qfi_ratio_time_avg, DynamicalSensor, Error, ThetaKind};
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::config::{Experiment, ExperimentConfig, ZSpec};
use crate::output::{num, Output, OutputError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("oracle check failed: {0} of {1} comparisons outside tolerance")]
    OracleMismatch(usize, usize),
}

/// Extra fields recorded in the manifest next to the outputs.
pub type Summary = serde_json::Value;

pub fn run(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    match cfg.experiment() {
        Experiment::Dispersion => run_dispersion(cfg, out),
        Experiment::ExceptionalPoint => run_exceptional_point(cfg, out),
        Experiment::EpTable => run_ep_table(cfg, out),
        Experiment::QfiDynamics => run_qfi_dynamics(cfg, out),
        Experiment::TimeScaling => run_time_scaling(cfg, out),
        Experiment::SizeScaling => run_size_scaling(cfg, out),
        Experiment::StationaryScaling => run_stationary(cfg, out),
        Experiment::Ratio => run_ratio(cfg, out),
        Experiment::OracleCheck => run_oracle_check(cfg, out),
    }
}

fn z_tag(z: ZSpec) -> String {
    match z {
        ZSpec::Fixed(z) => z.to_string(),
        ZSpec::HalfChain => "half".into(),
    }
}

fn run_dispersion(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    let params = cfg.params();
    let blocks = build_blocks(&params);
    let rows: Vec<Vec<String>> = blocks
        .iter()
        .map(|b| {
            let eps = dispersion(b);
            vec![
                b.p.to_string(),
                num(b.phi),
                num(b.a),
                num(b.b),
                num(b.eps_sq),
                num(eps.re),
                num(eps.im),
            ]
        })
        .collect();
    out.csv(
        "dispersion.csv",
        &["p", "phi", "a", "b", "eps_sq", "eps_re", "eps_im"],
        &rows,
    )?;
    let class = classify_phase(&blocks)?;
    out.json("phase.json", &class)?;
    Ok(json!({ "params": params, "phase": class }))
}

fn run_exceptional_point(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    let ep = find_exceptional_point(&cfg.params(), cfg.ep_bracket, cfg.ep_tolerance, cfg.ep_grid)?;
    let row = vec![
        ep.z.to_string(),
        num(ep.alpha),
        num(ep.gamma),
        ep.n.to_string(),
        num(ep.h_e),
        ep.iterations.to_string(),
    ];
    out.csv(
        "exceptional_point.csv",
        &["Z", "alpha", "gamma", "N", "h_e", "iterations"],
        &[row],
    )?;
    out.json("exceptional_point.json", &ep)?;
    Ok(json!({ "h_e": ep.h_e }))
}

fn run_ep_table(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    let cells: Vec<(ZSpec, f64)> = cfg
        .z_list
        .iter()
        .flat_map(|&z| cfg.alpha_list.iter().map(move |&a| (z, a)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(z, alpha)| {
            let mut p = cfg.params();
            p.z = z.resolve(cfg.n);
            p.alpha = alpha;
            find_exceptional_point(&p, cfg.ep_bracket, cfg.ep_tolerance, cfg.ep_grid)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|ep| {
            vec![
                ep.z.to_string(),
                num(ep.alpha),
                num(ep.gamma),
                ep.n.to_string(),
                num(ep.h_e),
                ep.iterations.to_string(),
            ]
        })
        .collect();
    out.csv(
        "ep_table.csv",
        &["Z", "alpha", "gamma", "N", "h_e", "iterations"],
        &rows,
    )?;
    Ok(json!({ "cells": results.len() }))
}

fn run_qfi_dynamics(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    let times = cfg.times.values();
    let mut curves = Vec::new();
    for &z in &cfg.z_list {
        let mut p = cfg.params();
        p.z = z.resolve(cfg.n);
        let samples = DynamicalSensor::new(&p)?.curve(&times, cfg.theta)?;
        let rows: Vec<Vec<String>> = samples.iter().map(|s| vec![num(s.x), num(s.value)]).collect();
        let name = format!("qfi_dynamics_z{}.csv", z_tag(z));
        out.csv(&name, &["t", "qfi"], &rows)?;
        curves.push(json!({ "z": z.to_string(), "z_resolved": p.z, "file": name }));
    }
    Ok(json!({ "theta": cfg.theta, "curves": curves }))
}

fn run_time_scaling(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    let grids = TimeGrids {
        transient: cfg.transient_times.values(),
        long_time: cfg.long_times.values(),
    };
    let mut fits = Vec::new();
    for &z in &cfg.z_list {
        let mut p = cfg.params();
        p.z = z.resolve(cfg.n);
        let ts = sweep_time_scaling(&p, cfg.theta, &grids)?;
        let rows: Vec<Vec<String>> = ts.series.samples.iter().map(|s| vec![num(s.x), num(s.value)]).collect();
        let tag = z_tag(z);
        out.csv(&format!("time_scaling_z{tag}.csv"), &["t", "qfi"], &rows)?;
        let record = json!({
            "z": z.to_string(),
            "z_resolved": p.z,
            "params": p,
            "theta": cfg.theta,
            "transient": ts.transient,
            "long_time": ts.long_time,
        });
        out.json(&format!("time_scaling_z{tag}_fits.json"), &record)?;
        fits.push(record);
    }
    Ok(json!({ "fits": fits }))
}

fn run_size_scaling(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    let ss = sweep_size_scaling(&cfg.params(), cfg.z.coordination(), cfg.theta, cfg.t_eval, &cfg.sizes)?;
    let rows: Vec<Vec<String>> = ss
        .series
        .samples
        .iter()
        .map(|s| vec![(s.x as usize).to_string(), num(s.value)])
        .collect();
    out.csv("size_scaling.csv", &["N", "qfi"], &rows)?;
    let record = json!({ "z": cfg.z.to_string(), "theta": cfg.theta, "t_eval": ss.t_eval, "fit": ss.fit });
    out.json("size_scaling_fit.json", &record)?;
    Ok(record)
}

fn run_stationary(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    let opts = StationaryOptions {
        ep_grid: cfg.ep_grid,
        ep_bracket: cfg.ep_bracket,
        ep_tolerance: cfg.anchor_tolerance,
        fd_step: cfg.fd_step,
    };
    let cells = sweep_stationary_scaling(
        &cfg.params(),
        cfg.z.coordination(),
        cfg.theta,
        &cfg.dh_list,
        &cfg.stationary_sizes,
        cfg.anchor,
        &opts,
    )?;
    let mut rows = Vec::new();
    let mut fits = Vec::new();
    for (group, cell) in cells.iter().enumerate() {
        for s in &cell.samples {
            rows.push(vec![
                num(cell.dh),
                (s.x as usize).to_string(),
                num(s.value),
                group.to_string(),
            ]);
        }
        if !cell.straddled_sizes.is_empty() {
            out.warn(format!(
                "dh = {}: finite-difference stencil straddles an exceptional point at N = {:?}",
                cell.dh, cell.straddled_sizes
            ));
        }
        if cell.fit.is_none() {
            out.warn(format!("dh = {}: too few positive QFI values for a fit", cell.dh));
        }
        fits.push(json!({
            "mu_fit_group": group,
            "dh": cell.dh,
            "anchor_fields": cell.anchor_fields,
            "fd_steps": cell.fd_steps,
            "straddled_sizes": cell.straddled_sizes,
            "fit": cell.fit,
        }));
    }
    out.csv("stationary_scaling.csv", &["dh", "N", "qfi", "mu_fit_group"], &rows)?;
    let record = json!({ "z": cfg.z.to_string(), "theta": cfg.theta, "anchor": cfg.anchor, "cells": fits });
    out.json("stationary_scaling_fits.json", &record)?;
    Ok(json!({ "cells": cells.len() }))
}

fn run_ratio(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    let (t0, t1) = cfg.ratio_window;
    let r = qfi_ratio_time_avg(&cfg.params(), cfg.theta, t0, t1, cfg.ratio_points)?;
    let mut rows: Vec<Vec<String>> = r
        .per_sample
        .iter()
        .map(|p| vec![num(p.t), num(p.qfi_nh), num(p.qfi_h), num(p.ratio)])
        .collect();
    rows.push(vec!["mean".into(), String::new(), String::new(), num(r.mean_ratio)]);
    out.csv("ratio.csv", &["t", "qfi_nh", "qfi_h", "ratio"], &rows)?;
    if r.dropped > 0 {
        out.warn(format!(
            "{} ratio points dropped for a vanishing Hermitian QFI",
            r.dropped
        ));
    }
    Ok(json!({ "mean_ratio": r.mean_ratio, "t0": r.t0, "t1": r.t1, "n_samples": r.n_samples, "dropped": r.dropped }))
}

fn run_oracle_check(cfg: &ExperimentConfig, out: &mut Output) -> Result<Summary, RunError> {
    let mut cases = Vec::new();
    for &n in &cfg.oracle_sizes {
        for &z in &cfg.z_list {
            for &t in &cfg.oracle_times {
                for theta in [ThetaKind::Field, ThetaKind::Anisotropy] {
                    cases.push((n, z.resolve(n), t, theta));
                }
            }
        }
    }
    let results = cases
        .par_iter()
        .map(|&(n, z, t, theta)| {
            let mut p = cfg.params().with_n(n);
            p.z = z;
            let momentum = DynamicalSensor::new(&p)?.qfi(t, theta)?;
            let dense = dense_evolve_qfi(&p, t, theta, default_dense_step(p.theta(theta)), ExchangeSign::Negated)?;
            let rel = (momentum - dense.value).abs() / momentum.abs().max(dense.value.abs()).max(1e-300);
            let pass = rel <= cfg.oracle_tolerance || (momentum - dense.value).abs() <= 1e-12;
            Ok((momentum, dense, rel, pass))
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let mut rows = Vec::new();
    let mut failed = 0;
    for (&(n, z, t, theta), (momentum, dense, rel, pass)) in cases.iter().zip(&results) {
        failed += !pass as usize;
        if dense.straddles {
            out.warn(format!(
                "N = {n}, Z = {z}, t = {t}, {}: dense stencil straddles an exceptional point",
                theta.name()
            ));
        }
        rows.push(vec![
            n.to_string(),
            z.to_string(),
            num(t),
            theta.name().to_string(),
            num(*momentum),
            num(dense.value),
            num(*rel),
            if *pass { "PASS" } else { "FAIL" }.to_string(),
        ]);
        println!(
            "N={n} Z={z} t={t} theta={}: momentum={momentum:.12e} dense={:.12e} rel={rel:.2e} {}",
            theta.name(),
            dense.value,
            if *pass { "PASS" } else { "FAIL" }
        );
    }
    out.csv(
        "oracle_check.csv",
        &["N", "Z", "t", "theta", "qfi_momentum", "qfi_dense", "rel_err", "status"],
        &rows,
    )?;
    println!("oracle-check: {}", if failed == 0 { "PASS" } else { "FAIL" });
    if failed > 0 {
        return Err(RunError::OracleMismatch(failed, cases.len()));
    }
    Ok(json!({ "comparisons": cases.len(), "tolerance": cfg.oracle_tolerance, "status": "PASS" }))
}
