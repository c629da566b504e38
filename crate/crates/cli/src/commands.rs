use std::collections::BTreeMap;
use std::path::Path;

use halfline::verify::{
    ansatz_m, decay_report, green_bound_report, instability_report, lemma_initial_data_check,
    lemma_wave_interaction_check, WaveInteraction,
};
use halfline::{
    find_boundary_pole, green_column, green_leading, invert_laplace_green, make_initial_data,
    solve_nonlinear, solve_streaming, BoundaryClass, Dynamics, Matrix2, ModelParams, Status,
    Trajectory, VerificationReport,
};
use rayon::prelude::*;

use crate::config::{Evaluator, RunConfig};
use crate::error::{exit, CliError, Result};
use crate::output::{self, load_trajectory, num, Manifest, Output, SnapshotEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Which {
    Theorem1,
    Instability,
    Decay,
    Ansatz,
    Lemma41,
    Lemma42,
    Lemma43,
    All,
}

pub fn green_eval(
    cfg: &RunConfig,
    cli_points: &[[f64; 3]],
    cli_evaluators: &[Evaluator],
    out: &mut Output,
) -> Result<i32> {
    let ge = &cfg.green_eval;
    let points = if !cli_points.is_empty() {
        cli_points.to_vec()
    } else if let Some(g) = ge.grid {
        g.points()
    } else if !ge.points.is_empty() {
        ge.points.clone()
    } else {
        return Err(CliError::config(
            "no evaluation points: pass --point x,y,t or set green_eval.points or green_eval.grid",
        ));
    };
    let evaluators = if cli_evaluators.is_empty() {
        &ge.evaluators[..]
    } else {
        cli_evaluators
    };
    if evaluators.is_empty() {
        return Err(CliError::config("no evaluators selected"));
    }
    let p = &cfg.model;

    let mut columns = Vec::new();
    for &e in evaluators {
        let values: Vec<Matrix2> = match e {
            Evaluator::Leading => points
                .par_iter()
                .map(|&[x, y, t]| green_leading(x, y, t, p).map(|k| k.smooth))
                .collect::<halfline::Result<_>>()?,
            Evaluator::LaplaceOracle => points
                .par_iter()
                .map(|&[x, y, t]| invert_laplace_green(x, y, t, p, &cfg.transforms))
                .collect::<halfline::Result<_>>()?,
            Evaluator::PdeOracle => pde_oracle(cfg, &points)?,
        };
        columns.push(values);
    }

    let mut header = vec!["x".to_string(), "y".into(), "t".into()];
    for e in evaluators {
        for entry in ["g11", "g12", "g21", "g22"] {
            header.push(format!("{}_{entry}", e.as_str()));
        }
    }
    let rows: Vec<Vec<String>> = points
        .iter()
        .enumerate()
        .map(|(i, pt)| {
            let mut r: Vec<String> = pt.iter().map(|v| num(*v)).collect();
            for col in &columns {
                r.extend(col[i].entries().iter().map(|v| num(*v)));
            }
            r
        })
        .collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("green_eval.csv", &header, &rows)?;
    println!(
        "green-eval: {} points x {} evaluators",
        points.len(),
        evaluators.len()
    );
    Ok(exit::PASS)
}

/// Columns of the Green's function from narrow-pulse runs, one pair per
/// source point `y`, linearly interpolated in `x`.
fn pde_oracle(cfg: &RunConfig, points: &[[f64; 3]]) -> Result<Vec<Matrix2>> {
    let ge = &cfg.green_eval;
    let grid = ge.pde_grid;
    let width = ge.pulse_width.unwrap_or(4.0 * grid.dx());

    let mut by_y: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for &[_, y, t] in points {
        by_y.entry(y.to_bits()).or_default().push(t);
    }
    let runs: Vec<(u64, [Trajectory; 2])> = by_y
        .into_par_iter()
        .map(|(yb, mut ts)| {
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            let mut sc = cfg.solver.clone();
            sc.grid = grid;
            sc.t_end = *ts.last().expect("at least one time");
            sc.output_times = ts;
            let y = f64::from_bits(yb);
            let a = green_column(y, 0, width, &cfg.model, &sc)?;
            let b = green_column(y, 1, width, &cfg.model, &sc)?;
            Ok((yb, [a, b]))
        })
        .collect::<halfline::Result<_>>()?;
    let runs: BTreeMap<u64, [Trajectory; 2]> = runs.into_iter().collect();

    points
        .iter()
        .map(|&[x, y, t]| {
            let [a, b] = &runs[&y.to_bits()];
            let (sa, sb) = (a.at(t).expect("snapshot"), b.at(t).expect("snapshot"));
            let s = (x - grid.origin) / grid.dx();
            if !(s >= 0.0 && s <= grid.nx as f64) {
                return Err(CliError::config(format!(
                    "x = {x} lies outside the pde grid"
                )));
            }
            let j = (s.floor() as usize).min(grid.nx - 1);
            let w = s - j as f64;
            let lerp = |v: &[f64]| (1.0 - w) * v[j] + w * v[j + 1];
            Ok(Matrix2::new(
                lerp(&sa.rho),
                lerp(&sb.rho),
                lerp(&sa.m),
                lerp(&sb.m),
            ))
        })
        .collect()
}

pub fn solve(
    cfg: &RunConfig,
    kind: Dynamics,
    plot_data: bool,
    out: &mut Output,
    manifest: &mut Manifest,
) -> Result<i32> {
    let grid = cfg.solver.grid;
    let init = make_initial_data(&cfg.initial, &grid, &cfg.model)?;
    manifest.grid = Some(grid);

    let mut last_good = None;
    let result = solve_streaming(kind, &init, &cfg.model, &cfg.solver, |s, d| {
        let index = manifest.snapshots.len();
        let written = output::write_snapshot(out, index, &grid, s).and_then(|rel| {
            if plot_data {
                output::write_plot_data(out, index, &grid, s)?;
            }
            Ok(rel)
        });
        let rel = written.map_err(|e| halfline::Error::Io(std::io::Error::other(e.to_string())))?;
        last_good = Some(out.root().join(&rel));
        manifest.snapshots.push(SnapshotEntry { t: s.t, file: rel });
        manifest.diagnostics.push(*d);
        Ok(())
    });
    match result {
        Ok(()) => {
            println!("solve: {} snapshots", manifest.snapshots.len());
            Ok(exit::PASS)
        }
        Err(e @ halfline::Error::Divergence { .. }) => Err(CliError::Diverged {
            source: e,
            last_good,
        }),
        Err(e) => Err(e.into()),
    }
}

fn trajectory_for_decay(cfg: &RunConfig, stored: Option<&Path>) -> Result<Trajectory> {
    if let Some(dir) = stored {
        return load_trajectory(dir);
    }
    let sc = &cfg.verify.decay.solver;
    let init = make_initial_data(&cfg.initial, &sc.grid, &cfg.model)?;
    Ok(solve_nonlinear(&init, &cfg.model, sc)?)
}

pub fn verify(
    cfg: &RunConfig,
    which: Which,
    stored: Option<&Path>,
    out: &mut Output,
    manifest: &mut Manifest,
) -> Result<i32> {
    let want = |w: Which| which == Which::All || which == w;
    let v = &cfg.verify;
    let p = &cfg.model;
    let mut reports: Vec<(String, VerificationReport)> = Vec::new();

    if want(Which::Theorem1) {
        for &alpha in &v.theorem1.alphas {
            let r = green_bound_report(
                p,
                &v.theorem1.grid,
                alpha,
                &v.theorem1.envelope,
                &cfg.transforms,
            )?;
            reports.push((format!("theorem1-alpha{alpha}"), r));
        }
    }
    if want(Which::Instability) {
        let pu = if p.boundary_class() == BoundaryClass::MixedUnstable {
            *p
        } else {
            ModelParams::new(p.c, p.nu, v.instability.a1, v.instability.a2)?
        };
        reports.push((
            "instability".into(),
            instability_report(&pu, &v.instability.solver)?,
        ));
    }
    if want(Which::Decay) || want(Which::Ansatz) {
        let traj = trajectory_for_decay(cfg, stored)?;
        if want(Which::Decay) {
            reports.push((
                "decay".into(),
                decay_report(&traj, p, &v.decay.p_list, v.decay.window)?,
            ));
        }
        if want(Which::Ansatz) {
            reports.push(("ansatz".into(), ansatz_m(&traj, p)?.report(p)));
        }
    }
    if want(Which::Lemma41) {
        let l = &v.lemma41;
        reports.push((
            "lemma41".into(),
            lemma_initial_data_check(l.d0, l.r, l.e, &l.grid)?,
        ));
    }
    for (w, tag) in [(Which::Lemma42, "lemma42"), (Which::Lemma43, "lemma43")] {
        if !want(w) {
            continue;
        }
        let wc = if w == Which::Lemma42 {
            &v.lemma42
        } else {
            &v.lemma43
        };
        for &[a, ap, b] in &wc.cases {
            let spec = if w == Which::Lemma42 {
                WaveInteraction::same_speed(a, ap, b, wc.nu, wc.lambda)
            } else {
                WaveInteraction::cross_speed(a, ap, b, wc.nu, wc.lambda, wc.lambda_prime)
            };
            reports.push((
                format!("{tag}-{a}-{ap}-{b}"),
                lemma_wave_interaction_check(&spec, &wc.grid)?,
            ));
        }
    }

    let mut code = exit::PASS;
    for (stem, mut r) in reports {
        if !r.rows.is_empty() {
            let rel = format!("verify/{stem}.csv");
            let path = out.path(&rel)?;
            r.write_table(&path)?;
            if let Some(a) = r.artifacts.last_mut() {
                *a = rel;
            }
        }
        r.write_json(&out.path(&format!("verify/{stem}.json"))?)?;
        let line = format!("{stem}: {:?}{}", r.status, headline(&r));
        println!("{line}");
        manifest.summary.push(line);
        code = match (code, r.status) {
            (_, Status::Fail) | (exit::FAIL, _) => exit::FAIL,
            (_, Status::Inconclusive) => exit::INCONCLUSIVE,
            (c, Status::Pass) => c,
        };
    }
    Ok(code)
}

fn headline(r: &VerificationReport) -> String {
    let mut parts = Vec::new();
    if let Some(s) = r.sup_ratio {
        parts.push(format!("sup ratio {:.4} -> {:.4}", s.coarse, s.fine));
    }
    for f in &r.fits {
        parts.push(format!("{} slope {:.3}", f.label, f.slope));
    }
    if let Some(m) = r.metrics.get("measured_rate") {
        parts.push(format!("rate {m:.4}"));
    }
    if let Some(why) = &r.inconclusive {
        parts.push(why.clone());
    }
    if parts.is_empty() {
        String::new()
    } else {
        format!(" ({})", parts.join(", "))
    }
}

pub fn stability_map(cfg: &RunConfig, out: &mut Output) -> Result<i32> {
    let m = &cfg.stability_map;
    let (c, nu) = (cfg.model.c, cfg.model.nu);
    let mut rows = Vec::new();
    let mut unstable = 0;
    for a1 in m.a1.points() {
        for a2 in m.a2.points() {
            let (class, pole) = match ModelParams::new(c, nu, a1, a2) {
                Ok(p) => (p.boundary_class().as_str(), find_boundary_pole(&p)),
                Err(_) => ("invalid", None),
            };
            unstable += pole.is_some() as usize;
            rows.push(vec![
                num(a1),
                num(a2),
                class.to_string(),
                pole.map(|s| num(s.re)).unwrap_or_default(),
                pole.map(|s| num(s.im)).unwrap_or_default(),
            ]);
        }
    }
    out.csv(
        "stability_map.csv",
        &["a1", "a2", "class", "pole_re", "pole_im"],
        &rows,
    )?;
    println!(
        "stability-map: {} cells, {unstable} with a growing boundary mode",
        rows.len()
    );
    Ok(exit::PASS)
}
