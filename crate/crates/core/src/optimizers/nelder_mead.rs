//! Nelder-Mead simplex search over a masked coordinate subspace.

use std::time::Instant;

use super::{check_finite, NelderMeadConfig, Objective, OptimError, OptimizationTrace};
use crate::simulator::{ParameterMask, QaoaParams};

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;

/// Standard simplex method. The initial simplex is the start point plus one
/// `initial_step` offset per masked coordinate; iteration stops once both
/// the function spread falls under `f_tol` and the vertex spread under
/// `x_tol`, or when the evaluation budget runs out, in which case the result
/// is the best point seen so far flagged as unconverged.
pub fn nelder_mead_minimize(
    obj: &mut dyn Objective,
    init: &QaoaParams,
    cfg: &NelderMeadConfig,
    mask: &ParameterMask,
) -> Result<(QaoaParams, OptimizationTrace), OptimError> {
    cfg.validate()?;
    mask.matches_params(init)?;

    let started = Instant::now();
    let selected = mask.selected_indices();
    let dim = selected.len();
    let base_flat = init.flat();
    let embed = |x: &[f64]| {
        let mut flat = base_flat.clone();
        for (j, &coord) in selected.iter().enumerate() {
            flat[coord] = x[j];
        }
        flat
    };

    let mut evals: u64 = 0;
    let mut history = Vec::new();
    let mut best_x: Vec<f64>;
    let mut best_f: f64;

    let x0: Vec<f64> = selected.iter().map(|&c| base_flat[c]).collect();
    let f0 = {
        evals += 1;
        let v = obj.value(&embed(&x0))?;
        check_finite(v, 0, &history, &base_flat, f64::INFINITY, evals, started)?
    };
    history.push(f0);
    best_x = x0.clone();
    best_f = f0;

    // Simplex vertices as (point, value), kept sorted by value.
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.clone(), f0));
    for j in 0..dim {
        let mut x = x0.clone();
        x[j] += cfg.initial_step;
        evals += 1;
        let f = check_finite(
            obj.value(&embed(&x))?,
            0,
            &history,
            &embed(&best_x),
            best_f,
            evals,
            started,
        )?;
        if f < best_f {
            best_f = f;
            best_x = x.clone();
        }
        simplex.push((x, f));
    }

    let mut steps = 0usize;
    let mut converged = false;

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let f_best = simplex[0].1;
        let f_worst = simplex[dim].1;
        let x_spread = simplex
            .iter()
            .flat_map(|(x, _)| {
                x.iter()
                    .zip(&simplex[0].0)
                    .map(|(a, b)| (a - b).abs())
                    .collect::<Vec<_>>()
            })
            .fold(0.0f64, f64::max);
        if (f_worst - f_best).abs() <= cfg.f_tol && x_spread <= cfg.x_tol {
            converged = true;
            break;
        }
        if evals >= cfg.max_evals as u64 {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, &xi) in centroid.iter_mut().zip(x) {
                *c += xi / dim as f64;
            }
        }
        let worst = simplex[dim].clone();
        let point_along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + t * (c - w))
                .collect()
        };

        let eval_point = |obj: &mut dyn Objective,
                              x: &[f64],
                              evals: &mut u64,
                              best_x: &mut Vec<f64>,
                              best_f: &mut f64,
                              history: &[f64]|
         -> Result<f64, OptimError> {
            *evals += 1;
            let f = check_finite(
                obj.value(&embed(x))?,
                steps,
                history,
                &embed(best_x),
                *best_f,
                *evals,
                started,
            )?;
            if f < *best_f {
                *best_f = f;
                *best_x = x.to_vec();
            }
            Ok(f)
        };

        let xr = point_along(REFLECTION);
        let fr = eval_point(obj, &xr, &mut evals, &mut best_x, &mut best_f, &history)?;

        if fr < simplex[0].1 {
            // Try expanding past the reflection.
            let xe = point_along(EXPANSION);
            let fe = eval_point(obj, &xe, &mut evals, &mut best_x, &mut best_f, &history)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
        } else {
            let shrink_needed = if fr < worst.1 {
                let xc = point_along(CONTRACTION);
                let fc = eval_point(obj, &xc, &mut evals, &mut best_x, &mut best_f, &history)?;
                if fc <= fr {
                    simplex[dim] = (xc, fc);
                    false
                } else {
                    true
                }
            } else {
                let xc = point_along(-CONTRACTION);
                let fc = eval_point(obj, &xc, &mut evals, &mut best_x, &mut best_f, &history)?;
                if fc < worst.1 {
                    simplex[dim] = (xc, fc);
                    false
                } else {
                    true
                }
            };
            if shrink_needed {
                let anchor = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    for (xi, &ai) in vertex.0.iter_mut().zip(&anchor) {
                        *xi = ai + SHRINK * (*xi - ai);
                    }
                    let x = vertex.0.clone();
                    vertex.1 =
                        eval_point(obj, &x, &mut evals, &mut best_x, &mut best_f, &history)?;
                }
            }
        }

        steps += 1;
        let current_best = simplex
            .iter()
            .map(|(_, f)| *f)
            .fold(f64::INFINITY, f64::min);
        history.push(current_best);
    }

    let final_params = QaoaParams::from_flat(&embed(&best_x))?;
    let trace = OptimizationTrace {
        steps,
        history,
        wall_time_secs: started.elapsed().as_secs_f64().max(1e-9),
        final_params: final_params.clone(),
        best_objective: best_f,
        evals,
        converged,
    };
    Ok((final_params, trace))
}
