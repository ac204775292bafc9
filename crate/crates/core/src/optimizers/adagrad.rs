//! Adagrad with a fixed iteration budget.

use std::time::Instant;

use super::{check_finite, AdagradConfig, Objective, OptimError, OptimizationTrace};
use crate::simulator::{ParameterMask, QaoaParams};

/// Standard Adagrad on the masked coordinates: accumulate `G_i += g_i^2`,
/// then `θ_i -= lr * g_i / (sqrt(G_i) + eps)`. Runs exactly `max_iters`
/// iterations (no early stopping) and returns the best point seen. The trace
/// history holds the objective before any step and after every step.
pub fn adagrad_minimize(
    obj: &mut dyn Objective,
    init: &QaoaParams,
    cfg: &AdagradConfig,
    mask: &ParameterMask,
) -> Result<(QaoaParams, OptimizationTrace), OptimError> {
    cfg.validate()?;
    mask.matches_params(init)?;

    let started = Instant::now();
    let mut flat = init.flat();
    let mut evals: u64 = 1;
    let f0 = check_finite(obj.value(&flat)?, 0, &[], &flat, f64::INFINITY, evals, started)?;
    let mut history = Vec::with_capacity(cfg.max_iters + 1);
    history.push(f0);
    let mut best_flat = flat.clone();
    let mut best_f = f0;
    let mut accum = vec![0.0f64; flat.len()];
    let selected = mask.selected_indices();

    for iter in 0..cfg.max_iters {
        obj.rebase(&flat)?;
        let grad = obj.gradient(&flat, mask)?;
        evals += 2 * selected.len() as u64;
        for &i in &selected {
            let g = grad[i];
            if !g.is_finite() {
                return Err(check_finite(g, iter, &history, &best_flat, best_f, evals, started)
                    .unwrap_err());
            }
            accum[i] += g * g;
            flat[i] -= cfg.learning_rate * g / (accum[i].sqrt() + cfg.epsilon);
        }
        evals += 1;
        let f = check_finite(
            obj.value(&flat)?,
            iter + 1,
            &history,
            &best_flat,
            best_f,
            evals,
            started,
        )?;
        history.push(f);
        if f < best_f {
            best_f = f;
            best_flat.copy_from_slice(&flat);
        }
    }

    let final_params = QaoaParams::from_flat(&best_flat)?;
    let trace = OptimizationTrace {
        steps: cfg.max_iters,
        history,
        wall_time_secs: started.elapsed().as_secs_f64().max(1e-9),
        final_params: final_params.clone(),
        best_objective: best_f,
        evals,
        converged: true,
    };
    Ok((final_params, trace))
}
