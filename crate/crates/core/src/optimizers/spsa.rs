//! Simultaneous perturbation stochastic approximation.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_finite, Objective, OptimError, OptimizationTrace, SpsaConfig};
use crate::simulator::{ParameterMask, QaoaParams};

/// SPSA with gain schedules `a_k = a / (A + k + 1)^alpha` and
/// `c_k = c / (k + 1)^gamma_exp` and Rademacher perturbations over the
/// masked coordinates. Deterministic per seed; returns the best point among
/// everything it evaluated (iterates and probes).
pub fn spsa_minimize(
    obj: &mut dyn Objective,
    init: &QaoaParams,
    cfg: &SpsaConfig,
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

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut x: Vec<f64> = selected.iter().map(|&c| base_flat[c]).collect();
    let mut evals: u64 = 1;
    let mut history = Vec::with_capacity(cfg.max_iters + 1);
    let f0 = check_finite(
        obj.value(&embed(&x))?,
        0,
        &history,
        &base_flat,
        f64::INFINITY,
        evals,
        started,
    )?;
    history.push(f0);
    let mut best_x = x.clone();
    let mut best_f = f0;

    for k in 0..cfg.max_iters {
        let a_k = cfg.a / (cfg.big_a + k as f64 + 1.0).powf(cfg.alpha);
        let c_k = cfg.c / (k as f64 + 1.0).powf(cfg.gamma_exp);
        let delta: Vec<f64> = (0..dim)
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();

        let plus: Vec<f64> = x.iter().zip(&delta).map(|(&xi, &d)| xi + c_k * d).collect();
        let minus: Vec<f64> = x.iter().zip(&delta).map(|(&xi, &d)| xi - c_k * d).collect();
        let probe = |obj: &mut dyn Objective,
                         pt: &[f64],
                         evals: &mut u64,
                         best_x: &mut Vec<f64>,
                         best_f: &mut f64|
         -> Result<f64, OptimError> {
            *evals += 1;
            let f = check_finite(
                obj.value(&embed(pt))?,
                k,
                &history,
                &embed(best_x),
                *best_f,
                *evals,
                started,
            )?;
            if f < *best_f {
                *best_f = f;
                *best_x = pt.to_vec();
            }
            Ok(f)
        };
        let f_plus = probe(obj, &plus, &mut evals, &mut best_x, &mut best_f)?;
        let f_minus = probe(obj, &minus, &mut evals, &mut best_x, &mut best_f)?;

        for (xi, &d) in x.iter_mut().zip(&delta) {
            let g_hat = (f_plus - f_minus) / (2.0 * c_k * d);
            *xi -= a_k * g_hat;
        }
        let f = probe(obj, &x.clone(), &mut evals, &mut best_x, &mut best_f)?;
        history.push(f);
    }

    let final_params = QaoaParams::from_flat(&embed(&best_x))?;
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
