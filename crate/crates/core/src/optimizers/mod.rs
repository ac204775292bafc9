//! Objective construction with regularization and the optimizer suite:
//! Adagrad for full optimization, Nelder-Mead and SPSA as gradient-free
//! methods. Every optimizer works on the subset of coordinates selected by a
//! [`ParameterMask`]; unselected coordinates are bitwise untouched.
//!
//! The cut operator is maximized, so all optimizers minimize
//! `-<H_C> + lambda * R(params)`; approximation ratios are derived from the
//! positive expectation.

mod adagrad;
mod nelder_mead;
mod spsa;

pub use adagrad::adagrad_minimize;
pub use nelder_mead::nelder_mead_minimize;
pub use spsa::spsa_minimize;

pub use crate::simulator::ParameterMask;

use thiserror::Error;

use crate::simulator::{
    expectation, run_ansatz, CutTable, ExpectationEvaluator, QaoaParams, SimError,
};

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("objective returned a non-finite value after {steps} steps")]
    NonFiniteObjective {
        steps: usize,
        trace: Box<OptimizationTrace>,
    },
    #[error("invalid optimizer config: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Penalty family and strength; `lambda = 0` behaves exactly like `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularizer {
    pub kind: RegKind,
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegKind {
    None,
    L1,
    L2,
    Smooth,
}

impl RegKind {
    pub const ALL: [RegKind; 4] = [RegKind::None, RegKind::L1, RegKind::L2, RegKind::Smooth];

    pub fn as_str(&self) -> &'static str {
        match self {
            RegKind::None => "none",
            RegKind::L1 => "l1",
            RegKind::L2 => "l2",
            RegKind::Smooth => "smooth",
        }
    }
}

impl std::fmt::Display for RegKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for RegKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" | "nr" => Ok(RegKind::None),
            "l1" => Ok(RegKind::L1),
            "l2" => Ok(RegKind::L2),
            "smooth" | "sm" => Ok(RegKind::Smooth),
            other => Err(format!("unknown regularizer '{other}'")),
        }
    }
}

impl Regularizer {
    pub fn new(kind: RegKind, lambda: f64) -> Result<Self, OptimError> {
        if lambda < 0.0 || !lambda.is_finite() {
            return Err(OptimError::BadConfig(format!(
                "regularization strength must be >= 0, got {lambda}"
            )));
        }
        Ok(Self { kind, lambda })
    }

    pub fn none() -> Self {
        Self {
            kind: RegKind::None,
            lambda: 0.0,
        }
    }

    pub fn l2(lambda: f64) -> Self {
        Self {
            kind: RegKind::L2,
            lambda,
        }
    }

    pub fn is_active(&self) -> bool {
        self.kind != RegKind::None && self.lambda != 0.0
    }
}

/// Penalty value over all coordinates; the strength `lambda` is applied by
/// the caller.
pub fn regularizer_value(params: &QaoaParams, reg: &Regularizer) -> f64 {
    penalty_value(params, reg.kind, None)
}

/// Penalty restricted to masked coordinates. For the smoothness kind a
/// difference term enters when either of its endpoints is selected, so a
/// single-layer mask still feels its neighbors.
pub fn regularizer_value_masked(
    params: &QaoaParams,
    reg: &Regularizer,
    mask: &ParameterMask,
) -> f64 {
    penalty_value(params, reg.kind, Some(mask))
}

fn penalty_value(params: &QaoaParams, kind: RegKind, mask: Option<&ParameterMask>) -> f64 {
    let p = params.depth();
    let selected = |coord: usize| mask.is_none_or(|m| m.is_selected(coord));
    match kind {
        RegKind::None => 0.0,
        RegKind::L1 | RegKind::L2 => {
            let mut total = 0.0;
            for i in 0..p {
                if selected(i) {
                    let g = params.gamma(i);
                    total += if kind == RegKind::L1 { g.abs() } else { g * g };
                }
                if selected(p + i) {
                    let b = params.beta(i);
                    total += if kind == RegKind::L1 { b.abs() } else { b * b };
                }
            }
            total
        }
        RegKind::Smooth => {
            let mut total = 0.0;
            for i in 0..p.saturating_sub(1) {
                if selected(i) || selected(i + 1) {
                    let d = params.gamma(i + 1) - params.gamma(i);
                    total += d * d;
                }
                if selected(p + i) || selected(p + i + 1) {
                    let d = params.beta(i + 1) - params.beta(i);
                    total += d * d;
                }
            }
            total
        }
    }
}

/// Minimization target: `-<H_C>` plus the full-vector penalty.
pub fn objective(t: &CutTable, params: &QaoaParams, reg: &Regularizer) -> Result<f64, OptimError> {
    let e = expectation(&run_ansatz(t, params)?, t)?;
    if reg.is_active() {
        Ok(-e + reg.lambda * regularizer_value(params, reg))
    } else {
        Ok(-e)
    }
}

/// A function of the flat coordinate vector that optimizers minimize.
pub trait Objective {
    fn value(&mut self, flat: &[f64]) -> Result<f64, OptimError>;

    /// Central finite differences over the masked coordinates, two
    /// evaluations per coordinate; unmasked entries are exactly 0.
    fn gradient(&mut self, flat: &[f64], mask: &ParameterMask) -> Result<Vec<f64>, OptimError> {
        let h = crate::simulator::GRADIENT_STEP;
        let mut grad = vec![0.0; flat.len()];
        let mut probe = flat.to_vec();
        for coord in mask.selected_indices() {
            probe[coord] = flat[coord] + h;
            let plus = self.value(&probe)?;
            probe[coord] = flat[coord] - h;
            let minus = self.value(&probe)?;
            probe[coord] = flat[coord];
            grad[coord] = (plus - minus) / (2.0 * h);
        }
        Ok(grad)
    }

    /// Hint that the optimizer has moved its current iterate; lets caching
    /// objectives re-anchor. No-op by default.
    fn rebase(&mut self, _flat: &[f64]) -> Result<(), OptimError> {
        Ok(())
    }
}

/// The QAOA minimization target `-<H_C> + lambda * R`, with the penalty
/// optionally restricted to a coordinate mask (the single-layer objective
/// penalizes only the free layer's pair). Holds a prefix-caching evaluator,
/// so probes that share leading layers with the current base are cheap.
pub struct QaoaObjective<'a> {
    evaluator: ExpectationEvaluator<'a>,
    reg: Regularizer,
    penalty_mask: Option<ParameterMask>,
}

impl<'a> QaoaObjective<'a> {
    pub fn new(
        table: &'a CutTable,
        init: &QaoaParams,
        reg: Regularizer,
        penalty_mask: Option<ParameterMask>,
    ) -> Result<Self, OptimError> {
        if let Some(mask) = &penalty_mask {
            mask.matches_params(init)?;
        }
        Ok(Self {
            evaluator: ExpectationEvaluator::new(table, init.clone())?,
            reg,
            penalty_mask,
        })
    }

    /// Raw expectation at `params` (no sign flip, no penalty).
    pub fn expectation_at(&mut self, params: &QaoaParams) -> Result<f64, OptimError> {
        Ok(self.evaluator.expectation_at(params)?)
    }

    pub fn evals(&self) -> u64 {
        self.evaluator.evals()
    }

    fn penalty(&self, params: &QaoaParams) -> f64 {
        if !self.reg.is_active() {
            return 0.0;
        }
        self.reg.lambda * penalty_value(params, self.reg.kind, self.penalty_mask.as_ref())
    }
}

impl Objective for QaoaObjective<'_> {
    fn value(&mut self, flat: &[f64]) -> Result<f64, OptimError> {
        let params = QaoaParams::from_flat(flat)?;
        let e = self.evaluator.expectation_at(&params)?;
        Ok(-e + self.penalty(&params))
    }

    fn rebase(&mut self, flat: &[f64]) -> Result<(), OptimError> {
        Ok(self.evaluator.set_base(QaoaParams::from_flat(flat)?)?)
    }
}

/// Adagrad settings; the iteration budget is fixed, there is no early
/// stopping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdagradConfig {
    pub learning_rate: f64,
    pub epsilon: f64,
    pub max_iters: usize,
}

impl Default for AdagradConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epsilon: 1e-8,
            max_iters: 100,
        }
    }
}

impl AdagradConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if self.learning_rate <= 0.0 || self.epsilon <= 0.0
            || self.learning_rate.is_nan() || self.epsilon.is_nan()
        {
            return Err(OptimError::BadConfig(format!(
                "adagrad needs positive lr and epsilon, got lr={} eps={}",
                self.learning_rate, self.epsilon
            )));
        }
        Ok(())
    }
}

/// Nelder-Mead settings: standard simplex coefficients (reflection 1,
/// expansion 2, contraction 1/2, shrink 1/2) with an initial per-coordinate
/// step and dual tolerance stop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadConfig {
    pub max_evals: usize,
    pub x_tol: f64,
    pub f_tol: f64,
    pub initial_step: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_evals: 200,
            x_tol: 1e-6,
            f_tol: 1e-8,
            initial_step: 0.1,
        }
    }
}

impl NelderMeadConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        let positive = |x: f64| x > 0.0;
        if self.max_evals == 0
            || ![self.x_tol, self.f_tol, self.initial_step].into_iter().all(positive)
        {
            return Err(OptimError::BadConfig(
                "nelder-mead needs positive budget, tolerances, and step".into(),
            ));
        }
        Ok(())
    }
}

/// SPSA settings with the standard gain schedules
/// `a_k = a/(A+k+1)^alpha`, `c_k = c/(k+1)^gamma_exp`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpsaConfig {
    pub a: f64,
    pub c: f64,
    pub big_a: f64,
    pub alpha: f64,
    pub gamma_exp: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for SpsaConfig {
    fn default() -> Self {
        Self {
            a: 0.2,
            c: 0.1,
            big_a: 50.0,
            alpha: 0.602,
            gamma_exp: 0.101,
            max_iters: 500,
            seed: 0,
        }
    }
}

impl SpsaConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        if self.a <= 0.0 || self.c <= 0.0 || self.a.is_nan() || self.c.is_nan() || self.big_a < 0.0 {
            return Err(OptimError::BadConfig(
                "spsa needs positive gains and non-negative stability constant".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerConfig {
    Adagrad(AdagradConfig),
    NelderMead(NelderMeadConfig),
    Spsa(SpsaConfig),
}

impl OptimizerConfig {
    pub fn name(&self) -> &'static str {
        match self {
            OptimizerConfig::Adagrad(_) => "adagrad",
            OptimizerConfig::NelderMead(_) => "nelder-mead",
            OptimizerConfig::Spsa(_) => "spsa",
        }
    }

    pub fn validate(&self) -> Result<(), OptimError> {
        match self {
            OptimizerConfig::Adagrad(c) => c.validate(),
            OptimizerConfig::NelderMead(c) => c.validate(),
            OptimizerConfig::Spsa(c) => c.validate(),
        }
    }
}

/// What an optimizer did: step count, the objective after every step
/// (history entry 0 is the starting value, so its length is `steps + 1`),
/// wall time around the loop, and the best parameters found.
#[derive(Debug, Clone)]
pub struct OptimizationTrace {
    pub steps: usize,
    pub history: Vec<f64>,
    pub wall_time_secs: f64,
    pub final_params: QaoaParams,
    pub best_objective: f64,
    pub evals: u64,
    pub converged: bool,
}

/// Dispatches to the configured optimizer. All of them return the best
/// parameters seen anywhere in the run, never a worse-than-start point.
pub fn minimize(
    obj: &mut dyn Objective,
    init: &QaoaParams,
    cfg: &OptimizerConfig,
    mask: &ParameterMask,
) -> Result<(QaoaParams, OptimizationTrace), OptimError> {
    match cfg {
        OptimizerConfig::Adagrad(c) => adagrad_minimize(obj, init, c, mask),
        OptimizerConfig::NelderMead(c) => nelder_mead_minimize(obj, init, c, mask),
        OptimizerConfig::Spsa(c) => spsa_minimize(obj, init, c, mask),
    }
}

pub(crate) fn check_finite(
    value: f64,
    steps: usize,
    history: &[f64],
    best_flat: &[f64],
    best_objective: f64,
    evals: u64,
    started: std::time::Instant,
) -> Result<f64, OptimError> {
    if value.is_finite() {
        return Ok(value);
    }
    let final_params = QaoaParams::from_flat(best_flat)?;
    Err(OptimError::NonFiniteObjective {
        steps,
        trace: Box::new(OptimizationTrace {
            steps,
            history: history.to_vec(),
            wall_time_secs: started.elapsed().as_secs_f64().max(1e-9),
            final_params,
            best_objective,
            evals,
            converged: false,
        }),
    })
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{Edge, FamilyTag, Graph};
    use crate::simulator::build_cut_table;
    use approx::assert_abs_diff_eq;

    fn params_2() -> QaoaParams {
        QaoaParams::new(vec![0.5, 0.3], vec![0.1, 0.2]).unwrap()
    }

    fn single_edge_table() -> CutTable {
        let g = Graph::new(2, vec![Edge { u: 0, v: 1, w: 1.0 }], FamilyTag::U3r, 0).unwrap();
        build_cut_table(&g).unwrap()
    }

    #[test]
    fn regularizer_values_worked_example() {
        let p = params_2();
        let l1 = Regularizer::new(RegKind::L1, 1.0).unwrap();
        let l2 = Regularizer::new(RegKind::L2, 1.0).unwrap();
        let sm = Regularizer::new(RegKind::Smooth, 1.0).unwrap();
        assert_abs_diff_eq!(regularizer_value(&p, &l1), 1.1, epsilon = 1e-15);
        assert_abs_diff_eq!(regularizer_value(&p, &l2), 0.39, epsilon = 1e-15);
        assert_abs_diff_eq!(regularizer_value(&p, &sm), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn regularizer_zero_and_empty_cases() {
        let zero = QaoaParams::new(vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        for kind in RegKind::ALL {
            let reg = Regularizer::new(kind, 1.0).unwrap();
            assert_eq!(regularizer_value(&zero, &reg), 0.0);
        }
        // p = 1 smoothness is an empty sum.
        let single = QaoaParams::new(vec![0.7], vec![0.9]).unwrap();
        let sm = Regularizer::new(RegKind::Smooth, 1.0).unwrap();
        assert_eq!(regularizer_value(&single, &sm), 0.0);
        assert!(Regularizer::new(RegKind::L2, -0.1).is_err());
    }

    #[test]
    fn masked_penalty_excludes_unselected_coordinates() {
        let p = params_2();
        let mask = ParameterMask::single_layer(2, 1);
        let l2 = Regularizer::l2(1.0);
        // Only γ_1 = 0.3 and β_1 = 0.2 enter.
        assert_abs_diff_eq!(
            regularizer_value_masked(&p, &l2, &mask),
            0.09 + 0.04,
            epsilon = 1e-15
        );
        let l1 = Regularizer::new(RegKind::L1, 1.0).unwrap();
        assert_abs_diff_eq!(
            regularizer_value_masked(&p, &l1, &mask),
            0.5,
            epsilon = 1e-15
        );
        // Smoothness keeps the difference terms touching the selected layer.
        let sm = Regularizer::new(RegKind::Smooth, 1.0).unwrap();
        assert_abs_diff_eq!(
            regularizer_value_masked(&p, &sm, &mask),
            0.05,
            epsilon = 1e-15
        );
    }

    #[test]
    fn objective_zero_params_single_edge() {
        let t = single_edge_table();
        let params = QaoaParams::new(vec![0.0], vec![0.0]).unwrap();
        let obj = objective(&t, &params, &Regularizer::none()).unwrap();
        assert_abs_diff_eq!(obj, -0.5, epsilon = 1e-12);
    }

    #[test]
    fn objective_applies_lambda_l2() {
        let t = single_edge_table();
        let params = QaoaParams::new(vec![1.0], vec![1.0]).unwrap();
        let plain = objective(&t, &params, &Regularizer::none()).unwrap();
        let reg = objective(&t, &params, &Regularizer::l2(1e-4)).unwrap();
        assert_abs_diff_eq!(reg - plain, 2e-4, epsilon = 1e-15);
    }

    #[test]
    fn objective_with_lambda_zero_is_negated_expectation() {
        let t = single_edge_table();
        let params = QaoaParams::new(vec![0.8], vec![0.4]).unwrap();
        let a = objective(&t, &params, &Regularizer::none()).unwrap();
        let b = objective(&t, &params, &Regularizer::l2(0.0)).unwrap();
        assert_eq!(a, b);
        let e = expectation(&run_ansatz(&t, &params).unwrap(), &t).unwrap();
        assert_eq!(a, -e);
    }

    #[test]
    fn regularized_objective_never_below_unregularized() {
        let t = single_edge_table();
        for kind in RegKind::ALL {
            for seed in 0..5u64 {
                let x = 0.3 + 0.17 * seed as f64;
                let params = QaoaParams::new(vec![x], vec![-x / 2.0]).unwrap();
                let plain = objective(&t, &params, &Regularizer::none()).unwrap();
                let reg = Regularizer::new(kind, 1e-3).unwrap();
                let val = objective(&t, &params, &reg).unwrap();
                assert!(val >= plain - 1e-15, "{kind:?}");
            }
        }
    }

    #[test]
    fn qaoa_objective_masked_penalty_matches_algorithmic_form() {
        let g = crate::graphgen::generate_graph(&crate::graphgen::GraphFamily::U3r, 6, 1).unwrap();
        let t = build_cut_table(&g).unwrap();
        let init = crate::params::tqa_init(4, 0.75).unwrap();
        let k = 2usize;
        let mask = ParameterMask::single_layer(4, k);
        let mut obj =
            QaoaObjective::new(&t, &init, Regularizer::l2(1e-4), Some(mask.clone())).unwrap();
        let flat = init.flat();
        let got = obj.value(&flat).unwrap();
        let e = expectation(&run_ansatz(&t, &init).unwrap(), &t).unwrap();
        let penalty = 1e-4 * (init.gamma(k).powi(2) + init.beta(k).powi(2));
        assert_abs_diff_eq!(got, -e + penalty, epsilon = 1e-14);
    }
}
