//! Exact statevector simulation of the depth-p QAOA ansatz for diagonal
//! MaxCut Hamiltonians.
//!
//! Amplitudes are stored as split real/imaginary `f64` arrays in
//! little-endian basis order (qubit 0 is the least significant bit). The
//! cost Hamiltonian is represented by its diagonal, the cut table. Within a
//! layer the cost phase is applied before the mixer rotation; this order is
//! fixed and pinned by tests. All expectations are exact; there is no shot
//! sampling.

use num_complex::Complex64;
use thiserror::Error;

use crate::graphgen::Graph;

/// Largest qubit count for which a cut table may be built (2^26 reals).
pub const MAX_TABLE_N: usize = 26;

/// Central-difference step used by [`gradient`].
pub const GRADIENT_STEP: f64 = 1e-5;

/// Prefix states are cached only while `(p + 1) * 2^n` amplitudes stay under
/// this budget; beyond it every evaluation re-simulates from scratch.
const PREFIX_CACHE_BUDGET_BYTES: usize = 256 << 20;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("cut table refused for n = {n} (limit {limit})")]
    TableTooLarge { n: usize, limit: usize },
    #[error("dimension mismatch: state has {state} qubits, table has {table}")]
    DimensionMismatch { state: usize, table: usize },
    #[error("parameter arrays must both have length p >= 1, got {gammas} gammas and {betas} betas")]
    BadParamLengths { gammas: usize, betas: usize },
    #[error("non-finite parameter value")]
    NonFiniteParameter,
    #[error("mask length {got} does not match 2p = {expected}")]
    MaskLength { expected: usize, got: usize },
    #[error("mask selects no coordinates")]
    EmptyMask,
    #[error("approximation ratio undefined for c_max = {0}")]
    NonPositiveCmax(f64),
}

/// Variational angles of a depth-p ansatz.
#[derive(Debug, Clone, PartialEq)]
pub struct QaoaParams {
    gammas: Vec<f64>,
    betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self, SimError> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(SimError::BadParamLengths {
                gammas: gammas.len(),
                betas: betas.len(),
            });
        }
        if gammas.iter().chain(betas.iter()).any(|x| !x.is_finite()) {
            return Err(SimError::NonFiniteParameter);
        }
        Ok(Self { gammas, betas })
    }

    /// Rebuilds params from the flat coordinate order `γ_0..γ_{p-1}, β_0..β_{p-1}`.
    pub fn from_flat(flat: &[f64]) -> Result<Self, SimError> {
        if flat.is_empty() || !flat.len().is_multiple_of(2) {
            return Err(SimError::BadParamLengths {
                gammas: flat.len(),
                betas: 0,
            });
        }
        let p = flat.len() / 2;
        Self::new(flat[..p].to_vec(), flat[p..].to_vec())
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn gamma(&self, layer: usize) -> f64 {
        self.gammas[layer]
    }

    pub fn beta(&self, layer: usize) -> f64 {
        self.betas[layer]
    }

    /// Flat coordinate vector `γ_0..γ_{p-1}, β_0..β_{p-1}`.
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * self.depth());
        out.extend_from_slice(&self.gammas);
        out.extend_from_slice(&self.betas);
        out
    }
}

/// Selects a subset of the `2p` flat coordinates (`γ_0..γ_{p-1}, β_0..β_{p-1}`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterMask {
    bits: Vec<bool>,
}

impl ParameterMask {
    pub fn new(bits: Vec<bool>) -> Result<Self, SimError> {
        if !bits.iter().any(|&b| b) {
            return Err(SimError::EmptyMask);
        }
        Ok(Self { bits })
    }

    /// Selects all `2p` coordinates.
    pub fn full(p: usize) -> Self {
        Self {
            bits: vec![true; 2 * p],
        }
    }

    /// Selects exactly `(γ_layer, β_layer)` for a 0-based layer index.
    pub fn single_layer(p: usize, layer: usize) -> Self {
        assert!(layer < p, "layer {layer} out of range for depth {p}");
        let mut bits = vec![false; 2 * p];
        bits[layer] = true;
        bits[p + layer] = true;
        Self { bits }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn is_selected(&self, coord: usize) -> bool {
        self.bits[coord]
    }

    pub fn selected_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        (0..self.bits.len()).filter(|&i| self.bits[i]).collect()
    }

    pub fn matches_params(&self, params: &QaoaParams) -> Result<(), SimError> {
        if self.bits.len() != 2 * params.depth() {
            return Err(SimError::MaskLength {
                expected: 2 * params.depth(),
                got: self.bits.len(),
            });
        }
        Ok(())
    }
}

/// Precomputed diagonal of the cost Hamiltonian: `values[z]` is the cut
/// value of basis state `z`.
#[derive(Debug, Clone)]
pub struct CutTable {
    n: usize,
    values: Vec<f64>,
    // When every value is a small non-negative integer (unweighted graphs),
    // `levels[z] = values[z]` lets the cost layer use one phase table per
    // distinct cut value instead of a sin/cos per amplitude.
    levels: Option<Vec<u16>>,
}

impl CutTable {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Tabulates the cut value of every basis state. Edge weights are
/// accumulated in edge order, matching `graphgen::cut_value` bit for bit.
pub fn build_cut_table(g: &Graph) -> Result<CutTable, SimError> {
    let n = g.n();
    if n > MAX_TABLE_N {
        return Err(SimError::TableTooLarge {
            n,
            limit: MAX_TABLE_N,
        });
    }
    let size = 1usize << n;
    let mut values = vec![0.0f64; size];
    for e in g.edges() {
        let (u, v, w) = (e.u, e.v, e.w);
        for (z, val) in values.iter_mut().enumerate() {
            if ((z >> u) ^ (z >> v)) & 1 == 1 {
                *val += w;
            }
        }
    }
    let integral = values
        .iter()
        .all(|&v| v >= 0.0 && v <= f64::from(u16::MAX) && v.fract() == 0.0);
    let levels = integral.then(|| values.iter().map(|&v| v as u16).collect());
    Ok(CutTable { n, values, levels })
}

/// State of an n-qubit register, split into real and imaginary parts.
#[derive(Debug, Clone, PartialEq)]
pub struct Statevector {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl Statevector {
    pub fn n(&self) -> usize {
        self.n
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.re.len()
    }

    /// The computational basis state |z>.
    pub fn basis_state(n: usize, z: usize) -> Self {
        let size = 1usize << n;
        assert!(z < size);
        let mut re = vec![0.0; size];
        re[z] = 1.0;
        Self {
            n,
            re,
            im: vec![0.0; size],
        }
    }

    pub fn amplitude(&self, z: usize) -> Complex64 {
        Complex64::new(self.re[z], self.im[z])
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| Complex64::new(r, i))
            .collect()
    }

    pub fn probability(&self, z: usize) -> f64 {
        self.re[z] * self.re[z] + self.im[z] * self.im[z]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(&r, &i)| r * r + i * i)
            .sum()
    }

    fn copy_from(&mut self, other: &Statevector) {
        debug_assert_eq!(self.n, other.n);
        self.re.copy_from_slice(&other.re);
        self.im.copy_from_slice(&other.im);
    }
}

/// The uniform superposition |+>^(x)n: every amplitude is 2^(-n/2).
pub fn prepare_plus_state(n: usize) -> Statevector {
    let size = 1usize << n;
    // 1/size is an exact power of two, so the square root rounds correctly.
    let amp = (1.0 / size as f64).sqrt();
    Statevector {
        n,
        re: vec![amp; size],
        im: vec![0.0; size],
    }
}

/// Multiplies each amplitude by `exp(-i * gamma * C(z))`.
pub fn apply_cost_layer(s: &mut Statevector, t: &CutTable, gamma: f64) -> Result<(), SimError> {
    if s.n != t.n {
        return Err(SimError::DimensionMismatch {
            state: s.n,
            table: t.n,
        });
    }
    match &t.levels {
        Some(levels) => {
            let num_levels = usize::from(*levels.iter().max().unwrap_or(&0)) + 1;
            let mut cos_tab = vec![0.0f64; num_levels];
            let mut sin_tab = vec![0.0f64; num_levels];
            for (level, (c, sn)) in cos_tab.iter_mut().zip(sin_tab.iter_mut()).enumerate() {
                let (s_v, c_v) = (gamma * level as f64).sin_cos();
                *c = c_v;
                *sn = s_v;
            }
            for ((&lvl, r), i) in levels.iter().zip(s.re.iter_mut()).zip(s.im.iter_mut()) {
                let c = cos_tab[usize::from(lvl)];
                let sn = sin_tab[usize::from(lvl)];
                let (r0, i0) = (*r, *i);
                *r = r0 * c + i0 * sn;
                *i = i0 * c - r0 * sn;
            }
        }
        None => {
            // C(z) = C(~z) by construction, so one sin/cos serves the
            // complementary pair of basis states.
            let size = s.re.len();
            let mask = size - 1;
            for z in 0..size / 2 {
                let (sn, c) = (gamma * t.values[z]).sin_cos();
                for idx in [z, mask ^ z] {
                    let (r0, i0) = (s.re[idx], s.im[idx]);
                    s.re[idx] = r0 * c + i0 * sn;
                    s.im[idx] = i0 * c - r0 * sn;
                }
            }
        }
    }
    Ok(())
}

/// Applies `exp(-i * beta * X)` to every qubit: for each amplitude pair
/// differing in one bit, `(a0, a1) <- (cos b * a0 - i sin b * a1,
/// -i sin b * a0 + cos b * a1)`.
pub fn apply_mixer_layer(s: &mut Statevector, beta: f64) {
    let (sn, c) = beta.sin_cos();
    let size = s.re.len();
    for q in 0..s.n {
        let stride = 1usize << q;
        if stride == 1 {
            for (re, im) in s.re.chunks_exact_mut(2).zip(s.im.chunks_exact_mut(2)) {
                let (r0, i0, r1, i1) = (re[0], im[0], re[1], im[1]);
                re[0] = c * r0 + sn * i1;
                im[0] = c * i0 - sn * r1;
                re[1] = c * r1 + sn * i0;
                im[1] = c * i1 - sn * r0;
            }
        } else {
            let step = stride << 1;
            let mut base = 0;
            while base < size {
                let (re_lo, re_hi) = s.re[base..base + step].split_at_mut(stride);
                let (im_lo, im_hi) = s.im[base..base + step].split_at_mut(stride);
                for idx in 0..stride {
                    let (r0, i0, r1, i1) = (re_lo[idx], im_lo[idx], re_hi[idx], im_hi[idx]);
                    re_lo[idx] = c * r0 + sn * i1;
                    im_lo[idx] = c * i0 - sn * r1;
                    re_hi[idx] = c * r1 + sn * i0;
                    im_hi[idx] = c * i1 - sn * r0;
                }
                base += step;
            }
        }
    }
}

fn apply_layers_from(
    s: &mut Statevector,
    t: &CutTable,
    params: &QaoaParams,
    first_layer: usize,
) -> Result<(), SimError> {
    for layer in first_layer..params.depth() {
        apply_cost_layer(s, t, params.gamma(layer))?;
        apply_mixer_layer(s, params.beta(layer));
    }
    Ok(())
}

/// Prepares |+>^(x)n and applies cost-then-mixer for each of the p layers.
pub fn run_ansatz(t: &CutTable, params: &QaoaParams) -> Result<Statevector, SimError> {
    let mut s = prepare_plus_state(t.n);
    apply_layers_from(&mut s, t, params, 0)?;
    Ok(s)
}

/// `<psi|H_C|psi> = sum_z |a_z|^2 C(z)`.
pub fn expectation(s: &Statevector, t: &CutTable) -> Result<f64, SimError> {
    if s.n != t.n {
        return Err(SimError::DimensionMismatch {
            state: s.n,
            table: t.n,
        });
    }
    let mut total = 0.0;
    for ((&r, &i), &v) in s.re.iter().zip(&s.im).zip(&t.values) {
        total += (r * r + i * i) * v;
    }
    Ok(total)
}

/// Approximation ratio `r = <H_C> / C_max`; rejects degenerate `C_max <= 0`.
pub fn approximation_ratio(exp_val: f64, c_max: f64) -> Result<f64, SimError> {
    if c_max <= 0.0 || !c_max.is_finite() {
        return Err(SimError::NonPositiveCmax(c_max));
    }
    Ok(exp_val / c_max)
}

/// Central finite differences of the expectation with step `h = 1e-5` for
/// every masked coordinate; unmasked coordinates report exactly 0.
pub fn gradient(
    t: &CutTable,
    params: &QaoaParams,
    mask: &ParameterMask,
) -> Result<Vec<f64>, SimError> {
    mask.matches_params(params)?;
    let mut evaluator = ExpectationEvaluator::new(t, params.clone())?;
    let mut grad = vec![0.0; 2 * params.depth()];
    let flat = params.flat();
    for coord in mask.selected_indices() {
        let mut plus = flat.clone();
        plus[coord] += GRADIENT_STEP;
        let mut minus = flat.clone();
        minus[coord] -= GRADIENT_STEP;
        let f_plus = evaluator.expectation_at(&QaoaParams::from_flat(&plus)?)?;
        let f_minus = evaluator.expectation_at(&QaoaParams::from_flat(&minus)?)?;
        grad[coord] = (f_plus - f_minus) / (2.0 * GRADIENT_STEP);
    }
    Ok(grad)
}

/// Repeated-evaluation workspace. Holds the per-layer prefix states of a
/// base parameter vector so that evaluations differing from the base only
/// from some layer onward re-simulate just the suffix. Results are bit-for-bit
/// identical to [`run_ansatz`] + [`expectation`]; only the work is shared.
pub struct ExpectationEvaluator<'a> {
    table: &'a CutTable,
    base: QaoaParams,
    // prefixes[j] is the state after the first j layers; present only while
    // the cache fits the memory budget.
    prefixes: Option<Vec<Statevector>>,
    scratch: Statevector,
    base_expectation: f64,
    evals: u64,
}

impl<'a> ExpectationEvaluator<'a> {
    pub fn new(table: &'a CutTable, params: QaoaParams) -> Result<Self, SimError> {
        let p = params.depth();
        let size = 1usize << table.n;
        let cache_bytes = (p + 1) * size * 2 * std::mem::size_of::<f64>();
        let prefixes = if cache_bytes <= PREFIX_CACHE_BUDGET_BYTES {
            let mut states = Vec::with_capacity(p + 1);
            states.push(prepare_plus_state(table.n));
            for layer in 0..p {
                let mut next = states[layer].clone();
                apply_cost_layer(&mut next, table, params.gamma(layer))?;
                apply_mixer_layer(&mut next, params.beta(layer));
                states.push(next);
            }
            Some(states)
        } else {
            None
        };
        let scratch = prepare_plus_state(table.n);
        let base_expectation = match &prefixes {
            Some(states) => expectation(&states[p], table)?,
            None => {
                let s = run_ansatz(table, &params)?;
                expectation(&s, table)?
            }
        };
        Ok(Self {
            table,
            base: params,
            prefixes,
            scratch,
            base_expectation,
            evals: 1,
        })
    }

    pub fn base_params(&self) -> &QaoaParams {
        &self.base
    }

    pub fn base_expectation(&self) -> f64 {
        self.base_expectation
    }

    /// Number of distinct statevector simulations performed so far.
    pub fn evals(&self) -> u64 {
        self.evals
    }

    fn first_divergent_layer(&self, params: &QaoaParams) -> usize {
        let p = self.base.depth();
        for layer in 0..p {
            if params.gamma(layer) != self.base.gamma(layer)
                || params.beta(layer) != self.base.beta(layer)
            {
                return layer;
            }
        }
        p
    }

    /// Expectation at `params`, reusing cached prefixes where the leading
    /// layers agree with the base parameters.
    pub fn expectation_at(&mut self, params: &QaoaParams) -> Result<f64, SimError> {
        assert_eq!(params.depth(), self.base.depth(), "depth mismatch");
        let first = self.first_divergent_layer(params);
        if first == self.base.depth() {
            return Ok(self.base_expectation);
        }
        self.evals += 1;
        match &self.prefixes {
            Some(states) => self.scratch.copy_from(&states[first]),
            None => {
                self.scratch = prepare_plus_state(self.table.n);
                apply_layers_from(&mut self.scratch, self.table, params, 0)?;
                return expectation(&self.scratch, self.table);
            }
        }
        apply_layers_from(&mut self.scratch, self.table, params, first)?;
        expectation(&self.scratch, self.table)
    }

    /// Replaces the base parameters, recomputing prefixes from the first
    /// layer that changed.
    pub fn set_base(&mut self, params: QaoaParams) -> Result<(), SimError> {
        assert_eq!(params.depth(), self.base.depth(), "depth mismatch");
        let first = self.first_divergent_layer(&params);
        let p = params.depth();
        if first == p {
            return Ok(());
        }
        self.evals += 1;
        if let Some(states) = &mut self.prefixes {
            for layer in first..p {
                let (done, todo) = states.split_at_mut(layer + 1);
                todo[0].copy_from(&done[layer]);
                apply_cost_layer(&mut todo[0], self.table, params.gamma(layer))?;
                apply_mixer_layer(&mut todo[0], params.beta(layer));
            }
            self.base_expectation = expectation(&states[p], self.table)?;
        } else {
            let s = run_ansatz(self.table, &params)?;
            self.base_expectation = expectation(&s, self.table)?;
        }
        self.base = params;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphgen::{
        assign_gaussian_weights, cut_value, exact_maxcut, generate_graph, Edge, FamilyTag,
        GraphFamily,
    };
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single_edge_graph() -> Graph {
        Graph::new(2, vec![Edge { u: 0, v: 1, w: 1.0 }], FamilyTag::U3r, 0).unwrap()
    }

    fn triangle() -> Graph {
        Graph::new(
            3,
            vec![
                Edge { u: 0, v: 1, w: 1.0 },
                Edge { u: 0, v: 2, w: 1.0 },
                Edge { u: 1, v: 2, w: 1.0 },
            ],
            FamilyTag::U3r,
            0,
        )
        .unwrap()
    }

    /// Closed form for the single-edge p=1 expectation.
    fn single_edge_expectation(gamma: f64, beta: f64) -> f64 {
        0.5 + 0.5 * (4.0 * beta).sin() * gamma.sin()
    }

    fn random_params(p: usize, seed: u64) -> QaoaParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gammas = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
        let betas = (0..p).map(|_| rng.random_range(-3.0..3.0)).collect();
        QaoaParams::new(gammas, betas).unwrap()
    }

    #[test]
    fn cut_table_small_cases() {
        let t = build_cut_table(&single_edge_graph()).unwrap();
        assert_eq!(t.values(), &[0.0, 1.0, 1.0, 0.0]);
        let t = build_cut_table(&triangle()).unwrap();
        assert_eq!(t.values(), &[0.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 0.0]);
    }

    #[test]
    fn cut_table_max_matches_exact_maxcut() {
        for tag in FamilyTag::ALL {
            let fam = GraphFamily::with_defaults(tag);
            for seed in 0..4 {
                let g = generate_graph(&fam, 8, seed).unwrap();
                let t = build_cut_table(&g).unwrap();
                assert_eq!(t.max_value(), exact_maxcut(&g).unwrap().c_max);
            }
        }
    }

    #[test]
    fn plus_state_amplitudes_and_norm() {
        let s = prepare_plus_state(1);
        // The pinned digits 0.7071067811865476 are exactly FRAC_1_SQRT_2.
        assert_eq!(s.amplitude(0).re, std::f64::consts::FRAC_1_SQRT_2);
        assert_eq!(s.amplitude(1).re, std::f64::consts::FRAC_1_SQRT_2);
        let s = prepare_plus_state(2);
        assert!(s.amplitudes().iter().all(|a| a.re == 0.5 && a.im == 0.0));
        for n in [1, 4, 8, 12, 20] {
            assert_abs_diff_eq!(prepare_plus_state(n).norm_sqr(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn cost_layer_identity_and_pi_phase() {
        let t = build_cut_table(&single_edge_graph()).unwrap();
        let mut s = prepare_plus_state(2);
        apply_cost_layer(&mut s, &t, 0.0).unwrap();
        assert!(s.amplitudes().iter().all(|a| a.re == 0.5 && a.im == 0.0));

        apply_cost_layer(&mut s, &t, std::f64::consts::PI).unwrap();
        let a = s.amplitudes();
        assert_abs_diff_eq!(a[0].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(a[1].re, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(a[2].re, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(a[3].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn cost_layer_levels_and_generic_paths_agree() {
        // Same topology; the unit-weight table takes the integer-level path,
        // the half-weight table the generic sin/cos path. Phases at gamma
        // and 2*gamma respectively must coincide.
        let g = generate_graph(&GraphFamily::U3r, 8, 5).unwrap();
        let halved = assign_gaussian_weights(&g, 0.5, 0.0, 0).unwrap();
        let t_int = build_cut_table(&g).unwrap();
        let t_gen = build_cut_table(&halved).unwrap();
        assert!(t_int.levels.is_some());
        assert!(t_gen.levels.is_none());
        let mut a = prepare_plus_state(8);
        let mut b = prepare_plus_state(8);
        apply_cost_layer(&mut a, &t_int, 0.4).unwrap();
        apply_cost_layer(&mut b, &t_gen, 0.8).unwrap();
        for z in 0..a.len() {
            assert_abs_diff_eq!(a.amplitude(z).re, b.amplitude(z).re, epsilon = 1e-13);
            assert_abs_diff_eq!(a.amplitude(z).im, b.amplitude(z).im, epsilon = 1e-13);
        }
    }

    #[test]
    fn mixer_single_qubit_cases() {
        let mut s = Statevector::basis_state(1, 0);
        apply_mixer_layer(&mut s, 0.0);
        assert_eq!(s.amplitude(0), Complex64::new(1.0, 0.0));

        let mut s = Statevector::basis_state(1, 0);
        apply_mixer_layer(&mut s, std::f64::consts::FRAC_PI_4);
        assert_abs_diff_eq!(s.amplitude(0).re, std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).im, -std::f64::consts::FRAC_1_SQRT_2, epsilon = 1e-15);

        let mut s = Statevector::basis_state(1, 0);
        apply_mixer_layer(&mut s, std::f64::consts::FRAC_PI_2);
        assert_abs_diff_eq!(s.amplitude(0).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.amplitude(1).im, -1.0, epsilon = 1e-15);
    }

    #[test]
    fn ansatz_with_zero_params_is_uniform() {
        let t = build_cut_table(&triangle()).unwrap();
        let params = QaoaParams::new(vec![0.0; 4], vec![0.0; 4]).unwrap();
        let s = run_ansatz(&t, &params).unwrap();
        let amp = 1.0 / (8.0f64).sqrt();
        for z in 0..8 {
            assert_abs_diff_eq!(s.amplitude(z).re, amp, epsilon = 1e-15);
            assert_abs_diff_eq!(s.amplitude(z).im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_edge_closed_form_optimum() {
        let t = build_cut_table(&single_edge_graph()).unwrap();
        let params = QaoaParams::new(
            vec![std::f64::consts::FRAC_PI_2],
            vec![std::f64::consts::PI / 8.0],
        )
        .unwrap();
        let s = run_ansatz(&t, &params).unwrap();
        assert_abs_diff_eq!(expectation(&s, &t).unwrap(), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn single_edge_closed_form_random_points() {
        let t = build_cut_table(&single_edge_graph()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let gamma = rng.random_range(-6.0..6.0);
            let beta = rng.random_range(-3.0..3.0);
            let params = QaoaParams::new(vec![gamma], vec![beta]).unwrap();
            let s = run_ansatz(&t, &params).unwrap();
            assert_abs_diff_eq!(
                expectation(&s, &t).unwrap(),
                single_edge_expectation(gamma, beta),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn uniform_expectation_is_half_edge_count() {
        let g = generate_graph(&GraphFamily::U3r, 8, 2).unwrap();
        let t = build_cut_table(&g).unwrap();
        let s = prepare_plus_state(8);
        assert_abs_diff_eq!(
            expectation(&s, &t).unwrap(),
            g.edges().len() as f64 / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn norm_preserved_by_deep_circuits() {
        let g = generate_graph(&GraphFamily::with_defaults(FamilyTag::Wer), 16, 1).unwrap();
        let t = build_cut_table(&g).unwrap();
        let s = run_ansatz(&t, &random_params(15, 3)).unwrap();
        assert_abs_diff_eq!(s.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn layer_order_is_cost_then_mixer() {
        // Swapping the order within a layer must change the expectation;
        // this pins the convention.
        let g = triangle();
        let t = build_cut_table(&g).unwrap();
        let (gamma, beta) = (0.7, 0.4);

        let mut fixed = prepare_plus_state(3);
        apply_cost_layer(&mut fixed, &t, gamma).unwrap();
        apply_mixer_layer(&mut fixed, beta);

        let mut swapped = prepare_plus_state(3);
        apply_mixer_layer(&mut swapped, beta);
        apply_cost_layer(&mut swapped, &t, gamma).unwrap();

        let e_fixed = expectation(&fixed, &t).unwrap();
        let e_swapped = expectation(&swapped, &t).unwrap();
        assert!((e_fixed - e_swapped).abs() > 1e-3);

        let params = QaoaParams::new(vec![gamma], vec![beta]).unwrap();
        let s = run_ansatz(&t, &params).unwrap();
        assert_eq!(expectation(&s, &t).unwrap(), e_fixed);
    }

    #[test]
    fn expectation_matches_naive_per_basis_sum() {
        for tag in [FamilyTag::U3r, FamilyTag::Wer] {
            let fam = GraphFamily::with_defaults(tag);
            for seed in 0..3 {
                let g = generate_graph(&fam, 10, seed).unwrap();
                let t = build_cut_table(&g).unwrap();
                let s = run_ansatz(&t, &random_params(4, seed)).unwrap();
                // Independent sum: recompute C(z) per basis state from edges.
                let mut naive = 0.0;
                for z in 0..s.len() {
                    let bits: Vec<bool> = (0..10).map(|i| (z >> i) & 1 == 1).collect();
                    naive += s.probability(z) * cut_value(&g, &bits).unwrap();
                }
                assert_abs_diff_eq!(expectation(&s, &t).unwrap(), naive, epsilon = 1e-10);
            }
        }
    }

    /// Dense-matrix oracle: builds the mixer as a Kronecker power and the
    /// cost unitary from per-basis cut values, then multiplies them out.
    fn kron_ansatz_oracle(g: &Graph, params: &QaoaParams) -> Vec<Complex64> {
        let n = g.n();
        let size = 1usize << n;
        let mut state = vec![Complex64::new((size as f64).sqrt().recip(), 0.0); size];
        for layer in 0..params.depth() {
            let gamma = params.gamma(layer);
            for (z, amp) in state.iter_mut().enumerate() {
                let bits: Vec<bool> = (0..n).map(|i| (z >> i) & 1 == 1).collect();
                let c = cut_value(g, &bits).unwrap();
                *amp *= Complex64::from_polar(1.0, -gamma * c);
            }
            let beta = params.beta(layer);
            let x = [
                [
                    Complex64::new(beta.cos(), 0.0),
                    Complex64::new(0.0, -beta.sin()),
                ],
                [
                    Complex64::new(0.0, -beta.sin()),
                    Complex64::new(beta.cos(), 0.0),
                ],
            ];
            let mut matrix = vec![vec![Complex64::new(1.0, 0.0)]];
            for _ in 0..n {
                let dim = matrix.len();
                let mut next = vec![vec![Complex64::new(0.0, 0.0); 2 * dim]; 2 * dim];
                for (i, row) in matrix.iter().enumerate() {
                    for (j, &val) in row.iter().enumerate() {
                        for a in 0..2 {
                            for b in 0..2 {
                                next[a * dim + i][b * dim + j] = x[a][b] * val;
                            }
                        }
                    }
                }
                matrix = next;
            }
            let mut out = vec![Complex64::new(0.0, 0.0); size];
            for (i, row) in matrix.iter().enumerate() {
                for (j, &val) in row.iter().enumerate() {
                    out[i] += val * state[j];
                }
            }
            state = out;
        }
        state
    }

    #[test]
    fn ansatz_matches_kron_matrix_oracle() {
        for (tag, seed) in [
            (FamilyTag::U3r, 0u64),
            (FamilyTag::Wer, 1),
            (FamilyTag::Uba, 2),
        ] {
            let mut fam = GraphFamily::with_defaults(tag);
            if let GraphFamily::Uba { m } | GraphFamily::Wba { m, .. } = &mut fam {
                *m = 3;
            }
            let g = generate_graph(&fam, 6, seed).unwrap();
            let t = build_cut_table(&g).unwrap();
            let params = random_params(3, seed);
            let fast = run_ansatz(&t, &params).unwrap();
            let oracle = kron_ansatz_oracle(&g, &params);
            for (z, expected) in oracle.iter().enumerate() {
                assert_abs_diff_eq!(fast.amplitude(z).re, expected.re, epsilon = 1e-12);
                assert_abs_diff_eq!(fast.amplitude(z).im, expected.im, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn expectation_invariant_under_bit_complement() {
        let g = generate_graph(&GraphFamily::with_defaults(FamilyTag::W3r), 8, 4).unwrap();
        let t = build_cut_table(&g).unwrap();
        let s = run_ansatz(&t, &random_params(5, 9)).unwrap();
        let mask = s.len() - 1;
        let mut flipped = s.clone();
        for z in 0..s.len() {
            flipped.re[z] = s.re[mask ^ z];
            flipped.im[z] = s.im[mask ^ z];
        }
        assert_abs_diff_eq!(
            expectation(&s, &t).unwrap(),
            expectation(&flipped, &t).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn parameter_periodicity_on_unweighted_graphs() {
        use std::f64::consts::PI;
        let g = generate_graph(&GraphFamily::U3r, 8, 6).unwrap();
        let t = build_cut_table(&g).unwrap();
        let base = QaoaParams::new(vec![0.9], vec![0.3]).unwrap();
        let e0 = expectation(&run_ansatz(&t, &base).unwrap(), &t).unwrap();
        let shifted_gamma = QaoaParams::new(vec![0.9 + 2.0 * PI], vec![0.3]).unwrap();
        let shifted_beta = QaoaParams::new(vec![0.9], vec![0.3 + PI]).unwrap();
        let e1 = expectation(&run_ansatz(&t, &shifted_gamma).unwrap(), &t).unwrap();
        let e2 = expectation(&run_ansatz(&t, &shifted_beta).unwrap(), &t).unwrap();
        assert_abs_diff_eq!(e0, e1, epsilon = 1e-10);
        assert_abs_diff_eq!(e0, e2, epsilon = 1e-10);
    }

    #[test]
    fn approximation_ratio_cases() {
        assert_eq!(approximation_ratio(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(approximation_ratio(3.25, 3.25).unwrap(), 1.0);
        assert!(approximation_ratio(0.5, 0.0).is_err());
        assert!(approximation_ratio(0.5, -1.0).is_err());
    }

    #[test]
    fn gradient_stationary_and_analytic_points() {
        let t = build_cut_table(&single_edge_graph()).unwrap();
        let zero = QaoaParams::new(vec![0.0], vec![0.0]).unwrap();
        let g = gradient(&t, &zero, &ParameterMask::full(1)).unwrap();
        assert!(g.iter().all(|&x| x.abs() < 1e-6), "gradient {g:?}");

        let params = QaoaParams::new(
            vec![std::f64::consts::FRAC_PI_2],
            vec![std::f64::consts::PI / 16.0],
        )
        .unwrap();
        let g = gradient(&t, &params, &ParameterMask::full(1)).unwrap();
        assert_abs_diff_eq!(g[1], 2.0f64.sqrt(), epsilon = 1e-4);
    }

    #[test]
    fn gradient_respects_mask() {
        let g = generate_graph(&GraphFamily::U3r, 6, 1).unwrap();
        let t = build_cut_table(&g).unwrap();
        let params = random_params(3, 7);
        let mask = ParameterMask::single_layer(3, 1);
        let grad = gradient(&t, &params, &mask).unwrap();
        for (coord, &g) in grad.iter().enumerate() {
            if !mask.is_selected(coord) {
                assert_eq!(g, 0.0);
            }
        }
        assert!(mask.selected_indices().iter().any(|&c| grad[c] != 0.0));
    }

    #[test]
    fn gradient_matches_analytic_on_random_points() {
        let t = build_cut_table(&single_edge_graph()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..50 {
            let gamma: f64 = rng.random_range(-3.0..3.0);
            let beta: f64 = rng.random_range(-1.5..1.5);
            let params = QaoaParams::new(vec![gamma], vec![beta]).unwrap();
            let grad = gradient(&t, &params, &ParameterMask::full(1)).unwrap();
            let d_gamma = 0.5 * (4.0 * beta).sin() * gamma.cos();
            let d_beta = 2.0 * (4.0 * beta).cos() * gamma.sin();
            assert_abs_diff_eq!(grad[0], d_gamma, epsilon = 1e-4);
            assert_abs_diff_eq!(grad[1], d_beta, epsilon = 1e-4);
        }
    }

    #[test]
    fn evaluator_matches_plain_ansatz_bitwise() {
        let g = generate_graph(&GraphFamily::with_defaults(FamilyTag::Wer), 8, 3).unwrap();
        let t = build_cut_table(&g).unwrap();
        let base = random_params(6, 1);
        let mut eval = ExpectationEvaluator::new(&t, base.clone()).unwrap();

        let plain = expectation(&run_ansatz(&t, &base).unwrap(), &t).unwrap();
        assert_eq!(eval.base_expectation(), plain);
        assert_eq!(eval.expectation_at(&base).unwrap(), plain);

        // Single-coordinate perturbations resume mid-circuit; results must
        // stay bit-identical to a from-scratch simulation.
        for coord in 0..12 {
            let mut flat = base.flat();
            flat[coord] += 0.317;
            let probe = QaoaParams::from_flat(&flat).unwrap();
            let expected = expectation(&run_ansatz(&t, &probe).unwrap(), &t).unwrap();
            assert_eq!(eval.expectation_at(&probe).unwrap(), expected);
        }

        let next = random_params(6, 2);
        eval.set_base(next.clone()).unwrap();
        let plain_next = expectation(&run_ansatz(&t, &next).unwrap(), &t).unwrap();
        assert_eq!(eval.base_expectation(), plain_next);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let t = build_cut_table(&triangle()).unwrap();
        let mut s = prepare_plus_state(2);
        assert!(apply_cost_layer(&mut s, &t, 0.1).is_err());
        assert!(expectation(&s, &t).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(QaoaParams::new(vec![], vec![]).is_err());
        assert!(QaoaParams::new(vec![0.1], vec![0.1, 0.2]).is_err());
        assert!(QaoaParams::new(vec![f64::NAN], vec![0.1]).is_err());
        assert!(ParameterMask::new(vec![false, false]).is_err());
        let m = ParameterMask::single_layer(15, 6);
        assert_eq!(m.selected_indices(), vec![6, 21]);
    }

    #[test]
    fn cut_table_guard() {
        let g = Graph::new(
            MAX_TABLE_N + 1,
            vec![Edge { u: 0, v: 1, w: 1.0 }],
            FamilyTag::U3r,
            0,
        )
        .unwrap();
        assert!(matches!(
            build_cut_table(&g),
            Err(SimError::TableTooLarge { .. })
        ));
    }
}
