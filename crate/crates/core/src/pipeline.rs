//! End-to-end experimental procedures: train a donor, transfer its
//! parameters to larger acceptors, pick and refine a single targeted layer,
//! run the full-optimization baseline, and collect the accuracy / time /
//! efficiency records.
//!
//! All randomness is derived from a master seed through fixed stream tags
//! (see [`crate::seeds`]), so any study, and any single record inside it, is
//! exactly reproducible. Wall-clock timings are the only non-deterministic
//! outputs.

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::graphgen::{
    exact_maxcut, generate_graph, FamilyTag, Graph, GraphError, GraphFamily,
};
use crate::optimizers::{
    adagrad_minimize, minimize, AdagradConfig, OptimError, OptimizationTrace, OptimizerConfig,
    QaoaObjective, RegKind, Regularizer,
};
use crate::params::{transfer_init, BankEntry, BankKey, ParameterBank, ParamsError};
use crate::seeds::{self, domain};
use crate::simulator::{
    approximation_ratio, build_cut_table, CutTable, ExpectationEvaluator, ParameterMask,
    QaoaParams, SimError,
};

/// Bound on regenerations of instances whose exact MaxCut is non-positive
/// (possible in principle for signed-weight graphs, vanishingly rare).
const CMAX_RESAMPLE_LIMIT: u64 = 32;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("invalid study config: {0}")]
    BadConfig(String),
    #[error("target layer {k} outside 1..={p}")]
    BadLayer { k: usize, p: usize },
    #[error("efficiency undefined for wall time {0}")]
    BadTau(f64),
    #[error("exact MaxCut stayed non-positive after {0} resamples")]
    CmaxResamples(u64),
    #[error("approximation ratio {r} outside [0, 1] for graph seed {seed}")]
    RatioOutOfRange { r: f64, seed: u64 },
}

/// Paper defaults for the targeted layer, 1-based. The weighted BA family
/// has no published layer; it follows the wER choice and is overridable.
pub fn default_target_layer(tag: FamilyTag) -> usize {
    match tag {
        FamilyTag::U3r => 7,
        FamilyTag::Uba => 5,
        FamilyTag::Uer => 2,
        FamilyTag::W3r => 11,
        FamilyTag::Wba | FamilyTag::Wer => 2,
    }
}

/// How the study picks the layer to refine.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetLayer {
    /// The family's published layer (see [`default_target_layer`]).
    FamilyDefault,
    /// An explicit 1-based layer index.
    Explicit(usize),
    /// Run the layer-selection procedure first and use its modal layer.
    FromSelection,
}

/// Full description of a family study; every field lands in the manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub family: GraphFamily,
    pub donor_n: usize,
    pub donor_seed: u64,
    pub acceptor_sizes: Vec<usize>,
    pub graphs_per_size: usize,
    pub repetitions: usize,
    pub depth: usize,
    pub tqa_dt: f64,
    pub tqa_index_base: u8,
    pub adagrad: AdagradConfig,
    pub single_layer_optimizer: OptimizerConfig,
    pub regularizer: Regularizer,
    pub target_layer: TargetLayer,
    pub master_seed: u64,
}

impl StudyConfig {
    /// Paper-style defaults for one family: 8-node donor, TQA(0.75), p = 15,
    /// Adagrad(0.1, 1e-8, 100), Nelder-Mead single-layer refinement, L2
    /// regularization at 1e-4, 40 graphs per size, sizes 8..=24.
    pub fn defaults(family: GraphFamily) -> Self {
        Self {
            family,
            donor_n: 8,
            donor_seed: 1,
            acceptor_sizes: (8..=24).step_by(2).collect(),
            graphs_per_size: 40,
            repetitions: 1,
            depth: 15,
            tqa_dt: 0.75,
            tqa_index_base: 0,
            adagrad: AdagradConfig::default(),
            single_layer_optimizer: OptimizerConfig::NelderMead(Default::default()),
            regularizer: Regularizer::l2(1e-4),
            target_layer: TargetLayer::FamilyDefault,
            master_seed: 1,
        }
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.acceptor_sizes.is_empty() {
            return Err(PipelineError::BadConfig("no acceptor sizes".into()));
        }
        let min_size = *self.acceptor_sizes.iter().min().unwrap();
        if self.donor_n > min_size {
            return Err(PipelineError::BadConfig(format!(
                "donor size {} exceeds smallest acceptor size {min_size}",
                self.donor_n
            )));
        }
        if self.repetitions == 0 {
            return Err(PipelineError::BadConfig("repetitions must be >= 1".into()));
        }
        if self.depth == 0 {
            return Err(PipelineError::BadConfig("depth must be >= 1".into()));
        }
        if self.graphs_per_size == 0 {
            return Err(PipelineError::BadConfig(
                "graphs_per_size must be >= 1".into(),
            ));
        }
        if let TargetLayer::Explicit(k) = self.target_layer {
            if k == 0 || k > self.depth {
                return Err(PipelineError::BadLayer {
                    k,
                    p: self.depth,
                });
            }
        }
        self.adagrad.validate()?;
        self.single_layer_optimizer.validate()?;
        Ok(())
    }
}

/// Short hex digest of the donor-training configuration, stored in bank
/// entries so stale donors are detectable.
pub fn donor_config_digest(
    family: &GraphFamily,
    donor_n: usize,
    depth: usize,
    tqa_dt: f64,
    tqa_index_base: u8,
    adagrad: &AdagradConfig,
    reg: &Regularizer,
) -> String {
    let text = format!(
        "family={:?} n_d={donor_n} p={depth} dt={tqa_dt} base={tqa_index_base} \
         lr={} eps={} iters={} reg={} lambda={}",
        family,
        adagrad.learning_rate,
        adagrad.epsilon,
        adagrad.max_iters,
        reg.kind,
        reg.lambda
    );
    let digest = Sha256::digest(text.as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// A generated instance together with its exact solution.
pub struct PreparedGraph {
    pub graph: Graph,
    pub table: CutTable,
    pub c_max: f64,
    /// Instances regenerated because their exact MaxCut was non-positive.
    pub resampled: u64,
}

/// Generates a graph and rejects (with an incremented sub-seed) the rare
/// signed-weight instances whose exact MaxCut is not positive.
pub fn prepare_graph(
    family: &GraphFamily,
    n: usize,
    seed: u64,
) -> Result<PreparedGraph, PipelineError> {
    for attempt in 0..CMAX_RESAMPLE_LIMIT {
        let graph_seed = if attempt == 0 {
            seed
        } else {
            seeds::derive(seed, domain::GRAPH_RETRY, 0xc0de, attempt)
        };
        let graph = generate_graph(family, n, graph_seed)?;
        let cut = exact_maxcut(&graph)?;
        if cut.c_max > 0.0 {
            let table = build_cut_table(&graph)?;
            return Ok(PreparedGraph {
                graph,
                table,
                c_max: cut.c_max,
                resampled: attempt,
            });
        }
    }
    Err(PipelineError::CmaxResamples(CMAX_RESAMPLE_LIMIT))
}

/// Donor training result: the bank entry plus bookkeeping for manifests.
pub struct DonorTraining {
    pub key: BankKey,
    pub entry: BankEntry,
    pub trace: OptimizationTrace,
    pub resampled: u64,
}

/// Generates the donor graph, TQA-initializes, runs full-mask Adagrad on the
/// regularized objective, and packages the optimized parameters as a bank
/// entry (donor r_f included).
#[allow(clippy::too_many_arguments)]
pub fn train_donor(
    family: &GraphFamily,
    donor_n: usize,
    depth: usize,
    tqa_dt: f64,
    tqa_index_base: u8,
    adagrad: &AdagradConfig,
    reg: &Regularizer,
    seed: u64,
) -> Result<DonorTraining, PipelineError> {
    let prepared = prepare_graph(family, donor_n, seed)?;
    let init = crate::params::tqa_init_indexed(depth, tqa_dt, tqa_index_base)?;
    let mask = ParameterMask::full(depth);
    let mut objective = QaoaObjective::new(&prepared.table, &init, *reg, None)?;
    let (optimized, trace) = adagrad_minimize(&mut objective, &init, adagrad, &mask)?;
    let donor_rf = approximation_ratio(objective.expectation_at(&optimized)?, prepared.c_max)?;
    let key = BankKey {
        family: family.tag(),
        donor_n,
        depth,
    };
    let entry = BankEntry {
        params: optimized,
        donor_seed: seed,
        donor_rf,
        config_digest: donor_config_digest(
            family,
            donor_n,
            depth,
            tqa_dt,
            tqa_index_base,
            adagrad,
            reg,
        ),
        trained_at: 0,
    };
    Ok(DonorTraining {
        key,
        entry,
        trace,
        resampled: prepared.resampled,
    })
}

/// Approximation ratio of the transferred parameters with no optimization.
pub fn evaluate_transfer(acceptor: &Graph, donor: &QaoaParams) -> Result<f64, PipelineError> {
    let table = build_cut_table(acceptor)?;
    let c_max = exact_maxcut(acceptor)?.c_max;
    let evaluator = ExpectationEvaluator::new(&table, donor.clone())?;
    Ok(approximation_ratio(evaluator.base_expectation(), c_max)?)
}

/// Result of refining one layer (or the full vector) after transfer.
pub struct RefinementResult {
    pub ratio: f64,
    pub params: QaoaParams,
    pub trace: OptimizationTrace,
}

/// Optimizes only `(γ_k, β_k)` (paper's 1-based layer `k`) from the
/// transferred point, penalizing just that pair, and returns the ratio of
/// the re-evaluated state. The transferred point itself is kept whenever the
/// optimizer's penalty trade-off would end below it, so the result never
/// falls under the no-optimization ratio.
pub fn targeted_single_layer(
    table: &CutTable,
    c_max: f64,
    transferred: &QaoaParams,
    layer_k: usize,
    reg: &Regularizer,
    gf: &OptimizerConfig,
) -> Result<RefinementResult, PipelineError> {
    let p = transferred.depth();
    if layer_k == 0 || layer_k > p {
        return Err(PipelineError::BadLayer { k: layer_k, p });
    }
    let mask = ParameterMask::single_layer(p, layer_k - 1);
    let mut objective = QaoaObjective::new(table, transferred, *reg, Some(mask.clone()))?;
    let (candidate, trace) = minimize(&mut objective, transferred, gf, &mask)?;
    let r_start = approximation_ratio(objective.expectation_at(transferred)?, c_max)?;
    let r_candidate = approximation_ratio(objective.expectation_at(&candidate)?, c_max)?;
    let (ratio, params) = if r_candidate >= r_start {
        (r_candidate, candidate)
    } else {
        (r_start, transferred.clone())
    };
    Ok(RefinementResult {
        ratio,
        params,
        trace,
    })
}

/// Full-mask Adagrad from the transferred parameters on the regularized
/// objective; returns the ratio at the best parameters found.
pub fn full_optimize_acceptor(
    table: &CutTable,
    c_max: f64,
    transferred: &QaoaParams,
    reg: &Regularizer,
    adagrad: &AdagradConfig,
) -> Result<RefinementResult, PipelineError> {
    let mask = ParameterMask::full(transferred.depth());
    let mut objective = QaoaObjective::new(table, transferred, *reg, None)?;
    let (params, trace) = adagrad_minimize(&mut objective, transferred, adagrad, &mask)?;
    let ratio = approximation_ratio(objective.expectation_at(&params)?, c_max)?;
    Ok(RefinementResult {
        ratio,
        params,
        trace,
    })
}

/// Improvement over the transferred initialization per second of optimizer
/// wall time.
pub fn efficiency(r: f64, r_n: f64, tau: f64) -> Result<f64, PipelineError> {
    if tau <= 0.0 || tau.is_nan() {
        return Err(PipelineError::BadTau(tau));
    }
    Ok((r - r_n) / tau)
}

/// Win frequencies of each layer in the selection procedure.
#[derive(Debug, Clone)]
pub struct LayerSelectionMatrix {
    pub sizes: Vec<usize>,
    pub depth: usize,
    /// `probabilities[row][k-1]` = fraction of experiments at `sizes[row]`
    /// in which layer `k` produced the best single-layer ratio.
    pub probabilities: Vec<Vec<f64>>,
    /// 1-based layer with the largest column sum (ties to the smallest).
    pub modal_layer: usize,
    pub experiments_per_size: usize,
}

/// For each acceptor size, draws fresh graphs and optimizes every layer
/// independently from the transferred parameters; the per-experiment winner
/// (ties to the smallest index) increments its column. Rows are normalized
/// by the experiment count.
#[allow(clippy::too_many_arguments)]
pub fn layer_selection(
    family: &GraphFamily,
    donor: &QaoaParams,
    sizes: &[usize],
    experiments_per_size: usize,
    reg: &Regularizer,
    gf: &OptimizerConfig,
    master_seed: u64,
) -> Result<LayerSelectionMatrix, PipelineError> {
    if experiments_per_size == 0 {
        return Err(PipelineError::BadConfig(
            "experiments_per_size must be >= 1".into(),
        ));
    }
    let p = donor.depth();
    let items: Vec<(usize, usize, u64)> = sizes
        .iter()
        .enumerate()
        .flat_map(|(row, &n)| {
            (0..experiments_per_size).map(move |e| {
                (row, n, seeds::derive(master_seed, domain::LAYER_SELECTION, n as u64, e as u64))
            })
        })
        .collect();

    let winners: Vec<(usize, usize)> = items
        .par_iter()
        .map(|&(row, n, graph_seed)| -> Result<(usize, usize), PipelineError> {
            let prepared = prepare_graph(family, n, graph_seed)?;
            let mut best_k = 1;
            let mut best_r = f64::NEG_INFINITY;
            for k in 1..=p {
                let refined =
                    targeted_single_layer(&prepared.table, prepared.c_max, donor, k, reg, gf)?;
                if refined.ratio > best_r {
                    best_r = refined.ratio;
                    best_k = k;
                }
            }
            Ok((row, best_k))
        })
        .collect::<Result<_, _>>()?;

    let mut counts = vec![vec![0usize; p]; sizes.len()];
    for (row, k) in winners {
        counts[row][k - 1] += 1;
    }
    let probabilities: Vec<Vec<f64>> = counts
        .iter()
        .map(|row| {
            row.iter()
                .map(|&c| c as f64 / experiments_per_size as f64)
                .collect()
        })
        .collect();
    let mut column_sums = vec![0.0f64; p];
    for row in &probabilities {
        for (s, &v) in column_sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    let modal_layer = column_sums
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
        .map(|(i, _)| i + 1)
        .unwrap_or(1);

    Ok(LayerSelectionMatrix {
        sizes: sizes.to_vec(),
        depth: p,
        probabilities,
        modal_layer,
        experiments_per_size,
    })
}

/// Per-instance results of one study item.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub family: FamilyTag,
    pub n_a: usize,
    pub graph_seed: u64,
    pub rep: usize,
    pub target_layer: usize,
    pub r_n: f64,
    pub r_s: f64,
    pub r_f: f64,
    pub steps_single: usize,
    pub steps_full: usize,
    pub tau_s: f64,
    pub tau_f: f64,
    pub eps_s: f64,
    pub eps_f: f64,
    pub reg_kind: RegKind,
    pub lambda: f64,
}

/// Per-size means and standard deviations (sample std; 0 for one record).
#[derive(Debug, Clone)]
pub struct SizeSummary {
    pub n_a: usize,
    pub count: usize,
    pub mean_r_n: f64,
    pub std_r_n: f64,
    pub mean_r_s: f64,
    pub std_r_s: f64,
    pub mean_r_f: f64,
    pub std_r_f: f64,
    pub mean_tau_s: f64,
    pub mean_tau_f: f64,
    pub mean_eps_s: f64,
    pub mean_eps_f: f64,
}

/// A per-graph failure that did not stop the study.
#[derive(Debug, Clone)]
pub struct StudyFailure {
    pub n_a: usize,
    pub graph_seed: u64,
    pub message: String,
}

/// Everything a family study produced.
pub struct StudyOutput {
    pub config: StudyConfig,
    pub donor_key: BankKey,
    pub donor_entry: BankEntry,
    pub resolved_layer: usize,
    pub records: Vec<RunRecord>,
    pub summaries: Vec<SizeSummary>,
    pub failures: Vec<StudyFailure>,
    pub resampled_instances: u64,
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (mut total, mut count) = (0.0, 0usize);
    for v in values {
        total += v;
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

fn sample_std(values: &[f64], mean: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    var.sqrt()
}

fn summarize(records: &[RunRecord], sizes: &[usize]) -> Vec<SizeSummary> {
    sizes
        .iter()
        .filter_map(|&n| {
            let rows: Vec<&RunRecord> = records.iter().filter(|r| r.n_a == n).collect();
            if rows.is_empty() {
                return None;
            }
            let col = |f: fn(&RunRecord) -> f64| -> Vec<f64> { rows.iter().map(|r| f(r)).collect() };
            let r_n = col(|r| r.r_n);
            let r_s = col(|r| r.r_s);
            let r_f = col(|r| r.r_f);
            let mean_r_n = mean(r_n.iter().copied());
            let mean_r_s = mean(r_s.iter().copied());
            let mean_r_f = mean(r_f.iter().copied());
            Some(SizeSummary {
                n_a: n,
                count: rows.len(),
                mean_r_n,
                std_r_n: sample_std(&r_n, mean_r_n),
                mean_r_s,
                std_r_s: sample_std(&r_s, mean_r_s),
                mean_r_f,
                std_r_f: sample_std(&r_f, mean_r_f),
                mean_tau_s: mean(rows.iter().map(|r| r.tau_s)),
                mean_tau_f: mean(rows.iter().map(|r| r.tau_f)),
                mean_eps_s: mean(rows.iter().map(|r| r.eps_s)),
                mean_eps_f: mean(rows.iter().map(|r| r.eps_f)),
            })
        })
        .collect()
}

fn check_ratio(r: f64, seed: u64) -> Result<f64, PipelineError> {
    if !(-1e-9..=1.0 + 1e-9).contains(&r) {
        return Err(PipelineError::RatioOutOfRange { r, seed });
    }
    Ok(r)
}

/// Runs the full study: donor training, transfer, and per-graph
/// no-optimization / single-layer / full-optimization measurements.
/// Individual graph failures are recorded and skipped.
pub fn run_family_study(cfg: &StudyConfig) -> Result<StudyOutput, PipelineError> {
    run_family_study_with_progress(cfg, &|_| {})
}

/// Like [`run_family_study`], invoking `on_item` with each work item's
/// records as it completes (completion order, not record order).
pub fn run_family_study_with_progress(
    cfg: &StudyConfig,
    on_item: &(dyn Fn(&[RunRecord]) + Sync),
) -> Result<StudyOutput, PipelineError> {
    cfg.validate()?;
    let donor = train_donor(
        &cfg.family,
        cfg.donor_n,
        cfg.depth,
        cfg.tqa_dt,
        cfg.tqa_index_base,
        &cfg.adagrad,
        &cfg.regularizer,
        cfg.donor_seed,
    )?;
    let mut bank = ParameterBank::new();
    bank.insert(donor.key.clone(), donor.entry.clone())?;
    let transferred = transfer_init(&bank, &donor.key, cfg.depth)?;

    let resolved_layer = match cfg.target_layer {
        TargetLayer::Explicit(k) => k,
        TargetLayer::FamilyDefault => default_target_layer(cfg.family.tag()),
        TargetLayer::FromSelection => {
            layer_selection(
                &cfg.family,
                &transferred,
                &cfg.acceptor_sizes,
                cfg.graphs_per_size,
                &cfg.regularizer,
                &cfg.single_layer_optimizer,
                seeds::derive(cfg.master_seed, domain::LAYER_SELECTION, 0, 0),
            )?
            .modal_layer
        }
    };
    if resolved_layer == 0 || resolved_layer > cfg.depth {
        return Err(PipelineError::BadLayer {
            k: resolved_layer,
            p: cfg.depth,
        });
    }

    let items: Vec<(usize, usize)> = cfg
        .acceptor_sizes
        .iter()
        .flat_map(|&n| (0..cfg.graphs_per_size).map(move |g| (n, g)))
        .collect();

    type ItemResult = Result<(Vec<RunRecord>, u64), (usize, u64, String)>;
    let results: Vec<ItemResult> = items
        .par_iter()
        .map(|&(n, graph_idx)| {
            let graph_seed =
                seeds::derive(cfg.master_seed, domain::STUDY_GRAPH, n as u64, graph_idx as u64);
            let out = study_item(cfg, &transferred, resolved_layer, n, graph_seed)
                .map_err(|e| (n, graph_seed, e.to_string()));
            if let Ok((records, _)) = &out {
                on_item(records);
            }
            out
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = Vec::new();
    let mut resampled = donor.resampled;
    for result in results {
        match result {
            Ok((recs, res)) => {
                records.extend(recs);
                resampled += res;
            }
            Err((n_a, graph_seed, message)) => failures.push(StudyFailure {
                n_a,
                graph_seed,
                message,
            }),
        }
    }
    let summaries = summarize(&records, &cfg.acceptor_sizes);
    Ok(StudyOutput {
        config: cfg.clone(),
        donor_key: donor.key,
        donor_entry: donor.entry,
        resolved_layer,
        records,
        summaries,
        failures,
        resampled_instances: resampled,
    })
}

fn study_item(
    cfg: &StudyConfig,
    transferred: &QaoaParams,
    layer_k: usize,
    n: usize,
    graph_seed: u64,
) -> Result<(Vec<RunRecord>, u64), PipelineError> {
    let prepared = prepare_graph(&cfg.family, n, graph_seed)?;
    let evaluator = ExpectationEvaluator::new(&prepared.table, transferred.clone())?;
    let r_n = check_ratio(
        approximation_ratio(evaluator.base_expectation(), prepared.c_max)?,
        graph_seed,
    )?;
    drop(evaluator);

    let mut records = Vec::with_capacity(cfg.repetitions);
    for rep in 0..cfg.repetitions {
        // Stochastic single-layer optimizers get an independent seed per
        // repetition; deterministic ones repeat values exactly.
        let gf = match &cfg.single_layer_optimizer {
            OptimizerConfig::Spsa(c) => OptimizerConfig::Spsa(crate::optimizers::SpsaConfig {
                seed: seeds::derive(cfg.master_seed, domain::STUDY_REP, graph_seed, rep as u64),
                ..*c
            }),
            other => other.clone(),
        };
        let single = targeted_single_layer(
            &prepared.table,
            prepared.c_max,
            transferred,
            layer_k,
            &cfg.regularizer,
            &gf,
        )?;
        let full = full_optimize_acceptor(
            &prepared.table,
            prepared.c_max,
            transferred,
            &cfg.regularizer,
            &cfg.adagrad,
        )?;
        let r_s = check_ratio(single.ratio, graph_seed)?;
        let r_f = check_ratio(full.ratio, graph_seed)?;
        let tau_s = single.trace.wall_time_secs;
        let tau_f = full.trace.wall_time_secs;
        records.push(RunRecord {
            family: cfg.family.tag(),
            n_a: n,
            graph_seed,
            rep,
            target_layer: layer_k,
            r_n,
            r_s,
            r_f,
            steps_single: single.trace.steps,
            steps_full: full.trace.steps,
            tau_s,
            tau_f,
            eps_s: efficiency(r_s, r_n, tau_s)?,
            eps_f: efficiency(r_f, r_n, tau_f)?,
            reg_kind: cfg.regularizer.kind,
            lambda: cfg.regularizer.lambda,
        });
    }
    Ok((records, prepared.resampled))
}

/// Violation counts for one size: how often `r_s > r_f` under each penalty.
#[derive(Debug, Clone)]
pub struct RegStudyRow {
    pub n_a: usize,
    pub trials: usize,
    /// Counts in the order of `kinds` passed to [`regularization_study`].
    pub violations: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct RegStudyOutput {
    pub family: FamilyTag,
    pub kinds: Vec<RegKind>,
    pub lambda: f64,
    pub rows: Vec<RegStudyRow>,
}

/// Counts trials with `r_s > r_f + 1e-9` per size and regularizer kind. The
/// same graphs are reused across kinds so the comparison is paired.
#[allow(clippy::too_many_arguments)]
pub fn regularization_study(
    family: &GraphFamily,
    donor: &QaoaParams,
    sizes: &[usize],
    trials: usize,
    kinds: &[RegKind],
    lambda: f64,
    layer_k: usize,
    adagrad: &AdagradConfig,
    gf: &OptimizerConfig,
    master_seed: u64,
) -> Result<RegStudyOutput, PipelineError> {
    if trials == 0 || kinds.is_empty() {
        return Err(PipelineError::BadConfig(
            "regularization study needs trials >= 1 and at least one kind".into(),
        ));
    }
    let rows = sizes
        .iter()
        .map(|&n| -> Result<RegStudyRow, PipelineError> {
            let counts: Vec<Vec<usize>> = (0..trials)
                .into_par_iter()
                .map(|trial| -> Result<Vec<usize>, PipelineError> {
                    let graph_seed =
                        seeds::derive(master_seed, domain::REG_STUDY, n as u64, trial as u64);
                    let prepared = prepare_graph(family, n, graph_seed)?;
                    let mut row = vec![0usize; kinds.len()];
                    for (ki, &kind) in kinds.iter().enumerate() {
                        let reg = Regularizer { kind, lambda };
                        let single = targeted_single_layer(
                            &prepared.table,
                            prepared.c_max,
                            donor,
                            layer_k,
                            &reg,
                            gf,
                        )?;
                        let full = full_optimize_acceptor(
                            &prepared.table,
                            prepared.c_max,
                            donor,
                            &reg,
                            adagrad,
                        )?;
                        if single.ratio > full.ratio + 1e-9 {
                            row[ki] = 1;
                        }
                    }
                    Ok(row)
                })
                .collect::<Result<_, _>>()?;
            let mut violations = vec![0usize; kinds.len()];
            for row in counts {
                for (total, v) in violations.iter_mut().zip(row) {
                    *total += v;
                }
            }
            Ok(RegStudyRow {
                n_a: n,
                trials,
                violations,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(RegStudyOutput {
        family: family.tag(),
        kinds: kinds.to_vec(),
        lambda,
        rows,
    })
}

/// One initialization strategy's full-optimization outcome on one size.
#[derive(Debug, Clone)]
pub struct InitComparisonRow {
    pub n_a: usize,
    pub strategy: String,
    pub mean_r_f: f64,
    /// Mean first Adagrad iteration whose objective is within `1e-3` of the
    /// run's final value.
    pub mean_steps_to_final: f64,
}

/// Full optimization from transfer, TQA, and uniform-random starts on the
/// same graphs; used to compare initialization quality.
#[allow(clippy::too_many_arguments)]
pub fn initialization_comparison(
    family: &GraphFamily,
    donor: &QaoaParams,
    sizes: &[usize],
    graphs_per_size: usize,
    tqa_dt: f64,
    tqa_index_base: u8,
    random_range: (f64, f64),
    adagrad: &AdagradConfig,
    reg: &Regularizer,
    master_seed: u64,
) -> Result<Vec<InitComparisonRow>, PipelineError> {
    let depth = donor.depth();
    let tqa = crate::params::tqa_init_indexed(depth, tqa_dt, tqa_index_base)?;
    let mut rows = Vec::new();
    for &n in sizes {
        let per_graph: Vec<Vec<(f64, f64)>> = (0..graphs_per_size)
            .into_par_iter()
            .map(|g| -> Result<Vec<(f64, f64)>, PipelineError> {
                let graph_seed =
                    seeds::derive(master_seed, domain::STUDY_GRAPH, n as u64, g as u64);
                let prepared = prepare_graph(family, n, graph_seed)?;
                let random = crate::params::random_init(
                    depth,
                    random_range.0,
                    random_range.1,
                    seeds::derive(master_seed, domain::RANDOM_INIT, n as u64, g as u64),
                )?;
                [donor, &tqa, &random]
                    .iter()
                    .map(|init| {
                        let full = full_optimize_acceptor(
                            &prepared.table,
                            prepared.c_max,
                            init,
                            reg,
                            adagrad,
                        )?;
                        Ok((full.ratio, steps_to_final(&full.trace)))
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        for (idx, strategy) in ["transfer", "tqa", "random"].iter().enumerate() {
            rows.push(InitComparisonRow {
                n_a: n,
                strategy: strategy.to_string(),
                mean_r_f: mean(per_graph.iter().map(|g| g[idx].0)),
                mean_steps_to_final: mean(per_graph.iter().map(|g| g[idx].1)),
            });
        }
    }
    Ok(rows)
}

fn steps_to_final(trace: &OptimizationTrace) -> f64 {
    let last = *trace.history.last().unwrap_or(&0.0);
    trace
        .history
        .iter()
        .position(|&f| (f - last).abs() <= 1e-3)
        .unwrap_or(trace.history.len().saturating_sub(1)) as f64
}

/// Rectangular evaluation grid; points sit at `min + i * (max - min) /
/// steps`, endpoint exclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterGrid {
    pub gamma_min: f64,
    pub gamma_max: f64,
    pub gamma_steps: usize,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_steps: usize,
}

impl Default for RasterGrid {
    fn default() -> Self {
        Self {
            gamma_min: 0.0,
            gamma_max: 2.0 * std::f64::consts::PI,
            gamma_steps: 64,
            beta_min: 0.0,
            beta_max: std::f64::consts::PI,
            beta_steps: 64,
        }
    }
}

/// Dense p=1 expectation landscape over the grid, row-major with gamma as
/// the row index.
pub fn landscape_raster(g: &Graph, grid: &RasterGrid) -> Result<Vec<f64>, PipelineError> {
    if grid.gamma_steps == 0 || grid.beta_steps == 0 {
        return Err(PipelineError::BadConfig("raster grid needs steps >= 1".into()));
    }
    let table = build_cut_table(g)?;
    let mut out = Vec::with_capacity(grid.gamma_steps * grid.beta_steps);
    for i in 0..grid.gamma_steps {
        let gamma =
            grid.gamma_min + i as f64 * (grid.gamma_max - grid.gamma_min) / grid.gamma_steps as f64;
        for j in 0..grid.beta_steps {
            let beta =
                grid.beta_min + j as f64 * (grid.beta_max - grid.beta_min) / grid.beta_steps as f64;
            let params = QaoaParams::new(vec![gamma], vec![beta])?;
            let state = crate::simulator::run_ansatz(&table, &params)?;
            out.push(crate::simulator::expectation(&state, &table)?);
        }
    }
    Ok(out)
}
