//! Flat `key = value` configuration files with `[section]` headers.
//!
//! The same format serves as the study manifest: a `[study]` section holds
//! every config field (floats at 17 significant digits so a manifest re-run
//! is bit-exact) and a `[provenance]` section holds informational fields
//! that are ignored on load. Unknown keys inside a study section are
//! rejected.

use std::str::FromStr;

use qaoa_transfer::graphgen::{
    FamilyTag, GraphFamily, DEFAULT_BA_ATTACH, DEFAULT_ER_EDGE_PROB, DEFAULT_WEIGHT_MEAN,
    DEFAULT_WEIGHT_STD,
};
use qaoa_transfer::optimizers::{
    AdagradConfig, NelderMeadConfig, OptimizerConfig, RegKind, Regularizer, SpsaConfig,
};
use qaoa_transfer::pipeline::{StudyConfig, TargetLayer};

use crate::CliError;

/// One `key = value` assignment with its source line number.
pub type ConfigEntry = (String, String, usize);

/// Parsed file: section name -> ordered key/value pairs.
pub struct ConfigFile {
    pub sections: Vec<(String, Vec<ConfigEntry>)>,
}

pub fn parse_config(text: &str) -> Result<ConfigFile, CliError> {
    let mut sections: Vec<(String, Vec<ConfigEntry>)> = Vec::new();
    let mut current: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.iter().any(|(n, _)| *n == name) {
                return Err(CliError::usage(format!(
                    "line {lineno}: duplicate section [{name}]"
                )));
            }
            sections.push((name, Vec::new()));
            current = Some(sections.len() - 1);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::usage(format!(
                "line {lineno}: expected 'key = value', got '{line}'"
            )));
        };
        let section = match current {
            Some(i) => i,
            None => {
                // Keys before any header form an implicit [study] section.
                sections.push(("study".to_string(), Vec::new()));
                current = Some(sections.len() - 1);
                sections.len() - 1
            }
        };
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if sections[section].1.iter().any(|(k, _, _)| *k == key) {
            return Err(CliError::usage(format!(
                "line {lineno}: duplicate key '{key}'"
            )));
        }
        sections[section].1.push((key, value, lineno));
    }
    Ok(ConfigFile { sections })
}

/// Builds the graph family from its tag and the four family parameters.
pub fn family_from_parts(
    tag: FamilyTag,
    er_edge_prob: f64,
    ba_attach: usize,
    weight_mu: f64,
    weight_sigma: f64,
) -> GraphFamily {
    match tag {
        FamilyTag::U3r => GraphFamily::U3r,
        FamilyTag::Uba => GraphFamily::Uba { m: ba_attach },
        FamilyTag::Uer => GraphFamily::Uer {
            p_edge: er_edge_prob,
        },
        FamilyTag::W3r => GraphFamily::W3r {
            mu: weight_mu,
            sigma: weight_sigma,
        },
        FamilyTag::Wba => GraphFamily::Wba {
            m: ba_attach,
            mu: weight_mu,
            sigma: weight_sigma,
        },
        FamilyTag::Wer => GraphFamily::Wer {
            p_edge: er_edge_prob,
            mu: weight_mu,
            sigma: weight_sigma,
        },
    }
}

pub fn target_layer_to_string(t: TargetLayer) -> String {
    match t {
        TargetLayer::FamilyDefault => "family-default".into(),
        TargetLayer::FromSelection => "from-selection".into(),
        TargetLayer::Explicit(k) => k.to_string(),
    }
}

pub fn parse_target_layer(s: &str) -> Result<TargetLayer, CliError> {
    match s {
        "family-default" => Ok(TargetLayer::FamilyDefault),
        "from-selection" => Ok(TargetLayer::FromSelection),
        other => other
            .parse::<usize>()
            .map(TargetLayer::Explicit)
            .map_err(|_| {
                CliError::usage(format!(
                    "target layer must be a 1-based index, 'family-default', or 'from-selection'; got '{other}'"
                ))
            }),
    }
}

/// All keys a `[study]` section may carry, in manifest order.
const STUDY_KEYS: &[&str] = &[
    "family",
    "er_edge_prob",
    "ba_attach",
    "weight_mu",
    "weight_sigma",
    "donor_n",
    "donor_seed",
    "sizes",
    "graphs_per_size",
    "repetitions",
    "depth",
    "tqa_dt",
    "tqa_index_base",
    "adagrad_lr",
    "adagrad_eps",
    "adagrad_iters",
    "single_layer_optimizer",
    "nm_max_evals",
    "nm_x_tol",
    "nm_f_tol",
    "nm_initial_step",
    "spsa_a",
    "spsa_c",
    "spsa_big_a",
    "spsa_alpha",
    "spsa_gamma_exp",
    "spsa_iters",
    "spsa_seed",
    "regularizer",
    "lambda",
    "target_layer",
    "master_seed",
];

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Renders a study config as `[study]` section lines.
pub fn study_section_lines(cfg: &StudyConfig) -> Vec<String> {
    let tag = cfg.family.tag();
    let mut lines = vec![format!("family = {tag}")];
    match cfg.family {
        GraphFamily::Uer { p_edge } | GraphFamily::Wer { p_edge, .. } => {
            lines.push(format!("er_edge_prob = {}", fmt(p_edge)));
        }
        _ => {}
    }
    match cfg.family {
        GraphFamily::Uba { m } | GraphFamily::Wba { m, .. } => {
            lines.push(format!("ba_attach = {m}"));
        }
        _ => {}
    }
    if let Some((mu, sigma)) = cfg.family.weight_params() {
        lines.push(format!("weight_mu = {}", fmt(mu)));
        lines.push(format!("weight_sigma = {}", fmt(sigma)));
    }
    lines.push(format!("donor_n = {}", cfg.donor_n));
    lines.push(format!("donor_seed = {}", cfg.donor_seed));
    let sizes: Vec<String> = cfg.acceptor_sizes.iter().map(|n| n.to_string()).collect();
    lines.push(format!("sizes = {}", sizes.join(",")));
    lines.push(format!("graphs_per_size = {}", cfg.graphs_per_size));
    lines.push(format!("repetitions = {}", cfg.repetitions));
    lines.push(format!("depth = {}", cfg.depth));
    lines.push(format!("tqa_dt = {}", fmt(cfg.tqa_dt)));
    lines.push(format!("tqa_index_base = {}", cfg.tqa_index_base));
    lines.push(format!("adagrad_lr = {}", fmt(cfg.adagrad.learning_rate)));
    lines.push(format!("adagrad_eps = {}", fmt(cfg.adagrad.epsilon)));
    lines.push(format!("adagrad_iters = {}", cfg.adagrad.max_iters));
    match &cfg.single_layer_optimizer {
        OptimizerConfig::NelderMead(nm) => {
            lines.push("single_layer_optimizer = nelder-mead".into());
            lines.push(format!("nm_max_evals = {}", nm.max_evals));
            lines.push(format!("nm_x_tol = {}", fmt(nm.x_tol)));
            lines.push(format!("nm_f_tol = {}", fmt(nm.f_tol)));
            lines.push(format!("nm_initial_step = {}", fmt(nm.initial_step)));
        }
        OptimizerConfig::Spsa(sp) => {
            lines.push("single_layer_optimizer = spsa".into());
            lines.push(format!("spsa_a = {}", fmt(sp.a)));
            lines.push(format!("spsa_c = {}", fmt(sp.c)));
            lines.push(format!("spsa_big_a = {}", fmt(sp.big_a)));
            lines.push(format!("spsa_alpha = {}", fmt(sp.alpha)));
            lines.push(format!("spsa_gamma_exp = {}", fmt(sp.gamma_exp)));
            lines.push(format!("spsa_iters = {}", sp.max_iters));
            lines.push(format!("spsa_seed = {}", sp.seed));
        }
        OptimizerConfig::Adagrad(ad) => {
            lines.push("single_layer_optimizer = adagrad".into());
            lines.push(format!("sl_adagrad_lr = {}", fmt(ad.learning_rate)));
            lines.push(format!("sl_adagrad_eps = {}", fmt(ad.epsilon)));
            lines.push(format!("sl_adagrad_iters = {}", ad.max_iters));
        }
    }
    lines.push(format!("regularizer = {}", cfg.regularizer.kind));
    lines.push(format!("lambda = {}", fmt(cfg.regularizer.lambda)));
    lines.push(format!(
        "target_layer = {}",
        target_layer_to_string(cfg.target_layer)
    ));
    lines.push(format!("master_seed = {}", cfg.master_seed));
    lines
}

/// Applies `key = value` pairs on top of a base study config; every key is
/// validated against the known set.
pub fn apply_study_keys(
    base: &mut StudyConfig,
    pairs: &[ConfigEntry],
) -> Result<(), CliError> {
    // Family-related keys interact, so gather them first.
    let mut tag = base.family.tag();
    let (mut er_p, mut ba_m, mut mu, mut sigma) = (
        DEFAULT_ER_EDGE_PROB,
        DEFAULT_BA_ATTACH,
        DEFAULT_WEIGHT_MEAN,
        DEFAULT_WEIGHT_STD,
    );
    match base.family {
        GraphFamily::Uer { p_edge } | GraphFamily::Wer { p_edge, .. } => er_p = p_edge,
        _ => {}
    }
    match base.family {
        GraphFamily::Uba { m } | GraphFamily::Wba { m, .. } => ba_m = m,
        _ => {}
    }
    if let Some((m, s)) = base.family.weight_params() {
        mu = m;
        sigma = s;
    }
    let mut nm = match &base.single_layer_optimizer {
        OptimizerConfig::NelderMead(c) => *c,
        _ => NelderMeadConfig::default(),
    };
    let mut spsa = match &base.single_layer_optimizer {
        OptimizerConfig::Spsa(c) => *c,
        _ => SpsaConfig::default(),
    };
    let mut sl_kind = match &base.single_layer_optimizer {
        OptimizerConfig::NelderMead(_) => "nelder-mead",
        OptimizerConfig::Spsa(_) => "spsa",
        OptimizerConfig::Adagrad(_) => "adagrad",
    }
    .to_string();
    let mut sl_adagrad = match &base.single_layer_optimizer {
        OptimizerConfig::Adagrad(c) => *c,
        _ => AdagradConfig::default(),
    };
    let mut reg_kind = base.regularizer.kind;
    let mut lambda = base.regularizer.lambda;

    for (key, value, lineno) in pairs {
        let at = |msg: String| CliError::usage(format!("line {lineno}: {msg}"));
        if !STUDY_KEYS.contains(&key.as_str())
            && !["sl_adagrad_lr", "sl_adagrad_eps", "sl_adagrad_iters"].contains(&key.as_str())
        {
            return Err(at(format!("unknown key '{key}'")));
        }
        macro_rules! parse {
            ($ty:ty) => {
                value
                    .parse::<$ty>()
                    .map_err(|_| at(format!("invalid value '{value}' for '{key}'")))?
            };
        }
        match key.as_str() {
            "family" => {
                tag = FamilyTag::from_str(value).map_err(&at)?;
            }
            "er_edge_prob" => er_p = parse!(f64),
            "ba_attach" => ba_m = parse!(usize),
            "weight_mu" => mu = parse!(f64),
            "weight_sigma" => sigma = parse!(f64),
            "donor_n" => base.donor_n = parse!(usize),
            "donor_seed" => base.donor_seed = parse!(u64),
            "sizes" => {
                base.acceptor_sizes = value
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<usize>()
                            .map_err(|_| at(format!("invalid size '{s}'")))
                    })
                    .collect::<Result<_, _>>()?;
            }
            "graphs_per_size" => base.graphs_per_size = parse!(usize),
            "repetitions" => base.repetitions = parse!(usize),
            "depth" => base.depth = parse!(usize),
            "tqa_dt" => base.tqa_dt = parse!(f64),
            "tqa_index_base" => base.tqa_index_base = parse!(u8),
            "adagrad_lr" => base.adagrad.learning_rate = parse!(f64),
            "adagrad_eps" => base.adagrad.epsilon = parse!(f64),
            "adagrad_iters" => base.adagrad.max_iters = parse!(usize),
            "single_layer_optimizer" => sl_kind = value.clone(),
            "nm_max_evals" => nm.max_evals = parse!(usize),
            "nm_x_tol" => nm.x_tol = parse!(f64),
            "nm_f_tol" => nm.f_tol = parse!(f64),
            "nm_initial_step" => nm.initial_step = parse!(f64),
            "spsa_a" => spsa.a = parse!(f64),
            "spsa_c" => spsa.c = parse!(f64),
            "spsa_big_a" => spsa.big_a = parse!(f64),
            "spsa_alpha" => spsa.alpha = parse!(f64),
            "spsa_gamma_exp" => spsa.gamma_exp = parse!(f64),
            "spsa_iters" => spsa.max_iters = parse!(usize),
            "spsa_seed" => spsa.seed = parse!(u64),
            "sl_adagrad_lr" => sl_adagrad.learning_rate = parse!(f64),
            "sl_adagrad_eps" => sl_adagrad.epsilon = parse!(f64),
            "sl_adagrad_iters" => sl_adagrad.max_iters = parse!(usize),
            "regularizer" => {
                reg_kind = RegKind::from_str(value).map_err(&at)?;
            }
            "lambda" => lambda = parse!(f64),
            "target_layer" => base.target_layer = parse_target_layer(value)?,
            "master_seed" => base.master_seed = parse!(u64),
            _ => unreachable!("key list is closed"),
        }
    }

    base.family = family_from_parts(tag, er_p, ba_m, mu, sigma);
    base.single_layer_optimizer = match sl_kind.as_str() {
        "nelder-mead" => OptimizerConfig::NelderMead(nm),
        "spsa" => OptimizerConfig::Spsa(spsa),
        "adagrad" => OptimizerConfig::Adagrad(sl_adagrad),
        other => {
            return Err(CliError::usage(format!(
                "unknown single_layer_optimizer '{other}'"
            )))
        }
    };
    base.regularizer =
        Regularizer::new(reg_kind, lambda).map_err(|e| CliError::usage(e.to_string()))?;
    Ok(())
}

/// Loads the study section of a config or manifest file. `section` picks a
/// named section; with `None` the file must contain exactly one study-like
/// section (`study` or a family tag), and `[provenance]` sections are
/// ignored.
pub fn load_study_config(
    text: &str,
    section: Option<&str>,
    base: StudyConfig,
) -> Result<StudyConfig, CliError> {
    let file = parse_config(text)?;
    let candidates: Vec<&(String, Vec<ConfigEntry>)> = file
        .sections
        .iter()
        .filter(|(name, _)| name != "provenance")
        .collect();
    let chosen = match section {
        Some(wanted) => candidates
            .iter()
            .find(|(name, _)| name == wanted)
            .ok_or_else(|| CliError::usage(format!("no section [{wanted}] in config")))?,
        None => {
            if candidates.len() != 1 {
                return Err(CliError::usage(format!(
                    "config has {} study sections; pick one with --section",
                    candidates.len()
                )));
            }
            candidates[0]
        }
    };
    let mut cfg = base;
    apply_study_keys(&mut cfg, &chosen.1)?;
    Ok(cfg)
}
