//! Parameter initialization strategies and the persistent donor bank.
//!
//! Donor parameters are keyed by `(family, donor size, depth)` and transfer
//! verbatim to acceptor circuits of the same depth. The bank file is a
//! line-oriented text format, one record per entry:
//!
//! ```text
//! # meta digest <hex> trained_at <unix-seconds>
//! <family> <n_d> <p> <seed> <r_f> <γ_0..γ_{p-1}> <β_0..β_{p-1}>
//! ```
//!
//! Floats are printed at 17 significant digits so records round-trip
//! exactly. The `# meta` comment carries the optimizer-config digest and a
//! wall-clock training timestamp (0 when unknown); the timestamp is the one
//! non-deterministic field.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graphgen::FamilyTag;
use crate::simulator::QaoaParams;

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("TQA time step must be positive, got {0}")]
    InvalidTimeStep(f64),
    #[error("TQA index base must be 0 or 1, got {0}")]
    InvalidIndexBase(u8),
    #[error("random init needs lo < hi, got [{lo}, {hi})")]
    InvalidRange { lo: f64, hi: f64 },
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("no bank entry for key {0}")]
    MissingKey(BankKey),
    #[error("bank entry {key} has depth {entry}, acceptor expects {expected}")]
    DepthMismatch {
        key: BankKey,
        entry: usize,
        expected: usize,
    },
    #[error("duplicate bank key {0}")]
    DuplicateKey(BankKey),
    #[error("bank file line {line}: {msg}")]
    BankParse { line: usize, msg: String },
    #[error("bank io: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Sim(#[from] crate::simulator::SimError),
}

/// How acceptor parameters are initialized.
#[derive(Debug, Clone, PartialEq)]
pub enum InitStrategy {
    Tqa { dt: f64 },
    RandomUniform { lo: f64, hi: f64, seed: u64 },
    Transfer { key: BankKey },
}

impl InitStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            InitStrategy::Tqa { .. } => "tqa",
            InitStrategy::RandomUniform { .. } => "random",
            InitStrategy::Transfer { .. } => "transfer",
        }
    }

    /// Produces depth-`p` parameters; `bank` is consulted only for transfer.
    pub fn initialize(
        &self,
        p: usize,
        bank: Option<&ParameterBank>,
    ) -> Result<QaoaParams, ParamsError> {
        match self {
            InitStrategy::Tqa { dt } => tqa_init(p, *dt),
            InitStrategy::RandomUniform { lo, hi, seed } => random_init(p, *lo, *hi, *seed),
            InitStrategy::Transfer { key } => {
                let bank = bank.ok_or_else(|| ParamsError::MissingKey(key.clone()))?;
                transfer_init(bank, key, p)
            }
        }
    }
}

/// TQA schedule from Eq.-style indexing with `i` in `{0, 1, .., p-1}`:
/// `γ_i = (i/p)Δt` and `β_i = Δt - γ_i`, so `γ_0 = 0` and every pair sums
/// to `Δt` exactly.
pub fn tqa_init(p: usize, dt: f64) -> Result<QaoaParams, ParamsError> {
    tqa_init_indexed(p, dt, 0)
}

/// TQA schedule with a configurable index base: the effective layer index is
/// `i + base`, base 0 being the literal published form and base 1 the common
/// variant whose first cost angle is nonzero.
pub fn tqa_init_indexed(p: usize, dt: f64, index_base: u8) -> Result<QaoaParams, ParamsError> {
    if p == 0 {
        return Err(ParamsError::ZeroDepth);
    }
    if dt <= 0.0 || !dt.is_finite() || dt.is_nan() {
        return Err(ParamsError::InvalidTimeStep(dt));
    }
    if index_base > 1 {
        return Err(ParamsError::InvalidIndexBase(index_base));
    }
    let mut gammas = Vec::with_capacity(p);
    let mut betas = Vec::with_capacity(p);
    for i in 0..p {
        let mut gamma = ((i + index_base as usize) as f64 / p as f64) * dt;
        let beta = dt - gamma;
        // Nudge gamma by ulps (a sub-1e-15 shift) so the pair sums to dt
        // exactly, as the schedule's invariant requires.
        let err = (gamma + beta) - dt;
        if err != 0.0 {
            gamma -= err;
            for _ in 0..32 {
                let residue = (gamma + beta) - dt;
                if residue == 0.0 {
                    break;
                }
                gamma = if residue > 0.0 {
                    gamma.next_down()
                } else {
                    gamma.next_up()
                };
            }
        }
        gammas.push(gamma);
        betas.push(beta);
    }
    Ok(QaoaParams::new(gammas, betas)?)
}

/// `2p` i.i.d. uniform draws in `[lo, hi)`, gammas first, deterministic per
/// seed.
pub fn random_init(p: usize, lo: f64, hi: f64, seed: u64) -> Result<QaoaParams, ParamsError> {
    if p == 0 {
        return Err(ParamsError::ZeroDepth);
    }
    if lo >= hi || !lo.is_finite() || !hi.is_finite() {
        return Err(ParamsError::InvalidRange { lo, hi });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gammas = (0..p).map(|_| rng.random_range(lo..hi)).collect();
    let betas = (0..p).map(|_| rng.random_range(lo..hi)).collect();
    Ok(QaoaParams::new(gammas, betas)?)
}

/// Returns the donor parameters verbatim: no rescaling, no truncation. The
/// acceptor depth must equal the stored depth.
pub fn transfer_init(
    bank: &ParameterBank,
    key: &BankKey,
    acceptor_depth: usize,
) -> Result<QaoaParams, ParamsError> {
    let entry = bank
        .get(key)
        .ok_or_else(|| ParamsError::MissingKey(key.clone()))?;
    if entry.params.depth() != acceptor_depth {
        return Err(ParamsError::DepthMismatch {
            key: key.clone(),
            entry: entry.params.depth(),
            expected: acceptor_depth,
        });
    }
    Ok(entry.params.clone())
}

/// Bank lookup key: which donor, at what size and depth.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BankKey {
    pub family: FamilyTag,
    pub donor_n: usize,
    pub depth: usize,
}

impl fmt::Display for BankKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, n_d={}, p={})", self.family, self.donor_n, self.depth)
    }
}

/// Optimized donor parameters plus training provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct BankEntry {
    pub params: QaoaParams,
    pub donor_seed: u64,
    pub donor_rf: f64,
    pub config_digest: String,
    /// Unix seconds when the donor was trained; 0 when unknown. Wall-clock,
    /// so excluded from determinism comparisons.
    pub trained_at: u64,
}

/// Persisted map from donor keys to optimized parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParameterBank {
    entries: BTreeMap<BankKey, BankEntry>,
}

impl ParameterBank {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, key: &BankKey) -> Option<&BankEntry> {
        self.entries.get(key)
    }

    /// Inserts or replaces the entry for `key`.
    pub fn insert(&mut self, key: BankKey, entry: BankEntry) -> Result<(), ParamsError> {
        if entry.params.depth() != key.depth {
            return Err(ParamsError::DepthMismatch {
                entry: entry.params.depth(),
                expected: key.depth,
                key,
            });
        }
        self.entries.insert(key, entry);
        Ok(())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BankKey, &BankEntry)> {
        self.entries.iter()
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes the bank to its text format.
pub fn bank_to_string(bank: &ParameterBank) -> String {
    let mut out = String::new();
    for (key, entry) in bank.iter() {
        out.push_str(&format!(
            "# meta digest {} trained_at {}\n",
            if entry.config_digest.is_empty() {
                "-"
            } else {
                &entry.config_digest
            },
            entry.trained_at
        ));
        out.push_str(&format!(
            "{} {} {} {} {}",
            key.family,
            key.donor_n,
            key.depth,
            entry.donor_seed,
            fmt_f64(entry.donor_rf)
        ));
        for g in entry.params.gammas() {
            out.push(' ');
            out.push_str(&fmt_f64(*g));
        }
        for b in entry.params.betas() {
            out.push(' ');
            out.push_str(&fmt_f64(*b));
        }
        out.push('\n');
    }
    out
}

/// Parses a bank from its text format; an empty file is an empty bank and a
/// duplicate key is an error.
pub fn bank_from_string(text: &str) -> Result<ParameterBank, ParamsError> {
    let mut bank = ParameterBank::new();
    let mut pending_digest = String::new();
    let mut pending_time = 0u64;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let tokens: Vec<&str> = rest.split_whitespace().collect();
            if tokens.first() == Some(&"meta") && tokens.len() == 5 {
                if tokens[1] == "digest" {
                    pending_digest = if tokens[2] == "-" {
                        String::new()
                    } else {
                        tokens[2].to_string()
                    };
                }
                if tokens[3] == "trained_at" {
                    pending_time = tokens[4].parse().map_err(|_| ParamsError::BankParse {
                        line: lineno,
                        msg: "invalid trained_at timestamp".into(),
                    })?;
                }
            }
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 7 {
            return Err(ParamsError::BankParse {
                line: lineno,
                msg: "record needs at least 'family n_d p seed r_f γ_0 β_0'".into(),
            });
        }
        let family = FamilyTag::from_str(tokens[0]).map_err(|e| ParamsError::BankParse {
            line: lineno,
            msg: e,
        })?;
        let parse_usize = |s: &str, what: &str| -> Result<usize, ParamsError> {
            s.parse().map_err(|_| ParamsError::BankParse {
                line: lineno,
                msg: format!("invalid {what} '{s}'"),
            })
        };
        let donor_n = parse_usize(tokens[1], "donor size")?;
        let depth = parse_usize(tokens[2], "depth")?;
        let donor_seed: u64 = tokens[3].parse().map_err(|_| ParamsError::BankParse {
            line: lineno,
            msg: format!("invalid seed '{}'", tokens[3]),
        })?;
        let parse_f64 = |s: &str| -> Result<f64, ParamsError> {
            s.parse().map_err(|_| ParamsError::BankParse {
                line: lineno,
                msg: format!("invalid float '{s}'"),
            })
        };
        let donor_rf = parse_f64(tokens[4])?;
        let angles = &tokens[5..];
        if angles.len() != 2 * depth {
            return Err(ParamsError::BankParse {
                line: lineno,
                msg: format!(
                    "expected {} angles for depth {depth}, found {}",
                    2 * depth,
                    angles.len()
                ),
            });
        }
        let gammas = angles[..depth]
            .iter()
            .map(|s| parse_f64(s))
            .collect::<Result<Vec<_>, _>>()?;
        let betas = angles[depth..]
            .iter()
            .map(|s| parse_f64(s))
            .collect::<Result<Vec<_>, _>>()?;
        let key = BankKey {
            family,
            donor_n,
            depth,
        };
        if bank.get(&key).is_some() {
            return Err(ParamsError::DuplicateKey(key));
        }
        bank.insert(
            key,
            BankEntry {
                params: QaoaParams::new(gammas, betas)?,
                donor_seed,
                donor_rf,
                config_digest: std::mem::take(&mut pending_digest),
                trained_at: std::mem::take(&mut pending_time),
            },
        )?;
    }
    Ok(bank)
}

/// Writes the bank to `path` in the text format.
pub fn bank_save(bank: &ParameterBank, path: &Path) -> Result<(), ParamsError> {
    Ok(std::fs::write(path, bank_to_string(bank))?)
}

/// Loads a bank from `path`; a missing file is not forgiven, an empty one is.
pub fn bank_load(path: &Path) -> Result<ParameterBank, ParamsError> {
    bank_from_string(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn sample_entry(p: usize) -> BankEntry {
        BankEntry {
            params: tqa_init(p, 0.75).unwrap(),
            donor_seed: 11,
            donor_rf: 0.987654321098765,
            config_digest: "deadbeefcafe0123".into(),
            trained_at: 1_700_000_000,
        }
    }

    #[test]
    fn tqa_small_case_exact() {
        let p2 = tqa_init(2, 0.75).unwrap();
        assert_eq!(p2.gammas(), &[0.0, 0.375]);
        assert_eq!(p2.betas(), &[0.75, 0.375]);

        let p1 = tqa_init(1, 1.3).unwrap();
        assert_eq!(p1.gammas(), &[0.0]);
        assert_eq!(p1.betas(), &[1.3]);
    }

    #[test]
    fn tqa_depth_15_published_values() {
        let p = tqa_init(15, 0.75).unwrap();
        assert_abs_diff_eq!(p.gamma(1), 0.05, epsilon = 1e-15);
        assert_abs_diff_eq!(p.beta(14), 0.05, epsilon = 1e-15);
    }

    #[test]
    fn tqa_pairs_sum_to_dt_exactly() {
        for p in [1usize, 2, 3, 5, 7, 15, 31] {
            for dt in [0.75, 0.5, 1.0, 0.3, 1.7] {
                let params = tqa_init(p, dt).unwrap();
                for i in 0..p {
                    assert_eq!(params.gamma(i) + params.beta(i), dt, "p={p} dt={dt} i={i}");
                }
            }
        }
    }

    #[test]
    fn tqa_monotonicity() {
        let params = tqa_init(15, 0.75).unwrap();
        for i in 1..15 {
            assert!(params.gamma(i) > params.gamma(i - 1));
            assert!(params.beta(i) < params.beta(i - 1));
        }
    }

    #[test]
    fn tqa_index_base_one_shifts_schedule() {
        let p = tqa_init_indexed(3, 0.75, 1).unwrap();
        assert_eq!(p.gamma(0), 0.25);
        assert_eq!(p.gamma(2), 0.75);
        assert_eq!(p.beta(2), 0.0);
        assert!(tqa_init_indexed(3, 0.75, 2).is_err());
    }

    #[test]
    fn tqa_rejects_bad_dt() {
        assert!(tqa_init(4, 0.0).is_err());
        assert!(tqa_init(4, -1.0).is_err());
        assert!(tqa_init(0, 0.75).is_err());
    }

    #[test]
    fn random_init_range_and_determinism() {
        let pi = std::f64::consts::PI;
        let a = random_init(15, 0.0, pi, 9).unwrap();
        let b = random_init(15, 0.0, pi, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.flat().iter().all(|&x| (0.0..pi).contains(&x)));
        assert_ne!(a, random_init(15, 0.0, pi, 10).unwrap());
        assert!(random_init(4, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn random_init_mean_matches_uniform() {
        let draws = 100_000 / 30;
        let (lo, hi) = (0.0, std::f64::consts::PI);
        let mut sum = 0.0;
        let mut count = 0usize;
        for seed in 0..draws {
            let p = random_init(15, lo, hi, seed as u64).unwrap();
            sum += p.flat().iter().sum::<f64>();
            count += 30;
        }
        let mean = sum / count as f64;
        let sigma = (hi - lo) / 12f64.sqrt();
        let tol = 3.0 * sigma / (count as f64).sqrt();
        assert!((mean - (lo + hi) / 2.0).abs() < tol, "mean {mean}");
    }

    #[test]
    fn transfer_returns_stored_params_verbatim() {
        let mut bank = ParameterBank::new();
        let key = BankKey {
            family: FamilyTag::U3r,
            donor_n: 8,
            depth: 15,
        };
        let entry = sample_entry(15);
        bank.insert(key.clone(), entry.clone()).unwrap();
        let got = transfer_init(&bank, &key, 15).unwrap();
        assert_eq!(got, entry.params);

        let missing = BankKey {
            family: FamilyTag::Wer,
            donor_n: 8,
            depth: 15,
        };
        assert!(matches!(
            transfer_init(&bank, &missing, 15),
            Err(ParamsError::MissingKey(_))
        ));
        assert!(matches!(
            transfer_init(&bank, &key, 10),
            Err(ParamsError::DepthMismatch { .. })
        ));
    }

    #[test]
    fn bank_round_trips_including_metadata() {
        let mut bank = ParameterBank::new();
        bank.insert(
            BankKey {
                family: FamilyTag::U3r,
                donor_n: 8,
                depth: 15,
            },
            sample_entry(15),
        )
        .unwrap();
        bank.insert(
            BankKey {
                family: FamilyTag::Wer,
                donor_n: 8,
                depth: 3,
            },
            BankEntry {
                params: QaoaParams::new(vec![0.1, -0.2, 0.3], vec![1.0, 0.5, 0.25]).unwrap(),
                donor_seed: 42,
                donor_rf: 0.912345678901234,
                config_digest: String::new(),
                trained_at: 0,
            },
        )
        .unwrap();

        let text = bank_to_string(&bank);
        let back = bank_from_string(&text).unwrap();
        assert_eq!(bank, back);
    }

    #[test]
    fn bank_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bank.txt");
        let mut bank = ParameterBank::new();
        bank.insert(
            BankKey {
                family: FamilyTag::Uba,
                donor_n: 8,
                depth: 15,
            },
            sample_entry(15),
        )
        .unwrap();
        bank_save(&bank, &path).unwrap();
        assert_eq!(bank_load(&path).unwrap(), bank);
    }

    #[test]
    fn empty_file_is_empty_bank() {
        assert!(bank_from_string("").unwrap().is_empty());
        assert!(bank_from_string("\n\n").unwrap().is_empty());
    }

    #[test]
    fn duplicate_key_in_file_is_rejected() {
        let record = "u3r 8 1 0 5.0000000000000000e-1 1.0000000000000000e0 2.0000000000000000e0";
        let text = format!("{record}\n{record}\n");
        assert!(matches!(
            bank_from_string(&text),
            Err(ParamsError::DuplicateKey(_))
        ));
    }

    #[test]
    fn corrupt_records_name_the_line() {
        let text = "u3r 8 1 0 bad 1.0 2.0\n";
        match bank_from_string(text) {
            Err(ParamsError::BankParse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        let text = "u3r 8 2 0 0.5 1.0 2.0\n";
        assert!(bank_from_string(text).is_err(), "wrong angle count");
    }

    #[test]
    fn insert_rejects_depth_mismatch() {
        let mut bank = ParameterBank::new();
        let key = BankKey {
            family: FamilyTag::U3r,
            donor_n: 8,
            depth: 4,
        };
        assert!(bank.insert(key, sample_entry(15)).is_err());
    }
}
