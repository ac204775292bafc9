//! CSV emission with pinned headers.
//!
//! Ratio and probability columns are printed at 17 significant digits and
//! are bit-reproducible from a manifest; the wall-time columns (`tau_*`,
//! `eps_*`) are non-deterministic by nature.

use qaoa_transfer::pipeline::{LayerSelectionMatrix, RegStudyOutput, RunRecord, SizeSummary};

pub const RECORDS_HEADER: &str =
    "family,n_a,graph_seed,rep,k,r_n,r_s,r_f,N_s,N_f,tau_s,tau_f,eps_s,eps_f";
pub const SUMMARY_HEADER: &str = "family,n_a,mean_r_n,std_r_n,mean_r_s,std_r_s,mean_r_f,std_r_f,\
                                  mean_tau_s,mean_tau_f,mean_eps_s,mean_eps_f";
pub const HEATMAP_HEADER: &str = "n_a,layer,probability";
pub const REGSTUDY_HEADER: &str = "family,n_a,N,viol_nr,viol_L1,viol_L2,viol_sm";

fn exact(x: f64) -> String {
    format!("{x:.16e}")
}

fn timing(x: f64) -> String {
    format!("{x:.6e}")
}

pub fn records_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.family,
            r.n_a,
            r.graph_seed,
            r.rep,
            r.target_layer,
            exact(r.r_n),
            exact(r.r_s),
            exact(r.r_f),
            r.steps_single,
            r.steps_full,
            timing(r.tau_s),
            timing(r.tau_f),
            timing(r.eps_s),
            timing(r.eps_f),
        ));
    }
    out
}

pub fn summary_csv(family: &str, summaries: &[SizeSummary]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for s in summaries {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            family,
            s.n_a,
            exact(s.mean_r_n),
            exact(s.std_r_n),
            exact(s.mean_r_s),
            exact(s.std_r_s),
            exact(s.mean_r_f),
            exact(s.std_r_f),
            timing(s.mean_tau_s),
            timing(s.mean_tau_f),
            timing(s.mean_eps_s),
            timing(s.mean_eps_f),
        ));
    }
    out
}

pub fn heatmap_csv(matrix: &LayerSelectionMatrix) -> String {
    let mut out = String::from(HEATMAP_HEADER);
    out.push('\n');
    for (row, &n_a) in matrix.probabilities.iter().zip(&matrix.sizes) {
        for (col, &prob) in row.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", n_a, col + 1, exact(prob)));
        }
    }
    out
}

/// Table-I-style violation counts. Columns are fixed as nr/L1/L2/sm; kinds
/// missing from the study print as empty cells.
pub fn regstudy_csv(out_data: &RegStudyOutput) -> String {
    use qaoa_transfer::optimizers::RegKind;
    let mut out = String::from(REGSTUDY_HEADER);
    out.push('\n');
    let col = |kind: RegKind, row: &[usize]| -> String {
        out_data
            .kinds
            .iter()
            .position(|&k| k == kind)
            .map(|i| row[i].to_string())
            .unwrap_or_default()
    };
    for row in &out_data.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            out_data.family,
            row.n_a,
            row.trials,
            col(RegKind::None, &row.violations),
            col(RegKind::L1, &row.violations),
            col(RegKind::L2, &row.violations),
            col(RegKind::Smooth, &row.violations),
        ));
    }
    out
}
