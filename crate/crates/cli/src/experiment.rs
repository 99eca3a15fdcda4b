use clap::ValueEnum;
use spfq_core::analysis::{
    bit_sizing_experiment, fmt_f64, fmt_opt, projection_decay_experiment, relative_error_sweep,
    ResultTable,
};
use spfq_core::Result;

use crate::{report_error, ExperimentArgs, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    /// Relative squared error against width.
    RelativeError,
    /// Norm of the projection product against the number of factors.
    ProjectionDecay,
    /// Alphabet size needed to avoid clamping, against width.
    BitSizing,
}

/// Builds the CSV table for an experiment.
pub fn experiment_table(a: &ExperimentArgs) -> Result<ResultTable> {
    match a.kind {
        ExperimentKind::RelativeError => {
            let m = a.m.unwrap_or(16);
            let ns = a
                .n_list
                .clone()
                .unwrap_or_else(|| vec![128, 256, 512, 1024, 2048, 4096]);
            let sweep = relative_error_sweep(m, &ns, a.layers, a.p, a.trials, a.seed, a.delta)?;
            let mut t = ResultTable::new(&[
                "m", "N", "L", "p", "delta", "trials", "mean", "std", "bound", "slope",
            ]);
            for r in &sweep.rows {
                t.push(vec![
                    m.to_string(),
                    r.n.to_string(),
                    a.layers.to_string(),
                    a.p.to_string(),
                    fmt_f64(a.delta),
                    a.trials.to_string(),
                    fmt_f64(r.mean),
                    fmt_f64(r.std),
                    fmt_opt(r.bound),
                    fmt_opt(sweep.log_log_slope),
                ]);
            }
            Ok(t)
        }
        ExperimentKind::ProjectionDecay => {
            let m = a.m.unwrap_or(4);
            let ns = a.n_list.clone().unwrap_or_else(|| vec![20, 40, 80]);
            let decay = projection_decay_experiment(m, &ns, a.trials, a.seed)?;
            let mut t = ResultTable::new(&["m", "N", "trials", "mean", "std", "max_norm", "slope"]);
            for r in &decay.rows {
                t.push(vec![
                    m.to_string(),
                    r.n.to_string(),
                    a.trials.to_string(),
                    fmt_f64(r.mean_log_norm_sq),
                    fmt_f64(r.std_log_norm_sq),
                    fmt_f64(r.max_norm),
                    fmt_opt(decay.slope),
                ]);
            }
            Ok(t)
        }
        ExperimentKind::BitSizing => {
            let m = a.m.unwrap_or(16);
            let ns = a
                .n_list
                .clone()
                .unwrap_or_else(|| vec![64, 128, 256, 512, 1024, 2048, 4096]);
            let rows = bit_sizing_experiment(m, &ns, a.p, a.delta, a.epsilon, a.trials, a.seed)?;
            let mut t = ResultTable::new(&[
                "m",
                "N",
                "p",
                "delta",
                "epsilon",
                "trials",
                "mean_eta",
                "mean_levels",
                "mean_bits",
                "max_bits",
            ]);
            for r in &rows {
                t.push(vec![
                    m.to_string(),
                    r.n.to_string(),
                    a.p.to_string(),
                    fmt_f64(a.delta),
                    fmt_f64(a.epsilon),
                    a.trials.to_string(),
                    fmt_f64(r.mean_eta),
                    fmt_f64(r.mean_levels),
                    fmt_f64(r.mean_bits),
                    r.max_bits.to_string(),
                ]);
            }
            Ok(t)
        }
    }
}

pub(crate) fn cmd_experiment(a: &ExperimentArgs) -> i32 {
    let table = match experiment_table(a) {
        Ok(t) => t,
        Err(e) => return report_error(&e),
    };
    let written = match &a.csv {
        Some(path) => table.write_path(path),
        None => table.write_to(std::io::stdout().lock()),
    };
    match written {
        Ok(()) => EXIT_OK,
        Err(e) => report_error(&e),
    }
}
