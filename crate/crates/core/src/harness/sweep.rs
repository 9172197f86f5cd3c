//! One-parameter sweeps.

use crate::analytics::FormulaId;
use crate::Result;

use super::config::{ExperimentConfig, SweepParameter};
use super::experiments::{run_multiblock, run_pool};
use super::report::ReportRow;
use super::verify::{oracle_rows, standard_closed_form};

/// Rows for every swept value in ascending order. `beta` sweeps run the
/// multi-block experiment, `k` sweeps the pool experiment; every other
/// parameter yields closed forms with their series oracles.
///
/// An `n` sweep ends with two verdict rows: ticket value strictly decreasing
/// and control value strictly increasing in `n`.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<ReportRow>> {
    let sweep = cfg.sweep.as_ref().expect("validated sweep table");
    let mut values = sweep.values.clone();
    values.sort_by(f64::total_cmp);
    let name = sweep.parameter.name();

    let mut rows = Vec::new();
    for &v in &values {
        let mut point = cfg.with_swept(sweep.parameter, v)?;
        point.sweep = None;
        let block = match sweep.parameter {
            SweepParameter::Beta => run_multiblock(&point)?,
            SweepParameter::K => run_pool(&point)?,
            _ => oracle_rows(&point, standard_closed_form)?,
        };
        rows.extend(block.into_iter().map(|r| r.swept(name, v)));
    }

    if sweep.parameter == SweepParameter::N {
        let series = |f: FormulaId| -> Vec<f64> {
            rows.iter()
                .filter(|r| r.label == f.name())
                .filter_map(|r| r.closed_form)
                .collect()
        };
        let value = series(FormulaId::ExpectedTicketValue);
        let control = series(FormulaId::ControlValue);
        let mut dec = ReportRow::new("ticket_value_decreasing_in_n");
        dec.swept_parameter = Some(name.to_owned());
        dec.pass = value.windows(2).all(|w| w[1] < w[0]);
        let mut inc = ReportRow::new("control_value_increasing_in_n");
        inc.swept_parameter = Some(name.to_owned());
        inc.pass = control.windows(2).all(|w| w[1] > w[0]);
        rows.push(dec);
        rows.push(inc);
    }
    Ok(rows)
}
