//! Multi-run comparison: merge result tables on a shared sweep column and
//! flag pairwise dominance of a chosen value column.

use crate::table::Table;
use crate::CliError;

/// Merge tables on `key_col`: one row per sweep point, one `value_col`
/// column per run (renamed by `labels`), plus a `ge_<i>_<j>` flag column
/// per ordered pair stating whether run i's value is at least run j's.
///
/// All tables must carry identical key-column values in identical order.
pub fn compare_report(
    runs: &[&Table],
    key_col: &str,
    value_col: &str,
    labels: &[&str],
) -> Result<Table, CliError> {
    if runs.is_empty() {
        return Err(CliError::Report("no tables to compare".into()));
    }
    if labels.len() != runs.len() {
        return Err(CliError::Report("one label per run required".into()));
    }
    let key_idx: Vec<usize> = runs
        .iter()
        .map(|t| {
            t.column_index(key_col)
                .ok_or_else(|| CliError::Report(format!("missing key column {key_col}")))
        })
        .collect::<Result<_, _>>()?;
    let val_idx: Vec<usize> = runs
        .iter()
        .map(|t| {
            t.column_index(value_col)
                .ok_or_else(|| CliError::Report(format!("missing value column {value_col}")))
        })
        .collect::<Result<_, _>>()?;

    let keys: Vec<&String> = runs[0].rows.iter().map(|r| &r[key_idx[0]]).collect();
    for (t, (table, &ki)) in runs.iter().zip(key_idx.iter()).enumerate() {
        if table.rows.len() != keys.len() {
            return Err(CliError::Report(format!(
                "run {t} has a different sweep length"
            )));
        }
        for (row, expect) in table.rows.iter().zip(&keys) {
            if &row[ki] != *expect {
                return Err(CliError::Report(format!(
                    "run {t} sweep axis mismatch: {} vs {}",
                    row[ki], expect
                )));
            }
        }
    }

    let mut columns = vec![key_col.to_string()];
    columns.extend(labels.iter().map(|l| format!("{value_col}_{l}")));
    for i in 0..runs.len() {
        for j in 0..runs.len() {
            if i != j {
                columns.push(format!("ge_{}_{}", labels[i], labels[j]));
            }
        }
    }
    let mut out = Table {
        metadata: vec![],
        columns,
        rows: vec![],
    };
    for (r, key) in keys.iter().enumerate() {
        let mut row = vec![(*key).clone()];
        let vals: Vec<Option<f64>> = runs
            .iter()
            .zip(&val_idx)
            .map(|(t, &vi)| t.rows[r][vi].parse::<f64>().ok())
            .collect();
        for (t, v) in vals.iter().enumerate() {
            row.push(match v {
                Some(x) => crate::table::fmt_num(*x),
                None => runs[t].rows[r][val_idx[t]].clone(),
            });
        }
        for i in 0..runs.len() {
            for j in 0..runs.len() {
                if i != j {
                    let flag = match (vals[i], vals[j]) {
                        (Some(a), Some(b)) => {
                            if a >= b - 1e-12 {
                                "1"
                            } else {
                                "0"
                            }
                        }
                        _ => "",
                    };
                    row.push(flag.to_string());
                }
            }
        }
        out.push_row(row);
    }
    Ok(out)
}
