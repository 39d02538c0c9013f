//! Per-period records and the versioned CSV formats.
//!
//! Every file starts with a `# pla.<kind>.v1` comment line followed by a
//! header row naming each column. Floats are written with 17 significant
//! digits so parsing an emitted file reproduces the in-memory values bit for
//! bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::saa::OracleResult;

pub const STEPLOG_SCHEMA: &str = "pla.steplog.v1";
pub const REGRET_SCHEMA: &str = "pla.regret.v1";
pub const ORACLE_SCHEMA: &str = "pla.oracle.v1";
pub const SUMMARY_SCHEMA: &str = "pla.summary.v1";

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed step log: {0}")]
    Malformed(String),
}

/// One period of one run: the dispatch, the decision pair, the realization,
/// and the evaluation columns filled in by the regret pass.
#[derive(Debug, Clone, PartialEq)]
pub struct StepLog {
    pub t: u64,
    /// Agent (or baseline arm) the period was charged to.
    pub k_hat: usize,
    /// 0 for initialization probes, otherwise the agent's stage at dispatch.
    pub stage: u8,
    pub price: f64,
    pub inventory: Vec<f64>,
    pub demand: Vec<f64>,
    /// Realized allocation, row-major `m×n`.
    pub allocation: Vec<f64>,
    /// Cost actually incurred this period.
    pub realized_cost: f64,
    /// Exact expected cost of the played pair (NaN until annotated).
    pub oracle_cost: f64,
    /// `oracle_cost` minus the global optimum (NaN until annotated).
    pub inst_regret: f64,
    /// Selection bounds at dispatch time, one per agent.
    pub lcb: Vec<f64>,
}

fn fmt_f(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f(s: &str) -> Result<f64, CsvError> {
    s.parse::<f64>()
        .map_err(|_| CsvError::Malformed(format!("bad float {s:?}")))
}

/// Serialize step logs; the column layout is derived from the first row.
pub fn steps_to_csv(logs: &[StepLog]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {STEPLOG_SCHEMA}");
    let (m, n, karms) = logs
        .first()
        .map(|r| (r.inventory.len(), r.demand.len(), r.lcb.len()))
        .unwrap_or((0, 0, 0));
    let mut header = vec!["t".to_string(), "k_hat".into(), "stage".into(), "p".into()];
    header.extend((0..m).map(|i| format!("i_{i}")));
    header.extend((0..n).map(|j| format!("d_{j}")));
    header.extend((0..m).flat_map(|i| (0..n).map(move |j| format!("x_{i}_{j}"))));
    header.extend([
        "q_realized".to_string(),
        "q_oracle".into(),
        "inst_regret".into(),
    ]);
    header.extend((0..karms).map(|k| format!("lcb_{k}")));
    let _ = writeln!(out, "{}", header.join(","));
    for r in logs {
        let mut cols = vec![
            r.t.to_string(),
            r.k_hat.to_string(),
            r.stage.to_string(),
            fmt_f(r.price),
        ];
        cols.extend(r.inventory.iter().map(|v| fmt_f(*v)));
        cols.extend(r.demand.iter().map(|v| fmt_f(*v)));
        cols.extend(r.allocation.iter().map(|v| fmt_f(*v)));
        cols.push(fmt_f(r.realized_cost));
        cols.push(fmt_f(r.oracle_cost));
        cols.push(fmt_f(r.inst_regret));
        cols.extend(r.lcb.iter().map(|v| fmt_f(*v)));
        let _ = writeln!(out, "{}", cols.join(","));
    }
    out
}

/// Parse a file produced by [`steps_to_csv`].
pub fn steps_from_csv(text: &str) -> Result<Vec<StepLog>, CsvError> {
    let mut lines = text.lines().filter(|l| !l.is_empty());
    let schema = lines
        .next()
        .ok_or_else(|| CsvError::Malformed("empty file".into()))?;
    if schema.trim() != format!("# {STEPLOG_SCHEMA}") {
        return Err(CsvError::Malformed(format!("unknown schema {schema:?}")));
    }
    let header = lines
        .next()
        .ok_or_else(|| CsvError::Malformed("missing header".into()))?;
    let names: Vec<&str> = header.split(',').collect();
    let m = names.iter().filter(|h| h.starts_with("i_")).count();
    let n = names.iter().filter(|h| h.starts_with("d_")).count();
    let karms = names.iter().filter(|h| h.starts_with("lcb_")).count();
    let expected = 4 + m + n + m * n + 3 + karms;
    if names.len() != expected {
        return Err(CsvError::Malformed(format!(
            "header has {} columns, expected {expected}",
            names.len()
        )));
    }
    let mut logs = Vec::new();
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != expected {
            return Err(CsvError::Malformed(format!(
                "row has {} columns, expected {expected}",
                f.len()
            )));
        }
        let t = f[0]
            .parse::<u64>()
            .map_err(|_| CsvError::Malformed(format!("bad t {:?}", f[0])))?;
        let k_hat = f[1]
            .parse::<usize>()
            .map_err(|_| CsvError::Malformed(format!("bad k_hat {:?}", f[1])))?;
        let stage = f[2]
            .parse::<u8>()
            .map_err(|_| CsvError::Malformed(format!("bad stage {:?}", f[2])))?;
        let price = parse_f(f[3])?;
        let mut at = 4usize;
        let floats = |at: &mut usize, k: usize| -> Result<Vec<f64>, CsvError> {
            let out = f[*at..*at + k].iter().map(|s| parse_f(s)).collect();
            *at += k;
            out
        };
        let inventory = floats(&mut at, m)?;
        let demand = floats(&mut at, n)?;
        let allocation = floats(&mut at, m * n)?;
        let realized_cost = parse_f(f[at])?;
        let oracle_cost = parse_f(f[at + 1])?;
        let inst_regret = parse_f(f[at + 2])?;
        at += 3;
        let lcb = floats(&mut at, karms)?;
        logs.push(StepLog {
            t,
            k_hat,
            stage,
            price,
            inventory,
            demand,
            allocation,
            realized_cost,
            oracle_cost,
            inst_regret,
            lcb,
        });
    }
    Ok(logs)
}

pub fn write_steps_csv(path: &Path, logs: &[StepLog]) -> Result<(), CsvError> {
    fs::write(path, steps_to_csv(logs))?;
    Ok(())
}

pub fn read_steps_csv(path: &Path) -> Result<Vec<StepLog>, CsvError> {
    steps_from_csv(&fs::read_to_string(path)?)
}

/// Cumulative regret of one replication, plus the fitted log-log slope.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretSeries {
    pub seed: u64,
    /// `cum[t-1]` is the cumulative regret after period `t`.
    pub cum: Vec<f64>,
    pub window: (u64, u64),
    pub slope: Option<f64>,
}

pub fn regret_to_csv(series: &RegretSeries) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {REGRET_SCHEMA}");
    let _ = writeln!(out, "t,cum_regret");
    for (i, v) in series.cum.iter().enumerate() {
        let _ = writeln!(out, "{},{}", i + 1, fmt_f(*v));
    }
    out
}

pub fn write_regret_csv(path: &Path, series: &RegretSeries) -> Result<(), CsvError> {
    fs::write(path, regret_to_csv(series))?;
    Ok(())
}

pub fn oracle_to_csv(oracle: &OracleResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {ORACLE_SCHEMA}");
    let _ = writeln!(out, "kind,k,lo,hi,p_star,w_star");
    for it in &oracle.per_interval {
        let _ = writeln!(
            out,
            "interval,{},{},{},{},{}",
            it.k,
            fmt_f(it.lo),
            fmt_f(it.hi),
            fmt_f(it.p_star),
            fmt_f(it.w_star)
        );
    }
    let _ = writeln!(
        out,
        "global,,,,{},{}",
        fmt_f(oracle.p_star),
        fmt_f(oracle.w_star)
    );
    out
}

pub fn write_oracle_csv(path: &Path, oracle: &OracleResult) -> Result<(), CsvError> {
    fs::write(path, oracle_to_csv(oracle))?;
    Ok(())
}

/// One summary row per replication: total regret, fitted slope, and the
/// per-agent period split.
pub fn summary_to_csv(rows: &[(u64, f64, Option<f64>, Vec<u64>)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# {SUMMARY_SCHEMA}");
    let arms = rows.first().map(|r| r.3.len()).unwrap_or(0);
    let mut header = vec!["seed".to_string(), "reg_total".into(), "slope".into()];
    header.extend((0..arms).map(|k| format!("t_k_{k}")));
    let _ = writeln!(out, "{}", header.join(","));
    for (seed, reg, slope, tk) in rows {
        let mut cols = vec![
            seed.to_string(),
            fmt_f(*reg),
            fmt_f(slope.unwrap_or(f64::NAN)),
        ];
        cols.extend(tk.iter().map(|v| v.to_string()));
        let _ = writeln!(out, "{}", cols.join(","));
    }
    out
}

pub fn write_summary_csv(
    path: &Path,
    rows: &[(u64, f64, Option<f64>, Vec<u64>)],
) -> Result<(), CsvError> {
    fs::write(path, summary_to_csv(rows))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_row(t: u64) -> StepLog {
        StepLog {
            t,
            k_hat: 1,
            stage: 2,
            price: 0.1 + t as f64 * 0.3333333333333333,
            inventory: vec![1.0 / 3.0, 0.7],
            demand: vec![0.123456789012345678, 2.0],
            allocation: vec![0.0, 0.1, 0.2, 0.3],
            realized_cost: -0.55,
            oracle_cost: -0.5400000000001,
            inst_regret: 1e-17,
            lcb: vec![f64::NEG_INFINITY, -1.25, -7.0],
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let logs: Vec<StepLog> = (1..=5).map(sample_row).collect();
        let text = steps_to_csv(&logs);
        let back = steps_from_csv(&text).unwrap();
        assert_eq!(logs, back);
        // And a second serialization is byte-identical.
        assert_eq!(text, steps_to_csv(&back));
    }

    #[test]
    fn schema_line_is_checked() {
        let text = "# pla.steplog.v9\nt,k_hat\n";
        assert!(steps_from_csv(text).is_err());
    }

    #[test]
    fn infinities_survive_the_trip() {
        let mut row = sample_row(1);
        row.lcb = vec![f64::NEG_INFINITY, f64::INFINITY];
        let back = steps_from_csv(&steps_to_csv(&[row.clone()])).unwrap();
        assert_eq!(back[0].lcb, row.lcb);
    }
}
