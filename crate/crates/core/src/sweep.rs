//! ε-sweeps, log-log rate fits and CSV output with provenance headers.

use std::io::{BufRead, Write};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::scenario::{Measurement, Scenario, SnapshotRow, SummaryRow};
use crate::{Error, Result};

/// Minimum ladder length for a rate fit.
pub const MIN_RATE_POINTS: usize = 4;
/// Fits below this coefficient of determination are flagged.
pub const R_SQUARED_FLAG: f64 = 0.9;

/// A validated ε ladder over one scenario.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    eps_list: Vec<f64>,
    pub config: RunConfig,
}

impl SweepSpec {
    /// Takes the ladder from `config.eps_list`, sorted descending.
    pub fn new(config: RunConfig) -> Result<Self> {
        let mut eps_list = config.eps_list.clone();
        if eps_list.len() < MIN_RATE_POINTS {
            return Err(Error::TooFewSamples { needed: MIN_RATE_POINTS, got: eps_list.len() });
        }
        if let Some(e) = eps_list.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(Error::InvalidInput(format!("eps = {e} outside (0, 1]")));
        }
        eps_list.sort_by(|a, b| b.total_cmp(a));
        if let Some(w) = eps_list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateEps(w[0]));
        }
        Ok(Self { eps_list, config })
    }

    pub fn eps_list(&self) -> &[f64] {
        &self.eps_list
    }
}

/// Results of a sweep in ladder order.
#[derive(Debug, Clone, Default)]
pub struct SweepTable {
    pub rows: Vec<SnapshotRow>,
    pub summaries: Vec<SummaryRow>,
    /// `(ε, message)` of runs that failed.
    pub failures: Vec<(f64, String)>,
}

impl SweepTable {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Run every ε of the ladder on a pool of `workers` threads; failed runs are
/// recorded and the sweep continues.
pub fn run_sweep(spec: &SweepSpec, workers: usize) -> Result<SweepTable> {
    let scenario = Scenario::new(spec.config.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    let results: Vec<Result<Measurement>> = pool.install(|| {
        spec.eps_list
            .par_iter()
            .map(|eps| scenario.simulate(*eps).and_then(|run| scenario.measure(&run)))
            .collect()
    });
    let mut table = SweepTable::default();
    for (eps, result) in spec.eps_list.iter().zip(results) {
        match result {
            Ok(m) => {
                table.rows.extend(m.rows);
                table.summaries.push(m.summary);
            }
            Err(e) => {
                log::error!("run eps = {eps} failed: {e}");
                table.failures.push((*eps, e.to_string()));
            }
        }
    }
    Ok(table)
}

/// Least-squares line through `(log ε, log value)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub quantity: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// `r² < 0.9`.
    pub flagged: bool,
}

pub fn fit_rates(eps: &[f64], values: &[f64], quantity: &str) -> Result<RateFit> {
    if eps.len() != values.len() {
        return Err(Error::InvalidInput(format!("{} eps for {} values", eps.len(), values.len())));
    }
    if eps.len() < MIN_RATE_POINTS {
        return Err(Error::TooFewSamples { needed: MIN_RATE_POINTS, got: eps.len() });
    }
    if let Some(v) = eps.iter().chain(values).find(|v| !(**v > 0.0)) {
        return Err(Error::NonPositive(*v));
    }
    let x: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let y: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all eps values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(&y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(RateFit { quantity: quantity.to_string(), slope, intercept, r_squared, flagged: r_squared < R_SQUARED_FLAG })
}

/// Quantities of [`SummaryRow`] whose ε-rates are fitted.
pub const SUMMARY_RATE_QUANTITIES: [&str; 5] =
    ["sup_l2", "eps_grad_sq", "indicator_sq", "heps_diff_int", "gap_stretched_int"];

fn summary_column(rows: &[SummaryRow], quantity: &str) -> Option<Vec<f64>> {
    let f: fn(&SummaryRow) -> f64 = match quantity {
        "sup_l2" => |r| r.sup_l2,
        "eps_grad_sq" => |r| r.eps_grad_sq,
        "indicator_sq" => |r| r.indicator_sq,
        "heps_diff_int" => |r| r.heps_diff_int,
        "gap_stretched_int" => |r| r.gap_stretched_int,
        "gap_sharp_int" => |r| r.gap_sharp_int,
        "hausdorff_final" => |r| r.hausdorff_final,
        _ => return None,
    };
    Some(rows.iter().map(f).collect())
}

/// Fit every summary quantity; quantities that cannot be fitted are logged
/// and skipped.
pub fn summary_rates(rows: &[SummaryRow]) -> Vec<RateFit> {
    let eps: Vec<f64> = rows.iter().map(|r| r.eps).collect();
    SUMMARY_RATE_QUANTITIES
        .iter()
        .filter_map(|q| {
            let values = summary_column(rows, q)?;
            match fit_rates(&eps, &values, q) {
                Ok(fit) => Some(fit),
                Err(e) => {
                    log::warn!("no rate for {q}: {e}");
                    None
                }
            }
        })
        .collect()
}

/// Write `rows` as CSV after `#` lines naming the table, its units and the
/// config hash.
pub fn write_table<W: Write, S: Serialize>(mut w: W, title: &str, units: &str, hash: &str, rows: &[S]) -> Result<()> {
    writeln!(w, "# {title}")?;
    writeln!(w, "# units: {units}")?;
    writeln!(w, "# config_hash: {hash}")?;
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Read a table written by [`write_table`], skipping `#` lines.
pub fn read_table<R: BufRead, D: DeserializeOwned>(r: R) -> Result<Vec<D>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub const SNAPSHOT_UNITS: &str = "eps, t, u_l2, h_eps, limits, hausdorff and mass in unit-box units \
    (lengths relative to the box side, time in the velocity's time unit); order-parameter norms are L2 over the box";
pub const SUMMARY_UNITS: &str = "h and hausdorff in box lengths, dt in time units, *_int integrated over [0, T], \
    norms as L2 over the box or the space-time cylinder";
