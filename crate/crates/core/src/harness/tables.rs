//! CSV tables and the key-value run manifest.
//!
//! Statistics are written with 17 significant digits, which is enough for
//! every `f64` to read back bit-identical.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimands::Estimand;

use super::demo::DemoReport;
use super::summary::SummaryTable;
use super::{CellConfig, CellResult, EstimandRecord, FailureCounts};

/// Column order of the cell-level table: one row per cell and estimand.
pub const CELL_HEADER: &str = "design,method,nu,rho2,pattern,n,reps,m,valid_reps,estimand,\
true_value,mean_estimate,sd_estimate,bias,rmse,rel_bias,rel_rmse,median_estimate,median_rel_bias,mc_se,\
method_failures,rejection_fallbacks,rejection_clamps,truncreg_refits,tail_fallbacks,mask_redraws,\
extreme_replications,invariant_violations";

pub const SUMMARY_HEADER: &str = "grouping,design,method,level,estimand,n_cells,rel_bias,rel_rmse,median_rel_bias";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn header(h: &str) -> Vec<&str> {
    h.split(',').collect()
}

pub fn write_cells(results: &[CellResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(CELL_HEADER))?;
    for r in results {
        let c = &r.config;
        let f = &r.failures;
        for rec in &r.records {
            w.write_record([
                c.design.name().to_string(),
                c.arm.name().to_string(),
                c.nu.to_string(),
                c.rho2.to_string(),
                c.pattern.name().to_string(),
                c.n.to_string(),
                c.reps.to_string(),
                c.m.to_string(),
                r.valid_reps.to_string(),
                rec.estimand.name().to_string(),
                num(rec.true_value),
                num(rec.mean_estimate),
                num(rec.sd_estimate),
                num(rec.bias),
                num(rec.rmse),
                num(rec.rel_bias),
                num(rec.rel_rmse),
                num(rec.median_estimate),
                num(rec.median_rel_bias),
                num(rec.mc_se),
                f.method_failures.to_string(),
                f.rejection_fallbacks.to_string(),
                f.rejection_clamps.to_string(),
                f.truncreg_refits.to_string(),
                f.tail_fallbacks.to_string(),
                f.mask_redraws.to_string(),
                f.extreme_replications.to_string(),
                f.invariant_violations.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(row: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    row.get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse(format!("bad or missing {name} in row {:?}", row.position().map(|p| p.line()))))
}

/// Reads a table written by [`write_cells`].
pub fn read_cells(path: &Path) -> Result<Vec<CellResult>> {
    let mut r = csv::Reader::from_path(path)?;
    let got: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if got != header(CELL_HEADER) {
        return Err(Error::Parse(format!("unexpected header {}", got.join(","))));
    }
    let mut out: Vec<CellResult> = Vec::new();
    for row in r.records() {
        let row = row?;
        let config = CellConfig {
            design: field(&row, 0, "design")?,
            arm: field(&row, 1, "method")?,
            nu: field(&row, 2, "nu")?,
            rho2: field(&row, 3, "rho2")?,
            pattern: field(&row, 4, "pattern")?,
            n: field(&row, 5, "n")?,
            reps: field(&row, 6, "reps")?,
            m: field(&row, 7, "m")?,
        };
        let valid_reps = field(&row, 8, "valid_reps")?;
        let record = EstimandRecord {
            estimand: field::<Estimand>(&row, 9, "estimand")?,
            true_value: field(&row, 10, "true_value")?,
            mean_estimate: field(&row, 11, "mean_estimate")?,
            sd_estimate: field(&row, 12, "sd_estimate")?,
            bias: field(&row, 13, "bias")?,
            rmse: field(&row, 14, "rmse")?,
            rel_bias: field(&row, 15, "rel_bias")?,
            rel_rmse: field(&row, 16, "rel_rmse")?,
            median_estimate: field(&row, 17, "median_estimate")?,
            median_rel_bias: field(&row, 18, "median_rel_bias")?,
            mc_se: field(&row, 19, "mc_se")?,
        };
        let failures = FailureCounts {
            method_failures: field(&row, 20, "method_failures")?,
            rejection_fallbacks: field(&row, 21, "rejection_fallbacks")?,
            rejection_clamps: field(&row, 22, "rejection_clamps")?,
            truncreg_refits: field(&row, 23, "truncreg_refits")?,
            tail_fallbacks: field(&row, 24, "tail_fallbacks")?,
            mask_redraws: field(&row, 25, "mask_redraws")?,
            extreme_replications: field(&row, 26, "extreme_replications")?,
            invariant_violations: field(&row, 27, "invariant_violations")?,
        };
        match out.last_mut() {
            Some(last) if last.config == config => last.records.push(record),
            _ => out.push(CellResult {
                config,
                valid_reps,
                records: vec![record],
                failures,
            }),
        }
    }
    Ok(out)
}

pub fn write_summary(table: &SummaryTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header(SUMMARY_HEADER))?;
    for r in &table.rows {
        w.write_record([
            table.grouping.name().to_string(),
            r.design.name().to_string(),
            r.arm.name().to_string(),
            r.level.clone(),
            r.estimand.name().to_string(),
            r.n_cells.to_string(),
            num(r.rel_bias),
            num(r.rel_rmse),
            num(r.median_rel_bias),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `key=value` lines in the given order.
pub fn write_manifest(entries: &[(String, String)], path: &Path) -> Result<()> {
    let mut f = fs::File::create(path)?;
    for (k, v) in entries {
        if k.contains('=') || k.contains('\n') || v.contains('\n') {
            return Err(Error::InvalidArgument(format!("manifest entry {k:?} cannot be written")));
        }
        writeln!(f, "{k}={v}")?;
    }
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<BTreeMap<String, String>> {
    fs::read_to_string(path)?
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| Error::Parse(format!("manifest line without '=': {l}")))
        })
        .collect()
}

/// Writes `<method>_moments.csv` and `<method>_grid.csv` into `dir`.
pub fn write_demo(report: &DemoReport, dir: &Path) -> Result<()> {
    let name = report.method.name();
    let mut w = csv::Writer::from_path(dir.join(format!("{name}_moments.csv")))?;
    w.write_record(["sample", "count", "mean", "variance", "skewness", "min", "max", "frac_negative"])?;
    for (label, m) in [("observed", &report.observed), ("imputed", &report.imputed), ("completed", &report.completed)] {
        w.write_record([
            label.to_string(),
            m.count.to_string(),
            num(m.mean),
            num(m.variance),
            num(m.skewness),
            num(m.min),
            num(m.max),
            num(m.frac_negative),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_path(dir.join(format!("{name}_grid.csv")))?;
    w.write_record(["x", "cdf_observed", "cdf_imputed", "cdf_difference", "density_observed", "density_imputed"])?;
    for g in &report.grid {
        w.write_record([
            num(g.x),
            num(g.cdf_observed),
            num(g.cdf_imputed),
            num(g.cdf_imputed - g.cdf_observed),
            num(g.density_observed),
            num(g.density_imputed),
        ])?;
    }
    w.flush()?;
    Ok(())
}
