//! Averaging cell results over the factors not being tabulated.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimands::Estimand;
use crate::experiment::Design;

use super::{Arm, CellResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Grouping {
    /// One row per method and estimand, averaged over every other factor.
    Method,
    Nu,
    R2,
    Pattern,
}

impl Grouping {
    pub fn name(self) -> &'static str {
        match self {
            Grouping::Method => "method",
            Grouping::Nu => "nu",
            Grouping::R2 => "r2",
            Grouping::Pattern => "pattern",
        }
    }
}

impl fmt::Display for Grouping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Grouping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "method" => Ok(Grouping::Method),
            "nu" => Ok(Grouping::Nu),
            "r2" | "rho2" => Ok(Grouping::R2),
            "pattern" => Ok(Grouping::Pattern),
            _ => Err(Error::Parse(format!("unknown grouping {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub design: Design,
    pub arm: Arm,
    /// Factor level, or `"all"` when grouping by method alone.
    pub level: String,
    pub estimand: Estimand,
    /// Cells with a finite estimate that entered the average.
    pub n_cells: usize,
    pub rel_bias: f64,
    pub rel_rmse: f64,
    pub median_rel_bias: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub grouping: Grouping,
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn get(&self, arm: Arm, level: &str, estimand: Estimand) -> Option<&SummaryRow> {
        self.rows
            .iter()
            .find(|r| r.arm == arm && r.level == level && r.estimand == estimand)
    }
}

/// Key that sorts factor levels numerically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Level {
    All,
    Number(u64),
    Name(&'static str),
}

fn level_of(r: &CellResult, grouping: Grouping) -> (Level, String) {
    let c = &r.config;
    match grouping {
        Grouping::Method => (Level::All, "all".into()),
        Grouping::Nu => (Level::Number(c.nu.to_bits()), c.nu.to_string()),
        Grouping::R2 => (Level::Number(c.rho2.to_bits()), c.rho2.to_string()),
        Grouping::Pattern => (Level::Name(c.pattern.name()), c.pattern.name().into()),
    }
}

/// Averages `rel_bias`, `rel_rmse` and `median_rel_bias` over the cells that
/// share a design, arm, grouping level and estimand.
pub fn summarize(results: &[CellResult], grouping: Grouping) -> Result<SummaryTable> {
    if results.is_empty() {
        return Err(Error::Empty("no cell results to summarize"));
    }
    type Key = (Design, Arm, Level, Estimand);
    let mut groups: BTreeMap<Key, (String, [Vec<f64>; 3])> = BTreeMap::new();
    for r in results {
        let (level, label) = level_of(r, grouping);
        for rec in &r.records {
            let entry = groups
                .entry((r.config.design, r.config.arm, level.clone(), rec.estimand))
                .or_insert_with(|| (label.clone(), Default::default()));
            if rec.rel_bias.is_finite() && rec.rel_rmse.is_finite() {
                entry.1[0].push(rec.rel_bias);
                entry.1[1].push(rec.rel_rmse);
                entry.1[2].push(rec.median_rel_bias);
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let rows = groups
        .into_iter()
        .map(|((design, arm, _, estimand), (level, [bias, rmse, med]))| SummaryRow {
            design,
            arm,
            level,
            estimand,
            n_cells: bias.len(),
            rel_bias: mean(&bias),
            rel_rmse: mean(&rmse),
            median_rel_bias: mean(&med),
        })
        .collect();
    Ok(SummaryTable { grouping, rows })
}
