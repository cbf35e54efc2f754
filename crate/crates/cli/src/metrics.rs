//! Metrics over certification records joined with ground-truth labels.
//!
//! Abstentions count as incorrect in both clean and certified accuracy; the
//! abstain rate is reported separately. Certified accuracy at radius r is
//! the fraction of all records that are correct and certified at radius at
//! least r, so the curve is non-increasing in r.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::records::{RadiusValue, RunRecord};
use crate::{CliError, CliResult};

/// Default evaluation grid: powers of two up to 1024 (including the
/// headline radius 128), preceded by 0.
pub fn default_grid() -> Vec<u64> {
    let mut grid = vec![0u64];
    grid.extend((0..=10).map(|e| 1u64 << e));
    grid
}

/// Median over ordering ranks; `None` for an empty set.
fn lower_median<T: Copy + Ord>(values: &mut Vec<T>) -> Option<T> {
    if values.is_empty() {
        return None;
    }
    values.sort();
    Some(values[(values.len() - 1) / 2])
}

#[derive(Debug, Clone, PartialEq)]
pub struct OpsMetrics {
    /// (radius, certified accuracy) over the grid.
    pub cert_acc: Vec<(u64, f64)>,
    /// Class-1 certified true-positive rate over the grid.
    pub cert_tpr: Vec<(u64, f64)>,
    /// Class-0 certified true-negative rate over the grid.
    pub cert_tnr: Vec<(u64, f64)>,
    /// Median certified radius (not-certifiable ranks below zero).
    pub median_cr: RadiusValue,
    /// Median certified radius as a percentage of sequence length.
    pub median_ncr_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub total: usize,
    pub clean_accuracy: f64,
    pub abstain_rate: f64,
    pub per_ops: BTreeMap<String, OpsMetrics>,
    pub grid: Vec<u64>,
}

/// Joins records to labels by manifest path and computes the report.
pub fn compute_metrics(
    records: &[RunRecord],
    labels: &BTreeMap<String, usize>,
    grid: &[u64],
) -> CliResult<MetricsReport> {
    if records.is_empty() {
        return Err(CliError::Input("no records to score".to_string()));
    }
    let mut joined: Vec<(&RunRecord, usize)> = Vec::with_capacity(records.len());
    for record in records {
        let label = labels.get(&record.path).ok_or_else(|| {
            CliError::Input(format!("record path {:?} not present in manifest", record.path))
        })?;
        joined.push((record, *label));
    }

    let total = joined.len();
    let correct = |record: &RunRecord, label: usize| record.pred == Some(label);
    let clean_accuracy =
        joined.iter().filter(|(r, l)| correct(r, *l)).count() as f64 / total as f64;
    let abstain_rate = joined.iter().filter(|(r, _)| r.abstain).count() as f64 / total as f64;

    let mut op_labels: Vec<String> = Vec::new();
    for (record, _) in &joined {
        for key in record.radius.keys() {
            if !op_labels.contains(key) {
                op_labels.push(key.clone());
            }
        }
    }
    op_labels.sort();

    let mut per_ops = BTreeMap::new();
    for ops in op_labels {
        let radius_of = |record: &RunRecord| -> RadiusValue {
            record
                .radius
                .get(&ops)
                .copied()
                .unwrap_or(RadiusValue::NotCertifiable)
        };
        let curve = |keep: &dyn Fn(usize) -> bool| -> Vec<(u64, f64)> {
            let population: Vec<&(&RunRecord, usize)> =
                joined.iter().filter(|(_, l)| keep(*l)).collect();
            grid.iter()
                .map(|&r| {
                    let hits = population
                        .iter()
                        .filter(|(rec, l)| correct(rec, *l) && radius_of(rec).covers(r))
                        .count();
                    let denom = population.len().max(1);
                    (r, hits as f64 / denom as f64)
                })
                .collect()
        };
        let cert_acc = curve(&|_| true);
        let cert_tpr = curve(&|l| l == 1);
        let cert_tnr = curve(&|l| l == 0);

        let mut cr_ranks: Vec<i128> = joined.iter().map(|(r, _)| radius_of(r).rank()).collect();
        let median_rank = lower_median(&mut cr_ranks).unwrap();
        let median_cr = match median_rank {
            -1 => RadiusValue::NotCertifiable,
            i128::MAX => RadiusValue::Unbounded,
            v => RadiusValue::Finite(v as u64),
        };
        // NCR in basis points to keep integer ordering; -1 for uncertified.
        let mut ncr_ranks: Vec<i128> = joined
            .iter()
            .map(|(r, _)| match radius_of(r) {
                RadiusValue::Finite(v) if r.len > 0 => {
                    (1_000_000.0 * v as f64 / r.len as f64).round() as i128
                }
                RadiusValue::Unbounded => i128::MAX,
                _ => -1,
            })
            .collect();
        let median_ncr_pct = match lower_median(&mut ncr_ranks).unwrap() {
            -1 => -1.0,
            i128::MAX => f64::INFINITY,
            v => v as f64 / 10_000.0,
        };
        per_ops.insert(
            ops,
            OpsMetrics {
                cert_acc,
                cert_tpr,
                cert_tnr,
                median_cr,
                median_ncr_pct,
            },
        );
    }

    Ok(MetricsReport {
        total,
        clean_accuracy,
        abstain_rate,
        per_ops,
        grid: grid.to_vec(),
    })
}

fn radius_cell(r: RadiusValue) -> String {
    match r {
        RadiusValue::Finite(v) => v.to_string(),
        RadiusValue::Unbounded => "unbounded".to_string(),
        RadiusValue::NotCertifiable => "none".to_string(),
    }
}

impl MetricsReport {
    /// Human-readable table; a pure function of the report.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        writeln!(
            out,
            "records {}  clean-accuracy {:.4}  abstain-rate {:.4}",
            self.total, self.clean_accuracy, self.abstain_rate
        )
        .unwrap();
        for (ops, m) in &self.per_ops {
            writeln!(
                out,
                "[{ops}] median-CR {}  median-NCR% {}",
                radius_cell(m.median_cr),
                if m.median_ncr_pct.is_infinite() {
                    "unbounded".to_string()
                } else {
                    format!("{:.4}", m.median_ncr_pct)
                }
            )
            .unwrap();
            writeln!(out, "{:>8} {:>10} {:>10} {:>10}", "radius", "cert-acc", "cert-tpr", "cert-tnr").unwrap();
            for (i, &(r, acc)) in m.cert_acc.iter().enumerate() {
                writeln!(
                    out,
                    "{:>8} {:>10.4} {:>10.4} {:>10.4}",
                    r, acc, m.cert_tpr[i].1, m.cert_tnr[i].1
                )
                .unwrap();
            }
        }
        out
    }

    /// Machine-readable CSV: one row per (op set, radius).
    pub fn render_csv(&self) -> String {
        let mut out = String::from("ops,radius,cert_acc,cert_tpr,cert_tnr\n");
        for (ops, m) in &self.per_ops {
            for (i, &(r, acc)) in m.cert_acc.iter().enumerate() {
                writeln!(out, "{ops},{r},{acc},{},{}", m.cert_tpr[i].1, m.cert_tnr[i].1).unwrap();
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn record(path: &str, pred: Option<usize>, radius: RadiusValue, len: usize) -> RunRecord {
        let mut map = BTreeMap::new();
        map.insert("del+ins+sub".to_string(), radius);
        RunRecord {
            path: path.to_string(),
            len,
            pred,
            abstain: pred.is_none(),
            mu_hat: Some(1.0),
            mu_lcb: Some(0.99),
            radius: map,
            ncr_pct: None,
            seed: 0,
            error: None,
        }
    }

    fn labels(pairs: &[(&str, usize)]) -> BTreeMap<String, usize> {
        pairs.iter().map(|(p, l)| (p.to_string(), *l)).collect()
    }

    #[test]
    fn step_function_certified_accuracy() {
        let records: Vec<RunRecord> = (0..4)
            .map(|i| record(&format!("f{i}"), Some(1), RadiusValue::Finite(5), 50))
            .collect();
        let labels = labels(&[("f0", 1), ("f1", 1), ("f2", 1), ("f3", 1)]);
        let report = compute_metrics(&records, &labels, &[0, 5, 6]).unwrap();
        let m = &report.per_ops["del+ins+sub"];
        assert_eq!(m.cert_acc, vec![(0, 1.0), (5, 1.0), (6, 0.0)]);
        assert_eq!(m.median_cr, RadiusValue::Finite(5));
        assert_eq!(m.median_ncr_pct, 10.0);
    }

    #[test]
    fn half_wrong_gives_half_certified_accuracy_at_zero() {
        let records = vec![
            record("a", Some(1), RadiusValue::Finite(10), 10),
            record("b", Some(1), RadiusValue::Finite(10), 10),
            record("c", Some(0), RadiusValue::Finite(10), 10),
            record("d", Some(0), RadiusValue::Finite(10), 10),
        ];
        // All files are truly class 1: c and d are wrong.
        let labels = labels(&[("a", 1), ("b", 1), ("c", 1), ("d", 1)]);
        let report = compute_metrics(&records, &labels, &[0]).unwrap();
        assert_eq!(report.per_ops["del+ins+sub"].cert_acc[0].1, 0.5);
        assert_eq!(report.clean_accuracy, 0.5);
    }

    #[test]
    fn median_cr_is_an_order_statistic() {
        let crs = [1u64, 2, 3, 4, 100];
        let records: Vec<RunRecord> = crs
            .iter()
            .enumerate()
            .map(|(i, &cr)| record(&format!("f{i}"), Some(1), RadiusValue::Finite(cr), 100))
            .collect();
        let labels = labels(&[("f0", 1), ("f1", 1), ("f2", 1), ("f3", 1), ("f4", 1)]);
        let report = compute_metrics(&records, &labels, &default_grid()).unwrap();
        assert_eq!(
            report.per_ops["del+ins+sub"].median_cr,
            RadiusValue::Finite(3)
        );
    }

    #[test]
    fn cert_acc_curve_is_non_increasing() {
        let records = vec![
            record("a", Some(1), RadiusValue::Finite(3), 10),
            record("b", Some(1), RadiusValue::NotCertifiable, 10),
            record("c", None, RadiusValue::NotCertifiable, 10),
            record("d", Some(0), RadiusValue::Finite(100), 10),
            record("e", Some(1), RadiusValue::Unbounded, 10),
        ];
        let labels = labels(&[("a", 1), ("b", 1), ("c", 0), ("d", 0), ("e", 1)]);
        let report = compute_metrics(&records, &labels, &default_grid()).unwrap();
        let accs: Vec<f64> = report.per_ops["del+ins+sub"]
            .cert_acc
            .iter()
            .map(|&(_, a)| a)
            .collect();
        assert!(accs.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        // The abstaining record c counts against clean accuracy.
        assert_eq!(report.abstain_rate, 0.2);
        assert_eq!(report.clean_accuracy, 0.8);
    }

    #[test]
    fn recomputation_is_byte_identical() {
        let records = vec![
            record("a", Some(1), RadiusValue::Finite(3), 17),
            record("b", Some(0), RadiusValue::Finite(9), 23),
        ];
        let labels = labels(&[("a", 1), ("b", 0)]);
        let r1 = compute_metrics(&records, &labels, &default_grid()).unwrap();
        let r2 = compute_metrics(&records, &labels, &default_grid()).unwrap();
        assert_eq!(r1.render_table(), r2.render_table());
        assert_eq!(r1.render_csv(), r2.render_csv());
    }

    #[test]
    fn unjoinable_record_is_an_error() {
        let records = vec![record("a", Some(1), RadiusValue::Finite(3), 17)];
        let labels = labels(&[("b", 1)]);
        assert!(compute_metrics(&records, &labels, &[0]).is_err());
    }
}
