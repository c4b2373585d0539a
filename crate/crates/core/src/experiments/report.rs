//! Report rows, CSV serialization, merging and text rendering.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::numfmt::fmt12;

pub const REPORT_HEADER: &str = "table,method,problem,seeds,mean_mse,std_err,reference,config_hash";

/// One averaged result: a method on a problem over a seed range.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub table: String,
    pub method: String,
    pub problem: String,
    /// `first-last`.
    pub seeds: String,
    pub mean: f64,
    pub std_err: f64,
    /// Value quoted in the original tables, where one exists.
    pub reference: Option<f64>,
    pub config_hash: String,
}

impl ReportRow {
    fn key(&self) -> (String, String, String) {
        (self.table.clone(), self.method.clone(), self.problem.clone())
    }

    fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.table,
            self.method,
            self.problem,
            self.seeds,
            fmt12(self.mean),
            fmt12(self.std_err),
            self.reference.map(fmt12).unwrap_or_default(),
            self.config_hash
        )
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

/// Mean and standard error of the mean.
pub fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

impl ExperimentReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(REPORT_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv_line());
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str, path: &str) -> Result<Self> {
        let mismatch = |detail: String| Error::SchemaMismatch {
            path: path.into(),
            detail,
        };
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end() == REPORT_HEADER => {}
            Some(h) => return Err(mismatch(format!("unexpected header `{h}`"))),
            None => return Err(mismatch("empty file".into())),
        }
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 8 {
                return Err(mismatch(format!("line {}: expected 8 fields, found {}", i + 2, f.len())));
            }
            let num = |s: &str, what: &str| -> Result<f64> {
                s.parse::<f64>().map_err(|_| mismatch(format!("line {}: bad {what} `{s}`", i + 2)))
            };
            rows.push(ReportRow {
                table: f[0].into(),
                method: f[1].into(),
                problem: f[2].into(),
                seeds: f[3].into(),
                mean: num(f[4], "mean")?,
                std_err: num(f[5], "std_err")?,
                reference: if f[6].is_empty() { None } else { Some(num(f[6], "reference value")?) },
                config_hash: f[7].into(),
            });
        }
        Ok(Self { rows })
    }

    /// Union of rows; identical duplicates collapse, conflicting ones are an
    /// error. Row order is first appearance.
    pub fn merge(reports: &[ExperimentReport]) -> Result<Self> {
        let mut seen: BTreeMap<(String, String, String), usize> = BTreeMap::new();
        let mut rows: Vec<ReportRow> = Vec::new();
        for r in reports.iter().flat_map(|r| &r.rows) {
            match seen.get(&r.key()) {
                Some(&i) if rows[i] == *r => {}
                Some(_) => {
                    return Err(Error::DuplicateRow {
                        method: r.method.clone(),
                        problem: format!("{} ({})", r.problem, r.table),
                    })
                }
                None => {
                    seen.insert(r.key(), rows.len());
                    rows.push(r.clone());
                }
            }
        }
        Ok(Self { rows })
    }

    /// One block per table: methods down, problems across, each cell
    /// `ours ± se [reference]`.
    pub fn render_text(&self) -> String {
        let mut tables: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !tables.contains(&r.table.as_str()) {
                tables.push(&r.table);
            }
        }
        let mut out = String::new();
        for table in tables {
            let rows: Vec<&ReportRow> = self.rows.iter().filter(|r| r.table == table).collect();
            let mut methods: Vec<&str> = Vec::new();
            let mut problems: Vec<&str> = Vec::new();
            for r in &rows {
                if !methods.contains(&r.method.as_str()) {
                    methods.push(&r.method);
                }
                if !problems.contains(&r.problem.as_str()) {
                    problems.push(&r.problem);
                }
            }
            let cell = |m: &str, p: &str| -> String {
                rows.iter()
                    .find(|r| r.method == m && r.problem == p)
                    .map(|r| {
                        let mut s = format!("{} ± {}", fmt_short(r.mean), fmt_short(r.std_err));
                        if let Some(pv) = r.reference {
                            let _ = write!(s, " [{}]", fmt_short(pv));
                        }
                        s
                    })
                    .unwrap_or_else(|| "-".into())
            };
            let mut grid: Vec<Vec<String>> = vec![std::iter::once(String::new()).chain(problems.iter().map(|p| p.to_string())).collect()];
            for m in &methods {
                grid.push(std::iter::once(m.to_string()).chain(problems.iter().map(|p| cell(m, p))).collect());
            }
            let widths: Vec<usize> = (0..grid[0].len())
                .map(|c| grid.iter().map(|row| row[c].chars().count()).max().unwrap_or(0))
                .collect();
            let seeds = rows.first().map(|r| r.seeds.as_str()).unwrap_or("");
            let _ = writeln!(out, "{table}  (seeds {seeds}; mean ± s.e. [reference])");
            for row in &grid {
                let line: Vec<String> = row
                    .iter()
                    .zip(&widths)
                    .enumerate()
                    .map(|(c, (s, w))| if c == 0 { format!("{s:<w$}") } else { format!("{s:>w$}") })
                    .collect();
                let _ = writeln!(out, "  {}", line.join("  ").trim_end());
            }
            out.push('\n');
        }
        out
    }
}

fn fmt_short(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.abs() >= 1e4 || x.abs() < 1e-3 {
        format!("{x:.3e}")
    } else {
        format!("{x:.4}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, problem: &str, mean: f64) -> ReportRow {
        ReportRow {
            table: "t".into(),
            method: method.into(),
            problem: problem.into(),
            seeds: "1-25".into(),
            mean,
            std_err: 0.01,
            reference: Some(0.5),
            config_hash: "abc".into(),
        }
    }

    #[test]
    fn csv_round_trip() {
        let r = ExperimentReport {
            rows: vec![row("a", "p", 0.123456789012345), ReportRow { reference: None, ..row("b", "p", 2.0) }],
        };
        let text = r.to_csv();
        let back = ExperimentReport::from_csv(&text, "x").unwrap();
        assert_eq!(back.to_csv(), text);
        assert_eq!(back.rows[1].reference, None);
    }

    #[test]
    fn merge_rules() {
        let a = ExperimentReport { rows: vec![row("a", "p", 1.0)] };
        assert_eq!(ExperimentReport::merge(std::slice::from_ref(&a)).unwrap(), a);
        let b = ExperimentReport { rows: vec![row("b", "p", 1.0)] };
        assert_eq!(ExperimentReport::merge(&[a.clone(), b]).unwrap().rows.len(), 2);
        assert_eq!(ExperimentReport::merge(&[a.clone(), a.clone()]).unwrap(), a);
        let c = ExperimentReport { rows: vec![row("a", "p", 1.5)] };
        assert!(matches!(ExperimentReport::merge(&[a, c]), Err(Error::DuplicateRow { .. })));
    }

    #[test]
    fn schema_errors() {
        assert!(matches!(ExperimentReport::from_csv("a,b\n", "f"), Err(Error::SchemaMismatch { .. })));
        let bad = format!("{REPORT_HEADER}\nt,a,p,1-2,x,0,,h\n");
        assert!(matches!(ExperimentReport::from_csv(&bad, "f"), Err(Error::SchemaMismatch { .. })));
    }

    #[test]
    fn text_table_layout() {
        let r = ExperimentReport {
            rows: vec![row("a", "p", 1.0), row("a", "q", 2.0), row("b", "p", 3.0)],
        };
        let text = r.render_text();
        assert!(text.starts_with("t  (seeds 1-25"));
        assert!(text.contains("1.0000 ± 0.0100 [0.5000]"));
        assert_eq!(text.lines().filter(|l| l.starts_with("  b")).count(), 1);
    }

    #[test]
    fn mean_se_basic() {
        let (m, s) = mean_se(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }
}
