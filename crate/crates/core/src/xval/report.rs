use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

/// How a comparison decides pass/fail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum PassRule {
    /// Every `|analytic - oracle| <= tol`.
    Absolute(f64),
    /// Every `|analytic - oracle| <= tol * |analytic|`.
    Relative(f64),
    /// Every `|analytic - oracle| <= k * SE` (Monte Carlo).
    StandardErrors(f64),
    /// Every value is true (structural checks such as bounds).
    Holds,
}

/// One analytic-versus-oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub criterion: u8,
    pub quantity: String,
    /// What each entry of `analytic`/`oracle` refers to.
    pub points: Vec<String>,
    pub analytic: Vec<f64>,
    pub oracle: Vec<f64>,
    pub standard_error: Option<Vec<f64>>,
    pub max_abs_deviation: f64,
    pub rule: PassRule,
    pub pass: bool,
    pub note: Option<String>,
}

impl ComparisonReport {
    /// Builds a report and evaluates `rule` pointwise.
    pub fn compare(
        criterion: u8,
        quantity: impl Into<String>,
        points: Vec<String>,
        analytic: Vec<f64>,
        oracle: Vec<f64>,
        standard_error: Option<Vec<f64>>,
        rule: PassRule,
    ) -> Self {
        assert_eq!(analytic.len(), oracle.len());
        let devs: Vec<f64> = analytic.iter().zip(&oracle).map(|(a, o)| (a - o).abs()).collect();
        let max_abs_deviation = devs.iter().copied().fold(0.0, f64::max);
        let pass = !devs.is_empty()
            && match rule {
                PassRule::Absolute(tol) => devs.iter().all(|&d| d <= tol),
                PassRule::Relative(tol) => devs.iter().zip(&analytic).all(|(&d, a)| d <= tol * a.abs()),
                PassRule::StandardErrors(k) => {
                    let se = standard_error.as_ref().expect("standard errors required");
                    devs.iter().zip(se).all(|(&d, &s)| d <= k * s + 1e-12)
                }
                PassRule::Holds => analytic.iter().all(|&v| v != 0.0),
            };
        Self {
            criterion,
            quantity: quantity.into(),
            points,
            analytic,
            oracle,
            standard_error,
            max_abs_deviation: if devs.iter().any(|d| d.is_nan()) { f64::NAN } else { max_abs_deviation },
            rule,
            pass,
            note: None,
        }
    }

    /// Structural check: `holds[i]` says whether condition `i` is satisfied.
    pub fn holds(criterion: u8, quantity: impl Into<String>, points: Vec<String>, holds: Vec<bool>) -> Self {
        let ones: Vec<f64> = holds.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();
        let oracle = vec![1.0; ones.len()];
        Self::compare(criterion, quantity, points, ones, oracle, None, PassRule::Holds)
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    fn rule_text(&self) -> String {
        match self.rule {
            PassRule::Absolute(t) => format!("|dev| <= {t:e}"),
            PassRule::Relative(t) => format!("|dev| <= {t} rel"),
            PassRule::StandardErrors(k) => format!("|dev| <= {k} SE"),
            PassRule::Holds => "holds".into(),
        }
    }
}

/// All comparisons of one harness run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub reports: Vec<ComparisonReport>,
    pub uncovered: Vec<String>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn new(seed: u64, reports: Vec<ComparisonReport>, uncovered: Vec<String>) -> Self {
        let pass = uncovered.is_empty() && reports.iter().all(|r| r.pass);
        Self {
            seed,
            reports,
            uncovered,
            pass,
        }
    }

    pub fn criterion_passes(&self, criterion: u8) -> Option<bool> {
        let mut it = self.reports.iter().filter(|r| r.criterion == criterion).peekable();
        it.peek()?;
        Some(it.all(|r| r.pass))
    }

    /// Fixed-width text table, one line per comparison.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<3} {:<58} {:>6} {:>12} {:<18} {}",
            "#", "quantity", "points", "max |dev|", "rule", "result"
        );
        for r in &self.reports {
            let _ = writeln!(
                out,
                "{:<3} {:<58} {:>6} {:>12.3e} {:<18} {}",
                r.criterion,
                r.quantity,
                r.points.len(),
                r.max_abs_deviation,
                r.rule_text(),
                if r.pass { "PASS" } else { "FAIL" }
            );
        }
        for u in &self.uncovered {
            let _ = writeln!(out, "    uncovered analytics operation: {u}");
        }
        let _ = writeln!(out, "overall: {}", if self.pass { "PASS" } else { "FAIL" });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules() {
        let pts = vec!["a".to_string(), "b".to_string()];
        let r = ComparisonReport::compare(1, "x", pts.clone(), vec![1.0, 2.0], vec![1.0, 2.05], None, PassRule::Absolute(0.1));
        assert!(r.pass);
        assert!((r.max_abs_deviation - 0.05).abs() < 1e-12);
        let r = ComparisonReport::compare(1, "x", pts.clone(), vec![1.0, 2.0], vec![1.0, 2.05], None, PassRule::Relative(0.01));
        assert!(!r.pass);
        let r = ComparisonReport::compare(
            1,
            "x",
            pts.clone(),
            vec![1.0, 2.0],
            vec![1.2, 2.0],
            Some(vec![0.1, 0.1]),
            PassRule::StandardErrors(3.0),
        );
        assert!(r.pass);
        let r = ComparisonReport::holds(1, "x", pts, vec![true, false]);
        assert!(!r.pass);
        let nan = ComparisonReport::compare(1, "x", vec!["a".into()], vec![f64::NAN], vec![1.0], None, PassRule::Absolute(1.0));
        assert!(!nan.pass);
    }

    #[test]
    fn suite_verdict_and_table() {
        let ok = ComparisonReport::holds(1, "bound", vec!["p".into()], vec![true]);
        let bad = ComparisonReport::holds(2, "bound", vec!["p".into()], vec![false]);
        let s = SuiteReport::new(7, vec![ok.clone(), bad], vec![]);
        assert!(!s.pass);
        assert_eq!(s.criterion_passes(1), Some(true));
        assert_eq!(s.criterion_passes(2), Some(false));
        assert_eq!(s.criterion_passes(3), None);
        assert!(s.table().contains("FAIL"));
        assert!(SuiteReport::new(7, vec![ok], vec![]).pass);
    }
}
