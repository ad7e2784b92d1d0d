//! Line-based text formats for metrics reports and learning curves.
//!
//! Report lines are `fold<i>\tTP\tFP\tFN\tTN\tprecision\trecall\tf`
//! followed by one `mean` line. Lines starting with `#` are comments.
//! Curves are `epoch\ttrain_err\ttest_err`, one line per epoch.

use std::fmt::Write as _;

use super::kfold::{CvReport, Envelope};
use super::metrics::Metrics;
use super::train::LearningCurve;
use crate::error::{Error, Result};

fn metrics_line(out: &mut String, name: &str, m: &Metrics) {
    writeln!(
        out,
        "{name}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
        m.tp, m.fp, m.fn_, m.tn, m.precision, m.recall, m.f_measure
    )
    .unwrap();
}

/// Per-fold lines, the mean line, and for the entropy method one comment
/// line per fitted range.
pub fn format_report(cv: &CvReport) -> String {
    let mut out = String::new();
    writeln!(out, "# method {}", cv.method).unwrap();
    for (i, fold) in cv.folds.iter().enumerate() {
        if let Some(r) = fold.range {
            writeln!(out, "# fold{i} range {r}").unwrap();
        }
    }
    for (i, fold) in cv.folds.iter().enumerate() {
        metrics_line(&mut out, &format!("fold{i}"), &fold.metrics);
    }
    metrics_line(&mut out, "mean", &cv.mean());
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParsedReport {
    pub folds: Vec<Metrics>,
    pub mean: Metrics,
}

fn bad(line: usize, what: &str) -> Error {
    Error::Config(format!("report line {line}: {what}"))
}

pub fn parse_report(text: &str) -> Result<ParsedReport> {
    let mut folds = Vec::new();
    let mut mean = None;
    for (n, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 8 {
            return Err(bad(n, "expected 8 tab-separated fields"));
        }
        let count = |i: usize| fields[i].parse::<usize>().map_err(|_| bad(n, "bad count"));
        let rate = |i: usize| fields[i].parse::<f64>().map_err(|_| bad(n, "bad rate"));
        let m = Metrics {
            tp: count(1)?,
            fp: count(2)?,
            fn_: count(3)?,
            tn: count(4)?,
            precision: rate(5)?,
            recall: rate(6)?,
            f_measure: rate(7)?,
        };
        match fields[0] {
            "mean" => mean = Some(m),
            name if name.strip_prefix("fold") == Some(&folds.len().to_string()) => folds.push(m),
            _ => return Err(bad(n, "unexpected row name")),
        }
    }
    Ok(ParsedReport {
        folds,
        mean: mean.ok_or_else(|| Error::Config("report has no mean line".into()))?,
    })
}

/// One line per epoch, 1-based. A missing test error is written as `NaN`.
pub fn format_curve(curve: &LearningCurve) -> String {
    let mut out = String::new();
    for (e, train) in curve.train.iter().enumerate() {
        let test = curve.test.get(e).copied().unwrap_or(f64::NAN);
        writeln!(out, "{}\t{train}\t{test}", e + 1).unwrap();
    }
    out
}

pub fn parse_curve(text: &str) -> Result<LearningCurve> {
    let mut curve = LearningCurve::default();
    for (n, line) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != 3 {
            return Err(bad(n, "expected epoch, train and test error"));
        }
        let train: f64 = f[1].parse().map_err(|_| bad(n, "bad train error"))?;
        let test: f64 = f[2].parse().map_err(|_| bad(n, "bad test error"))?;
        curve.train.push(train);
        if !test.is_nan() {
            curve.test.push(test);
        }
    }
    Ok(curve)
}

/// Envelopes across folds: `epoch` then min/mean/max of train and test.
pub fn format_envelopes(train: &Envelope, test: &Envelope) -> String {
    let mut out = String::from(
        "# epoch\ttrain_min\ttrain_mean\ttrain_max\ttest_min\ttest_mean\ttest_max\n",
    );
    for e in 0..train.mean.len() {
        let t = |v: &Vec<f64>| v.get(e).copied().unwrap_or(f64::NAN);
        writeln!(
            out,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            e + 1,
            train.min[e],
            train.mean[e],
            train.max[e],
            t(&test.min),
            t(&test.mean),
            t(&test.max)
        )
        .unwrap();
    }
    out
}
