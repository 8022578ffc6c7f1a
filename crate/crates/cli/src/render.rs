//! Aligned plain-text output for `--format human`.

use std::fmt::Write;

use woe_core::evidence::{EvidenceItem, HypothesisReport, RedactedReport};
use woe_core::metrics::{InstanceSelection, ParticipantSummary};
use woe_core::{ConditionView, GaussianEvidenceModel};

use crate::Classification;

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

pub fn fit_summary(model: &GaussianEvidenceModel, rows: usize, accuracy: Option<f64>) -> String {
    let mut s = format!(
        "fitted {} classes over {} features from {rows} rows ({:?})\n",
        model.num_classes(),
        model.dim(),
        model.assumption()
    );
    let w = model.labels().iter().map(|l| l.name.len()).max().unwrap_or(0);
    for (l, stats) in model.labels().iter().zip(model.class_stats()) {
        writeln!(s, "  {:<w$}  prior {:.4}", l.name, stats.prior).unwrap();
    }
    if let Some(a) = accuracy {
        writeln!(s, "holdout accuracy {a:.4}").unwrap();
    }
    s
}

pub fn classifications(model: &GaussianEvidenceModel, out: &[Classification]) -> String {
    let w = model.labels().iter().map(|l| l.name.len()).max().unwrap_or(0).max(5);
    let mut s = String::new();
    for c in out {
        match (c.row, c.true_label) {
            (Some(r), Some(t)) => writeln!(s, "row {r}: {} (true {})", c.label.name, model.labels()[t].name),
            _ => writeln!(s, "{}", c.label.name),
        }
        .unwrap();
        writeln!(s, "  {:<w$}  {:>9}  {:>10}", "class", "posterior", "total WoE").unwrap();
        for (l, (p, t)) in model.labels().iter().zip(c.posterior.iter().zip(&c.total_woe)) {
            writeln!(s, "  {:<w$}  {p:>9.4}  {t:>+10.4}", l.name).unwrap();
        }
    }
    s
}

fn items(s: &mut String, items: &[EvidenceItem]) {
    let w = items.iter().map(|i| i.feature_name.len()).max().unwrap_or(0);
    for i in items {
        writeln!(s, "  {:<w$}  {:>+9.4}  {:<3}  {}", i.feature_name, i.woe, i.category.glyph(), i.category.name()).unwrap();
    }
}

fn hypothesis(s: &mut String, r: &HypothesisReport) {
    writeln!(s, "hypothesis {}  total {:+.4}  weighted {:+.4}", r.hypothesis.name, r.total_woe, r.weighted_total_woe).unwrap();
    items(s, &r.items);
}

fn redacted(s: &mut String, r: &RedactedReport) {
    writeln!(s, "evidence for the model's prediction  total {:+.4}  weighted {:+.4}", r.total_woe, r.weighted_total_woe).unwrap();
    items(s, &r.items);
}

pub fn view(v: &ConditionView) -> String {
    let c = v.condition();
    let mut s = format!("{c} {}\n", c.description());
    match v {
        ConditionView::RecommendationDriven { prediction, report } => {
            writeln!(s, "prediction: {}", prediction.name).unwrap();
            hypothesis(&mut s, report);
        }
        ConditionView::ExplanationOnly { report } => redacted(&mut s, report),
        ConditionView::HypothesisDriven { reports } => {
            for r in reports {
                hypothesis(&mut s, r);
            }
        }
    }
    s
}

pub fn selection(sel: &InstanceSelection) -> String {
    let mut s = format!(
        "low-uncertainty entropy < {}, high-uncertainty entropy > {}\n",
        sel.low_threshold, sel.high_threshold
    );
    for (cat, entries) in &sel.categories {
        writeln!(s, "{} ({})", cat.name(), entries.len()).unwrap();
        for e in entries {
            writeln!(s, "  row {:>6}  entropy {:.4}  predicted {}  true {}", e.index, e.entropy, e.predicted, e.true_label).unwrap();
        }
    }
    for cat in &sel.shortfall {
        writeln!(s, "short: {}", cat.name()).unwrap();
    }
    s
}

pub fn metrics_table<'a>(rows: impl Iterator<Item = (&'a str, usize, Option<&'a ParticipantSummary>, Option<f64>)>) -> String {
    let header = ["session", "tasks", "brier", "over-reliance", "under-reliance", "selected", "mean secs"];
    let mut table: Vec<[String; 7]> = vec![header.map(String::from)];
    for (id, n, p, pct) in rows {
        table.push([
            id.to_string(),
            n.to_string(),
            opt(p.map(|p| p.brier)),
            opt(p.and_then(|p| p.over_reliance)),
            opt(p.and_then(|p| p.under_reliance)),
            opt(pct),
            opt(p.map(|p| p.timing.mean_instance_secs)),
        ]);
    }
    let widths: Vec<usize> = (0..7).map(|c| table.iter().map(|r| r[c].len()).max().unwrap()).collect();
    let mut s = String::new();
    for r in &table {
        let cells: Vec<String> = r
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(c, (v, &w))| if c == 0 { format!("{v:<w$}") } else { format!("{v:>w$}") })
            .collect();
        writeln!(s, "{}", cells.join("  ").trim_end()).unwrap();
    }
    s
}
