//! Plain-text rendering of a view for terminal inspection. The canonical
//! machine form is the JSON document; this is the human one.

use std::fmt::Write;

use super::{AttributeProfile, Histogram, View};

fn status_label(view: &View) -> &'static str {
    match view.status {
        super::ViewStatus::Draft => "draft",
        super::ViewStatus::Validated => "validated",
        super::ViewStatus::Amended => "amended",
    }
}

fn scalar_cell(value: &Option<crate::value::Scalar>) -> String {
    value
        .as_ref()
        .map(|v| v.canonical_string())
        .unwrap_or_default()
}

fn float_cell(value: Option<f64>) -> String {
    value.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn profile_row(p: &AttributeProfile) -> Vec<String> {
    let top_topic = p
        .topics
        .first()
        .map(|t| format!("#{} ({})", t.tag, t.frequency))
        .unwrap_or_default();
    vec![
        p.path.clone(),
        p.primary_type.map(|t| t.label().to_string()).unwrap_or_default(),
        p.count_present.to_string(),
        p.count_missing.to_string(),
        p.distinct_count.to_string(),
        scalar_cell(&p.min),
        scalar_cell(&p.max),
        float_cell(p.mean),
        float_cell(p.stddev),
        top_topic,
    ]
}

/// One table row per profile, column widths fitted to content.
pub fn render_text(view: &View) -> String {
    let header = [
        "path", "type", "present", "missing", "distinct", "min", "max", "mean", "stddev",
        "top topic",
    ];
    let rows: Vec<Vec<String>> = view.profiles.iter().map(profile_row).collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.chars().count());
        }
    }

    let mut out = String::new();
    let _ = writeln!(
        out,
        "view of {} (version {}, {}, {} documents)",
        view.dataset_id,
        view.version,
        status_label(view),
        view.document_count
    );
    let line = |cells: Vec<String>, widths: &[usize]| {
        let mut s = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            let pad = widths[i].saturating_sub(cell.chars().count());
            s.push_str(cell);
            s.extend(std::iter::repeat_n(' ', pad));
        }
        s.trim_end().to_string()
    };
    let _ = writeln!(
        out,
        "{}",
        line(header.iter().map(|h| h.to_string()).collect(), &widths)
    );
    let total: usize = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
    let _ = writeln!(out, "{}", "-".repeat(total));
    for row in rows {
        let _ = writeln!(out, "{}", line(row, &widths));
    }
    if !view.relationships.is_empty() {
        let _ = writeln!(out, "\nrelationships:");
        for rel in &view.relationships {
            let kind = match rel.kind {
                super::RelationKind::FunctionalDependency => "fd",
                super::RelationKind::TemporalDependency => "temporal",
                super::RelationKind::SemanticSimilarity => "similarity",
                super::RelationKind::Causal => "causal",
            };
            let _ = writeln!(
                out,
                "  {} {} -> {}: strength {:.4} (support {}, violations {}{})",
                kind,
                rel.from_path,
                rel.to_path,
                rel.strength,
                rel.support,
                rel.violations,
                if rel.dangling > 0 {
                    format!(", dangling {}", rel.dangling)
                } else {
                    String::new()
                }
            );
        }
    }
    out
}

/// Compact histogram sketch for one profile.
pub fn render_histogram(p: &AttributeProfile) -> String {
    let mut out = String::new();
    match &p.histogram {
        Histogram::Numeric {
            lo,
            hi,
            bin_count,
            counts,
        } => {
            let _ = writeln!(out, "{}: {} bins over [{lo}, {hi}]", p.path, bin_count);
            let peak = counts.iter().copied().max().unwrap_or(0).max(1);
            for (i, &c) in counts.iter().enumerate() {
                let bar = "#".repeat((c * 40 / peak) as usize);
                let _ = writeln!(out, "  {i:>3} {c:>8} {bar}");
            }
        }
        Histogram::Categorical { top, other_count } => {
            let _ = writeln!(out, "{}: top values", p.path);
            for entry in top {
                let _ = writeln!(out, "  {:>8} {}", entry.count, entry.value);
            }
            if *other_count > 0 {
                let _ = writeln!(out, "  {other_count:>8} (other)");
            }
        }
    }
    out
}
