//! Report emission. Everything is rendered in memory first, staged to
//! temporary files, and renamed into place only when every file is written,
//! so a failure never leaves a partial report behind. Unavailability is
//! always a marked `NA(reason)` cell, never a zero.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{CampaignProfile, ComparisonReport, PartyAggregate};
use crate::dataset::{AvailabilityFilter, DatasetCollection, DocFilter};
use crate::doc::AvailabilityStatus;
use crate::policy::{evaluate, PolicyRule, PrivacyLevel, Purpose};
use crate::view::ViewConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
    PlotTsv,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<ReportFormat> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            "plot-tsv" => Ok(ReportFormat::PlotTsv),
            other => Err(Error::Plan(format!(
                "unknown report format {other:?} (csv, json, plot-tsv)"
            ))),
        }
    }
}

/// Refuses the export when any collected document is denied for the
/// purpose. Runs before any file is staged.
pub fn export_gate(
    ds: &DatasetCollection,
    rules: &[PolicyRule],
    config: &ViewConfig,
    purpose: Purpose,
) -> Result<()> {
    let docs = ds.documents(DocFilter {
        availability: Some(AvailabilityFilter::Collected),
        ..DocFilter::default()
    })?;
    for doc in &docs {
        let privacy = config
            .provider_privacy
            .get(&doc.provenance.provider_id)
            .copied()
            .unwrap_or(PrivacyLevel::Public);
        let decision = evaluate(doc, privacy, purpose, rules);
        if decision.is_deny() {
            return Err(Error::PolicyDenied {
                document: doc.id.clone(),
                detail: match decision.rule_index {
                    Some(i) => format!("rule {i} denies {}", purpose.label()),
                    None => format!("no rule allows {}", purpose.label()),
                },
            });
        }
    }
    Ok(())
}

fn status_cell(status: &AvailabilityStatus) -> String {
    match status {
        AvailabilityStatus::Collected => "collected".to_string(),
        AvailabilityStatus::Empty => "empty".to_string(),
        AvailabilityStatus::Unavailable(reason) => format!("unavailable({})", reason.label()),
    }
}

fn count_cell(status: &AvailabilityStatus, count: Option<u64>) -> String {
    match (status, count) {
        (AvailabilityStatus::Unavailable(reason), _) => format!("NA({})", reason.label()),
        (_, Some(n)) => n.to_string(),
        (_, None) => String::new(),
    }
}

fn sanitize(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_alphanumeric() { c } else { '-' })
        .collect()
}

fn csv_bytes(rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.write_record(row)?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Storage(format!("csv flush failed: {e}")))
}

/// Stage every file, then move them into place; nothing lands on failure.
fn write_files(out_dir: &Path, files: Vec<(String, Vec<u8>)>) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
    for (name, bytes) in &files {
        let final_path = out_dir.join(name);
        let tmp_path = out_dir.join(format!("{name}.tmp"));
        if let Err(e) = std::fs::write(&tmp_path, bytes) {
            for (tmp, _) in &staged {
                let _ = std::fs::remove_file(tmp);
            }
            let _ = std::fs::remove_file(&tmp_path);
            return Err(e.into());
        }
        staged.push((tmp_path, final_path));
    }
    let mut written = Vec::new();
    for (tmp, final_path) in staged {
        std::fs::rename(&tmp, &final_path)?;
        written.push(final_path);
    }
    Ok(written)
}

fn platform_union(profiles: &[CampaignProfile]) -> Vec<String> {
    let set: BTreeSet<String> = profiles
        .iter()
        .flat_map(|p| p.platforms.iter().map(|a| a.provider.clone()))
        .collect();
    set.into_iter().collect()
}

/// One CSV row per candidate: identity columns, then status/posts/influence
/// per platform in sorted platform order.
fn profiles_csv(profiles: &[CampaignProfile]) -> Result<Vec<u8>> {
    let platforms = platform_union(profiles);
    let mut header = vec![
        "candidate".to_string(),
        "party".to_string(),
        "country".to_string(),
    ];
    for p in &platforms {
        header.push(format!("{p}_status"));
        header.push(format!("{p}_posts"));
        header.push(format!("{p}_influence"));
    }
    let mut rows = vec![header];
    for profile in profiles {
        let mut row = vec![
            profile.candidate.clone(),
            profile.party.clone(),
            profile.country.clone(),
        ];
        for platform in &platforms {
            match profile.platform(platform) {
                Some(activity) => {
                    row.push(status_cell(&activity.status));
                    row.push(count_cell(&activity.status, activity.post_count));
                    row.push(count_cell(&activity.status, activity.influence));
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        rows.push(row);
    }
    csv_bytes(&rows)
}

fn parties_csv(parties: &[PartyAggregate]) -> Result<Vec<u8>> {
    let platforms: BTreeSet<String> = parties
        .iter()
        .flat_map(|a| a.platforms.iter().map(|p| p.provider.clone()))
        .collect();
    let mut header = vec![
        "party".to_string(),
        "country".to_string(),
        "candidates".to_string(),
    ];
    for p in &platforms {
        header.push(format!("{p}_total"));
        header.push(format!("{p}_per_capita"));
    }
    header.push("total_posts".to_string());
    header.push("global_average".to_string());
    header.push("favourite_tool".to_string());

    let mut rows = vec![header];
    for party in parties {
        let mut row = vec![
            party.party.clone(),
            party.country.clone(),
            party.candidate_count.to_string(),
        ];
        for platform in &platforms {
            match party.platforms.iter().find(|p| &p.provider == platform) {
                Some(totals) => {
                    row.push(totals.total.to_string());
                    row.push(totals.per_capita.to_string());
                }
                None => {
                    row.push(String::new());
                    row.push(String::new());
                }
            }
        }
        row.push(party.total_posts.to_string());
        row.push(party.global_average.to_string());
        row.push(party.favourite_tool.clone());
        rows.push(row);
    }
    csv_bytes(&rows)
}

fn timeline_tsv(series: &super::TimelineSeries) -> Vec<u8> {
    let mut out = String::new();
    for (i, count) in series.counts.iter().enumerate() {
        let day = series.day_label(i).expect("non-empty series has a start");
        out.push_str(&day);
        out.push('\t');
        out.push_str(&count.to_string());
        out.push('\n');
    }
    out.into_bytes()
}

fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn emit_profiles(
    profiles: &[CampaignProfile],
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let files = match format {
        ReportFormat::Csv => vec![("profiles.csv".to_string(), profiles_csv(profiles)?)],
        ReportFormat::Json => vec![("profiles.json".to_string(), json_bytes(&profiles)?)],
        ReportFormat::PlotTsv => profiles
            .iter()
            .filter(|p| !p.timeline.counts.is_empty())
            .map(|p| {
                (
                    format!("timeline_{}.tsv", sanitize(&p.candidate)),
                    timeline_tsv(&p.timeline),
                )
            })
            .collect(),
    };
    write_files(out_dir, files)
}

pub fn emit_parties(
    parties: &[PartyAggregate],
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let files = match format {
        ReportFormat::Csv => vec![("parties.csv".to_string(), parties_csv(parties)?)],
        ReportFormat::Json => vec![("parties.json".to_string(), json_bytes(&parties)?)],
        ReportFormat::PlotTsv => parties
            .iter()
            .map(|party| {
                let mut out = String::new();
                for platform in &party.platforms {
                    out.push_str(&platform.provider);
                    out.push('\t');
                    out.push_str(&platform.total.to_string());
                    out.push('\n');
                }
                (
                    format!("platforms_{}.tsv", sanitize(&party.party)),
                    out.into_bytes(),
                )
            })
            .collect(),
    };
    write_files(out_dir, files)
}

fn divergence_csv(report: &ComparisonReport) -> Result<Vec<u8>> {
    let mut rows = vec![vec![
        "platform_a".to_string(),
        "platform_b".to_string(),
        "only_a".to_string(),
        "only_b".to_string(),
        "overlap".to_string(),
    ]];
    for d in &report.topics.divergences {
        rows.push(vec![
            d.a.clone(),
            d.b.clone(),
            d.only_a.join(";"),
            d.only_b.join(";"),
            d.overlap.to_string(),
        ]);
    }
    csv_bytes(&rows)
}

fn countries_csv(report: &ComparisonReport) -> Result<Vec<u8>> {
    let mut rows = vec![vec![
        "country".to_string(),
        "candidates".to_string(),
        "total_posts".to_string(),
    ]];
    for c in &report.countries {
        rows.push(vec![
            c.country.clone(),
            c.candidate_count.to_string(),
            c.total_posts.to_string(),
        ]);
    }
    csv_bytes(&rows)
}

pub fn emit_comparison(
    report: &ComparisonReport,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let files = match format {
        ReportFormat::Csv => vec![
            ("countries.csv".to_string(), countries_csv(report)?),
            ("parties.csv".to_string(), parties_csv(&report.parties)?),
            ("profiles.csv".to_string(), profiles_csv(&report.profiles)?),
            ("topic_divergence.csv".to_string(), divergence_csv(report)?),
        ],
        ReportFormat::Json => vec![("report.json".to_string(), json_bytes(report)?)],
        ReportFormat::PlotTsv => report
            .timelines
            .iter()
            .filter(|t| !t.series.counts.is_empty())
            .map(|t| {
                (
                    format!("timeline_{}.tsv", sanitize(&t.country)),
                    timeline_tsv(&t.series),
                )
            })
            .collect(),
    };
    write_files(out_dir, files)
}
