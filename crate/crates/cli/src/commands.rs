//! Subcommand implementations. Every input path is checked up front, and
//! every output lands atomically (written to a temporary file, then
//! renamed), so a failing command never leaves partial files behind.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;

use poliview_core::analytics::aggregate::{build_comparison, party_aggregate};
use poliview_core::analytics::profile::{build_all_profiles, build_profile};
use poliview_core::analytics::report::{
    emit_comparison, emit_parties, emit_profiles, export_gate, ReportFormat,
};
use poliview_core::analytics::Roster;
use poliview_core::collect::run::{run_collection, ClockMode, CollectionPlan};
use poliview_core::dataset::{AvailabilityFilter, DatasetCollection, DocFilter};
use poliview_core::policy::{
    default_ruleset, evaluate, load_ruleset, AuditLog, PolicyAction, PolicyRule, PrivacyLevel,
    Purpose,
};
use poliview_core::value::Timestamp;
use poliview_core::view::extract::{extract_view, merge_view};
use poliview_core::view::render::render_text;
use poliview_core::view::validate::{annotation, apply_validation, attr_type_from_label};
use poliview_core::view::{AnnotationAction, View, ViewConfig};

/// A command line that points at nothing or asks for nothing; exits 1.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

/// Paths and knobs a subcommand resolved from its flags and environment.
#[derive(Debug, Default)]
pub struct RunConfig {
    pub plan: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    pub view: Option<PathBuf>,
    pub ruleset: Option<PathBuf>,
    pub roster: Option<PathBuf>,
    pub view_config: Option<PathBuf>,
    /// Seed override from `POLIVIEW_SEED`, applied on top of the plan.
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Every referenced input must resolve before the command does any work.
    pub fn check_inputs(&self) -> anyhow::Result<()> {
        let inputs = [
            ("plan", &self.plan),
            ("dataset", &self.dataset),
            ("view", &self.view),
            ("ruleset", &self.ruleset),
            ("roster", &self.roster),
            ("config", &self.view_config),
        ];
        for (what, path) in inputs {
            if let Some(p) = path {
                if !p.exists() {
                    return Err(Usage(format!(
                        "{what} path {} does not exist",
                        p.display()
                    ))
                    .into());
                }
            }
        }
        Ok(())
    }
}

fn env_seed() -> anyhow::Result<Option<u64>> {
    match std::env::var("POLIVIEW_SEED") {
        Ok(raw) => raw.trim().parse::<u64>().map(Some).map_err(|_| {
            Usage(format!(
                "POLIVIEW_SEED must be an unsigned integer, got {raw:?}"
            ))
            .into()
        }),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(Usage(format!("POLIVIEW_SEED: {e}")).into()),
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("cannot create {}", dir.display()))?;
        }
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("cannot write {}", tmp.display()))?;
    std::fs::rename(&tmp, path)
        .with_context(|| format!("cannot move {} into place", tmp.display()))?;
    Ok(())
}

fn load_view_config(path: Option<&Path>) -> anyhow::Result<ViewConfig> {
    match path {
        Some(p) => {
            Ok(ViewConfig::load(p).with_context(|| format!("view config {}", p.display()))?)
        }
        None => Ok(ViewConfig::default()),
    }
}

fn load_rules(path: Option<&Path>) -> anyhow::Result<Vec<PolicyRule>> {
    match path {
        Some(p) => Ok(load_ruleset(p).with_context(|| format!("ruleset {}", p.display()))?),
        None => Ok(default_ruleset()),
    }
}

fn open_dataset(path: &Path) -> anyhow::Result<DatasetCollection> {
    Ok(DatasetCollection::open(path).with_context(|| format!("dataset {}", path.display()))?)
}

pub fn collect(plan_path: &Path, out_root: &Path, simulate: bool) -> anyhow::Result<()> {
    let cfg = RunConfig {
        plan: Some(plan_path.to_path_buf()),
        seed: env_seed()?,
        ..RunConfig::default()
    };
    cfg.check_inputs()?;

    let mut plan = CollectionPlan::load(plan_path)?;
    if simulate {
        if let Some(p) = plan.providers.iter().find(|p| p.uses_real_http()) {
            return Err(poliview_core::Error::Plan(format!(
                "provider {} uses a live endpoint; simulate runs scripted providers only",
                p.id
            ))
            .into());
        }
        plan.clock = ClockMode::Virtual;
    }
    if let Some(seed) = cfg.seed {
        tracing::info!(seed, "seed overridden by POLIVIEW_SEED");
        plan.seed = seed;
    }

    let plan_dir = plan_path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(out_root)
        .with_context(|| format!("cannot create {}", out_root.display()))?;
    let outcome = run_collection(&plan, plan_dir, out_root)?;

    let mut report_json = serde_json::to_vec_pretty(&outcome.report)?;
    report_json.push(b'\n');
    write_atomic(&out_root.join("run_report.json"), &report_json)?;
    write_atomic(&out_root.join("cost_ledger.csv"), &ledger_csv(&outcome)?)?;

    tracing::info!(
        plan = plan.name,
        datasets = outcome.report.datasets.len(),
        requests = outcome.report.cost.requests,
        "collection finished"
    );
    Ok(())
}

fn ledger_csv(outcome: &poliview_core::collect::run::RunOutcome) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "request_id",
        "bytes_in",
        "bytes_out",
        "transfer_time",
        "execution_time",
        "monetary_cost",
        "energy_cost",
    ])?;
    for r in &outcome.ledger.records {
        w.write_record([
            r.request_id.clone(),
            r.bytes_in.to_string(),
            r.bytes_out.to_string(),
            r.transfer_time.to_string(),
            r.execution_time.to_string(),
            r.monetary_cost.to_string(),
            r.energy_cost.to_string(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| anyhow::anyhow!("csv flush failed: {e}"))
}

pub fn view_extract(
    dataset: &Path,
    config: Option<&Path>,
    out: &Path,
    merge: bool,
) -> anyhow::Result<()> {
    let cfg = RunConfig {
        dataset: Some(dataset.to_path_buf()),
        view_config: config.map(Path::to_path_buf),
        view: if merge { Some(out.to_path_buf()) } else { None },
        ..RunConfig::default()
    };
    cfg.check_inputs()?;

    let ds = open_dataset(dataset)?;
    let view = if merge {
        if config.is_some() {
            tracing::warn!("--config is ignored when merging; the view keeps its own");
        }
        let prior = View::load(out)?;
        merge_view(&prior, &ds)?
    } else {
        extract_view(&ds, &load_view_config(config)?)?
    };
    view.save(out)?;
    println!("{}", out.display());
    Ok(())
}

pub struct ValidateRequest<'a> {
    pub view: &'a Path,
    pub confirm: Option<&'a str>,
    pub confirm_all: bool,
    pub override_type: Option<&'a str>,
    pub note: Option<&'a str>,
    pub analyst: &'a str,
    pub at: Option<&'a str>,
    pub out: Option<&'a Path>,
}

fn split_pair<'a>(raw: &'a str, flag: &str) -> anyhow::Result<(&'a str, &'a str)> {
    raw.split_once('=')
        .filter(|(path, _)| !path.is_empty())
        .ok_or_else(|| Usage(format!("--{flag} takes PATH=VALUE, got {raw:?}")).into())
}

pub fn view_validate(req: ValidateRequest) -> anyhow::Result<()> {
    let cfg = RunConfig {
        view: Some(req.view.to_path_buf()),
        ..RunConfig::default()
    };
    cfg.check_inputs()?;

    let at = match req.at {
        Some(raw) => Timestamp::parse(raw).map_err(|e| Usage(format!("--at: {e}")))?,
        None => now(),
    };
    let mut view = View::load(req.view)?;
    if req.confirm_all {
        for path in view.profiles.iter().map(|p| p.path.clone()).collect::<Vec<_>>() {
            view = apply_validation(
                &view,
                annotation(&path, AnnotationAction::Confirm, req.analyst, at),
            )?;
        }
    } else if let Some(path) = req.confirm {
        view = apply_validation(
            &view,
            annotation(path, AnnotationAction::Confirm, req.analyst, at),
        )?;
    } else if let Some(raw) = req.override_type {
        let (path, label) = split_pair(raw, "override-type")?;
        let action = AnnotationAction::OverrideType(attr_type_from_label(label)?);
        view = apply_validation(&view, annotation(path, action, req.analyst, at))?;
    } else if let Some(raw) = req.note {
        let (path, text) = split_pair(raw, "note")?;
        let action = AnnotationAction::Note(text.to_string());
        view = apply_validation(&view, annotation(path, action, req.analyst, at))?;
    } else {
        return Err(Usage(
            "one of --confirm, --confirm-all, --override-type, --note is required".into(),
        )
        .into());
    }

    let target = req.out.unwrap_or(req.view);
    view.save(target)?;
    println!("{}", target.display());
    Ok(())
}

fn now() -> Timestamp {
    let secs = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs() as i64)
        .unwrap_or(0);
    Timestamp::from_unix(secs)
}

pub fn view_show(view_path: &Path) -> anyhow::Result<()> {
    let cfg = RunConfig {
        view: Some(view_path.to_path_buf()),
        ..RunConfig::default()
    };
    cfg.check_inputs()?;
    let view = View::load(view_path)?;
    print!("{}", render_text(&view));
    Ok(())
}

pub fn policy_check(
    dataset: &Path,
    ruleset: Option<&Path>,
    purpose: Purpose,
    config: Option<&Path>,
    audit: Option<&Path>,
) -> anyhow::Result<i32> {
    let cfg = RunConfig {
        dataset: Some(dataset.to_path_buf()),
        ruleset: ruleset.map(Path::to_path_buf),
        view_config: config.map(Path::to_path_buf),
        ..RunConfig::default()
    };
    cfg.check_inputs()?;

    let ds = open_dataset(dataset)?;
    let rules = load_rules(ruleset)?;
    let view_config = load_view_config(config)?;
    let docs = ds.documents(DocFilter {
        availability: Some(AvailabilityFilter::Collected),
        ..DocFilter::default()
    })?;

    let (mut allow, mut redact, mut deny) = (0u64, 0u64, 0u64);
    let mut denied_documents = Vec::new();
    let mut entries = Vec::with_capacity(docs.len());
    for doc in &docs {
        let privacy = view_config
            .provider_privacy
            .get(&doc.provenance.provider_id)
            .copied()
            .unwrap_or(PrivacyLevel::Public);
        let decision = evaluate(doc, privacy, purpose, &rules);
        match decision.outcome {
            PolicyAction::Allow => allow += 1,
            PolicyAction::Redact(_) => redact += 1,
            PolicyAction::Deny => {
                deny += 1;
                denied_documents.push(doc.id.clone());
            }
        }
        entries.push(decision.audit);
    }

    if let Some(audit_path) = audit {
        let mut tmp = audit_path.as_os_str().to_owned();
        tmp.push(".tmp");
        let tmp = PathBuf::from(tmp);
        if tmp.exists() {
            std::fs::remove_file(&tmp)?;
        }
        {
            let mut log = AuditLog::open(&tmp)?;
            for entry in &entries {
                log.append(entry)?;
            }
        }
        std::fs::rename(&tmp, audit_path)
            .with_context(|| format!("cannot move {} into place", tmp.display()))?;
    }

    let summary = serde_json::json!({
        "documents": docs.len() as u64,
        "purpose": purpose.label(),
        "allow": allow,
        "redact": redact,
        "deny": deny,
        "denied_documents": denied_documents,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if deny > 0 { 2 } else { 0 })
}

pub struct ReportRequest {
    pub dataset: PathBuf,
    pub roster: PathBuf,
    pub config: Option<PathBuf>,
    pub format: ReportFormat,
    pub out: PathBuf,
    pub ruleset: Option<PathBuf>,
    pub purpose: Purpose,
}

/// Shared report preamble: input checks, loads, and the policy gate. The
/// gate runs before anything is staged, so a denial emits nothing.
fn report_setup(
    req: &ReportRequest,
) -> anyhow::Result<(DatasetCollection, Roster, ViewConfig)> {
    let cfg = RunConfig {
        dataset: Some(req.dataset.clone()),
        roster: Some(req.roster.clone()),
        ruleset: req.ruleset.clone(),
        view_config: req.config.clone(),
        ..RunConfig::default()
    };
    cfg.check_inputs()?;

    let ds = open_dataset(&req.dataset)?;
    let roster = Roster::load(&req.roster).context("roster")?;
    let view_config = load_view_config(req.config.as_deref())?;
    let rules = load_rules(req.ruleset.as_deref())?;
    export_gate(&ds, &rules, &view_config, req.purpose)?;
    Ok((ds, roster, view_config))
}

fn print_paths(paths: &[PathBuf]) {
    for p in paths {
        println!("{}", p.display());
    }
}

pub fn report_profile(req: &ReportRequest, candidate: Option<&str>) -> anyhow::Result<()> {
    let (ds, roster, config) = report_setup(req)?;
    let profiles = match candidate {
        Some(id) => vec![build_profile(&ds, &roster, id, &config)?],
        None => build_all_profiles(&ds, &roster, &config)?.0,
    };
    let paths = emit_profiles(&profiles, req.format, &req.out)?;
    print_paths(&paths);
    Ok(())
}

pub fn report_party(req: &ReportRequest, party: Option<&str>) -> anyhow::Result<()> {
    let (ds, roster, config) = report_setup(req)?;
    let profiles = build_all_profiles(&ds, &roster, &config)?.0;
    let wanted: Vec<String> = match party {
        Some(name) => vec![name.to_string()],
        None => {
            // Roster encounter order, first mention wins.
            let mut seen = std::collections::BTreeSet::new();
            roster
                .candidates
                .iter()
                .filter(|c| seen.insert(c.party.clone()))
                .map(|c| c.party.clone())
                .collect()
        }
    };
    let parties = wanted
        .iter()
        .map(|name| party_aggregate(&profiles, name))
        .collect::<poliview_core::Result<Vec<_>>>()?;
    let paths = emit_parties(&parties, req.format, &req.out)?;
    print_paths(&paths);
    Ok(())
}

pub fn report_compare(req: &ReportRequest, top_n: Option<usize>) -> anyhow::Result<()> {
    let (ds, roster, config) = report_setup(req)?;
    let report = build_comparison(&ds, &roster, &config, top_n)?;
    let paths = emit_comparison(&report, req.format, &req.out)?;
    print_paths(&paths);
    Ok(())
}
