//! Per-document policy gating: decide what a document may be used for, mask
//! fields on the way out, and keep an append-only audit trail.
//!
//! Rules are matched by scope; the most specific match wins (attribute over
//! provider over jurisdiction over wildcard), ties break toward the harsher
//! action, and a document whose privacy level exceeds the winning rule's cap
//! is denied no matter what the rule says. No matching rule also means deny.

use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::doc::Document;
use crate::value::{parse_path, redact_at_path, values_at_path, Timestamp};
use crate::{Error, Result};

/// Sensitivity of a document, ordered from least to most restricted.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(rename_all = "snake_case")]
pub enum PrivacyLevel {
    #[default]
    Public,
    Restricted,
    Private,
}

impl PrivacyLevel {
    pub fn label(&self) -> &'static str {
        match self {
            PrivacyLevel::Public => "public",
            PrivacyLevel::Restricted => "restricted",
            PrivacyLevel::Private => "private",
        }
    }
}

impl fmt::Display for PrivacyLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// What the caller intends to do with a document.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Archive,
    Analyze,
    Export,
}

impl Purpose {
    pub fn label(&self) -> &'static str {
        match self {
            Purpose::Archive => "archive",
            Purpose::Analyze => "analyze",
            Purpose::Export => "export",
        }
    }
}

impl fmt::Display for Purpose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Purpose {
    type Err = Error;

    fn from_str(s: &str) -> Result<Purpose> {
        match s {
            "archive" => Ok(Purpose::Archive),
            "analyze" => Ok(Purpose::Analyze),
            "export" => Ok(Purpose::Export),
            other => Err(Error::Plan(format!(
                "unknown purpose {other:?}, expected archive|analyze|export"
            ))),
        }
    }
}

/// What part of the corpus a rule applies to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleScope {
    Wildcard,
    /// Matches documents collected under this jurisdiction code.
    Jurisdiction(String),
    /// Matches documents from this provider.
    Provider(String),
    /// Matches documents whose body contains this attribute path.
    Attribute(String),
}

impl RuleScope {
    /// Narrower scopes win: attribute > provider > jurisdiction > wildcard.
    pub fn specificity(&self) -> u8 {
        match self {
            RuleScope::Wildcard => 0,
            RuleScope::Jurisdiction(_) => 1,
            RuleScope::Provider(_) => 2,
            RuleScope::Attribute(_) => 3,
        }
    }

    pub fn matches(&self, doc: &Document) -> bool {
        match self {
            RuleScope::Wildcard => true,
            RuleScope::Jurisdiction(j) => &doc.provenance.jurisdiction == j,
            RuleScope::Provider(p) => &doc.provenance.provider_id == p,
            RuleScope::Attribute(path) => !values_at_path(&doc.body, path).is_empty(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyAction {
    Allow,
    Deny,
    Redact(Vec<String>),
}

impl PolicyAction {
    /// Harsher actions win specificity ties.
    fn severity(&self) -> u8 {
        match self {
            PolicyAction::Allow => 0,
            PolicyAction::Redact(_) => 1,
            PolicyAction::Deny => 2,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PolicyAction::Allow => "allow",
            PolicyAction::Redact(_) => "redact",
            PolicyAction::Deny => "deny",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRule {
    pub scope: RuleScope,
    pub max_privacy: PrivacyLevel,
    pub purpose: Purpose,
    pub action: PolicyAction,
}

impl PolicyRule {
    fn validate(&self) -> Result<()> {
        match &self.action {
            PolicyAction::Redact(paths) if paths.is_empty() => Err(Error::Plan(
                "redact rule must list at least one path".into(),
            )),
            PolicyAction::Redact(paths) => {
                for p in paths {
                    parse_path(p)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// The ruleset shipped by default: public material may be exported,
/// restricted material analyzed, anything up to private archived. Everything
/// else falls through to the implicit deny.
pub fn default_ruleset() -> Vec<PolicyRule> {
    vec![
        PolicyRule {
            scope: RuleScope::Wildcard,
            max_privacy: PrivacyLevel::Public,
            purpose: Purpose::Export,
            action: PolicyAction::Allow,
        },
        PolicyRule {
            scope: RuleScope::Wildcard,
            max_privacy: PrivacyLevel::Restricted,
            purpose: Purpose::Analyze,
            action: PolicyAction::Allow,
        },
        PolicyRule {
            scope: RuleScope::Wildcard,
            max_privacy: PrivacyLevel::Private,
            purpose: Purpose::Archive,
            action: PolicyAction::Allow,
        },
    ]
}

/// Read a JSON list of rules, rejecting empty or malformed rulesets.
pub fn load_ruleset(path: impl AsRef<Path>) -> Result<Vec<PolicyRule>> {
    let raw = std::fs::read_to_string(path.as_ref())?;
    let rules: Vec<PolicyRule> =
        serde_json::from_str(&raw).map_err(|e| Error::Plan(format!("bad ruleset: {e}")))?;
    if rules.is_empty() {
        return Err(Error::Plan("ruleset must contain at least one rule".into()));
    }
    for r in &rules {
        r.validate()?;
    }
    Ok(rules)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    /// The document's collection time, not the wall clock, so audit files are
    /// reproducible across runs.
    pub at: Timestamp,
    pub document: String,
    pub purpose: Purpose,
    pub outcome: String,
    pub rule_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyDecision {
    pub outcome: PolicyAction,
    /// Index into the ruleset of the winning rule; `None` when nothing
    /// matched and the implicit deny applied.
    pub rule_index: Option<usize>,
    pub audit: AuditEntry,
}

impl PolicyDecision {
    pub fn is_deny(&self) -> bool {
        matches!(self.outcome, PolicyAction::Deny)
    }
}

/// Decide what may happen to `doc` for `purpose` under `rules`.
///
/// `doc_privacy` is the document's effective privacy level, normally the
/// collecting provider's SLA default; it is passed in because documents do
/// not carry it themselves.
pub fn evaluate(
    doc: &Document,
    doc_privacy: PrivacyLevel,
    purpose: Purpose,
    rules: &[PolicyRule],
) -> PolicyDecision {
    let mut best: Option<(usize, &PolicyRule)> = None;
    for (i, rule) in rules.iter().enumerate() {
        if rule.purpose != purpose || !rule.scope.matches(doc) {
            continue;
        }
        let better = match best {
            None => true,
            Some((_, incumbent)) => {
                let a = (rule.scope.specificity(), rule.action.severity());
                let b = (incumbent.scope.specificity(), incumbent.action.severity());
                a > b // equal keys keep the earlier rule
            }
        };
        if better {
            best = Some((i, rule));
        }
    }

    let (outcome, rule_index) = match best {
        None => (PolicyAction::Deny, None),
        Some((i, rule)) if doc_privacy > rule.max_privacy => (PolicyAction::Deny, Some(i)),
        Some((i, rule)) => (rule.action.clone(), Some(i)),
    };
    let audit = AuditEntry {
        at: doc.provenance.collected_at,
        document: doc.id.clone(),
        purpose,
        outcome: outcome.label().to_string(),
        rule_index,
    };
    PolicyDecision {
        outcome,
        rule_index,
        audit,
    }
}

/// `evaluate`, with the decision appended to the audit log.
pub fn evaluate_logged(
    doc: &Document,
    doc_privacy: PrivacyLevel,
    purpose: Purpose,
    rules: &[PolicyRule],
    log: &mut AuditLog,
) -> Result<PolicyDecision> {
    let decision = evaluate(doc, doc_privacy, purpose, rules);
    log.append(&decision.audit)?;
    Ok(decision)
}

/// Replace the values at `paths` with a sentinel and re-address the document.
///
/// Paths that do not resolve are skipped (and logged); an empty path list
/// returns the document unchanged, id included.
pub fn redact(doc: &Document, paths: &[String]) -> Result<Document> {
    if paths.is_empty() {
        return Ok(doc.clone());
    }
    let mut body = doc.body.clone();
    for path in paths {
        if redact_at_path(&mut body, path) == 0 {
            tracing::debug!(document = %doc.id, path = %path, "redact path not present");
        }
    }
    Document::new(body, doc.provenance.clone())
}

/// Append-only JSONL audit log.
#[derive(Debug)]
pub struct AuditLog {
    path: PathBuf,
    writer: BufWriter<File>,
    entries: u64,
}

impl AuditLog {
    /// Open for appending, creating the file if needed.
    pub fn open(path: impl AsRef<Path>) -> Result<AuditLog> {
        let path = path.as_ref().to_path_buf();
        let existing = match std::fs::read_to_string(&path) {
            Ok(s) => s.lines().count() as u64,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => 0,
            Err(e) => return Err(e.into()),
        };
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(AuditLog {
            path,
            writer: BufWriter::new(file),
            entries: existing,
        })
    }

    pub fn append(&mut self, entry: &AuditEntry) -> Result<()> {
        let line = serde_json::to_string(entry)?;
        self.writer.write_all(line.as_bytes())?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;
        self.entries += 1;
        Ok(())
    }

    pub fn len(&self) -> u64 {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::doc::{AvailabilityStatus, ProvenanceStamp};
    use crate::value::DocValue;

    fn doc(provider: &str, jurisdiction: &str, body: &str) -> Document {
        Document::new(
            DocValue::from_json_str(body).unwrap(),
            ProvenanceStamp {
                availability: AvailabilityStatus::Collected,
                collected_at: Timestamp::from_unix(1_400_000_000),
                jurisdiction: jurisdiction.into(),
                provider_id: provider.into(),
            },
        )
        .unwrap()
    }

    fn rule(scope: RuleScope, max: PrivacyLevel, purpose: Purpose, action: PolicyAction) -> PolicyRule {
        PolicyRule {
            scope,
            max_privacy: max,
            purpose,
            action,
        }
    }

    #[test]
    fn default_ruleset_denies_private_export_allows_public_analyze() {
        let rules = default_ruleset();
        let d = doc("twitter", "FR", r#"{"user":"x"}"#);
        let export = evaluate(&d, PrivacyLevel::Private, Purpose::Export, &rules);
        assert_eq!(export.outcome, PolicyAction::Deny);
        let analyze = evaluate(&d, PrivacyLevel::Public, Purpose::Analyze, &rules);
        assert_eq!(analyze.outcome, PolicyAction::Allow);
        let archive = evaluate(&d, PrivacyLevel::Private, Purpose::Archive, &rules);
        assert_eq!(archive.outcome, PolicyAction::Allow);
    }

    #[test]
    fn redact_rule_lists_its_paths() {
        let rules = vec![rule(
            RuleScope::Wildcard,
            PrivacyLevel::Restricted,
            Purpose::Export,
            PolicyAction::Redact(vec!["user".into()]),
        )];
        let d = doc("twitter", "FR", r#"{"user":"x","n":1}"#);
        let decision = evaluate(&d, PrivacyLevel::Restricted, Purpose::Export, &rules);
        assert_eq!(decision.outcome, PolicyAction::Redact(vec!["user".into()]));
        assert_eq!(decision.rule_index, Some(0));
    }

    #[test]
    fn more_specific_scope_wins() {
        let rules = vec![
            rule(RuleScope::Wildcard, PrivacyLevel::Private, Purpose::Export, PolicyAction::Deny),
            rule(
                RuleScope::Jurisdiction("FR".into()),
                PrivacyLevel::Private,
                Purpose::Export,
                PolicyAction::Redact(vec!["user".into()]),
            ),
            rule(
                RuleScope::Provider("twitter".into()),
                PrivacyLevel::Private,
                Purpose::Export,
                PolicyAction::Allow,
            ),
            rule(
                RuleScope::Attribute("secret".into()),
                PrivacyLevel::Private,
                Purpose::Export,
                PolicyAction::Deny,
            ),
        ];
        let plain = doc("twitter", "FR", r#"{"user":"x"}"#);
        let with_secret = doc("twitter", "FR", r#"{"user":"x","secret":1}"#);
        // Provider (2) beats jurisdiction (1) beats wildcard (0).
        assert_eq!(
            evaluate(&plain, PrivacyLevel::Public, Purpose::Export, &rules).rule_index,
            Some(2)
        );
        // Attribute (3) beats provider when the path is present.
        assert_eq!(
            evaluate(&with_secret, PrivacyLevel::Public, Purpose::Export, &rules).rule_index,
            Some(3)
        );
    }

    #[test]
    fn specificity_tie_prefers_harsher_then_earlier() {
        let rules = vec![
            rule(RuleScope::Wildcard, PrivacyLevel::Private, Purpose::Export, PolicyAction::Allow),
            rule(RuleScope::Wildcard, PrivacyLevel::Private, Purpose::Export, PolicyAction::Deny),
            rule(RuleScope::Wildcard, PrivacyLevel::Private, Purpose::Export, PolicyAction::Deny),
        ];
        let d = doc("p", "FR", r#"{"a":1}"#);
        let decision = evaluate(&d, PrivacyLevel::Public, Purpose::Export, &rules);
        assert_eq!(decision.outcome, PolicyAction::Deny);
        assert_eq!(decision.rule_index, Some(1), "earlier of the two denies");
    }

    #[test]
    fn privacy_above_rule_cap_denies_even_on_allow() {
        let rules = vec![rule(
            RuleScope::Wildcard,
            PrivacyLevel::Public,
            Purpose::Export,
            PolicyAction::Allow,
        )];
        let d = doc("p", "FR", r#"{"a":1}"#);
        let decision = evaluate(&d, PrivacyLevel::Restricted, Purpose::Export, &rules);
        assert_eq!(decision.outcome, PolicyAction::Deny);
        assert_eq!(decision.rule_index, Some(0), "the rule matched, the cap bit");
    }

    #[test]
    fn no_matching_rule_denies() {
        let rules = vec![rule(
            RuleScope::Provider("facebook".into()),
            PrivacyLevel::Private,
            Purpose::Export,
            PolicyAction::Allow,
        )];
        let d = doc("twitter", "FR", r#"{"a":1}"#);
        let decision = evaluate(&d, PrivacyLevel::Public, Purpose::Export, &rules);
        assert_eq!(decision.outcome, PolicyAction::Deny);
        assert_eq!(decision.rule_index, None);
    }

    #[test]
    fn purpose_must_match() {
        let rules = vec![rule(
            RuleScope::Wildcard,
            PrivacyLevel::Private,
            Purpose::Analyze,
            PolicyAction::Allow,
        )];
        let d = doc("p", "FR", r#"{"a":1}"#);
        assert!(evaluate(&d, PrivacyLevel::Public, Purpose::Export, &rules).is_deny());
    }

    #[test]
    fn redact_masks_fields_and_readdresses() {
        let d = doc("twitter", "FR", r#"{"user":"alice","text":"hi","n":1}"#);
        let masked = redact(&d, &["user".into(), "missing".into()]).unwrap();
        assert_eq!(
            masked.body.canonical_json(),
            r#"{"n":1,"text":"hi","user":"[REDACTED]"}"#
        );
        assert_eq!(masked.provenance, d.provenance);
        assert_ne!(masked.id, d.id);

        // Redaction is idempotent: masking again changes nothing.
        let twice = redact(&masked, &["user".into()]).unwrap();
        assert_eq!(twice.id, masked.id);

        // Empty path list is the identity, id included.
        let same = redact(&d, &[]).unwrap();
        assert_eq!(same.id, d.id);
    }

    #[test]
    fn redacted_document_passes_reevaluation() {
        let rules = vec![rule(
            RuleScope::Wildcard,
            PrivacyLevel::Restricted,
            Purpose::Export,
            PolicyAction::Redact(vec!["user".into()]),
        )];
        let d = doc("twitter", "FR", r#"{"user":"alice","n":1}"#);
        let first = evaluate(&d, PrivacyLevel::Restricted, Purpose::Export, &rules);
        let PolicyAction::Redact(paths) = &first.outcome else {
            panic!("expected redact, got {:?}", first.outcome);
        };
        let masked = redact(&d, paths).unwrap();
        let second = evaluate(&masked, PrivacyLevel::Restricted, Purpose::Export, &rules);
        assert!(!second.is_deny());
        // Applying the decision again is a fixed point.
        if let PolicyAction::Redact(paths) = &second.outcome {
            assert_eq!(redact(&masked, paths).unwrap().id, masked.id);
        }
    }

    #[test]
    fn audit_log_appends_one_line_per_decision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("audit.jsonl");
        let rules = default_ruleset();
        let d = doc("twitter", "FR", r#"{"a":1}"#);
        {
            let mut log = AuditLog::open(&path).unwrap();
            for purpose in [Purpose::Archive, Purpose::Analyze, Purpose::Export] {
                evaluate_logged(&d, PrivacyLevel::Private, purpose, &rules, &mut log).unwrap();
            }
            assert_eq!(log.len(), 3);
        }
        let raw = std::fs::read_to_string(&path).unwrap();
        let entries: Vec<AuditEntry> = raw
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(entries.len(), 3);
        assert_eq!(entries[0].outcome, "allow");
        assert_eq!(entries[2].outcome, "deny");
        assert_eq!(entries[0].document, d.id);

        // Reopening keeps appending, never truncates.
        let mut log = AuditLog::open(&path).unwrap();
        assert_eq!(log.len(), 3);
        log.append(&entries[0]).unwrap();
        assert_eq!(log.len(), 4);
    }

    #[test]
    fn ruleset_file_round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.json");
        let rules = vec![
            rule(
                RuleScope::Provider("twitter".into()),
                PrivacyLevel::Restricted,
                Purpose::Export,
                PolicyAction::Redact(vec!["user".into()]),
            ),
            rule(RuleScope::Wildcard, PrivacyLevel::Private, Purpose::Archive, PolicyAction::Allow),
        ];
        std::fs::write(&path, serde_json::to_string_pretty(&rules).unwrap()).unwrap();
        assert_eq!(load_ruleset(&path).unwrap(), rules);

        std::fs::write(&path, "[]").unwrap();
        assert!(load_ruleset(&path).is_err());

        let bad = vec![rule(
            RuleScope::Wildcard,
            PrivacyLevel::Public,
            Purpose::Export,
            PolicyAction::Redact(vec![]),
        )];
        std::fs::write(&path, serde_json::to_string(&bad).unwrap()).unwrap();
        assert!(load_ruleset(&path).is_err());
    }
}
