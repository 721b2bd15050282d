//! Analyst validation of a view: confirmations, type overrides, and free
//! notes, each recorded as an annotation and bumping the version.

use std::collections::BTreeSet;

use super::{AnnotationAction, AttrType, ValidationAnnotation, View, ViewStatus};
use crate::{Error, Result};

/// Records the annotation on a copy of the view. Confirming the last
/// unconfirmed path promotes the view to validated; a type override replaces
/// the profile's primary type and is kept across merges.
pub fn apply_validation(view: &View, annotation: ValidationAnnotation) -> Result<View> {
    if view.profile(&annotation.path).is_none() {
        return Err(Error::UnknownPath(annotation.path.clone()));
    }
    let mut next = view.clone();
    if let AnnotationAction::OverrideType(t) = &annotation.action {
        let profile = next
            .profiles
            .iter_mut()
            .find(|p| p.path == annotation.path)
            .expect("path checked above");
        profile.type_override = Some(*t);
        profile.primary_type = Some(*t);
    }
    next.annotations.push(annotation);
    next.version += 1;
    if all_paths_confirmed(&next) {
        next.status = ViewStatus::Validated;
    }
    Ok(next)
}

fn all_paths_confirmed(view: &View) -> bool {
    let confirmed: BTreeSet<&str> = view
        .annotations
        .iter()
        .filter(|a| matches!(a.action, AnnotationAction::Confirm))
        .map(|a| a.path.as_str())
        .collect();
    view.profiles.iter().all(|p| confirmed.contains(p.path.as_str()))
}

/// Convenience constructor used by the command line.
pub fn annotation(
    path: &str,
    action: AnnotationAction,
    analyst: &str,
    at: crate::value::Timestamp,
) -> ValidationAnnotation {
    ValidationAnnotation {
        path: path.to_string(),
        action,
        analyst: analyst.to_string(),
        at,
    }
}

/// Parses an override target from its label.
pub fn attr_type_from_label(label: &str) -> Result<AttrType> {
    let t = match label {
        "boolean" => AttrType::Boolean,
        "integer" => AttrType::Integer,
        "float" => AttrType::Float,
        "timestamp" => AttrType::Timestamp,
        "url" => AttrType::Url,
        "text" => AttrType::Text,
        "record" => AttrType::Record,
        "list" => AttrType::List,
        other => return Err(Error::Plan(format!("unknown attribute type {other:?}"))),
    };
    Ok(t)
}
