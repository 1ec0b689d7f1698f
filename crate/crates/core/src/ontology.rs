//! Event ontology: event types, their role sets, entity types, label
//! verbalizers, and the declarative global-constraint definitions.
//!
//! The ontology file is a JSON object (see [`Ontology::from_json_str`]);
//! constraints are a JSON array of tagged objects (see
//! [`parse_constraints`]). Both are validated on load and immutable
//! afterwards, so they can be shared freely across threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OntologyError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("invalid ontology: {0}")]
    Invalid(String),
    #[error("invalid constraint at index {index}: {message}")]
    InvalidConstraint { index: usize, message: String },
}

/// An event type. Prompts use only the subtype name (`name`); the optional
/// `full_name` keeps the `Family:Subtype` form for reporting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventType {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_name: Option<String>,
}

/// An argument role with its cloze surface form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Role {
    pub name: String,
    pub verbalization: String,
}

/// An entity type (the auxiliary-task label set) with its cloze surface form.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityType {
    pub name: String,
    pub verbalization: String,
}

/// The validated event ontology.
///
/// Role order within each event and entity-type order are file order; that
/// order is the tie-break order everywhere downstream, so loading is the one
/// place it gets fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct Ontology {
    event_types: Vec<EventType>,
    roles_by_event: BTreeMap<String, Vec<Role>>,
    allowed_entity_types: BTreeMap<(String, String), BTreeSet<String>>,
    entity_types: Vec<EntityType>,
}

/// Default surface form for a label that carries no explicit verbalization:
/// lowercase, with `-` and `_` each replaced by a space.
pub fn default_verbalization(name: &str) -> String {
    name.to_lowercase().replace(['-', '_'], " ")
}

fn validate_verbalization(owner: &str, v: &str) -> Result<(), OntologyError> {
    if v.is_empty() {
        return Err(OntologyError::Invalid(format!(
            "{owner}: verbalization is empty"
        )));
    }
    if v.chars().any(|c| c.is_uppercase()) {
        return Err(OntologyError::Invalid(format!(
            "{owner}: verbalization {v:?} must be lowercase"
        )));
    }
    Ok(())
}

// Wire format of the ontology file.
#[derive(Serialize, Deserialize)]
struct OntologyFile {
    event_types: Vec<EventTypeFile>,
    #[serde(default)]
    entity_types: Vec<EntityTypeFile>,
}

#[derive(Serialize, Deserialize)]
struct EventTypeFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    full_name: Option<String>,
    roles: Vec<RoleFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role_entity_types: Option<BTreeMap<String, Vec<String>>>,
}

#[derive(Serialize, Deserialize)]
struct RoleFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verbalization: Option<String>,
}

#[derive(Serialize, Deserialize)]
struct EntityTypeFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    verbalization: Option<String>,
}

impl Ontology {
    /// Loads and validates an ontology file.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, OntologyError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| OntologyError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text).map_err(|e| match e {
            OntologyError::Parse { source, .. } => OntologyError::Parse {
                path: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    /// Parses and validates an ontology from its JSON text.
    pub fn from_json_str(text: &str) -> Result<Self, OntologyError> {
        let file: OntologyFile =
            serde_json::from_str(text).map_err(|source| OntologyError::Parse {
                path: "<string>".to_string(),
                source,
            })?;
        Self::from_file(file)
    }

    fn from_file(file: OntologyFile) -> Result<Self, OntologyError> {
        if file.event_types.is_empty() {
            return Err(OntologyError::Invalid(
                "ontology declares no event types".to_string(),
            ));
        }

        let mut entity_types = Vec::with_capacity(file.entity_types.len());
        let mut entity_names = BTreeSet::new();
        for e in file.entity_types {
            if e.name.is_empty() {
                return Err(OntologyError::Invalid("entity type with empty name".into()));
            }
            if !entity_names.insert(e.name.clone()) {
                return Err(OntologyError::Invalid(format!(
                    "duplicate entity type {:?}",
                    e.name
                )));
            }
            let verbalization = match e.verbalization {
                Some(v) => {
                    validate_verbalization(&format!("entity type {:?}", e.name), &v)?;
                    v
                }
                None => default_verbalization(&e.name),
            };
            entity_types.push(EntityType {
                name: e.name,
                verbalization,
            });
        }

        let mut event_types = Vec::with_capacity(file.event_types.len());
        let mut roles_by_event = BTreeMap::new();
        let mut allowed_entity_types = BTreeMap::new();
        for ev in file.event_types {
            if ev.name.is_empty() {
                return Err(OntologyError::Invalid("event type with empty name".into()));
            }
            if roles_by_event.contains_key(&ev.name) {
                return Err(OntologyError::Invalid(format!(
                    "duplicate event type {:?}",
                    ev.name
                )));
            }
            if ev.roles.is_empty() {
                return Err(OntologyError::Invalid(format!(
                    "event type {:?} declares no roles",
                    ev.name
                )));
            }
            let mut roles = Vec::with_capacity(ev.roles.len());
            let mut role_names = BTreeSet::new();
            for r in ev.roles {
                if r.name.is_empty() {
                    return Err(OntologyError::Invalid(format!(
                        "event type {:?} has a role with empty name",
                        ev.name
                    )));
                }
                if !role_names.insert(r.name.clone()) {
                    return Err(OntologyError::Invalid(format!(
                        "event type {:?} declares role {:?} twice",
                        ev.name, r.name
                    )));
                }
                let verbalization = match r.verbalization {
                    Some(v) => {
                        validate_verbalization(
                            &format!("role {:?} of event {:?}", r.name, ev.name),
                            &v,
                        )?;
                        v
                    }
                    None => default_verbalization(&r.name),
                };
                roles.push(Role {
                    name: r.name,
                    verbalization,
                });
            }
            if let Some(mapping) = ev.role_entity_types {
                for (role, etypes) in mapping {
                    if !role_names.contains(&role) {
                        return Err(OntologyError::Invalid(format!(
                            "role_entity_types of event {:?} references unknown role {:?}",
                            ev.name, role
                        )));
                    }
                    if etypes.is_empty() {
                        return Err(OntologyError::Invalid(format!(
                            "role_entity_types of ({:?}, {:?}) is empty",
                            ev.name, role
                        )));
                    }
                    let mut set = BTreeSet::new();
                    for t in etypes {
                        if !entity_names.contains(&t) {
                            return Err(OntologyError::Invalid(format!(
                                "role_entity_types of ({:?}, {:?}) references unknown entity type {:?}",
                                ev.name, role, t
                            )));
                        }
                        set.insert(t);
                    }
                    allowed_entity_types.insert((ev.name.clone(), role), set);
                }
            }
            roles_by_event.insert(ev.name.clone(), roles);
            event_types.push(EventType {
                name: ev.name,
                full_name: ev.full_name,
            });
        }

        Ok(Ontology {
            event_types,
            roles_by_event,
            allowed_entity_types,
            entity_types,
        })
    }

    /// Serializes back to the ontology file schema. Verbalizations resolved
    /// at load time are written out explicitly, so reloading the result
    /// yields an equal `Ontology`.
    pub fn to_json_string(&self) -> String {
        let file = OntologyFile {
            event_types: self
                .event_types
                .iter()
                .map(|ev| {
                    let roles = &self.roles_by_event[&ev.name];
                    let mapping: BTreeMap<String, Vec<String>> = self
                        .allowed_entity_types
                        .iter()
                        .filter(|((e, _), _)| e == &ev.name)
                        .map(|((_, r), set)| (r.clone(), set.iter().cloned().collect()))
                        .collect();
                    EventTypeFile {
                        name: ev.name.clone(),
                        full_name: ev.full_name.clone(),
                        roles: roles
                            .iter()
                            .map(|r| RoleFile {
                                name: r.name.clone(),
                                verbalization: Some(r.verbalization.clone()),
                            })
                            .collect(),
                        role_entity_types: if mapping.is_empty() {
                            None
                        } else {
                            Some(mapping)
                        },
                    }
                })
                .collect(),
            entity_types: self
                .entity_types
                .iter()
                .map(|e| EntityTypeFile {
                    name: e.name.clone(),
                    verbalization: Some(e.verbalization.clone()),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("ontology file model serializes")
    }

    pub fn event_types(&self) -> &[EventType] {
        &self.event_types
    }

    pub fn event(&self, name: &str) -> Option<&EventType> {
        self.event_types.iter().find(|e| e.name == name)
    }

    pub fn has_event(&self, name: &str) -> bool {
        self.roles_by_event.contains_key(name)
    }

    /// Roles of an event type, in file order.
    pub fn roles(&self, event_type: &str) -> Option<&[Role]> {
        self.roles_by_event.get(event_type).map(|v| v.as_slice())
    }

    pub fn role(&self, event_type: &str, role: &str) -> Option<&Role> {
        self.roles(event_type)?.iter().find(|r| r.name == role)
    }

    /// Entity types admissible for `(event_type, role)`, or `None` when the
    /// ontology carries no mapping for that pair.
    pub fn allowed_entity_types(&self, event_type: &str, role: &str) -> Option<&BTreeSet<String>> {
        self.allowed_entity_types
            .get(&(event_type.to_string(), role.to_string()))
    }

    /// All entity types, in file order.
    pub fn entity_types(&self) -> &[EntityType] {
        &self.entity_types
    }

    pub fn entity_type(&self, name: &str) -> Option<&EntityType> {
        self.entity_types.iter().find(|e| e.name == name)
    }
}

/// Scope of a count constraint: one event type or every event.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum CountScope {
    Any,
    Event(String),
}

impl CountScope {
    pub fn matches(&self, event_type: &str) -> bool {
        match self {
            CountScope::Any => true,
            CountScope::Event(e) => e == event_type,
        }
    }
}

/// A declarative global constraint.
///
/// `CrossTask` carries no fields of its own; it reads the ontology's
/// role-to-entity-type admissibility map. `Count` caps how many arguments of
/// one event may hold a role. `EventPair` binds roles across two events that
/// share argument spans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ConstraintSpec {
    CrossTask,
    Count {
        scope: CountScope,
        role: String,
        max_count: usize,
    },
    EventPair {
        event_a: String,
        event_b: String,
        bindings: Vec<(String, String)>,
    },
}

// Wire format of one constraint entry.
#[derive(Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
enum ConstraintFile {
    CrossTask,
    Count {
        #[serde(default)]
        event: Option<String>,
        role: String,
        max: i64,
    },
    EventPair {
        a: String,
        b: String,
        bindings: Vec<(String, String)>,
    },
}

/// Loads constraints from a JSON array file and validates each entry against
/// the ontology. File order is preserved; it is the application order within
/// each constraint kind.
pub fn load_constraints(
    path: impl AsRef<Path>,
    ontology: &Ontology,
) -> Result<Vec<ConstraintSpec>, OntologyError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| OntologyError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_constraints(&text, ontology).map_err(|e| match e {
        OntologyError::Parse { source, .. } => OntologyError::Parse {
            path: path.display().to_string(),
            source,
        },
        other => other,
    })
}

/// Parses and validates a constraint array from its JSON text.
pub fn parse_constraints(
    text: &str,
    ontology: &Ontology,
) -> Result<Vec<ConstraintSpec>, OntologyError> {
    let entries: Vec<serde_json::Value> =
        serde_json::from_str(text).map_err(|source| OntologyError::Parse {
            path: "<string>".to_string(),
            source,
        })?;
    let mut specs = Vec::with_capacity(entries.len());
    for (index, entry) in entries.into_iter().enumerate() {
        let fail = |message: String| OntologyError::InvalidConstraint { index, message };
        let parsed: ConstraintFile =
            serde_json::from_value(entry).map_err(|e| fail(e.to_string()))?;
        let spec = match parsed {
            ConstraintFile::CrossTask => ConstraintSpec::CrossTask,
            ConstraintFile::Count { event, role, max } => {
                if max < 1 {
                    return Err(fail(format!("max must be >= 1, got {max}")));
                }
                let scope = match event.as_deref() {
                    None | Some("ANY") => {
                        let known = ontology
                            .event_types()
                            .iter()
                            .any(|e| ontology.role(&e.name, &role).is_some());
                        if !known {
                            return Err(fail(format!(
                                "role {role:?} does not exist in any event type"
                            )));
                        }
                        CountScope::Any
                    }
                    Some(e) => {
                        if !ontology.has_event(e) {
                            return Err(fail(format!("unknown event type {e:?}")));
                        }
                        if ontology.role(e, &role).is_none() {
                            return Err(fail(format!(
                                "role {role:?} does not exist in event type {e:?}"
                            )));
                        }
                        CountScope::Event(e.to_string())
                    }
                };
                ConstraintSpec::Count {
                    scope,
                    role,
                    max_count: max as usize,
                }
            }
            ConstraintFile::EventPair { a, b, bindings } => {
                if !ontology.has_event(&a) {
                    return Err(fail(format!("unknown event type {a:?}")));
                }
                if !ontology.has_event(&b) {
                    return Err(fail(format!("unknown event type {b:?}")));
                }
                if bindings.is_empty() {
                    return Err(fail("bindings must be non-empty".to_string()));
                }
                let mut seen_a = BTreeSet::new();
                let mut seen_b = BTreeSet::new();
                for (ra, rb) in &bindings {
                    if ontology.role(&a, ra).is_none() {
                        return Err(fail(format!(
                            "role {ra:?} does not exist in event type {a:?}"
                        )));
                    }
                    if ontology.role(&b, rb).is_none() {
                        return Err(fail(format!(
                            "role {rb:?} does not exist in event type {b:?}"
                        )));
                    }
                    if !seen_a.insert(ra.clone()) {
                        return Err(fail(format!("role {ra:?} repeated on the a side")));
                    }
                    if !seen_b.insert(rb.clone()) {
                        return Err(fail(format!("role {rb:?} repeated on the b side")));
                    }
                }
                ConstraintSpec::EventPair {
                    event_a: a,
                    event_b: b,
                    bindings,
                }
            }
        };
        specs.push(spec);
    }
    Ok(specs)
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const ATTACK_ONTOLOGY: &str = r#"{
        "event_types": [
            {
                "name": "Attack",
                "full_name": "Conflict:Attack",
                "roles": [
                    {"name": "Attacker"},
                    {"name": "Instrument"},
                    {"name": "Place"},
                    {"name": "Time"},
                    {"name": "Target"}
                ],
                "role_entity_types": {
                    "Target": ["PER", "ORG", "VEH"],
                    "Instrument": ["WEA", "VEH"]
                }
            }
        ],
        "entity_types": [
            {"name": "PER", "verbalization": "person"},
            {"name": "ORG", "verbalization": "organization"},
            {"name": "GPE", "verbalization": "geopolitical entity"},
            {"name": "LOC", "verbalization": "location"},
            {"name": "FAC", "verbalization": "facility"},
            {"name": "VEH", "verbalization": "vehicle"},
            {"name": "WEA", "verbalization": "weapon"}
        ]
    }"#;

    #[test]
    fn attack_has_five_roles_in_file_order() {
        let ont = Ontology::from_json_str(ATTACK_ONTOLOGY).unwrap();
        let roles = ont.roles("Attack").unwrap();
        assert_eq!(roles.len(), 5);
        let names: Vec<_> = roles.iter().map(|r| r.name.as_str()).collect();
        assert_eq!(
            names,
            ["Attacker", "Instrument", "Place", "Time", "Target"]
        );
    }

    #[test]
    fn empty_ontology_rejected() {
        let err = Ontology::from_json_str(r#"{"event_types": [], "entity_types": []}"#)
            .unwrap_err();
        assert!(matches!(err, OntologyError::Invalid(_)));
    }

    #[test]
    fn allowed_entity_types_lookup() {
        let ont = Ontology::from_json_str(ATTACK_ONTOLOGY).unwrap();
        let allowed = ont.allowed_entity_types("Attack", "Target").unwrap();
        let expect: BTreeSet<String> =
            ["PER", "ORG", "VEH"].iter().map(|s| s.to_string()).collect();
        assert_eq!(allowed, &expect);
        assert!(ont.allowed_entity_types("Attack", "Place").is_none());
    }

    #[test]
    fn round_trip_identity() {
        let ont = Ontology::from_json_str(ATTACK_ONTOLOGY).unwrap();
        let reloaded = Ontology::from_json_str(&ont.to_json_string()).unwrap();
        assert_eq!(ont, reloaded);
    }

    #[test]
    fn default_verbalizations() {
        assert_eq!(default_verbalization("Attacker"), "attacker");
        assert_eq!(default_verbalization("Time-Within"), "time within");
        assert_eq!(default_verbalization("End_Position"), "end position");
        let ont = Ontology::from_json_str(ATTACK_ONTOLOGY).unwrap();
        assert_eq!(ont.role("Attack", "Attacker").unwrap().verbalization, "attacker");
        assert_eq!(ont.entity_type("WEA").unwrap().verbalization, "weapon");
    }

    #[test]
    fn uppercase_verbalization_rejected() {
        let bad = r#"{
            "event_types": [{"name": "Attack", "roles": [{"name": "Target", "verbalization": "Target"}]}],
            "entity_types": []
        }"#;
        assert!(matches!(
            Ontology::from_json_str(bad).unwrap_err(),
            OntologyError::Invalid(_)
        ));
    }

    #[test]
    fn unknown_role_in_entity_mapping_rejected() {
        let bad = r#"{
            "event_types": [{
                "name": "Attack",
                "roles": [{"name": "Target"}],
                "role_entity_types": {"Victim": ["PER"]}
            }],
            "entity_types": [{"name": "PER"}]
        }"#;
        let err = Ontology::from_json_str(bad).unwrap_err();
        assert!(err.to_string().contains("Victim"));
    }

    fn two_event_ontology() -> Ontology {
        Ontology::from_json_str(
            r#"{
            "event_types": [
                {"name": "Attack", "roles": [
                    {"name": "Attacker"}, {"name": "Instrument"}, {"name": "Place"},
                    {"name": "Time"}, {"name": "Target"}
                ]},
                {"name": "Injure", "roles": [
                    {"name": "Agent"}, {"name": "Victim"}, {"name": "Instrument"},
                    {"name": "Time"}, {"name": "Place"}
                ]},
                {"name": "End-Position", "roles": [
                    {"name": "Person"}, {"name": "Entity"}, {"name": "Position"},
                    {"name": "Time"}, {"name": "Place"}
                ]}
            ],
            "entity_types": [{"name": "PER"}]
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn count_constraint_parses() {
        let ont = two_event_ontology();
        let specs = parse_constraints(
            r#"[{"kind": "Count", "event": "End-Position", "role": "Position", "max": 1}]"#,
            &ont,
        )
        .unwrap();
        assert_eq!(
            specs,
            vec![ConstraintSpec::Count {
                scope: CountScope::Event("End-Position".into()),
                role: "Position".into(),
                max_count: 1
            }]
        );
    }

    #[test]
    fn count_any_scope_parses() {
        let ont = two_event_ontology();
        let specs = parse_constraints(
            r#"[{"kind": "Count", "event": "ANY", "role": "Time", "max": 1}]"#,
            &ont,
        )
        .unwrap();
        assert_eq!(
            specs,
            vec![ConstraintSpec::Count {
                scope: CountScope::Any,
                role: "Time".into(),
                max_count: 1
            }]
        );
    }

    #[test]
    fn event_pair_parses_with_five_bindings() {
        let ont = two_event_ontology();
        let specs = parse_constraints(
            r#"[{"kind": "EventPair", "a": "Injure", "b": "Attack", "bindings":
                [["Place","Place"],["Victim","Target"],["Instrument","Instrument"],
                 ["Time","Time"],["Agent","Attacker"]]}]"#,
            &ont,
        )
        .unwrap();
        match &specs[0] {
            ConstraintSpec::EventPair { bindings, .. } => assert_eq!(bindings.len(), 5),
            other => panic!("expected EventPair, got {other:?}"),
        }
    }

    #[test]
    fn constraint_error_cases() {
        let ont = two_event_ontology();
        let unknown_kind = parse_constraints(r#"[{"kind": "Frob"}]"#, &ont).unwrap_err();
        assert!(matches!(
            unknown_kind,
            OntologyError::InvalidConstraint { index: 0, .. }
        ));
        assert!(parse_constraints(
            r#"[{"kind": "Count", "event": "Nope", "role": "Time", "max": 1}]"#,
            &ont
        )
        .is_err());
        assert!(parse_constraints(
            r#"[{"kind": "Count", "event": "Attack", "role": "Victim", "max": 1}]"#,
            &ont
        )
        .is_err());
        assert!(parse_constraints(
            r#"[{"kind": "Count", "event": "Attack", "role": "Target", "max": 0}]"#,
            &ont
        )
        .is_err());
        assert!(parse_constraints(
            r#"[{"kind": "EventPair", "a": "Injure", "b": "Attack", "bindings": []}]"#,
            &ont
        )
        .is_err());
        // Malformed binding: not a pair.
        assert!(parse_constraints(
            r#"[{"kind": "EventPair", "a": "Injure", "b": "Attack", "bindings": [["Place"]]}]"#,
            &ont
        )
        .is_err());
        // Repeated role on one side.
        assert!(parse_constraints(
            r#"[{"kind": "EventPair", "a": "Injure", "b": "Attack",
                "bindings": [["Place","Place"],["Place","Time"]]}]"#,
            &ont
        )
        .is_err());
    }
}
