//! Structured requirement schema extracted from natural-language contract text.
//!
//! The parser agent returns this schema as JSON with snake_case keys; the key
//! names here are the wire contract with that prompt. Unknown fields are
//! ignored to tolerate model drift, missing list fields default to empty.
//! All types are immutable after construction and safe to share across
//! pipeline workers.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A participant in the contract (e.g. "Tenant", "Landlord").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Party {
    pub name: String,
    #[serde(default)]
    pub role: String,
    /// 20-byte hex address with 0x prefix, when the text names one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub address: Option<String>,
}

/// A monetary term: amount, currency, and what it pays for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FinancialTerm {
    pub amount: String,
    #[serde(default)]
    pub currency: String,
    #[serde(default)]
    pub purpose: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub due_date: Option<String>,
}

/// A labelled date: ISO-8601 when detectable, otherwise free text
/// ("30 days after signing").
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct DateTerm {
    pub label: String,
    pub value: String,
}

impl DateTerm {
    /// Best-effort ISO-8601 (YYYY-MM-DD) detection on the stored value.
    pub fn iso_date(&self) -> Option<&str> {
        let v = self.value.trim();
        let b = v.as_bytes();
        if b.len() < 10 {
            return None;
        }
        let head = &b[..10];
        let ok = head.iter().enumerate().all(|(i, c)| match i {
            4 | 7 => *c == b'-',
            _ => c.is_ascii_digit(),
        });
        if !ok {
            return None;
        }
        let month: u8 = v[5..7].parse().ok()?;
        let day: u8 = v[8..10].parse().ok()?;
        if (1..=12).contains(&month) && (1..=31).contains(&day) {
            Some(&v[..10])
        } else {
            None
        }
    }
}

/// An asset involved in the agreement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Asset {
    #[serde(rename = "type", default)]
    pub asset_type: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub location: String,
    #[serde(default)]
    pub value: String,
}

/// A party responsibility with optional deadline and breach penalty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Obligation {
    pub party: String,
    pub responsibility: String,
    #[serde(default)]
    pub deadline: String,
    #[serde(default)]
    pub breach_penalty: String,
}

/// A state-machine transition named in the specification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Transition {
    pub from_state: String,
    pub to_state: String,
    #[serde(default)]
    pub trigger: String,
    #[serde(default)]
    pub guard: String,
}

/// The implementable core of the schema: identifiers and logic the generated
/// contract is expected to realize.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ConditionBlock {
    #[serde(default)]
    pub function_names: Vec<String>,
    #[serde(default)]
    pub variable_names: Vec<String>,
    #[serde(default)]
    pub state_names: Vec<String>,
    #[serde(default)]
    pub transitions: Vec<Transition>,
    #[serde(default)]
    pub events: Vec<String>,
    #[serde(default)]
    pub logic_conditions: Vec<String>,
}

/// Structured extraction of a natural-language contract specification
/// (phase-1 output).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct ContractSchema {
    #[serde(default)]
    pub parties: Vec<Party>,
    #[serde(default)]
    pub financial_terms: Vec<FinancialTerm>,
    #[serde(default)]
    pub dates: Vec<DateTerm>,
    #[serde(default)]
    pub assets: Vec<Asset>,
    #[serde(default)]
    pub obligations: Vec<Obligation>,
    #[serde(default)]
    pub conditions: ConditionBlock,
    #[serde(default)]
    pub termination_conditions: Vec<String>,
}

/// Validation findings. Problems are flagged, never silently dropped or
/// rejected: the pipeline decides what to do with a flagged schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemaFlag {
    /// An obligation names a party not present in `parties`.
    UnresolvedParty {
        obligation_index: usize,
        party: String,
    },
    /// A transition endpoint does not appear in `state_names`.
    UnresolvedState {
        transition_index: usize,
        state: String,
    },
    /// An identifier does not match Solidity identifier syntax.
    BadIdentifier { field: String, value: String },
    /// A party address is not 20-byte hex with a 0x prefix.
    BadAddress { party: String, address: String },
    /// The schema has no functions to implement.
    Degenerate,
}

/// True iff `s` is a 20-byte hex address with 0x prefix.
pub fn is_hex_address(s: &str) -> bool {
    let Some(body) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) else {
        return false;
    };
    body.len() == 40 && body.bytes().all(|b| b.is_ascii_hexdigit())
}

/// Errors from [`schema_from_json`].
#[derive(Debug, Error)]
pub enum SchemaError {
    /// Not valid JSON, or the top level is not an object. Signals an LLM
    /// formatting failure; the pipeline treats it as a phase retry trigger.
    #[error("malformed schema: {0}")]
    MalformedSchema(String),
}

/// True iff `s` is a valid Solidity identifier: letter/underscore/`$` start,
/// alphanumeric/underscore/`$` body.
pub fn is_solidity_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' || c == '$' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '$')
}

/// Validate a schema, returning every flag implied by the invariants.
/// Total and side-effect free: the same schema always yields the same flags.
pub fn validate_schema(schema: &ContractSchema) -> Vec<SchemaFlag> {
    let mut flags = Vec::new();

    for p in &schema.parties {
        if let Some(address) = &p.address {
            if !is_hex_address(address) {
                flags.push(SchemaFlag::BadAddress {
                    party: p.name.clone(),
                    address: address.clone(),
                });
            }
        }
    }

    let party_names: Vec<&str> = schema.parties.iter().map(|p| p.name.as_str()).collect();
    for (i, ob) in schema.obligations.iter().enumerate() {
        if !ob.party.is_empty() && !party_names.iter().any(|n| *n == ob.party) {
            flags.push(SchemaFlag::UnresolvedParty {
                obligation_index: i,
                party: ob.party.clone(),
            });
        }
    }

    let states = &schema.conditions.state_names;
    for (i, tr) in schema.conditions.transitions.iter().enumerate() {
        for endpoint in [&tr.from_state, &tr.to_state] {
            if !endpoint.is_empty() && !states.iter().any(|s| s == endpoint) {
                flags.push(SchemaFlag::UnresolvedState {
                    transition_index: i,
                    state: endpoint.clone(),
                });
            }
        }
    }

    let ident_fields: [(&str, &Vec<String>); 4] = [
        ("function_names", &schema.conditions.function_names),
        ("variable_names", &schema.conditions.variable_names),
        ("state_names", &schema.conditions.state_names),
        ("events", &schema.conditions.events),
    ];
    for (field, values) in ident_fields {
        for v in values {
            if !is_solidity_identifier(v) {
                flags.push(SchemaFlag::BadIdentifier {
                    field: field.to_string(),
                    value: v.clone(),
                });
            }
        }
    }

    if schema.conditions.function_names.is_empty() {
        flags.push(SchemaFlag::Degenerate);
    }

    flags
}

/// Parse a schema from JSON bytes. Unknown fields are ignored; missing list
/// fields default to empty.
pub fn schema_from_json(text: &[u8]) -> Result<ContractSchema, SchemaError> {
    let value: serde_json::Value =
        serde_json::from_slice(text).map_err(|e| SchemaError::MalformedSchema(e.to_string()))?;
    if !value.is_object() {
        return Err(SchemaError::MalformedSchema(format!(
            "top level must be a JSON object, got {}",
            json_kind(&value)
        )));
    }
    serde_json::from_value(value).map_err(|e| SchemaError::MalformedSchema(e.to_string()))
}

/// Serialize a schema to its canonical JSON wire form.
pub fn schema_to_json(schema: &ContractSchema) -> Vec<u8> {
    // Struct serialization cannot fail.
    serde_json::to_vec_pretty(schema).expect("schema serialization is infallible")
}

fn json_kind(v: &serde_json::Value) -> &'static str {
    match v {
        serde_json::Value::Null => "null",
        serde_json::Value::Bool(_) => "bool",
        serde_json::Value::Number(_) => "number",
        serde_json::Value::String(_) => "string",
        serde_json::Value::Array(_) => "array",
        serde_json::Value::Object(_) => "object",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema_with(parties: &[&str], obligation_party: &str) -> ContractSchema {
        ContractSchema {
            parties: parties
                .iter()
                .map(|n| Party {
                    name: n.to_string(),
                    role: String::new(),
                    address: None,
                })
                .collect(),
            obligations: vec![Obligation {
                party: obligation_party.to_string(),
                responsibility: "pay rent monthly".to_string(),
                ..Default::default()
            }],
            conditions: ConditionBlock {
                function_names: vec!["payRent".to_string()],
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn resolved_party_yields_no_flags() {
        let schema = schema_with(&["Tenant", "Landlord"], "Tenant");
        assert_eq!(validate_schema(&schema), vec![]);
    }

    #[test]
    fn staking_transitions_resolve_against_state_names() {
        let mut schema = ContractSchema::default();
        schema.conditions.function_names = vec!["stake".into()];
        schema.conditions.state_names = vec![
            "FarmingNotStarted".into(),
            "FarmingOngoing".into(),
            "FarmingEnded".into(),
        ];
        schema.conditions.transitions = vec![Transition {
            from_state: "FarmingOngoing".into(),
            to_state: "FarmingEnded".into(),
            trigger: "end time reached".into(),
            guard: String::new(),
        }];
        assert_eq!(validate_schema(&schema), vec![]);
    }

    #[test]
    fn dangling_transition_endpoint_is_flagged() {
        let mut schema = ContractSchema::default();
        schema.conditions.function_names = vec!["go".into()];
        schema.conditions.state_names = vec!["A".into()];
        schema.conditions.transitions = vec![Transition {
            from_state: "A".into(),
            to_state: "B".into(),
            ..Default::default()
        }];
        assert_eq!(
            validate_schema(&schema),
            vec![SchemaFlag::UnresolvedState {
                transition_index: 0,
                state: "B".into()
            }]
        );
    }

    #[test]
    fn unresolved_party_is_flagged() {
        let schema = schema_with(&["Landlord"], "Tenant");
        assert_eq!(
            validate_schema(&schema)[0],
            SchemaFlag::UnresolvedParty {
                obligation_index: 0,
                party: "Tenant".into()
            }
        );
    }

    #[test]
    fn bad_identifier_is_flagged_not_rejected() {
        let mut schema = ContractSchema::default();
        schema.conditions.function_names = vec!["pay rent".into(), "withdraw".into()];
        let flags = validate_schema(&schema);
        assert_eq!(
            flags,
            vec![SchemaFlag::BadIdentifier {
                field: "function_names".into(),
                value: "pay rent".into()
            }]
        );
    }

    #[test]
    fn empty_schema_is_degenerate() {
        let schema = schema_from_json(b"{}").unwrap();
        assert_eq!(validate_schema(&schema), vec![SchemaFlag::Degenerate]);
    }

    #[test]
    fn from_json_maps_fields() {
        let schema = schema_from_json(
            br#"{"parties":[],"conditions":{"function_names":["stake","withdraw"]}}"#,
        )
        .unwrap();
        assert_eq!(schema.conditions.function_names.len(), 2);
    }

    #[test]
    fn unknown_fields_are_ignored() {
        let schema =
            schema_from_json(br#"{"parties":[],"model_notes":"extra","conditions":{}}"#).unwrap();
        assert!(schema.parties.is_empty());
    }

    #[test]
    fn truncated_json_is_malformed() {
        assert!(matches!(
            schema_from_json(br#"{"parties":["#),
            Err(SchemaError::MalformedSchema(_))
        ));
    }

    #[test]
    fn non_object_top_level_is_malformed() {
        assert!(schema_from_json(b"[1,2,3]").is_err());
        assert!(schema_from_json(b"\"text\"").is_err());
    }

    #[test]
    fn validate_is_idempotent() {
        let schema = schema_with(&["Landlord"], "Tenant");
        assert_eq!(validate_schema(&schema), validate_schema(&schema));
    }

    #[test]
    fn iso_date_detection() {
        let d = |v: &str| DateTerm {
            label: "due".into(),
            value: v.into(),
        };
        assert_eq!(d("2024-03-01").iso_date(), Some("2024-03-01"));
        assert_eq!(d("2024-03-01T00:00:00Z").iso_date(), Some("2024-03-01"));
        assert_eq!(d("30 days after signing").iso_date(), None);
        assert_eq!(d("2024-13-01").iso_date(), None);
    }

    #[test]
    fn party_addresses_are_checked() {
        let mut schema = schema_with(&["Tenant"], "Tenant");
        schema.parties[0].address = Some("0x1234".into());
        assert!(matches!(
            validate_schema(&schema)[0],
            SchemaFlag::BadAddress { .. }
        ));
        schema.parties[0].address = Some("0x52908400098527886E0F7030069857D2E4169EE7".into());
        assert_eq!(validate_schema(&schema), vec![]);
    }

    #[test]
    fn identifier_syntax() {
        assert!(is_solidity_identifier("_stake9"));
        assert!(is_solidity_identifier("$x"));
        assert!(!is_solidity_identifier("9lives"));
        assert!(!is_solidity_identifier(""));
        assert!(!is_solidity_identifier("pay-rent"));
    }
}
