//! Deterministic contract-ABI generation from a parsed surface.
//!
//! The ABI is a mechanical projection of declarations: one entry per
//! public/external function, constructor, and event, in declaration order,
//! emitted in the standard Ethereum ABI JSON array form. Types the
//! structural parser cannot normalize (structs, mappings, contract types)
//! are kept as raw text with a warning, never dropped.

use serde::{Deserialize, Serialize};

use crate::solidity::{ContractSurface, Mutability, Param};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbiKind {
    Function,
    Constructor,
    Event,
    Fallback,
    Receive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StateMutability {
    Pure,
    View,
    #[default]
    Nonpayable,
    Payable,
}

impl StateMutability {
    fn from_mutability(m: Mutability) -> Self {
        match m {
            Mutability::None => StateMutability::Nonpayable,
            Mutability::View => StateMutability::View,
            Mutability::Pure => StateMutability::Pure,
            Mutability::Payable => StateMutability::Payable,
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            StateMutability::Pure => "pure",
            StateMutability::View => "view",
            StateMutability::Nonpayable => "nonpayable",
            StateMutability::Payable => "payable",
        }
    }

    fn parse(text: &str) -> Option<Self> {
        match text {
            "pure" => Some(Self::Pure),
            "view" => Some(Self::View),
            "nonpayable" => Some(Self::Nonpayable),
            "payable" => Some(Self::Payable),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbiParam {
    pub name: String,
    pub type_text: String,
    /// Present on event parameters only.
    pub indexed: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbiEntry {
    pub kind: AbiKind,
    /// None for constructor/fallback/receive.
    pub name: Option<String>,
    pub inputs: Vec<AbiParam>,
    pub outputs: Vec<AbiParam>,
    pub state_mutability: StateMutability,
}

/// A parameter type the structural parser could not normalize; the entry is
/// still emitted with the raw type text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AbiWarning {
    pub entry: String,
    pub raw_type: String,
}

/// Canonicalize a Solidity type for the ABI. Returns the normalized text
/// and whether normalization succeeded.
fn normalize_type(raw: &str, enums: &[String]) -> (String, bool) {
    let trimmed = raw.trim();
    // Split trailing array suffixes off the base type.
    let (base, suffix) = match trimmed.find('[') {
        Some(idx) => (&trimmed[..idx], &trimmed[idx..]),
        None => (trimmed, ""),
    };
    let base = base.trim();
    let (norm_base, ok) = normalize_base(base, enums);
    (format!("{norm_base}{suffix}"), ok)
}

fn normalize_base(base: &str, enums: &[String]) -> (String, bool) {
    match base {
        "uint" => return ("uint256".into(), true),
        "int" => return ("int256".into(), true),
        "byte" => return ("bytes1".into(), true),
        "address payable" => return ("address".into(), true),
        "address" | "bool" | "string" | "bytes" => return (base.into(), true),
        _ => {}
    }
    if let Some(n) = base
        .strip_prefix("uint")
        .or_else(|| base.strip_prefix("int"))
    {
        if let Ok(bits) = n.parse::<u32>() {
            if (8..=256).contains(&bits) && bits % 8 == 0 {
                return (base.into(), true);
            }
        }
    }
    if let Some(n) = base.strip_prefix("bytes") {
        if let Ok(len) = n.parse::<u32>() {
            if (1..=32).contains(&len) {
                return (base.into(), true);
            }
        }
    }
    // Enums are uint8 in the canonical ABI.
    let enum_name = base.rsplit('.').next().unwrap_or(base);
    if enums.iter().any(|e| e == enum_name) {
        return ("uint8".into(), true);
    }
    (base.into(), false)
}

fn convert_params(
    params: &[Param],
    with_indexed: bool,
    enums: &[String],
    entry_label: &str,
    warnings: &mut Vec<AbiWarning>,
) -> Vec<AbiParam> {
    params
        .iter()
        .map(|p| {
            let (type_text, ok) = normalize_type(&p.type_text, enums);
            if !ok {
                warnings.push(AbiWarning {
                    entry: entry_label.to_string(),
                    raw_type: p.type_text.clone(),
                });
            }
            AbiParam {
                name: p.name.clone(),
                type_text,
                indexed: with_indexed.then_some(p.indexed),
            }
        })
        .collect()
}

/// Generate ABI entries from a surface, in declaration order (functions and
/// events interleaved by source line). Internal/private functions never
/// appear.
pub fn export_abi(surface: &ContractSurface) -> (Vec<AbiEntry>, Vec<AbiWarning>) {
    let mut warnings = Vec::new();
    let enum_names: Vec<String> = surface.enums.iter().map(|e| e.name.clone()).collect();
    let mut ordered: Vec<(u32, AbiEntry)> = Vec::new();

    for f in &surface.functions {
        let entry = match f.name.as_str() {
            "constructor" => AbiEntry {
                kind: AbiKind::Constructor,
                name: None,
                inputs: convert_params(&f.params, false, &enum_names, "constructor", &mut warnings),
                outputs: Vec::new(),
                state_mutability: StateMutability::from_mutability(f.mutability),
            },
            "fallback" | "receive" => AbiEntry {
                kind: if f.name == "receive" {
                    AbiKind::Receive
                } else {
                    AbiKind::Fallback
                },
                name: None,
                inputs: Vec::new(),
                outputs: Vec::new(),
                state_mutability: StateMutability::from_mutability(f.mutability),
            },
            _ => {
                if !f.visibility.is_externally_callable() {
                    continue;
                }
                let outputs = f
                    .returns
                    .iter()
                    .map(|t| {
                        let (type_text, ok) = normalize_type(t, &enum_names);
                        if !ok {
                            warnings.push(AbiWarning {
                                entry: f.name.clone(),
                                raw_type: t.clone(),
                            });
                        }
                        AbiParam {
                            name: String::new(),
                            type_text,
                            indexed: None,
                        }
                    })
                    .collect();
                AbiEntry {
                    kind: AbiKind::Function,
                    name: Some(f.name.clone()),
                    inputs: convert_params(&f.params, false, &enum_names, &f.name, &mut warnings),
                    outputs,
                    state_mutability: StateMutability::from_mutability(f.mutability),
                }
            }
        };
        ordered.push((f.line, entry));
    }

    for e in &surface.events {
        ordered.push((
            e.line,
            AbiEntry {
                kind: AbiKind::Event,
                name: Some(e.name.clone()),
                inputs: convert_params(&e.params, true, &enum_names, &e.name, &mut warnings),
                outputs: Vec::new(),
                state_mutability: StateMutability::Nonpayable,
            },
        ));
    }

    ordered.sort_by_key(|(line, _)| *line);
    (ordered.into_iter().map(|(_, e)| e).collect(), warnings)
}

// --- JSON wire form -------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct RawParam {
    name: String,
    #[serde(rename = "type")]
    type_text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    indexed: Option<bool>,
}

#[derive(Serialize, Deserialize)]
struct RawEntry {
    #[serde(rename = "type")]
    kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inputs: Option<Vec<RawParam>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    outputs: Option<Vec<RawParam>>,
    #[serde(rename = "stateMutability", skip_serializing_if = "Option::is_none")]
    state_mutability: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    anonymous: Option<bool>,
}

fn to_raw(e: &AbiEntry) -> RawEntry {
    let params = |ps: &[AbiParam], indexed: bool| -> Vec<RawParam> {
        ps.iter()
            .map(|p| RawParam {
                name: p.name.clone(),
                type_text: p.type_text.clone(),
                indexed: if indexed {
                    Some(p.indexed.unwrap_or(false))
                } else {
                    None
                },
            })
            .collect()
    };
    match e.kind {
        AbiKind::Function => RawEntry {
            kind: "function".into(),
            name: e.name.clone(),
            inputs: Some(params(&e.inputs, false)),
            outputs: Some(params(&e.outputs, false)),
            state_mutability: Some(e.state_mutability.as_str().into()),
            anonymous: None,
        },
        AbiKind::Constructor => RawEntry {
            kind: "constructor".into(),
            name: None,
            inputs: Some(params(&e.inputs, false)),
            outputs: None,
            state_mutability: Some(e.state_mutability.as_str().into()),
            anonymous: None,
        },
        AbiKind::Event => RawEntry {
            kind: "event".into(),
            name: e.name.clone(),
            inputs: Some(params(&e.inputs, true)),
            outputs: None,
            state_mutability: None,
            anonymous: Some(false),
        },
        AbiKind::Fallback | AbiKind::Receive => RawEntry {
            kind: if e.kind == AbiKind::Receive {
                "receive".into()
            } else {
                "fallback".into()
            },
            name: None,
            inputs: None,
            outputs: None,
            state_mutability: Some(e.state_mutability.as_str().into()),
            anonymous: None,
        },
    }
}

fn from_raw(raw: RawEntry) -> Option<AbiEntry> {
    let kind = match raw.kind.as_str() {
        "function" => AbiKind::Function,
        "constructor" => AbiKind::Constructor,
        "event" => AbiKind::Event,
        "fallback" => AbiKind::Fallback,
        "receive" => AbiKind::Receive,
        _ => return None,
    };
    let with_indexed = kind == AbiKind::Event;
    let conv = |ps: Option<Vec<RawParam>>| -> Vec<AbiParam> {
        ps.unwrap_or_default()
            .into_iter()
            .map(|p| AbiParam {
                name: p.name,
                type_text: p.type_text,
                indexed: if with_indexed {
                    Some(p.indexed.unwrap_or(false))
                } else {
                    None
                },
            })
            .collect()
    };
    Some(AbiEntry {
        kind,
        name: raw.name,
        inputs: conv(raw.inputs),
        outputs: if kind == AbiKind::Function {
            conv(raw.outputs)
        } else {
            Vec::new()
        },
        state_mutability: raw
            .state_mutability
            .as_deref()
            .and_then(StateMutability::parse)
            .unwrap_or_default(),
    })
}

/// Serialize to the standard ABI JSON array form. Byte-stable: identical
/// input always yields identical bytes.
pub fn abi_to_json(entries: &[AbiEntry]) -> Vec<u8> {
    let raw: Vec<RawEntry> = entries.iter().map(to_raw).collect();
    let mut bytes = serde_json::to_vec_pretty(&raw).expect("abi serialization is infallible");
    bytes.push(b'\n');
    bytes
}

/// Parse the standard ABI JSON array form back into entries.
pub fn abi_from_json(bytes: &[u8]) -> Result<Vec<AbiEntry>, serde_json::Error> {
    let raw: Vec<RawEntry> = serde_json::from_slice(bytes)?;
    Ok(raw.into_iter().filter_map(from_raw).collect())
}
