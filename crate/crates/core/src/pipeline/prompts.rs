//! Agent definitions: role, goal, and system prompt per pipeline phase.
//! The prompt texts ship as versioned assets under `assets/prompts/`.

use serde::{Deserialize, Serialize};

/// Configuration of one agent in the pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub role: String,
    pub goal: String,
    pub system_prompt: String,
    pub model: String,
    pub temperature: f64,
    pub max_retries: u32,
}

pub const PARSER_SYSTEM_PROMPT: &str = include_str!("../../assets/prompts/parser_system.txt");
pub const GENERATOR_SYSTEM_PROMPT: &str = include_str!("../../assets/prompts/generator_system.txt");
pub const AUDITOR_SYSTEM_PROMPT: &str = include_str!("../../assets/prompts/auditor_system.txt");
pub const REFINER_SYSTEM_PROMPT: &str = include_str!("../../assets/prompts/refiner_system.txt");
pub const EVALUATOR_SYSTEM_PROMPT: &str = include_str!("../../assets/prompts/evaluator_system.txt");
pub const GENERATION_RULES: &str = include_str!("../../assets/prompts/generation_rules.txt");

fn agent(
    role: &str,
    goal: &str,
    system_prompt: &str,
    model: &str,
    temperature: f64,
    max_retries: u32,
) -> AgentConfig {
    AgentConfig {
        role: role.to_string(),
        goal: goal.to_string(),
        system_prompt: system_prompt.to_string(),
        model: model.to_string(),
        temperature,
        max_retries,
    }
}

pub fn parser_agent(model: &str, temperature: f64, max_retries: u32) -> AgentConfig {
    agent(
        "Contract Analysis Expert",
        "Extract precise information from legal contracts",
        PARSER_SYSTEM_PROMPT,
        model,
        temperature,
        max_retries,
    )
}

pub fn generator_agent(model: &str, temperature: f64, max_retries: u32) -> AgentConfig {
    agent(
        "Solidity Generation Expert",
        "Transform structured contract schemas into production-ready Solidity",
        GENERATOR_SYSTEM_PROMPT,
        model,
        temperature,
        max_retries,
    )
}

pub fn auditor_agent(model: &str, temperature: f64, max_retries: u32) -> AgentConfig {
    agent(
        "Blockchain Security Expert",
        "Audit smart contracts for vulnerabilities with actionable findings",
        AUDITOR_SYSTEM_PROMPT,
        model,
        temperature,
        max_retries,
    )
}

pub fn refiner_agent(model: &str, temperature: f64, max_retries: u32) -> AgentConfig {
    agent(
        "Solidity Security Specialist",
        "Remediate audited vulnerabilities while preserving functionality",
        REFINER_SYSTEM_PROMPT,
        model,
        temperature,
        max_retries,
    )
}

pub fn evaluator_agent(model: &str, temperature: f64, max_retries: u32) -> AgentConfig {
    agent(
        "Smart Contract Quality Analyst",
        "Score generated contracts against their specification",
        EVALUATOR_SYSTEM_PROMPT,
        model,
        temperature,
        max_retries,
    )
}

/// User prompt for the schema-extraction phase.
pub fn parser_user_prompt(requirement: &str) -> String {
    format!(
        "Extract a structured schema from the following contract specification.\n\
         Respond with a single JSON object using exactly these keys:\n\
         parties (list of {{name, role, address}}),\n\
         financial_terms (list of {{amount, currency, purpose, frequency, due_date}}),\n\
         dates (list of {{label, value}}),\n\
         assets (list of {{type, description, location, value}}),\n\
         obligations (list of {{party, responsibility, deadline, breach_penalty}}),\n\
         conditions (object with function_names, variable_names, state_names,\n\
         transitions (list of {{from_state, to_state, trigger, guard}}), events,\n\
         logic_conditions),\n\
         termination_conditions (list of strings).\n\
         Return ONLY the JSON object.\n\n\
         CONTRACT SPECIFICATION:\n{requirement}"
    )
}

/// User prompt for the Solidity-generation phase; embeds the generation
/// rules and the extracted schema.
pub fn generator_user_prompt(requirement: &str, schema_json: &str) -> String {
    format!(
        "{GENERATION_RULES}\n\
         Generate a complete Solidity smart contract implementing the schema below.\n\
         Target Solidity 0.8.x. Return ONLY Solidity code.\n\n\
         ORIGINAL SPECIFICATION:\n{requirement}\n\n\
         EXTRACTED SCHEMA (JSON):\n{schema_json}"
    )
}

/// User prompt for the audit phase.
pub fn auditor_user_prompt(code: &str) -> String {
    format!(
        "Audit the following Solidity contract across these eight categories: \
         reentrancy, access control, arithmetic safety, ether handling, \
         denial of service, input validation, timestamp dependence, external call safety.\n\
         Respond with a single JSON object:\n\
         {{\"severity_level\": \"none|low|medium|high|critical\", \"approved\": bool,\n\
          \"findings\": [{{\"category\": str, \"severity\": str, \"line\": int, \"remediation\": str}}],\n\
          \"summary\": str}}\n\
         Return ONLY the JSON object.\n\n\
         CONTRACT:\n```solidity\n{code}\n```"
    )
}

/// User prompt for the refinement phase.
pub fn refiner_user_prompt(code: &str, findings_json: &str) -> String {
    format!(
        "Fix every vulnerability listed in the audit findings below while keeping \
         the contract's functionality intact. Return ONLY the fixed Solidity code.\n\n\
         AUDIT FINDINGS (JSON):\n{findings_json}\n\n\
         CONTRACT:\n```solidity\n{code}\n```"
    )
}

/// User prompt for the optional model-judged scoring path.
pub fn evaluator_user_prompt(requirement: &str, schema_json: &str, code: &str) -> String {
    format!(
        "Score the contract against the specification on five dimensions, each 0-100:\n\
         m1_functional (function completeness), m2_variable (variable fidelity),\n\
         m3_state_machine (state machine correctness), m4_business_logic (business logic fidelity),\n\
         m5_code_quality (code quality).\n\
         Respond with a single JSON object of those five numeric fields.\n\n\
         SPECIFICATION:\n{requirement}\n\nSCHEMA:\n{schema_json}\n\n\
         CONTRACT:\n```solidity\n{code}\n```"
    )
}

/// Appended when a phase response could not be parsed and the phase retries.
pub fn corrective_suffix(problem: &str) -> String {
    format!(
        "\n\nYOUR PREVIOUS RESPONSE WAS REJECTED: {problem}. \
         Follow the output format exactly this time."
    )
}
