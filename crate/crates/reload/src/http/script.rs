//! Transaction scripts: the ordered HTTP requests a virtual user issues for
//! one transaction, including the functional prerequisites that transaction
//! depends on (a purchase script logs in and selects a product first).
//!
//! Scripts live in a TOML file:
//!
//! ```toml
//! [[transaction]]
//! name = "Login"
//!
//! [[transaction.step]]
//! method = "GET"
//! path = "/login"
//!
//! [[transaction.step]]
//! method = "POST"
//! path = "/login"
//! body = "user=u{user}&pass=secret"
//! expect_status = "2xx"
//! expect_substring = "welcome"
//!
//! [transaction.step.headers]
//! Content-Type = "application/x-www-form-urlencoded"
//! ```
//!
//! `{user}` and `{iteration}` in `path` and `body` are replaced with the
//! virtual user index and the script loop iteration.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::domain::TransactionCatalog;

#[derive(Debug, thiserror::Error)]
pub enum ScriptError {
    #[error("script file: {0}")]
    Io(#[from] std::io::Error),
    #[error("script parse: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("script for unknown transaction {name:?}")]
    UnknownTransaction { name: String },
    #[error("duplicate script for transaction {name:?}")]
    DuplicateScript { name: String },
    #[error("script for {name:?} has no steps")]
    EmptySteps { name: String },
    #[error("script for {name:?} uses unsupported method {method:?}")]
    BadMethod { name: String, method: String },
    #[error("script for {name:?} has a path not starting with '/': {path:?}")]
    BadPath { name: String, path: String },
    #[error("bad status expectation {text:?} (want e.g. \"2xx\" or \"404\")")]
    BadStatusExpectation { text: String },
}

/// Success predicate on a response status: a whole class ("2xx") or one exact
/// code ("404").
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum StatusExpectation {
    Class(u8),
    Exact(u16),
}

impl Default for StatusExpectation {
    fn default() -> Self {
        StatusExpectation::Class(2)
    }
}

impl StatusExpectation {
    pub fn matches(self, status: u16) -> bool {
        match self {
            StatusExpectation::Class(c) => status / 100 == u16::from(c),
            StatusExpectation::Exact(code) => status == code,
        }
    }
}

impl TryFrom<String> for StatusExpectation {
    type Error = ScriptError;

    fn try_from(text: String) -> Result<Self, ScriptError> {
        let bytes = text.as_bytes();
        if bytes.len() == 3 && bytes[1..] == *b"xx" && (b'1'..=b'5').contains(&bytes[0]) {
            return Ok(StatusExpectation::Class(bytes[0] - b'0'));
        }
        if let Ok(code) = text.parse::<u16>() {
            if (100..=599).contains(&code) {
                return Ok(StatusExpectation::Exact(code));
            }
        }
        Err(ScriptError::BadStatusExpectation { text })
    }
}

impl From<StatusExpectation> for String {
    fn from(e: StatusExpectation) -> String {
        match e {
            StatusExpectation::Class(c) => format!("{c}xx"),
            StatusExpectation::Exact(code) => code.to_string(),
        }
    }
}

const METHODS: &[&str] = &["GET", "POST", "PUT", "DELETE", "HEAD", "PATCH"];

/// One HTTP request within a script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpStep {
    pub method: String,
    /// Path template; `{user}` and `{iteration}` are substituted.
    pub path: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub headers: BTreeMap<String, String>,
    /// Body template; same substitutions as the path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub body: Option<String>,
    #[serde(default)]
    pub expect_status: StatusExpectation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect_substring: Option<String>,
}

impl HttpStep {
    /// Fills `{user}` and `{iteration}` into a template.
    pub fn substitute(template: &str, user: usize, iteration: u64) -> String {
        template
            .replace("{user}", &user.to_string())
            .replace("{iteration}", &iteration.to_string())
    }

    /// True iff the response satisfies this step's success predicate.
    pub fn succeeded(&self, status: u16, body: &str) -> bool {
        self.expect_status.matches(status)
            && self.expect_substring.as_deref().map_or(true, |s| body.contains(s))
    }
}

/// The script for one transaction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransactionScript {
    pub name: String,
    #[serde(default, rename = "step")]
    pub steps: Vec<HttpStep>,
}

#[derive(Debug, Deserialize)]
struct ScriptFile {
    #[serde(default, rename = "transaction")]
    transactions: Vec<TransactionScript>,
}

/// Scripts bound to a catalog: one optional script per transaction index.
#[derive(Debug, Clone)]
pub struct ScriptSet {
    catalog: TransactionCatalog,
    by_index: Vec<Option<TransactionScript>>,
}

impl ScriptSet {
    /// Parses and validates scripts against the catalog: every script names a
    /// known transaction exactly once, has steps, and uses supported methods.
    pub fn from_toml_str(text: &str, catalog: &TransactionCatalog) -> Result<Self, ScriptError> {
        let file: ScriptFile = toml::from_str(text)?;
        let mut by_index: Vec<Option<TransactionScript>> = vec![None; catalog.len()];
        for script in file.transactions {
            let index = catalog
                .index_of(&script.name)
                .ok_or_else(|| ScriptError::UnknownTransaction { name: script.name.clone() })?;
            if by_index[index].is_some() {
                return Err(ScriptError::DuplicateScript { name: script.name });
            }
            if script.steps.is_empty() {
                return Err(ScriptError::EmptySteps { name: script.name });
            }
            for step in &script.steps {
                if !METHODS.contains(&step.method.as_str()) {
                    return Err(ScriptError::BadMethod {
                        name: script.name.clone(),
                        method: step.method.clone(),
                    });
                }
                if !step.path.starts_with('/') {
                    return Err(ScriptError::BadPath {
                        name: script.name.clone(),
                        path: step.path.clone(),
                    });
                }
            }
            by_index[index] = Some(script);
        }
        Ok(Self { catalog: catalog.clone(), by_index })
    }

    pub fn load(path: &Path, catalog: &TransactionCatalog) -> Result<Self, ScriptError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text, catalog)
    }

    pub fn catalog(&self) -> &TransactionCatalog {
        &self.catalog
    }

    pub fn get(&self, index: usize) -> Option<&TransactionScript> {
        self.by_index.get(index).and_then(|s| s.as_ref())
    }

    /// Indices that have a script, in catalog order.
    pub fn scripted_indices(&self) -> Vec<usize> {
        (0..self.by_index.len()).filter(|&i| self.by_index[i].is_some()).collect()
    }

    /// A minimal one-GET-per-transaction script set, useful for demos against
    /// a stub: transaction j requests `/tx/<j>`.
    pub fn one_get_per_transaction(catalog: &TransactionCatalog) -> Self {
        let by_index = (0..catalog.len())
            .map(|j| {
                Some(TransactionScript {
                    name: catalog.name(j).to_string(),
                    steps: vec![HttpStep {
                        method: "GET".into(),
                        path: format!("/tx/{j}"),
                        headers: BTreeMap::new(),
                        body: None,
                        expect_status: StatusExpectation::default(),
                        expect_substring: None,
                    }],
                })
            })
            .collect();
        Self { catalog: catalog.clone(), by_index }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
[[transaction]]
name = "Home"

[[transaction.step]]
method = "GET"
path = "/"

[[transaction]]
name = "Login"

[[transaction.step]]
method = "GET"
path = "/login"

[[transaction.step]]
method = "POST"
path = "/login"
body = "user=u{user}&pass=secret"
expect_status = "2xx"
expect_substring = "welcome"

[transaction.step.headers]
Content-Type = "application/x-www-form-urlencoded"
"#;

    fn catalog() -> TransactionCatalog {
        TransactionCatalog::new(vec!["Home".to_string(), "Login".to_string(), "Search".to_string()]).unwrap()
    }

    #[test]
    fn sample_parses_and_binds() {
        let set = ScriptSet::from_toml_str(SAMPLE, &catalog()).unwrap();
        assert_eq!(set.scripted_indices(), vec![0, 1]);
        let login = set.get(1).unwrap();
        assert_eq!(login.steps.len(), 2);
        assert_eq!(login.steps[1].method, "POST");
        assert_eq!(
            login.steps[1].headers.get("Content-Type").unwrap(),
            "application/x-www-form-urlencoded"
        );
        assert_eq!(login.steps[1].expect_substring.as_deref(), Some("welcome"));
        assert!(set.get(2).is_none());
    }

    #[test]
    fn unknown_transaction_is_rejected() {
        let text = "[[transaction]]\nname = \"Nope\"\n[[transaction.step]]\nmethod = \"GET\"\npath = \"/\"\n";
        assert!(matches!(
            ScriptSet::from_toml_str(text, &catalog()),
            Err(ScriptError::UnknownTransaction { name }) if name == "Nope"
        ));
    }

    #[test]
    fn duplicate_script_is_rejected() {
        let text = "[[transaction]]\nname = \"Home\"\n[[transaction.step]]\nmethod = \"GET\"\npath = \"/\"\n[[transaction]]\nname = \"Home\"\n[[transaction.step]]\nmethod = \"GET\"\npath = \"/\"\n";
        assert!(matches!(
            ScriptSet::from_toml_str(text, &catalog()),
            Err(ScriptError::DuplicateScript { .. })
        ));
    }

    #[test]
    fn empty_steps_rejected() {
        let text = "[[transaction]]\nname = \"Home\"\n";
        assert!(matches!(
            ScriptSet::from_toml_str(text, &catalog()),
            Err(ScriptError::EmptySteps { .. })
        ));
    }

    #[test]
    fn bad_method_rejected() {
        let text =
            "[[transaction]]\nname = \"Home\"\n[[transaction.step]]\nmethod = \"YEET\"\npath = \"/\"\n";
        assert!(matches!(
            ScriptSet::from_toml_str(text, &catalog()),
            Err(ScriptError::BadMethod { method, .. }) if method == "YEET"
        ));
    }

    #[test]
    fn status_expectations_parse() {
        assert_eq!(StatusExpectation::try_from("2xx".to_string()).unwrap(), StatusExpectation::Class(2));
        assert_eq!(
            StatusExpectation::try_from("404".to_string()).unwrap(),
            StatusExpectation::Exact(404)
        );
        assert!(StatusExpectation::try_from("6xx".to_string()).is_err());
        assert!(StatusExpectation::try_from("99".to_string()).is_err());
        assert!(StatusExpectation::Class(2).matches(204));
        assert!(!StatusExpectation::Class(2).matches(301));
        assert!(StatusExpectation::Exact(404).matches(404));
    }

    #[test]
    fn substitution_fills_placeholders() {
        assert_eq!(HttpStep::substitute("/u/{user}/i/{iteration}", 7, 42), "/u/7/i/42");
        assert_eq!(HttpStep::substitute("/plain", 7, 42), "/plain");
    }

    #[test]
    fn predicate_requires_both_status_and_substring() {
        let step = HttpStep {
            method: "GET".into(),
            path: "/".into(),
            headers: BTreeMap::new(),
            body: None,
            expect_status: StatusExpectation::Class(2),
            expect_substring: Some("ok".into()),
        };
        assert!(step.succeeded(200, "all ok"));
        assert!(!step.succeeded(200, "nope"));
        assert!(!step.succeeded(500, "all ok"));
    }
}
