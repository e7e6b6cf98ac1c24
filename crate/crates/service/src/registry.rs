//! Pseudonymous registrations and bearer-token authentication.
//!
//! Only a SHA-256 digest of each token is kept, in memory and in the
//! optional JSONL registry file. The file is separate from the interaction
//! log, which only ever sees the pseudonymous `student_id`.

use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::RwLock;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const MAX_ALIAS_CHARS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Student,
    Instructor,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Registration {
    pub student_id: String,
    pub display_alias: String,
    pub registered_at: DateTime<Utc>,
    pub role: Role,
}

/// The authenticated caller.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Principal {
    Student(Registration),
    Instructor,
}

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("alias is empty")]
    EmptyAlias,
    #[error("alias is longer than {MAX_ALIAS_CHARS} characters")]
    AliasTooLong,
    #[error("registry file: {0}")]
    Io(#[from] std::io::Error),
    #[error("registry file line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Serialize, Deserialize)]
struct StoredRecord {
    token_sha256: String,
    #[serde(flatten)]
    registration: Registration,
}

fn digest(token: &str) -> String {
    hex::encode(Sha256::digest(token.as_bytes()))
}

fn random_hex() -> String {
    uuid::Uuid::new_v4().simple().to_string()
}

#[derive(Default)]
struct Tables {
    by_token: HashMap<String, Registration>,
    student_ids: HashSet<String>,
}

pub struct Registry {
    tables: RwLock<Tables>,
    instructor_tokens: HashSet<String>,
    file: Option<std::sync::Mutex<File>>,
}

impl Registry {
    pub fn in_memory(instructor_tokens: impl IntoIterator<Item = String>) -> Self {
        Self {
            tables: RwLock::default(),
            instructor_tokens: instructor_tokens.into_iter().map(|t| digest(&t)).collect(),
            file: None,
        }
    }

    /// Opens (creating if needed) a registry file and loads its records.
    pub fn open(path: &Path, instructor_tokens: impl IntoIterator<Item = String>) -> Result<Self, RegistryError> {
        let file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut tables = Tables::default();
        for (i, line) in BufReader::new(&file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: StoredRecord = serde_json::from_str(&line).map_err(|e| RegistryError::Corrupt {
                line: i + 1,
                message: e.to_string(),
            })?;
            tables.student_ids.insert(record.registration.student_id.clone());
            tables.by_token.insert(record.token_sha256, record.registration);
        }
        let mut registry = Self::in_memory(instructor_tokens);
        registry.tables = RwLock::new(tables);
        registry.file = Some(std::sync::Mutex::new(file));
        Ok(registry)
    }

    /// Registers a student and returns the registration with its bearer
    /// token. The token is shown only here. Duplicate aliases are allowed.
    pub fn register(&self, alias: &str, now: DateTime<Utc>) -> Result<(Registration, String), RegistryError> {
        let alias = alias.trim();
        if alias.is_empty() {
            return Err(RegistryError::EmptyAlias);
        }
        if alias.chars().count() > MAX_ALIAS_CHARS {
            return Err(RegistryError::AliasTooLong);
        }
        let mut tables = self.tables.write().expect("registry lock poisoned");
        let (token, token_sha256) = loop {
            let token = format!("{}{}", random_hex(), random_hex());
            let d = digest(&token);
            if !tables.by_token.contains_key(&d) && !self.instructor_tokens.contains(&d) {
                break (token, d);
            }
        };
        let student_id = loop {
            let id = format!("stu-{}", &random_hex()[..12]);
            if !tables.student_ids.contains(&id) {
                break id;
            }
        };
        let registration = Registration {
            student_id,
            display_alias: alias.to_string(),
            registered_at: now,
            role: Role::Student,
        };
        if let Some(file) = &self.file {
            let record = StoredRecord {
                token_sha256: token_sha256.clone(),
                registration: registration.clone(),
            };
            let mut line = serde_json::to_string(&record).expect("registration serializes");
            line.push('\n');
            let mut file = file.lock().expect("registry file lock poisoned");
            file.write_all(line.as_bytes())?;
            file.sync_data()?;
        }
        tables.student_ids.insert(registration.student_id.clone());
        tables.by_token.insert(token_sha256, registration.clone());
        Ok((registration, token))
    }

    pub fn authenticate(&self, token: &str) -> Option<Principal> {
        let d = digest(token);
        if self.instructor_tokens.contains(&d) {
            return Some(Principal::Instructor);
        }
        self.tables
            .read()
            .expect("registry lock poisoned")
            .by_token
            .get(&d)
            .cloned()
            .map(Principal::Student)
    }

    pub fn len(&self) -> usize {
        self.tables.read().expect("registry lock poisoned").by_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
