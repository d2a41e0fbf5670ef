//! Join-code login and bearer tokens.
//!
//! Emails never leave this module: a student is known by a salted hash of
//! course id and normalized email.

use std::collections::HashMap;
use std::sync::Mutex;

use chrono::{DateTime, TimeDelta, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Student,
    Instructor,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Claims {
    pub course_id: String,
    pub student_id: String,
    pub role: Role,
    pub expires_at: DateTime<Utc>,
}

/// Stable opaque id for `email` within `course_id`.
pub fn pseudonym(course_id: &str, email: &str) -> String {
    let mut h = Sha256::new();
    h.update(course_id.as_bytes());
    h.update([0]);
    h.update(email.trim().to_lowercase().as_bytes());
    let digest = h.finalize();
    let hex: String = digest[..8].iter().map(|b| format!("{b:02x}")).collect();
    format!("s-{hex}")
}

pub struct TokenStore {
    ttl: TimeDelta,
    tokens: Mutex<HashMap<String, Claims>>,
}

impl TokenStore {
    pub fn new(ttl: TimeDelta) -> Self {
        Self {
            ttl,
            tokens: Mutex::new(HashMap::new()),
        }
    }

    pub fn issue(&self, course_id: &str, student_id: String, role: Role, now: DateTime<Utc>) -> (String, Claims) {
        let token = format!("{:032x}", rand::random::<u128>());
        let claims = Claims {
            course_id: course_id.to_string(),
            student_id,
            role,
            expires_at: now + self.ttl,
        };
        let mut map = self.tokens.lock().expect("token lock");
        map.retain(|_, c| c.expires_at > now);
        map.insert(token.clone(), claims.clone());
        (token, claims)
    }

    /// Claims for a live token scoped to `course_id`.
    pub fn check(&self, token: &str, course_id: &str, now: DateTime<Utc>) -> Option<Claims> {
        let map = self.tokens.lock().expect("token lock");
        map.get(token)
            .filter(|c| c.course_id == course_id && c.expires_at > now)
            .cloned()
    }
}
