//! Versioned JSON envelope for trained models:
//! `{"kind": "...", "version": 1, ...fields}`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    kind: String,
    version: u32,
    #[serde(flatten)]
    body: T,
}

pub fn to_model_json<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let env = Envelope {
        kind: kind.to_string(),
        version: MODEL_VERSION,
        body,
    };
    Ok(serde_json::to_string_pretty(&env)?)
}

pub fn from_model_json<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T> {
    let env: Envelope<T> = serde_json::from_str(text)?;
    if env.kind != kind {
        return Err(Error::invalid(format!("expected a '{kind}' model, found '{}'", env.kind)));
    }
    if env.version != MODEL_VERSION {
        return Err(Error::invalid(format!("unsupported model version {}", env.version)));
    }
    Ok(env.body)
}
