//! JSON configuration parsing with schema errors that name the offending keys.

use crate::error::{Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Parses `text` as `T`. Unknown keys and type errors are reported as
/// [`Error::Schema`] with dotted key paths.
pub fn parse_config<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut unknown = Vec::new();
    let mut de = serde_json::Deserializer::from_str(text);
    let mut record = |path: serde_ignored::Path<'_>| unknown.push(path.to_string());
    let parsed: std::result::Result<T, _> = serde_path_to_error::deserialize(serde_ignored::Deserializer::new(&mut de, &mut record));
    match parsed {
        Ok(value) => {
            de.end().map_err(|e| Error::Schema {
                keys: Vec::new(),
                message: e.to_string(),
            })?;
            if unknown.is_empty() {
                Ok(value)
            } else {
                Err(Error::Schema {
                    message: format!("unknown key{}", if unknown.len() == 1 { "" } else { "s" }),
                    keys: unknown,
                })
            }
        }
        Err(e) => {
            let path = e.path().to_string();
            let keys = if path == "." { Vec::new() } else { vec![path] };
            Err(Error::Schema {
                keys,
                message: e.into_inner().to_string(),
            })
        }
    }
}

/// Hex SHA-256 of the compact JSON serialization of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::TrainConfig;

    #[test]
    fn unknown_keys_are_listed() {
        let err = parse_config::<TrainConfig>(r#"{"epochs": 3, "learnign_rate": 0.1, "extra": {"a": 1}}"#).unwrap_err();
        match err {
            Error::Schema { keys, .. } => assert_eq!(keys, vec!["learnign_rate", "extra"]),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn type_errors_name_the_path() {
        let err = parse_config::<TrainConfig>(r#"{"epochs": "many"}"#).unwrap_err();
        match err {
            Error::Schema { keys, message } => {
                assert_eq!(keys, vec!["epochs"]);
                assert!(message.contains("invalid type"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn valid_config_parses_and_hashes_stably() {
        let c: TrainConfig = parse_config(r#"{"epochs": 7}"#).unwrap();
        assert_eq!(c.epochs, 7);
        assert_eq!(config_hash(&c).unwrap(), config_hash(&c.clone()).unwrap());
        assert_eq!(config_hash(&c).unwrap().len(), 64);
        assert!(parse_config::<TrainConfig>("{} trailing").is_err());
    }
}
