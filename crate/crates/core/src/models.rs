//! Trained model bundle and its file format.
//!
//! A model file is a single header line followed by a JSON payload:
//!
//! ```text
//! VHFPLAN-MODEL v1 sha256=<64 lowercase hex digits of the payload bytes>
//! {"meta": {...}, "scaler": {...}, "svc": {...}, "svr": {...}}
//! ```
//!
//! `scaler` holds `means` and `std_devs`; `svc` and `svr` hold
//! `support_vectors` (scaled rows), `coefficients`, `bias`, `kernel.gamma`
//! and `c`, plus `epsilon` for `svr`. Feature order is `meta.feature_order`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use vhfplan_svm::{Class, Scaler, SvcModel, SvrModel};

use crate::error::{Error, Result};
use crate::features::{feature_names, FeatureVector, FEATURE_COUNT};
use crate::geodata::TerrainClass;

pub const MODEL_MAGIC: &str = "VHFPLAN-MODEL";
pub const MODEL_VERSION: &str = "v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelMeta {
    pub terrain_class: TerrainClass,
    pub feature_order: Vec<String>,
    /// `town/district` tags of every area that contributed training data.
    pub training_areas: Vec<String>,
    /// Transmit power of the training measurements, dBm.
    pub reference_tx_power: f64,
    pub seed: u64,
}

impl ModelMeta {
    pub fn new(terrain_class: TerrainClass, training_areas: Vec<String>, reference_tx_power: f64, seed: u64) -> Self {
        let mut training_areas = training_areas;
        training_areas.sort();
        training_areas.dedup();
        Self {
            terrain_class,
            feature_order: feature_names(terrain_class).iter().map(|s| s.to_string()).collect(),
            training_areas,
            reference_tx_power,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModels {
    pub meta: ModelMeta,
    pub scaler: Scaler,
    pub svc: SvcModel,
    pub svr: SvrModel,
}

impl TrainedModels {
    pub fn check_terrain(&self, map_class: TerrainClass) -> Result<()> {
        if self.meta.terrain_class == map_class {
            Ok(())
        } else {
            Err(Error::TerrainClassMismatch {
                model: self.meta.terrain_class,
                map: map_class,
            })
        }
    }

    pub fn scale(&self, fv: &FeatureVector) -> Result<Vec<f64>> {
        self.check_terrain(fv.terrain_class)?;
        Ok(self.scaler.transform(&fv.values))
    }

    pub fn classify(&self, fv: &FeatureVector) -> Result<Class> {
        Ok(self.svc.decide(&self.scale(fv)?))
    }

    /// Predicted level at the reference transmit power, dBm.
    pub fn predict_rss(&self, fv: &FeatureVector) -> Result<f64> {
        Ok(self.svr.predict(&self.scale(fv)?))
    }

    pub fn validate(&self) -> Result<()> {
        let expected: Vec<&str> = feature_names(self.meta.terrain_class).to_vec();
        if self.meta.feature_order != expected {
            return Err(Error::Schema {
                message: format!(
                    "feature_order {:?} does not match the {} order {:?}",
                    self.meta.feature_order,
                    self.meta.terrain_class.as_str(),
                    expected
                ),
                ids: Vec::new(),
            });
        }
        if self.scaler.dim() != FEATURE_COUNT {
            return Err(Error::Schema {
                message: format!("scaler has {} features, expected {FEATURE_COUNT}", self.scaler.dim()),
                ids: Vec::new(),
            });
        }
        self.svc.validate()?;
        self.svr.validate()?;
        for sv in self.svc.support_vectors().iter().chain(self.svr.support_vectors()) {
            if sv.len() != FEATURE_COUNT {
                return Err(Error::Schema {
                    message: format!("support vector of length {}, expected {FEATURE_COUNT}", sv.len()),
                    ids: Vec::new(),
                });
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let payload = serde_json::to_vec(self).expect("models serialize");
        let digest = hex::encode(Sha256::digest(&payload));
        let mut out = format!("{MODEL_MAGIC} {MODEL_VERSION} sha256={digest}\n").into_bytes();
        out.extend_from_slice(&payload);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let newline = bytes.iter().position(|&b| b == b'\n').ok_or(Error::Checksum)?;
        let header = std::str::from_utf8(&bytes[..newline]).map_err(|_| not_a_model())?;
        let mut parts = header.split(' ');
        if parts.next() != Some(MODEL_MAGIC) {
            return Err(not_a_model());
        }
        let version = parts.next().unwrap_or_default();
        if version != MODEL_VERSION {
            return Err(Error::VersionMismatch {
                found: version.to_string(),
                expected: MODEL_VERSION.to_string(),
            });
        }
        let digest = parts
            .next()
            .and_then(|p| p.strip_prefix("sha256="))
            .ok_or(Error::Checksum)?;
        let payload = &bytes[newline + 1..];
        if hex::encode(Sha256::digest(payload)) != digest {
            return Err(Error::Checksum);
        }
        let models: TrainedModels = serde_json::from_slice(payload).map_err(|e| Error::Parse {
            path: "<model>".into(),
            message: e.to_string(),
        })?;
        models.validate()?;
        Ok(models)
    }

    /// Lowercase hex SHA-256 of the payload, as recorded in the header.
    pub fn checksum(&self) -> String {
        hex::encode(Sha256::digest(serde_json::to_vec(self).expect("models serialize")))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }
}

fn not_a_model() -> Error {
    Error::Parse {
        path: "<model>".into(),
        message: format!("missing {MODEL_MAGIC} header"),
    }
}
