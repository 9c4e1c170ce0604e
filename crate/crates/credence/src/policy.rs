//! Single-file persistence of fitted artifacts.
//!
//! A policy bundle carries everything a deployment needs: fitted
//! temperature(s), the rejection threshold, generalization settings, and
//! the prior pair, plus digests of the files each was fitted on.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calibration::TemperatureModel;
use crate::error::Result;
use crate::prior_shift::PriorVector;
use crate::rejection::RejectionPolicy;

/// Digest of an input file a policy component was fitted from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub role: String,
    pub source: String,
    pub sha256: String,
}

/// Hierarchy file and confidence threshold for generalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationPolicy {
    pub hierarchy: String,
    pub threshold: f64,
}

/// Training and deployment priors for posterior re-estimation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorsPolicy {
    pub train: PriorVector,
    pub new: PriorVector,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PolicyBundle {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<TemperatureModel>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<RejectionPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generalization: Option<GeneralizationPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub priors: Option<PriorsPolicy>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provenance: Vec<Provenance>,
}

impl PolicyBundle {
    pub fn load(path: &Path) -> Result<PolicyBundle> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }

    /// Records (or replaces) the digest entry for one fitting input.
    pub fn record_provenance(&mut self, role: &str, source: &Path) -> Result<()> {
        let digest = file_digest(source)?;
        self.provenance.retain(|p| p.role != role);
        self.provenance.push(Provenance {
            role: role.to_string(),
            source: source.display().to_string(),
            sha256: digest,
        });
        Ok(())
    }
}

/// Hex SHA-256 of a file's contents.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(format!("{:x}", hasher.finalize()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::Objective;
    use crate::rejection::Constraint;

    #[test]
    fn bundle_round_trip() {
        let mut bundle = PolicyBundle {
            temperature: Some(TemperatureModel::global(1.7, 3, Objective::Nll)),
            rejection: Some(RejectionPolicy {
                threshold: 0.75,
                achieved_coverage: 0.8,
                achieved_risk: 0.05,
                constraint: Constraint::RiskAtMost(0.05),
                feasible: true,
            }),
            generalization: Some(GeneralizationPolicy {
                hierarchy: "veh.json".into(),
                threshold: 0.9,
            }),
            priors: Some(PriorsPolicy {
                train: PriorVector::uniform(3).unwrap(),
                new: PriorVector::new(vec![0.5, 0.25, 0.25]).unwrap(),
            }),
            provenance: Vec::new(),
        };
        let file = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        bundle.record_provenance("calibration", file.path()).unwrap();

        bundle.save(file.path()).unwrap();
        let reloaded = PolicyBundle::load(file.path()).unwrap();
        assert_eq!(bundle, reloaded);
    }

    #[test]
    fn empty_bundle_round_trip() {
        let bundle = PolicyBundle::default();
        let file = tempfile::Builder::new().suffix(".json").tempfile().unwrap();
        bundle.save(file.path()).unwrap();
        assert_eq!(PolicyBundle::load(file.path()).unwrap(), bundle);
    }
}
