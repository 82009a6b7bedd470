use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::state::EnsembleState;
use crate::error::{Error, Result};
use crate::torus::{Convention, FieldSnapshot, FrequencyLattice, TorusGeometry};

/// JSON description of an ensemble whose members live in sibling snapshot files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleManifest {
    #[serde(rename = "J")]
    pub j: usize,
    pub lambda: Vec<f64>,
    pub theta: TorusGeometry,
    pub convention: Convention,
    #[serde(rename = "N")]
    pub n: usize,
    pub members: Vec<String>,
}

/// Writes `<stem>.json` and `<stem>_<j>.nlss` into `dir`; returns the manifest path.
pub fn save_ensemble(state: &EnsembleState, dir: &Path, stem: &str) -> Result<PathBuf> {
    let members: Vec<String> = (0..state.len()).map(|j| format!("{stem}_{j:04}.nlss")).collect();
    for (field, name) in state.fields().iter().zip(&members) {
        FieldSnapshot {
            field: field.clone(),
            geometry: *state.geometry(),
            convention: state.convention(),
        }
        .write(&dir.join(name))?;
    }
    let manifest = EnsembleManifest {
        j: state.len(),
        lambda: state.occupations().to_vec(),
        theta: *state.geometry(),
        convention: state.convention(),
        n: state.lattice().n(),
        members,
    };
    let path = dir.join(format!("{stem}.json"));
    crate::io::write_json(&path, &manifest)?;
    Ok(path)
}

pub fn load_ensemble(manifest_path: &Path) -> Result<EnsembleState> {
    let text = std::fs::read_to_string(manifest_path)?;
    let m: EnsembleManifest = serde_json::from_str(&text)?;
    let bad = |reason: String| Error::Snapshot {
        path: manifest_path.to_path_buf(),
        reason,
    };
    if m.lambda.len() != m.j || m.members.len() != m.j {
        return Err(bad(format!(
            "J={} but {} occupations and {} members",
            m.j,
            m.lambda.len(),
            m.members.len()
        )));
    }
    let lattice = FrequencyLattice::new(m.n)?;
    let dir = manifest_path.parent().unwrap_or(Path::new("."));
    let mut fields = Vec::with_capacity(m.j);
    for name in &m.members {
        let snap = FieldSnapshot::read(&dir.join(name))?;
        if snap.field.lattice() != lattice || snap.geometry != m.theta || snap.convention != m.convention {
            return Err(bad(format!("member {name} does not match the manifest header")));
        }
        fields.push(snap.field);
    }
    EnsembleState::new(lattice, fields, m.lambda, m.theta, m.convention)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::random_ensemble;

    #[test]
    fn save_load_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let s = random_ensemble(
            FrequencyLattice::new(2).unwrap(),
            &[0.5, 0.25, 0.125],
            2,
            TorusGeometry::irrational(),
            Convention::Paper,
            3,
        )
        .unwrap();
        let path = save_ensemble(&s, dir.path(), "state").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"J\": 3") && text.contains("\"N\": 2"));
        assert_eq!(load_ensemble(&path).unwrap(), s);
    }

    #[test]
    fn mismatched_member_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let lat = FrequencyLattice::new(1).unwrap();
        let s = EnsembleState::plane_waves(
            lat,
            &[[0, 0, 0]],
            vec![1.0],
            TorusGeometry::square(),
            Convention::Standard,
        )
        .unwrap();
        let path = save_ensemble(&s, dir.path(), "a").unwrap();
        let t = EnsembleState::plane_waves(
            lat,
            &[[0, 0, 0]],
            vec![1.0],
            TorusGeometry::irrational(),
            Convention::Standard,
        )
        .unwrap();
        save_ensemble(&t, dir.path(), "b").unwrap();
        let text = std::fs::read_to_string(&path).unwrap().replace("a_0000", "b_0000");
        std::fs::write(&path, text).unwrap();
        assert!(load_ensemble(&path).is_err());
    }
}
