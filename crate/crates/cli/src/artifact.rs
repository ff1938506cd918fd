use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use skinlab::content_id;
use skinlab::cover::BallCover;
use skinlab::skinfield::SkinField;
use skinlab::surface::DiscreteHypersurface;

/// One checked property, tagged with the acceptance criterion it bears on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Check {
    pub fn new(criterion: u8, name: &str, pass: bool, detail: impl Serialize) -> Self {
        let detail = serde_json::to_value(detail).expect("check detail serializes");
        Check { criterion, name: name.into(), pass, detail }
    }
}

/// Envelope written by every subcommand. Field order is fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Artifact {
    pub kind: String,
    /// Input name to content id of the input file (or of the generation parameters).
    pub inputs: BTreeMap<String, String>,
    pub pass: bool,
    pub criteria: Vec<u8>,
    pub checks: Vec<Check>,
    pub result: Value,
}

impl Artifact {
    pub fn new(kind: &str, inputs: BTreeMap<String, String>, checks: Vec<Check>, result: Value) -> Self {
        let mut criteria: Vec<u8> = checks.iter().map(|c| c.criterion).collect();
        criteria.sort_unstable();
        criteria.dedup();
        Artifact { kind: kind.into(), inputs, pass: checks.iter().all(|c| c.pass), criteria, checks, result }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("artifact serializes");
        s.push('\n');
        s
    }

    fn payload(&self) -> String {
        serde_json::to_string(&self.result).expect("payload serializes")
    }
}

/// Parses a core type's own JSON into a value for embedding.
pub fn embed(json: &str) -> Value {
    serde_json::from_str(json).expect("core JSON parses")
}

/// Reads an artifact and its content id.
pub fn read(path: &Path) -> Result<(Artifact, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let artifact: Artifact = serde_json::from_slice(&bytes)
        .with_context(|| format!("{} is not a skinlab artifact (schema mismatch)", path.display()))?;
    Ok((artifact, content_id(&bytes)))
}

fn expect_kind(path: &Path, artifact: &Artifact, kinds: &[&str]) -> Result<()> {
    if !kinds.contains(&artifact.kind.as_str()) {
        bail!("{} holds a '{}' artifact, expected {}", path.display(), artifact.kind, kinds.join(" or "));
    }
    Ok(())
}

/// Typed inputs carry the content id of the file they came from.
pub struct Loaded<T> {
    pub value: T,
    pub id: String,
}

pub fn load_mesh(path: &Path) -> Result<Loaded<DiscreteHypersurface>> {
    let (a, id) = read(path)?;
    expect_kind(path, &a, &["mesh"])?;
    let value = DiscreteHypersurface::from_json(&a.payload()).with_context(|| format!("mesh in {}", path.display()))?;
    Ok(Loaded { value, id })
}

pub fn load_skin(path: &Path, mesh: &DiscreteHypersurface) -> Result<Loaded<SkinField>> {
    let (a, id) = read(path)?;
    expect_kind(path, &a, &["skin", "smooth"])?;
    let value = SkinField::from_json(&a.payload()).with_context(|| format!("skin field in {}", path.display()))?;
    if value.surface_id != mesh.id() {
        bail!("{} was computed on a different mesh", path.display());
    }
    Ok(Loaded { value, id })
}

pub fn load_cover(path: &Path, mesh: &DiscreteHypersurface) -> Result<Loaded<BallCover>> {
    let (a, id) = read(path)?;
    expect_kind(path, &a, &["cover", "qt"])?;
    let value = BallCover::from_json(&a.payload()).with_context(|| format!("cover in {}", path.display()))?;
    if value.surface_id != mesh.id() {
        bail!("{} was built on a different mesh", path.display());
    }
    Ok(Loaded { value, id })
}

/// Writes through a temporary file in the target directory, then renames over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).with_context(|| format!("temporary file in {}", dir.display()))?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn criteria_and_pass_follow_the_checks() {
        let a = Artifact::new(
            "x",
            BTreeMap::new(),
            vec![Check::new(7, "a", true, 1), Check::new(3, "b", false, "no"), Check::new(7, "c", true, ())],
            Value::Null,
        );
        assert_eq!(a.criteria, vec![3, 7]);
        assert!(!a.pass);
        let back: Artifact = serde_json::from_str(&a.to_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn atomic_write_replaces_contents() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub").join("f.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
