//! Run manifests and output writing. Every file a run produces carries the manifest hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// An input file, identified by name and content hash so the manifest does not depend on
/// where the file lives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputRef {
    pub role: String,
    pub name: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: Vec<InputRef>,
    pub seeds: BTreeMap<String, u64>,
    pub config: serde_json::Value,
    pub config_hash: String,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &impl Serialize) -> Result<Self> {
        let config = serde_json::to_value(config)?;
        let config_hash = sha256_hex(serde_json::to_string(&config)?.as_bytes());
        Ok(Self {
            subcommand: subcommand.into(),
            inputs: vec![],
            seeds: BTreeMap::new(),
            config,
            config_hash,
            tool_version: env!("CARGO_PKG_VERSION").into(),
        })
    }

    pub fn seed(mut self, name: &str, v: u64) -> Self {
        self.seeds.insert(name.into(), v);
        self
    }

    /// Reads an input file and records it.
    pub fn input(&mut self, role: &str, path: &Path) -> Result<Vec<u8>> {
        let bytes = fs::read(path).with_context(|| format!("reading {role} file {}", path.display()))?;
        let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        self.inputs.push(InputRef { role: role.into(), name, sha256: sha256_hex(&bytes) });
        Ok(bytes)
    }

    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("manifest serializes").as_bytes())
    }

    /// `name#hash-prefix` of a recorded input, used as the model reference in outputs.
    pub fn reference(&self, role: &str) -> Option<String> {
        self.inputs.iter().find(|i| i.role == role).map(|i| format!("{}#{}", i.name, &i.sha256[..16]))
    }
}

/// Writes the outputs of one run into a directory; files are replaced, never appended to.
pub struct Output {
    dir: PathBuf,
    pub hash: String,
    written: Vec<PathBuf>,
}

impl Output {
    pub fn create(dir: &Path, manifest: &RunManifest) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        let hash = manifest.hash();
        let mut out = Self { dir: dir.to_path_buf(), hash: hash.clone(), written: vec![] };
        let mut v = serde_json::to_value(manifest)?;
        v.as_object_mut().expect("object").insert("hash".into(), hash.into());
        out.text("manifest.json", &(serde_json::to_string_pretty(&v)? + "\n"))?;
        Ok(out)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn text(&mut self, name: &str, s: &str) -> Result<()> {
        let p = self.path(name);
        fs::write(&p, s).with_context(|| format!("writing {}", p.display()))?;
        self.written.push(p);
        Ok(())
    }

    /// JSON object with a top-level `manifest` field.
    pub fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        match v.as_object_mut() {
            Some(o) => {
                o.insert("manifest".into(), self.hash.clone().into());
            }
            None => v = serde_json::json!({ "manifest": self.hash, "data": v }),
        }
        self.text(name, &(serde_json::to_string_pretty(&v)? + "\n"))
    }

    /// CSV with a leading `# manifest <hash>` comment line.
    pub fn csv<R: Serialize>(&mut self, name: &str, rows: impl IntoIterator<Item = R>) -> Result<()> {
        let mut buf = format!("{}{}\n", lgst_core::io::MANIFEST_PREFIX, self.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            for r in rows {
                w.serialize(r)?;
            }
            w.flush()?;
        }
        self.text(name, std::str::from_utf8(&buf)?)
    }

    pub fn record(&mut self, path: PathBuf) {
        self.written.push(path);
    }

    pub fn finish(self) {
        for p in &self.written {
            println!("wrote {}", p.display());
        }
    }
}
