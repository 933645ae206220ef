//! Output directory with a hash manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::fail::Failure;

pub const MANIFEST: &str = "manifest.json";

/// Artifacts written during one command. The manifest is merged with any
/// manifest already in the directory, so later commands add to it.
pub struct RunDir {
    root: PathBuf,
    hashes: BTreeMap<String, String>,
}

impl RunDir {
    pub fn create(root: &Path) -> Result<Self, Failure> {
        std::fs::create_dir_all(root)
            .map_err(|e| Failure::data(format!("{}: {e}", root.display())))?;
        let mut hashes = BTreeMap::new();
        let m = root.join(MANIFEST);
        if m.is_file() {
            let text = std::fs::read_to_string(&m)
                .map_err(|e| Failure::data(format!("{}: {e}", m.display())))?;
            hashes = serde_json::from_str(&text)
                .map_err(|e| Failure::data(format!("{}: {e}", m.display())))?;
        }
        Ok(RunDir {
            root: root.to_path_buf(),
            hashes,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: impl AsRef<[u8]>) -> Result<(), Failure> {
        let bytes = bytes.as_ref();
        let p = self.path(name);
        std::fs::write(&p, bytes).map_err(|e| Failure::data(format!("{}: {e}", p.display())))?;
        self.hashes
            .insert(name.to_string(), hex::encode(Sha256::digest(bytes)));
        log::info!("wrote {}", p.display());
        Ok(())
    }

    pub fn finish(self) -> Result<(), Failure> {
        let text = serde_json::to_string_pretty(&self.hashes).expect("map serializes") + "\n";
        let p = self.path(MANIFEST);
        std::fs::write(&p, text).map_err(|e| Failure::data(format!("{}: {e}", p.display())))
    }
}
