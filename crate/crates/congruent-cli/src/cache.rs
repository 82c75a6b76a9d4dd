//! One-file-per-area certificate cache with atomic writes via temp-file
//! rename.

use congruent_core::certificate::Certificate;
use std::path::{Path, PathBuf};

/// Cache root from the flag, else the CONGRUENT_CACHE environment variable.
pub fn resolve(flag: Option<&str>) -> Option<PathBuf> {
    flag.map(PathBuf::from)
        .or_else(|| std::env::var_os("CONGRUENT_CACHE").map(PathBuf::from))
}

fn path_for(root: &Path, m: u64) -> PathBuf {
    root.join(format!("{m}.json"))
}

pub fn load(root: &Path, m: u64) -> Option<Certificate> {
    let text = std::fs::read_to_string(path_for(root, m)).ok()?;
    Certificate::from_json(&text)
}

/// Atomic write: serialize to a temp file in the same directory, then
/// rename over the target.
pub fn store(root: &Path, cert: &Certificate) -> std::io::Result<()> {
    std::fs::create_dir_all(root)?;
    let target = path_for(root, cert.input.m);
    let tmp = root.join(format!(
        ".{}.json.tmp.{}",
        cert.input.m,
        std::process::id()
    ));
    std::fs::write(&tmp, cert.to_json())?;
    std::fs::rename(&tmp, &target)
}
