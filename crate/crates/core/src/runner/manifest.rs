//! Output manifest: one `path<TAB>sha-256<TAB>rows` line per artifact.

use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_FILE: &str = "manifest.tsv";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub rows: usize,
}

/// Data rows: lines after the header for CSV files, all lines otherwise.
fn count_rows(name: &str, bytes: &[u8]) -> usize {
    let lines = bytes
        .split(|&b| b == b'\n')
        .filter(|l| !l.is_empty())
        .count();
    if name.ends_with(".csv") {
        lines.saturating_sub(1)
    } else {
        lines
    }
}

pub fn entry_for(dir: &Path, name: &str) -> Result<ManifestEntry> {
    let bytes = fs::read(dir.join(name))?;
    Ok(ManifestEntry {
        path: name.to_string(),
        sha256: hex::encode(Sha256::digest(&bytes)),
        rows: count_rows(name, &bytes),
    })
}

/// Hashes `files` (relative to `dir`) and writes the manifest next to them.
/// `comments` become leading `# ` lines.
pub fn write_manifest(
    dir: &Path,
    files: &[String],
    comments: &[String],
) -> Result<Vec<ManifestEntry>> {
    let entries = files
        .iter()
        .map(|f| entry_for(dir, f))
        .collect::<Result<Vec<_>>>()?;
    let mut out = fs::File::create(dir.join(MANIFEST_FILE))?;
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    for e in &entries {
        writeln!(out, "{}\t{}\t{}", e.path, e.sha256, e.rows)?;
    }
    Ok(entries)
}

/// Parses a manifest, skipping comment lines.
pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestEntry>> {
    let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
    Ok(text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .filter_map(|l| {
            let mut parts = l.split('\t');
            Some(ManifestEntry {
                path: parts.next()?.to_string(),
                sha256: parts.next()?.to_string(),
                rows: parts.next()?.parse().ok()?,
            })
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.csv"), "x,y\n1,2\n3,4\n").unwrap();
        fs::write(dir.path().join("b.txt"), "k=v\n").unwrap();
        let files = vec!["a.csv".to_string(), "b.txt".to_string()];
        let entries = write_manifest(dir.path(), &files, &["seed=1".into()]).unwrap();
        assert_eq!(entries[0].rows, 2);
        assert_eq!(entries[1].rows, 1);
        // sha-256 of "k=v\n"
        assert_eq!(entries[1].sha256, hex::encode(Sha256::digest(b"k=v\n")));
        assert_eq!(read_manifest(dir.path()).unwrap(), entries);
        let text = fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
        assert!(text.starts_with("# seed=1\n"));
        assert!(text.contains("a.csv\t"));
    }
}
