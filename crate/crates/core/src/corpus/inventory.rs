//! Enumerates repository files and separates text from executables.

use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use crate::error::{Error, Result};
use crate::lang::guess_language;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagicKind {
    /// Starts with the DOS `MZ` header.
    Mz,
    /// Classified by extension only.
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextFile {
    pub path: PathBuf,
    pub size: u64,
    pub language: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryFile {
    pub path: PathBuf,
    pub size: u64,
    pub magic: MagicKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedFile {
    pub path: PathBuf,
    pub reason: String,
}

/// Files of one repository, paths relative to the repository root and sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileInventory {
    pub text_files: Vec<TextFile>,
    pub binary_files: Vec<BinaryFile>,
    pub skipped: Vec<SkippedFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanLimits {
    pub max_file_size: u64,
    pub max_files: usize,
    /// Lowercase extensions (without dot) treated as executables.
    pub executable_extensions: Vec<String>,
}

impl Default for ScanLimits {
    fn default() -> Self {
        ScanLimits {
            max_file_size: 50 * 1024 * 1024,
            max_files: 20_000,
            executable_extensions: vec!["exe".into(), "dll".into()],
        }
    }
}

fn starts_with_mz(path: &Path) -> std::io::Result<bool> {
    let mut head = [0u8; 2];
    let mut f = File::open(path)?;
    let mut read = 0;
    while read < 2 {
        let n = f.read(&mut head[read..])?;
        if n == 0 {
            break;
        }
        read += n;
    }
    Ok(read == 2 && head == *b"MZ")
}

/// Classifies every regular file below `root`.
///
/// Version-control metadata directories are not enumerated. Individual files
/// that cannot be read end up in `skipped` rather than failing the scan.
pub fn scan_repo_files(root: &Path, limits: &ScanLimits) -> Result<FileInventory> {
    std::fs::read_dir(root).map_err(|source| Error::Ingestion {
        path: root.to_path_buf(),
        source,
    })?;

    let mut inv = FileInventory::default();
    let mut counted = 0usize;
    let walker = WalkDir::new(root)
        .sort_by_file_name()
        .into_iter()
        .filter_entry(|e| e.depth() == 0 || !(e.file_type().is_dir() && e.file_name() == ".git"));

    for entry in walker {
        let entry = match entry {
            Ok(e) => e,
            Err(err) => {
                if let Some(p) = err.path() {
                    let rel = p.strip_prefix(root).unwrap_or(p).to_path_buf();
                    inv.skipped.push(SkippedFile {
                        path: rel,
                        reason: "unreadable".into(),
                    });
                }
                continue;
            }
        };
        let ft = entry.file_type();
        if ft.is_dir() {
            continue;
        }
        let rel = entry.path().strip_prefix(root).unwrap_or(entry.path()).to_path_buf();
        if ft.is_symlink() {
            inv.skipped.push(SkippedFile { path: rel, reason: "symlink".into() });
            continue;
        }
        if counted >= limits.max_files {
            inv.skipped.push(SkippedFile { path: rel, reason: "count-limit".into() });
            continue;
        }
        counted += 1;
        let size = match entry.metadata() {
            Ok(m) => m.len(),
            Err(_) => {
                inv.skipped.push(SkippedFile { path: rel, reason: "unreadable".into() });
                continue;
            }
        };
        if size > limits.max_file_size {
            inv.skipped.push(SkippedFile { path: rel, reason: "size-limit".into() });
            continue;
        }
        let is_mz = match starts_with_mz(entry.path()) {
            Ok(b) => b,
            Err(_) => {
                inv.skipped.push(SkippedFile { path: rel, reason: "unreadable".into() });
                continue;
            }
        };
        let ext = rel
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        let exe_ext = ext.is_some_and(|e| limits.executable_extensions.iter().any(|x| *x == e));
        if is_mz || exe_ext {
            inv.binary_files.push(BinaryFile {
                path: rel,
                size,
                magic: if is_mz { MagicKind::Mz } else { MagicKind::Other },
            });
        } else {
            let language = guess_language(&rel).to_string();
            inv.text_files.push(TextFile { path: rel, size, language });
        }
    }

    inv.text_files.sort_by(|a, b| a.path.cmp(&b.path));
    inv.binary_files.sort_by(|a, b| a.path.cmp(&b.path));
    inv.skipped.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn text_and_mz_binary() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("poc.py"), "print('x')\n").unwrap();
        fs::write(dir.path().join("tool.exe"), b"MZ\x90\x00rest").unwrap();
        let inv = scan_repo_files(dir.path(), &ScanLimits::default()).unwrap();
        assert_eq!(inv.text_files.len(), 1);
        assert_eq!(inv.binary_files.len(), 1);
        assert_eq!(inv.binary_files[0].magic, MagicKind::Mz);
        assert_eq!(inv.text_files[0].language, "Python");
    }

    #[test]
    fn magic_beats_extension() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("payload.txt"), b"MZ....").unwrap();
        fs::write(dir.path().join("fake.dll"), b"not a pe").unwrap();
        let inv = scan_repo_files(dir.path(), &ScanLimits::default()).unwrap();
        assert!(inv.text_files.is_empty());
        let kinds: Vec<_> = inv.binary_files.iter().map(|b| (b.path.to_str().unwrap(), b.magic.clone())).collect();
        assert_eq!(kinds, vec![("fake.dll", MagicKind::Other), ("payload.txt", MagicKind::Mz)]);
    }

    #[test]
    fn empty_directory() {
        let dir = tempfile::tempdir().unwrap();
        let inv = scan_repo_files(dir.path(), &ScanLimits::default()).unwrap();
        assert_eq!(inv, FileInventory::default());
    }

    #[test]
    fn size_and_count_limits() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("a.py"), "x").unwrap();
        fs::write(dir.path().join("big.py"), vec![b'a'; 100]).unwrap();
        fs::write(dir.path().join("c.py"), "y").unwrap();
        let limits = ScanLimits { max_file_size: 10, max_files: 2, ..ScanLimits::default() };
        let inv = scan_repo_files(dir.path(), &limits).unwrap();
        let skipped: Vec<_> = inv.skipped.iter().map(|s| (s.path.to_str().unwrap(), s.reason.as_str())).collect();
        assert_eq!(skipped, vec![("big.py", "size-limit"), ("c.py", "count-limit")]);
        assert_eq!(inv.text_files.len(), 1);
    }

    #[test]
    fn git_directory_is_not_enumerated() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join(".git")).unwrap();
        fs::write(dir.path().join(".git/HEAD"), "ref").unwrap();
        fs::create_dir(dir.path().join("src")).unwrap();
        fs::write(dir.path().join("src/x.c"), "int x;").unwrap();
        let inv = scan_repo_files(dir.path(), &ScanLimits::default()).unwrap();
        assert_eq!(inv.text_files.len(), 1);
        assert_eq!(inv.text_files[0].path, PathBuf::from("src/x.c"));
        assert!(inv.skipped.is_empty());
    }

    #[test]
    fn missing_root_is_ingestion_error() {
        let err = scan_repo_files(Path::new("/nonexistent/pocscan/root"), &ScanLimits::default()).unwrap_err();
        assert!(matches!(err, Error::Ingestion { .. }));
    }

    #[test]
    fn lists_are_disjoint_and_cover_every_file() {
        let dir = tempfile::tempdir().unwrap();
        for (name, body) in [("b.exe", &b"MZ"[..]), ("a.py", b"1"), ("z.sh", b"echo"), ("big.bin", &[0u8; 64][..])] {
            fs::write(dir.path().join(name), body).unwrap();
        }
        let limits = ScanLimits { max_file_size: 32, ..ScanLimits::default() };
        let inv = scan_repo_files(dir.path(), &limits).unwrap();
        let mut all: Vec<_> = inv
            .text_files
            .iter()
            .map(|f| f.path.clone())
            .chain(inv.binary_files.iter().map(|f| f.path.clone()))
            .chain(inv.skipped.iter().map(|f| f.path.clone()))
            .collect();
        all.sort();
        let before = all.len();
        all.dedup();
        assert_eq!(before, all.len());
        assert_eq!(all.len(), 4);
    }
}
