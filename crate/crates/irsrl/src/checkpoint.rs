//! Checkpoint files: the core binary encoding written atomically.

use std::fs;
use std::io::Write;
use std::path::Path;

use irsrl_core::nn::checkpoint::{decode, NamedTensor};

use crate::HarnessError;

/// Writes `bytes` to `path` via a temporary sibling and a rename, so a
/// reader never observes a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(|e| HarnessError::io(&tmp, e))?;
    f.write_all(bytes).map_err(|e| HarnessError::io(&tmp, e))?;
    f.sync_all().map_err(|e| HarnessError::io(&tmp, e))?;
    drop(f);
    fs::rename(&tmp, path).map_err(|e| HarnessError::io(path, e))
}

pub fn save(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    // Refuse to persist something that would not load back.
    decode(bytes)?;
    write_atomic(path, bytes)
}

pub fn load(path: &Path) -> Result<Vec<NamedTensor>, HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(decode(&bytes)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use irsrl_core::nn::checkpoint::encode;

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let t = NamedTensor::new("w", vec![2, 1], vec![0.5, -1.0]).unwrap();
        let bytes = encode(&[t.clone()]).unwrap();
        let path = dir.path().join("sub/ckpt.irsrl");
        save(&path, &bytes).unwrap();
        assert_eq!(fs::read(&path).unwrap(), bytes);
        assert_eq!(load(&path).unwrap(), vec![t]);
        assert!(!dir.path().join("sub/.ckpt.irsrl.tmp").exists());
    }

    #[test]
    fn corrupt_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.irsrl");
        fs::write(&path, b"IRSRL1\x05\x00").unwrap();
        assert!(matches!(load(&path), Err(HarnessError::Core(_))));
        assert!(save(&path, b"nope").is_err());
    }
}
