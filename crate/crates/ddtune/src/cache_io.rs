//! Versioned binary persistence for the transform cache.
//!
//! Layout: magic `DDTC`, format version u32, record count u64, then
//! fixed-width 45-byte records of (kind u8, n_pulses u32, t_start i64,
//! t_end i64, omega bits u64, re bits u64, im bits u64), all little-endian.
//! Times are the cache key's scaled-integer representation and values are
//! raw f64 bits, so save/load round-trips are bit-exact. Records are sorted
//! by key on save, making the file a deterministic function of the cache
//! contents.

use std::io::{Read, Write};
use std::path::Path;

use ddtune_core::spectral::{Complex64, TransformCache, TransformKey};

const MAGIC: [u8; 4] = *b"DDTC";
const VERSION: u32 = 1;
const RECORD_LEN: usize = 1 + 4 + 8 + 8 + 8 + 8 + 8;

#[derive(Debug, thiserror::Error)]
pub enum CacheIoError {
    #[error("cache file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cache file {path}: not a transform cache (bad magic)")]
    BadMagic { path: String },
    #[error("cache file {path}: unsupported format version {found} (expected {VERSION})")]
    BadVersion { path: String, found: u32 },
    #[error("cache file {path}: record {record} of {total}: {reason}")]
    BadRecord {
        path: String,
        record: u64,
        total: u64,
        reason: String,
    },
    #[error("cache file {path} does not exist")]
    Missing { path: String },
}

fn io_err(path: &Path, source: std::io::Error) -> CacheIoError {
    CacheIoError::Io { path: path.display().to_string(), source }
}

/// Write every cache entry; counters are runtime state and are not stored.
pub fn cache_save(cache: &TransformCache, path: &Path) -> Result<(), CacheIoError> {
    let mut entries: Vec<(&TransformKey, &Complex64)> = cache.entries().collect();
    entries.sort_by_key(|(k, _)| k.raw_parts());

    let mut buf = Vec::with_capacity(16 + entries.len() * RECORD_LEN);
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(entries.len() as u64).to_le_bytes());
    for (key, value) in entries {
        let (kind, n_pulses, t_start, t_end, omega) = key.raw_parts();
        buf.push(kind);
        buf.extend_from_slice(&n_pulses.to_le_bytes());
        buf.extend_from_slice(&t_start.to_le_bytes());
        buf.extend_from_slice(&t_end.to_le_bytes());
        buf.extend_from_slice(&omega.to_le_bytes());
        buf.extend_from_slice(&value.re.to_bits().to_le_bytes());
        buf.extend_from_slice(&value.im.to_bits().to_le_bytes());
    }

    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
        }
    }
    let tmp = path.with_extension("tmp~");
    let mut file = std::fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
    file.write_all(&buf).map_err(|e| io_err(&tmp, e))?;
    file.sync_all().map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Load a cache file; with `create_if_absent` a missing file yields an empty
/// cache instead of an error.
pub fn cache_load(path: &Path, create_if_absent: bool) -> Result<TransformCache, CacheIoError> {
    let mut file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            if create_if_absent {
                return Ok(TransformCache::new());
            }
            return Err(CacheIoError::Missing { path: path.display().to_string() });
        }
        Err(e) => return Err(io_err(path, e)),
    };
    let mut buf = Vec::new();
    file.read_to_end(&mut buf).map_err(|e| io_err(path, e))?;
    let p = || path.display().to_string();

    if buf.len() < 16 || buf[..4] != MAGIC {
        return Err(CacheIoError::BadMagic { path: p() });
    }
    let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(CacheIoError::BadVersion { path: p(), found: version });
    }
    let total = u64::from_le_bytes(buf[8..16].try_into().unwrap());
    let body = &buf[16..];
    if body.len() != total as usize * RECORD_LEN {
        let whole = body.len() / RECORD_LEN;
        return Err(CacheIoError::BadRecord {
            path: p(),
            record: whole as u64 + 1,
            total,
            reason: format!(
                "file truncated: {} bytes of records for a declared count of {total}",
                body.len()
            ),
        });
    }

    let mut entries = Vec::with_capacity(total as usize);
    for i in 0..total as usize {
        let r = &body[i * RECORD_LEN..(i + 1) * RECORD_LEN];
        let kind = r[0];
        let n_pulses = u32::from_le_bytes(r[1..5].try_into().unwrap());
        let t_start = i64::from_le_bytes(r[5..13].try_into().unwrap());
        let t_end = i64::from_le_bytes(r[13..21].try_into().unwrap());
        let omega = u64::from_le_bytes(r[21..29].try_into().unwrap());
        let re = f64::from_bits(u64::from_le_bytes(r[29..37].try_into().unwrap()));
        let im = f64::from_bits(u64::from_le_bytes(r[37..45].try_into().unwrap()));
        let key = TransformKey::from_raw_parts(kind, n_pulses, t_start, t_end, omega).map_err(
            |e| CacheIoError::BadRecord {
                path: p(),
                record: i as u64 + 1,
                total,
                reason: e.to_string(),
            },
        )?;
        entries.push((key, Complex64::new(re, im)));
    }
    Ok(TransformCache::from_entries(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ddtune_core::spectral::{segment_fourier, QuadratureConfig};
    use ddtune_core::{Segment, SegmentKind};

    fn populated_cache() -> TransformCache {
        let quad = QuadratureConfig::new(200);
        let mut cache = TransformCache::new();
        for (i, kind) in SegmentKind::ALL.iter().enumerate() {
            let seg = Segment {
                kind: *kind,
                n_pulses: kind.pulse_count(4),
                t_start: 4.0 * i as f64,
                t_end: 4.0 * (i + 1) as f64,
            };
            for omega in [0.5, 1.7, 3.3] {
                segment_fourier(&seg, omega, &mut cache, &quad);
            }
        }
        cache
    }

    #[test]
    fn round_trip_preserves_entries_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.cache");
        let cache = populated_cache();
        cache_save(&cache, &path).unwrap();
        let loaded = cache_load(&path, false).unwrap();
        assert_eq!(loaded.len(), cache.len());
        for (key, value) in cache.entries() {
            let got = loaded.get(key).unwrap();
            assert_eq!(got.re.to_bits(), value.re.to_bits());
            assert_eq!(got.im.to_bits(), value.im.to_bits());
        }
    }

    #[test]
    fn empty_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.cache");
        cache_save(&TransformCache::new(), &path).unwrap();
        let loaded = cache_load(&path, false).unwrap();
        assert!(loaded.is_empty());
    }

    #[test]
    fn missing_file_requires_create_flag() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nope.cache");
        assert!(matches!(
            cache_load(&path, false),
            Err(CacheIoError::Missing { .. })
        ));
        assert!(cache_load(&path, true).unwrap().is_empty());
    }

    #[test]
    fn corrupt_file_names_offending_record() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cache");
        let cache = populated_cache();
        cache_save(&cache, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(16 + 2 * RECORD_LEN + 7); // cut inside record 3
        std::fs::write(&path, &bytes).unwrap();
        let err = cache_load(&path, false).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("record 3"), "{msg}");
    }

    #[test]
    fn bad_magic_and_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.cache");
        std::fs::write(&path, b"not a cache file").unwrap();
        assert!(matches!(
            cache_load(&path, false),
            Err(CacheIoError::BadMagic { .. })
        ));

        let mut ok = Vec::new();
        ok.extend_from_slice(&MAGIC);
        ok.extend_from_slice(&99u32.to_le_bytes());
        ok.extend_from_slice(&0u64.to_le_bytes());
        std::fs::write(&path, &ok).unwrap();
        assert!(matches!(
            cache_load(&path, false),
            Err(CacheIoError::BadVersion { found: 99, .. })
        ));
    }

    #[test]
    fn save_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.cache");
        let b = dir.path().join("b.cache");
        let cache = populated_cache();
        cache_save(&cache, &a).unwrap();
        cache_save(&cache, &b).unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
