//! On-disk cache of coefficient tables.
//!
//! One file per `(form, n_max, version)`: an ASCII header line
//! `form,<label>,<n_max>,<version>` followed by `n_max` little-endian `f64`
//! values `λ(1), …, λ(n_max)`.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use super::coeffs::{sieve_coefficients_with, CoeffOptions, CoefficientTable};
use super::FormSpec;
use crate::error::{Error, Result};

pub const CACHE_VERSION: u32 = 1;

/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "TWISTLAB_CACHE";

#[derive(Debug, Clone)]
pub struct CoefficientCache {
    dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheEntry {
    pub label: String,
    pub n_max: usize,
    pub version: u32,
    pub path: PathBuf,
    pub bytes: u64,
}

impl CoefficientCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        CoefficientCache { dir: dir.into() }
    }

    /// The explicit directory if given, else `$TWISTLAB_CACHE`, else none.
    pub fn from_env_or(dir: Option<PathBuf>) -> Option<Self> {
        dir.or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .map(CoefficientCache::new)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, label: &str, n_max: usize) -> PathBuf {
        self.dir
            .join(format!("{label}-n{n_max}-v{CACHE_VERSION}.lambda"))
    }

    fn header(label: &str, n_max: usize) -> String {
        format!("form,{label},{n_max},{CACHE_VERSION}\n")
    }

    /// Cached table, `Ok(None)` if absent, an error if present but corrupt.
    pub fn load(&self, form: &FormSpec, n_max: usize) -> Result<Option<CoefficientTable>> {
        let path = self.path_for(&form.label, n_max);
        let file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let corrupt = |reason: &str| Error::Cache {
            path: path.clone(),
            reason: reason.to_string(),
        };
        let mut reader = BufReader::new(file);
        let mut header = String::new();
        reader.read_line(&mut header)?;
        if header != Self::header(&form.label, n_max) {
            return Err(corrupt("header does not match form, size or version"));
        }
        let mut bytes = Vec::with_capacity(8 * n_max);
        reader.read_to_end(&mut bytes)?;
        if bytes.len() != 8 * n_max {
            return Err(corrupt("payload length differs from n_max"));
        }
        let lambda: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        CoefficientTable::from_lambda(form.clone(), &lambda)
            .map(Some)
            .map_err(|_| corrupt("λ(1) is not 1"))
    }

    /// Writes atomically through a temporary file in the same directory.
    pub fn store(&self, table: &CoefficientTable) -> Result<PathBuf> {
        fs::create_dir_all(&self.dir)?;
        let label = &table.form().label;
        let path = self.path_for(label, table.n_max());
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        {
            let mut w = std::io::BufWriter::new(fs::File::create(&tmp)?);
            w.write_all(Self::header(label, table.n_max()).as_bytes())?;
            for &l in &table.lambdas()[1..] {
                w.write_all(&l.to_le_bytes())?;
            }
            w.flush()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(path)
    }

    /// Loads from the cache or sieves and stores. The flag reports a hit.
    pub fn load_or_build(
        &self,
        form: &FormSpec,
        n_max: usize,
        opts: &CoeffOptions,
    ) -> Result<(CoefficientTable, bool)> {
        if let Some(t) = self.load(form, n_max)? {
            return Ok((t, true));
        }
        let t = sieve_coefficients_with(form, n_max, opts)?;
        self.store(&t)?;
        Ok((t, false))
    }

    pub fn list(&self) -> Result<Vec<CacheEntry>> {
        let mut out = Vec::new();
        let rd = match fs::read_dir(&self.dir) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
            Err(e) => return Err(e.into()),
        };
        for entry in rd {
            let entry = entry?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some("lambda") {
                continue;
            }
            let mut header = String::new();
            BufReader::new(fs::File::open(&path)?).read_line(&mut header)?;
            let parts: Vec<&str> = header.trim_end().split(',').collect();
            if let [tag, label, n, v] = parts[..] {
                if let (Ok(n_max), Ok(version)) = (n.parse(), v.parse()) {
                    if tag == "form" {
                        out.push(CacheEntry {
                            label: label.to_string(),
                            n_max,
                            version,
                            bytes: entry.metadata()?.len(),
                            path,
                        });
                    }
                }
            }
        }
        out.sort_by(|a, b| (&a.label, a.n_max).cmp(&(&b.label, b.n_max)));
        Ok(out)
    }

    /// Removes every cache file; returns how many were deleted.
    pub fn clear(&self) -> Result<usize> {
        let entries = self.list()?;
        for e in &entries {
            fs::remove_file(&e.path)?;
        }
        Ok(entries.len())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{lookup, sieve_coefficients};
    use super::*;

    #[test]
    fn roundtrip_and_listing() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CoefficientCache::new(dir.path());
        let form = lookup("19a").unwrap();
        assert!(cache.load(&form, 500).unwrap().is_none());
        let (t, hit) = cache.load_or_build(&form, 500, &CoeffOptions::default()).unwrap();
        assert!(!hit);
        let (u, hit) = cache.load_or_build(&form, 500, &CoeffOptions::default()).unwrap();
        assert!(hit);
        assert_eq!(t.lambdas(), u.lambdas());
        assert_eq!(u.lambdas(), sieve_coefficients(&form, 500).unwrap().lambdas());
        let list = cache.list().unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!((list[0].label.as_str(), list[0].n_max), ("19a", 500));
        assert_eq!(list[0].bytes, 8 * 500 + "form,19a,500,1\n".len() as u64);
        assert_eq!(cache.clear().unwrap(), 1);
        assert!(cache.list().unwrap().is_empty());
    }

    #[test]
    fn corrupt_files_are_reported() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CoefficientCache::new(dir.path());
        let form = lookup("11a").unwrap();
        let path = cache.path_for("11a", 100);
        fs::write(&path, b"form,11a,100,1\nshort").unwrap();
        assert!(matches!(cache.load(&form, 100), Err(Error::Cache { .. })));
        fs::write(&path, b"form,37a,100,1\n").unwrap();
        assert!(matches!(cache.load(&form, 100), Err(Error::Cache { .. })));
    }
}
