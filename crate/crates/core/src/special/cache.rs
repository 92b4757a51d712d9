//! JSON disk cache for zero tables, keyed by `(nu, K)`.

use std::path::PathBuf;

use super::zeros::{bessel_zeros, BesselZeroTable};
use crate::error::Result;

/// `$AFL_CACHE_DIR`, or `./.afl-cache`.
pub fn cache_dir() -> PathBuf {
    std::env::var_os("AFL_CACHE_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".afl-cache"))
}

fn cache_file(nu: f64, count: usize) -> PathBuf {
    cache_dir().join(format!("bessel-zeros-nu{nu}-k{count}.json"))
}

/// Loads `(nu, count)` from the cache, or computes and stores it. A corrupt or
/// stale entry is recomputed; write failures are ignored since the cache is
/// only an accelerator.
pub fn cached_bessel_zeros(nu: f64, count: usize) -> Result<BesselZeroTable> {
    let path = cache_file(nu, count);
    if let Ok(text) = std::fs::read_to_string(&path) {
        if let Ok(table) = serde_json::from_str::<BesselZeroTable>(&text) {
            if table.nu() == nu && table.len() == count && table.validate().is_ok() {
                return Ok(table);
            }
        }
    }
    let table = bessel_zeros(nu, count)?;
    if std::fs::create_dir_all(cache_dir()).is_ok() {
        if let Ok(text) = serde_json::to_string(&table) {
            let tmp = path.with_extension("json.tmp");
            if std::fs::write(&tmp, text).is_ok() {
                let _ = std::fs::rename(&tmp, &path);
            }
        }
    }
    Ok(table)
}
