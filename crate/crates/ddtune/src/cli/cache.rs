use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use crate::cache_io;

#[derive(Args)]
pub struct CacheStatsArgs {
    /// Transform-cache file to inspect.
    #[arg(long)]
    pub cache: PathBuf,
}

pub fn run(args: &CacheStatsArgs) -> Result<()> {
    let cache = cache_io::cache_load(&args.cache, false)
        .with_context(|| format!("cache {}", args.cache.display()))?;
    let size = std::fs::metadata(&args.cache)
        .with_context(|| format!("cache {}", args.cache.display()))?
        .len();
    // counters are per-process; a freshly loaded cache reports zeros
    println!(
        r#"{{"entries":{},"hits":{},"misses":{},"file_size_bytes":{}}}"#,
        cache.len(),
        cache.hits(),
        cache.misses(),
        size
    );
    Ok(())
}
