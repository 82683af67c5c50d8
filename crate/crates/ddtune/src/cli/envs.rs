use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;

use super::GlobalArgs;
use crate::formats::{self, SamplerConfigJson};

#[derive(Args)]
pub struct SampleEnvsArgs {
    /// Sampler config JSON; defaults to the built-in evaluation family.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Override the environment count.
    #[arg(long)]
    pub count: Option<usize>,
    /// Output path.
    #[arg(long, default_value = "environments.json")]
    pub out: PathBuf,
}

pub fn run(global: &GlobalArgs, args: &SampleEnvsArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => formats::read_json::<SamplerConfigJson>(path)
            .with_context(|| format!("sampler config {}", path.display()))?,
        None => SamplerConfigJson::evaluation_family(1000, 0),
    };
    if let Some(count) = args.count {
        config.count = count;
    }
    if let Some(seed) = global.seed {
        config.seed = seed;
    }
    let sampler = config.to_sampler()?;
    let envs = sampler.sample()?;
    formats::write_environments(&args.out, &envs)?;
    println!(
        "sampled {} environments (seed {}) -> {}",
        envs.len(),
        sampler.seed,
        args.out.display()
    );
    Ok(())
}
