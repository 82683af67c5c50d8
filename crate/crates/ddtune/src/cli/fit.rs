use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use super::GlobalArgs;
use crate::formats::{self, FitResultJson};
use ddtune_core::fitting::{fit_nsd, FitBounds, FitOptions};

#[derive(Args)]
pub struct FitNsdArgs {
    /// Decay CSV: label,time_us,coherence[,weight] with labels `Ramsey` or
    /// `CPMG-n`.
    #[arg(long)]
    pub data: PathBuf,
    /// Initial guess as y0,a_g,v_g,w_g,a_1f.
    #[arg(long, value_delimiter = ',')]
    pub init: Vec<f64>,
    /// Upper bounds as a multiple of the initial guess.
    #[arg(long, default_value_t = 10.0)]
    pub bounds_scale: f64,
    #[arg(long, default_value_t = FitOptions::default().max_iterations)]
    pub max_iterations: usize,
    #[arg(long, default_value = "fit.json")]
    pub out: PathBuf,
    #[arg(long)]
    pub cache: Option<PathBuf>,
}

pub fn run(global: &GlobalArgs, args: &FitNsdArgs) -> Result<()> {
    let engine = global.engine();
    if args.init.len() != 5 {
        bail!("--init needs exactly 5 values: y0,a_g,v_g,w_g,a_1f");
    }
    let init: [f64; 5] = args.init.clone().try_into().expect("checked length");
    let mut bounds = FitBounds::around_init(&init);
    for (hi, &x) in bounds.hi.iter_mut().zip(&init) {
        *hi = args.bounds_scale * x;
    }

    let datasets = formats::read_decay_csv(&args.data)?;
    let labels: Vec<_> = datasets.iter().map(|d| d.label).collect();

    let mut cache = super::load_cache(args.cache.as_ref())?;
    let options = FitOptions {
        max_iterations: args.max_iterations,
        ..FitOptions::default()
    };
    let fit = fit_nsd(
        &datasets,
        &bounds,
        &init,
        &engine.grid,
        &mut cache,
        &engine.quad,
        &options,
    )?;

    formats::write_json(&args.out, &FitResultJson::from_result(&fit, &labels))?;
    super::save_cache(args.cache.as_ref(), &cache)?;

    println!(
        "fit {} datasets: sse {:.6e}, converged {}, {} simplex iterations -> {}",
        datasets.len(),
        fit.sse,
        fit.converged,
        fit.iterations,
        args.out.display()
    );
    println!(
        "params: y0 {:.6e}, a_g {:.6e}, v_g {:.6e}, w_g {:.6e}, a_1f {:.6e}",
        fit.params.y0, fit.params.a_g, fit.params.v_g, fit.params.w_g, fit.params.a_1f
    );
    super::print_cache_stats(&cache);
    Ok(())
}
