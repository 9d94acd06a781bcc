use ensemble_forecast::datagen::{generate, SynthConfig};
use ensemble_forecast::dataset::{read_feeds, write_feeds, FEED_FILES};

use super::{write_table, Context};
use crate::CliError;

pub fn synth(ctx: &Context) -> Result<(), CliError> {
    let synth = SynthConfig {
        seed: ctx.cfg.seed,
        ..ctx.cfg.synth.clone()
    };
    synth.validate()?;
    let calendar = ctx.cfg.calendar.build(synth.n_years)?;
    let feeds = generate(&synth, &calendar)?;
    let dir = ctx.stage_dir("data")?;
    let written = write_feeds(&dir, &feeds)?;
    let mut manifest = ctx.manifest("synth");
    manifest.outputs(&ctx.out, &written)?;
    manifest.write(&dir)?;
    Ok(())
}

pub fn features(ctx: &Context, data: Option<std::path::PathBuf>) -> Result<(), CliError> {
    let data = ctx.data_dir(data);
    let mut manifest = ctx.manifest("features");
    for f in FEED_FILES {
        manifest.input(&ctx.out, &data.join(f))?;
    }
    let feeds = read_feeds(&data, ctx.cfg.calendar.start_date)?;
    let dir = ctx.stage_dir("features")?;
    for &lead in &ctx.cfg.features.leads {
        let table = feeds.table(&ctx.cfg.lob, lead, &ctx.cfg.features.families)?;
        let written = write_table(&ctx.features_path(&ctx.cfg.lob, lead), &table)?;
        manifest.outputs(&ctx.out, &written)?;
    }
    manifest.write(&dir)?;
    Ok(())
}
