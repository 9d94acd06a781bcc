//! Subcommand implementations. Each stage writes into its own directory
//! under the output root and finishes with a manifest.

mod backtest;
mod data;
mod model;
mod report;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ensemble_forecast::backtest::WindowPlan;
use ensemble_forecast::rng::sha256_hex;
use ensemble_forecast::{Error, FeatureTable};
use serde::Serialize;

pub use backtest::backtest;
pub use data::{features, synth};
pub use model::{decollinear, importance, train};
pub use report::report;

use crate::config::RunConfig;
use crate::manifest::Manifest;
use crate::CliError;

pub struct Context {
    pub cfg: RunConfig,
    pub config_hash: String,
    pub out: PathBuf,
}

impl Context {
    pub fn new(cfg: RunConfig, config_bytes: &[u8], out: PathBuf) -> Self {
        Self {
            cfg,
            config_hash: sha256_hex(config_bytes),
            out,
        }
    }

    fn stage_dir(&self, name: &str) -> Result<PathBuf, CliError> {
        let dir = self.out.join(name);
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(dir)
    }

    fn manifest(&self, command: &str) -> Manifest {
        Manifest::new(command, &self.config_hash, self.cfg.seed)
    }

    fn data_dir(&self, flag: Option<PathBuf>) -> PathBuf {
        flag.unwrap_or_else(|| self.out.join("data"))
    }

    fn features_path(&self, lob: &str, lead: u32) -> PathBuf {
        self.out.join("features").join(format!("{lob}_lead{lead}.csv"))
    }

    fn reduced_path(&self) -> PathBuf {
        self.out.join("decollinear").join("reduced.csv")
    }
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> ensemble_forecast::Result<()>) -> Result<PathBuf, CliError> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w)?;
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf, CliError> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(path.to_path_buf())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<PathBuf, CliError> {
    let text = serde_json::to_string_pretty(value).expect("value serializes") + "\n";
    write_text(path, &text)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Core(Error::io(path, e)))
}

/// Sidecar of `x.csv` is `x.json`.
fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn read_table(csv: &Path) -> Result<FeatureTable, CliError> {
    let sidecar = read_text(&sidecar_path(csv))?;
    let file = File::open(csv).map_err(|e| Error::io(csv, e))?;
    Ok(FeatureTable::read_csv(std::io::BufReader::new(file), &sidecar)?)
}

fn write_table(csv: &Path, table: &FeatureTable) -> Result<Vec<PathBuf>, CliError> {
    let a = write_with(csv, |w| table.write_csv(w))?;
    let b = write_text(&sidecar_path(csv), &(table.sidecar_json() + "\n"))?;
    Ok(vec![a, b])
}

/// Window of the `train` block against `table`.
fn plan_for(ctx: &Context, table: &FeatureTable) -> Result<WindowPlan, CliError> {
    let t = &ctx.cfg.train;
    if table.lead_time() != t.lead_time {
        return Err(CliError::Usage(format!(
            "table has lead time {} but train.lead_time is {}",
            table.lead_time(),
            t.lead_time
        )));
    }
    let last = (0..table.n_rows())
        .map(|i| table.target_week(i))
        .max()
        .ok_or_else(|| CliError::Core(Error::Domain {
            module: "cli",
            message: "feature table has no rows".into(),
        }))?;
    let week = t.test_week.unwrap_or(last);
    Ok(WindowPlan::new(week, t.lead_time, t.train_weeks, t.val_weeks)?)
}
