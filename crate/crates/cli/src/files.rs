//! JSON file formats for histories, history bundles and Byzantine universes.

use std::fs;
use std::path::{Path, PathBuf};

use opexcheck::{History, HistoryBuilder, Process, Template, Value};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpExRecord {
    pub object: String,
    pub operation: String,
    pub proc: String,
    #[serde(default)]
    pub input: Value,
    #[serde(default)]
    pub output: Value,
    #[serde(default)]
    pub inv: Option<u64>,
    #[serde(default)]
    pub res: Option<u64>,
}

/// On-disk history. Positions are ranks in the global event order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistoryFile {
    #[serde(default)]
    pub processes: Vec<Process>,
    #[serde(default)]
    pub opexes: Vec<OpExRecord>,
    #[serde(default)]
    pub complete: bool,
}

impl HistoryFile {
    pub fn from_history(h: &History) -> Self {
        let opexes = h
            .opexes()
            .iter()
            .enumerate()
            .map(|(k, o)| OpExRecord {
                object: o.object.clone(),
                operation: o.operation.clone(),
                proc: o.proc.clone(),
                input: o.input.clone(),
                output: o.output.clone(),
                inv: h.inv_position(k),
                res: h.res_position(k),
            })
            .collect();
        HistoryFile { processes: h.processes().to_vec(), opexes, complete: h.is_complete() }
    }

    pub fn to_history(&self) -> History {
        let mut b = HistoryBuilder::default();
        for p in &self.processes {
            b = b.process(p.id.clone(), p.kind);
        }
        for o in &self.opexes {
            b.push(
                o.object.clone(),
                o.operation.clone(),
                o.proc.clone(),
                o.input.clone(),
                o.output.clone(),
                o.inv,
                o.res,
            );
        }
        b.complete(self.complete).build()
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Json { path: path.to_path_buf(), source: e })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_history(path: &Path) -> Result<History, CliError> {
    Ok(read_json::<HistoryFile>(path)?.to_history())
}

pub fn write_history(path: &Path, h: &History) -> Result<(), CliError> {
    write_json(path, &HistoryFile::from_history(h))
}

pub fn read_universe(path: &Path) -> Result<Vec<Template>, CliError> {
    read_json(path)
}

/// The `*.json` files of a directory in file-name order.
pub fn history_paths(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn read_history_dir(dir: &Path) -> Result<Vec<History>, CliError> {
    history_paths(dir)?.iter().map(|p| read_history(p)).collect()
}

/// Writes `history-NNNN.json` files, one per history.
pub fn write_history_dir(dir: &Path, histories: &[History]) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (i, h) in histories.iter().enumerate() {
        write_history(&dir.join(format!("history-{i:04}.json")), h)?;
    }
    Ok(())
}
