use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::{io_err, PipelineError};

/// Files written to temporary names and renamed into place together on
/// [`Outputs::commit`]. Dropping without committing deletes the
/// temporaries.
#[derive(Default)]
pub(crate) struct Outputs {
    pending: Vec<(PathBuf, PathBuf)>,
}

fn temp_name(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.tmp-{}", std::process::id()))
}

impl Outputs {
    pub fn write<F>(&mut self, path: &Path, body: F) -> Result<(), PipelineError>
    where
        F: FnOnce(&mut dyn Write) -> Result<(), PipelineError>,
    {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
        let tmp = temp_name(path);
        let file = File::create(&tmp).map_err(io_err(&tmp))?;
        self.pending.push((tmp.clone(), path.to_path_buf()));
        let mut w = BufWriter::new(file);
        body(&mut w)?;
        w.flush().map_err(io_err(&tmp))?;
        Ok(())
    }

    /// Renames every pending file into place and returns the final paths.
    /// If a rename fails, files already moved are removed again.
    pub fn commit(mut self) -> Result<Vec<PathBuf>, PipelineError> {
        let pending = std::mem::take(&mut self.pending);
        let mut done: Vec<PathBuf> = Vec::new();
        for (i, (tmp, dest)) in pending.iter().enumerate() {
            if let Err(e) = fs::rename(tmp, dest) {
                for d in &done {
                    let _ = fs::remove_file(d);
                }
                for (t, _) in &pending[i..] {
                    let _ = fs::remove_file(t);
                }
                return Err(PipelineError::Io {
                    path: dest.clone(),
                    source: e,
                });
            }
            done.push(dest.clone());
        }
        Ok(done)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        for (tmp, _) in &self.pending {
            let _ = fs::remove_file(tmp);
        }
    }
}
