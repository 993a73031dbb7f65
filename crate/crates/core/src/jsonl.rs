//! Line-delimited JSON reading and writing, plus an order-preserving batched
//! parallel map so large inputs stream in bounded memory.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Records processed per parallel batch.
pub const BATCH_SIZE: usize = 4096;

/// Streams raw lines (1-based line numbers), skipping blank lines.
pub fn read_lines(path: &Path) -> Result<impl Iterator<Item = Result<(usize, String)>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let owned: PathBuf = path.to_path_buf();
    Ok(BufReader::new(file)
        .lines()
        .enumerate()
        .filter_map(move |(i, line)| match line {
            Ok(l) if l.trim().is_empty() => None,
            Ok(l) => Some(Ok((i + 1, l))),
            Err(e) => Some(Err(Error::io(&owned, e))),
        }))
}

pub fn parse_line<T: DeserializeOwned>(path: &Path, line_no: usize, line: &str) -> Result<T> {
    serde_json::from_str(line).map_err(|e| Error::parse(path, line_no, e))
}

/// Reads a whole JSONL file, failing on the first malformed line.
pub fn read_all<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    read_lines(path)?
        .map(|r| r.and_then(|(n, l)| parse_line(path, n, &l)))
        .collect()
}

pub struct JsonlWriter {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl JsonlWriter {
    pub fn create(path: &Path) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            inner: BufWriter::new(file),
        })
    }

    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.inner, record)
            .map_err(|e| Error::io(&self.path, e.into()))?;
        self.inner
            .write_all(b"\n")
            .map_err(|e| Error::io(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Applies `f` to `items` in fixed-size batches on the current rayon pool and
/// hands results to `sink` in input order.
pub fn map_ordered<I, T, U, F, S>(items: I, f: F, mut sink: S) -> Result<()>
where
    I: Iterator<Item = Result<T>>,
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync,
    S: FnMut(U) -> Result<()>,
{
    let mut items = items.peekable();
    while items.peek().is_some() {
        let batch: Vec<T> = items
            .by_ref()
            .take(BATCH_SIZE)
            .collect::<Result<Vec<T>>>()?;
        let results: Vec<U> = batch.into_par_iter().map(&f).collect();
        for r in results {
            sink(r)?;
        }
    }
    Ok(())
}
