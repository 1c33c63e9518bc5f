//! Line-delimited JSON helpers shared by every file format in the crate.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Error from reading a JSONL stream. Line numbers are 1-based.
#[derive(Debug, thiserror::Error)]
pub enum JsonlError {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Parses every non-blank line of `reader` as a `T`, yielding `(line_number, value)`.
pub fn read_records<T, R>(reader: R) -> Result<Vec<(usize, T)>, JsonlError>
where
    T: DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|e| JsonlError::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?;
        out.push((idx + 1, value));
    }
    Ok(out)
}

pub fn read_file<T: DeserializeOwned>(path: &Path) -> Result<Vec<(usize, T)>, JsonlError> {
    let file = File::open(path)?;
    read_records(BufReader::new(file))
}

/// Serializes one record per line.
pub fn write_records<T, W>(mut writer: W, records: &[T]) -> io::Result<()>
where
    T: Serialize,
    W: Write,
{
    for record in records {
        serde_json::to_writer(&mut writer, record).map_err(io::Error::other)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

/// Writes `records` to `path`, replacing any existing file atomically
/// (temp file in the same directory, then rename).
pub fn write_file<T: Serialize>(path: &Path, records: &[T]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let tmp = match dir {
        Some(d) => d.join(format!(
            ".{}.tmp",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
        )),
        None => Path::new(&format!(
            ".{}.tmp",
            path.file_name().and_then(|n| n.to_str()).unwrap_or("out")
        ))
        .to_path_buf(),
    };
    {
        let file = File::create(&tmp)?;
        let mut writer = BufWriter::new(file);
        write_records(&mut writer, records)?;
        writer.get_ref().sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Encodes one record as a single newline-terminated line.
pub fn to_line<T: Serialize>(record: &T) -> String {
    let mut s = serde_json::to_string(record).expect("record serializes");
    s.push('\n');
    s
}
