//! Line-delimited JSON files.
//!
//! Readers skip lines that fail to parse instead of aborting, which makes
//! append-only logs tolerant of a torn final line after a crash. Writers
//! always terminate records with `\n`.

use serde::de::DeserializeOwned;
use serde::Serialize;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

/// Result of reading a JSONL file: parsed records plus the 1-based line
/// numbers that could not be decoded.
#[derive(Debug)]
pub struct JsonlRead<T> {
    pub records: Vec<T>,
    pub corrupt_lines: Vec<usize>,
}

pub fn read<T: DeserializeOwned>(path: &Path) -> io::Result<JsonlRead<T>> {
    let file = File::open(path)?;
    let mut records = Vec::new();
    let mut corrupt_lines = Vec::new();
    for (idx, line) in BufReader::new(file).split(b'\n').enumerate() {
        let line = line?;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        match serde_json::from_slice::<T>(&line) {
            Ok(r) => records.push(r),
            Err(_) => corrupt_lines.push(idx + 1),
        }
    }
    Ok(JsonlRead {
        records,
        corrupt_lines,
    })
}

/// Reads a file if it exists, returning an empty result otherwise.
pub fn read_if_exists<T: DeserializeOwned>(path: &Path) -> io::Result<JsonlRead<T>> {
    if path.exists() {
        read(path)
    } else {
        Ok(JsonlRead {
            records: Vec::new(),
            corrupt_lines: Vec::new(),
        })
    }
}

/// Writes all records, replacing any existing file.
pub fn write_all<T: Serialize>(path: &Path, records: &[T]) -> io::Result<()> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.push(b'\n');
    }
    std::fs::write(path, out)
}

/// Opens a file for appending. If the existing content does not end in a
/// newline (torn write), a newline is inserted so the next record starts on
/// a fresh line.
pub fn open_append(path: &Path) -> io::Result<File> {
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .append(true)
        .open(path)?;
    let len = file.metadata()?.len();
    if len > 0 {
        file.seek(SeekFrom::Start(len - 1))?;
        let mut last = [0u8; 1];
        file.read_exact(&mut last)?;
        if last[0] != b'\n' {
            file.write_all(b"\n")?;
        }
    }
    Ok(file)
}

/// Appends one record and flushes.
pub fn append<T: Serialize>(file: &mut File, record: &T) -> io::Result<()> {
    let mut line = serde_json::to_vec(record)?;
    line.push(b'\n');
    file.write_all(&line)?;
    file.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Rec {
        a: u32,
    }

    #[test]
    fn torn_tail_is_skipped_and_repaired() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("log.jsonl");
        std::fs::write(&path, b"{\"a\":1}\n{\"a\":2}\n{\"a\":").unwrap();
        let read1: JsonlRead<Rec> = read(&path).unwrap();
        assert_eq!(read1.records, vec![Rec { a: 1 }, Rec { a: 2 }]);
        assert_eq!(read1.corrupt_lines, vec![3]);

        let mut f = open_append(&path).unwrap();
        append(&mut f, &Rec { a: 3 }).unwrap();
        let read2: JsonlRead<Rec> = read(&path).unwrap();
        assert_eq!(read2.records, vec![Rec { a: 1 }, Rec { a: 2 }, Rec { a: 3 }]);
        assert_eq!(read2.corrupt_lines, vec![3]);
    }

    #[test]
    fn missing_file_reads_empty() {
        let dir = tempfile::tempdir().unwrap();
        let r: JsonlRead<Rec> = read_if_exists(&dir.path().join("nope")).unwrap();
        assert!(r.records.is_empty());
    }
}
