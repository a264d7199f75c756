//! Plain-text corpus directory format.
//!
//! A corpus directory holds:
//!
//! - `device.csv` — header `name,sensor_count,rate_hz` plus one data row;
//! - `index.csv` — header `file,performer,gesture,pace`, one row per recording;
//! - one CSV per recording — header `t,s1,...,sm` (or `s1,...,sm`, in which
//!   case timestamps are synthesized from the device's nominal rate) followed
//!   by one row per time step;
//! - `gestures.csv` — optional, header `gesture,name`, the gesture catalog.
//!
//! All real numbers are written with 17 significant digits so that loading a
//! saved corpus reproduces every value bit for bit. Recordings are loaded in
//! lexicographic file-name order.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::io_util::{format_f64, parse_f64, read_file, write_atomic};
use crate::{Error, Result};

use super::{Corpus, DeviceProfile, Pace, Recording};

const DEVICE_FILE: &str = "device.csv";
const INDEX_FILE: &str = "index.csv";
const CATALOG_FILE: &str = "gestures.csv";

/// Reads a corpus directory. Errors carry the offending file and line.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let dir = path.as_ref();
    let device = load_device(&dir.join(DEVICE_FILE))?;
    let mut entries = load_index(&dir.join(INDEX_FILE))?;
    entries.sort_by(|a, b| a.file.cmp(&b.file));

    let mut recordings = Vec::with_capacity(entries.len());
    for entry in &entries {
        let rec_path = dir.join(&entry.file);
        let (samples, timestamps) = read_recording_csv(&rec_path, &device)?;
        let recording = Recording::new(
            samples,
            timestamps,
            entry.performer,
            entry.gesture,
            entry.pace,
        )
        .map_err(|e| Error::parse(&rec_path, 0, e.to_string()))?;
        recordings.push(recording);
    }

    let catalog_path = dir.join(CATALOG_FILE);
    let gesture_catalog = if catalog_path.exists() {
        load_catalog(&catalog_path)?
    } else {
        BTreeMap::new()
    };

    Corpus::new(device, recordings, gesture_catalog)
}

/// Writes a corpus directory; see the module docs for the layout.
pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let dir = path.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let device = &corpus.device;
    write_atomic(
        &dir.join(DEVICE_FILE),
        &format!(
            "name,sensor_count,rate_hz\n{},{},{}\n",
            device.name,
            device.sensor_count,
            format_f64(device.nominal_rate_hz)
        ),
    )?;

    let mut index = String::from("file,performer,gesture,pace\n");
    for (i, rec) in corpus.recordings.iter().enumerate() {
        let file = recording_file_name(i);
        index.push_str(&format!(
            "{file},{},{},{}\n",
            rec.performer_id, rec.gesture_id, rec.pace
        ));
        write_atomic(&dir.join(&file), &render_recording(rec))?;
    }
    write_atomic(&dir.join(INDEX_FILE), &index)?;

    if !corpus.gesture_catalog.is_empty() {
        let mut catalog = String::from("gesture,name\n");
        for (id, name) in &corpus.gesture_catalog {
            if name.contains(',') || name.contains('\n') {
                return Err(Error::invalid(format!(
                    "gesture name {name:?} cannot contain commas or newlines"
                )));
            }
            catalog.push_str(&format!("{id},{name}\n"));
        }
        write_atomic(&dir.join(CATALOG_FILE), &catalog)?;
    }
    Ok(())
}

fn recording_file_name(index: usize) -> String {
    format!("rec_{index:06}.csv")
}

fn render_recording(rec: &Recording) -> String {
    let m = rec.sensor_count();
    let mut out = String::with_capacity(rec.len() * (m + 1) * 26);
    out.push('t');
    for i in 1..=m {
        out.push_str(&format!(",s{i}"));
    }
    out.push('\n');
    for (j, &t) in rec.timestamps.iter().enumerate() {
        out.push_str(&format_f64(t));
        for i in 0..m {
            out.push(',');
            out.push_str(&format_f64(rec.samples[(i, j)]));
        }
        out.push('\n');
    }
    out
}

struct IndexEntry {
    file: String,
    performer: u32,
    gesture: u32,
    pace: Pace,
}

fn split_line(line: &str) -> Vec<&str> {
    line.trim_end_matches('\r').split(',').map(str::trim).collect()
}

fn load_device(path: &Path) -> Result<DeviceProfile> {
    let text = read_file(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if split_line(header) == ["name", "sensor_count", "rate_hz"] => {}
        Some(header) => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header \"name,sensor_count,rate_hz\", got {header:?}"),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty device file")),
    }
    let row = lines
        .next()
        .ok_or_else(|| Error::parse(path, 2, "missing device row"))?;
    let fields = split_line(row);
    if fields.len() != 3 {
        return Err(Error::parse(
            path,
            2,
            format!("expected 3 fields, got {}", fields.len()),
        ));
    }
    let sensor_count: usize = fields[1]
        .parse()
        .map_err(|_| Error::parse(path, 2, format!("bad sensor count {:?}", fields[1])))?;
    let rate = parse_f64(fields[2], path, 2)?;
    DeviceProfile::new(fields[0], sensor_count, rate)
        .map_err(|e| Error::parse(path, 2, e.to_string()))
}

fn load_index(path: &Path) -> Result<Vec<IndexEntry>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if split_line(header) == ["file", "performer", "gesture", "pace"] => {}
        Some((_, header)) => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header \"file,performer,gesture,pace\", got {header:?}"),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty index file")),
    }
    let mut entries = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let fields = split_line(line);
        if fields.len() != 4 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 4 fields, got {}", fields.len()),
            ));
        }
        let performer: u32 = fields[1]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad performer id {:?}", fields[1])))?;
        let gesture: u32 = fields[2]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad gesture id {:?}", fields[2])))?;
        let pace: Pace = fields[3]
            .parse()
            .map_err(|e: Error| Error::parse(path, line_no, e.to_string()))?;
        entries.push(IndexEntry {
            file: fields[0].to_string(),
            performer,
            gesture,
            pace,
        });
    }
    Ok(entries)
}

fn load_catalog(path: &Path) -> Result<BTreeMap<u32, String>> {
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if split_line(header) == ["gesture", "name"] => {}
        Some((_, header)) => {
            return Err(Error::parse(
                path,
                1,
                format!("expected header \"gesture,name\", got {header:?}"),
            ))
        }
        None => return Err(Error::parse(path, 1, "empty catalog file")),
    }
    let mut catalog = BTreeMap::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let fields = split_line(line);
        if fields.len() != 2 {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected 2 fields, got {}", fields.len()),
            ));
        }
        let id: u32 = fields[0]
            .parse()
            .map_err(|_| Error::parse(path, line_no, format!("bad gesture id {:?}", fields[0])))?;
        catalog.insert(id, fields[1].to_string());
    }
    Ok(catalog)
}

/// Parses one recording CSV. The header either starts with `t` (explicit
/// timestamps) or lists only sensor columns, in which case timestamps are
/// synthesized at the device's nominal rate. Also used by converters that
/// ingest recordings from outside a corpus directory.
pub fn read_recording_csv(path: &Path, device: &DeviceProfile) -> Result<(Array2<f64>, Vec<f64>)> {
    let m = device.sensor_count;
    let text = read_file(path)?;
    let mut lines = text.lines().enumerate();

    let header = match lines.next() {
        Some((_, h)) => split_line(h),
        None => return Err(Error::parse(path, 1, "empty recording file")),
    };
    let has_timestamps = header.first() == Some(&"t");
    let sensor_columns = if has_timestamps {
        header.len() - 1
    } else {
        header.len()
    };
    if sensor_columns != m {
        return Err(Error::parse(
            path,
            1,
            format!(
                "sensor count mismatch: file has {sensor_columns} sensor columns, \
                 device profile {:?} expects {m}",
                device.name
            ),
        ));
    }

    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut timestamps: Vec<f64> = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let fields = split_line(line);
        if fields.len() != header.len() {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {} fields, got {}", header.len(), fields.len()),
            ));
        }
        let mut values = fields.iter();
        let t = if has_timestamps {
            let t = parse_f64(values.next().unwrap(), path, line_no)?;
            if let Some(&prev) = timestamps.last() {
                if t.partial_cmp(&prev) != Some(std::cmp::Ordering::Greater) {
                    return Err(Error::parse(
                        path,
                        line_no,
                        format!("non-increasing timestamps: {prev} followed by {t}"),
                    ));
                }
            }
            t
        } else {
            columns.len() as f64 / device.nominal_rate_hz
        };
        timestamps.push(t);
        let row: Result<Vec<f64>> = values.map(|f| parse_f64(f, path, line_no)).collect();
        columns.push(row?);
    }

    if columns.len() < 2 {
        return Err(Error::parse(
            path,
            1,
            format!("a recording needs at least 2 samples, got {}", columns.len()),
        ));
    }
    let mut samples = Array2::<f64>::zeros((m, columns.len()));
    for (j, col) in columns.iter().enumerate() {
        for (i, &x) in col.iter().enumerate() {
            samples[(i, j)] = x;
        }
    }
    Ok((samples, timestamps))
}
