//! File formats: CSV with a header row and LF endings, numbers written with
//! 17 significant digits; JSON metadata; atomic write-then-rename.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use curvstep_core::{RunRecord, Sample};

use crate::HarnessError;

const RECORD_MAGIC: &str = "# curvstep-runrecord v1";

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

/// Writes through `fill` into a sibling temporary file, then renames it over
/// `path`, so readers never observe a half-written file.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), HarnessError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), HarnessError>,
{
    let tmp = tmp_path(path);
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()?;
        Ok::<_, HarnessError>(())
    })();
    match result {
        Ok(()) => Ok(fs::rename(&tmp, path)?),
        Err(e) => {
            let _ = fs::remove_file(&tmp);
            Err(e)
        }
    }
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), HarnessError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

/// Writes a CSV with `header` and one row per item of `rows`.
pub fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), HarnessError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    write_atomic(path, |w| {
        let mut out = csv_writer(w);
        out.write_record(header)?;
        for row in rows {
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    })
}

fn dof_of(rec: &RunRecord) -> usize {
    rec.samples.first().map_or(0, |s| s.d.len())
}

fn state_header(dof: usize) -> Vec<String> {
    let mut h = Vec::with_capacity(3 * dof);
    for name in ["d", "v", "a"] {
        h.extend((1..=dof).map(|i| format!("{name}{i}")));
    }
    h
}

fn state_fields(s: &Sample, row: &mut Vec<String>) {
    row.extend(s.d.iter().chain(&s.v).chain(&s.a).map(|x| fmt_f64(*x)));
}

/// `t, d1..dn, v1..vn, a1..an, dt, k_effective, k_raw` per recorded sample.
/// `k_effective` is empty for controllers without a driving signal.
pub fn write_trajectory(path: &Path, rec: &RunRecord) -> Result<(), HarnessError> {
    let mut header = vec!["t".to_string()];
    header.extend(state_header(dof_of(rec)));
    header.extend(["dt", "k_effective", "k_raw"].map(String::from));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = rec.samples.iter().map(|s| {
        let mut row = vec![fmt_f64(s.t)];
        state_fields(s, &mut row);
        row.push(fmt_f64(s.dt));
        row.push(s.k_effective.map(fmt_f64).unwrap_or_default());
        row.push(fmt_f64(s.k_raw));
        row
    });
    write_rows(path, &header, rows)
}

/// `t, force_evaluations` per recorded sample.
pub fn write_steps(path: &Path, rec: &RunRecord) -> Result<(), HarnessError> {
    let rows = rec.samples.iter().map(|s| vec![fmt_f64(s.t), s.force_evaluations.to_string()]);
    write_rows(path, &["t", "force_evaluations"], rows)
}

fn intern(label: &str) -> Result<&'static str, HarnessError> {
    const KNOWN: [&str; 7] =
        ["cdm", "eg-alpha", "chung-lee", "fixed", "curvature", "apparent-frequency", "local-error"];
    KNOWN
        .iter()
        .find(|k| **k == label)
        .copied()
        .ok_or_else(|| HarnessError::Format(format!("unknown label `{label}` in run record")))
}

/// Cache format: one metadata comment line, then a CSV of every sample.
pub fn write_record(path: &Path, rec: &RunRecord) -> Result<(), HarnessError> {
    let dof = dof_of(rec);
    write_atomic(path, |w| {
        writeln!(
            w,
            "{RECORD_MAGIC} integrator={} controller={} force_evaluations={} accepted_steps={} \
             discarded_steps={} rejections={} dof={dof}",
            rec.integrator,
            rec.controller,
            rec.force_evaluations,
            rec.accepted_steps,
            rec.discarded_steps,
            rec.rejections
        )?;
        let mut out = csv_writer(w);
        let mut header: Vec<String> =
            ["t", "dt", "k_raw", "k_effective", "force_evaluations"].map(String::from).to_vec();
        header.extend(state_header(dof));
        out.write_record(&header)?;
        for s in &rec.samples {
            let mut row = vec![
                fmt_f64(s.t),
                fmt_f64(s.dt),
                fmt_f64(s.k_raw),
                s.k_effective.map(fmt_f64).unwrap_or_default(),
                s.force_evaluations.to_string(),
            ];
            state_fields(s, &mut row);
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    })
}

fn parse_f64(field: &str) -> Result<f64, HarnessError> {
    field.parse().map_err(|_| HarnessError::Format(format!("bad number `{field}`")))
}

pub fn read_record(path: &Path) -> Result<RunRecord, HarnessError> {
    let mut reader = BufReader::new(File::open(path)?);
    let mut meta = String::new();
    reader.read_line(&mut meta)?;
    let fields = meta
        .trim_end()
        .strip_prefix(RECORD_MAGIC)
        .ok_or_else(|| HarnessError::Format(format!("{} is not a run record", path.display())))?;
    let mut rec = RunRecord::default();
    let mut dof = 0usize;
    for kv in fields.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| HarnessError::Format(format!("bad field `{kv}`")))?;
        let count = || v.parse::<u64>().map_err(|_| HarnessError::Format(format!("bad count `{kv}`")));
        match k {
            "integrator" => rec.integrator = intern(v)?,
            "controller" => rec.controller = intern(v)?,
            "force_evaluations" => rec.force_evaluations = count()?,
            "accepted_steps" => rec.accepted_steps = count()?,
            "discarded_steps" => rec.discarded_steps = count()?,
            "rejections" => rec.rejections = count()?,
            "dof" => dof = count()? as usize,
            _ => return Err(HarnessError::Format(format!("unknown field `{k}`"))),
        }
    }
    let mut body = String::new();
    reader.read_to_string(&mut body)?;
    let mut csv = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let expected = 5 + 3 * dof;
    for row in csv.records() {
        let row = row?;
        if row.len() != expected {
            return Err(HarnessError::Format(format!("row has {} fields, expected {expected}", row.len())));
        }
        let num = |i: usize| parse_f64(&row[i]);
        let state = |offset: usize| (0..dof).map(|i| num(5 + offset * dof + i)).collect::<Result<Vec<_>, _>>();
        rec.samples.push(Sample {
            t: num(0)?,
            dt: num(1)?,
            k_raw: num(2)?,
            k_effective: if row[3].is_empty() { None } else { Some(num(3)?) },
            force_evaluations: row[4]
                .parse()
                .map_err(|_| HarnessError::Format(format!("bad count `{}`", &row[4])))?,
            d: state(0)?,
            v: state(1)?,
            a: state(2)?,
        });
    }
    Ok(rec)
}
