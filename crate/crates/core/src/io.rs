//! CSV and JSON input/output. Numbers are written with 17 significant digits;
//! files are written to a temporary sibling and renamed into place.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::{AcvEstimate, DensityEstimate, PsdEstimate};
use crate::error::{Error, Result};
use crate::frame::{ComovingFrame, CycleParameterization};
use crate::hopf::PhaseDeviationPath;
use crate::sde::Trajectory;

/// Full-precision text form of a double.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column-oriented numeric table.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(headers: Vec<String>, columns: Vec<Vec<f64>>) -> Result<Self> {
        if headers.len() != columns.len() {
            return Err(Error::Config("header and column counts differ".into()));
        }
        if let Some(c) = columns.first() {
            if columns.iter().any(|d| d.len() != c.len()) {
                return Err(Error::Config("columns have different lengths".into()));
            }
        }
        Ok(Self { headers, columns })
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.headers
            .iter()
            .position(|h| h == name)
            .map(|i| self.columns[i].as_slice())
    }

    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.headers).map_err(csv_io)?;
        let mut record = Vec::with_capacity(self.headers.len());
        for k in 0..self.rows() {
            record.clear();
            record.extend(self.columns.iter().map(|c| fmt_f64(c[k])));
            w.write_record(&record).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Parses a header line followed by numeric rows. `name` labels errors.
    pub fn read_from<R: Read>(input: R, name: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .from_reader(input);
        let parse_err = |line: u64, message: String| Error::Parse {
            path: name.to_string(),
            line,
            message,
        };
        let headers: Vec<String> = reader
            .headers()
            .map_err(|e| parse_err(1, e.to_string()))?
            .iter()
            .map(str::to_string)
            .collect();
        if headers.is_empty() || headers.iter().all(String::is_empty) {
            return Err(parse_err(1, "missing header".into()));
        }
        let mut columns = vec![Vec::new(); headers.len()];
        let mut record = csv::StringRecord::new();
        loop {
            match reader.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {
                    let line = record.position().map_or(0, |p| p.line());
                    for (j, cell) in record.iter().enumerate() {
                        let v: f64 = cell.parse().map_err(|_| {
                            parse_err(
                                line,
                                format!("non-numeric value '{cell}' in column '{}'", headers[j]),
                            )
                        })?;
                        columns[j].push(v);
                    }
                }
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    let message = match e.kind() {
                        csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                            format!("ragged row: {len} fields, expected {expected_len}")
                        }
                        _ => e.to_string(),
                    };
                    return Err(parse_err(line, message));
                }
            }
        }
        Ok(Self { headers, columns })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        Self::read_from(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, |w| self.write_to(w))
    }
}

fn csv_io(e: csv::Error) -> Error {
    let msg = e.to_string();
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        _ => Error::Io(std::io::Error::other(msg)),
    }
}

/// Writes via a temporary file in the target directory, then renames.
pub fn write_atomic<F>(path: &Path, body: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        body(&mut w)?;
        w.flush()?;
    }
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| Error::Io(e.into()))?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

/// `t,<label1>,…`
pub fn trajectory_table(traj: &Trajectory) -> Table {
    let mut headers = vec!["t".to_string()];
    headers.extend(traj.channel_labels.iter().cloned());
    let mut columns = vec![(0..traj.len()).map(|k| traj.time(k)).collect()];
    columns.extend((0..traj.width()).map(|j| traj.column(j)));
    Table { headers, columns }
}

/// Inverse of [`trajectory_table`]; `dt` from the first two times unless
/// given. The seed is not stored in CSV and is set to 0.
pub fn trajectory_from_table(table: &Table, dt: Option<f64>) -> Result<Trajectory> {
    let t = table
        .column("t")
        .ok_or_else(|| Error::Config("trajectory CSV needs a 't' column".into()))?;
    let dt = match dt {
        Some(d) => d,
        None if t.len() >= 2 => t[1] - t[0],
        None => return Err(Error::Config("cannot infer dt from fewer than 2 rows".into())),
    };
    let channels: Vec<usize> = (0..table.headers.len())
        .filter(|&i| table.headers[i] != "t")
        .collect();
    let labels = channels.iter().map(|&i| table.headers[i].clone()).collect();
    let mut values = Vec::with_capacity(table.rows() * channels.len());
    for k in 0..table.rows() {
        values.extend(channels.iter().map(|&i| table.columns[i][k]));
    }
    Trajectory::from_rows(dt, labels, 0, values)
}

/// `t,tau,z,x,y`
pub fn phase_deviation_table(path: &PhaseDeviationPath) -> Table {
    Table {
        headers: ["t", "tau", "z", "x", "y"].map(String::from).to_vec(),
        columns: vec![
            (0..path.len()).map(|k| k as f64 * path.dt).collect(),
            path.tau.clone(),
            path.z.clone(),
            path.x(),
            path.y(),
        ],
    }
}

pub fn acv_table(acv: &AcvEstimate) -> Table {
    Table {
        headers: vec!["lag".into(), "acv".into()],
        columns: vec![acv.lags.clone(), acv.values.clone()],
    }
}

pub fn psd_table(psd: &PsdEstimate) -> Table {
    Table {
        headers: vec!["omega".into(), "psd".into()],
        columns: vec![psd.omegas.clone(), psd.values.clone()],
    }
}

pub fn density_table(d: &DensityEstimate) -> Table {
    Table {
        headers: vec!["x".into(), "density".into()],
        columns: vec![d.grid.clone(), d.density.clone()],
    }
}

/// `t, L_i, T_i, speed, kappa, U_ij` per grid sample (`U` row-major).
pub fn cycle_frame_table(cycle: &CycleParameterization, frame: &ComovingFrame) -> Table {
    let n = cycle.dimension();
    let mut headers = vec!["t".to_string()];
    headers.extend((1..=n).map(|i| format!("L{i}")));
    headers.extend((1..=n).map(|i| format!("T{i}")));
    headers.push("speed".into());
    headers.push("kappa".into());
    for i in 1..=n {
        headers.extend((1..=n).map(|j| format!("U{i}{j}")));
    }
    let mut columns = vec![cycle.grid.clone()];
    for i in 0..n {
        columns.push(cycle.l.iter().map(|p| p[i]).collect());
    }
    for i in 0..n {
        columns.push(cycle.tangent.iter().map(|p| p[i]).collect());
    }
    columns.push(cycle.speed.clone());
    columns.push(cycle.kappa.clone());
    for i in 0..n {
        for j in 0..n {
            columns.push(frame.u.iter().map(|u| u[(i, j)]).collect());
        }
    }
    Table { headers, columns }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let vals = vec![0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23];
        let t = Table::new(vec!["a".into()], vec![vals.clone()]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.csv");
        t.write(&p).unwrap();
        let back = Table::read(&p).unwrap();
        assert_eq!(back.columns[0], vals);
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = Table::read_from("t,x\n0,1\n1,abc\n".as_bytes(), "in.csv").unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("abc"));
            }
            e => panic!("{e:?}"),
        }
        let err = Table::read_from("t,x\n0,1\n1\n".as_bytes(), "in.csv").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn trajectory_header() {
        let traj = Trajectory::from_rows(0.5, vec!["x".into(), "y".into()], 1, vec![1.0, 2.0, 3.0, 4.0])
            .unwrap();
        let mut buf = Vec::new();
        trajectory_table(&traj).write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,x,y\n"));
        let back = trajectory_from_table(&Table::read_from(text.as_bytes(), "-").unwrap(), None)
            .unwrap();
        assert_eq!(back.values(), traj.values());
        assert_eq!(back.dt, 0.5);
    }
}
