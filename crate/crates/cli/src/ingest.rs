//! CSV ingestion and export.
//!
//! Schemas:
//!
//! - counts: header `y,x1,..,xk`, y a nonnegative integer
//! - durations: header `t,x1,..,xk`, t positive
//! - regression: header `y,x1,..,xk`, y real
//! - panel: long format `id,period,y` covering a complete N×T grid
//!
//! An intercept column is prepended to every design. Rows are numbered from 1
//! (the header is row 0).

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use calpha_core::data::{CountData, DurationData, ObservationSet, PanelData, RegressionData};
use calpha_core::numerics::Matrix;
use csv::StringRecord;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataKind {
    Counts,
    Durations,
    Panel,
}

impl DataKind {
    pub fn of(model: calpha_simlab::ModelKind) -> DataKind {
        use calpha_simlab::ModelKind;
        match model {
            ModelKind::Poisson => DataKind::Counts,
            ModelKind::ExponentialPh | ModelKind::WeibullPh => DataKind::Durations,
            ModelKind::GaussianPanel => DataKind::Panel,
        }
    }
}

struct Source<'a> {
    name: &'a str,
}

impl Source<'_> {
    fn parse_err(&self, row: usize, column: &str, message: impl Into<String>) -> Error {
        Error::Parse {
            source_name: self.name.to_string(),
            row,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn format_err(&self, message: impl Into<String>) -> Error {
        Error::Format {
            source_name: self.name.to_string(),
            message: message.into(),
        }
    }

    fn cell<'r>(&self, rec: &'r StringRecord, row: usize, idx: usize, column: &str) -> Result<&'r str> {
        match rec.get(idx) {
            Some(s) if !s.is_empty() => Ok(s),
            _ => Err(self.parse_err(row, column, "missing value")),
        }
    }

    fn real(&self, rec: &StringRecord, row: usize, idx: usize, column: &str) -> Result<f64> {
        let s = self.cell(rec, row, idx, column)?;
        let v: f64 = s
            .parse()
            .map_err(|_| self.parse_err(row, column, format!("not a number: '{s}'")))?;
        if !v.is_finite() {
            return Err(self.parse_err(row, column, format!("non-finite value '{s}'")));
        }
        Ok(v)
    }

    fn count(&self, rec: &StringRecord, row: usize, idx: usize, column: &str) -> Result<u64> {
        let s = self.cell(rec, row, idx, column)?;
        if let Ok(v) = s.parse::<u64>() {
            return Ok(v);
        }
        let msg = match s.parse::<f64>() {
            Ok(v) if v < 0.0 => format!("negative count {s}"),
            Ok(v) if v.is_nan() => "count is NaN".to_string(),
            Ok(_) => format!("count must be a nonnegative integer, got '{s}'"),
            Err(_) => format!("not a number: '{s}'"),
        };
        Err(self.parse_err(row, column, msg))
    }
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

fn records<R: Read>(src: &Source<'_>, rdr: &mut csv::Reader<R>, width: usize) -> Result<Vec<StringRecord>> {
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| src.parse_err(row, "", e.to_string()))?;
        if rec.len() != width {
            return Err(src.parse_err(row, "", format!("expected {width} fields, found {}", rec.len())));
        }
        out.push(rec);
    }
    if out.is_empty() {
        return Err(src.format_err("no data rows"));
    }
    Ok(out)
}

/// Checks a `<response>,x1,..,xk` header and returns k.
fn regression_header(src: &Source<'_>, header: &StringRecord, response: &str) -> Result<usize> {
    if header.get(0) != Some(response) {
        return Err(src.format_err(format!(
            "header must start with '{response}', found '{}'",
            header.get(0).unwrap_or("")
        )));
    }
    for (j, name) in header.iter().enumerate().skip(1) {
        if name != format!("x{j}") {
            return Err(src.format_err(format!("column {} must be named 'x{j}', found '{name}'", j + 1)));
        }
    }
    Ok(header.len() - 1)
}

fn covariates(src: &Source<'_>, recs: &[StringRecord], header: &StringRecord) -> Result<Vec<Vec<f64>>> {
    let k = header.len() - 1;
    if k == 0 {
        return Ok(Vec::new());
    }
    recs.iter()
        .enumerate()
        .map(|(i, rec)| (1..=k).map(|j| src.real(rec, i + 1, j, &header[j])).collect())
        .collect()
}

fn header_of<R: Read>(src: &Source<'_>, rdr: &mut csv::Reader<R>) -> Result<StringRecord> {
    rdr.headers()
        .cloned()
        .map_err(|e| src.format_err(format!("cannot read header: {e}")))
}

fn read_counts<R: Read>(src: &Source<'_>, input: R) -> Result<CountData> {
    let mut rdr = reader(input);
    let header = header_of(src, &mut rdr)?;
    regression_header(src, &header, "y")?;
    let recs = records(src, &mut rdr, header.len())?;
    let y = recs
        .iter()
        .enumerate()
        .map(|(i, rec)| src.count(rec, i + 1, 0, "y"))
        .collect::<Result<Vec<u64>>>()?;
    let cov = covariates(src, &recs, &header)?;
    Ok(CountData::from_covariates(y, &cov)?)
}

fn read_durations<R: Read>(src: &Source<'_>, input: R) -> Result<DurationData> {
    let mut rdr = reader(input);
    let header = header_of(src, &mut rdr)?;
    regression_header(src, &header, "t")?;
    let recs = records(src, &mut rdr, header.len())?;
    let t = recs
        .iter()
        .enumerate()
        .map(|(i, rec)| {
            let v = src.real(rec, i + 1, 0, "t")?;
            if v <= 0.0 {
                return Err(src.parse_err(i + 1, "t", format!("duration must be positive, got {v}")));
            }
            Ok(v)
        })
        .collect::<Result<Vec<f64>>>()?;
    let cov = covariates(src, &recs, &header)?;
    Ok(DurationData::from_covariates(t, &cov)?)
}

fn read_regression<R: Read>(src: &Source<'_>, input: R) -> Result<RegressionData> {
    let mut rdr = reader(input);
    let header = header_of(src, &mut rdr)?;
    regression_header(src, &header, "y")?;
    let recs = records(src, &mut rdr, header.len())?;
    let y = recs
        .iter()
        .enumerate()
        .map(|(i, rec)| src.real(rec, i + 1, 0, "y"))
        .collect::<Result<Vec<f64>>>()?;
    let cov = covariates(src, &recs, &header)?;
    Ok(RegressionData::from_covariates(y, &cov)?)
}

/// Individuals in order of first appearance, periods in ascending order.
fn read_panel<R: Read>(src: &Source<'_>, input: R) -> Result<PanelData> {
    let mut rdr = reader(input);
    let header = header_of(src, &mut rdr)?;
    if header.iter().collect::<Vec<_>>() != ["id", "period", "y"] {
        return Err(src.format_err(format!(
            "panel header must be 'id,period,y', found '{}'",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let recs = records(src, &mut rdr, 3)?;
    let mut ids: Vec<String> = Vec::new();
    let mut id_index: HashMap<String, usize> = HashMap::new();
    let mut periods = BTreeSet::new();
    let mut cells: HashMap<(usize, u64), f64> = HashMap::new();
    for (i, rec) in recs.iter().enumerate() {
        let row = i + 1;
        let id = src.cell(rec, row, 0, "id")?.to_string();
        let p = src.cell(rec, row, 1, "period")?;
        let period: u64 = p.parse().map_err(|_| {
            src.parse_err(
                row,
                "period",
                format!("period must be a nonnegative integer, got '{p}'"),
            )
        })?;
        let y = src.real(rec, row, 2, "y")?;
        let next = ids.len();
        let idx = *id_index.entry(id.clone()).or_insert_with(|| {
            ids.push(id.clone());
            next
        });
        periods.insert(period);
        if cells.insert((idx, period), y).is_some() {
            return Err(src.parse_err(row, "period", format!("duplicate cell (id={id}, period={period})")));
        }
    }
    let periods: Vec<u64> = periods.into_iter().collect();
    let mut y = Matrix::zeros(ids.len(), periods.len());
    for (i, id) in ids.iter().enumerate() {
        for (j, &p) in periods.iter().enumerate() {
            y[(i, j)] = *cells.get(&(i, p)).ok_or_else(|| Error::UnbalancedPanel {
                source_name: src.name.to_string(),
                id: id.clone(),
                period: p,
            })?;
        }
    }
    Ok(PanelData::new(y)?)
}

/// Parses CSV text from any reader; `source_name` labels error messages.
pub fn ingest_reader<R: Read>(input: R, source_name: &str, kind: DataKind) -> Result<ObservationSet> {
    let src = Source { name: source_name };
    Ok(match kind {
        DataKind::Counts => ObservationSet::Counts(read_counts(&src, input)?),
        DataKind::Durations => ObservationSet::Durations(read_durations(&src, input)?),
        DataKind::Panel => ObservationSet::Panel(read_panel(&src, input)?),
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Read {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn ingest(path: &Path, kind: DataKind) -> Result<ObservationSet> {
    ingest_reader(open(path)?, &path.display().to_string(), kind)
}

/// Real-response regression data (`y,x1,..,xk`) for the Gaussian IM comparison.
pub fn ingest_regression(path: &Path) -> Result<RegressionData> {
    read_regression(
        &Source {
            name: &path.display().to_string(),
        },
        open(path)?,
    )
}

fn write_rows<W: Write>(
    out: W,
    header: Vec<String>,
    rows: impl Iterator<Item = Vec<String>>,
    target: &str,
) -> Result<()> {
    let err = |e: csv::Error| Error::Write {
        target: target.to_string(),
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(out);
    w.write_record(&header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.flush().map_err(|e| Error::Write {
        target: target.to_string(),
        message: e.to_string(),
    })
}

fn design_rows(x: &Matrix<f64>, i: usize) -> impl Iterator<Item = String> + '_ {
    // column 0 is the intercept
    (1..x.ncols()).map(move |j| x[(i, j)].to_string())
}

fn design_header(first: &str, x: &Matrix<f64>) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain((1..x.ncols()).map(|j| format!("x{j}")))
        .collect()
}

/// Writes `data` in the schema [`ingest`] reads. Floats use the shortest
/// representation that round-trips, so re-ingesting is exact.
pub fn write_observations<W: Write>(out: W, data: &ObservationSet, target: &str) -> Result<()> {
    match data {
        ObservationSet::Counts(d) => {
            let x = d.x();
            let rows = (0..d.n()).map(|i| std::iter::once(d.y()[i].to_string()).chain(design_rows(x, i)).collect());
            write_rows(out, design_header("y", x), rows, target)
        }
        ObservationSet::Durations(d) => {
            let x = d.x();
            let rows = (0..d.n()).map(|i| std::iter::once(d.t()[i].to_string()).chain(design_rows(x, i)).collect());
            write_rows(out, design_header("t", x), rows, target)
        }
        ObservationSet::Panel(p) => {
            let y = p.y();
            let (n, t) = (p.n_individuals(), p.n_periods());
            let rows = (0..n).flat_map(|i| {
                (0..t).map(move |j| vec![(i + 1).to_string(), (j + 1).to_string(), y[(i, j)].to_string()])
            });
            write_rows(out, vec!["id".into(), "period".into(), "y".into()], rows, target)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, kind: DataKind) -> Result<ObservationSet> {
        ingest_reader(text.as_bytes(), "mem", kind)
    }

    #[test]
    fn counts_with_covariate() {
        match parse("y,x1\n0,0\n2,1\n1,1\n", DataKind::Counts).unwrap() {
            ObservationSet::Counts(d) => {
                assert_eq!((d.n(), d.k()), (3, 1));
                assert_eq!(d.y(), &[0, 2, 1]);
                assert_eq!(d.x()[(1, 0)], 1.0);
                assert_eq!(d.x()[(1, 1)], 1.0);
            }
            _ => panic!(),
        }
        // two rows cannot identify two coefficients
        assert!(matches!(
            parse("y,x1\n0,0\n2,1\n", DataKind::Counts),
            Err(Error::Core(calpha_core::Error::InvalidData(_)))
        ));
    }

    #[test]
    fn negative_duration_names_row_and_column() {
        match parse("t\n-1\n2\n", DataKind::Durations) {
            Err(Error::Parse { row, column, .. }) => assert_eq!((row, column.as_str()), (1, "t")),
            other => panic!("{other:?}"),
        }
        match parse("t,x1\n1.5,0\n2,\n", DataKind::Durations) {
            Err(Error::Parse {
                row, column, message, ..
            }) => {
                assert_eq!((row, column.as_str(), message.as_str()), (2, "x1", "missing value"))
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_counts() {
        for (text, row) in [("y\n1\n-2\n", 2), ("y\n1.5\n", 1), ("y\nNaN\n", 1), ("y\n3\nabc\n", 2)] {
            match parse(text, DataKind::Counts) {
                Err(Error::Parse { row: r, column, .. }) => assert_eq!((r, column.as_str()), (row, "y"), "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
        assert!(matches!(
            parse("y,x1\n1,nan\n", DataKind::Counts),
            Err(Error::Parse { row: 1, .. })
        ));
        assert!(matches!(
            parse("y,z\n1,2\n", DataKind::Counts),
            Err(Error::Format { .. })
        ));
        assert!(matches!(parse("y\n", DataKind::Counts), Err(Error::Format { .. })));
    }

    #[test]
    fn unbalanced_panel() {
        let mut text = String::from("id,period,y\n");
        for id in 1..=3 {
            for p in 1..=2 {
                if (id, p) != (3, 2) {
                    text.push_str(&format!("{id},{p},0.5\n"));
                }
            }
        }
        match parse(&text, DataKind::Panel) {
            Err(Error::UnbalancedPanel { id, period, .. }) => assert_eq!((id.as_str(), period), ("3", 2)),
            other => panic!("{other:?}"),
        }
        let dup = "id,period,y\n1,1,0\n1,1,2\n";
        assert!(matches!(parse(dup, DataKind::Panel), Err(Error::Parse { row: 2, .. })));
    }

    #[test]
    fn panel_orders_periods() {
        let text = "id,period,y\nb,2,4\nb,1,3\na,1,1\na,2,2\n";
        match parse(text, DataKind::Panel).unwrap() {
            ObservationSet::Panel(p) => {
                assert_eq!(p.y().row(0), &[3.0, 4.0]);
                assert_eq!(p.y().row(1), &[1.0, 2.0]);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn export_round_trip() {
        let text = "y,x1,x2\n0,0.1,3\n5,-2.5e-7,1\n2,12345.678901234567,0.3\n1,0.7,2\n";
        let d = parse(text, DataKind::Counts).unwrap();
        let mut buf = Vec::new();
        write_observations(&mut buf, &d, "mem").unwrap();
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap(), DataKind::Counts).unwrap(), d);
    }
}
