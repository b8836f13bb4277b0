use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const METRICS_HEADER: [&str; 8] = ["model", "degree", "mse", "nll", "accuracy", "risk", "seconds", "seed"];

/// One result row: a model evaluated on one dataset degree.
///
/// Inapplicable metrics are `None` and serialize as empty CSV fields.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRecord {
    pub model: String,
    pub degree: usize,
    pub mse: Option<f64>,
    pub nll: Option<f64>,
    pub accuracy: Option<f64>,
    pub risk: Option<f64>,
    pub seconds: Option<f64>,
    pub seed: u64,
}

impl MetricsRecord {
    pub fn is_finite(&self) -> bool {
        [self.mse, self.nll, self.accuracy, self.risk, self.seconds]
            .iter()
            .flatten()
            .all(|v| v.is_finite())
    }
}

fn field(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_metrics_csv<W: Write>(out: W, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(METRICS_HEADER)?;
    for r in records {
        w.write_record([
            r.model.clone(),
            r.degree.to_string(),
            field(r.mse),
            field(r.nll),
            field(r.accuracy),
            field(r.risk),
            field(r.seconds),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<MetricsRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().ne(METRICS_HEADER) {
        return Err(Error::parse(1, format!("expected header {}", METRICS_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec?;
        let num = |j: usize| -> Result<Option<f64>> {
            let s = &rec[j];
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|_| Error::parse(line, format!("bad number `{s}`")))
            }
        };
        out.push(MetricsRecord {
            model: rec[0].to_string(),
            degree: rec[1].parse().map_err(|_| Error::parse(line, "bad degree"))?,
            mse: num(2)?,
            nll: num(3)?,
            accuracy: num(4)?,
            risk: num(5)?,
            seconds: num(6)?,
            seed: rec[7].parse().map_err(|_| Error::parse(line, "bad seed"))?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_has_documented_schema_and_empty_fields() {
        let rec = MetricsRecord {
            model: "blr".into(),
            degree: 2,
            mse: Some(0.25),
            nll: Some(-0.5),
            accuracy: None,
            risk: Some(0.26),
            seconds: None,
            seed: 7,
        };
        let mut buf = Vec::new();
        write_metrics_csv(&mut buf, std::slice::from_ref(&rec)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "model,degree,mse,nll,accuracy,risk,seconds,seed\nblr,2,0.25,-0.5,,0.26,,7\n");
        assert_eq!(read_metrics_csv(&buf[..]).unwrap(), vec![rec]);
    }

    #[test]
    fn bad_rows_report_line_numbers() {
        let text = "model,degree,mse,nll,accuracy,risk,seconds,seed\nblr,1,x,,,,,1\n";
        match read_metrics_csv(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }
}
