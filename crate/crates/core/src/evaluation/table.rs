use super::EvalError;
use std::io::{Read, Write};

/// A CSV table of strings with a header row.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    pub fn read<R: Read>(input: R) -> Result<Table, EvalError> {
        let mut r = csv::Reader::from_reader(input);
        let header = r
            .headers()
            .map_err(|e| EvalError::Csv(e.to_string()))?
            .iter()
            .map(String::from)
            .collect();
        let rows = r
            .records()
            .map(|rec| {
                rec.map(|rec| rec.iter().map(String::from).collect())
                    .map_err(|e| EvalError::Csv(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        Ok(Table { header, rows })
    }

    pub fn write<W: Write>(&self, out: W) -> Result<(), EvalError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)
            .map_err(|e| EvalError::Csv(e.to_string()))?;
        for row in &self.rows {
            w.write_record(row).map_err(|e| EvalError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| EvalError::Csv(e.to_string()))
    }
}
