use super::{Class, MlmeError};

/// Parameter points read from CSV, optionally with a `label` column.
#[derive(Debug, Clone, PartialEq)]
pub struct Pool {
    pub names: Vec<String>,
    pub points: Vec<Vec<f64>>,
    pub labels: Option<Vec<Class>>,
}

impl Pool {
    pub fn from_csv(text: &str) -> Result<Pool, MlmeError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers: Vec<String> =
            reader.headers().map_err(|e| MlmeError::Csv(e.to_string()))?.iter().map(str::to_string).collect();
        let label_col = headers.iter().position(|h| h == "label");
        let names: Vec<String> = headers.iter().filter(|h| *h != "label").cloned().collect();
        if names.is_empty() {
            return Err(MlmeError::Csv("no coordinate columns".into()));
        }
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| MlmeError::Csv(e.to_string()))?;
            let at = |msg: String| MlmeError::Csv(format!("line {}: {msg}", line + 2));
            let mut x = Vec::with_capacity(names.len());
            for (j, field) in record.iter().enumerate() {
                if Some(j) == label_col {
                    labels.push(match field {
                        "plausible" | "1" => Class::Plausible,
                        "implausible" | "0" => Class::Implausible,
                        other => return Err(at(format!("unknown label `{other}`"))),
                    });
                } else {
                    x.push(field.parse::<f64>().map_err(|_| at(format!("`{field}` is not a number")))?);
                }
            }
            points.push(x);
        }
        Ok(Pool { names, points, labels: label_col.map(|_| labels) })
    }

    /// Smallest box holding every point.
    pub fn bounds(&self) -> Vec<(f64, f64)> {
        (0..self.names.len())
            .map(|j| {
                self.points
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x[j]), hi.max(x[j])))
            })
            .collect()
    }
}
