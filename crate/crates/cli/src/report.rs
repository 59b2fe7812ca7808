use serde_json::Value;

use crate::{CliError, Format};

/// A rendered-on-demand report: JSON body plus a CSV view.
#[derive(Debug, Clone)]
pub struct Report {
    pub json: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    /// Extra `# key=value` lines ahead of the CSV header.
    pub notes: Vec<(String, String)>,
    pub exit_code: i32,
}

impl Report {
    pub fn new(json: Value, header: &[&str]) -> Self {
        Report {
            json,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
            exit_code: crate::EXIT_OK,
        }
    }

    pub fn render(&self, format: Format, config: &Value) -> Result<String, CliError> {
        match format {
            Format::Json => {
                let mut body = serde_json::Map::new();
                body.insert("config".into(), config.clone());
                if let Value::Object(m) = &self.json {
                    for (k, v) in m {
                        body.insert(k.clone(), v.clone());
                    }
                }
                let mut s = serde_json::to_string_pretty(&Value::Object(body)).expect("json");
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                let mut s = format!("# config={}\n", serde_json::to_string(config).expect("json"));
                for (k, v) in &self.notes {
                    s.push_str(&format!("# {k}={v}\n"));
                }
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).map_err(|e| CliError::Io(e.to_string()))?;
                for r in &self.rows {
                    w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
                }
                let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
                s.push_str(&String::from_utf8(bytes).expect("utf8"));
                Ok(s)
            }
        }
    }
}

/// JSON scalar as a CSV cell; null becomes empty.
pub fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
