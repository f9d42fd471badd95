//! Ground-acceleration CSV input (`time,accel`).

use std::path::Path;

use iga_dual::dynamics::Signal;

use crate::error::CliError;

/// Parses CSV text with header `time,accel`.
pub fn parse_signal_csv(text: &str) -> Result<Signal<f64>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Data(format!("signal header: {e}")))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names != ["time", "accel"] {
        return Err(CliError::Data(format!(
            "signal header must be \"time,accel\", got \"{}\"",
            names.join(",")
        )));
    }
    let mut times = Vec::new();
    let mut accel = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| CliError::Data(format!("signal line {line}: {e}")))?;
        if record.len() != 2 {
            return Err(CliError::Data(format!(
                "signal line {line}: expected 2 fields, got {}",
                record.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| CliError::Data(format!("signal line {line}: \"{s}\" is not a number")))
        };
        let t = parse(&record[0])?;
        let a = parse(&record[1])?;
        if let Some(&prev) = times.last() {
            if !(t > prev) {
                return Err(CliError::Data(format!(
                    "signal line {line}: time {t} not greater than previous {prev}"
                )));
            }
        }
        times.push(t);
        accel.push(a);
    }
    Signal::new(times, accel).map_err(|e| CliError::Data(format!("signal: {e}")))
}

/// Reads a signal CSV file.
pub fn read_signal_csv(path: &Path) -> Result<Signal<f64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_signal_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_signal() {
        let s = parse_signal_csv("time,accel\n0,0\n1,2\n").unwrap();
        assert_eq!(s.times(), &[0.0, 1.0]);
        assert_eq!(s.accel(), &[0.0, 2.0]);
    }

    #[test]
    fn crlf_accepted() {
        let s = parse_signal_csv("time,accel\r\n0,1.5\r\n0.5,-2e-1\r\n").unwrap();
        assert_eq!(s.accel(), &[1.5, -0.2]);
    }

    #[test]
    fn shuffled_rows_rejected() {
        let e = parse_signal_csv("time,accel\n1,0\n0,2\n").unwrap_err();
        assert!(e.to_string().contains("line 3"), "{e}");
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn malformed_rejected() {
        assert!(parse_signal_csv("t,a\n0,0\n1,1\n").is_err());
        assert!(parse_signal_csv("time,accel\n0,x\n1,1\n")
            .unwrap_err()
            .to_string()
            .contains("not a number"));
        assert!(parse_signal_csv("time,accel\n0,0\n").is_err());
    }
}
