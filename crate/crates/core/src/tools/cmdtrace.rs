use std::io::Read;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("command trace line {line}: {reason}")]
    Parse { line: u64, reason: String },
}

/// One row of a recorded command trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandRecord {
    /// 1-based line in the source file, header included.
    pub line: u64,
    pub clk: u64,
    pub cmd: String,
    /// One index per level, `-1` below the command's scope.
    pub addr: Vec<i64>,
}

/// Streams records from a CSV command trace, checking the header against
/// the expected level names.
pub fn read_command_trace<R: Read>(
    input: R,
    levels: &[String],
) -> Result<impl Iterator<Item = Result<CommandRecord, TraceError>>, TraceError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = reader.headers().map_err(|e| TraceError::Parse {
        line: 1,
        reason: e.to_string(),
    })?;
    let expected: Vec<&str> = ["clk", "cmd"].into_iter().chain(levels.iter().map(String::as_str)).collect();
    let got: Vec<&str> = header.iter().map(str::trim).collect();
    if got != expected {
        return Err(TraceError::Parse {
            line: 1,
            reason: format!("expected header '{}', got '{}'", expected.join(","), got.join(",")),
        });
    }
    let nlev = levels.len();
    Ok(reader.into_records().map(move |r| {
        let rec = r.map_err(|e| TraceError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |reason: String| TraceError::Parse { line, reason };
        if rec.len() != nlev + 2 {
            return Err(bad(format!("expected {} fields, got {}", nlev + 2, rec.len())));
        }
        let clk = rec[0].trim().parse().map_err(|_| bad(format!("bad cycle '{}'", &rec[0])))?;
        let cmd = rec[1].trim().to_string();
        let addr = rec
            .iter()
            .skip(2)
            .map(|f| f.trim().parse::<i64>().map_err(|_| bad(format!("bad index '{f}'"))))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CommandRecord { line, clk, cmd, addr })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn levels() -> Vec<String> {
        ["channel", "rank", "bank"].iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn reads_records_with_lines() {
        let text = "clk,cmd,channel,rank,bank\n0,ACT,0,1,2\n5,PREab,0,1,-1\n";
        let recs: Vec<_> = read_command_trace(text.as_bytes(), &levels())
            .unwrap()
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[1].line, 3);
        assert_eq!(recs[1].addr, vec![0, 1, -1]);
    }

    #[test]
    fn header_mismatch_is_rejected() {
        let text = "clk,cmd,channel,bank\n";
        assert!(read_command_trace(text.as_bytes(), &levels()).is_err());
    }

    #[test]
    fn bad_fields_report_their_line() {
        let text = "clk,cmd,channel,rank,bank\n0,ACT,0,1,2\nx,ACT,0,1,2\n";
        let mut it = read_command_trace(text.as_bytes(), &levels()).unwrap();
        assert!(it.next().unwrap().is_ok());
        match it.next().unwrap() {
            Err(TraceError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }
}
