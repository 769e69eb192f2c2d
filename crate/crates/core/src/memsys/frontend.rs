use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::PathBuf;

use super::SimError;
use crate::controller::Request;
use crate::dramspec::Clk;
use crate::registry::{BuildError, Catalog, Factory};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Access {
    pub write: bool,
    pub addr: u64,
}

/// `<bubbles> <R|W> <hex-addr>`
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceEntry {
    pub bubbles: u64,
    pub access: Access,
}

/// Parses one trace line. `Ok(None)` for blank and comment-only lines.
pub fn parse_trace_line(line: &str) -> Result<Option<TraceEntry>, String> {
    let body = line.split('#').next().unwrap_or("").trim();
    if body.is_empty() {
        return Ok(None);
    }
    let toks: Vec<&str> = body.split_whitespace().collect();
    let [bubbles, op, addr] = toks[..] else {
        return Err(format!("expected '<bubbles> <R|W> <hex-addr>', got '{body}'"));
    };
    let bubbles = bubbles
        .parse()
        .map_err(|_| format!("bad bubble count '{bubbles}'"))?;
    let write = match op {
        "R" => false,
        "W" => true,
        other => return Err(format!("bad operation '{other}'")),
    };
    let digits = addr
        .strip_prefix("0x")
        .or_else(|| addr.strip_prefix("0X"))
        .unwrap_or(addr);
    let addr = u64::from_str_radix(digits, 16).map_err(|_| format!("bad address '{addr}'"))?;
    Ok(Some(TraceEntry {
        bubbles,
        access: Access { write, addr },
    }))
}

/// Streams entries from a trace without loading it whole.
pub struct TraceReader<R> {
    input: R,
    line_no: usize,
    buf: String,
}

impl<R: BufRead> TraceReader<R> {
    pub fn new(input: R) -> Self {
        TraceReader {
            input,
            line_no: 0,
            buf: String::new(),
        }
    }

    pub fn line_no(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for TraceReader<R> {
    type Item = Result<TraceEntry, SimError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            self.buf.clear();
            match self.input.read_line(&mut self.buf) {
                Ok(0) => return None,
                Ok(_) => {}
                Err(e) => {
                    return Some(Err(SimError::Trace {
                        line: self.line_no + 1,
                        reason: e.to_string(),
                    }))
                }
            }
            self.line_no += 1;
            match parse_trace_line(&self.buf) {
                Ok(Some(e)) => return Some(Ok(e)),
                Ok(None) => continue,
                Err(reason) => {
                    return Some(Err(SimError::Trace {
                        line: self.line_no,
                        reason,
                    }))
                }
            }
        }
    }
}

pub trait Frontend: Send {
    /// The access to offer at `clk`, if one is due. Does not consume it.
    fn peek(&mut self, clk: Clk) -> Result<Option<Access>, SimError>;
    /// The memory system accepted the access last returned by `peek`.
    fn accept(&mut self, clk: Clk);
    fn on_complete(&mut self, _req: &Request) {}
    /// No further accesses will be offered.
    fn is_done(&self) -> bool;
    fn consumed(&self) -> u64;
}

/// Replays a bubble-annotated trace. An entry becomes due `bubbles` cycles
/// after the previous acceptance, and at most one access is offered per
/// cycle.
pub struct TraceFrontend {
    reader: TraceReader<Box<dyn BufRead + Send>>,
    next: Option<TraceEntry>,
    error: Option<SimError>,
    last_accept: Clk,
    consumed: u64,
    completed: u64,
}

impl TraceFrontend {
    pub fn new(input: Box<dyn BufRead + Send>) -> Self {
        let mut f = TraceFrontend {
            reader: TraceReader::new(input),
            next: None,
            error: None,
            last_accept: 0,
            consumed: 0,
            completed: 0,
        };
        f.advance();
        f
    }

    pub fn from_text(text: &str) -> Self {
        TraceFrontend::new(Box::new(std::io::Cursor::new(text.to_string().into_bytes())))
    }

    pub fn open(path: &std::path::Path) -> Result<Self, SimError> {
        let file = File::open(path).map_err(|source| SimError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(TraceFrontend::new(Box::new(BufReader::new(file))))
    }

    pub fn from_reader(input: impl Read + Send + 'static) -> Self {
        TraceFrontend::new(Box::new(BufReader::new(input)))
    }

    fn advance(&mut self) {
        self.next = match self.reader.next() {
            Some(Ok(e)) => Some(e),
            Some(Err(e)) => {
                self.error = Some(e);
                None
            }
            None => None,
        };
    }

    pub fn completed(&self) -> u64 {
        self.completed
    }
}

impl Frontend for TraceFrontend {
    fn peek(&mut self, clk: Clk) -> Result<Option<Access>, SimError> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        Ok(self
            .next
            .filter(|e| clk >= self.last_accept + e.bubbles)
            .map(|e| e.access))
    }

    fn accept(&mut self, clk: Clk) {
        self.last_accept = clk;
        self.consumed += 1;
        self.advance();
    }

    fn on_complete(&mut self, _req: &Request) {
        self.completed += 1;
    }

    fn is_done(&self) -> bool {
        self.next.is_none() && self.error.is_none()
    }

    fn consumed(&self) -> u64 {
        self.consumed
    }
}

pub(super) fn register(catalog: &mut Catalog) -> Result<(), BuildError> {
    catalog.register_implementation(
        "Frontend",
        "TraceFrontend",
        Factory::frontend(|node, _ctx| {
            let path: PathBuf = node.required("path")?;
            let f = TraceFrontend::open(&path).map_err(|e| node.bad_param("path", e.to_string()))?;
            Ok(Box::new(f))
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_format() {
        let e = parse_trace_line("3 W 0x1f40  # store").unwrap().unwrap();
        assert_eq!(e.bubbles, 3);
        assert_eq!(e.access, Access { write: true, addr: 0x1f40 });
        assert_eq!(parse_trace_line("   # only a comment").unwrap(), None);
        assert!(parse_trace_line("3 X 0x40").is_err());
        assert!(parse_trace_line("R 0x40").is_err());
    }

    #[test]
    fn parse_errors_report_the_line() {
        let mut r = TraceReader::new("0 R 0x0\n\n# c\n1 Q 0x40\n".as_bytes());
        assert!(r.next().unwrap().is_ok());
        match r.next().unwrap() {
            Err(SimError::Trace { line, .. }) => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bubbles_count_from_the_previous_acceptance() {
        let mut f = TraceFrontend::from_text("0 R 0x40\n3 R 0x80\n");
        assert!(f.peek(0).unwrap().is_some());
        f.accept(0);
        assert!(f.peek(1).unwrap().is_none());
        assert!(f.peek(2).unwrap().is_none());
        assert_eq!(f.peek(3).unwrap().map(|a| a.addr), Some(0x80));
    }

    #[test]
    fn rejected_entries_are_retried_not_consumed() {
        let mut f = TraceFrontend::from_text("0 R 0x40\n");
        for clk in 0..5 {
            assert!(f.peek(clk).unwrap().is_some());
        }
        f.accept(5);
        assert_eq!(f.consumed(), 1);
        assert!(f.is_done());
    }

    #[test]
    fn empty_trace_is_done_immediately() {
        assert!(TraceFrontend::from_text("# nothing\n").is_done());
    }
}
