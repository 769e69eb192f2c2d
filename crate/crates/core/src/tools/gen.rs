use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::memsys::TX_BYTES;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    Random,
    Stream,
}

impl std::str::FromStr for Pattern {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "random" => Ok(Pattern::Random),
            "stream" => Ok(Pattern::Stream),
            other => Err(format!("unknown pattern '{other}' (expected random or stream)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct GenOptions {
    pub pattern: Pattern,
    pub count: u64,
    /// Reads per write.
    pub rw_ratio: u64,
    pub seed: u64,
    /// Bubble count written on every entry.
    pub bubbles: u64,
    /// Random addresses fall in `0..space`.
    pub space: u64,
    /// First stream address.
    pub start: u64,
}

impl Default for GenOptions {
    fn default() -> Self {
        GenOptions {
            pattern: Pattern::Random,
            count: 1000,
            rw_ratio: 4,
            seed: 0,
            bubbles: 0,
            space: 1 << 34,
            start: 0,
        }
    }
}

/// Writes a synthetic trace. Every `(rw_ratio + 1)`-th entry is a write.
pub fn generate<W: Write>(opts: &GenOptions, out: W) -> io::Result<()> {
    let mut out = io::BufWriter::new(out);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let lines = (opts.space / TX_BYTES).max(1);
    for i in 0..opts.count {
        let op = if i % (opts.rw_ratio + 1) == opts.rw_ratio { 'W' } else { 'R' };
        let addr = match opts.pattern {
            Pattern::Stream => opts.start + i * TX_BYTES,
            Pattern::Random => rng.gen_range(0..lines) * TX_BYTES,
        };
        writeln!(out, "{} {op} {addr:#x}", opts.bubbles)?;
    }
    out.flush()
}

/// [`generate`] into a string.
pub fn generate_string(opts: &GenOptions) -> String {
    let mut buf = Vec::new();
    generate(opts, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}
