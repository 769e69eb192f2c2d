use std::fmt;
use std::ops::Index;

/// Deepest organization hierarchy supported by [`AddrVec`].
pub const MAX_LEVELS: usize = 8;

/// Per-level indices of a decoded address. Levels below a command's scope
/// hold `-1`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct AddrVec {
    idx: [i32; MAX_LEVELS],
    len: u8,
}

impl AddrVec {
    /// All levels unset.
    pub fn unset(len: usize) -> Self {
        assert!(len <= MAX_LEVELS, "hierarchy deeper than {MAX_LEVELS} levels");
        AddrVec {
            idx: [-1; MAX_LEVELS],
            len: len as u8,
        }
    }

    pub fn from_slice(values: &[i64]) -> Self {
        let mut v = AddrVec::unset(values.len());
        for (i, &x) in values.iter().enumerate() {
            v.idx[i] = x as i32;
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Index at `level`, or `None` when the level is unset.
    pub fn get(&self, level: usize) -> Option<usize> {
        let v = self.idx[level];
        (v >= 0).then_some(v as usize)
    }

    pub fn set(&mut self, level: usize, value: usize) {
        debug_assert!(level < self.len());
        self.idx[level] = value as i32;
    }

    /// Copy with every level deeper than `depth` cleared.
    pub fn truncated(&self, depth: usize) -> Self {
        let mut v = *self;
        for l in (depth + 1)..v.len() {
            v.idx[l] = -1;
        }
        v
    }

    pub fn as_slice(&self) -> &[i32] {
        &self.idx[..self.len()]
    }
}

impl Index<usize> for AddrVec {
    type Output = i32;

    fn index(&self, level: usize) -> &i32 {
        &self.idx[..self.len()][level]
    }
}

impl fmt::Debug for AddrVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.as_slice())
    }
}

impl fmt::Display for AddrVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.as_slice().iter().map(|v| v.to_string()).collect();
        write!(f, "[{}]", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn truncation_clears_deeper_levels() {
        let a = AddrVec::from_slice(&[0, 1, 2, 3, 100, 7]);
        let t = a.truncated(1);
        assert_eq!(t.as_slice(), &[0, 1, -1, -1, -1, -1]);
        assert_eq!(t.get(1), Some(1));
        assert_eq!(t.get(2), None);
    }
}
