//! Bounds-checked cursor over a byte slice. Every read returns `None` past the
//! end instead of panicking.

use crate::model::Endianness;

#[derive(Clone, Copy, Debug)]
pub(crate) struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    endian: Endianness,
}

impl<'a> Cursor<'a> {
    pub fn new(data: &'a [u8], endian: Endianness) -> Self {
        Cursor { data, pos: 0, endian }
    }

    pub fn at(data: &'a [u8], pos: usize, endian: Endianness) -> Self {
        Cursor { data, pos, endian }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.pos >= self.data.len()
    }

    pub fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.data.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    pub fn skip(&mut self, n: u64) -> Option<()> {
        self.take(usize::try_from(n).ok()?).map(|_| ())
    }

    pub fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    pub fn u16(&mut self) -> Option<u16> {
        let b: [u8; 2] = self.take(2)?.try_into().ok()?;
        Some(match self.endian {
            Endianness::Little => u16::from_le_bytes(b),
            Endianness::Big => u16::from_be_bytes(b),
        })
    }

    pub fn u32(&mut self) -> Option<u32> {
        let b: [u8; 4] = self.take(4)?.try_into().ok()?;
        Some(match self.endian {
            Endianness::Little => u32::from_le_bytes(b),
            Endianness::Big => u32::from_be_bytes(b),
        })
    }

    pub fn u64(&mut self) -> Option<u64> {
        let b: [u8; 8] = self.take(8)?.try_into().ok()?;
        Some(match self.endian {
            Endianness::Little => u64::from_le_bytes(b),
            Endianness::Big => u64::from_be_bytes(b),
        })
    }

    /// Unsigned integer of 1, 2, 3, 4 or 8 bytes.
    pub fn uint(&mut self, size: u8) -> Option<u64> {
        match size {
            1 => self.u8().map(u64::from),
            2 => self.u16().map(u64::from),
            3 => {
                let b = self.take(3)?;
                Some(match self.endian {
                    Endianness::Little => {
                        u64::from(b[0]) | u64::from(b[1]) << 8 | u64::from(b[2]) << 16
                    }
                    Endianness::Big => {
                        u64::from(b[2]) | u64::from(b[1]) << 8 | u64::from(b[0]) << 16
                    }
                })
            }
            4 => self.u32().map(u64::from),
            8 => self.u64(),
            _ => None,
        }
    }

    pub fn uleb(&mut self) -> Option<u64> {
        let mut result = 0u64;
        let mut shift = 0u32;
        loop {
            let byte = self.u8()?;
            if shift < 64 {
                result |= u64::from(byte & 0x7f) << shift;
            }
            shift += 7;
            if byte & 0x80 == 0 {
                return Some(result);
            }
        }
    }

    pub fn sleb(&mut self) -> Option<i64> {
        let mut result = 0i64;
        let mut shift = 0u32;
        loop {
            let byte = self.u8()?;
            if shift < 64 {
                result |= i64::from(byte & 0x7f) << shift;
            }
            shift += 7;
            if byte & 0x80 == 0 {
                if shift < 64 && byte & 0x40 != 0 {
                    result |= -1i64 << shift;
                }
                return Some(result);
            }
        }
    }

    /// NUL-terminated string; the terminator is consumed.
    pub fn cstr(&mut self) -> Option<&'a [u8]> {
        let rest = self.data.get(self.pos..)?;
        let len = rest.iter().position(|&b| b == 0)?;
        self.pos += len + 1;
        Some(&rest[..len])
    }
}

/// NUL-terminated string at `offset` in a string table.
pub(crate) fn str_at(table: &[u8], offset: u64) -> Option<String> {
    let start = usize::try_from(offset).ok()?;
    let rest = table.get(start..)?;
    let len = rest.iter().position(|&b| b == 0)?;
    Some(String::from_utf8_lossy(&rest[..len]).into_owned())
}

/// Append-only writer mirroring [`Cursor`].
#[derive(Clone, Debug)]
pub(crate) struct Writer {
    pub buf: Vec<u8>,
    endian: Endianness,
}

impl Writer {
    pub fn new(endian: Endianness) -> Self {
        Writer { buf: Vec::new(), endian }
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        match self.endian {
            Endianness::Little => self.buf.extend_from_slice(&v.to_le_bytes()),
            Endianness::Big => self.buf.extend_from_slice(&v.to_be_bytes()),
        }
    }

    pub fn u32(&mut self, v: u32) {
        match self.endian {
            Endianness::Little => self.buf.extend_from_slice(&v.to_le_bytes()),
            Endianness::Big => self.buf.extend_from_slice(&v.to_be_bytes()),
        }
    }

    pub fn u64(&mut self, v: u64) {
        match self.endian {
            Endianness::Little => self.buf.extend_from_slice(&v.to_le_bytes()),
            Endianness::Big => self.buf.extend_from_slice(&v.to_be_bytes()),
        }
    }

    /// Writes `v` truncated to `size` bytes (1, 2, 4 or 8).
    pub fn uint(&mut self, size: u8, v: u64) {
        match size {
            1 => self.u8(v as u8),
            2 => self.u16(v as u16),
            4 => self.u32(v as u32),
            _ => self.u64(v),
        }
    }

    pub fn uleb(&mut self, mut v: u64) {
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                self.buf.push(byte);
                return;
            }
            self.buf.push(byte | 0x80);
        }
    }

    pub fn sleb(&mut self, mut v: i64) {
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            let done = (v == 0 && byte & 0x40 == 0) || (v == -1 && byte & 0x40 != 0);
            if done {
                self.buf.push(byte);
                return;
            }
            self.buf.push(byte | 0x80);
        }
    }

    pub fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
    }

    pub fn cstr(&mut self, s: &str) {
        self.buf.extend_from_slice(s.as_bytes());
        self.buf.push(0);
    }

    pub fn align(&mut self, to: usize) {
        while !self.buf.len().is_multiple_of(to) {
            self.buf.push(0);
        }
    }

    /// Overwrites a previously written u32 at `pos`.
    pub fn patch_u32(&mut self, pos: usize, v: u32) {
        let b = match self.endian {
            Endianness::Little => v.to_le_bytes(),
            Endianness::Big => v.to_be_bytes(),
        };
        self.buf[pos..pos + 4].copy_from_slice(&b);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn leb_known_values() {
        let mut c = Cursor::new(&[0xe5, 0x8e, 0x26], Endianness::Little);
        assert_eq!(c.uleb(), Some(624485));
        let mut c = Cursor::new(&[0xc0, 0xbb, 0x78], Endianness::Little);
        assert_eq!(c.sleb(), Some(-123456));
    }

    #[test]
    fn reads_past_end_are_none() {
        let mut c = Cursor::new(&[1, 2, 3], Endianness::Big);
        assert_eq!(c.u16(), Some(0x0102));
        assert_eq!(c.u16(), None);
        assert_eq!(c.cstr(), None);
        let mut c = Cursor::new(&[0x80, 0x80], Endianness::Big);
        assert_eq!(c.uleb(), None);
    }

    proptest! {
        #[test]
        fn leb_round_trip(u in any::<u64>(), s in any::<i64>()) {
            let mut w = Writer::new(Endianness::Little);
            w.uleb(u);
            w.sleb(s);
            let mut c = Cursor::new(&w.buf, Endianness::Little);
            prop_assert_eq!(c.uleb(), Some(u));
            prop_assert_eq!(c.sleb(), Some(s));
            prop_assert!(c.is_empty());
        }
    }
}
