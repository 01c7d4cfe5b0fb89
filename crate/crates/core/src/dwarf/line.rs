//! File-name table from a line program header. Only the header is read; the
//! line program itself is not interpreted.

use super::forms::*;
use super::reader::Sections;
use crate::bytes::{str_at, Cursor};

#[derive(Clone, Debug, PartialEq, Eq)]
pub(super) struct FileTable {
    version: u16,
    /// Paths in table order. For DWARF < 5, index 0 of `DW_AT_decl_file` means
    /// "no file" and 1 is the first entry; from DWARF 5 on, 0 is the first.
    files: Vec<String>,
}

impl FileTable {
    pub fn name(&self, index: u64) -> Option<String> {
        let i = if self.version >= 5 {
            usize::try_from(index).ok()?
        } else {
            usize::try_from(index.checked_sub(1)?).ok()?
        };
        self.files.get(i).cloned()
    }

    pub fn parse(
        secs: &Sections<'_>,
        offset: u64,
        addr_size: u8,
        _unit_name: Option<String>,
        _comp_dir: Option<String>,
    ) -> Result<Self, String> {
        let err = || "line program header extends past .debug_line".to_string();
        let mut c = Cursor::at(secs.line, usize::try_from(offset).map_err(|_| err())?, secs.endian);
        let mut length = u64::from(c.u32().ok_or_else(err)?);
        let mut offset_size = 4u8;
        if length == 0xffff_ffff {
            length = c.u64().ok_or_else(err)?;
            offset_size = 8;
        }
        let _ = length;
        let version = c.u16().ok_or_else(err)?;
        if !(2..=5).contains(&version) {
            return Err(format!("unsupported line table version {version}"));
        }
        if version >= 5 {
            let _addr = c.u8().ok_or_else(err)?;
            let _seg = c.u8().ok_or_else(err)?;
        }
        let _header_length = c.uint(offset_size).ok_or_else(err)?;
        let _min_inst = c.u8().ok_or_else(err)?;
        if version >= 4 {
            let _max_ops = c.u8().ok_or_else(err)?;
        }
        let _default_is_stmt = c.u8().ok_or_else(err)?;
        let _line_base = c.u8().ok_or_else(err)?;
        let _line_range = c.u8().ok_or_else(err)?;
        let opcode_base = c.u8().ok_or_else(err)?;
        c.skip(u64::from(opcode_base.saturating_sub(1))).ok_or_else(err)?;

        let files = if version >= 5 {
            let dirs = read_v5_entries(secs, &mut c, offset_size, addr_size)?;
            let files = read_v5_entries(secs, &mut c, offset_size, addr_size)?;
            let dir_names: Vec<Option<String>> = dirs.into_iter().map(|(p, _)| p).collect();
            files
                .into_iter()
                .map(|(path, dir)| {
                    let path = path.unwrap_or_default();
                    // Directory 0 is the compilation directory; keep such
                    // paths as written.
                    match dir.filter(|&d| d > 0).and_then(|d| dir_names.get(d as usize).cloned().flatten()) {
                        Some(d) => join(&d, &path),
                        None => path,
                    }
                })
                .collect()
        } else {
            let mut dirs = Vec::new();
            loop {
                let d = c.cstr().ok_or_else(err)?;
                if d.is_empty() {
                    break;
                }
                dirs.push(String::from_utf8_lossy(d).into_owned());
            }
            let mut files = Vec::new();
            loop {
                let name = c.cstr().ok_or_else(err)?;
                if name.is_empty() {
                    break;
                }
                let name = String::from_utf8_lossy(name).into_owned();
                let dir = c.uleb().ok_or_else(err)?;
                let _mtime = c.uleb().ok_or_else(err)?;
                let _len = c.uleb().ok_or_else(err)?;
                let full = match dir.checked_sub(1).and_then(|d| dirs.get(d as usize)) {
                    Some(d) => join(d, &name),
                    None => name,
                };
                files.push(full);
            }
            files
        };
        Ok(FileTable { version, files })
    }
}

fn join(dir: &str, name: &str) -> String {
    if name.starts_with('/') || dir.is_empty() {
        name.to_string()
    } else {
        format!("{}/{}", dir.trim_end_matches('/'), name)
    }
}

/// A path and, for file names, its directory index.
type EntryRow = (Option<String>, Option<u64>);

/// Reads a DWARF 5 directory or file-name table: an entry format
/// description followed by the entries. Returns (path, directory index).
fn read_v5_entries(
    secs: &Sections<'_>,
    c: &mut Cursor<'_>,
    offset_size: u8,
    addr_size: u8,
) -> Result<Vec<EntryRow>, String> {
    let err = || "line program entry table extends past .debug_line".to_string();
    let format_count = c.u8().ok_or_else(err)?;
    let mut format = Vec::with_capacity(format_count as usize);
    for _ in 0..format_count {
        let content = c.uleb().ok_or_else(err)?;
        let form = c.uleb().ok_or_else(err)?;
        format.push((content, form));
    }
    let count = c.uleb().ok_or_else(err)?;
    let mut out = Vec::new();
    for _ in 0..count {
        let mut path = None;
        let mut dir = None;
        for &(content, form) in &format {
            let spec = form_spec(form).ok_or_else(|| format!("unknown form {form:#x} in line header"))?;
            let (num, text) = match spec.encoding {
                Encoding::CStr => (None, Some(String::from_utf8_lossy(c.cstr().ok_or_else(err)?).into_owned())),
                Encoding::Offset => (Some(c.uint(offset_size).ok_or_else(err)?), None),
                Encoding::Address => (Some(c.uint(addr_size).ok_or_else(err)?), None),
                Encoding::Fixed(16) => {
                    c.skip(16).ok_or_else(err)?;
                    (None, None)
                }
                Encoding::Fixed(n) => (Some(c.uint(n).ok_or_else(err)?), None),
                Encoding::Uleb => (Some(c.uleb().ok_or_else(err)?), None),
                Encoding::Sleb => (Some(c.sleb().ok_or_else(err)? as u64), None),
                Encoding::BlockUleb => {
                    let n = c.uleb().ok_or_else(err)?;
                    c.skip(n).ok_or_else(err)?;
                    (None, None)
                }
                Encoding::Block1 => {
                    let n = c.u8().ok_or_else(err)?;
                    c.skip(u64::from(n)).ok_or_else(err)?;
                    (None, None)
                }
                Encoding::Block2 => {
                    let n = c.u16().ok_or_else(err)?;
                    c.skip(u64::from(n)).ok_or_else(err)?;
                    (None, None)
                }
                Encoding::Block4 => {
                    let n = c.u32().ok_or_else(err)?;
                    c.skip(u64::from(n)).ok_or_else(err)?;
                    (None, None)
                }
                Encoding::Empty | Encoding::RefAddr | Encoding::Indirect => {
                    return Err(format!("form {} not valid in line header", spec.name))
                }
            };
            match content {
                DW_LNCT_PATH => {
                    path = match (spec.class, text, num) {
                        (Class::InlineString, Some(t), _) => Some(t),
                        (Class::LineStrOffset, _, Some(o)) => str_at(secs.line_str, o),
                        (Class::StrOffset, _, Some(o)) => str_at(secs.str, o),
                        _ => None,
                    }
                }
                DW_LNCT_DIRECTORY_INDEX => dir = num,
                _ => {}
            }
        }
        out.push((path, dir));
    }
    Ok(out)
}
