//! Just enough ELF to pull out executable section contents.

use crate::error::{Error, Result};

const SHF_EXECINSTR: u64 = 0x4;
const SHT_NOBITS: u32 = 8;

fn err(offset: u64, reason: &'static str) -> Error {
    Error::Elf { offset, reason }
}

#[derive(Clone, Copy)]
struct Reader<'a> {
    data: &'a [u8],
    big_endian: bool,
}

impl Reader<'_> {
    fn bytes<const N: usize>(&self, off: u64, what: &'static str) -> Result<[u8; N]> {
        let start = usize::try_from(off).map_err(|_| err(off, what))?;
        self.data
            .get(start..)
            .and_then(|s| s.get(..N))
            .map(|s| s.try_into().unwrap())
            .ok_or_else(|| err(off, what))
    }

    fn u16(&self, off: u64, what: &'static str) -> Result<u16> {
        let b = self.bytes::<2>(off, what)?;
        Ok(if self.big_endian {
            u16::from_be_bytes(b)
        } else {
            u16::from_le_bytes(b)
        })
    }

    fn u32(&self, off: u64, what: &'static str) -> Result<u32> {
        let b = self.bytes::<4>(off, what)?;
        Ok(if self.big_endian {
            u32::from_be_bytes(b)
        } else {
            u32::from_le_bytes(b)
        })
    }

    fn u64(&self, off: u64, what: &'static str) -> Result<u64> {
        let b = self.bytes::<8>(off, what)?;
        Ok(if self.big_endian {
            u64::from_be_bytes(b)
        } else {
            u64::from_le_bytes(b)
        })
    }
}

/// A section header reduced to the fields we need.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Section {
    pub kind: u32,
    pub flags: u64,
    pub offset: u64,
    pub size: u64,
}

impl Section {
    pub fn is_executable(&self) -> bool {
        self.flags & SHF_EXECINSTR != 0
    }
}

pub fn is_elf(data: &[u8]) -> bool {
    data.starts_with(b"\x7fELF")
}

/// Parses the section header table of a 32- or 64-bit ELF file.
pub fn sections(data: &[u8]) -> Result<Vec<Section>> {
    if !is_elf(data) {
        return Err(err(0, "missing ELF magic"));
    }
    let class = *data.get(4).ok_or_else(|| err(4, "truncated identification"))?;
    let encoding = *data.get(5).ok_or_else(|| err(5, "truncated identification"))?;
    let wide = match class {
        1 => false,
        2 => true,
        _ => return Err(err(4, "unknown ELF class")),
    };
    let big_endian = match encoding {
        1 => false,
        2 => true,
        _ => return Err(err(5, "unknown data encoding")),
    };
    let r = Reader { data, big_endian };

    let (shoff, shentsize, shnum) = if wide {
        (
            r.u64(0x28, "truncated header")?,
            r.u16(0x3A, "truncated header")?,
            r.u16(0x3C, "truncated header")?,
        )
    } else {
        (
            u64::from(r.u32(0x20, "truncated header")?),
            r.u16(0x2E, "truncated header")?,
            r.u16(0x30, "truncated header")?,
        )
    };
    if shoff == 0 || shnum == 0 {
        return Ok(Vec::new());
    }
    let min_entsize = if wide { 0x40 } else { 0x28 };
    if u64::from(shentsize) < min_entsize {
        return Err(err(if wide { 0x3A } else { 0x2E }, "section entry size too small"));
    }

    let mut out = Vec::with_capacity(shnum as usize);
    for i in 0..u64::from(shnum) {
        let base = shoff
            .checked_add(i * u64::from(shentsize))
            .ok_or_else(|| err(shoff, "section table offset overflows"))?;
        let sec = if wide {
            Section {
                kind: r.u32(base + 0x04, "section header out of bounds")?,
                flags: r.u64(base + 0x08, "section header out of bounds")?,
                offset: r.u64(base + 0x18, "section header out of bounds")?,
                size: r.u64(base + 0x20, "section header out of bounds")?,
            }
        } else {
            Section {
                kind: r.u32(base + 0x04, "section header out of bounds")?,
                flags: u64::from(r.u32(base + 0x08, "section header out of bounds")?),
                offset: u64::from(r.u32(base + 0x10, "section header out of bounds")?),
                size: u64::from(r.u32(base + 0x14, "section header out of bounds")?),
            }
        };
        if sec.is_executable() && sec.kind != SHT_NOBITS {
            let end = sec.offset.checked_add(sec.size);
            if !matches!(end, Some(e) if e <= data.len() as u64) {
                return Err(err(base, "section contents out of bounds"));
            }
        }
        out.push(sec);
    }
    Ok(out)
}

/// Concatenates the contents of all executable sections, in table order.
pub fn executable_bytes(data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for sec in sections(data)? {
        if sec.is_executable() && sec.kind != SHT_NOBITS {
            out.extend_from_slice(&data[sec.offset as usize..(sec.offset + sec.size) as usize]);
        }
    }
    Ok(out)
}

#[cfg(test)]
pub(crate) mod test_support {
    /// Hand-assembles a little-endian ELF32 relocatable with the given
    /// sections: (flags, contents).
    pub fn elf32(sections: &[(u32, &[u8])]) -> Vec<u8> {
        let mut out = vec![0u8; 0x34];
        out[..4].copy_from_slice(b"\x7fELF");
        out[4] = 1;
        out[5] = 1;
        out[6] = 1;
        out[0x10..0x12].copy_from_slice(&1u16.to_le_bytes()); // ET_REL
        out[0x12..0x14].copy_from_slice(&3u16.to_le_bytes()); // EM_386
        let mut offsets = Vec::new();
        for (_, body) in sections {
            offsets.push(out.len() as u32);
            out.extend_from_slice(body);
        }
        let shoff = out.len() as u32;
        // null section first
        out.extend_from_slice(&[0u8; 0x28]);
        for ((flags, body), off) in sections.iter().zip(&offsets) {
            let mut sh = [0u8; 0x28];
            sh[0x04..0x08].copy_from_slice(&1u32.to_le_bytes()); // PROGBITS
            sh[0x08..0x0C].copy_from_slice(&flags.to_le_bytes());
            sh[0x10..0x14].copy_from_slice(&off.to_le_bytes());
            sh[0x14..0x18].copy_from_slice(&(body.len() as u32).to_le_bytes());
            out.extend_from_slice(&sh);
        }
        out[0x20..0x24].copy_from_slice(&shoff.to_le_bytes());
        out[0x2E..0x30].copy_from_slice(&0x28u16.to_le_bytes());
        out[0x30..0x32].copy_from_slice(&((sections.len() + 1) as u16).to_le_bytes());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::test_support::elf32;
    use super::*;

    #[test]
    fn concatenates_executable_sections_in_order() {
        let elf = elf32(&[(0x6, &[0x55, 0x89, 0xE5]), (0x2, b"data"), (0x6, &[0xC3])]);
        assert_eq!(executable_bytes(&elf).unwrap(), vec![0x55, 0x89, 0xE5, 0xC3]);
    }

    #[test]
    fn no_executable_sections() {
        let elf = elf32(&[(0x2, b"rodata")]);
        assert!(executable_bytes(&elf).unwrap().is_empty());
    }

    #[test]
    fn malformed_inputs_name_offsets() {
        assert!(matches!(
            executable_bytes(b"MZ\x90\x00"),
            Err(Error::Elf { offset: 0, .. })
        ));
        let mut elf = elf32(&[(0x6, &[0x90])]);
        elf[4] = 9;
        assert!(matches!(
            executable_bytes(&elf),
            Err(Error::Elf { offset: 4, .. })
        ));

        let elf = elf32(&[(0x6, &[0x90; 8])]);
        let truncated = &elf[..elf.len() - 0x20];
        assert!(matches!(executable_bytes(truncated), Err(Error::Elf { .. })));

        // Section pointing past end of file
        let mut elf = elf32(&[(0x6, &[0x90; 8])]);
        let shoff = u32::from_le_bytes(elf[0x20..0x24].try_into().unwrap()) as usize;
        let sh = shoff + 0x28;
        elf[sh + 0x14..sh + 0x18].copy_from_slice(&0xFFFFu32.to_le_bytes());
        match executable_bytes(&elf) {
            Err(Error::Elf { offset, .. }) => assert_eq!(offset, sh as u64),
            other => panic!("unexpected {other:?}"),
        }
    }
}
