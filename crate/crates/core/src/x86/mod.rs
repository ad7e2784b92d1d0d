//! Total instruction-length decoder for 32-bit x86.
//!
//! Any byte stream, code or not, is partitioned into "instructions". Only
//! boundaries are recovered: prefixes, opcode maps, ModRM/SIB, displacement
//! and immediate sizes. Bytes that start no known encoding become one-byte
//! instructions flagged invalid, so decoding always makes progress.

mod tables;

use std::fmt;

use tables::Shape;

use crate::error::{Error, Result};

/// Architectural maximum instruction length.
pub const MAX_INSTRUCTION_LEN: usize = 15;

/// Width of a zero-padded instruction slot (one byte past the maximum).
pub const FIXED_INSTRUCTION_LEN: usize = 16;

/// A decoded instruction and where it was found.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    offset: usize,
    len: u8,
    valid: bool,
    bytes: [u8; MAX_INSTRUCTION_LEN],
}

impl Instruction {
    /// Builds an instruction from raw bytes. Fails if `bytes` is empty or
    /// longer than [`MAX_INSTRUCTION_LEN`].
    pub fn new(offset: usize, bytes: &[u8], valid: bool) -> Result<Self> {
        if bytes.is_empty() || bytes.len() > MAX_INSTRUCTION_LEN {
            return Err(Error::InstructionLength(bytes.len()));
        }
        let mut buf = [0u8; MAX_INSTRUCTION_LEN];
        buf[..bytes.len()].copy_from_slice(bytes);
        Ok(Self {
            offset,
            len: bytes.len() as u8,
            valid,
            bytes: buf,
        })
    }

    /// Byte offset of the first byte in the source stream.
    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    /// Always false; kept for API symmetry with slices.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes[..self.len()]
    }

    /// True when the bytes matched a recognized encoding in full.
    pub fn is_valid(&self) -> bool {
        self.valid
    }

    /// Right-pads the instruction with zeros to a 16-byte slot.
    pub fn pad(&self) -> FixedLengthInstruction {
        let mut out = [0u8; FIXED_INSTRUCTION_LEN];
        out[..self.len()].copy_from_slice(self.bytes());
        FixedLengthInstruction(out)
    }
}

impl fmt::Debug for Instruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Instruction@{:#x}[", self.offset)?;
        for (i, b) in self.bytes().iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{b:02x}")?;
        }
        write!(f, "]{}", if self.valid { "" } else { "!" })
    }
}

/// An instruction right-padded with `0x00` to 16 bytes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FixedLengthInstruction(pub [u8; FIXED_INSTRUCTION_LEN]);

impl FixedLengthInstruction {
    pub fn as_bytes(&self) -> &[u8; FIXED_INSTRUCTION_LEN] {
        &self.0
    }
}

/// Pads a raw instruction byte sequence. Rejects sequences longer than 15
/// bytes, which no decoded instruction can have.
pub fn pad_instruction(bytes: &[u8]) -> Result<FixedLengthInstruction> {
    if bytes.len() > MAX_INSTRUCTION_LEN {
        return Err(Error::InstructionLength(bytes.len()));
    }
    let mut out = [0u8; FIXED_INSTRUCTION_LEN];
    out[..bytes.len()].copy_from_slice(bytes);
    Ok(FixedLengthInstruction(out))
}

/// Why length computation stopped early.
enum Stop {
    /// Unknown opcode: fall back to a single byte.
    Unrecognized,
    /// Ran off the 15-byte limit or off the end of the stream.
    Clipped,
}

struct Cursor<'a> {
    window: &'a [u8],
}

impl Cursor<'_> {
    fn byte(&self, idx: usize) -> std::result::Result<u8, Stop> {
        if idx >= MAX_INSTRUCTION_LEN {
            return Err(Stop::Clipped);
        }
        self.window.get(idx).copied().ok_or(Stop::Clipped)
    }
}

/// Length of the ModRM + SIB + displacement bytes starting at `idx`.
fn addressing_len(cur: &Cursor<'_>, idx: usize, addr16: bool) -> std::result::Result<usize, Stop> {
    let modrm = cur.byte(idx)?;
    let md = modrm >> 6;
    let rm = modrm & 0x07;
    if md == 3 {
        return Ok(1);
    }
    if addr16 {
        let disp = match (md, rm) {
            (0, 6) => 2,
            (0, _) => 0,
            (1, _) => 1,
            _ => 2,
        };
        return Ok(1 + disp);
    }
    let mut len = 1;
    let mut disp = match md {
        0 if rm == 5 => 4,
        0 => 0,
        1 => 1,
        _ => 4,
    };
    if rm == 4 {
        let sib = cur.byte(idx + 1)?;
        len += 1;
        if md == 0 && sib & 0x07 == 5 {
            disp = 4;
        }
    }
    Ok(len + disp)
}

/// Computes the full encoding length of the instruction at the start of
/// `window`. The result may exceed the window or the 15-byte limit; the
/// caller clips it.
fn encoding_len(window: &[u8]) -> std::result::Result<usize, Stop> {
    let cur = Cursor { window };
    let mut idx = 0;
    let mut opsize16 = false;
    let mut addr16 = false;
    loop {
        let b = cur.byte(idx)?;
        if !tables::is_legacy_prefix(b) {
            break;
        }
        match b {
            0x66 => opsize16 = true,
            0x67 => addr16 = true,
            _ => {}
        }
        idx += 1;
    }

    let immz = if opsize16 { 2 } else { 4 };
    let mut shape = tables::one_byte(cur.byte(idx)?);
    idx += 1;
    if shape == Shape::Escape {
        let op2 = cur.byte(idx)?;
        idx += 1;
        shape = tables::two_byte(op2);
        if shape == Shape::Escape {
            let op3 = cur.byte(idx)?;
            idx += 1;
            shape = if op2 == 0x38 {
                tables::three_byte_38(op3)
            } else {
                tables::three_byte_3a(op3)
            };
        }
    }

    let tail = match shape {
        Shape::Invalid | Shape::Escape => return Err(Stop::Unrecognized),
        Shape::Bare => 0,
        Shape::Imm8 => 1,
        Shape::ImmZ => immz,
        Shape::Imm16 => 2,
        Shape::Imm16Imm8 => 3,
        Shape::FarPtr => immz + 2,
        Shape::MemOffset => {
            if addr16 {
                2
            } else {
                4
            }
        }
        Shape::ModRm => addressing_len(&cur, idx, addr16)?,
        Shape::ModRmImm8 => addressing_len(&cur, idx, addr16)? + 1,
        Shape::ModRmImmZ => addressing_len(&cur, idx, addr16)? + immz,
        Shape::Group3Byte | Shape::Group3Full => {
            let reg = (cur.byte(idx)? >> 3) & 0x07;
            let imm = match (shape, reg) {
                (Shape::Group3Byte, 0 | 1) => 1,
                (_, 0 | 1) => immz,
                _ => 0,
            };
            addressing_len(&cur, idx, addr16)? + imm
        }
    };
    Ok(idx + tail)
}

/// Decodes the instruction starting at `offset`.
///
/// Total over `offset < stream.len()`: unknown opcodes yield a one-byte
/// invalid instruction, encodings past 15 bytes are clipped to 15, and an
/// encoding cut off by the end of the stream yields the remaining bytes.
/// Those three cases come back with `is_valid() == false`.
///
/// # Panics
///
/// Panics if `offset >= stream.len()`.
pub fn instruction_length(stream: &[u8], offset: usize) -> Instruction {
    assert!(offset < stream.len(), "offset {offset} out of range");
    let window = &stream[offset..];
    let avail = window.len();
    let (len, valid) = match encoding_len(window) {
        Ok(n) if n <= MAX_INSTRUCTION_LEN && n <= avail => (n, true),
        Ok(_) | Err(Stop::Clipped) => (avail.min(MAX_INSTRUCTION_LEN), false),
        Err(Stop::Unrecognized) => (1, false),
    };
    let mut bytes = [0u8; MAX_INSTRUCTION_LEN];
    bytes[..len].copy_from_slice(&window[..len]);
    Instruction {
        offset,
        len: len as u8,
        valid,
        bytes,
    }
}

/// Iterator over consecutive instructions from a starting offset.
#[derive(Clone, Debug)]
pub struct Instructions<'a> {
    stream: &'a [u8],
    pos: usize,
}

impl<'a> Iterator for Instructions<'a> {
    type Item = Instruction;

    fn next(&mut self) -> Option<Instruction> {
        if self.pos >= self.stream.len() {
            return None;
        }
        let insn = instruction_length(self.stream, self.pos);
        self.pos += insn.len();
        Some(insn)
    }
}

impl std::iter::FusedIterator for Instructions<'_> {}

/// Lazily decodes `stream` starting at `offset`.
pub fn instructions_from(stream: &[u8], offset: usize) -> Instructions<'_> {
    Instructions { stream, pos: offset }
}

/// Decodes the whole stream. The instructions tile it exactly.
pub fn decode_stream(stream: &[u8]) -> Vec<Instruction> {
    instructions_from(stream, 0).collect()
}

/// Mean instruction length over a stream, `None` when empty.
pub fn mean_instruction_len(stream: &[u8]) -> Option<f64> {
    let (count, total) = instructions_from(stream, 0)
        .fold((0usize, 0usize), |(c, t), i| (c + 1, t + i.len()));
    (count > 0).then(|| total as f64 / count as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn len_of(bytes: &[u8]) -> (usize, bool) {
        let i = instruction_length(bytes, 0);
        (i.len(), i.is_valid())
    }

    #[test]
    fn nop_and_prefixed_nop() {
        assert_eq!(len_of(&[0x90]), (1, true));
        assert_eq!(len_of(&[0x66, 0x90]), (2, true));
    }

    #[test]
    fn redundant_prefixes_clip_at_fifteen() {
        let mut s = vec![0x66; 16];
        s.push(0x90);
        assert_eq!(len_of(&s), (15, false));
        // 14 prefixes + nop is exactly 15 bytes and still fine.
        let mut s = vec![0x66; 14];
        s.push(0x90);
        assert_eq!(len_of(&s), (15, true));
    }

    #[test]
    fn truncated_tail_takes_remaining_bytes() {
        // mov eax, imm32 with only two immediate bytes present
        assert_eq!(len_of(&[0xB8, 0x01, 0x02]), (3, false));
        assert_eq!(len_of(&[0x66, 0x66]), (2, false));
        assert_eq!(len_of(&[0x0F]), (1, false));
    }

    #[test]
    fn unknown_opcode_falls_back_to_one_byte() {
        assert_eq!(len_of(&[0xD6, 0x90]), (1, false));
        assert_eq!(len_of(&[0x0F, 0x04, 0x90]), (1, false));
        assert_eq!(len_of(&[0x66, 0x0F, 0x3A, 0xFF, 0xC0, 0x00]), (1, false));
    }

    #[test]
    fn modrm_sib_displacement_forms() {
        // mov eax, [ebx]
        assert_eq!(len_of(&[0x8B, 0x03]), (2, true));
        // mov eax, [esp+8]
        assert_eq!(len_of(&[0x8B, 0x44, 0x24, 0x08]), (4, true));
        // mov eax, [0x12345678]
        assert_eq!(len_of(&[0x8B, 0x05, 0x78, 0x56, 0x34, 0x12]), (6, true));
        // mov eax, [ebp*4+disp32] (SIB base 101, mod 00)
        assert_eq!(len_of(&[0x8B, 0x04, 0xAD, 0, 0, 0, 0]), (7, true));
        // lea esi, [esi+eiz*1+0x0]
        assert_eq!(len_of(&[0x8D, 0xB4, 0x26, 0, 0, 0, 0]), (7, true));
        // 16-bit addressing: mov ax, [bp+si+disp16] with 67
        assert_eq!(len_of(&[0x67, 0x8B, 0x82, 0x34, 0x12]), (5, true));
        assert_eq!(len_of(&[0x67, 0x8B, 0x06, 0x34, 0x12]), (5, true));
    }

    #[test]
    fn immediates() {
        assert_eq!(len_of(&[0xB8, 1, 2, 3, 4]), (5, true));
        assert_eq!(len_of(&[0x66, 0xB8, 1, 2]), (4, true));
        assert_eq!(len_of(&[0xC7, 0x45, 0xFC, 1, 0, 0, 0]), (7, true));
        assert_eq!(len_of(&[0x83, 0xEC, 0x10]), (3, true));
        assert_eq!(len_of(&[0xC8, 0x10, 0x00, 0x00]), (4, true));
        assert_eq!(len_of(&[0x9A, 1, 2, 3, 4, 5, 6]), (7, true));
        assert_eq!(len_of(&[0xA1, 1, 2, 3, 4]), (5, true));
        assert_eq!(len_of(&[0x67, 0xA1, 1, 2]), (4, true));
        // test eax, imm32 via group 3 vs neg eax
        assert_eq!(len_of(&[0xF7, 0xC0, 1, 2, 3, 4]), (6, true));
        assert_eq!(len_of(&[0xF7, 0xD8]), (2, true));
        assert_eq!(len_of(&[0xF6, 0x45, 0x08, 0x01]), (4, true));
    }

    #[test]
    fn two_and_three_byte_maps() {
        // jne rel32
        assert_eq!(len_of(&[0x0F, 0x85, 1, 2, 3, 4]), (6, true));
        // movzx eax, byte [ecx]
        assert_eq!(len_of(&[0x0F, 0xB6, 0x01]), (3, true));
        // endbr32
        assert_eq!(len_of(&[0xF3, 0x0F, 0x1E, 0xFB]), (4, true));
        // pshufb xmm0, xmm1
        assert_eq!(len_of(&[0x66, 0x0F, 0x38, 0x00, 0xC1]), (5, true));
        // palignr xmm0, xmm1, 4
        assert_eq!(len_of(&[0x66, 0x0F, 0x3A, 0x0F, 0xC1, 0x04]), (6, true));
        // nopw cs:[eax+eax*1+0]
        assert_eq!(
            len_of(&[0x66, 0x2E, 0x0F, 0x1F, 0x84, 0x00, 0, 0, 0, 0]),
            (10, true)
        );
        // LES in 32-bit mode, not VEX
        assert_eq!(len_of(&[0xC4, 0x06]), (2, true));
    }

    #[test]
    fn x87_escapes() {
        assert_eq!(len_of(&[0xD9, 0xE8]), (2, true));
        assert_eq!(len_of(&[0xDD, 0x44, 0x24, 0x08]), (4, true));
        assert_eq!(len_of(&[0xDF, 0x2D, 0, 0, 0, 0]), (6, true));
    }

    #[test]
    fn decode_stream_small_cases() {
        assert!(decode_stream(&[]).is_empty());
        let out = decode_stream(&[0x90, 0x90, 0x90]);
        assert_eq!(out.len(), 3);
        assert!(out.iter().all(|i| i.len() == 1 && i.is_valid()));
        assert_eq!(
            out.iter().map(Instruction::offset).collect::<Vec<_>>(),
            vec![0, 1, 2]
        );
    }

    #[test]
    fn padding() {
        let nop = instruction_length(&[0x90], 0).pad();
        let mut want = [0u8; 16];
        want[0] = 0x90;
        assert_eq!(nop.0, want);

        let xor = pad_instruction(&[0x31, 0xC9]).unwrap();
        assert_eq!(&xor.0[..2], &[0x31, 0xC9]);
        assert!(xor.0[2..].iter().all(|&b| b == 0));

        let long = pad_instruction(&[0xAB; 15]).unwrap();
        assert_eq!(&long.0[..15], &[0xAB; 15]);
        assert_eq!(long.0[15], 0);

        assert!(matches!(
            pad_instruction(&[0u8; 16]),
            Err(Error::InstructionLength(16))
        ));
    }

    #[test]
    #[should_panic]
    fn offset_past_end_panics() {
        instruction_length(&[0x90], 1);
    }
}
