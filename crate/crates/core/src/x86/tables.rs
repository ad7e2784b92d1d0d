//! Operand-shape tables for the 32-bit opcode maps.
//!
//! Only the information that determines instruction length is kept: whether a
//! ModRM byte follows and which immediate (if any) trails the addressing bytes.

/// Length-relevant shape of an opcode.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Shape {
    /// Not a recognized encoding in 32-bit mode.
    Invalid,
    /// Opcode only.
    Bare,
    ModRm,
    Imm8,
    /// Operand-size immediate: 4 bytes, 2 with a 0x66 prefix.
    ImmZ,
    Imm16,
    /// ENTER: imm16 followed by imm8.
    Imm16Imm8,
    ModRmImm8,
    ModRmImmZ,
    /// Direct far pointer: operand-size offset plus 16-bit selector.
    FarPtr,
    /// Memory offset sized by the address-size attribute.
    MemOffset,
    /// Group 3 (F6/F7): TEST (reg 0/1) carries an immediate, the rest do not.
    Group3Byte,
    Group3Full,
    /// 0x0F escape into the two-byte map.
    Escape,
}

pub(crate) fn is_legacy_prefix(byte: u8) -> bool {
    matches!(
        byte,
        0x26 | 0x2E | 0x36 | 0x3E | 0x64 | 0x65 | 0x66 | 0x67 | 0xF0 | 0xF2 | 0xF3
    )
}

pub(crate) fn one_byte(op: u8) -> Shape {
    use Shape::*;
    match op {
        // ALU block: op r/m,r / op r,r/m / op al,imm8 / op eax,immz
        0x00..=0x3F => match op & 0x07 {
            0..=3 => ModRm,
            4 => Imm8,
            5 => ImmZ,
            _ => match op {
                0x0F => Escape,
                _ => Bare, // push/pop seg, daa/das/aaa/aas (prefixes never reach here)
            },
        },
        0x40..=0x61 => Bare,
        0x62 | 0x63 => ModRm,
        0x68 => ImmZ,
        0x69 => ModRmImmZ,
        0x6A => Imm8,
        0x6B => ModRmImm8,
        0x6C..=0x6F => Bare,
        0x70..=0x7F => Imm8,
        0x80 | 0x82 | 0x83 => ModRmImm8,
        0x81 => ModRmImmZ,
        0x84..=0x8F => ModRm,
        0x90..=0x99 => Bare,
        0x9A => FarPtr,
        0x9B..=0x9F => Bare,
        0xA0..=0xA3 => MemOffset,
        0xA4..=0xA7 => Bare,
        0xA8 => Imm8,
        0xA9 => ImmZ,
        0xAA..=0xAF => Bare,
        0xB0..=0xB7 => Imm8,
        0xB8..=0xBF => ImmZ,
        0xC0 | 0xC1 => ModRmImm8,
        0xC2 => Imm16,
        0xC3 => Bare,
        // LES/LDS in 32-bit mode; VEX is out of scope.
        0xC4 | 0xC5 => ModRm,
        0xC6 => ModRmImm8,
        0xC7 => ModRmImmZ,
        0xC8 => Imm16Imm8,
        0xC9 => Bare,
        0xCA => Imm16,
        0xCB | 0xCC => Bare,
        0xCD => Imm8,
        0xCE | 0xCF => Bare,
        0xD0..=0xD3 => ModRm,
        0xD4 | 0xD5 => Imm8,
        0xD6 => Invalid,
        0xD7 => Bare,
        0xD8..=0xDF => ModRm,
        0xE0..=0xE7 => Imm8,
        0xE8 | 0xE9 => ImmZ,
        0xEA => FarPtr,
        0xEB => Imm8,
        0xEC..=0xEF => Bare,
        0xF1 | 0xF4 | 0xF5 => Bare,
        0xF6 => Group3Byte,
        0xF7 => Group3Full,
        0xF8..=0xFD => Bare,
        0xFE | 0xFF => ModRm,
        // Prefixes are consumed before table lookup.
        0x64..=0x67 | 0xF0 | 0xF2 | 0xF3 => Invalid,
    }
}

pub(crate) fn two_byte(op: u8) -> Shape {
    use Shape::*;
    match op {
        0x00..=0x03 => ModRm,
        0x04 | 0x0A | 0x0C => Invalid,
        0x05..=0x09 | 0x0B | 0x0E => Bare,
        0x0D => ModRm,
        // 3DNow!: ModRM then an opcode-suffix byte.
        0x0F => ModRmImm8,
        0x10..=0x2F => ModRm,
        0x30..=0x35 | 0x37 => Bare,
        0x36 | 0x39 | 0x3B..=0x3F => Invalid,
        // Three-byte escapes are resolved by the caller.
        0x38 | 0x3A => Escape,
        0x40..=0x6F => ModRm,
        0x70..=0x73 => ModRmImm8,
        0x74..=0x76 => ModRm,
        0x77 => Bare,
        0x78 | 0x79 => ModRm,
        0x7A | 0x7B => Invalid,
        0x7C..=0x7F => ModRm,
        0x80..=0x8F => ImmZ,
        0x90..=0x9F => ModRm,
        0xA0..=0xA2 => Bare,
        0xA3 | 0xA5 => ModRm,
        0xA4 | 0xAC => ModRmImm8,
        0xA6 | 0xA7 => Invalid,
        0xA8..=0xAA => Bare,
        0xAB | 0xAD..=0xAF => ModRm,
        0xB0..=0xB9 => ModRm,
        0xBA => ModRmImm8,
        0xBB..=0xC1 => ModRm,
        0xC2 => ModRmImm8,
        0xC3 => ModRm,
        0xC4..=0xC6 => ModRmImm8,
        0xC7 => ModRm,
        0xC8..=0xCF => Bare,
        0xD0..=0xFF => ModRm,
    }
}

/// 0F 38 map: every defined entry takes a ModRM and no immediate.
pub(crate) fn three_byte_38(op: u8) -> Shape {
    match op {
        0x00..=0x0B
        | 0x10
        | 0x14
        | 0x15
        | 0x17
        | 0x1C..=0x1E
        | 0x20..=0x25
        | 0x28..=0x2B
        | 0x30..=0x35
        | 0x37..=0x41
        | 0x80..=0x82
        | 0xC8..=0xCD
        | 0xCF
        | 0xDB..=0xDF
        | 0xF0
        | 0xF1
        | 0xF6
        | 0xF8
        | 0xF9
        | 0xFC => Shape::ModRm,
        _ => Shape::Invalid,
    }
}

/// 0F 3A map: every defined entry takes a ModRM and an imm8.
pub(crate) fn three_byte_3a(op: u8) -> Shape {
    match op {
        0x08..=0x0F
        | 0x14..=0x17
        | 0x20..=0x22
        | 0x40..=0x42
        | 0x44
        | 0x60..=0x63
        | 0xCC
        | 0xCE
        | 0xCF
        | 0xDF => Shape::ModRmImm8,
        _ => Shape::Invalid,
    }
}
