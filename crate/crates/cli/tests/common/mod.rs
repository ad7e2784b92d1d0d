//! Shared fixtures for the integration suites: external tool wrappers and
//! corpus assembly from compiled C and generated documents.

#![allow(dead_code)]

pub mod corpus;

use std::path::Path;
use std::process::Command;

/// True when `tool --version` runs.
pub fn have(tool: &str) -> bool {
    Command::new(tool)
        .arg("--version")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

/// Instructions of one section as listed by `objdump -d`.
#[derive(Debug, Default)]
pub struct DisassembledSection {
    pub name: String,
    /// Section bytes, reassembled from the listing.
    pub bytes: Vec<u8>,
    /// Offsets of instruction starts within the section.
    pub starts: Vec<usize>,
}

/// Runs GNU objdump on an object file and parses its listing.
pub fn objdump_sections(obj: &Path) -> Vec<DisassembledSection> {
    let out = Command::new("objdump")
        .args(["-d", "-w", "-z", "--insn-width=15"])
        .arg(obj)
        .output()
        .expect("run objdump");
    assert!(out.status.success(), "objdump failed on {}", obj.display());
    let text = String::from_utf8_lossy(&out.stdout);
    let mut sections: Vec<DisassembledSection> = Vec::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix("Disassembly of section ") {
            sections.push(DisassembledSection {
                name: rest.trim_end_matches(':').to_string(),
                ..Default::default()
            });
            continue;
        }
        let Some(sec) = sections.last_mut() else {
            continue;
        };
        // "   1a:\t83 ec 10    \tsub ..."
        let mut fields = line.splitn(3, '\t');
        let (Some(addr), Some(hex)) = (fields.next(), fields.next()) else {
            continue;
        };
        let Some(addr) = addr.trim().strip_suffix(':') else {
            continue;
        };
        let Ok(addr) = usize::from_str_radix(addr, 16) else {
            continue;
        };
        let bytes: Vec<u8> = hex
            .split_whitespace()
            .map(|b| u8::from_str_radix(b, 16).expect("hex byte"))
            .collect();
        if bytes.is_empty() {
            continue;
        }
        assert_eq!(addr, sec.bytes.len(), "gap in listing of {}", sec.name);
        sec.starts.push(addr);
        sec.bytes.extend_from_slice(&bytes);
    }
    sections
}
