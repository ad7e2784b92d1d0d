//! Corpus assembly: 32-bit objects compiled from C source crates pulled
//! through cargo, plus documents from `scripts/make_documents.py`.
//! Everything is cached under the target tmpdir and keyed by its inputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use rayon::prelude::*;

/// Source crates, pinned. Their C trees are what gets compiled.
pub const SOURCE_CRATES: &[(&str, &str)] = &[
    ("bzip2-sys", "=0.1.13"),
    ("curl-sys", "=0.4.91"),
    ("libgit2-sys", "=0.18.8"),
    ("libsqlite3-sys", "=0.30.1"),
    ("libz-sys", "=1.1.30"),
    ("lua-src", "=547.1.0"),
    ("lzma-sys", "=0.1.20"),
    ("zstd-sys", "=2.1.1"),
];

/// Kept out of every training corpus; linked into the scan target.
pub const HELD_OUT_DIR: &str = "lua-5.3.6";

const SKIP_DIRS: &[&str] = &[
    "test", "tests", "example", "examples", "fuzz", "contrib", "bench", "benchmarks", "doc",
    "docs", "win32", "windows", "sqlcipher", "programs", "cmake", "build", "ci",
];

pub fn cache_root() -> PathBuf {
    let p = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("oglasses-corpus");
    fs::create_dir_all(&p).expect("create cache root");
    p
}

fn script() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scripts/make_documents.py")
}

fn cargo() -> String {
    std::env::var("CARGO").unwrap_or_else(|_| "cargo".into())
}

/// Unpacked crate roots, by name. Cargo downloads them if needed; nothing
/// is built.
pub fn source_roots() -> Result<Vec<(String, PathBuf)>, String> {
    let dir = cache_root().join("sources");
    fs::create_dir_all(dir.join("src")).map_err(|e| e.to_string())?;
    let mut toml = String::from(
        "[package]\nname = \"c-sources\"\nversion = \"0.0.0\"\nedition = \"2021\"\n\n[workspace]\n\n[dependencies]\n",
    );
    for (name, version) in SOURCE_CRATES {
        writeln!(toml, "{name} = {{ version = \"{version}\", default-features = false }}").unwrap();
    }
    fs::write(dir.join("Cargo.toml"), toml).map_err(|e| e.to_string())?;
    fs::write(dir.join("src/lib.rs"), "").map_err(|e| e.to_string())?;
    let out = Command::new(cargo())
        .args(["metadata", "--format-version", "1", "--manifest-path"])
        .arg(dir.join("Cargo.toml"))
        .output()
        .map_err(|e| format!("run cargo metadata: {e}"))?;
    if !out.status.success() {
        return Err(format!("cargo metadata failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    let meta: serde_json::Value = serde_json::from_slice(&out.stdout).map_err(|e| e.to_string())?;
    let mut roots = Vec::new();
    for pkg in meta["packages"].as_array().ok_or("metadata without packages")? {
        let name = pkg["name"].as_str().unwrap_or_default();
        if SOURCE_CRATES.iter().any(|(n, _)| *n == name) {
            let manifest = PathBuf::from(pkg["manifest_path"].as_str().ok_or("no manifest_path")?);
            roots.push((name.to_string(), manifest.parent().unwrap().to_path_buf()));
        }
    }
    roots.sort();
    if roots.len() != SOURCE_CRATES.len() {
        return Err(format!("resolved {} of {} source crates", roots.len(), SOURCE_CRATES.len()));
    }
    Ok(roots)
}

fn collect_c(dir: &Path, out: &mut Vec<PathBuf>) {
    let Ok(rd) = fs::read_dir(dir) else { return };
    let mut entries: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        let name = p.file_name().unwrap().to_string_lossy().to_lowercase();
        if p.is_dir() {
            if !SKIP_DIRS.contains(&name.as_str()) {
                collect_c(&p, out);
            }
        } else if name.ends_with(".c") && !name.contains("test") {
            out.push(p);
        }
    }
}

/// Sorted `.c` files under a crate root.
pub fn c_files(root: &Path) -> Vec<PathBuf> {
    let mut v = Vec::new();
    collect_c(root, &mut v);
    v
}

/// Directory with the one glibc header that 64-bit-only installs lack.
fn shim_dir() -> PathBuf {
    let d = cache_root().join("shim");
    fs::create_dir_all(d.join("gnu")).unwrap();
    let stubs = d.join("gnu/stubs-32.h");
    if !stubs.exists() {
        fs::write(stubs, "").unwrap();
    }
    d
}

fn gcc_args(src: &Path, level: &str, extra: &[&str]) -> Vec<String> {
    let dir = src.parent().unwrap();
    let mut a: Vec<String> = vec!["-m32".into(), format!("-{level}"), "-w".into()];
    a.extend(extra.iter().map(|s| s.to_string()));
    a.push(format!("-I{}", shim_dir().display()));
    a.push("-isystem".into());
    a.push("/usr/include/x86_64-linux-gnu".into());
    for inc in [dir.to_path_buf(), dir.join(".."), dir.join("../include"), dir.join("include")] {
        a.push(format!("-I{}", inc.display()));
    }
    a.push("-c".into());
    a.push(src.display().to_string());
    a
}

/// Compiles one file unless a cached result exists. `None` when gcc
/// rejects it; the failure is cached too.
fn compile_one(src: &Path, obj: &Path, level: &str, extra: &[&str]) -> Option<PathBuf> {
    let fail = obj.with_extension("fail");
    if obj.exists() {
        return Some(obj.to_path_buf());
    }
    if fail.exists() {
        return None;
    }
    fs::create_dir_all(obj.parent().unwrap()).unwrap();
    let tmp = obj.with_extension("tmp");
    let status = Command::new("gcc")
        .args(gcc_args(src, level, extra))
        .arg("-o")
        .arg(&tmp)
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false);
    if status {
        fs::rename(&tmp, obj).unwrap();
        Some(obj.to_path_buf())
    } else {
        let _ = fs::remove_file(&tmp);
        fs::write(&fail, "").unwrap();
        None
    }
}

fn flat_name(root: &Path, src: &Path) -> String {
    src.strip_prefix(root)
        .unwrap_or(src)
        .with_extension("o")
        .to_string_lossy()
        .replace('/', "__")
}

/// Objects for every compilable file of `roots` at `-{level}`, sorted.
/// `keep` filters source paths.
pub fn compile_crates(
    roots: &[(String, PathBuf)],
    level: &str,
    keep: &dyn Fn(&Path) -> bool,
) -> Vec<PathBuf> {
    let jobs: Vec<(PathBuf, PathBuf)> = roots
        .iter()
        .flat_map(|(name, root)| {
            c_files(root)
                .into_iter()
                .filter(|p| keep(p))
                .map(move |src| {
                    let obj = cache_root().join("objects").join(level).join(name).join(flat_name(root, &src));
                    (src, obj)
                })
        })
        .collect();
    let mut objs: Vec<PathBuf> = jobs
        .par_iter()
        .filter_map(|(src, obj)| compile_one(src, obj, level, &[]))
        .filter(|o| fs::metadata(o).map(|m| m.len() > 0).unwrap_or(false))
        .collect();
    objs.sort();
    objs
}

pub fn is_held_out(p: &Path) -> bool {
    p.components().any(|c| c.as_os_str() == HELD_OUT_DIR)
}

/// Statically linked 32-bit executable built from the held-out sources,
/// with unresolved libc references left dangling.
pub fn held_out_executable(roots: &[(String, PathBuf)]) -> Result<PathBuf, String> {
    let exe = cache_root().join("held-out").join("lua53");
    if exe.exists() {
        return Ok(exe);
    }
    let (_, root) = roots
        .iter()
        .find(|(n, _)| n == "lua-src")
        .ok_or("lua-src not resolved")?;
    let dir = root.join(HELD_OUT_DIR);
    let objdir = cache_root().join("held-out").join("obj");
    let mut objs = Vec::new();
    for src in c_files(&dir) {
        let name = src.file_name().unwrap().to_string_lossy();
        if name == "luac.c" {
            continue;
        }
        let obj = objdir.join(flat_name(&dir, &src));
        if let Some(o) = compile_one(&src, &obj, "O2", &["-fno-stack-protector", "-fno-pie"]) {
            objs.push(o);
        }
    }
    if objs.len() < 10 {
        return Err(format!("only {} held-out objects compiled", objs.len()));
    }
    let tmp = exe.with_extension("tmp");
    let out = Command::new("gcc")
        .args(["-m32", "-no-pie", "-nostdlib", "-static", "-Wl,--unresolved-symbols=ignore-all", "-o"])
        .arg(&tmp)
        .args(&objs)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("link failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    fs::rename(tmp, &exe).map_err(|e| e.to_string())?;
    Ok(exe)
}

/// Generated documents as `(family, path)`, cached per argument set.
pub fn documents(count: usize, seed: u64, min_kb: usize, max_kb: usize) -> Result<Vec<(String, PathBuf)>, String> {
    let dir = cache_root().join(format!("docs-{count}-{seed}-{min_kb}-{max_kb}"));
    let listing = dir.join("listing.tsv");
    if !listing.exists() {
        let _ = fs::remove_dir_all(&dir);
        let out = Command::new("python3")
            .arg(script())
            .arg(&dir)
            .arg(count.to_string())
            .args(["--seed", &seed.to_string(), "--min-kb", &min_kb.to_string(), "--max-kb", &max_kb.to_string()])
            .output()
            .map_err(|e| format!("run python3: {e}"))?;
        if !out.status.success() {
            return Err(format!("document generator failed: {}", String::from_utf8_lossy(&out.stderr)));
        }
        fs::write(&listing, &out.stdout).map_err(|e| e.to_string())?;
    }
    let text = fs::read_to_string(&listing).map_err(|e| e.to_string())?;
    Ok(text
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .map(|(f, p)| (f.to_string(), PathBuf::from(p)))
        .collect())
}

/// Writes a manifest at `path` with paths relative to its directory.
pub fn write_manifest(path: &Path, programs: &[(String, PathBuf)], others: &[(String, PathBuf)]) {
    let base = path.parent().unwrap();
    let mut text = String::new();
    for (cat, list) in [("Program", programs), ("Others", others)] {
        for (source, p) in list {
            let rel = p.strip_prefix(base).unwrap_or(p);
            writeln!(text, "{cat}\t{source}\t{}", rel.display()).unwrap();
        }
    }
    fs::write(path, text).unwrap();
}

/// What one corpus size needs.
pub struct Plan {
    pub name: &'static str,
    pub crates: &'static [&'static str],
    pub levels: &'static [&'static str],
    pub docs: (usize, u64, usize, usize),
}

pub const SMOKE: Plan = Plan {
    name: "smoke",
    crates: &["bzip2-sys", "libz-sys", "lua-src", "lzma-sys"],
    levels: &["O2"],
    docs: (21, 1, 16, 128),
};

pub const FULL: Plan = Plan {
    name: "full",
    crates: &[
        "bzip2-sys", "curl-sys", "libgit2-sys", "libsqlite3-sys", "libz-sys", "lua-src", "lzma-sys", "zstd-sys",
    ],
    levels: &["O0", "O2", "Os"],
    docs: (84, 2, 32, 256),
};

pub struct Assembled {
    pub manifest: PathBuf,
    pub objects: Vec<PathBuf>,
    pub documents: Vec<(String, PathBuf)>,
}

/// Compiles, generates and writes `<name>.manifest` under the cache root.
pub fn assemble(plan: &Plan) -> Result<Assembled, String> {
    let roots: Vec<(String, PathBuf)> = source_roots()?
        .into_iter()
        .filter(|(n, _)| plan.crates.contains(&n.as_str()))
        .collect();
    let mut programs = Vec::new();
    let mut objects = Vec::new();
    for level in plan.levels {
        for o in compile_crates(&roots, level, &|p| !is_held_out(p)) {
            programs.push((format!("gcc-{level}"), o.clone()));
            objects.push(o);
        }
    }
    if objects.is_empty() {
        return Err("no C file compiled; is a 32-bit capable gcc installed?".into());
    }
    let (count, seed, lo, hi) = plan.docs;
    let documents = documents(count, seed, lo, hi)?;
    let manifest = cache_root().join(format!("{}.manifest", plan.name));
    write_manifest(&manifest, &programs, &documents);
    Ok(Assembled {
        manifest,
        objects,
        documents,
    })
}
