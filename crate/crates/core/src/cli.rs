//! Command-line front end: one label in, one mid-surface mesh per object out.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{ArgGroup, Parser};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{load_volume, write_mesh, write_polylines, MeshFormat};
use crate::phantom::{generate_phantom, PhantomSpec};
use crate::pipeline::{extract_mid_surface, StageTimes};
use crate::quality::report;
use crate::volume::{extract_objects, BinaryMask3D, LabeledVolume};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NO_OBJECTS: i32 = 3;
pub const EXIT_PARTIAL: i32 = 4;

/// Extract mid-surface meshes of thin-shell objects from a label volume.
#[derive(Debug, Parser)]
#[command(name = "midsurface", version)]
#[command(group(ArgGroup::new("source").required(true).args(["input", "phantom"])))]
pub struct Args {
    /// Label volume (.nrrd, .nhdr, .mhd or .mha).
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Generate a synthetic volume instead of reading one,
    /// e.g. `cylinder:r_in=10,r_out=14,dims=64`.
    #[arg(long)]
    pub phantom: Option<String>,

    /// Label value of the objects to extract.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub label: u16,

    /// Output directory, created if missing.
    #[arg(long)]
    pub output: PathBuf,

    /// Also write the traced mid-polylines of each object.
    #[arg(long)]
    pub dump_polylines: bool,

    /// Also write a mesh quality report for each object.
    #[arg(long)]
    pub report: bool,
}

struct ObjectSummary {
    polylines: usize,
    vertices: usize,
    triangles: usize,
    times: StageTimes,
    note: Option<String>,
}

/// Parses `args` (program name first) and runs the extraction.
/// Returns the process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    execute(&args)
}

/// Runs a parsed command line. Returns the process exit code.
pub fn execute(args: &Args) -> i32 {
    let (volume, input) = match load_input(args) {
        Ok(v) => v,
        Err(e @ Error::InvalidPhantom(_)) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_IO;
        }
    };
    let objects = extract_objects(&volume, args.label);
    if objects.is_empty() {
        eprintln!("error: no objects: label {} has no voxels in {input}", args.label);
        return EXIT_NO_OBJECTS;
    }
    if let Err(e) = fs::create_dir_all(&args.output) {
        eprintln!("error: {}", Error::io(&args.output, e));
        return EXIT_IO;
    }

    let results: Vec<Result<ObjectSummary>> =
        objects.par_iter().enumerate().map(|(i, mask)| process_object(args, i + 1, mask)).collect();

    let mut failed = 0;
    for (i, r) in results.iter().enumerate() {
        match r {
            Ok(s) => println!("object {}: {} polylines, {} triangles", i + 1, s.polylines, s.triangles),
            Err(e) => {
                failed += 1;
                eprintln!("error: object {}: {e}", i + 1);
            }
        }
    }
    let manifest = args.output.join("manifest.txt");
    if let Err(e) = fs::write(&manifest, manifest_text(&input, args.label, &results)) {
        eprintln!("error: {}", Error::io(&manifest, e));
        return EXIT_IO;
    }
    if failed > 0 {
        EXIT_PARTIAL
    } else {
        EXIT_OK
    }
}

fn load_input(args: &Args) -> Result<(LabeledVolume, String)> {
    match (&args.input, &args.phantom) {
        (_, Some(spec)) => {
            let spec: PhantomSpec = spec.parse()?;
            Ok((generate_phantom(&spec)?.volume, format!("phantom:{}", args.phantom.as_deref().unwrap_or(""))))
        }
        (Some(path), None) => Ok((load_volume(path)?, path.display().to_string())),
        (None, None) => unreachable!("clap requires a source"),
    }
}

fn object_path(dir: &Path, k: usize, suffix: &str) -> PathBuf {
    dir.join(format!("object_{k}{suffix}"))
}

fn process_object(args: &Args, k: usize, mask: &BinaryMask3D) -> Result<ObjectSummary> {
    let out = extract_mid_surface::<f64>(mask)?;
    write_mesh(&out.mesh, object_path(&args.output, k, ".obj"), MeshFormat::Obj)?;
    if args.dump_polylines {
        write_polylines(&out.stack, object_path(&args.output, k, "_lines.obj"))?;
    }
    let mut note = None;
    if out.mesh.single_slice {
        note = Some("single slice, no triangles".to_string());
    }
    if args.report {
        match report(&out.mesh) {
            Ok(r) => {
                let p = object_path(&args.output, k, "_report.txt");
                fs::write(&p, r.to_text()).map_err(|e| Error::io(&p, e))?;
            }
            Err(e) => note = Some(format!("no report: {e}")),
        }
    }
    Ok(ObjectSummary {
        polylines: out.stack.polyline_count(),
        vertices: out.mesh.vertex_count(),
        triangles: out.mesh.triangle_count(),
        times: out.times,
        note,
    })
}

/// `key = value` lines; every timing key starts with `time_`.
fn manifest_text(input: &str, label: u16, results: &[Result<ObjectSummary>]) -> String {
    let mut m = String::new();
    let failed = results.iter().filter(|r| r.is_err()).count();
    let _ = writeln!(m, "tool_version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(m, "input = {input}");
    let _ = writeln!(m, "label = {label}");
    let _ = writeln!(m, "object_count = {}", results.len());
    let _ = writeln!(m, "failed_count = {failed}");
    let mut total = StageTimes::default();
    for (i, r) in results.iter().enumerate() {
        let k = i + 1;
        match r {
            Ok(s) => {
                let _ = writeln!(m, "object_{k}_status = ok");
                let _ = writeln!(m, "object_{k}_polylines = {}", s.polylines);
                let _ = writeln!(m, "object_{k}_vertices = {}", s.vertices);
                let _ = writeln!(m, "object_{k}_triangles = {}", s.triangles);
                if let Some(note) = &s.note {
                    let _ = writeln!(m, "object_{k}_note = {note}");
                }
                let t = &s.times;
                let _ = writeln!(m, "time_object_{k}_ridge_field = {:.6}", t.ridge_field.as_secs_f64());
                let _ = writeln!(m, "time_object_{k}_tracing = {:.6}", t.tracing.as_secs_f64());
                let _ = writeln!(m, "time_object_{k}_zipping = {:.6}", t.zipping.as_secs_f64());
                let _ = writeln!(m, "time_object_{k}_total = {:.6}", t.total().as_secs_f64());
                total.ridge_field += t.ridge_field;
                total.tracing += t.tracing;
                total.zipping += t.zipping;
            }
            Err(e) => {
                let _ = writeln!(m, "object_{k}_status = failed: {e}");
            }
        }
    }
    let _ = writeln!(m, "time_tracing = {:.6}", (total.ridge_field + total.tracing).as_secs_f64());
    let _ = writeln!(m, "time_meshing = {:.6}", total.zipping.as_secs_f64());
    let _ = writeln!(m, "time_total = {:.6}", total.total().as_secs_f64());
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_in(dir: &Path, extra: &[&str]) -> i32 {
        let out = dir.to_str().unwrap();
        let mut args = vec!["midsurface", "--output", out];
        args.extend_from_slice(extra);
        run(args)
    }

    #[test]
    fn missing_source_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_in(dir.path(), &[]), EXIT_USAGE);
    }

    #[test]
    fn both_sources_conflict() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_in(dir.path(), &["--input", "x.nrrd", "--phantom", "slab:thickness=3,dims=16"]), EXIT_USAGE);
    }

    #[test]
    fn label_zero_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_in(dir.path(), &["--phantom", "slab:thickness=3,dims=16", "--label", "0"]), EXIT_USAGE);
    }

    #[test]
    fn bad_phantom_is_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_in(dir.path(), &["--phantom", "blob:r=3"]), EXIT_USAGE);
    }

    #[test]
    fn absent_label_has_its_own_code() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(run_in(dir.path(), &["--phantom", "slab:thickness=3,dims=16", "--label", "2"]), EXIT_NO_OBJECTS);
        assert!(!dir.path().join("manifest.txt").exists());
    }

    #[test]
    fn missing_input_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("none.nrrd");
        assert_eq!(run_in(dir.path(), &["--input", missing.to_str().unwrap()]), EXIT_IO);
    }

    #[test]
    fn manifest_notes_failures() {
        let ok = ObjectSummary { polylines: 2, vertices: 10, triangles: 8, times: StageTimes::default(), note: None };
        let text = manifest_text("in.nrrd", 1, &[Ok(ok), Err(Error::EmptyStack)]);
        assert!(text.contains("object_count = 2\n"));
        assert!(text.contains("failed_count = 1\n"));
        assert!(text.contains("object_1_triangles = 8\n"));
        assert!(text.contains("object_2_status = failed: polyline stack is empty\n"));
        for line in text.lines() {
            let (key, _) = line.split_once(" = ").expect("key = value");
            assert!(!key.contains("time") || key.starts_with("time_"), "{key}");
        }
    }
}
