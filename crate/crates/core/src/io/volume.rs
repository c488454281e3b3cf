//! NRRD and MetaImage (MHD+RAW) label volumes, raw little-endian only.

use std::fs;
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};
use crate::volume::{Grid3, LabeledVolume};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScalarType {
    U8,
    U16,
}

impl ScalarType {
    pub fn bytes(self) -> usize {
        match self {
            ScalarType::U8 => 1,
            ScalarType::U16 => 2,
        }
    }

    /// Narrowest type holding every label of `volume`.
    pub fn fitting(volume: &LabeledVolume) -> Self {
        if volume.data.iter().all(|&v| v <= u8::MAX as u16) {
            ScalarType::U8
        } else {
            ScalarType::U16
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeFormat {
    Nrrd,
    Mhd,
}

/// Parsed header of a raw little-endian volume file.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeHeader {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub origin: [f64; 3],
    pub scalar: ScalarType,
    pub format: VolumeFormat,
}

impl VolumeHeader {
    pub fn data_size(&self) -> usize {
        self.dims.iter().product::<usize>() * self.scalar.bytes()
    }
}

/// Where the voxel bytes live relative to the header.
#[derive(Clone, Debug, PartialEq)]
enum DataSource {
    /// Same file, starting at this byte offset.
    Attached(usize),
    /// Separate file; `skip` of `None` means the data is the tail of the file.
    Detached { path: PathBuf, skip: Option<usize> },
}

/// Reads a label volume, choosing the parser from the extension
/// (`.nrrd`/`.nhdr` or `.mhd`/`.mha`).
pub fn load_volume(path: impl AsRef<Path>) -> Result<LabeledVolume> {
    read_volume(path).map(|(_, v)| v)
}

/// Like [`load_volume`] but also returns the parsed header.
pub fn read_volume(path: impl AsRef<Path>) -> Result<(VolumeHeader, LabeledVolume)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (header, source) = match detect_format(path, &bytes) {
        VolumeFormat::Nrrd => parse_nrrd(path, &bytes)?,
        VolumeFormat::Mhd => parse_mhd(path, &bytes)?,
    };
    let raw = match &source {
        DataSource::Attached(offset) => slice_data(path, &bytes, Some(*offset), header.data_size())?.to_vec(),
        DataSource::Detached { path: data_path, skip } => {
            let data = fs::read(data_path).map_err(|e| Error::io(data_path, e))?;
            slice_data(data_path, &data, *skip, header.data_size())?.to_vec()
        }
    };
    let data = match header.scalar {
        ScalarType::U8 => raw.iter().map(|&b| b as u16).collect(),
        ScalarType::U16 => raw.chunks_exact(2).map(|c| u16::from_le_bytes([c[0], c[1]])).collect(),
    };
    let volume = LabeledVolume::new(Grid3::new(header.dims, header.spacing, header.origin), data);
    Ok((header, volume))
}

fn detect_format(path: &Path, bytes: &[u8]) -> VolumeFormat {
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    match ext.as_str() {
        "mhd" | "mha" => VolumeFormat::Mhd,
        "nrrd" | "nhdr" => VolumeFormat::Nrrd,
        _ if bytes.starts_with(b"NRRD") => VolumeFormat::Nrrd,
        _ => VolumeFormat::Mhd,
    }
}

fn slice_data<'a>(path: &Path, bytes: &'a [u8], skip: Option<usize>, expected: usize) -> Result<&'a [u8]> {
    let mismatch = |actual| Error::SizeMismatch { path: path.to_path_buf(), expected, actual };
    match skip {
        Some(offset) => {
            let actual = bytes.len().saturating_sub(offset);
            if actual != expected {
                return Err(mismatch(actual));
            }
            Ok(&bytes[offset..])
        }
        None => {
            if bytes.len() < expected {
                return Err(mismatch(bytes.len()));
            }
            Ok(&bytes[bytes.len() - expected..])
        }
    }
}

/// Splits `bytes` into header lines, stopping after the first blank line.
/// Returns the lines and the offset just past the blank line (or the end).
fn header_lines(bytes: &[u8]) -> (Vec<String>, usize) {
    let mut lines = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| pos + i);
        let line = String::from_utf8_lossy(&bytes[pos..end]).trim_end_matches('\r').to_string();
        pos = (end + 1).min(bytes.len());
        if line.is_empty() {
            return (lines, pos);
        }
        lines.push(line);
    }
    (lines, pos)
}

fn header_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Header { path: path.to_path_buf(), reason: reason.into() }
}

fn unsupported(path: &Path, field: &str, value: &str) -> Error {
    Error::Unsupported { path: path.to_path_buf(), field: field.to_string(), value: value.to_string() }
}

fn parse_numbers<N: std::str::FromStr>(path: &Path, field: &str, value: &str, count: usize) -> Result<Vec<N>> {
    let nums = value
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<N>().map_err(|_| header_err(path, format!("{field}: cannot parse '{s}'"))))
        .collect::<Result<Vec<_>>>()?;
    if nums.len() != count {
        return Err(header_err(path, format!("{field}: expected {count} values, got {}", nums.len())));
    }
    Ok(nums)
}

fn positive_spacing(path: &Path, field: &str, s: &[f64]) -> Result<[f64; 3]> {
    if s.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(header_err(path, format!("{field}: spacing must be positive, got {s:?}")));
    }
    Ok([s[0], s[1], s[2]])
}

fn sibling(header: &Path, name: &str) -> PathBuf {
    let p = Path::new(name);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        header.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn parse_nrrd(path: &Path, bytes: &[u8]) -> Result<(VolumeHeader, DataSource)> {
    let (lines, data_offset) = header_lines(bytes);
    let magic = lines.first().map(String::as_str).unwrap_or("");
    if !magic.starts_with("NRRD") {
        return Err(header_err(path, "missing NRRD magic line"));
    }
    let mut dims = None;
    let mut scalar = None;
    let mut spacing = None;
    let mut origin = [0.0; 3];
    let mut data_file = None;
    let mut byte_skip = Some(0);
    let mut big_endian = false;
    let mut encoding = None;
    for line in &lines[1..] {
        if line.starts_with('#') || line.contains(":=") {
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(header_err(path, format!("unparseable line '{line}'")));
        };
        let (key, value) = (key.trim().to_ascii_lowercase(), value.trim());
        match key.as_str() {
            "type" => {
                scalar = Some(match value.to_ascii_lowercase().as_str() {
                    "uchar" | "unsigned char" | "uint8" | "uint8_t" => ScalarType::U8,
                    "ushort" | "unsigned short" | "unsigned short int" | "uint16" | "uint16_t" => ScalarType::U16,
                    _ => return Err(unsupported(path, "type", value)),
                })
            }
            "dimension" => {
                if value != "3" {
                    return Err(unsupported(path, "dimension", value));
                }
            }
            "sizes" => {
                let s = parse_numbers::<usize>(path, "sizes", value, 3)?;
                dims = Some([s[0], s[1], s[2]]);
            }
            "encoding" => {
                if value != "raw" {
                    return Err(unsupported(path, "encoding", value));
                }
                encoding = Some(());
            }
            "endian" => big_endian = value == "big",
            "spacings" => {
                let s = parse_numbers::<f64>(path, "spacings", value, 3)?;
                spacing = Some(positive_spacing(path, "spacings", &s)?);
            }
            "space directions" => {
                let vectors = parse_vectors(path, value)?;
                let s: Vec<f64> = vectors.iter().map(|v| v.iter().map(|c| c * c).sum::<f64>().sqrt()).collect();
                spacing = Some(positive_spacing(path, "space directions", &s)?);
                if vectors.iter().enumerate().any(|(i, v)| v.iter().enumerate().any(|(j, &c)| i != j && c != 0.0)) {
                    warn!("{}: oblique space directions, only their lengths are used", path.display());
                }
            }
            "space origin" => {
                let v = parse_vectors(path, value)?;
                if v.len() != 1 {
                    return Err(header_err(path, "space origin: expected one vector"));
                }
                origin = [v[0][0], v[0][1], v[0][2]];
            }
            "data file" | "datafile" => {
                if value.starts_with("LIST") || value.split_whitespace().count() > 1 {
                    return Err(unsupported(path, "data file", value));
                }
                data_file = Some(sibling(path, value));
            }
            "byte skip" => {
                byte_skip = match value {
                    "-1" => None,
                    _ => Some(
                        value.parse().map_err(|_| header_err(path, format!("byte skip: cannot parse '{value}'")))?,
                    ),
                }
            }
            "line skip" if value != "0" => {
                return Err(unsupported(path, "line skip", value));
            }
            _ => {}
        }
    }
    let dims = dims.ok_or_else(|| header_err(path, "missing 'sizes'"))?;
    let scalar = scalar.ok_or_else(|| header_err(path, "missing 'type'"))?;
    if encoding.is_none() {
        return Err(header_err(path, "missing 'encoding'"));
    }
    if big_endian && scalar.bytes() > 1 {
        return Err(unsupported(path, "endian", "big"));
    }
    let header = finish_header(path, dims, spacing, origin, scalar, VolumeFormat::Nrrd)?;
    let source = match data_file {
        Some(p) => DataSource::Detached { path: p, skip: byte_skip },
        None => DataSource::Attached(data_offset + byte_skip.ok_or_else(|| unsupported(path, "byte skip", "-1"))?),
    };
    Ok((header, source))
}

/// Parses `(a,b,c) (d,e,f) ...`; `none` entries are rejected.
fn parse_vectors(path: &Path, value: &str) -> Result<Vec<[f64; 3]>> {
    value
        .split_whitespace()
        .map(|tok| {
            if tok == "none" {
                return Err(unsupported(path, "space directions", value));
            }
            let inner = tok.trim_start_matches('(').trim_end_matches(')');
            let v = parse_numbers::<f64>(path, "vector", inner, 3)?;
            Ok([v[0], v[1], v[2]])
        })
        .collect()
}

fn finish_header(
    path: &Path,
    dims: [usize; 3],
    spacing: Option<[f64; 3]>,
    origin: [f64; 3],
    scalar: ScalarType,
    format: VolumeFormat,
) -> Result<VolumeHeader> {
    if dims.contains(&0) {
        return Err(header_err(path, format!("sizes must be at least 1, got {dims:?}")));
    }
    let spacing = spacing.unwrap_or_else(|| {
        warn!("{}: no spacing given, using 1.0 per axis", path.display());
        [1.0; 3]
    });
    Ok(VolumeHeader { dims, spacing, origin, scalar, format })
}

fn parse_mhd(path: &Path, bytes: &[u8]) -> Result<(VolumeHeader, DataSource)> {
    let mut dims = None;
    let mut scalar = None;
    let mut spacing = None;
    let mut origin = [0.0; 3];
    let mut data_file = None;
    let mut header_size = Some(0);
    let mut pos = 0;
    while pos < bytes.len() {
        let end = bytes[pos..].iter().position(|&b| b == b'\n').map_or(bytes.len(), |i| pos + i);
        let line = String::from_utf8_lossy(&bytes[pos..end]).trim().to_string();
        pos = (end + 1).min(bytes.len());
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(header_err(path, format!("unparseable line '{line}'")));
        };
        let (key, value) = (key.trim(), value.trim());
        let flag = || value.eq_ignore_ascii_case("true");
        match key {
            "NDims" => {
                if value != "3" {
                    return Err(unsupported(path, "NDims", value));
                }
            }
            "DimSize" => {
                let s = parse_numbers::<usize>(path, key, value, 3)?;
                dims = Some([s[0], s[1], s[2]]);
            }
            "ElementType" => {
                scalar = Some(match value {
                    "MET_UCHAR" => ScalarType::U8,
                    "MET_USHORT" => ScalarType::U16,
                    _ => return Err(unsupported(path, "ElementType", value)),
                })
            }
            "ElementSpacing" => {
                let s = parse_numbers::<f64>(path, key, value, 3)?;
                spacing = Some(positive_spacing(path, key, &s)?);
            }
            "ElementSize" if spacing.is_none() => {
                let s = parse_numbers::<f64>(path, key, value, 3)?;
                spacing = Some(positive_spacing(path, key, &s)?);
            }
            "Offset" | "Origin" | "Position" => {
                let s = parse_numbers::<f64>(path, key, value, 3)?;
                origin = [s[0], s[1], s[2]];
            }
            "BinaryDataByteOrderMSB" | "ElementByteOrderMSB" => {
                if flag() {
                    return Err(unsupported(path, key, value));
                }
            }
            "CompressedData" => {
                if flag() {
                    return Err(unsupported(path, key, value));
                }
            }
            "ElementNumberOfChannels" => {
                if value != "1" {
                    return Err(unsupported(path, key, value));
                }
            }
            "HeaderSize" => {
                header_size = match value {
                    "-1" => None,
                    _ => Some(
                        value.parse().map_err(|_| header_err(path, format!("HeaderSize: cannot parse '{value}'")))?,
                    ),
                }
            }
            "ElementDataFile" => {
                data_file = Some(value.to_string());
                break;
            }
            _ => {}
        }
    }
    let dims = dims.ok_or_else(|| header_err(path, "missing 'DimSize'"))?;
    let scalar = scalar.ok_or_else(|| header_err(path, "missing 'ElementType'"))?;
    let data_file = data_file.ok_or_else(|| header_err(path, "missing 'ElementDataFile'"))?;
    let header = finish_header(path, dims, spacing, origin, scalar, VolumeFormat::Mhd)?;
    let source = match data_file.as_str() {
        "LOCAL" => match header_size {
            Some(n) => DataSource::Attached(pos + n),
            None => DataSource::Detached { path: path.to_path_buf(), skip: None },
        },
        name if name.starts_with("LIST") || name.contains('%') => {
            return Err(unsupported(path, "ElementDataFile", name))
        }
        name => DataSource::Detached { path: sibling(path, name), skip: header_size },
    };
    Ok((header, source))
}

fn encode(path: &Path, volume: &LabeledVolume, scalar: ScalarType) -> Result<Vec<u8>> {
    match scalar {
        ScalarType::U8 => volume
            .data
            .iter()
            .map(|&v| u8::try_from(v).map_err(|_| unsupported(path, "type", &format!("label {v} exceeds uchar"))))
            .collect(),
        ScalarType::U16 => Ok(volume.data.iter().flat_map(|v| v.to_le_bytes()).collect()),
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn data_path(path: &Path) -> PathBuf {
    path.with_extension("raw")
}

/// Writes an NRRD header. With `detached` the voxels go to a sibling `.raw`
/// file named in the header; otherwise they follow the header.
pub fn write_nrrd(path: impl AsRef<Path>, volume: &LabeledVolume, scalar: ScalarType, detached: bool) -> Result<()> {
    let path = path.as_ref();
    let g = &volume.grid;
    let data = encode(path, volume, scalar)?;
    let mut text = String::from("NRRD0004\n");
    text += match scalar {
        ScalarType::U8 => "type: uint8\n",
        ScalarType::U16 => "type: uint16\n",
    };
    text += "dimension: 3\n";
    text += &format!("sizes: {} {} {}\n", g.dims[0], g.dims[1], g.dims[2]);
    text += &format!("spacings: {} {} {}\n", g.spacing[0], g.spacing[1], g.spacing[2]);
    text += &format!("space origin: ({},{},{})\n", g.origin[0], g.origin[1], g.origin[2]);
    text += "endian: little\nencoding: raw\n";
    if detached {
        let raw = data_path(path);
        let name = raw.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        text += &format!("data file: {name}\n");
        write_file(&raw, &data)?;
        write_file(path, text.as_bytes())
    } else {
        text += "\n";
        let mut bytes = text.into_bytes();
        bytes.extend_from_slice(&data);
        write_file(path, &bytes)
    }
}

/// Writes an `.mhd` header plus a sibling `.raw` data file.
pub fn write_mhd(path: impl AsRef<Path>, volume: &LabeledVolume, scalar: ScalarType) -> Result<()> {
    let path = path.as_ref();
    let g = &volume.grid;
    let data = encode(path, volume, scalar)?;
    let raw = data_path(path);
    let name = raw.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let element = match scalar {
        ScalarType::U8 => "MET_UCHAR",
        ScalarType::U16 => "MET_USHORT",
    };
    let text = format!(
        "ObjectType = Image\nNDims = 3\nBinaryData = True\nBinaryDataByteOrderMSB = False\nCompressedData = False\n\
         Offset = {} {} {}\nElementSpacing = {} {} {}\nDimSize = {} {} {}\nElementType = {element}\nElementDataFile = {name}\n",
        g.origin[0], g.origin[1], g.origin[2], g.spacing[0], g.spacing[1], g.spacing[2], g.dims[0], g.dims[1], g.dims[2],
    );
    write_file(&raw, &data)?;
    write_file(path, text.as_bytes())
}
