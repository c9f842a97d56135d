//! Lossless I/O against the standard 3DGS PLY layout.
//!
//! Stored scales are log-space and opacity is a logit; activations are
//! applied on load and inverted on save so the in-memory scene always
//! holds geometric values.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::math;
use crate::scalar::Real;
use crate::scene::{logistic, logit, Gaussian, GaussianScene};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Format {
    Ascii,
    BinaryLittleEndian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum PropType {
    F32,
    F64,
}

impl PropType {
    fn size(self) -> usize {
        match self {
            PropType::F32 => 4,
            PropType::F64 => 8,
        }
    }
}

struct Header {
    format: Format,
    vertex_count: usize,
    /// (name, type) in declaration order.
    properties: Vec<(String, PropType)>,
}

fn parse_header<R: BufRead>(reader: &mut R) -> Result<Header> {
    let mut line = String::new();
    reader.read_line(&mut line).map_err(io_err)?;
    if line.trim() != "ply" {
        return Err(Error::PlyParse("missing 'ply' magic line".into()));
    }

    let mut format = None;
    let mut vertex_count = None;
    let mut properties = Vec::new();
    let mut in_vertex_element = false;

    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(io_err)?;
        if n == 0 {
            return Err(Error::PlyParse("unexpected end of header".into()));
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | [] => {}
            ["format", fmt, _version] => {
                format = Some(match *fmt {
                    "ascii" => Format::Ascii,
                    "binary_little_endian" => Format::BinaryLittleEndian,
                    other => {
                        return Err(Error::PlyParse(format!("unsupported format '{other}'")));
                    }
                });
            }
            ["element", "vertex", count] => {
                in_vertex_element = true;
                vertex_count = Some(
                    count
                        .parse::<usize>()
                        .map_err(|_| Error::PlyParse(format!("bad vertex count '{count}'")))?,
                );
            }
            ["element", name, _count] => {
                if in_vertex_element && !properties.is_empty() {
                    return Err(Error::PlyParse(format!(
                        "unsupported element '{name}' after vertex data"
                    )));
                }
                in_vertex_element = false;
            }
            ["property", ty, name] if in_vertex_element => {
                let ty = match *ty {
                    "float" | "float32" => PropType::F32,
                    "double" | "float64" => PropType::F64,
                    other => {
                        return Err(Error::PlyParse(format!(
                            "unsupported property type '{other}' for '{name}'"
                        )));
                    }
                };
                properties.push((name.to_string(), ty));
            }
            ["property", ..] => {}
            other => {
                return Err(Error::PlyParse(format!("bad header line: {other:?}")));
            }
        }
    }

    Ok(Header {
        format: format.ok_or_else(|| Error::PlyParse("missing format line".into()))?,
        vertex_count: vertex_count
            .ok_or_else(|| Error::PlyParse("missing 'element vertex' line".into()))?,
        properties,
    })
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<stream>".into(),
        source: e,
    }
}

const REQUIRED: [&str; 14] = [
    "x", "y", "z", "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3", "opacity",
    "f_dc_0", "f_dc_1", "f_dc_2",
];

/// Loads a 3DGS PLY export: activations applied, quaternion normalized,
/// scene recentered at the position centroid.
pub fn load_ply<S: Real>(path: &Path) -> Result<GaussianScene<S>> {
    let file = File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut reader = BufReader::new(file);
    let header = parse_header(&mut reader)?;

    let index_of = |name: &str| -> Result<usize> {
        header
            .properties
            .iter()
            .position(|(n, _)| n == name)
            .ok_or_else(|| Error::PlyMissingProperty(name.to_string()))
    };
    for name in REQUIRED {
        index_of(name)?;
    }

    let pos_idx = [index_of("x")?, index_of("y")?, index_of("z")?];
    let scale_idx = [index_of("scale_0")?, index_of("scale_1")?, index_of("scale_2")?];
    let rot_idx = [
        index_of("rot_0")?,
        index_of("rot_1")?,
        index_of("rot_2")?,
        index_of("rot_3")?,
    ];
    let opacity_idx = index_of("opacity")?;
    let dc_idx = [index_of("f_dc_0")?, index_of("f_dc_1")?, index_of("f_dc_2")?];
    // f_rest_* carried verbatim, in declaration order.
    let rest_idx: Vec<usize> = header
        .properties
        .iter()
        .enumerate()
        .filter(|(_, (n, _))| n.starts_with("f_rest_"))
        .map(|(i, _)| i)
        .collect();

    let nprops = header.properties.len();
    let mut row = vec![0.0f64; nprops];
    let mut gaussians = Vec::with_capacity(header.vertex_count);

    let mut binary_buf = Vec::new();
    if header.format == Format::BinaryLittleEndian {
        let row_bytes: usize = header.properties.iter().map(|(_, t)| t.size()).sum();
        binary_buf.resize(row_bytes, 0u8);
    }

    for vertex in 0..header.vertex_count {
        match header.format {
            Format::BinaryLittleEndian => {
                reader.read_exact(&mut binary_buf).map_err(|_| Error::Decode {
                    offset: 0,
                    message: format!("truncated vertex data at vertex {vertex}"),
                })?;
                let mut off = 0usize;
                for (i, (_, ty)) in header.properties.iter().enumerate() {
                    row[i] = match ty {
                        PropType::F32 => f32::from_le_bytes(
                            binary_buf[off..off + 4].try_into().unwrap(),
                        ) as f64,
                        PropType::F64 => {
                            f64::from_le_bytes(binary_buf[off..off + 8].try_into().unwrap())
                        }
                    };
                    off += ty.size();
                }
            }
            Format::Ascii => {
                let mut line = String::new();
                loop {
                    line.clear();
                    let n = reader.read_line(&mut line).map_err(io_err)?;
                    if n == 0 {
                        return Err(Error::PlyParse(format!(
                            "unexpected end of file at vertex {vertex}"
                        )));
                    }
                    if !line.trim().is_empty() {
                        break;
                    }
                }
                let values: Vec<f64> = line
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::PlyParse(format!("bad ascii vertex {vertex}")))?;
                if values.len() != nprops {
                    return Err(Error::PlyParse(format!(
                        "vertex {vertex}: expected {nprops} values, got {}",
                        values.len()
                    )));
                }
                row.copy_from_slice(&values);
            }
        }

        let finite = |v: f64, field: &'static str| -> Result<f64> {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::PlyData { index: vertex, field })
            }
        };

        let position = [
            S::from_f64(finite(row[pos_idx[0]], "x")?),
            S::from_f64(finite(row[pos_idx[1]], "y")?),
            S::from_f64(finite(row[pos_idx[2]], "z")?),
        ];
        let scale = [
            S::from_f64(finite(row[scale_idx[0]], "scale_0")?.exp()),
            S::from_f64(finite(row[scale_idx[1]], "scale_1")?.exp()),
            S::from_f64(finite(row[scale_idx[2]], "scale_2")?.exp()),
        ];
        let rotation = math::quat_normalize([
            S::from_f64(finite(row[rot_idx[0]], "rot_0")?),
            S::from_f64(finite(row[rot_idx[1]], "rot_1")?),
            S::from_f64(finite(row[rot_idx[2]], "rot_2")?),
            S::from_f64(finite(row[rot_idx[3]], "rot_3")?),
        ]);
        let opacity = logistic(S::from_f64(finite(row[opacity_idx], "opacity")?));
        let color_dc = [
            S::from_f64(finite(row[dc_idx[0]], "f_dc_0")?),
            S::from_f64(finite(row[dc_idx[1]], "f_dc_1")?),
            S::from_f64(finite(row[dc_idx[2]], "f_dc_2")?),
        ];
        let sh_rest = rest_idx.iter().map(|&i| row[i] as f32).collect();

        gaussians.push(Gaussian {
            position,
            scale,
            rotation,
            opacity,
            color_dc,
            sh_rest,
        });
    }

    Ok(GaussianScene::from_gaussians(gaussians, [S::zero(); 3]))
}

/// Writes the scene back in the reference binary layout; inverse transforms
/// (log scale, logit opacity, centroid re-add) applied.
pub fn save_ply<S: Real>(scene: &GaussianScene<S>, path: &Path) -> Result<()> {
    if scene.is_empty() {
        return Err(Error::EmptyScene);
    }
    let file = File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut w = BufWriter::new(file);
    let map_io = |e: std::io::Error| Error::Io {
        path: path.to_path_buf(),
        source: e,
    };

    let rest_count = scene.gaussians[0].sh_rest.len();

    let mut header = String::new();
    header.push_str("ply\nformat binary_little_endian 1.0\n");
    header.push_str(&format!("element vertex {}\n", scene.len()));
    for name in ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2"] {
        header.push_str(&format!("property float {name}\n"));
    }
    for i in 0..rest_count {
        header.push_str(&format!("property float f_rest_{i}\n"));
    }
    header.push_str("property float opacity\n");
    for name in ["scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"] {
        header.push_str(&format!("property float {name}\n"));
    }
    header.push_str("end_header\n");
    w.write_all(header.as_bytes()).map_err(map_io)?;

    let put = |w: &mut BufWriter<File>, v: f32| w.write_all(&v.to_le_bytes()).map_err(map_io);

    for g in &scene.gaussians {
        let world = math::add(g.position, scene.centroid_offset);
        for i in 0..3 {
            put(&mut w, world[i].as_f32())?;
        }
        for _ in 0..3 {
            put(&mut w, 0.0)?; // normals unused
        }
        for i in 0..3 {
            put(&mut w, g.color_dc[i].as_f32())?;
        }
        for &v in &g.sh_rest {
            put(&mut w, v)?;
        }
        put(&mut w, logit(g.opacity).as_f32())?;
        for i in 0..3 {
            put(&mut w, g.scale[i].ln().as_f32())?;
        }
        for i in 0..4 {
            put(&mut w, g.rotation[i].as_f32())?;
        }
    }
    w.flush().map_err(map_io)?;
    Ok(())
}
