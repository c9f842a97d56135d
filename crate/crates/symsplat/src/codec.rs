//! Binary container for compressed scenes plus full reconstruction by
//! recursive reflection.
//!
//! Layout (little-endian): 60-byte header, then per level (outermost
//! first) mirror as 3 f64 + retained count u32 + retained positions as
//! 3 f32 each, then the last-left and last-out gaussian blocks. A
//! gaussian block is 14 f32 (position, log-scale, rotation, logit
//! opacity, color dc) followed by a u32-length-prefixed SH payload.

use std::fs;
use std::path::Path;

use crate::compress::{CompressedScene, CompressionLevel};
use crate::error::{Error, Result};
use crate::kdtree::KdTree;
use crate::math::Vec3;
use crate::mirror::MirrorPlane;
use crate::reflect::{reflect_gaussian, RotationMode};
use crate::scalar::Real;
use crate::scene::{logistic, logit, Gaussian, GaussianScene};

pub const MAGIC: [u8; 4] = *b"SYMG";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 60;

const FLAG_HOUSEHOLDER: u32 = 1;
const FLAG_SH_PAYLOAD: u32 = 2;

/// Closed-form container size in bytes for a given scene.
pub fn encoded_size<S: Real>(cs: &CompressedScene<S>) -> usize {
    let levels: usize = cs
        .levels
        .iter()
        .map(|l| 24 + 4 + 12 * l.retained_count())
        .sum();
    let gaussians: usize = cs
        .last_left
        .iter()
        .chain(&cs.last_out)
        .map(|g| 56 + 4 + 4 * g.sh_rest.len())
        .sum();
    HEADER_LEN + levels + gaussians
}

fn put_f32(buf: &mut Vec<u8>, v: f32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_gaussian<S: Real>(buf: &mut Vec<u8>, g: &Gaussian<S>) {
    for i in 0..3 {
        put_f32(buf, g.position[i].as_f32());
    }
    for i in 0..3 {
        put_f32(buf, g.scale[i].ln().as_f32());
    }
    for i in 0..4 {
        put_f32(buf, g.rotation[i].as_f32());
    }
    put_f32(buf, logit(g.opacity).as_f32());
    for i in 0..3 {
        put_f32(buf, g.color_dc[i].as_f32());
    }
    put_u32(buf, g.sh_rest.len() as u32);
    for &v in &g.sh_rest {
        put_f32(buf, v);
    }
}

/// Serializes to a byte vector.
pub fn encode_bytes<S: Real>(cs: &CompressedScene<S>) -> Vec<u8> {
    let mut buf = Vec::with_capacity(encoded_size(cs));
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(cs.levels.len() as u16).to_le_bytes());
    put_u32(&mut buf, cs.last_left.len() as u32);
    put_u32(&mut buf, cs.last_out.len() as u32);
    put_f64(&mut buf, cs.extent.as_f64());
    for i in 0..3 {
        put_f64(&mut buf, cs.centroid_offset[i].as_f64());
    }
    let sh_present = cs
        .last_left
        .iter()
        .chain(&cs.last_out)
        .any(|g| !g.sh_rest.is_empty());
    let mut flags = 0u32;
    if cs.householder_rotations {
        flags |= FLAG_HOUSEHOLDER;
    }
    if sh_present {
        flags |= FLAG_SH_PAYLOAD;
    }
    put_u32(&mut buf, flags);
    put_f64(&mut buf, cs.match_tol.as_f64());

    for level in &cs.levels {
        put_f64(&mut buf, level.mirror.alpha.as_f64());
        put_f64(&mut buf, level.mirror.beta.as_f64());
        put_f64(&mut buf, level.mirror.gamma.as_f64());
        put_u32(&mut buf, level.retained_count() as u32);
        for p in &level.retained_positions {
            for i in 0..3 {
                put_f32(&mut buf, p[i].as_f32());
            }
        }
    }
    for g in cs.last_left.iter().chain(&cs.last_out) {
        put_gaussian(&mut buf, g);
    }
    buf
}

/// Writes the container to `path`, returning the byte count.
pub fn encode<S: Real>(cs: &CompressedScene<S>, path: &Path) -> Result<u64> {
    let bytes = encode_bytes(cs);
    fs::write(path, &bytes).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(bytes.len() as u64)
}

struct Reader<'a> {
    data: &'a [u8],
    offset: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.offset + n > self.data.len() {
            return Err(Error::Decode {
                offset: self.data.len() as u64,
                message: format!("truncated while reading {what}"),
            });
        }
        let s = &self.data[self.offset..self.offset + n];
        self.offset += n;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f32(&mut self, what: &str) -> Result<f32> {
        Ok(f32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn vec3_f32<S: Real>(&mut self, what: &str) -> Result<Vec3<S>> {
        Ok([
            S::from_f32(self.f32(what)?),
            S::from_f32(self.f32(what)?),
            S::from_f32(self.f32(what)?),
        ])
    }
}

fn read_gaussian<S: Real>(r: &mut Reader) -> Result<Gaussian<S>> {
    let position = r.vec3_f32("gaussian position")?;
    let log_scale: Vec3<S> = r.vec3_f32("gaussian scale")?;
    let rotation = [
        S::from_f32(r.f32("gaussian rotation")?),
        S::from_f32(r.f32("gaussian rotation")?),
        S::from_f32(r.f32("gaussian rotation")?),
        S::from_f32(r.f32("gaussian rotation")?),
    ];
    let opacity = logistic(S::from_f32(r.f32("gaussian opacity")?));
    let color_dc = r.vec3_f32("gaussian color")?;
    let sh_len = r.u32("sh payload length")? as usize;
    let mut sh_rest = Vec::with_capacity(sh_len);
    for _ in 0..sh_len {
        sh_rest.push(r.f32("sh payload")?);
    }
    Ok(Gaussian {
        position,
        scale: [log_scale[0].exp(), log_scale[1].exp(), log_scale[2].exp()],
        rotation,
        opacity,
        color_dc,
        sh_rest,
    })
}

/// Parses a container from bytes.
pub fn decode_bytes<S: Real>(data: &[u8]) -> Result<CompressedScene<S>> {
    let mut r = Reader { data, offset: 0 };
    let magic = r.take(4, "magic")?;
    if magic != MAGIC {
        return Err(Error::Decode {
            offset: 0,
            message: "bad magic".into(),
        });
    }
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::Decode {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let level_count = r.u16("level count")? as usize;
    let n_left = r.u32("last_left count")? as usize;
    let n_out = r.u32("last_out count")? as usize;
    let extent = S::from_f64(r.f64("extent")?);
    let centroid_offset = [
        S::from_f64(r.f64("centroid offset")?),
        S::from_f64(r.f64("centroid offset")?),
        S::from_f64(r.f64("centroid offset")?),
    ];
    let flags = r.u32("flags")?;
    let match_tol = S::from_f64(r.f64("match tolerance")?);

    let mut levels = Vec::with_capacity(level_count);
    for _ in 0..level_count {
        let mirror = MirrorPlane {
            alpha: S::from_f64(r.f64("mirror alpha")?),
            beta: S::from_f64(r.f64("mirror beta")?),
            gamma: S::from_f64(r.f64("mirror gamma")?),
        };
        let count = r.u32("retained count")? as usize;
        let mut retained_positions = Vec::with_capacity(count);
        for _ in 0..count {
            retained_positions.push(r.vec3_f32("retained position")?);
        }
        levels.push(CompressionLevel {
            mirror,
            retained_positions,
        });
    }
    let mut last_left = Vec::with_capacity(n_left);
    for _ in 0..n_left {
        last_left.push(read_gaussian(&mut r)?);
    }
    let mut last_out = Vec::with_capacity(n_out);
    for _ in 0..n_out {
        last_out.push(read_gaussian(&mut r)?);
    }
    if r.offset != data.len() {
        return Err(Error::Decode {
            offset: r.offset as u64,
            message: "trailing bytes after container".into(),
        });
    }
    Ok(CompressedScene {
        levels,
        last_left,
        last_out,
        centroid_offset,
        extent,
        householder_rotations: flags & FLAG_HOUSEHOLDER != 0,
        match_tol,
    })
}

/// Reads a container from `path`.
pub fn decode<S: Real>(path: &Path) -> Result<CompressedScene<S>> {
    let data = fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    decode_bytes(&data)
}

/// Expands a container back into a full scene. The innermost level's
/// retained half is reflected first; each enclosing level then
/// re-identifies its retained set by greedy injective nearest-neighbor
/// matching of stored positions against the working set and reflects it.
pub fn reconstruct<S: Real>(cs: &CompressedScene<S>) -> Result<GaussianScene<S>> {
    let mode = if cs.householder_rotations {
        RotationMode::Householder
    } else {
        RotationMode::CopyVerbatim
    };
    let mut working: Vec<Gaussian<S>> = cs.last_left.clone();
    if let Some(last) = cs.levels.last() {
        for g in &cs.last_left {
            working.push(reflect_gaussian(g, &last.mirror, mode));
        }
    }
    working.extend(cs.last_out.iter().cloned());

    let levels = cs.levels.len();
    for l in (0..levels.saturating_sub(1)).rev() {
        let level = &cs.levels[l];
        let positions: Vec<Vec3<S>> = working.iter().map(|g| g.position).collect();
        let tree = KdTree::build(&positions);
        let mut claimed = vec![false; working.len()];
        let tol2 = cs.match_tol * cs.match_tol;
        let mut reflected = Vec::with_capacity(level.retained_count());
        for (index, &p) in level.retained_positions.iter().enumerate() {
            let hit = tree.nearest_filtered(p, &mut |i| !claimed[i as usize]);
            let Some((i, d2)) = hit else {
                return Err(Error::Reconstruction { level: l, index });
            };
            if d2 > tol2 {
                return Err(Error::Reconstruction { level: l, index });
            }
            claimed[i as usize] = true;
            reflected.push(reflect_gaussian(&working[i as usize], &level.mirror, mode));
        }
        working.append(&mut reflected);
    }

    Ok(GaussianScene {
        gaussians: working,
        centroid_offset: cs.centroid_offset,
        extent: cs.extent,
    })
}

/// Relative compression factor.
pub fn rcf(original_bytes: u64, compressed_bytes: u64) -> Result<f64> {
    if compressed_bytes == 0 {
        return Err(Error::ZeroCompressedSize);
    }
    Ok(original_bytes as f64 / compressed_bytes as f64)
}
