//! File formats: binary PGM images, camera sidecars, pose files and hand
//! dimension files.
//!
//! All formats are plain text or standard PGM so results can be inspected
//! with stock tools. Depth images are 16-bit big-endian PGM with values in
//! integer millimeters (0 = no data); masks are 8-bit PGM with 255 = hand.
//! Round-trips are bitwise exact.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use handpose_core::{
    CameraIntrinsics, DepthImage, HandDimensions, HandPose, Observation, SilhouetteMask, POSE_DIM,
};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: PathBuf, msg: String },
    #[error(
        "dimension mismatch: {left_path} is {lw}x{lh} but {right_path} is {rw}x{rh}"
    )]
    DimensionMismatch {
        left_path: PathBuf,
        lw: u32,
        lh: u32,
        right_path: PathBuf,
        rw: u32,
        rh: u32,
    },
}

impl IoError {
    fn format(path: &Path, msg: impl Into<String>) -> Self {
        IoError::Format {
            path: path.to_path_buf(),
            msg: msg.into(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        IoError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, IoError> {
    fs::read(path).map_err(|e| IoError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    fs::write(path, bytes).map_err(|e| IoError::io(path, e))
}

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

/// Parses a P5 header, returning (width, height, maxval, body offset).
/// Accepts `#` comments and arbitrary whitespace, per the PGM spec.
fn parse_pgm_header(path: &Path, bytes: &[u8]) -> Result<(u32, u32, u32, usize), IoError> {
    if bytes.len() < 2 || &bytes[0..2] != b"P5" {
        return Err(IoError::format(path, "not a binary PGM (missing P5 magic)"));
    }
    let mut pos = 2;
    let mut fields = [0u32; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments.
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(IoError::format(path, "truncated PGM header")),
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == start {
            return Err(IoError::format(path, "malformed PGM header field"));
        }
        let text = std::str::from_utf8(&bytes[start..pos]).unwrap();
        *field = text
            .parse()
            .map_err(|_| IoError::format(path, format!("bad header number {text:?}")))?;
    }
    // Exactly one whitespace byte separates the header from the body.
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(IoError::format(path, "missing separator before PGM body")),
    }
    let (w, h, maxval) = (fields[0], fields[1], fields[2]);
    if w == 0 || h == 0 {
        return Err(IoError::format(path, "zero PGM dimensions"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(IoError::format(path, format!("unsupported maxval {maxval}")));
    }
    Ok((w, h, maxval, pos))
}

pub fn save_depth_pgm(path: &Path, d: &DepthImage) -> Result<(), IoError> {
    let mut out = Vec::with_capacity(32 + d.data.len() * 2);
    write!(out, "P5\n{} {}\n65535\n", d.width, d.height).unwrap();
    for &z in &d.data {
        out.extend_from_slice(&z.to_be_bytes());
    }
    write_bytes(path, &out)
}

pub fn load_depth_pgm(path: &Path) -> Result<DepthImage, IoError> {
    let bytes = read_bytes(path)?;
    let (w, h, maxval, body) = parse_pgm_header(path, &bytes)?;
    if maxval <= 255 {
        return Err(IoError::format(path, "depth PGM must be 16-bit (maxval 65535)"));
    }
    let expect = (w as usize) * (h as usize) * 2;
    let body = &bytes[body..];
    if body.len() < expect {
        return Err(IoError::format(
            path,
            format!("truncated body: {} bytes, expected {expect}", body.len()),
        ));
    }
    let data = body[..expect]
        .chunks_exact(2)
        .map(|p| u16::from_be_bytes([p[0], p[1]]))
        .collect();
    Ok(DepthImage {
        width: w,
        height: h,
        data,
    })
}

pub fn save_mask_pgm(path: &Path, m: &SilhouetteMask) -> Result<(), IoError> {
    let mut out = Vec::with_capacity(32 + m.data.len());
    write!(out, "P5\n{} {}\n255\n", m.width, m.height).unwrap();
    out.extend(m.data.iter().map(|&b| if b != 0 { 255u8 } else { 0 }));
    write_bytes(path, &out)
}

pub fn load_mask_pgm(path: &Path) -> Result<SilhouetteMask, IoError> {
    let bytes = read_bytes(path)?;
    let (w, h, maxval, body) = parse_pgm_header(path, &bytes)?;
    if maxval > 255 {
        return Err(IoError::format(path, "mask PGM must be 8-bit (maxval 255)"));
    }
    let expect = (w as usize) * (h as usize);
    let body = &bytes[body..];
    if body.len() < expect {
        return Err(IoError::format(
            path,
            format!("truncated body: {} bytes, expected {expect}", body.len()),
        ));
    }
    let data = body[..expect]
        .iter()
        .map(|&b| if b != 0 { 1u8 } else { 0 })
        .collect();
    Ok(SilhouetteMask {
        width: w,
        height: h,
        data,
    })
}

/// Writes an 8-bit visualization image (already scaled to 0..=255).
pub fn save_gray_pgm(path: &Path, width: u32, height: u32, data: &[u8]) -> Result<(), IoError> {
    let mut out = Vec::with_capacity(32 + data.len());
    write!(out, "P5\n{width} {height}\n255\n").unwrap();
    out.extend_from_slice(data);
    write_bytes(path, &out)
}

// ---------------------------------------------------------------------------
// Key-value text files
// ---------------------------------------------------------------------------

/// Parses `key = value` lines, ignoring blanks and `#` comments.
pub fn parse_key_values(path: &Path, text: &str) -> Result<Vec<(String, String)>, IoError> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            IoError::format(path, format!("line {}: expected `key = value`", lineno + 1))
        })?;
        pairs.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_num<T: std::str::FromStr>(path: &Path, key: &str, value: &str) -> Result<T, IoError> {
    value
        .parse()
        .map_err(|_| IoError::format(path, format!("bad value for {key}: {value:?}")))
}

// ---------------------------------------------------------------------------
// Camera sidecar
// ---------------------------------------------------------------------------

pub fn save_camera(path: &Path, cam: &CameraIntrinsics) -> Result<(), IoError> {
    let text = format!(
        "fx = {}\nfy = {}\ncx = {}\ncy = {}\nwidth = {}\nheight = {}\nz_near = {}\nz_far = {}\n",
        cam.fx, cam.fy, cam.cx, cam.cy, cam.width, cam.height, cam.z_near, cam.z_far
    );
    write_bytes(path, text.as_bytes())
}

pub fn load_camera(path: &Path) -> Result<CameraIntrinsics, IoError> {
    let text = String::from_utf8(read_bytes(path)?)
        .map_err(|_| IoError::format(path, "not valid UTF-8"))?;
    let mut cam = CameraIntrinsics::for_resolution(160, 120);
    let mut seen = [false; 8];
    for (key, value) in parse_key_values(path, &text)? {
        match key.as_str() {
            "fx" => (cam.fx, seen[0]) = (parse_num(path, &key, &value)?, true),
            "fy" => (cam.fy, seen[1]) = (parse_num(path, &key, &value)?, true),
            "cx" => (cam.cx, seen[2]) = (parse_num(path, &key, &value)?, true),
            "cy" => (cam.cy, seen[3]) = (parse_num(path, &key, &value)?, true),
            "width" => (cam.width, seen[4]) = (parse_num(path, &key, &value)?, true),
            "height" => (cam.height, seen[5]) = (parse_num(path, &key, &value)?, true),
            "z_near" => (cam.z_near, seen[6]) = (parse_num(path, &key, &value)?, true),
            "z_far" => (cam.z_far, seen[7]) = (parse_num(path, &key, &value)?, true),
            other => return Err(IoError::format(path, format!("unknown camera key {other:?}"))),
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        let names = ["fx", "fy", "cx", "cy", "width", "height", "z_near", "z_far"];
        return Err(IoError::format(path, format!("missing camera key {:?}", names[i])));
    }
    if !cam.is_valid() {
        return Err(IoError::format(path, "invalid camera intrinsics"));
    }
    Ok(cam)
}

// ---------------------------------------------------------------------------
// Observations
// ---------------------------------------------------------------------------

/// The conventional file trio inside an observation directory.
pub struct ObservationPaths {
    pub mask: PathBuf,
    pub depth: PathBuf,
    pub camera: PathBuf,
}

impl ObservationPaths {
    /// `<dir>/<stem>_mask.pgm`, `<dir>/<stem>_depth.pgm`, `<dir>/<stem>.cam`.
    pub fn in_dir(dir: &Path, stem: &str) -> Self {
        ObservationPaths {
            mask: dir.join(format!("{stem}_mask.pgm")),
            depth: dir.join(format!("{stem}_depth.pgm")),
            camera: dir.join(format!("{stem}.cam")),
        }
    }
}

pub fn save_observation(o: &Observation, paths: &ObservationPaths) -> Result<(), IoError> {
    save_mask_pgm(&paths.mask, &o.mask)?;
    save_depth_pgm(&paths.depth, &o.depth)?;
    save_camera(&paths.camera, &o.cam)
}

pub fn load_observation(paths: &ObservationPaths) -> Result<Observation, IoError> {
    let mask = load_mask_pgm(&paths.mask)?;
    let depth = load_depth_pgm(&paths.depth)?;
    let cam = load_camera(&paths.camera)?;
    if (mask.width, mask.height) != (depth.width, depth.height) {
        return Err(IoError::DimensionMismatch {
            left_path: paths.mask.clone(),
            lw: mask.width,
            lh: mask.height,
            right_path: paths.depth.clone(),
            rw: depth.width,
            rh: depth.height,
        });
    }
    if (cam.width, cam.height) != (depth.width, depth.height) {
        return Err(IoError::DimensionMismatch {
            left_path: paths.camera.clone(),
            lw: cam.width,
            lh: cam.height,
            right_path: paths.depth.clone(),
            rw: depth.width,
            rh: depth.height,
        });
    }
    Ok(Observation { mask, depth, cam })
}

// ---------------------------------------------------------------------------
// Pose files
// ---------------------------------------------------------------------------

/// 26 whitespace-separated numbers; `#` comments allowed. Written values use
/// shortest round-trip formatting, so save -> load is exact.
pub fn save_pose(path: &Path, h: &HandPose) -> Result<(), IoError> {
    let v = h.to_vector();
    let mut text = String::new();
    text.push_str("# wrist: x_c y_c z_c (m) theta_x theta_y theta_z (deg)\n");
    text.push_str(&row(&v[0..6]));
    let names = ["thumb", "index", "middle", "ring", "little"];
    for (f, name) in names.iter().enumerate() {
        text.push_str(&format!("# {name}: mp_x mp_z pip dip (deg)\n"));
        text.push_str(&row(&v[6 + 4 * f..10 + 4 * f]));
    }
    write_bytes(path, text.as_bytes())
}

fn row(vals: &[f64]) -> String {
    let parts: Vec<String> = vals.iter().map(|v| format!("{v}")).collect();
    parts.join(" ") + "\n"
}

pub fn load_pose(path: &Path) -> Result<HandPose, IoError> {
    let text = String::from_utf8(read_bytes(path)?)
        .map_err(|_| IoError::format(path, "not valid UTF-8"))?;
    let mut vals = Vec::with_capacity(POSE_DIM);
    for raw in text.lines() {
        let line = raw.split('#').next().unwrap();
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| IoError::format(path, format!("bad number {tok:?}")))?;
            vals.push(v);
        }
    }
    if vals.len() != POSE_DIM {
        return Err(IoError::format(
            path,
            format!("expected {POSE_DIM} pose values, found {}", vals.len()),
        ));
    }
    Ok(HandPose::from_vector(&vals))
}

// ---------------------------------------------------------------------------
// Hand dimension files
// ---------------------------------------------------------------------------

/// `name = value` overrides on top of the built-in defaults (millimeters).
/// Finger keys are `<finger>_<field><index>`, e.g. `index_len1 = 45`.
pub fn load_dimensions(path: &Path) -> Result<HandDimensions, IoError> {
    let text = String::from_utf8(read_bytes(path)?)
        .map_err(|_| IoError::format(path, "not valid UTF-8"))?;
    let mut d = HandDimensions::default();
    let fingers = ["thumb", "index", "middle", "ring", "little"];
    for (key, value) in parse_key_values(path, &text)? {
        let v: f64 = parse_num(path, &key, &value)?;
        match key.as_str() {
            "palm_half_width" => d.palm_half_width = v,
            "palm_half_thickness" => d.palm_half_thickness = v,
            "palm_length" => d.palm_length = v,
            "rest_separation_deg" => d.rest_separation_deg = v,
            "thumb_ellipsoid_x" => d.thumb_proximal_ellipsoid[0] = v,
            "thumb_ellipsoid_y" => d.thumb_proximal_ellipsoid[1] = v,
            "thumb_ellipsoid_z" => d.thumb_proximal_ellipsoid[2] = v,
            _ => {
                let (finger, field) = key.split_once('_').ok_or_else(|| {
                    IoError::format(path, format!("unknown dimension key {key:?}"))
                })?;
                let fi = fingers.iter().position(|&f| f == finger).ok_or_else(|| {
                    IoError::format(path, format!("unknown finger {finger:?}"))
                })?;
                let fd = &mut d.fingers[fi];
                match field {
                    "base_x" => fd.base_offset[0] = v,
                    "base_y" => fd.base_offset[1] = v,
                    "base_z" => fd.base_offset[2] = v,
                    "len1" => fd.segment_lengths[0] = v,
                    "len2" => fd.segment_lengths[1] = v,
                    "len3" => fd.segment_lengths[2] = v,
                    "rad1" => fd.segment_radii[0] = v,
                    "rad2" => fd.segment_radii[1] = v,
                    "rad3" => fd.segment_radii[2] = v,
                    "rad4" => fd.segment_radii[3] = v,
                    _ => {
                        return Err(IoError::format(
                            path,
                            format!("unknown dimension key {key:?}"),
                        ))
                    }
                }
            }
        }
    }
    if !d.is_valid() {
        return Err(IoError::format(path, "dimensions fail validity checks"));
    }
    Ok(d)
}
