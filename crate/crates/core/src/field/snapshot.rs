//! `WNS1` field snapshot files.
//!
//! Every record is a fixed 36-byte header followed by a coefficient block; a
//! trajectory file is a sequence of records with the time flag set. All
//! numbers are little-endian.
//!
//! | offset | size | content                                                  |
//! |--------|------|----------------------------------------------------------|
//! | 0      | 4    | magic `b"WNS1"`                                          |
//! | 4      | 4    | `u32` format version (1)                                 |
//! | 8      | 4    | `u32` grid size `n`                                      |
//! | 12     | 4    | `u32` component count `C` (1 scalar, 3 vector, 6 tensor) |
//! | 16     | 4    | `u32` flags (see [`Flags`])                              |
//! | 20     | 8    | `i64` time index                                         |
//! | 28     | 8    | `f64` time                                               |
//! | 36     | …    | coefficient block                                        |
//!
//! The coefficient block holds `C` components one after another; each is
//! the half spectrum `n × n × (n/2+1)` in row-major order (last index is the
//! non-negative `k₃`), every coefficient written as `re: f64, im: f64`.
//! Tensor components are ordered `xx, xy, xz, yy, yz, zz`.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::grid::Grid3;
use super::spectral::SpectralField;
use super::trajectory::TimeTrajectory;
use crate::error::{Result, WnsError};

pub const MAGIC: &[u8; 4] = b"WNS1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 36;

/// Header flag bits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Flags(pub u32);

impl Flags {
    pub const MEAN_ZERO: u32 = 1;
    pub const DIVERGENCE_FREE: u32 = 2;
    pub const TRACELESS: u32 = 4;
    pub const TIME_INDEXED: u32 = 8;

    pub fn has(&self, bit: u32) -> bool {
        self.0 & bit != 0
    }
}

/// Decoded record header.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Header {
    pub n: u32,
    pub components: u32,
    pub flags: Flags,
    pub time_index: i64,
    pub time: f64,
}

/// Write one record.
pub fn write_field<W: Write, const C: usize>(
    w: &mut W,
    field: &SpectralField<C>,
    flags: Flags,
    time_index: i64,
    time: f64,
) -> Result<()> {
    let mut head = Vec::with_capacity(HEADER_LEN);
    head.extend_from_slice(MAGIC);
    head.extend_from_slice(&VERSION.to_le_bytes());
    head.extend_from_slice(&(field.grid().n() as u32).to_le_bytes());
    head.extend_from_slice(&(C as u32).to_le_bytes());
    head.extend_from_slice(&flags.0.to_le_bytes());
    head.extend_from_slice(&time_index.to_le_bytes());
    head.extend_from_slice(&time.to_le_bytes());
    w.write_all(&head)?;
    let mut block = Vec::with_capacity(C * field.grid().n_spec() * 16);
    for c in 0..C {
        for v in field.comp(c) {
            block.extend_from_slice(&v.re.to_le_bytes());
            block.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    w.write_all(&block)?;
    Ok(())
}

fn read_u32(b: &[u8]) -> u32 {
    u32::from_le_bytes(b.try_into().expect("4 bytes"))
}

/// Read one record header; `Ok(None)` at a clean end of stream.
pub fn read_header<R: Read>(r: &mut R) -> Result<Option<Header>> {
    let mut head = [0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let k = r.read(&mut head[got..])?;
        if k == 0 {
            break;
        }
        got += k;
    }
    if got == 0 {
        return Ok(None);
    }
    if got < HEADER_LEN {
        return Err(WnsError::Format(format!("truncated header ({got} bytes)")));
    }
    if &head[0..4] != MAGIC {
        return Err(WnsError::Format("bad magic".into()));
    }
    let version = read_u32(&head[4..8]);
    if version != VERSION {
        return Err(WnsError::Format(format!("unsupported version {version}")));
    }
    Ok(Some(Header {
        n: read_u32(&head[8..12]),
        components: read_u32(&head[12..16]),
        flags: Flags(read_u32(&head[16..20])),
        time_index: i64::from_le_bytes(head[20..28].try_into().expect("8 bytes")),
        time: f64::from_le_bytes(head[28..36].try_into().expect("8 bytes")),
    }))
}

/// Read one record with `C` components; `Ok(None)` at end of stream.
pub fn read_field<R: Read, const C: usize>(
    r: &mut R,
    grid: Option<&Grid3>,
) -> Result<Option<(Header, SpectralField<C>)>> {
    let Some(h) = read_header(r)? else {
        return Ok(None);
    };
    if h.components as usize != C {
        return Err(WnsError::Format(format!("expected {C} components, found {}", h.components)));
    }
    let grid = match grid {
        Some(g) if g.n() == h.n as usize => g.clone(),
        Some(g) => {
            return Err(WnsError::GridMismatch(format!("file n = {}, grid n = {}", h.n, g.n())))
        }
        None => Grid3::new(h.n as usize)?,
    };
    let mut block = vec![0u8; C * grid.n_spec() * 16];
    r.read_exact(&mut block)?;
    let mut comps: [Vec<Complex64>; C] = std::array::from_fn(|_| Vec::with_capacity(grid.n_spec()));
    for (c, comp) in comps.iter_mut().enumerate() {
        let base = c * grid.n_spec() * 16;
        for m in 0..grid.n_spec() {
            let o = base + m * 16;
            let re = f64::from_le_bytes(block[o..o + 8].try_into().expect("8 bytes"));
            let im = f64::from_le_bytes(block[o + 8..o + 16].try_into().expect("8 bytes"));
            comp.push(Complex64::new(re, im));
        }
    }
    Ok(Some((h, SpectralField::from_coeffs(&grid, comps)?)))
}

/// Write a trajectory as consecutive time-indexed records.
pub fn write_trajectory<W: Write, const C: usize>(
    w: &mut W,
    traj: &TimeTrajectory<SpectralField<C>>,
    flags: Flags,
    first_index: i64,
) -> Result<()> {
    let flags = Flags(flags.0 | Flags::TIME_INDEXED);
    for (i, f) in traj.samples().iter().enumerate() {
        write_field(w, f, flags, first_index + i as i64, traj.time(i))?;
    }
    Ok(())
}

/// Read every record of a trajectory file; the step is taken from the first two records.
pub fn read_trajectory<R: Read, const C: usize>(
    r: &mut R,
) -> Result<TimeTrajectory<SpectralField<C>>> {
    let mut samples = Vec::new();
    let mut times = Vec::new();
    let mut grid: Option<Grid3> = None;
    while let Some((h, f)) = read_field::<R, C>(r, grid.as_ref())? {
        if grid.is_none() {
            grid = Some(f.grid().clone());
        }
        times.push(h.time);
        samples.push(f);
    }
    if samples.is_empty() {
        return Err(WnsError::Format("empty trajectory file".into()));
    }
    let dt = if times.len() > 1 { times[1] - times[0] } else { 1.0 };
    TimeTrajectory::new(times[0], dt, samples)
}
