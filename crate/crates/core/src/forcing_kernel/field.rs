use std::io::Write;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::io::fmt_f64;

/// Samples `w(t_k, x_m)` on a uniform spatial grid, stored time-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeField {
    times: Vec<f64>,
    x_min: f64,
    dx: f64,
    nx: usize,
    data: Vec<C64>,
}

/// Magic bytes opening the binary layout.
pub const FIELD_MAGIC: &[u8; 8] = b"BGFIELD1";

impl SpaceTimeField {
    pub fn new(times: Vec<f64>, x_min: f64, dx: f64, data: Vec<C64>) -> Result<Self> {
        if times.is_empty() || !(dx > 0.0) {
            return Err(Error::InvalidConfig("field needs at least one time level and dx > 0".into()));
        }
        if !data.len().is_multiple_of(times.len()) {
            return Err(Error::BadShape {
                expected: times.len(),
                got: data.len(),
            });
        }
        let nx = data.len() / times.len();
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidConfig("field contains non-finite samples".into()));
        }
        Ok(Self {
            times,
            x_min,
            dx,
            nx,
            data,
        })
    }

    pub fn zeros(times: Vec<f64>, x_min: f64, dx: f64, nx: usize) -> Result<Self> {
        let n = times.len() * nx;
        Self::new(times, x_min, dx, vec![C64::new(0.0, 0.0); n])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn nt(&self) -> usize {
        self.times.len()
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self, m: usize) -> f64 {
        self.x_min + m as f64 * self.dx
    }

    pub fn level(&self, k: usize) -> &[C64] {
        &self.data[k * self.nx..(k + 1) * self.nx]
    }

    pub fn get(&self, k: usize, m: usize) -> C64 {
        self.data[k * self.nx + m]
    }

    pub fn sup_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// CSV with columns `t,x,re,im`, time-major.
    pub fn write_csv(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "t,x,re,im")?;
        for (k, &t) in self.times.iter().enumerate() {
            for (m, z) in self.level(k).iter().enumerate() {
                writeln!(out, "{},{},{},{}", fmt_f64(t), fmt_f64(self.x(m)), fmt_f64(z.re), fmt_f64(z.im))?;
            }
        }
        Ok(())
    }

    /// Binary layout, all little-endian: the 8 magic bytes `BGFIELD1`, `u64` time
    /// count, `u64` point count, then per time level one `f64` time followed by
    /// `nx` triplets `(x, re, im)` of `f64`.
    pub fn write_binary(&self, mut out: impl Write) -> std::io::Result<()> {
        out.write_all(FIELD_MAGIC)?;
        out.write_all(&(self.nt() as u64).to_le_bytes())?;
        out.write_all(&(self.nx as u64).to_le_bytes())?;
        for (k, &t) in self.times.iter().enumerate() {
            out.write_all(&t.to_le_bytes())?;
            for (m, z) in self.level(k).iter().enumerate() {
                out.write_all(&self.x(m).to_le_bytes())?;
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Inverse of [`write_binary`](Self::write_binary).
    pub fn read_binary(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::InvalidConfig("malformed binary field".into());
        let mut pos = 0usize;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = bytes.get(pos..pos + n).ok_or_else(bad)?;
            pos += n;
            Ok(s)
        };
        if take(8)? != FIELD_MAGIC {
            return Err(bad());
        }
        let u = |b: &[u8]| u64::from_le_bytes(b.try_into().expect("8 bytes")) as usize;
        let f = |b: &[u8]| f64::from_le_bytes(b.try_into().expect("8 bytes"));
        let nt = u(take(8)?);
        let nx = u(take(8)?);
        let mut times = Vec::with_capacity(nt);
        let mut data = Vec::with_capacity(nt * nx);
        let (mut x0, mut x1) = (0.0, 0.0);
        for _ in 0..nt {
            times.push(f(take(8)?));
            for m in 0..nx {
                let x = f(take(8)?);
                if m == 0 {
                    x0 = x;
                } else if m == 1 {
                    x1 = x;
                }
                let re = f(take(8)?);
                let im = f(take(8)?);
                data.push(C64::new(re, im));
            }
        }
        let dx = if nx > 1 { x1 - x0 } else { 1.0 };
        Self::new(times, x0, dx, data)
    }
}
