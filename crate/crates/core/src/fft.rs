//! Exact-size 1-D and 2-D discrete Fourier transforms.
//!
//! Power-of-two lengths use an iterative radix-2 kernel; every other length
//! goes through Bluestein's chirp-z algorithm, which re-expresses the DFT as
//! a circular convolution of power-of-two length. All arithmetic is `f64`.
//!
//! Conventions: the forward transform is unnormalized,
//! `X[u,v] = Σ x[h,w]·exp(−2πi(uh/H + vw/W))`, and the inverse carries the
//! full `1/(H·W)` factor.

use std::f64::consts::PI;

use num_complex::Complex;

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// A complex `height × width` grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexPlane {
    height: usize,
    width: usize,
    values: Vec<Complex64>,
}

impl ComplexPlane {
    pub fn new(height: usize, width: usize, values: Vec<Complex64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::SizeZero);
        }
        if values.len() != height * width {
            return Err(Error::ShapeMismatch(format!(
                "{height}x{width} plane needs {} values, got {}",
                height * width,
                values.len()
            )));
        }
        if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFiniteValue("complex plane entry".into()));
        }
        Ok(ComplexPlane {
            height,
            width,
            values,
        })
    }

    pub fn from_real(height: usize, width: usize, values: &[f64]) -> Result<Self> {
        Self::new(height, width, values.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn get(&self, u: usize, v: usize) -> Complex64 {
        self.values[u * self.width + v]
    }

    pub fn fftshift(&self) -> Self {
        ComplexPlane {
            height: self.height,
            width: self.width,
            values: fftshift(&self.values, self.height, self.width),
        }
    }

    pub fn ifftshift(&self) -> Self {
        ComplexPlane {
            height: self.height,
            width: self.width,
            values: ifftshift(&self.values, self.height, self.width),
        }
    }
}

/// Forward 2-D DFT of a complex plane.
pub fn fft2(plane: &ComplexPlane) -> Result<ComplexPlane> {
    let plan = Fft2Plan::new(plane.height, plane.width)?;
    let mut values = plane.values.clone();
    plan.forward(&mut values);
    Ok(ComplexPlane {
        values,
        ..*plane
    })
}

/// Forward 2-D DFT of a real row-major grid.
pub fn fft2_real(values: &[f64], height: usize, width: usize) -> Result<ComplexPlane> {
    let plan = Fft2Plan::new(height, width)?;
    plan.forward_real(values)
}

/// Normalized inverse 2-D DFT.
pub fn ifft2(plane: &ComplexPlane) -> Result<ComplexPlane> {
    let plan = Fft2Plan::new(plane.height, plane.width)?;
    let mut values = plane.values.clone();
    plan.inverse(&mut values);
    Ok(ComplexPlane {
        values,
        ..*plane
    })
}

/// Move the zero-frequency bin from `(0, 0)` to `(⌊H/2⌋, ⌊W/2⌋)`.
pub fn fftshift<T: Copy>(data: &[T], height: usize, width: usize) -> Vec<T> {
    roll(data, height, width, height / 2, width / 2)
}

/// Inverse of [`fftshift`]; differs from it for odd sizes.
pub fn ifftshift<T: Copy>(data: &[T], height: usize, width: usize) -> Vec<T> {
    roll(data, height, width, height - height / 2, width - width / 2)
}

/// `out[(h + dh) mod H][(w + dw) mod W] = data[h][w]`.
fn roll<T: Copy>(data: &[T], height: usize, width: usize, dh: usize, dw: usize) -> Vec<T> {
    assert_eq!(data.len(), height * width, "roll: length does not match shape");
    let mut out = data.to_vec();
    for h in 0..height {
        let oh = (h + dh) % height;
        for w in 0..width {
            let ow = (w + dw) % width;
            out[oh * width + ow] = data[h * width + w];
        }
    }
    out
}

/// Precomputed row and column transforms for one grid size. Immutable after
/// construction, so a plan can be shared across threads.
#[derive(Debug, Clone)]
pub struct Fft2Plan {
    height: usize,
    width: usize,
    rows: Fft1d,
    cols: Fft1d,
}

impl Fft2Plan {
    pub fn new(height: usize, width: usize) -> Result<Self> {
        Ok(Fft2Plan {
            height,
            width,
            rows: Fft1d::new(width)?,
            cols: Fft1d::new(height)?,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// In-place unnormalized forward transform of a row-major grid.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.apply(data, Direction::Forward);
    }

    /// In-place inverse transform, scaled by `1/(H·W)`.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.apply(data, Direction::Inverse);
        let scale = 1.0 / (self.height * self.width) as f64;
        for z in data.iter_mut() {
            *z *= scale;
        }
    }

    pub fn forward_real(&self, values: &[f64]) -> Result<ComplexPlane> {
        let plane = ComplexPlane::from_real(self.height, self.width, values)?;
        let mut data = plane.values;
        self.forward(&mut data);
        Ok(ComplexPlane {
            height: self.height,
            width: self.width,
            values: data,
        })
    }

    fn apply(&self, data: &mut [Complex64], dir: Direction) {
        assert_eq!(data.len(), self.height * self.width, "plan size mismatch");
        for row in data.chunks_exact_mut(self.width) {
            self.rows.process(row, dir);
        }
        if self.height > 1 {
            let mut col = vec![Complex64::default(); self.height];
            for w in 0..self.width {
                for h in 0..self.height {
                    col[h] = data[h * self.width + w];
                }
                self.cols.process(&mut col, dir);
                for h in 0..self.height {
                    data[h * self.width + w] = col[h];
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Forward,
    Inverse,
}

/// Unnormalized 1-D DFT of a fixed length.
#[derive(Debug, Clone)]
pub struct Fft1d {
    len: usize,
    kernel: Kernel,
}

#[derive(Debug, Clone)]
enum Kernel {
    Identity,
    Radix2(Radix2),
    Bluestein(Box<Bluestein>),
}

impl Fft1d {
    pub fn new(len: usize) -> Result<Self> {
        let kernel = match len {
            0 => return Err(Error::SizeZero),
            1 => Kernel::Identity,
            n if n.is_power_of_two() => Kernel::Radix2(Radix2::new(n)),
            n => Kernel::Bluestein(Box::new(Bluestein::new(n))),
        };
        Ok(Fft1d { len, kernel })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place forward transform.
    pub fn forward(&self, buf: &mut [Complex64]) {
        self.process(buf, Direction::Forward);
    }

    /// In-place inverse transform, unnormalized.
    pub fn inverse_unnormalized(&self, buf: &mut [Complex64]) {
        self.process(buf, Direction::Inverse);
    }

    fn process(&self, buf: &mut [Complex64], dir: Direction) {
        assert_eq!(buf.len(), self.len, "buffer length does not match plan");
        // The inverse is conj(F(conj(x))).
        if dir == Direction::Inverse {
            conj_in_place(buf);
        }
        match &self.kernel {
            Kernel::Identity => {}
            Kernel::Radix2(r) => r.forward(buf),
            Kernel::Bluestein(b) => b.forward(buf),
        }
        if dir == Direction::Inverse {
            conj_in_place(buf);
        }
    }
}

fn conj_in_place(buf: &mut [Complex64]) {
    for z in buf.iter_mut() {
        z.im = -z.im;
    }
}

/// `exp(−2πi·k/n)`.
fn twiddle(k: usize, n: usize) -> Complex64 {
    let angle = -2.0 * PI * (k as f64) / (n as f64);
    Complex64::new(angle.cos(), angle.sin())
}

#[derive(Debug, Clone)]
struct Radix2 {
    len: usize,
    log2: u32,
    /// `exp(−2πi·k/len)` for `k < len/2`.
    twiddles: Vec<Complex64>,
}

impl Radix2 {
    fn new(len: usize) -> Self {
        debug_assert!(len.is_power_of_two() && len >= 2);
        Radix2 {
            len,
            log2: len.trailing_zeros(),
            twiddles: (0..len / 2).map(|k| twiddle(k, len)).collect(),
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let n = self.len;
        let shift = usize::BITS - self.log2;
        for i in 0..n {
            let j = i.reverse_bits() >> shift;
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut span = 2;
        while span <= n {
            let half = span / 2;
            let stride = n / span;
            for start in (0..n).step_by(span) {
                for k in 0..half {
                    let w = self.twiddles[k * stride];
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            span *= 2;
        }
    }
}

#[derive(Debug, Clone)]
struct Bluestein {
    len: usize,
    inner: Radix2,
    /// `exp(−πi·k²/len)` for `k < len`.
    chirp: Vec<Complex64>,
    /// Forward transform of the conjugate chirp, wrapped to the inner length
    /// and pre-scaled by `1/inner_len`.
    kernel: Vec<Complex64>,
}

impl Bluestein {
    fn new(len: usize) -> Self {
        let m = (2 * len - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k² mod 2n keeps the angle small for large k.
        let two_n = 2 * len as u64;
        let chirp: Vec<Complex64> = (0..len as u64)
            .map(|k| {
                let r = (k * k) % two_n;
                let angle = -PI * (r as f64) / (len as f64);
                Complex64::new(angle.cos(), angle.sin())
            })
            .collect();
        let mut kernel = vec![Complex64::default(); m];
        kernel[0] = chirp[0].conj();
        for k in 1..len {
            let c = chirp[k].conj();
            kernel[k] = c;
            kernel[m - k] = c;
        }
        inner.forward(&mut kernel);
        let scale = 1.0 / m as f64;
        for z in kernel.iter_mut() {
            *z *= scale;
        }
        Bluestein {
            len,
            inner,
            chirp,
            kernel,
        }
    }

    fn forward(&self, buf: &mut [Complex64]) {
        let m = self.inner.len;
        let mut work = vec![Complex64::default(); m];
        for k in 0..self.len {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.forward(&mut work);
        for (z, k) in work.iter_mut().zip(&self.kernel) {
            *z *= k;
        }
        // Inverse of the inner transform via conjugation; the 1/m factor is
        // already folded into the kernel.
        conj_in_place(&mut work);
        self.inner.forward(&mut work);
        for k in 0..self.len {
            buf[k] = work[k].conj() * self.chirp[k];
        }
    }
}
