//! Scalar functions on R^n, represented two ways: closed-form analytic
//! fixtures (oracle inputs for the pointwise routes) and uniform periodic
//! grid samplings (the carrier for all spectral routes).

use crate::error::{Error, Result};
use crate::quadrature::{integrate_interval, integrate_log_interval};
use crate::special::sphere_area;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

/// Decay class of an analytic field; `TailPower(p)` means |u(x)| ~ |x|^{-p}
/// for large |x| (negative p encodes growth).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decay {
    Schwartz,
    Bounded,
    TailPower(f64),
}

type EvalFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type FracImageFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A closed-form scalar function on R^n with the metadata the quadrature
/// engines need (decay class, characteristic scales, optional exact
/// transforms used as oracles).
#[derive(Clone)]
pub struct AnalyticField {
    n: usize,
    name: String,
    decay: Decay,
    eval: EvalFn,
    fourier: Option<EvalFn>,
    laplacian: Option<EvalFn>,
    exact_frac_image: Option<FracImageFn>,
    /// sup |u|, used in tail bounds.
    sup: f64,
    /// shortest feature length; quadrature panels resolve this.
    feature_scale: f64,
    /// radius beyond which |u| <= 1e-16 * sup (infinite for slow decay).
    radius16: f64,
}

impl std::fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticField")
            .field("n", &self.n)
            .field("name", &self.name)
            .field("decay", &self.decay)
            .finish()
    }
}

impl AnalyticField {
    pub fn new(
        n: usize,
        name: impl Into<String>,
        decay: Decay,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        let radius16 = match decay {
            Decay::Schwartz => 40.0,
            Decay::Bounded | Decay::TailPower(_) => f64::INFINITY,
        };
        Self {
            n,
            name: name.into(),
            decay,
            eval: Arc::new(eval),
            fourier: None,
            laplacian: None,
            exact_frac_image: None,
            sup: 1.0,
            feature_scale: 1.0,
            radius16,
        }
    }

    pub fn with_fourier(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.fourier = Some(Arc::new(f));
        self
    }

    pub fn with_laplacian(mut self, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.laplacian = Some(Arc::new(f));
        self
    }

    pub fn with_exact_frac_image(
        mut self,
        f: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.exact_frac_image = Some(Arc::new(f));
        self
    }

    pub fn with_sup(mut self, sup: f64) -> Self {
        self.sup = sup;
        self
    }

    pub fn with_feature_scale(mut self, scale: f64) -> Self {
        self.feature_scale = scale;
        self
    }

    pub fn with_radius16(mut self, r: f64) -> Self {
        self.radius16 = r;
        self
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn decay(&self) -> Decay {
        self.decay
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        (self.eval)(x)
    }

    pub fn fourier(&self, xi: &[f64]) -> Option<f64> {
        self.fourier.as_ref().map(|f| f(xi))
    }

    pub fn has_fourier(&self) -> bool {
        self.fourier.is_some()
    }

    pub fn laplacian(&self, x: &[f64]) -> Option<f64> {
        self.laplacian.as_ref().map(|f| f(x))
    }

    pub fn exact_frac_image(&self, s: f64, x: &[f64]) -> Option<f64> {
        self.exact_frac_image.as_ref().map(|f| f(s, x))
    }

    pub fn sup(&self) -> f64 {
        self.sup
    }

    pub fn feature_scale(&self) -> f64 {
        self.feature_scale
    }

    pub fn radius16(&self) -> f64 {
        self.radius16
    }

    /// Laplacian by fourth-order central differences when no closed form
    /// was attached.
    pub fn laplacian_fd(&self, x: &[f64]) -> f64 {
        if let Some(v) = self.laplacian(x) {
            return v;
        }
        let h = 1e-3 * self.feature_scale;
        let mut acc = 0.0;
        let mut p = x.to_vec();
        for i in 0..self.n {
            let xi = x[i];
            let mut at = |d: f64| {
                p[i] = xi + d;
                let v = self.eval(&p);
                p[i] = xi;
                v
            };
            acc += (-at(2.0 * h) + 16.0 * at(h) - 30.0 * at(0.0) + 16.0 * at(-h) - at(-2.0 * h))
                / (12.0 * h * h);
        }
        acc
    }

    /// Inverse Fourier transform of the attached radial transform at the
    /// origin, by radial quadrature; the fixture consistency check.
    pub fn fourier_inversion_at_origin(&self) -> Option<f64> {
        self.fourier.as_ref()?;
        let n = self.n;
        let omega = sphere_area(n);
        let norm = (2.0 * std::f64::consts::PI).powi(n as i32);
        let f = |rho: f64| {
            let mut xi = vec![0.0; n];
            xi[0] = rho;
            self.fourier(&xi).unwrap() * rho.powi(n as i32 - 1)
        };
        let inner = integrate_log_interval(f, 1e-8, 400.0, 24);
        Some(omega / norm * inner)
    }
}

/// Named closed-form fixtures with truthful decay metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BuiltinFixture {
    /// u(x) = exp(-|x|^2 / sigma^2)
    Gaussian { sigma: f64 },
    /// u(x) = cos(k x_1)
    PlaneWave { k: f64 },
    /// u(x) = exp(1 - r0^2/(r0^2 - |x|^2)) on |x| < r0, 0 outside
    Bump { r0: f64 },
    /// u(x) = (1 + |x|^2)^{-(n+1)/2}
    Witch,
    /// u(x) = |x|^alpha * bump(x; r0): Holder exponent alpha at the origin
    AbsPowerBump { alpha: f64, r0: f64 },
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

impl BuiltinFixture {
    pub fn label(&self) -> String {
        match self {
            BuiltinFixture::Gaussian { sigma } => format!("gaussian({sigma})"),
            BuiltinFixture::PlaneWave { k } => format!("plane_wave({k})"),
            BuiltinFixture::Bump { r0 } => format!("bump({r0})"),
            BuiltinFixture::Witch => "witch".to_string(),
            BuiltinFixture::AbsPowerBump { alpha, r0 } => format!("abs_power({alpha})*bump({r0})"),
        }
    }

    pub fn build(&self, n: usize) -> AnalyticField {
        match *self {
            BuiltinFixture::Gaussian { sigma } => {
                let s2 = sigma * sigma;
                let f = AnalyticField::new(n, self.label(), Decay::Schwartz, move |x: &[f64]| {
                    (-norm_sq(x) / s2).exp()
                })
                .with_feature_scale(sigma)
                .with_radius16(sigma * (16.0 * std::f64::consts::LN_10).sqrt())
                .with_fourier(move |xi: &[f64]| {
                    (sigma * std::f64::consts::PI.sqrt()).powi(n as i32)
                        * (-s2 * norm_sq(xi) / 4.0).exp()
                })
                .with_laplacian(move |x: &[f64]| {
                    let r2 = norm_sq(x);
                    (-2.0 * n as f64 / s2 + 4.0 * r2 / (s2 * s2)) * (-r2 / s2).exp()
                });
                f
            }
            BuiltinFixture::PlaneWave { k } => {
                AnalyticField::new(n, self.label(), Decay::Bounded, move |x: &[f64]| {
                    (k * x[0]).cos()
                })
                .with_feature_scale(1.0 / k.abs().max(1e-12))
                .with_laplacian(move |x: &[f64]| -k * k * (k * x[0]).cos())
                .with_exact_frac_image(move |s, x: &[f64]| {
                    (k * k).powf(s) * (k * x[0]).cos()
                })
            }
            BuiltinFixture::Bump { r0 } => {
                AnalyticField::new(n, self.label(), Decay::Schwartz, move |x: &[f64]| {
                    let r2 = norm_sq(x);
                    if r2 < r0 * r0 {
                        (1.0 - r0 * r0 / (r0 * r0 - r2)).exp()
                    } else {
                        0.0
                    }
                })
                .with_feature_scale(0.2 * r0)
                .with_radius16(r0)
            }
            BuiltinFixture::Witch => {
                let p = (n as f64 + 1.0) / 2.0;
                AnalyticField::new(
                    n,
                    self.label(),
                    Decay::TailPower(n as f64 + 1.0),
                    move |x: &[f64]| (1.0 + norm_sq(x)).powf(-p),
                )
            }
            BuiltinFixture::AbsPowerBump { alpha, r0 } => {
                AnalyticField::new(n, self.label(), Decay::Schwartz, move |x: &[f64]| {
                    let r2 = norm_sq(x);
                    if r2 < r0 * r0 {
                        r2.powf(alpha / 2.0) * (1.0 - r0 * r0 / (r0 * r0 - r2)).exp()
                    } else {
                        0.0
                    }
                })
                .with_feature_scale(0.2 * r0.min(1.0))
                .with_radius16(r0)
            }
        }
    }
}

/// A scalar function sampled on the uniform periodic box [-L, L)^n,
/// M points per axis, row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    n: usize,
    l: f64,
    m: usize,
    values: Vec<f64>,
    name: String,
    zero_mean_projected: bool,
}

impl GridField {
    pub fn from_values(
        n: usize,
        l: f64,
        m: usize,
        values: Vec<f64>,
        name: impl Into<String>,
    ) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension must be 1..=3, got {n}")));
        }
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::InvalidGrid(format!("box half-width must be positive, got {l}")));
        }
        if m < 16 || !m.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 16, got {m}"
            )));
        }
        let expect = m.pow(n as u32);
        if values.len() != expect {
            return Err(Error::InvalidGrid(format!(
                "expected {expect} values for M={m}, n={n}, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "grid value at flat index {bad} is {}",
                values[bad]
            )));
        }
        Ok(Self {
            n,
            l,
            m,
            values,
            name: name.into(),
            zero_mean_projected: false,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Box half-width: the domain is [-L, L)^n.
    pub fn l(&self) -> f64 {
        self.l
    }

    /// Points per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Grid spacing h = 2L/M.
    pub fn h(&self) -> f64 {
        2.0 * self.l / self.m as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn zero_mean_projected(&self) -> bool {
        self.zero_mean_projected
    }

    pub(crate) fn set_zero_mean_projected(&mut self, v: bool) {
        self.zero_mean_projected = v;
    }

    pub(crate) fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    /// Replace the sample vector, keeping the geometry; checks finiteness.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values: Vec<f64> = self.values.iter().map(|&v| f(v)).collect();
        let mut out = Self::from_values(self.n, self.l, self.m, values, self.name.clone())?;
        out.zero_mean_projected = self.zero_mean_projected;
        Ok(out)
    }

    /// Flat index of the multi-index (last axis fastest).
    pub fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.n);
        idx.iter().fold(0, |acc, &j| acc * self.m + j)
    }

    /// Coordinates of a flat index.
    pub fn coords(&self, mut flat: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for i in (0..self.n).rev() {
            let j = flat % self.m;
            flat /= self.m;
            out[i] = -self.l + j as f64 * self.h();
        }
        out
    }

    /// Flat index of the grid point nearest to x (periodic wrap).
    pub fn nearest_flat_index(&self, x: &[f64]) -> usize {
        let h = self.h();
        let mut flat = 0;
        for &xi in x {
            let j = ((xi + self.l) / h).round() as i64;
            let j = j.rem_euclid(self.m as i64) as usize;
            flat = flat * self.m + j;
        }
        flat
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.values[self.nearest_flat_index(x)]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn linf(&self) -> f64 {
        self.values.iter().fold(0.0f64, |a, &v| a.max(v.abs()))
    }

    /// L^2 norm on the box, h^n sum |u|^2.
    pub fn l2(&self) -> f64 {
        let h_n = self.h().powi(self.n as i32);
        (h_n * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    /// Subtract the mean (annihilate the zero Fourier mode) and record it.
    pub fn project_zero_mean(&self) -> Self {
        let mean = self.mean();
        let mut out = self.clone();
        for v in &mut out.values {
            *v -= mean;
        }
        out.zero_mean_projected = true;
        out
    }

    /// Shift by whole grid cells along one axis (exact on the torus).
    pub fn translate(&self, axis: usize, cells: i64) -> Self {
        assert!(axis < self.n);
        let m = self.m as i64;
        let stride: usize = self.m.pow((self.n - 1 - axis) as u32);
        let block = stride * self.m;
        let mut values = vec![0.0; self.values.len()];
        for (flat, slot) in values.iter_mut().enumerate() {
            let j = ((flat / stride) % self.m) as i64;
            let src_j = (j - cells).rem_euclid(m) as usize;
            let src = flat - ((flat / stride) % self.m) * stride + src_j * stride;
            let _ = block;
            *slot = self.values[src];
        }
        let mut out = self.clone();
        out.values = values;
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.values.len(), other.values.len());
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    }
}

/// Pointwise evaluation of an analytic field on the uniform grid.
pub fn sample(f: &AnalyticField, l: f64, m: usize) -> Result<GridField> {
    let n = f.n();
    let count = m.checked_pow(n as u32).ok_or_else(|| {
        Error::InvalidGrid(format!("grid too large: M={m}, n={n}"))
    })?;
    // geometry validation happens in from_values; evaluate first
    let h = 2.0 * l / m as f64;
    let mut values = Vec::with_capacity(count);
    let mut idx = vec![0usize; n];
    let mut x = vec![0.0f64; n];
    for _ in 0..count {
        for i in 0..n {
            x[i] = -l + idx[i] as f64 * h;
        }
        let v = f.eval(&x);
        if !v.is_finite() {
            return Err(Error::NonFinite(format!(
                "fixture {} evaluated to {v} at {x:?}",
                f.name()
            )));
        }
        values.push(v);
        for i in (0..n).rev() {
            idx[i] += 1;
            if idx[i] < m {
                break;
            }
            idx[i] = 0;
        }
    }
    GridField::from_values(n, l, m, values, f.name())
}

/// Tail-weight norm ||u||_{L_s} = int |u(x)| / (1 + |x|^{n+2s}) dx for an
/// analytic field; +infinity signals an inadmissible (growing) tail.
pub fn ls_norm_analytic(u: &AnalyticField, s: f64) -> f64 {
    let n = u.n();
    let p_kernel = n as f64 + 2.0 * s;
    // divergence test from the decay class
    if let Decay::TailPower(p) = u.decay() {
        if p + 2.0 * s <= 0.0 {
            return f64::INFINITY;
        }
    }
    let r_box = match u.decay() {
        Decay::Schwartz => u.radius16().min(60.0).max(8.0 * u.feature_scale()),
        Decay::Bounded => match n {
            1 => 400.0,
            2 => 60.0,
            _ => 25.0,
        },
        Decay::TailPower(_) => match n {
            1 => 400.0,
            2 => 60.0,
            _ => 25.0,
        },
    };
    let weight = move |x: &[f64]| {
        let r = norm_sq(x).sqrt();
        1.0 / (1.0 + r.powf(p_kernel))
    };
    let panels_per_unit = (1.0 / u.feature_scale()).clamp(0.25, 8.0);
    let interior = match n {
        1 => {
            let panels = ((2.0 * r_box * panels_per_unit) as usize).clamp(32, 4096);
            integrate_interval(
                |x| u.eval(&[x]).abs() * weight(&[x]),
                -r_box,
                r_box,
                panels,
                12,
            )
        }
        2 => {
            let panels = ((2.0 * r_box * panels_per_unit) as usize).clamp(24, 320);
            integrate_interval(
                |x| {
                    integrate_interval(
                        |y| u.eval(&[x, y]).abs() * weight(&[x, y]),
                        -r_box,
                        r_box,
                        panels,
                        8,
                    )
                },
                -r_box,
                r_box,
                panels,
                8,
            )
        }
        3 => {
            let panels = ((2.0 * r_box * panels_per_unit) as usize).clamp(12, 64);
            integrate_interval(
                |x| {
                    integrate_interval(
                        |y| {
                            integrate_interval(
                                |z| u.eval(&[x, y, z]).abs() * weight(&[x, y, z]),
                                -r_box,
                                r_box,
                                panels,
                                6,
                            )
                        },
                        -r_box,
                        r_box,
                        panels,
                        6,
                    )
                },
                -r_box,
                r_box,
                panels,
                6,
            )
        }
        _ => unreachable!("dimension checked at construction"),
    };
    // tail amplitude: probe |u| on the sphere of radius r_box
    let mut amp = 0.0f64;
    let probes = 16usize;
    let mut x = vec![0.0; n];
    for k in 0..probes {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / probes as f64;
        match n {
            1 => x[0] = if k % 2 == 0 { r_box } else { -r_box },
            2 => {
                x[0] = r_box * theta.cos();
                x[1] = r_box * theta.sin();
            }
            _ => {
                let phi = std::f64::consts::PI * (k as f64 + 0.5) / probes as f64;
                x[0] = r_box * phi.sin() * theta.cos();
                x[1] = r_box * phi.sin() * theta.sin();
                x[2] = r_box * phi.cos();
            }
        }
        amp = amp.max(u.eval(&x).abs());
    }
    let tail = match u.decay() {
        Decay::Schwartz => 0.0,
        Decay::Bounded => u.sup() * sphere_area(n) * r_box.powf(-2.0 * s) / (2.0 * s).max(1e-300),
        Decay::TailPower(p) => {
            // |u| ~ amp (r/r_box)^{-p} outside the box
            2.0 * amp * sphere_area(n) * r_box.powf(-2.0 * s) / (2.0 * s + p)
        }
    };
    interior + tail
}

/// Tail-weight norm for a grid field: Riemann sum over the box plus a tail
/// bound that treats |u| outside the box as bounded by the largest boundary
/// sample.
pub fn ls_norm_grid(u: &GridField, s: f64) -> f64 {
    let n = u.n();
    let p_kernel = n as f64 + 2.0 * s;
    let h_n = u.h().powi(n as i32);
    let mut acc = 0.0;
    let mut boundary_amp = 0.0f64;
    for (flat, &v) in u.values().iter().enumerate() {
        let x = u.coords(flat);
        let r = norm_sq(&x).sqrt();
        acc += v.abs() / (1.0 + r.powf(p_kernel));
        let near_edge = x.iter().any(|&xi| xi.abs() >= u.l() - 1.5 * u.h());
        if near_edge {
            boundary_amp = boundary_amp.max(v.abs());
        }
    }
    let tail =
        boundary_amp * sphere_area(n) * u.l().powf(-2.0 * s) / (2.0 * s).max(1e-300);
    h_n * acc + tail
}

const MAGIC: &[u8; 4] = b"FSGF";
const FORMAT_VERSION: u16 = 1;

/// Write the 32-byte header: magic, version u16, n u8, rule u8, M u32,
/// L f64, s f64 (reserved, 0 for plain grids), 4 zero pad bytes.
pub(crate) fn write_header<W: Write>(
    w: &mut W,
    n: u8,
    rule: u8,
    m: u32,
    l: f64,
    s: f64,
) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    w.write_all(&[n, rule])?;
    w.write_all(&m.to_le_bytes())?;
    w.write_all(&l.to_le_bytes())?;
    w.write_all(&s.to_le_bytes())?;
    w.write_all(&[0u8; 4])?;
    Ok(())
}

pub(crate) struct Header {
    pub n: u8,
    pub rule: u8,
    pub m: u32,
    pub l: f64,
    pub s: f64,
}

pub(crate) fn read_header<R: Read>(r: &mut R) -> Result<Header> {
    let mut buf = [0u8; 32];
    r.read_exact(&mut buf)
        .map_err(|_| Error::HeaderMismatch("file shorter than the 32-byte header".into()))?;
    if &buf[0..4] != MAGIC {
        return Err(Error::HeaderMismatch("bad magic, expected FSGF".into()));
    }
    let version = u16::from_le_bytes([buf[4], buf[5]]);
    if version != FORMAT_VERSION {
        return Err(Error::HeaderMismatch(format!("unsupported version {version}")));
    }
    Ok(Header {
        n: buf[6],
        rule: buf[7],
        m: u32::from_le_bytes(buf[8..12].try_into().unwrap()),
        l: f64::from_le_bytes(buf[12..20].try_into().unwrap()),
        s: f64::from_le_bytes(buf[20..28].try_into().unwrap()),
    })
}

pub(crate) fn read_f64_block<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)
        .map_err(|_| Error::HeaderMismatch("value block truncated".into()))?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect())
}

/// Persist a grid field in the FSGF binary format; round trips bit-exactly.
pub fn save_field(g: &GridField, path: impl AsRef<Path>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_header(&mut w, g.n as u8, 0, g.m as u32, g.l, 0.0)?;
    for v in &g.values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Load a grid field, validating the header and value block.
pub fn load_field(path: impl AsRef<Path>) -> Result<GridField> {
    let mut r = std::io::BufReader::new(std::fs::File::open(&path)?);
    let h = read_header(&mut r)?;
    if h.rule != 0 {
        return Err(Error::HeaderMismatch(format!(
            "expected plain grid (rule 0), got rule {}",
            h.rule
        )));
    }
    if !(1..=3).contains(&(h.n as usize)) {
        return Err(Error::HeaderMismatch(format!("dimension {} out of range", h.n)));
    }
    let m = h.m as usize;
    if m < 16 || !m.is_power_of_two() {
        return Err(Error::HeaderMismatch(format!(
            "points per axis {m} is not a power of two >= 16"
        )));
    }
    let count = m.pow(h.n as u32);
    let values = read_f64_block(&mut r, count)?;
    let name = path
        .as_ref()
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "field".into());
    GridField::from_values(h.n as usize, h.l, m, values, name)
}

/// CSV export: one row per grid point, coordinates then value, 17
/// significant digits. `comments` lines are prefixed with '# '.
pub fn write_csv<W: Write>(g: &GridField, w: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(w, "# {c}")?;
    }
    let axes: Vec<String> = (0..g.n).map(|i| format!("x{i}")).collect();
    writeln!(w, "{},value", axes.join(","))?;
    for (flat, &v) in g.values.iter().enumerate() {
        let coords = g.coords(flat);
        let cs: Vec<String> = coords.iter().map(|c| format!("{c:.16e}")).collect();
        writeln!(w, "{},{v:.16e}", cs.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sample_gaussian_center_value() {
        let f = BuiltinFixture::Gaussian { sigma: 1.0 }.build(1);
        let g = sample(&f, 10.0, 64).unwrap();
        // x = 0 is grid point j = 32
        assert_eq!(g.values()[32], 1.0);
        assert_eq!(g.values().len(), 64);
    }

    #[test]
    fn sample_plane_wave_periodic() {
        let f = BuiltinFixture::PlaneWave { k: 1.0 }.build(1);
        let g = sample(&f, std::f64::consts::PI, 32).unwrap();
        for (flat, &v) in g.values().iter().enumerate() {
            let x = g.coords(flat)[0];
            assert_eq!(v, x.cos());
        }
    }

    #[test]
    fn sample_bump_compact_support() {
        let f = BuiltinFixture::Bump { r0: 1.0 }.build(1);
        let g = sample(&f, 4.0, 64).unwrap();
        for (flat, &v) in g.values().iter().enumerate() {
            let x = g.coords(flat)[0];
            if x.abs() >= 1.0 {
                assert_eq!(v, 0.0);
            }
        }
        assert_eq!(g.value_at(&[0.0]), 1.0);
    }

    #[test]
    fn sample_matches_eval_everywhere() {
        let f = BuiltinFixture::Gaussian { sigma: 2.0 }.build(2);
        let g = sample(&f, 8.0, 16).unwrap();
        for (flat, &v) in g.values().iter().enumerate() {
            let x = g.coords(flat);
            assert_eq!(v, f.eval(&x));
        }
    }

    #[test]
    fn eval_is_deterministic() {
        let f = BuiltinFixture::Witch.build(3);
        let x = [0.3, -1.7, 2.9];
        let a = f.eval(&x);
        let b = f.eval(&x);
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn sample_rejects_non_finite() {
        let f = AnalyticField::new(1, "bad", Decay::Bounded, |x: &[f64]| 1.0 / x[0]);
        assert!(matches!(sample(&f, 1.0, 16), Err(Error::NonFinite(_))));
    }

    #[test]
    fn ls_norm_zero_field() {
        let f = AnalyticField::new(1, "zero", Decay::Schwartz, |_: &[f64]| 0.0);
        assert_eq!(ls_norm_analytic(&f, 0.5), 0.0);
    }

    #[test]
    fn ls_norm_constant_is_pi() {
        // u == 1, n = 1, s = 1/2: int dx/(1+x^2) = pi
        let f = AnalyticField::new(1, "one", Decay::Bounded, |_: &[f64]| 1.0);
        let v = ls_norm_analytic(&f, 0.5);
        assert_relative_eq!(v, std::f64::consts::PI, max_relative = 1e-6);
    }

    #[test]
    fn ls_norm_growth_diverges() {
        // u(x) = |x|^{2s+1} in 1D: integrand ~ |x|^{1 - n - 2s + 2s} = const/|x|^0, not integrable
        let s = 0.5;
        let f = AnalyticField::new(
            1,
            "grow",
            Decay::TailPower(-(2.0 * s + 1.0)),
            move |x: &[f64]| x[0].abs().powf(2.0 * s + 1.0),
        );
        assert!(ls_norm_analytic(&f, s).is_infinite());
    }

    #[test]
    fn ls_norm_monotone_in_s_for_witch() {
        let f = BuiltinFixture::Witch.build(1);
        let a = ls_norm_analytic(&f, 0.2);
        let b = ls_norm_analytic(&f, 0.6);
        // heavier tail weight at smaller s: norm decreases as s grows
        assert!(b <= a);
    }

    #[test]
    fn grid_ls_norm_close_to_analytic() {
        let f = BuiltinFixture::Gaussian { sigma: 1.0 }.build(1);
        let g = sample(&f, 12.0, 256).unwrap();
        let a = ls_norm_analytic(&f, 0.5);
        let b = ls_norm_grid(&g, 0.5);
        assert_relative_eq!(a, b, max_relative = 1e-3);
    }

    #[test]
    fn save_load_roundtrip_bitexact() {
        let f = BuiltinFixture::Gaussian { sigma: 1.0 }.build(2);
        let g = sample(&f, 6.0, 16).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.fsgf");
        save_field(&g, &path).unwrap();
        let h = load_field(&path).unwrap();
        assert_eq!(g.n(), h.n());
        assert_eq!(g.l(), h.l());
        assert_eq!(g.m(), h.m());
        for (a, b) in g.values().iter().zip(h.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn load_truncated_file_fails() {
        let f = BuiltinFixture::Gaussian { sigma: 1.0 }.build(1);
        let g = sample(&f, 6.0, 16).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.fsgf");
        save_field(&g, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(matches!(load_field(&path), Err(Error::HeaderMismatch(_))));
    }

    #[test]
    fn load_bad_m_fails() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.fsgf");
        let mut w = std::io::BufWriter::new(std::fs::File::create(&path).unwrap());
        // M = 24 is not a power of two
        write_header(&mut w, 1, 0, 24, 1.0, 0.0).unwrap();
        for _ in 0..24 {
            w.write_all(&1.0f64.to_le_bytes()).unwrap();
        }
        drop(w);
        assert!(matches!(load_field(&path), Err(Error::HeaderMismatch(_))));
    }

    #[test]
    fn grid_validation() {
        assert!(GridField::from_values(1, 1.0, 12, vec![0.0; 12], "g").is_err());
        assert!(GridField::from_values(1, 1.0, 16, vec![0.0; 15], "g").is_err());
        assert!(GridField::from_values(4, 1.0, 16, vec![0.0; 65536], "g").is_err());
        assert!(GridField::from_values(1, 1.0, 16, vec![f64::NAN; 16], "g").is_err());
    }

    #[test]
    fn translate_wraps() {
        let f = BuiltinFixture::PlaneWave { k: 1.0 }.build(1);
        let g = sample(&f, std::f64::consts::PI, 32).unwrap();
        let t = g.translate(0, 5);
        for j in 0..32usize {
            let src = (j as i64 - 5).rem_euclid(32) as usize;
            assert_eq!(t.values()[j], g.values()[src]);
        }
        // translating by M is the identity
        let full = g.translate(0, 32);
        assert_eq!(full.values(), g.values());
    }

    #[test]
    fn fourier_inversion_consistency() {
        let f = BuiltinFixture::Gaussian { sigma: 1.0 }.build(1);
        let v = f.fourier_inversion_at_origin().unwrap();
        assert_relative_eq!(v, 1.0, max_relative = 1e-6);
        let f2 = BuiltinFixture::Gaussian { sigma: 0.5 }.build(2);
        let v2 = f2.fourier_inversion_at_origin().unwrap();
        assert_relative_eq!(v2, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn csv_export_shape() {
        let f = BuiltinFixture::Gaussian { sigma: 1.0 }.build(1);
        let g = sample(&f, 6.0, 16).unwrap();
        let mut buf = Vec::new();
        write_csv(&g, &mut buf, &["meta".to_string()]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 1 + 16);
        assert!(lines[0].starts_with("# meta"));
        assert_eq!(lines[1], "x0,value");
    }
}
