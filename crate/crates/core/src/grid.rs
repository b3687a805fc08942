//! Logarithmic grid, sampled functions and the spectral transform pair.
//!
//! Functions of `x > 0` are sampled at `x_j = exp(y_0 + j dy)`. The forward
//! transform
//!
//! ```text
//! F(u) = sum_j f(x_j) e^{delta y_j} e^{i u y_j} dy
//! ```
//!
//! and its inverse `f(x_j) = (2 pi)^{-1} e^{-delta y_j} sum_k F(u_k) e^{-i u_k y_j} du`
//! diagonalize `J = -x d/dx`: the mode `x^{-(delta + iu)}` has eigenvalue
//! `delta + iu`.

use std::f64::consts::PI;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::{check_finite, ComplexScalar};

/// Relative endpoint magnitude above which a weighted sample set is flagged
/// as non-decaying.
pub const DECAY_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogGrid {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl LogGrid {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min > 0.0 && x_min.is_finite()) {
            return Err(Error::InvalidGrid(format!("x_min must be positive, got {x_min}")));
        }
        if !(x_max > x_min && x_max.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "x_max must exceed x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n must be a power of two >= 16, got {n}")));
        }
        Ok(Self { x_min, x_max, n })
    }

    /// `x in [1e-6, 1e6]`, `n = 4096`.
    pub fn standard() -> Self {
        Self::new(1e-6, 1e6, 4096).expect("valid default grid")
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn y0(&self) -> f64 {
        self.x_min.ln()
    }

    /// Log-domain width `log x_max - log x_min`.
    pub fn width(&self) -> f64 {
        self.x_max.ln() - self.x_min.ln()
    }

    pub fn dy(&self) -> f64 {
        self.width() / self.n as f64
    }

    pub fn du(&self) -> f64 {
        2.0 * PI / self.width()
    }

    pub fn y(&self, j: usize) -> f64 {
        self.y0() + j as f64 * self.dy()
    }

    pub fn x(&self, j: usize) -> f64 {
        self.y(j).exp()
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Signed frequency index of storage slot `k` (ascending order, starting at `-n/2`).
    pub fn freq_index(&self, k: usize) -> i64 {
        k as i64 - (self.n / 2) as i64
    }

    /// Frequency `u_k` for storage slot `k`.
    pub fn frequency(&self, k: usize) -> f64 {
        self.freq_index(k) as f64 * self.du()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.n).map(|k| self.frequency(k)).collect()
    }

    /// Largest resolved frequency `pi / dy`.
    pub fn nyquist(&self) -> f64 {
        PI / self.dy()
    }

    /// Same log-domain, `factor` times as many points.
    pub fn refined(&self, factor: usize) -> Result<Self> {
        Self::new(self.x_min, self.x_max, self.n * factor)
    }
}

impl Default for LogGrid {
    fn default() -> Self {
        Self::standard()
    }
}

/// Non-fatal numerical conditions recorded alongside results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Warning {
    /// Weighted samples do not decay at a grid end; FFT wrap-around may alias.
    Aliasing { delta: f64, endpoint_ratio: f64 },
    /// Initial datum parameters fall outside the grid.
    Domain { message: String },
    /// Group shift larger than half the log-domain width.
    ExcessiveShift { t: f64 },
    /// Truncated Weyl-type integral; `estimate` bounds the neglected tail.
    Tail { estimate: f64, relative: f64 },
    /// Kernel mass not converged at the lattice truncation.
    KernelMass { truncated: f64 },
    /// Semigroup multiplier exceeds one somewhere on the line.
    Growth { max_log_multiplier: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: LogGrid,
    pub values: Vec<ComplexScalar>,
    pub weight_delta: f64,
    pub warnings: Vec<Warning>,
}

impl GridFunction {
    pub fn new(grid: LogGrid, values: Vec<ComplexScalar>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Contract(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        for v in &values {
            check_finite(*v, "grid function sample")?;
        }
        Ok(Self {
            grid,
            values,
            weight_delta: 0.0,
            warnings: Vec::new(),
        })
    }

    pub fn zeros(grid: LogGrid) -> Self {
        Self {
            grid,
            values: vec![ComplexScalar::new(0.0, 0.0); grid.len()],
            weight_delta: 0.0,
            warnings: Vec::new(),
        }
    }

    pub fn from_fn<F: Fn(f64) -> ComplexScalar>(grid: LogGrid, f: F) -> Result<Self> {
        Self::new(grid, (0..grid.len()).map(|j| f(grid.x(j))).collect())
    }

    pub fn from_real_fn<F: Fn(f64) -> f64>(grid: LogGrid, f: F) -> Result<Self> {
        Self::from_fn(grid, |x| ComplexScalar::new(f(x), 0.0))
    }

    /// Same grid, new values; warnings carried over.
    pub(crate) fn with_values(&self, values: Vec<ComplexScalar>) -> Self {
        Self {
            grid: self.grid,
            values,
            weight_delta: 0.0,
            warnings: self.warnings.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map<F: Fn(f64, ComplexScalar) -> ComplexScalar>(&self, f: F) -> Self {
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| f(self.grid.x(j), *v))
            .collect();
        self.with_values(values)
    }

    pub fn scale(&self, c: ComplexScalar) -> Self {
        self.with_values(self.values.iter().map(|v| v * c).collect())
    }

    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        self.check_same_grid(other)?;
        let mut out = self.with_values(self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect());
        out.warnings.extend(other.warnings.iter().cloned());
        Ok(out)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<Self> {
        self.add(&other.scale(ComplexScalar::new(-1.0, 0.0)))
    }

    pub(crate) fn check_same_grid(&self, other: &GridFunction) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::Contract("grid functions live on different grids".into()));
        }
        Ok(())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Grid `L^p(0, inf; dx)` norm with measure `x_j dy`; `p = inf` gives the max norm.
    pub fn norm_p(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.max_abs();
        }
        let dy = self.grid.dy();
        let s: f64 = self
            .values
            .iter()
            .enumerate()
            .map(|(j, v)| v.norm().powf(p) * self.grid.x(j) * dy)
            .sum();
        s.powf(1.0 / p)
    }

    /// `L^2(dx/x)` norm, i.e. the plain `l^2` norm of the samples in `y = log x`
    /// scaled by `sqrt(dy)`. Used for all relative error comparisons.
    pub fn norm_l2(&self) -> f64 {
        self.norm_l2_on(0..self.len())
    }

    pub fn norm_l2_on(&self, range: std::ops::Range<usize>) -> f64 {
        let s: f64 = self.values[range].iter().map(|v| v.norm_sqr()).sum();
        (s * self.grid.dy()).sqrt()
    }

    /// Pairing `<f, phi> = int f(x) phi(x) dx`.
    pub fn pairing(&self, phi: &GridFunction) -> Result<ComplexScalar> {
        self.check_same_grid(phi)?;
        let dy = self.grid.dy();
        Ok(self
            .values
            .iter()
            .zip(&phi.values)
            .enumerate()
            .map(|(j, (a, b))| a * b * self.grid.x(j) * dy)
            .sum())
    }

    /// Indices `j` with `x_j` in `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = (0..self.len()).find(|&j| self.grid.x(j) >= lo).unwrap_or(self.len());
        let end = (0..self.len())
            .rev()
            .find(|&j| self.grid.x(j) <= hi)
            .map(|j| j + 1)
            .unwrap_or(0);
        start..end.max(start)
    }

    /// Write `x,re,im` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "x,re,im")?;
        for (j, v) in self.values.iter().enumerate() {
            writeln!(w, "{:?},{:?},{:?}", self.grid.x(j), v.re, v.im)?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("ascii")
    }

    /// Read `x,re,im` CSV; the grid is reconstructed from the abscissae,
    /// which must be log-uniform.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut xs = Vec::new();
        let mut vals = Vec::new();
        for (lineno, line) in r.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 {
                if line.replace(' ', "") != "x,re,im" {
                    return Err(Error::Parse(format!("expected header x,re,im, got {line}")));
                }
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 columns", lineno + 1)));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            xs.push(parse(cols[0])?);
            vals.push(ComplexScalar::new(parse(cols[1])?, parse(cols[2])?));
        }
        if xs.len() < 2 {
            return Err(Error::Parse("need at least two rows".into()));
        }
        let n = xs.len();
        let dy = (xs[n - 1].ln() - xs[0].ln()) / (n - 1) as f64;
        for w in xs.windows(2) {
            let step = w[1].ln() - w[0].ln();
            if (step - dy).abs() > 1e-9 * dy.abs().max(1e-300) {
                return Err(Error::Parse("abscissae are not log-uniform".into()));
            }
        }
        let x_max = (xs[0].ln() + n as f64 * dy).exp();
        let grid = LogGrid::new(xs[0], x_max, n)?;
        GridFunction::new(grid, vals)
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(file))
    }
}

/// `||a - b||_2 / ||b||_2` in the `L^2(dx/x)` grid norm.
pub fn rel_l2_error(a: &GridFunction, b: &GridFunction) -> f64 {
    rel_l2_error_on(a, b, 0..a.len())
}

/// Relative error restricted to an index range.
pub fn rel_l2_error_on(a: &GridFunction, b: &GridFunction, range: std::ops::Range<usize>) -> f64 {
    let num: f64 = a.values[range.clone()]
        .iter()
        .zip(&b.values[range.clone()])
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    let den: f64 = b.values[range].iter().map(|y| y.norm_sqr()).sum();
    if den == 0.0 {
        return num.sqrt();
    }
    (num / den).sqrt()
}

#[derive(Debug, Clone)]
pub struct SpectralFunction {
    pub grid: LogGrid,
    /// Values at `u_k`, `k = -n/2 .. n/2 - 1` in ascending order.
    pub values: Vec<ComplexScalar>,
    pub delta: f64,
    pub warnings: Vec<Warning>,
}

impl SpectralFunction {
    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.frequencies()
    }

    /// Index of the largest-magnitude coefficient.
    pub fn peak_frequency(&self) -> f64 {
        let k = self
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
            .map(|(k, _)| k)
            .unwrap_or(0);
        self.grid.frequency(k)
    }
}

/// Shared FFT plans.
pub(crate) fn fft_plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    let mut planner = PLANNER
        .get_or_init(|| Mutex::new(FftPlanner::new()))
        .lock()
        .expect("fft planner lock");
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

fn endpoint_ratio(values: &[ComplexScalar]) -> f64 {
    let max = values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return 0.0;
    }
    let n = values.len();
    values[0].norm().max(values[n - 1].norm()) / max
}

/// Forward transform along the line `Re z = delta`.
pub fn to_spectral(f: &GridFunction, delta: f64) -> SpectralFunction {
    let grid = f.grid;
    let n = grid.len();
    let dy = grid.dy();
    let y0 = grid.y0();
    let mut buf: Vec<ComplexScalar> = f
        .values
        .iter()
        .enumerate()
        .map(|(j, v)| v * (delta * grid.y(j)).exp())
        .collect();
    let mut warnings = f.warnings.clone();
    let ratio = endpoint_ratio(&buf);
    if ratio > DECAY_THRESHOLD {
        warnings.push(Warning::Aliasing {
            delta,
            endpoint_ratio: ratio,
        });
    }
    // sum_j g_j e^{+2 pi i k j / n}
    fft_plan(n, true).process(&mut buf);
    let values = (0..n)
        .map(|k| {
            let kk = grid.freq_index(k);
            let slot = kk.rem_euclid(n as i64) as usize;
            let u = kk as f64 * grid.du();
            buf[slot] * ComplexScalar::from_polar(dy, u * y0)
        })
        .collect();
    SpectralFunction {
        grid,
        values,
        delta,
        warnings,
    }
}

/// Inverse transform; `delta` must match the one used in `to_spectral`.
pub fn from_spectral(spec: &SpectralFunction, delta: f64) -> Result<GridFunction> {
    if delta != spec.delta {
        return Err(Error::Contract(format!(
            "from_spectral delta {delta} does not match spectrum delta {}",
            spec.delta
        )));
    }
    let grid = spec.grid;
    let n = grid.len();
    let y0 = grid.y0();
    let mut buf = vec![ComplexScalar::new(0.0, 0.0); n];
    for (k, v) in spec.values.iter().enumerate() {
        let kk = grid.freq_index(k);
        let slot = kk.rem_euclid(n as i64) as usize;
        let u = kk as f64 * grid.du();
        buf[slot] = v * ComplexScalar::from_polar(1.0, -u * y0);
    }
    // sum_k G_k e^{-2 pi i k j / n}
    fft_plan(n, false).process(&mut buf);
    let scale = grid.du() / (2.0 * PI);
    let values: Vec<ComplexScalar> = buf
        .iter()
        .enumerate()
        .map(|(j, v)| v * (scale * (-delta * grid.y(j)).exp()))
        .collect();
    for v in &values {
        check_finite(*v, "inverse spectral transform")?;
    }
    Ok(GridFunction {
        grid,
        values,
        weight_delta: 0.0,
        warnings: spec.warnings.clone(),
    })
}

/// Dilation group `(G(t) f)(x) = f(e^{-t} x)`, i.e. a shift by `t` in `y`.
///
/// Lattice shifts are exact re-indexing; the sub-lattice remainder is applied
/// by band-limited (spectral) interpolation. Samples entering from outside the
/// grid are zero.
pub fn group_shift(f: &GridFunction, t: f64) -> GridFunction {
    let grid = f.grid;
    let n = grid.len();
    let dy = grid.dy();
    let m = (t / dy).round();
    let r = t - m * dy;
    let mut out = f.clone();
    if r.abs() > 1e-12 * dy {
        let mut spec = to_spectral(f, 0.0);
        for (k, v) in spec.values.iter_mut().enumerate() {
            let u = grid.frequency(k);
            if k == 0 {
                *v *= (u * r).cos();
            } else {
                *v *= ComplexScalar::from_polar(1.0, u * r);
            }
        }
        spec.warnings.clear();
        out = from_spectral(&spec, 0.0).expect("matching delta");
        out.warnings = f.warnings.clone();
    }
    let m = m as i64;
    let shifted = (0..n as i64)
        .map(|j| {
            let src = j - m;
            if (0..n as i64).contains(&src) {
                out.values[src as usize]
            } else {
                ComplexScalar::new(0.0, 0.0)
            }
        })
        .collect();
    let mut g = f.with_values(shifted);
    if t.abs() > 0.5 * grid.width() {
        g.warnings.push(Warning::ExcessiveShift { t });
    }
    g
}

/// Preset initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum InitialDatum {
    /// `1` on `[a, b)`.
    Indicator { a: f64, b: f64 },
    /// `exp(-(log x - mu)^2 / (2 sigma^2))`, peak value 1.
    LogGaussian { mu: f64, sigma: f64 },
    /// `(x - strike)^+` for `x < cap`, zero beyond.
    TruncatedCall { strike: f64, cap: f64 },
    /// `x^{-(delta0 + i u0)}` times a smooth plateau window equal to one on
    /// `[x_lo, x_hi]` and vanishing `ramp` log-units outside it.
    Power {
        delta0: f64,
        u0: f64,
        x_lo: f64,
        x_hi: f64,
        ramp: f64,
    },
}

fn smooth_step(t: f64) -> f64 {
    fn psi(t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            (-1.0 / t).exp()
        }
    }
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        psi(t) / (psi(t) + psi(1.0 - t))
    }
}

/// C-infinity window in `y = log x`: one on `[lo, hi]`, zero outside `[lo - ramp, hi + ramp]`.
pub fn plateau_window(y: f64, lo: f64, hi: f64, ramp: f64) -> f64 {
    smooth_step((y - (lo - ramp)) / ramp) * smooth_step(((hi + ramp) - y) / ramp)
}

impl InitialDatum {
    pub fn eval(&self, x: f64) -> ComplexScalar {
        let re = |v: f64| ComplexScalar::new(v, 0.0);
        match *self {
            InitialDatum::Indicator { a, b } => re(if x >= a && x < b { 1.0 } else { 0.0 }),
            InitialDatum::LogGaussian { mu, sigma } => {
                let d = x.ln() - mu;
                re((-d * d / (2.0 * sigma * sigma)).exp())
            }
            InitialDatum::TruncatedCall { strike, cap } => re(if x < cap { (x - strike).max(0.0) } else { 0.0 }),
            InitialDatum::Power {
                delta0,
                u0,
                x_lo,
                x_hi,
                ramp,
            } => {
                let y = x.ln();
                let w = plateau_window(y, x_lo.ln(), x_hi.ln(), ramp);
                if w == 0.0 {
                    return re(0.0);
                }
                ComplexScalar::from_polar((-delta0 * y).exp() * w, -u0 * y)
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Contract(m.to_string()));
        match *self {
            InitialDatum::Indicator { a, b } if !(a > 0.0 && b > a) => bad("indicator needs 0 < a < b"),
            InitialDatum::LogGaussian { sigma, .. } if !(sigma > 0.0) => bad("log_gaussian needs sigma > 0"),
            InitialDatum::TruncatedCall { strike, cap } if !(strike >= 0.0 && cap > strike) => {
                bad("truncated_call needs 0 <= strike < cap")
            }
            InitialDatum::Power { x_lo, x_hi, ramp, .. } if !(x_lo > 0.0 && x_hi > x_lo && ramp > 0.0) => {
                bad("power window needs 0 < x_lo < x_hi and ramp > 0")
            }
            _ => Ok(()),
        }
    }

    fn support_hint(&self) -> (f64, f64) {
        match *self {
            InitialDatum::Indicator { a, b } => (a, b),
            InitialDatum::LogGaussian { mu, sigma } => ((mu - 6.0 * sigma).exp(), (mu + 6.0 * sigma).exp()),
            InitialDatum::TruncatedCall { strike, cap } => (strike.max(f64::MIN_POSITIVE), cap),
            InitialDatum::Power { x_lo, x_hi, ramp, .. } => (x_lo * (-ramp).exp(), x_hi * ramp.exp()),
        }
    }
}

/// Pointwise samples of a preset at the grid nodes.
pub fn sample(preset: &InitialDatum, grid: LogGrid) -> Result<GridFunction> {
    preset.validate()?;
    let mut f = GridFunction::from_fn(grid, |x| preset.eval(x))?;
    let (lo, hi) = preset.support_hint();
    if lo < grid.x_min() || hi > grid.x_max() {
        f.warnings.push(Warning::Domain {
            message: format!(
                "datum support [{lo:e}, {hi:e}] exceeds grid [{:e}, {:e}]",
                grid.x_min(),
                grid.x_max()
            ),
        });
    }
    Ok(f)
}
