//! Power coefficient surfaces `Cp(λ, θ)`.
//!
//! A [`CpSurface`] wraps a base map (an analytic surrogate or a rectangular
//! table) together with a scalar offset. Inputs are clamped to the map's
//! bounds and the offset value is clamped to `[0, BETZ_LIMIT]`.

use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use crate::error::CpGridError;

/// Betz limit, the physical ceiling of any power coefficient.
pub const BETZ_LIMIT: f64 = 0.593;

/// Widely used analytic turbine surrogate
///
/// `Cp = c1 (c2/λi − c3 θ − c4) exp(−c5/λi) + c6 λ`, with
/// `1/λi = 1/(λ + 0.08 θ) − 0.035/(θ³ + 1)` and `θ` in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticCp {
    pub coefficients: [f64; 6],
}

impl Default for AnalyticCp {
    fn default() -> Self {
        Self {
            coefficients: [0.5176, 116.0, 0.4, 5.0, 21.0, 0.0068],
        }
    }
}

impl AnalyticCp {
    fn inverse_lambda_i(lambda: f64, pitch_deg: f64) -> f64 {
        1.0 / (lambda + 0.08 * pitch_deg) - 0.035 / (pitch_deg.powi(3) + 1.0)
    }

    /// Surface value at `(λ, θ)` with `θ` in radians; no clamping.
    pub fn value(&self, lambda: f64, pitch: f64) -> f64 {
        let [c1, c2, c3, c4, c5, c6] = self.coefficients;
        let deg = pitch.to_degrees();
        let inv = Self::inverse_lambda_i(lambda, deg);
        c1 * (c2 * inv - c3 * deg - c4) * (-c5 * inv).exp() + c6 * lambda
    }

    /// Analytic `(∂Cp/∂λ, ∂Cp/∂θ)` with `θ` in radians.
    pub fn partials(&self, lambda: f64, pitch: f64) -> (f64, f64) {
        let [c1, c2, c3, c4, c5, c6] = self.coefficients;
        let deg = pitch.to_degrees();
        let inv = Self::inverse_lambda_i(lambda, deg);
        let decay = (-c5 * inv).exp();
        let d_inv = c1 * decay * (c2 - c5 * (c2 * inv - c3 * deg - c4));

        let shifted = lambda + 0.08 * deg;
        let cube = deg.powi(3) + 1.0;
        let dinv_dlambda = -1.0 / (shifted * shifted);
        let dinv_ddeg = -0.08 / (shifted * shifted) + 0.035 * 3.0 * deg * deg / (cube * cube);

        let d_lambda = d_inv * dinv_dlambda + c6;
        let d_deg = d_inv * dinv_ddeg - c1 * c3 * decay;
        (d_lambda, d_deg.to_degrees())
    }
}

/// Rectangular `Cp` table over a tip-speed-ratio axis and a pitch axis.
///
/// Values are stored row-major with one row per tip-speed ratio.
#[derive(Clone, Debug, PartialEq)]
pub struct CpGrid {
    tip_speed_ratios: Vec<f64>,
    pitches: Vec<f64>,
    values: Vec<f64>,
}

fn check_axis(axis: &'static str, values: &[f64]) -> Result<(), CpGridError> {
    if values.len() < 2 {
        return Err(CpGridError::AxisTooShort {
            axis,
            len: values.len(),
        });
    }
    for (index, pair) in values.windows(2).enumerate() {
        if pair[1] <= pair[0] || !pair[0].is_finite() || !pair[1].is_finite() {
            return Err(CpGridError::NonMonotonicAxis {
                axis,
                index: index + 1,
            });
        }
    }
    Ok(())
}

/// Index `i` of the cell `[axis[i], axis[i+1]]` holding `x`, with `x` already in range.
fn cell(axis: &[f64], x: f64) -> usize {
    let upper = axis.partition_point(|&a| a <= x);
    upper.saturating_sub(1).min(axis.len() - 2)
}

impl CpGrid {
    /// Builds a grid; `pitches` are in radians.
    pub fn new(
        tip_speed_ratios: Vec<f64>,
        pitches: Vec<f64>,
        values: Vec<f64>,
    ) -> Result<Self, CpGridError> {
        check_axis("tip-speed ratio", &tip_speed_ratios)?;
        check_axis("pitch", &pitches)?;
        let (rows, cols) = (tip_speed_ratios.len(), pitches.len());
        if values.len() != rows * cols {
            return Err(CpGridError::DimensionMismatch {
                rows,
                cols,
                expected: rows * cols,
                actual: values.len(),
            });
        }
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(CpGridError::NonFinite {
                row: idx / cols,
                col: idx % cols,
            });
        }
        Ok(Self {
            tip_speed_ratios,
            pitches,
            values,
        })
    }

    /// Samples an analytic surface onto the given axes (pitch in radians).
    pub fn sample(
        surrogate: &AnalyticCp,
        tip_speed_ratios: Vec<f64>,
        pitches: Vec<f64>,
    ) -> Result<Self, CpGridError> {
        let values = tip_speed_ratios
            .iter()
            .flat_map(|&l| pitches.iter().map(move |&p| surrogate.value(l, p)))
            .collect();
        Self::new(tip_speed_ratios, pitches, values)
    }

    /// Reads a table whose first row is the pitch axis in degrees, first
    /// column the tip-speed-ratio axis, and body the `Cp` values.
    /// The top-left cell is a free-form label.
    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self, CpGridError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(reader);
        let mut pitches = Vec::new();
        let mut lambdas = Vec::new();
        let mut values = Vec::new();
        for (row, record) in rdr.records().enumerate() {
            let record = record?;
            let parse = |s: &str| {
                s.parse::<f64>().map_err(|e| CpGridError::Parse {
                    row,
                    message: format!("'{s}': {e}"),
                })
            };
            if row == 0 {
                for field in record.iter().skip(1) {
                    pitches.push(parse(field)?.to_radians());
                }
                continue;
            }
            let mut fields = record.iter();
            let Some(first) = fields.next() else { continue };
            lambdas.push(parse(first)?);
            let body: Vec<f64> = fields.map(parse).collect::<Result<_, _>>()?;
            if body.len() != pitches.len() {
                return Err(CpGridError::Parse {
                    row,
                    message: format!("expected {} values, found {}", pitches.len(), body.len()),
                });
            }
            values.extend(body);
        }
        Self::new(lambdas, pitches, values)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self, CpGridError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|source| CpGridError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_csv_reader(file)
    }

    /// Writes the table in the layout accepted by [`CpGrid::from_csv_reader`].
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<(), CpGridError> {
        let mut wtr = csv::Writer::from_writer(writer);
        let mut header = vec!["lambda/pitch_deg".to_string()];
        header.extend(self.pitches.iter().map(|p| p.to_degrees().to_string()));
        wtr.write_record(&header)?;
        for (i, lambda) in self.tip_speed_ratios.iter().enumerate() {
            let mut row = vec![lambda.to_string()];
            row.extend(self.row(i).iter().map(f64::to_string));
            wtr.write_record(&row)?;
        }
        wtr.flush().map_err(|source| CpGridError::Io {
            path: "<writer>".into(),
            source,
        })
    }

    pub fn tip_speed_ratios(&self) -> &[f64] {
        &self.tip_speed_ratios
    }

    pub fn pitches(&self) -> &[f64] {
        &self.pitches
    }

    fn row(&self, i: usize) -> &[f64] {
        let cols = self.pitches.len();
        &self.values[i * cols..(i + 1) * cols]
    }

    fn node(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.pitches.len() + j]
    }

    /// Bilinear interpolation; inputs must already lie within the axes.
    fn interpolate(&self, lambda: f64, pitch: f64) -> f64 {
        let i = cell(&self.tip_speed_ratios, lambda);
        let j = cell(&self.pitches, pitch);
        let (l0, l1) = (self.tip_speed_ratios[i], self.tip_speed_ratios[i + 1]);
        let (p0, p1) = (self.pitches[j], self.pitches[j + 1]);
        let s = (lambda - l0) / (l1 - l0);
        let t = (pitch - p0) / (p1 - p0);
        let lower = self.node(i, j) * (1.0 - t) + self.node(i, j + 1) * t;
        let upper = self.node(i + 1, j) * (1.0 - t) + self.node(i + 1, j + 1) * t;
        lower * (1.0 - s) + upper * s
    }
}

/// Central difference with the local grid spacing as step, one-sided
/// where the stencil would leave the axis.
fn grid_difference(axis: &[f64], x: f64, f: impl Fn(f64) -> f64) -> f64 {
    let h = {
        let i = cell(axis, x);
        axis[i + 1] - axis[i]
    };
    let (lo, hi) = (axis[0], axis[axis.len() - 1]);
    let back = x - h >= lo;
    let fwd = x + h <= hi;
    match (back, fwd) {
        (true, true) => (f(x + h) - f(x - h)) / (2.0 * h),
        (false, true) => (f(x + h) - f(x)) / h,
        (true, false) => (f(x) - f(x - h)) / h,
        // axis shorter than one step on both sides: use the full span
        (false, false) => (f(hi) - f(lo)) / (hi - lo),
    }
}

/// Base map behind a [`CpSurface`].
#[derive(Clone, Debug, PartialEq)]
pub enum CpMap {
    Analytic(AnalyticCp),
    Grid(CpGrid),
}

/// Power coefficient map with a scalar offset and input bounds.
///
/// Cloning is cheap: the base map is shared between all offsets of a bank.
#[derive(Clone, Debug, PartialEq)]
pub struct CpSurface {
    map: Arc<CpMap>,
    offset: f64,
    lambda_bounds: (f64, f64),
    pitch_bounds: (f64, f64),
}

impl CpSurface {
    /// Default analytic surrogate on `λ ∈ [1, 16]`, `θ ∈ [0°, 35°]`.
    pub fn analytic() -> Self {
        Self::from_analytic(
            AnalyticCp::default(),
            (1.0, 16.0),
            (0.0, 35f64.to_radians()),
        )
    }

    pub fn from_analytic(
        surrogate: AnalyticCp,
        lambda_bounds: (f64, f64),
        pitch_bounds: (f64, f64),
    ) -> Self {
        Self {
            map: Arc::new(CpMap::Analytic(surrogate)),
            offset: 0.0,
            lambda_bounds,
            pitch_bounds,
        }
    }

    /// Grid-backed surface; bounds are the grid's axis extents.
    pub fn from_grid(grid: CpGrid) -> Self {
        let lambda_bounds = (
            grid.tip_speed_ratios[0],
            *grid.tip_speed_ratios.last().unwrap(),
        );
        let pitch_bounds = (grid.pitches[0], *grid.pitches.last().unwrap());
        Self {
            map: Arc::new(CpMap::Grid(grid)),
            offset: 0.0,
            lambda_bounds,
            pitch_bounds,
        }
    }

    /// Same base map, different offset.
    pub fn with_offset(&self, offset: f64) -> Self {
        Self {
            offset,
            ..self.clone()
        }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn map(&self) -> &CpMap {
        &self.map
    }

    pub fn lambda_bounds(&self) -> (f64, f64) {
        self.lambda_bounds
    }

    pub fn pitch_bounds(&self) -> (f64, f64) {
        self.pitch_bounds
    }

    fn clamp_inputs(&self, lambda: f64, pitch: f64) -> (f64, f64) {
        (
            lambda.clamp(self.lambda_bounds.0, self.lambda_bounds.1),
            pitch.clamp(self.pitch_bounds.0, self.pitch_bounds.1),
        )
    }

    fn in_bounds(&self, lambda: f64, pitch: f64) -> (bool, bool) {
        (
            (self.lambda_bounds.0..=self.lambda_bounds.1).contains(&lambda),
            (self.pitch_bounds.0..=self.pitch_bounds.1).contains(&pitch),
        )
    }

    /// Base map at clamped inputs, offset included, no value clamp.
    pub fn raw_value(&self, lambda: f64, pitch: f64) -> f64 {
        let (lambda, pitch) = self.clamp_inputs(lambda, pitch);
        let base = match &*self.map {
            CpMap::Analytic(a) => a.value(lambda, pitch),
            CpMap::Grid(g) => g.interpolate(lambda, pitch),
        };
        base + self.offset
    }

    /// `Cp₀(λ, θ) + Δ`, clamped to `[0, BETZ_LIMIT]`.
    pub fn value(&self, lambda: f64, pitch: f64) -> f64 {
        self.raw_value(lambda, pitch).clamp(0.0, BETZ_LIMIT)
    }

    /// `(∂Cp/∂λ, ∂Cp/∂θ)` ignoring the value clamp; each is zero when its
    /// input is outside the bounds.
    pub fn partials(&self, lambda: f64, pitch: f64) -> (f64, f64) {
        let (lambda_in, pitch_in) = self.in_bounds(lambda, pitch);
        let (cl, cp) = self.clamp_inputs(lambda, pitch);
        let (d_lambda, d_pitch) = match &*self.map {
            CpMap::Analytic(a) => a.partials(cl, cp),
            CpMap::Grid(g) => (
                grid_difference(&g.tip_speed_ratios, cl, |x| g.interpolate(x, cp)),
                grid_difference(&g.pitches, cp, |x| g.interpolate(cl, x)),
            ),
        };
        (
            if lambda_in { d_lambda } else { 0.0 },
            if pitch_in { d_pitch } else { 0.0 },
        )
    }

    /// Tip-speed ratio maximizing `Cp` at the given pitch, and that maximum.
    pub fn optimum(&self, pitch: f64) -> (f64, f64) {
        let (lo, hi) = self.lambda_bounds;
        let n = 2000;
        let step = (hi - lo) / n as f64;
        let best = (0..=n)
            .map(|i| lo + step * i as f64)
            .max_by(|a, b| {
                self.raw_value(*a, pitch)
                    .total_cmp(&self.raw_value(*b, pitch))
            })
            .unwrap_or(lo);

        // golden-section refinement inside the bracketing samples
        let (mut a, mut b) = ((best - step).max(lo), (best + step).min(hi));
        let ratio = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..60 {
            let c = b - ratio * (b - a);
            let d = a + ratio * (b - a);
            if self.raw_value(c, pitch) > self.raw_value(d, pitch) {
                b = d;
            } else {
                a = c;
            }
        }
        let lambda = 0.5 * (a + b);
        (lambda, self.value(lambda, pitch))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> CpGrid {
        CpGrid::new(
            vec![4.0, 6.0, 8.0, 10.0],
            vec![0.0, 0.1, 0.2],
            vec![
                0.30, 0.25, 0.15, //
                0.42, 0.35, 0.22, //
                0.47, 0.38, 0.20, //
                0.44, 0.30, 0.10,
            ],
        )
        .unwrap()
    }

    #[test]
    fn surrogate_peak_is_realistic() {
        let (lambda, cp) = CpSurface::analytic().optimum(0.0);
        assert!((7.5..8.5).contains(&lambda), "λ* = {lambda}");
        assert!((0.46..0.50).contains(&cp), "Cp,max = {cp}");
    }

    #[test]
    fn surrogate_partials_match_finite_differences() {
        let a = AnalyticCp::default();
        for &(l, p) in &[(5.0, 0.05), (8.0, 0.0), (6.5, 0.2), (11.0, 0.1)] {
            let (dl, dp) = a.partials(l, p);
            let h = 1e-6;
            let fl = (a.value(l + h, p) - a.value(l - h, p)) / (2.0 * h);
            let fp = (a.value(l, p + h) - a.value(l, p - h)) / (2.0 * h);
            assert!((dl - fl).abs() < 1e-6 * (1.0 + fl.abs()), "{dl} vs {fl}");
            assert!((dp - fp).abs() < 1e-6 * (1.0 + fp.abs()), "{dp} vs {fp}");
        }
    }

    #[test]
    fn grid_nodes_are_reproduced() {
        let surface = CpSurface::from_grid(small_grid());
        assert_eq!(surface.value(6.0, 0.1), 0.35);
        assert_eq!(surface.value(10.0, 0.0), 0.44);
    }

    #[test]
    fn offset_shifts_value_exactly() {
        let base = CpSurface::from_grid(small_grid());
        let up = base.with_offset(0.03);
        let down = base.with_offset(-0.03);
        for &(l, p) in &[(5.0, 0.05), (7.3, 0.17), (9.9, 0.01)] {
            assert!((up.value(l, p) - base.value(l, p) - 0.03).abs() < 1e-15);
            let mid = 0.5 * (up.value(l, p) + down.value(l, p));
            assert!((mid - base.value(l, p)).abs() < 1e-15);
        }
    }

    #[test]
    fn inputs_are_clamped() {
        let surface = CpSurface::from_grid(small_grid());
        assert_eq!(surface.value(25.0, 0.1), surface.value(10.0, 0.1));
        assert_eq!(surface.value(6.0, -1.0), surface.value(6.0, 0.0));
        assert_eq!(surface.partials(25.0, 0.1).0, 0.0);
        assert_eq!(surface.partials(6.0, 0.5).1, 0.0);
    }

    #[test]
    fn value_clamped_to_betz_and_zero() {
        let surface = CpSurface::from_grid(small_grid());
        assert_eq!(surface.with_offset(0.5).value(8.0, 0.0), BETZ_LIMIT);
        assert_eq!(surface.with_offset(-0.5).value(8.0, 0.0), 0.0);
        // partials ignore the value clamp
        assert_eq!(
            surface.with_offset(0.5).partials(7.0, 0.05),
            surface.partials(7.0, 0.05)
        );
    }

    #[test]
    fn grid_partials_use_central_and_one_sided_differences() {
        let surface = CpSurface::from_grid(small_grid());
        // interior node: central difference over neighbouring nodes
        let (dl, dp) = surface.partials(6.0, 0.1);
        assert!((dl - (0.38 - 0.25) / 4.0).abs() < 1e-12);
        assert!((dp - (0.22 - 0.42) / 0.2).abs() < 1e-12);
        // lower λ edge: forward difference
        let (dl, _) = surface.partials(4.0, 0.0);
        assert!((dl - (0.42 - 0.30) / 2.0).abs() < 1e-12);
        // upper pitch edge: backward difference
        let (_, dp) = surface.partials(8.0, 0.2);
        assert!((dp - (0.20 - 0.38) / 0.1).abs() < 1e-12);
    }

    #[test]
    fn rejects_malformed_grids() {
        assert!(matches!(
            CpGrid::new(vec![1.0, 1.0], vec![0.0, 1.0], vec![0.0; 4]),
            Err(CpGridError::NonMonotonicAxis { .. })
        ));
        assert!(matches!(
            CpGrid::new(vec![1.0, 2.0], vec![0.0, 1.0], vec![0.0; 3]),
            Err(CpGridError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            CpGrid::new(vec![1.0], vec![0.0, 1.0], vec![0.0; 2]),
            Err(CpGridError::AxisTooShort { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let grid = CpGrid::sample(
            &AnalyticCp::default(),
            (2..=14).map(f64::from).collect(),
            (0..=5).map(|d| f64::from(d * 5).to_radians()).collect(),
        )
        .unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        let back = CpGrid::from_csv_reader(buf.as_slice()).unwrap();
        assert_eq!(back.tip_speed_ratios(), grid.tip_speed_ratios());
        for (a, b) in back.pitches().iter().zip(grid.pitches()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(back.values, grid.values);
    }

    #[test]
    fn csv_reports_ragged_rows() {
        let text = "x,0,5\n4,0.3,0.2\n6,0.4\n";
        assert!(matches!(
            CpGrid::from_csv_reader(text.as_bytes()),
            Err(CpGridError::Parse { row: 2, .. })
        ));
    }
}
