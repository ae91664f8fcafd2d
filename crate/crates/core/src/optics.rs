//! Complex-field grids, frequency coordinates, pupil construction, and LED
//! illumination geometry shared by the physics modules.
//!
//! All spatial frequencies are in cycles per micrometer at the object plane.
//! Arrays are indexed `[row][col]` with row <-> y and col <-> x.

use crate::error::{Error, Result};
use crate::fft::Fft2;
use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Hard cap on illumination NA for any pattern.
pub const MAX_ILLUM_NA: f64 = 0.41;

/// Complex-valued 2-D field with a physical pixel pitch (object plane, um).
#[derive(Debug, Clone)]
pub struct ComplexField2D {
    pub data: Array2<Complex64>,
    pub pitch: f64,
}

impl ComplexField2D {
    pub fn new(data: Array2<Complex64>, pitch: f64) -> Result<Self> {
        if data.nrows() < 1 || data.ncols() < 1 {
            return Err(Error::shape("field must be at least 1x1"));
        }
        if !(pitch > 0.0) {
            return Err(Error::config(format!("pixel pitch must be positive, got {pitch}")));
        }
        Ok(ComplexField2D { data, pitch })
    }

    pub fn shape(&self) -> (usize, usize) {
        self.data.dim()
    }

    /// DC-centered spectrum of this field.
    pub fn spectrum(&self) -> Array2<Complex64> {
        Fft2::new(self.data.nrows(), self.data.ncols()).spectrum(&self.data)
    }

    /// Field whose DC-centered spectrum is `spectrum`.
    pub fn from_spectrum(spectrum: &Array2<Complex64>, pitch: f64) -> Result<Self> {
        let field = Fft2::new(spectrum.nrows(), spectrum.ncols()).inverse_spectrum(spectrum);
        ComplexField2D::new(field, pitch)
    }
}

/// Microscope configuration: objective, camera, and sensor grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OpticalSystem {
    pub wavelength_um: f64,
    pub objective_na: f64,
    pub magnification: f64,
    pub camera_pixel_um: f64,
    pub sensor_shape: (usize, usize),
}

impl OpticalSystem {
    pub fn validate(&self) -> Result<()> {
        if !(self.wavelength_um > 0.0) {
            return Err(Error::config("wavelength must be positive"));
        }
        if !(self.objective_na > 0.0 && self.objective_na < 1.0) {
            return Err(Error::config(format!(
                "objective NA must lie in (0, 1), got {}",
                self.objective_na
            )));
        }
        if !(self.magnification > 0.0) || !(self.camera_pixel_um > 0.0) {
            return Err(Error::config("magnification and camera pixel must be positive"));
        }
        Ok(())
    }

    /// Object-plane sampling pitch in um.
    pub fn object_pitch(&self) -> f64 {
        self.camera_pixel_um / self.magnification
    }

    /// Pupil cutoff NA/lambda in 1/um.
    pub fn cutoff_freq(&self) -> f64 {
        self.objective_na / self.wavelength_um
    }
}

/// DC-centered DFT frequency axes for a grid.
#[derive(Debug, Clone)]
pub struct FrequencyAxes {
    /// Frequency of each row (u_y), 1/um.
    pub row: Vec<f64>,
    /// Frequency of each column (u_x), 1/um.
    pub col: Vec<f64>,
}

impl FrequencyAxes {
    pub fn spacing_row(&self) -> f64 {
        if self.row.len() > 1 { self.row[1] - self.row[0] } else { 0.0 }
    }

    pub fn spacing_col(&self) -> f64 {
        if self.col.len() > 1 { self.col[1] - self.col[0] } else { 0.0 }
    }

    /// Index of the DC bin, `(rows/2, cols/2)`.
    pub fn dc_index(&self) -> (usize, usize) {
        (self.row.len() / 2, self.col.len() / 2)
    }
}

/// Frequency axes with DC at `floor(n/2)`; spacing `1/(n*pitch)` per axis.
pub fn make_frequency_axes(shape: (usize, usize), pitch: f64) -> Result<FrequencyAxes> {
    if shape.0 < 2 || shape.1 < 2 {
        return Err(Error::shape(format!("grid must be at least 2x2, got {shape:?}")));
    }
    if !(pitch > 0.0) {
        return Err(Error::config(format!("pixel pitch must be positive, got {pitch}")));
    }
    let axis = |n: usize| -> Vec<f64> {
        let du = 1.0 / (n as f64 * pitch);
        (0..n).map(|k| (k as isize - (n / 2) as isize) as f64 * du).collect()
    };
    Ok(FrequencyAxes { row: axis(shape.0), col: axis(shape.1) })
}

/// Objective pupil on a frequency grid.
#[derive(Debug, Clone)]
pub struct Pupil {
    /// Complex mask over the DC-centered frequency grid.
    pub mask: Array2<Complex64>,
    /// NA/lambda in 1/um.
    pub cutoff_freq: f64,
}

impl Pupil {
    pub fn shape(&self) -> (usize, usize) {
        self.mask.dim()
    }
}

/// Ideal binary pupil disk of radius NA/lambda.
///
/// Fails when the grid cannot hold the full disk symmetrically about DC,
/// reporting the pitch that would.
pub fn make_pupil(system: &OpticalSystem, shape: (usize, usize), pitch: f64) -> Result<Pupil> {
    system.validate()?;
    let axes = make_frequency_axes(shape, pitch)?;
    let cutoff = system.cutoff_freq();
    // Largest frequency present on both sides of DC.
    let max_sym = f64::min(
        (shape.0 as f64 / 2.0 - 1.0) * axes.spacing_row(),
        (shape.1 as f64 / 2.0 - 1.0) * axes.spacing_col(),
    );
    if cutoff > max_sym {
        let n = shape.0.min(shape.1) as f64;
        let required = (n / 2.0 - 1.0) / (n * cutoff);
        return Err(Error::config(format!(
            "grid too coarse for pupil: cutoff {cutoff:.6} 1/um exceeds max symmetric \
             frequency {max_sym:.6} 1/um; need pitch <= {required:.6} um"
        )));
    }
    let mut mask = Array2::from_elem(shape, Complex64::new(0.0, 0.0));
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            let r = (axes.row[i].powi(2) + axes.col[j].powi(2)).sqrt();
            if r <= cutoff {
                mask[[i, j]] = Complex64::new(1.0, 0.0);
            }
        }
    }
    Ok(Pupil { mask, cutoff_freq: cutoff })
}

/// One LED plane-wave direction: `(sin(theta_x)/lambda, sin(theta_y)/lambda)` in 1/um.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedFreq {
    pub u_x: f64,
    pub u_y: f64,
}

impl LedFreq {
    pub fn magnitude(&self) -> f64 {
        (self.u_x * self.u_x + self.u_y * self.u_y).sqrt()
    }

    /// Illumination NA of this LED.
    pub fn na(&self, wavelength_um: f64) -> f64 {
        self.magnitude() * wavelength_um
    }

    /// Integer pixel shift `(rows, cols)` of the spectrum for this LED.
    pub fn shift_px(&self, axes: &FrequencyAxes) -> (isize, isize) {
        (
            (self.u_y / axes.spacing_row()).round() as isize,
            (self.u_x / axes.spacing_col()).round() as isize,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PatternKind {
    Brightfield,
    Darkfield,
}

/// A set of simultaneously lit LEDs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IlluminationPattern {
    pub leds: Vec<LedFreq>,
    pub kind: PatternKind,
}

impl IlluminationPattern {
    /// Validates the NA cap and that every LED matches `kind` for `system`.
    pub fn new(leds: Vec<LedFreq>, kind: PatternKind, system: &OpticalSystem) -> Result<Self> {
        if leds.is_empty() {
            return Err(Error::config("illumination pattern must contain at least one LED"));
        }
        for led in &leds {
            let na = led.na(system.wavelength_um);
            if na > MAX_ILLUM_NA + 1e-12 {
                return Err(Error::config(format!(
                    "LED at ({:.4}, {:.4}) 1/um has illumination NA {na:.4} > {MAX_ILLUM_NA}",
                    led.u_x, led.u_y
                )));
            }
            let bf = na <= system.objective_na + 1e-12;
            match kind {
                PatternKind::Brightfield if !bf => {
                    return Err(Error::config(format!(
                        "darkfield LED (NA {na:.4}) in a brightfield pattern"
                    )))
                }
                PatternKind::Darkfield if bf => {
                    return Err(Error::config(format!(
                        "brightfield LED (NA {na:.4}) in a darkfield pattern"
                    )))
                }
                _ => {}
            }
        }
        Ok(IlluminationPattern { leds, kind })
    }

    pub fn len(&self) -> usize {
        self.leds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.leds.is_empty()
    }

    /// Largest illumination NA in the pattern.
    pub fn max_na(&self, wavelength_um: f64) -> f64 {
        self.leds
            .iter()
            .map(|l| l.na(wavelength_um))
            .fold(0.0, f64::max)
    }
}

/// Centered square LED lattice in NA units, truncated to `max_na`.
fn na_lattice(na_step: f64, max_na: f64) -> Vec<(f64, f64)> {
    let extent = (max_na / na_step).floor() as isize;
    let mut pts = Vec::new();
    for iy in -extent..=extent {
        for ix in -extent..=extent {
            let (nx, ny) = (ix as f64 * na_step, iy as f64 * na_step);
            if (nx * nx + ny * ny).sqrt() <= max_na + 1e-12 {
                pts.push((nx, ny));
            }
        }
    }
    pts
}

/// The five multiplexed patterns: two complementary brightfield half-disks
/// plus `arc_count` darkfield arcs of width `360 / arc_count` degrees
/// between the objective NA and `max_illum_na`.
///
/// `na_step` is the LED lattice spacing in NA units; the same lattice fills
/// both the brightfield disk and the darkfield annulus.
pub fn semicircle_and_arc_patterns(
    system: &OpticalSystem,
    max_illum_na: f64,
    arc_count: usize,
    na_step: f64,
) -> Result<Vec<IlluminationPattern>> {
    system.validate()?;
    if arc_count == 0 {
        return Err(Error::config("arc_count must be at least 1"));
    }
    if !(max_illum_na > system.objective_na) {
        return Err(Error::config(format!(
            "max illumination NA {max_illum_na} must exceed objective NA {}",
            system.objective_na
        )));
    }
    if max_illum_na > MAX_ILLUM_NA + 1e-12 {
        return Err(Error::config(format!(
            "max illumination NA {max_illum_na} exceeds cap {MAX_ILLUM_NA}"
        )));
    }
    if !(na_step > 0.0) {
        return Err(Error::config("na_step must be positive"));
    }

    let lam = system.wavelength_um;
    let na_obj = system.objective_na;
    let to_led = |&(nx, ny): &(f64, f64)| LedFreq { u_x: nx / lam, u_y: ny / lam };
    let lattice = na_lattice(na_step, max_illum_na);

    // Complementary half-disks: the u_y = 0 row splits by u_x sign, with the
    // on-axis LED assigned to the first half.
    let bf: Vec<&(f64, f64)> = lattice
        .iter()
        .filter(|(nx, ny)| (nx * nx + ny * ny).sqrt() <= na_obj + 1e-12)
        .collect();
    let top: Vec<LedFreq> = bf
        .iter()
        .filter(|(nx, ny)| *ny > 0.0 || (*ny == 0.0 && *nx >= 0.0))
        .map(|p| to_led(p))
        .collect();
    let bottom: Vec<LedFreq> = bf
        .iter()
        .filter(|(nx, ny)| !(*ny > 0.0 || (*ny == 0.0 && *nx >= 0.0)))
        .map(|p| to_led(p))
        .collect();

    let mut patterns = vec![
        IlluminationPattern::new(top, PatternKind::Brightfield, system)?,
        IlluminationPattern::new(bottom, PatternKind::Brightfield, system)?,
    ];

    let arc_width = std::f64::consts::TAU / arc_count as f64;
    for t in 0..arc_count {
        let (lo, hi) = (t as f64 * arc_width, (t + 1) as f64 * arc_width);
        let leds: Vec<LedFreq> = lattice
            .iter()
            .filter(|(nx, ny)| {
                let r = (nx * nx + ny * ny).sqrt();
                if r <= na_obj + 1e-12 || r > max_illum_na + 1e-12 {
                    return false;
                }
                let mut th = ny.atan2(*nx);
                if th < 0.0 {
                    th += std::f64::consts::TAU;
                }
                th >= lo && th < hi
            })
            .map(to_led)
            .collect();
        if leds.is_empty() {
            return Err(Error::config(format!(
                "darkfield arc {t} is empty; decrease na_step ({na_step}) or widen \
                 the annulus ({na_obj}, {max_illum_na}]"
            )));
        }
        patterns.push(IlluminationPattern::new(leds, PatternKind::Darkfield, system)?);
    }
    Ok(patterns)
}

/// `led_count` single-LED patterns on a centered square lattice truncated to
/// `max_illum_na`, ordered center-out (ascending |u|).
pub fn sequential_grid_pattern(
    system: &OpticalSystem,
    led_count: usize,
    max_illum_na: f64,
) -> Result<Vec<IlluminationPattern>> {
    system.validate()?;
    if led_count == 0 {
        return Err(Error::config("led_count must be at least 1"));
    }
    if max_illum_na > MAX_ILLUM_NA + 1e-12 {
        return Err(Error::config(format!(
            "max illumination NA {max_illum_na} exceeds cap {MAX_ILLUM_NA}"
        )));
    }
    // Shrink the lattice pitch until the disk holds enough LEDs.
    let mut step = if led_count == 1 {
        max_illum_na.max(1e-3)
    } else {
        max_illum_na * (std::f64::consts::PI / led_count as f64).sqrt()
    };
    let mut lattice = na_lattice(step, max_illum_na);
    while lattice.len() < led_count {
        step *= 0.95;
        lattice = na_lattice(step, max_illum_na);
    }
    lattice.sort_by(|a, b| {
        let ra = a.0 * a.0 + a.1 * a.1;
        let rb = b.0 * b.0 + b.1 * b.1;
        ra.partial_cmp(&rb)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
            .then(a.0.partial_cmp(&b.0).unwrap())
    });
    let lam = system.wavelength_um;
    lattice
        .iter()
        .take(led_count)
        .map(|&(nx, ny)| {
            let led = LedFreq { u_x: nx / lam, u_y: ny / lam };
            let kind = if led.na(lam) <= system.objective_na + 1e-12 {
                PatternKind::Brightfield
            } else {
                PatternKind::Darkfield
            };
            IlluminationPattern::new(vec![led], kind, system)
        })
        .collect()
}

/// Objective NA plus the largest illumination NA across `patterns`.
pub fn synthetic_na(system: &OpticalSystem, patterns: &[IlluminationPattern]) -> f64 {
    let max_illum = patterns
        .iter()
        .map(|p| p.max_na(system.wavelength_um))
        .fold(0.0, f64::max);
    system.objective_na + max_illum
}

/// The paper-configuration microscope used throughout tests and examples.
pub fn paper_system() -> OpticalSystem {
    OpticalSystem {
        wavelength_um: 0.63,
        objective_na: 0.1,
        magnification: 4.0,
        camera_pixel_um: 6.5,
        sensor_shape: (2160, 2560),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequency_axes_4x4() {
        let axes = make_frequency_axes((4, 4), 1.0).unwrap();
        assert_eq!(axes.row, vec![-0.5, -0.25, 0.0, 0.25]);
        assert!((axes.spacing_row() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn frequency_axes_2x2() {
        let axes = make_frequency_axes((2, 2), 1.0).unwrap();
        assert_eq!(axes.row, vec![-0.25, 0.0]);
    }

    #[test]
    fn paper_cutoff() {
        let sys = paper_system();
        assert!((sys.cutoff_freq() - 0.1 / 0.63).abs() < 1e-12);
        assert!((sys.cutoff_freq() - 0.1587).abs() < 1e-4);
    }

    #[test]
    fn zero_pitch_rejected() {
        assert!(make_frequency_axes((4, 4), 0.0).is_err());
        assert!(make_frequency_axes((4, 4), -1.0).is_err());
    }

    #[test]
    fn pupil_radius_matches_na() {
        let sys = paper_system();
        let pupil = make_pupil(&sys, (64, 64), 1.625).unwrap();
        let axes = make_frequency_axes((64, 64), 1.625).unwrap();
        let radius_px = sys.cutoff_freq() / axes.spacing_row();
        assert!((radius_px - 16.5).abs() < 0.05, "radius {radius_px}");
        // Count of pixels inside the disk approximates its area.
        let count = pupil.mask.iter().filter(|v| v.norm() > 0.5).count() as f64;
        let area = std::f64::consts::PI * radius_px * radius_px;
        assert!((count - area).abs() / area < 0.05);
    }

    #[test]
    fn pupil_centrosymmetric() {
        let sys = paper_system();
        let pupil = make_pupil(&sys, (64, 64), 1.625).unwrap();
        let (dc_r, dc_c) = (32, 32);
        let mut rng_points = 0;
        for (k, ((i, j), v)) in pupil.mask.indexed_iter().enumerate() {
            let (mi, mj) = (2 * dc_r as isize - i as isize, 2 * dc_c as isize - j as isize);
            if mi >= 0 && mi < 64 && mj >= 0 && mj < 64 {
                assert_eq!(*v, pupil.mask[[mi as usize, mj as usize]], "at ({i},{j}) k={k}");
                rng_points += 1;
            }
        }
        assert!(rng_points > 3000);
    }

    #[test]
    fn degenerate_pupil_tiny_na() {
        let mut sys = paper_system();
        sys.objective_na = 1e-9;
        let pupil = make_pupil(&sys, (32, 32), 1.0).unwrap();
        let on: Vec<_> = pupil
            .mask
            .indexed_iter()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(ij, _)| ij)
            .collect();
        assert_eq!(on, vec![(16, 16)]);
    }

    #[test]
    fn coarse_grid_rejected_with_pitch_hint() {
        let sys = paper_system();
        let err = make_pupil(&sys, (8, 8), 10.0).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("need pitch"), "{msg}");
    }

    #[test]
    fn paper_patterns_five_total() {
        let sys = paper_system();
        let patterns = semicircle_and_arc_patterns(&sys, 0.41, 3, 0.025).unwrap();
        assert_eq!(patterns.len(), 5);
        assert_eq!(patterns[0].kind, PatternKind::Brightfield);
        assert_eq!(patterns[1].kind, PatternKind::Brightfield);
        for p in &patterns[2..] {
            assert_eq!(p.kind, PatternKind::Darkfield);
        }
    }

    #[test]
    fn semicircles_complement() {
        let sys = paper_system();
        let patterns = semicircle_and_arc_patterns(&sys, 0.41, 3, 0.02).unwrap();
        let mut all: Vec<(i64, i64)> = Vec::new();
        for p in &patterns[..2] {
            for led in &p.leds {
                all.push(((led.u_x * 1e6).round() as i64, ((led.u_y) * 1e6).round() as i64));
            }
        }
        let unique: std::collections::HashSet<_> = all.iter().collect();
        assert_eq!(unique.len(), all.len(), "semicircles overlap");
        // Union covers the whole brightfield disk on the same lattice.
        let bf_total = na_lattice(0.02, 0.41)
            .iter()
            .filter(|(x, y)| (x * x + y * y).sqrt() <= 0.1 + 1e-12)
            .count();
        assert_eq!(all.len(), bf_total);
    }

    #[test]
    fn arcs_span_120_degrees() {
        let sys = paper_system();
        let patterns = semicircle_and_arc_patterns(&sys, 0.41, 3, 0.02).unwrap();
        for (t, p) in patterns[2..].iter().enumerate() {
            let (lo, hi) = (t as f64 * 120.0, (t + 1) as f64 * 120.0);
            for led in &p.leds {
                let mut th = led.u_y.atan2(led.u_x).to_degrees();
                if th < 0.0 {
                    th += 360.0;
                }
                assert!(th >= lo - 1e-9 && th < hi + 1e-9, "theta {th} not in [{lo},{hi})");
            }
        }
    }

    #[test]
    fn sequential_185_leds() {
        let sys = paper_system();
        let patterns = sequential_grid_pattern(&sys, 185, 0.41).unwrap();
        assert_eq!(patterns.len(), 185);
        for p in &patterns {
            assert_eq!(p.len(), 1);
            assert!(p.leds[0].na(sys.wavelength_um) <= 0.41 + 1e-9);
        }
        // Center-out ordering: first LED is on-axis, magnitudes non-decreasing.
        assert!(patterns[0].leds[0].magnitude() < 1e-12);
        let mags: Vec<f64> = patterns.iter().map(|p| p.leds[0].magnitude()).collect();
        for w in mags.windows(2) {
            assert!(w[0] <= w[1] + 1e-12);
        }
    }

    #[test]
    fn sequential_single_led_is_on_axis() {
        let sys = paper_system();
        let patterns = sequential_grid_pattern(&sys, 1, 0.41).unwrap();
        assert_eq!(patterns.len(), 1);
        assert!(patterns[0].leds[0].magnitude() < 1e-12);
        assert_eq!(patterns[0].kind, PatternKind::Brightfield);
    }

    #[test]
    fn synthetic_na_paper_value() {
        let sys = paper_system();
        let patterns = semicircle_and_arc_patterns(&sys, 0.41, 3, 0.025).unwrap();
        assert!((synthetic_na(&sys, &patterns) - 0.51).abs() < 0.013);
        let single = sequential_grid_pattern(&sys, 1, 0.41).unwrap();
        assert!((synthetic_na(&sys, &single) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn pattern_classification_enforced() {
        let sys = paper_system();
        let df_led = LedFreq { u_x: 0.3 / 0.63, u_y: 0.0 };
        assert!(IlluminationPattern::new(vec![df_led], PatternKind::Brightfield, &sys).is_err());
        assert!(IlluminationPattern::new(vec![df_led], PatternKind::Darkfield, &sys).is_ok());
        let over = LedFreq { u_x: 0.5 / 0.63, u_y: 0.0 };
        assert!(IlluminationPattern::new(vec![over], PatternKind::Darkfield, &sys).is_err());
    }
}
