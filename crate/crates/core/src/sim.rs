//! Forward simulation of single-LED and multiplexed intensity measurements
//! from a complex object, sensor-resolution downsampling, procedural phantom
//! objects, and paired dataset assembly.
//!
//! The single-LED model is `I_i = |invF[ O(u - u_i) P(u) ]|^2` with the
//! spectrum shift realized as an integer-pixel move of the DC-centered
//! spectrum; a multiplexed pattern sums its per-LED intensities.

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::optics::{
    make_frequency_axes, ComplexField2D, IlluminationPattern, LedFreq, OpticalSystem, PatternKind,
    Pupil,
};
use ndarray::{Array2, Array3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Absorption/phase object on the high-resolution grid.
#[derive(Debug, Clone)]
pub struct ObjectField {
    /// Absorption mu >= 0.
    pub absorption: Array2<f64>,
    /// Phase psi in radians.
    pub phase: Array2<f64>,
    /// Grid pitch in um.
    pub pitch: f64,
}

impl ObjectField {
    pub fn new(absorption: Array2<f64>, phase: Array2<f64>, pitch: f64) -> Result<Self> {
        if absorption.dim() != phase.dim() {
            return Err(Error::shape(format!(
                "absorption {:?} and phase {:?} differ",
                absorption.dim(),
                phase.dim()
            )));
        }
        if absorption.iter().any(|&m| m < 0.0) {
            return Err(Error::config("absorption must be non-negative"));
        }
        if !(pitch > 0.0) {
            return Err(Error::config("object pitch must be positive"));
        }
        Ok(ObjectField { absorption, phase, pitch })
    }

    /// Phase-only object.
    pub fn phase_only(phase: Array2<f64>, pitch: f64) -> Result<Self> {
        let zeros = Array2::zeros(phase.dim());
        ObjectField::new(zeros, phase, pitch)
    }

    /// Unit-transmittance object.
    pub fn flat(shape: (usize, usize), pitch: f64) -> Self {
        ObjectField {
            absorption: Array2::zeros(shape),
            phase: Array2::zeros(shape),
            pitch,
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.phase.dim()
    }

    /// Complex transmittance `o = exp(-mu + i psi)`, |o| <= 1.
    pub fn transmittance(&self) -> ComplexField2D {
        let data = ndarray::Zip::from(&self.absorption)
            .and(&self.phase)
            .map_collect(|&mu, &psi| (Complex64::new(-mu, psi)).exp());
        ComplexField2D { data, pitch: self.pitch }
    }
}

/// Intensity images paired with the patterns that produced them.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub images: Vec<Array2<f64>>,
    pub patterns: Vec<IlluminationPattern>,
    pub system: OpticalSystem,
}

impl MeasurementSet {
    pub fn new(
        images: Vec<Array2<f64>>,
        patterns: Vec<IlluminationPattern>,
        system: OpticalSystem,
    ) -> Result<Self> {
        if images.len() != patterns.len() {
            return Err(Error::shape(format!(
                "{} images vs {} patterns",
                images.len(),
                patterns.len()
            )));
        }
        if images.iter().any(|im| im.iter().any(|&v| v < 0.0)) {
            return Err(Error::config("intensities must be non-negative"));
        }
        Ok(MeasurementSet { images, patterns, system })
    }
}

/// One training pair: 6-channel low-resolution stack and its target.
#[derive(Debug, Clone)]
pub struct DatasetPair {
    /// Channels in fixed order BF1, BF2, DF1, DF2, DF3, DPC.
    pub inputs: Array3<f64>,
    /// Normalized high-resolution phase in [0, 1].
    pub target: Array2<f64>,
    /// Target-to-input upsampling factor per axis.
    pub scale: usize,
}

fn check_led_support(
    shape: (usize, usize),
    shift: (isize, isize),
    radius_px: (f64, f64),
    led: &LedFreq,
) -> Result<()> {
    let (rows, cols) = (shape.0 as isize, shape.1 as isize);
    let (cr, cc) = (rows / 2, cols / 2);
    let rr = radius_px.0.ceil() as isize;
    let rc = radius_px.1.ceil() as isize;
    let (sr, sc) = shift;
    if cr + sr - rr < 0 || cr + sr + rr > rows - 1 || cc + sc - rc < 0 || cc + sc + rc > cols - 1 {
        return Err(Error::config(format!(
            "LED at ({:.4}, {:.4}) 1/um shifts the pupil outside the {rows}x{cols} grid; \
             enlarge the grid or reduce the illumination angle",
            led.u_x, led.u_y
        )));
    }
    Ok(())
}

/// Shifted-spectrum intensity for one LED, on the object grid.
pub fn simulate_single_led(
    object: &ObjectField,
    system: &OpticalSystem,
    led: &LedFreq,
    pupil: &Pupil,
) -> Result<Array2<f64>> {
    let fft = Fft2::new(object.shape().0, object.shape().1);
    let spectrum = fft.spectrum(&object.transmittance().data);
    single_led_from_spectrum(&spectrum, object.pitch, system, led, pupil, &fft)
}

fn single_led_from_spectrum(
    spectrum: &Array2<Complex64>,
    pitch: f64,
    system: &OpticalSystem,
    led: &LedFreq,
    pupil: &Pupil,
    fft: &Fft2,
) -> Result<Array2<f64>> {
    let shape = spectrum.dim();
    if pupil.shape() != shape {
        return Err(Error::shape(format!(
            "pupil {:?} does not match grid {:?}",
            pupil.shape(),
            shape
        )));
    }
    let axes = make_frequency_axes(shape, pitch)?;
    let shift = led.shift_px(&axes);
    let radius = (
        pupil.cutoff_freq / axes.spacing_row(),
        pupil.cutoff_freq / axes.spacing_col(),
    );
    check_led_support(shape, shift, radius, led)?;
    let _ = system;

    // shifted[k] = O[k - s], then low-pass by the pupil.
    let (rows, cols) = shape;
    let dr = shift.0.rem_euclid(rows as isize) as usize;
    let dc = shift.1.rem_euclid(cols as isize) as usize;
    let mut shifted = crate::fft::roll(spectrum, dr, dc);
    shifted.zip_mut_with(&pupil.mask, |s, p| *s *= p);
    let field = fft.inverse_spectrum(&shifted);
    Ok(field.mapv(|v| v.norm_sqr()))
}

/// Sum of single-LED intensities for every LED in `pattern`.
pub fn simulate_multiplexed(
    object: &ObjectField,
    system: &OpticalSystem,
    pattern: &IlluminationPattern,
    pupil: &Pupil,
) -> Result<Array2<f64>> {
    if pattern.is_empty() {
        return Err(Error::config("cannot simulate an empty illumination pattern"));
    }
    let fft = Fft2::new(object.shape().0, object.shape().1);
    let spectrum = fft.spectrum(&object.transmittance().data);
    let mut total = Array2::zeros(object.shape());
    for led in &pattern.leds {
        let single = single_led_from_spectrum(&spectrum, object.pitch, system, led, pupil, &fft)?;
        total += &single;
    }
    Ok(total)
}

/// Block-mean pooling to the sensor grid (photon-bucket model).
pub fn downsample_intensity(hr: &Array2<f64>, factor: usize) -> Result<Array2<f64>> {
    let (rows, cols) = hr.dim();
    if factor == 0 || rows % factor != 0 || cols % factor != 0 {
        return Err(Error::config(format!(
            "downsampling factor {factor} does not divide {rows}x{cols}"
        )));
    }
    let (or, oc) = (rows / factor, cols / factor);
    let norm = 1.0 / (factor * factor) as f64;
    let mut out = Array2::zeros((or, oc));
    for i in 0..rows {
        for j in 0..cols {
            out[[i / factor, j / factor]] += hr[[i, j]] * norm;
        }
    }
    Ok(out)
}

/// Optional Poisson shot noise at `photons` expected counts per unit intensity.
pub fn apply_shot_noise(intensity: &Array2<f64>, photons: f64, seed: u64) -> Result<Array2<f64>> {
    if !(photons > 0.0) {
        return Err(Error::config("photon count must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(intensity.mapv(|v| sample_poisson(v * photons, &mut rng) / photons))
}

// Knuth for small means, normal approximation above 64.
fn sample_poisson(mean: f64, rng: &mut ChaCha8Rng) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    if mean > 64.0 {
        let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
        let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let gauss = (-2.0 * u1.ln()).sqrt() * u2.cos();
        return (mean + mean.sqrt() * gauss).round().max(0.0);
    }
    let limit = (-mean).exp();
    let mut count = 0u64;
    let mut product: f64 = rng.gen();
    while product > limit {
        count += 1;
        product *= rng.gen::<f64>();
    }
    count as f64
}

fn gaussian_lowpass(noise: &Array2<f64>, sigma_px: f64, fft: &Fft2) -> Array2<f64> {
    let complex = noise.mapv(|v| Complex64::new(v, 0.0));
    let mut spec = fft.spectrum(&complex);
    let (rows, cols) = spec.dim();
    let (cr, cc) = (rows as f64 / 2.0, cols as f64 / 2.0);
    for ((i, j), v) in spec.indexed_iter_mut() {
        let r2 = (i as f64 - cr).powi(2) + (j as f64 - cc).powi(2);
        *v *= (-r2 / (2.0 * sigma_px * sigma_px)).exp();
    }
    fft.inverse_spectrum(&spec).mapv(|v| v.re)
}

fn to_unit_range(field: &Array2<f64>) -> Array2<f64> {
    let lo = field.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = field.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = if hi > lo { hi - lo } else { 1.0 };
    field.mapv(|v| (v - lo) / span)
}

/// Deterministic phantom: smooth random blobs plus fine texture, with the
/// phase mapped affinely into `phase_range` and weak absorption (<= 0.1).
pub fn generate_phantom(
    seed: u64,
    shape: (usize, usize),
    phase_range: (f64, f64),
    pitch: f64,
) -> Result<ObjectField> {
    if shape.0 < 32 || shape.1 < 32 {
        return Err(Error::shape(format!("phantom grid must be at least 32x32, got {shape:?}")));
    }
    if !(phase_range.1 > phase_range.0) {
        return Err(Error::config("phase range must be increasing"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise =
        |rng: &mut ChaCha8Rng| Array2::from_shape_fn(shape, |_| rng.gen_range(-1.0..1.0));
    let fft = Fft2::new(shape.0, shape.1);

    let blob_sigma = shape.0.min(shape.1) as f64 / 24.0;
    let texture_sigma = shape.0.min(shape.1) as f64 / 6.0;
    let blobs = to_unit_range(&gaussian_lowpass(&noise(&mut rng), blob_sigma, &fft));
    let texture = to_unit_range(&gaussian_lowpass(&noise(&mut rng), texture_sigma, &fft));
    let combined = to_unit_range(&(&blobs + &(texture * 0.25)));
    let (lo, hi) = phase_range;
    let phase = combined.mapv(|v| lo + v * (hi - lo));

    let mu = to_unit_range(&gaussian_lowpass(&noise(&mut rng), blob_sigma, &fft)).mapv(|v| v * 0.08);
    ObjectField::new(mu, phase, pitch)
}

/// Flat-object mean intensity of `pattern`; used to normalize simulated
/// measurement backgrounds to about 1.
pub fn flat_object_mean(
    system: &OpticalSystem,
    pattern: &IlluminationPattern,
    shape: (usize, usize),
    pitch: f64,
    pupil: &Pupil,
) -> Result<f64> {
    let flat = ObjectField::flat(shape, pitch);
    let image = simulate_multiplexed(&flat, system, pattern, pupil)?;
    Ok(image.mean().unwrap_or(0.0))
}

/// Simulate the five multiplexed measurements of `object`, normalize by the
/// first brightfield pattern's flat-object response, and downsample.
pub fn simulate_measurement_set(
    object: &ObjectField,
    system: &OpticalSystem,
    patterns: &[IlluminationPattern],
    pupil: &Pupil,
    factor: usize,
) -> Result<MeasurementSet> {
    if patterns.len() != 5 {
        return Err(Error::config(format!("expected 5 patterns, got {}", patterns.len())));
    }
    let bf_count = patterns.iter().filter(|p| p.kind == PatternKind::Brightfield).count();
    if bf_count != 2 || patterns[0].kind != PatternKind::Brightfield
        || patterns[1].kind != PatternKind::Brightfield
    {
        return Err(Error::config("patterns must be ordered BF1, BF2, DF1, DF2, DF3"));
    }
    let norm = flat_object_mean(system, &patterns[0], object.shape(), object.pitch, pupil)?;
    if norm <= 0.0 {
        return Err(Error::numeric("flat-object brightfield response is zero"));
    }
    let mut images = Vec::with_capacity(patterns.len());
    for pattern in patterns {
        let hr = simulate_multiplexed(object, system, pattern, pupil)?;
        images.push(downsample_intensity(&hr.mapv(|v| v / norm), factor)?);
    }
    MeasurementSet::new(images, patterns.to_vec(), system.clone())
}
