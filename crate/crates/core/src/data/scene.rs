use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::scalar::{cast, Real};

pub const CUBE_MAGIC: &[u8; 8] = b"HSICUBE1";
pub const LABEL_MAGIC: &[u8; 8] = b"HSILBL1\0";

/// A hyperspectral scene in band-interleaved-by-pixel order plus its
/// ground truth (0 = unlabeled).
#[derive(Clone, Debug, PartialEq)]
pub struct SceneCube<T> {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub values: Vec<T>,
    pub labels: Vec<u16>,
}

impl<T: Real> SceneCube<T> {
    pub fn new(
        height: usize,
        width: usize,
        bands: usize,
        values: Vec<T>,
        labels: Vec<u16>,
    ) -> Result<Self> {
        if values.len() != height * width * bands {
            return Err(Error::Consistency(format!(
                "{} values for a {height}x{width}x{bands} cube",
                values.len()
            )));
        }
        if labels.len() != height * width {
            return Err(Error::Consistency(format!(
                "{} labels for a {height}x{width} scene",
                labels.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Consistency(format!(
                "non-finite value at flat index {i}"
            )));
        }
        Ok(Self {
            height,
            width,
            bands,
            values,
            labels,
        })
    }

    #[inline]
    pub fn pixel(&self, row: usize, col: usize) -> &[T] {
        let start = (row * self.width + col) * self.bands;
        &self.values[start..start + self.bands]
    }

    #[inline]
    pub fn label(&self, row: usize, col: usize) -> u16 {
        self.labels[row * self.width + col]
    }

    pub fn num_pixels(&self) -> usize {
        self.height * self.width
    }

    pub fn max_label(&self) -> u16 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Checks every label id against the manifest's class count.
    pub fn check_labels(&self, classes: usize) -> Result<()> {
        match self.labels.iter().position(|&l| l as usize > classes) {
            Some(i) => Err(Error::Consistency(format!(
                "label {} at pixel {i} exceeds class count {classes}",
                self.labels[i]
            ))),
            None => Ok(()),
        }
    }

    /// Pixel counts per class id, index 0 holding the unlabeled count.
    pub fn class_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; self.max_label() as usize + 1];
        for &l in &self.labels {
            hist[l as usize] += 1;
        }
        hist
    }

    pub fn cast<U: Real>(&self) -> SceneCube<U> {
        SceneCube {
            height: self.height,
            width: self.width,
            bands: self.bands,
            values: self.values.iter().map(|&v| cast(v)).collect(),
            labels: self.labels.clone(),
        }
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

fn check_header(bytes: &[u8], magic: &[u8; 8], words: usize, what: &str) -> Result<()> {
    if bytes.len() < 8 || &bytes[..8] != magic {
        let found = String::from_utf8_lossy(&bytes[..bytes.len().min(8)]).into_owned();
        return Err(Error::Format(format!("bad {what} magic {found:?}")));
    }
    if bytes.len() < 8 + 4 * words {
        return Err(Error::Length {
            expected: 8 + 4 * words,
            found: bytes.len(),
        });
    }
    Ok(())
}

/// Reads an HSIC cube file, returning `(height, width, bands, values)`.
pub fn read_cube(path: impl AsRef<Path>) -> Result<(usize, usize, usize, Vec<f32>)> {
    let bytes = fs::read(path)?;
    check_header(&bytes, CUBE_MAGIC, 3, "cube")?;
    let h = read_u32(&bytes, 8) as usize;
    let w = read_u32(&bytes, 12) as usize;
    let k = read_u32(&bytes, 16) as usize;
    let payload = &bytes[20..];
    let expected = h * w * k * 4;
    if payload.len() != expected {
        return Err(Error::Length {
            expected,
            found: payload.len(),
        });
    }
    let values = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((h, w, k, values))
}

/// Reads an HSILBL label file, returning `(height, width, labels)`.
pub fn read_labels(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<u16>)> {
    let bytes = fs::read(path)?;
    check_header(&bytes, LABEL_MAGIC, 2, "label")?;
    let h = read_u32(&bytes, 8) as usize;
    let w = read_u32(&bytes, 12) as usize;
    let payload = &bytes[16..];
    let expected = h * w * 2;
    if payload.len() != expected {
        return Err(Error::Length {
            expected,
            found: payload.len(),
        });
    }
    let labels = payload
        .chunks_exact(2)
        .map(|c| u16::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((h, w, labels))
}

pub fn write_cube<T: Real>(path: impl AsRef<Path>, cube: &SceneCube<T>) -> Result<()> {
    let mut out = Vec::with_capacity(20 + cube.values.len() * 4);
    out.extend_from_slice(CUBE_MAGIC);
    for dim in [cube.height, cube.width, cube.bands] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for &v in &cube.values {
        out.extend_from_slice(&v.to_f32().unwrap().to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_labels<T: Real>(path: impl AsRef<Path>, cube: &SceneCube<T>) -> Result<()> {
    let mut out = Vec::with_capacity(16 + cube.labels.len() * 2);
    out.extend_from_slice(LABEL_MAGIC);
    for dim in [cube.height, cube.width] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for &l in &cube.labels {
        out.extend_from_slice(&l.to_le_bytes());
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads a cube and its label map, checking that their dimensions agree.
pub fn load_scene(
    cube_path: impl AsRef<Path>,
    labels_path: impl AsRef<Path>,
) -> Result<SceneCube<f32>> {
    let (h, w, k, values) = read_cube(cube_path)?;
    let (lh, lw, labels) = read_labels(labels_path)?;
    if (lh, lw) != (h, w) {
        return Err(Error::Consistency(format!(
            "label map is {lh}x{lw} but cube is {h}x{w}"
        )));
    }
    SceneCube::new(h, w, k, values, labels)
}

/// Standardizes every band to zero mean and unit (population) variance over
/// all pixels. Moments are accumulated in `f64`.
pub fn normalize_bands<T: Real>(cube: &SceneCube<T>) -> Result<SceneCube<T>> {
    let k = cube.bands;
    let n = cube.num_pixels();
    let mut mean = vec![0.0f64; k];
    for px in cube.values.chunks_exact(k) {
        for (m, &v) in mean.iter_mut().zip(px) {
            *m += v.to_f64().unwrap();
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut var = vec![0.0f64; k];
    for px in cube.values.chunks_exact(k) {
        for ((s, &m), &v) in var.iter_mut().zip(&mean).zip(px) {
            let d = v.to_f64().unwrap() - m;
            *s += d * d;
        }
    }
    var.iter_mut().for_each(|s| *s /= n as f64);

    for band in 0..k {
        let first = cube.values[band];
        let constant = cube
            .values
            .iter()
            .skip(band)
            .step_by(k)
            .all(|&v| v == first);
        if constant || var[band] <= 0.0 {
            return Err(Error::DegenerateBand { band });
        }
    }

    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / v.sqrt()).collect();
    let mut values = Vec::with_capacity(cube.values.len());
    for px in cube.values.chunks_exact(k) {
        for ((&v, &m), &s) in px.iter().zip(&mean).zip(&inv_std) {
            values.push(T::lit((v.to_f64().unwrap() - m) * s));
        }
    }
    Ok(SceneCube {
        values,
        ..cube.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> SceneCube<f32> {
        let values = (0..12).map(|i| i as f32 * 0.5 - 1.25).collect();
        SceneCube::new(2, 2, 3, values, vec![0, 1, 2, 1]).unwrap()
    }

    #[test]
    fn cube_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let scene = tiny();
        write_cube(dir.path().join("c.hsic"), &scene).unwrap();
        write_labels(dir.path().join("l.hsilbl"), &scene).unwrap();
        let back = load_scene(dir.path().join("c.hsic"), dir.path().join("l.hsilbl")).unwrap();
        assert_eq!(back, scene);
    }

    #[test]
    fn bad_magic_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.hsic");
        let mut bytes = b"XXXX".to_vec();
        bytes.extend_from_slice(&[0u8; 16]);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_cube(&path), Err(Error::Format(_))));
    }

    #[test]
    fn truncated_payload_is_length_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.hsic");
        write_cube(&path, &tiny()).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_cube(&path),
            Err(Error::Length {
                expected: 48,
                found: 45
            })
        ));
    }

    #[test]
    fn label_dims_mismatch_is_consistency_error() {
        let dir = tempfile::tempdir().unwrap();
        let scene = tiny();
        write_cube(dir.path().join("c.hsic"), &scene).unwrap();
        let other = SceneCube::new(1, 2, 1, vec![0.0f32; 2], vec![1, 1]).unwrap();
        write_labels(dir.path().join("l.hsilbl"), &other).unwrap();
        assert!(matches!(
            load_scene(dir.path().join("c.hsic"), dir.path().join("l.hsilbl")),
            Err(Error::Consistency(_))
        ));
    }

    #[test]
    fn labels_above_class_count_are_rejected() {
        assert!(tiny().check_labels(2).is_ok());
        assert!(tiny().check_labels(1).is_err());
    }

    #[test]
    fn two_point_band_standardizes_to_unit() {
        let scene = SceneCube::new(1, 2, 1, vec![0.0f64, 2.0], vec![1, 1]).unwrap();
        let norm = normalize_bands(&scene).unwrap();
        assert_eq!(norm.values, vec![-1.0, 1.0]);
    }

    #[test]
    fn constant_band_names_its_index() {
        let scene = SceneCube::new(1, 2, 2, vec![1.0f64, 3.0, 2.0, 3.0], vec![1, 1]).unwrap();
        assert!(matches!(
            normalize_bands(&scene),
            Err(Error::DegenerateBand { band: 1 })
        ));
    }

    #[test]
    fn standardized_band_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let values: Vec<f64> = (0..4 * 4 * 3)
            .map(|_| rng.random_range(-5.0..9.0))
            .collect();
        let scene = SceneCube::new(4, 4, 3, values, vec![1; 16]).unwrap();
        let once = normalize_bands(&scene).unwrap();
        let twice = normalize_bands(&once).unwrap();
        for (a, b) in once.values.iter().zip(&twice.values) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn random_cube_moments_after_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let values: Vec<f64> = (0..4 * 4 * 3)
            .map(|_| rng.random_range(0.0..1000.0))
            .collect();
        let scene = SceneCube::new(4, 4, 3, values, vec![1; 16]).unwrap();
        let norm = normalize_bands(&scene).unwrap();
        for band in 0..3 {
            let xs: Vec<f64> = norm.values.iter().skip(band).step_by(3).copied().collect();
            let mean = xs.iter().sum::<f64>() / 16.0;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 16.0;
            assert!(mean.abs() < 1e-9, "band {band} mean {mean}");
            assert!((var - 1.0).abs() < 1e-9, "band {band} var {var}");
        }
    }
}
