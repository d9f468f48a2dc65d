use std::path::Path;
use std::thread;

use crate::data::{patch::window, SceneCube};
use crate::error::{Error, Result};
use crate::model::{model_logits, ModelConfig, ModelParams};
use crate::train::predict_label;

use super::{ConfusionMatrix, MetricsReport};

/// Predicted 1-based labels for flat pixel indices. Pixels are split into
/// contiguous chunks across `threads` workers; the result does not depend
/// on the thread count.
pub fn predict_pixels(
    params: &ModelParams<f32>,
    config: &ModelConfig,
    cube: &SceneCube<f32>,
    indices: &[usize],
    threads: usize,
) -> Result<Vec<u16>> {
    if config.bands != cube.bands {
        return Err(Error::Consistency(format!(
            "model expects {} bands, scene has {}",
            config.bands, cube.bands
        )));
    }
    if let Some(&i) = indices.iter().find(|&&i| i >= cube.num_pixels()) {
        return Err(Error::Config(format!("pixel index {i} outside the scene")));
    }
    let work = |part: &[usize]| -> Result<Vec<u16>> {
        part.iter()
            .map(|&i| {
                let p = window(cube, i / cube.width, i % cube.width, config.patch, 0);
                Ok(predict_label(&model_logits(&p.values, params, config)?))
            })
            .collect()
    };
    let threads = threads.max(1);
    if threads == 1 || indices.len() < 2 {
        return work(indices);
    }
    let chunk = indices.len().div_ceil(threads);
    let parts: Vec<Result<Vec<u16>>> = thread::scope(|scope| {
        let handles: Vec<_> = indices
            .chunks(chunk)
            .map(|part| scope.spawn(move || work(part)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("prediction worker panicked"))
            .collect()
    });
    let mut out = Vec::with_capacity(indices.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

/// Confusion matrix and accuracy report over labeled test pixels.
pub fn evaluate(
    params: &ModelParams<f32>,
    config: &ModelConfig,
    cube: &SceneCube<f32>,
    indices: &[usize],
    threads: usize,
) -> Result<(ConfusionMatrix, MetricsReport)> {
    cube.check_labels(config.classes)?;
    if let Some(&i) = indices
        .iter()
        .find(|&&i| i < cube.labels.len() && cube.labels[i] == 0)
    {
        return Err(Error::Split {
            class: 0,
            message: format!("test pixel {i} is unlabeled"),
        });
    }
    let predicted = predict_pixels(params, config, cube, indices, threads)?;
    let mut confusion = ConfusionMatrix::new(config.classes);
    for (&i, &p) in indices.iter().zip(&predicted) {
        confusion.record(cube.labels[i], p)?;
    }
    let report = confusion.report();
    Ok((confusion, report))
}

/// Writes an RGB class map: labeled pixels (or every pixel when
/// `all_pixels` is set) take the palette color of their predicted class,
/// the rest stay black. A `.ppm` extension selects binary PPM, anything
/// else PNG.
pub fn render_class_map(
    params: &ModelParams<f32>,
    config: &ModelConfig,
    cube: &SceneCube<f32>,
    palette: &[[u8; 3]],
    all_pixels: bool,
    threads: usize,
    path: &Path,
) -> Result<()> {
    if palette.len() != config.classes {
        return Err(Error::Config(format!(
            "palette has {} colors for {} classes",
            palette.len(),
            config.classes
        )));
    }
    let indices: Vec<usize> = (0..cube.num_pixels())
        .filter(|&i| all_pixels || cube.labels[i] != 0)
        .collect();
    let predicted = predict_pixels(params, config, cube, &indices, threads)?;
    let mut rgb = vec![0u8; cube.num_pixels() * 3];
    for (&i, &p) in indices.iter().zip(&predicted) {
        rgb[i * 3..i * 3 + 3].copy_from_slice(&palette[p as usize - 1]);
    }
    write_rgb(path, cube.width, cube.height, &rgb)
}

/// Encodes 8-bit RGB as PNG, or binary PPM for a `.ppm` path.
pub fn write_rgb(path: &Path, width: usize, height: usize, rgb: &[u8]) -> Result<()> {
    let is_ppm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("ppm"));
    if is_ppm {
        let mut bytes = format!("P6\n{width} {height}\n255\n").into_bytes();
        bytes.extend_from_slice(rgb);
        std::fs::write(path, bytes)?;
        return Ok(());
    }
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    let mut encoder = png::Encoder::new(file, width as u32, height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder
        .write_header()
        .map_err(|e| Error::Image(e.to_string()))?;
    writer
        .write_image_data(rgb)
        .map_err(|e| Error::Image(e.to_string()))?;
    writer.finish().map_err(|e| Error::Image(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::init_params;

    fn scene() -> SceneCube<f32> {
        let values = (0..4 * 3 * 8)
            .map(|i| ((i * 37) % 11) as f32 - 5.0)
            .collect();
        let labels = vec![1, 0, 2, 3, 1, 0, 0, 2, 3, 1, 1, 2];
        SceneCube::new(4, 3, 8, values, labels).unwrap()
    }

    fn model() -> (ModelConfig, ModelParams<f32>) {
        let c = ModelConfig::tiny();
        let p = init_params(&c, 4).unwrap();
        (c, p)
    }

    #[test]
    fn predictions_do_not_depend_on_thread_count() {
        let (c, p) = model();
        let cube = scene();
        let all: Vec<usize> = (0..12).collect();
        let one = predict_pixels(&p, &c, &cube, &all, 1).unwrap();
        assert_eq!(one, predict_pixels(&p, &c, &cube, &all, 5).unwrap());
        assert!(one.iter().all(|&l| (1..=3).contains(&l)));
    }

    #[test]
    fn evaluation_totals_match_test_size() {
        let (c, p) = model();
        let cube = scene();
        let test = [0, 2, 3, 4, 9];
        let (m, report) = evaluate(&p, &c, &cube, &test, 1).unwrap();
        assert_eq!(m.total(), 5);
        assert_eq!(report.total, 5);
        assert!(evaluate(&p, &c, &cube, &[1], 1).is_err());
    }

    #[test]
    fn constant_model_paints_one_color() {
        let (c, mut p) = model();
        p.head_w.fill(0.0);
        p.head_b.data_mut().copy_from_slice(&[0.0, 1.0, 0.0]);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.ppm");
        let palette = [[83, 171, 72], [157, 87, 150], [1, 2, 3]];
        render_class_map(&p, &c, &scene(), &palette, false, 1, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        let header = b"P6\n3 4\n255\n";
        assert_eq!(&bytes[..header.len()], header);
        let pixels = &bytes[header.len()..];
        for (i, px) in pixels.chunks(3).enumerate() {
            let expected: [u8; 3] = if scene().labels[i] == 0 {
                [0, 0, 0]
            } else {
                [157, 87, 150]
            };
            assert_eq!(px, expected);
        }
    }

    #[test]
    fn png_output_decodes() {
        let (c, p) = model();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("map.png");
        let palette = [[83, 171, 72], [157, 87, 150], [1, 2, 3]];
        render_class_map(&p, &c, &scene(), &palette, true, 2, &path).unwrap();
        let decoder =
            png::Decoder::new(std::io::BufReader::new(std::fs::File::open(&path).unwrap()));
        let reader = decoder.read_info().unwrap();
        assert_eq!((reader.info().width, reader.info().height), (3, 4));
    }

    #[test]
    fn palette_size_must_match() {
        let (c, p) = model();
        let dir = tempfile::tempdir().unwrap();
        let err = render_class_map(
            &p,
            &c,
            &scene(),
            &[[0, 0, 0]],
            false,
            1,
            &dir.path().join("m.png"),
        );
        assert!(matches!(err, Err(Error::Config(_))));
    }
}
