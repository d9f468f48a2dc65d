//! Procedural scenes for tests, benchmarks and smoke runs when the real
//! benchmark data is not on disk.
//!
//! Classes occupy Voronoi cells around random sites. Each class has a smooth
//! random spectral signature; pixels add a per-pixel gain and Gaussian
//! noise. Roughly `unlabeled_fraction` of the pixels carry label 0.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{presets, ClassInfo, Manifest, SceneCube};

#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub classes: usize,
    pub noise: f64,
    pub unlabeled_fraction: f64,
    /// Upper bound on per-class train counts written to the manifest.
    pub train_per_class: usize,
    pub seed: u64,
}

impl SyntheticScene {
    /// Indian-Pines-shaped defaults: 200 bands and 16 classes.
    pub fn indian_pines_like(height: usize, width: usize, seed: u64) -> Self {
        Self {
            height,
            width,
            bands: presets::INDIAN_PINES.bands,
            classes: 16,
            noise: 0.3,
            unlabeled_fraction: 0.2,
            train_per_class: 50,
            seed,
        }
    }

    pub fn generate(&self) -> (SceneCube<f32>, Manifest) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let gauss = Normal::new(0.0, 1.0).unwrap();

        // Two sites per class so every class appears at least once.
        let sites: Vec<(f64, f64, u16)> = (0..2 * self.classes)
            .map(|i| {
                (
                    rng.random_range(0.0..self.height as f64),
                    rng.random_range(0.0..self.width as f64),
                    (i % self.classes) as u16 + 1,
                )
            })
            .collect();

        let signatures: Vec<Vec<f64>> = (0..self.classes)
            .map(|_| {
                let terms: Vec<(f64, f64, f64)> = (0..4)
                    .map(|_| {
                        (
                            rng.random_range(0.2..1.0),
                            rng.random_range(0.5..4.0),
                            rng.random_range(0.0..std::f64::consts::TAU),
                        )
                    })
                    .collect();
                let offset = rng.random_range(1.0..3.0);
                (0..self.bands)
                    .map(|b| {
                        let x = b as f64 / self.bands.max(1) as f64;
                        offset
                            + terms
                                .iter()
                                .map(|(a, f, p)| a * (std::f64::consts::TAU * f * x + p).sin())
                                .sum::<f64>()
                    })
                    .collect()
            })
            .collect();

        let n = self.height * self.width;
        let mut values = Vec::with_capacity(n * self.bands);
        let mut labels = Vec::with_capacity(n);
        for r in 0..self.height {
            for c in 0..self.width {
                let class = sites
                    .iter()
                    .min_by(|a, b| {
                        let da = (a.0 - r as f64).powi(2) + (a.1 - c as f64).powi(2);
                        let db = (b.0 - r as f64).powi(2) + (b.1 - c as f64).powi(2);
                        da.total_cmp(&db)
                    })
                    .map(|s| s.2)
                    .unwrap_or(1);
                let gain = 1.0 + 0.1 * gauss.sample(&mut rng);
                let sig = &signatures[class as usize - 1];
                for &s in sig {
                    values.push((gain * s + self.noise * gauss.sample(&mut rng)) as f32);
                }
                let unlabeled = rng.random_bool(self.unlabeled_fraction.clamp(0.0, 1.0));
                labels.push(if unlabeled { 0 } else { class });
            }
        }
        let cube = SceneCube::new(self.height, self.width, self.bands, values, labels)
            .expect("generated scene is consistent");

        let hist = cube.class_histogram();
        let palette = presets::indian_pines().palette();
        let classes = (1..=self.classes)
            .map(|c| {
                let available = hist.get(c).copied().unwrap_or(0);
                let train = self.train_per_class.min(available / 2);
                ClassInfo {
                    name: format!("class {c}"),
                    rgb: palette[(c - 1) % palette.len()],
                    train,
                    test: available - train,
                }
            })
            .collect();
        let manifest = Manifest {
            name: "synthetic".into(),
            classes,
            split: None,
        };
        (cube, manifest)
    }
}
