use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::{SceneCube, SplitMasks};

/// Per-class sample counts (`train[c - 1]` for label `c`) for a disjoint
/// split, or explicit published masks which take precedence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub seed: u64,
    pub masks: Option<SplitMasks>,
}

/// Flat pixel indices (`row * width + col`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

pub fn make_split<T: Real>(cube: &SceneCube<T>, spec: &SplitSpec) -> Result<Split> {
    if spec.train.len() != spec.test.len() {
        return Err(Error::Config(format!(
            "split spec has {} train counts but {} test counts",
            spec.train.len(),
            spec.test.len()
        )));
    }
    if let Some(masks) = &spec.masks {
        return from_masks(cube, masks);
    }

    let classes = spec.train.len();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes];
    for (i, &l) in cube.labels.iter().enumerate() {
        if l == 0 {
            continue;
        }
        match by_class.get_mut(l as usize - 1) {
            Some(v) => v.push(i),
            None => {
                return Err(Error::Split {
                    class: l,
                    message: format!("label exceeds the {classes} classes of the split spec"),
                })
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut split = Split {
        train: Vec::with_capacity(spec.train.iter().sum()),
        test: Vec::with_capacity(spec.test.iter().sum()),
    };
    for (c, mut pixels) in by_class.into_iter().enumerate() {
        let (n_train, n_test) = (spec.train[c], spec.test[c]);
        if n_train + n_test > pixels.len() {
            return Err(Error::Split {
                class: c as u16 + 1,
                message: format!(
                    "needs {n_train} train + {n_test} test pixels but only {} are labeled",
                    pixels.len()
                ),
            });
        }
        pixels.shuffle(&mut rng);
        split.train.extend_from_slice(&pixels[..n_train]);
        split
            .test
            .extend_from_slice(&pixels[n_train..n_train + n_test]);
    }
    Ok(split)
}

fn from_masks<T: Real>(cube: &SceneCube<T>, masks: &SplitMasks) -> Result<Split> {
    let check = |indices: &[usize]| -> Result<()> {
        for &i in indices {
            match cube.labels.get(i) {
                None => {
                    return Err(Error::Split {
                        class: 0,
                        message: format!("mask index {i} lies outside the scene"),
                    })
                }
                Some(0) => {
                    return Err(Error::Split {
                        class: 0,
                        message: format!("mask index {i} is unlabeled"),
                    })
                }
                Some(_) => {}
            }
        }
        Ok(())
    };
    check(&masks.train)?;
    check(&masks.test)?;
    let train: HashSet<usize> = masks.train.iter().copied().collect();
    if let Some(&i) = masks.test.iter().find(|i| train.contains(i)) {
        return Err(Error::Split {
            class: cube.labels[i],
            message: format!("pixel {i} is in both the train and test masks"),
        });
    }
    Ok(Split {
        train: masks.train.clone(),
        test: masks.test.clone(),
    })
}
