use crate::error::{Error, Result};
use crate::scalar::Real;

/// Softmax cross-entropy for a 1-based `label`, returning the loss and its
/// gradient `softmax(logits) - onehot(label)`. The log-sum-exp subtracts the
/// maximum logit first.
pub fn cross_entropy<T: Real>(logits: &[T], label: u16) -> Result<(T, Vec<T>)> {
    let c = logits.len();
    if label == 0 || label as usize > c {
        return Err(Error::Contract(format!("label {label} outside 1..={c}")));
    }
    let top = predict_label(logits) as usize - 1;
    let max = logits[top];
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    // The maximum contributes exactly 1; ln_1p keeps the remainder precise.
    let rest: T = exps
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != top)
        .map(|(_, &e)| e)
        .sum();
    let sum = T::one() + rest;
    let target = label as usize - 1;
    let loss = rest.ln_1p() - (logits[target] - max);
    let mut grad: Vec<T> = exps.iter().map(|&e| e / sum).collect();
    grad[target] = if target == top {
        -rest / sum
    } else {
        grad[target] - T::one()
    };
    Ok((loss, grad))
}

/// Index of the largest logit (the first one on ties) as a 1-based label.
pub fn predict_label<T: Real>(logits: &[T]) -> u16 {
    let mut best = 0;
    for (i, &l) in logits.iter().enumerate() {
        if l > logits[best] {
            best = i;
        }
    }
    best as u16 + 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits_cost_ln_c() {
        let (loss, grad) = cross_entropy(&[0.0f64, 0.0], 1).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad, vec![-0.5, 0.5]);
    }

    #[test]
    fn confident_correct_prediction() {
        let (loss, grad) = cross_entropy(&[10.0f64, -10.0], 1).unwrap();
        // log(1 + e^-20) and -(1 - sigmoid(20)), computed independently.
        let tail = (-20.0f64).exp();
        assert!((loss - tail.ln_1p()).abs() < 1e-22);
        assert!((loss - 2.061_153_620_314_381e-9).abs() < 1e-20);
        assert!((grad[0] + tail / (1.0 + tail)).abs() < 1e-22);
    }

    #[test]
    fn huge_logits_stay_finite() {
        let (loss, grad) = cross_entropy(&[1000.0f32, -1000.0, 0.0], 2).unwrap();
        assert!(loss.is_finite() && grad.iter().all(|g| g.is_finite()));
        assert!((loss - 2000.0).abs() < 1e-3);
    }

    #[test]
    fn label_range_is_checked() {
        assert!(cross_entropy(&[0.0f64; 3], 0).is_err());
        assert!(cross_entropy(&[0.0f64; 3], 4).is_err());
    }

    #[test]
    fn prediction_takes_first_maximum() {
        assert_eq!(predict_label(&[0.1f32, 0.7, 0.7]), 2);
        assert_eq!(predict_label(&[3.0f64]), 1);
    }

    proptest! {
        #[test]
        fn gradient_sums_to_zero(logits in proptest::collection::vec(-30.0f64..30.0, 1..12), pick in 0usize..12) {
            let label = (pick % logits.len()) as u16 + 1;
            let (loss, grad) = cross_entropy(&logits, label).unwrap();
            prop_assert!(loss >= 0.0);
            prop_assert!(grad.iter().sum::<f64>().abs() < 1e-12);
        }
    }
}
