//! Triple-kernel slice distance, the bandwidth schedule, and the per-step
//! local kernel used inside the alignment recursion.

use crate::error::{Error, Result};
use crate::model::{KernelMode, SliceEmbedding, SliceForm};
use crate::vecmath::{cosine, squared_distance};

/// A local kernel value, always in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LocalKernelValue(f64);

impl LocalKernelValue {
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Picks the pair of vectors the distance is measured on.
///
/// Same-modality composite pairs compare specialist halves, cross-modality
/// composite pairs compare shared halves. `SharedOnly` always compares the
/// shared halves. Atomic pairs compare whole vectors.
pub fn compared_vectors<'a>(
    a: &'a SliceEmbedding,
    b: &'a SliceEmbedding,
    mode: KernelMode,
) -> Result<(&'a [f64], &'a [f64])> {
    if a.shape() != b.shape() {
        return match (a.form(), b.form()) {
            (SliceForm::Atomic { .. }, SliceForm::Composite { .. })
            | (SliceForm::Composite { .. }, SliceForm::Atomic { .. }) => Err(Error::MixedFormPair),
            _ => Err(Error::ShapeMismatch(format!(
                "cannot compare {} with {}",
                a.shape(),
                b.shape()
            ))),
        };
    }
    Ok(match (a.form(), b.form()) {
        (SliceForm::Atomic { whole: wa }, SliceForm::Atomic { whole: wb }) => (wa, wb),
        (
            SliceForm::Composite {
                specialist: sa,
                shared: ha,
            },
            SliceForm::Composite {
                specialist: sb,
                shared: hb,
            },
        ) => match mode {
            KernelMode::Triple if a.modality() == b.modality() => (sa, sb),
            _ => (ha, hb),
        },
        _ => unreachable!("shapes matched but forms differ"),
    })
}

/// Squared Euclidean distance under the triple kernel; in `[0, 4]` for unit inputs.
pub fn triple_distance(a: &SliceEmbedding, b: &SliceEmbedding, mode: KernelMode) -> Result<f64> {
    let (u, v) = compared_vectors(a, b, mode)?;
    Ok(squared_distance(u, v))
}

/// Cosine similarity between the vectors the triple kernel compares.
pub fn slice_cosine(a: &SliceEmbedding, b: &SliceEmbedding, mode: KernelMode) -> Result<f64> {
    let (u, v) = compared_vectors(a, b, mode)?;
    cosine(u, v).ok_or(Error::ZeroVector)
}

/// Bandwidth `delta * sqrt((n + m) / 2)` for sequences of lengths `n` and `m`.
pub fn sigma(n: usize, m: usize, delta: f64) -> Result<f64> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::NonPositiveDelta(delta));
    }
    if n == 0 || m == 0 {
        return Err(Error::ZeroLength(n, m));
    }
    Ok(delta * ((n + m) as f64 / 2.0).sqrt())
}

/// `u / (2 - u)` with `u = exp(-phi / (2 sigma^2))`, i.e. `exp(-phi_sigma)`.
#[inline]
pub fn local_kernel_from_distance(phi: f64, sigma: f64) -> f64 {
    let u = (-phi / (2.0 * sigma * sigma)).exp();
    u / (2.0 - u)
}

pub fn local_kernel(
    a: &SliceEmbedding,
    b: &SliceEmbedding,
    sigma: f64,
    mode: KernelMode,
) -> Result<LocalKernelValue> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let phi = triple_distance(a, b, mode)?;
    Ok(LocalKernelValue(local_kernel_from_distance(phi, sigma)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Modality;
    use proptest::prelude::*;

    fn comp(m: Modality, spec: &[f64], shared: &[f64]) -> SliceEmbedding {
        SliceEmbedding::composite(m, spec, shared).unwrap()
    }

    #[test]
    fn identical_composites_are_at_zero() {
        let a = comp(Modality::Image, &[0.3, 0.7], &[1.0, 2.0, 3.0]);
        assert_eq!(triple_distance(&a, &a.clone(), KernelMode::Triple).unwrap(), 0.0);
    }

    #[test]
    fn cross_modal_uses_shared() {
        // specialists identical, shared orthogonal
        let a = comp(Modality::Image, &[1.0, 0.0], &[1.0, 0.0]);
        let b = comp(Modality::Text, &[1.0, 0.0], &[0.0, 1.0]);
        assert!((triple_distance(&a, &b, KernelMode::Triple).unwrap() - 2.0).abs() < 1e-15);
        // same modality would compare specialists
        let c = comp(Modality::Image, &[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(triple_distance(&a, &c, KernelMode::Triple).unwrap(), 0.0);
        assert!((triple_distance(&a, &c, KernelMode::SharedOnly).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn antipodal_atomic_is_four() {
        let a = SliceEmbedding::atomic(Modality::Text, &[0.6, 0.8]).unwrap();
        let b = SliceEmbedding::atomic(Modality::Text, &[-0.6, -0.8]).unwrap();
        assert!((triple_distance(&a, &b, KernelMode::Triple).unwrap() - 4.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_forms_rejected() {
        let a = SliceEmbedding::atomic(Modality::Text, &[1.0, 0.0]).unwrap();
        let b = comp(Modality::Text, &[1.0], &[1.0]);
        assert!(matches!(
            triple_distance(&a, &b, KernelMode::Triple),
            Err(Error::MixedFormPair)
        ));
        let c = SliceEmbedding::atomic(Modality::Text, &[1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(
            triple_distance(&a, &c, KernelMode::Triple),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn sigma_values() {
        assert_eq!(sigma(1, 1, 0.7).unwrap(), 0.7);
        assert!((sigma(2, 2, 1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((sigma(3, 1, 2.0).unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
        assert!(matches!(sigma(1, 1, 0.0), Err(Error::NonPositiveDelta(_))));
        assert!(matches!(sigma(1, 1, -1.0), Err(Error::NonPositiveDelta(_))));
    }

    #[test]
    fn local_kernel_values() {
        assert_eq!(local_kernel_from_distance(0.0, 1.0), 1.0);
        // e^-1 / (2 - e^-1), evaluated by hand
        let expected = 0.367_879_441_171_442_3 / (2.0 - 0.367_879_441_171_442_3);
        assert!((local_kernel_from_distance(2.0, 1.0) - expected).abs() < 1e-15);
        assert!((expected - 0.2254).abs() < 5e-5);
        assert!((local_kernel_from_distance(4.0, 1e6) - 1.0).abs() < 1e-11);
    }

    #[test]
    fn local_kernel_rejects_bad_sigma() {
        let a = SliceEmbedding::atomic(Modality::Text, &[1.0]).unwrap();
        assert!(matches!(
            local_kernel(&a, &a, 0.0, KernelMode::Triple),
            Err(Error::NonPositiveSigma(_))
        ));
    }

    fn slice_strategy() -> impl Strategy<Value = SliceEmbedding> {
        (
            any::<bool>(),
            prop::collection::vec(-1.0f64..1.0, 4),
            prop::collection::vec(-1.0f64..1.0, 3),
        )
            .prop_filter_map("degenerate", |(img, s, h)| {
                let m = if img { Modality::Image } else { Modality::Text };
                SliceEmbedding::composite(m, &s, &h).ok()
            })
    }

    proptest! {
        #[test]
        fn symmetric_and_in_range(a in slice_strategy(), b in slice_strategy(), s in 0.1f64..5.0) {
            for mode in [KernelMode::Triple, KernelMode::SharedOnly] {
                let dab = triple_distance(&a, &b, mode).unwrap();
                let dba = triple_distance(&b, &a, mode).unwrap();
                prop_assert_eq!(dab, dba);
                prop_assert!((0.0..=4.0 + 1e-12).contains(&dab));
                let kab = local_kernel(&a, &b, s, mode).unwrap().get();
                let kba = local_kernel(&b, &a, s, mode).unwrap().get();
                prop_assert_eq!(kab, kba);
                prop_assert!(kab > 0.0 && kab <= 1.0);
            }
        }

        #[test]
        fn local_kernel_decays(phi in 0.0f64..3.9, step in 1e-3f64..0.1, s in 0.2f64..3.0) {
            prop_assert!(local_kernel_from_distance(phi + step, s) < local_kernel_from_distance(phi, s));
        }
    }
}
