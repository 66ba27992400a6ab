//! Whole-signal BSS-eval scores.
//!
//! The estimate is split by orthogonal projection into a target part (onto
//! `span{target}`), an interference part (onto `span{target, interference}`
//! minus the target part) and an artifact remainder. Gains are
//! time-invariant; no distortion filters are allowed.

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};

/// Ratios that would be infinite are reported as this many dB.
pub const SCORE_CAP_DB: f64 = 200.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BssScores {
    pub sdr: f64,
    pub sir: f64,
    pub sar: f64,
    /// Set when any ratio hit [`SCORE_CAP_DB`].
    pub capped: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn ratio_db(num: f64, den: f64, capped: &mut bool) -> f64 {
    if den == 0.0 {
        *capped = true;
        return SCORE_CAP_DB;
    }
    let db = 10.0 * (num / den).log10();
    if db.abs() > SCORE_CAP_DB {
        *capped = true;
        SCORE_CAP_DB.copysign(db)
    } else {
        db
    }
}

fn check_pair(a: &AudioBuffer, b: &AudioBuffer, what: &'static str) -> Result<()> {
    if a.sample_rate() != b.sample_rate() {
        return Err(Error::SampleRateMismatch {
            expected: a.sample_rate(),
            got: b.sample_rate(),
        });
    }
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            what,
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(())
}

/// SDR, SIR and SAR of `estimate` against a target and one interference.
pub fn bss_eval(
    estimate: &AudioBuffer,
    target: &AudioBuffer,
    interference: &AudioBuffer,
) -> Result<BssScores> {
    check_pair(target, estimate, "estimate length")?;
    check_pair(target, interference, "interference length")?;
    let (s, t, i) = (estimate.samples(), target.samples(), interference.samples());

    let tt = dot(t, t);
    let ii = dot(i, i);
    let ti = dot(t, i);
    if tt == 0.0 {
        return Err(Error::ZeroEnergy("target"));
    }
    if ii == 0.0 {
        return Err(Error::ZeroEnergy("interference"));
    }
    let det = tt * ii - ti * ti;
    if det <= 1e-12 * tt * ii {
        return Err(Error::Degenerate("target and interference are collinear"));
    }
    let st = dot(s, t);
    let si = dot(s, i);

    // projection onto span{t, i}: solve the 2x2 Gram system
    let a = (st * ii - si * ti) / det;
    let b = (si * tt - st * ti) / det;
    let c = st / tt;

    let (mut e_target, mut e_interf, mut e_artif, mut e_noise) = (0.0, 0.0, 0.0, 0.0);
    let mut e_signal = 0.0;
    for ((&sv, &tv), &iv) in s.iter().zip(t).zip(i) {
        let target_part = c * tv;
        let proj = a * tv + b * iv;
        let interf = proj - target_part;
        let artif = sv - proj;
        e_target += target_part * target_part;
        e_interf += interf * interf;
        e_artif += artif * artif;
        e_noise += (interf + artif) * (interf + artif);
        e_signal += proj * proj;
    }

    let mut capped = false;
    Ok(BssScores {
        sdr: ratio_db(e_target, e_noise, &mut capped),
        sir: ratio_db(e_target, e_interf, &mut capped),
        sar: ratio_db(e_signal, e_artif, &mut capped),
        capped,
    })
}

/// SDR gain of `estimate` over the unprocessed mixture.
pub fn sdr_improvement(
    mixture: &AudioBuffer,
    estimate: &AudioBuffer,
    target: &AudioBuffer,
    interference: &AudioBuffer,
) -> Result<f64> {
    Ok(
        bss_eval(estimate, target, interference)?.sdr
            - bss_eval(mixture, target, interference)?.sdr,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn buf(v: Vec<f64>) -> AudioBuffer {
        AudioBuffer::new(v, 8000).unwrap()
    }

    fn random(seed: u64, n: usize) -> AudioBuffer {
        let mut rng = SeededRng::new(seed);
        buf((0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect())
    }

    #[test]
    fn perfect_estimate_is_capped() {
        let t = random(1, 500);
        let i = random(2, 500);
        let scores = bss_eval(&t, &t, &i).unwrap();
        assert!(scores.capped);
        assert!(
            scores.sdr >= SCORE_CAP_DB && scores.sir >= SCORE_CAP_DB && scores.sar >= SCORE_CAP_DB
        );
    }

    #[test]
    fn orthogonal_mixture_has_zero_sir() {
        let t = buf(vec![1.0, 0.0, 0.0, 0.0]);
        let i = buf(vec![0.0, 1.0, 0.0, 0.0]);
        let mix = t.add(&i).unwrap();
        let scores = bss_eval(&mix, &t, &i).unwrap();
        assert!(scores.sir.abs() < 1e-12);
        assert!(scores.sdr.abs() < 1e-12);
        assert!(scores.capped); // no artifacts

        // swapping roles on an orthogonal pair swaps which part counts as interference
        let est = t.scaled(2.0).add(&i).unwrap();
        let ab = bss_eval(&est, &t, &i).unwrap();
        let ba = bss_eval(&est, &i, &t).unwrap();
        assert!((ab.sir + ba.sir).abs() < 1e-12);
        assert!((ab.sir - 10.0 * 4f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn scale_invariance() {
        let (t, i, s) = (random(3, 300), random(4, 300), random(5, 300));
        let a = bss_eval(&s, &t, &i).unwrap();
        let b = bss_eval(&s.scaled(3.7), &t, &i).unwrap();
        assert!((a.sdr - b.sdr).abs() < 1e-9);
        assert!((a.sir - b.sir).abs() < 1e-9);
        assert!((a.sar - b.sar).abs() < 1e-9);
    }

    #[test]
    fn degenerate_inputs() {
        let t = random(3, 100);
        let z = AudioBuffer::zeros(100, 8000).unwrap();
        assert!(matches!(
            bss_eval(&t, &z, &t),
            Err(Error::ZeroEnergy("target"))
        ));
        assert!(matches!(
            bss_eval(&t, &t, &t.scaled(2.0)),
            Err(Error::Degenerate(_))
        ));
        assert!(bss_eval(&random(1, 99), &t, &random(2, 100)).is_err());
    }

    #[test]
    fn improvement_of_mixture_is_zero() {
        let (t, i) = (random(6, 400), random(7, 400));
        let mix = t.add(&i).unwrap();
        assert_eq!(sdr_improvement(&mix, &mix, &t, &i).unwrap(), 0.0);
        assert!(sdr_improvement(&mix, &t, &t, &i).unwrap() > 100.0);
    }
}
