use super::{ComplexMatrix, C64};
use crate::rng::Stream;

/// Haar-distributed unitary: Gram-Schmidt on the columns of a complex
/// Ginibre matrix. Gram-Schmidt produces the QR factor whose `R` has a
/// positive real diagonal, which is the phase convention that makes the
/// distribution exactly Haar.
pub fn haar_unitary(d: usize, rng: &mut Stream) -> ComplexMatrix {
    assert!(d >= 1, "haar_unitary needs d >= 1");
    let mut cols: Vec<Vec<C64>> = (0..d).map(|_| (0..d).map(|_| rng.complex_normal()).collect()).collect();
    for j in 0..d {
        let (done, rest) = cols.split_at_mut(j);
        let v = &mut rest[0];
        // two passes keep the columns orthonormal to machine precision
        for _ in 0..2 {
            for q in done.iter() {
                let proj = ComplexMatrix::inner(q, v);
                for (x, &y) in v.iter_mut().zip(q) {
                    *x -= proj * y;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for x in v.iter_mut() {
            *x /= norm;
        }
    }
    ComplexMatrix::from_fn(d, d, |i, j| cols[j][i])
}

/// Haar-random pure state: a normalised complex Gaussian vector.
pub fn haar_state(d: usize, rng: &mut Stream) -> Vec<C64> {
    let mut v: Vec<C64> = (0..d).map(|_| rng.complex_normal()).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for x in v.iter_mut() {
        *x /= norm;
    }
    v
}
