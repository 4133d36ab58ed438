//! Sinusoidal positional encoding of query coordinates.
//!
//! Layout: the three raw coordinates first, then for each frequency band
//! `k = 0..frequencies` a block of `sin(2^k pi p)` over the three coordinates
//! followed by `cos(2^k pi p)` over the three coordinates.

use crate::math::{self, Vec3};
use alloc::vec::Vec;

/// Output length of the encoding: `3 + 6 * frequencies`.
#[inline]
pub const fn encoded_dim(frequencies: usize) -> usize {
    3 + 6 * frequencies
}

/// Encodes `p` into a freshly allocated vector.
pub fn encode(p: Vec3, frequencies: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; encoded_dim(frequencies)];
    encode_into(p, frequencies, &mut out);
    out
}

/// Encodes `p` into `out`, which must have length `encoded_dim(frequencies)`.
pub fn encode_into(p: Vec3, frequencies: usize, out: &mut [f64]) {
    assert_eq!(out.len(), encoded_dim(frequencies), "encoding buffer size");
    out[..3].copy_from_slice(&p);
    let mut omega = core::f64::consts::PI;
    for k in 0..frequencies {
        let base = 3 + 6 * k;
        for axis in 0..3 {
            out[base + axis] = math::sin(omega * p[axis]);
            out[base + 3 + axis] = math::cos(omega * p[axis]);
        }
        omega *= 2.0;
    }
}

/// Accumulates `J_enc(p)^T u` into `grad`, where `J_enc` is the Jacobian of
/// the encoding at `p` and `u` is a cotangent over encoded components.
///
/// `enc` must hold the encoding of `p` so the stored sin/cos values can be
/// reused for the derivative terms.
pub(crate) fn encoding_vjp(frequencies: usize, enc: &[f64], u: &[f64], grad: &mut Vec3) {
    grad[0] += u[0];
    grad[1] += u[1];
    grad[2] += u[2];
    let mut omega = core::f64::consts::PI;
    for k in 0..frequencies {
        let base = 3 + 6 * k;
        for axis in 0..3 {
            let s = enc[base + axis];
            let c = enc[base + 3 + axis];
            // d sin(w p)/dp = w cos(w p), d cos(w p)/dp = -w sin(w p)
            grad[axis] += omega * (u[base + axis] * c - u[base + 3 + axis] * s);
        }
        omega *= 2.0;
    }
}

/// Writes `J_enc(p) v` into `out`: the tangent of the encoding along the
/// input direction `v`.
pub(crate) fn encoding_jvp(frequencies: usize, enc: &[f64], v: Vec3, out: &mut [f64]) {
    out[0] = v[0];
    out[1] = v[1];
    out[2] = v[2];
    let mut omega = core::f64::consts::PI;
    for k in 0..frequencies {
        let base = 3 + 6 * k;
        for axis in 0..3 {
            let s = enc[base + axis];
            let c = enc[base + 3 + axis];
            out[base + axis] = omega * c * v[axis];
            out[base + 3 + axis] = -omega * s * v[axis];
        }
        omega *= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_input_layout() {
        let e = encode([0.0, 0.0, 0.0], 6);
        assert_eq!(e.len(), 39);
        assert_eq!(&e[..3], &[0.0, 0.0, 0.0]);
        for k in 0..6 {
            let base = 3 + 6 * k;
            for axis in 0..3 {
                assert_eq!(e[base + axis], 0.0, "sin at zero");
                assert_eq!(e[base + 3 + axis], 1.0, "cos at zero");
            }
        }
    }

    #[test]
    fn zero_frequencies_is_identity() {
        let p = [0.3, -1.7, 42.0];
        let e = encode(p, 0);
        assert_eq!(e, alloc::vec![0.3, -1.7, 42.0]);
    }

    #[test]
    fn single_frequency_hand_values() {
        // p = (0.5, 0, 0), one band: sin(pi/2) = 1 for x, cos(pi/2) = 0 for x,
        // sin 0 = 0 and cos 0 = 1 for y and z.
        let e = encode([0.5, 0.0, 0.0], 1);
        assert_eq!(e.len(), 9);
        let expected = [0.5, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0];
        for (got, want) in e.iter().zip(expected.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let p = [0.21, -0.43, 0.67];
        let freq = 4;
        let h = 1e-6;
        let enc = encode(p, freq);
        // Column-by-column FD of the encoding vs encoding_jvp on basis vectors.
        for axis in 0..3 {
            let mut v = [0.0; 3];
            v[axis] = 1.0;
            let mut jvp = alloc::vec![0.0; encoded_dim(freq)];
            encoding_jvp(freq, &enc, v, &mut jvp);

            let mut pp = p;
            pp[axis] += h;
            let mut pm = p;
            pm[axis] -= h;
            let ep = encode(pp, freq);
            let em = encode(pm, freq);
            for i in 0..encoded_dim(freq) {
                let fd = (ep[i] - em[i]) / (2.0 * h);
                assert!(
                    (fd - jvp[i]).abs() < 1e-5 * (1.0 + fd.abs()),
                    "axis {axis} comp {i}: fd {fd} vs jvp {}",
                    jvp[i]
                );
            }
        }
        // vjp is the transpose: <J v, u> == <v, J^T u> for random u, v.
        let u: Vec<f64> = (0..encoded_dim(freq))
            .map(|i| ((i * 37 + 11) % 17) as f64 / 17.0 - 0.5)
            .collect();
        let v = [0.3, -0.9, 0.5];
        let mut jvp = alloc::vec![0.0; encoded_dim(freq)];
        encoding_jvp(freq, &enc, v, &mut jvp);
        let lhs: f64 = jvp.iter().zip(u.iter()).map(|(a, b)| a * b).sum();
        let mut jtu = [0.0; 3];
        encoding_vjp(freq, &enc, &u, &mut jtu);
        let rhs = crate::math::dot(jtu, v);
        assert!((lhs - rhs).abs() < 1e-12);
    }
}
