//! In-place gate kernels over raw amplitude slices.
//!
//! These run on any complex vector of length 2^n, normalized or not, which
//! lets the adjoint sweep reuse them on cotangent vectors.

use num_complex::Complex64;

/// Applies the 2x2 matrix `m` (row-major) to qubit `target`.
pub fn apply_single(amps: &mut [Complex64], target: usize, m: &[Complex64; 4]) {
    let stride = 1usize << target;
    let mut base = 0;
    while base < amps.len() {
        for i in base..base + stride {
            let a = amps[i];
            let b = amps[i + stride];
            amps[i] = m[0] * a + m[1] * b;
            amps[i + stride] = m[2] * a + m[3] * b;
        }
        base += stride << 1;
    }
}

/// Applies `m` to `target` only where `control` is set.
pub fn apply_controlled_single(
    amps: &mut [Complex64],
    control: usize,
    target: usize,
    m: &[Complex64; 4],
) {
    let stride = 1usize << target;
    let cmask = 1usize << control;
    let mut base = 0;
    while base < amps.len() {
        for i in base..base + stride {
            if i & cmask != 0 {
                let a = amps[i];
                let b = amps[i + stride];
                amps[i] = m[0] * a + m[1] * b;
                amps[i + stride] = m[2] * a + m[3] * b;
            }
        }
        base += stride << 1;
    }
}

pub fn apply_cz(amps: &mut [Complex64], control: usize, target: usize) {
    let mask = (1usize << control) | (1usize << target);
    for (k, amp) in amps.iter_mut().enumerate() {
        if k & mask == mask {
            *amp = -*amp;
        }
    }
}

pub fn apply_cnot(amps: &mut [Complex64], control: usize, target: usize) {
    let cmask = 1usize << control;
    let tmask = 1usize << target;
    for k in 0..amps.len() {
        if k & cmask != 0 && k & tmask == 0 {
            amps.swap(k, k | tmask);
        }
    }
}

pub fn apply_pauli_x(amps: &mut [Complex64], qubit: usize) {
    let mask = 1usize << qubit;
    for k in 0..amps.len() {
        if k & mask == 0 {
            amps.swap(k, k | mask);
        }
    }
}

pub fn apply_pauli_y(amps: &mut [Complex64], qubit: usize) {
    let mask = 1usize << qubit;
    let i = Complex64::new(0.0, 1.0);
    for k in 0..amps.len() {
        if k & mask == 0 {
            let lo = amps[k];
            let hi = amps[k | mask];
            // Y|0> = i|1>, Y|1> = -i|0>
            amps[k] = -i * hi;
            amps[k | mask] = i * lo;
        }
    }
}

pub fn apply_pauli_z(amps: &mut [Complex64], qubit: usize) {
    let mask = 1usize << qubit;
    for (k, amp) in amps.iter_mut().enumerate() {
        if k & mask != 0 {
            *amp = -*amp;
        }
    }
}
