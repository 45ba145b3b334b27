//! Strided N-D complex FFT over row-major 3-D buffers (leading axes may have length 1).

use std::cell::RefCell;

use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Direction {
    Forward,
    Inverse,
}

/// In-place unnormalised transform of `buf` with shape `dims` along every axis of length > 1.
pub(crate) fn fft3(buf: &mut [Complex64], dims: [usize; 3], direction: Direction) {
    debug_assert_eq!(buf.len(), dims.iter().product::<usize>());
    PLANNER.with(|planner| {
        let mut planner = planner.borrow_mut();
        let [d0, d1, d2] = dims;

        if d2 > 1 {
            let fft = plan(&mut planner, d2, direction);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(buf, &mut scratch);
        }

        if d1 > 1 {
            let fft = plan(&mut planner, d1, direction);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            let mut line = vec![Complex64::default(); d1];
            for i in 0..d0 {
                let plane = &mut buf[i * d1 * d2..(i + 1) * d1 * d2];
                for k in 0..d2 {
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = plane[j * d2 + k];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, value) in line.iter().enumerate() {
                        plane[j * d2 + k] = *value;
                    }
                }
            }
        }

        if d0 > 1 {
            let fft = plan(&mut planner, d0, direction);
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            let stride = d1 * d2;
            let mut line = vec![Complex64::default(); d0];
            for r in 0..stride {
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = buf[i * stride + r];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, value) in line.iter().enumerate() {
                    buf[i * stride + r] = *value;
                }
            }
        }
    });
}

fn plan(
    planner: &mut FftPlanner<f64>,
    len: usize,
    direction: Direction,
) -> std::sync::Arc<dyn rustfft::Fft<f64>> {
    match direction {
        Direction::Forward => planner.plan_fft_forward(len),
        Direction::Inverse => planner.plan_fft_inverse(len),
    }
}

/// Smallest 5-smooth integer `>= n`.
pub(crate) fn next_smooth(n: usize) -> usize {
    let mut candidate = n.max(1);
    loop {
        let mut r = candidate;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return candidate;
        }
        candidate += 1;
    }
}
