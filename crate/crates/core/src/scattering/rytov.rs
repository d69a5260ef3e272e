use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Born data `u_inc log(u_tot / u_inc)` from Rytov-type total field samples
/// ordered along the transverse detector axis. The phase of the logarithm is
/// the principal value at the first sample and continued without jumps
/// larger than `pi` from there on.
pub fn rytov_to_born(u_tot: &[Complex64], u_inc: &[Complex64]) -> Result<Vec<Complex64>> {
    if u_tot.len() != u_inc.len() {
        return Err(Error::SizeMismatch { expected: u_inc.len(), actual: u_tot.len() });
    }
    let mut out = Vec::with_capacity(u_tot.len());
    let mut prev: Option<(f64, f64)> = None;
    for (k, (tot, inc)) in u_tot.iter().zip(u_inc).enumerate() {
        if inc.norm() == 0.0 {
            return Err(Error::domain(format!("incident field vanishes at sample {k}")));
        }
        let w = tot / inc;
        if !(w.norm() >= 1e-12) {
            return Err(Error::Numerical(format!("cannot track the logarithm branch at sample {k}")));
        }
        let arg = w.arg();
        let phase = match prev {
            None => arg,
            Some((prev_arg, prev_phase)) => {
                let mut step = arg - prev_arg;
                while step > PI {
                    step -= 2.0 * PI;
                }
                while step <= -PI {
                    step += 2.0 * PI;
                }
                prev_phase + step
            }
        };
        prev = Some((arg, phase));
        out.push(inc * Complex64::new(w.norm().ln(), phase));
    }
    Ok(out)
}
