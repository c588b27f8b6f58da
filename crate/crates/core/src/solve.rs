//! Small root-finding helpers shared by the fiber and phase-matching solvers.

use crate::{Error, Result};

/// Brent's method on a bracketing interval `[a, b]` with `f(a)*f(b) <= 0`.
///
/// `f` may fail (domain errors propagate). Converges to `xtol` on the
/// abscissa.
pub fn brent<F>(mut f: F, a: f64, b: f64, xtol: f64, max_iter: u32) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut xa, mut xb) = (a, b);
    let mut fa = f(xa)?;
    let mut fb = f(xb)?;
    if fa == 0.0 {
        return Ok(xa);
    }
    if fb == 0.0 {
        return Ok(xb);
    }
    if fa * fb > 0.0 {
        return Err(Error::NoRoot {
            quantity: "function".into(),
            lo: a,
            hi: b,
        });
    }
    let mut xc = xa;
    let mut fc = fa;
    let mut d = xb - xa;
    let mut e = d;
    for _ in 0..max_iter {
        if fb * fc > 0.0 {
            xc = xa;
            fc = fa;
            d = xb - xa;
            e = d;
        }
        if fc.abs() < fb.abs() {
            xa = xb;
            xb = xc;
            xc = xa;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol1 = 2.0 * f64::EPSILON * xb.abs() + 0.5 * xtol;
        let xm = 0.5 * (xc - xb);
        if xm.abs() <= tol1 || fb == 0.0 {
            return Ok(xb);
        }
        if e.abs() >= tol1 && fa.abs() > fb.abs() {
            // inverse quadratic / secant step
            let s = fb / fa;
            let (mut p, mut q);
            if xa == xc {
                p = 2.0 * xm * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * xm * qq * (qq - r) - (xb - xa) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            let min1 = 3.0 * xm * q - (tol1 * q).abs();
            let min2 = (e * q).abs();
            if 2.0 * p < min1.min(min2) {
                e = d;
                d = p / q;
            } else {
                d = xm;
                e = d;
            }
        } else {
            d = xm;
            e = d;
        }
        xa = xb;
        fa = fb;
        xb += if d.abs() > tol1 {
            d
        } else {
            tol1 * xm.signum()
        };
        fb = f(xb)?;
    }
    Err(Error::NonConvergence {
        what: "Brent root search".into(),
        iterations: max_iter,
        last: xb,
    })
}

/// Scans `[a, b]` on `n` points and returns bracketing sub-intervals with a
/// sign change between consecutive *evaluable* points. Evaluation errors act
/// as breaks, never as sign changes.
pub fn sign_change_brackets<F>(mut f: F, a: f64, b: f64, n: usize) -> Vec<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut out = Vec::new();
    if n < 2 || !(b > a) {
        return out;
    }
    let step = (b - a) / (n as f64 - 1.0);
    let mut prev: Option<(f64, f64)> = None;
    for i in 0..n {
        let x = a + step * i as f64;
        match f(x) {
            Ok(y) => {
                if let Some((xp, yp)) = prev {
                    if yp == 0.0 {
                        out.push((xp, xp));
                    } else if yp * y < 0.0 {
                        out.push((xp, x));
                    }
                }
                prev = Some((x, y));
            }
            Err(_) => prev = None,
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brent_finds_quadratic_root() {
        let root = brent(|x| Ok(x * x - 2.0), 0.0, 2.0, 1e-12, 100).unwrap();
        assert!((root - std::f64::consts::SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn brent_rejects_unbracketed() {
        let err = brent(|x| Ok(x * x + 1.0), -1.0, 1.0, 1e-12, 100).unwrap_err();
        assert!(matches!(err, Error::NoRoot { .. }));
    }

    #[test]
    fn scan_skips_error_points() {
        // f jumps sign across an error gap; the gap must not bracket.
        let f = |x: f64| {
            if (0.4..0.6).contains(&x) {
                Err(Error::InvalidArgument("gap".into()))
            } else if x < 0.5 {
                Ok(1.0)
            } else {
                Ok(-1.0)
            }
        };
        let brackets = sign_change_brackets(f, 0.0, 1.0, 101);
        assert!(brackets.is_empty());
    }

    #[test]
    fn scan_brackets_simple_root() {
        let brackets = sign_change_brackets(|x| Ok(x - 0.37), 0.0, 1.0, 11);
        assert_eq!(brackets.len(), 1);
        let root = brent(|x| Ok(x - 0.37), brackets[0].0, brackets[0].1, 1e-12, 100).unwrap();
        assert!((root - 0.37).abs() < 1e-9);
    }
}
