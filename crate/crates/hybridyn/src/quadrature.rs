//! Adaptive Gauss-Kronrod (G7-K15) quadrature for complex-valued integrands
//! on finite intervals.
//!
//! Used where a frequency average has no closed form. The error indicator is
//! the difference between the embedded 7-point Gauss and 15-point Kronrod
//! rules on each subinterval; intervals are bisected until the worst local
//! error is within its share of the global tolerance.

use num_complex::Complex64;

use crate::error::{HybridError, Result};

/// Kronrod abscissae on [0, 1] side of the symmetric rule.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Gauss weights for the embedded 7-point rule; the Gauss nodes are the
/// odd-indexed entries of `XGK` (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One G7-K15 evaluation: returns (kronrod integral, |kronrod - gauss|).
fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut kronrod = Complex64::new(0.0, 0.0);
    let mut gauss = Complex64::new(0.0, 0.0);
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).enumerate() {
        let (fa, fb) = (f(center - half * x), f(center + half * x));
        let pair = if x == 0.0 { fa } else { fa + fb };
        kronrod += wk * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    // 0 was counted once in the pair sum but the Gauss rule also has a node
    // there; both accumulations above already handle it because x == 0 adds
    // a single sample.
    (kronrod * half, (kronrod - gauss).norm() * half.abs())
}

/// Adaptive integral of `f` over [a, b] to absolute tolerance `tol`.
pub fn integrate_complex<F: Fn(f64) -> Complex64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
) -> Result<Complex64> {
    if !(tol > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(HybridError::InvalidParameter {
            name: "quadrature".into(),
            reason: "finite bounds and positive tolerance required".into(),
        });
    }
    if a == b {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let total_len = (b - a).abs();
    // Worklist of (lo, hi, estimate, error).
    let (est, err) = gk15(&f, a, b);
    let mut work = vec![(a, b, est, err)];
    let max_intervals = 4096;
    loop {
        // Accept when every interval meets its proportional error share.
        let worst = work
            .iter()
            .enumerate()
            .max_by(|x, y| {
                let sx = x.1 .3 / ((x.1 .1 - x.1 .0).abs() / total_len);
                let sy = y.1 .3 / ((y.1 .1 - y.1 .0).abs() / total_len);
                sx.partial_cmp(&sy).expect("finite error estimates")
            })
            .map(|(i, item)| (i, *item))
            .expect("worklist is never empty");
        let (i, (lo, hi, _, err)) = worst;
        if err <= tol * (hi - lo).abs() / total_len {
            break;
        }
        if work.len() >= max_intervals {
            let total_err: f64 = work.iter().map(|w| w.3).sum();
            return Err(HybridError::QuadratureFailure { error: total_err });
        }
        let mid = 0.5 * (lo + hi);
        let left = gk15(&f, lo, mid);
        let right = gk15(&f, mid, hi);
        work[i] = (lo, mid, left.0, left.1);
        work.push((mid, hi, right.0, right.1));
    }
    let mut acc_re = crate::numeric::CompensatedSum::new();
    let mut acc_im = crate::numeric::CompensatedSum::new();
    for (_, _, est, _) in &work {
        acc_re.add(est.re);
        acc_im.add(est.im);
    }
    Ok(Complex64::new(acc_re.value(), acc_im.value()))
}
