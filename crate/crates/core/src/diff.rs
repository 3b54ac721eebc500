//! Finite-difference derivatives of vector-valued functions.

/// Which stencil to use at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    Central,
    /// Second-order forward difference, for points near a lower boundary.
    Forward,
    /// Second-order backward difference, for points near an upper boundary.
    Backward,
}

impl Stencil {
    /// Picks a stencil that keeps every sample inside `[lo, hi]`.
    pub fn within(x: f64, h: f64, lo: f64, hi: f64) -> Stencil {
        if x - h < lo {
            Stencil::Forward
        } else if x + h > hi {
            Stencil::Backward
        } else {
            Stencil::Central
        }
    }
}

fn combine(terms: &[(f64, Vec<f64>)], scale: f64) -> Vec<f64> {
    let len = terms[0].1.len();
    (0..len)
        .map(|i| terms.iter().map(|(w, v)| w * v[i]).sum::<f64>() * scale)
        .collect()
}

/// Derivative of `f` at `x` with step `h`, second order in `h` for every stencil.
pub fn derivative<F>(f: &F, x: f64, h: f64, stencil: Stencil) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let inv = 1.0 / (2.0 * h);
    match stencil {
        Stencil::Central => combine(&[(1.0, f(x + h)), (-1.0, f(x - h))], inv),
        Stencil::Forward => combine(&[(-3.0, f(x)), (4.0, f(x + h)), (-1.0, f(x + 2.0 * h))], inv),
        Stencil::Backward => combine(&[(3.0, f(x)), (-4.0, f(x - h)), (1.0, f(x - 2.0 * h))], inv),
    }
}

/// One Richardson step on top of [`derivative`]: `(4 D(h/2) - D(h)) / 3`.
pub fn richardson<F>(f: &F, x: f64, h: f64, stencil: Stencil) -> Vec<f64>
where
    F: Fn(f64) -> Vec<f64>,
{
    let coarse = derivative(f, x, h, stencil);
    let fine = derivative(f, x, 0.5 * h, stencil);
    fine.iter()
        .zip(&coarse)
        .map(|(a, b)| (4.0 * a - b) / 3.0)
        .collect()
}

/// Scalar convenience wrapper around [`richardson`] with a central stencil.
pub fn richardson_scalar<F>(f: F, x: f64, h: f64) -> f64
where
    F: Fn(f64) -> f64,
{
    richardson(&|t| vec![f(t)], x, h, Stencil::Central)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn stencils_on_polynomials() {
        // second-order stencils are exact for quadratics
        let f = |x: f64| vec![3.0 * x * x - x + 2.0];
        for st in [Stencil::Central, Stencil::Forward, Stencil::Backward] {
            assert_relative_eq!(derivative(&f, 0.7, 0.1, st)[0], 6.0 * 0.7 - 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn richardson_improves_central() {
        let x: f64 = 0.9;
        let exact = x.cos();
        let plain = derivative(&|t: f64| vec![t.sin()], x, 1e-2, Stencil::Central)[0];
        let extrap = richardson_scalar(f64::sin, x, 1e-2);
        assert!((extrap - exact).abs() < (plain - exact).abs() / 100.0);
        assert_relative_eq!(extrap, exact, epsilon = 1e-10);
    }

    #[test]
    fn boundary_selection() {
        assert_eq!(Stencil::within(0.0, 1e-4, 0.0, 1.0), Stencil::Forward);
        assert_eq!(Stencil::within(1.0, 1e-4, 0.0, 1.0), Stencil::Backward);
        assert_eq!(Stencil::within(0.5, 1e-4, 0.0, 1.0), Stencil::Central);
    }
}
