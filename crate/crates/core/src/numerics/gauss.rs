//! Fixed low-order Gauss-Legendre rule for smooth integrands on short cells.

const NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss-Legendre rule on `[a, b]`, exact for degree 9.
pub fn gauss_legendre_5<F, E>(mut f: F, a: f64, b: f64) -> Result<f64, E>
where
    F: FnMut(f64) -> Result<f64, E>,
{
    let c = 0.5 * (a + b);
    let r = 0.5 * (b - a);
    let mut s = 0.0;
    for (x, w) in NODES.iter().zip(WEIGHTS.iter()) {
        s += w * f(c + r * x)?;
    }
    Ok(r * s)
}
