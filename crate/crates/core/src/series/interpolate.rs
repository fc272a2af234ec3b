//! Gap filling for monthly index series.

/// Dense series produced by [`interpolate`].
#[derive(Clone, Debug, PartialEq)]
pub struct Filled {
    pub values: Vec<f64>,
    /// `true` where the value was filled rather than observed.
    pub interpolated: Vec<bool>,
    pub interpolation_rate: f64,
    /// Fewer than two observations: the series cannot be interpolated.
    pub too_sparse: bool,
}

/// Value at `x` of the polynomial through `knots`, via Newton divided differences.
pub fn newton_eval(knots: &[(f64, f64)], x: f64) -> f64 {
    let n = knots.len();
    let mut coef: Vec<f64> = knots.iter().map(|k| k.1).collect();
    for j in 1..n {
        for i in (j..n).rev() {
            coef[i] = (coef[i] - coef[i - 1]) / (knots[i].0 - knots[i - j].0);
        }
    }
    let mut y = coef[n - 1];
    for i in (0..n - 1).rev() {
        y = y * (x - knots[i].0) + coef[i];
    }
    y
}

/// Fills missing months.
///
/// Interior gaps use the cubic through the two nearest observations on each
/// side (three and one when a side has only one; a lower degree when fewer
/// than four exist). Leading and trailing gaps are extrapolated linearly from
/// the two nearest observations. Negative fills are clipped to zero.
/// A series with fewer than two observations is flagged `too_sparse`, filled
/// by constant extension (zeros when empty) and given rate 1.0.
pub fn interpolate(values: &[Option<f64>]) -> Filled {
    let n = values.len();
    let known: Vec<(usize, f64)> = values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    let interpolated: Vec<bool> = values.iter().map(Option::is_none).collect();

    if known.len() < 2 {
        let fill = known.first().map_or(0.0, |k| k.1.max(0.0));
        return Filled {
            values: values.iter().map(|v| v.unwrap_or(fill)).collect(),
            interpolated,
            interpolation_rate: 1.0,
            too_sparse: true,
        };
    }

    let mut out = vec![0.0; n];
    // index into `known` of the first observation at or after position i
    let mut next = 0usize;
    for i in 0..n {
        if let Some(v) = values[i] {
            out[i] = v;
            next += 1;
            continue;
        }
        let before = next; // observations strictly before i
        let after = known.len() - next;
        let y = if before == 0 {
            linear(known[0], known[1], i)
        } else if after == 0 {
            linear(known[known.len() - 2], known[known.len() - 1], i)
        } else {
            let mut take_before = before.min(2);
            let mut take_after = after.min(2);
            if take_before + take_after < 4 {
                let spare = 4 - (take_before + take_after);
                if take_before < 2 {
                    take_after = after.min(take_after + spare);
                } else {
                    take_before = before.min(take_before + spare);
                }
            }
            let knots: Vec<(f64, f64)> = known[next - take_before..next + take_after]
                .iter()
                .map(|&(x, y)| (x as f64, y))
                .collect();
            newton_eval(&knots, i as f64)
        };
        out[i] = y.max(0.0);
    }
    let missing = interpolated.iter().filter(|b| **b).count();
    Filled {
        values: out,
        interpolated,
        interpolation_rate: if n == 0 { 1.0 } else { missing as f64 / n as f64 },
        too_sparse: false,
    }
}

fn linear(a: (usize, f64), b: (usize, f64), x: usize) -> f64 {
    let (x1, y1) = (a.0 as f64, a.1);
    let (x2, y2) = (b.0 as f64, b.1);
    y1 + (x as f64 - x1) * (y2 - y1) / (x2 - x1)
}
