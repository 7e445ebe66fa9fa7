//! Gauss-Legendre rules on the unit interval, shared by geometry, the 1D
//! solver and boundary-term assembly.

/// 2-point Gauss rule on [0,1]: exact for cubics.
pub(crate) const GAUSS2: [(f64, f64); 2] = [
    (0.211_324_865_405_187_1, 0.5),
    (0.788_675_134_594_812_9, 0.5),
];

/// 3-point Gauss rule on [0,1]: exact for quintics.
pub(crate) const GAUSS3: [(f64, f64); 3] = [
    (0.112_701_665_379_258_3, 0.277_777_777_777_777_8),
    (0.5, 0.444_444_444_444_444_4),
    (0.887_298_334_620_741_7, 0.277_777_777_777_777_8),
];

/// Least-squares slope of ln(val) against ln(arg). `None` when fewer than two
/// usable points remain (non-positive values are skipped).
pub(crate) fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(a, v)| *a > 0.0 && *v > 0.0)
        .map(|(a, v)| (a.ln(), v.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let sx: f64 = logs.iter().map(|(a, _)| a).sum();
    let sy: f64 = logs.iter().map(|(_, v)| v).sum();
    let sxx: f64 = logs.iter().map(|(a, _)| a * a).sum();
    let sxy: f64 = logs.iter().map(|(a, v)| a * v).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss2_integrates_cubics_exactly() {
        // ∫_0^1 t^3 dt = 1/4
        let got: f64 = GAUSS2.iter().map(|(t, w)| w * t * t * t).sum();
        assert!((got - 0.25).abs() < 1e-15);
    }

    #[test]
    fn gauss3_integrates_quintics_exactly() {
        // ∫_0^1 t^5 dt = 1/6
        let got: f64 = GAUSS3.iter().map(|(t, w)| w * t.powi(5)).sum();
        assert!((got - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn slope_recovers_power_law() {
        let pts: Vec<(f64, f64)> = [0.5, 0.25, 0.125]
            .iter()
            .map(|&e: &f64| (e, 3.0 * e.powf(1.7)))
            .collect();
        let s = log_log_slope(&pts).unwrap();
        assert!((s - 1.7).abs() < 1e-12);
    }
}
