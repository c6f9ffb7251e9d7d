//! WebAssembly bindings behind `www/index.html`.
//!
//! Each export wraps a plain Rust function of the same name in [`ops`], so
//! the numerics can be tested natively.

use wasm_bindgen::prelude::*;

pub mod ops {
    use slowdiff::analysis::gap_schedule as schedule;
    use slowdiff::giant::{build_giant, MinimizeOptions};
    use slowdiff::solutions::{barenblatt_eval, BarenblattSpec};
    use slowdiff::{GiantDomain, MediumParams, SpaceTimePoint};

    fn params(p: f64, n: usize) -> Result<MediumParams, String> {
        MediumParams::new(p, n).map_err(|e| e.to_string())
    }

    /// Barenblatt values along the first axis at `points` equispaced
    /// positions in `[-x_max, x_max]`, other coordinates zero.
    pub fn barenblatt_profile(p: f64, n: usize, t: f64, x_max: f64, points: usize) -> Result<Vec<f64>, String> {
        if points < 2 || !(x_max > 0.0) {
            return Err("need at least two points and x_max > 0".into());
        }
        let spec = BarenblattSpec::new(params(p, n)?);
        let mut x = vec![0.0; n];
        Ok((0..points)
            .map(|i| {
                x[0] = -x_max + 2.0 * x_max * i as f64 / (points - 1) as f64;
                barenblatt_eval(&spec, &SpaceTimePoint::new(&x, t))
            })
            .collect())
    }

    /// Friendly giant on `(-1, 1)` sampled at `nodes` equispaced nodes,
    /// followed by its eigenvalue `lam` and scale `C`.
    pub fn giant_profile_1d(p: f64, nodes: usize) -> Result<Vec<f64>, String> {
        if !(5..=1025).contains(&nodes) {
            return Err("nodes must lie in 5..=1025".into());
        }
        let opts = MinimizeOptions {
            nodes,
            tol: 1e-10,
            ..MinimizeOptions::default()
        };
        let g = build_giant(&GiantDomain::Interval { lo: -1.0, hi: 1.0 }, params(p, 1)?.p(), &opts).map_err(|e| e.to_string())?;
        let mut out = g.values().to_vec();
        out.push(g.lam);
        out.push(g.scale);
        Ok(out)
    }

    /// Exponents of the gap iteration followed by the final exponent
    /// `p - 1 + p/n - sigma`.
    pub fn gap_schedule(eps: f64, sigma: f64, p: f64, n: usize) -> Result<Vec<f64>, String> {
        let s = schedule(eps, sigma, &params(p, n)?).map_err(|e| e.to_string())?;
        let mut out = s.exponents;
        out.push(s.final_exponent);
        Ok(out)
    }
}

fn js(r: Result<Vec<f64>, String>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn barenblatt_profile(p: f64, n: usize, t: f64, x_max: f64, points: usize) -> Result<Vec<f64>, JsError> {
    js(ops::barenblatt_profile(p, n, t, x_max, points))
}

#[wasm_bindgen]
pub fn giant_profile_1d(p: f64, nodes: usize) -> Result<Vec<f64>, JsError> {
    js(ops::giant_profile_1d(p, nodes))
}

#[wasm_bindgen]
pub fn gap_schedule(eps: f64, sigma: f64, p: f64, n: usize) -> Result<Vec<f64>, JsError> {
    js(ops::gap_schedule(eps, sigma, p, n))
}
