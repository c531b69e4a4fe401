use super::TailEstimate;
use crate::{LabError, Result};

/// Least-squares line through `(x², -ln p̂)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub c_hat: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points_used: usize,
    /// Grid values skipped because `p̂ ∈ {0, 1}`.
    pub excluded: Vec<f64>,
}

pub const FIT_CSV_HEADER: &str = "c_hat,intercept,r_squared,points_used";

impl ExponentFit {
    pub fn csv_line(&self) -> String {
        format!("{},{},{},{}", self.c_hat, self.intercept, self.r_squared, self.points_used)
    }
}

pub fn fit_quadratic_exponent(est: &TailEstimate) -> Result<ExponentFit> {
    fit_points(&est.grid, &est.p_hat)
}

pub fn fit_points(grid: &[f64], p_hat: &[f64]) -> Result<ExponentFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut excluded = Vec::new();
    for (&g, &p) in grid.iter().zip(p_hat) {
        if p > 0.0 && p < 1.0 {
            xs.push(g * g);
            ys.push(-p.ln());
        } else {
            excluded.push(g);
        }
    }
    if xs.len() < 3 {
        let listed: Vec<String> = excluded.iter().map(|g| g.to_string()).collect();
        return Err(LabError::InsufficientData(format!(
            "{} usable grid points, need 3; excluded (p_hat = 0 or 1): [{}]",
            xs.len(),
            listed.join(", ")
        )));
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(LabError::InsufficientData("usable grid points share one value".into()));
    }
    let c_hat = sxy / sxx;
    let intercept = my - c_hat * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + c_hat * x);
            r * r
        })
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(ExponentFit {
        c_hat,
        intercept,
        r_squared,
        points_used: xs.len(),
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic() {
        let grid = [1.0, 2.0, 3.0];
        let p: Vec<f64> = grid.iter().map(|t: &f64| (-2.0 * t * t).exp()).collect();
        let f = fit_points(&grid, &p).unwrap();
        assert!((f.c_hat - 2.0).abs() < 1e-12);
        assert!(f.intercept.abs() < 1e-12);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        assert_eq!(f.points_used, 3);
    }

    #[test]
    fn affine_offset() {
        let grid = [1.0, 2.0, 3.0];
        let p: Vec<f64> = grid.iter().map(|t: &f64| (-2.0 * t * t + 0.5).exp()).collect();
        let f = fit_points(&grid, &p).unwrap();
        assert!((f.c_hat - 2.0).abs() < 1e-12);
        assert!((f.intercept + 0.5).abs() < 1e-12);
    }

    #[test]
    fn excludes_degenerate_points() {
        let grid = [0.0, 1.0, 2.0, 3.0, 4.0];
        let p = [1.0, 0.5, 0.1, 0.01, 0.0];
        let f = fit_points(&grid, &p).unwrap();
        assert_eq!(f.points_used, 3);
        assert_eq!(f.excluded, vec![0.0, 4.0]);
        assert!(f.c_hat > 0.0);
    }

    #[test]
    fn too_few_points() {
        match fit_points(&[1.0, 2.0, 3.0], &[0.5, 0.0, 0.0]) {
            Err(LabError::InsufficientData(msg)) => assert!(msg.contains("[2, 3]"), "{msg}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_line() {
        let f = ExponentFit {
            c_hat: 2.0,
            intercept: -0.5,
            r_squared: 1.0,
            points_used: 3,
            excluded: vec![],
        };
        assert_eq!(f.csv_line(), "2,-0.5,1,3");
    }
}
