//! Rate-study reports: JSON serialization and the flat points CSV.

use serde::Serialize;

/// Least-squares line through `(log2 abscissa, log2 error)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RatePoint {
    pub abscissa: f64,
    pub rms_error: f64,
    pub mc_stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateSeries {
    /// `"h1"` for the energy norm, `"h"` for the base norm.
    pub norm: &'static str,
    /// `"sup"` (worst common mesh time) or `"terminal"`.
    pub policy: &'static str,
    pub points: Vec<RatePoint>,
    pub fit: Option<RateFit>,
    /// For spatial studies: the slope against `log2 N` per axis
    /// (`lambda_N` scales as `N^2`, so this is exactly twice the slope).
    pub slope_per_axis_n: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub study: &'static str,
    pub dim: usize,
    pub nonlinearity: &'static str,
    pub delta: f64,
    pub t_end: f64,
    pub samples: usize,
    pub seed: u64,
    /// `"tau"` for temporal studies, `"lambda_n"` for spatial ones.
    pub abscissa: &'static str,
    /// Mode sets in dimension two are per-axis tensor blocks.
    pub mode_truncation: &'static str,
    pub n_per_axis: Option<usize>,
    pub tau: Option<f64>,
    pub reference_tau: Option<f64>,
    pub reference_n: Option<usize>,
    pub spatial_comparison: Option<&'static str>,
    pub wall_clock_secs: f64,
    pub series: Vec<RateSeries>,
}

impl RateReport {
    pub fn to_json_pretty(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    /// Flat per-point table. Floats carry 17 significant digits so the
    /// file round-trips doubles exactly and byte-compares across runs.
    pub fn points_csv(&self) -> String {
        let mut out =
            String::from("study,dim,norm,policy,abscissa,rms_error,mc_stderr,samples,seed\n");
        for series in &self.series {
            for p in &series.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    self.study,
                    self.dim,
                    series.norm,
                    series.policy,
                    fmt17(p.abscissa),
                    fmt17(p.rms_error),
                    fmt17(p.mc_stderr),
                    self.samples,
                    self.seed
                ));
            }
        }
        out
    }

    pub fn series_named(&self, norm: &str) -> Option<&RateSeries> {
        self.series.iter().find(|s| s.norm == norm)
    }
}

/// Round-trip-exact decimal rendering of a double (17 significant digits).
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}
