pub mod collapse;
pub mod estimate;
pub mod fit;
pub mod integrate;
pub mod simulate;
pub mod stationary;
pub mod synth;

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use income_dynamics::estimation::{histogram_of, rescale, Binning};
use income_dynamics::grid::{geometric_grid, DensityGrid};
use income_dynamics::montecarlo::read_samples_csv;

use crate::config::GridSpec;
use crate::error::CliError;

/// A density rescaled to unit mean, with the mean it was divided by.
pub struct Curve {
    pub label: String,
    pub mean: f64,
    pub density: DensityGrid,
}

/// Read income samples (header `income`, binned with `binning`) or a density
/// grid (header `x,density`), and rescale it to unit mean.
pub fn load_curve(path: &Path, binning: Binning) -> Result<Curve, CliError> {
    let mut header = String::new();
    BufReader::new(File::open(path)?).read_line(&mut header)?;
    let density = match header.trim() {
        "income" => histogram_of(&read_samples_csv(path)?, binning)?,
        "x,density" => DensityGrid::read_csv(path)?,
        other => {
            return Err(CliError::Invalid(format!(
                "{}: expected header `income` or `x,density`, got `{other}`",
                path.display()
            )))
        }
    };
    rescaled_curve(path.display().to_string(), density)
}

pub fn rescaled_curve(label: String, density: DensityGrid) -> Result<Curve, CliError> {
    let mean = density.mean();
    Ok(Curve {
        label,
        mean,
        density: rescale(&density, mean)?,
    })
}

/// Geometric grid scaled by `mean`.
pub fn grid_of(spec: &GridSpec, mean: f64) -> Result<Vec<f64>, CliError> {
    Ok(geometric_grid(spec.lower * mean, spec.upper * mean, spec.points)?)
}
