pub mod certify;
pub mod observability;
pub mod run;
pub mod spectrum;
pub mod sweep;

use crate::config::RunConfig;
use crate::error::CliError;
use hsdelay::{Gains, Grid, InitialData, SolverOptions, SystemParams};

/// Validated parameters, grid, step options and initial data of a run.
pub struct Setup {
    pub params: SystemParams,
    pub grid: Grid,
    pub opts: SolverOptions,
    pub data: InitialData,
}

pub fn setup(run: &RunConfig, gains: Gains) -> Result<Setup, CliError> {
    let params = SystemParams::new(run.length, run.delay, gains)?;
    let grid = Grid::new(run.length, run.nodes)?;
    let opts = SolverOptions::new(run.delay, run.cells).with_scheme(run.scheme);
    let mut data =
        InitialData::from_families(&params, &grid, run.cells, &run.u0, &run.v0, &run.z0)?;
    if let Some(norm) = run.data_norm {
        if !(norm >= 0.0) {
            return Err(hsdelay::Error::InvalidParameter {
                name: "data_norm",
                value: norm,
            }
            .into());
        }
        data = data.with_norm(&params, &grid, norm);
    }
    Ok(Setup {
        params,
        grid,
        opts,
        data,
    })
}
