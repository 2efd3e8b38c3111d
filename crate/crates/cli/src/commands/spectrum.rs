//! Spectrum and dissipativity of the discrete generator.

use crate::config::Config;
use crate::error::CliError;
use crate::output::{num, write_csv, SPECTRUM_HEADER};
use hsdelay::spectral::{assemble_generator, spectrum_report};
use hsdelay::{Gains, Grid, SystemParams};

pub fn execute(cfg: &Config) -> Result<String, CliError> {
    let run = &cfg.run;
    let params = SystemParams::new(run.length, run.delay, Gains::new(run.alpha, run.beta)?)?;
    let grid = Grid::new(run.length, run.nodes)?;
    let gm = assemble_generator(grid, &params, run.cells)?;
    let report = spectrum_report(&gm)?;
    if let Some(path) = &cfg.spectrum_csv {
        let mut ev = report.eigenvalues.clone();
        ev.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        write_csv(
            path,
            &SPECTRUM_HEADER,
            ev.iter().map(|z| [num(z.re), num(z.im)]),
        )?;
    }
    Ok(format!(
        "dimension: {}\nspectral abscissa: {:?}\nenergy decay rate 2|abscissa|: {:?}\ndissipativity max: {:?} (scaled {:?})\n",
        gm.dim(),
        report.abscissa,
        2.0 * report.abscissa.abs(),
        report.dissipativity_max,
        report.dissipativity_max / gm.norm()
    ))
}
