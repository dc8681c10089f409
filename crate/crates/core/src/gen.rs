//! Seeded initial configurations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::{Color, Configuration, Point, RobotRecord};

/// `n` distinct cells drawn uniformly from a `width × height` box with its
/// lower-left corner at the origin, every robot colored A.
pub fn random_config(n: usize, width: u32, height: u32, seed: u64) -> Result<Configuration> {
    if n == 0 {
        return Err(Error::usage("need at least one robot"));
    }
    let cells = width as usize * height as usize;
    if n > cells {
        return Err(Error::usage(format!("{n} robots do not fit in a {width}x{height} box")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = rand::seq::index::sample(&mut rng, cells, n);
    let w = width as usize;
    Configuration::new(
        picks
            .into_iter()
            .map(|i| RobotRecord { pos: Point::new((i % w) as i64, (i / w) as i64), color: Color::A })
            .collect(),
    )
}
