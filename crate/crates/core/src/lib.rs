pub mod constants;
pub mod error;
pub mod generate;
pub mod grid;
pub mod maximal;
pub mod measure;
pub mod rising_sun;
pub mod theorems;

pub use error::{Error, Result};
pub use grid::{AxisGrid, GridRect, Rect};
pub use measure::{average, dual_weight, integral, level_mass, CumTable, GridMeasure, LevelMeasure, Weight};
