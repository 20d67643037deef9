//! Loading, validation and repair of the indicator panel and the spatial
//! inputs that go with it (centroids, adjacency, driver factors).

mod drivers;
mod fill;
mod geometry;
mod panel;
mod weights;

pub use drivers::{load_drivers, DriverTable};
pub use fill::{fill_missing, fill_series};
pub use geometry::{load_centroids, Equirectangular, Geometry, Point, RegionGeometry, EARTH_RADIUS_KM};
pub use panel::{
    load_panel, load_specs, validate_specs, write_panel, Attribute, CellRef, IndicatorPanel,
    IndicatorSpec, FILE_WEIGHT_TOLERANCE,
};
pub(crate) use panel::check_weight_sum;
pub use weights::{build_spatial_weights, SpatialWeights};
