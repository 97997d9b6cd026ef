//! Raster primitives behind mask synthesis.

pub mod blur;
pub mod components;
pub mod hull;
pub mod otsu;
pub mod raster;

pub use blur::{blur, blur_float, gaussian_kernel, Kernel1D};
pub use components::{connected_components, label_components};
pub use hull::{concave_hull, convex_hull, Point, Polygon};
pub use otsu::{histogram, histogram_float, otsu_from_histogram, otsu_threshold};
pub use raster::rasterize;
