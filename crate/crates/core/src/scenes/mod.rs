//! Environments: occupancy images, polygon galleries and random scenes.

mod gallery;
mod images;
mod synth;

pub use gallery::{
    comb_gallery, fitting_geometry, gallery_bounds, rasterize_gallery, GalleryBounds, Point,
    PolygonGallery,
};
pub use images::{load_mask, write_field_image, write_mask, DEFAULT_THRESHOLD};
pub use synth::{
    free_components, generate_scene, keep_largest_free_component, SceneFamily, SceneRecipe,
    MAX_ATTEMPTS, MIN_FREE_FRACTION,
};
