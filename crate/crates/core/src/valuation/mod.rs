pub mod lapse;
pub mod nolapse;
pub mod surface;
