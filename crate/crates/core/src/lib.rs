pub mod embed;
pub mod infer;
pub mod linalg;
pub mod model;
