pub mod basis;
pub mod codec;
pub mod error;
pub mod evaluation;
pub mod fitting;
pub mod io;
pub mod mapping;
pub mod renderer;
