pub mod assistant;
pub mod bench;
pub mod contextualizer;
pub mod dynamics;
pub mod manifest;
pub mod prompt;
pub mod statics;
pub mod syntax;
