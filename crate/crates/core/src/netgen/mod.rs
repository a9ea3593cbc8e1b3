//! Parameter draws and spatial population synthesis.

mod population;
mod prior;

pub use population::{
    generate_population, target_probabilities, Node, PopulationConfig, PopulationGraph,
    PopulationParams, ALPHA, AVG_DEGREE, GAMMA, N_NODES, PHI,
};
pub use prior::{draw_parameters, Distribution, ParameterSet, PriorEntry, PriorSpec};
