pub mod cli;
pub mod eb;
pub mod lasso;
pub mod normal;
pub mod prior;
pub mod quad;
pub mod state_evolution;
pub mod sim;
pub mod theory;
