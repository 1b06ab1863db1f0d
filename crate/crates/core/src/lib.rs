pub mod fractional;
pub mod gamma_calculus;
pub mod kernels;
pub mod markov;
pub mod quadrature;
pub mod report;
