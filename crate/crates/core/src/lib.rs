pub mod conditions;
pub mod domain;
pub mod error;
pub mod exponent;
pub mod gphi;
pub mod operators;
pub mod maximal;
pub mod norm_formula;
pub mod roots;
pub mod sampling;
pub mod scalar;
pub mod spaces;
pub mod sparse;
pub mod symbols;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Grid64 = domain::Grid<f64>;
pub type Grid32 = domain::Grid<f32>;
pub type GridFunction64 = domain::GridFunction<f64>;
pub type GridFunction32 = domain::GridFunction<f32>;
pub type CubeLattice64 = domain::CubeLattice<f64>;
pub type CubeLattice32 = domain::CubeLattice<f32>;
pub type ExponentField64 = exponent::ExponentField<f64>;
pub type ExponentField32 = exponent::ExponentField<f32>;
pub type GPhiFunction64 = gphi::GPhiFunction<f64>;
pub type GPhiFunction32 = gphi::GPhiFunction<f32>;
pub type Kernel64 = operators::Kernel<f64>;
pub type Kernel32 = operators::Kernel<f32>;
pub type CubeFunctional64 = symbols::CubeFunctional<f64>;
pub type CubeFunctional32 = symbols::CubeFunctional<f32>;
pub type FPReport64 = conditions::FPReport<f64>;
pub type FPReport32 = conditions::FPReport<f32>;
pub type FormulaTable64 = norm_formula::FormulaTable<f64>;
pub type FormulaTable32 = norm_formula::FormulaTable<f32>;
