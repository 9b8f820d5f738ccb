//! Structured linear operators on images: periodic finite differences,
//! circular convolution, zero-boundary directional gradients and sampling
//! masks, each with its adjoint.

mod conv;
mod diff;
mod directional;
mod fft;
mod grid;
mod tv_system;

pub use conv::CircularConv;
pub use diff::{diff_adjoint, diff_forward};
pub use directional::{
    directional_adjoint, directional_adjoint_all, directional_channel, directional_grads,
    DIRECTIONS,
};
pub use fft::Fft2;
pub use grid::{BlurKernel, GradField, ImageGrid, SamplingMask};
pub use tv_system::{solve_tv_x_system, TvSystem};
