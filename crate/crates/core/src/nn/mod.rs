//! Neural modules over the voxel grid: Detect (1x1x1 convolution + relu), And
//! (elementwise product), Shift (full-extent 3D convolution + relu) and Locate
//! (softmax over cells), with graph execution, exact backpropagation of the
//! cross-entropy loss and Adam.

mod adam;
mod attention;
mod exec;
mod modules;
mod params;

pub use adam::{adam_step, AdamConfig};
pub use attention::{AttentionMap, CellDistribution};
pub use exec::{backprop, execute, ExecutionTrace, NodeTrace};
pub use modules::{and_forward, detect_forward, locate_forward, shift_forward};
pub use params::{Gradients, InitScheme, ParamStore};
