//! Born scattering model: phantoms, incident and Green's fields, direct and
//! NDFT forward operators, and the Rytov data conversion.

mod fdt;
mod fields;
mod forward;
mod phantom;
mod rytov;

pub use fdt::{fdt_check, fourier_transform_direct, generalized_fdt_rhs, FdtReport, FdtRow};
pub use fields::{green_function, plane_wave};
pub use forward::{
    born_forward_direct, forward_direct_sinogram, forward_ndft, forward_ndft_plan, DetectorPlane, Sinogram,
};
pub(crate) use forward::{fdt_factor, node_set};
pub use phantom::{Phantom, PhantomSpec};
pub use rytov::rytov_to_born;
