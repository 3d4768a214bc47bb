use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Scalar types the core numerics are generic over: `f32` or `f64`.
pub trait Scalar: RealField + FromPrimitive + ToPrimitive + Copy {
    /// Lift an `f64` constant into the scalar type.
    fn c(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable in scalar type")
    }

    /// Lower to `f64` for reporting.
    fn to_real(self) -> f64 {
        self.to_f64().expect("scalar not representable as f64")
    }
}

impl<T: RealField + FromPrimitive + ToPrimitive + Copy> Scalar for T {}
