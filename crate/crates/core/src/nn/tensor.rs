use super::Scalar;
use crate::error::{Error, Result};

/// Dense row-major array with an explicit shape. All values are finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor<T = f32> {
    shape: Vec<usize>,
    data: Vec<T>,
}

impl<T: Scalar> Tensor<T> {
    pub fn new(shape: Vec<usize>, data: Vec<T>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::Shape {
                op: "tensor",
                expected: shape,
                actual: vec![data.len()],
            });
        }
        check_finite(&data, "tensor")?;
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![T::ZERO; n],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

pub(crate) fn check_finite<T: Scalar>(values: &[T], at: &'static str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(at))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validates_count_and_finiteness() {
        assert!(Tensor::<f32>::new(vec![2, 3], vec![0.0; 6]).is_ok());
        assert!(matches!(
            Tensor::<f32>::new(vec![2, 3], vec![0.0; 5]),
            Err(Error::Shape { .. })
        ));
        assert!(matches!(
            Tensor::<f32>::new(vec![1], vec![f32::NAN]),
            Err(Error::NonFinite(_))
        ));
        assert!(matches!(
            Tensor::<f64>::new(vec![1], vec![f64::INFINITY]),
            Err(Error::NonFinite(_))
        ));
    }
}
