use crate::codec::Encoder;
use crate::error::{Error, Result};
use crate::kernels::{Kernel, KernelTable};
use crate::network::{IfcParams, Readout, WeightMatrix};

/// Which output neurons take part in learning a given pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Participation {
    /// Outputs before the target must stay silent, the target must fire,
    /// later outputs are left alone.
    #[default]
    Huffman,
    /// Only the target output learns, and only to fire.
    Literal,
}

/// Bijection between class labels and output-neuron patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassOrder {
    class_of_pattern: Vec<usize>,
    pattern_of_class: Vec<usize>,
}

impl ClassOrder {
    pub fn identity(classes: usize) -> Self {
        Self {
            class_of_pattern: (0..classes).collect(),
            pattern_of_class: (0..classes).collect(),
        }
    }

    /// `order[p]` is the class decoded when output `p` fires first.
    pub fn new(order: Vec<usize>) -> Result<Self> {
        let mut pattern_of_class = vec![usize::MAX; order.len()];
        for (p, &class) in order.iter().enumerate() {
            if class >= order.len() || pattern_of_class[class] != usize::MAX {
                return Err(Error::config(
                    "class_order",
                    format!("{order:?} is not a permutation of 0..{}", order.len()),
                ));
            }
            pattern_of_class[class] = p;
        }
        Ok(Self {
            class_of_pattern: order,
            pattern_of_class,
        })
    }

    pub fn len(&self) -> usize {
        self.class_of_pattern.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of_pattern.is_empty()
    }

    pub fn pattern_of(&self, class: usize) -> Option<usize> {
        self.pattern_of_class.get(class).copied()
    }

    pub fn class_of(&self, pattern: usize) -> usize {
        self.class_of_pattern[pattern]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.class_of_pattern
    }
}

/// Everything between an image and an output decision, minus the weights.
#[derive(Debug, Clone)]
pub struct Pipeline {
    pub encoder: Encoder,
    pub kernel: KernelTable,
    pub ifc: IfcParams,
    pub participation: Participation,
    pub readout: Readout,
    pub classes: ClassOrder,
}

impl Pipeline {
    pub fn new(encoder: Encoder, kernel: Kernel, ifc: IfcParams, classes: ClassOrder) -> Self {
        Self {
            kernel: kernel.table(encoder.frame()),
            encoder,
            ifc,
            participation: Participation::default(),
            readout: Readout::default(),
            classes,
        }
    }

    pub fn with_participation(mut self, participation: Participation) -> Self {
        self.participation = participation;
        self
    }

    pub fn with_readout(mut self, readout: Readout) -> Self {
        self.readout = readout;
        self
    }

    pub fn inputs(&self) -> usize {
        self.encoder.neuron_count()
    }

    pub fn outputs(&self) -> usize {
        self.classes.len()
    }

    pub fn check_weights(&self, weights: &WeightMatrix) -> Result<()> {
        if weights.inputs() != self.inputs() || weights.outputs() != self.outputs() {
            return Err(Error::Dimension(format!(
                "weights are {}x{} but the model needs {}x{}",
                weights.inputs(),
                weights.outputs(),
                self.inputs(),
                self.outputs()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_roundtrip() {
        let order = ClassOrder::new(vec![2, 0, 1]).unwrap();
        assert_eq!(order.pattern_of(2), Some(0));
        assert_eq!(order.class_of(0), 2);
        assert_eq!(order.pattern_of(3), None);
        assert!(ClassOrder::new(vec![0, 0, 1]).is_err());
        assert!(ClassOrder::new(vec![0, 3]).is_err());
    }
}
