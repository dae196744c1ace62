//! Temporal encoding of grayscale images.
//!
//! A `√R × √R` window slides over the image with stride `S`. Each window
//! position is one input neuron, which fires a single spike whose delay is
//! the window's mean intensity scaled onto the `T = R` tick frame. Windows
//! that are completely black stay silent.

use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Minimum firing interval, in milliseconds. One tick of simulated time.
pub const TICK_MS: u32 = 1;

/// A square 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || pixels.len() != width * width {
            return Err(Error::Dimension(format!(
                "{} pixels cannot form a {width}x{width} image",
                pixels.len()
            )));
        }
        Ok(Self { width, pixels })
    }

    pub fn filled(width: usize, value: u8) -> Self {
        Self {
            width,
            pixels: vec![value; width * width],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    fn at(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }
}

/// Geometry of the sliding temporal kernel and the quantities derived from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    image_width: usize,
    kernel_pixels: usize,
    kernel_side: usize,
    stride: usize,
    per_axis: usize,
}

impl EncoderConfig {
    /// Validates `(P, R, S)` and derives `M = ⌈(P − √R + 1)/S⌉²` and `T = R`.
    pub fn derive(image_width: usize, kernel_pixels: usize, stride: usize) -> Result<Self> {
        if image_width == 0 {
            return Err(Error::config("P", "image width must be at least 1"));
        }
        if kernel_pixels == 0 {
            return Err(Error::config("R", "kernel must cover at least one pixel"));
        }
        let side = kernel_pixels.isqrt();
        if side * side != kernel_pixels {
            return Err(Error::config(
                "R",
                format!("{kernel_pixels} is not a perfect square"),
            ));
        }
        if side > image_width {
            return Err(Error::config(
                "R",
                format!("a {side}x{side} kernel does not fit a {image_width}-pixel image"),
            ));
        }
        if stride == 0 {
            return Err(Error::config("S", "stride must be at least 1"));
        }
        let per_axis = (image_width - side + 1).div_ceil(stride);
        Ok(Self {
            image_width,
            kernel_pixels,
            kernel_side: side,
            stride,
            per_axis,
        })
    }

    pub fn image_width(&self) -> usize {
        self.image_width
    }

    pub fn kernel_pixels(&self) -> usize {
        self.kernel_pixels
    }

    pub fn kernel_side(&self) -> usize {
        self.kernel_side
    }

    pub fn stride(&self) -> usize {
        self.stride
    }

    pub fn tick_ms(&self) -> u32 {
        TICK_MS
    }

    /// Number of input neurons, `M`.
    pub fn neuron_count(&self) -> usize {
        self.per_axis * self.per_axis
    }

    /// Coding frame `T` in ticks.
    pub fn frame(&self) -> u32 {
        TICK_MS * self.kernel_pixels as u32
    }

    /// Top-left offsets of the windows along one axis. The final window is
    /// pinned to the image border.
    pub fn axis_offsets(&self) -> Vec<usize> {
        let last = self.image_width - self.kernel_side;
        (0..self.per_axis)
            .map(|j| {
                if j + 1 == self.per_axis {
                    last
                } else {
                    j * self.stride
                }
            })
            .collect()
    }
}

/// Free-function form of [`EncoderConfig::derive`].
pub fn derive_structure(
    image_width: usize,
    kernel_pixels: usize,
    stride: usize,
) -> Result<EncoderConfig> {
    EncoderConfig::derive(image_width, kernel_pixels, stride)
}

/// Single-spike temporal code: one optional firing tick per input neuron.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SpikeTrain {
    delays: Vec<Option<u32>>,
    frame: u32,
}

impl SpikeTrain {
    pub fn new(delays: Vec<Option<u32>>, frame: u32) -> Result<Self> {
        if frame == 0 {
            return Err(Error::config("T", "frame must be at least one tick"));
        }
        if let Some((m, t)) = delays
            .iter()
            .enumerate()
            .find_map(|(m, d)| d.filter(|&t| t >= frame).map(|t| (m, t)))
        {
            return Err(Error::Dimension(format!(
                "neuron {m} fires at tick {t}, outside the {frame}-tick frame"
            )));
        }
        Ok(Self { delays, frame })
    }

    pub fn delays(&self) -> &[Option<u32>] {
        &self.delays
    }

    pub fn frame(&self) -> u32 {
        self.frame
    }

    pub fn len(&self) -> usize {
        self.delays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delays.is_empty()
    }

    /// `(neuron, tick)` for every neuron that fires, in neuron order.
    pub fn spikes(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.delays
            .iter()
            .enumerate()
            .filter_map(|(m, d)| d.map(|t| (m, t)))
    }

    pub fn spike_count(&self) -> usize {
        self.delays.iter().filter(|d| d.is_some()).count()
    }

    /// `neuron,delay` rows; silent neurons have an empty delay field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("neuron,delay\n");
        for (m, d) in self.delays.iter().enumerate() {
            match d {
                Some(t) => writeln!(out, "{m},{t}"),
                None => writeln!(out, "{m},"),
            }
            .expect("writing to a String cannot fail");
        }
        out
    }
}

/// `round(sum / (count·255) · (T − 1))`, half away from zero, in exact
/// integer arithmetic. `None` when the window is black.
fn intensity_to_delay(sum: u64, count: u64, frame: u32) -> Option<u32> {
    if sum == 0 {
        return None;
    }
    let span = u64::from(frame - 1);
    let denom = count * 255;
    Some(((2 * sum * span + denom) / (2 * denom)) as u32)
}

pub fn encode(image: &GrayImage, cfg: &EncoderConfig) -> Result<SpikeTrain> {
    if image.width() != cfg.image_width {
        return Err(Error::Dimension(format!(
            "image is {0}x{0} but the encoder expects {1}x{1}",
            image.width(),
            cfg.image_width
        )));
    }
    let offsets = cfg.axis_offsets();
    let side = cfg.kernel_side;
    let frame = cfg.frame();
    let count = (side * side) as u64;
    let mut delays = Vec::with_capacity(cfg.neuron_count());
    for &row in &offsets {
        for &col in &offsets {
            let mut sum = 0u64;
            for r in row..row + side {
                for c in col..col + side {
                    sum += u64::from(image.at(r, c));
                }
            }
            delays.push(intensity_to_delay(sum, count, frame));
        }
    }
    Ok(SpikeTrain { delays, frame })
}

/// One input neuron per pixel, same intensity-to-delay mapping as [`encode`].
pub fn encode_per_pixel(image: &GrayImage, frame: u32) -> Result<SpikeTrain> {
    if frame == 0 {
        return Err(Error::config("T", "frame must be at least one tick"));
    }
    let delays = image
        .pixels()
        .iter()
        .map(|&p| intensity_to_delay(u64::from(p), 1, frame))
        .collect();
    Ok(SpikeTrain { delays, frame })
}

/// The input stage of a run: either the sliding temporal kernel or the
/// one-neuron-per-pixel baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoder {
    Kernel(EncoderConfig),
    PerPixel { image_width: usize, frame: u32 },
}

impl Encoder {
    pub fn encode(&self, image: &GrayImage) -> Result<SpikeTrain> {
        match self {
            Encoder::Kernel(cfg) => encode(image, cfg),
            Encoder::PerPixel { image_width, frame } => {
                if image.width() != *image_width {
                    return Err(Error::Dimension(format!(
                        "image is {0}x{0} but the encoder expects {1}x{1}",
                        image.width(),
                        image_width
                    )));
                }
                encode_per_pixel(image, *frame)
            }
        }
    }

    pub fn neuron_count(&self) -> usize {
        match self {
            Encoder::Kernel(cfg) => cfg.neuron_count(),
            Encoder::PerPixel { image_width, .. } => image_width * image_width,
        }
    }

    pub fn frame(&self) -> u32 {
        match self {
            Encoder::Kernel(cfg) => cfg.frame(),
            Encoder::PerPixel { frame, .. } => *frame,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        for (r, m, t) in [(4, 196, 4), (16, 169, 16), (25, 144, 25), (100, 100, 100)] {
            let cfg = derive_structure(28, r, 2).unwrap();
            assert_eq!(cfg.neuron_count(), m, "R={r}");
            assert_eq!(cfg.frame(), t, "R={r}");
        }
    }

    #[test]
    fn single_pixel_image() {
        let cfg = derive_structure(1, 1, 1).unwrap();
        assert_eq!((cfg.neuron_count(), cfg.frame()), (1, 1));
        let train = encode(&GrayImage::filled(1, 200), &cfg).unwrap();
        assert_eq!(train.delays(), &[Some(0)]);
    }

    #[test]
    fn bad_structures_name_the_field() {
        let field = |e: Error| match e {
            Error::Config { field, .. } => field,
            other => panic!("unexpected {other:?}"),
        };
        assert_eq!(field(derive_structure(28, 15, 2).unwrap_err()), "R");
        assert_eq!(field(derive_structure(28, 29 * 29, 2).unwrap_err()), "R");
        assert_eq!(field(derive_structure(28, 16, 0).unwrap_err()), "S");
    }

    #[test]
    fn blank_and_saturated_images() {
        let cfg = derive_structure(28, 16, 2).unwrap();
        let blank = encode(&GrayImage::filled(28, 0), &cfg).unwrap();
        assert_eq!(blank.len(), 169);
        assert_eq!(blank.spike_count(), 0);
        let full = encode(&GrayImage::filled(28, 255), &cfg).unwrap();
        assert!(full.delays().iter().all(|d| *d == Some(15)));
    }

    #[test]
    fn half_intensity_patch_rounds_up() {
        // Mean 127.5 over a single 4x4 window: round(0.5 * 15) = 8.
        let cfg = derive_structure(4, 16, 1).unwrap();
        let pixels = (0..16).map(|i| if i % 2 == 0 { 255 } else { 0 }).collect();
        let train = encode(&GrayImage::new(4, pixels).unwrap(), &cfg).unwrap();
        assert_eq!(train.delays(), &[Some(8)]);
    }

    #[test]
    fn per_pixel_baseline() {
        let blank = encode_per_pixel(&GrayImage::filled(28, 0), 256).unwrap();
        assert_eq!(blank.len(), 784);
        assert_eq!(blank.spike_count(), 0);
        let grey = encode_per_pixel(&GrayImage::filled(28, 128), 256).unwrap();
        assert!(grey.delays().iter().all(|d| *d == Some(128)));
    }

    #[test]
    fn final_window_is_pinned_to_border() {
        let cfg = derive_structure(28, 25, 2).unwrap();
        let offsets = cfg.axis_offsets();
        assert_eq!(offsets.len(), 12);
        assert_eq!(offsets[10], 20);
        assert_eq!(*offsets.last().unwrap(), 23);
    }

    #[test]
    fn dimension_mismatch() {
        let cfg = derive_structure(28, 16, 2).unwrap();
        assert!(matches!(
            encode(&GrayImage::filled(27, 0), &cfg),
            Err(Error::Dimension(_))
        ));
        assert!(GrayImage::new(3, vec![0; 8]).is_err());
    }

    #[test]
    fn csv_leaves_silent_neurons_blank() {
        let train = SpikeTrain::new(vec![Some(3), None, Some(0)], 4).unwrap();
        assert_eq!(train.to_csv(), "neuron,delay\n0,3\n1,\n2,0\n");
    }

    #[test]
    fn train_rejects_out_of_frame_delay() {
        assert!(SpikeTrain::new(vec![Some(4)], 4).is_err());
        assert!(SpikeTrain::new(vec![Some(0)], 0).is_err());
    }
}
